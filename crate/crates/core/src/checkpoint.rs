//! Model checkpoint files.
//!
//! Layout (little-endian):
//!
//! ```text
//! "HVAE" | version u16 | model kind u8 | trained u8
//! config block (per kind) | training block
//! normalization: present u8 [mode u8 | dim u32 | mean f64 × dim | std f64 × dim (0 = none)]
//! layer count u32 | per layer: rows u32, cols u32, activation u8,
//!     weights, bias, weight momentum, bias momentum (row-major f64)
//! CRC32 u32 of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use crate::baseline::{Autoencoder, AutoencoderConfig, Vae, VaeConfig};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::features::{FeatureMode, NormStats};
use crate::hvae::{encoder_widths, HvaeConfig, HvaeModel};
use crate::kl::DoublePeakKl;
use crate::model::Model;
use crate::nn::{Activation, DenseLayer, TrainConfig};
use crate::tensor::Matrix;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"HVAE";
pub const CHECKPOINT_VERSION: u16 = 1;

/// A model together with the feature statistics it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub stats: Option<NormStats>,
}

fn write_train(w: &mut Writer, t: &TrainConfig) {
    w.f64(t.learning_rate);
    w.f64(t.momentum);
    w.u64(t.epochs as u64);
    w.u64(t.batch_size as u64);
    w.u64(t.seed);
}

fn read_train(r: &mut Reader) -> Result<TrainConfig> {
    Ok(TrainConfig {
        learning_rate: r.f64()?,
        momentum: r.f64()?,
        epochs: usize_field(r.u64()?)?,
        batch_size: usize_field(r.u64()?)?,
        seed: r.u64()?,
    })
}

fn usize_field(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Malformed(format!("value {v} does not fit usize")))
}

fn write_matrix(w: &mut Writer, m: &Matrix) {
    w.f64s(m.data());
}

fn read_matrix(r: &mut Reader, rows: usize, cols: usize) -> Result<Matrix> {
    let data = r.f64s(rows * cols)?;
    Matrix::new(rows, cols, data).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn encode_checkpoint(c: &Checkpoint) -> Vec<u8> {
    let mut w = Writer::new(&CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    let (kind, trained) = match &c.model {
        Model::Hvae(m) => (0u8, m.is_trained()),
        Model::Autoencoder(m) => (1, m.is_trained()),
        Model::Vae(m) => (2, m.is_trained()),
    };
    w.u8(kind);
    w.u8(trained as u8);
    match &c.model {
        Model::Hvae(m) => {
            let k = &m.config;
            w.u32(k.input_dim as u32);
            w.u32(k.h as u32);
            w.u32(k.z as u32);
            w.f64s(&[
                k.double_peak_m,
                k.double_peak_s,
                k.prior_weight,
                k.kl2_weight,
                k.kl3_weight,
            ]);
            w.u8(k.kl_mode.code());
            write_train(&mut w, &k.train);
        }
        Model::Autoencoder(m) => {
            w.u32(m.config.input_dim as u32);
            w.u32(m.config.h as u32);
            write_train(&mut w, &m.config.train);
        }
        Model::Vae(m) => {
            let k = &m.config;
            w.u32(k.input_dim as u32);
            w.u32(k.h as u32);
            w.u32(k.z as u32);
            w.f64(k.kl_weight);
            write_train(&mut w, &k.train);
        }
    }

    match &c.stats {
        None => w.u8(0),
        Some(s) => {
            w.u8(1);
            w.u8(match s.mode {
                FeatureMode::Magnitude => 0,
                FeatureMode::RealImag => 1,
            });
            w.u32(s.dim() as u32);
            w.f64s(&s.mean);
            for sd in &s.std {
                w.f64(sd.unwrap_or(0.0));
            }
        }
    }

    let layers = c.model.layers();
    w.u32(layers.len() as u32);
    for l in layers {
        w.u32(l.weights.rows() as u32);
        w.u32(l.weights.cols() as u32);
        w.u8(l.activation.code());
        write_matrix(&mut w, &l.weights);
        write_matrix(&mut w, &l.bias);
        write_matrix(&mut w, &l.weight_momentum);
        write_matrix(&mut w, &l.bias_momentum);
    }
    w.finish()
}

/// `(rows, cols, activation)` of every layer, in storage order.
fn expected_layout(
    model_kind: u8,
    input_dim: usize,
    h: usize,
    z: usize,
) -> Vec<(usize, usize, Activation)> {
    use Activation::*;
    let w = encoder_widths(input_dim, h);
    let enc = [(w[1], w[0], Relu), (w[2], w[1], Relu), (w[3], w[2], Relu)];
    let dec = [
        (w[2], w[3], Relu),
        (w[1], w[2], Relu),
        (w[0], w[1], Identity),
    ];
    let unit = [(z, h, Identity), (z, h, Identity), (h, z, Tanh)];
    let mut v = enc.to_vec();
    match model_kind {
        0 => {
            v.extend(unit);
            v.extend(unit);
        }
        2 => v.extend(unit),
        _ => {}
    }
    v.extend(dec);
    v
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::open(bytes, &CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let kind = r.u8()?;
    let trained = r.u8()? != 0;

    enum Cfg {
        Hvae(HvaeConfig),
        Ae(AutoencoderConfig),
        Vae(VaeConfig),
    }
    let cfg = match kind {
        0 => {
            let (input_dim, h, z) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
            let f = r.f64s(5)?;
            let mode = r.u8()?;
            let kl_mode = DoublePeakKl::from_code(mode)
                .ok_or_else(|| Error::Malformed(format!("unknown KL mode {mode}")))?;
            Cfg::Hvae(HvaeConfig {
                input_dim,
                h,
                z,
                double_peak_m: f[0],
                double_peak_s: f[1],
                prior_weight: f[2],
                kl2_weight: f[3],
                kl3_weight: f[4],
                kl_mode,
                train: read_train(&mut r)?,
            })
        }
        1 => Cfg::Ae(AutoencoderConfig {
            input_dim: r.u32()? as usize,
            h: r.u32()? as usize,
            train: read_train(&mut r)?,
        }),
        2 => Cfg::Vae(VaeConfig {
            input_dim: r.u32()? as usize,
            h: r.u32()? as usize,
            z: r.u32()? as usize,
            kl_weight: r.f64()?,
            train: read_train(&mut r)?,
        }),
        k => return Err(Error::Malformed(format!("unknown model kind {k}"))),
    };

    let stats = match r.u8()? {
        0 => None,
        1 => {
            let mode = match r.u8()? {
                0 => FeatureMode::Magnitude,
                1 => FeatureMode::RealImag,
                m => return Err(Error::Malformed(format!("unknown feature mode {m}"))),
            };
            let dim = r.u32()? as usize;
            let mean = r.f64s(dim)?;
            let std = r
                .f64s(dim)?
                .into_iter()
                .map(|s| (s > 0.0).then_some(s))
                .collect();
            Some(NormStats { mode, mean, std })
        }
        p => return Err(Error::Malformed(format!("bad normalization flag {p}"))),
    };

    let count = r.u32()?;
    let count = r.ensure(u64::from(count), 9)?;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let code = r.u8()?;
        let activation = Activation::from_code(code)
            .ok_or_else(|| Error::Malformed(format!("unknown activation {code}")))?;
        let cells = rows
            .checked_mul(cols)
            .and_then(|c| c.checked_mul(2))
            .and_then(|c| c.checked_add(2 * rows))
            .ok_or_else(|| Error::Malformed("layer too large".into()))?;
        r.ensure(cells as u64, 8)?;
        let weights = read_matrix(&mut r, rows, cols)?;
        let bias = read_matrix(&mut r, rows, 1)?;
        let weight_momentum = read_matrix(&mut r, rows, cols)?;
        let bias_momentum = read_matrix(&mut r, rows, 1)?;
        layers.push(DenseLayer {
            name: format!("layer{i}"),
            weights,
            bias,
            activation,
            weight_momentum,
            bias_momentum,
        });
    }
    r.finish()?;

    let malformed = |e: Error| match e {
        Error::Config(m) => Error::Malformed(m),
        other => other,
    };
    // Shapes are compared before any model is allocated from header sizes.
    let (input_dim, h, z) = match &cfg {
        Cfg::Hvae(c) => {
            c.validate().map_err(malformed)?;
            (c.input_dim, c.h, c.z)
        }
        Cfg::Ae(c) => {
            c.validate().map_err(malformed)?;
            (c.input_dim, c.h, 0)
        }
        Cfg::Vae(c) => {
            c.validate().map_err(malformed)?;
            (c.input_dim, c.h, c.z)
        }
    };
    let layout = expected_layout(kind, input_dim, h, z);
    let fits = layout.len() == layers.len()
        && layout
            .iter()
            .zip(&layers)
            .all(|(&(rr, cc, a), l)| l.weights.shape() == (rr, cc) && l.activation == a);
    if !fits {
        return Err(Error::Malformed(
            "layer shapes do not match the configuration".into(),
        ));
    }
    if let Some(s) = &stats {
        if s.dim() != input_dim {
            return Err(Error::Malformed(format!(
                "normalization has {} dimensions, model expects {input_dim}",
                s.dim()
            )));
        }
    }

    let model = match cfg {
        Cfg::Hvae(c) => Model::Hvae(HvaeModel::from_layers(c, layers, trained)?),
        Cfg::Ae(c) => Model::Autoencoder(Autoencoder::from_layers(c, layers, trained)?),
        Cfg::Vae(c) => Model::Vae(Vae::from_layers(c, layers, trained)?),
    };
    Ok(Checkpoint { model, stats })
}

pub fn save_checkpoint(c: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(c))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelKind, ModelSettings};

    fn sample(kind: ModelKind) -> Checkpoint {
        let mut s = ModelSettings {
            hvae: HvaeConfig::new(10, 6, 3),
            ae_h: 4,
            vae_h: 6,
            vae_z: 2,
            ..ModelSettings::default()
        };
        s.hvae.train.epochs = 2;
        s.hvae.train.batch_size = 4;
        let mut model = s.build(kind, 10).unwrap();
        let x = Matrix::from_fn(10, 12, |r, c| ((r + 2 * c) as f64).cos());
        model.train(&x).unwrap();
        let stats = NormStats {
            mode: FeatureMode::Magnitude,
            mean: (0..10).map(|i| i as f64).collect(),
            std: (0..10)
                .map(|i| (i % 3 != 0).then_some(0.5 + i as f64))
                .collect(),
        };
        Checkpoint {
            model,
            stats: Some(stats),
        }
    }

    #[test]
    fn round_trip_every_kind() {
        for kind in [ModelKind::TfHvae, ModelKind::TfAe, ModelKind::TfVae] {
            let c = sample(kind);
            let bytes = encode_checkpoint(&c);
            let back = decode_checkpoint(&bytes).unwrap();
            assert_eq!(encode_checkpoint(&back), bytes);
            assert!(back.model.is_trained());
            let x = Matrix::from_fn(10, 3, |r, c| (r * c) as f64 * 0.1);
            use crate::auth::Scorer;
            assert_eq!(back.model.embed(&x).unwrap(), c.model.embed(&x).unwrap());
        }
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode_checkpoint(&sample(ModelKind::TfHvae));
        assert!(matches!(
            decode_checkpoint(&bytes[..40]),
            Err(Error::Truncated { .. })
        ));
        let mut v = bytes.clone();
        v[5] = 7;
        assert!(matches!(decode_checkpoint(&v), Err(Error::Version { .. })));
        let mut v = bytes.clone();
        let n = v.len();
        v[n - 20] ^= 1;
        assert!(matches!(decode_checkpoint(&v), Err(Error::Checksum { .. })));
        assert!(matches!(
            decode_checkpoint(b"CIR1\x01\x00"),
            Err(Error::BadMagic { .. })
        ));
    }
}
