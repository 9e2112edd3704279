//! Comparison models: a plain auto-encoder and a single-unit VAE.

use crate::error::{shape_err, Error, Result};
use crate::hvae::{encoder_widths, GaussianUnit, UnitTrace};
use crate::kl;
use crate::nn::{Activation, DenseLayer, LayerCache, Stack, TrainConfig};
use crate::tensor::Matrix;
use crate::training::{
    run_epochs, squared_error, standard_normal, stream_rng, LossBreakdown, INIT_STREAM,
};

fn check_rows(context: &str, expected: usize, x: &Matrix) -> Result<()> {
    if x.rows() != expected {
        return Err(shape_err(
            context,
            format!("{expected} rows"),
            format!("{} rows", x.rows()),
        ));
    }
    Ok(())
}

fn replace_layers(slots: Vec<&mut DenseLayer>, layers: Vec<DenseLayer>) -> Result<()> {
    if slots.len() != layers.len() {
        return Err(Error::Malformed(format!(
            "expected {} layers, found {}",
            slots.len(),
            layers.len()
        )));
    }
    for (slot, layer) in slots.into_iter().zip(layers) {
        if slot.weights.shape() != layer.weights.shape() || slot.activation != layer.activation {
            return Err(Error::Malformed(format!(
                "layer {} does not fit the configuration",
                slot.name
            )));
        }
        let name = std::mem::take(&mut slot.name);
        *slot = DenseLayer { name, ..layer };
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderConfig {
    pub input_dim: usize,
    pub h: usize,
    pub train: TrainConfig,
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.h > self.input_dim {
            return Err(Error::Config(format!(
                "auto-encoder width must satisfy 1 ≤ h ≤ input_dim, got h={}, input_dim={}",
                self.h, self.input_dim
            )));
        }
        self.train.validate()
    }
}

/// Three ReLU encoder layers to a hidden code and a mirrored decoder with a
/// linear output, trained on reconstruction error alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub config: AutoencoderConfig,
    pub encoder: Stack,
    pub decoder: Stack,
    trained: bool,
}

impl Autoencoder {
    pub fn new(config: AutoencoderConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.train.seed, INIT_STREAM);
        let w = encoder_widths(config.input_dim, config.h);
        let encoder = Stack::new("enc", &w, Activation::Relu, Activation::Relu, &mut rng);
        let rev = [w[3], w[2], w[1], w[0]];
        let decoder = Stack::new(
            "dec",
            &rev,
            Activation::Relu,
            Activation::Identity,
            &mut rng,
        );
        Ok(Self {
            config,
            encoder,
            decoder,
            trained: false,
        })
    }

    pub fn from_layers(
        config: AutoencoderConfig,
        layers: Vec<DenseLayer>,
        trained: bool,
    ) -> Result<Self> {
        let mut m = Self::new(config)?;
        replace_layers(m.layers_mut(), layers)?;
        m.trained = trained;
        Ok(m)
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn layers(&self) -> Vec<&DenseLayer> {
        self.encoder
            .layers
            .iter()
            .chain(&self.decoder.layers)
            .collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        self.encoder
            .layers
            .iter_mut()
            .chain(self.decoder.layers.iter_mut())
            .collect()
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decoder.infer(&self.encoder.infer(x)?)
    }

    pub fn train(&mut self, samples: &Matrix) -> Result<Vec<LossBreakdown>> {
        check_rows("Autoencoder::train", self.config.input_dim, samples)?;
        let cfg = self.config.train.clone();
        let history = run_epochs(samples, &cfg, |x, _| {
            let n = x.cols();
            let enc: Vec<LayerCache> = self.encoder.forward(x)?;
            let code = &enc.last().expect("encoder has layers").output;
            let dec = self.decoder.forward(code)?;
            let (loss, d_out) = squared_error(x, &dec.last().expect("decoder has layers").output)?;
            if loss.is_finite() {
                let (dg, d_code) = self.decoder.backward(&dec, &d_out, n)?;
                let (eg, _) = self.encoder.backward(&enc, &d_code, n)?;
                self.encoder.momentum_step(&eg, &cfg)?;
                self.decoder.momentum_step(&dg, &cfg)?;
            }
            Ok(LossBreakdown::new(loss, 0.0, 0.0))
        })?;
        if cfg.epochs > 0 {
            self.trained = true;
        }
        Ok(history)
    }

    /// Hidden code `φ(X)` per column.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        self.encoder.infer(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeConfig {
    pub input_dim: usize,
    pub h: usize,
    pub z: usize,
    pub kl_weight: f64,
    pub train: TrainConfig,
}

impl VaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.z == 0 || self.z > self.h || self.h > self.input_dim {
            return Err(Error::Config(format!(
                "widths must satisfy 1 ≤ z ≤ h ≤ input_dim, got z={}, h={}, input_dim={}",
                self.z, self.h, self.input_dim
            )));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return Err(Error::Config(format!(
                "kl_weight must be non-negative, got {}",
                self.kl_weight
            )));
        }
        self.train.validate()
    }
}

/// The hierarchical model with a single `N(0, I)` latent unit and no
/// hidden-code reconstruction term.
#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    pub config: VaeConfig,
    pub encoder: Stack,
    pub unit: GaussianUnit,
    pub decoder: Stack,
    trained: bool,
}

impl Vae {
    pub fn new(config: VaeConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.train.seed, INIT_STREAM);
        let w = encoder_widths(config.input_dim, config.h);
        let encoder = Stack::new("enc", &w, Activation::Relu, Activation::Relu, &mut rng);
        let unit = GaussianUnit::new("unit", config.h, config.z, &mut rng);
        let rev = [w[3], w[2], w[1], w[0]];
        let decoder = Stack::new(
            "dec",
            &rev,
            Activation::Relu,
            Activation::Identity,
            &mut rng,
        );
        Ok(Self {
            config,
            encoder,
            unit,
            decoder,
            trained: false,
        })
    }

    pub fn from_layers(config: VaeConfig, layers: Vec<DenseLayer>, trained: bool) -> Result<Self> {
        let mut m = Self::new(config)?;
        replace_layers(m.layers_mut(), layers)?;
        m.trained = trained;
        Ok(m)
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn layers(&self) -> Vec<&DenseLayer> {
        let mut v: Vec<&DenseLayer> = self.encoder.layers.iter().collect();
        v.extend(self.unit.layers());
        v.extend(self.decoder.layers.iter());
        v
    }

    pub fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        let mut v: Vec<&mut DenseLayer> = self.encoder.layers.iter_mut().collect();
        v.extend(self.unit.layers_mut());
        v.extend(self.decoder.layers.iter_mut());
        v
    }

    fn step(&mut self, x: &Matrix, eps: &Matrix, cfg: &TrainConfig) -> Result<LossBreakdown> {
        let n = x.cols();
        let enc = self.encoder.forward(x)?;
        let h = &enc.last().expect("encoder has layers").output;
        let ut: UnitTrace = self.unit.forward(h, Some(eps))?;
        let dec = self.decoder.forward(ut.decoded())?;
        let (rec, d_out) = squared_error(x, &dec.last().expect("decoder has layers").output)?;
        let klw = self.config.kl_weight;
        let kl = klw * GaussianUnit::kl_sum(&ut, kl::standard_normal_term) / n as f64;
        let loss = LossBreakdown::new(rec, kl, 0.0);
        if loss.non_finite_term().is_none() {
            let (dg, d_mid) = self.decoder.backward(&dec, &d_out, n)?;
            let (ug, d_h) = self
                .unit
                .backward(&ut, &d_mid, kl::standard_normal_term, klw, n)?;
            let (eg, _) = self.encoder.backward(&enc, &d_h, n)?;
            self.encoder.momentum_step(&eg, cfg)?;
            for (layer, g) in self.unit.layers_mut().into_iter().zip(&ug) {
                layer.momentum_step(g, cfg)?;
            }
            self.decoder.momentum_step(&dg, cfg)?;
        }
        Ok(loss)
    }

    /// Trains on reconstruction plus `kl_weight ×` the KL to `N(0, I)`.
    /// In the returned history `l1` is reconstruction and `l2` the weighted KL.
    pub fn train(&mut self, samples: &Matrix) -> Result<Vec<LossBreakdown>> {
        check_rows("Vae::train", self.config.input_dim, samples)?;
        let cfg = self.config.train.clone();
        let z = self.config.z;
        let history = run_epochs(samples, &cfg, |x, rng| {
            let eps = standard_normal(z, x.cols(), rng);
            self.step(x, &eps, &cfg)
        })?;
        if cfg.epochs > 0 {
            self.trained = true;
        }
        Ok(history)
    }

    /// Latent means per column.
    pub fn encode_mean(&self, x: &Matrix) -> Result<Matrix> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        Ok(self.unit.encode(&self.encoder.infer(x)?)?.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Matrix {
        Matrix::from_fn(8, 40, |r, c| ((r as f64 + 1.0) * (c as f64 * 0.3)).sin())
    }

    fn train_cfg() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 40,
            batch_size: 8,
            seed: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn autoencoder_learns() {
        let mut ae = Autoencoder::new(AutoencoderConfig {
            input_dim: 8,
            h: 4,
            train: train_cfg(),
        })
        .unwrap();
        assert!(matches!(ae.encode(&data()), Err(Error::Untrained)));
        let hist = ae.train(&data()).unwrap();
        assert!(hist.last().unwrap().total < hist[0].total);
        assert_eq!(ae.encode(&data()).unwrap().shape(), (4, 40));
    }

    #[test]
    fn vae_learns() {
        let mut vae = Vae::new(VaeConfig {
            input_dim: 8,
            h: 4,
            z: 2,
            kl_weight: 0.01,
            train: train_cfg(),
        })
        .unwrap();
        let hist = vae.train(&data()).unwrap();
        assert!(hist.last().unwrap().total < hist[0].total);
        assert_eq!(vae.encode_mean(&data()).unwrap().shape(), (2, 40));
    }

    #[test]
    fn layer_swap_round_trips() {
        let ae = Autoencoder::new(AutoencoderConfig {
            input_dim: 8,
            h: 4,
            train: train_cfg(),
        })
        .unwrap();
        let layers = ae.layers().into_iter().cloned().collect();
        let back = Autoencoder::from_layers(ae.config.clone(), layers, false).unwrap();
        assert_eq!(back, ae);
    }
}
