//! Hierarchical VAE: an auto-encoder front end whose hidden code feeds two
//! Gaussian latent units, one regularized toward `N(0, I)` and one toward a
//! two-component mixture `½N(−m, s²) + ½N(m, s²)`.
//!
//! ```text
//! X ─φ─▶ H ─┬─φ₁─▶ (μ₁, log σ₁²) ─▶ Z₁ ─ψ₁─┐
//!           └─φ₂─▶ (μ₂, log σ₂²) ─▶ Z₂ ─ψ₂─┴─(+)─▶ Ḣ ─ψ─▶ X̂
//! ```
//!
//! Every input-to-output path crosses 8 dense layers.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kl::{self, DoublePeakKl, KlTerm};
use crate::nn::{Activation, DenseLayer, LayerCache, LayerGrads, Stack, TrainConfig};
use crate::tensor::Matrix;
use crate::training::{
    run_epochs, squared_error, standard_normal, stream_rng, LossBreakdown, INIT_STREAM,
};

/// Bounds applied to encoder `log σ²` outputs.
pub const LOG_VAR_CLAMP: f64 = 10.0;

/// Initial bias of every `log σ²` head. Starting with small posterior noise
/// keeps the ReLU decoder from dying while the means are still random.
pub const INITIAL_LOG_VAR: f64 = -4.0;

/// Hidden widths of the three-layer encoder `input → w₁ → w₂ → h`, spaced
/// geometrically. The decoder mirrors them.
pub fn encoder_widths(input_dim: usize, h: usize) -> [usize; 4] {
    let ratio = h as f64 / input_dim as f64;
    let w = |p: f64| ((input_dim as f64 * ratio.powf(p)).round() as usize).clamp(h, input_dim);
    [input_dim, w(1.0 / 3.0), w(2.0 / 3.0), h]
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvaeConfig {
    pub input_dim: usize,
    /// Width of the auto-encoder hidden code `H`.
    pub h: usize,
    /// Width of each latent unit.
    pub z: usize,
    pub double_peak_m: f64,
    pub double_peak_s: f64,
    /// Weight of the `−m` component of the double-peak prior.
    pub prior_weight: f64,
    pub kl2_weight: f64,
    pub kl3_weight: f64,
    pub kl_mode: DoublePeakKl,
    pub train: TrainConfig,
}

impl HvaeConfig {
    pub fn new(input_dim: usize, h: usize, z: usize) -> Self {
        Self {
            input_dim,
            h,
            z,
            double_peak_m: 1.0,
            double_peak_s: 1.0,
            prior_weight: 0.5,
            kl2_weight: 1.0,
            kl3_weight: 1.0,
            kl_mode: DoublePeakKl::Bound,
            train: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.z == 0 || self.z > self.h || self.h > self.input_dim {
            return fail(format!(
                "widths must satisfy 1 ≤ z ≤ h ≤ input_dim, got z={}, h={}, input_dim={}",
                self.z, self.h, self.input_dim
            ));
        }
        if !(self.double_peak_s > 0.0 && self.double_peak_s.is_finite()) {
            return fail(format!(
                "double_peak_s must be positive, got {}",
                self.double_peak_s
            ));
        }
        if !(self.double_peak_m > 0.0 && self.double_peak_m.is_finite()) {
            return fail(format!(
                "double_peak_m must be positive, got {}",
                self.double_peak_m
            ));
        }
        if !(self.prior_weight > 0.0 && self.prior_weight < 1.0) {
            return fail(format!(
                "prior_weight must lie in (0, 1), got {}",
                self.prior_weight
            ));
        }
        if self.kl_mode == DoublePeakKl::Exact && self.prior_weight != 0.5 {
            return fail("the exact double-peak KL requires prior_weight = 0.5".into());
        }
        for (name, w) in [
            ("kl2_weight", self.kl2_weight),
            ("kl3_weight", self.kl3_weight),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return fail(format!("{name} must be non-negative, got {w}"));
            }
        }
        self.train.validate()
    }
}

/// Diagonal Gaussian over a batch: `z × n` means and log-variances.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussian {
    pub mu: Matrix,
    pub log_var: Matrix,
}

impl LatentGaussian {
    pub fn sigma(&self) -> Matrix {
        self.log_var.map(|lv| (0.5 * lv).exp())
    }
}

/// `Z = μ + ε ⊙ σ`.
pub fn reparameterize(g: &LatentGaussian, eps: &Matrix) -> Result<Matrix> {
    g.mu.add(&eps.hadamard(&g.sigma())?)
}

/// One latent unit: two linear encoder heads and a tanh decoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianUnit {
    pub mu: DenseLayer,
    pub log_var: DenseLayer,
    pub decoder: DenseLayer,
}

#[derive(Debug, Clone)]
pub struct UnitTrace {
    mu_cache: LayerCache,
    lv_cache: LayerCache,
    pub gaussian: LatentGaussian,
    /// Noise used for the sample; `None` in deterministic mode.
    pub eps: Option<Matrix>,
    pub z: Matrix,
    decoder_cache: LayerCache,
}

impl UnitTrace {
    pub fn decoded(&self) -> &Matrix {
        &self.decoder_cache.output
    }
}

impl GaussianUnit {
    pub fn new<R: Rng + ?Sized>(name: &str, h: usize, z: usize, rng: &mut R) -> Self {
        let mu = DenseLayer::new(format!("{name}.mu"), h, z, Activation::Identity, rng);
        let mut log_var =
            DenseLayer::new(format!("{name}.log_var"), h, z, Activation::Identity, rng);
        log_var.bias = Matrix::filled(z, 1, INITIAL_LOG_VAR);
        Self {
            mu,
            log_var,
            decoder: DenseLayer::new(format!("{name}.dec"), z, h, Activation::Tanh, rng),
        }
    }

    pub fn encode(&self, h: &Matrix) -> Result<LatentGaussian> {
        let mu = self.mu.forward(h)?.output;
        let lv = self.log_var.forward(h)?.output;
        Ok(LatentGaussian {
            mu,
            log_var: lv.map(|v| v.clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP)),
        })
    }

    pub fn forward(&self, h: &Matrix, eps: Option<&Matrix>) -> Result<UnitTrace> {
        let mu_cache = self.mu.forward(h)?;
        let lv_cache = self.log_var.forward(h)?;
        let gaussian = LatentGaussian {
            mu: mu_cache.output.clone(),
            log_var: lv_cache
                .output
                .map(|v| v.clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP)),
        };
        let z = match eps {
            Some(e) => {
                if e.shape() != gaussian.mu.shape() {
                    return Err(crate::error::shape_err(
                        "latent noise",
                        format!("{}x{}", gaussian.mu.rows(), gaussian.mu.cols()),
                        format!("{}x{}", e.rows(), e.cols()),
                    ));
                }
                reparameterize(&gaussian, e)?
            }
            None => gaussian.mu.clone(),
        };
        let decoder_cache = self.decoder.forward(&z)?;
        Ok(UnitTrace {
            mu_cache,
            lv_cache,
            gaussian,
            eps: eps.cloned(),
            z,
            decoder_cache,
        })
    }

    /// Sum over the batch of the per-sample KL.
    pub fn kl_sum(trace: &UnitTrace, kl: impl Fn(f64, f64) -> KlTerm) -> f64 {
        let g = &trace.gaussian;
        g.mu.data()
            .iter()
            .zip(g.log_var.data())
            .map(|(&m, &lv)| kl(m, lv).value)
            .sum()
    }

    /// Backpropagates `upstream` (gradient of the summed loss with respect
    /// to the decoder output) plus `kl_weight ×` the summed KL.
    /// Returns `[mu, log_var, decoder]` gradients and the gradient with
    /// respect to the unit input.
    #[allow(clippy::needless_range_loop)]
    pub fn backward(
        &self,
        trace: &UnitTrace,
        upstream: &Matrix,
        kl: impl Fn(f64, f64) -> KlTerm,
        kl_weight: f64,
        batch: usize,
    ) -> Result<([LayerGrads; 3], Matrix)> {
        let dec = self
            .decoder
            .backward(&trace.decoder_cache, upstream, batch)?;
        let dz = &dec.input;
        let g = &trace.gaussian;
        let (rows, cols) = g.mu.shape();
        let mut d_mu = Matrix::zeros(rows, cols);
        let mut d_lv = Matrix::zeros(rows, cols);
        let pre_lv = trace.lv_cache.pre_activation.data();
        for i in 0..rows * cols {
            let (m, lv) = (g.mu.data()[i], g.log_var.data()[i]);
            let t = kl(m, lv);
            let dzi = dz.data()[i];
            d_mu.data_mut()[i] = dzi + kl_weight * t.d_mu;
            let through_sample = match &trace.eps {
                Some(e) => dzi * e.data()[i] * 0.5 * (0.5 * lv).exp(),
                None => 0.0,
            };
            let inside = pre_lv[i].abs() < LOG_VAR_CLAMP;
            d_lv.data_mut()[i] = if inside {
                through_sample + kl_weight * t.d_log_var
            } else {
                0.0
            };
        }
        let mu = self.mu.backward(&trace.mu_cache, &d_mu, batch)?;
        let lv = self.log_var.backward(&trace.lv_cache, &d_lv, batch)?;
        let d_in = mu.input.add(&lv.input)?;
        Ok(([mu, lv, dec], d_in))
    }

    pub fn layers(&self) -> [&DenseLayer; 3] {
        [&self.mu, &self.log_var, &self.decoder]
    }

    pub fn layers_mut(&mut self) -> [&mut DenseLayer; 3] {
        [&mut self.mu, &mut self.log_var, &mut self.decoder]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvaeModel {
    pub config: HvaeConfig,
    pub phi: Stack,
    pub unit1: GaussianUnit,
    pub unit2: GaussianUnit,
    pub psi: Stack,
    trained: bool,
}

/// Everything a forward pass computes, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    phi_caches: Vec<LayerCache>,
    pub h: Matrix,
    pub unit1: UnitTrace,
    pub unit2: UnitTrace,
    /// `ψ₁(Z₁) + ψ₂(Z₂)`.
    pub h_dot: Matrix,
    psi_caches: Vec<LayerCache>,
    pub x_hat: Matrix,
}

impl ForwardTrace {
    pub fn z1(&self) -> &Matrix {
        &self.unit1.z
    }

    pub fn z2(&self) -> &Matrix {
        &self.unit2.z
    }
}

/// Per-layer gradients in [`HvaeModel::layers`] order.
#[derive(Debug, Clone)]
pub struct HvaeGrads {
    pub layers: Vec<LayerGrads>,
}

impl HvaeModel {
    pub fn new(config: HvaeConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.train.seed, INIT_STREAM);
        let w = encoder_widths(config.input_dim, config.h);
        let phi = Stack::new("phi", &w, Activation::Relu, Activation::Relu, &mut rng);
        let unit1 = GaussianUnit::new("unit1", config.h, config.z, &mut rng);
        let unit2 = GaussianUnit::new("unit2", config.h, config.z, &mut rng);
        let rev = [w[3], w[2], w[1], w[0]];
        let psi = Stack::new(
            "psi",
            &rev,
            Activation::Relu,
            Activation::Identity,
            &mut rng,
        );
        Ok(Self {
            config,
            phi,
            unit1,
            unit2,
            psi,
            trained: false,
        })
    }

    /// Reassembles a model from stored layers, checking every shape.
    pub fn from_layers(config: HvaeConfig, layers: Vec<DenseLayer>, trained: bool) -> Result<Self> {
        let mut model = Self::new(config)?;
        let slots = model.layers_mut();
        if slots.len() != layers.len() {
            return Err(Error::Malformed(format!(
                "expected {} layers, found {}",
                slots.len(),
                layers.len()
            )));
        }
        for (slot, layer) in slots.into_iter().zip(layers) {
            if slot.weights.shape() != layer.weights.shape() || slot.activation != layer.activation
            {
                return Err(Error::Malformed(format!(
                    "layer {} does not fit the configuration",
                    slot.name
                )));
            }
            let name = std::mem::take(&mut slot.name);
            *slot = DenseLayer { name, ..layer };
        }
        model.trained = trained;
        Ok(model)
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    /// All 12 layers: φ (3), unit 1 (3), unit 2 (3), ψ (3).
    pub fn layers(&self) -> Vec<&DenseLayer> {
        let mut v: Vec<&DenseLayer> = self.phi.layers.iter().collect();
        v.extend(self.unit1.layers());
        v.extend(self.unit2.layers());
        v.extend(self.psi.layers.iter());
        v
    }

    pub fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        let mut v: Vec<&mut DenseLayer> = self.phi.layers.iter_mut().collect();
        v.extend(self.unit1.layers_mut());
        v.extend(self.unit2.layers_mut());
        v.extend(self.psi.layers.iter_mut());
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.parameter_count()).sum()
    }

    /// Forward pass with explicit latent noise (`None` means `Z = μ`).
    pub fn forward_with_noise(
        &self,
        x: &Matrix,
        eps1: Option<&Matrix>,
        eps2: Option<&Matrix>,
    ) -> Result<ForwardTrace> {
        let phi_caches = self.phi.forward(x)?;
        let h = phi_caches.last().expect("φ has layers").output.clone();
        let unit1 = self.unit1.forward(&h, eps1)?;
        let unit2 = self.unit2.forward(&h, eps2)?;
        let h_dot = unit1.decoded().add(unit2.decoded())?;
        let psi_caches = self.psi.forward(&h_dot)?;
        let x_hat = psi_caches.last().expect("ψ has layers").output.clone();
        Ok(ForwardTrace {
            phi_caches,
            h,
            unit1,
            unit2,
            h_dot,
            psi_caches,
            x_hat,
        })
    }

    /// Forward pass; samples both latent units from `rng` unless `deterministic`.
    pub fn forward_hvae<R: Rng + ?Sized>(
        &self,
        x: &Matrix,
        rng: &mut R,
        deterministic: bool,
    ) -> Result<ForwardTrace> {
        if deterministic {
            return self.forward_with_noise(x, None, None);
        }
        let (z, n) = (self.config.z, x.cols());
        let e1 = standard_normal(z, n, rng);
        let e2 = standard_normal(z, n, rng);
        self.forward_with_noise(x, Some(&e1), Some(&e2))
    }

    fn double_peak(&self) -> impl Fn(f64, f64) -> KlTerm + '_ {
        let c = &self.config;
        move |mu, lv| {
            c.kl_mode
                .term(mu, lv, c.double_peak_m, c.double_peak_s, c.prior_weight)
        }
    }

    /// Loss terms of a trace against its input.
    pub fn total_loss(&self, trace: &ForwardTrace, x: &Matrix) -> Result<LossBreakdown> {
        Ok(LossBreakdown::new(
            loss_ae(x, &trace.x_hat)?,
            self.loss_z1(trace)?,
            self.loss_z2(trace),
        ))
    }

    /// `mean ‖H − Ḣ‖² + kl2_weight · mean KL(q₁ ‖ N(0, I))`.
    pub fn loss_z1(&self, trace: &ForwardTrace) -> Result<f64> {
        let n = trace.h.cols().max(1) as f64;
        let (rec, _) = squared_error(&trace.h, &trace.h_dot)?;
        let kl = GaussianUnit::kl_sum(&trace.unit1, kl::standard_normal_term);
        Ok(rec + self.config.kl2_weight * kl / n)
    }

    /// `kl3_weight · mean KL(q₂ ‖ double-peak prior)`.
    pub fn loss_z2(&self, trace: &ForwardTrace) -> f64 {
        if self.config.kl3_weight == 0.0 {
            return 0.0;
        }
        let n = trace.h.cols().max(1) as f64;
        self.config.kl3_weight * GaussianUnit::kl_sum(&trace.unit2, self.double_peak()) / n
    }

    /// Loss and gradients for every layer on one batch.
    pub fn gradients(
        &self,
        x: &Matrix,
        trace: &ForwardTrace,
    ) -> Result<(LossBreakdown, HvaeGrads)> {
        let n = x.cols();
        let loss = self.total_loss(trace, x)?;

        let (_, d_xhat) = squared_error(x, &trace.x_hat)?;
        let (psi_grads, d_hdot_l1) = self.psi.backward(&trace.psi_caches, &d_xhat, n)?;
        // Gradient of Σ‖H − Ḣ‖² with respect to Ḣ; its negation goes to H.
        let (_, d_hdot_l2) = squared_error(&trace.h, &trace.h_dot)?;
        let d_hdot = d_hdot_l1.add(&d_hdot_l2)?;

        let (g1, d_h1) = self.unit1.backward(
            &trace.unit1,
            &d_hdot,
            kl::standard_normal_term,
            self.config.kl2_weight,
            n,
        )?;
        let (g2, d_h2) = self.unit2.backward(
            &trace.unit2,
            &d_hdot,
            self.double_peak(),
            self.config.kl3_weight,
            n,
        )?;
        let d_h = d_h1.add(&d_h2)?.sub(&d_hdot_l2)?;
        let (phi_grads, _) = self.phi.backward(&trace.phi_caches, &d_h, n)?;

        let mut layers = phi_grads;
        layers.extend(g1);
        layers.extend(g2);
        layers.extend(psi_grads);
        Ok((loss, HvaeGrads { layers }))
    }

    pub fn apply_gradients(&mut self, grads: &HvaeGrads) -> Result<()> {
        let cfg = self.config.train.clone();
        for (layer, g) in self.layers_mut().into_iter().zip(&grads.layers) {
            layer.momentum_step(g, &cfg)?;
        }
        Ok(())
    }

    /// Mini-batch training with momentum over `samples` (one normalized CIR
    /// per column). Returns the mean loss of every epoch.
    pub fn train(&mut self, samples: &Matrix) -> Result<Vec<LossBreakdown>> {
        if samples.rows() != self.config.input_dim {
            return Err(crate::error::shape_err(
                "HvaeModel::train",
                format!("{} rows", self.config.input_dim),
                format!("{} rows", samples.rows()),
            ));
        }
        let cfg = self.config.train.clone();
        let history = run_epochs(samples, &cfg, |x, rng| {
            let trace = self.forward_hvae(x, rng, false)?;
            let (loss, grads) = self.gradients(x, &trace)?;
            if loss.non_finite_term().is_none() {
                self.apply_gradients(&grads)?;
            }
            Ok(loss)
        })?;
        if cfg.epochs > 0 {
            self.trained = true;
        }
        Ok(history)
    }

    /// `μ₂` for every column of `x`; no sampling.
    pub fn encode_z2(&self, x: &Matrix) -> Result<Matrix> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let h = self.phi.infer(x)?;
        Ok(self.unit2.encode(&h)?.mu)
    }
}

/// Mean over columns of `‖X − X̂‖²`.
pub fn loss_ae(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    Ok(squared_error(x, x_hat)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> HvaeModel {
        let mut c = HvaeConfig::new(6, 4, 2);
        c.train.seed = 3;
        HvaeModel::new(c).unwrap()
    }

    fn batch(n: usize) -> Matrix {
        Matrix::from_fn(6, n, |r, c| ((r * 7 + c * 3) as f64 * 0.37).sin())
    }

    #[test]
    fn eight_layers_on_every_path() {
        let m = tiny();
        assert_eq!(m.phi.layers.len() + 1 + 1 + m.psi.layers.len(), 8);
        assert_eq!(m.layers().len(), 12);
        assert_eq!(encoder_widths(128, 64), [128, 102, 81, 64]);
    }

    #[test]
    fn shapes() {
        let m = tiny();
        let t = m
            .forward_hvae(&batch(5), &mut ChaCha8Rng::seed_from_u64(0), false)
            .unwrap();
        assert_eq!(t.h.shape(), (4, 5));
        assert_eq!(t.z1().shape(), (2, 5));
        assert_eq!(t.z2().shape(), (2, 5));
        assert_eq!(t.x_hat.shape(), (6, 5));
        assert!(m
            .forward_hvae(
                &Matrix::zeros(5, 2),
                &mut ChaCha8Rng::seed_from_u64(0),
                true
            )
            .is_err());
    }

    #[test]
    fn deterministic_mode_is_repeatable() {
        let m = tiny();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = m.forward_hvae(&batch(3), &mut rng, true).unwrap();
        let b = m.forward_hvae(&batch(3), &mut rng, true).unwrap();
        assert_eq!(a.x_hat, b.x_hat);
        assert_eq!(a.z2(), &a.unit2.gaussian.mu);
    }

    #[test]
    fn zero_sigma_sampling_equals_deterministic() {
        // σ never reaches 0 through the clamp; a zero noise draw is the same sample.
        let m = tiny();
        let x = batch(3);
        let det = m.forward_with_noise(&x, None, None).unwrap();
        let zero = Matrix::zeros(2, 3);
        let sto = m.forward_with_noise(&x, Some(&zero), Some(&zero)).unwrap();
        assert_eq!(det.x_hat, sto.x_hat);
    }

    #[test]
    fn reparameterize_cases() {
        let g = LatentGaussian {
            mu: Matrix::column_vector(&[1.5, -2.0]),
            log_var: Matrix::column_vector(&[0.3, 0.0]),
        };
        assert_eq!(reparameterize(&g, &Matrix::zeros(2, 1)).unwrap(), g.mu);
        let unit = LatentGaussian {
            mu: Matrix::zeros(2, 1),
            log_var: Matrix::zeros(2, 1),
        };
        let eps = Matrix::column_vector(&[0.25, -1.0]);
        assert_eq!(reparameterize(&unit, &eps).unwrap(), eps);
    }

    #[test]
    fn loss_examples() {
        let x = Matrix::column_vector(&[1.0, 0.0]);
        assert_eq!(loss_ae(&x, &x).unwrap(), 0.0);
        assert_eq!(loss_ae(&x, &Matrix::zeros(2, 1)).unwrap(), 1.0);
        let x = Matrix::new(1, 2, vec![1.0, 3f64.sqrt()]).unwrap();
        assert!((loss_ae(&x, &Matrix::zeros(1, 2)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let m = tiny();
        let x = batch(4);
        let t = m
            .forward_hvae(&x, &mut ChaCha8Rng::seed_from_u64(9), false)
            .unwrap();
        let l = m.total_loss(&t, &x).unwrap();
        assert_eq!(l.total, l.l1 + l.l2 + l.l3);
        let mut c = m.config.clone();
        c.kl3_weight = 0.0;
        let m0 = HvaeModel::new(c).unwrap();
        assert_eq!(
            m0.loss_z2(
                &m0.forward_hvae(&x, &mut ChaCha8Rng::seed_from_u64(9), false)
                    .unwrap()
            ),
            0.0
        );
    }

    #[test]
    fn zero_epochs_leave_model_untouched() {
        let mut m = tiny();
        m.config.train.epochs = 0;
        let before = m.clone();
        let hist = m.train(&batch(8)).unwrap();
        assert!(hist.is_empty());
        assert_eq!(m, before);
        assert!(matches!(m.encode_z2(&batch(1)), Err(Error::Untrained)));
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let mut m = tiny();
            m.config.train.epochs = 3;
            m.config.train.batch_size = 4;
            let h = m.train(&batch(10)).unwrap();
            (h, m.encode_z2(&batch(2)).unwrap())
        };
        let (a, za) = run();
        let (b, zb) = run();
        assert_eq!(a, b);
        assert_eq!(za, zb);
        assert_eq!(za.shape(), (2, 2));
    }

    #[test]
    fn config_validation() {
        assert!(HvaeModel::new(HvaeConfig::new(6, 8, 2)).is_err());
        assert!(HvaeModel::new(HvaeConfig::new(6, 4, 5)).is_err());
        let mut c = HvaeConfig::new(6, 4, 2);
        c.double_peak_s = 0.0;
        assert!(HvaeModel::new(c).is_err());
        let mut c = HvaeConfig::new(6, 4, 2);
        c.kl_mode = DoublePeakKl::Exact;
        c.prior_weight = 0.3;
        assert!(HvaeModel::new(c).is_err());
    }
}
