//! The trainable scorers behind each authentication scheme.

use crate::auth::Scorer;
use crate::baseline::{Autoencoder, AutoencoderConfig, Vae, VaeConfig};
use crate::error::{Error, Result};
use crate::hvae::{HvaeConfig, HvaeModel};
use crate::nn::DenseLayer;
use crate::tensor::Matrix;
use crate::training::LossBreakdown;

/// Authentication scheme: scorer plus decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Hierarchical VAE, threshold-free rule.
    TfHvae,
    /// Auto-encoder, threshold-free rule.
    TfAe,
    /// Auto-encoder, best threshold from a sweep.
    TbAe,
    /// Single-unit VAE, threshold-free rule.
    TfVae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TfHvae,
        ModelKind::TbAe,
        ModelKind::TfVae,
        ModelKind::TfAe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TfHvae => "tf_hvae",
            ModelKind::TfAe => "tf_ae",
            ModelKind::TbAe => "tb_ae",
            ModelKind::TfVae => "tf_vae",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn uses_threshold(self) -> bool {
        self == ModelKind::TbAe
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A model of any architecture.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Hvae(HvaeModel),
    Autoencoder(Autoencoder),
    Vae(Vae),
}

impl Model {
    pub fn layers(&self) -> Vec<&DenseLayer> {
        match self {
            Model::Hvae(m) => m.layers(),
            Model::Autoencoder(m) => m.layers(),
            Model::Vae(m) => m.layers(),
        }
    }

    pub fn is_trained(&self) -> bool {
        match self {
            Model::Hvae(m) => m.is_trained(),
            Model::Autoencoder(m) => m.is_trained(),
            Model::Vae(m) => m.is_trained(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Hvae(m) => m.config.input_dim,
            Model::Autoencoder(m) => m.config.input_dim,
            Model::Vae(m) => m.config.input_dim,
        }
    }

    pub fn train(&mut self, samples: &Matrix) -> Result<Vec<LossBreakdown>> {
        match self {
            Model::Hvae(m) => m.train(samples),
            Model::Autoencoder(m) => m.train(samples),
            Model::Vae(m) => m.train(samples),
        }
    }
}

impl Scorer for Model {
    fn embed(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Model::Hvae(m) => m.embed(x),
            Model::Autoencoder(m) => m.embed(x),
            Model::Vae(m) => m.embed(x),
        }
    }
}

/// Architecture settings for every model kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    /// Hierarchical VAE settings; `input_dim` is overwritten from the data.
    pub hvae: HvaeConfig,
    /// Hidden width of the auto-encoder baselines.
    pub ae_h: usize,
    /// Hidden and latent widths of the VAE baseline.
    pub vae_h: usize,
    pub vae_z: usize,
    pub vae_kl_weight: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            hvae: HvaeConfig::new(128, 64, 32),
            ae_h: 32,
            vae_h: 64,
            vae_z: 32,
            vae_kl_weight: 1.0,
        }
    }
}

impl ModelSettings {
    /// An untrained model of `kind` for inputs of width `input_dim`.
    pub fn build(&self, kind: ModelKind, input_dim: usize) -> Result<Model> {
        let train = self.hvae.train.clone();
        match kind {
            ModelKind::TfHvae => Ok(Model::Hvae(HvaeModel::new(HvaeConfig {
                input_dim,
                ..self.hvae.clone()
            })?)),
            ModelKind::TfAe | ModelKind::TbAe => {
                Ok(Model::Autoencoder(Autoencoder::new(AutoencoderConfig {
                    input_dim,
                    h: self.ae_h,
                    train,
                })?))
            }
            ModelKind::TfVae => Ok(Model::Vae(Vae::new(VaeConfig {
                input_dim,
                h: self.vae_h,
                z: self.vae_z,
                kl_weight: self.vae_kl_weight,
                train,
            })?)),
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        HvaeConfig {
            input_dim,
            ..self.hvae.clone()
        }
        .validate()?;
        if self.ae_h == 0 || self.ae_h > input_dim {
            return Err(Error::Config(format!(
                "ae_h must lie in 1..={input_dim}, got {}",
                self.ae_h
            )));
        }
        if self.vae_z == 0 || self.vae_z > self.vae_h || self.vae_h > input_dim {
            return Err(Error::Config(format!(
                "VAE widths must satisfy 1 ≤ vae_z ≤ vae_h ≤ {input_dim}, got vae_z={}, vae_h={}",
                self.vae_z, self.vae_h
            )));
        }
        if !(self.vae_kl_weight >= 0.0 && self.vae_kl_weight.is_finite()) {
            return Err(Error::Config("vae_kl_weight must be non-negative".into()));
        }
        Ok(())
    }
}
