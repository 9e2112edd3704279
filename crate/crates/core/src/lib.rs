//! Physical-layer authentication from channel impulse responses.
//!
//! The crate bundles a small dense-network toolkit, a synthetic CIR
//! generator, a hierarchical VAE whose second latent unit carries a
//! double-peak prior, baseline scorers, and a rank-based authenticator that
//! needs no decision threshold.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auth;
pub mod baseline;
pub mod channel;
pub mod checkpoint;
mod codec;
pub mod error;
pub mod features;
pub mod hvae;
pub mod kl;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod protocol;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use tensor::Matrix;
