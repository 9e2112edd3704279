//! Mini-batch loop shared by every model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nn::TrainConfig;
use crate::tensor::Matrix;

pub(crate) const INIT_STREAM: u64 = 1;
pub(crate) const TRAIN_STREAM: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Batch-mean loss terms. `total` is always `l1 + l2 + l3`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    /// Input reconstruction.
    pub l1: f64,
    /// Hidden-code reconstruction plus the single-peak KL.
    pub l2: f64,
    /// Double-peak KL.
    pub l3: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        Self {
            l1,
            l2,
            l3,
            total: l1 + l2 + l3,
        }
    }

    /// Name of the first non-finite term, if any.
    pub fn non_finite_term(&self) -> Option<&'static str> {
        [
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(n, _)| n)
    }
}

/// Runs `config.epochs` shuffled passes over the columns of `samples`.
/// `step` trains on one batch and returns its loss; the result holds the
/// sample-weighted mean loss of every epoch.
pub(crate) fn run_epochs<F>(
    samples: &Matrix,
    config: &TrainConfig,
    mut step: F,
) -> Result<Vec<LossBreakdown>>
where
    F: FnMut(&Matrix, &mut ChaCha8Rng) -> Result<LossBreakdown>,
{
    config.validate()?;
    let n = samples.cols();
    if n == 0 && config.epochs > 0 {
        return Err(Error::Domain("no training samples".into()));
    }
    let mut rng = stream_rng(config.seed, TRAIN_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut acc = LossBreakdown::default();
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let x = samples.select_columns(idx);
            let loss = step(&x, &mut rng)?;
            if let Some(term) = loss.non_finite_term() {
                return Err(Error::NonFinite { epoch, batch, term });
            }
            let w = idx.len() as f64;
            acc.l1 += loss.l1 * w;
            acc.l2 += loss.l2 * w;
            acc.l3 += loss.l3 * w;
        }
        let inv = 1.0 / n as f64;
        history.push(LossBreakdown::new(acc.l1 * inv, acc.l2 * inv, acc.l3 * inv));
    }
    Ok(history)
}

/// Mean over columns of `‖a − b‖²`, with the gradient of the *summed* loss
/// with respect to `b`.
pub(crate) fn squared_error(a: &Matrix, b: &Matrix) -> Result<(f64, Matrix)> {
    let diff = a.sub(b)?;
    let n = a.cols().max(1) as f64;
    Ok((diff.squared_norm() / n, diff.scale(-2.0)))
}
