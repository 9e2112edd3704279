//! Channel-difference scoring and the two decision rules.
//!
//! A scorer embeds normalized CIRs; the difference score of a record is the
//! squared Euclidean distance between its embedding and the reference
//! embedding. The threshold-free rule accepts the `⌊αq + ½⌋` lowest-scoring
//! records of a batch of `q`; the threshold rule accepts scores below `ξ`.

use crate::error::{shape_err, Error, Result};
use crate::metrics::{confusion, f1};
use crate::tensor::Matrix;

/// Maps normalized CIRs (one per column) to embedding columns.
pub trait Scorer {
    fn embed(&self, x: &Matrix) -> Result<Matrix>;
}

impl Scorer for crate::hvae::HvaeModel {
    fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.encode_z2(x)
    }
}

impl Scorer for crate::baseline::Autoencoder {
    fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.encode(x)
    }
}

impl Scorer for crate::baseline::Vae {
    fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.encode_mean(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuthMode {
    #[default]
    ThresholdFree,
    ThresholdSweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthConfig {
    /// Expected fraction of legitimate records in a batch, in `(0, 1]`.
    pub alpha: f64,
    pub mode: AuthMode,
    /// Candidate thresholds for [`AuthMode::ThresholdSweep`]; empty means
    /// an evenly spaced grid over the observed score range.
    pub threshold_grid: Vec<f64>,
    /// Size of the automatic grid.
    pub threshold_points: usize,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            mode: AuthMode::ThresholdFree,
            threshold_grid: Vec::new(),
            threshold_points: 200,
        }
    }
}

impl AuthConfig {
    /// `α = f_Alice / (f_Alice + f_Eve)` from transmission rates.
    pub fn from_rates(f_alice: f64, f_eve: f64) -> Result<Self> {
        if !(f_alice > 0.0 && f_eve > 0.0 && f_alice.is_finite() && f_eve.is_finite()) {
            return Err(Error::Config(format!(
                "transmission rates must be positive, got {f_alice} and {f_eve}"
            )));
        }
        Ok(Self {
            alpha: f_alice / (f_alice + f_eve),
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.mode == AuthMode::ThresholdSweep
            && self.threshold_grid.is_empty()
            && self.threshold_points < 2
        {
            return Err(Error::Config(
                "threshold sweep needs a grid or at least 2 points".into(),
            ));
        }
        if self.threshold_grid.iter().any(|t| t.is_nan()) {
            return Err(Error::Config("threshold grid contains NaN".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthVerdict {
    /// Position of the record in the scored batch.
    pub index: usize,
    pub score: f64,
    pub legitimate: bool,
    pub ground_truth: bool,
}

/// `‖e(X[n]) − e(X[0])‖²` for one pair of normalized CIRs.
pub fn channel_difference<S: Scorer + ?Sized>(
    scorer: &S,
    reference: &[f64],
    sample: &[f64],
) -> Result<f64> {
    if reference.len() != sample.len() {
        return Err(shape_err(
            "channel_difference",
            format!("{} features", reference.len()),
            format!("{} features", sample.len()),
        ));
    }
    let e = scorer.embed(&Matrix::from_columns(&[reference, sample])?)?;
    Ok((0..e.rows())
        .map(|r| (e.get(r, 1) - e.get(r, 0)).powi(2))
        .sum())
}

/// Difference score of every column of `batch` against `reference` (a single column).
pub fn scores<S: Scorer + ?Sized>(
    scorer: &S,
    reference: &Matrix,
    batch: &Matrix,
) -> Result<Vec<f64>> {
    if reference.cols() != 1 {
        return Err(shape_err(
            "reference",
            "1 column",
            format!("{} columns", reference.cols()),
        ));
    }
    let r = scorer.embed(reference)?;
    let e = scorer.embed(batch)?;
    if e.rows() != r.rows() {
        return Err(shape_err(
            "embedding",
            format!("{} rows", r.rows()),
            format!("{} rows", e.rows()),
        ));
    }
    let mut out = vec![0.0; e.cols()];
    for row in 0..e.rows() {
        let r0 = r.get(row, 0);
        for (o, v) in out.iter_mut().zip(e.row(row)) {
            *o += (v - r0).powi(2);
        }
    }
    Ok(out)
}

/// Number of records accepted out of `q`: `⌊αq + ½⌋` clamped to `[0, q]`.
pub fn accepted_count(alpha: f64, q: usize) -> usize {
    let k = (alpha * q as f64 + 0.5).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(q)
    }
}

fn check_truth(scores: &[f64], truth: &[bool]) -> Result<()> {
    if scores.len() != truth.len() {
        return Err(shape_err(
            "ground truth",
            format!("{} labels", scores.len()),
            format!("{} labels", truth.len()),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN difference score".into()));
    }
    Ok(())
}

/// Threshold-free rule on precomputed scores: sort ascending (ties by
/// index) and accept the first `⌊αq + ½⌋`.
pub fn threshold_free(scores: &[f64], truth: &[bool], alpha: f64) -> Result<Vec<AuthVerdict>> {
    check_truth(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let k = accepted_count(alpha, scores.len());
    let mut legit = vec![false; scores.len()];
    for &i in &order[..k] {
        legit[i] = true;
    }
    Ok((0..scores.len())
        .map(|i| AuthVerdict {
            index: i,
            score: scores[i],
            legitimate: legit[i],
            ground_truth: truth[i],
        })
        .collect())
}

/// Threshold rule on precomputed scores: `score < ξ` is legitimate.
pub fn threshold_decide(scores: &[f64], truth: &[bool], xi: f64) -> Result<Vec<AuthVerdict>> {
    check_truth(scores, truth)?;
    if xi.is_nan() {
        return Err(Error::Domain("threshold is NaN".into()));
    }
    Ok(scores
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (&s, &t))| AuthVerdict {
            index: i,
            score: s,
            legitimate: s < xi,
            ground_truth: t,
        })
        .collect())
}

/// Scores `batch` and applies the threshold-free rule.
pub fn authenticate_batch<S: Scorer + ?Sized>(
    scorer: &S,
    reference: &Matrix,
    batch: &Matrix,
    truth: &[bool],
    config: &AuthConfig,
) -> Result<Vec<AuthVerdict>> {
    config.validate()?;
    if batch.cols() == 0 {
        return Err(Error::Protocol("empty authentication batch".into()));
    }
    threshold_free(&scores(scorer, reference, batch)?, truth, config.alpha)
}

/// Scores `batch` and applies the threshold rule.
pub fn threshold_authenticate<S: Scorer + ?Sized>(
    scorer: &S,
    reference: &Matrix,
    batch: &Matrix,
    truth: &[bool],
    xi: f64,
) -> Result<Vec<AuthVerdict>> {
    threshold_decide(&scores(scorer, reference, batch)?, truth, xi)
}

/// `points` evenly spaced values from `min` to `max` of `scores`.
pub fn threshold_grid(scores: &[f64], points: usize) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() || points == 0 {
        return Vec::new();
    }
    if points == 1 || hi == lo {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn verdict_f1(verdicts: &[AuthVerdict]) -> Option<f64> {
    f1(&confusion(
        verdicts.iter().map(|v| (v.legitimate, v.ground_truth)),
    ))
}

/// F1 of every threshold in `grid` over several scored batches; an
/// undefined F1 counts as 0. Returns `(ξ, mean F1)` pairs.
pub fn sweep(batches: &[(Vec<f64>, Vec<bool>)], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&xi| {
            let mut total = 0.0;
            for (s, t) in batches {
                total += verdict_f1(&threshold_decide(s, t, xi)?).unwrap_or(0.0);
            }
            Ok((xi, total / batches.len().max(1) as f64))
        })
        .collect()
}

/// First grid point with the highest mean F1.
pub fn best_threshold(curve: &[(f64, f64)]) -> Option<(f64, f64)> {
    curve
        .iter()
        .copied()
        .fold(None, |best: Option<(f64, f64)>, p| match best {
            Some(b) if b.1 >= p.1 => Some(b),
            _ => Some(p),
        })
}
