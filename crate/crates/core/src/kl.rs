//! Closed-form and approximate KL divergences of a diagonal Gaussian
//! posterior against the single-peak and double-peak priors.
//!
//! Every function works per dimension and sums over dimensions. Gradients
//! are returned with respect to `μ` and `log σ²`, which is what the encoder
//! heads emit.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};

/// Slope of the `Erfc(x) ≈ 1 − tanh(1.19 x)` approximation.
pub const ERFC_TANH_SLOPE: f64 = 1.19;

/// `1 − tanh(1.19 x)`.
#[inline]
pub fn erfc_tanh(x: f64) -> f64 {
    1.0 - (ERFC_TANH_SLOPE * x).tanh()
}

/// Which double-peak KL expression the `Z₂` loss uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DoublePeakKl {
    /// Convexity upper bound (default).
    #[default]
    Bound,
    /// The closed-form approximation built on `erfc_tanh`.
    Exact,
}

impl DoublePeakKl {
    pub fn code(self) -> u8 {
        match self {
            DoublePeakKl::Bound => 0,
            DoublePeakKl::Exact => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DoublePeakKl::Bound),
            1 => Some(DoublePeakKl::Exact),
            _ => None,
        }
    }
}

/// Per-dimension KL value with partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerm {
    pub value: f64,
    pub d_mu: f64,
    pub d_log_var: f64,
}

fn check_sigma(sigma: &[f64]) -> Result<()> {
    match sigma.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
        Some(s) => Err(Error::Domain(format!(
            "σ must be positive and finite, got {s}"
        ))),
        None => Ok(()),
    }
}

fn check_prior(m: f64, s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!(
            "prior scale s must be positive, got {s}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::Domain(format!(
            "prior offset m must be finite, got {m}"
        )));
    }
    Ok(())
}

/// `KL(N(μ, σ²) ‖ N(0, 1))` for one dimension, parameterized by `log σ²`.
#[inline]
pub fn standard_normal_term(mu: f64, log_var: f64) -> KlTerm {
    let var = log_var.exp();
    KlTerm {
        value: 0.5 * (-log_var + var + mu * mu - 1.0),
        d_mu: mu,
        d_log_var: 0.5 * (var - 1.0),
    }
}

/// `Σ_d ½(−log σ² + σ² + μ² − 1)`.
pub fn kl_standard_normal(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    check_sigma(sigma)?;
    if mu.len() != sigma.len() {
        return Err(Error::Domain("μ and σ lengths differ".into()));
    }
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| standard_normal_term(m, (s * s).ln()).value)
        .sum())
}

/// Convexity bound on `KL(N(μ, σ²) ‖ ½N(−m, s²) + ½N(m, s²))`:
/// the average of the KL divergences to each component,
/// `log(s/σ) + (σ² + ½(μ−m)² + ½(μ+m)²)/(2s²) − ½`.
#[inline]
pub fn double_peak_bound_term(mu: f64, log_var: f64, m: f64, s: f64) -> KlTerm {
    weighted_double_peak_bound_term(mu, log_var, m, s, 0.5)
}

/// The same bound for the mixture `w·N(−m, s²) + (1−w)·N(m, s²)`.
#[inline]
pub fn weighted_double_peak_bound_term(mu: f64, log_var: f64, m: f64, s: f64, w: f64) -> KlTerm {
    let var = log_var.exp();
    let s2 = s * s;
    let spread = w * (mu + m).powi(2) + (1.0 - w) * (mu - m).powi(2);
    KlTerm {
        value: s.ln() - 0.5 * log_var + (var + spread) / (2.0 * s2) - 0.5,
        d_mu: (mu + (2.0 * w - 1.0) * m) / s2,
        d_log_var: -0.5 + var / (2.0 * s2),
    }
}

pub fn kl_double_peak_bound(mu: &[f64], sigma: &[f64], m: f64, s: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_prior(m, s)?;
    if mu.len() != sigma.len() {
        return Err(Error::Domain("μ and σ lengths differ".into()));
    }
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(&u, &sg)| double_peak_bound_term(u, (sg * sg).ln(), m, s).value)
        .sum())
}

/// Closed-form approximation `ι − κ − γ` of the double-peak KL with
///
/// * `ι = log(2s/σ)`
/// * `κ = −((m−μ)² + σ² − s²)/(2s²)`
/// * `γ = −2m[−σ e^{−μ²/2σ²} + √(π/2) μ Erfc(μ/(√2 σ))]/s²`
///
/// and `Erfc(x) ≈ 1 − tanh(1.19 x)`.
pub fn double_peak_exact_term(mu: f64, log_var: f64, m: f64, s: f64) -> KlTerm {
    let sigma = (0.5 * log_var).exp();
    let s2 = s * s;
    let c = FRAC_PI_2.sqrt();
    let a = ERFC_TANH_SLOPE / SQRT_2;

    let gauss = (-mu * mu / (2.0 * sigma * sigma)).exp();
    let t = (a * mu / sigma).tanh();
    let sech2 = 1.0 - t * t;
    let bracket = -sigma * gauss + c * mu * (1.0 - t);

    let iota = (2.0 * s / sigma).ln();
    let kappa = -((m - mu).powi(2) + sigma * sigma - s2) / (2.0 * s2);
    let gamma = -2.0 * m * bracket / s2;
    let value = iota - kappa - gamma;

    // d bracket / dμ and d bracket / dσ
    let db_dmu =
        sigma * gauss * (mu / (sigma * sigma)) + c * (1.0 - t) - c * mu * sech2 * (a / sigma);
    let db_dsigma = -gauss - sigma * gauss * (mu * mu / sigma.powi(3))
        + c * mu * sech2 * (a * mu / (sigma * sigma));

    let d_mu = -(m - mu) / s2 + 2.0 * m * db_dmu / s2;
    let d_sigma = -1.0 / sigma + sigma / s2 + 2.0 * m * db_dsigma / s2;
    KlTerm {
        value,
        d_mu,
        d_log_var: d_sigma * 0.5 * sigma,
    }
}

pub fn kl_double_peak_exact(mu: &[f64], sigma: &[f64], m: f64, s: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_prior(m, s)?;
    if mu.len() != sigma.len() {
        return Err(Error::Domain("μ and σ lengths differ".into()));
    }
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(&u, &sg)| double_peak_exact_term(u, (sg * sg).ln(), m, s).value)
        .sum())
}

impl DoublePeakKl {
    /// Per-dimension term for the mixture `w·N(−m, s²) + (1−w)·N(m, s²)`.
    /// The closed-form approximation exists only for `w = ½` and ignores `w`.
    #[inline]
    pub fn term(self, mu: f64, log_var: f64, m: f64, s: f64, w: f64) -> KlTerm {
        match self {
            DoublePeakKl::Bound => weighted_double_peak_bound_term(mu, log_var, m, s, w),
            DoublePeakKl::Exact => double_peak_exact_term(mu, log_var, m, s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DoublePeakKl::Bound => "bound",
            DoublePeakKl::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bound" => Some(DoublePeakKl::Bound),
            "exact" => Some(DoublePeakKl::Exact),
            _ => None,
        }
    }
}
