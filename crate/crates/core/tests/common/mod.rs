//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

pub mod grad;

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn log_normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

/// `log(w·N(x; −m, s²) + (1−w)·N(x; m, s²))`, evaluated stably.
pub fn log_mixture_pdf(x: f64, m: f64, s: f64, w: f64) -> f64 {
    let a = w.ln() + log_normal_pdf(x, -m, s);
    let b = (1.0 - w).ln() + log_normal_pdf(x, m, s);
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// `∫ q log(q/p)` for `q = N(μ, σ²)`, integrated over `μ ± 12σ` in pieces.
pub fn kl_quadrature(mu: f64, sigma: f64, log_p: &dyn Fn(f64) -> f64) -> f64 {
    let f = |x: f64| {
        let lq = log_normal_pdf(x, mu, sigma);
        lq.exp() * (lq - log_p(x))
    };
    let mut total = 0.0;
    for k in -12..12 {
        let a = mu + k as f64 * sigma;
        total += integrate(&f, a, a + sigma, 1e-14);
    }
    total
}

/// `erfc(x)` from the all-positive series
/// `erf(x) = 2/√π · e^{−x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`.
pub fn erfc_series(x: f64) -> f64 {
    assert!(x >= 0.0);
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term > 1e-18 * sum {
        n += 1;
        term *= 2.0 * x * x / (2 * n + 1) as f64;
        sum += term;
    }
    1.0 - 2.0 / PI.sqrt() * (-x * x).exp() * sum
}

/// Maximum of `|g(x)|` over `[a, b]`: a dense scan refined by golden-section
/// search around the best sample.
pub fn max_abs(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let n = 30_000;
    let step = (b - a) / n as f64;
    let (mut best_x, mut best) = (a, g(a).abs());
    for i in 1..=n {
        let x = a + i as f64 * step;
        let v = g(x).abs();
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = ((best_x - step).max(a), (best_x + step).min(b));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if g(x1).abs() < g(x2).abs() {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let x = 0.5 * (lo + hi);
    if g(x).abs() > best {
        (x, g(x).abs())
    } else {
        (best_x, best)
    }
}

/// Largest relative error of the closed-form approximation on the grid,
/// as measured when the grid was introduced. It occurs at μ = −m: the
/// expression is not symmetric in μ although the divergence is.
pub const EXACT_KL_MAX_REL_ERROR: f64 = 156.4888485108306;
/// `max |1 − tanh(1.19x) − erfc(x)|` over `[0, 3]` and where it occurs.
pub const ERFC_TANH_MAX_ERROR: f64 = 0.021265261326882667;
pub const ERFC_TANH_ARGMAX: f64 = 1.4046454586065202;

/// Random `(μ, σ, m, s)` with `μ ∈ [−3, 3)` and the rest in `[0.1, 3)`.
pub fn kl_draws(seed: u64, n: usize) -> Vec<(f64, f64, f64, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (
                rng.random_range(-3.0..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..3.0),
            )
        })
        .collect()
}

/// Largest `|closed form − quadrature|` of the standard-normal KL over the draws.
pub fn standard_normal_max_error(draws: &[(f64, f64, f64, f64)]) -> f64 {
    draws
        .iter()
        .map(|&(mu, sigma, _, _)| {
            let closed = cirauth::kl::kl_standard_normal(&[mu], &[sigma]).unwrap();
            (closed - kl_quadrature(mu, sigma, &|x| log_normal_pdf(x, 0.0, 1.0))).abs()
        })
        .fold(0.0, f64::max)
}

/// Draws where the equal-weight double-peak bound falls below quadrature.
pub fn bound_violations(draws: &[(f64, f64, f64, f64)]) -> Vec<(f64, f64, f64, f64)> {
    draws
        .iter()
        .copied()
        .filter(|&(mu, sigma, m, s)| {
            let bound = cirauth::kl::kl_double_peak_bound(&[mu], &[sigma], m, s).unwrap();
            bound < kl_quadrature(mu, sigma, &|x| log_mixture_pdf(x, m, s, 0.5))
        })
        .collect()
}

/// Points of the documented closed-form-approximation grid, as `(μ, σ, m, s)`:
/// `s = 1`, `m ∈ {2,…,6}`, `μ/m ∈ {−1, −½, 0, ½, 1}`, `σ ∈ {½, 1}`.
pub fn exact_kl_grid() -> Vec<(f64, f64, f64, f64)> {
    let mut v = Vec::new();
    for m in [2.0, 3.0, 4.0, 5.0, 6.0] {
        for frac in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for sigma in [0.5, 1.0] {
                v.push((frac * m, sigma, m, 1.0));
            }
        }
    }
    v
}

/// Largest relative error of the closed-form approximation over the grid,
/// with the grid point where it occurs.
pub fn exact_kl_max_relative_error() -> (f64, (f64, f64, f64, f64)) {
    let mut worst = (0.0, (0.0, 0.0, 0.0, 0.0));
    for (mu, sigma, m, s) in exact_kl_grid() {
        let approx = cirauth::kl::kl_double_peak_exact(&[mu], &[sigma], m, s).unwrap();
        let q = kl_quadrature(mu, sigma, &|x| log_mixture_pdf(x, m, s, 0.5));
        let rel = (approx - q).abs() / q.abs();
        if rel > worst.0 {
            worst = (rel, (mu, sigma, m, s));
        }
    }
    worst
}

pub fn erfc_tanh_max_error() -> (f64, f64) {
    max_abs(&|x| cirauth::kl::erfc_tanh(x) - erfc_series(x), 0.0, 3.0)
}

const BETAS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 3.0, 8.0];

/// Checks every confusion-matrix identity and the β properties for all
/// counts in `0..=max`. Returns the number of matrices checked, or the first
/// violation.
pub fn check_metrics_grid(max: u64) -> Result<usize, String> {
    use cirauth::metrics::{f1, f_beta, p_ca, p_noa, ConfusionMatrix};
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let mut checked = 0;
    for tl in 0..=max {
        for fa in 0..=max {
            for fl in 0..=max {
                for ta in 0..=max {
                    let cm = ConfusionMatrix::new(tl, fa, fl, ta);
                    let err = |what: &str| Err(format!("{what} fails at {cm:?}"));
                    if cm.alice_total() != tl + fa || cm.eve_total() != fl + ta {
                        return err("totals");
                    }
                    let pca = (tl + fl > 0).then(|| tl as f64 / (tl + fl) as f64);
                    let pnoa = (tl + fa > 0).then(|| tl as f64 / (tl + fa) as f64);
                    if p_ca(&cm) != pca || p_noa(&cm) != pnoa {
                        return err("rates");
                    }
                    let f = f1(&cm);
                    if f != f_beta(&cm, 1.0) {
                        return err("F1 = F_1");
                    }
                    match (pca, pnoa) {
                        (Some(p), Some(r)) if p + r > 0.0 => {
                            let want = 2.0 * p * r / (p + r);
                            let Some(f) = f else { return err("F1 defined") };
                            if !close(f, want) || !(0.0..=1.0).contains(&f) {
                                return err("F1 value");
                            }
                            if (f == 1.0) != (fa == 0 && fl == 0 && tl > 0) {
                                return err("F1 = 1 iff perfect");
                            }
                            let fb: Vec<f64> =
                                BETAS.iter().map(|&b| f_beta(&cm, b).unwrap()).collect();
                            for (i, (&b, &v)) in BETAS.iter().zip(&fb).enumerate() {
                                let b2 = b * b;
                                if !close(v, (b2 + 1.0) * p * r / (b2 * p + r)) {
                                    return err("F_beta value");
                                }
                                if p == r && !close(v, p) {
                                    return err("F_beta at equal rates");
                                }
                                // Larger β moves F_β from P_ca toward P_noa.
                                if i > 0 {
                                    let prev = fb[i - 1];
                                    let ok = if p < r {
                                        v >= prev - 1e-15
                                    } else if p > r {
                                        v <= prev + 1e-15
                                    } else {
                                        close(v, prev)
                                    };
                                    if !ok {
                                        return err("beta monotonicity");
                                    }
                                }
                            }
                            // One more true acceptance never lowers F_β.
                            let next = ConfusionMatrix::new(tl + 1, fa, fl, ta);
                            for &b in &BETAS {
                                if f_beta(&next, b).unwrap() < f_beta(&cm, b).unwrap() - 1e-15 {
                                    return err("monotone in TL");
                                }
                            }
                        }
                        _ => {
                            if f.is_some() {
                                return err("undefined F1");
                            }
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}
