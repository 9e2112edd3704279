//! Central finite-difference checks of analytic gradients.

use cirauth::hvae::{HvaeConfig, HvaeModel};
use cirauth::nn::{Activation, DenseLayer, Stack};
use cirauth::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const STEP: f64 = 1e-5;

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `|a − b| ≤ tol · max(|a|, |b|)`, with an absolute floor for gradients
/// that are zero up to finite-difference noise.
fn close(analytic: f64, numeric: f64, tol: f64) -> bool {
    (analytic - numeric).abs() <= tol * analytic.abs().max(numeric.abs()) + 1e-8
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

/// Weights, biases and inputs of one layer per activation kind, tolerance
/// 1e-4. Returns the number of partial derivatives compared.
pub fn dense_layers() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut n = 0;
    for act in Activation::ALL {
        let layer = DenseLayer::new("l", 5, 4, act, &mut rng);
        let x = gaussian(5, 3, &mut rng);
        let target = gaussian(4, 3, &mut rng);
        let loss = |l: &DenseLayer, x: &Matrix| -> f64 {
            let out = l.forward(x).unwrap().output;
            out.sub(&target).unwrap().squared_norm() / 3.0
        };
        let cache = layer.forward(&x).unwrap();
        let upstream = cache.output.sub(&target).unwrap().scale(2.0);
        let g = layer.backward(&cache, &upstream, 3).unwrap();

        for i in 0..layer.weights.data().len() {
            let mut p = layer.clone();
            p.weights.data_mut()[i] += STEP;
            let mut m = layer.clone();
            m.weights.data_mut()[i] -= STEP;
            let fd = (loss(&p, &x) - loss(&m, &x)) / (2.0 * STEP);
            let a = g.weights.data()[i];
            check(close(a, fd, 1e-4), || format!("{act:?} w{i}: {a} vs {fd}"))?;
            n += 1;
        }
        for i in 0..layer.bias.data().len() {
            let mut p = layer.clone();
            p.bias.data_mut()[i] += STEP;
            let mut m = layer.clone();
            m.bias.data_mut()[i] -= STEP;
            let fd = (loss(&p, &x) - loss(&m, &x)) / (2.0 * STEP);
            let a = g.bias.data()[i];
            check(close(a, fd, 1e-4), || format!("{act:?} b{i}: {a} vs {fd}"))?;
            n += 1;
        }
        // Input gradient is per-sample: d(Σ loss)/dx = ζ · d(mean loss)/dx.
        for i in 0..x.data().len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += STEP;
            let mut xm = x.clone();
            xm.data_mut()[i] -= STEP;
            let fd = 3.0 * (loss(&layer, &xp) - loss(&layer, &xm)) / (2.0 * STEP);
            let a = g.input.data()[i];
            check(close(a, fd, 1e-4), || format!("{act:?} x{i}: {a} vs {fd}"))?;
            n += 1;
        }
    }
    Ok(n)
}

/// A three-layer stack, tolerance 1e-4.
pub fn stack() -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stack = Stack::new(
        "s",
        &[4, 6, 5, 3],
        Activation::Tanh,
        Activation::Sigmoid,
        &mut rng,
    );
    let x = gaussian(4, 2, &mut rng);
    let loss = |s: &Stack| s.infer(&x).unwrap().squared_norm() / 2.0;
    let caches = stack.forward(&x).unwrap();
    let upstream = caches.last().unwrap().output.scale(2.0);
    let (grads, _) = stack.backward(&caches, &upstream, 2).unwrap();
    let mut n = 0;
    for (li, g) in grads.iter().enumerate() {
        for i in 0..g.weights.data().len() {
            let mut p = stack.clone();
            p.layers[li].weights.data_mut()[i] += STEP;
            let mut m = stack.clone();
            m.layers[li].weights.data_mut()[i] -= STEP;
            let fd = (loss(&p) - loss(&m)) / (2.0 * STEP);
            let a = g.weights.data()[i];
            check(close(a, fd, 1e-4), || {
                format!("layer {li} w{i}: {a} vs {fd}")
            })?;
            n += 1;
        }
    }
    Ok(n)
}

/// Every parameter of the full model under the total loss with fixed
/// sampling noise, tolerance 1e-3.
pub fn hvae(config: HvaeConfig, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = HvaeModel::new(config).map_err(|e| e.to_string())?;
    // Nonzero biases keep dead ReLU units off the exact kink at 0.
    for layer in model.layers_mut() {
        for b in layer.bias.data_mut() {
            *b = 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let model = model;
    let d = model.config.input_dim;
    let z = model.config.z;
    let x = gaussian(d, 2, &mut rng);
    let e1 = gaussian(z, 2, &mut rng);
    let e2 = gaussian(z, 2, &mut rng);
    let loss = |m: &HvaeModel| {
        let t = m.forward_with_noise(&x, Some(&e1), Some(&e2)).unwrap();
        m.total_loss(&t, &x).unwrap().total
    };
    let trace = model.forward_with_noise(&x, Some(&e1), Some(&e2)).unwrap();
    let (_, grads) = model.gradients(&x, &trace).unwrap();

    let mut n = 0;
    for (li, g) in grads.layers.iter().enumerate() {
        let params = [(false, g.weights.data()), (true, g.bias.data())];
        for (is_bias, analytic) in params {
            for (i, &a) in analytic.iter().enumerate() {
                let perturb = |delta: f64| {
                    let mut m = model.clone();
                    let layer = &mut m.layers_mut()[li];
                    let target = if is_bias {
                        &mut layer.bias
                    } else {
                        &mut layer.weights
                    };
                    target.data_mut()[i] += delta;
                    loss(&m)
                };
                let fd = (perturb(STEP) - perturb(-STEP)) / (2.0 * STEP);
                let name = &model.layers()[li].name;
                check(close(a, fd, 1e-3), || {
                    format!(
                        "{name} {} {i}: analytic {a} vs numeric {fd}",
                        if is_bias { "b" } else { "w" }
                    )
                })?;
                n += 1;
            }
        }
    }
    Ok(n)
}
