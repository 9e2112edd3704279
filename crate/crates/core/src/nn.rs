//! Dense feed-forward layers trained with momentum gradient descent.
//!
//! A layer computes `Z_l = f(W_l Z_{l-1} + B_l)` on a batch stored column-wise.
//! [`DenseLayer::backward`] takes the upstream gradient of the *summed*
//! per-sample loss and applies the `1/ζ` batch factor itself, so the weight
//! gradient is the batch mean of per-sample gradients while the gradient
//! passed to the previous layer stays per-sample.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{shape_err, Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::Identity,
    ];

    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at the pre-activation `z`. `relu'(0)` is taken as 0.
    #[inline]
    pub fn derivative_at(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = self.eval(z);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn apply(self, z: &Matrix) -> Matrix {
        z.map(|v| self.eval(v))
    }

    pub fn derivative(self, z: &Matrix) -> Matrix {
        z.map(|v| self.derivative_at(v))
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.code() == code)
    }
}

/// Optimizer and loop settings shared by every trainable model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Step size β.
    pub learning_rate: f64,
    /// Momentum coefficient ϖ⁺ in `[0, 1)`.
    pub momentum: f64,
    /// Number of passes ρ over the training set.
    pub epochs: usize,
    /// Mini-batch size ζ.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.9,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Zero epochs is accepted here (a no-op training run); callers that
    /// need at least one epoch check it themselves.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Values cached by a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Matrix,
    pub pre_activation: Matrix,
    pub output: Matrix,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Matrix,
    /// Gradient with respect to the layer input `Z_{l-1}`.
    pub input: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub name: String,
    pub weights: Matrix,
    pub bias: Matrix,
    pub activation: Activation,
    pub weight_momentum: Matrix,
    pub bias_momentum: Matrix,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero bias, zero momentum.
    pub fn new<R: Rng + ?Sized>(
        name: impl Into<String>,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot limit");
        let weights = Matrix::from_fn(out_dim, in_dim, |_, _| dist.sample(rng));
        Self::from_parts(name, weights, Matrix::zeros(out_dim, 1), activation)
            .expect("shapes are consistent by construction")
    }

    pub fn from_parts(
        name: impl Into<String>,
        weights: Matrix,
        bias: Matrix,
        activation: Activation,
    ) -> Result<Self> {
        let name = name.into();
        if bias.shape() != (weights.rows(), 1) {
            return Err(shape_err(
                format!("layer {name} bias"),
                format!("{}x1", weights.rows()),
                format!("{}x{}", bias.rows(), bias.cols()),
            ));
        }
        let weight_momentum = Matrix::zeros(weights.rows(), weights.cols());
        let bias_momentum = Matrix::zeros(bias.rows(), 1);
        Ok(Self {
            name,
            weights,
            bias,
            activation,
            weight_momentum,
            bias_momentum,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.data().len() + self.bias.data().len()
    }

    pub fn forward(&self, input: &Matrix) -> Result<LayerCache> {
        if input.rows() != self.in_dim() {
            return Err(shape_err(
                format!("layer {} input", self.name),
                format!("{} rows", self.in_dim()),
                format!("{} rows", input.rows()),
            ));
        }
        let mut pre = self.weights.matmul(input)?;
        pre.add_column_broadcast(&self.bias)?;
        let output = self.activation.apply(&pre);
        Ok(LayerCache {
            input: input.clone(),
            pre_activation: pre,
            output,
        })
    }

    /// Gradients for one layer given `∇Z_l` (the upstream gradient of the
    /// summed loss) and the batch size ζ.
    pub fn backward(
        &self,
        cache: &LayerCache,
        upstream: &Matrix,
        batch_size: usize,
    ) -> Result<LayerGrads> {
        if upstream.shape() != cache.pre_activation.shape() {
            return Err(shape_err(
                format!("layer {} upstream gradient", self.name),
                format!(
                    "{}x{}",
                    cache.pre_activation.rows(),
                    cache.pre_activation.cols()
                ),
                format!("{}x{}", upstream.rows(), upstream.cols()),
            ));
        }
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let delta = upstream.hadamard(&self.activation.derivative(&cache.pre_activation))?;
        let inv = 1.0 / batch_size as f64;
        let weights = delta.matmul_transpose_rhs(&cache.input)?.scale(inv);
        let bias = delta.row_sums().scale(inv);
        let input = self.weights.transpose_matmul(&delta)?;
        Ok(LayerGrads {
            weights,
            bias,
            input,
        })
    }

    /// Momentum update:
    /// `v ← ϖ⁺ v + (1 − ϖ⁺) ∇`, then `θ ← θ − β v`.
    pub fn momentum_step(&mut self, grads: &LayerGrads, config: &TrainConfig) -> Result<()> {
        if grads.weights.shape() != self.weights.shape() || grads.bias.shape() != self.bias.shape()
        {
            return Err(shape_err(
                format!("layer {} update", self.name),
                format!("{}x{}", self.weights.rows(), self.weights.cols()),
                format!("{}x{}", grads.weights.rows(), grads.weights.cols()),
            ));
        }
        let mu = config.momentum;
        let lr = config.learning_rate;
        update(
            self.weights.data_mut(),
            self.weight_momentum.data_mut(),
            grads.weights.data(),
            mu,
            lr,
        );
        update(
            self.bias.data_mut(),
            self.bias_momentum.data_mut(),
            grads.bias.data(),
            mu,
            lr,
        );
        Ok(())
    }
}

fn update(params: &mut [f64], velocity: &mut [f64], grad: &[f64], mu: f64, lr: f64) {
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = mu * *v + (1.0 - mu) * g;
        *p -= lr * *v;
    }
}

/// A chain of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub layers: Vec<DenseLayer>,
}

impl Stack {
    /// Builds layers `dims[0] → dims[1] → … → dims[n]`; the last layer gets
    /// `output_activation`, the others `hidden_activation`.
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        dims: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dims.len() >= 2, "a stack needs at least one layer");
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n {
                    output_activation
                } else {
                    hidden_activation
                };
                DenseLayer::new(format!("{name}.{i}"), dims[i], dims[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Vec<LayerCache>> {
        let mut caches: Vec<LayerCache> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = caches.last().map_or(input, |c| &c.output);
            let cache = layer.forward(x)?;
            caches.push(cache);
        }
        Ok(caches)
    }

    /// Output of the last layer only.
    pub fn infer(&self, input: &Matrix) -> Result<Matrix> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?.output;
        }
        Ok(x)
    }

    /// Backpropagates through all layers. Returns per-layer gradients (in
    /// layer order) and the gradient with respect to the stack input.
    pub fn backward(
        &self,
        caches: &[LayerCache],
        upstream: &Matrix,
        batch_size: usize,
    ) -> Result<(Vec<LayerGrads>, Matrix)> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (layer, cache) in self.layers.iter().zip(caches).rev() {
            let lg = layer.backward(cache, &g, batch_size)?;
            g = lg.input.clone();
            grads.push(lg);
        }
        grads.reverse();
        Ok((grads, g))
    }

    pub fn momentum_step(&mut self, grads: &[LayerGrads], config: &TrainConfig) -> Result<()> {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            layer.momentum_step(g, config)?;
        }
        Ok(())
    }
}
