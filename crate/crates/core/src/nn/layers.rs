// SPDX-License-Identifier: Apache-2.0
//! Dense, batch-norm and LeakyReLU layers with hand-written backward passes.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Mode;

pub const DEFAULT_SLOPE: f64 = 0.2;
pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

/// `y = x` for `x >= 0`, else `slope * x`.
#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

/// Derivative of [`leaky_relu`]; taken as 1 at `x = 0`.
#[inline]
pub fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// out × in
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    input: Option<Array2<f64>>,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, biases: Array1<f64>) -> Self {
        assert_eq!(weights.nrows(), biases.len());
        DenseLayer {
            weights: weights.as_standard_layout().into_owned(),
            biases,
            input: None,
        }
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self::new(Array2::zeros((n_out, n_in)), Array1::zeros(n_out))
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((n_out, n_in), || rng.random_range(-limit..=limit));
        Self::new(weights, Array1::zeros(n_out))
    }

    pub fn n_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }

    pub(crate) fn forward(&mut self, x: ArrayView2<f64>, mode: Mode) -> Array2<f64> {
        let y = x.dot(&self.weights.t()) + &self.biases;
        if mode == Mode::Train {
            self.input = Some(x.to_owned());
        }
        y
    }

    pub(crate) fn infer(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.biases
    }

    /// Returns `(dx, dW, db)`.
    pub(crate) fn backward(&self, dy: &Array2<f64>) -> Option<(Array2<f64>, Array2<f64>, Array1<f64>)> {
        let x = self.input.as_ref()?;
        let dw = dy.t().dot(x);
        let db = dy.sum_axis(Axis(0));
        let dx = dy.dot(&self.weights);
        Some((dx, dw, db))
    }

    pub(crate) fn clear(&mut self) {
        self.input = None;
    }
}

#[derive(Debug, Clone)]
struct BnCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
}

/// Batch normalization over the batch axis with running statistics for
/// inference.
#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache>,
}

impl BatchNormLayer {
    pub fn new(width: usize) -> Self {
        BatchNormLayer {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
            cache: None,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    /// Batch mean and population variance per unit.
    pub fn batch_stats(x: ArrayView2<f64>) -> (Array1<f64>, Array1<f64>) {
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let centered = &x - &mean;
        let var = (&centered * &centered).sum_axis(Axis(0)) / n;
        (mean, var)
    }

    /// Pre-scale normalized activations for a batch, without touching state.
    pub fn normalize_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let (mean, var) = Self::batch_stats(x);
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        (&x - &mean) * &inv_std
    }

    pub(crate) fn forward(&mut self, x: ArrayView2<f64>, mode: Mode) -> Array2<f64> {
        match mode {
            Mode::Infer => self.infer(x),
            Mode::Train => {
                let (mean, var) = Self::batch_stats(x);
                let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
                let x_hat = (&x - &mean) * &inv_std;
                let y = &x_hat * &self.gamma + &self.beta;
                let m = self.momentum;
                self.running_mean = &self.running_mean * m + &mean * (1.0 - m);
                self.running_var = &self.running_var * m + &var * (1.0 - m);
                self.cache = Some(BnCache { x_hat, inv_std });
                y
            }
        }
    }

    pub(crate) fn infer(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let scale = &self.gamma / &self.running_var.mapv(|v| (v + self.eps).sqrt());
        let shift = &self.beta - &(&self.running_mean * &scale);
        &x * &scale + &shift
    }

    /// Returns `(dx, dgamma, dbeta)`.
    pub(crate) fn backward(&self, dy: &Array2<f64>) -> Option<(Array2<f64>, Array1<f64>, Array1<f64>)> {
        let BnCache { x_hat, inv_std } = self.cache.as_ref()?;
        let n = dy.nrows() as f64;
        let dbeta = dy.sum_axis(Axis(0));
        let dgamma = (dy * x_hat).sum_axis(Axis(0));
        let dx_hat = dy * &self.gamma;
        let sum_dx_hat = dx_hat.sum_axis(Axis(0));
        let sum_dx_hat_xhat = (&dx_hat * x_hat).sum_axis(Axis(0));
        let dx = ((&dx_hat * n) - &sum_dx_hat - &(x_hat * &sum_dx_hat_xhat)) * &(inv_std / n);
        Some((dx, dgamma, dbeta))
    }

    pub(crate) fn clear(&mut self) {
        self.cache = None;
    }
}

#[derive(Debug, Clone)]
pub struct LeakyReluLayer {
    pub slope: f64,
    input: Option<Array2<f64>>,
}

impl LeakyReluLayer {
    pub fn new(slope: f64) -> Self {
        assert!(slope > 0.0 && slope < 1.0, "LeakyReLU slope must lie in (0, 1)");
        LeakyReluLayer { slope, input: None }
    }

    pub(crate) fn forward(&mut self, x: ArrayView2<f64>, mode: Mode) -> Array2<f64> {
        if mode == Mode::Train {
            self.input = Some(x.to_owned());
        }
        self.infer(x)
    }

    pub(crate) fn infer(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.mapv(|v| leaky_relu(v, self.slope))
    }

    pub(crate) fn backward(&self, dy: &Array2<f64>) -> Option<Array2<f64>> {
        let x = self.input.as_ref()?;
        let slope = self.slope;
        let mut dx = dy.clone();
        dx.zip_mut_with(x, |d, &xi| *d *= leaky_relu_grad(xi, slope));
        Some(dx)
    }

    pub(crate) fn clear(&mut self) {
        self.input = None;
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    LeakyRelu(LeakyReluLayer),
}

/// Serializable snapshot of a layer; parameter matrices are flattened
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerState {
    Dense {
        n_in: usize,
        n_out: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
    },
    BatchNorm {
        width: usize,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        momentum: f64,
        eps: f64,
    },
    LeakyRelu {
        slope: f64,
    },
}

impl Layer {
    pub fn state(&self) -> LayerState {
        match self {
            Layer::Dense(d) => LayerState::Dense {
                n_in: d.n_in(),
                n_out: d.n_out(),
                weights: d.weights.iter().copied().collect(),
                biases: d.biases.to_vec(),
            },
            Layer::BatchNorm(b) => LayerState::BatchNorm {
                width: b.width(),
                gamma: b.gamma.to_vec(),
                beta: b.beta.to_vec(),
                running_mean: b.running_mean.to_vec(),
                running_var: b.running_var.to_vec(),
                momentum: b.momentum,
                eps: b.eps,
            },
            Layer::LeakyRelu(l) => LayerState::LeakyRelu { slope: l.slope },
        }
    }

    pub fn from_state(state: &LayerState) -> Result<Self, String> {
        let check = |what: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(format!("{what}: {got} values, expected {want}"))
            }
        };
        Ok(match state {
            LayerState::Dense {
                n_in,
                n_out,
                weights,
                biases,
            } => {
                check("dense weights", weights.len(), n_in * n_out)?;
                check("dense biases", biases.len(), *n_out)?;
                let w = Array2::from_shape_vec((*n_out, *n_in), weights.clone()).map_err(|e| e.to_string())?;
                Layer::Dense(DenseLayer::new(w, Array1::from(biases.clone())))
            }
            LayerState::BatchNorm {
                width,
                gamma,
                beta,
                running_mean,
                running_var,
                momentum,
                eps,
            } => {
                for (what, v) in [("gamma", gamma), ("beta", beta), ("running_mean", running_mean), ("running_var", running_var)] {
                    check(what, v.len(), *width)?;
                }
                if running_var.iter().any(|v| *v < 0.0) {
                    return Err("negative running variance".into());
                }
                Layer::BatchNorm(BatchNormLayer {
                    gamma: Array1::from(gamma.clone()),
                    beta: Array1::from(beta.clone()),
                    running_mean: Array1::from(running_mean.clone()),
                    running_var: Array1::from(running_var.clone()),
                    momentum: *momentum,
                    eps: *eps,
                    cache: None,
                })
            }
            LayerState::LeakyRelu { slope } => {
                if !(*slope > 0.0 && *slope < 1.0) {
                    return Err(format!("LeakyReLU slope {slope} outside (0, 1)"));
                }
                Layer::LeakyRelu(LeakyReluLayer::new(*slope))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn leaky_relu_branches() {
        assert_eq!(leaky_relu(2.0, 0.2), 2.0);
        assert!((leaky_relu(-1.0, 0.2) + 0.2).abs() < 1e-16);
        assert_eq!(leaky_relu(0.0, 0.2), 0.0);
        assert_eq!(leaky_relu_grad(0.0, 0.2), 1.0);
        assert_eq!(leaky_relu_grad(-3.0, 0.2), 0.2);
    }

    #[test]
    fn batchnorm_normalizes_wide_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for batch in [8usize, 16, 64] {
            let x = Array2::from_shape_simple_fn((batch, 6), || rng.random_range(-50.0..50.0));
            let bn = BatchNormLayer::new(6);
            let z = bn.normalize_batch(x.view());
            let (mean, var) = BatchNormLayer::batch_stats(z.view());
            let (_, raw_var) = BatchNormLayer::batch_stats(x.view());
            for j in 0..6 {
                assert!(mean[j].abs() <= 1e-7, "mean {}", mean[j]);
                assert!((var[j] - 1.0).abs() <= 1e-6, "var {}", var[j]);
                // exact identity: var(x_hat) = var / (var + eps)
                let expected = raw_var[j] / (raw_var[j] + BN_EPS);
                assert!((var[j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batchnorm_running_stats() {
        let mut bn = BatchNormLayer::new(1);
        let x = array![[1.0], [3.0]];
        bn.forward(x.view(), Mode::Train);
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-15);
        assert!((bn.running_var[0] - (0.9 + 0.1)).abs() < 1e-15);
        assert!(bn.running_var.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn layer_state_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = Layer::Dense(DenseLayer::glorot(3, 4, &mut rng));
        let back = Layer::from_state(&layer.state()).unwrap();
        assert_eq!(back.state(), layer.state());
        let bad = LayerState::Dense {
            n_in: 2,
            n_out: 2,
            weights: vec![0.0; 3],
            biases: vec![0.0; 2],
        };
        assert!(Layer::from_state(&bad).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DenseLayer::glorot(10, 6, &mut rng);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(d.weights.iter().all(|w| w.abs() <= limit));
        assert!(d.biases.iter().all(|b| *b == 0.0));
    }
}
