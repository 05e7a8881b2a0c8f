// SPDX-License-Identifier: Apache-2.0
//! Small dense-network toolkit: layers, MSE loss, reverse-mode gradients and
//! Adam. Just enough to train the encoder-decoder denoiser.

mod adam;
mod layers;

pub use adam::{adam_step, AdamState};
pub use layers::{
    leaky_relu, leaky_relu_grad, BatchNormLayer, DenseLayer, Layer, LayerState, LeakyReluLayer, BN_EPS,
    BN_MOMENTUM, DEFAULT_SLOPE,
};

use std::ops::Deref;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, caches intermediates for `backward`.
    Train,
    /// Running statistics, no caching.
    Infer,
}

/// A finite, non-empty batch × feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2D(Array2<f64>);

impl Tensor2D {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!("empty tensor {:?}", values.dim())));
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Tensor2D(values))
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl Deref for Tensor2D {
    type Target = Array2<f64>;

    fn deref(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Parameter gradients in the network's parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(Vec<Vec<f64>>);

impl Gradients {
    pub fn as_slices(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl From<Vec<Vec<f64>>> for Gradients {
    fn from(v: Vec<Vec<f64>>) -> Self {
        Gradients(v)
    }
}

/// Mean squared error over all elements and its gradient w.r.t. `pred`.
pub fn mse_loss(pred: &Array2<f64>, target: &Array2<f64>) -> (f64, Array2<f64>) {
    let diff = pred - target;
    let n = diff.len() as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff * (2.0 / n))
}

#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    trained_forward: bool,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<usize> = None;
        for layer in &layers {
            match layer {
                Layer::Dense(d) => {
                    if let Some(w) = width {
                        if w != d.n_in() {
                            return Err(Error::ShapeMismatch(format!("dense layer expects {} inputs after width {w}", d.n_in())));
                        }
                    }
                    width = Some(d.n_out());
                }
                Layer::BatchNorm(b) => {
                    if width.is_some_and(|w| w != b.width()) {
                        return Err(Error::ShapeMismatch(format!("batch norm of width {} after width {width:?}", b.width())));
                    }
                }
                Layer::LeakyRelu(_) => {}
            }
        }
        if width.is_none() {
            return Err(Error::ShapeMismatch("network needs at least one dense layer".into()));
        }
        Ok(Network {
            layers,
            trained_forward: false,
        })
    }

    /// Encoder-decoder MLP: each hidden block is dense → batch norm →
    /// LeakyReLU, followed by a linear output layer.
    pub fn encoder_decoder<R: Rng + ?Sized>(
        n_in: usize,
        hidden: &[usize],
        n_out: usize,
        slope: f64,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::with_capacity(3 * hidden.len() + 1);
        let mut prev = n_in;
        for &w in hidden {
            layers.push(Layer::Dense(DenseLayer::glorot(prev, w, rng)));
            layers.push(Layer::BatchNorm(BatchNormLayer::new(w)));
            layers.push(Layer::LeakyRelu(LeakyReluLayer::new(slope)));
            prev = w;
        }
        layers.push(Layer::Dense(DenseLayer::glorot(prev, n_out, rng)));
        Network::new(layers).expect("widths chain by construction")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.dense_layers().next().map(DenseLayer::n_in).unwrap_or(0)
    }

    pub fn output_width(&self) -> usize {
        self.dense_layers().last().map(DenseLayer::n_out).unwrap_or(0)
    }

    fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    /// Widths of the hidden dense layers.
    pub fn hidden_widths(&self) -> Vec<usize> {
        let dense: Vec<_> = self.dense_layers().collect();
        dense[..dense.len() - 1].iter().map(|d| d.n_out()).collect()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_width() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} columns, network expects {}",
                x.ncols(),
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn forward(&mut self, batch: &Tensor2D, mode: Mode) -> Result<Tensor2D> {
        self.check_input(batch)?;
        match mode {
            Mode::Infer => Tensor2D::new(self.infer_unchecked(batch.view())),
            Mode::Train => {
                if batch.nrows() < 2 && self.layers.iter().any(|l| matches!(l, Layer::BatchNorm(_))) {
                    return Err(Error::BatchTooSmall(batch.nrows()));
                }
                let mut x = batch.0.clone();
                for layer in &mut self.layers {
                    x = match layer {
                        Layer::Dense(d) => d.forward(x.view(), mode),
                        Layer::BatchNorm(b) => b.forward(x.view(), mode),
                        Layer::LeakyRelu(l) => l.forward(x.view(), mode),
                    };
                }
                self.trained_forward = true;
                Tensor2D::new(x)
            }
        }
    }

    /// Inference-mode forward pass; a pure function of parameters, running
    /// statistics and input.
    pub fn infer(&self, batch: &Tensor2D) -> Result<Tensor2D> {
        self.check_input(batch)?;
        Tensor2D::new(self.infer_unchecked(batch.view()))
    }

    pub(crate) fn infer_unchecked(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        let mut x = batch.to_owned();
        for layer in &self.layers {
            x = match layer {
                Layer::Dense(d) => d.infer(x.view()),
                Layer::BatchNorm(b) => b.infer(x.view()),
                Layer::LeakyRelu(l) => l.infer(x.view()),
            };
        }
        x
    }

    /// Reverse-mode pass from `dL/d(output)` of the last training-mode
    /// forward call.
    pub fn backward(&mut self, loss_grad: &Array2<f64>) -> Result<Gradients> {
        if !self.trained_forward {
            return Err(Error::NoCachedForward);
        }
        if loss_grad.ncols() != self.output_width() {
            return Err(Error::ShapeMismatch(format!(
                "loss gradient has {} columns, output width is {}",
                loss_grad.ncols(),
                self.output_width()
            )));
        }
        let mut grads: Vec<Vec<f64>> = Vec::new();
        let mut dy = loss_grad.clone();
        for layer in self.layers.iter().rev() {
            dy = match layer {
                Layer::Dense(d) => {
                    let (dx, dw, db) = d.backward(&dy).ok_or(Error::NoCachedForward)?;
                    grads.push(db.to_vec());
                    grads.push(dw.iter().copied().collect());
                    dx
                }
                Layer::BatchNorm(b) => {
                    let (dx, dgamma, dbeta) = b.backward(&dy).ok_or(Error::NoCachedForward)?;
                    grads.push(dbeta.to_vec());
                    grads.push(dgamma.to_vec());
                    dx
                }
                Layer::LeakyRelu(l) => l.backward(&dy).ok_or(Error::NoCachedForward)?,
            };
        }
        grads.reverse();
        Ok(Gradients(grads))
    }

    /// Drop cached activations from the last training-mode pass.
    pub fn clear_cache(&mut self) {
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => d.clear(),
                Layer::BatchNorm(b) => b.clear(),
                Layer::LeakyRelu(l) => l.clear(),
            }
        }
        self.trained_forward = false;
    }

    /// Trainable tensors in order: per dense layer weights then biases, per
    /// batch norm gamma then beta.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice().expect("standard layout"));
                    out.push(d.biases.as_slice().expect("contiguous"));
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_slice().expect("contiguous"));
                    out.push(b.beta.as_slice().expect("contiguous"));
                }
                Layer::LeakyRelu(_) => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice_mut().expect("standard layout"));
                    out.push(d.biases.as_slice_mut().expect("contiguous"));
                }
                Layer::BatchNorm(b) => {
                    out.push(b.gamma.as_slice_mut().expect("contiguous"));
                    out.push(b.beta.as_slice_mut().expect("contiguous"));
                }
                Layer::LeakyRelu(_) => {}
            }
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.params().iter().map(|p| p.len()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().sum()
    }

    pub fn state(&self) -> NetworkState {
        NetworkState {
            layers: self.layers.iter().map(Layer::state).collect(),
        }
    }

    pub fn from_state(state: &NetworkState) -> Result<Self> {
        let layers = state
            .layers
            .iter()
            .map(Layer::from_state)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(Error::ShapeMismatch)?;
        Network::new(layers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub layers: Vec<LayerState>,
}
