// SPDX-License-Identifier: Apache-2.0
use std::path::Path;

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::schedule::{NoiseSchedule, ScheduleSpec};
use crate::error::{Error, Result};
use crate::nn::{mse_loss, AdamState, Mode, Network, NetworkState, Tensor2D, DEFAULT_SLOPE};
use crate::schema::{fit_normalizer, schema_for, Circuit, Dataset, DatasetSchema, NormStats};

pub const CHECKPOINT_VERSION: u32 = 1;

/// What the network is regressed onto for each training pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    /// The network output is the per-step noise and is regressed onto the
    /// sampled `ε` itself.
    Sampled,
    /// The network output `g` is scaled to the per-step noise as
    /// `ε̂ = c_t·g`, `c_t = √β_t/√(1−ᾱ_t)`, and `g` is regressed onto
    /// `E[ε | x₀, x_t]/c_t = (x_t − √ᾱ_t·x₀)/√(1−ᾱ_t)`. Same minimizer for
    /// `ε̂` as `Sampled`, with unit-scale targets at every step.
    Cumulative,
    /// As `Cumulative`, but the network only supplies the correction to
    /// `√(1−ᾱ_t)·x_t`, the exact cumulative-noise predictor for standard
    /// normal data: `ε̂ = c_t·(g + √(1−ᾱ_t)·x_t)`. Same minimizer again; the
    /// network no longer has to synthesize the `t`-dependent slope itself.
    #[default]
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Deterministic inversion `x_{t−1} = (x_t − √β_t·ε̂)/√(1−β_t)`.
    Paper,
    /// The same mean plus posterior noise `σ_t·z`, `σ_t² = β_t(1−ᾱ_{t−1})/(1−ᾱ_t)`.
    #[default]
    Ancestral,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Sampler::Paper),
            "ancestral" => Ok(Sampler::Ancestral),
            other => Err(Error::InvalidConfig(format!("unknown sampler `{other}`"))),
        }
    }
}

/// Consecutive non-improving validation windows tolerated before stopping.
pub const STALL_WINDOWS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserConfig {
    /// Hidden dense layers; `None` picks 5 for up to 19 features, 6 above.
    pub hidden_layers: Option<usize>,
    /// Width of the outermost hidden layers; inner layers halve it twice
    /// towards the bottleneck.
    pub base_width: usize,
    pub slope: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Validation losses are averaged over windows of this many epochs;
    /// training stops once [`STALL_WINDOWS`] consecutive windows fail to
    /// beat the best window mean.
    pub patience: usize,
    pub val_fraction: f64,
    /// Noise replicas per validation row.
    pub val_replicas: usize,
    pub target: NoiseTarget,
    pub seed: u64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig {
            hidden_layers: None,
            base_width: 128,
            slope: DEFAULT_SLOPE,
            lr: 0.0005,
            batch_size: 16,
            max_epochs: 2000,
            patience: 50,
            val_fraction: 0.1,
            val_replicas: 20,
            target: NoiseTarget::default(),
            seed: 0,
        }
    }
}

impl DenoiserConfig {
    pub fn layer_count(&self, n_features: usize) -> usize {
        self.hidden_layers.unwrap_or(if n_features <= 19 { 5 } else { 6 })
    }

    /// Symmetric encoder-decoder widths for 4, 5 or 6 hidden layers.
    pub fn hidden_widths(layers: usize, base: usize) -> Result<Vec<usize>> {
        let (w, h, q) = (base, base / 2, base / 4);
        match layers {
            4 => Ok(vec![w, h, h, w]),
            5 => Ok(vec![w, h, q, h, w]),
            6 => Ok(vec![w, h, q, q, h, w]),
            n => Err(Error::InvalidConfig(format!("hidden layer count must be 4, 5 or 6, got {n}"))),
        }
    }

    pub fn widths_for(&self, n_features: usize) -> Result<Vec<usize>> {
        Self::hidden_widths(self.layer_count(n_features), self.base_width)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.hidden_layers {
            Self::hidden_widths(n, self.base_width)?;
        }
        if self.base_width < 4 {
            return Err(Error::InvalidConfig(format!("base width {} too small", self.base_width)));
        }
        if !(self.slope > 0.0 && self.slope < 1.0) {
            return Err(Error::InvalidConfig(format!("slope {} outside (0, 1)", self.slope)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch size must be at least 2".into()));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidConfig("max_epochs and patience must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.val_fraction) || self.val_replicas == 0 {
            return Err(Error::InvalidConfig("val_fraction must lie in [0, 0.5) and val_replicas be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DiffusionModel {
    schema: DatasetSchema,
    schedule: NoiseSchedule,
    network: Network,
    norm: NormStats,
    config: DenoiserConfig,
    trained: bool,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    circuit: Circuit,
    feature_names: Vec<String>,
    hidden_widths: Vec<usize>,
    schedule: ScheduleSpec,
    config: DenoiserConfig,
    norm: NormStats,
    network: NetworkState,
    trained: bool,
}

impl DiffusionModel {
    /// An untrained model with freshly initialized weights.
    pub fn new(schema: DatasetSchema, schedule: NoiseSchedule, norm: NormStats, config: DenoiserConfig) -> Result<Self> {
        config.validate()?;
        let n = schema.len();
        let widths = config.widths_for(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let network = Network::encoder_decoder(n + 1, &widths, n, config.slope, &mut rng);
        Ok(DiffusionModel {
            schema,
            schedule,
            network,
            norm,
            config,
            trained: false,
        })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn norm(&self) -> &NormStats {
        &self.norm
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn hidden_layers(&self) -> usize {
        self.network.hidden_widths().len()
    }

    /// Predicted per-step noise for standardized rows `x_t` at step `t`.
    pub fn predict_noise(&self, x_t: &Array2<f64>, t: usize) -> Result<Array2<f64>> {
        if !self.trained {
            return Err(Error::UntrainedModel);
        }
        self.schedule.check_step(t)?;
        let input = with_time(x_t, &vec![t as f64 / self.schedule.steps() as f64; x_t.nrows()]);
        let out = self.network.infer_unchecked(input.view());
        let scale = self.step_noise_scale(t);
        Ok(match self.config.target {
            NoiseTarget::Sampled => out,
            NoiseTarget::Cumulative => out * scale,
            NoiseTarget::Residual => (out + x_t * (1.0 - self.schedule.alpha_bar(t)).sqrt()) * scale,
        })
    }

    /// `√β_t/√(1−ᾱ_t)`: per-step noise carried by one unit of cumulative noise.
    pub fn step_noise_scale(&self, t: usize) -> f64 {
        (self.schedule.beta(t) / (1.0 - self.schedule.alpha_bar(t))).sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            circuit: self.schema.circuit,
            feature_names: self.schema.names().iter().map(|s| s.to_string()).collect(),
            hidden_widths: self.network.hidden_widths(),
            schedule: self.schedule.spec(),
            config: self.config.clone(),
            norm: self.norm.clone(),
            network: self.network.state(),
            trained: self.trained,
        };
        Ok(serde_json::to_string_pretty(&ckpt)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(json)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported checkpoint version {}", ckpt.version)));
        }
        let schema = schema_for(ckpt.circuit);
        if schema.names() != ckpt.feature_names {
            return Err(Error::SchemaMismatch("checkpoint feature names differ from the circuit schema".into()));
        }
        let network = Network::from_state(&ckpt.network)?;
        if network.input_width() != schema.len() + 1 || network.output_width() != schema.len() {
            return Err(Error::ShapeMismatch("checkpoint network does not fit its schema".into()));
        }
        Ok(DiffusionModel {
            schema,
            schedule: ckpt.schedule.build()?,
            network,
            norm: ckpt.norm,
            config: ckpt.config,
            trained: ckpt.trained,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}

fn with_time(x: &Array2<f64>, times: &[f64]) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut out = Array2::zeros((n, d + 1));
    out.slice_mut(s![.., ..d]).assign(x);
    for (i, t) in times.iter().enumerate() {
        out[[i, d]] = *t;
    }
    out
}

/// Network inputs and regression targets for a batch of standardized rows.
fn training_pairs<R: Rng + ?Sized>(
    x0: &Array2<f64>,
    schedule: &NoiseSchedule,
    target: NoiseTarget,
    rng: &mut R,
) -> (Array2<f64>, Array2<f64>) {
    let (n, d) = x0.dim();
    let steps = schedule.steps();
    let mut x_t = Array2::zeros((n, d));
    let mut eps_out = Array2::zeros((n, d));
    let mut times = Vec::with_capacity(n);
    for i in 0..n {
        let t = rng.random_range(1..=steps);
        times.push(t as f64 / steps as f64);
        let beta = schedule.beta(t);
        let ab_prev = schedule.alpha_bar(t - 1);
        let ab = schedule.alpha_bar(t);
        for j in 0..d {
            let x = x0[[i, j]];
            let e_prev: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let x_prev = if t == 1 {
                x
            } else {
                ab_prev.sqrt() * x + (1.0 - ab_prev).sqrt() * e_prev
            };
            let xt = (1.0 - beta).sqrt() * x_prev + beta.sqrt() * e;
            x_t[[i, j]] = xt;
            eps_out[[i, j]] = match target {
                NoiseTarget::Sampled => e,
                NoiseTarget::Cumulative => (xt - ab.sqrt() * x) / (1.0 - ab).sqrt(),
                NoiseTarget::Residual => (xt - ab.sqrt() * x) / (1.0 - ab).sqrt() - (1.0 - ab).sqrt() * xt,
            };
        }
    }
    (with_time(&x_t, &times), eps_out)
}

/// Train a denoiser on `real` rows. The normalizer is fitted on the training
/// split; a `val_fraction` slice drives early stopping and the best epoch's
/// parameters are kept.
pub fn train(real: &Dataset, schedule: &NoiseSchedule, config: &DenoiserConfig) -> Result<(DiffusionModel, TrainReport)> {
    config.validate()?;
    let n = real.n_rows();
    let n_val = (n as f64 * config.val_fraction).round() as usize;
    let n_train = n - n_val;
    if n_train < config.batch_size {
        return Err(Error::TooFewRows {
            needed: config.batch_size + n_val,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_da7a);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_set = real.select_rows(train_idx);
    let norm = fit_normalizer(&train_set)?;
    let mut x_train = train_set.into_rows();
    norm.normalize_array(&mut x_train);

    let mut model = DiffusionModel::new(real.schema().clone(), schedule.clone(), norm, config.clone())?;

    // Fixed validation pairs so losses are comparable across epochs.
    let val_pairs = if n_val >= 2 {
        let mut x_val = real.select_rows(val_idx).into_rows();
        model.norm.normalize_array(&mut x_val);
        let reps: Vec<_> = (0..config.val_replicas).map(|_| x_val.view()).collect();
        let stacked = ndarray::concatenate(Axis(0), &reps).expect("equal widths");
        Some(training_pairs(&stacked, schedule, config.target, &mut rng))
    } else {
        None
    };

    let mut adam = AdamState::new(config.lr, &model.network.param_shapes());
    let mut report = TrainReport::default();
    let mut best = (f64::INFINITY, model.network.clone(), 0usize);
    let (mut window_sum, mut stalled) = (0.0, 0usize);
    let mut idx: Vec<usize> = (0..n_train).collect();
    for epoch in 0..config.max_epochs {
        idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for chunk in idx.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let x0 = x_train.select(Axis(0), chunk);
            let (input, target) = training_pairs(&x0, schedule, config.target, &mut rng);
            let pred = model.network.forward(&Tensor2D::new(input)?, Mode::Train)?;
            let (loss, grad) = mse_loss(&pred, &target);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            let grads = model.network.backward(&grad)?;
            adam.step(model.network.params_mut(), &grads)?;
            loss_sum += loss;
            batches += 1;
        }
        model.network.clear_cache();
        report.train_loss.push(loss_sum / batches as f64);
        report.epochs_run = epoch + 1;

        let monitored = match &val_pairs {
            Some((input, target)) => {
                let pred = model.network.infer_unchecked(input.view());
                mse_loss(&pred, target).0
            }
            None => loss_sum / batches as f64,
        };
        if !monitored.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        report.val_loss.push(monitored);
        // Per-epoch validation loss is noisy relative to its slow drift, so
        // early stopping compares window means rather than single epochs.
        window_sum += monitored;
        if (epoch + 1) % config.patience == 0 {
            let mean = window_sum / config.patience as f64;
            window_sum = 0.0;
            if mean < best.0 {
                best = (mean, model.network.clone(), epoch);
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_WINDOWS {
                    break;
                }
            }
        }
    }
    let tail = report.epochs_run % config.patience;
    if tail != 0 && window_sum / (tail as f64) < best.0 {
        best = (f64::NAN, model.network.clone(), report.epochs_run - 1);
    }
    model.network = best.1;
    report.best_epoch = best.2;
    model.trained = true;
    Ok((model, report))
}

/// One deterministic per-step reverse update on standardized rows.
pub fn reverse_step(x_t: &Array2<f64>, t: usize, model: &DiffusionModel) -> Result<Array2<f64>> {
    let eps = model.predict_noise(x_t, t)?;
    let beta = model.schedule.beta(t);
    Ok((x_t - &(eps * beta.sqrt())) / (1.0 - beta).sqrt())
}

/// Generate `n` rows in physical units. Each row draws from its own
/// `(seed, row)` stream, so a row does not depend on `n`.
pub fn sample(model: &DiffusionModel, n: usize, seed: u64, sampler: Sampler) -> Result<Dataset> {
    if !model.trained {
        return Err(Error::UntrainedModel);
    }
    if n == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let d = model.schema.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|row| crate::simulator::row_rng(seed, row)).collect();
    let mut x = Array2::zeros((n, d));
    for (mut row, rng) in x.rows_mut().into_iter().zip(rngs.iter_mut()) {
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    }
    for t in (1..=model.schedule.steps()).rev() {
        x = reverse_step(&x, t, model)?;
        if sampler == Sampler::Ancestral && t > 1 {
            let sigma = model.schedule.posterior_variance(t).sqrt();
            for (mut row, rng) in x.rows_mut().into_iter().zip(rngs.iter_mut()) {
                row.iter_mut().for_each(|v| *v += sigma * rng.sample::<f64, _>(StandardNormal));
            }
        }
    }
    model.norm.denormalize_array(&mut x);
    Dataset::new(model.schema.clone(), x)
}
