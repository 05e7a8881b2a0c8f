// SPDX-License-Identifier: Apache-2.0
//! Tabular denoising diffusion: training the noise predictor and generating
//! rows by running the reverse chain.
//!
//! Training pairs are built one step at a time: `x_{t−1}` is drawn in closed
//! form, then a single forward step with fresh noise `ε` gives `x_t`. The
//! network sees `(x_t, t/T)` and estimates that per-step `ε`, which is the
//! noise the reverse update `x_{t−1} = (x_t − √β_t·ε̂)/√(1−β_t)` removes.
//!
//! How the network output maps to `ε̂` is selected by [`NoiseTarget`]. All
//! choices share the same optimum; the default regresses onto the
//! conditional mean of `ε` given `(x₀, x_t)` and lets the network learn only
//! the departure from the standard-normal answer, which keeps targets
//! well-scaled at every step and trains far faster on small tables.

mod model;
mod schedule;

pub use model::{
    reverse_step, sample, train, DenoiserConfig, DiffusionModel, NoiseTarget, Sampler, TrainReport,
    CHECKPOINT_VERSION, STALL_WINDOWS,
};
pub use schedule::{forward_jump, forward_step, linear_schedule, reverse_update, NoiseSchedule, ScheduleSpec};
