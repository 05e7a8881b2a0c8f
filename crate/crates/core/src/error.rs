// SPDX-License-Identifier: Apache-2.0
//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // Data and schema
    #[error("column `{0}` is constant; cannot standardize")]
    ConstantColumn(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("CSV header does not match any circuit schema: {0}")]
    HeaderMismatch(String),
    #[error("non-numeric cell at row {row}, column {col}: {value:?}")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("row {row} has a non-finite value in column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown circuit `{0}`")]
    UnknownCircuit(String),

    // Simulator
    #[error("sampler produced a nonpositive value for `{0}` 100 times in a row")]
    DegenerateSampler(&'static str),
    #[error("device does not conduct: Vdd = {vdd} V <= Vth_eff = {vth} V")]
    NonconductingDevice { vdd: f64, vth: f64 },
    #[error("invalid PVT sample: {0}")]
    InvalidSample(String),

    // Neural network
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch norm needs at least 2 rows in training mode, got {0}")]
    BatchTooSmall(usize),
    #[error("backward called without a cached training-mode forward pass")]
    NoCachedForward,

    // Diffusion
    #[error("invalid schedule range: {0}")]
    InvalidRange(String),
    #[error("diffusion step {t} outside 1..={max}")]
    StepOutOfRange { t: usize, max: usize },
    #[error("training loss became non-finite at epoch {epoch}; try a smaller learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("model has not been trained")]
    UntrainedModel,

    // Metrics and benchmark
    #[error("reference value at index {0} is zero")]
    ZeroReference(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
    #[error("train and test sets share row {0} of the test set")]
    LeakageDetected(usize),

    // Configuration and serialization
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input or configuration rather than
    /// numerical trouble at run time.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::HeaderMismatch(_)
                | Error::NonNumericCell { .. }
                | Error::UnknownCircuit(_)
                | Error::SchemaMismatch(_)
                | Error::IoFailure { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::InvalidRange(_)
                | Error::TooFewRows { .. }
        )
    }
}
