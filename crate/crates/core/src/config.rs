// SPDX-License-Identifier: Apache-2.0
//! The single JSON run configuration shared by every pipeline stage.

use crate::diffusion::{DenoiserConfig, Sampler, ScheduleSpec};
use crate::gbr::GbrConfig;
use crate::schema::Circuit;
use crate::simulator::ProcessNominals;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub circuit: Circuit,
    /// Seed of the real training data and of the benchmark's train/test split.
    pub data_seed: u64,
    /// Seed of the denoiser's initialization, batching and noise draws.
    /// Overrides `denoiser.seed`.
    pub train_seed: u64,
    /// Seed of the reverse-chain noise when generating rows.
    pub sample_seed: u64,
    /// Seed of the fresh real rows that generated rows are compared with.
    pub eval_seed: u64,
    pub n_real: usize,
    pub n_synthetic: usize,
    pub schedule: ScheduleSpec,
    pub denoiser: DenoiserConfig,
    pub sampler: Sampler,
    pub gbr: GbrConfig,
    /// Fraction of real rows held out as the benchmark's test set.
    pub test_fraction: f64,
    pub histogram_bins: usize,
    pub nominals: ProcessNominals,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            circuit: Circuit::Not,
            data_seed: 7,
            train_seed: 7,
            sample_seed: 8,
            eval_seed: 99,
            n_real: 500,
            n_synthetic: 500,
            schedule: ScheduleSpec::default(),
            denoiser: DenoiserConfig::default(),
            sampler: Sampler::default(),
            gbr: GbrConfig::default(),
            test_fraction: 0.2,
            histogram_bins: 30,
            nominals: ProcessNominals::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(json).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The denoiser settings with `train_seed` applied.
    pub fn denoiser_config(&self) -> DenoiserConfig {
        DenoiserConfig {
            seed: self.train_seed,
            ..self.denoiser.clone()
        }
    }

    /// Reject anything a later stage would fail on, before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.nominals.validate()?;
        self.schedule
            .build()
            .map_err(|e| Error::InvalidConfig(format!("schedule: {e}")))?;
        self.denoiser.validate()?;
        self.gbr.validate()?;
        if self.n_synthetic == 0 {
            return Err(Error::InvalidConfig("n_synthetic must be positive".into()));
        }
        if self.histogram_bins < 2 {
            return Err(Error::InvalidConfig("histogram_bins must be at least 2".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("test_fraction {} outside (0, 1)", self.test_fraction)));
        }
        // The denoiser trains on the benchmark's train split as well as on
        // the full real set, so the smaller of the two must suffice.
        let n_train_split = self.n_real - (self.n_real as f64 * self.test_fraction).round() as usize;
        let n_fit = n_train_split - (n_train_split as f64 * self.denoiser.val_fraction).round() as usize;
        if n_fit < self.denoiser.batch_size {
            return Err(Error::InvalidConfig(format!(
                "n_real = {} leaves {n_fit} training rows, fewer than batch_size {}",
                self.n_real, self.denoiser.batch_size
            )));
        }
        let n_test = self.n_real - n_train_split;
        if n_test == 0 || n_train_split < 2 * self.gbr.min_samples_leaf {
            return Err(Error::InvalidConfig(format!(
                "n_real = {} is too small for the benchmark split",
                self.n_real
            )));
        }
        Ok(())
    }
}
