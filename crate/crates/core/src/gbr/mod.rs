// SPDX-License-Identifier: Apache-2.0
//! Least-squares gradient-boosted regression trees and the augmentation
//! benchmark that compares training on real rows against real plus
//! synthetic rows.

mod bench;
mod metrics;
mod tree;

pub use bench::{run_benchmark, split_train_test, BenchReport, Improvement, TargetBench};
pub use metrics::{regression_metrics, RegressionMetrics};
pub use tree::{Node, RegressionTree};

use crate::{Error, Result};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use tree::TreeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbrConfig {
    fn default() -> Self {
        GbrConfig {
            n_trees: 200,
            max_depth: 3,
            shrinkage: 0.05,
            min_samples_leaf: 5,
        }
    }
}

impl GbrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig(
                "GBR n_trees, max_depth and min_samples_leaf must be positive".into(),
            ));
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::InvalidConfig(format!("GBR shrinkage {} outside (0, 1]", self.shrinkage)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrModel {
    pub init: f64,
    pub trees: Vec<(RegressionTree, f64)>,
    pub config: GbrConfig,
    pub seed: u64,
}

impl GbrModel {
    pub fn predict_row(&self, x: ArrayView1<f64>) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |acc, (tree, rate)| acc + rate * tree.predict_row(x))
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    /// Predictions using only the first `k` trees.
    pub fn predict_staged(&self, x: &Array2<f64>, k: usize) -> Vec<f64> {
        let trees = &self.trees[..k.min(self.trees.len())];
        x.rows()
            .into_iter()
            .map(|r| trees.iter().fold(self.init, |acc, (t, rate)| acc + rate * t.predict_row(r)))
            .collect()
    }
}

/// Fit a boosted ensemble to `target` over the rows of `features`.
///
/// Split search is exhaustive and ties are broken deterministically, so the
/// fit consumes no randomness; `seed` is recorded on the model so reports can
/// echo it. Boosting stops early once a tree can no longer split, which
/// happens when the residuals are constant.
pub fn fit_gbr(features: &Array2<f64>, target: &[f64], config: &GbrConfig, seed: u64) -> Result<GbrModel> {
    config.validate()?;
    let n = features.nrows();
    if target.len() != n {
        return Err(Error::LengthMismatch(n, target.len()));
    }
    let needed = 2 * config.min_samples_leaf;
    if n < needed || n == 0 {
        return Err(Error::TooFewRows { needed: needed.max(1), got: n });
    }
    if features.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSample("GBR inputs must be finite".into()));
    }
    let init = target.iter().sum::<f64>() / n as f64;
    let mut pred = vec![init; n];
    let params = TreeParams {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
    };
    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        let residual: Vec<f64> = target.iter().zip(&pred).map(|(y, p)| y - p).collect();
        let tree = RegressionTree::fit(features, &residual, params);
        if tree.is_leaf_only() {
            break;
        }
        for (p, row) in pred.iter_mut().zip(features.rows()) {
            *p += config.shrinkage * tree.predict_row(row);
        }
        trees.push((tree, config.shrinkage));
    }
    Ok(GbrModel {
        init,
        trees,
        config: config.clone(),
        seed,
    })
}
