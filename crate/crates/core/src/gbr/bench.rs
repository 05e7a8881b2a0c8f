// SPDX-License-Identifier: Apache-2.0
//! Real-only versus real-plus-synthetic training, scored on held-out real
//! rows.

use super::{fit_gbr, regression_metrics, GbrConfig, RegressionMetrics};
use crate::schema::{Dataset, FeatureRole};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::Write;

/// Signed percentage improvements of the augmented model over the real-only
/// one. Positive is better for every field: R² is compared as a gain, the
/// error metrics as a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub r2: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
}

impl Improvement {
    fn between(real: &RegressionMetrics, aug: &RegressionMetrics) -> Self {
        let gain = |r: f64, a: f64| if r == 0.0 { 0.0 } else { 100.0 * (a - r) / r.abs() };
        let drop = |r: f64, a: f64| if r == 0.0 { 0.0 } else { 100.0 * (r - a) / r.abs() };
        Improvement {
            r2: gain(real.r2, aug.r2),
            mse: drop(real.mse, aug.mse),
            rmse: drop(real.rmse, aug.rmse),
            mae: drop(real.mae, aug.mae),
            mape: drop(real.mape, aug.mape),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetBench {
    pub target: String,
    pub real: RegressionMetrics,
    pub augmented: RegressionMetrics,
    pub improvement: Improvement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub circuit: String,
    pub n_train: usize,
    pub n_synthetic: usize,
    pub n_test: usize,
    pub config: GbrConfig,
    pub seed: u64,
    pub targets: Vec<TargetBench>,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per metric; columns grouped as real, augmented, improvement,
    /// each with one column per target.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["metric".to_string()];
        for group in ["real", "augmented", "improvement_pct"] {
            header.extend(self.targets.iter().map(|t| format!("{group}_{}", t.target)));
        }
        w.write_record(&header)?;
        type Pick = fn(&RegressionMetrics) -> f64;
        type PickImp = fn(&Improvement) -> f64;
        let rows: [(&str, Pick, PickImp); 5] = [
            ("r2", |m| m.r2, |i| i.r2),
            ("mse", |m| m.mse, |i| i.mse),
            ("rmse", |m| m.rmse, |i| i.rmse),
            ("mae", |m| m.mae, |i| i.mae),
            ("mape", |m| m.mape, |i| i.mape),
        ];
        for (name, pick, pick_imp) in rows {
            let mut rec = vec![name.to_string()];
            rec.extend(self.targets.iter().map(|t| format!("{:e}", pick(&t.real))));
            rec.extend(self.targets.iter().map(|t| format!("{:e}", pick(&t.augmented))));
            rec.extend(self.targets.iter().map(|t| format!("{:e}", pick_imp(&t.improvement))));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<bench csv>", e))?;
        Ok(())
    }
}

/// Seeded shuffle, then the last `test_fraction` of rows become the test
/// set.
pub fn split_train_test(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n = data.n_rows();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, test) = order.split_at(n - n_test);
    Ok((data.select_rows(train), data.select_rows(test)))
}

fn row_keys(data: &Dataset) -> impl Iterator<Item = Vec<u64>> + '_ {
    data.rows().rows().into_iter().map(|r| r.iter().map(|v| v.to_bits()).collect())
}

/// Fit one GBR per target on `real_train` and one on `real_train ∪
/// synthetic`, using every input column as a feature, and score both on
/// `real_test`.
pub fn run_benchmark(
    real_train: &Dataset,
    synthetic: &Dataset,
    real_test: &Dataset,
    targets: &[&str],
    config: &GbrConfig,
    seed: u64,
) -> Result<BenchReport> {
    config.validate()?;
    for other in [synthetic, real_test] {
        if other.schema() != real_train.schema() {
            return Err(Error::SchemaMismatch(format!(
                "{} rows cannot be benchmarked against {} rows",
                other.circuit(),
                real_train.circuit()
            )));
        }
    }
    let schema = real_train.schema();
    let outputs = schema.indices(FeatureRole::Output);
    for t in targets {
        match schema.index_of(t) {
            Some(i) if outputs.contains(&i) => {}
            _ => return Err(Error::SchemaMismatch(format!("`{t}` is not an output of {}", schema.circuit))),
        }
    }

    let seen: HashSet<Vec<u64>> = row_keys(real_train).chain(row_keys(synthetic)).collect();
    if let Some(i) = row_keys(real_test).position(|k| seen.contains(&k)) {
        return Err(Error::LeakageDetected(i));
    }

    let augmented = real_train.concat(synthetic)?;
    let x_real = real_train.columns(FeatureRole::Input);
    let x_aug = augmented.columns(FeatureRole::Input);
    let x_test = real_test.columns(FeatureRole::Input);
    let mut results = Vec::with_capacity(targets.len());
    for &name in targets {
        let column = |d: &Dataset| d.column(name).expect("target checked").to_vec();
        let y_test = column(real_test);
        let real_model = fit_gbr(&x_real, &column(real_train), config, seed)?;
        let aug_model = fit_gbr(&x_aug, &column(&augmented), config, seed)?;
        let real = regression_metrics(&y_test, &real_model.predict(&x_test))?;
        let aug = regression_metrics(&y_test, &aug_model.predict(&x_test))?;
        results.push(TargetBench {
            target: name.to_string(),
            real,
            augmented: aug,
            improvement: Improvement::between(&real, &aug),
        });
    }
    Ok(BenchReport {
        circuit: schema.circuit.id().to_string(),
        n_train: real_train.n_rows(),
        n_synthetic: synthetic.n_rows(),
        n_test: real_test.n_rows(),
        config: config.clone(),
        seed,
        targets: results,
    })
}
