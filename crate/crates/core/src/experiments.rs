// SPDX-License-Identifier: Apache-2.0
//! End-to-end drivers built from the library stages: data generation,
//! training, evaluation, the augmentation benchmark, hyperparameter sweeps and
//! the artifact manifest.

use crate::config::RunConfig;
use crate::diffusion::{sample, train, DiffusionModel, TrainReport};
use crate::eval::{evaluate, EvalReport, EvalSettings};
use crate::gbr::{run_benchmark, split_train_test, BenchReport};
use crate::schema::{Circuit, Dataset, FeatureRole};
use crate::simulator::generate_dataset;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Real rows for `config.circuit`, drawn with `data_seed`.
pub fn real_data(config: &RunConfig) -> Result<Dataset> {
    generate_dataset(config.circuit, config.n_real, config.data_seed, &config.nominals)
}

pub fn train_model(config: &RunConfig, real: &Dataset) -> Result<(DiffusionModel, TrainReport)> {
    let schedule = config.schedule.build()?;
    train(real, &schedule, &config.denoiser_config())
}

pub fn eval_settings(config: &RunConfig) -> EvalSettings {
    EvalSettings {
        n: config.n_synthetic,
        sample_seed: config.sample_seed,
        real_seed: config.eval_seed,
        sampler: config.sampler,
    }
}

/// Everything produced by one generate → train → evaluate run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: DiffusionModel,
    pub train_report: TrainReport,
    pub eval_report: EvalReport,
    pub generated: Dataset,
    pub reference: Dataset,
}

pub fn train_and_evaluate(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let real = real_data(config)?;
    let (model, train_report) = train_model(config, &real)?;
    let (eval_report, generated, reference) = evaluate(&model, &config.nominals, &eval_settings(config))?;
    Ok(RunOutcome {
        model,
        train_report,
        eval_report,
        generated,
        reference,
    })
}

/// Output column names of `data`, in schema order.
pub fn output_names(data: &Dataset) -> Vec<String> {
    let schema = data.schema();
    schema
        .indices(FeatureRole::Output)
        .into_iter()
        .map(|i| schema.features[i].name.clone())
        .collect()
}

/// Split the real rows, train the denoiser on the training part only, and
/// compare GBR with and without the generated rows on every output.
pub fn augmentation_benchmark(config: &RunConfig) -> Result<BenchReport> {
    config.validate()?;
    let real = real_data(config)?;
    let (train_set, test_set) = split_train_test(&real, config.test_fraction, config.data_seed)?;
    let (model, _) = train_model(config, &train_set)?;
    let synthetic = sample(&model, config.n_synthetic, config.sample_seed, config.sampler)?;
    let names = output_names(&real);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    run_benchmark(&train_set, &synthetic, &test_set, &names, &config.gbr, config.data_seed)
}

/// One axis of a hyperparameter study.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Layers(Vec<usize>),
    Lr(Vec<f64>),
    Circuits(Vec<Circuit>),
}

impl Grid {
    pub fn name(&self) -> &'static str {
        match self {
            Grid::Layers(_) => "layers",
            Grid::Lr(_) => "lr",
            Grid::Circuits(_) => "circuit",
        }
    }

    fn len(&self) -> usize {
        match self {
            Grid::Layers(v) => v.len(),
            Grid::Lr(v) => v.len(),
            Grid::Circuits(v) => v.len(),
        }
    }

    /// The config for point `i` and the point's label.
    fn point(&self, base: &RunConfig, i: usize) -> (RunConfig, String) {
        let mut config = base.clone();
        let label = match self {
            Grid::Layers(v) => {
                config.denoiser.hidden_layers = Some(v[i]);
                v[i].to_string()
            }
            Grid::Lr(v) => {
                config.denoiser.lr = v[i];
                v[i].to_string()
            }
            Grid::Circuits(v) => {
                config.circuit = v[i];
                v[i].id().to_string()
            }
        };
        (config, label)
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// `layers=4,5,6`, `lr=0.0001,0.0005`, `circuit=all` or
    /// `circuit=not,nand2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(format!("grid `{s}`: {msg}"));
        let (key, values) = s.split_once('=').ok_or_else(|| bad("expected key=v1,v2,...".into()))?;
        let items: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if items.is_empty() {
            return Err(bad("no values".into()));
        }
        let grid = match key.trim() {
            "layers" => Grid::Layers(
                items
                    .iter()
                    .map(|v| v.parse().map_err(|_| bad(format!("`{v}` is not a layer count"))))
                    .collect::<Result<_>>()?,
            ),
            "lr" => Grid::Lr(
                items
                    .iter()
                    .map(|v| v.parse().map_err(|_| bad(format!("`{v}` is not a number"))))
                    .collect::<Result<_>>()?,
            ),
            "circuit" if items == ["all"] => Grid::Circuits(Circuit::ALL.to_vec()),
            "circuit" => Grid::Circuits(items.iter().map(|v| v.parse()).collect::<Result<_>>()?),
            other => return Err(bad(format!("unknown parameter `{other}`"))),
        };
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub circuit: Circuit,
    pub hidden_layers: usize,
    pub lr: f64,
    pub epochs_run: usize,
    pub eval: EvalReport,
}

/// Run every grid point with otherwise identical seeds and settings. Each
/// point is validated before any training starts.
pub fn run_sweep(base: &RunConfig, grid: &Grid) -> Result<Vec<SweepRow>> {
    let points: Vec<(RunConfig, String)> = (0..grid.len()).map(|i| grid.point(base, i)).collect();
    for (config, _) in &points {
        config.validate()?;
    }
    points
        .into_iter()
        .map(|(config, value)| {
            let outcome = train_and_evaluate(&config)?;
            Ok(SweepRow {
                param: grid.name().to_string(),
                value,
                circuit: config.circuit,
                hidden_layers: outcome.model.hidden_layers(),
                lr: config.denoiser.lr,
                epochs_run: outcome.train_report.epochs_run,
                eval: outcome.eval_report,
            })
        })
        .collect()
}

/// Long-form sweep table: one row per grid point and output feature, plus
/// the point's average.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["param", "value", "circuit", "hidden_layers", "lr", "epochs_run", "feature", "mape_pct"])?;
    for row in rows {
        let prefix = [
            row.param.clone(),
            row.value.clone(),
            row.circuit.id().to_string(),
            row.hidden_layers.to_string(),
            row.lr.to_string(),
            row.epochs_run.to_string(),
        ];
        let features = row
            .eval
            .mape
            .iter()
            .map(|f| (f.name.as_str(), f.value))
            .chain(std::iter::once(("mean", row.eval.mean_mape)));
        for (name, value) in features {
            let mut rec = prefix.to_vec();
            rec.push(name.to_string());
            rec.push(format!("{value:e}"));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}

/// Per-circuit MAPE with columns A–F for (lh, hl) × nodes (a, b, c); cells
/// for nodes a circuit lacks are left blank.
pub fn write_circuit_mape_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "A", "B", "C", "D", "E", "F", "mean"])?;
    for row in rows {
        let mut rec = vec![row.circuit.display_name().to_string()];
        for k in 0..6 {
            rec.push(row.eval.mape.get(k).map(|f| format!("{:.4}", f.value)).unwrap_or_default());
        }
        rec.push(format!("{:.4}", row.eval.mean_mape));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<table csv>", e))?;
    Ok(())
}

/// Hash, seeds and producing command of one output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub command: String,
    pub sha256: String,
    pub seeds: BTreeMap<String, u64>,
}

/// `manifest.json`: every artifact in an output directory, keyed by file
/// name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Add or refresh entries for `files` in the manifest of `dir`, keeping
/// entries written by earlier commands.
pub fn record_artifacts(dir: &Path, command: &str, seeds: &[(&str, u64)], files: &[&Path]) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let mut manifest = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts: BTreeMap::new(),
        },
        Err(e) => return Err(Error::io(&path, e)),
    };
    manifest.version = env!("CARGO_PKG_VERSION").to_string();
    for file in files {
        let name = file
            .strip_prefix(dir)
            .unwrap_or(file)
            .to_string_lossy()
            .into_owned();
        manifest.artifacts.insert(
            name,
            ArtifactEntry {
                command: command.to_string(),
                sha256: sha256_file(file)?,
                seeds: seeds.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            },
        );
    }
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("layers=4,5,6".parse::<Grid>().unwrap(), Grid::Layers(vec![4, 5, 6]));
        assert_eq!("lr=0.0001, 0.0005".parse::<Grid>().unwrap(), Grid::Lr(vec![0.0001, 0.0005]));
        assert_eq!("circuit=all".parse::<Grid>().unwrap(), Grid::Circuits(Circuit::ALL.to_vec()));
        assert_eq!(
            "circuit=not,full-adder".parse::<Grid>().unwrap(),
            Grid::Circuits(vec![Circuit::Not, Circuit::FullAdder])
        );
        for bad in ["layers", "layers=", "layers=x", "depth=3", "circuit=nand9"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sweep_points_share_seeds() {
        let base = RunConfig::default();
        let (c, label) = Grid::Layers(vec![4, 6]).point(&base, 1);
        assert_eq!(label, "6");
        assert_eq!(c.denoiser.hidden_layers, Some(6));
        assert_eq!((c.data_seed, c.train_seed, c.sample_seed), (base.data_seed, base.train_seed, base.sample_seed));
    }

    #[test]
    fn manifest_merges_entries() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        std::fs::write(&a, "hello").unwrap();
        std::fs::write(&b, "world").unwrap();
        record_artifacts(dir.path(), "one", &[("seed", 1)], &[&a]).unwrap();
        let m = record_artifacts(dir.path(), "two", &[], &[&b]).unwrap();
        assert_eq!(m.artifacts.len(), 2);
        assert_eq!(
            m.artifacts["a.txt"].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert_eq!(m.artifacts["a.txt"].command, "one");
    }
}
