// SPDX-License-Identifier: Apache-2.0
//! Command-line driver: generate data, train, sample, evaluate, benchmark and
//! sweep. Exit codes: 0 success, 2 usage or configuration error, 3 runtime
//! failure.

use circuit_ddpm::config::RunConfig;
use circuit_ddpm::diffusion::{sample, DiffusionModel, Sampler};
use circuit_ddpm::eval::{evaluate, evaluate_dataset, export_histograms};
use circuit_ddpm::experiments::{
    augmentation_benchmark, eval_settings, real_data, record_artifacts, run_sweep, train_model, write_sweep_csv,
    write_circuit_mape_csv, Grid,
};
use circuit_ddpm::schema::{load_csv, save_csv, Circuit};
use circuit_ddpm::simulator::generate_dataset;
use circuit_ddpm::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "circuit-ddpm", version, about = "Diffusion-model synthesis of circuit delay data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Monte-Carlo rows for one circuit and write `data.csv`.
    GenData {
        #[command(flatten)]
        config: ConfigArg,
        /// Circuit id, e.g. `not`, `nand2`, `full_adder` [default: not].
        #[arg(long)]
        circuit: Option<Circuit>,
        /// Number of rows [default: 500].
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: Option<u64>,
        /// Data seed [default: 7].
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a denoiser on a CSV and write the checkpoint JSON.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Training CSV written by `gen-data`.
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint path; `train_report.json` is written beside it.
        #[arg(long)]
        out_model: PathBuf,
        /// Hidden layers [default: 5 for up to 19 features, else 6].
        #[arg(long)]
        layers: Option<usize>,
        /// Adam learning rate [default: 0.0005].
        #[arg(long)]
        lr: Option<f64>,
        /// Maximum epochs [default: 2000].
        #[arg(long)]
        epochs: Option<usize>,
        /// Training seed [default: 7].
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate rows from a checkpoint and write `samples.csv`.
    Sample {
        #[command(flatten)]
        config: ConfigArg,
        /// Checkpoint written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Number of rows [default: 500].
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: Option<u64>,
        /// Sampling seed [default: 8].
        #[arg(long)]
        seed: Option<u64>,
        /// Reverse update: `ancestral` or `paper` (deterministic) [default: ancestral].
        #[arg(long)]
        sampler: Option<Sampler>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score generated rows against the simulator; writes `eval.json` and
    /// `histograms.csv`.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        /// Checkpoint to sample from.
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        model: Option<PathBuf>,
        /// Score an existing CSV instead of sampling a model.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Rows to generate [default: 500].
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: Option<u64>,
        /// Sampling seed [default: 8].
        #[arg(long)]
        seed: Option<u64>,
        /// Seed of the fresh real rows used for the distribution comparison.
        #[arg(long)]
        real_seed: Option<u64>,
        /// Reverse update: `ancestral` or `paper` [default: ancestral].
        #[arg(long)]
        sampler: Option<Sampler>,
        /// Histogram bins per feature [default: 30].
        #[arg(long)]
        bins: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// GBR with and without generated rows; writes `bench.json` and
    /// `bench.csv`.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        /// Circuit id [default: not].
        #[arg(long)]
        circuit: Option<Circuit>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Hyperparameter or per-circuit study, e.g. `--grid layers=4,5,6`,
    /// `--grid lr=0.0001,0.0005,0.001,0.005`, `--grid circuit=all`.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// `layers=L1,L2,..`, `lr=R1,R2,..` or `circuit=all|id1,id2,..`.
        #[arg(long)]
        grid: Grid,
        /// Circuit for layer and learning-rate grids [default: not].
        #[arg(long)]
        circuit: Option<Circuit>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn checked(config: RunConfig) -> Result<RunConfig> {
    config.validate()?;
    Ok(config)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData { config, circuit, n, seed, out } => {
            let mut c = config.load()?;
            c.circuit = circuit.unwrap_or(c.circuit);
            c.n_real = n.map_or(c.n_real, |n| n as usize);
            c.data_seed = seed.unwrap_or(c.data_seed);
            c.nominals.validate()?;
            if c.n_real == 0 {
                return Err(Error::InvalidConfig("--n must be positive".into()));
            }
            create_dir(&out)?;
            let data = real_data(&c)?;
            let path = out.join("data.csv");
            save_csv(&data, &path)?;
            record_artifacts(&out, "gen-data", &[("data_seed", c.data_seed)], &[&path])?;
            eprintln!("wrote {} rows x {} columns to {}", data.n_rows(), data.schema().len(), path.display());
        }
        Command::Train { config, data, out_model, layers, lr, epochs, seed } => {
            let mut c = config.load()?;
            c.denoiser.hidden_layers = layers.or(c.denoiser.hidden_layers);
            c.denoiser.lr = lr.unwrap_or(c.denoiser.lr);
            c.denoiser.max_epochs = epochs.unwrap_or(c.denoiser.max_epochs);
            c.train_seed = seed.unwrap_or(c.train_seed);
            c.denoiser.validate()?;
            c.schedule.build().map_err(|e| Error::InvalidConfig(format!("schedule: {e}")))?;
            let real = load_csv(&data)?;
            let (model, report) = train_model(&c, &real)?;
            let dir = out_model.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            create_dir(dir)?;
            model.save(&out_model)?;
            let report_path = dir.join("train_report.json");
            write_text(&report_path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            record_artifacts(dir, "train", &[("train_seed", c.train_seed)], &[&out_model, &report_path])?;
            eprintln!(
                "trained {} hidden layers for {} epochs (best window ends at epoch {}); wrote {}",
                model.hidden_layers(),
                report.epochs_run,
                report.best_epoch + 1,
                out_model.display()
            );
        }
        Command::Sample { config, model, n, seed, sampler, out } => {
            let c = config.load()?;
            let n = n.map_or(c.n_synthetic, |n| n as usize);
            let seed = seed.unwrap_or(c.sample_seed);
            let model = DiffusionModel::load(&model)?;
            create_dir(&out)?;
            let rows = sample(&model, n, seed, sampler.unwrap_or(c.sampler))?;
            let path = out.join("samples.csv");
            save_csv(&rows, &path)?;
            record_artifacts(&out, "sample", &[("sample_seed", seed)], &[&path])?;
            eprintln!("wrote {n} generated rows to {}", path.display());
        }
        Command::Eval { config, model, data, n, seed, real_seed, sampler, bins, out } => {
            let mut c = config.load()?;
            c.n_synthetic = n.map_or(c.n_synthetic, |n| n as usize);
            c.sample_seed = seed.unwrap_or(c.sample_seed);
            c.eval_seed = real_seed.unwrap_or(c.eval_seed);
            c.sampler = sampler.unwrap_or(c.sampler);
            c.histogram_bins = bins.unwrap_or(c.histogram_bins);
            let c = checked(c)?;
            let (report, generated, reference) = match (model, data) {
                (Some(model), _) => evaluate(&DiffusionModel::load(&model)?, &c.nominals, &eval_settings(&c))?,
                (None, Some(data)) => {
                    let generated = load_csv(&data)?;
                    let reference =
                        generate_dataset(generated.circuit(), generated.n_rows(), c.eval_seed, &c.nominals)?;
                    (evaluate_dataset(&generated, &reference, &c.nominals)?, generated, reference)
                }
                (None, None) => unreachable!("clap requires one of --model and --data"),
            };
            create_dir(&out)?;
            let json_path = out.join("eval.json");
            write_text(&json_path, &(report.to_json()? + "\n"))?;
            let hist_path = out.join("histograms.csv");
            export_histograms(&reference, &generated, c.histogram_bins, &hist_path)?;
            record_artifacts(
                &out,
                "eval",
                &[("sample_seed", c.sample_seed), ("eval_seed", c.eval_seed)],
                &[&json_path, &hist_path],
            )?;
            for f in &report.mape {
                eprintln!("{:<20} MAPE {:>8.4} %", f.name, f.value);
            }
            eprintln!("mean MAPE {:.4} %; wrote {}", report.mean_mape, json_path.display());
        }
        Command::Bench { config, circuit, out } => {
            let mut c = config.load()?;
            c.circuit = circuit.unwrap_or(c.circuit);
            let c = checked(c)?;
            let report = augmentation_benchmark(&c)?;
            create_dir(&out)?;
            let json_path = out.join("bench.json");
            write_text(&json_path, &(report.to_json()? + "\n"))?;
            let csv_path = out.join("bench.csv");
            report.write_csv(create_file(&csv_path)?)?;
            record_artifacts(&out, "bench", &seeds(&c), &[&json_path, &csv_path])?;
            for t in &report.targets {
                eprintln!(
                    "{:<20} R2 {:.4} -> {:.4}  MAE {:.3e} -> {:.3e}",
                    t.target, t.real.r2, t.augmented.r2, t.real.mae, t.augmented.mae
                );
            }
        }
        Command::Sweep { config, grid, circuit, out } => {
            let mut c = config.load()?;
            c.circuit = circuit.unwrap_or(c.circuit);
            let c = checked(c)?;
            let rows = run_sweep(&c, &grid)?;
            create_dir(&out)?;
            let stem = format!("sweep_{}", grid.name());
            let csv_path = out.join(format!("{stem}.csv"));
            write_sweep_csv(&rows, create_file(&csv_path)?)?;
            let json_path = out.join(format!("{stem}.json"));
            write_text(&json_path, &(serde_json::to_string_pretty(&rows)? + "\n"))?;
            let mut files = vec![csv_path, json_path];
            if let Grid::Circuits(_) = grid {
                let table = out.join("circuit_mape.csv");
                write_circuit_mape_csv(&rows, create_file(&table)?)?;
                files.push(table);
            }
            let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
            record_artifacts(&out, "sweep", &seeds(&c), &refs)?;
            for r in &rows {
                eprintln!("{}={:<10} {:<10} mean MAPE {:.4} %", r.param, r.value, r.circuit.id(), r.eval.mean_mape);
            }
        }
    }
    Ok(())
}

fn seeds(c: &RunConfig) -> [(&'static str, u64); 4] {
    [
        ("data_seed", c.data_seed),
        ("train_seed", c.train_seed),
        ("sample_seed", c.sample_seed),
        ("eval_seed", c.eval_seed),
    ]
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
