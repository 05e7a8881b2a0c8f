// SPDX-License-Identifier: Apache-2.0
//! Hyperparameter and per-circuit studies on simulated data.
//!
//! `cargo run --release --example sweep -- layers=4,5,6 [max_epochs]`
//! `cargo run --release --example sweep -- lr=0.0001,0.0005,0.001,0.005`
//! `cargo run --release --example sweep -- circuit=all`

use circuit_ddpm::config::RunConfig;
use circuit_ddpm::experiments::{run_sweep, write_sweep_csv, write_circuit_mape_csv, Grid};

fn main() -> circuit_ddpm::Result<()> {
    let mut args = std::env::args().skip(1);
    let grid: Grid = args.next().as_deref().unwrap_or("layers=4,5,6").parse()?;
    let mut config = RunConfig::default();
    if let Some(e) = args.next() {
        config.denoiser.max_epochs = e.parse().expect("epoch count");
    }
    if matches!(grid, Grid::Lr(_)) {
        config.circuit = circuit_ddpm::schema::Circuit::And2;
    }
    let rows = run_sweep(&config, &grid)?;
    for r in &rows {
        println!(
            "{}={:<8} {:<10} {} hidden layers, {} epochs: mean MAPE {:.3} %",
            r.param,
            r.value,
            r.circuit.id(),
            r.hidden_layers,
            r.epochs_run,
            r.eval.mean_mape
        );
    }
    match grid {
        Grid::Circuits(_) => write_circuit_mape_csv(&rows, std::io::stdout()),
        _ => write_sweep_csv(&rows, std::io::stdout()),
    }
}
