// SPDX-License-Identifier: Apache-2.0
//! Gradient-boosted regression of NOT-gate delays with and without generated
//! training rows, scored on held-out real rows.
//!
//! `cargo run --release --example augmentation_benchmark [max_epochs]`

use circuit_ddpm::config::RunConfig;
use circuit_ddpm::experiments::augmentation_benchmark;

fn main() -> circuit_ddpm::Result<()> {
    let mut config = RunConfig::default();
    if let Some(e) = std::env::args().nth(1) {
        config.denoiser.max_epochs = e.parse().expect("epoch count");
    }
    let report = augmentation_benchmark(&config)?;
    println!(
        "{} real train rows, {} generated rows, {} real test rows",
        report.n_train, report.n_synthetic, report.n_test
    );
    println!("{:<16} {:>8} {:>8} {:>11} {:>11} {:>8}", "target", "R2 real", "R2 aug", "MAE real", "MAE aug", "MAE gain");
    for t in &report.targets {
        println!(
            "{:<16} {:>8.4} {:>8.4} {:>11.3e} {:>11.3e} {:>7.2}%",
            t.target, t.real.r2, t.augmented.r2, t.real.mae, t.augmented.mae, t.improvement.mae
        );
    }
    report.write_csv(std::io::stdout())?;
    Ok(())
}
