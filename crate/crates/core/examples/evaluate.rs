// SPDX-License-Identifier: Apache-2.0
//! Generate → train → sample → replay through the simulator for the NOT
//! gate, then export aligned histograms for plotting.
//!
//! `cargo run --release --example evaluate [max_epochs]`

use circuit_ddpm::config::RunConfig;
use circuit_ddpm::eval::export_histograms;
use circuit_ddpm::experiments::train_and_evaluate;

fn main() -> circuit_ddpm::Result<()> {
    let mut config = RunConfig::default();
    if let Some(e) = std::env::args().nth(1) {
        config.denoiser.max_epochs = e.parse().expect("epoch count");
    }
    let outcome = train_and_evaluate(&config)?;
    let report = &outcome.eval_report;
    println!("per-output MAPE against the simulator:");
    for f in &report.mape {
        println!("  {:<18} {:6.3} %", f.name, f.value);
    }
    println!("per-feature KS distance to fresh real rows:");
    for f in &report.ks {
        println!("  {:<18} {:.3}", f.name, f.value);
    }
    println!(
        "nonphysical rows {}, outside the sampling box {}",
        report.nonphysical_rows, report.out_of_range_rows
    );
    let path = std::env::temp_dir().join("not_histograms.csv");
    export_histograms(&outcome.reference, &outcome.generated, config.histogram_bins, &path)?;
    println!("histograms written to {}", path.display());
    Ok(())
}
