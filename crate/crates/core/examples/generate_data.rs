// SPDX-License-Identifier: Apache-2.0
//! Simulate Monte-Carlo PVT rows for every circuit and summarize the delays.
//!
//! `cargo run --release --example generate_data [rows] [out_dir]`

use circuit_ddpm::schema::{save_csv, Circuit, FeatureRole};
use circuit_ddpm::simulator::{generate_dataset, ProcessNominals};

fn main() -> circuit_ddpm::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |s| s.parse().expect("row count"));
    let out = args.next();
    let nominals = ProcessNominals::default();
    for circuit in Circuit::ALL {
        let data = generate_dataset(circuit, n, 7, &nominals)?;
        let outputs = data.columns(FeatureRole::Output);
        let mean_ps = outputs.mean().unwrap_or(0.0) * 1e12;
        let max_ps = outputs.iter().copied().fold(0.0, f64::max) * 1e12;
        println!(
            "{:<28} {:>2} features  mean delay {mean_ps:6.2} ps  max {max_ps:6.2} ps",
            circuit.display_name(),
            data.schema().len()
        );
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).map_err(|e| circuit_ddpm::Error::io(dir, e))?;
            save_csv(&data, std::path::Path::new(dir).join(format!("{}.csv", circuit.id())))?;
        }
    }
    Ok(())
}
