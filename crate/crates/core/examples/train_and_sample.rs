// SPDX-License-Identifier: Apache-2.0
//! Train a denoiser on 500 simulated NOT-gate rows, save the checkpoint and
//! draw new rows with both reverse samplers.
//!
//! `cargo run --release --example train_and_sample [max_epochs]`

use circuit_ddpm::diffusion::{sample, train, DenoiserConfig, DiffusionModel, Sampler, ScheduleSpec};
use circuit_ddpm::schema::{Circuit, FeatureRole};
use circuit_ddpm::simulator::{generate_dataset, ProcessNominals};

fn main() -> circuit_ddpm::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(2000, |s| s.parse().expect("epoch count"));
    let real = generate_dataset(Circuit::Not, 500, 7, &ProcessNominals::default())?;
    let schedule = ScheduleSpec::default().build()?;
    let config = DenoiserConfig {
        max_epochs: epochs,
        seed: 7,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let (model, report) = train(&real, &schedule, &config)?;
    println!(
        "trained {} hidden layers {:?} for {} epochs in {:.1?}; final validation loss {:.4}",
        model.hidden_layers(),
        model.network().hidden_widths(),
        report.epochs_run,
        start.elapsed(),
        report.val_loss.last().copied().unwrap_or(f64::NAN)
    );

    let path = std::env::temp_dir().join("not_model.json");
    model.save(&path)?;
    let model = DiffusionModel::load(&path)?;
    println!("checkpoint round-tripped through {}", path.display());

    let real_out = real.columns(FeatureRole::Output);
    let spread = |a: &ndarray::Array2<f64>| a.std_axis(ndarray::Axis(0), 0.0).mapv(|v| v * 1e12);
    println!("real       delay std (ps): {:.3}", spread(&real_out));
    for sampler in [Sampler::Ancestral, Sampler::Paper] {
        let rows = sample(&model, 500, 8, sampler)?;
        println!("{:<10} delay std (ps): {:.3}", format!("{sampler:?}"), spread(&rows.columns(FeatureRole::Output)));
    }
    Ok(())
}
