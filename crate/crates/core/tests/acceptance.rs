// SPDX-License-Identifier: Apache-2.0
//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the report is always
//! printed.

mod common;

use circuit_ddpm::config::RunConfig;
use circuit_ddpm::diffusion::{forward_step, linear_schedule, reverse_update};
use circuit_ddpm::eval::{evaluate_dataset, ks_statistic, mape, EvalReport};
use circuit_ddpm::experiments::{augmentation_benchmark, real_data, train_and_evaluate};
use circuit_ddpm::gbr::{fit_gbr, regression_metrics, GbrConfig, Node};
use circuit_ddpm::simulator::generate_dataset;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::{Duration, Instant};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn forward_reverse_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let magnitude: f64 = rng.random_range(0.1..10.0);
        let x = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        let beta: f64 = rng.random_range(1e-4..0.5);
        let eps: f64 = rng.sample(StandardNormal);
        let back = reverse_update(forward_step(x, beta, eps), beta, eps);
        worst = worst.max((back - x).abs() / x.abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("max relative error {worst:.2e} over 10000 triples in {elapsed:.2?}"),
    )
}

fn schedule_fidelity() -> Verdict {
    let s = linear_schedule(1000, 0.001, 0.02).expect("valid schedule");
    let ends = s.beta(1) == 0.001 && s.beta(1000) == 0.02;
    let decreasing = s.alpha_bars().windows(2).all(|w| w[1] < w[0]);
    verdict(
        ends && decreasing,
        format!(
            "beta_1 = {}, beta_T = {}, alpha_bar strictly decreasing: {decreasing}",
            s.beta(1),
            s.beta(1000)
        ),
    )
}

fn gradient_correctness() -> Verdict {
    let five = common::max_relative_error(&[16, 8, 6, 8, 16], 8, 101);
    let six = common::max_relative_error(&[16, 8, 6, 6, 8, 16], 8, 102);
    verdict(
        five <= 1e-4 && six <= 1e-4,
        format!("max relative error: 5 layers {five:.2e}, 6 layers {six:.2e}"),
    )
}

fn not_pipeline(report: &EvalReport, elapsed: Duration) -> Verdict {
    let worst = report.mape_values().into_iter().fold(0.0, f64::max);
    let scores: Vec<String> = report.mape.iter().map(|f| format!("{} {:.2}%", f.name, f.value)).collect();
    verdict(
        worst <= 10.0 && elapsed <= Duration::from_secs(600),
        format!("{} in {elapsed:.1?}", scores.join(", ")),
    )
}

fn distribution_proximity(report: &EvalReport) -> Verdict {
    let ks = report.ks_values();
    let close = ks.iter().filter(|&&k| k <= 0.15).count();
    let worst = ks.iter().copied().fold(0.0, f64::max);
    verdict(
        close >= 15,
        format!("{close}/{} features with KS <= 0.15 (max {worst:.3})", ks.len()),
    )
}

fn augmentation_direction() -> Verdict {
    let report = augmentation_benchmark(&RunConfig::default()).expect("benchmark runs");
    let r2_ok = report.targets.iter().all(|t| t.augmented.r2 >= t.real.r2 - 0.005);
    let mae_better = report.targets.iter().any(|t| t.augmented.mae < t.real.mae);
    let summary: Vec<String> = report
        .targets
        .iter()
        .map(|t| {
            format!(
                "{}: R2 {:.4} -> {:.4}, MAE {:.3e} -> {:.3e}",
                t.target, t.real.r2, t.augmented.r2, t.real.mae, t.augmented.mae
            )
        })
        .collect();
    verdict(r2_ok && mae_better, summary.join("; "))
}

fn gbr_oracle_equivalence() -> Verdict {
    // x = 1..10. Tree 1 fits y − 33/5 and splits at x <= 4.5 with leaf means
    // −23/5 and 46/15. Tree 2 fits the residuals
    // [−1, 0, 0, 1, −8/3, −5/3, −5/3, −2/3, 7/3, 13/3], splits at x <= 8.5
    // and has leaf means −5/6 and 10/3.
    let x = Array2::from_shape_fn((10, 1), |(i, _)| (i + 1) as f64);
    let y = [1.0, 2.0, 2.0, 3.0, 7.0, 8.0, 8.0, 9.0, 12.0, 14.0];
    let config = GbrConfig {
        n_trees: 2,
        max_depth: 1,
        shrinkage: 1.0,
        min_samples_leaf: 1,
    };
    let model = fit_gbr(&x, &y, &config, 0).expect("fit");
    let split = |k: usize| match model.trees.get(k).map(|(t, _)| t.nodes()[0].clone()) {
        Some(Node::Split { threshold, .. }) => threshold,
        _ => f64::NAN,
    };
    let expected_after_one = [2.0, 2.0, 2.0, 2.0, 29.0 / 3.0, 29.0 / 3.0, 29.0 / 3.0, 29.0 / 3.0, 29.0 / 3.0, 29.0 / 3.0];
    let expected = [7.0 / 6.0, 7.0 / 6.0, 7.0 / 6.0, 7.0 / 6.0, 53.0 / 6.0, 53.0 / 6.0, 53.0 / 6.0, 53.0 / 6.0, 13.0, 13.0];
    let dev = |got: Vec<f64>, want: &[f64]| got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let d0 = (model.init - 33.0 / 5.0).abs();
    let d1 = dev(model.predict_staged(&x, 1), &expected_after_one);
    let d2 = dev(model.predict(&x), &expected);
    let worst = d0.max(d1).max(d2);
    verdict(
        model.trees.len() == 2 && split(0) == 4.5 && split(1) == 8.5 && worst <= 1e-12,
        format!("thresholds {} and {}, max deviation from hand trace {worst:.1e}", split(0), split(1)),
    )
}

fn harness_calibration() -> Verdict {
    let config = RunConfig::default();
    let real = real_data(&config).expect("data");
    let reference = generate_dataset(config.circuit, config.n_real, config.eval_seed, &config.nominals).expect("data");
    let report = evaluate_dataset(&real, &reference, &config.nominals).expect("evaluation");
    let values = report.mape_values();
    verdict(
        values.iter().all(|&v| v == 0.0),
        format!("MAPE of real rows against the simulator: {values:?}"),
    )
}

fn metric_identities() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    check("mape [100] vs [90]", mape(&[100.0], &[90.0]).ok() == Some(10.0));
    check("mape identical", mape(&[3.0, 4.0], &[3.0, 4.0]).ok() == Some(0.0));
    check("mape [2,4] vs [1,5]", mape(&[2.0, 4.0], &[1.0, 5.0]).ok() == Some(37.5));
    check("ks identical", ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).ok() == Some(0.0));
    check("ks disjoint", ks_statistic(&[0.0, 0.0], &[1.0, 1.0]).ok() == Some(1.0));
    check("ks {1,2} vs {1,3}", ks_statistic(&[1.0, 2.0], &[1.0, 3.0]).ok() == Some(0.5));
    match regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]) {
        Ok(m) => {
            check("r2 = 0.5", m.r2 == 0.5);
            check("mse = 1/3", m.mse == 1.0 / 3.0);
            check("mae = 1/3", m.mae == 1.0 / 3.0);
            check("rmse^2 = mse", (m.rmse * m.rmse - m.mse).abs() <= 1e-12 * m.mse);
        }
        Err(_) => check("regression_metrics", false),
    }
    check(
        "perfect fit",
        regression_metrics(&[1.0, 2.0], &[1.0, 2.0]).map(|m| (m.r2, m.mse, m.mae)).ok() == Some((1.0, 0.0, 0.0)),
    );
    check("mean predictor r2 = 0", regression_metrics(&[1.0, 2.0, 3.0], &[2.0; 3]).map(|m| m.r2).ok() == Some(0.0));
    if failures.is_empty() {
        verdict(true, "13 metric examples exact")
    } else {
        verdict(false, format!("failed: {}", failures.join(", ")))
    }
}

fn layer_sweep(means: &[(usize, f64)]) -> Verdict {
    let best = means
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|m| m.0)
        .unwrap_or(0);
    let table: Vec<String> = means.iter().map(|(l, m)| format!("{l} layers {m:.3}%")).collect();
    verdict(best == 5, format!("average MAPE: {}", table.join(", ")))
}

fn main() {
    let mut results: Vec<(usize, &str, Verdict)> = vec![
        (1, "forward/reverse exactness", forward_reverse_exactness()),
        (2, "schedule fidelity", schedule_fidelity()),
        (3, "gradient correctness", gradient_correctness()),
    ];

    // The NOT-gate runs for 4, 5 and 6 hidden layers share every seed; the
    // 5-layer run is the default configuration and also serves criteria 4
    // and 5.
    let mut means = Vec::new();
    let mut default_run = None;
    for layers in [4, 5, 6] {
        let mut config = RunConfig::default();
        config.denoiser.hidden_layers = Some(layers);
        let start = Instant::now();
        let outcome = train_and_evaluate(&config).expect("NOT-gate pipeline runs");
        let elapsed = start.elapsed();
        means.push((layers, outcome.eval_report.mean_mape));
        if layers == 5 {
            default_run = Some((outcome.eval_report, elapsed));
        }
    }
    let (report, elapsed) = default_run.expect("5-layer run");
    results.push((4, "NOT-gate pipeline MAPE", not_pipeline(&report, elapsed)));
    results.push((5, "distribution proximity", distribution_proximity(&report)));
    results.push((6, "augmentation direction", augmentation_direction()));
    results.push((7, "GBR oracle equivalence", gbr_oracle_equivalence()));
    results.push((8, "harness calibration", harness_calibration()));
    results.push((9, "metric unit identities", metric_identities()));
    results.push((10, "layer-count sweep", layer_sweep(&means)));

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, v) in &results {
        println!(
            "criterion {id:>2} {}: {name} — {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
