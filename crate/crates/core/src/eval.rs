// SPDX-License-Identifier: Apache-2.0
//! Simulator-replay scoring of generated rows.
//!
//! The input columns of each generated row are fed back through the delay
//! simulator; the generated output columns are then scored against what the
//! simulator says those inputs produce. Distribution proximity to fresh real
//! data is reported per feature as a two-sample KS statistic.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::{sample, DiffusionModel, Sampler};
use crate::error::{Error, Result};
use crate::schema::{Dataset, FeatureRole};
use crate::simulator::{delay_oracle, generate_dataset, GateTopology, ProcessNominals, PvtSample};

/// Mean absolute percentage error, in percent.
pub fn mape(reference: &[f64], generated: &[f64]) -> Result<f64> {
    if reference.len() != generated.len() {
        return Err(Error::LengthMismatch(reference.len(), generated.len()));
    }
    if reference.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = reference.iter().position(|r| *r == 0.0) {
        return Err(Error::ZeroReference(i));
    }
    let sum: f64 = reference
        .iter()
        .zip(generated)
        .map(|(r, g)| ((g - r) / r).abs())
        .sum();
    Ok(100.0 * sum / reference.len() as f64)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Step past every copy of the smallest remaining value in both.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalEcho {
    pub sample_seed: Option<u64>,
    pub real_seed: Option<u64>,
    pub train_seed: Option<u64>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub sampler: Option<Sampler>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub circuit: String,
    pub n_rows: usize,
    /// Per output feature, percent, against the simulator replay.
    pub mape: Vec<FeatureScore>,
    pub mean_mape: f64,
    /// Per feature, generated vs fresh real data.
    pub ks: Vec<FeatureScore>,
    /// Rows with any generated delay ≤ 0.
    pub nonphysical_rows: usize,
    pub nonphysical_fraction: f64,
    /// Rows whose generated inputs fall outside the sampler's support.
    pub out_of_range_rows: usize,
    /// Rows the simulator could not evaluate (e.g. a nonconducting device);
    /// excluded from MAPE.
    pub unscorable_rows: usize,
    pub config: EvalEcho,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn mape_values(&self) -> Vec<f64> {
        self.mape.iter().map(|s| s.value).collect()
    }

    pub fn ks_values(&self) -> Vec<f64> {
        self.ks.iter().map(|s| s.value).collect()
    }
}

/// Score `generated` by simulator replay and compare its distribution with
/// `real`.
pub fn evaluate_dataset(generated: &Dataset, real: &Dataset, nominals: &ProcessNominals) -> Result<EvalReport> {
    if generated.schema() != real.schema() {
        return Err(Error::SchemaMismatch("generated and real data use different schemas".into()));
    }
    let schema = generated.schema();
    let topology = GateTopology::for_circuit(schema.circuit);
    let inputs = generated.columns(FeatureRole::Input);
    let outputs = generated.columns(FeatureRole::Output);
    let n_out = outputs.ncols();

    let mut reference: Vec<Vec<f64>> = vec![Vec::new(); n_out];
    let mut produced: Vec<Vec<f64>> = vec![Vec::new(); n_out];
    let (mut nonphysical, mut out_of_range, mut unscorable) = (0, 0, 0);
    for (row_in, row_out) in inputs.rows().into_iter().zip(outputs.rows()) {
        if row_out.iter().any(|v| *v <= 0.0) {
            nonphysical += 1;
        }
        let pvt = PvtSample::from_features(&row_in.to_vec())?;
        if !pvt.in_range(nominals) {
            out_of_range += 1;
        }
        match delay_oracle(&topology, &pvt, nominals) {
            Ok(delays) => {
                for k in 0..n_out {
                    reference[k].push(delays[k]);
                    produced[k].push(row_out[k]);
                }
            }
            Err(Error::NonconductingDevice { .. } | Error::InvalidSample(_)) => unscorable += 1,
            Err(e) => return Err(e),
        }
    }

    let out_names: Vec<String> = schema
        .features
        .iter()
        .filter(|f| f.role == FeatureRole::Output)
        .map(|f| f.name.clone())
        .collect();
    let mut scores = Vec::with_capacity(n_out);
    for (k, name) in out_names.into_iter().enumerate() {
        let value = if reference[k].is_empty() {
            f64::NAN
        } else {
            mape(&reference[k], &produced[k])?
        };
        scores.push(FeatureScore { name, value });
    }
    let mean_mape = scores.iter().map(|s| s.value).sum::<f64>() / n_out as f64;

    let mut ks = Vec::with_capacity(schema.len());
    for (j, spec) in schema.features.iter().enumerate() {
        let g = generated.rows().column(j).to_vec();
        let r = real.rows().column(j).to_vec();
        ks.push(FeatureScore {
            name: spec.name.clone(),
            value: ks_statistic(&g, &r)?,
        });
    }

    let n = generated.n_rows();
    Ok(EvalReport {
        circuit: schema.circuit.id().to_string(),
        n_rows: n,
        mape: scores,
        mean_mape,
        ks,
        nonphysical_rows: nonphysical,
        nonphysical_fraction: nonphysical as f64 / n as f64,
        out_of_range_rows: out_of_range,
        unscorable_rows: unscorable,
        config: EvalEcho::default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub n: usize,
    pub sample_seed: u64,
    /// Seed of the fresh real dataset used for KS comparison.
    pub real_seed: u64,
    pub sampler: Sampler,
}

/// Generate rows from `model`, replay them through the simulator and score.
/// Returns the report together with the generated and reference datasets.
pub fn evaluate(
    model: &DiffusionModel,
    nominals: &ProcessNominals,
    settings: &EvalSettings,
) -> Result<(EvalReport, Dataset, Dataset)> {
    let generated = sample(model, settings.n, settings.sample_seed, settings.sampler)?;
    let real = generate_dataset(model.schema().circuit, settings.n, settings.real_seed, nominals)?;
    let mut report = evaluate_dataset(&generated, &real, nominals)?;
    report.config = EvalEcho {
        sample_seed: Some(settings.sample_seed),
        real_seed: Some(settings.real_seed),
        train_seed: Some(model.config().seed),
        epochs: Some(model.config().max_epochs),
        lr: Some(model.config().lr),
        sampler: Some(settings.sampler),
    };
    Ok((report, generated, real))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub feature: String,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub real_count: usize,
    pub generated_count: usize,
}

/// Aligned per-feature histograms over the pooled range of both datasets.
pub fn histograms(real: &Dataset, generated: &Dataset, bins: usize) -> Result<Vec<HistogramRow>> {
    if real.schema() != generated.schema() {
        return Err(Error::SchemaMismatch("histogram inputs use different schemas".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 bins, got {bins}")));
    }
    let mut out = Vec::with_capacity(bins * real.schema().len());
    for (j, spec) in real.schema().features.iter().enumerate() {
        let r = real.rows().column(j);
        let g = generated.rows().column(j);
        let (lo, hi) = r
            .iter()
            .chain(g.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let width = (hi - lo) / bins as f64;
        let bin_of = |v: f64| {
            if width > 0.0 {
                (((v - lo) / width) as usize).min(bins - 1)
            } else {
                0
            }
        };
        let mut rc = vec![0usize; bins];
        let mut gc = vec![0usize; bins];
        r.iter().for_each(|v| rc[bin_of(*v)] += 1);
        g.iter().for_each(|v| gc[bin_of(*v)] += 1);
        for b in 0..bins {
            out.push(HistogramRow {
                feature: spec.name.clone(),
                bin: b,
                lower: lo + b as f64 * width,
                upper: if b + 1 == bins { hi } else { lo + (b + 1) as f64 * width },
                real_count: rc[b],
                generated_count: gc[b],
            });
        }
    }
    Ok(out)
}

pub fn write_histograms<W: Write>(rows: &[HistogramRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["feature", "bin", "lower", "upper", "real_count", "generated_count"])?;
    for h in rows {
        wtr.write_record([
            h.feature.clone(),
            h.bin.to_string(),
            format!("{:e}", h.lower),
            format!("{:e}", h.upper),
            h.real_count.to_string(),
            h.generated_count.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<histogram csv>", e))?;
    Ok(())
}

pub fn export_histograms(real: &Dataset, generated: &Dataset, bins: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rows = histograms(real, generated, bins)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_histograms(&rows, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Circuit;

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[100.0], &[90.0]).unwrap(), 10.0);
        assert_eq!(mape(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mape(&[2.0, 4.0], &[1.0, 5.0]).unwrap(), 37.5);
        assert!(matches!(mape(&[1.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroReference(1))));
        assert!(matches!(mape(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn real_data_scores_zero() {
        let n = ProcessNominals::default();
        let real = generate_dataset(Circuit::Nand3, 50, 4, &n).unwrap();
        let report = evaluate_dataset(&real, &real, &n).unwrap();
        assert_eq!(report.mape.len(), 6);
        assert!(report.mape_values().iter().all(|m| *m == 0.0));
        assert!(report.ks_values().iter().all(|k| *k == 0.0));
        assert_eq!((report.nonphysical_rows, report.out_of_range_rows, report.unscorable_rows), (0, 0, 0));
    }

    #[test]
    fn histogram_shape_and_conservation() {
        let n = ProcessNominals::default();
        let a = generate_dataset(Circuit::Not, 500, 1, &n).unwrap();
        let b = generate_dataset(Circuit::Not, 500, 2, &n).unwrap();
        let rows = histograms(&a, &b, 30).unwrap();
        assert_eq!(rows.len(), 30 * 17);
        for f in a.schema().names() {
            let per: Vec<_> = rows.iter().filter(|r| r.feature == f).collect();
            assert_eq!(per.len(), 30);
            assert_eq!(per.iter().map(|r| r.real_count).sum::<usize>(), 500);
            assert_eq!(per.iter().map(|r| r.generated_count).sum::<usize>(), 500);
        }
        let same = histograms(&a, &a, 10).unwrap();
        assert!(same.iter().all(|r| r.real_count == r.generated_count));
        let other = generate_dataset(Circuit::Nand2, 5, 1, &n).unwrap();
        assert!(matches!(histograms(&a, &other, 10), Err(Error::SchemaMismatch(_))));
    }
}
