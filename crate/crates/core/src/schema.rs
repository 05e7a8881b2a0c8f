// SPDX-License-Identifier: Apache-2.0
//! Circuit dataset schemas, tabular data, standardization and CSV I/O.
//!
//! Every circuit shares the same fifteen PVT input columns (supply, temperature,
//! load, and six process parameters for each of the NMOS and PMOS devices) and
//! carries one `delay_lh`/`delay_hl` pair per observed input node. Columns are
//! position-stable: inputs first, outputs last.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of PVT input columns shared by every schema.
pub const INPUT_COUNT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Circuit {
    Not,
    Nand2,
    And2,
    Nor2,
    Or2,
    Xor2,
    AndOr3,
    FullAdder,
    Mux2,
    Nand3,
    And3,
    Nor3,
}

impl Circuit {
    pub const ALL: [Circuit; 12] = [
        Circuit::Not,
        Circuit::Nand2,
        Circuit::And2,
        Circuit::Nor2,
        Circuit::Or2,
        Circuit::Xor2,
        Circuit::AndOr3,
        Circuit::FullAdder,
        Circuit::Mux2,
        Circuit::Nand3,
        Circuit::And3,
        Circuit::Nor3,
    ];

    /// Short identifier used on the command line and in column names.
    pub fn id(self) -> &'static str {
        match self {
            Circuit::Not => "not",
            Circuit::Nand2 => "nand2",
            Circuit::And2 => "and2",
            Circuit::Nor2 => "nor2",
            Circuit::Or2 => "or2",
            Circuit::Xor2 => "xor2",
            Circuit::AndOr3 => "and_or3",
            Circuit::FullAdder => "full_adder",
            Circuit::Mux2 => "mux2",
            Circuit::Nand3 => "nand3",
            Circuit::And3 => "and3",
            Circuit::Nor3 => "nor3",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Circuit::Not => "NOT gate",
            Circuit::Nand2 => "Two input NAND gate",
            Circuit::And2 => "Two input AND gate",
            Circuit::Nor2 => "Two input NOR gate",
            Circuit::Or2 => "Two input OR gate",
            Circuit::Xor2 => "Two input XOR gate",
            Circuit::AndOr3 => "Three input AND-OR circuit",
            Circuit::FullAdder => "Full adder",
            Circuit::Mux2 => "2:1 Multiplexer",
            Circuit::Nand3 => "Three input NAND gate",
            Circuit::And3 => "Three input AND gate",
            Circuit::Nor3 => "Three input NOR gate",
        }
    }

    /// Number of observed input nodes (each contributes a lh/hl delay pair).
    pub fn node_count(self) -> usize {
        match self {
            Circuit::Not => 1,
            Circuit::Nand2 | Circuit::And2 | Circuit::Nor2 | Circuit::Or2 | Circuit::Xor2 => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Circuit::ALL
            .into_iter()
            .find(|c| c.id() == key)
            .ok_or_else(|| Error::UnknownCircuit(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureRole {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Volt,
    Celsius,
    Meter,
    Farad,
    Second,
    PerCubicCm,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub role: FeatureRole,
    pub unit: Unit,
}

/// Per-device process parameters, in column order.
pub const PROCESS_PARAMS: [(&str, Unit); 6] = [
    ("l", Unit::Meter),
    ("w", Unit::Meter),
    ("tox_e", Unit::Meter),
    ("tox_nom", Unit::Meter),
    ("xj", Unit::Meter),
    ("ndep", Unit::PerCubicCm),
];

const NODE_NAMES: [&str; 3] = ["a", "b", "c"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub circuit: Circuit,
    pub features: Vec<FeatureSpec>,
}

/// The fixed schema for `circuit`.
pub fn schema_for(circuit: Circuit) -> DatasetSchema {
    let mut features = Vec::with_capacity(INPUT_COUNT + 2 * circuit.node_count());
    let input = |name: String, unit| FeatureSpec {
        name,
        role: FeatureRole::Input,
        unit,
    };
    features.push(input("vdd".into(), Unit::Volt));
    features.push(input("temp".into(), Unit::Celsius));
    features.push(input("c_load".into(), Unit::Farad));
    for device in ["nmos", "pmos"] {
        for (param, unit) in PROCESS_PARAMS {
            features.push(input(format!("{device}_{param}"), unit));
        }
    }
    for node in &NODE_NAMES[..circuit.node_count()] {
        for edge in ["lh", "hl"] {
            features.push(FeatureSpec {
                name: format!("{}_delay_{edge}_{node}", circuit.id()),
                role: FeatureRole::Output,
                unit: Unit::Second,
            });
        }
    }
    DatasetSchema { circuit, features }
}

impl DatasetSchema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn input_count(&self) -> usize {
        self.count(FeatureRole::Input)
    }

    pub fn output_count(&self) -> usize {
        self.count(FeatureRole::Output)
    }

    fn count(&self, role: FeatureRole) -> usize {
        self.features.iter().filter(|f| f.role == role).count()
    }

    pub fn indices(&self, role: FeatureRole) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

/// A schema plus a row-major matrix of finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: DatasetSchema,
    rows: Array2<f64>,
}

impl Dataset {
    pub fn new(schema: DatasetSchema, rows: Array2<f64>) -> Result<Self> {
        if rows.ncols() != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} columns for a {}-feature schema",
                rows.ncols(),
                schema.len()
            )));
        }
        if let Some(((row, col), _)) = rows.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Dataset { schema, rows })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn circuit(&self) -> Circuit {
        self.schema.circuit
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn into_rows(self) -> Array2<f64> {
        self.rows
    }

    /// Columns with the given role, in schema order.
    pub fn columns(&self, role: FeatureRole) -> Array2<f64> {
        self.rows.select(Axis(1), &self.schema.indices(role))
    }

    pub fn column(&self, name: &str) -> Option<Array1<f64>> {
        self.schema
            .index_of(name)
            .map(|i| self.rows.column(i).to_owned())
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: self.rows.select(Axis(0), indices),
        }
    }

    /// Row-wise concatenation of two datasets with the same schema.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.schema != other.schema {
            return Err(Error::SchemaMismatch(format!(
                "cannot stack {} onto {}",
                other.circuit(),
                self.circuit()
            )));
        }
        let rows = ndarray::concatenate(Axis(0), &[self.rows.view(), other.rows.view()])
            .expect("column counts agree");
        Ok(Dataset {
            schema: self.schema.clone(),
            rows,
        })
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_normalizer(dataset: &Dataset) -> Result<NormStats> {
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let rows = dataset.rows();
    let mut mean = Vec::with_capacity(rows.ncols());
    let mut std = Vec::with_capacity(rows.ncols());
    for (col, spec) in rows.columns().into_iter().zip(&dataset.schema().features) {
        let m = col.sum() / n as f64;
        let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        let s = var.sqrt();
        if !(s > 0.0) || s <= m.abs() * 1e-14 {
            return Err(Error::ConstantColumn(spec.name.clone()));
        }
        mean.push(m);
        std.push(s);
    }
    Ok(NormStats {
        names: dataset.schema().names().iter().map(|s| s.to_string()).collect(),
        mean,
        std,
    })
}

impl NormStats {
    fn check(&self, schema: &DatasetSchema) -> Result<()> {
        if self.names.len() != schema.len()
            || self.names.iter().zip(schema.names()).any(|(a, b)| a != b)
        {
            return Err(Error::SchemaMismatch(format!(
                "normalizer fitted on different columns than {}",
                schema.circuit
            )));
        }
        Ok(())
    }

    /// Standardize a raw matrix in place.
    pub fn normalize_array(&self, rows: &mut Array2<f64>) {
        for (mut col, (m, s)) in rows.columns_mut().into_iter().zip(self.mean.iter().zip(&self.std)) {
            col.mapv_inplace(|x| (x - m) / s);
        }
    }

    pub fn denormalize_array(&self, rows: &mut Array2<f64>) {
        for (mut col, (m, s)) in rows.columns_mut().into_iter().zip(self.mean.iter().zip(&self.std)) {
            col.mapv_inplace(|z| z * s + m);
        }
    }
}

pub fn normalize(dataset: &Dataset, stats: &NormStats) -> Result<Dataset> {
    stats.check(dataset.schema())?;
    let mut rows = dataset.rows.clone();
    stats.normalize_array(&mut rows);
    Dataset::new(dataset.schema.clone(), rows)
}

pub fn denormalize(dataset: &Dataset, stats: &NormStats) -> Result<Dataset> {
    stats.check(dataset.schema())?;
    let mut rows = dataset.rows.clone();
    stats.denormalize_array(&mut rows);
    Dataset::new(dataset.schema.clone(), rows)
}

/// Identify the circuit whose schema has exactly this header.
pub fn schema_from_header<S: AsRef<str>>(header: &[S]) -> Result<DatasetSchema> {
    Circuit::ALL
        .into_iter()
        .map(schema_for)
        .find(|schema| {
            schema.len() == header.len()
                && schema.names().iter().zip(header).all(|(a, b)| *a == b.as_ref().trim())
        })
        .ok_or_else(|| {
            let joined: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
            Error::HeaderMismatch(joined.join(","))
        })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let schema = schema_from_header(&header)?;
    let width = schema.len();
    let mut values = Vec::new();
    let mut n_rows = 0;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(Error::SchemaMismatch(format!(
                "row {row} has {} cells, expected {width}",
                record.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                row,
                col,
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        n_rows += 1;
    }
    let rows = Array2::from_shape_vec((n_rows, width), values).expect("row-major shape");
    Dataset::new(schema, rows)
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}

/// Values are written in shortest round-trip exponent form, so reloading is
/// bit-exact.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(dataset.schema().names())?;
    for row in dataset.rows().rows() {
        wtr.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
