// SPDX-License-Identifier: Apache-2.0
//! Analytic delay simulator used in place of a transistor-level SPICE run.
//!
//! Inputs are Monte-Carlo PVT draws: every process parameter and the load
//! capacitance is Gaussian with a 3σ spread of ±10% of nominal, temperature is
//! uniform on [−55, 125] °C and the supply is uniform within ±10% of nominal.
//!
//! Delays follow an alpha-power-law drive model:
//!
//! ```text
//! Id      = K · m(T) · (W/L) · (tox_nom0/tox_e) · (Vdd − Vth_eff)^α
//! m(T)    = ((T + 273.15) / 300.15)^(−1.5)
//! Vth_eff = (Vth0 − 0.0008·(T − 27)) · (Ndep/Ndep0)^0.1 · (Xj0/Xj)^0.05
//! delay   = stages · ln2 · C_L · Vdd / (2 · Id / stack)
//! ```
//!
//! `delay_hl` uses the NMOS drive and NMOS stack depth, `delay_lh` the PMOS.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{schema_for, Circuit, Dataset, INPUT_COUNT};

pub const ALPHA: f64 = 1.3;
/// Drive constant, A per V^α per square.
pub const DRIVE_K: f64 = 100e-6;
/// Threshold shift per °C.
pub const VTH_TEMP_COEFF: f64 = 0.0008;
pub const MOBILITY_EXP: f64 = -1.5;
pub const REF_TEMP_C: f64 = 27.0;
const KELVIN: f64 = 273.15;
const NDEP_EXP: f64 = 0.1;
const XJ_EXP: f64 = 0.05;
const MAX_RESAMPLE: usize = 100;

/// Relative 3σ spread of Gaussian parameters and relative half-width of the
/// supply window.
pub const VARIATION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub l: f64,
    pub w: f64,
    pub tox_e: f64,
    pub tox_nom: f64,
    pub xj: f64,
    /// cm⁻³
    pub ndep: f64,
}

impl DeviceParams {
    /// `[l, w, tox_e, tox_nom, xj, ndep]`, the schema column order.
    pub fn to_array(self) -> [f64; 6] {
        [self.l, self.w, self.tox_e, self.tox_nom, self.xj, self.ndep]
    }

    fn from_slice(v: &[f64]) -> Self {
        DeviceParams {
            l: v[0],
            w: v[1],
            tox_e: v[2],
            tox_nom: v[3],
            xj: v[4],
            ndep: v[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcessNominals {
    pub nmos: DeviceParams,
    pub pmos: DeviceParams,
    pub vdd: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub c_load: f64,
    pub vth0: f64,
}

impl Default for ProcessNominals {
    fn default() -> Self {
        let device = |w| DeviceParams {
            l: 22e-9,
            w,
            tox_e: 1.0e-9,
            tox_nom: 1.0e-9,
            xj: 10e-9,
            ndep: 3e18,
        };
        ProcessNominals {
            nmos: device(44e-9),
            pmos: device(88e-9),
            vdd: 0.8,
            temp_min: -55.0,
            temp_max: 125.0,
            c_load: 1e-15,
            vth0: 0.3,
        }
    }
}

impl ProcessNominals {
    pub fn validate(&self) -> Result<()> {
        let mut values = vec![self.vdd, self.c_load, self.vth0];
        values.extend(self.nmos.to_array());
        values.extend(self.pmos.to_array());
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("process nominals must be finite and positive".into()));
        }
        if !(self.temp_min < self.temp_max) || self.temp_min <= -KELVIN {
            return Err(Error::InvalidConfig("temperature range is empty or below 0 K".into()));
        }
        Ok(())
    }

    pub fn vdd_range(&self) -> (f64, f64) {
        (self.vdd * (1.0 - VARIATION), self.vdd * (1.0 + VARIATION))
    }

    /// Standard deviation that puts ±10% of `nominal` at 3σ.
    pub fn sigma(nominal: f64) -> f64 {
        VARIATION * nominal / 3.0
    }
}

/// One Monte-Carlo draw of the fifteen input features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvtSample {
    pub vdd: f64,
    pub temp: f64,
    pub c_load: f64,
    pub nmos: DeviceParams,
    pub pmos: DeviceParams,
}

impl PvtSample {
    pub fn nominal(nominals: &ProcessNominals) -> Self {
        PvtSample {
            vdd: nominals.vdd,
            temp: REF_TEMP_C,
            c_load: nominals.c_load,
            nmos: nominals.nmos,
            pmos: nominals.pmos,
        }
    }

    /// Values in schema column order.
    pub fn to_features(&self) -> [f64; INPUT_COUNT] {
        let mut out = [0.0; INPUT_COUNT];
        out[0] = self.vdd;
        out[1] = self.temp;
        out[2] = self.c_load;
        out[3..9].copy_from_slice(&self.nmos.to_array());
        out[9..15].copy_from_slice(&self.pmos.to_array());
        out
    }

    pub fn from_features(values: &[f64]) -> Result<Self> {
        if values.len() != INPUT_COUNT {
            return Err(Error::ShapeMismatch(format!(
                "expected {INPUT_COUNT} input features, got {}",
                values.len()
            )));
        }
        Ok(PvtSample {
            vdd: values[0],
            temp: values[1],
            c_load: values[2],
            nmos: DeviceParams::from_slice(&values[3..9]),
            pmos: DeviceParams::from_slice(&values[9..15]),
        })
    }

    /// Whether the sample lies inside the sampler's support.
    pub fn in_range(&self, nominals: &ProcessNominals) -> bool {
        let (lo, hi) = nominals.vdd_range();
        let positive = self.to_features()[2..].iter().all(|v| *v > 0.0);
        positive
            && (lo..=hi).contains(&self.vdd)
            && (nominals.temp_min..=nominals.temp_max).contains(&self.temp)
    }
}

fn positive_gaussian<R: Rng + ?Sized>(rng: &mut R, nominal: f64, name: &'static str) -> Result<f64> {
    let dist = Normal::new(nominal, ProcessNominals::sigma(nominal)).expect("finite sigma");
    for _ in 0..MAX_RESAMPLE {
        let v = dist.sample(rng);
        if v > 0.0 {
            return Ok(v);
        }
    }
    Err(Error::DegenerateSampler(name))
}

fn sample_device<R: Rng + ?Sized>(rng: &mut R, nominal: &DeviceParams) -> Result<DeviceParams> {
    Ok(DeviceParams {
        l: positive_gaussian(rng, nominal.l, "l")?,
        w: positive_gaussian(rng, nominal.w, "w")?,
        tox_e: positive_gaussian(rng, nominal.tox_e, "tox_e")?,
        tox_nom: positive_gaussian(rng, nominal.tox_nom, "tox_nom")?,
        xj: positive_gaussian(rng, nominal.xj, "xj")?,
        ndep: positive_gaussian(rng, nominal.ndep, "ndep")?,
    })
}

/// Draw one PVT sample from `rng`.
pub fn sample_pvt_with<R: Rng + ?Sized>(nominals: &ProcessNominals, rng: &mut R) -> Result<PvtSample> {
    let (vlo, vhi) = nominals.vdd_range();
    let vdd = rng.random_range(vlo..=vhi);
    let temp = rng.random_range(nominals.temp_min..=nominals.temp_max);
    let c_load = positive_gaussian(rng, nominals.c_load, "c_load")?;
    let nmos = sample_device(rng, &nominals.nmos)?;
    let pmos = sample_device(rng, &nominals.pmos)?;
    Ok(PvtSample {
        vdd,
        temp,
        c_load,
        nmos,
        pmos,
    })
}

/// Draw one PVT sample from a fresh generator seeded with `seed`.
pub fn sample_pvt(nominals: &ProcessNominals, seed: u64) -> Result<PvtSample> {
    sample_pvt_with(nominals, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Per-row random stream derived from `(seed, row)`.
pub fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTopology {
    /// NMOS devices in series on the pull-down path.
    pub n_stack: u32,
    /// PMOS devices in series on the pull-up path.
    pub p_stack: u32,
    /// Logic stages between the switching input and the output.
    pub stages: u32,
}

/// Per-node path description for one circuit. Each node is the delay seen
/// when only that input switches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTopology {
    pub circuit: Circuit,
    pub nodes: Vec<NodeTopology>,
}

impl GateTopology {
    pub fn for_circuit(circuit: Circuit) -> Self {
        let node = |n_stack, p_stack, stages| NodeTopology {
            n_stack,
            p_stack,
            stages,
        };
        let nodes = match circuit {
            Circuit::Not => vec![node(1, 1, 1)],
            Circuit::Nand2 => vec![node(2, 1, 1); 2],
            Circuit::Nor2 => vec![node(1, 2, 1); 2],
            Circuit::And2 => vec![node(2, 1, 2); 2],
            Circuit::Or2 => vec![node(1, 2, 2); 2],
            Circuit::Xor2 => vec![node(2, 2, 2); 2],
            // a·b + c as a single complex gate
            Circuit::AndOr3 => vec![node(2, 2, 1), node(2, 2, 1), node(1, 2, 1)],
            // a and b pass through both XORs, carry-in through one
            Circuit::FullAdder => vec![node(2, 2, 3), node(2, 2, 3), node(2, 2, 2)],
            // data inputs a, b; select c also drives the inverter
            Circuit::Mux2 => vec![node(2, 2, 2), node(2, 2, 2), node(2, 2, 3)],
            Circuit::Nand3 => vec![node(3, 1, 1); 3],
            Circuit::Nor3 => vec![node(1, 3, 1); 3],
            Circuit::And3 => vec![node(3, 1, 2); 3],
        };
        GateTopology { circuit, nodes }
    }
}

/// Temperature mobility factor, 1 at 27 °C.
pub fn mobility_factor(temp_c: f64) -> f64 {
    ((temp_c + KELVIN) / (REF_TEMP_C + KELVIN)).powf(MOBILITY_EXP)
}

pub fn effective_vth(nominals: &ProcessNominals, device: &DeviceParams, temp_c: f64, nominal: &DeviceParams) -> f64 {
    (nominals.vth0 - VTH_TEMP_COEFF * (temp_c - REF_TEMP_C))
        * (device.ndep / nominal.ndep).powf(NDEP_EXP)
        * (nominal.xj / device.xj).powf(XJ_EXP)
}

/// Saturation drive current of one device.
pub fn drive_current(
    nominals: &ProcessNominals,
    device: &DeviceParams,
    nominal: &DeviceParams,
    vdd: f64,
    temp_c: f64,
) -> Result<f64> {
    let vth = effective_vth(nominals, device, temp_c, nominal);
    if vdd <= vth {
        return Err(Error::NonconductingDevice { vdd, vth });
    }
    Ok(DRIVE_K
        * mobility_factor(temp_c)
        * (device.w / device.l)
        * (nominal.tox_nom / device.tox_e)
        * (vdd - vth).powf(ALPHA))
}

/// Output delays in seconds, ordered `[lh_a, hl_a, lh_b, hl_b, …]`.
pub fn delay_oracle(topology: &GateTopology, pvt: &PvtSample, nominals: &ProcessNominals) -> Result<Vec<f64>> {
    let features = pvt.to_features();
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSample("non-finite input".into()));
    }
    if pvt.temp <= -KELVIN {
        return Err(Error::InvalidSample(format!("temperature {} °C below 0 K", pvt.temp)));
    }
    if let Some(i) = features[2..].iter().position(|v| *v <= 0.0) {
        return Err(Error::InvalidSample(format!("input feature {} is nonpositive", i + 2)));
    }
    let id_n = drive_current(nominals, &pvt.nmos, &nominals.nmos, pvt.vdd, pvt.temp)?;
    let id_p = drive_current(nominals, &pvt.pmos, &nominals.pmos, pvt.vdd, pvt.temp)?;
    let charge = std::f64::consts::LN_2 * pvt.c_load * pvt.vdd;
    let mut out = Vec::with_capacity(2 * topology.nodes.len());
    for node in &topology.nodes {
        let stages = f64::from(node.stages);
        let lh = stages * charge / (2.0 * id_p / f64::from(node.p_stack));
        let hl = stages * charge / (2.0 * id_n / f64::from(node.n_stack));
        out.push(lh);
        out.push(hl);
    }
    Ok(out)
}

/// Monte-Carlo dataset: each row uses its own substream of `seed`, so rows
/// are independent of `n_samples`.
pub fn generate_dataset(
    circuit: Circuit,
    n_samples: usize,
    seed: u64,
    nominals: &ProcessNominals,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    nominals.validate()?;
    let schema = schema_for(circuit);
    let topology = GateTopology::for_circuit(circuit);
    let width = schema.len();
    let mut values = Vec::with_capacity(n_samples * width);
    for row in 0..n_samples {
        let pvt = sample_pvt_with(nominals, &mut row_rng(seed, row))?;
        values.extend_from_slice(&pvt.to_features());
        values.extend(delay_oracle(&topology, &pvt, nominals)?);
    }
    let rows = ndarray::Array2::from_shape_vec((n_samples, width), values).expect("row-major shape");
    Dataset::new(schema, rows)
}
