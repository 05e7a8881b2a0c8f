// SPDX-License-Identifier: Apache-2.0
//! Variance schedule and the closed-form forward process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `β`, `α = 1 − β` and `ᾱ = Π α` for steps `1..=T`. Accessors take the
/// 1-based step index.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
    spec: ScheduleSpec,
}

/// Parameters a linear schedule is rebuilt from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            steps: 1000,
            beta_start: 0.001,
            beta_end: 0.02,
        }
    }
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<NoiseSchedule> {
        linear_schedule(self.steps, self.beta_start, self.beta_end)
    }
}

/// `β_t = β_start + (t − 1)(β_end − β_start)/(T − 1)`.
pub fn linear_schedule(steps: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if steps < 2 {
        return Err(Error::InvalidRange(format!("need at least 2 steps, got {steps}")));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidRange(format!(
            "need 0 < beta_start <= beta_end < 1, got {beta_start}..{beta_end}"
        )));
    }
    let span = (beta_end - beta_start) / (steps - 1) as f64;
    let mut betas: Vec<f64> = (0..steps).map(|i| beta_start + i as f64 * span).collect();
    // Pin the last endpoint so it is exact regardless of rounding in `span`.
    betas[steps - 1] = beta_end;
    let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
    let alpha_bars = alphas
        .iter()
        .scan(1.0, |acc, a| {
            *acc *= a;
            Some(*acc)
        })
        .collect();
    Ok(NoiseSchedule {
        betas,
        alphas,
        alpha_bars,
        spec: ScheduleSpec {
            steps,
            beta_start,
            beta_end,
        },
    })
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn spec(&self) -> ScheduleSpec {
        self.spec
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// Variance of `x_{t−1}` given `x_t` and `x_0`:
    /// `β_t (1 − ᾱ_{t−1}) / (1 − ᾱ_t)`.
    pub fn posterior_variance(&self, t: usize) -> f64 {
        self.beta(t) * (1.0 - self.alpha_bar(t - 1)) / (1.0 - self.alpha_bar(t))
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::StepOutOfRange { t, max: self.steps() });
        }
        Ok(())
    }
}

/// One forward noising step: `√(1−β)·x + √β·ε`.
#[inline]
pub fn forward_step(x_prev: f64, beta: f64, eps: f64) -> f64 {
    (1.0 - beta).sqrt() * x_prev + beta.sqrt() * eps
}

/// Inverse of [`forward_step`] given the step noise: `(x − √β·ε)/√(1−β)`.
#[inline]
pub fn reverse_update(x_t: f64, beta: f64, eps: f64) -> f64 {
    (x_t - beta.sqrt() * eps) / (1.0 - beta).sqrt()
}

/// Closed-form `t`-step marginal: `√ᾱ_t·x₀ + √(1−ᾱ_t)·ε`.
pub fn forward_jump(x0: &[f64], t: usize, schedule: &NoiseSchedule, eps: &[f64]) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    if x0.len() != eps.len() {
        return Err(Error::LengthMismatch(x0.len(), eps.len()));
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let s = linear_schedule(1000, 0.001, 0.02).unwrap();
        assert_eq!(s.beta(1), 0.001);
        assert_eq!(s.beta(1000), 0.02);
        assert_eq!(s.alpha_bar(1), 0.999);
        let two = linear_schedule(2, 0.001, 0.02).unwrap();
        assert_eq!(two.betas(), &[0.001, 0.02]);
    }

    #[test]
    fn invalid_ranges() {
        for (t, a, b) in [(1, 0.001, 0.02), (10, 0.0, 0.02), (10, 0.03, 0.02), (10, 0.001, 1.0)] {
            assert!(matches!(linear_schedule(t, a, b), Err(Error::InvalidRange(_))));
        }
    }

    #[test]
    fn forward_step_hand_value() {
        let x = forward_step(1.0, 0.19, 0.5);
        assert!((x - 1.117945).abs() < 1e-6);
        assert_eq!(forward_step(0.0, 0.25, 0.8), 0.5 * 0.8);
        assert_eq!(forward_step(3.7, 0.0, -2.0), 3.7);
    }

    #[test]
    fn reverse_hand_value() {
        let x = reverse_update(1.117945, 0.19, 0.5);
        assert!((x - 1.0).abs() < 1e-6);
        let exact = reverse_update(forward_step(1.0, 0.19, 0.5), 0.19, 0.5);
        assert!((exact - 1.0).abs() < 1e-15);
        assert_eq!(reverse_update(2.5, 0.0, 0.0), 2.5);
    }

    #[test]
    fn jump_one_step_matches_forward_step() {
        let s = linear_schedule(10, 0.001, 0.02).unwrap();
        let j = forward_jump(&[0.7, -1.2], 1, &s, &[0.3, 0.9]).unwrap();
        assert!((j[0] - forward_step(0.7, s.beta(1), 0.3)).abs() < 1e-15);
        assert!((j[1] - forward_step(-1.2, s.beta(1), 0.9)).abs() < 1e-15);
        let z = forward_jump(&[0.0], 7, &s, &[1.3]).unwrap();
        assert!((z[0] - (1.0 - s.alpha_bar(7)).sqrt() * 1.3).abs() < 1e-15);
        assert!(matches!(forward_jump(&[0.0], 11, &s, &[0.0]), Err(Error::StepOutOfRange { t: 11, max: 10 })));
        assert!(matches!(forward_jump(&[0.0], 0, &s, &[0.0]), Err(Error::StepOutOfRange { .. })));
    }
}
