// SPDX-License-Identifier: Apache-2.0
//! Standard regression scores.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub r2: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Mean absolute relative error as a fraction (not a percentage).
    pub mape: f64,
}

/// R², MSE, RMSE, MAE and MAPE of `y_pred` against `y_true`.
///
/// When `y_true` is constant R² is 1 for a perfect fit and 0 otherwise.
pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<RegressionMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = y_true.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroReference(i));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let (mut ss_res, mut ss_tot, mut abs, mut rel) = (0.0, 0.0, 0.0, 0.0);
    for (&y, &p) in y_true.iter().zip(y_pred) {
        let e = y - p;
        ss_res += e * e;
        ss_tot += (y - mean) * (y - mean);
        abs += e.abs();
        rel += (e / y).abs();
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    let mse = ss_res / n;
    Ok(RegressionMetrics {
        r2,
        mse,
        rmse: mse.sqrt(),
        mae: abs / n,
        mape: rel / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let m = regression_metrics(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0]).unwrap();
        assert_eq!((m.r2, m.mse, m.rmse, m.mae, m.mape), (1.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn mean_prediction_has_zero_r2() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[2.0; 3]).unwrap();
        assert_eq!(m.r2, 0.0);
    }

    #[test]
    fn hand_example() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(m.r2, 0.5);
        assert_eq!(m.mse, 1.0 / 3.0);
        assert_eq!(m.mae, 1.0 / 3.0);
        assert_eq!(m.rmse * m.rmse, m.mse);
        assert_eq!(m.mape, (1.0 / 3.0) / 3.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(regression_metrics(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(regression_metrics(&[], &[]), Err(Error::EmptySample)));
        assert!(matches!(regression_metrics(&[1.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroReference(1))));
    }

    #[test]
    fn constant_truth() {
        assert_eq!(regression_metrics(&[2.0, 2.0], &[2.0, 2.0]).unwrap().r2, 1.0);
        assert_eq!(regression_metrics(&[2.0, 2.0], &[2.0, 3.0]).unwrap().r2, 0.0);
    }
}
