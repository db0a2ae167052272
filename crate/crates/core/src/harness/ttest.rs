//! Dependent t-test for paired samples, applied to per-event absolute
//! residuals of two predictors.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    /// Two-tailed significance at the 95% confidence level.
    pub significant_95: bool,
    /// Set when the differences had zero variance; p collapses to 1 (equal
    /// means) or 0 (constant nonzero shift).
    pub degenerate: bool,
    pub mean_difference: f64,
}

/// Two-tailed dependent t-test on the residual differences a − b.
pub fn paired_ttest(residuals_a: &[f64], residuals_b: &[f64]) -> Result<PairedTTest> {
    if residuals_a.len() != residuals_b.len() {
        return Err(Error::InvalidInput(
            "paired t-test needs equal-length samples".into(),
        ));
    }
    let n = residuals_a.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "paired t-test needs at least two pairs".into(),
        ));
    }

    let diffs: Vec<f64> = residuals_a
        .iter()
        .zip(residuals_b)
        .map(|(a, b)| a - b)
        .collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    let df = n as f64 - 1.0;

    if var <= 0.0 {
        let p = if mean == 0.0 { 1.0 } else { 0.0 };
        return Ok(PairedTTest {
            t_statistic: if mean == 0.0 { 0.0 } else { f64::INFINITY.copysign(mean) },
            degrees_of_freedom: df,
            p_value: p,
            significant_95: p < 0.05,
            degenerate: true,
            mean_difference: mean,
        });
    }

    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Numeric(format!("t-distribution setup failed: {e}")))?;
    let p = 2.0 * dist.sf(t.abs());
    Ok(PairedTTest {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        significant_95: p < 0.05,
        degenerate: false,
        mean_difference: mean,
    })
}
