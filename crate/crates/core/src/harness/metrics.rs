//! Evaluation metrics over predicted class indices: MAE on the ordinal
//! index, pooled (micro) and per-class-averaged (macro) F1, and per-class
//! precision/recall with the 0/0 → 0 convention.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Occurrences in y_true.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub micro_f1: f64,
    /// Unweighted mean F1 over the classes present in y_true.
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Computes the full metric set from paired label vectors.
pub fn metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} true vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one pair".into()));
    }
    for &v in y_true.iter().chain(y_pred) {
        if v >= n_classes {
            return Err(Error::InvalidInput(format!(
                "label {v} out of range for {n_classes} classes"
            )));
        }
    }

    let n = y_true.len() as f64;
    let mae = y_true
        .iter()
        .zip(y_pred)
        .map(|(&t, &p)| (t as f64 - p as f64).abs())
        .sum::<f64>()
        / n;

    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut support = vec![0usize; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let per_class: Vec<ClassMetrics> = (0..n_classes)
        .map(|k| {
            let precision = ratio(tp[k], tp[k] + fp[k]);
            let recall = ratio(tp[k], tp[k] + fn_[k]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class: k,
                precision,
                recall,
                f1,
                support: support[k],
            }
        })
        .collect();

    let tp_total: usize = tp.iter().sum();
    let fp_total: usize = fp.iter().sum();
    let fn_total: usize = fn_.iter().sum();
    let micro_p = ratio(tp_total, tp_total + fp_total);
    let micro_r = ratio(tp_total, tp_total + fn_total);
    let micro_f1 = if micro_p + micro_r == 0.0 {
        0.0
    } else {
        2.0 * micro_p * micro_r / (micro_p + micro_r)
    };

    let present: Vec<&ClassMetrics> = per_class.iter().filter(|c| c.support > 0).collect();
    let macro_f1 = present.iter().map(|c| c.f1).sum::<f64>() / present.len() as f64;

    Ok(MetricsReport {
        mae,
        micro_f1,
        macro_f1,
        per_class,
    })
}

/// Coefficient of determination for continuous predictions.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::InvalidInput("r² needs matched non-empty vectors".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(1.0 - ss_res / ss_tot)
}
