//! Gaussian and multinomial naive Bayes, used as the paper-style baseline
//! learners for the classification and ordinal approaches.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub log_priors: Vec<f64>,
    /// K×F means and variances.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

pub fn fit_gaussian(rows: &[Vec<f64>], y: &[usize], n_classes: usize) -> GaussianNbModel {
    let n = rows.len();
    let f = rows[0].len();
    let mut counts = vec![0usize; n_classes];
    let mut means = vec![vec![0.0; f]; n_classes];
    for (row, &t) in rows.iter().zip(y) {
        counts[t] += 1;
        for (m, x) in means[t].iter_mut().zip(row) {
            *m += x;
        }
    }
    for (k, count) in counts.iter().enumerate() {
        if *count > 0 {
            means[k].iter_mut().for_each(|m| *m /= *count as f64);
        }
    }
    let mut variances = vec![vec![0.0; f]; n_classes];
    for (row, &t) in rows.iter().zip(y) {
        for ((v, m), x) in variances[t].iter_mut().zip(&means[t]).zip(row) {
            *v += (x - m) * (x - m);
        }
    }
    // Variance smoothing proportional to the largest overall feature
    // variance keeps degenerate (constant) features usable.
    let mut overall_max_var = 0.0f64;
    for j in 0..f {
        let mean_j = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var_j = rows.iter().map(|r| (r[j] - mean_j).powi(2)).sum::<f64>() / n as f64;
        overall_max_var = overall_max_var.max(var_j);
    }
    let eps = 1e-9 * overall_max_var.max(1.0);
    for (k, count) in counts.iter().enumerate() {
        for v in variances[k].iter_mut() {
            *v = if *count > 0 { *v / *count as f64 } else { 0.0 } + eps;
        }
    }
    let log_priors = counts
        .iter()
        .map(|&c| ((c as f64 / n as f64).max(1e-300)).ln())
        .collect();
    GaussianNbModel {
        log_priors,
        means,
        variances,
    }
}

impl GaussianNbModel {
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = self
            .log_priors
            .iter()
            .enumerate()
            .map(|(k, lp)| {
                lp + row
                    .iter()
                    .zip(&self.means[k])
                    .zip(&self.variances[k])
                    .map(|((x, m), v)| {
                        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m) * (x - m) / (2.0 * v)
                    })
                    .sum::<f64>()
            })
            .collect();
        log_normalize(&logs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNbModel {
    pub log_priors: Vec<f64>,
    /// K×F log feature probabilities with Laplace smoothing.
    pub log_theta: Vec<Vec<f64>>,
    /// Per-feature shift applied when the training data had negatives.
    pub shift: Vec<f64>,
}

pub fn fit_multinomial(rows: &[Vec<f64>], y: &[usize], n_classes: usize) -> MultinomialNbModel {
    let n = rows.len();
    let f = rows[0].len();
    let shift: Vec<f64> = (0..f)
        .map(|j| {
            let min = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            if min < 0.0 { -min } else { 0.0 }
        })
        .collect();

    let mut counts = vec![0usize; n_classes];
    let mut feature_counts = vec![vec![0.0; f]; n_classes];
    for (row, &t) in rows.iter().zip(y) {
        counts[t] += 1;
        for ((c, x), s) in feature_counts[t].iter_mut().zip(row).zip(&shift) {
            *c += x + s;
        }
    }
    let log_theta = feature_counts
        .iter()
        .map(|fc| {
            let total: f64 = fc.iter().sum();
            fc.iter()
                .map(|c| ((c + 1.0) / (total + f as f64)).ln())
                .collect()
        })
        .collect();
    let log_priors = counts
        .iter()
        .map(|&c| ((c as f64 / n as f64).max(1e-300)).ln())
        .collect();
    MultinomialNbModel {
        log_priors,
        log_theta,
        shift,
    }
}

impl MultinomialNbModel {
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = self
            .log_priors
            .iter()
            .zip(&self.log_theta)
            .map(|(lp, theta)| {
                lp + row
                    .iter()
                    .zip(theta)
                    .zip(&self.shift)
                    .map(|((x, t), s)| (x + s).max(0.0) * t)
                    .sum::<f64>()
            })
            .collect();
        log_normalize(&logs)
    }
}

fn log_normalize(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
