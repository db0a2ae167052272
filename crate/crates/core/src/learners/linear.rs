//! Linear models: L2-regularized logistic regression trained by batch
//! gradient descent with backtracking line search, and ordinary least
//! squares with a pseudo-inverse fallback for singular systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::boost::softmax;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiClassMode {
    /// Multinomial softmax (the `auto` resolution for every K).
    Multinomial,
    /// One independent binary model per class, probabilities renormalized.
    OneVsRest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    Uniform,
    /// Inverse class frequency: w = n / (K · n_class).
    Balanced,
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticParams {
    pub mode: MultiClassMode,
    pub weighting: ClassWeighting,
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            mode: MultiClassMode::Multinomial,
            weighting: ClassWeighting::Uniform,
            l2: 1.0,
            tolerance: 1e-6,
            max_iter: 1000,
        }
    }
}

/// The regularized multinomial log-loss as an explicit objective, exposed
/// so the analytic gradient can be checked against finite differences.
///
/// Weights are a flattened K×(F+1) matrix, bias column last, bias
/// unpenalized. The data term is normalized by the total sample weight.
pub struct LogisticObjective<'a> {
    pub rows: &'a [Vec<f64>],
    pub targets: &'a [usize],
    pub n_classes: usize,
    pub sample_weights: Vec<f64>,
    pub l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(
        rows: &'a [Vec<f64>],
        targets: &'a [usize],
        n_classes: usize,
        weighting: ClassWeighting,
        l2: f64,
    ) -> LogisticObjective<'a> {
        let sample_weights = match weighting {
            ClassWeighting::Uniform => vec![1.0; rows.len()],
            ClassWeighting::Balanced => {
                let mut counts = vec![0usize; n_classes];
                for &t in targets {
                    counts[t] += 1;
                }
                targets
                    .iter()
                    .map(|&t| rows.len() as f64 / (n_classes as f64 * counts[t].max(1) as f64))
                    .collect()
            }
        };
        LogisticObjective {
            rows,
            targets,
            n_classes,
            sample_weights,
            l2,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_classes * (self.n_features() + 1)
    }

    fn n_features(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    fn scores(&self, w: &[f64], row: &[f64]) -> Vec<f64> {
        let stride = self.n_features() + 1;
        (0..self.n_classes)
            .map(|k| {
                let wk = &w[k * stride..(k + 1) * stride];
                row.iter().zip(wk).map(|(x, c)| x * c).sum::<f64>() + wk[stride - 1]
            })
            .collect()
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        let total_weight: f64 = self.sample_weights.iter().sum();
        let mut nll = 0.0;
        for ((row, &t), &sw) in self.rows.iter().zip(self.targets).zip(&self.sample_weights) {
            let p = softmax(&self.scores(w, row));
            nll -= sw * p[t].max(1e-300).ln();
        }
        let stride = self.n_features() + 1;
        let penalty: f64 = (0..self.n_classes)
            .flat_map(|k| w[k * stride..(k + 1) * stride - 1].iter())
            .map(|c| c * c)
            .sum();
        nll / total_weight + 0.5 * self.l2 * penalty
    }

    pub fn grad(&self, w: &[f64]) -> Vec<f64> {
        let stride = self.n_features() + 1;
        let total_weight: f64 = self.sample_weights.iter().sum();
        let mut g = vec![0.0; self.n_params()];
        for ((row, &t), &sw) in self.rows.iter().zip(self.targets).zip(&self.sample_weights) {
            let p = softmax(&self.scores(w, row));
            for k in 0..self.n_classes {
                let delta = sw * (p[k] - if k == t { 1.0 } else { 0.0 });
                let gk = &mut g[k * stride..(k + 1) * stride];
                for (gj, xj) in gk.iter_mut().zip(row) {
                    *gj += delta * xj;
                }
                gk[stride - 1] += delta;
            }
        }
        for v in g.iter_mut() {
            *v /= total_weight;
        }
        for k in 0..self.n_classes {
            for j in 0..stride - 1 {
                g[k * stride + j] += self.l2 * w[k * stride + j];
            }
        }
        g
    }
}

/// Minimizes the objective by gradient descent with backtracking; stops at
/// gradient norm ≤ tolerance or `max_iter`. Returns (weights, final
/// gradient norm).
pub fn minimize(objective: &LogisticObjective, tolerance: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; objective.n_params()];
    let mut grad_norm = f64::INFINITY;
    let mut step: f64 = 1.0;
    for _ in 0..max_iter {
        let g = objective.grad(&w);
        grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm <= tolerance {
            break;
        }
        let f0 = objective.loss(&w);
        // Backtracking with Armijo condition; try growing the step back
        // first so convergence does not stall at a tiny step.
        step = (step * 2.0).min(1e3);
        loop {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            if objective.loss(&trial) <= f0 - 0.5 * step * grad_norm * grad_norm || step < 1e-14 {
                w = trial;
                break;
            }
            step *= 0.5;
        }
    }
    (w, grad_norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mode: MultiClassMode,
    /// Multinomial: one flattened K×(F+1) block. One-vs-rest: K blocks of
    /// 2×(F+1), each a binary softmax for (not-k, k).
    pub weights: Vec<Vec<f64>>,
    pub n_classes: usize,
    pub n_features: usize,
    /// Gradient norm at the returned weights, per block.
    pub grad_norms: Vec<f64>,
}

pub fn fit_logistic(
    rows: &[Vec<f64>],
    targets: &[usize],
    n_classes: usize,
    params: &LogisticParams,
) -> LogisticModel {
    let n_features = rows.first().map(|r| r.len()).unwrap_or(0);
    match params.mode {
        MultiClassMode::Multinomial => {
            let objective =
                LogisticObjective::new(rows, targets, n_classes, params.weighting, params.l2);
            let (w, gn) = minimize(&objective, params.tolerance, params.max_iter);
            LogisticModel {
                mode: MultiClassMode::Multinomial,
                weights: vec![w],
                n_classes,
                n_features,
                grad_norms: vec![gn],
            }
        }
        MultiClassMode::OneVsRest => {
            let mut weights = Vec::with_capacity(n_classes);
            let mut grad_norms = Vec::with_capacity(n_classes);
            for class in 0..n_classes {
                let binary: Vec<usize> =
                    targets.iter().map(|&t| usize::from(t == class)).collect();
                let objective =
                    LogisticObjective::new(rows, &binary, 2, params.weighting, params.l2);
                let (w, gn) = minimize(&objective, params.tolerance, params.max_iter);
                weights.push(w);
                grad_norms.push(gn);
            }
            LogisticModel {
                mode: MultiClassMode::OneVsRest,
                weights,
                n_classes,
                n_features,
                grad_norms,
            }
        }
    }
}

impl LogisticModel {
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let stride = self.n_features + 1;
        let score = |w: &[f64], k: usize| -> f64 {
            let wk = &w[k * stride..(k + 1) * stride];
            row.iter().zip(wk).map(|(x, c)| x * c).sum::<f64>() + wk[stride - 1]
        };
        match self.mode {
            MultiClassMode::Multinomial => {
                let scores: Vec<f64> =
                    (0..self.n_classes).map(|k| score(&self.weights[0], k)).collect();
                softmax(&scores)
            }
            MultiClassMode::OneVsRest => {
                let raw: Vec<f64> = self
                    .weights
                    .iter()
                    .map(|w| {
                        let s = [score(w, 0), score(w, 1)];
                        softmax(&s)[1]
                    })
                    .collect();
                let total: f64 = raw.iter().sum();
                if total <= 0.0 {
                    vec![1.0 / self.n_classes as f64; self.n_classes]
                } else {
                    raw.iter().map(|p| p / total).collect()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    /// F+1 coefficients, bias last.
    pub coefficients: Vec<f64>,
    pub used_pseudo_inverse: bool,
}

/// Ordinary least squares on the design matrix with a bias column. A
/// singular normal system falls back to the SVD pseudo-inverse and logs a
/// warning.
pub fn fit_ols(rows: &[Vec<f64>], targets: &[f64]) -> Result<OlsModel> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("least squares needs rows".into()));
    }
    let n = rows.len();
    let f = rows[0].len();
    let x = DMatrix::from_fn(n, f + 1, |i, j| if j < f { rows[i][j] } else { 1.0 });
    let y = DVector::from_row_slice(targets);

    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    if let Some(chol) = xtx.clone().cholesky() {
        // A rank-deficient system can still factor with tiny pivots from
        // rounding noise; treat a collapsed pivot ratio as singular.
        let diag = chol.l().diagonal();
        let max_pivot = diag.iter().cloned().fold(0.0, f64::max);
        let min_pivot = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_pivot > 1e-7 * max_pivot {
            let w = chol.solve(&xty);
            return Ok(OlsModel {
                coefficients: w.iter().cloned().collect(),
                used_pseudo_inverse: false,
            });
        }
    }

    log::warn!("singular least-squares system; solving by pseudo-inverse");
    let svd = x.svd(true, true);
    let w = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::Numeric(format!("SVD solve failed: {e}")))?;
    Ok(OlsModel {
        coefficients: w.iter().cloned().collect(),
        used_pseudo_inverse: true,
    })
}

impl OlsModel {
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        let f = self.coefficients.len() - 1;
        row.iter()
            .zip(&self.coefficients[..f])
            .map(|(x, c)| x * c)
            .sum::<f64>()
            + self.coefficients[f]
    }
}
