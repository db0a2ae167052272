//! Adaptive boosting: SAMME for classification, AdaBoost.R2 for
//! regression. Degenerate rounds (perfect or worse-than-chance base
//! learners) terminate boosting early with the standard handling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, FeatureSampling, TreeParams, TreeTarget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    /// (tree, stage weight alpha) pairs.
    pub stages: Vec<(DecisionTree, f64)>,
    pub n_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostR2Model {
    /// (tree, log(1/beta)) pairs.
    pub stages: Vec<(DecisionTree, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaParams {
    pub n_stages: usize,
    pub max_depth: Option<usize>,
}

fn argmax_low(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in dist.iter().enumerate().skip(1) {
        if *v > dist[best] {
            best = i;
        }
    }
    best
}

/// SAMME with weighted CART base learners.
pub fn fit_classifier(
    rows: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &AdaParams,
    seed: u64,
) -> AdaBoostModel {
    let n = rows.len();
    let k = n_classes as f64;
    let mut weights = vec![1.0 / n as f64; n];
    let mut stages: Vec<(DecisionTree, f64)> = Vec::new();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        feature_sampling: FeatureSampling::All,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..params.n_stages {
        let tree = DecisionTree::fit(
            rows,
            &TreeTarget::Classes { y, n_classes },
            &weights,
            &tree_params,
            &mut rng,
        );
        let pred: Vec<usize> = rows
            .iter()
            .map(|r| argmax_low(&tree.predict_distribution(r)))
            .collect();
        let err: f64 = weights
            .iter()
            .zip(pred.iter().zip(y))
            .filter(|(_, (p, t))| p != t)
            .map(|(w, _)| w)
            .sum();

        if err <= 1e-10 {
            // Perfect stage dominates the vote; nothing left to reweight.
            stages.push((tree, (1e10_f64).ln() + (k - 1.0).ln()));
            break;
        }
        if err >= 1.0 - 1.0 / k {
            // Worse than chance: discard unless it is all we have.
            if stages.is_empty() {
                stages.push((tree, 1e-6));
            }
            break;
        }

        let alpha = ((1.0 - err) / err).ln() + (k - 1.0).ln();
        for (w, (p, t)) in weights.iter_mut().zip(pred.iter().zip(y)) {
            if p != t {
                *w *= alpha.exp();
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        stages.push((tree, alpha));
    }

    AdaBoostModel { stages, n_classes }
}

impl AdaBoostModel {
    /// Normalized alpha-weighted vote.
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for (tree, alpha) in &self.stages {
            votes[argmax_low(&tree.predict_distribution(row))] += alpha;
        }
        let total: f64 = votes.iter().sum();
        if total <= 0.0 {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        } else {
            votes.iter().map(|v| v / total).collect()
        }
    }

    pub fn importances(&self) -> Vec<f64> {
        sum_importances(&self.stages)
    }
}

/// AdaBoost.R2 with weight-resampled CART regression stumps/trees.
pub fn fit_regressor(
    rows: &[Vec<f64>],
    y: &[f64],
    params: &AdaParams,
    seed: u64,
) -> AdaBoostR2Model {
    let n = rows.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stages: Vec<(DecisionTree, f64)> = Vec::new();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        feature_sampling: FeatureSampling::All,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..params.n_stages {
        // Resample by the current weights, expressed as counts so the fit
        // shares the one row-major matrix.
        let mut counts = vec![0.0; n];
        let cdf: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        for _ in 0..n {
            let u: f64 = rng.gen::<f64>() * cdf[n - 1];
            let idx = cdf.partition_point(|c| *c < u).min(n - 1);
            counts[idx] += 1.0;
        }

        let tree = DecisionTree::fit(rows, &TreeTarget::Values(y), &counts, &tree_params, &mut rng);
        let errors: Vec<f64> = rows
            .iter()
            .zip(y)
            .map(|(r, t)| (tree.predict_value(r) - t).abs())
            .collect();
        let max_err = errors.iter().cloned().fold(0.0, f64::max);
        if max_err <= 1e-12 {
            stages.push((tree, (1e10_f64).ln()));
            break;
        }
        let losses: Vec<f64> = errors.iter().map(|e| e / max_err).collect();
        let avg_loss: f64 = weights.iter().zip(&losses).map(|(w, l)| w * l).sum();
        if avg_loss >= 0.5 {
            if stages.is_empty() {
                stages.push((tree, 1e-6));
            }
            break;
        }
        let beta = avg_loss / (1.0 - avg_loss);
        for (w, l) in weights.iter_mut().zip(&losses) {
            *w *= beta.powf(1.0 - l);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        stages.push((tree, (1.0 / beta).ln()));
    }

    AdaBoostR2Model { stages }
}

impl AdaBoostR2Model {
    /// Weighted median of the stage predictions.
    pub fn predict_value(&self, row: &[f64]) -> f64 {
        let mut preds: Vec<(f64, f64)> = self
            .stages
            .iter()
            .map(|(t, w)| (t.predict_value(row), *w))
            .collect();
        preds.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite predictions"));
        let total: f64 = preds.iter().map(|(_, w)| w).sum();
        let mut acc = 0.0;
        for (p, w) in &preds {
            acc += w;
            if acc >= total / 2.0 {
                return *p;
            }
        }
        preds.last().map(|(p, _)| *p).unwrap_or(0.0)
    }

    pub fn importances(&self) -> Vec<f64> {
        sum_importances(&self.stages)
    }
}

fn sum_importances(stages: &[(DecisionTree, f64)]) -> Vec<f64> {
    let n_features = stages.first().map(|(t, _)| t.importances.len()).unwrap_or(0);
    let mut acc = vec![0.0; n_features];
    for (tree, _) in stages {
        for (a, v) in acc.iter_mut().zip(&tree.importances) {
            *a += v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samme_improves_on_stumps() {
        // Two features jointly decide the class: a stump cannot be perfect,
        // boosted stumps can.
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|i| vec![((i / 2) % 2) as f64, (i % 2) as f64])
            .collect();
        let y: Vec<usize> = rows
            .iter()
            .map(|r| if r[0] + r[1] >= 1.5 { 1 } else { 0 })
            .collect();
        let one = fit_classifier(&rows, &y, 2, &AdaParams { n_stages: 1, max_depth: Some(1) }, 0);
        let many = fit_classifier(&rows, &y, 2, &AdaParams { n_stages: 20, max_depth: Some(1) }, 0);
        let acc = |m: &AdaBoostModel| {
            rows.iter()
                .zip(&y)
                .filter(|(r, t)| argmax_low(&m.predict_distribution(r)) == **t)
                .count()
        };
        assert!(acc(&many) >= acc(&one));
        assert_eq!(acc(&many), 100);
    }

    #[test]
    fn perfect_first_stage_short_circuits() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let model = fit_classifier(&rows, &y, 2, &AdaParams { n_stages: 50, max_depth: None }, 0);
        assert_eq!(model.stages.len(), 1);
        assert_eq!(argmax_low(&model.predict_distribution(&[3.0])), 0);
        assert_eq!(argmax_low(&model.predict_distribution(&[15.0])), 1);
    }

    #[test]
    fn votes_form_a_distribution() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 6) as f64, (i % 5) as f64]).collect();
        let y: Vec<usize> = (0..60).map(|i| (i % 6) / 2).collect();
        let model = fit_classifier(&rows, &y, 3, &AdaParams { n_stages: 10, max_depth: Some(2) }, 1);
        for row in rows.iter().take(6) {
            let d = model.predict_distribution(row);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn r2_learns_a_step() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i < 20 { 0.0 } else { 2.0 }).collect();
        let model = fit_regressor(&rows, &y, &AdaParams { n_stages: 10, max_depth: Some(2) }, 3);
        assert!(model.predict_value(&[5.0]) < 0.5);
        assert!(model.predict_value(&[35.0]) > 1.5);
    }

    #[test]
    fn r2_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i % 7) as f64).sin()).collect();
        let a = fit_regressor(&rows, &y, &AdaParams { n_stages: 8, max_depth: Some(3) }, 9);
        let b = fit_regressor(&rows, &y, &AdaParams { n_stages: 8, max_depth: Some(3) }, 9);
        assert_eq!(a, b);
    }
}
