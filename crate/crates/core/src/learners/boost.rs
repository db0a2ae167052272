//! Stagewise gradient-boosted trees: softmax log-loss for classification,
//! squared loss for regression. Leaf values take a Newton step; the
//! training loss after every stage is kept on the model so monotonicity is
//! checkable.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, FeatureSampling, TreeParams, TreeTarget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostModel {
    /// Per-class initial scores (log priors); single entry for regression.
    pub init_scores: Vec<f64>,
    /// One tree per class per stage; regression stages hold one tree.
    pub stages: Vec<Vec<DecisionTree>>,
    pub learning_rate: f64,
    /// Zero marks a regression model.
    pub n_classes: usize,
    /// Training loss recorded after every stage.
    pub train_loss: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub n_stages: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
}

pub fn fit_classifier(
    rows: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &BoostParams,
    seed: u64,
) -> GradientBoostModel {
    let n = rows.len();
    let k = n_classes;
    let mut priors = vec![0.0; k];
    for &yi in y {
        priors[yi] += 1.0 / n as f64;
    }
    let init_scores: Vec<f64> = priors.iter().map(|p| p.max(1e-12).ln()).collect();

    let mut scores: Vec<Vec<f64>> = vec![init_scores.clone(); n];
    let mut stages = Vec::with_capacity(params.n_stages);
    let mut train_loss = Vec::with_capacity(params.n_stages);
    let weights = vec![1.0; n];
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        feature_sampling: FeatureSampling::All,
    };
    // The tree fit itself is deterministic with full feature scans; the rng
    // only exists to satisfy the fitting interface.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..params.n_stages {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let mut stage = Vec::with_capacity(k);
        for class in 0..k {
            let residuals: Vec<f64> = (0..n)
                .map(|i| (if y[i] == class { 1.0 } else { 0.0 }) - probs[i][class])
                .collect();
            let mut tree =
                DecisionTree::fit(rows, &TreeTarget::Values(&residuals), &weights, &tree_params, &mut rng);

            // Newton step per leaf: (K-1)/K · Σr / Σ|r|(1-|r|).
            let mut num: BTreeMap<usize, f64> = BTreeMap::new();
            let mut den: BTreeMap<usize, f64> = BTreeMap::new();
            for (i, row) in rows.iter().enumerate() {
                let leaf = tree.leaf_of(row);
                *num.entry(leaf).or_default() += residuals[i];
                *den.entry(leaf).or_default() += residuals[i].abs() * (1.0 - residuals[i].abs());
            }
            let gammas: BTreeMap<usize, f64> = num
                .iter()
                .map(|(leaf, r)| {
                    let d = den[leaf];
                    let g = if d.abs() < 1e-12 {
                        0.0
                    } else {
                        (k as f64 - 1.0) / k as f64 * r / d
                    };
                    (*leaf, g)
                })
                .collect();
            tree.set_leaf_values(&gammas);

            for (i, row) in rows.iter().enumerate() {
                scores[i][class] += params.learning_rate * tree.predict_value(row);
            }
            stage.push(tree);
        }
        stages.push(stage);

        let loss = -scores
            .iter()
            .zip(y)
            .map(|(s, &yi)| softmax(s)[yi].max(1e-300).ln())
            .sum::<f64>()
            / n as f64;
        train_loss.push(loss);
    }

    GradientBoostModel {
        init_scores,
        stages,
        learning_rate: params.learning_rate,
        n_classes: k,
        train_loss,
    }
}

pub fn fit_regressor(
    rows: &[Vec<f64>],
    y: &[f64],
    params: &BoostParams,
    seed: u64,
) -> GradientBoostModel {
    let n = rows.len();
    let init = y.iter().sum::<f64>() / n as f64;
    let mut current: Vec<f64> = vec![init; n];
    let mut stages = Vec::with_capacity(params.n_stages);
    let mut train_loss = Vec::with_capacity(params.n_stages);
    let weights = vec![1.0; n];
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: 2,
        feature_sampling: FeatureSampling::All,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..params.n_stages {
        let residuals: Vec<f64> = y.iter().zip(&current).map(|(t, f)| t - f).collect();
        let tree =
            DecisionTree::fit(rows, &TreeTarget::Values(&residuals), &weights, &tree_params, &mut rng);
        for (i, row) in rows.iter().enumerate() {
            current[i] += params.learning_rate * tree.predict_value(row);
        }
        stages.push(vec![tree]);
        let mse = y
            .iter()
            .zip(&current)
            .map(|(t, f)| (t - f) * (t - f))
            .sum::<f64>()
            / n as f64;
        train_loss.push(mse);
    }

    GradientBoostModel {
        init_scores: vec![init],
        stages,
        learning_rate: params.learning_rate,
        n_classes: 0,
        train_loss,
    }
}

impl GradientBoostModel {
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut scores = self.init_scores.clone();
        for stage in &self.stages {
            for (class, tree) in stage.iter().enumerate() {
                scores[class] += self.learning_rate * tree.predict_value(row);
            }
        }
        softmax(&scores)
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        let mut v = self.init_scores[0];
        for stage in &self.stages {
            v += self.learning_rate * stage[0].predict_value(row);
        }
        v
    }

    /// Total per-feature impurity decrease across all trees.
    pub fn importances(&self) -> Vec<f64> {
        let n_features = self
            .stages
            .first()
            .and_then(|s| s.first())
            .map(|t| t.importances.len())
            .unwrap_or(0);
        let mut acc = vec![0.0; n_features];
        for stage in &self.stages {
            for tree in stage {
                for (a, v) in acc.iter_mut().zip(&tree.importances) {
                    *a += v;
                }
            }
        }
        acc
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
