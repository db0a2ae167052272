//! Ordinal decomposition: K ordered classes become K−1 binary problems
//! "is y above threshold c_k", and the binary probability estimates are
//! differenced back into a class distribution. Negative differenced
//! entries (non-monotone binary outputs) are clipped to zero and the
//! vector renormalized.

use serde::{Deserialize, Serialize};

use super::{fit_classifier, LearnerConfig, ModelParams, Task, TrainedModel};
use crate::features::FeatureMatrix;
use crate::learners::derive_seed;
use crate::{Error, Result};

/// One binary subproblem P(y > c_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BinaryStage {
    /// The split was one-sided in training; the constant prior stands in.
    Constant(f64),
    Model(Box<TrainedModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalModel {
    /// Stage k predicts P(y > c_k), k = 0..K-2.
    pub stages: Vec<BinaryStage>,
    pub n_classes: usize,
}

/// Trains the Frank–Hall decomposition with `base_config`'s algorithm as
/// the binary learner.
pub fn ordinal_wrap(base_config: &LearnerConfig, matrix: &FeatureMatrix) -> Result<TrainedModel> {
    let k = matrix.n_classes;
    if k < 2 {
        return Err(Error::InvalidInput(
            "ordinal decomposition needs at least two classes".into(),
        ));
    }
    if !base_config.algorithm.is_probabilistic() {
        return Err(Error::Config(format!(
            "{} produces no probabilities and cannot drive the ordinal decomposition",
            base_config.algorithm.name()
        )));
    }

    let mut stages = Vec::with_capacity(k - 1);
    for threshold in 0..k - 1 {
        let binary: Vec<usize> = matrix
            .targets
            .iter()
            .map(|&t| usize::from(t > threshold))
            .collect();
        let positives = binary.iter().sum::<usize>();
        if positives == 0 || positives == binary.len() {
            stages.push(BinaryStage::Constant(
                positives as f64 / binary.len() as f64,
            ));
            continue;
        }
        let sub = matrix.with_targets(binary, 2);
        let sub_config = LearnerConfig {
            task: Task::Classification,
            seed: derive_seed(base_config.seed, threshold as u64),
            ..base_config.clone()
        };
        let model = fit_classifier(&sub_config, &sub)?;
        stages.push(BinaryStage::Model(Box::new(model)));
    }

    Ok(TrainedModel {
        config: base_config.clone(),
        schema: matrix.column_names.clone(),
        n_classes: k,
        params: ModelParams::Ordinal(OrdinalModel {
            stages,
            n_classes: k,
        }),
    })
}

impl OrdinalModel {
    pub fn predict_distribution(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut exceed = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            let p = match stage {
                BinaryStage::Constant(p) => *p,
                BinaryStage::Model(m) => {
                    let single = FeatureMatrix {
                        column_names: m.schema.clone(),
                        rows: vec![row.to_vec()],
                        column_groups: Default::default(),
                        targets: vec![0],
                        n_classes: 2,
                    };
                    m.predict_proba(&single)?[0][1]
                }
            };
            exceed.push(p);
        }
        Ok(derive_class_distribution(&exceed))
    }
}

/// Differencing step of the decomposition: given P(y > c_k) for the K−1
/// thresholds, produce the K class probabilities, clipping negatives and
/// renormalizing.
pub fn derive_class_distribution(exceed: &[f64]) -> Vec<f64> {
    let k = exceed.len() + 1;
    let mut p = Vec::with_capacity(k);
    p.push(1.0 - exceed[0]);
    for i in 1..k - 1 {
        p.push(exceed[i - 1] - exceed[i]);
    }
    p.push(exceed[k - 2]);

    for v in p.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        // Unreachable for inputs in [0,1] (the raw vector sums to 1), but
        // stay well-defined for garbage probabilities.
        return vec![1.0 / k as f64; k];
    }
    p.iter_mut().for_each(|v| *v /= total);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Algorithm, HyperValue};
    use approx::assert_abs_diff_eq;

    #[test]
    fn monotone_probabilities_difference_directly() {
        let p = derive_class_distribution(&[0.8, 0.3]);
        assert_abs_diff_eq!(p[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn non_monotone_probabilities_clip_and_renormalize() {
        // Raw differences: (0.7, -0.5, 0.8) → clip → (0.7, 0, 0.8) → /1.5.
        let p = derive_class_distribution(&[0.3, 0.8]);
        assert_abs_diff_eq!(p[0], 0.4667, epsilon = 1e-4);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.5333, epsilon = 1e-4);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn two_class_case_degenerates_to_single_binary() {
        let p = derive_class_distribution(&[0.7]);
        assert_abs_diff_eq!(p[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.7, epsilon = 1e-15);
    }

    fn ordered_matrix() -> FeatureMatrix {
        // Class grows with the single feature.
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64]).collect();
        let targets: Vec<usize> = (0..60).map(|i| i / 20).collect();
        FeatureMatrix {
            column_names: vec!["x".into()],
            rows,
            column_groups: [("x".to_string(), vec!["x".to_string()])].into_iter().collect(),
            targets,
            n_classes: 3,
        }
    }

    #[test]
    fn wrapped_trees_recover_an_ordered_signal() {
        let matrix = ordered_matrix();
        let config = LearnerConfig::new(Algorithm::DecisionTree, Task::Ordinal, 1)
            .with("max_depth", HyperValue::Int(3));
        let model = ordinal_wrap(&config, &matrix).unwrap();
        let classes = model.predict_classes(&matrix).unwrap();
        let correct = classes
            .iter()
            .zip(&matrix.targets)
            .filter(|(a, b)| a == b)
            .count();
        assert!(correct >= 57, "got {correct}/60");
    }

    #[test]
    fn missing_side_of_a_split_becomes_a_constant_prior() {
        // All labels in {1, 2}: the first threshold (y > 0) is all-positive.
        let mut matrix = ordered_matrix();
        matrix.targets = matrix.targets.iter().map(|&t| t.max(1)).collect();
        let config = LearnerConfig::new(Algorithm::GaussianNb, Task::Ordinal, 1);
        let model = ordinal_wrap(&config, &matrix).unwrap();
        match &model.params {
            ModelParams::Ordinal(om) => {
                assert!(matches!(om.stages[0], BinaryStage::Constant(p) if p == 1.0));
                assert!(matches!(om.stages[1], BinaryStage::Model(_)));
            }
            other => panic!("expected ordinal params, got {other:?}"),
        }
    }

    #[test]
    fn linear_regression_base_is_rejected() {
        let matrix = ordered_matrix();
        let config = LearnerConfig::new(Algorithm::LinearRegression, Task::Ordinal, 1);
        assert!(ordinal_wrap(&config, &matrix).is_err());
    }

    #[test]
    fn distributions_stay_valid_under_random_inputs() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let k = rng.gen_range(2..7);
            let exceed: Vec<f64> = (0..k - 1).map(|_| rng.gen::<f64>()).collect();
            let p = derive_class_distribution(&exceed);
            assert_eq!(p.len(), k);
            assert!(p.iter().all(|v| *v >= 0.0));
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }
}
