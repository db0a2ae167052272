//! The supervised learner suite.
//!
//! Every learner trains from a [`FeatureMatrix`](crate::features::FeatureMatrix)
//! and is driven by a [`LearnerConfig`]: an algorithm, a task framing
//! (classification, ordinal decomposition, or regression on the class
//! index), a hyperparameter map restricted to that algorithm's documented
//! grid keys, and a seed. Fitting is deterministic given the seed.

pub mod adaboost;
pub mod artifact;
pub mod boost;
pub mod forest;
pub mod importance;
pub mod linear;
pub mod naive_bayes;
pub mod ordinal;
pub mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

pub use importance::{feature_importance, impurity_importance, permutation_importance};
pub use ordinal::ordinal_wrap;

pub(crate) use forest::derive_seed;

/// Grid keys reserved for a future RBF-kernel SVM learner; configs naming
/// them parse, but no SVM implementation is wired in.
pub const SVM_RESERVED_KEYS: [&str; 2] = ["kernel", "gamma"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DecisionTree,
    RandomForest,
    GradientBoost,
    AdaBoost,
    Logistic,
    GaussianNb,
    MultinomialNb,
    LinearRegression,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::GradientBoost => "gradient_boost",
            Algorithm::AdaBoost => "adaboost",
            Algorithm::Logistic => "logistic",
            Algorithm::GaussianNb => "gaussian_nb",
            Algorithm::MultinomialNb => "multinomial_nb",
            Algorithm::LinearRegression => "linear_regression",
        }
    }

    pub fn from_name(name: &str) -> Option<Algorithm> {
        use Algorithm::*;
        [
            DecisionTree,
            RandomForest,
            GradientBoost,
            AdaBoost,
            Logistic,
            GaussianNb,
            MultinomialNb,
            LinearRegression,
        ]
        .into_iter()
        .find(|a| a.name() == name)
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Algorithm::DecisionTree => &["max_depth"],
            Algorithm::RandomForest => &["n_trees", "max_depth", "bootstrap", "max_features"],
            Algorithm::GradientBoost => &["n_trees", "max_depth", "learning_rate"],
            Algorithm::AdaBoost => &["n_trees", "max_depth"],
            Algorithm::Logistic => &["class_weight", "multi_class", "l2", "tol", "max_iter"],
            Algorithm::GaussianNb | Algorithm::MultinomialNb | Algorithm::LinearRegression => &[],
        }
    }

    /// True when predict_proba is meaningful (required by the ordinal
    /// decomposition).
    pub fn is_probabilistic(self) -> bool {
        self != Algorithm::LinearRegression
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Ordinal,
    Regression,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Ordinal => "ordinal",
            Task::Regression => "regression",
        }
    }
}

/// A hyperparameter value in a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl HyperValue {
    pub fn label(&self) -> String {
        match self {
            HyperValue::Int(v) => v.to_string(),
            HyperValue::Float(v) => v.to_string(),
            HyperValue::Text(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub task: Task,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, HyperValue>,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, task: Task, seed: u64) -> LearnerConfig {
        LearnerConfig {
            algorithm,
            task,
            hyperparams: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: HyperValue) -> LearnerConfig {
        self.hyperparams.insert(key.to_string(), value);
        self
    }

    /// Rejects hyperparameter keys outside the algorithm's documented grid.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.algorithm.allowed_keys();
        for key in self.hyperparams.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "hyperparameter {key:?} is not a grid key of {}",
                    self.algorithm.name()
                )));
            }
        }
        match self.task {
            Task::Classification | Task::Ordinal => {
                if self.algorithm == Algorithm::LinearRegression {
                    return Err(Error::Config(
                        "linear_regression has no class probabilities; use task=regression".into(),
                    ));
                }
            }
            Task::Regression => {
                if matches!(
                    self.algorithm,
                    Algorithm::Logistic | Algorithm::GaussianNb | Algorithm::MultinomialNb
                ) {
                    return Err(Error::Config(format!(
                        "{} is a classifier; use task=classification or ordinal",
                        self.algorithm.name()
                    )));
                }
            }
        }
        Ok(())
    }

    fn usize_param(&self, key: &str, default: usize) -> Result<usize> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(HyperValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            Some(other) => Err(Error::Config(format!(
                "{key} must be a non-negative integer, got {other:?}"
            ))),
        }
    }

    fn f64_param(&self, key: &str, default: f64) -> Result<f64> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(HyperValue::Float(v)) => Ok(*v),
            Some(HyperValue::Int(v)) => Ok(*v as f64),
            Some(other) => Err(Error::Config(format!(
                "{key} must be numeric, got {other:?}"
            ))),
        }
    }

    fn text_param(&self, key: &str, default: &str) -> String {
        match self.hyperparams.get(key) {
            Some(HyperValue::Text(v)) => v.clone(),
            _ => default.to_string(),
        }
    }

    /// `max_depth`: an integer, or the text `none` for unlimited depth
    /// ("until all leaves are pure").
    fn depth_param(&self) -> Result<Option<usize>> {
        match self.hyperparams.get("max_depth") {
            None => Ok(None),
            Some(HyperValue::Int(v)) if *v >= 1 => Ok(Some(*v as usize)),
            Some(HyperValue::Text(t)) if t == "none" => Ok(None),
            Some(other) => Err(Error::Config(format!(
                "max_depth must be a positive integer or \"none\", got {other:?}"
            ))),
        }
    }

    /// Short human-readable form for reports: `random_forest{max_depth=3,n_trees=50}`.
    pub fn label(&self) -> String {
        if self.hyperparams.is_empty() {
            return self.algorithm.name().to_string();
        }
        let params: Vec<String> = self
            .hyperparams
            .iter()
            .map(|(k, v)| format!("{k}={}", v.label()))
            .collect();
        format!("{}{{{}}}", self.algorithm.name(), params.join(","))
    }
}

/// Learned parameters of one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    Tree(tree::DecisionTree),
    Forest(forest::ForestModel),
    GradientBoost(boost::GradientBoostModel),
    AdaBoost(adaboost::AdaBoostModel),
    AdaBoostR2(adaboost::AdaBoostR2Model),
    Logistic(linear::LogisticModel),
    GaussianNb(naive_bayes::GaussianNbModel),
    MultinomialNb(naive_bayes::MultinomialNbModel),
    Ols(linear::OlsModel),
    Ordinal(ordinal::OrdinalModel),
}

/// A fitted model bound to the feature schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: LearnerConfig,
    pub schema: Vec<String>,
    pub n_classes: usize,
    pub params: ModelParams,
}

/// Output of [`predict`]: class indices for classification/ordinal, raw
/// continuous values for regression.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

/// Trains a model according to the config.
pub fn fit(config: &LearnerConfig, matrix: &FeatureMatrix) -> Result<TrainedModel> {
    config.validate()?;
    if matrix.n_rows() == 0 {
        return Err(Error::InvalidInput("cannot fit on an empty matrix".into()));
    }
    match config.task {
        Task::Classification => {
            require_two_classes(matrix)?;
            fit_classifier(config, matrix)
        }
        Task::Ordinal => {
            require_two_classes(matrix)?;
            ordinal::ordinal_wrap(config, matrix)
        }
        Task::Regression => fit_regressor(config, matrix),
    }
}

fn require_two_classes(matrix: &FeatureMatrix) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for &t in &matrix.targets {
        if t >= matrix.n_classes {
            return Err(Error::InvalidInput(format!(
                "target {t} out of range for {} classes",
                matrix.n_classes
            )));
        }
        seen.insert(t);
    }
    if seen.len() < 2 {
        return Err(Error::InvalidInput(
            "classification needs at least two classes present in training data".into(),
        ));
    }
    Ok(())
}

pub(crate) fn fit_classifier(config: &LearnerConfig, matrix: &FeatureMatrix) -> Result<TrainedModel> {
    use rand::SeedableRng;
    let rows = &matrix.rows;
    let y = &matrix.targets;
    let k = matrix.n_classes;
    let params = match config.algorithm {
        Algorithm::DecisionTree => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            let tree = tree::DecisionTree::fit(
                rows,
                &tree::TreeTarget::Classes { y, n_classes: k },
                &vec![1.0; rows.len()],
                &tree::TreeParams {
                    max_depth: config.depth_param()?,
                    min_samples_split: 2,
                    feature_sampling: tree::FeatureSampling::All,
                },
                &mut rng,
            );
            ModelParams::Tree(tree)
        }
        Algorithm::RandomForest => ModelParams::Forest(forest::fit_classifier(
            rows,
            y,
            k,
            &forest::ForestParams {
                n_trees: config.usize_param("n_trees", 100)?,
                max_depth: config.depth_param()?,
                bootstrap: config.text_param("bootstrap", "true") != "false",
                feature_sampling: feature_sampling_param(config, tree::FeatureSampling::Sqrt)?,
            },
            config.seed,
        )),
        Algorithm::GradientBoost => ModelParams::GradientBoost(boost::fit_classifier(
            rows,
            y,
            k,
            &boost::BoostParams {
                n_stages: config.usize_param("n_trees", 100)?,
                max_depth: config.depth_param()?,
                learning_rate: config.f64_param("learning_rate", 0.1)?,
            },
            config.seed,
        )),
        Algorithm::AdaBoost => ModelParams::AdaBoost(adaboost::fit_classifier(
            rows,
            y,
            k,
            &adaboost::AdaParams {
                n_stages: config.usize_param("n_trees", 50)?,
                max_depth: config.depth_param()?,
            },
            config.seed,
        )),
        Algorithm::Logistic => ModelParams::Logistic(linear::fit_logistic(
            rows,
            y,
            k,
            &logistic_params(config)?,
        )),
        Algorithm::GaussianNb => ModelParams::GaussianNb(naive_bayes::fit_gaussian(rows, y, k)),
        Algorithm::MultinomialNb => {
            ModelParams::MultinomialNb(naive_bayes::fit_multinomial(rows, y, k))
        }
        Algorithm::LinearRegression => unreachable!("rejected by validate"),
    };
    Ok(TrainedModel {
        config: config.clone(),
        schema: matrix.column_names.clone(),
        n_classes: k,
        params,
    })
}

fn fit_regressor(config: &LearnerConfig, matrix: &FeatureMatrix) -> Result<TrainedModel> {
    use rand::SeedableRng;
    let rows = &matrix.rows;
    let y: Vec<f64> = matrix.targets.iter().map(|&t| t as f64).collect();
    let params = match config.algorithm {
        Algorithm::DecisionTree => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            let tree = tree::DecisionTree::fit(
                rows,
                &tree::TreeTarget::Values(&y),
                &vec![1.0; rows.len()],
                &tree::TreeParams {
                    max_depth: config.depth_param()?,
                    min_samples_split: 2,
                    feature_sampling: tree::FeatureSampling::All,
                },
                &mut rng,
            );
            ModelParams::Tree(tree)
        }
        Algorithm::RandomForest => ModelParams::Forest(forest::fit_regressor(
            rows,
            &y,
            &forest::ForestParams {
                n_trees: config.usize_param("n_trees", 100)?,
                max_depth: config.depth_param()?,
                bootstrap: config.text_param("bootstrap", "true") != "false",
                feature_sampling: feature_sampling_param(config, tree::FeatureSampling::Third)?,
            },
            config.seed,
        )),
        Algorithm::GradientBoost => ModelParams::GradientBoost(boost::fit_regressor(
            rows,
            &y,
            &boost::BoostParams {
                n_stages: config.usize_param("n_trees", 100)?,
                max_depth: config.depth_param()?,
                learning_rate: config.f64_param("learning_rate", 0.1)?,
            },
            config.seed,
        )),
        Algorithm::AdaBoost => ModelParams::AdaBoostR2(adaboost::fit_regressor(
            rows,
            &y,
            &adaboost::AdaParams {
                n_stages: config.usize_param("n_trees", 50)?,
                max_depth: config.depth_param()?,
            },
            config.seed,
        )),
        Algorithm::LinearRegression => ModelParams::Ols(linear::fit_ols(rows, &y)?),
        Algorithm::Logistic | Algorithm::GaussianNb | Algorithm::MultinomialNb => {
            unreachable!("rejected by validate")
        }
    };
    Ok(TrainedModel {
        config: config.clone(),
        schema: matrix.column_names.clone(),
        n_classes: matrix.n_classes,
        params,
    })
}

fn feature_sampling_param(
    config: &LearnerConfig,
    default: tree::FeatureSampling,
) -> Result<tree::FeatureSampling> {
    match config.text_param(
        "max_features",
        match default {
            tree::FeatureSampling::All => "all",
            tree::FeatureSampling::Sqrt => "sqrt",
            tree::FeatureSampling::Third => "third",
        },
    )
    .as_str()
    {
        "all" => Ok(tree::FeatureSampling::All),
        "sqrt" => Ok(tree::FeatureSampling::Sqrt),
        "third" => Ok(tree::FeatureSampling::Third),
        other => Err(Error::Config(format!(
            "max_features must be all|sqrt|third, got {other:?}"
        ))),
    }
}

fn logistic_params(config: &LearnerConfig) -> Result<linear::LogisticParams> {
    let mode = match config.text_param("multi_class", "auto").as_str() {
        // `auto` resolves to the multinomial objective.
        "auto" | "multinomial" => linear::MultiClassMode::Multinomial,
        "ovr" => linear::MultiClassMode::OneVsRest,
        other => {
            return Err(Error::Config(format!(
                "multi_class must be auto|multinomial|ovr, got {other:?}"
            )))
        }
    };
    let weighting = match config.text_param("class_weight", "uniform").as_str() {
        "uniform" => linear::ClassWeighting::Uniform,
        "balanced" => linear::ClassWeighting::Balanced,
        other => {
            return Err(Error::Config(format!(
                "class_weight must be uniform|balanced, got {other:?}"
            )))
        }
    };
    Ok(linear::LogisticParams {
        mode,
        weighting,
        l2: config.f64_param("l2", 1.0)?,
        tolerance: config.f64_param("tol", 1e-6)?,
        max_iter: config.usize_param("max_iter", 1000)?,
    })
}

impl TrainedModel {
    fn check_schema(&self, matrix: &FeatureMatrix) -> Result<()> {
        if self.schema != matrix.column_names {
            return Err(Error::SchemaMismatch(format!(
                "model was trained on {} columns, matrix has {}",
                self.schema.len(),
                matrix.n_cols()
            )));
        }
        Ok(())
    }

    /// Per-row class distributions; rows sum to 1 within 1e-9.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_schema(matrix)?;
        let dist = |row: &[f64]| -> Result<Vec<f64>> {
            Ok(match &self.params {
                ModelParams::Tree(m) => m.predict_distribution(row),
                ModelParams::Forest(m) => m.predict_distribution(row),
                ModelParams::GradientBoost(m) => m.predict_distribution(row),
                ModelParams::AdaBoost(m) => m.predict_distribution(row),
                ModelParams::Logistic(m) => m.predict_distribution(row),
                ModelParams::GaussianNb(m) => m.predict_distribution(row),
                ModelParams::MultinomialNb(m) => m.predict_distribution(row),
                ModelParams::Ordinal(m) => m.predict_distribution(row)?,
                ModelParams::Ols(_) | ModelParams::AdaBoostR2(_) => {
                    return Err(Error::InvalidInput(
                        "regression models have no class probabilities".into(),
                    ))
                }
            })
        };
        matrix.rows.iter().map(|r| dist(r)).collect()
    }

    /// Raw continuous outputs of a regression-task model.
    pub fn predict_values(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_schema(matrix)?;
        let value = |row: &[f64]| -> Result<f64> {
            Ok(match &self.params {
                ModelParams::Tree(m) => m.predict_value(row),
                ModelParams::Forest(m) => m.predict_value(row),
                ModelParams::GradientBoost(m) => m.predict_value(row),
                ModelParams::AdaBoostR2(m) => m.predict_value(row),
                ModelParams::Ols(m) => m.predict_value(row),
                _ => {
                    return Err(Error::InvalidInput(
                        "classification models produce probabilities, not values".into(),
                    ))
                }
            })
        };
        matrix.rows.iter().map(|r| value(r)).collect()
    }

    /// Class indices regardless of task: argmax (ties toward the lower
    /// class) for classification/ordinal, rounded-and-clamped values for
    /// regression.
    pub fn predict_classes(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>> {
        match self.config.task {
            Task::Classification | Task::Ordinal => Ok(self
                .predict_proba(matrix)?
                .into_iter()
                .map(|dist| argmax_low(&dist))
                .collect()),
            Task::Regression => self
                .predict_values(matrix)?
                .into_iter()
                .map(|v| regression_to_class(v, self.n_classes))
                .collect(),
        }
    }
}

/// Task-shaped prediction: class indices or raw values.
pub fn predict(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<Predictions> {
    match model.config.task {
        Task::Classification | Task::Ordinal => {
            Ok(Predictions::Classes(model.predict_classes(matrix)?))
        }
        Task::Regression => Ok(Predictions::Values(model.predict_values(matrix)?)),
    }
}

/// Argmax with ties broken toward the lower index.
pub fn argmax_low(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in dist.iter().enumerate().skip(1) {
        if *v > dist[best] {
            best = i;
        }
    }
    best
}

/// Maps a continuous prediction onto a class index: round half away from
/// zero, clamp into [0, K-1]. Non-finite values are errors.
pub fn regression_to_class(value: f64, n_classes: usize) -> Result<usize> {
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "regression produced a non-finite value: {value}"
        )));
    }
    Ok(value.round().clamp(0.0, (n_classes - 1) as f64) as usize)
}
