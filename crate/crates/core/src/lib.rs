//! Evaluation of local explanations for tree-based learning-to-rank models.
//!
//! The crate trains pointwise regression trees and pairwise LambdaMART
//! ensembles, explains single predictions with two local surrogate methods
//! (LIRME and EXS), extracts reference attributions from the decision paths
//! of the explained trees, and scores how closely each explanation matches.
//!
//! Module map:
//!
//! * [`data`]: LETOR parsing, per-feature statistics, synthetic datasets.
//! * [`tree`], [`lambdamart`], [`model`]: the ranking models.
//! * [`ground_truth`]: impurity and frequency attributions from decision paths.
//! * [`surrogate`]: weighted LASSO and linear epsilon-insensitive SVR solvers.
//! * [`explain`]: the LIRME and EXS pipelines.
//! * [`metrics`]: Spearman, Euclidean similarity and top-K AUC.
//! * [`harness`]: hyperparameter search, evaluation, aggregation and output files.

pub mod data;
pub mod error;
pub mod explain;
pub mod fixtures;
pub mod ground_truth;
pub mod harness;
pub mod lambdamart;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod surrogate;
pub mod tree;

pub use data::{Dataset, FeatureStats, Instance, QueryGroup};
pub use error::{Error, Result};
pub use explain::{Explanation, ExplainerConfig, Technique};
pub use ground_truth::{Attribution, GroundTruthMode};
pub use lambdamart::{BoostedEnsemble, LambdaMartParams};
pub use metrics::{Metric, SimilarityResult};
pub use model::{Model, ModelKind};
pub use tree::{RegressionTree, TreeParams};
