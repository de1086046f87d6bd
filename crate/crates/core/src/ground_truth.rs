//! Reference attributions read off decision paths.
//!
//! Impurity mode credits each split feature with the change in node value
//! from the splitting node to the next node on the path (a treeinterpreter
//! style decomposition); the root value is the bias, so for a single tree
//! `bias + sum(scores)` is the prediction. Frequency mode counts how often
//! each feature splits along the path, normalized by the number of splits.
//! Ensembles average per-tree attributions with raw, unscaled node values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::tree::RegressionTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthMode {
    Impurity,
    Frequency,
}

impl GroundTruthMode {
    pub const ALL: [GroundTruthMode; 2] = [GroundTruthMode::Impurity, GroundTruthMode::Frequency];

    pub fn as_str(self) -> &'static str {
        match self {
            GroundTruthMode::Impurity => "impurity",
            GroundTruthMode::Frequency => "frequency",
        }
    }
}

impl fmt::Display for GroundTruthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroundTruthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impurity" => Ok(GroundTruthMode::Impurity),
            "frequency" => Ok(GroundTruthMode::Frequency),
            other => Err(Error::InvalidParameter(format!("unknown ground-truth mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub mode: GroundTruthMode,
    /// Root node value in impurity mode, 0 in frequency mode.
    pub bias: f64,
    pub scores: Vec<f64>,
}

pub fn impurity_attribution(tree: &RegressionTree, x: &[f64]) -> Result<Attribution> {
    let path = tree.decision_path(x)?;
    let mut scores = vec![0.0; tree.feature_count()];
    for pair in path.windows(2) {
        let (parent, child) = (pair[0], pair[1]);
        let feature = parent.split_feature.expect("only the last path step is a leaf");
        scores[feature] += child.node_value - parent.node_value;
    }
    Ok(Attribution {
        mode: GroundTruthMode::Impurity,
        bias: path[0].node_value,
        scores,
    })
}

pub fn frequency_attribution(tree: &RegressionTree, x: &[f64]) -> Result<Attribution> {
    let path = tree.decision_path(x)?;
    let mut scores = vec![0.0; tree.feature_count()];
    let splits: Vec<usize> = path.iter().filter_map(|s| s.split_feature).collect();
    for &f in &splits {
        scores[f] += 1.0;
    }
    if !splits.is_empty() {
        let n = splits.len() as f64;
        scores.iter_mut().for_each(|s| *s /= n);
    }
    Ok(Attribution {
        mode: GroundTruthMode::Frequency,
        bias: 0.0,
        scores,
    })
}

pub fn tree_attribution(tree: &RegressionTree, x: &[f64], mode: GroundTruthMode) -> Result<Attribution> {
    match mode {
        GroundTruthMode::Impurity => impurity_attribution(tree, x),
        GroundTruthMode::Frequency => frequency_attribution(tree, x),
    }
}

/// Arithmetic mean of per-tree attributions.
pub fn ensemble_attribution(trees: &[RegressionTree], x: &[f64], mode: GroundTruthMode) -> Result<Attribution> {
    let Some(first) = trees.first() else {
        return Err(Error::Empty("attribution of an empty ensemble"));
    };
    if trees.len() == 1 {
        return tree_attribution(first, x, mode);
    }
    let mut scores = vec![0.0; first.feature_count()];
    let mut bias = 0.0;
    for tree in trees {
        let a = tree_attribution(tree, x, mode)?;
        bias += a.bias;
        for (acc, s) in scores.iter_mut().zip(&a.scores) {
            *acc += s;
        }
    }
    let n = trees.len() as f64;
    scores.iter_mut().for_each(|s| *s /= n);
    Ok(Attribution {
        mode,
        bias: bias / n,
        scores,
    })
}

pub fn model_attribution(model: &Model, x: &[f64], mode: GroundTruthMode) -> Result<Attribution> {
    ensemble_attribution(model.trees(), x, mode)
}

/// Number of splitting nodes on the path, averaged over trees.
pub fn path_depth(trees: &[RegressionTree], x: &[f64]) -> Result<f64> {
    if trees.is_empty() {
        return Err(Error::Empty("path depth of an empty ensemble"));
    }
    let mut total = 0usize;
    for tree in trees {
        total += tree.decision_path(x)?.len() - 1;
    }
    Ok(total as f64 / trees.len() as f64)
}
