//! A fitted ranking model of either kind, plus its JSON document format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambdamart::BoostedEnsemble;
use crate::tree::{Node, NodeKind, RegressionTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    Lambdamart,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::Lambdamart => "lambdamart",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decision_tree" | "tree" => Ok(ModelKind::DecisionTree),
            "lambdamart" => Ok(ModelKind::Lambdamart),
            other => Err(Error::InvalidParameter(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(RegressionTree),
    Ensemble(BoostedEnsemble),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Tree(_) => ModelKind::DecisionTree,
            Model::Ensemble(_) => ModelKind::Lambdamart,
        }
    }

    pub fn feature_count(&self) -> usize {
        match self {
            Model::Tree(t) => t.feature_count(),
            Model::Ensemble(e) => e.feature_count,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Tree(t) => t.predict(x),
            Model::Ensemble(e) => e.predict(x),
        }
    }

    pub fn trees(&self) -> &[RegressionTree] {
        match self {
            Model::Tree(t) => std::slice::from_ref(t),
            Model::Ensemble(e) => &e.trees,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let (learning_rate, init_score) = match self {
            Model::Tree(_) => (1.0, 0.0),
            Model::Ensemble(e) => (e.learning_rate, e.init_score),
        };
        let doc = ModelDocument {
            model_kind: self.kind(),
            feature_count: self.feature_count(),
            learning_rate,
            init_score,
            trees: self
                .trees()
                .iter()
                .map(|t| TreeRecord {
                    nodes: t.nodes().iter().map(NodeRecord::from).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let mut trees = Vec::with_capacity(doc.trees.len());
        for t in doc.trees {
            let nodes = t.nodes.into_iter().map(Node::try_from).collect::<Result<Vec<_>>>()?;
            trees.push(RegressionTree::from_nodes(doc.feature_count, nodes)?);
        }
        match doc.model_kind {
            ModelKind::DecisionTree => {
                if trees.len() != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "decision_tree document must hold exactly one tree, found {}",
                        trees.len()
                    )));
                }
                Ok(Model::Tree(trees.pop().unwrap()))
            }
            ModelKind::Lambdamart => Ok(Model::Ensemble(BoostedEnsemble {
                feature_count: doc.feature_count,
                trees,
                learning_rate: doc.learning_rate,
                init_score: doc.init_score,
            })),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    model_kind: ModelKind,
    feature_count: usize,
    learning_rate: f64,
    init_score: f64,
    trees: Vec<TreeRecord>,
}

#[derive(Serialize, Deserialize)]
struct TreeRecord {
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    node_id: usize,
    node_value: f64,
    sample_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split_feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left_child: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right_child: Option<usize>,
}

impl From<&Node> for NodeRecord {
    fn from(n: &Node) -> Self {
        let mut rec = NodeRecord {
            node_id: n.id,
            node_value: n.value,
            sample_fraction: n.sample_fraction,
            split_feature: None,
            threshold: None,
            left_child: None,
            right_child: None,
        };
        if let NodeKind::Split { feature, threshold, left, right } = n.kind {
            rec.split_feature = Some(feature);
            rec.threshold = Some(threshold);
            rec.left_child = Some(left);
            rec.right_child = Some(right);
        }
        rec
    }
}

impl TryFrom<NodeRecord> for Node {
    type Error = Error;

    fn try_from(r: NodeRecord) -> Result<Self> {
        let kind = match (r.split_feature, r.threshold, r.left_child, r.right_child) {
            (None, None, None, None) => NodeKind::Leaf,
            (Some(feature), Some(threshold), Some(left), Some(right)) => NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            },
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "node {} has an incomplete set of split fields",
                    r.node_id
                )))
            }
        };
        Ok(Node {
            id: r.node_id,
            value: r.node_value,
            sample_fraction: r.sample_fraction,
            kind,
        })
    }
}
