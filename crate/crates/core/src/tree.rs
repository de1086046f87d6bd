//! Pointwise CART regression trees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// A node whose share of the training weight is below this is a leaf.
    pub min_samples_split_fraction: f64,
    /// Candidate splits leaving a child below this weight share are skipped.
    pub min_samples_leaf_fraction: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_samples_split_fraction: 0.1,
            min_samples_leaf_fraction: 0.1,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.min_samples_split_fraction > 0.0 && self.min_samples_split_fraction <= 1.0) {
            return bad("min_samples_split_fraction must lie in (0, 1]");
        }
        if !(self.min_samples_leaf_fraction > 0.0 && self.min_samples_leaf_fraction <= 0.5) {
            return bad("min_samples_leaf_fraction must lie in (0, 0.5]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Leaf,
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    /// Weighted mean of the training targets reaching this node.
    pub value: f64,
    pub sample_fraction: f64,
    pub kind: NodeKind,
}

/// A binary regression tree stored in pre-order; node ids equal their
/// position and children always have larger ids than their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    feature_count: usize,
    nodes: Vec<Node>,
}

/// One node visited while routing an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    pub node_id: usize,
    /// `None` for the terminal leaf.
    pub split_feature: Option<usize>,
    pub node_value: f64,
}

impl RegressionTree {
    /// Builds a tree from explicit nodes, checking the structural invariants.
    pub fn from_nodes(feature_count: usize, nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Empty("tree without nodes"));
        }
        let mut parents = vec![0usize; nodes.len()];
        for (pos, node) in nodes.iter().enumerate() {
            let bad = |m: String| Err(Error::InvalidParameter(format!("node {pos}: {m}")));
            if node.id != pos {
                return bad(format!("id {} does not match position", node.id));
            }
            if !node.value.is_finite() || !(node.sample_fraction > 0.0 && node.sample_fraction <= 1.0) {
                return bad("value must be finite and sample_fraction in (0, 1]".into());
            }
            if let NodeKind::Split { feature, threshold, left, right } = node.kind {
                if feature >= feature_count {
                    return bad(format!("split feature {feature} out of range"));
                }
                if !threshold.is_finite() {
                    return bad("non-finite threshold".into());
                }
                for child in [left, right] {
                    if child <= pos || child >= nodes.len() {
                        return bad(format!("child {child} must follow its parent"));
                    }
                    parents[child] += 1;
                }
                if left == right {
                    return bad("left and right child coincide".into());
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&p| p != 1) {
            return Err(Error::InvalidParameter(
                "nodes do not form a single binary tree rooted at 0".into(),
            ));
        }
        Ok(Self { feature_count, nodes })
    }

    pub fn leaf(feature_count: usize, value: f64) -> Self {
        Self {
            feature_count,
            nodes: vec![Node {
                id: 0,
                value,
                sample_fraction: 1.0,
                kind: NodeKind::Leaf,
            }],
        }
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match nodes[id].kind {
                NodeKind::Leaf => 0,
                NodeKind::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Routes `x` to its leaf without a dimension check.
    fn walk(&self, x: &[f64], mut visit: impl FnMut(&Node)) {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            visit(node);
            match node.kind {
                NodeKind::Leaf => return,
                NodeKind::Split { feature, threshold, left, right } => {
                    id = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut value = 0.0;
        self.walk(x, |n| value = n.value);
        Ok(value)
    }

    /// Root-to-leaf node sequence for `x`.
    pub fn decision_path(&self, x: &[f64]) -> Result<Vec<PathStep>> {
        self.check_dim(x)?;
        let mut path = Vec::new();
        self.walk(x, |n| {
            path.push(PathStep {
                node_id: n.id,
                split_feature: match n.kind {
                    NodeKind::Split { feature, .. } => Some(feature),
                    NodeKind::Leaf => None,
                },
                node_value: n.value,
            })
        });
        Ok(path)
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a, R> {
    rows: &'a [R],
    targets: &'a [f64],
    weights: Vec<f64>,
    total_weight: f64,
    params: TreeParams,
    feature_count: usize,
    nodes: Vec<Node>,
}

impl<R: AsRef<[f64]>> Builder<'_, R> {
    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let weight: f64 = samples.iter().map(|&i| self.weights[i]).sum();
        let first = self.targets[samples[0]];
        let constant = samples.iter().all(|&i| self.targets[i] == first);
        let value = if constant {
            first
        } else {
            samples
                .iter()
                .map(|&i| self.weights[i] * self.targets[i])
                .sum::<f64>()
                / weight
        };
        let fraction = weight / self.total_weight;
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            value,
            sample_fraction: fraction.min(1.0),
            kind: NodeKind::Leaf,
        });

        if depth >= self.params.max_depth
            || constant
            || below(fraction, self.params.min_samples_split_fraction)
        {
            return id;
        }
        let Some(best) = self.best_split(&samples) else {
            return id;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.rows[i].as_ref()[best.feature] <= best.threshold);
        let left_id = self.build(left, depth + 1);
        let right_id = self.build(right, depth + 1);
        self.nodes[id].kind = NodeKind::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: left_id,
            right: right_id,
        };
        id
    }

    /// Exhaustive search over midpoints of consecutive distinct values.
    /// Strict improvement is required to replace the incumbent, so ties go to
    /// the lowest feature index and then the lowest threshold.
    fn best_split(&self, samples: &[usize]) -> Option<Candidate> {
        let total_w: f64 = samples.iter().map(|&i| self.weights[i]).sum();
        let total_wy: f64 = samples
            .iter()
            .map(|&i| self.weights[i] * self.targets[i])
            .sum();
        let min_leaf = self.params.min_samples_leaf_fraction;
        let mut best: Option<Candidate> = None;
        let mut order: Vec<usize> = samples.to_vec();

        for feature in 0..self.feature_count {
            let x = |i: usize| self.rows[i].as_ref()[feature];
            order.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
            let mut left_w = 0.0;
            let mut left_wy = 0.0;
            for pair in order.windows(2) {
                let (i, next) = (pair[0], pair[1]);
                left_w += self.weights[i];
                left_wy += self.weights[i] * self.targets[i];
                if x(i) == x(next) {
                    continue;
                }
                let right_w = total_w - left_w;
                if below(left_w / self.total_weight, min_leaf)
                    || below(right_w / self.total_weight, min_leaf)
                    || left_w <= 0.0
                    || right_w <= 0.0
                {
                    continue;
                }
                let diff = left_wy / left_w - (total_wy - left_wy) / right_w;
                let gain = left_w * right_w / total_w * diff * diff;
                if best.is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        gain,
                        feature,
                        threshold: x(i) + (x(next) - x(i)) / 2.0,
                    });
                }
            }
        }
        best
    }
}

fn below(fraction: f64, minimum: f64) -> bool {
    fraction < minimum * (1.0 - 1e-12)
}

/// Fits a regression tree by greedy weighted-variance reduction.
///
/// The impurity decrease of a split is `w_l * w_r / w * (mean_l - mean_r)^2`,
/// which is exactly the drop in weighted squared error and never negative.
pub fn fit_regression_tree<R: AsRef<[f64]>>(
    rows: &[R],
    targets: &[f64],
    params: &TreeParams,
    sample_weights: Option<&[f64]>,
) -> Result<RegressionTree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::Empty("tree training data"));
    }
    if rows.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: targets.len(),
        });
    }
    let feature_count = rows[0].as_ref().len();
    if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != feature_count) {
        return Err(Error::DimensionMismatch {
            expected: feature_count,
            got: bad.as_ref().len(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite target".into()));
    }
    let weights = match sample_weights {
        Some(w) => {
            if w.len() != rows.len() {
                return Err(Error::LengthMismatch {
                    left: rows.len(),
                    right: w.len(),
                });
            }
            if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter("sample weights must be finite and non-negative".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; rows.len()],
    };
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 {
        return Err(Error::InvalidParameter("sample weights sum to zero".into()));
    }

    // zero-weight rows cannot influence any node value
    let samples: Vec<usize> = (0..rows.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut builder = Builder {
        rows,
        targets,
        weights,
        total_weight,
        params: *params,
        feature_count,
        nodes: Vec::new(),
    };
    builder.build(samples, 0);
    Ok(RegressionTree {
        feature_count,
        nodes: builder.nodes,
    })
}
