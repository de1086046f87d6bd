//! NDCG, pairwise lambda gradients and LambdaMART boosting.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QueryGroup};
use crate::error::{Error, Result};
use crate::tree::{fit_regression_tree, RegressionTree, TreeParams};

/// Document order by descending score, ties broken by original index.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn gain(label: u32) -> f64 {
    2f64.powi(label as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    // rank is 0-based
    1.0 / ((rank + 2) as f64).log2()
}

fn ideal_dcg(labels: &[u32]) -> f64 {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.iter().enumerate().map(|(r, &l)| gain(l) * discount(r)).sum()
}

/// Untruncated NDCG with exponential gain. Returns 0 when every label is 0.
pub fn ndcg(scores: &[f64], labels: &[u32]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::Empty("ndcg of an empty list"));
    }
    let idcg = ideal_dcg(labels);
    if idcg == 0.0 {
        return Ok(0.0);
    }
    let dcg: f64 = descending_order(scores)
        .iter()
        .enumerate()
        .map(|(r, &doc)| gain(labels[doc]) * discount(r))
        .sum();
    Ok(dcg / idcg)
}

/// Per-document lambdas for one query. Positive values push a document up.
///
/// For each pair with `label_i > label_j`,
/// `lambda_ij = -sigma * |dNDCG_ij| / (1 + exp(sigma * (s_i - s_j)))`, where
/// `|dNDCG_ij|` is the NDCG change from swapping the two documents in the
/// order induced by the current scores. Document `i` receives `-lambda_ij`
/// and `j` receives `lambda_ij`, so the output sums to zero.
pub fn lambda_gradients(scores: &[f64], labels: &[u32], sigma: f64) -> Result<Vec<f64>> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n = scores.len();
    let mut out = vec![0.0; n];
    let idcg = ideal_dcg(labels);
    if idcg == 0.0 {
        return Ok(out);
    }
    let mut rank = vec![0usize; n];
    for (r, doc) in descending_order(scores).into_iter().enumerate() {
        rank[doc] = r;
    }
    for i in 0..n {
        for j in 0..n {
            if labels[i] <= labels[j] {
                continue;
            }
            let delta = ((gain(labels[i]) - gain(labels[j]))
                * (discount(rank[i]) - discount(rank[j])))
                .abs()
                / idcg;
            let lambda = -sigma * delta / (1.0 + (sigma * (scores[i] - scores[j])).exp());
            out[i] -= lambda;
            out[j] += lambda;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMartParams {
    pub num_trees: usize,
    pub tree_params: TreeParams,
    pub learning_rate: f64,
    /// Scale of the pairwise logistic.
    pub sigma: f64,
}

impl Default for LambdaMartParams {
    fn default() -> Self {
        Self {
            num_trees: 3,
            tree_params: TreeParams {
                max_depth: 20,
                min_samples_split_fraction: 0.15,
                min_samples_leaf_fraction: 0.15,
            },
            learning_rate: 0.1,
            sigma: 1.0,
        }
    }
}

impl LambdaMartParams {
    pub fn validate(&self) -> Result<()> {
        self.tree_params.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        Ok(())
    }
}

/// Additive tree ensemble: `init_score + learning_rate * sum(tree(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsemble {
    pub feature_count: usize,
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub init_score: f64,
}

impl BoostedEnsemble {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x)?;
        }
        Ok(self.init_score + self.learning_rate * sum)
    }
}

/// Mean NDCG over queries.
pub fn mean_ndcg(scores: &[f64], ds: &Dataset, groups: &[QueryGroup]) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::Empty("mean NDCG over no queries"));
    }
    let mut total = 0.0;
    for g in groups {
        let s: Vec<f64> = g.members.iter().map(|&i| scores[i]).collect();
        let l: Vec<u32> = g.members.iter().map(|&i| ds.instances[i].label).collect();
        total += ndcg(&s, &l)?;
    }
    Ok(total / groups.len() as f64)
}

/// Gradient boosting on lambdas: each round fits one regression tree to the
/// current per-document lambdas of every query and adds it with the
/// learning rate. Leaf values are plain lambda means (no Newton step).
pub fn fit_lambdamart(
    ds: &Dataset,
    groups: &[QueryGroup],
    params: &LambdaMartParams,
) -> Result<BoostedEnsemble> {
    params.validate()?;
    let has_pair = groups.iter().any(|g| {
        let first = ds.instances[g.members[0]].label;
        g.members.iter().any(|&i| ds.instances[i].label != first)
    });
    if !has_pair {
        return Err(Error::NoValidPairs);
    }

    let rows = ds.rows();
    let mut ensemble = BoostedEnsemble {
        feature_count: ds.feature_count,
        trees: Vec::with_capacity(params.num_trees),
        learning_rate: params.learning_rate,
        init_score: 0.0,
    };
    let mut scores = vec![0.0; ds.len()];
    let mut targets = vec![0.0; ds.len()];
    for _ in 0..params.num_trees {
        for g in groups {
            let s: Vec<f64> = g.members.iter().map(|&i| scores[i]).collect();
            let l: Vec<u32> = g.members.iter().map(|&i| ds.instances[i].label).collect();
            let lambdas = lambda_gradients(&s, &l, params.sigma)?;
            for (&i, lam) in g.members.iter().zip(lambdas) {
                targets[i] = lam;
            }
        }
        let tree = fit_regression_tree(&rows, &targets, &params.tree_params, None)?;
        for (score, row) in scores.iter_mut().zip(&rows) {
            *score += params.learning_rate * tree.predict(row)?;
        }
        ensemble.trees.push(tree);
    }
    Ok(ensemble)
}
