//! Random hyperparameter search on a single train/validation split.

use rand::Rng;

use crate::data::{split_queries, Dataset};
use crate::error::{Error, Result};
use crate::lambdamart::{fit_lambdamart, mean_ndcg, BoostedEnsemble, LambdaMartParams};
use crate::rng;
use crate::tree::{fit_regression_tree, RegressionTree, TreeParams};

#[derive(Debug, Clone)]
pub struct TreeTrial {
    pub params: TreeParams,
    pub validation_mse: f64,
    pub tree: RegressionTree,
}

#[derive(Debug, Clone)]
pub struct TreeSearch {
    pub best: usize,
    pub trials: Vec<TreeTrial>,
}

impl TreeSearch {
    pub fn best_trial(&self) -> &TreeTrial {
        &self.trials[self.best]
    }
}

#[derive(Debug, Clone)]
pub struct LambdaMartTrial {
    pub params: LambdaMartParams,
    pub validation_ndcg: f64,
    pub ensemble: BoostedEnsemble,
}

#[derive(Debug, Clone)]
pub struct LambdaMartSearch {
    pub best: usize,
    pub trials: Vec<LambdaMartTrial>,
}

impl LambdaMartSearch {
    pub fn best_trial(&self) -> &LambdaMartTrial {
        &self.trials[self.best]
    }
}

fn check_inputs(train: &Dataset, valid: &Dataset, trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("search needs at least one trial".into()));
    }
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if valid.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    if train.feature_count != valid.feature_count {
        return Err(Error::DimensionMismatch {
            expected: train.feature_count,
            got: valid.feature_count,
        });
    }
    Ok(())
}

fn sample_fractions<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let split = rng.gen_range(0.1..=1.0);
    let leaf = rng.gen_range(0.1..=0.5);
    (split, leaf)
}

/// Samples `trials` pointwise tree configurations, fits each on the training
/// labels and keeps the lowest validation MSE. The first sampled wins ties.
pub fn random_search_tree(train: &Dataset, valid: &Dataset, trials: usize, seed: u64) -> Result<TreeSearch> {
    check_inputs(train, valid, trials)?;
    let mut rng = rng::stream(seed, &["search", "decision_tree"]);
    let rows = train.rows();
    let targets: Vec<f64> = train.instances.iter().map(|i| f64::from(i.label)).collect();

    let mut out = TreeSearch { best: 0, trials: Vec::with_capacity(trials) };
    for t in 0..trials {
        let (split, leaf) = sample_fractions(&mut rng);
        let params = TreeParams {
            max_depth: rng.gen_range(1..=20),
            min_samples_split_fraction: split,
            min_samples_leaf_fraction: leaf,
        };
        let tree = fit_regression_tree(&rows, &targets, &params, None)?;
        let validation_mse = tree_mse(&tree, valid)?;
        if t > 0 && validation_mse < out.trials[out.best].validation_mse {
            out.best = t;
        }
        out.trials.push(TreeTrial { params, validation_mse, tree });
    }
    Ok(out)
}

pub fn tree_mse(tree: &RegressionTree, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut sum = 0.0;
    for inst in &ds.instances {
        let err = tree.predict(&inst.features)? - f64::from(inst.label);
        sum += err * err;
    }
    Ok(sum / ds.len() as f64)
}

/// Like [`random_search_tree`] for LambdaMART, maximizing mean validation
/// NDCG over queries.
pub fn random_search_lambdamart(
    train: &Dataset,
    valid: &Dataset,
    trials: usize,
    seed: u64,
) -> Result<LambdaMartSearch> {
    check_inputs(train, valid, trials)?;
    let mut rng = rng::stream(seed, &["search", "lambdamart"]);
    let train_groups = split_queries(train);
    let valid_groups = split_queries(valid);

    let mut out = LambdaMartSearch { best: 0, trials: Vec::with_capacity(trials) };
    for t in 0..trials {
        let (split, leaf) = sample_fractions(&mut rng);
        let max_depth = rng.gen_range(5..=40);
        let num_trees = rng.gen_range(1..=5);
        let params = LambdaMartParams {
            num_trees,
            tree_params: TreeParams {
                max_depth,
                min_samples_split_fraction: split,
                min_samples_leaf_fraction: leaf,
            },
            ..LambdaMartParams::default()
        };
        let ensemble = fit_lambdamart(train, &train_groups, &params)?;
        let validation_ndcg = ensemble_ndcg(&ensemble, valid, &valid_groups)?;
        if t > 0 && validation_ndcg > out.trials[out.best].validation_ndcg {
            out.best = t;
        }
        out.trials.push(LambdaMartTrial { params, validation_ndcg, ensemble });
    }
    Ok(out)
}

pub fn ensemble_ndcg(ensemble: &BoostedEnsemble, ds: &Dataset, groups: &[crate::data::QueryGroup]) -> Result<f64> {
    let scores = ds
        .instances
        .iter()
        .map(|i| ensemble.predict(&i.features))
        .collect::<Result<Vec<_>>>()?;
    mean_ndcg(&scores, ds, groups)
}
