//! The full experiment: model selection, explanation evaluation, summary
//! tables and output files.

mod evaluate;
mod output;
mod search;
mod tables;

use std::path::{Path, PathBuf};

pub use evaluate::{
    audit, evaluate_explanations, natural_cmp, records_for_row, EvalRecord, EvalSettings, Evaluation, ExplanationRow,
    Skip,
};
pub use output::{
    depth_csv, explanations_jsonl, read_explanations, read_records, records_csv, skips_log, summary_csv, sweep_csv,
    write_atomic, write_outputs, Tables, DEPTH_FILE, EXPLANATIONS_FILE, RECORDS_FILE, SKIPS_FILE, SUMMARY_FILE,
    SWEEP_FILE,
};
pub use search::{
    ensemble_ndcg, random_search_lambdamart, random_search_tree, tree_mse, LambdaMartSearch, LambdaMartTrial,
    TreeSearch, TreeTrial,
};
pub use tables::{aggregate, depth_buckets, sweep_k, DepthRow, Distribution, SummaryRow, SweepRow};

use crate::data::{compute_feature_stats, read_letor, split_queries, synth_dataset, Dataset};
use crate::error::{Error, Result};
use crate::explain::ExplainerConfig;
use crate::lambdamart::{fit_lambdamart, LambdaMartParams};
use crate::metrics::Metric;
use crate::model::{Model, ModelKind};
use crate::tree::{fit_regression_tree, TreeParams};

pub const DEFAULT_K_VALUES: [usize; 6] = [1, 5, 10, 20, 30, 40];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files { train: PathBuf, valid: PathBuf, test: PathBuf },
    /// One generated dataset whose queries are dealt out 3:1:1 to train,
    /// validation and test.
    Synthetic { num_queries: usize, docs_per_query: usize, feature_count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub data: DataSource,
    pub model_kind: ModelKind,
    pub search_trials: usize,
    /// Fixed parameters skip the search for that model kind.
    pub tree_params: Option<TreeParams>,
    pub lambdamart_params: Option<LambdaMartParams>,
    pub lirme: ExplainerConfig,
    pub exs: ExplainerConfig,
    pub metrics: Vec<Metric>,
    pub auc_k: usize,
    pub k_values: Vec<usize>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic { num_queries: 50, docs_per_query: 10, feature_count: 46 },
            model_kind: ModelKind::DecisionTree,
            search_trials: 100,
            tree_params: None,
            lambdamart_params: None,
            lirme: ExplainerConfig::default(),
            exs: ExplainerConfig::default(),
            metrics: Metric::ALL.to_vec(),
            auc_k: 5,
            k_values: DEFAULT_K_VALUES.to_vec(),
            seed: 0,
            workers: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.search_trials == 0 {
            return Err(Error::InvalidParameter("search_trials must be at least 1".into()));
        }
        if self.auc_k == 0 || self.k_values.contains(&0) {
            return Err(Error::InvalidParameter("K values must be at least 1".into()));
        }
        if self.k_values.is_empty() {
            return Err(Error::Empty("K values"));
        }
        if self.metrics.is_empty() {
            return Err(Error::Empty("metric list"));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("worker count must be positive".into()));
        }
        Ok(())
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            lirme: self.lirme.clone(),
            exs: self.exs.clone(),
            metrics: self.metrics.clone(),
            auc_k: self.auc_k,
            seed: self.seed,
            workers: self.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

/// Zero-pads sparse datasets to a common feature count.
pub fn align_feature_counts(sets: &mut [&mut Dataset]) {
    let d = sets.iter().map(|s| s.feature_count).max().unwrap_or(0);
    for s in sets.iter_mut() {
        s.feature_count = d;
        for inst in &mut s.instances {
            inst.features.resize(d, 0.0);
        }
    }
}

pub fn synthetic_splits(seed: u64, num_queries: usize, docs_per_query: usize, feature_count: usize) -> Result<Splits> {
    if num_queries < 5 {
        return Err(Error::InvalidParameter("synthetic splits need at least 5 queries".into()));
    }
    let all = synth_dataset(seed, num_queries, docs_per_query, feature_count)?;
    let empty = || Dataset { feature_count, instances: Vec::new() };
    let mut splits = Splits { train: empty(), valid: empty(), test: empty() };
    for (q, group) in split_queries(&all).iter().enumerate() {
        let target = match q % 5 {
            3 => &mut splits.valid,
            4 => &mut splits.test,
            _ => &mut splits.train,
        };
        target.instances.extend(group.members.iter().map(|&i| all.instances[i].clone()));
    }
    Ok(splits)
}

pub fn load_splits(source: &DataSource, seed: u64) -> Result<Splits> {
    match source {
        DataSource::Files { train, valid, test } => {
            let mut s = Splits { train: read_letor(train)?, valid: read_letor(valid)?, test: read_letor(test)? };
            align_feature_counts(&mut [&mut s.train, &mut s.valid, &mut s.test]);
            Ok(s)
        }
        DataSource::Synthetic { num_queries, docs_per_query, feature_count } => {
            synthetic_splits(seed, *num_queries, *docs_per_query, *feature_count)
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: Model,
    /// Validation MSE for trees, mean validation NDCG for LambdaMART.
    pub validation_score: f64,
    pub trials: usize,
}

pub fn fit_model(cfg: &EvalConfig, train: &Dataset, valid: &Dataset) -> Result<FitReport> {
    match cfg.model_kind {
        ModelKind::DecisionTree => match &cfg.tree_params {
            Some(params) => {
                let targets: Vec<f64> = train.labels().iter().map(|&l| f64::from(l)).collect();
                let tree = fit_regression_tree(&train.rows(), &targets, params, None)?;
                let validation_score = tree_mse(&tree, valid)?;
                Ok(FitReport { model: Model::Tree(tree), validation_score, trials: 0 })
            }
            None => {
                let search = random_search_tree(train, valid, cfg.search_trials, cfg.seed)?;
                let best = search.best_trial();
                Ok(FitReport {
                    model: Model::Tree(best.tree.clone()),
                    validation_score: best.validation_mse,
                    trials: search.trials.len(),
                })
            }
        },
        ModelKind::Lambdamart => match &cfg.lambdamart_params {
            Some(params) => {
                let ensemble = fit_lambdamart(train, &split_queries(train), params)?;
                let validation_score = ensemble_ndcg(&ensemble, valid, &split_queries(valid))?;
                Ok(FitReport { model: Model::Ensemble(ensemble), validation_score, trials: 0 })
            }
            None => {
                let search = random_search_lambdamart(train, valid, cfg.search_trials, cfg.seed)?;
                let best = search.best_trial();
                Ok(FitReport {
                    model: Model::Ensemble(best.ensemble.clone()),
                    validation_score: best.validation_ndcg,
                    trials: search.trials.len(),
                })
            }
        },
    }
}

/// Builds every summary table that has input to summarize.
pub fn build_tables(eval: &Evaluation, k_values: &[usize]) -> Result<Tables> {
    if eval.rows.is_empty() {
        return Ok(Tables::default());
    }
    Ok(Tables {
        summary: aggregate(&eval.records)?,
        sweep: sweep_k(&eval.rows, k_values)?,
        depth: depth_buckets(&eval.records)?,
    })
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub fit: FitReport,
    pub evaluation: Evaluation,
    pub tables: Tables,
}

/// Explains and scores a given model on `test`, then writes every output file
/// into `out_dir`.
pub fn evaluate_and_write(
    model: &Model,
    train: &Dataset,
    test: &Dataset,
    cfg: &EvalConfig,
    out_dir: &Path,
) -> Result<(Evaluation, Tables)> {
    cfg.validate()?;
    let stats = compute_feature_stats(train)?;
    let evaluation = evaluate_explanations(model, test, &stats, &cfg.eval_settings())?;
    let problems = audit(&evaluation.rows, &evaluation.records, cfg.auc_k)?;
    if let Some(first) = problems.first() {
        return Err(Error::Degenerate(format!("record audit failed: {first}")));
    }
    let tables = build_tables(&evaluation, &cfg.k_values)?;
    write_outputs(out_dir, &evaluation, &tables)?;
    Ok((evaluation, tables))
}

/// Loads the data, selects and fits the model, evaluates the test split and
/// writes the outputs to `cfg.out_dir`.
pub fn run_eval(cfg: &EvalConfig) -> Result<EvalRun> {
    cfg.validate()?;
    let splits = load_splits(&cfg.data, cfg.seed)?;
    let fit = fit_model(cfg, &splits.train, &splits.valid)?;
    let (evaluation, tables) = evaluate_and_write(&fit.model, &splits.train, &splits.test, cfg, &cfg.out_dir)?;
    Ok(EvalRun { fit, evaluation, tables })
}
