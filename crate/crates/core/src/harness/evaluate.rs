//! Per-instance explanation, ground truth and metric evaluation.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{split_queries, Dataset, FeatureStats, Instance};
use crate::error::{Error, Result};
use crate::explain::{exs_explain, lirme_explain, Explanation, ExplainerConfig, Technique};
use crate::ground_truth::{model_attribution, path_depth, GroundTruthMode};
use crate::metrics::Metric;
use crate::model::{Model, ModelKind};

/// One explained instance, with everything needed to recompute any metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRow {
    pub qid: String,
    pub docid: String,
    pub technique: Technique,
    pub model: ModelKind,
    pub weights: Vec<f64>,
    pub gt_impurity: Vec<f64>,
    pub gt_impurity_bias: f64,
    pub gt_frequency: Vec<f64>,
    pub path_depth: f64,
    pub predicted_score: f64,
}

impl ExplanationRow {
    pub fn ground_truth(&self, mode: GroundTruthMode) -> &[f64] {
        match mode {
            GroundTruthMode::Impurity => &self.gt_impurity,
            GroundTruthMode::Frequency => &self.gt_frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub qid: String,
    pub docid: String,
    pub technique: Technique,
    pub gt_mode: GroundTruthMode,
    pub metric: Metric,
    pub value: f64,
    pub defined: bool,
    pub path_depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skip {
    pub qid: String,
    pub docid: String,
    pub technique: Technique,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub rows: Vec<ExplanationRow>,
    pub records: Vec<EvalRecord>,
    pub skips: Vec<Skip>,
}

/// What [`evaluate_explanations`] needs besides the model and data.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub lirme: ExplainerConfig,
    pub exs: ExplainerConfig,
    pub metrics: Vec<Metric>,
    pub auc_k: usize,
    pub seed: u64,
    /// `None` uses every available core.
    pub workers: Option<usize>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            lirme: ExplainerConfig::default(),
            exs: ExplainerConfig::default(),
            metrics: Metric::ALL.to_vec(),
            auc_k: 5,
            seed: 0,
            workers: None,
        }
    }
}

/// Compares digit runs numerically so that `q2 < q10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut x, mut y) = (a.as_bytes(), b.as_bytes());
    loop {
        match (x.first(), y.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(p), Some(q)) if p.is_ascii_digit() && q.is_ascii_digit() => {
                let n = x.iter().take_while(|c| c.is_ascii_digit()).count();
                let m = y.iter().take_while(|c| c.is_ascii_digit()).count();
                let (dx, dy) = (trim_zeros(&x[..n]), trim_zeros(&y[..m]));
                let ord = dx.len().cmp(&dy.len()).then_with(|| dx.cmp(dy));
                if ord != Ordering::Equal {
                    return ord;
                }
                x = &x[n..];
                y = &y[m..];
            }
            (Some(p), Some(q)) => {
                if p != q {
                    return p.cmp(q);
                }
                x = &x[1..];
                y = &y[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let lead = digits.iter().take_while(|&&c| c == b'0').count();
    &digits[lead..]
}

fn row_order(a: (&str, &str, Technique), b: (&str, &str, Technique)) -> Ordering {
    natural_cmp(a.0, b.0)
        .then_with(|| natural_cmp(a.1, b.1))
        .then_with(|| a.2.cmp(&b.2))
}

/// Scores one row against both ground truths with every requested metric.
pub fn records_for_row(row: &ExplanationRow, metrics: &[Metric], auc_k: usize) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::with_capacity(GroundTruthMode::ALL.len() * metrics.len());
    for mode in GroundTruthMode::ALL {
        for &metric in metrics {
            let r = metric.compute(&row.weights, row.ground_truth(mode), auc_k)?;
            out.push(EvalRecord {
                qid: row.qid.clone(),
                docid: row.docid.clone(),
                technique: row.technique,
                gt_mode: mode,
                metric,
                value: r.value,
                defined: r.defined,
                path_depth: row.path_depth,
            });
        }
    }
    Ok(out)
}

type Outcome = std::result::Result<(ExplanationRow, Vec<EvalRecord>), Skip>;

fn evaluate_instance(
    model: &Model,
    inst: &Instance,
    query_docs: &[&[f64]],
    stats: &FeatureStats,
    settings: &EvalSettings,
) -> Result<Vec<Outcome>> {
    let predict = |x: &[f64]| model.predict(x);
    let impurity = model_attribution(model, &inst.features, GroundTruthMode::Impurity)?;
    let frequency = model_attribution(model, &inst.features, GroundTruthMode::Frequency)?;
    let depth = path_depth(model.trees(), &inst.features)?;
    let predicted_score = model.predict(&inst.features)?;

    let mut out = Vec::with_capacity(Technique::ALL.len());
    for technique in Technique::ALL {
        let explained: Result<Explanation> = match technique {
            Technique::Lirme => {
                let cfg = ExplainerConfig { seed: settings.seed, ..settings.lirme.clone() };
                lirme_explain(&predict, inst, stats, &cfg)
            }
            Technique::Exs => {
                let cfg = ExplainerConfig { seed: settings.seed, ..settings.exs.clone() };
                exs_explain(&predict, query_docs, inst, stats, &cfg)
            }
        };
        let explanation = match explained {
            Ok(e) => e,
            Err(err) => {
                out.push(Err(Skip {
                    qid: inst.qid.clone(),
                    docid: inst.docid.clone(),
                    technique,
                    reason: err.to_string(),
                }));
                continue;
            }
        };
        let row = ExplanationRow {
            qid: inst.qid.clone(),
            docid: inst.docid.clone(),
            technique,
            model: model.kind(),
            weights: explanation.weights,
            gt_impurity: impurity.scores.clone(),
            gt_impurity_bias: impurity.bias,
            gt_frequency: frequency.scores.clone(),
            path_depth: depth,
            predicted_score,
        };
        let records = records_for_row(&row, &settings.metrics, settings.auc_k)?;
        out.push(Ok((row, records)));
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn map_indices<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T, F>(n: usize, _workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> T,
{
    Ok((0..n).map(f).collect())
}

/// Explains every test instance with both techniques and scores each
/// explanation against both ground truths. Explainer failures become
/// [`Skip`] entries instead of errors. Output order is by
/// `(qid, docid, technique)` whatever the worker count.
pub fn evaluate_explanations(
    model: &Model,
    test: &Dataset,
    stats: &FeatureStats,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if settings.auc_k == 0 {
        return Err(Error::InvalidParameter("top-K AUC needs K >= 1".into()));
    }
    if settings.workers == Some(0) {
        return Err(Error::InvalidParameter("worker count must be positive".into()));
    }
    let groups = split_queries(test);
    let mut group_of = vec![0usize; test.len()];
    for (g, group) in groups.iter().enumerate() {
        for &i in &group.members {
            group_of[i] = g;
        }
    }
    let query_docs: Vec<Vec<&[f64]>> = groups
        .iter()
        .map(|g| g.members.iter().map(|&i| test.instances[i].features.as_slice()).collect())
        .collect();

    let results = map_indices(test.len(), settings.workers, |i| {
        evaluate_instance(model, &test.instances[i], &query_docs[group_of[i]], stats, settings)
    })?;

    let mut eval = Evaluation::default();
    let mut pairs = Vec::new();
    for outcome in results {
        for o in outcome? {
            match o {
                Ok(pair) => pairs.push(pair),
                Err(skip) => eval.skips.push(skip),
            }
        }
    }
    pairs.sort_by(|a, b| row_order((&a.0.qid, &a.0.docid, a.0.technique), (&b.0.qid, &b.0.docid, b.0.technique)));
    eval.skips
        .sort_by(|a, b| row_order((&a.qid, &a.docid, a.technique), (&b.qid, &b.docid, b.technique)));
    for (row, records) in pairs {
        eval.rows.push(row);
        eval.records.extend(records);
    }
    Ok(eval)
}

/// Recomputes every record from its row and lists the ones that differ in
/// any bit. Records without a matching row count as mismatches.
pub fn audit(rows: &[ExplanationRow], records: &[EvalRecord], auc_k: usize) -> Result<Vec<String>> {
    let by_key: HashMap<(&str, &str, Technique), &ExplanationRow> = rows
        .iter()
        .map(|r| ((r.qid.as_str(), r.docid.as_str(), r.technique), r))
        .collect();
    let mut problems = Vec::new();
    for rec in records {
        let key = (rec.qid.as_str(), rec.docid.as_str(), rec.technique);
        let Some(row) = by_key.get(&key) else {
            problems.push(format!("{} {} {}: no explanation row", rec.qid, rec.docid, rec.technique));
            continue;
        };
        let fresh = rec.metric.compute(&row.weights, row.ground_truth(rec.gt_mode), auc_k)?;
        let same_value = fresh.value.to_bits() == rec.value.to_bits() || (fresh.value.is_nan() && rec.value.is_nan());
        if !same_value || fresh.defined != rec.defined || row.path_depth.to_bits() != rec.path_depth.to_bits() {
            problems.push(format!(
                "{} {} {} {} {}: stored {} ({}), recomputed {} ({})",
                rec.qid, rec.docid, rec.technique, rec.gt_mode, rec.metric, rec.value, rec.defined, fresh.value, fresh.defined
            ));
        }
    }
    Ok(problems)
}
