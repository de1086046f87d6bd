//! Summary tables over evaluation records and explanation rows.

use std::collections::BTreeMap;

use crate::data::quantile_sorted;
use crate::error::{Error, Result};
use crate::explain::Technique;
use crate::ground_truth::GroundTruthMode;
use crate::metrics::{topk_auc, Metric};

use super::evaluate::{EvalRecord, ExplanationRow};

/// Mean, population standard deviation and quartiles of the defined values.
/// The statistics are `None` when no value is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub n_defined: usize,
    pub n_undefined: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub quartiles: Option<[f64; 3]>,
}

impl Distribution {
    pub fn from_values(values: &[f64], n_undefined: usize) -> Self {
        if values.is_empty() {
            return Self { n_defined: 0, n_undefined, mean: None, std: None, quartiles: None };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quartiles = [0.25, 0.5, 0.75].map(|p| quantile_sorted(&sorted, p));
        Self {
            n_defined: values.len(),
            n_undefined,
            mean: Some(mean),
            std: Some(var.sqrt()),
            quartiles: Some(quartiles),
        }
    }
}

#[derive(Default)]
struct Cell {
    values: Vec<f64>,
    undefined: usize,
}

impl Cell {
    fn push(&mut self, value: f64, defined: bool) {
        if defined {
            self.values.push(value);
        } else {
            self.undefined += 1;
        }
    }

    fn finish(self) -> Distribution {
        Distribution::from_values(&self.values, self.undefined)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub technique: Technique,
    pub gt_mode: GroundTruthMode,
    pub metric: Metric,
    pub stats: Distribution,
}

/// One cell per (technique, ground truth, metric) present in `records`.
pub fn aggregate(records: &[EvalRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::Empty("evaluation records"));
    }
    let mut cells: BTreeMap<(Technique, GroundTruthMode, Metric), Cell> = BTreeMap::new();
    for r in records {
        cells.entry((r.technique, r.gt_mode, r.metric)).or_default().push(r.value, r.defined);
    }
    Ok(cells
        .into_iter()
        .map(|((technique, gt_mode, metric), c)| SummaryRow { technique, gt_mode, metric, stats: c.finish() })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub technique: Technique,
    pub gt_mode: GroundTruthMode,
    pub k: usize,
    pub stats: Distribution,
}

/// Recomputes top-K AUC for every row at each distinct K.
pub fn sweep_k(rows: &[ExplanationRow], k_values: &[usize]) -> Result<Vec<SweepRow>> {
    if rows.is_empty() {
        return Err(Error::Empty("explanation rows"));
    }
    if k_values.is_empty() {
        return Err(Error::Empty("K values"));
    }
    if k_values.contains(&0) {
        return Err(Error::InvalidParameter("K values must be at least 1".into()));
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut cells: BTreeMap<(Technique, GroundTruthMode, usize), Cell> = BTreeMap::new();
    for row in rows {
        for mode in GroundTruthMode::ALL {
            for &k in &ks {
                let r = topk_auc(&row.weights, row.ground_truth(mode), k)?;
                cells.entry((row.technique, mode, k)).or_default().push(r.value, r.defined);
            }
        }
    }
    Ok(cells
        .into_iter()
        .map(|((technique, gt_mode, k), c)| SweepRow { technique, gt_mode, k, stats: c.finish() })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRow {
    pub technique: Technique,
    pub gt_mode: GroundTruthMode,
    pub metric: Metric,
    pub depth: i64,
    pub stats: Distribution,
}

/// Groups records by their rounded decision path depth. Single trees have
/// integer depths already; ensemble depths are averages over trees.
pub fn depth_buckets(records: &[EvalRecord]) -> Result<Vec<DepthRow>> {
    if records.is_empty() {
        return Err(Error::Empty("evaluation records"));
    }
    let mut cells: BTreeMap<(Technique, GroundTruthMode, Metric, i64), Cell> = BTreeMap::new();
    for r in records {
        let bucket = r.path_depth.round() as i64;
        cells.entry((r.technique, r.gt_mode, r.metric, bucket)).or_default().push(r.value, r.defined);
    }
    Ok(cells
        .into_iter()
        .map(|((technique, gt_mode, metric, depth), c)| DepthRow { technique, gt_mode, metric, depth, stats: c.finish() })
        .collect())
}
