//! Similarity between an explanation and a reference attribution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Spearman,
    Euclidean,
    TopkAuc,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Spearman, Metric::Euclidean, Metric::TopkAuc];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Spearman => "spearman",
            Metric::Euclidean => "euclidean",
            Metric::TopkAuc => "topk_auc",
        }
    }

    /// Scores `explanation` against `ground_truth`; `k` is only used by top-K AUC.
    pub fn compute(self, explanation: &[f64], ground_truth: &[f64], k: usize) -> Result<SimilarityResult> {
        match self {
            Metric::Spearman => spearman(explanation, ground_truth),
            Metric::Euclidean => euclidean_similarity(explanation, ground_truth),
            Metric::TopkAuc => topk_auc(explanation, ground_truth, k),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Metric::Spearman),
            "euclidean" => Ok(Metric::Euclidean),
            "topk_auc" | "auc" => Ok(Metric::TopkAuc),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// A metric value. Degenerate inputs give `defined == false` and a NaN value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResult {
    pub metric: Metric,
    pub value: f64,
    pub defined: bool,
}

impl SimilarityResult {
    fn defined(metric: Metric, value: f64) -> Self {
        Self { metric, value, defined: true }
    }

    fn undefined(metric: Metric) -> Self {
        Self { metric, value: f64::NAN, defined: false }
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the positions they cover.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<SimilarityResult> {
    same_len(a, b)?;
    if a.len() < 2 {
        return Err(Error::InvalidParameter("spearman needs at least two entries".into()));
    }
    Ok(match pearson(&average_ranks(a), &average_ranks(b)) {
        Some(rho) => SimilarityResult::defined(Metric::Spearman, rho),
        None => SimilarityResult::undefined(Metric::Spearman),
    })
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

/// `1 - |a/|a| - b/|b||_2 / 2`, with zero vectors left at zero.
pub fn euclidean_similarity(a: &[f64], b: &[f64]) -> Result<SimilarityResult> {
    same_len(a, b)?;
    let (ua, ub) = (unit(a), unit(b));
    if ua.iter().all(|x| *x == 0.0) && ub.iter().all(|x| *x == 0.0) {
        return Ok(SimilarityResult::undefined(Metric::Euclidean));
    }
    let dist = ua.iter().zip(&ub).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(SimilarityResult::defined(Metric::Euclidean, (1.0 - dist / 2.0).clamp(0.0, 1.0)))
}

/// Indicator of the top `min(k, nnz)` features by absolute ground-truth
/// value, ties broken by lower index.
pub fn topk_labels(ground_truth: &[f64], k: usize) -> Vec<bool> {
    let nonzero = ground_truth.iter().filter(|v| **v != 0.0).count();
    let mut order: Vec<usize> = (0..ground_truth.len()).collect();
    order.sort_by(|&a, &b| ground_truth[b].abs().total_cmp(&ground_truth[a].abs()).then(a.cmp(&b)));
    let mut labels = vec![false; ground_truth.len()];
    for &i in order.iter().take(k.min(nonzero)) {
        labels[i] = true;
    }
    labels
}

/// Mann-Whitney AUC of `|explanation|` against the top-K indicator of the
/// ground truth. A positive/negative tie counts one half.
pub fn topk_auc(explanation: &[f64], ground_truth: &[f64], k: usize) -> Result<SimilarityResult> {
    same_len(explanation, ground_truth)?;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let labels = topk_labels(ground_truth, k);
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Ok(SimilarityResult::undefined(Metric::TopkAuc));
    }
    let scores: Vec<f64> = explanation.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&scores);
    let rank_sum: f64 = ranks.iter().zip(&labels).filter(|(_, l)| **l).map(|(r, _)| r).sum();
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(SimilarityResult::defined(Metric::TopkAuc, u / (p * negatives as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_examples() {
        let a = [0.3, -1.0, 2.5, 0.7];
        assert!((spearman(&a, &a).unwrap().value - 1.0).abs() < 1e-15);
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &rev).unwrap().value + 1.0).abs() < 1e-15);
        assert!(!spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap().defined);
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_with_ties_is_pearson_of_average_ranks() {
        assert_eq!(average_ranks(&[1.0, 1.0, 3.0, 4.0]), vec![1.5, 1.5, 3.0, 4.0]);
        // hand evaluation: ranks [1,2,3,4] vs [1.5,1.5,3,4]
        let (ra, rb) = ([1.0, 2.0, 3.0, 4.0], [1.5, 1.5, 3.0, 4.0]);
        let (ma, mb) = (2.5, 2.5);
        let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
        let expected = cov / (va * vb).sqrt();
        let got = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 3.0, 4.0]).unwrap().value;
        assert!((got - expected).abs() < 1e-15);
        assert!((expected - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn euclidean_examples() {
        let a = [1.0, -2.0, 0.5];
        assert!((euclidean_similarity(&a, &a).unwrap().value - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!(euclidean_similarity(&a, &neg).unwrap().value.abs() < 1e-15);
        let v = euclidean_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value;
        assert!((v - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!((v - 0.2929).abs() < 1e-4);
        assert!(!euclidean_similarity(&[0.0, 0.0], &[0.0, 0.0]).unwrap().defined);
        assert_eq!(euclidean_similarity(&[0.0, 0.0], &[0.0, 3.0]).unwrap().value, 0.5);
    }

    #[test]
    fn auc_examples() {
        let gt = [0.4, 0.3, 0.0, 0.0];
        assert_eq!(topk_auc(&[0.1, 0.0, 0.2, 0.0], &gt, 2).unwrap().value, 0.375);
        assert_eq!(topk_auc(&[-0.9, 0.8, 0.1, 0.0], &gt, 2).unwrap().value, 1.0);
        assert_eq!(topk_auc(&[0.2, -0.2, 0.2, 0.2], &gt, 2).unwrap().value, 0.5);
        // K beyond the support is capped at the nonzero count
        assert_eq!(topk_auc(&[0.1, 0.0, 0.2, 0.0], &gt, 40).unwrap().value, 0.375);
        assert!(!topk_auc(&[1.0, 2.0], &[0.0, 0.0], 1).unwrap().defined);
        assert!(!topk_auc(&[1.0, 2.0], &[1.0, 1.0], 5).unwrap().defined);
        assert!(topk_auc(&[1.0], &[1.0], 0).is_err());
    }

    #[test]
    fn topk_ties_prefer_lower_index() {
        assert_eq!(topk_labels(&[0.25, 0.0, 0.25, -0.25], 2), vec![true, false, true, false]);
        assert_eq!(topk_labels(&[0.1, -0.5, 0.0], 1), vec![false, true, false]);
    }
}
