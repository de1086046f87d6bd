//! LETOR datasets: parsing, query grouping, per-feature statistics and a
//! synthetic generator for desk-scale experiments.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One labeled document of one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub qid: String,
    pub docid: String,
    pub label: u32,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_count: usize,
    pub instances: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub qid: String,
    pub members: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.instances.iter().map(|i| i.features.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn find(&self, qid: &str, docid: &str) -> Option<&Instance> {
        self.instances
            .iter()
            .find(|i| i.qid == qid && i.docid == docid)
    }

    /// Serializes to dense LETOR lines. Every feature is written, so parsing
    /// the result reproduces this dataset exactly.
    pub fn to_letor_string(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            write!(out, "{} qid:{}", inst.label, inst.qid).unwrap();
            for (i, v) in inst.features.iter().enumerate() {
                write!(out, " {}:{:?}", i + 1, v).unwrap();
            }
            writeln!(out, " #docid = {}", inst.docid).unwrap();
        }
        out
    }
}

/// Parses LETOR / SVMlight ranking text.
///
/// Grammar per line: `<label> qid:<qid> <idx>:<val> ... [#comment]`. A
/// `docid = <token>` fragment inside the comment names the document; without
/// one the 1-based line number is used. Feature indices missing from a line
/// are filled with 0.0, and `feature_count` is the largest index seen.
pub fn parse_letor(text: &str) -> Result<Dataset> {
    let mut instances = Vec::new();
    let mut feature_count = 0;
    let mut seen = std::collections::HashSet::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let (body, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        if body.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };

        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().expect("non-empty body has a token");
        let label: u32 = label_tok
            .parse()
            .map_err(|_| err(format!("expected a non-negative integer label, found {label_tok:?}")))?;

        let qid = match tokens.next() {
            Some(tok) => match tok.strip_prefix("qid:") {
                Some(q) if !q.is_empty() => q.to_string(),
                _ => return Err(err(format!("expected qid:<id>, found {tok:?}"))),
            },
            None => return Err(err("missing qid".into())),
        };

        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected <index>:<value>, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| err(format!("bad feature index in {tok:?}")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("bad feature value in {tok:?}")))?;
            if pairs.iter().any(|&(i, _)| i == idx) {
                return Err(err(format!("duplicate feature index {idx}")));
            }
            pairs.push((idx, val));
        }
        if pairs.is_empty() {
            return Err(err("no features".into()));
        }

        let max_idx = pairs.iter().map(|&(i, _)| i).max().unwrap();
        feature_count = feature_count.max(max_idx);
        let mut features = vec![0.0; max_idx];
        for (i, v) in pairs {
            features[i - 1] = v;
        }

        let docid = comment
            .and_then(docid_from_comment)
            .unwrap_or_else(|| line_no.to_string());
        if !seen.insert((qid.clone(), docid.clone())) {
            return Err(err(format!("duplicate (qid, docid) pair ({qid}, {docid})")));
        }
        instances.push(Instance {
            qid,
            docid,
            label,
            features,
        });
    }

    for inst in &mut instances {
        inst.features.resize(feature_count, 0.0);
    }
    Ok(Dataset {
        feature_count,
        instances,
    })
}

fn docid_from_comment(comment: &str) -> Option<String> {
    let start = comment.find("docid")?;
    let rest = comment[start + "docid".len()..].trim_start();
    let rest = rest.strip_prefix('=')?.trim_start();
    let token: String = rest.chars().take_while(|c| !c.is_whitespace()).collect();
    (!token.is_empty()).then_some(token)
}

pub fn read_letor(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_letor(&text)
}

/// Groups instances by qid, in order of first appearance.
pub fn split_queries(ds: &Dataset) -> Vec<QueryGroup> {
    let mut groups: Vec<QueryGroup> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (i, inst) in ds.instances.iter().enumerate() {
        let slot = *index.entry(inst.qid.as_str()).or_insert_with(|| {
            groups.push(QueryGroup {
                qid: inst.qid.clone(),
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].members.push(i);
    }
    groups
}

/// Per-feature means, quartile boundaries and value range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub quartiles: Vec<[f64; 3]>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureStats {
    pub fn feature_count(&self) -> usize {
        self.means.len()
    }
}

/// Empirical quantile of sorted data, interpolating linearly between the
/// closest order statistics: `x[k] + g * (x[k+1] - x[k])` with
/// `k = floor(p * (n - 1))` and `g` the fractional part.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = p * (sorted.len() - 1) as f64;
    let k = h.floor() as usize;
    let g = h - k as f64;
    if k + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[k] + g * (sorted[k + 1] - sorted[k])
    }
}

pub fn compute_feature_stats(ds: &Dataset) -> Result<FeatureStats> {
    if ds.is_empty() {
        return Err(Error::Empty("feature statistics need at least one instance"));
    }
    let n = ds.len() as f64;
    let d = ds.feature_count;
    let mut stats = FeatureStats {
        means: Vec::with_capacity(d),
        quartiles: Vec::with_capacity(d),
        mins: Vec::with_capacity(d),
        maxs: Vec::with_capacity(d),
    };
    let mut column = Vec::with_capacity(ds.len());
    for f in 0..d {
        column.clear();
        column.extend(ds.instances.iter().map(|i| i.features[f]));
        stats.means.push(column.iter().sum::<f64>() / n);
        column.sort_by(f64::total_cmp);
        stats.quartiles.push([
            quantile_sorted(&column, 0.25),
            quantile_sorted(&column, 0.5),
            quantile_sorted(&column, 0.75),
        ]);
        stats.mins.push(column[0]);
        stats.maxs.push(column[column.len() - 1]);
    }
    Ok(stats)
}

/// Quartile (1 to 4) containing `value`; buckets are closed on the right.
pub fn quartile_index(value: f64, bounds: [f64; 3]) -> Result<u8> {
    if value.is_nan() {
        return Err(Error::InvalidParameter("quartile of NaN".into()));
    }
    Ok(match value {
        v if v <= bounds[0] => 1,
        v if v <= bounds[1] => 2,
        v if v <= bounds[2] => 3,
        _ => 4,
    })
}

/// Weights of the hidden linear relevance score used by [`synth_dataset`].
/// Only the first few features carry signal.
pub const SYNTH_SIGNAL_WEIGHTS: [f64; 5] = [1.0, 0.8, 0.6, 0.4, 0.2];

/// Generates a ranking dataset with features uniform on [0, 1) and graded
/// labels in {0, 1, 2} driven by a sparse linear score plus noise.
pub fn synth_dataset(
    seed: u64,
    num_queries: usize,
    docs_per_query: usize,
    feature_count: usize,
) -> Result<Dataset> {
    if num_queries == 0 || docs_per_query == 0 || feature_count == 0 {
        return Err(Error::InvalidParameter(
            "synthetic dataset sizes must be positive".into(),
        ));
    }
    let mut rng = rng::stream(seed, &["synth"]);
    let active = SYNTH_SIGNAL_WEIGHTS.len().min(feature_count);
    let weights = &SYNTH_SIGNAL_WEIGHTS[..active];
    let weight_sum: f64 = weights.iter().sum();

    let mut instances = Vec::with_capacity(num_queries * docs_per_query);
    for q in 0..num_queries {
        for doc in 0..docs_per_query {
            let features: Vec<f64> = (0..feature_count).map(|_| rng.gen::<f64>()).collect();
            let signal: f64 = weights
                .iter()
                .zip(&features)
                .map(|(w, x)| w * x)
                .sum::<f64>()
                / weight_sum;
            let score = signal + rng.gen_range(-0.1..0.1);
            let label = if score < 0.45 {
                0
            } else if score < 0.6 {
                1
            } else {
                2
            };
            instances.push(Instance {
                qid: (q + 1).to_string(),
                docid: format!("S{}-{}", q + 1, doc + 1),
                label,
                features,
            });
        }
    }
    Ok(Dataset {
        feature_count,
        instances,
    })
}
