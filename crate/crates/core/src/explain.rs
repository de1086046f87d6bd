//! LIRME and EXS local explanations for a black-box score function.
//!
//! Both techniques perturb the explained document, score the perturbations,
//! weight them with `exp(-dist^2 / h)` by distance to the original, and fit a
//! linear surrogate on the binary interpretable vectors `z` (1 = feature kept
//! its original value or quartile). The surrogate weights are the explanation.
//!
//! * LIRME redraws each feature's quartile uniformly, samples a value inside
//!   the drawn quartile, and fits a weighted LASSO to the raw scores.
//! * EXS replaces a uniformly sized random subset of features with their
//!   dataset means and fits a weighted linear SVR to `(s_max - s) / s_max`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{quartile_index, FeatureStats, Instance};
use crate::error::{Error, Result};
use crate::rng;
use crate::surrogate::{fit_weighted_lasso, fit_weighted_linear_svr, LassoParams, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technique {
    #[serde(rename = "LIRME")]
    Lirme,
    #[serde(rename = "EXS")]
    Exs,
}

impl Technique {
    pub const ALL: [Technique; 2] = [Technique::Lirme, Technique::Exs];

    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Lirme => "LIRME",
            Technique::Exs => "EXS",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LIRME" => Ok(Technique::Lirme),
            "EXS" => Ok(Technique::Exs),
            _ => Err(Error::InvalidParameter(format!("unknown technique {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Euclidean,
    Cosine,
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Distance::Euclidean),
            "cosine" => Ok(Distance::Cosine),
            other => Err(Error::InvalidParameter(format!("unknown distance {other:?}"))),
        }
    }
}

/// Where EXS takes the normalizing maximum score from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmaxSource {
    Perturbations,
    QueryDocuments,
}

impl FromStr for SmaxSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perturbations" => Ok(SmaxSource::Perturbations),
            "query_documents" | "query" => Ok(SmaxSource::QueryDocuments),
            other => Err(Error::InvalidParameter(format!("unknown s_max source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerConfig {
    pub num_samples: usize,
    /// `None` means `(0.75 * sqrt(d))^2`.
    pub kernel_width: Option<f64>,
    pub distance: Distance,
    pub lasso: LassoParams,
    pub svr: SvrParams,
    pub smax_source: SmaxSource,
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            num_samples: 2000,
            kernel_width: None,
            distance: Distance::Euclidean,
            lasso: LassoParams::default(),
            svr: SvrParams::default(),
            smax_source: SmaxSource::Perturbations,
            seed: 0,
        }
    }
}

impl ExplainerConfig {
    pub fn kernel_width_for(&self, feature_count: usize) -> f64 {
        self.kernel_width
            .unwrap_or_else(|| (0.75 * (feature_count as f64).sqrt()).powi(2))
    }

    fn validate(&self, feature_count: usize) -> Result<f64> {
        if self.num_samples == 0 {
            return Err(Error::InvalidParameter("num_samples must be at least 1".into()));
        }
        let h = self.kernel_width_for(feature_count);
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter("kernel width must be positive".into()));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub technique: Technique,
    pub qid: String,
    pub docid: String,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// `exp(-dist(a, b)^2 / h)`. Cosine distance is `1 - cos(a, b)`, taken as 0
/// when either vector is zero.
pub fn kernel_weight(a: &[f64], b: &[f64], h: f64, distance: Distance) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("kernel width must be positive".into()));
    }
    let dist = match distance {
        Distance::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Distance::Cosine => {
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                1.0 - dot / (na * nb)
            }
        }
    };
    Ok((-dist * dist / h).exp())
}

fn check_stats(instance: &[f64], stats: &FeatureStats) -> Result<()> {
    if instance.len() != stats.feature_count() {
        return Err(Error::DimensionMismatch {
            expected: stats.feature_count(),
            got: instance.len(),
        });
    }
    Ok(())
}

/// Builds one LIRME perturbation from given quartile draws (each in 1..=4).
pub fn lirme_perturb<R: Rng + ?Sized>(
    instance: &[f64],
    stats: &FeatureStats,
    draws: &[u8],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_stats(instance, stats)?;
    if draws.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            got: draws.len(),
        });
    }
    let mut z = Vec::with_capacity(instance.len());
    let mut x = Vec::with_capacity(instance.len());
    for (f, (&value, &q)) in instance.iter().zip(draws).enumerate() {
        let [q1, q2, q3] = stats.quartiles[f];
        if q == quartile_index(value, stats.quartiles[f])? {
            z.push(1.0);
            x.push(value);
        } else {
            let (lo, hi) = match q {
                1 => (stats.mins[f].min(q1), q1),
                2 => (q1, q2),
                3 => (q2, q3),
                4 => (q3, stats.maxs[f].max(q3)),
                _ => return Err(Error::InvalidParameter(format!("quartile draw {q} outside 1..=4"))),
            };
            z.push(0.0);
            x.push(lo + rng.gen::<f64>() * (hi - lo));
        }
    }
    Ok((z, x))
}

/// One LIRME sample: a uniform quartile draw per feature, then
/// [`lirme_perturb`].
pub fn lirme_sample<R: Rng + ?Sized>(
    instance: &[f64],
    stats: &FeatureStats,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let draws: Vec<u8> = (0..instance.len()).map(|_| rng.gen_range(1..=4)).collect();
    lirme_perturb(instance, stats, &draws, rng)
}

/// One EXS sample: replace `m ~ U{1..d}` distinct features by their means.
pub fn exs_sample<R: Rng + ?Sized>(
    instance: &[f64],
    stats: &FeatureStats,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_stats(instance, stats)?;
    let d = instance.len();
    if d == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let m = rng.gen_range(1..=d);
    let mut z = vec![1.0; d];
    let mut x = instance.to_vec();
    for f in index::sample(rng, d, m) {
        z[f] = 0.0;
        x[f] = stats.means[f];
    }
    Ok((z, x))
}

/// `(s_max - s) / s_max` elementwise.
pub fn exs_transform(scores: &[f64], s_max: f64) -> Result<Vec<f64>> {
    if s_max == 0.0 {
        return Err(Error::Degenerate("EXS normalizer s_max is zero".into()));
    }
    Ok(scores.iter().map(|s| (s_max - s) / s_max).collect())
}

struct Samples {
    design: Vec<Vec<f64>>,
    scores: Vec<f64>,
    kernel: Vec<f64>,
}

fn draw_samples<F, S>(
    model: &F,
    instance: &Instance,
    stats: &FeatureStats,
    cfg: &ExplainerConfig,
    technique: Technique,
    sampler: S,
) -> Result<Samples>
where
    F: Fn(&[f64]) -> Result<f64>,
    S: Fn(&[f64], &FeatureStats, &mut rng::StreamRng) -> Result<(Vec<f64>, Vec<f64>)>,
{
    let x = &instance.features;
    check_stats(x, stats)?;
    let h = cfg.validate(x.len())?;
    let mut rng = rng::stream(cfg.seed, &[technique.as_str(), &instance.qid, &instance.docid]);
    let mut out = Samples {
        design: Vec::with_capacity(cfg.num_samples),
        scores: Vec::with_capacity(cfg.num_samples),
        kernel: Vec::with_capacity(cfg.num_samples),
    };
    for _ in 0..cfg.num_samples {
        let (z, perturbed) = sampler(x, stats, &mut rng)?;
        out.scores.push(model(&perturbed)?);
        out.kernel.push(kernel_weight(&perturbed, x, h, cfg.distance)?);
        out.design.push(z);
    }
    Ok(out)
}

pub fn lirme_explain<F>(model: &F, instance: &Instance, stats: &FeatureStats, cfg: &ExplainerConfig) -> Result<Explanation>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let s = draw_samples(model, instance, stats, cfg, Technique::Lirme, lirme_sample)?;
    let fit = fit_weighted_lasso(&s.design, &s.scores, &s.kernel, &cfg.lasso)?;
    Ok(Explanation {
        technique: Technique::Lirme,
        qid: instance.qid.clone(),
        docid: instance.docid.clone(),
        weights: fit.weights,
        intercept: fit.intercept,
    })
}

/// `query_documents` are the feature vectors of every document of the
/// instance's query; they are scored only when `cfg.smax_source` asks for it.
pub fn exs_explain<F>(
    model: &F,
    query_documents: &[&[f64]],
    instance: &Instance,
    stats: &FeatureStats,
    cfg: &ExplainerConfig,
) -> Result<Explanation>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let s = draw_samples(model, instance, stats, cfg, Technique::Exs, exs_sample)?;
    let s_max = match cfg.smax_source {
        SmaxSource::Perturbations => s.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        SmaxSource::QueryDocuments => {
            let mut best = f64::NEG_INFINITY;
            for doc in query_documents {
                best = best.max(model(doc)?);
            }
            if best == f64::NEG_INFINITY {
                return Err(Error::Empty("query documents for the EXS normalizer"));
            }
            best
        }
    };
    let targets = exs_transform(&s.scores, s_max)?;
    let fit = fit_weighted_linear_svr(&s.design, &targets, &s.kernel, &cfg.svr)?;
    Ok(Explanation {
        technique: Technique::Exs,
        qid: instance.qid.clone(),
        docid: instance.docid.clone(),
        weights: fit.weights,
        intercept: fit.intercept,
    })
}
