//! Browser bindings for three demo operations. Every binding returns a JSON
//! string; the plain functions below them return `serde_json::Value` so they
//! can be tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ltrx_core::data::{compute_feature_stats, split_queries, synth_dataset, Dataset};
use ltrx_core::explain::{exs_explain, lirme_explain};
use ltrx_core::fixtures::{self, BM25_BODY, BM25_TITLE, LMIR_ABS_TITLE, LMIR_JM_URL};
use ltrx_core::ground_truth::{model_attribution, path_depth};
use ltrx_core::metrics::topk_auc;
use ltrx_core::tree::{fit_regression_tree, NodeKind};
use ltrx_core::{ExplainerConfig, GroundTruthMode, Metric, Model, Technique, TreeParams};

const DEMO_FEATURES: usize = 8;
const DEMO_QUERIES: usize = 10;
const DEMO_DOCS: usize = 10;

/// The four features the reference tree splits on, in input order.
pub const REFERENCE_INPUTS: [usize; 4] = [LMIR_JM_URL, LMIR_ABS_TITLE, BM25_BODY, BM25_TITLE];

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn name(feature: usize) -> String {
    fixtures::feature_name(feature).map(str::to_string).unwrap_or_else(|| format!("f{feature}"))
}

/// Walks the reference tree for an instance whose four split features take
/// `values` and reports the path and both attributions.
pub fn reference_path_value(values: &[f64]) -> Result<Value, String> {
    if values.len() != REFERENCE_INPUTS.len() {
        return Err(format!("expected {} values, got {}", REFERENCE_INPUTS.len(), values.len()));
    }
    let mut x = vec![0.0; fixtures::FEATURE_COUNT];
    for (&f, &v) in REFERENCE_INPUTS.iter().zip(values) {
        if !v.is_finite() {
            return Err(format!("{} must be a finite number", name(f)));
        }
        x[f] = v;
    }
    let tree = fixtures::reference_tree();
    let path = tree.decision_path(&x).map_err(err)?;
    let steps: Vec<Value> = path
        .iter()
        .map(|s| {
            let node = &tree.nodes()[s.node_id];
            match node.kind {
                NodeKind::Split { feature, threshold, .. } => json!({
                    "node": s.node_id,
                    "value": s.node_value,
                    "feature": name(feature),
                    "threshold": threshold,
                    "went_left": x[feature] <= threshold,
                }),
                NodeKind::Leaf => json!({ "node": s.node_id, "value": s.node_value }),
            }
        })
        .collect();
    let model = Model::Tree(tree);
    let imp = model_attribution(&model, &x, GroundTruthMode::Impurity).map_err(err)?;
    let freq = model_attribution(&model, &x, GroundTruthMode::Frequency).map_err(err)?;
    let features: Vec<Value> = REFERENCE_INPUTS
        .iter()
        .map(|&f| json!({ "name": name(f), "impurity": imp.scores[f], "frequency": freq.scores[f] }))
        .collect();
    Ok(json!({
        "path": steps,
        "bias": imp.bias,
        "prediction": model.predict(&x).map_err(err)?,
        "features": features,
    }))
}

struct Demo {
    data: Dataset,
    model: Model,
}

fn demo(seed: u64, depth: usize) -> Result<Demo, String> {
    let data = synth_dataset(seed, DEMO_QUERIES, DEMO_DOCS, DEMO_FEATURES).map_err(err)?;
    let targets: Vec<f64> = data.labels().iter().map(|&l| f64::from(l)).collect();
    let params = TreeParams { max_depth: depth.clamp(1, 20), ..TreeParams::default() };
    let tree = fit_regression_tree(&data.rows(), &targets, &params, None).map_err(err)?;
    Ok(Demo { data, model: Model::Tree(tree) })
}

fn explainer(seed: u64, samples: usize) -> ExplainerConfig {
    ExplainerConfig { num_samples: samples.clamp(10, 5000), seed, ..ExplainerConfig::default() }
}

fn explain_both(d: &Demo, index: usize, cfg: &ExplainerConfig) -> Result<[Option<Vec<f64>>; 2], String> {
    let inst = &d.data.instances[index];
    let stats = compute_feature_stats(&d.data).map_err(err)?;
    let group = split_queries(&d.data).into_iter().find(|g| g.qid == inst.qid).expect("query of instance");
    let docs: Vec<&[f64]> = group.members.iter().map(|&i| d.data.instances[i].features.as_slice()).collect();
    let predict = |x: &[f64]| d.model.predict(x);
    let lirme = lirme_explain(&predict, inst, &stats, cfg).ok().map(|e| e.weights);
    let exs = exs_explain(&predict, &docs, inst, &stats, cfg).ok().map(|e| e.weights);
    Ok([lirme, exs])
}

/// Fits a tree on a small synthetic dataset and explains one of its
/// documents with both techniques.
pub fn explain_synthetic_value(seed: u64, depth: usize, samples: usize, index: usize) -> Result<Value, String> {
    let d = demo(seed, depth)?;
    let index = index % d.data.len();
    let inst = &d.data.instances[index];
    let x = &inst.features;
    let imp = model_attribution(&d.model, x, GroundTruthMode::Impurity).map_err(err)?;
    let freq = model_attribution(&d.model, x, GroundTruthMode::Frequency).map_err(err)?;
    let weights = explain_both(&d, index, &explainer(seed, samples))?;
    let mut techniques = serde_json::Map::new();
    for (t, w) in Technique::ALL.iter().zip(weights) {
        let entry = match w {
            Some(w) => {
                let mut scores = serde_json::Map::new();
                for (mode, gt) in [("impurity", &imp.scores), ("frequency", &freq.scores)] {
                    for metric in Metric::ALL {
                        let r = metric.compute(&w, gt, 5).map_err(err)?;
                        let v = if r.defined { json!(r.value) } else { Value::Null };
                        scores.insert(format!("{mode}_{metric}"), v);
                    }
                }
                json!({ "weights": w, "scores": scores })
            }
            None => json!({ "error": "explanation failed for this instance" }),
        };
        techniques.insert(t.as_str().to_string(), entry);
    }
    Ok(json!({
        "qid": inst.qid,
        "docid": inst.docid,
        "features": x,
        "prediction": d.model.predict(x).map_err(err)?,
        "path_depth": path_depth(d.model.trees(), x).map_err(err)?,
        "gt_impurity": imp.scores,
        "gt_frequency": freq.scores,
        "explanations": techniques,
    }))
}

/// Mean top-K AUC over the first `instances` documents for K = 1..=8.
pub fn k_sweep_value(seed: u64, depth: usize, samples: usize, instances: usize) -> Result<Value, String> {
    let d = demo(seed, depth)?;
    let n = instances.clamp(1, d.data.len());
    let cfg = explainer(seed, samples);
    let ks: Vec<usize> = (1..=DEMO_FEATURES).collect();
    // [technique][mode][k] -> (sum, count)
    let mut acc = vec![vec![vec![(0.0, 0usize); ks.len()]; 2]; 2];
    for i in 0..n {
        let x = &d.data.instances[i].features;
        let gts = [
            model_attribution(&d.model, x, GroundTruthMode::Impurity).map_err(err)?.scores,
            model_attribution(&d.model, x, GroundTruthMode::Frequency).map_err(err)?.scores,
        ];
        for (t, w) in explain_both(&d, i, &cfg)?.into_iter().enumerate() {
            let Some(w) = w else { continue };
            for (m, gt) in gts.iter().enumerate() {
                for (j, &k) in ks.iter().enumerate() {
                    let r = topk_auc(&w, gt, k).map_err(err)?;
                    if r.defined {
                        acc[t][m][j].0 += r.value;
                        acc[t][m][j].1 += 1;
                    }
                }
            }
        }
    }
    let mut series = Vec::new();
    for (t, technique) in Technique::ALL.iter().enumerate() {
        for (m, mode) in GroundTruthMode::ALL.iter().enumerate() {
            let means: Vec<Value> = acc[t][m]
                .iter()
                .map(|&(s, c)| if c > 0 { json!(s / c as f64) } else { Value::Null })
                .collect();
            series.push(json!({ "technique": technique.as_str(), "gt_mode": mode.as_str(), "mean_auc": means }));
        }
    }
    Ok(json!({ "k": ks, "instances": n, "series": series }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn reference_path(url_jm: f64, abs_title: f64, bm25_body: f64, bm25_title: f64) -> Result<String, JsValue> {
    to_js(reference_path_value(&[url_jm, abs_title, bm25_body, bm25_title]))
}

#[wasm_bindgen]
pub fn explain_synthetic(seed: u32, depth: u32, samples: u32, index: u32) -> Result<String, JsValue> {
    to_js(explain_synthetic_value(u64::from(seed), depth as usize, samples as usize, index as usize))
}

#[wasm_bindgen]
pub fn k_sweep(seed: u32, depth: u32, samples: u32, instances: u32) -> Result<String, JsValue> {
    to_js(k_sweep_value(u64::from(seed), depth as usize, samples as usize, instances as usize))
}
