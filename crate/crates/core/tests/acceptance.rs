//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any required criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ltrx_core::data::{compute_feature_stats, split_queries, synth_dataset, Dataset, Instance};
use ltrx_core::explain::{exs_explain, lirme_explain, ExplainerConfig};
use ltrx_core::fixtures::{self, BM25_BODY, BM25_TITLE, LMIR_ABS_TITLE, LMIR_JM_URL};
use ltrx_core::ground_truth::{frequency_attribution, impurity_attribution};
use ltrx_core::harness::{
    evaluate_explanations, random_search_lambdamart, random_search_tree, run_eval, sweep_k, DataSource,
    EvalConfig, EvalSettings,
};
use ltrx_core::lambdamart::{fit_lambdamart, lambda_gradients, ndcg, LambdaMartParams};
use ltrx_core::metrics::{euclidean_similarity, spearman, topk_auc};
use ltrx_core::surrogate::{fit_weighted_lasso, fit_weighted_linear_svr, svr_objective, LassoParams, SvrParams};
use ltrx_core::tree::{fit_regression_tree, Node, NodeKind, RegressionTree, TreeParams};
use ltrx_core::{GroundTruthMode, Metric, Model, ModelKind, Technique};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(label: &str) -> ltrx_core::rng::StreamRng {
    ltrx_core::rng::stream(2024, &["acceptance", label])
}

fn criterion_1() -> Check {
    let tree = fixtures::reference_tree();
    let x = fixtures::reference_instance();
    let imp = impurity_attribution(&tree, &x).map_err(|e| e.to_string())?;
    ensure((imp.bias - 0.375).abs() <= 1e-12, || format!("bias {}", imp.bias))?;
    let expected = [(LMIR_JM_URL, 0.231), (LMIR_ABS_TITLE, -0.074), (BM25_BODY, -0.074), (BM25_TITLE, 0.057)];
    for (f, v) in expected {
        ensure((imp.scores[f] - v).abs() <= 1e-12, || format!("feature {f}: {} vs {v}", imp.scores[f]))?;
    }
    let others = imp.scores.iter().enumerate().filter(|(i, _)| expected.iter().all(|(f, _)| f != i));
    for (i, v) in others {
        ensure(*v == 0.0, || format!("feature {i} off the path has {v}"))?;
    }
    let freq = frequency_attribution(&tree, &x).map_err(|e| e.to_string())?;
    for (f, _) in expected {
        ensure(freq.scores[f] == 0.25, || format!("frequency of {f} is {}", freq.scores[f]))?;
    }
    ensure(freq.scores.iter().sum::<f64>() == 1.0, || "frequency does not sum to 1".into())?;
    Ok("bias 0.375, contributions +0.231 -0.074 -0.074 +0.057, frequency 4 x 0.25".into())
}

fn criterion_2() -> Check {
    let train = synth_dataset(11, 40, 10, 12).map_err(|e| e.to_string())?;
    let valid = synth_dataset(12, 10, 10, 12).map_err(|e| e.to_string())?;
    let probe = synth_dataset(13, 60, 10, 12).map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for t in random_search_tree(&train, &valid, 25, 3).map_err(|e| e.to_string())?.trials {
        trees.push(t.tree);
    }
    for t in random_search_lambdamart(&train, &valid, 5, 3).map_err(|e| e.to_string())?.trials {
        trees.extend(t.ensemble.trees);
    }
    let mut worst = 0.0f64;
    let mut checks = 0;
    for tree in &trees {
        for inst in &probe.instances {
            let a = impurity_attribution(tree, &inst.features).map_err(|e| e.to_string())?;
            let total = a.bias + a.scores.iter().sum::<f64>();
            let pred = tree.predict(&inst.features).map_err(|e| e.to_string())?;
            worst = worst.max((total - pred).abs());
            checks += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("{} trees x {} instances ({checks} checks), max |bias + sum - prediction| = {worst:.1e}", trees.len(), probe.len()))
}

fn normal_equations(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<DVector<f64>> {
    let (n, d) = (x.len(), x[0].len());
    let a = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let wm = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let lhs = a.transpose() * &wm * &a;
    let rhs = a.transpose() * &wm * DVector::from_column_slice(y);
    lhs.lu().solve(&rhs)
}

fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
    }
}

fn brute_topk(gt: &[f64], k: usize) -> Vec<bool> {
    let nnz = gt.iter().filter(|v| **v != 0.0).count();
    let k = k.min(nnz);
    (0..gt.len())
        .map(|i| {
            let ahead = (0..gt.len())
                .filter(|&j| gt[j].abs() > gt[i].abs() || (gt[j].abs() == gt[i].abs() && j < i))
                .count();
            ahead < k
        })
        .collect()
}

fn brute_auc(expl: &[f64], gt: &[f64], k: usize) -> Option<f64> {
    let labels = brute_topk(gt, k);
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..expl.len() {
        for j in 0..expl.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if expl[i].abs() > expl[j].abs() {
                    wins += 1.0;
                } else if expl[i].abs() == expl[j].abs() {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

fn brute_euclidean(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        return None;
    }
    let ua: Vec<f64> = a.iter().map(|x| if na == 0.0 { *x } else { x / na }).collect();
    let ub: Vec<f64> = b.iter().map(|x| if nb == 0.0 { *x } else { x / nb }).collect();
    let d = ua.iter().zip(&ub).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Some((1.0 - d / 2.0).clamp(0.0, 1.0))
}

/// Random vector on a coarse grid so that ties and zeros occur.
fn gridded(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| f64::from(rng.gen_range(-4i32..=4)) * 0.25).collect()
}

fn same(got: ltrx_core::SimilarityResult, want: Option<f64>) -> bool {
    match want {
        Some(v) => got.defined && got.value.to_bits() == v.to_bits(),
        None => !got.defined && got.value.is_nan(),
    }
}

fn criterion_3() -> Check {
    let mut r = rng("solvers");
    let mut worst = 0.0f64;
    let params = LassoParams { alpha: 0.0, tol: 1e-13, max_iter: 200_000 };
    for case in 0..100 {
        let d = r.gen_range(1..=6);
        let n = r.gen_range(d + 2..=50);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
        let Some(beta) = normal_equations(&x, &y, &w) else {
            return Err(format!("case {case}: singular normal equations"));
        };
        let fit = fit_weighted_lasso(&x, &y, &w, &params).map_err(|e| e.to_string())?;
        worst = worst.max((fit.intercept - beta[0]).abs());
        for j in 0..d {
            worst = worst.max((fit.weights[j] - beta[j + 1]).abs());
        }
    }
    ensure(worst <= 1e-5, || format!("lasso vs normal equations max deviation {worst:e}"))?;

    let svr = SvrParams::default();
    for case in 0..100 {
        let d = r.gen_range(1..=6);
        let n = r.gen_range(2..=50);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| f64::from(r.gen_range(0..2u8))).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let fit = fit_weighted_linear_svr(&x, &y, &w, &svr).map_err(|e| e.to_string())?;
        let got = svr_objective(&x, &y, &w, svr.c, svr.epsilon, &fit.weights, fit.intercept);
        let zero = svr_objective(&x, &y, &w, svr.c, svr.epsilon, &vec![0.0; d], 0.0);
        ensure(got <= zero, || format!("svr case {case}: objective {got} above zero solution {zero}"))?;
    }

    for case in 0..200 {
        let n = r.gen_range(2..=30);
        let a = gridded(&mut r, n);
        let b = gridded(&mut r, n);
        let k = r.gen_range(1..=n + 2);
        let s = spearman(&a, &b).map_err(|e| e.to_string())?;
        let want_s = brute_pearson(&brute_ranks(&a), &brute_ranks(&b));
        ensure(same(s, want_s), || format!("spearman case {case}: {s:?} vs {want_s:?}"))?;
        let e = euclidean_similarity(&a, &b).map_err(|e| e.to_string())?;
        let want_e = brute_euclidean(&a, &b);
        ensure(same(e, want_e), || format!("euclidean case {case}: {e:?} vs {want_e:?}"))?;
        let t = topk_auc(&a, &b, k).map_err(|e| e.to_string())?;
        let want_t = brute_auc(&a, &b, k);
        ensure(same(t, want_t), || format!("auc case {case}: {t:?} vs {want_t:?}"))?;
    }
    Ok(format!("lasso max deviation {worst:.1e}; 100 svr problems at or below zero objective; 200 metric pairs exact"))
}

fn criterion_4() -> Check {
    let mut r = rng("metric-properties");
    let mut undefined = 0;
    for case in 0..1000 {
        let n = r.gen_range(2..=25);
        let (a, b) = if case % 2 == 0 {
            (gridded(&mut r, n), gridded(&mut r, n))
        } else {
            let a: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
            (a, b)
        };
        let k = r.gen_range(1..=n);
        let fail = |what: &str| format!("case {case}: {what} a={a:?} b={b:?}");

        let s_ab = spearman(&a, &b).unwrap();
        let s_ba = spearman(&b, &a).unwrap();
        ensure(s_ab.defined == s_ba.defined, || fail("spearman definedness not symmetric"))?;
        if s_ab.defined {
            ensure((-1.0..=1.0).contains(&s_ab.value), || fail("spearman out of range"))?;
            ensure((s_ab.value - s_ba.value).abs() <= 1e-12, || fail("spearman not symmetric"))?;
            // strictly increasing transform keeps the ranks
            let t: Vec<f64> = a.iter().map(|v| v.powi(3) * 7.0 + 1.0).collect();
            let s_t = spearman(&t, &b).unwrap();
            ensure(s_t.defined && (s_t.value - s_ab.value).abs() <= 1e-12, || fail("spearman not rank invariant"))?;
        } else {
            undefined += 1;
            let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
            ensure(constant(&a) || constant(&b), || fail("spearman undefined without a constant input"))?;
        }
        let ranks = ltrx_core::metrics::average_ranks(&a);
        let expected_sum = (n * (n + 1)) as f64 / 2.0;
        ensure(ranks.iter().sum::<f64>() == expected_sum, || fail("average ranks do not sum to n(n+1)/2"))?;

        let e_ab = euclidean_similarity(&a, &b).unwrap();
        let e_ba = euclidean_similarity(&b, &a).unwrap();
        ensure(e_ab.defined == e_ba.defined, || fail("euclidean definedness not symmetric"))?;
        if e_ab.defined {
            ensure((0.0..=1.0).contains(&e_ab.value), || fail("euclidean out of range"))?;
            ensure((e_ab.value - e_ba.value).abs() <= 1e-12, || fail("euclidean not symmetric"))?;
            let scaled: Vec<f64> = a.iter().map(|v| v * 3.5).collect();
            let e_s = euclidean_similarity(&scaled, &b).unwrap();
            ensure((e_s.value - e_ab.value).abs() <= 1e-12, || fail("euclidean not scale invariant"))?;
        }
        if a.iter().any(|v| *v != 0.0) {
            let self_sim = euclidean_similarity(&a, &a).unwrap();
            ensure((self_sim.value - 1.0).abs() <= 1e-12, || fail("euclidean self similarity is not 1"))?;
        }

        let auc = topk_auc(&a, &b, k).unwrap();
        let labels = ltrx_core::metrics::topk_labels(&b, k);
        let pos = labels.iter().filter(|l| **l).count();
        ensure(pos == k.min(b.iter().filter(|v| **v != 0.0).count()), || fail("top-K size is not min(K, nnz)"))?;
        ensure(auc.defined == (pos > 0 && pos < n), || fail("auc definedness"))?;
        if auc.defined {
            ensure((0.0..=1.0).contains(&auc.value), || fail("auc out of range"))?;
            let t: Vec<f64> = a.iter().map(|v| v.abs().sqrt() * 2.0).collect();
            let auc_t = topk_auc(&t, &b, k).unwrap();
            ensure(auc_t.value == auc.value, || fail("auc not invariant to monotone magnitude transforms"))?;
            let flat = vec![1.0; n];
            ensure(topk_auc(&flat, &b, k).unwrap().value == 0.5, || fail("all-tied explanation is not 0.5"))?;
        }
    }
    Ok(format!("1000 cases ({undefined} with undefined Spearman, all on constant inputs)"))
}

fn criterion_5() -> Check {
    let mut r = rng("lambda");
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.gen_range(2..=40);
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let labels: Vec<u32> = (0..n).map(|_| r.gen_range(0..5)).collect();
        let l = lambda_gradients(&scores, &labels, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max(l.iter().sum::<f64>().abs());
    }
    ensure(worst <= 1e-9, || format!("lambda sum deviation {worst:e}"))?;

    let mut improved = 0;
    let mut tried = 0;
    for q in 0..50 {
        let n = r.gen_range(4..=20);
        let instances: Vec<Instance> = (0..n)
            .map(|i| {
                let x: f64 = r.gen_range(0.0..1.0);
                Instance {
                    qid: "1".into(),
                    docid: format!("{q}-{i}"),
                    label: if x > 0.6 { 2 } else if x > 0.3 { 1 } else { 0 },
                    features: vec![x, r.gen_range(0.0..1.0)],
                }
            })
            .collect();
        let ds = Dataset { feature_count: 2, instances };
        let labels = ds.labels();
        let before = ndcg(&vec![0.0; n], &labels).map_err(|e| e.to_string())?;
        if before >= 1.0 || labels.iter().all(|l| *l == labels[0]) {
            continue;
        }
        tried += 1;
        let params = LambdaMartParams {
            num_trees: 1,
            tree_params: TreeParams { max_depth: 6, min_samples_split_fraction: 0.05, min_samples_leaf_fraction: 0.01 },
            ..LambdaMartParams::default()
        };
        let model = fit_lambdamart(&ds, &split_queries(&ds), &params).map_err(|e| e.to_string())?;
        let scores: Vec<f64> = ds.instances.iter().map(|i| model.predict(&i.features).unwrap()).collect();
        let after = ndcg(&scores, &labels).map_err(|e| e.to_string())?;
        ensure(after > before, || format!("toy query {q}: ndcg {before} -> {after}"))?;
        improved += 1;
    }
    ensure(tried > 0, || "no toy query had an imperfect initial ordering".into())?;
    Ok(format!("lambda sums within {worst:.1e}; {improved}/{tried} separable toy queries improved after one round"))
}

fn small_explainer(samples: usize) -> ExplainerConfig {
    ExplainerConfig { num_samples: samples, ..ExplainerConfig::default() }
}

fn criterion_6() -> Check {
    let ds = synth_dataset(6, 50, 10, fixtures::FEATURE_COUNT).map_err(|e| e.to_string())?;
    let targets: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    let params = TreeParams { max_depth: 4, ..TreeParams::default() };
    let model = Model::Tree(fit_regression_tree(&ds.rows(), &targets, &params, None).map_err(|e| e.to_string())?);
    let stats = compute_feature_stats(&ds).map_err(|e| e.to_string())?;
    let settings = EvalSettings {
        lirme: small_explainer(500),
        exs: small_explainer(500),
        seed: 6,
        workers: Some(1),
        ..EvalSettings::default()
    };
    let start = Instant::now();
    let eval = evaluate_explanations(&model, &ds, &stats, &settings).map_err(|e| e.to_string())?;
    let sweep = sweep_k(&eval.rows, &[1, 20]).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut means: BTreeMap<(Technique, GroundTruthMode), [f64; 2]> = BTreeMap::new();
    for row in &sweep {
        let slot = usize::from(row.k == 20);
        means.entry((row.technique, row.gt_mode)).or_insert([f64::NAN; 2])[slot] = row.stats.mean.unwrap_or(f64::NAN);
    }
    let summary: Vec<String> = means
        .iter()
        .map(|((t, g), m)| format!("{t}/{g} K1={:.4} K20={:.4}", m[0], m[1]))
        .collect();
    let detail = format!("{}; {} skips; {elapsed:.1}s", summary.join(", "), eval.skips.len());
    ensure(means.len() == 4, || format!("missing cells: {detail}"))?;
    ensure(means.values().all(|m| m[0] > m[1]), || detail.clone())?;
    ensure(elapsed < 120.0, || detail.clone())?;
    Ok(detail)
}

/// Counts runs where each technique puts its largest |weight| on `feature`.
fn stump_hits(tree: &RegressionTree, ds: &Dataset, feature: usize, threshold: f64) -> Result<(usize, usize), String> {
    let stats = compute_feature_stats(ds).map_err(|e| e.to_string())?;
    // Mean replacement only moves the prediction for instances on the other
    // side of the split from the feature mean.
    let mean_side = stats.means[feature] > threshold;
    let candidates: Vec<&Instance> =
        ds.instances.iter().filter(|i| (i.features[feature] > threshold) != mean_side).collect();
    ensure(!candidates.is_empty(), || "no instance opposite the feature mean".into())?;
    let groups = split_queries(ds);
    let predict = |x: &[f64]| tree.predict(x);
    let argmax = |w: &[f64]| (0..w.len()).max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(b.cmp(&a))).unwrap();
    let (mut lirme_hits, mut exs_hits) = (0, 0);
    for run in 0..100u64 {
        let inst = candidates[(run as usize * 7) % candidates.len()];
        let cfg = ExplainerConfig { seed: run, ..small_explainer(500) };
        let group = groups.iter().find(|g| g.qid == inst.qid).unwrap();
        let docs: Vec<&[f64]> = group.members.iter().map(|&i| ds.instances[i].features.as_slice()).collect();
        let l = lirme_explain(&predict, inst, &stats, &cfg).map_err(|e| e.to_string())?;
        let e = exs_explain(&predict, &docs, inst, &stats, &cfg).map_err(|e| e.to_string())?;
        lirme_hits += usize::from(argmax(&l.weights) == feature);
        exs_hits += usize::from(argmax(&e.weights) == feature);
    }
    Ok((lirme_hits, exs_hits))
}

fn criterion_7() -> Check {
    let ds = synth_dataset(7, 50, 10, 10).map_err(|e| e.to_string())?;
    let targets: Vec<f64> = ds.labels().iter().map(|&l| f64::from(l)).collect();
    let params = TreeParams { max_depth: 1, ..TreeParams::default() };
    let fitted = fit_regression_tree(&ds.rows(), &targets, &params, None).map_err(|e| e.to_string())?;
    let (feature, threshold) = match fitted.nodes()[0].kind {
        NodeKind::Split { feature, threshold, .. } => (feature, threshold),
        NodeKind::Leaf => return Err("depth-1 fit produced a single leaf".into()),
    };
    let (fl, fe) = stump_hits(&fitted, &ds, feature, threshold)?;

    // Hand-built stump with leaf gap 1.0 on a feature that carries no label signal.
    let k = 7;
    let mut column: Vec<f64> = ds.instances.iter().map(|i| i.features[k]).collect();
    column.sort_by(f64::total_cmp);
    let median = ltrx_core::data::quantile_sorted(&column, 0.5);
    let leaf = |id, value| Node { id, value, sample_fraction: 0.5, kind: NodeKind::Leaf };
    let stump = RegressionTree::from_nodes(
        10,
        vec![
            Node { id: 0, value: 1.5, sample_fraction: 1.0, kind: NodeKind::Split { feature: k, threshold: median, left: 1, right: 2 } },
            leaf(1, 1.0),
            leaf(2, 2.0),
        ],
    )
    .map_err(|e| e.to_string())?;
    let (hl, he) = stump_hits(&stump, &ds, k, median)?;

    let detail = format!(
        "fitted stump on feature {feature}: LIRME {fl}/100, EXS {fe}/100; gap-1 stump on feature {k}: LIRME {hl}/100, EXS {he}/100"
    );
    ensure([fl, fe, hl, he].iter().all(|&h| h >= 95), || detail.clone())?;
    Ok(detail)
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn criterion_8() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (i, (kind, workers)) in [
        (ModelKind::DecisionTree, Some(1)),
        (ModelKind::DecisionTree, Some(4)),
        (ModelKind::DecisionTree, None),
        (ModelKind::Lambdamart, Some(1)),
        (ModelKind::Lambdamart, Some(3)),
    ]
    .into_iter()
    .enumerate()
    {
        let out: PathBuf = tmp.path().join(format!("run{i}"));
        let cfg = EvalConfig {
            data: DataSource::Synthetic { num_queries: 10, docs_per_query: 6, feature_count: 12 },
            model_kind: kind,
            search_trials: 4,
            lirme: small_explainer(200),
            exs: small_explainer(200),
            seed: 99,
            workers,
            out_dir: out.clone(),
            ..EvalConfig::default()
        };
        run_eval(&cfg).map_err(|e| e.to_string())?;
        outputs.push((kind, read_dir_bytes(&out)));
    }
    for (kind, files) in &outputs {
        let reference = &outputs.iter().find(|(k, _)| k == kind).unwrap().1;
        ensure(files.len() == 6, || format!("expected 6 output files, found {:?}", files.keys()))?;
        for (name, bytes) in files {
            ensure(reference.get(name) == Some(bytes), || format!("{kind}: {name} differs across worker counts"))?;
        }
    }
    Ok("decision tree with 1/4/all workers and LambdaMART with 1/3 workers give byte-identical files".into())
}

fn mq2008_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os("LTRX_MQ2008_DIR")?);
    ["train.txt", "vali.txt", "test.txt"].iter().all(|f| dir.join(f).exists()).then_some(dir)
}

/// Soft check: never fails the run, only reports.
fn criterion_9() -> Option<Check> {
    let dir = mq2008_dir()?;
    let mut means = BTreeMap::new();
    for kind in [ModelKind::DecisionTree, ModelKind::Lambdamart] {
        let out = tempfile::tempdir().unwrap();
        let cfg = EvalConfig {
            data: DataSource::Files {
                train: dir.join("train.txt"),
                valid: dir.join("vali.txt"),
                test: dir.join("test.txt"),
            },
            model_kind: kind,
            seed: 1,
            out_dir: out.path().to_path_buf(),
            ..EvalConfig::default()
        };
        let run = match run_eval(&cfg) {
            Ok(r) => r,
            Err(e) => return Some(Err(format!("{kind}: {e}"))),
        };
        for row in run.tables.summary.iter().filter(|r| r.metric == Metric::Spearman) {
            means.insert((kind, row.technique, row.gt_mode), row.stats.mean.unwrap_or(f64::NAN));
        }
    }
    let tree: Vec<f64> = means.iter().filter(|(k, _)| k.0 == ModelKind::DecisionTree).map(|(_, v)| *v).collect();
    let lm: Vec<f64> = means.iter().filter(|(k, _)| k.0 == ModelKind::Lambdamart).map(|(_, v)| *v).collect();
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let detail = format!("{means:?}");
    if tree.len() != 4 || lm.len() != 4 {
        return Some(Err(format!("incomplete Spearman cells: {detail}")));
    }
    let in_band = tree.iter().all(|v| (0.1..=0.5).contains(v));
    let lower = avg(&lm) < avg(&tree);
    Some(if in_band && lower { Ok(detail) } else { Err(detail) })
}

fn run(name: &str, f: fn() -> Check) -> bool {
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(msg)
    });
    match result {
        Ok(detail) => {
            println!("PASS {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL {name}: {detail}");
            false
        }
    }
}

fn main() {
    let required: [(&str, fn() -> Check); 8] = [
        ("criterion 1 golden fixture", criterion_1),
        ("criterion 2 impurity sum identity", criterion_2),
        ("criterion 3 solver and metric oracles", criterion_3),
        ("criterion 4 metric properties", criterion_4),
        ("criterion 5 lambda invariants", criterion_5),
        ("criterion 6 K-sweep trend", criterion_6),
        ("criterion 7 explainer sanity", criterion_7),
        ("criterion 8 determinism", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in required {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        if !run(name, f) {
            failed += 1;
        }
    }
    match criterion_9() {
        None => println!("SKIP criterion 9 MQ2008 directional check: set LTRX_MQ2008_DIR to a fold directory"),
        Some(Ok(d)) => println!("PASS criterion 9 MQ2008 directional check (soft): {d}"),
        Some(Err(d)) => println!("FAIL criterion 9 MQ2008 directional check (soft, not fatal): {d}"),
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
