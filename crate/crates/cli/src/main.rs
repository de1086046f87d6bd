mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ltrx_core::data::{compute_feature_stats, read_letor, split_queries, synth_dataset, Dataset};
use ltrx_core::explain::{exs_explain, lirme_explain, Distance, SmaxSource};
use ltrx_core::ground_truth::{model_attribution, path_depth};
use ltrx_core::harness::{
    self, aggregate, depth_buckets, evaluate_and_write, fit_model, read_explanations, read_records, sweep_k,
    write_atomic, DataSource, EvalConfig, Splits,
};
use ltrx_core::lambdamart::LambdaMartParams;
use ltrx_core::surrogate::{LassoParams, SvrParams};
use ltrx_core::{ExplainerConfig, GroundTruthMode, Metric, Model, ModelKind, TreeParams};

#[derive(Parser, Debug)]
#[command(name = "ltrx", version, about = "Evaluate LIRME and EXS explanations of tree-based ranking models")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic LETOR dataset.
    Synth(SynthArgs),
    /// Train a model (random search unless parameters are fixed) and save it as JSON.
    Fit(FitArgs),
    /// Explain one instance and print both explanations and ground truths.
    Explain(ExplainArgs),
    /// Run the full pipeline and write every output file.
    Eval(EvalArgs),
    /// Summarize records.csv per technique, ground truth and metric.
    Aggregate(InputArgs),
    /// Recompute top-K AUC for several K from explanations.jsonl.
    SweepK(SweepArgs),
    /// Summarize records.csv per decision path depth.
    Depth(InputArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key = value` lines, one per long flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    valid: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Synthetic data is used when no files are given.
    #[arg(long, default_value_t = 50)]
    synth_queries: usize,
    #[arg(long, default_value_t = 10)]
    synth_docs: usize,
    #[arg(long, default_value_t = 46)]
    synth_features: usize,
}

impl DataArgs {
    fn has_files(&self) -> bool {
        self.train.is_some() || self.valid.is_some() || self.test.is_some()
    }

    fn source(&self) -> Result<DataSource> {
        if !self.has_files() {
            return Ok(DataSource::Synthetic {
                num_queries: self.synth_queries,
                docs_per_query: self.synth_docs,
                feature_count: self.synth_features,
            });
        }
        match (&self.train, &self.valid, &self.test) {
            (Some(train), Some(valid), Some(test)) => {
                Ok(DataSource::Files { train: train.clone(), valid: valid.clone(), test: test.clone() })
            }
            _ => bail!("--train, --valid and --test must be given together"),
        }
    }

    /// Like [`harness::load_splits`] but the test file is optional.
    fn train_valid(&self, seed: u64) -> Result<Splits> {
        if !self.has_files() {
            return Ok(harness::load_splits(&self.source()?, seed)?);
        }
        let (Some(train), Some(valid)) = (&self.train, &self.valid) else {
            bail!("--train and --valid are both required");
        };
        let mut s = Splits {
            train: read_letor(train)?,
            valid: read_letor(valid)?,
            test: match &self.test {
                Some(t) => read_letor(t)?,
                None => Dataset::default(),
            },
        };
        harness::align_feature_counts(&mut [&mut s.train, &mut s.valid, &mut s.test]);
        Ok(s)
    }
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "decision_tree")]
    model_kind: ModelKind,
    #[arg(long, default_value_t = 100)]
    search_trials: usize,
    /// Fixes the parameters and skips the search.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    min_split: f64,
    #[arg(long, default_value_t = 0.1)]
    min_leaf: f64,
    #[arg(long, default_value_t = 3)]
    num_trees: usize,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut EvalConfig) {
        cfg.model_kind = self.model_kind;
        cfg.search_trials = self.search_trials;
        if let Some(max_depth) = self.max_depth {
            let tree_params = TreeParams {
                max_depth,
                min_samples_split_fraction: self.min_split,
                min_samples_leaf_fraction: self.min_leaf,
            };
            cfg.tree_params = Some(tree_params);
            cfg.lambdamart_params =
                Some(LambdaMartParams { num_trees: self.num_trees, tree_params, ..LambdaMartParams::default() });
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ExplainerArgs {
    /// Perturbation samples per explanation.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Defaults to (0.75 * sqrt(d))^2.
    #[arg(long)]
    kernel_width: Option<f64>,
    #[arg(long, default_value = "euclidean")]
    distance: Distance,
    #[arg(long, default_value_t = LassoParams::default().alpha)]
    lasso_alpha: f64,
    #[arg(long, default_value_t = SvrParams::default().c)]
    svr_c: f64,
    #[arg(long, default_value_t = SvrParams::default().epsilon)]
    svr_epsilon: f64,
    #[arg(long, default_value_t = SvrParams::default().learning_rate)]
    svr_learning_rate: f64,
    #[arg(long, default_value_t = SvrParams::default().max_iter)]
    svr_max_iter: usize,
    #[arg(long, default_value = "perturbations")]
    smax_source: SmaxSource,
}

impl ExplainerArgs {
    fn config(&self, seed: u64) -> ExplainerConfig {
        ExplainerConfig {
            num_samples: self.samples,
            kernel_width: self.kernel_width,
            distance: self.distance,
            lasso: LassoParams { alpha: self.lasso_alpha, ..LassoParams::default() },
            svr: SvrParams {
                c: self.svr_c,
                epsilon: self.svr_epsilon,
                learning_rate: self.svr_learning_rate,
                max_iter: self.svr_max_iter,
            },
            smax_source: self.smax_source,
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    queries: usize,
    #[arg(long, default_value_t = 10)]
    docs_per_query: usize,
    #[arg(long, default_value_t = 46)]
    features: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    /// LETOR file holding the instance and the rest of its query.
    #[arg(long)]
    data: PathBuf,
    /// Data for the feature statistics; defaults to --data.
    #[arg(long)]
    stats_from: Option<PathBuf>,
    #[arg(long)]
    qid: String,
    #[arg(long)]
    docid: String,
    #[command(flatten)]
    explainer: ExplainerArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Evaluate this saved model instead of fitting one.
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[command(flatten)]
    explainer: ExplainerArgs,
    #[arg(long, value_delimiter = ',', default_value = "spearman,euclidean,topk_auc")]
    metrics: Vec<Metric>,
    #[arg(long, default_value_t = 5)]
    auc_k: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,30,40")]
    k: Vec<usize>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// An output directory of `eval` or the file itself.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,30,40")]
    k: Vec<usize>,
    #[command(flatten)]
    common: Common,
}

fn resolve(input: &Path, file: &str) -> PathBuf {
    if input.is_dir() {
        input.join(file)
    } else {
        input.to_path_buf()
    }
}

fn output_dir(common: &Common, input: &Path) -> PathBuf {
    common.out.clone().unwrap_or_else(|| {
        if input.is_dir() {
            input.to_path_buf()
        } else {
            input.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
        }
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let ds = synth_dataset(args.common.seed, args.queries, args.docs_per_query, args.features)?;
    let text = ds.to_letor_string();
    match &args.common.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            eprintln!("wrote {} instances to {}", ds.len(), path.display());
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<()> {
    let splits = args.data.train_valid(args.common.seed)?;
    let mut cfg = EvalConfig { seed: args.common.seed, ..EvalConfig::default() };
    args.model.apply(&mut cfg);
    cfg.validate()?;
    let report = fit_model(&cfg, &splits.train, &splits.valid)?;
    let out = args.common.out.unwrap_or_else(|| PathBuf::from("model.json"));
    write_atomic(&out, report.model.to_json()?.as_bytes())?;
    let score_name = match cfg.model_kind {
        ModelKind::DecisionTree => "validation_mse",
        ModelKind::Lambdamart => "validation_ndcg",
    };
    println!("model_kind\t{}", report.model.kind());
    println!("trials\t{}", report.trials);
    println!("{score_name}\t{}", report.validation_score);
    println!("trees\t{}", report.model.trees().len());
    println!("saved\t{}", out.display());
    Ok(())
}

fn run_explain(args: ExplainArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let data = read_letor(&args.data)?;
    let stats_data = match &args.stats_from {
        Some(p) => read_letor(p)?,
        None => data.clone(),
    };
    let stats = compute_feature_stats(&stats_data)?;
    let inst = data
        .find(&args.qid, &args.docid)
        .with_context(|| format!("no instance qid={} docid={}", args.qid, args.docid))?;
    if inst.features.len() != model.feature_count() {
        bail!("instance has {} features, model expects {}", inst.features.len(), model.feature_count());
    }
    let group = split_queries(&data).into_iter().find(|g| g.qid == inst.qid).expect("instance query exists");
    let docs: Vec<&[f64]> = group.members.iter().map(|&i| data.instances[i].features.as_slice()).collect();
    let cfg = args.explainer.config(args.common.seed);
    let predict = |x: &[f64]| model.predict(x);
    let as_json = |r: ltrx_core::Result<ltrx_core::Explanation>| match r {
        Ok(e) => json!({ "weights": e.weights, "intercept": e.intercept }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let impurity = model_attribution(&model, &inst.features, GroundTruthMode::Impurity)?;
    let frequency = model_attribution(&model, &inst.features, GroundTruthMode::Frequency)?;
    let doc = json!({
        "qid": inst.qid,
        "docid": inst.docid,
        "model": model.kind(),
        "predicted_score": model.predict(&inst.features)?,
        "path_depth": path_depth(model.trees(), &inst.features)?,
        "LIRME": as_json(lirme_explain(&predict, inst, &stats, &cfg)),
        "EXS": as_json(exs_explain(&predict, &docs, inst, &stats, &cfg)),
        "gt_impurity": impurity.scores,
        "gt_impurity_bias": impurity.bias,
        "gt_frequency": frequency.scores,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &args.common.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let out_dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut cfg = EvalConfig {
        data: args.data.source()?,
        lirme: args.explainer.config(args.common.seed),
        exs: args.explainer.config(args.common.seed),
        metrics: args.metrics.clone(),
        auc_k: args.auc_k,
        k_values: args.k.clone(),
        seed: args.common.seed,
        workers: args.workers,
        out_dir: out_dir.clone(),
        ..EvalConfig::default()
    };
    args.model.apply(&mut cfg);
    cfg.validate()?;

    let splits = harness::load_splits(&cfg.data, cfg.seed)?;
    let model = match &args.model_file {
        Some(path) => Model::load(path)?,
        None => {
            let report = fit_model(&cfg, &splits.train, &splits.valid)?;
            eprintln!("fitted {} after {} trials, validation score {}", report.model.kind(), report.trials, report.validation_score);
            report.model
        }
    };
    let (eval, tables) = evaluate_and_write(&model, &splits.train, &splits.test, &cfg, &out_dir)?;
    eprintln!(
        "{} explanations, {} records, {} skipped; outputs in {}",
        eval.rows.len(),
        eval.records.len(),
        eval.skips.len(),
        out_dir.display()
    );
    print_summary(&tables.summary);
    Ok(())
}

fn print_summary(rows: &[harness::SummaryRow]) {
    println!("technique\tgt_mode\tmetric\tmean\tstd_population\tn_defined\tn_undefined");
    for r in rows {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.technique,
            r.gt_mode,
            r.metric,
            fmt_opt(r.stats.mean),
            fmt_opt(r.stats.std),
            r.stats.n_defined,
            r.stats.n_undefined
        );
    }
}

fn run_aggregate(args: InputArgs) -> Result<()> {
    let records = read_records(resolve(&args.input, harness::RECORDS_FILE))?;
    let summary = aggregate(&records)?;
    let out = output_dir(&args.common, &args.input).join(harness::SUMMARY_FILE);
    write_atomic(&out, &harness::summary_csv(&summary)?)?;
    print_summary(&summary);
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let rows = read_explanations(resolve(&args.input, harness::EXPLANATIONS_FILE))?;
    let table = sweep_k(&rows, &args.k)?;
    let out = output_dir(&args.common, &args.input).join(harness::SWEEP_FILE);
    write_atomic(&out, &harness::sweep_csv(&table)?)?;
    println!("technique\tgt_mode\tk\tmean\tstd_population\tmedian\tn_defined");
    for r in &table {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.technique,
            r.gt_mode,
            r.k,
            fmt_opt(r.stats.mean),
            fmt_opt(r.stats.std),
            fmt_opt(r.stats.quartiles.map(|q| q[1])),
            r.stats.n_defined
        );
    }
    Ok(())
}

fn run_depth(args: InputArgs) -> Result<()> {
    let records = read_records(resolve(&args.input, harness::RECORDS_FILE))?;
    let table = depth_buckets(&records)?;
    let out = output_dir(&args.common, &args.input).join(harness::DEPTH_FILE);
    write_atomic(&out, &harness::depth_csv(&table)?)?;
    println!("technique\tgt_mode\tmetric\tdepth\tmean\tstd_population\tn_defined");
    for r in &table {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.technique,
            r.gt_mode,
            r.metric,
            r.depth,
            fmt_opt(r.stats.mean),
            fmt_opt(r.stats.std),
            r.stats.n_defined
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    let args = config::expand_args(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    match cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Fit(a) => run_fit(a),
        Command::Explain(a) => run_explain(a),
        Command::Eval(a) => run_eval(a),
        Command::Aggregate(a) => run_aggregate(a),
        Command::SweepK(a) => run_sweep(a),
        Command::Depth(a) => run_depth(a),
    }
}
