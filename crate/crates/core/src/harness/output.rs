//! Output files. Every file is written to a temporary sibling first and then
//! renamed over the target.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::evaluate::{EvalRecord, Evaluation, ExplanationRow, Skip};
use super::tables::{DepthRow, Distribution, SummaryRow, SweepRow};

pub const EXPLANATIONS_FILE: &str = "explanations.jsonl";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep_k.csv";
pub const DEPTH_FILE: &str = "depth.csv";
pub const SKIPS_FILE: &str = "skips.log";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub summary: Vec<SummaryRow>,
    pub sweep: Vec<SweepRow>,
    pub depth: Vec<DepthRow>,
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn dist_fields(d: &Distribution) -> Vec<String> {
    let q = d.quartiles;
    vec![
        d.n_defined.to_string(),
        d.n_undefined.to_string(),
        opt(d.mean),
        opt(d.std),
        opt(q.map(|q| q[0])),
        opt(q.map(|q| q[1])),
        opt(q.map(|q| q[2])),
    ]
}

const DIST_HEADER: [&str; 7] = ["n_defined", "n_undefined", "mean", "std_population", "q1", "median", "q3"];

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::InvalidParameter(format!("csv buffer: {e}")))
}

pub fn explanations_jsonl(rows: &[ExplanationRow]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn records_csv(records: &[EvalRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(["qid", "docid", "technique", "gt_mode", "metric", "value", "defined", "path_depth"])?;
    }
    w.into_inner().map_err(|e| Error::InvalidParameter(format!("csv buffer: {e}")))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let header = ["technique", "gt_mode", "metric", "mean", "std_population", "n_defined", "n_undefined"];
    csv_bytes(
        &header,
        rows.iter().map(|r| {
            vec![
                r.technique.to_string(),
                r.gt_mode.to_string(),
                r.metric.to_string(),
                opt(r.stats.mean),
                opt(r.stats.std),
                r.stats.n_defined.to_string(),
                r.stats.n_undefined.to_string(),
            ]
        }),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut header = vec!["technique", "gt_mode", "k"];
    header.extend(DIST_HEADER);
    csv_bytes(
        &header,
        rows.iter().map(|r| {
            let mut f = vec![r.technique.to_string(), r.gt_mode.to_string(), r.k.to_string()];
            f.extend(dist_fields(&r.stats));
            f
        }),
    )
}

pub fn depth_csv(rows: &[DepthRow]) -> Result<Vec<u8>> {
    let mut header = vec!["technique", "gt_mode", "metric", "depth"];
    header.extend(DIST_HEADER);
    csv_bytes(
        &header,
        rows.iter().map(|r| {
            let mut f = vec![r.technique.to_string(), r.gt_mode.to_string(), r.metric.to_string(), r.depth.to_string()];
            f.extend(dist_fields(&r.stats));
            f
        }),
    )
}

pub fn skips_log(skips: &[Skip]) -> String {
    skips
        .iter()
        .map(|s| format!("qid={} docid={} technique={}: {}\n", s.qid, s.docid, s.technique, s.reason))
        .collect()
}

pub fn write_outputs(out_dir: &Path, eval: &Evaluation, tables: &Tables) -> Result<()> {
    write_atomic(&out_dir.join(EXPLANATIONS_FILE), explanations_jsonl(&eval.rows)?.as_bytes())?;
    write_atomic(&out_dir.join(RECORDS_FILE), &records_csv(&eval.records)?)?;
    write_atomic(&out_dir.join(SUMMARY_FILE), &summary_csv(&tables.summary)?)?;
    write_atomic(&out_dir.join(SWEEP_FILE), &sweep_csv(&tables.sweep)?)?;
    write_atomic(&out_dir.join(DEPTH_FILE), &depth_csv(&tables.depth)?)?;
    write_atomic(&out_dir.join(SKIPS_FILE), skips_log(&eval.skips).as_bytes())
}

pub fn read_explanations(path: impl AsRef<Path>) -> Result<Vec<ExplanationRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(text.as_slice());
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
