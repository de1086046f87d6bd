//! `--config <file>` support. The file holds `key = value` lines named after
//! the long flags; they are spliced in before the real arguments so that
//! flags given on the command line win.

use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn config_flags(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`", i + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        if key == "config" {
            bail!("config line {}: config files cannot include other config files", i + 1);
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Result<Option<&str>> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            let Some(v) = args.get(i + 1) else {
                bail!("--config needs a file path");
            };
            found = Some(v.as_str());
            i += 1;
        } else if let Some(v) = args[i].strip_prefix("--config=") {
            found = Some(v);
        }
        i += 1;
    }
    Ok(found)
}

/// Rewrites `ltrx <cmd> ... --config f ...` into
/// `ltrx <cmd> <flags from f> ... --config f ...`.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>> {
    if args.len() < 2 || args[1].starts_with('-') {
        return Ok(args);
    }
    let Some(path) = config_path(&args[2..])? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(path)).with_context(|| format!("reading config {path}"))?;
    let flags = config_flags(&text).with_context(|| format!("in config {path}"))?;
    let mut out = Vec::with_capacity(args.len() + flags.len());
    out.extend(args[..2].iter().cloned());
    out.extend(flags);
    out.extend(args[2..].iter().cloned());
    Ok(out)
}
