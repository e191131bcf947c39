//! Aggregation of report files into a pass/fail summary.

use anyhow::{bail, Context, Result};
use std::collections::BTreeSet;
use std::path::PathBuf;

use schwarzlab::lab::{read_reports, Verdict, VerificationReport};

/// Expand glob patterns, keeping the order stable.
pub fn expand(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = BTreeSet::new();
    for p in patterns {
        for entry in glob::glob(p).with_context(|| format!("bad pattern `{p}`"))? {
            out.insert(entry?);
        }
    }
    if out.is_empty() {
        bail!("no report files match {}", patterns.join(" "));
    }
    Ok(out.into_iter().collect())
}

pub fn load(paths: &[PathBuf]) -> Result<Vec<VerificationReport>> {
    // schema versions first, so a mixture is named as such
    let mut versions = BTreeSet::new();
    let mut texts = Vec::new();
    for p in paths {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line)
                .with_context(|| format!("{}: not a report record", p.display()))?;
            versions.insert(v.get("schema").and_then(|s| s.as_u64()).unwrap_or(0));
        }
        texts.push((p, text));
    }
    if versions.len() > 1 {
        let list: Vec<String> = versions.iter().map(|v| v.to_string()).collect();
        bail!("mixed schema versions: {}", list.join(", "));
    }
    let mut out = Vec::new();
    for (p, text) in texts {
        out.extend(read_reports(text.as_bytes()).with_context(|| p.display().to_string())?);
    }
    Ok(out)
}

fn resolution(r: &VerificationReport) -> String {
    let i = &r.inputs;
    i.pointer("/grid/lattice/n")
        .or_else(|| i.get("grid"))
        .and_then(|v| v.as_u64())
        .map(|n| n.to_string())
        .unwrap_or_else(|| "-".into())
}

/// Table rows sorted by experiment then resolution, and the summary line.
pub fn summarize(reports: &[VerificationReport]) -> (String, bool) {
    let mut rows: Vec<(String, String, &'static str, f64)> = reports
        .iter()
        .map(|r| {
            (
                r.experiment.clone(),
                resolution(r),
                r.verdict.as_str(),
                r.runtime_s,
            )
        })
        .collect();
    rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mut s = format!(
        "{:<26} {:>10} {:>13} {:>10}\n",
        "experiment", "resolution", "verdict", "runtime_s"
    );
    for (e, res, v, t) in &rows {
        s += &format!("{e:<26} {res:>10} {v:>13} {t:>10.2}\n");
    }
    let pass = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Pass)
        .count();
    s += &format!("{pass}/{} pass\n", reports.len());
    let failing: Vec<&str> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| r.experiment.as_str())
        .collect();
    if !failing.is_empty() {
        s += &format!("not passing: {}\n", failing.join(", "));
    }
    (s, failing.is_empty())
}
