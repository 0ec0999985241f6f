//! Per-run metrics, CSV output and grouped summaries.

use crate::error::{parse_err, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str =
    "instance,method,seed,gap_percent,remaining_percent,success,proved_optimal,reduce_ms,solve_ms";

/// `100 (reduced - original) / original`.
pub fn compute_gap(original_obj: f64, reduced_obj: f64) -> Result<f64> {
    if !(original_obj > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "original objective must be positive, got {original_obj}"
        )));
    }
    Ok(100.0 * (reduced_obj - original_obj) / original_obj)
}

/// One reduction of one instance with one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// `group#index`, e.g. `euclidean-60#007`.
    pub instance: String,
    pub method: String,
    pub seed: u64,
    /// `None` when the reduced instance could not be solved.
    pub gap_percent: Option<f64>,
    pub remaining_percent: f64,
    pub success: bool,
    pub proved_optimal: bool,
    pub reduce_ms: Option<u64>,
    pub solve_ms: Option<u64>,
}

impl MetricsRecord {
    pub fn group(&self) -> &str {
        self.instance
            .split_once('#')
            .map_or(self.instance.as_str(), |(g, _)| g)
    }

    fn sort_key(&self) -> (&str, &str, u64) {
        (&self.instance, &self.method, self.seed)
    }
}

/// Sorts into the canonical `(instance, method, seed)` order.
pub fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn records_to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.instance,
            r.method,
            r.seed,
            opt(&r.gap_percent),
            r.remaining_percent,
            r.success,
            r.proved_optimal,
            opt(&r.reduce_ms),
            opt(&r.solve_ms),
        );
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(parse_err(1, "missing or unexpected CSV header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let no = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(parse_err(no, format!("expected 9 fields, found {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| parse_err(no, format!("bad number `{s}`")))
        };
        let int = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| parse_err(no, format!("bad integer `{s}`")))
        };
        let flag = |s: &str| -> Result<bool> {
            s.parse().map_err(|_| parse_err(no, format!("bad flag `{s}`")))
        };
        let maybe_int = |s: &str| if s.is_empty() { Ok(None) } else { int(s).map(Some) };
        out.push(MetricsRecord {
            instance: f[0].to_string(),
            method: f[1].to_string(),
            seed: int(f[2])?,
            gap_percent: if f[3].is_empty() { None } else { Some(num(f[3])?) },
            remaining_percent: num(f[4])?,
            success: flag(f[5])?,
            proved_optimal: flag(f[6])?,
            reduce_ms: maybe_int(f[7])?,
            solve_ms: maybe_int(f[8])?,
        });
    }
    Ok(out)
}

/// Aggregates for one `(group, method)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub method: String,
    pub runs: usize,
    /// Mean gap over runs with a solved reduced instance.
    pub mean_gap: Option<f64>,
    pub best_gap: Option<f64>,
    pub mean_remaining: f64,
    /// Percentage of runs whose reduced instance was solved.
    pub success_rate: f64,
    pub proved_optimal_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    pub fn get(&self, group: &str, method: &str) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.group == group && g.method == method)
    }
}

/// Groups records by `(group, method)` in canonical order and aggregates.
pub fn summarize(records: &[MetricsRecord]) -> Summary {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut by: BTreeMap<(String, String), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in &sorted {
        by.entry((r.group().to_string(), r.method.clone()))
            .or_default()
            .push(r);
    }
    let groups = by
        .into_iter()
        .map(|((group, method), rs)| {
            let runs = rs.len();
            let gaps: Vec<f64> = rs.iter().filter_map(|r| r.gap_percent).collect();
            let mean_gap = (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64);
            let best_gap = gaps.iter().copied().reduce(f64::min);
            let pct = |k: usize| 100.0 * k as f64 / runs as f64;
            GroupSummary {
                group,
                method,
                runs,
                mean_gap,
                best_gap,
                mean_remaining: rs.iter().map(|r| r.remaining_percent).sum::<f64>() / runs as f64,
                success_rate: pct(rs.iter().filter(|r| r.success).count()),
                proved_optimal_rate: pct(rs.iter().filter(|r| r.proved_optimal).count()),
            }
        })
        .collect();
    Summary { groups }
}

pub fn summary_to_json(summary: &Summary) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)? + "\n")
}

/// Writes `<stem>.csv` and `<stem>_summary.json` into `dir`.
pub fn emit_report(records: &[MetricsRecord], dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}_summary.json"));
    std::fs::write(&csv, records_to_csv(&sorted))?;
    std::fs::write(&json, summary_to_json(&summarize(&sorted))?)?;
    Ok((csv, json))
}
