use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Serialize;

use super::run::{read_metrics, CellStatus, HarnessError, RunManifest};
use crate::metrics::{paired_compare, Aggregate, Direction, MetricRow, PairedResult};

pub const SUMMARY: &str = "summary.json";
pub const AGGREGATES: &str = "aggregates.csv";
pub const PAIRED: &str = "paired.csv";
pub const TOKENS: &str = "tokens.csv";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("the manifest has no completed cells")]
    EmptyManifest,
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Metrics compared between strategies, with the direction that counts
/// as a win.
pub const PAIRED_METRICS: [(&str, Direction); 5] = [
    ("levenshtein", Direction::LowerIsBetter),
    ("fdr", Direction::LowerIsBetter),
    ("tma", Direction::HigherIsBetter),
    ("completion", Direction::HigherIsBetter),
    ("total_tokens", Direction::LowerIsBetter),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub backend: String,
    pub strategy: String,
    pub condition: String,
    /// `all`, `task` or `complexity`.
    pub split: String,
    pub key: String,
    pub rows: usize,
    pub means: IndexMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedRow {
    pub backend: String,
    pub condition: String,
    pub strategy_a: String,
    pub strategy_b: String,
    pub metric: String,
    pub direction: Direction,
    #[serde(flatten)]
    pub result: PairedResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenRow {
    pub condition: String,
    pub sessions: usize,
    pub mean: f64,
    pub p50: usize,
    pub p90: usize,
    pub max: usize,
    pub peak_context_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCounts {
    pub total: usize,
    pub done: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub cells: CellCounts,
    pub groups: Vec<GroupRow>,
    pub paired: Vec<PairedRow>,
    pub tokens: Vec<TokenRow>,
}

/// Completed rows in manifest order.
pub fn done_rows(dir: &Path, manifest: &RunManifest) -> Result<Vec<MetricRow>, ReportError> {
    let mut by_id: HashMap<String, MetricRow> = read_metrics(dir)?.into_iter().map(|m| (m.cell_id, m.row)).collect();
    Ok(manifest
        .cells
        .iter()
        .filter(|c| c.status == CellStatus::Done)
        .filter_map(|c| by_id.remove(&c.id))
        .collect())
}

fn group_rows(rows: &[MetricRow]) -> Vec<GroupRow> {
    type Key = (String, String, String, String, String);
    let mut groups: BTreeMap<Key, Aggregate> = BTreeMap::new();
    for r in rows {
        let cond = r.condition.name().to_string();
        for (split, key) in [("all", "all".to_string()), ("task", format!("{:02}", r.task)), ("complexity", r.complexity.clone())] {
            groups
                .entry((r.backend.clone(), r.strategy.clone(), cond.clone(), split.to_string(), key))
                .or_default()
                .add(&r.values);
        }
    }
    groups
        .into_iter()
        .map(|((backend, strategy, condition, split, key), agg)| GroupRow {
            backend,
            strategy,
            condition,
            split,
            key,
            rows: agg.rows,
            means: agg.means(),
        })
        .collect()
}

fn metric(row: &MetricRow, name: &str) -> Option<f64> {
    row.values.numeric().into_iter().find(|(n, _)| *n == name).and_then(|(_, v)| v)
}

/// Per-record means of each strategy on the cells both strategies ran,
/// compared pairwise. Conditions are also pooled under `all`.
fn paired_rows(rows: &[MetricRow]) -> Vec<PairedRow> {
    // (backend, condition) -> strategy -> cell key -> row
    let mut index: BTreeMap<(String, String), BTreeMap<String, BTreeMap<(String, u8, String, u64), &MetricRow>>> =
        BTreeMap::new();
    for r in rows {
        let cell = (r.record_id.clone(), r.task, r.condition.name().to_string(), r.seed);
        for cond in [r.condition.name().to_string(), "all".to_string()] {
            index
                .entry((r.backend.clone(), cond))
                .or_default()
                .entry(r.strategy.clone())
                .or_default()
                .insert(cell.clone(), r);
        }
    }
    let mut out = Vec::new();
    for ((backend, condition), strategies) in &index {
        let names: Vec<&String> = strategies.keys().collect();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                let (ra, rb) = (&strategies[*a], &strategies[*b]);
                let shared: Vec<_> = ra.keys().filter(|k| rb.contains_key(*k)).collect();
                for (name, direction) in PAIRED_METRICS {
                    let mut per_record: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
                    for k in &shared {
                        if let (Some(x), Some(y)) = (metric(ra[*k], name), metric(rb[*k], name)) {
                            let e = per_record.entry(k.0.as_str()).or_insert((0.0, 0.0, 0));
                            e.0 += x;
                            e.1 += y;
                            e.2 += 1;
                        }
                    }
                    let xs: Vec<f64> = per_record.values().map(|(x, _, n)| x / *n as f64).collect();
                    let ys: Vec<f64> = per_record.values().map(|(_, y, n)| y / *n as f64).collect();
                    if let Ok(result) = paired_compare(&xs, &ys, direction) {
                        out.push(PairedRow {
                            backend: backend.clone(),
                            condition: condition.clone(),
                            strategy_a: (*a).clone(),
                            strategy_b: (*b).clone(),
                            metric: name.to_string(),
                            direction,
                            result,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[usize], q: f64) -> usize {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn token_rows(rows: &[MetricRow]) -> Vec<TokenRow> {
    let mut by_cond: BTreeMap<String, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for r in rows {
        let e = by_cond.entry(r.condition.name().to_string()).or_default();
        e.0.push(r.values.total_tokens);
        e.1.push(r.values.peak_context_tokens);
    }
    by_cond
        .into_iter()
        .map(|(condition, (mut totals, peaks))| {
            totals.sort_unstable();
            let n = totals.len();
            TokenRow {
                condition,
                sessions: n,
                mean: totals.iter().sum::<usize>() as f64 / n as f64,
                p50: percentile(&totals, 0.5),
                p90: percentile(&totals, 0.9),
                max: *totals.last().expect("non-empty group"),
                peak_context_mean: peaks.iter().sum::<usize>() as f64 / n as f64,
            }
        })
        .collect()
}

pub fn summarize(manifest: &RunManifest, rows: &[MetricRow]) -> Result<Summary, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptyManifest);
    }
    Ok(Summary {
        cells: CellCounts { total: manifest.cells.len(), done: manifest.done(), failed: manifest.failed() },
        groups: group_rows(rows),
        paired: paired_rows(rows),
        tokens: token_rows(rows),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |e| ReportError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_aggregates(path: &Path, groups: &[GroupRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let metric_names: Vec<String> = groups.first().map(|g| g.means.keys().cloned().collect()).unwrap_or_default();
    let mut header = vec!["backend", "strategy", "condition", "split", "key", "rows"];
    header.extend(metric_names.iter().map(String::as_str));
    w.write_record(&header).map_err(csv_err(path))?;
    for g in groups {
        let mut rec = vec![g.backend.clone(), g.strategy.clone(), g.condition.clone(), g.split.clone(), g.key.clone(), g.rows.to_string()];
        rec.extend(metric_names.iter().map(|m| fmt_opt(g.means.get(m).copied().flatten())));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| ReportError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn write_paired(path: &Path, rows: &[PairedRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "backend", "condition", "strategy_a", "strategy_b", "metric", "direction", "n", "wins", "ties", "losses",
        "mean_diff", "t", "p",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        let direction = match r.direction {
            Direction::LowerIsBetter => "lower",
            Direction::HigherIsBetter => "higher",
        };
        let p = &r.result;
        w.write_record([
            r.backend.clone(),
            r.condition.clone(),
            r.strategy_a.clone(),
            r.strategy_b.clone(),
            r.metric.clone(),
            direction.to_string(),
            p.n.to_string(),
            p.wins.to_string(),
            p.ties.to_string(),
            p.losses.to_string(),
            p.mean_diff.to_string(),
            p.t.to_string(),
            p.p.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| ReportError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn write_tokens(path: &Path, rows: &[TokenRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| ReportError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Write summary.json, aggregates.csv, paired.csv and tokens.csv into the
/// run directory and return their paths.
pub fn emit_report(dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let manifest = RunManifest::load(dir)?;
    let rows = done_rows(dir, &manifest)?;
    let summary = summarize(&manifest, &rows)?;
    let paths: Vec<PathBuf> = [SUMMARY, AGGREGATES, PAIRED, TOKENS].iter().map(|n| dir.join(n)).collect();
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    fs::write(&paths[0], json).map_err(|e| ReportError::Io { path: paths[0].display().to_string(), message: e.to_string() })?;
    write_aggregates(&paths[1], &summary.groups)?;
    write_paired(&paths[2], &summary.paired)?;
    write_tokens(&paths[3], &summary.tokens)?;
    Ok(paths)
}

