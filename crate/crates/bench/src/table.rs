//! Aggregation of run metrics into a Table-1 style summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use harmonia_core::losses::Method;
use harmonia_core::oracle::fmt17;

use crate::error::{BenchError, Result};
use crate::run::METRICS_HEADER;
use crate::scenario::ScenarioId;

/// One row of a run's `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: ScenarioId,
    pub method: Method,
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
    pub rmse: f64,
    pub paper_mae: f64,
    pub mean_abs_laplacian: f64,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: ScenarioId,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub rmse: Stat,
    pub paper_mae: Stat,
    pub mean_abs_laplacian: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub cells: Vec<Cell>,
}

/// Reads every `metrics.csv` under `dir`, in sorted path order.
pub fn collect_runs(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|source| BenchError::File {
            path: d.display().to_string(),
            source,
        })?;
        for e in entries {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == "metrics.csv") {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(parse_metrics(&std::fs::read_to_string(&f)?)?);
    }
    Ok(out)
}

pub fn parse_metrics(text: &str) -> Result<Vec<RunRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != METRICS_HEADER {
        return Err(BenchError::Config(format!("unexpected metrics header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

impl Table {
    /// Groups records by (scenario, method). Fails listing every requested
    /// combination without a record.
    pub fn build(records: &[RunRecord], scenarios: &[ScenarioId], methods: &[Method], seeds: &[u64]) -> Result<Table> {
        let mut missing = Vec::new();
        for &s in scenarios {
            for &m in methods {
                for &seed in seeds {
                    if !records
                        .iter()
                        .any(|r| r.scenario == s && r.method == m && r.seed == seed)
                    {
                        missing.push(format!("{s}/{m}/seed{seed}"));
                    }
                }
            }
        }
        if !missing.is_empty() {
            return Err(BenchError::MissingRuns(missing));
        }
        let wanted: Vec<RunRecord> = records
            .iter()
            .filter(|r| scenarios.contains(&r.scenario) && methods.contains(&r.method) && seeds.contains(&r.seed))
            .cloned()
            .collect();
        Ok(Self::from_records(&wanted))
    }

    /// Groups whatever records are present.
    pub fn from_records(records: &[RunRecord]) -> Table {
        let mut groups: BTreeMap<(ScenarioId, Method), BTreeMap<u64, &RunRecord>> = BTreeMap::new();
        for r in records {
            groups.entry((r.scenario, r.method)).or_default().insert(r.seed, r);
        }
        let cells = groups
            .into_iter()
            .map(|((scenario, method), runs)| {
                let pick = |f: fn(&RunRecord) -> f64| Stat::of(&runs.values().map(|r| f(r)).collect::<Vec<_>>());
                Cell {
                    scenario,
                    method,
                    seeds: runs.keys().copied().collect(),
                    rmse: pick(|r| r.rmse),
                    paper_mae: pick(|r| r.paper_mae),
                    mean_abs_laplacian: pick(|r| r.mean_abs_laplacian),
                }
            })
            .collect();
        Table { cells }
    }

    pub fn cell(&self, scenario: ScenarioId, method: Method) -> Option<&Cell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.method == method)
    }

    /// Unscaled values, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario,method,runs,rmse_mean,rmse_std,paper_mae_mean,paper_mae_std,laplacian_mean,laplacian_std\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.scenario,
                c.method,
                c.seeds.len(),
                fmt17(c.rmse.mean),
                fmt17(c.rmse.std),
                fmt17(c.paper_mae.mean),
                fmt17(c.paper_mae.std),
                fmt17(c.mean_abs_laplacian.mean),
                fmt17(c.mean_abs_laplacian.std),
            );
        }
        out
    }

    /// Console table, values multiplied by 100 when `scale100`.
    pub fn render(&self, scale100: bool) -> String {
        let k = if scale100 { 100.0 } else { 1.0 };
        let fmt = |s: Stat| format!("{:.3} ± {:.3}", s.mean * k, s.std * k);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<18} {:>5} {:>24} {:>24}",
            "scenario", "method", "runs", "RMSE", "E[|lap phi|]"
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<16} {:<18} {:>5} {:>24} {:>24}",
                c.scenario.id(),
                c.method.label(),
                c.seeds.len(),
                fmt(c.rmse),
                fmt(c.mean_abs_laplacian)
            );
        }
        let _ = writeln!(
            out,
            "mean ± population std over seeds{}",
            if scale100 { "; values × 100" } else { "" }
        );
        out
    }
}
