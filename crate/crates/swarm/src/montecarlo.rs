//! Repeated scenarios over consecutive seeds and their aggregate.
//!
//! Runs execute on a dedicated thread pool; results are collected in seed
//! order so the summary never depends on the number of workers.

use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use compton_swarm_core::metrics::{self, RunMetrics};
use compton_swarm_core::sim::{run_scenario, ScenarioConfig, TerminationReason};
use rayon::prelude::*;
use serde::Serialize;

use crate::runlog_file::{metrics_to_json, write_runlog};

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub outcome: Result<RunMetrics, String>,
}

/// Headline statistics first, then the extra statistics and the run counts.
/// `error_median` is the pooled median.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub time_to_x0_median: Option<f64>,
    pub time_to_x0_max: Option<f64>,
    pub tracking_time_avg: Option<f64>,
    pub tracking_time_max: Option<f64>,
    pub error_median: Option<f64>,
    pub pooled_error_median: Option<f64>,
    pub per_run_error_median: Option<f64>,
    pub runs: usize,
    pub failed: usize,
    pub initialized: usize,
    pub tracking_complete: usize,
    pub target_lost: usize,
    pub time_limit: usize,
}

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "time_to_x0_median",
    "time_to_x0_max",
    "tracking_time_avg",
    "tracking_time_max",
    "error_median",
    "pooled_error_median",
    "per_run_error_median",
    "runs",
    "failed",
    "initialized",
    "tracking_complete",
    "target_lost",
    "time_limit",
];

pub const RUNS_COLUMNS: [&str; 9] =
    ["seed", "status", "time_to_x0", "tracking_time", "error_median", "error_mean", "termination_reason", "termination_time", "message"];

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("could not build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> BatchError + '_ {
    move |source| BatchError::Io { path: path.to_path_buf(), source }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into())
}

fn run_one(cfg: &ScenarioConfig, seed: u64, logs: Option<&Path>) -> Result<RunMetrics, String> {
    let log = catch_unwind(AssertUnwindSafe(|| run_scenario(cfg, seed))).map_err(panic_message)?.map_err(|e| e.to_string())?;
    let m = RunMetrics::from_log(&log);
    if let Some(root) = logs {
        let dir = root.join(format!("seed-{seed}"));
        let write = || -> io::Result<()> {
            fs::create_dir_all(&dir)?;
            write_runlog(&log, io::BufWriter::new(fs::File::create(dir.join("runlog.jsonl"))?))?;
            fs::write(dir.join("metrics.json"), metrics_to_json(&m))
        };
        write().map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    Ok(m)
}

/// Runs seeds `seed_base..seed_base + runs` with the source start drawn
/// per seed. When `logs` is given each run writes
/// `<logs>/seed-<n>/{runlog.jsonl,metrics.json}`.
pub fn run_batch(cfg: &ScenarioConfig, runs: u64, seed_base: u64, jobs: usize, logs: Option<&Path>) -> Result<Vec<RunResult>, BatchError> {
    let mut cfg = cfg.clone();
    cfg.source.randomize_start = true;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let seed = seed_base + i;
                RunResult { seed, outcome: run_one(&cfg, seed, logs) }
            })
            .collect()
    });
    Ok(results)
}

pub fn summarize(results: &[RunResult]) -> Summary {
    let ok: Vec<&RunMetrics> = results.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let ttx: Vec<f64> = ok.iter().filter_map(|m| m.time_to_x0).collect();
    let tracking: Vec<f64> = ok.iter().map(|m| m.tracking_time).collect();
    let pooled: Vec<f64> = ok.iter().flat_map(|m| m.estimation_error_series.iter().map(|(_, e)| *e)).collect();
    let per_run: Vec<f64> = ok.iter().filter_map(|m| m.error_median).collect();
    let count = |reason| ok.iter().filter(|m| m.termination_reason == Some(reason)).count();
    let pooled_median = metrics::median(&pooled);
    Summary {
        time_to_x0_median: metrics::median(&ttx),
        time_to_x0_max: metrics::max(&ttx),
        tracking_time_avg: metrics::mean(&tracking),
        tracking_time_max: metrics::max(&tracking),
        error_median: pooled_median,
        pooled_error_median: pooled_median,
        per_run_error_median: metrics::median(&per_run),
        runs: results.len(),
        failed: results.len() - ok.len(),
        initialized: ttx.len(),
        tracking_complete: count(TerminationReason::TrackingComplete),
        target_lost: count(TerminationReason::TargetLost),
        time_limit: count(TerminationReason::TimeLimit),
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn reason_name(r: TerminationReason) -> String {
    serde_json::to_value(r).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn summary_csv(s: &Summary) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS)?;
    let counts = [s.runs, s.failed, s.initialized, s.tracking_complete, s.target_lost, s.time_limit];
    let stats = [
        s.time_to_x0_median,
        s.time_to_x0_max,
        s.tracking_time_avg,
        s.tracking_time_max,
        s.error_median,
        s.pooled_error_median,
        s.per_run_error_median,
    ];
    w.write_record(stats.iter().map(|v| cell(*v)).chain(counts.iter().map(|c| c.to_string())))?;
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

pub fn runs_csv(results: &[RunResult]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RUNS_COLUMNS)?;
    for r in results {
        let row = match &r.outcome {
            Ok(m) => [
                r.seed.to_string(),
                "ok".into(),
                cell(m.time_to_x0),
                m.tracking_time.to_string(),
                cell(m.error_median),
                cell(m.error_mean),
                m.termination_reason.map(reason_name).unwrap_or_default(),
                cell(m.termination_time),
                String::new(),
            ],
            Err(e) => [r.seed.to_string(), "failed".into(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), e.clone()],
        };
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

/// Writes `summary.csv` and `runs.csv` into `dir`.
pub fn write_reports(dir: &Path, results: &[RunResult]) -> Result<Summary, BatchError> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let summary = summarize(results);
    let path = dir.join("summary.csv");
    fs::write(&path, summary_csv(&summary)?).map_err(io_at(&path))?;
    let path = dir.join("runs.csv");
    fs::write(&path, runs_csv(results)?).map_err(io_at(&path))?;
    Ok(summary)
}
