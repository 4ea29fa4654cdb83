use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use compton_swarm::core::geom::Vec3;
use compton_swarm::core::metrics::RunMetrics;
use compton_swarm::core::sim::{run_scenario, RecordBody, RunLog};
use compton_swarm::montecarlo::{run_batch, write_reports};
use compton_swarm::output::resolve_out;
use compton_swarm::plotdata::{write_plotdata, PlotKind};
use compton_swarm::runlog_file::{metrics_to_json, read_runlog, write_runlog};
use compton_swarm::scenario_file::{load_config, LoadError};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_INITIALIZED: u8 = 3;

#[derive(Parser)]
#[command(name = "compton-swarm", version, about = "Swarm Compton-camera source localization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write runlog.jsonl and metrics.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory [default: $COMPTON_SWARM_OUT or ./out, then <timestamp>-<seed>]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeds seed_base..seed_base+runs and write summary.csv and runs.csv.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long)]
        seed_base: u64,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also keep every run's runlog.jsonl and metrics.json.
        #[arg(long)]
        save_runs: bool,
    },
    /// Recompute metrics from a run log and compare with the stored metrics.json.
    Metrics {
        #[arg(long)]
        runlog: PathBuf,
        /// Measure errors against a fixed horizontal source position `X,Y`
        /// instead of the logged true source.
        #[arg(long, value_name = "X,Y")]
        truth_source: Option<String>,
        /// metrics.json to compare against [default: next to the run log]
        #[arg(long)]
        expect: Option<PathBuf>,
    },
    /// Emit CSV series for plotting.
    Plotdata {
        #[arg(long)]
        runlog: PathBuf,
        #[arg(long, value_parser = ["paths", "spacing", "speed", "error"])]
        kind: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = if matches!(e, LoadError::Io { .. }) { EXIT_IO } else { EXIT_CONFIG };
        Failure { code, message: e.to_string() }
    }
}

fn load_log(path: &Path) -> Result<RunLog, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::io(path, e))?;
    read_runlog(BufReader::new(file)).map_err(|e| Failure::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn cmd_run(config: &Path, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let log = run_scenario(&cfg, seed).map_err(|e| Failure { code: EXIT_CONFIG, message: e.to_string() })?;
    let metrics = RunMetrics::from_log(&log);
    let dir = resolve_out(out, seed);
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    let path = dir.join("runlog.jsonl");
    let file = fs::File::create(&path).map_err(|e| Failure::io(&path, e))?;
    write_runlog(&log, io::BufWriter::new(file)).map_err(|e| Failure::io(&path, e))?;
    write_file(&dir.join("metrics.json"), &metrics_to_json(&metrics))?;
    println!("{}", dir.display());
    if metrics.time_to_x0.is_none() {
        return Err(Failure { code: EXIT_NOT_INITIALIZED, message: "no agent initialized a hypothesis".into() });
    }
    Ok(())
}

fn cmd_montecarlo(config: &Path, runs: u64, seed_base: u64, jobs: usize, out: Option<&Path>, save_runs: bool) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let dir = resolve_out(out, seed_base);
    let logs = save_runs.then(|| dir.join("runs"));
    let results = run_batch(&cfg, runs, seed_base, jobs.max(1), logs.as_deref()).map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })?;
    let summary = write_reports(&dir, &results).map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })?;
    for r in &results {
        if let Err(e) = &r.outcome {
            eprintln!("seed {}: {e}", r.seed);
        }
    }
    println!("{}", dir.display());
    if summary.failed == summary.runs {
        return Err(Failure { code: EXIT_IO, message: "every run failed".into() });
    }
    Ok(())
}

fn parse_xy(s: &str) -> Option<Vec3> {
    let (x, y) = s.split_once(',')?;
    Some(Vec3::new(x.trim().parse().ok()?, y.trim().parse().ok()?, 0.0))
}

/// Replaces the logged source track with a fixed position.
fn with_fixed_source(log: &RunLog, position: Vec3) -> RunLog {
    let mut out = RunLog::new();
    for (i, r) in log.iter().enumerate() {
        if matches!(r.body, RecordBody::Source { .. }) {
            continue;
        }
        out.records.push(r.clone());
        if i == 0 {
            out.push(r.t, None, RecordBody::Source { position, velocity: Vec3::zeros() });
        }
    }
    out
}

fn cmd_metrics(runlog: &Path, truth: Option<&str>, expect: Option<&Path>) -> Result<(), Failure> {
    let log = load_log(runlog)?;
    let json = match truth {
        Some(s) => {
            let p = parse_xy(s).ok_or_else(|| Failure { code: EXIT_CONFIG, message: format!("--truth-source expects X,Y, got `{s}`") })?;
            metrics_to_json(&RunMetrics::from_log(&with_fixed_source(&log, p)))
        }
        None => metrics_to_json(&RunMetrics::from_log(&log)),
    };
    io::stdout().write_all(json.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
    let sibling = runlog.with_file_name("metrics.json");
    let reference = match expect {
        Some(p) => Some(p.to_path_buf()),
        None if truth.is_none() && sibling.exists() => Some(sibling),
        None => None,
    };
    if let Some(path) = reference {
        let stored = fs::read_to_string(&path).map_err(|e| Failure::io(&path, e))?;
        if stored != json {
            return Err(Failure { code: EXIT_IO, message: format!("recomputed metrics differ from {}", path.display()) });
        }
        eprintln!("metrics match {}", path.display());
    }
    Ok(())
}

fn cmd_plotdata(runlog: &Path, kind: &str, out: Option<&Path>) -> Result<(), Failure> {
    let kind: PlotKind = kind.parse().map_err(|message| Failure { code: EXIT_CONFIG, message })?;
    let log = load_log(runlog)?;
    let result = match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Failure::io(path, e))?;
            write_plotdata(&log, kind, io::BufWriter::new(file))
        }
        None => write_plotdata(&log, kind, io::stdout().lock()),
    };
    result.map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, seed, out } => cmd_run(config, *seed, out.as_deref()),
        Command::Montecarlo { config, runs, seed_base, jobs, out, save_runs } => {
            cmd_montecarlo(config, *runs, *seed_base, *jobs, out.as_deref(), *save_runs)
        }
        Command::Metrics { runlog, truth_source, expect } => cmd_metrics(runlog, truth_source.as_deref(), expect.as_deref()),
        Command::Plotdata { runlog, kind, out } => cmd_plotdata(runlog, kind, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
