//! CSV time series extracted from a run log.
//!
//! `paths` is long format (`t,series,x,y`, one row per agent plus the
//! latest hypothesis and the true source at every logged tick). `spacing`
//! and `speed` are wide (`t,agent_0,...`). `error` is `t,error` over the
//! hypothesis updates.

use std::io::Write;
use std::str::FromStr;

use compton_swarm_core::metrics::RunMetrics;
use compton_swarm_core::sim::{RecordBody, RunLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Paths,
    Spacing,
    Speed,
    Error,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paths" => Ok(PlotKind::Paths),
            "spacing" => Ok(PlotKind::Spacing),
            "speed" => Ok(PlotKind::Speed),
            "error" => Ok(PlotKind::Error),
            other => Err(format!("unknown plot kind `{other}` (expected paths, spacing, speed or error)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("run log has no header record")]
    MissingHeader,
}

fn n_agents(log: &RunLog) -> Result<usize, PlotError> {
    match log.header().map(|r| &r.body) {
        Some(RecordBody::Header { n_agents, .. }) => Ok(*n_agents as usize),
        _ => Err(PlotError::MissingHeader),
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn agent_columns(n: usize) -> Vec<String> {
    std::iter::once("t".to_string()).chain((0..n).map(|i| format!("agent_{i}"))).collect()
}

/// One row per logged tick, taken from the `AgentState` records.
fn write_wide<W: Write>(log: &RunLog, out: W, value: impl Fn(&RecordBody) -> Option<f64>) -> Result<(), PlotError> {
    let n = n_agents(log)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(agent_columns(n))?;
    let mut row: Option<(f64, Vec<Option<f64>>)> = None;
    let flush = |w: &mut csv::Writer<W>, row: &Option<(f64, Vec<Option<f64>>)>| -> Result<(), csv::Error> {
        if let Some((t, vals)) = row {
            w.write_record(std::iter::once(num(*t)).chain(vals.iter().map(|v| opt(*v))))?;
        }
        Ok(())
    };
    for r in log.iter() {
        if !matches!(r.body, RecordBody::AgentState { .. }) {
            continue;
        }
        let Some(id) = r.agent_id.map(|i| i as usize).filter(|&i| i < n) else { continue };
        if row.as_ref().is_none_or(|(t, _)| *t != r.t) {
            flush(&mut w, &row)?;
            row = Some((r.t, vec![None; n]));
        }
        if let Some((_, vals)) = row.as_mut() {
            vals[id] = value(&r.body);
        }
    }
    flush(&mut w, &row)?;
    w.flush()?;
    Ok(())
}

type Xy = (f64, f64);

struct Tick {
    t: f64,
    truth: Xy,
    agents: Vec<Option<Xy>>,
}

fn write_tick<W: Write>(w: &mut csv::Writer<W>, tick: Option<&Tick>, hyp: Option<Xy>) -> Result<(), csv::Error> {
    let Some(tick) = tick else { return Ok(()) };
    let t = num(tick.t);
    for (i, p) in tick.agents.iter().enumerate() {
        w.write_record([t.clone(), format!("agent_{i}"), opt(p.map(|p| p.0)), opt(p.map(|p| p.1))])?;
    }
    w.write_record([t.clone(), "hypothesis".into(), opt(hyp.map(|p| p.0)), opt(hyp.map(|p| p.1))])?;
    w.write_record([t, "truth".into(), num(tick.truth.0), num(tick.truth.1)])
}

fn write_paths<W: Write>(log: &RunLog, out: W) -> Result<(), PlotError> {
    let n = n_agents(log)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "series", "x", "y"])?;
    let mut hypothesis: Option<Xy> = None;
    let mut tick: Option<Tick> = None;
    for r in log.iter() {
        match &r.body {
            RecordBody::Source { position, .. } => {
                write_tick(&mut w, tick.as_ref(), hypothesis)?;
                tick = Some(Tick { t: r.t, truth: (position.x, position.y), agents: vec![None; n] });
            }
            RecordBody::AgentState { position, .. } => {
                if let (Some(tick), Some(id)) = (tick.as_mut(), r.agent_id) {
                    if tick.t == r.t && (id as usize) < n {
                        tick.agents[id as usize] = Some((position.x, position.y));
                    }
                }
            }
            RecordBody::Hypothesis { x, .. } => {
                // Updates after the tick's states belong to the next row.
                if tick.as_ref().is_some_and(|k| k.t < r.t) {
                    write_tick(&mut w, tick.take().as_ref(), hypothesis)?;
                }
                hypothesis = Some((x.x, x.y));
            }
            _ => {}
        }
    }
    write_tick(&mut w, tick.as_ref(), hypothesis)?;
    w.flush()?;
    Ok(())
}

fn write_error<W: Write>(log: &RunLog, out: W) -> Result<(), PlotError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "error"])?;
    for (t, e) in RunMetrics::from_log(log).estimation_error_series {
        w.write_record([num(t), num(e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plotdata<W: Write>(log: &RunLog, kind: PlotKind, out: W) -> Result<(), PlotError> {
    match kind {
        PlotKind::Paths => write_paths(log, out),
        PlotKind::Spacing => write_wide(log, out, |b| match b {
            RecordBody::AgentState { spacing_error, .. } => *spacing_error,
            _ => None,
        }),
        PlotKind::Speed => write_wide(log, out, |b| match b {
            RecordBody::AgentState { velocity, .. } => Some(velocity.norm()),
            _ => None,
        }),
        PlotKind::Error => write_error(log, out),
    }
}

pub fn plotdata_string(log: &RunLog, kind: PlotKind) -> Result<String, PlotError> {
    let mut buf = Vec::new();
    write_plotdata(log, kind, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}
