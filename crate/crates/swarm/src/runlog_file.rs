//! JSON Lines run logs and the metrics file.
//!
//! Every line is one record `{"t", "kind", "payload", "agent_id"}`; the
//! first line is the header carrying the schema version.

use std::io::{self, BufRead, Write};

use compton_swarm_core::metrics::RunMetrics;
use compton_swarm_core::sim::{Record, RecordBody, RunLog, RUNLOG_SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum RunLogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("run log is empty or does not start with a header record")]
    MissingHeader,
    #[error("run log schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u64, expected: u32 },
}

pub fn write_runlog<W: Write>(log: &RunLog, mut out: W) -> io::Result<()> {
    for record in log.iter() {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn runlog_to_string(log: &RunLog) -> String {
    let mut buf = Vec::new();
    write_runlog(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Checks the header line before decoding anything else, so that logs from
/// another schema fail with a version error instead of a parse error.
fn check_header(line: &str) -> Result<(), RunLogError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| RunLogError::Parse { line: 1, message: e.to_string() })?;
    if value.get("kind").and_then(|k| k.as_str()) != Some("header") {
        return Err(RunLogError::MissingHeader);
    }
    let found = value.pointer("/payload/schema_version").and_then(|v| v.as_u64()).ok_or(RunLogError::MissingHeader)?;
    if found != u64::from(RUNLOG_SCHEMA_VERSION) {
        return Err(RunLogError::SchemaMismatch { found, expected: RUNLOG_SCHEMA_VERSION });
    }
    Ok(())
}

pub fn read_runlog<R: BufRead>(input: R) -> Result<RunLog, RunLogError> {
    let mut log = RunLog::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let number = i + 1;
        if number == 1 {
            check_header(&line)?;
        }
        if line.trim().is_empty() {
            return Err(RunLogError::Parse { line: number, message: "empty line".into() });
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| RunLogError::Parse { line: number, message: e.to_string() })?;
        if log.records.last().is_some_and(|prev| prev.t > record.t) {
            return Err(RunLogError::Parse { line: number, message: format!("timestamp {} precedes the previous record", record.t) });
        }
        log.records.push(record);
    }
    if !matches!(log.records.first().map(|r| &r.body), Some(RecordBody::Header { .. })) {
        return Err(RunLogError::MissingHeader);
    }
    Ok(log)
}

/// Pretty-printed metrics with a trailing newline.
pub fn metrics_to_json(metrics: &RunMetrics) -> String {
    let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use compton_swarm_core::sim::{run_scenario, ScenarioConfig};

    fn sample() -> RunLog {
        let mut cfg = ScenarioConfig::with_agents(2);
        cfg.termination.max_time = 40.0;
        run_scenario(&cfg, 3).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let log = sample();
        let text = runlog_to_string(&log);
        assert_eq!(text.lines().count(), log.records.len());
        let back = read_runlog(text.as_bytes()).unwrap();
        assert_eq!(back, log);
        assert_eq!(runlog_to_string(&back), text);
    }

    proptest::proptest! {
        #[test]
        fn floats_round_trip_bit_exactly(xs in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..40)) {
            use compton_swarm_core::geom::Vec3;
            let mut log = RunLog::new();
            log.push(0.0, None, RecordBody::Header { schema_version: RUNLOG_SCHEMA_VERSION, seed: 0, n_agents: 1, dt: 0.05 });
            for (i, x) in xs.iter().enumerate() {
                let v = Vec3::new(*x, -x / 3.0, x * 1e-7);
                log.push(i as f64 * 0.1, Some(0), RecordBody::Source { position: v, velocity: v * 0.5 });
            }
            let back = read_runlog(runlog_to_string(&log).as_bytes()).unwrap();
            proptest::prop_assert_eq!(back, log);
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = runlog_to_string(&sample());
        let cut = &text[..text.len() - 20];
        let lines = cut.lines().count();
        match read_runlog(cut.as_bytes()) {
            Err(RunLogError::Parse { line, .. }) => assert_eq!(line, lines),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_version_is_checked() {
        let text = runlog_to_string(&sample()).replacen("\"schema_version\":1", "\"schema_version\":99", 1);
        assert!(matches!(read_runlog(text.as_bytes()), Err(RunLogError::SchemaMismatch { found: 99, .. })));
    }

    #[test]
    fn header_is_required() {
        let text = runlog_to_string(&sample());
        let without: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_runlog(without.as_bytes()), Err(RunLogError::MissingHeader)));
        assert!(matches!(read_runlog("".as_bytes()), Err(RunLogError::MissingHeader)));
    }
}
