//! Per-run performance figures recomputed from a [`RunLog`].

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::sim::{RecordBody, RunLog, Stage, TerminationReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// First transition of any agent into tracking, s.
    pub time_to_x0: Option<f64>,
    /// From `time_to_x0` to target loss or termination, s.
    pub tracking_time: f64,
    /// Horizontal distance between each hypothesis update and the true
    /// source, as `(t, m)` pairs.
    pub estimation_error_series: Vec<(f64, f64)>,
    pub error_median: Option<f64>,
    pub error_mean: Option<f64>,
    pub termination_reason: Option<TerminationReason>,
    pub termination_time: Option<f64>,
}

/// Median with the two middle values averaged for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn max(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::max)
}

impl RunMetrics {
    pub fn from_log(log: &RunLog) -> Self {
        let mut time_to_x0 = None;
        let mut lost_at = None;
        let mut source = None;
        let mut series = Vec::new();
        for r in log.iter() {
            match &r.body {
                RecordBody::Source { position, .. } => source = Some(*position),
                RecordBody::StageChange { to: Stage::Tracking, .. } if time_to_x0.is_none() => time_to_x0 = Some(r.t),
                RecordBody::TargetLost if lost_at.is_none() => lost_at = Some(r.t),
                RecordBody::Hypothesis { x, .. } => {
                    if let Some(s) = source {
                        let e: f64 = (x.x - s.x).hypot(x.y - s.y);
                        series.push((r.t, e));
                    }
                }
                _ => {}
            }
        }
        let termination = log.termination();
        let end = lost_at.or(termination.map(|(t, _)| t));
        let tracking_time = match (time_to_x0, end) {
            (Some(start), Some(end)) => (end - start).max(0.0),
            _ => 0.0,
        };
        let errors: Vec<f64> = series.iter().map(|(_, e)| *e).collect();
        RunMetrics {
            time_to_x0,
            tracking_time,
            error_median: median(&errors),
            error_mean: mean(&errors),
            estimation_error_series: series,
            termination_reason: termination.map(|(_, r)| r),
            termination_time: termination.map(|(t, _)| t),
        }
    }
}
