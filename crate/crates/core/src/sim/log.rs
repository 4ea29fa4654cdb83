//! Append-only record of one scenario.

use alloc::vec::Vec;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::geom::{ComptonCone, Vec3};

/// Bumped whenever a record layout changes.
pub const RUNLOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SearchingInit,
    Tracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    TrackingComplete,
    TargetLost,
    TimeLimit,
}

/// World-frame payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum RecordBody {
    Header { schema_version: u32, seed: u64, n_agents: u32, dt: f64 },
    Source { position: Vec3, velocity: Vec3 },
    AgentState { position: Vec3, velocity: Vec3, acceleration: Vec3, heading: f64, stage: Stage, spacing_error: Option<f64> },
    Cone { cone: ComptonCone },
    Hypothesis { x: Vec3, p: Matrix3<f64> },
    StageChange { from: Stage, to: Stage },
    Nlls { cones: u32, result: Option<Vec3> },
    CorrectionSkipped,
    TargetLost,
    Termination { reason: TerminationReason },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    #[serde(flatten)]
    pub body: RecordBody,
    pub agent_id: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<Record>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Timestamps must not decrease.
    pub fn push(&mut self, t: f64, agent_id: Option<u32>, body: RecordBody) {
        debug_assert!(self.records.last().is_none_or(|r| r.t <= t), "runlog time went backwards: {t}");
        self.records.push(Record { t, body, agent_id });
    }

    pub fn is_time_ordered(&self) -> bool {
        self.records.windows(2).all(|w| w[0].t <= w[1].t)
    }

    pub fn termination(&self) -> Option<(f64, TerminationReason)> {
        self.records.iter().rev().find_map(|r| match r.body {
            RecordBody::Termination { reason } => Some((r.t, reason)),
            _ => None,
        })
    }

    pub fn header(&self) -> Option<&Record> {
        self.records.first().filter(|r| matches!(r.body, RecordBody::Header { .. }))
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Record> {
        self.records.iter()
    }
}
