//! Per-vehicle mission logic: search until enough cones are shared, batch
//! initialize, then fuse every cone and fly the encirclement.
//!
//! All estimation and planning happens in the agent's own frame. The
//! physical vehicle state is kept in the world frame and references are
//! mapped into it before tracking.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::frames::FrameTransform;
use super::log::{RecordBody, RunLog, Stage};
use super::vehicle::{sample_trajectory, track_reference, Reference, VehicleLimits, VehicleState};
use super::config::SearchConfig;
use crate::detector::MeasurementEvent;
use crate::flocking::{bias_angle, generate_encirclement_trajectory, nearest_neighbor_angle, polar_about, search_heading, FlockConfig, TrajectoryPoint};
use crate::fusion::{fuse_cone, init_hypothesis_nlls, Bounds, FusionConfig, Hypothesis, NllsConfig};
use crate::geom::Vec3;

/// Distance the search carrot may lead the vehicle before it waits.
const CARROT_LEAD: f64 = 3.0;

/// Everything broadcast between agents. Payloads are expressed in the
/// frame named by `frame_id`.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Cone(MeasurementEvent),
    Position { position: Vec3, velocity: Vec3, frame_id: u32 },
}

impl Message {
    pub fn frame_id(&self) -> u32 {
        match self {
            Message::Cone(e) => e.frame_id,
            Message::Position { frame_id, .. } => *frame_id,
        }
    }
}

/// Last reported kinematic state of another agent, in the receiver's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborReport {
    pub position: Vec3,
    pub velocity: Vec3,
    pub sent_at: f64,
}

impl NeighborReport {
    /// Position extrapolated to `t` at constant velocity.
    pub fn predict(&self, t: f64) -> Vec3 {
        self.position + self.velocity * (t - self.sent_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    pub fusion: FusionConfig,
    pub nlls: NllsConfig,
    pub flock: FlockConfig,
    pub vehicle: VehicleLimits,
    pub search: SearchConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub t: f64,
    pub dt: f64,
    /// Regenerate the encirclement trajectory this tick.
    pub plan_now: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Plan {
    start: f64,
    points: Vec<TrajectoryPoint>,
}

/// Piecewise-linear path parameterized by arc length.
#[derive(Debug, Clone, PartialEq)]
struct Path {
    points: Vec<Vec3>,
    cumulative: Vec<f64>,
}

impl Path {
    fn new(points: Vec<Vec3>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += (p - points[i - 1]).norm();
            }
            cumulative.push(acc);
        }
        Path { points, cumulative }
    }

    fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Point and unit tangent at arc length `s`.
    fn at(&self, s: f64) -> (Vec3, Vec3) {
        if self.points.len() == 1 {
            return (self.points[0], Vec3::zeros());
        }
        let s = s.clamp(0.0, self.length());
        let i = (self.cumulative.partition_point(|&c| c <= s)).clamp(1, self.points.len() - 1) - 1;
        let seg = self.points[i + 1] - self.points[i];
        let len = seg.norm();
        if len == 0.0 {
            return (self.points[i], Vec3::zeros());
        }
        let tangent = seg / len;
        (self.points[i] + tangent * (s - self.cumulative[i]), tangent)
    }

    /// Arc length of the point of the path nearest to `p`.
    fn closest(&self, p: &Vec3) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..self.points.len().saturating_sub(1) {
            let a = self.points[i];
            let seg = self.points[i + 1] - a;
            let len2 = seg.norm_squared();
            let u = if len2 > 0.0 { ((p - a).dot(&seg) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d = (a + seg * u - p).norm();
            if d < best.0 {
                best = (d, self.cumulative[i] + u * len2.sqrt());
            }
        }
        best.1
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u32,
    /// World to own frame.
    pub frame: FrameTransform,
    pub vehicle: VehicleState,
    pub stage: Stage,
    /// Cones seen (own and received) since the last reset.
    pub cones_seen: usize,
    pub last_cone_time: Option<f64>,
    pub nlls_invocations: usize,
    /// Search volume in the world frame.
    volume: Bounds,
    path: Path,
    progress: f64,
    collected: Vec<MeasurementEvent>,
    pending: Vec<MeasurementEvent>,
    nlls_attempted_at: usize,
    hypothesis: Option<Hypothesis>,
    neighbors: BTreeMap<u32, NeighborReport>,
    plan: Option<Plan>,
}

impl Agent {
    /// Agent starting at rest at `start` (world) with a world-frame search
    /// path and search volume.
    pub fn new(id: u32, frame: FrameTransform, start: Vec3, search_path: &[Vec3], search_volume: &Bounds) -> Self {
        let path = Path::new(search_path.iter().map(|p| frame.apply_point(p)).collect());
        Agent {
            id,
            frame,
            vehicle: VehicleState::at_rest(start, 0.0),
            stage: Stage::SearchingInit,
            cones_seen: 0,
            last_cone_time: None,
            nlls_invocations: 0,
            volume: *search_volume,
            path,
            progress: 0.0,
            collected: Vec::new(),
            pending: Vec::new(),
            nlls_attempted_at: 0,
            hypothesis: None,
            neighbors: BTreeMap::new(),
            plan: None,
        }
    }

    /// Agent already encircling a given world-frame hypothesis.
    pub fn tracking(id: u32, start: Vec3, hypothesis: Vec3, p0: f64) -> Self {
        let mut agent = Agent::new(id, FrameTransform::identity(), start, &[start], &Bounds::new(start, start));
        agent.stage = Stage::Tracking;
        agent.hypothesis = Some(Hypothesis::new(hypothesis, p0));
        agent
    }

    /// Own position in the own frame.
    pub fn own_position(&self) -> Vec3 {
        self.frame.apply_point(&self.vehicle.position)
    }

    pub fn hypothesis(&self) -> Option<&Hypothesis> {
        self.hypothesis.as_ref()
    }

    pub fn hypothesis_world(&self) -> Option<Hypothesis> {
        self.hypothesis.map(|h| self.frame.inverse().apply_hypothesis(&h))
    }

    /// Moves the hypothesis without touching its covariance.
    pub fn set_hypothesis_position(&mut self, x: Vec3) {
        if let Some(h) = self.hypothesis.as_mut() {
            h.x = x;
        }
    }

    pub fn collected_cones(&self) -> usize {
        self.collected.len()
    }

    /// Hands over a cone already expressed in this agent's frame.
    pub fn receive_cone(&mut self, event: MeasurementEvent) {
        self.cones_seen += 1;
        self.last_cone_time = Some(self.last_cone_time.map_or(event.time, |t| t.max(event.time)));
        match self.stage {
            Stage::SearchingInit => self.collected.push(event),
            Stage::Tracking => self.pending.push(event),
        }
    }

    /// Own velocity in the own frame.
    pub fn own_velocity(&self) -> Vec3 {
        self.frame.apply_vector(&self.vehicle.velocity)
    }

    /// Latest known state of another agent, in this agent's frame.
    pub fn receive_position(&mut self, sender: u32, report: NeighborReport) {
        self.neighbors.insert(sender, report);
    }

    /// Drops the estimate and returns to the search stage, resuming the
    /// search path at the point nearest to the vehicle.
    pub fn reset_to_search(&mut self) {
        self.stage = Stage::SearchingInit;
        self.hypothesis = None;
        self.plan = None;
        self.collected.clear();
        self.pending.clear();
        self.cones_seen = 0;
        self.nlls_attempted_at = 0;
        self.progress = self.path.closest(&self.own_position());
    }

    fn log_hypothesis(&self, t: f64, log: &mut RunLog) {
        if let Some(h) = self.hypothesis_world() {
            log.push(t, Some(self.id), RecordBody::Hypothesis { x: h.x, p: h.p });
        }
    }

    fn try_initialize(&mut self, ctx: &StepContext, params: &AgentParams, log: &mut RunLog) {
        let count = self.collected.len();
        if count < params.fusion.m || count <= self.nlls_attempted_at {
            return;
        }
        self.nlls_attempted_at = count;
        self.nlls_invocations += 1;
        // The start grid and bounds live in the search-area frame, so the
        // fit runs there and the result is mapped back.
        let to_world = self.frame.inverse();
        let cones: Vec<_> = self.collected.iter().map(|e| to_world.apply_cone(&e.cone)).collect();
        match init_hypothesis_nlls(&cones, params.fusion.m, &self.volume, &params.nlls) {
            Ok(world) => {
                log.push(ctx.t, Some(self.id), RecordBody::Nlls { cones: count as u32, result: Some(world) });
                self.hypothesis = Some(Hypothesis::new(self.frame.apply_point(&world), params.fusion.p0));
                self.stage = Stage::Tracking;
                self.collected.clear();
                self.plan = None;
                log.push(ctx.t, Some(self.id), RecordBody::StageChange { from: Stage::SearchingInit, to: Stage::Tracking });
                self.log_hypothesis(ctx.t, log);
            }
            Err(_) => {
                log.push(ctx.t, Some(self.id), RecordBody::Nlls { cones: count as u32, result: None });
            }
        }
    }

    fn fuse_pending(&mut self, ctx: &StepContext, params: &AgentParams, log: &mut RunLog) {
        if self.pending.is_empty() {
            return;
        }
        let mut pending = core::mem::take(&mut self.pending);
        pending.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent_id.cmp(&b.agent_id)));
        for event in &pending {
            let Some(h) = self.hypothesis else { break };
            match fuse_cone(&h, &event.cone, &params.fusion) {
                Ok(next) => {
                    self.hypothesis = Some(next);
                    self.log_hypothesis(ctx.t, log);
                }
                Err(_) => log.push(ctx.t, Some(self.id), RecordBody::CorrectionSkipped),
            }
        }
    }

    fn replan(&mut self, ctx: &StepContext, params: &AgentParams) {
        let Some(h) = self.hypothesis else { return };
        let own = self.own_position();
        let own_polar = polar_about(&h.x, &own);
        let others: Vec<_> = self.neighbors.values().map(|n| polar_about(&h.x, &n.predict(ctx.t))).collect();
        let beta = nearest_neighbor_angle(&own_polar, &others).map_or(0.0, |theta| bias_angle(theta, &params.flock));
        let points = generate_encirclement_trajectory(&own, &h.x, beta, &params.flock);
        self.plan = Some(Plan { start: ctx.t, points });
    }

    fn search_reference(&mut self, ctx: &StepContext, params: &AgentParams) -> Reference {
        let (carrot, _) = self.path.at(self.progress);
        if (self.own_position() - carrot).norm() < CARROT_LEAD {
            self.progress = (self.progress + params.search.speed * ctx.dt).min(self.path.length());
        }
        let (position, tangent) = self.path.at(self.progress);
        let velocity = if self.progress < self.path.length() { tangent * params.search.speed } else { Vec3::zeros() };
        // The rotating heading is referenced to the search-area frame.
        let heading = self.frame.apply_heading(search_heading(ctx.t, params.search.yaw_rate));
        Reference { position, velocity, acceleration: Vec3::zeros(), heading }
    }

    fn to_world(&self, r: &Reference) -> Reference {
        if self.frame.is_identity() {
            return *r;
        }
        let inv = self.frame.inverse();
        Reference {
            position: inv.apply_point(&r.position),
            velocity: inv.apply_vector(&r.velocity),
            acceleration: inv.apply_vector(&r.acceleration),
            heading: inv.apply_heading(r.heading),
        }
    }

    /// One tick: estimation for the current stage, then motion.
    pub fn step(&mut self, ctx: &StepContext, params: &AgentParams, log: &mut RunLog) {
        match self.stage {
            Stage::SearchingInit => self.try_initialize(ctx, params, log),
            Stage::Tracking => self.fuse_pending(ctx, params, log),
        }
        let reference = match self.stage {
            Stage::SearchingInit => self.search_reference(ctx, params),
            Stage::Tracking => {
                if ctx.plan_now || self.plan.is_none() {
                    self.replan(ctx, params);
                }
                match &self.plan {
                    Some(plan) => sample_trajectory(&plan.points, ctx.t - plan.start),
                    None => Reference::hold(self.own_position(), 0.0),
                }
            }
        };
        let reference = self.to_world(&reference);
        self.vehicle = track_reference(&self.vehicle, &reference, &params.vehicle, ctx.dt);
    }
}
