//! Fixed-step world loop producing a [`RunLog`].

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::agent::{Agent, AgentParams, Message, NeighborReport, StepContext};
use super::bus::MessageBus;
use super::config::{ConfigError, ScenarioConfig, SourceMotion};
use super::frames::{transform_measurement, FrameTransform};
use super::log::{RecordBody, RunLog, Stage, TerminationReason, RUNLOG_SCHEMA_VERSION};
use crate::detector::{expected_event_rate, sample_step, synthesize_cone, MeasurementEvent, SourceState};
use crate::flocking::{generate_search_paths, nearest_neighbor_angle, polar_about, FlockConfig};
use crate::geom::{Pose, Vec3};

/// Independent random streams of one scenario.
const STREAM_SOURCE: u64 = 0;
const STREAM_DETECTION: u64 = 1;
const STREAM_FRAMES: u64 = 2;

/// Half-width of the horizontal offset drawn for heterogeneous frames.
const FRAME_OFFSET_RANGE: f64 = 100.0;

const TIME_SLACK: f64 = 1e-9;

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Scripted ground-truth source trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTrajectory {
    motion: Motion,
    height: f64,
    activity: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Motion {
    Static(Vec3),
    Circular { center: [f64; 2], radius: f64, omega: f64, phase: f64 },
    Polyline { points: Vec<[f64; 2]>, cumulative: Vec<f64>, speed: f64, offset: f64, closed: bool },
}

impl SourceTrajectory {
    /// Builds the trajectory, drawing the start from `rng` when the
    /// config asks for a randomized start.
    pub fn new<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Self {
        let src = &cfg.source;
        let randomize = src.randomize_start;
        let motion = match &src.motion {
            SourceMotion::Static { position } => {
                let [x, y] = if randomize {
                    [rng.random_range(cfg.area.min[0]..=cfg.area.max[0]), rng.random_range(cfg.area.min[1]..=cfg.area.max[1])]
                } else {
                    *position
                };
                Motion::Static(Vec3::new(x, y, src.height))
            }
            SourceMotion::Circular { center, radius, speed, phase } => Motion::Circular {
                center: *center,
                radius: *radius,
                omega: speed / radius,
                phase: if randomize { rng.random_range(-PI..PI) } else { *phase },
            },
            SourceMotion::Waypoints { points, speed, closed } => {
                let mut pts = points.clone();
                if *closed && pts.len() > 1 {
                    pts.push(pts[0]);
                }
                let mut cumulative = Vec::with_capacity(pts.len());
                let mut acc = 0.0;
                for (i, p) in pts.iter().enumerate() {
                    if i > 0 {
                        acc += (p[0] - pts[i - 1][0]).hypot(p[1] - pts[i - 1][1]);
                    }
                    cumulative.push(acc);
                }
                let offset = if randomize && acc > 0.0 { rng.random_range(0.0..acc) } else { 0.0 };
                Motion::Polyline { points: pts, cumulative, speed: *speed, offset, closed: *closed }
            }
        };
        SourceTrajectory { motion, height: src.height, activity: src.activity }
    }

    pub fn state_at(&self, t: f64) -> SourceState {
        let (position, velocity) = match &self.motion {
            Motion::Static(p) => (*p, Vec3::zeros()),
            Motion::Circular { center, radius, omega, phase } => {
                let (s, c) = (phase + omega * t).sin_cos();
                (
                    Vec3::new(center[0] + radius * c, center[1] + radius * s, self.height),
                    Vec3::new(-radius * omega * s, radius * omega * c, 0.0),
                )
            }
            Motion::Polyline { points, cumulative, speed, offset, closed } => {
                let total = cumulative.last().copied().unwrap_or(0.0);
                if points.len() < 2 || total == 0.0 {
                    let p = points.first().copied().unwrap_or([0.0, 0.0]);
                    (Vec3::new(p[0], p[1], self.height), Vec3::zeros())
                } else {
                    let raw = offset + speed * t;
                    let (s, moving) = if *closed { (raw - total * (raw / total).floor(), true) } else { (raw.min(total), raw < total) };
                    let i = cumulative.partition_point(|&c| c <= s).clamp(1, points.len() - 1) - 1;
                    let (a, b) = (points[i], points[i + 1]);
                    let len = cumulative[i + 1] - cumulative[i];
                    let u = if len > 0.0 { (s - cumulative[i]) / len } else { 0.0 };
                    let dir = if len > 0.0 { [(b[0] - a[0]) / len, (b[1] - a[1]) / len] } else { [0.0, 0.0] };
                    let v = if moving { *speed } else { 0.0 };
                    (
                        Vec3::new(a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u, self.height),
                        Vec3::new(dir[0] * v, dir[1] * v, 0.0),
                    )
                }
            }
        };
        SourceState { position, activity: self.activity, velocity }
    }
}

/// World-to-agent frames for a scenario: identity unless heterogeneous
/// frames are enabled, in which case each agent gets a random yaw and
/// horizontal offset.
pub fn agent_frames(cfg: &ScenarioConfig, seed: u64) -> Vec<FrameTransform> {
    let mut rng = rng_stream(seed, STREAM_FRAMES);
    (0..cfg.n_agents)
        .map(|_| {
            if cfg.heterogeneous_frames {
                let yaw = rng.random_range(-PI..PI);
                let offset = Vec3::new(
                    rng.random_range(-FRAME_OFFSET_RANGE..FRAME_OFFSET_RANGE),
                    rng.random_range(-FRAME_OFFSET_RANGE..FRAME_OFFSET_RANGE),
                    0.0,
                );
                FrameTransform::from_yaw(yaw, offset)
            } else {
                FrameTransform::identity()
            }
        })
        .collect()
}

/// `|θ* − |θ_i||` of one agent about its own world-frame hypothesis,
/// using the true positions of every other agent.
pub fn spacing_error(agent: usize, positions: &[Vec3], hypothesis: &Vec3, flock: &FlockConfig) -> Option<f64> {
    let own = polar_about(hypothesis, &positions[agent]);
    let others: Vec<_> = positions.iter().enumerate().filter(|(j, _)| *j != agent).map(|(_, p)| polar_about(hypothesis, p)).collect();
    nearest_neighbor_angle(&own, &others).map(|theta| (flock.uniform_spacing() - theta.abs()).abs())
}

pub fn agent_params(cfg: &ScenarioConfig) -> AgentParams {
    AgentParams { fusion: cfg.fusion, nlls: cfg.nlls, flock: cfg.flock_config(), vehicle: cfg.vehicle, search: cfg.search }
}

/// Runs one scenario to termination.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<RunLog, ConfigError> {
    run_world(cfg, seed, None)
}

/// Runs a scenario whose detections are taken from `events` (world frame,
/// sorted by time) instead of being sampled. Each event is delivered on the
/// step that contains its timestamp.
pub fn replay_scenario(cfg: &ScenarioConfig, seed: u64, events: &[MeasurementEvent]) -> Result<RunLog, ConfigError> {
    run_world(cfg, seed, Some(events))
}

/// The world-frame cone events of a run log, in log order.
pub fn logged_events(log: &RunLog) -> Vec<MeasurementEvent> {
    log.iter()
        .filter_map(|r| match (r.body.clone(), r.agent_id) {
            (RecordBody::Cone { cone }, Some(id)) => Some(MeasurementEvent { time: r.t, cone, agent_id: id, frame_id: id }),
            _ => None,
        })
        .collect()
}

fn run_world(cfg: &ScenarioConfig, seed: u64, script: Option<&[MeasurementEvent]>) -> Result<RunLog, ConfigError> {
    cfg.validate()?;
    let mut source_rng = rng_stream(seed, STREAM_SOURCE);
    let mut detect_rng = rng_stream(seed, STREAM_DETECTION);
    let source = SourceTrajectory::new(cfg, &mut source_rng);
    let frames = agent_frames(cfg, seed);
    let params = agent_params(cfg);
    let volume = cfg.area.bounds();
    let paths = generate_search_paths(&cfg.area.rect(), cfg.n_agents, cfg.search.lane_spacing, cfg.flock.height);
    let mut agents: Vec<Agent> =
        paths.iter().zip(&frames).enumerate().map(|(i, (path, frame))| Agent::new(i as u32, *frame, path[0], path, &volume)).collect();

    let dt = cfg.sim.dt;
    let plan_ticks = cfg.sim.planning_ticks();
    let mut bus: MessageBus<Message> = MessageBus::new(cfg.sim.bus_latency);
    let mut log = RunLog::new();
    log.push(0.0, None, RecordBody::Header { schema_version: RUNLOG_SCHEMA_VERSION, seed, n_agents: cfg.n_agents as u32, dt });

    let mut tracking_since: Option<f64> = None;
    let mut last_detection: Option<f64> = None;
    let mut times = Vec::new();
    let mut events: Vec<MeasurementEvent> = Vec::new();
    let mut cursor = 0;

    for tick in 0u64.. {
        let t = tick as f64 * dt;
        let src = source.state_at(t);
        let log_now = tick % cfg.sim.log_every as u64 == 0;
        if log_now {
            log.push(t, None, RecordBody::Source { position: src.position, velocity: src.velocity });
        }

        if let Some(since) = tracking_since {
            if t - since >= cfg.termination.tracking_limit - TIME_SLACK {
                log.push(t, None, RecordBody::Termination { reason: TerminationReason::TrackingComplete });
                break;
            }
            let quiet_from = last_detection.map_or(since, |d| d.max(since));
            if t - quiet_from > cfg.termination.loss_timeout {
                log.push(t, None, RecordBody::TargetLost);
                if !cfg.termination.re_search {
                    log.push(t, None, RecordBody::Termination { reason: TerminationReason::TargetLost });
                    break;
                }
                for agent in &mut agents {
                    if agent.stage == Stage::Tracking {
                        log.push(t, Some(agent.id), RecordBody::StageChange { from: Stage::Tracking, to: Stage::SearchingInit });
                    }
                    agent.reset_to_search();
                }
                tracking_since = None;
            }
        }
        if t >= cfg.termination.max_time - TIME_SLACK {
            log.push(t, None, RecordBody::Termination { reason: TerminationReason::TimeLimit });
            break;
        }

        for envelope in bus.deliver(t) {
            let sender_frame = frames[envelope.payload.frame_id() as usize].inverse();
            for agent in agents.iter_mut().filter(|a| a.id != envelope.sender) {
                let to_own = agent.frame.compose(&sender_frame);
                match &envelope.payload {
                    Message::Cone(e) => agent.receive_cone(transform_measurement(e, &to_own, agent.id)),
                    Message::Position { position, velocity, .. } => agent.receive_position(
                        envelope.sender,
                        NeighborReport { position: to_own.apply_point(position), velocity: to_own.apply_vector(velocity), sent_at: envelope.sent_at },
                    ),
                }
            }
        }

        let plan_now = tick % plan_ticks as u64 == 0;
        if plan_now {
            for agent in &agents {
                bus.publish(agent.id, t, Message::Position { position: agent.own_position(), velocity: agent.own_velocity(), frame_id: agent.id });
            }
        }

        let poses: Vec<Pose> = agents.iter().map(|a| Pose::from_heading(a.vehicle.position, a.vehicle.heading)).collect();
        if log_now {
            let positions: Vec<Vec3> = poses.iter().map(|p| p.position).collect();
            for (i, agent) in agents.iter().enumerate() {
                let spacing = match (agent.stage, agent.hypothesis_world()) {
                    (Stage::Tracking, Some(h)) => spacing_error(i, &positions, &h.x, &params.flock),
                    _ => None,
                };
                let v = &agent.vehicle;
                log.push(
                    t,
                    Some(agent.id),
                    RecordBody::AgentState {
                        position: v.position,
                        velocity: v.velocity,
                        acceleration: v.acceleration,
                        heading: v.heading,
                        stage: agent.stage,
                        spacing_error: spacing,
                    },
                );
            }
        }

        let ctx = StepContext { t, dt, plan_now };
        for agent in &mut agents {
            let before = agent.stage;
            agent.step(&ctx, &params, &mut log);
            if before == Stage::SearchingInit && agent.stage == Stage::Tracking && tracking_since.is_none() {
                tracking_since = Some(t);
            }
        }

        events.clear();
        match script {
            None => {
                for (i, pose) in poses.iter().enumerate() {
                    times.clear();
                    let rate = expected_event_rate(&src, pose, &cfg.detector);
                    sample_step(rate, t, dt, &mut detect_rng, &mut times);
                    for &te in &times {
                        let cone = synthesize_cone(&src.position, pose, &cfg.detector, &mut detect_rng);
                        events.push(MeasurementEvent { time: te, cone, agent_id: i as u32, frame_id: i as u32 });
                    }
                }
                events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent_id.cmp(&b.agent_id)));
            }
            Some(script) => {
                while let Some(e) = script.get(cursor).filter(|e| e.time < t + dt) {
                    if (e.agent_id as usize) < agents.len() {
                        events.push(MeasurementEvent { frame_id: e.agent_id, ..*e });
                    }
                    cursor += 1;
                }
            }
        }
        for world_event in &events {
            log.push(world_event.time, Some(world_event.agent_id), RecordBody::Cone { cone: world_event.cone });
            let agent = &mut agents[world_event.agent_id as usize];
            let own = transform_measurement(world_event, &agent.frame, agent.id);
            agent.receive_cone(own);
            bus.publish(agent.id, own.time, Message::Cone(own));
            last_detection = Some(world_event.time);
        }
    }
    Ok(log)
}
