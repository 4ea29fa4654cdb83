//! Closed-loop encirclement about a scripted hypothesis, without any
//! estimation. Used to check that the formation settles after steps of
//! the hypothesis.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;

use super::agent::{Agent, AgentParams, NeighborReport, StepContext};
use super::bus::MessageBus;
use super::config::SearchConfig;
use super::log::RunLog;
use super::scenario::{rng_stream, spacing_error};
use super::vehicle::VehicleLimits;
use crate::flocking::FlockConfig;
use crate::fusion::{FusionConfig, NllsConfig};
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationConfig {
    pub n_agents: usize,
    pub flock: FlockConfig,
    pub vehicle: VehicleLimits,
    /// Hypothesis at t = 0.
    pub hypothesis: Vec3,
    /// Added to the hypothesis every `step_period` seconds.
    pub step: Vec3,
    pub step_period: f64,
    pub duration: f64,
    pub dt: f64,
    pub planning_period: f64,
    pub bus_latency: f64,
    /// Half-width of the square around the hypothesis in which agents start.
    pub start_spread: f64,
}

impl Default for FormationConfig {
    fn default() -> Self {
        FormationConfig {
            n_agents: 5,
            flock: FlockConfig::default(),
            vehicle: VehicleLimits::default(),
            hypothesis: Vec3::new(50.0, 50.0, 0.0),
            step: Vec3::new(10.0, 0.0, 0.0),
            step_period: 60.0,
            duration: 300.0,
            dt: 0.05,
            planning_period: 0.5,
            bus_latency: 0.1,
            start_spread: 20.0,
        }
    }
}

/// Per-tick samples of every agent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormationTrace {
    pub times: Vec<f64>,
    /// `speeds[k][i]`: speed of agent `i` at `times[k]`.
    pub speeds: Vec<Vec<f64>>,
    /// `spacing[k][i]`: `|θ* − |θ_i||` of agent `i` at `times[k]`.
    pub spacing: Vec<Vec<f64>>,
    pub positions: Vec<Vec<Vec3>>,
    pub hypotheses: Vec<Vec3>,
}

impl FormationTrace {
    /// Checks every segment between steps: during the final `window`
    /// seconds before the next step all speeds are within `speed_tol`
    /// (relative) of `v` and all spacing errors are below `spacing_tol`.
    /// Returns the failing segment indices.
    pub fn unsettled_segments(&self, cfg: &FormationConfig, window: f64, speed_tol: f64, spacing_tol: f64) -> Vec<usize> {
        let segments = (cfg.duration / cfg.step_period).round() as usize;
        (0..segments)
            .filter(|&s| {
                let end = (s + 1) as f64 * cfg.step_period;
                let ok = self.times.iter().enumerate().filter(|(_, &t)| t >= end - window && t < end).all(|(k, _)| {
                    self.speeds[k].iter().all(|sp| (sp - cfg.flock.v).abs() <= speed_tol * cfg.flock.v)
                        && self.spacing[k].iter().all(|e| *e < spacing_tol)
                });
                !ok
            })
            .collect()
    }
}

/// Runs the encirclement with agents starting at random positions drawn
/// from `seed`.
pub fn run_formation(cfg: &FormationConfig, seed: u64) -> FormationTrace {
    let mut rng = rng_stream(seed, 0);
    let flock = FlockConfig { n_agents: cfg.n_agents, ..cfg.flock };
    let params = AgentParams {
        fusion: FusionConfig::default(),
        nlls: NllsConfig::default(),
        flock,
        vehicle: cfg.vehicle,
        search: SearchConfig::default(),
    };
    let mut agents: Vec<Agent> = (0..cfg.n_agents)
        .map(|i| {
            let start = Vec3::new(
                cfg.hypothesis.x + rng.random_range(-cfg.start_spread..cfg.start_spread),
                cfg.hypothesis.y + rng.random_range(-cfg.start_spread..cfg.start_spread),
                flock.height,
            );
            Agent::tracking(i as u32, start, cfg.hypothesis, 1.0)
        })
        .collect();
    let mut bus: MessageBus<(Vec3, Vec3)> = MessageBus::new(cfg.bus_latency);
    let mut log = RunLog::new();
    let plan_ticks = ((cfg.planning_period / cfg.dt).round() as u64).max(1);
    let ticks = (cfg.duration / cfg.dt).round() as u64;
    let mut trace = FormationTrace::default();

    for tick in 0..ticks {
        let t = tick as f64 * cfg.dt;
        let steps = (t / cfg.step_period + 1e-9).floor();
        let hypothesis = cfg.hypothesis + cfg.step * steps;
        for agent in &mut agents {
            agent.set_hypothesis_position(hypothesis);
        }
        for envelope in bus.deliver(t) {
            for agent in agents.iter_mut().filter(|a| a.id != envelope.sender) {
                let (position, velocity) = envelope.payload;
                agent.receive_position(envelope.sender, NeighborReport { position, velocity, sent_at: envelope.sent_at });
            }
        }
        let plan_now = tick % plan_ticks == 0;
        if plan_now {
            for agent in &agents {
                bus.publish(agent.id, t, (agent.own_position(), agent.own_velocity()));
            }
        }

        let positions: Vec<Vec3> = agents.iter().map(|a| a.vehicle.position).collect();
        trace.times.push(t);
        trace.speeds.push(agents.iter().map(|a| a.vehicle.velocity.norm()).collect());
        trace.spacing.push((0..agents.len()).map(|i| spacing_error(i, &positions, &hypothesis, &flock).unwrap_or(0.0)).collect());
        trace.positions.push(positions);
        trace.hypotheses.push(hypothesis);

        let ctx = StepContext { t, dt: cfg.dt, plan_now };
        for agent in &mut agents {
            agent.step(&ctx, &params, &mut log);
        }
    }
    trace
}
