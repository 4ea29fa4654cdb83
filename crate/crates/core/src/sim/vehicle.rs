//! Point-mass vehicle and the saturating trajectory tracker.

use serde::{Deserialize, Serialize};

use crate::flocking::TrajectoryPoint;
use crate::geom::{angle_diff, wrap_angle, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub heading: f64,
    /// Acceleration applied during the last step.
    pub acceleration: Vec3,
}

impl VehicleState {
    pub fn at_rest(position: Vec3, heading: f64) -> Self {
        VehicleState { position, velocity: Vec3::zeros(), heading, acceleration: Vec3::zeros() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub yaw_rate_max: f64,
    /// Position gain of the tracker.
    pub kp: f64,
    /// Velocity gain of the tracker.
    pub kv: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        VehicleLimits { v_max: 6.0, a_max: 3.0, yaw_rate_max: 1.5, kp: 1.5, kv: 2.5 }
    }
}

/// Reference position, velocity, acceleration and heading at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub heading: f64,
}

impl Reference {
    pub fn hold(position: Vec3, heading: f64) -> Self {
        Reference { position, velocity: Vec3::zeros(), acceleration: Vec3::zeros(), heading }
    }
}

fn segment_velocity(traj: &[TrajectoryPoint], i: usize) -> Vec3 {
    let dt = traj[i + 1].time_offset - traj[i].time_offset;
    (traj[i + 1].position - traj[i].position) / dt
}

/// Velocity at a trajectory point: mean of the adjacent segment velocities.
fn point_velocity(traj: &[TrajectoryPoint], j: usize) -> Vec3 {
    let last = traj.len() - 1;
    match j {
        0 => segment_velocity(traj, 0),
        j if j == last => segment_velocity(traj, last - 1),
        j => (segment_velocity(traj, j - 1) + segment_velocity(traj, j)) * 0.5,
    }
}

/// Samples a trajectory at time offset `tau`: piecewise-linear position,
/// velocity interpolated between point velocities and the matching
/// piecewise-constant acceleration. Past the last point the reference
/// holds still.
pub fn sample_trajectory(traj: &[TrajectoryPoint], tau: f64) -> Reference {
    let last = traj.len() - 1;
    if last == 0 || tau >= traj[last].time_offset {
        return Reference::hold(traj[last].position, traj[last].heading);
    }
    if tau <= traj[0].time_offset {
        return Reference { position: traj[0].position, velocity: point_velocity(traj, 0), acceleration: Vec3::zeros(), heading: traj[0].heading };
    }
    let i = traj.partition_point(|p| p.time_offset <= tau) - 1;
    let span = traj[i + 1].time_offset - traj[i].time_offset;
    let s = (tau - traj[i].time_offset) / span;
    let (v0, v1) = (point_velocity(traj, i), point_velocity(traj, i + 1));
    Reference {
        position: traj[i].position.lerp(&traj[i + 1].position, s),
        velocity: v0.lerp(&v1, s),
        acceleration: (v1 - v0) / span,
        heading: wrap_angle(traj[i].heading + s * angle_diff(traj[i].heading, traj[i + 1].heading)),
    }
}

fn clamp_norm(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// One step of the double-integrator tracker toward `reference`, the
/// desired state at the current time.
///
/// The commanded acceleration is the reference acceleration plus PD
/// feedback, clipped to `a_max`; the resulting velocity is projected onto
/// the `v_max` ball, so the applied acceleration never exceeds `a_max`.
pub fn track_reference(state: &VehicleState, reference: &Reference, limits: &VehicleLimits, dt: f64) -> VehicleState {
    let command = reference.acceleration
        + (reference.position - state.position) * limits.kp
        + (reference.velocity - state.velocity) * limits.kv;
    let command = clamp_norm(command, limits.a_max);
    let velocity = clamp_norm(state.velocity + command * dt, limits.v_max);
    let max_turn = limits.yaw_rate_max * dt;
    let turn = angle_diff(state.heading, reference.heading).clamp(-max_turn, max_turn);
    VehicleState {
        position: state.position + (state.velocity + velocity) * (0.5 * dt),
        velocity,
        heading: wrap_angle(state.heading + turn),
        acceleration: (velocity - state.velocity) / dt,
    }
}

/// Tracker step against a trajectory whose time offsets are measured from
/// the moment it was generated; `elapsed` is the time since then.
pub fn tracker_step(state: &VehicleState, trajectory: &[TrajectoryPoint], elapsed: f64, limits: &VehicleLimits, dt: f64) -> VehicleState {
    assert!(!trajectory.is_empty() && dt > 0.0);
    track_reference(state, &sample_trajectory(trajectory, elapsed), limits, dt)
}
