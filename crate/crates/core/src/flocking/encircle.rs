//! Encirclement: every vehicle plans an arc on a circle of radius `r` about
//! the shared hypothesis, offset by a bias that pushes it away from its
//! nearest neighbor until the central angles are uniform.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geom::{angle_diff, wrap_angle, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlockConfig {
    /// Circle radius, m.
    pub r: f64,
    /// Tangential speed, m/s.
    pub v: f64,
    /// Trajectory steps; a trajectory has `k + 1` points.
    pub k: usize,
    /// Sampling period of the trajectory, s.
    pub dt: f64,
    pub beta_max: f64,
    pub deadband: f64,
    /// Shared flight height, m.
    pub height: f64,
    #[serde(skip)]
    pub n_agents: usize,
}

impl Default for FlockConfig {
    fn default() -> Self {
        FlockConfig { r: 12.0, v: 3.0, k: 30, dt: 0.2, beta_max: 0.3, deadband: 0.02, height: 4.0, n_agents: 1 }
    }
}

impl FlockConfig {
    /// Target central angle between neighbors.
    pub fn uniform_spacing(&self) -> f64 {
        TAU / self.n_agents.max(1) as f64
    }

    /// Central angle swept per trajectory step.
    pub fn angular_step(&self) -> f64 {
        self.v / self.r * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPos {
    pub radius: f64,
    pub phi: f64,
}

/// Horizontal polar coordinates of `p` about `center`. A point above the
/// center gets azimuth 0.
pub fn polar_about(center: &Vec3, p: &Vec3) -> PolarPos {
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    let radius = dx.hypot(dy);
    let phi = if radius > 0.0 { dy.atan2(dx) } else { 0.0 };
    PolarPos { radius, phi }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub position: Vec3,
    pub heading: f64,
    pub time_offset: f64,
}

/// Signed central angle to the nearest other vehicle; ties go to the lowest
/// index. `None` without neighbors.
pub fn nearest_neighbor_angle(own: &PolarPos, others: &[PolarPos]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for other in others {
        let d = angle_diff(own.phi, other.phi);
        if best.is_none_or(|b| d.abs() < b.abs()) {
            best = Some(d);
        }
    }
    best
}

/// Azimuthal bias pointing away from the nearest neighbor, scaled by the
/// spacing deficit and zero inside the deadband.
pub fn bias_angle(theta_i: f64, cfg: &FlockConfig) -> f64 {
    let target = cfg.uniform_spacing();
    let deficit = target - theta_i.abs();
    if deficit.abs() <= cfg.deadband {
        return 0.0;
    }
    -theta_i.signum() * cfg.beta_max * (deficit / target).clamp(0.0, 1.0)
}

/// `k + 1` counterclockwise samples on the circle about `hypothesis`,
/// starting at the vehicle's azimuth plus `beta`. Headings face the center.
pub fn generate_encirclement_trajectory(self_pos: &Vec3, hypothesis: &Vec3, beta: f64, cfg: &FlockConfig) -> Vec<TrajectoryPoint> {
    let phi = polar_about(hypothesis, self_pos).phi;
    let step = cfg.angular_step();
    (0..=cfg.k)
        .map(|k| {
            let angle = phi + beta + k as f64 * step;
            let (s, c) = angle.sin_cos();
            TrajectoryPoint {
                position: Vec3::new(hypothesis.x + cfg.r * c, hypothesis.y + cfg.r * s, cfg.height),
                heading: wrap_angle(angle + PI),
                time_offset: k as f64 * cfg.dt,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_4;

    fn polar(phi: f64) -> PolarPos {
        PolarPos { radius: 10.0, phi }
    }

    #[test]
    fn nearest_neighbor_examples() {
        assert_relative_eq!(nearest_neighbor_angle(&polar(0.0), &[polar(FRAC_PI_4), polar(PI)]).unwrap(), FRAC_PI_4);
        // Tie: lowest index wins.
        assert_relative_eq!(nearest_neighbor_angle(&polar(0.0), &[polar(-FRAC_PI_4), polar(FRAC_PI_4)]).unwrap(), -FRAC_PI_4);
        assert_relative_eq!(nearest_neighbor_angle(&polar(0.0), &[polar(FRAC_PI_4), polar(-FRAC_PI_4)]).unwrap(), FRAC_PI_4);
        let far = PolarPos { radius: 100.0, phi: 0.3 };
        let near = PolarPos { radius: 1.0, phi: 0.3 };
        assert_eq!(nearest_neighbor_angle(&polar(0.0), &[far]), nearest_neighbor_angle(&polar(0.0), &[near]));
        assert_eq!(nearest_neighbor_angle(&polar(0.0), &[]), None);
    }

    #[test]
    fn bias_examples() {
        let two = FlockConfig { n_agents: 2, ..Default::default() };
        assert_eq!(bias_angle(PI, &two), 0.0);
        assert_eq!(bias_angle(-PI, &two), 0.0);
        assert_relative_eq!(bias_angle(FRAC_PI_4, &two), -0.225, epsilon = 1e-12);
        assert_relative_eq!(bias_angle(-FRAC_PI_4, &two), 0.225, epsilon = 1e-12);
        // Inside the deadband.
        assert_eq!(bias_angle(PI - 0.01, &two), 0.0);
    }

    #[test]
    fn trajectory_geometry() {
        let cfg = FlockConfig::default();
        let hyp = Vec3::new(5.0, -3.0, 0.0);
        let me = Vec3::new(5.0, 10.0, 4.0);
        let traj = generate_encirclement_trajectory(&me, &hyp, 0.0, &cfg);
        assert_eq!(traj.len(), cfg.k + 1);
        assert_relative_eq!(traj[0].position, Vec3::new(5.0, 9.0, 4.0), epsilon = 1e-12);
        for (k, pt) in traj.iter().enumerate() {
            assert_relative_eq!((pt.position.xy() - hyp.xy()).norm(), cfg.r, epsilon = 1e-12);
            assert_relative_eq!(pt.time_offset, k as f64 * cfg.dt, epsilon = 1e-12);
            let to_center = hyp.xy() - pt.position.xy();
            assert_relative_eq!(pt.heading, to_center.y.atan2(to_center.x), epsilon = 1e-12);
        }
        for w in traj.windows(2) {
            // 2 r sin(0.025)
            assert_relative_eq!((w[1].position - w[0].position).norm(), 0.599_937_5, epsilon = 1e-6);
            let a0 = polar_about(&hyp, &w[0].position).phi;
            let a1 = polar_about(&hyp, &w[1].position).phi;
            assert_relative_eq!(angle_diff(a0, a1), 0.05, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_bias_offsets_start() {
        let cfg = FlockConfig::default();
        let traj = generate_encirclement_trajectory(&Vec3::new(20.0, 0.0, 4.0), &Vec3::zeros(), -0.2, &cfg);
        assert_relative_eq!(polar_about(&Vec3::zeros(), &traj[0].position).phi, -0.2, epsilon = 1e-12);
    }

    #[test]
    fn trajectory_over_center_defaults_to_zero_azimuth() {
        let cfg = FlockConfig::default();
        let traj = generate_encirclement_trajectory(&Vec3::new(1.0, 2.0, 4.0), &Vec3::new(1.0, 2.0, 0.0), 0.0, &cfg);
        assert_relative_eq!(traj[0].position, Vec3::new(13.0, 2.0, 4.0), epsilon = 1e-12);
    }
}
