//! Synthetic Compton camera: detection timing and cone generation.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use nalgebra::{Unit, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::geom::{perpendicular_to, ComptonCone, Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceState {
    pub position: Vec3,
    /// Becquerel.
    pub activity: f64,
    pub velocity: Vec3,
}

/// Single-layer detector parameters. The mount axis is the body +x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Sensitive area in m^2.
    pub sensitive_area: f64,
    pub intrinsic_efficiency: f64,
    /// Half-angle of the field of view about the mount axis, radians.
    pub fov_half_angle: f64,
    /// Standard deviation of the half-angle error, radians.
    pub angular_noise_sigma: f64,
    pub min_theta: f64,
    pub max_theta: f64,
    /// Upper bound on the event rate, events/s.
    pub max_rate: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            sensitive_area: 0.014 * 0.014,
            intrinsic_efficiency: 0.01,
            fov_half_angle: PI,
            angular_noise_sigma: 0.05,
            min_theta: 10f64.to_radians(),
            max_theta: 80f64.to_radians(),
            max_rate: 50.0,
        }
    }
}

impl DetectorConfig {
    /// Forward-hemisphere camera preset.
    pub fn forward_hemisphere() -> Self {
        DetectorConfig { fov_half_angle: PI / 2.0, ..Default::default() }
    }
}

/// Mean Compton-event rate seen by a detector from a point source:
/// isotropic emission, inverse-square falloff, cosine-projected area.
pub fn expected_event_rate(source: &SourceState, detector_pose: &Pose, cfg: &DetectorConfig) -> f64 {
    let offset = source.position - detector_pose.position;
    let dist_sq = offset.norm_squared();
    if dist_sq == 0.0 {
        return cfg.max_rate;
    }
    let mount_axis = detector_pose.transform_vector(&Vector3::x());
    let cos_psi = offset.dot(&mount_axis) / dist_sq.sqrt();
    if cos_psi.clamp(-1.0, 1.0).acos() > cfg.fov_half_angle {
        return 0.0;
    }
    let projected_area = cfg.sensitive_area * cos_psi.max(0.0);
    let rate = source.activity * cfg.intrinsic_efficiency * projected_area / (4.0 * PI * dist_sq);
    rate.min(cfg.max_rate)
}

/// Event times in `[t, t + dt)` for a constant mean rate over the step.
pub fn sample_step<R: Rng + ?Sized>(rate: f64, t: f64, dt: f64, rng: &mut R, out: &mut Vec<f64>) {
    let mean = rate * dt;
    if mean.is_nan() || mean <= 0.0 {
        return;
    }
    let count = Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0);
    let start = out.len();
    for _ in 0..count {
        out.push(t + rng.random::<f64>() * dt);
    }
    out[start..].sort_by(f64::total_cmp);
}

/// Inhomogeneous Poisson sampling over `[0, horizon)` with the rate held
/// piecewise constant on steps of length `dt`.
pub fn sample_detections<R, F>(mut rate_at: F, dt: f64, horizon: f64, rng: &mut R) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: FnMut(f64) -> f64,
{
    assert!(dt > 0.0, "sampling step must be positive");
    let mut times = Vec::new();
    let steps = (horizon / dt).ceil() as usize;
    for k in 0..steps {
        let t = k as f64 * dt;
        let step = dt.min(horizon - t);
        sample_step(rate_at(t), t, step, rng, &mut times);
    }
    times
}

/// Draws a cone whose noiseless surface passes through the true source
/// direction. The apex sits at the detector position.
pub fn synthesize_cone<R: Rng + ?Sized>(
    true_source: &Vec3,
    detector_pose: &Pose,
    cfg: &DetectorConfig,
    rng: &mut R,
) -> ComptonCone {
    let to_source = Unit::new_normalize(true_source - detector_pose.position);
    let e1 = perpendicular_to(&to_source);
    let e2 = to_source.cross(&e1);

    let theta = rng.random_range(cfg.min_theta..=cfg.max_theta);
    let azimuth = rng.random_range(0.0..TAU);
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_a, cos_a) = azimuth.sin_cos();
    let axis = Unit::new_normalize(to_source.into_inner() * cos_t + (e1 * cos_a + e2 * sin_a) * sin_t);

    let mut half_angle = theta;
    if cfg.angular_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.angular_noise_sigma).expect("finite sigma");
        half_angle += noise.sample(rng);
    }
    let half_angle = half_angle.clamp(1e-6, PI - 1e-6);

    ComptonCone { apex: detector_pose.position, axis, half_angle }
}

/// A reconstructed cone as exchanged between agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub time: f64,
    pub cone: ComptonCone,
    pub agent_id: u32,
    pub frame_id: u32,
}
