//! Cone fusion: a track-by-detection linear Kalman filter whose measurement
//! is the orthogonal projection of the current hypothesis onto each new cone.
//!
//! The projection only says something about the source along the projection
//! direction, so the measurement covariance is a canonical
//! `diag(rho, rho * f, rho * f)` rotated to put its first axis on that
//! direction, with `f` orders of magnitude above one.

mod nlls;

pub use nlls::{init_hypothesis_nlls, nlls_objective, Bounds, NllsConfig};

use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{project_point_onto_cone, ComptonCone, Vec3};

/// Estimated source position with its covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub x: Vec3,
    pub p: Matrix3<f64>,
}

impl Hypothesis {
    pub fn new(x: Vec3, variance: f64) -> Self {
        Hypothesis { x, p: Matrix3::identity() * variance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Measurement variance along the projection axis, m^2.
    pub rho: f64,
    /// Ratio of the off-axis measurement variance to `rho`.
    pub off_axis_factor: f64,
    /// Process noise added per correction, m^2.
    pub q: f64,
    /// Initial covariance diagonal, m^2.
    pub p0: f64,
    /// Number of cones gathered before batch initialization.
    pub m: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { rho: 4.0, off_axis_factor: 1e4, q: 0.1, p0: 400.0, m: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("batch initialization needs at least {need} cones, got {have}")]
    NotEnoughCones { have: usize, need: usize },
    #[error("no initialization start converged")]
    InitializationFailed,
}

/// Prediction with identity dynamics: the state is untouched and the
/// covariance grows by `q` on every axis.
pub fn lkf_predict(h: &Hypothesis, cfg: &FusionConfig) -> Hypothesis {
    Hypothesis { x: h.x, p: h.p + Matrix3::identity() * cfg.q }
}

/// Minimal rotation taking the world x-axis onto `axis`. The antipodal
/// case is a half turn about z.
pub fn rotation_from_x(axis: &Unit<Vector3<f64>>) -> Rotation3<f64> {
    match UnitQuaternion::rotation_between(&Vector3::x(), axis) {
        Some(q) => q.to_rotation_matrix(),
        None => Rotation3::from_axis_angle(&Vector3::z_axis(), core::f64::consts::PI),
    }
}

/// Measurement covariance with variance `rho` along `axis` and
/// `rho * off_axis_factor` across it.
pub fn rotated_covariance(axis: &Unit<Vector3<f64>>, cfg: &FusionConfig) -> Matrix3<f64> {
    let q = rotation_from_x(axis);
    let wide = cfg.rho * cfg.off_axis_factor;
    let canonical = Matrix3::from_diagonal(&Vector3::new(cfg.rho, wide, wide));
    let r = q.matrix() * canonical * q.matrix().transpose();
    (r + r.transpose()) * 0.5
}

/// Pseudo-measurement of the source position derived from one cone, with
/// the unit axis its covariance is aligned to.
pub fn measurement_from_cone(h: &Hypothesis, cone: &ComptonCone, cfg: &FusionConfig) -> (Vec3, Matrix3<f64>, Unit<Vector3<f64>>) {
    let z = project_point_onto_cone(cone, &h.x);
    let step = z - h.x;
    let scale = 1.0 + (h.x - cone.apex).norm();
    let axis = if step.norm() > 1e-12 * scale {
        Unit::new_normalize(step)
    } else {
        // Already on the surface: the cone constrains along its normal.
        Unit::new_normalize(cone.surface_normal_towards(&h.x))
    };
    (z, rotated_covariance(&axis, cfg), axis)
}

/// Kalman update with an identity measurement matrix.
pub fn lkf_correct(h: &Hypothesis, z: &Vec3, r: &Matrix3<f64>) -> Result<Hypothesis, FusionError> {
    let s = h.p + r;
    let s_inv = s.try_inverse().ok_or(FusionError::SingularInnovation)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(FusionError::SingularInnovation);
    }
    let gain = h.p * s_inv;
    let x = h.x + gain * (z - h.x);
    let p = (Matrix3::identity() - gain) * h.p;
    Ok(Hypothesis { x, p: (p + p.transpose()) * 0.5 })
}

/// Predict, project onto the cone, correct.
pub fn fuse_cone(h: &Hypothesis, cone: &ComptonCone, cfg: &FusionConfig) -> Result<Hypothesis, FusionError> {
    let predicted = lkf_predict(h, cfg);
    let (z, r, _) = measurement_from_cone(&predicted, cone, cfg);
    lkf_correct(&predicted, &z, &r)
}
