//! Batch initialization: the point minimizing the sum of squared distances
//! to a set of cone surfaces, found by Levenberg-Marquardt from a grid of
//! starts.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::FusionError;
use crate::geom::{ComptonCone, Vec3};

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Bounds { min, max }
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NllsConfig {
    /// Starts per horizontal axis.
    pub grid: usize,
    /// Height of the start grid.
    pub start_height: f64,
    pub max_iterations: usize,
    /// Convergence threshold on `|J^T r| / max(1, |r|)`.
    pub gradient_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for NllsConfig {
    fn default() -> Self {
        NllsConfig { grid: 5, start_height: 4.0, max_iterations: 200, gradient_tolerance: 1e-6, initial_damping: 1e-3 }
    }
}

/// Signed residual and its gradient for one cone. The magnitude of the
/// residual is the point-to-surface distance.
fn residual(cone: &ComptonCone, p: &Vec3) -> (f64, Vec3) {
    let rel = p - cone.apex;
    let axis = cone.axis.into_inner();
    let axial = rel.dot(&axis);
    let radial_vec = rel - axis * axial;
    let radial = radial_vec.norm();
    let radial_dir = if radial > 1e-12 * (1.0 + rel.norm()) {
        radial_vec / radial
    } else {
        crate::geom::perpendicular_to(&cone.axis)
    };
    let (sin_t, cos_t) = cone.half_angle.sin_cos();
    if axial * cos_t + radial * sin_t <= 0.0 {
        let dist = rel.norm();
        let grad = if dist > 0.0 { rel / dist } else { Vec3::zeros() };
        (dist, grad)
    } else {
        (radial * cos_t - axial * sin_t, radial_dir * cos_t - axis * sin_t)
    }
}

/// Sum of squared point-to-surface distances.
pub fn nlls_objective(cones: &[ComptonCone], p: &Vec3) -> f64 {
    cones.iter().map(|c| crate::geom::point_cone_surface_distance(c, p).powi(2)).sum()
}

struct LocalFit {
    point: Vec3,
    cost: f64,
    converged: bool,
}

fn normal_equations(cones: &[ComptonCone], p: &Vec3) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let mut cost = 0.0;
    let mut g = Vector3::zeros();
    let mut h = Matrix3::zeros();
    for cone in cones {
        let (r, j) = residual(cone, p);
        cost += r * r;
        g += j * r;
        h += j * j.transpose();
    }
    (cost, g, h)
}

fn levenberg_marquardt(cones: &[ComptonCone], start: Vec3, cfg: &NllsConfig) -> LocalFit {
    let mut p = start;
    let mut damping = cfg.initial_damping;
    let (mut cost, mut g, mut h) = normal_equations(cones, &p);
    for _ in 0..cfg.max_iterations {
        if g.norm() <= cfg.gradient_tolerance * cost.sqrt().max(1.0) {
            return LocalFit { point: p, cost, converged: true };
        }
        let mut accepted = false;
        while damping < 1e12 {
            let mut lhs = h;
            for i in 0..3 {
                lhs[(i, i)] += damping * (h[(i, i)] + 1e-9);
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&-g)) else {
                damping *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_cost = nlls_objective(cones, &trial);
            if trial_cost < cost {
                p = trial;
                damping = (damping / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            damping *= 10.0;
        }
        if !accepted {
            break;
        }
        (cost, g, h) = normal_equations(cones, &p);
    }
    let converged = g.norm() <= cfg.gradient_tolerance * cost.sqrt().max(1.0);
    LocalFit { point: p, cost, converged }
}

/// Best local minimum of [`nlls_objective`] over a `grid x grid` set of
/// starts spread across `bounds` at `start_height`, clamped to `bounds`.
///
/// Ties between starts go to the lowest start index.
pub fn init_hypothesis_nlls(cones: &[ComptonCone], min_cones: usize, bounds: &Bounds, cfg: &NllsConfig) -> Result<Vec3, FusionError> {
    let need = min_cones.max(3);
    if cones.len() < need {
        return Err(FusionError::NotEnoughCones { have: cones.len(), need });
    }
    let grid = cfg.grid.max(1);
    let span = bounds.max - bounds.min;
    let mut best: Option<(f64, Vec3)> = None;
    for i in 0..grid {
        for j in 0..grid {
            let start = Vec3::new(
                bounds.min.x + span.x * (i as f64 + 0.5) / grid as f64,
                bounds.min.y + span.y * (j as f64 + 0.5) / grid as f64,
                cfg.start_height,
            );
            let fit = levenberg_marquardt(cones, start, cfg);
            if !fit.converged {
                continue;
            }
            let point = bounds.clamp(&fit.point);
            let cost = if point == fit.point { fit.cost } else { nlls_objective(cones, &point) };
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, point));
            }
        }
    }
    best.map(|(_, p)| p).ok_or(FusionError::InitializationFailed)
}
