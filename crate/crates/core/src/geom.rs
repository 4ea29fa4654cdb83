//! Compton scattering kinematics and cone geometry.
//!
//! A single scattering event in the detector fixes the angle between the
//! incoming photon and the scattered photon. Everything a single event says
//! about the source is therefore a one-sided cone: apex at the scatter point,
//! axis along the scattered photon track reversed, half-angle equal to the
//! scattering angle.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use core::f64::consts::{PI, TAU};

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Cartesian vector in meters.
pub type Vec3 = Vector3<f64>;
/// Unit direction vector.
pub type UnitVec3 = Unit<Vector3<f64>>;

/// Electron rest energy m_e c^2 in keV (CODATA 2018).
pub const ELECTRON_REST_ENERGY_KEV: f64 = 510.998_950;

/// Tolerance on the arccos argument before an energy pair is rejected.
const ACOS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("energy must be strictly positive and finite, got {0} keV")]
    NonPositiveEnergy(f64),
    #[error("energy pair is kinematically inconsistent (cos theta = {cos_theta})")]
    InconsistentEnergies { cos_theta: f64 },
    #[error("electron and photon interaction points coincide")]
    CoincidentInteractions,
    #[error("cone half-angle {0} rad outside (0, pi)")]
    InvalidHalfAngle(f64),
}

/// Deposited or photon energy in keV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Energy(f64);

impl Energy {
    pub fn kev(value: f64) -> Result<Self, GeomError> {
        if value.is_finite() && value > 0.0 {
            Ok(Energy(value))
        } else {
            Err(GeomError::NonPositiveEnergy(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Rigid pose of a detector or vehicle body: maps body coordinates to world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Pose { position, orientation }
    }

    pub fn identity() -> Self {
        Pose { position: Vec3::zeros(), orientation: UnitQuaternion::identity() }
    }

    /// Pose of a body at `position` yawed by `heading` about world z.
    pub fn from_heading(position: Vec3, heading: f64) -> Self {
        Pose { position, orientation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), heading) }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.position + self.orientation * p
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.orientation * v
    }
}

/// One electron/photon coincidence inside a single-layer detector.
///
/// Coordinates are in the detector frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPair {
    pub electron_pos: Vec3,
    pub photon_pos: Vec3,
    pub electron_energy: Energy,
    pub photon_energy: Energy,
}

/// One-sided cone `{apex + s*d : s >= 0, angle(d, axis) = half_angle}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComptonCone {
    pub apex: Vec3,
    pub axis: UnitVec3,
    pub half_angle: f64,
}

impl ComptonCone {
    pub fn new(apex: Vec3, axis: UnitVec3, half_angle: f64) -> Result<Self, GeomError> {
        if !(half_angle > 0.0 && half_angle < PI) {
            return Err(GeomError::InvalidHalfAngle(half_angle));
        }
        Ok(ComptonCone { apex, axis, half_angle })
    }

    /// Decomposes `point - apex` into the axial coordinate, the radial
    /// distance and the radial unit direction.
    fn local_frame(&self, point: &Vec3) -> (f64, f64, Vec3) {
        let rel = point - self.apex;
        let axial = rel.dot(&self.axis);
        let radial_vec = rel - self.axis.into_inner() * axial;
        let radial = radial_vec.norm();
        // Relative threshold: below it the azimuth carries no information.
        if radial > 1e-12 * (1.0 + rel.norm()) {
            (axial, radial, radial_vec / radial)
        } else {
            (axial, radial, perpendicular_to(&self.axis))
        }
    }

    /// Unit generator of the cone surface in the half-plane containing `point`.
    pub fn generator_towards(&self, point: &Vec3) -> Vec3 {
        let (_, _, radial_dir) = self.local_frame(point);
        self.axis.into_inner() * self.half_angle.cos() + radial_dir * self.half_angle.sin()
    }

    /// Outward unit surface normal in the half-plane containing `point`.
    pub fn surface_normal_towards(&self, point: &Vec3) -> Vec3 {
        let (_, _, radial_dir) = self.local_frame(point);
        radial_dir * self.half_angle.cos() - self.axis.into_inner() * self.half_angle.sin()
    }
}

/// Deterministic unit vector perpendicular to `axis`: `axis x e_x`, or
/// `axis x e_y` when the axis is nearly parallel to e_x.
pub fn perpendicular_to(axis: &UnitVec3) -> Vec3 {
    let c = axis.cross(&Vector3::x());
    if c.norm() > 1e-6 {
        c.normalize()
    } else {
        axis.cross(&Vector3::y()).normalize()
    }
}

/// Scattering angle from the deposited electron energy and the scattered
/// photon energy. The incident energy is their sum.
pub fn scattering_angle(electron: Energy, photon: Energy) -> Result<f64, GeomError> {
    let incident = electron.0 + photon.0;
    let cos_theta = 1.0 + ELECTRON_REST_ENERGY_KEV * (1.0 / incident - 1.0 / photon.0);
    if !(-1.0 - ACOS_SLACK..=1.0 + ACOS_SLACK).contains(&cos_theta) {
        return Err(GeomError::InconsistentEnergies { cos_theta });
    }
    Ok(cos_theta.clamp(-1.0, 1.0).acos())
}

/// Scattered photon energy for an incident energy and scattering angle.
pub fn photon_energy_after_scatter(incident: Energy, theta: f64) -> Energy {
    let e = incident.0;
    Energy(e / (1.0 + (e / ELECTRON_REST_ENERGY_KEV) * (1.0 - theta.cos())))
}

/// Reconstructs the world-frame cone of one scatter pair.
pub fn cone_from_scatter(pair: &ScatterPair, detector_pose: &Pose) -> Result<ComptonCone, GeomError> {
    let track = pair.electron_pos - pair.photon_pos;
    if track.norm() <= f64::EPSILON * (1.0 + pair.electron_pos.norm()) {
        return Err(GeomError::CoincidentInteractions);
    }
    let theta = scattering_angle(pair.electron_energy, pair.photon_energy)?;
    let axis = Unit::new_normalize(detector_pose.transform_vector(&track));
    ComptonCone::new(detector_pose.transform_point(&pair.electron_pos), axis, theta)
}

/// Nearest point on the cone surface (apex included) to `point`.
///
/// With `v` the direction from the apex to the point and `alpha` its angle
/// from the axis, the surface generator `w` in the same half-plane is `v`
/// rotated by `-(alpha - theta)`. The foot of the perpendicular from the
/// point onto `w` lies at `|point - apex| * cos(alpha - theta)` along `w`;
/// when that is not positive the apex is the nearest surface point.
pub fn project_point_onto_cone(cone: &ComptonCone, point: &Vec3) -> Vec3 {
    let (axial, radial, radial_dir) = cone.local_frame(point);
    let (sin_t, cos_t) = cone.half_angle.sin_cos();
    let along = axial * cos_t + radial * sin_t;
    if along <= 0.0 {
        return cone.apex;
    }
    let generator = cone.axis.into_inner() * cos_t + radial_dir * sin_t;
    cone.apex + generator * along
}

/// Euclidean distance from `point` to the one-sided cone surface.
pub fn point_cone_surface_distance(cone: &ComptonCone, point: &Vec3) -> f64 {
    let (axial, radial, _) = cone.local_frame(point);
    let (sin_t, cos_t) = cone.half_angle.sin_cos();
    if axial * cos_t + radial * sin_t <= 0.0 {
        (point - cone.apex).norm()
    } else {
        (radial * cos_t - axial * sin_t).abs()
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a - TAU * ((a + PI) / TAU).floor();
    if r <= -PI {
        r += TAU;
    }
    if r > PI {
        r -= TAU;
    }
    r
}

/// Signed difference `b - a` wrapped to `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(b - a)
}

/// Angle between two vectors in `[0, pi]`.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    // atan2 form stays accurate near 0 and pi.
    a.cross(b).norm().atan2(a.dot(b))
}
