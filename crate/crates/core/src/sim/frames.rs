//! Rigid transforms between agents' local coordinate frames.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use nalgebra::{Unit, UnitQuaternion, Vector3};

use crate::detector::MeasurementEvent;
use crate::fusion::Hypothesis;
use crate::geom::{wrap_angle, ComptonCone, Vec3};

/// `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTransform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for FrameTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl FrameTransform {
    pub fn identity() -> Self {
        FrameTransform { rotation: UnitQuaternion::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        FrameTransform { rotation, translation }
    }

    /// Gravity-aligned frame: yaw about z plus a translation.
    pub fn from_yaw(yaw: f64, translation: Vec3) -> Self {
        FrameTransform { rotation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw), translation }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Heading of a horizontal direction after rotation.
    pub fn apply_heading(&self, heading: f64) -> f64 {
        let d = self.apply_vector(&Vec3::new(heading.cos(), heading.sin(), 0.0));
        wrap_angle(d.y.atan2(d.x))
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.inverse();
        FrameTransform { rotation, translation: -(rotation * self.translation) }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &FrameTransform) -> Self {
        FrameTransform { rotation: self.rotation * first.rotation, translation: self.rotation * first.translation + self.translation }
    }

    pub fn apply_cone(&self, cone: &ComptonCone) -> ComptonCone {
        ComptonCone {
            apex: self.apply_point(&cone.apex),
            axis: Unit::new_unchecked(self.apply_vector(&cone.axis)),
            half_angle: cone.half_angle,
        }
    }

    pub fn apply_hypothesis(&self, h: &Hypothesis) -> Hypothesis {
        let r = self.rotation.to_rotation_matrix();
        let p = r.matrix() * h.p * r.matrix().transpose();
        Hypothesis { x: self.apply_point(&h.x), p: (p + p.transpose()) * 0.5 }
    }
}

/// Re-expresses a measurement in another frame. The half-angle is
/// invariant under rigid motion.
pub fn transform_measurement(event: &MeasurementEvent, transform: &FrameTransform, to_frame: u32) -> MeasurementEvent {
    MeasurementEvent { cone: transform.apply_cone(&event.cone), frame_id: to_frame, ..*event }
}
