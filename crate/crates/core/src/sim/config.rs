//! Scenario description and its validation.
//!
//! Angles are radians, distances meters, times seconds, activity becquerel.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::vehicle::VehicleLimits;
use crate::detector::DetectorConfig;
use crate::flocking::{FlockConfig, Rect};
use crate::fusion::{Bounds, FusionConfig, NllsConfig};
use crate::geom::Vec3;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub n_agents: usize,
    #[serde(default)]
    pub area: AreaConfig,
    #[serde(default)]
    pub flock: FlockConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub nlls: NllsConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub vehicle: VehicleLimits,
    #[serde(default)]
    pub search: SearchConfig,
    pub source: SourceConfig,
    #[serde(default)]
    pub termination: TerminationConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub heterogeneous_frames: bool,
}

fn default_schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AreaConfig {
    pub min: [f64; 2],
    pub max: [f64; 2],
    /// Vertical extent of the region searched for the source.
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        AreaConfig { min: [0.0, 0.0], max: [100.0, 100.0], z_min: 0.0, z_max: 8.0 }
    }
}

impl AreaConfig {
    pub fn rect(&self) -> Rect {
        Rect { min: self.min, max: self.max }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(Vec3::new(self.min[0], self.min[1], self.z_min), Vec3::new(self.max[0], self.max[1], self.z_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub speed: f64,
    pub lane_spacing: f64,
    /// Heading rotation rate while searching.
    pub yaw_rate: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { speed: 3.0, lane_spacing: 20.0, yaw_rate: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub activity: f64,
    #[serde(default)]
    pub height: f64,
    pub motion: SourceMotion,
    /// Draw the start position (static), phase (circular) or path offset
    /// (waypoints) from the scenario seed.
    #[serde(default)]
    pub randomize_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceMotion {
    Static {
        position: [f64; 2],
    },
    Circular {
        center: [f64; 2],
        radius: f64,
        speed: f64,
        #[serde(default)]
        phase: f64,
    },
    Waypoints {
        points: Vec<[f64; 2]>,
        speed: f64,
        #[serde(default)]
        closed: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerminationConfig {
    /// Swarm-wide time without any cone after which the target is lost.
    pub loss_timeout: f64,
    /// Continuous tracking time after which the run completes.
    pub tracking_limit: f64,
    /// Hard limit on simulated time.
    pub max_time: f64,
    /// Return to the search stage on target loss instead of terminating.
    pub re_search: bool,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        TerminationConfig { loss_timeout: 20.0, tracking_limit: 180.0, max_time: 1200.0, re_search: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub planning_period: f64,
    pub bus_latency: f64,
    /// Log source and vehicle states every this many ticks.
    pub log_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.05, planning_period: 0.5, bus_latency: 0.1, log_every: 1 }
    }
}

impl SimConfig {
    pub fn planning_ticks(&self) -> usize {
        ((self.planning_period / self.dt).round() as usize).max(1)
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be non-negative, got {v}")))
    }
}

fn finite(field: &str, vs: &[f64]) -> Result<(), ConfigError> {
    if vs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be finite"))
    }
}

impl ScenarioConfig {
    /// Flock parameters with the agent count filled in.
    pub fn flock_config(&self) -> FlockConfig {
        FlockConfig { n_agents: self.n_agents, ..self.flock }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {CONFIG_SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.n_agents == 0 {
            return Err(ConfigError::new("n_agents", "must be at least 1"));
        }

        let a = &self.area;
        finite("area.min", &a.min)?;
        finite("area.max", &a.max)?;
        if !(a.max[0] > a.min[0] && a.max[1] > a.min[1]) {
            return Err(ConfigError::new("area", "max must exceed min on both axes"));
        }
        finite("area.z_min", &[a.z_min])?;
        if !(a.z_max.is_finite() && a.z_max >= a.z_min) {
            return Err(ConfigError::new("area.z_max", "must be finite and >= area.z_min"));
        }

        let f = &self.flock;
        positive("flock.r", f.r)?;
        positive("flock.v", f.v)?;
        if f.k == 0 {
            return Err(ConfigError::new("flock.k", "must be at least 1"));
        }
        positive("flock.dt", f.dt)?;
        non_negative("flock.beta_max", f.beta_max)?;
        non_negative("flock.deadband", f.deadband)?;
        if f.deadband >= self.flock_config().uniform_spacing() {
            return Err(ConfigError::new("flock.deadband", "must be below the uniform spacing angle 2*pi/n_agents"));
        }
        finite("flock.height", &[f.height])?;

        let fu = &self.fusion;
        positive("fusion.rho", fu.rho)?;
        positive("fusion.off_axis_factor", fu.off_axis_factor)?;
        if fu.off_axis_factor < 1.0 {
            return Err(ConfigError::new("fusion.off_axis_factor", "must be at least 1"));
        }
        positive("fusion.q", fu.q)?;
        positive("fusion.p0", fu.p0)?;
        if fu.m < 3 {
            return Err(ConfigError::new("fusion.m", "must be at least 3"));
        }

        let n = &self.nlls;
        if n.grid == 0 {
            return Err(ConfigError::new("nlls.grid", "must be at least 1"));
        }
        if n.max_iterations == 0 {
            return Err(ConfigError::new("nlls.max_iterations", "must be at least 1"));
        }
        positive("nlls.gradient_tolerance", n.gradient_tolerance)?;
        positive("nlls.initial_damping", n.initial_damping)?;
        finite("nlls.start_height", &[n.start_height])?;

        let d = &self.detector;
        positive("detector.sensitive_area", d.sensitive_area)?;
        if !(d.intrinsic_efficiency > 0.0 && d.intrinsic_efficiency <= 1.0) {
            return Err(ConfigError::new("detector.intrinsic_efficiency", "must lie in (0, 1]"));
        }
        if !(d.fov_half_angle > 0.0 && d.fov_half_angle <= PI) {
            return Err(ConfigError::new("detector.fov_half_angle", "must lie in (0, pi]"));
        }
        non_negative("detector.angular_noise_sigma", d.angular_noise_sigma)?;
        if !(d.min_theta > 0.0 && d.min_theta < d.max_theta && d.max_theta < PI) {
            return Err(ConfigError::new("detector.min_theta", "need 0 < min_theta < max_theta < pi"));
        }
        positive("detector.max_rate", d.max_rate)?;

        let v = &self.vehicle;
        positive("vehicle.v_max", v.v_max)?;
        positive("vehicle.a_max", v.a_max)?;
        positive("vehicle.yaw_rate_max", v.yaw_rate_max)?;
        non_negative("vehicle.kp", v.kp)?;
        non_negative("vehicle.kv", v.kv)?;
        if f.v > v.v_max {
            return Err(ConfigError::new("flock.v", "must not exceed vehicle.v_max"));
        }

        let s = &self.search;
        positive("search.speed", s.speed)?;
        if s.speed > v.v_max {
            return Err(ConfigError::new("search.speed", "must not exceed vehicle.v_max"));
        }
        positive("search.lane_spacing", s.lane_spacing)?;
        non_negative("search.yaw_rate", s.yaw_rate)?;

        let src = &self.source;
        positive("source.activity", src.activity)?;
        finite("source.height", &[src.height])?;
        match &src.motion {
            SourceMotion::Static { position } => finite("source.motion.position", position)?,
            SourceMotion::Circular { center, radius, speed, phase } => {
                finite("source.motion.center", center)?;
                positive("source.motion.radius", *radius)?;
                non_negative("source.motion.speed", *speed)?;
                finite("source.motion.phase", &[*phase])?;
            }
            SourceMotion::Waypoints { points, speed, .. } => {
                if points.is_empty() {
                    return Err(ConfigError::new("source.motion.points", "must contain at least one point"));
                }
                for p in points {
                    finite("source.motion.points", p)?;
                }
                non_negative("source.motion.speed", *speed)?;
            }
        }

        let t = &self.termination;
        positive("termination.loss_timeout", t.loss_timeout)?;
        positive("termination.tracking_limit", t.tracking_limit)?;
        positive("termination.max_time", t.max_time)?;

        let sim = &self.sim;
        positive("sim.dt", sim.dt)?;
        positive("sim.planning_period", sim.planning_period)?;
        if sim.planning_period < sim.dt {
            return Err(ConfigError::new("sim.planning_period", "must be at least sim.dt"));
        }
        non_negative("sim.bus_latency", sim.bus_latency)?;
        if sim.log_every == 0 {
            return Err(ConfigError::new("sim.log_every", "must be at least 1"));
        }
        Ok(())
    }
}

impl ScenarioConfig {
    /// Static 3 GBq source at the area center with all other values at
    /// their defaults.
    pub fn with_agents(n_agents: usize) -> Self {
        ScenarioConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            n_agents,
            area: AreaConfig::default(),
            flock: FlockConfig::default(),
            fusion: FusionConfig::default(),
            nlls: NllsConfig::default(),
            detector: DetectorConfig::default(),
            vehicle: VehicleLimits::default(),
            search: SearchConfig::default(),
            source: SourceConfig { activity: 3e9, height: 0.0, motion: SourceMotion::Static { position: [50.0, 50.0] }, randomize_start: false },
            termination: TerminationConfig::default(),
            sim: SimConfig::default(),
            heterogeneous_frames: false,
        }
    }
}
