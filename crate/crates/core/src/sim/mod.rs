//! Discrete-time world: vehicles, agents, message passing and scenarios.

pub mod agent;
pub mod bus;
pub mod config;
pub mod formation;
pub mod frames;
pub mod log;
pub mod scenario;
pub mod vehicle;

pub use agent::{Agent, AgentParams, Message, NeighborReport, StepContext};
pub use bus::{Envelope, MessageBus};
pub use config::{
    AreaConfig, ConfigError, ScenarioConfig, SearchConfig, SimConfig, SourceConfig, SourceMotion, TerminationConfig, CONFIG_SCHEMA_VERSION,
};
pub use formation::{run_formation, FormationConfig, FormationTrace};
pub use frames::{transform_measurement, FrameTransform};
pub use log::{Record, RecordBody, RunLog, Stage, TerminationReason, RUNLOG_SCHEMA_VERSION};
pub use scenario::{agent_frames, logged_events, replay_scenario, run_scenario, spacing_error, SourceTrajectory};
pub use vehicle::{sample_trajectory, track_reference, tracker_step, Reference, VehicleLimits, VehicleState};
