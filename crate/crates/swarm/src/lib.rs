//! File formats, batch execution and plot-data export around
//! [`compton_swarm_core`].

pub mod montecarlo;
pub mod output;
pub mod plotdata;
pub mod runlog_file;
pub mod scenario_file;

pub use compton_swarm_core as core;
