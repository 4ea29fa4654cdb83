//! Decentralized motion planning for both mission stages.

mod encircle;
mod search;

pub use encircle::{
    bias_angle, generate_encirclement_trajectory, nearest_neighbor_angle, polar_about, FlockConfig, PolarPos,
    TrajectoryPoint,
};
pub use search::{generate_search_paths, search_heading, Rect};
