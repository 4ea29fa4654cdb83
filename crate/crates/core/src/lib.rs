#![cfg_attr(not(feature = "std"), no_std)]
extern crate alloc;

pub mod detector;
pub mod flocking;
pub mod fusion;
pub mod geom;
pub mod metrics;
pub mod sim;
