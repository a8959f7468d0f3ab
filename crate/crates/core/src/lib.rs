//! Hurricane restoration simulator for coupled power and road networks.
//!
//! Wind damages power components through fragility curves, storm runoff
//! floods road links that then drain, and crews restore the grid under one
//! of three priority strategies. Flooded roads delay both crews and fuel
//! deliveries; the grid in turn powers the traffic lights.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod fragility;
pub mod hazard;
pub mod interdependency;
pub mod metrics;
pub mod montecarlo;
pub mod network;
pub mod output;
pub mod restoration;
pub mod testbed;

pub use engine::{run_replication, ReplicationConfig, ReplicationResult, Simulation};
pub use error::{Result, SimError};
pub use restoration::Strategy;
