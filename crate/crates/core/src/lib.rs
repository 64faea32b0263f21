//! Equity-aware dynamic route guidance for mixed fleets of private,
//! autonomous and ride-hailing vehicles.
//!
//! * [`network`]: road graph, network files, BPR congestion and generators.
//! * [`paths`]: shortest and `L`-shortest loopless routes.
//! * [`flow`]: monitored and estimated edge flows, route rollouts.
//! * [`equity`]: trip-quality index (DTX) and Gini-based trip equity (DTE).
//! * [`planner`]: the equity planner and the shortest-route baselines.
//! * [`sim`]: seeded scenarios and the discrete-event fleet simulator.
//! * [`config`], [`report`]: scenario files and comparison outputs.

pub mod config;
pub mod equity;
pub mod error;
pub mod flow;
pub mod network;
pub mod paths;
pub mod planner;
pub mod report;
pub mod sim;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
