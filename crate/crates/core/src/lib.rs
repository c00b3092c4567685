//! Real-time UAV base-station placement.
//!
//! The crate is split the same way the problem is:
//!
//! - [`scenario`]: area geometry, user sampling and slot advance.
//! - [`channel`]: air-to-ground path gain, LOS probability and average received power.
//! - [`network`]: SINR, association and the per-slot throughput objective.
//! - [`env`]: the per-slot placement search wrapped as an episodic MDP.
//! - [`nn`]: a small dense-network core (forward, backprop, Adam, checkpoints).
//! - [`ddpg`]: the actor-critic agent, its training loop and the decision process.
//! - [`baselines`]: fixed placement, simulated annealing, smoothed gradient ascent and a grid oracle.
//! - [`harness`]: run configuration, experiment orchestration and CSV output.

pub mod baselines;
pub mod channel;
pub mod ddpg;
pub mod env;
pub mod error;
pub mod harness;
pub mod network;
pub mod nn;
pub mod scenario;

pub use error::{Error, Result};
