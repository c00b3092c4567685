//! Reference solvers for one slot's placement problem.

pub mod anneal;
pub mod fixed;
pub mod grid;
pub mod smooth;

pub use anneal::{simulated_annealing, AnnealConfig, AnnealResult};
pub use fixed::{fixed_placement, Layout};
pub use grid::{grid_oracle, grid_points, GRID_EVAL_LIMIT};
pub use smooth::{relaxed_objective, smooth_opt, SmoothOptConfig};

use crate::scenario::Point;

/// A placement and its true throughput in bps/Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub placement: Vec<Point>,
    pub throughput: f64,
}
