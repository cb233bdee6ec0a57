//! Shared fixtures for the benchmarks.

use combwm_core::build::{build_st_paths, EdgeOrder};
use combwm_core::dp::WeightVector;
use combwm_core::graph::{build_grid, GridSpec};
use combwm_core::Zdd;

/// Path ZDD between opposite corners of a `rows x cols` grid.
pub fn grid_paths(rows: usize, cols: usize) -> Zdd {
    let g = build_grid(GridSpec::new(rows, cols).expect("grid at least 2x2"));
    build_st_paths(&g, g.start.unwrap(), g.goal.unwrap(), &EdgeOrder::default())
        .expect("grid corners are valid endpoints")
        .zdd
}

/// Deterministic, mildly non-uniform log-weights.
pub fn skewed_weights(arms: usize) -> WeightVector {
    let lw = (0..arms).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
    WeightVector::from_log(lw).expect("finite weights")
}
