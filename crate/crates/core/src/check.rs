//! Brute-force equivalence suite on a small grid instance.

use rand::Rng;

use crate::build::{
    brute_force_st_paths, brute_force_steiner_trees, build_st_paths, reduce_from_family, EdgeOrder,
    MAX_STEINER_EDGES,
};
use crate::dp::{self, WeightVector};
use crate::error::{Error, Result};
use crate::experiment::stream_rng;
use crate::graph::{build_grid, GridSpec};
use crate::linalg::{pinv_symmetric, DEFAULT_REL_TOL};

/// Largest column count accepted (3 rows times 10 columns stays within the
/// path oracle's node cap).
pub const MAX_COLS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Compares the ZDD pipeline with exhaustive enumeration on the `3 x cols`
/// grid.
pub fn oracle_suite(cols: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    if !(2..=MAX_COLS).contains(&cols) {
        return Err(Error::Config(format!("size must lie in 2..={MAX_COLS}, got {cols}")));
    }
    let spec = GridSpec::new(3, cols)?;
    let g = build_grid(spec);
    let (s, t) = (spec.start(), spec.goal());
    let mut out = Vec::new();

    let ez = build_st_paths(&g, s, t, &EdgeOrder::default())?;
    let oracle = brute_force_st_paths(&g, s, t)?;
    let family = ez.edge_family(oracle.len() + 1)?;
    out.push(CheckOutcome::new(
        "st-paths",
        family == oracle && ez.zdd.validate().is_valid(),
        format!("zdd {} vs brute force {}", ez.zdd.count(), oracle.len()),
    ));

    if g.n_edges() <= MAX_STEINER_EDGES {
        let trees = brute_force_steiner_trees(&g, &spec.corners())?;
        let z = reduce_from_family(&trees, g.n_edges())?;
        let back = z.enumerate(trees.len() + 1)?;
        out.push(CheckOutcome::new(
            "steiner-trees",
            back == trees && z.validate().is_valid(),
            format!("{} trees, {} vertices", trees.len(), z.nodes().len()),
        ));
    }

    let mut rng = stream_rng(seed, 0);
    let d = ez.zdd.arms();
    let lw: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = WeightVector::from_log(lw)?;
    let p = dp::cpm_for(&ez.zdd, &w)?;
    let members = ez.zdd.enumerate(oracle.len() + 1)?;
    let (log_z, reference) = dp::enumerated_cpm(&members, &w)?;
    let err = p.sub(&reference).max_abs();
    let z_err = (dp::partition(&ez.zdd, &w)? - log_z).abs();
    out.push(CheckOutcome::new(
        "co-occurrence",
        err <= 1e-10 && z_err <= 1e-10,
        format!("max entry error {err:.3e}, log-partition error {z_err:.3e}"),
    ));

    let pinv = pinv_symmetric(&p, DEFAULT_REL_TOL)?;
    let e1 = p.matmul(&pinv).matmul(&p).sub(&p).frobenius();
    let e2 = pinv.matmul(&p).matmul(&pinv).sub(&pinv).frobenius();
    out.push(CheckOutcome::new(
        "pseudo-inverse",
        e1 <= 1e-8 && e2 <= 1e-8,
        format!("Penrose residuals {e1:.3e}, {e2:.3e}"),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_small_grids() {
        for cols in [2, 3, 4] {
            let r = oracle_suite(cols, 1).unwrap();
            assert!(r.iter().all(|c| c.passed), "{r:?}");
            assert_eq!(r.len(), 4);
        }
    }

    #[test]
    fn size_is_checked() {
        assert!(oracle_suite(1, 1).is_err());
        assert!(oracle_suite(11, 1).is_err());
    }
}
