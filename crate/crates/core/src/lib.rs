//! Adversarial combinatorial bandits on ZDD-compressed decision sets.
//!
//! The decision set (for example every s-t path of a network) is stored as a
//! zero-suppressed decision diagram. Sampling, partition functions and the
//! co-occurrence matrix the exponential-weights policy needs are computed by
//! dynamic programs over the diagram, so a round costs `O(d |V|)` instead of
//! time proportional to the number of super arms.

pub mod bandit;
pub mod build;
pub mod check;
pub mod dp;
pub mod env;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod zdd;

pub use error::{Error, Result};
pub use zdd::{Family, Node, NodeId, SuperArm, ValidationReport, Zdd};
