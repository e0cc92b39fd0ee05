//! Rough paths with regime switching: level-2 lifts, p-variation, greedy
//! partitions, Gaussian drivers, switching rough differential equations and
//! Wong–Zakai convergence experiments.

pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod greedy;
pub mod lift;
pub mod path;
pub mod switching;
pub mod variation;

pub use error::{Error, Result};
pub use lift::{lift_piecewise_linear, Flavor, Level2RoughPath};
pub use path::{IntervalIdx, SamplePath, Tensor2};
