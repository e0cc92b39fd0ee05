//! Regime-switching rough differential equations.

mod bound;
mod fields;
mod integral;
mod jumps;
mod solver;

pub use bound::{bound_rhs, candidate_constants, lipschitz_bound, LipschitzBoundReport};
pub use fields::{
    ConstantField, DriftDiffusion, FieldPreset, LinearField, TrigField, VectorField, VectorFieldFamily,
};
pub use integral::switching_rough_integral;
pub use jumps::{
    check_jump_tail, jump_tail_envelope, simulate_ctmc, simulate_ctmc_with, Generator, JumpSource, JumpTailReport,
    JumpTrajectory,
};
pub use solver::{refine_at_jumps, solve_rde, solve_switching_rde, SwitchingSolution, BLOW_UP_LIMIT};
