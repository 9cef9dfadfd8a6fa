//! Worst-case inner preconditioners and the explicit systems on which the
//! FGMRES bound is attained.
//!
//! Two entry points: [`make_worst_case_preconditioner`] chooses each inner
//! residual against a given matrix, and [`build_adversarial_operator`]
//! synthesizes a matrix on which plain GMRES(k) as the inner solver makes
//! those same choices.

mod frame;
mod frame_io;
mod system;
mod worst_case;

pub use frame::{Frame, SparseColumn};
pub use frame_io::{load_system, save_system};
pub use system::{
    bound_excess, build_adversarial_operator, build_stagnating_system, generate_w_sequence, verify_sharpness,
    verify_sharpness_upto, AdversarialSystem, WSequence,
};
pub use worst_case::{
    make_worst_case_preconditioner, stagnation_step, worst_case_step, WorstCasePreconditioner, WorstCaseState,
    WorstCaseStep, FRESH_DIRECTION_TOL,
};

use crate::linalg::LinalgError;

#[derive(Debug, thiserror::Error)]
pub enum AdversarialError {
    #[error("mu = {0} is outside the admissible range")]
    InvalidMu(f64),
    #[error("mu = {mu} exceeds ‖u_k‖ = {u_norm}; no inner residual of that size is reachable")]
    Infeasible { mu: f64, u_norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need dimension at least {needed}, have {available}")]
    DimensionTooSmall { needed: usize, available: usize },
    #[error("right-hand side must be nonzero")]
    ZeroRhs,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed frame file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
