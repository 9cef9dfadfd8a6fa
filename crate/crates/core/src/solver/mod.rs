//! The flexible Arnoldi loop producing FGMRES and FFOM iterates.

mod fgmres;
mod inner;
mod precond;

pub use fgmres::{ffom_step, fgmres, FgmresOutput, FlexibleArnoldiState, SolveTrace, StepRecord, Termination};
pub use inner::{inner_gmres, InnerGmresResult};
pub use precond::{
    make_fixed_preconditioner, FixedPreconditioner, FnPreconditioner, InnerGmresPreconditioner, PrecondOutput,
    Preconditioner,
};

use crate::linalg::LinalgError;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("preconditioner returned non-finite values at step {step}")]
    NonFinite { step: usize },
    #[error("preconditioner reported ‖r^P‖ = {reported:e} at step {step}, measured {measured:e}")]
    ResidualMismatch { step: usize, reported: f64, measured: f64 },
    #[error("preconditioner failed at step {step}: {message}")]
    Preconditioner { step: usize, message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Maximum number of outer iterations `m`.
    pub max_outer: usize,
    /// Stop once `‖r_j‖ <= tol * ‖r_0‖`.
    pub tol: f64,
    /// `h_{j+1,j} <= breakdown_tol * ‖r_0‖` ends the Arnoldi process.
    pub breakdown_tol: f64,
    /// Recompute `A z_j` and check any residual the preconditioner reports.
    pub verify_preconditioner: bool,
    pub compute_ffom: bool,
    /// Stop when two consecutive steps make no progress.
    pub stop_on_stagnation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer: 50,
            tol: 1e-10,
            breakdown_tol: 1e-12,
            verify_preconditioner: true,
            compute_ffom: true,
            stop_on_stagnation: true,
        }
    }
}

impl SolverConfig {
    pub fn with_max_outer(mut self, m: usize) -> Self {
        self.max_outer = m;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        self.tol = tol;
        self
    }

    pub fn with_stop_on_stagnation(mut self, stop: bool) -> Self {
        self.stop_on_stagnation = stop;
        self
    }

    pub fn with_verify(mut self, verify: bool) -> Self {
        self.verify_preconditioner = verify;
        self
    }
}
