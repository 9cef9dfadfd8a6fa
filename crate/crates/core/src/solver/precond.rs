use super::{inner_gmres, FlexibleArnoldiState, SolverError};
use crate::linalg::{c64, LinearOperator, Vector};

/// What a preconditioner hands back for one outer step.
#[derive(Debug, Clone)]
pub struct PrecondOutput {
    /// `z_j`, an approximate solution of `A z = v_j`.
    pub z: Vector,
    /// `A z_j` if the preconditioner already has it.
    pub az: Option<Vector>,
    /// Self-reported `‖v_j - A z_j‖`.
    pub residual_norm: Option<f64>,
    pub inner_iterations: usize,
}

impl PrecondOutput {
    pub fn plain(z: Vector) -> Self {
        Self { z, az: None, residual_norm: None, inner_iterations: 0 }
    }
}

/// A possibly step-dependent approximate inverse `z_j = M_j^{-1} v_j`.
///
/// `step` is one-based. `state` is the outer iteration as of step
/// `step - 1`; most preconditioners ignore it.
pub trait Preconditioner {
    fn apply(&mut self, step: usize, v: &[c64], state: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError>;
}

impl<P: Preconditioner + ?Sized> Preconditioner for &mut P {
    fn apply(&mut self, step: usize, v: &[c64], state: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError> {
        (**self).apply(step, v, state)
    }
}

impl<P: Preconditioner + ?Sized> Preconditioner for Box<P> {
    fn apply(&mut self, step: usize, v: &[c64], state: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError> {
        (**self).apply(step, v, state)
    }
}

/// The same operator at every step, `z_j = M v_j`.
#[derive(Debug, Clone)]
pub struct FixedPreconditioner<M> {
    m: M,
}

pub fn make_fixed_preconditioner<M: LinearOperator>(m: M) -> FixedPreconditioner<M> {
    FixedPreconditioner { m }
}

impl<M: LinearOperator> Preconditioner for FixedPreconditioner<M> {
    fn apply(&mut self, _step: usize, v: &[c64], _state: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError> {
        if v.len() != self.m.dim() {
            return Err(SolverError::DimensionMismatch { expected: self.m.dim(), found: v.len() });
        }
        Ok(PrecondOutput::plain(self.m.apply(v)))
    }
}

/// Wraps a closure `(step, v) -> z`.
pub struct FnPreconditioner<F>(pub F);

impl<F: FnMut(usize, &[c64]) -> Vector> Preconditioner for FnPreconditioner<F> {
    fn apply(&mut self, step: usize, v: &[c64], _state: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError> {
        Ok(PrecondOutput::plain((self.0)(step, v)))
    }
}

/// Inner GMRES on the system operator, either for exactly `max_iters`
/// iterations or until the relative residual reaches `mu_target`.
#[derive(Debug, Clone)]
pub struct InnerGmresPreconditioner<A> {
    a: A,
    max_iters: usize,
    mu_target: Option<f64>,
}

impl<A: LinearOperator> InnerGmresPreconditioner<A> {
    /// GMRES(k): exactly `k` iterations.
    pub fn fixed(a: A, k: usize) -> Self {
        Self { a, max_iters: k, mu_target: None }
    }

    /// GMRES until `‖r^P‖ <= mu`, capped at `max_iters`.
    pub fn with_target(a: A, mu: f64, max_iters: usize) -> Self {
        Self { a, max_iters, mu_target: Some(mu) }
    }
}

impl<A: LinearOperator> Preconditioner for InnerGmresPreconditioner<A> {
    fn apply(&mut self, _step: usize, v: &[c64], _state: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError> {
        let r = inner_gmres(&self.a, v, self.max_iters, self.mu_target);
        Ok(PrecondOutput {
            z: r.z,
            az: Some(r.az),
            residual_norm: Some(r.residual_norm),
            inner_iterations: r.iterations,
        })
    }
}
