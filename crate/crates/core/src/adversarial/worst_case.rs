//! The per-step worst-case inner residual.
//!
//! Given `v_k` and an orthonormal basis of `span(W_{k-1})`, `W = A Z`, pick
//! `w_k = A z_k` with `‖v_k - w_k‖ = mu` and `v_k - w_k` orthogonal to
//! `span(W_k)`. FGMRES then loses exactly the factor `omega_k` at step `k`.

use super::AdversarialError;
use crate::linalg::{axpy, c, c64, dot, mgs_orthogonalize, norm, split_against_span, unit, LuFactor, Vector};
use crate::solver::{FlexibleArnoldiState, PrecondOutput, Preconditioner, SolverError};

/// Candidates whose component outside the excluded span is below this are
/// skipped when picking a fresh direction.
pub const FRESH_DIRECTION_TOL: f64 = 1e-8;

/// Running record of `span(W_{k-1})` and, when the right-hand side is
/// known, of the FGMRES residual `r_{k-1}`.
#[derive(Debug, Clone)]
pub struct WorstCaseState {
    n: usize,
    w_basis: Vec<Vector>,
    residual: Option<Vector>,
}

impl WorstCaseState {
    pub fn new(n: usize) -> Self {
        Self { n, w_basis: Vec::new(), residual: None }
    }

    /// Also tracks the FGMRES residual for right-hand side `b` (zero
    /// initial guess).
    pub fn with_rhs(b: &[c64]) -> Self {
        Self { n: b.len(), w_basis: Vec::new(), residual: Some(b.to_vec()) }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Orthonormal basis of `span(W_{k-1})`.
    pub fn w_basis(&self) -> &[Vector] {
        &self.w_basis
    }

    /// `r_{k-1}^FG`, the component of `b` orthogonal to `span(W_{k-1})`.
    pub fn residual(&self) -> Option<&[c64]> {
        self.residual.as_deref()
    }

    pub fn fg_norm(&self) -> Option<f64> {
        self.residual.as_ref().map(|r| norm(r))
    }

    /// Appends `w_k` to the span. Returns `false` if it added no new
    /// direction.
    pub fn record(&mut self, w: &[c64]) -> bool {
        let o = mgs_orthogonalize(w, &self.w_basis);
        if o.norm <= 1e-14 * norm(w).max(f64::MIN_POSITIVE) {
            return false;
        }
        let q: Vector = o.residual.iter().map(|x| x / o.norm).collect();
        if let Some(r) = self.residual.as_mut() {
            let h = dot(&q, r);
            axpy(-h, &q, r);
        }
        self.w_basis.push(q);
        true
    }
}

/// One constructed step.
#[derive(Debug, Clone)]
pub struct WorstCaseStep {
    /// `w_k = p_k + y_k`, the prescribed value of `A z_k`.
    pub w: Vector,
    pub p: Vector,
    pub u: Vector,
    pub y: Vector,
    pub alpha: f64,
    pub beta_coef: f64,
    /// Scalar `c` with `r_{k-1}^FF = c v_k`, when the residual is tracked.
    pub ffom_coef: Option<c64>,
    /// Whether the step is of the sharp kind (`false` for a stagnation
    /// step past the feasible range).
    pub sharp: bool,
}

impl WorstCaseStep {
    pub fn u_norm(&self) -> f64 {
        norm(&self.u)
    }
}

/// First canonical vector with a nontrivial component outside `exclude`
/// (orthonormal), orthogonalized and normalized.
fn fresh_direction(n: usize, exclude: &[Vector]) -> Option<Vector> {
    (0..n).find_map(|i| {
        let o = mgs_orthogonalize(&unit(n, i), exclude);
        (o.norm >= FRESH_DIRECTION_TOL).then(|| o.residual.iter().map(|x| x / o.norm).collect())
    })
}

fn ffom_coef(state: &WorstCaseState, u: &[c64]) -> Option<c64> {
    let r = state.residual()?;
    let uu = dot(u, u).re;
    (uu > 0.0).then(|| dot(u, r) / uu)
}

/// The sharp step: `alpha = (‖u‖^2 - mu^2)/‖u‖`,
/// `beta = (mu/‖u‖) sqrt(‖u‖^2 - mu^2)`, `w = p + alpha e_1 + beta e_2`.
///
/// Fails with `Infeasible` when `mu > ‖u_k‖`.
pub fn worst_case_step(state: &WorstCaseState, v: &[c64], mu: f64) -> Result<WorstCaseStep, AdversarialError> {
    if v.len() != state.n {
        return Err(AdversarialError::DimensionMismatch { expected: state.n, found: v.len() });
    }
    let (p, u) = split_against_span(v, &state.w_basis);
    let un = norm(&u);
    // omega_k <= 1 up to rounding
    if mu > un * (1.0 + 1e-14) {
        return Err(AdversarialError::Infeasible { mu, u_norm: un });
    }
    let gap = (un * un - mu * mu).max(0.0);
    let (alpha, beta_coef) = if un > 0.0 { (gap / un, mu / un * gap.sqrt()) } else { (0.0, 0.0) };
    let mut y = vec![c(0.0); state.n];
    if alpha != 0.0 {
        axpy(c(alpha / un), &u, &mut y);
    }
    if beta_coef != 0.0 {
        let mut exclude = state.w_basis.clone();
        exclude.push(u.iter().map(|x| x / un).collect());
        let e2 = fresh_direction(state.n, &exclude)
            .ok_or(AdversarialError::DimensionTooSmall { needed: exclude.len() + 1, available: state.n })?;
        axpy(c(beta_coef), &e2, &mut y);
    }
    let mut w = p.clone();
    axpy(c(1.0), &y, &mut w);
    let ffom_coef = ffom_coef(state, &u);
    Ok(WorstCaseStep { w, p, u, y, alpha, beta_coef, ffom_coef, sharp: true })
}

/// Continuation past the feasible range (`mu > ‖u_k‖`): `w = t p + y` with
/// `y` orthogonal to `span(W_{k-1})`, `u_k` and the current residual, so
/// the FGMRES residual does not move, while `‖v - w‖ = mu` and
/// `(v - w) ⊥ w` still hold. `1 - t = (mu^2 - ‖u‖^2)/‖p‖^2`,
/// `‖y‖^2 = t (1 - t) ‖p‖^2`.
pub fn stagnation_step(state: &WorstCaseState, v: &[c64], mu: f64) -> Result<WorstCaseStep, AdversarialError> {
    if v.len() != state.n {
        return Err(AdversarialError::DimensionMismatch { expected: state.n, found: v.len() });
    }
    if !(mu < 1.0) {
        return Err(AdversarialError::InvalidMu(mu));
    }
    let (p, u) = split_against_span(v, &state.w_basis);
    let (un, pn) = (norm(&u), norm(&p));
    if pn == 0.0 || mu < un {
        return Err(AdversarialError::InvalidParameter(format!(
            "stagnation step needs ‖u‖ <= mu < 1, got ‖u‖ = {un}, mu = {mu}"
        )));
    }
    let one_minus_t = ((mu * mu - un * un) / (pn * pn)).clamp(0.0, 1.0);
    let t = 1.0 - one_minus_t;
    let y_norm = (t * one_minus_t).sqrt() * pn;

    let mut exclude = state.w_basis.clone();
    for extra in [Some(u.as_slice()), state.residual()].into_iter().flatten() {
        let o = mgs_orthogonalize(extra, &exclude);
        if o.norm > FRESH_DIRECTION_TOL * norm(extra).max(f64::MIN_POSITIVE) && o.norm > 0.0 {
            exclude.push(o.residual.iter().map(|x| x / o.norm).collect());
        }
    }
    let e2 = fresh_direction(state.n, &exclude)
        .ok_or(AdversarialError::DimensionTooSmall { needed: exclude.len() + 1, available: state.n })?;
    let y: Vector = e2.iter().map(|x| x * y_norm).collect();
    let mut w: Vector = p.iter().map(|x| x * t).collect();
    axpy(c(1.0), &y, &mut w);
    let ffom_coef = ffom_coef(state, &u);
    Ok(WorstCaseStep { w, p, u, y, alpha: t, beta_coef: y_norm, ffom_coef, sharp: false })
}

/// Worst-case preconditioner for an explicit nonsingular matrix: at step
/// `k` it prescribes `w_k` from [`worst_case_step`] and returns
/// `z_k = A^{-1} w_k`.
#[derive(Debug, Clone)]
pub struct WorstCasePreconditioner {
    lu: LuFactor,
    mu: f64,
    state: WorstCaseState,
}

pub fn make_worst_case_preconditioner(
    a: &crate::linalg::DenseMatrix,
    mu: f64,
) -> Result<WorstCasePreconditioner, AdversarialError> {
    if !(0.0..=0.5).contains(&mu) {
        return Err(AdversarialError::InvalidMu(mu));
    }
    let lu = LuFactor::new(a)?;
    Ok(WorstCasePreconditioner { state: WorstCaseState::new(lu.dim()), lu, mu })
}

impl WorstCasePreconditioner {
    pub fn state(&self) -> &WorstCaseState {
        &self.state
    }
}

impl Preconditioner for WorstCasePreconditioner {
    fn apply(&mut self, step: usize, v: &[c64], _outer: &FlexibleArnoldiState) -> Result<PrecondOutput, SolverError> {
        let s = worst_case_step(&self.state, v, self.mu)
            .map_err(|e| SolverError::Preconditioner { step, message: e.to_string() })?;
        let z = self.lu.solve(&s.w)?;
        let reported = norm(&crate::linalg::sub(v, &s.w));
        self.state.record(&s.w);
        Ok(PrecondOutput { z, az: Some(s.w), residual_norm: Some(reported), inner_iterations: 0 })
    }
}
