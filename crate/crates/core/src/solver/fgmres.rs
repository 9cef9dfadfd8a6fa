use super::{Preconditioner, SolverConfig, SolverError};
use crate::linalg::{
    axpy, c, c64, is_finite, mgs_orthogonalize, norm, sub, GivensLsq, HessenbergFactor, LinalgError, LinearOperator,
    Vector,
};

/// `V_{j+1}`, `Z_j` and the Hessenberg factor after `j` outer steps.
#[derive(Debug, Clone)]
pub struct FlexibleArnoldiState {
    x0: Vector,
    v: Vec<Vector>,
    z: Vec<Vector>,
    lsq: GivensLsq,
}

impl FlexibleArnoldiState {
    fn new(x0: Vector, beta: f64) -> Self {
        Self { x0, v: Vec::new(), z: Vec::new(), lsq: GivensLsq::new(beta) }
    }

    /// Number of completed outer steps `j`.
    pub fn steps(&self) -> usize {
        self.z.len()
    }

    pub fn beta(&self) -> f64 {
        self.lsq.hessenberg().beta()
    }

    pub fn x0(&self) -> &[c64] {
        &self.x0
    }

    /// Orthonormal Arnoldi vectors `v_1..v_{j+1}` (only `v_1..v_j` after a
    /// breakdown).
    pub fn arnoldi_vectors(&self) -> &[Vector] {
        &self.v
    }

    pub fn search_directions(&self) -> &[Vector] {
        &self.z
    }

    pub fn hessenberg(&self) -> &HessenbergFactor {
        self.lsq.hessenberg()
    }

    fn combine(&self, y: &[c64]) -> Vector {
        let mut x = self.x0.clone();
        for (zj, &yj) in self.z.iter().zip(y) {
            axpy(yj, zj, &mut x);
        }
        x
    }

    /// The FGMRES iterate after `j <= steps()` outer steps.
    pub fn fgmres_iterate(&self, j: usize) -> Vector {
        assert!(j <= self.steps());
        let mut used = j;
        while used > 0 {
            let sol = GivensLsq::from_factor(&self.hessenberg().truncated(used)).solution();
            if !sol.singular {
                return self.combine(&sol.y);
            }
            used -= 1;
        }
        self.x0.clone()
    }

    /// The FFOM iterate after `j` steps, or `Singular` when the square
    /// Hessenberg block is not invertible.
    pub fn ffom_iterate(&self, j: usize) -> Result<Vector, LinalgError> {
        assert!(j >= 1 && j <= self.steps());
        let y = GivensLsq::from_factor(&self.hessenberg().truncated(j)).square_solution()?;
        Ok(self.combine(&y))
    }

    /// `max ‖A z_i - V_{i+1} h_i‖ / ‖A z_i‖` over the stored columns.
    pub fn arnoldi_defect<A: LinearOperator + ?Sized>(&self, a: &A) -> f64 {
        let mut worst = 0.0f64;
        for (i, zi) in self.z.iter().enumerate() {
            let az = a.apply(zi);
            let mut rebuilt = vec![c(0.0); az.len()];
            for (k, &h) in self.hessenberg().column(i).iter().enumerate() {
                if let Some(vk) = self.v.get(k) {
                    axpy(h, vk, &mut rebuilt);
                }
            }
            worst = worst.max(norm(&sub(&az, &rebuilt)) / norm(&az).max(f64::MIN_POSITIVE));
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// `h_{j+1,j}` vanished with a nonsingular Hessenberg block: the
    /// residual is zero up to rounding.
    HappyBreakdown,
    /// `h_{j+1,j}` vanished with a singular Hessenberg block; no further
    /// progress is possible.
    Breakdown,
    /// No residual reduction over two consecutive steps.
    Stagnation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `‖r_j^FG‖`
    pub fg_resnorm: f64,
    /// `‖r_j^FF‖`, `None` where FFOM is undefined (or not computed).
    pub ff_resnorm: Option<f64>,
    /// Measured `‖v_j - A z_j‖`.
    pub p_resnorm: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// `‖r_0‖`
    pub initial_resnorm: f64,
    pub steps: Vec<StepRecord>,
    pub status: Termination,
    /// First step of a two-step run without progress.
    pub stagnation_at: Option<usize>,
    /// `‖b - A x_m‖` for the returned iterate.
    pub final_true_resnorm: f64,
}

impl SolveTrace {
    /// `‖r_0‖, ‖r_1^FG‖, ..., ‖r_m^FG‖`
    pub fn fg_history(&self) -> Vec<f64> {
        std::iter::once(self.initial_resnorm).chain(self.steps.iter().map(|s| s.fg_resnorm)).collect()
    }

    pub fn relative_fg(&self) -> Vec<f64> {
        self.fg_history().iter().map(|r| r / self.initial_resnorm).collect()
    }

    pub fn p_resnorms(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.p_resnorm).collect()
    }

    pub fn final_resnorm(&self) -> f64 {
        self.steps.last().map_or(self.initial_resnorm, |s| s.fg_resnorm)
    }
}

#[derive(Debug, Clone)]
pub struct FgmresOutput {
    pub x: Vector,
    pub trace: SolveTrace,
    pub state: FlexibleArnoldiState,
}

/// Flexible GMRES with FFOM computed from the same Hessenberg factor.
///
/// `x0` defaults to zero.
pub fn fgmres<A, P>(
    a: &A,
    b: &[c64],
    x0: Option<&[c64]>,
    precond: &mut P,
    cfg: &SolverConfig,
) -> Result<FgmresOutput, SolverError>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    let n = a.dim();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { expected: n, found: b.len() });
    }
    let x0: Vector = match x0 {
        Some(x) if x.len() != n => return Err(SolverError::DimensionMismatch { expected: n, found: x.len() }),
        Some(x) => x.to_vec(),
        None => vec![c(0.0); n],
    };
    let r0 = sub(b, &a.apply(&x0));
    let beta = norm(&r0);
    let mut state = FlexibleArnoldiState::new(x0, beta);
    let mut steps = Vec::new();
    if beta == 0.0 {
        let x = state.x0.clone();
        let trace = SolveTrace {
            initial_resnorm: 0.0,
            steps,
            status: Termination::Converged,
            stagnation_at: None,
            final_true_resnorm: 0.0,
        };
        return Ok(FgmresOutput { x, trace, state });
    }
    state.v.push(r0.iter().map(|x| x / beta).collect());

    let mut status = Termination::MaxIterations;
    let mut stagnation_at = None;
    let mut flat_run = 0usize;
    let mut prev_fg = beta;
    let mut az = vec![c(0.0); n];
    for j in 1..=cfg.max_outer {
        let vj = state.v[j - 1].clone();
        let out = precond.apply(j, &vj, &state)?;
        if out.z.len() != n {
            return Err(SolverError::DimensionMismatch { expected: n, found: out.z.len() });
        }
        if !is_finite(&out.z) {
            return Err(SolverError::NonFinite { step: j });
        }
        match out.az {
            Some(w) if !cfg.verify_preconditioner && w.len() == n => az = w,
            _ => a.apply_into(&out.z, &mut az),
        }
        let p_resnorm = norm(&sub(&vj, &az));
        if cfg.verify_preconditioner {
            if let Some(reported) = out.residual_norm {
                if (reported - p_resnorm).abs() > 1e-10 * reported.max(p_resnorm) + 1e-13 {
                    return Err(SolverError::ResidualMismatch { step: j, reported, measured: p_resnorm });
                }
            }
        }

        let o = mgs_orthogonalize(&az, &state.v);
        let mut col = o.coeffs;
        col.push(c(o.norm));
        state.lsq.push_column(col);
        state.z.push(out.z);
        let fg = state.lsq.residual();
        let ff = if cfg.compute_ffom { state.lsq.square_residual().ok() } else { None };
        steps.push(StepRecord { fg_resnorm: fg, ff_resnorm: ff, p_resnorm, inner_iterations: out.inner_iterations });

        let broke_down = o.norm <= cfg.breakdown_tol * beta;
        if !broke_down {
            state.v.push(o.residual.iter().map(|x| x / o.norm).collect());
        }
        if fg <= cfg.tol * beta {
            status = Termination::Converged;
            break;
        }
        if broke_down {
            status = if state.lsq.solution().singular { Termination::Breakdown } else { Termination::HappyBreakdown };
            break;
        }
        if fg / prev_fg > 1.0 - 1e-12 {
            flat_run += 1;
            if flat_run == 2 && stagnation_at.is_none() {
                stagnation_at = Some(j - 1);
                if cfg.stop_on_stagnation {
                    status = Termination::Stagnation;
                    break;
                }
            }
        } else {
            flat_run = 0;
        }
        prev_fg = fg;
    }
    if status == Termination::MaxIterations && stagnation_at.is_some() {
        status = Termination::Stagnation;
    }

    let x = state.fgmres_iterate(state.steps());
    let final_true_resnorm = norm(&sub(b, &a.apply(&x)));
    let trace = SolveTrace { initial_resnorm: beta, steps, status, stagnation_at, final_true_resnorm };
    Ok(FgmresOutput { x, trace, state })
}

/// The FFOM iterate at the state's current step.
pub fn ffom_step(state: &FlexibleArnoldiState) -> Result<Vector, LinalgError> {
    state.ffom_iterate(state.steps())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_solve, dot, from_real, unit, DenseMatrix, IdentityOperator, LuFactor, ScaledIdentity};
    use crate::solver::{make_fixed_preconditioner, FnPreconditioner, InnerGmresPreconditioner};

    #[test]
    fn identity_with_exact_preconditioner() {
        let b = from_real(&[1.0, 2.0, 3.0]);
        let mut p = make_fixed_preconditioner(IdentityOperator(3));
        let out = fgmres(&IdentityOperator(3), &b, None, &mut p, &SolverConfig::default()).unwrap();
        assert_eq!(out.trace.status, Termination::Converged);
        assert_eq!(out.trace.steps.len(), 1);
        assert!(out.trace.steps[0].fg_resnorm < 1e-15);
        assert!(norm(&sub(&out.x, &b)) < 1e-15);
    }

    #[test]
    fn diagonal_with_exact_inner_solve() {
        let a = DenseMatrix::diag(&from_real(&[1.0, 2.0, 3.0]));
        let b = from_real(&[1.0, 1.0, 1.0]);
        let mut p = make_fixed_preconditioner(LuFactor::new(&a).unwrap());
        let out = fgmres(&a, &b, None, &mut p, &SolverConfig::default()).unwrap();
        assert_eq!(out.trace.status, Termination::Converged);
        assert_eq!(out.trace.steps.len(), 1);
        assert!(out.trace.steps[0].p_resnorm < 1e-15);
        let expected = from_real(&[1.0, 0.5, 1.0 / 3.0]);
        assert!(norm(&sub(&out.x, &expected)) < 1e-15);
    }

    #[test]
    fn scaled_identity_preconditioner_residual() {
        let mut p = make_fixed_preconditioner(ScaledIdentity { n: 4, alpha: c(0.5) });
        let out = fgmres(&IdentityOperator(4), &unit(4, 1), None, &mut p, &SolverConfig::default()).unwrap();
        assert!((out.trace.steps[0].p_resnorm - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_preconditioner_has_zero_inner_residual() {
        let a = DenseMatrix::from_real_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 2.0, 5.0]]);
        let mut p = make_fixed_preconditioner(LuFactor::new(&a).unwrap());
        let out = fgmres(&a, &from_real(&[1.0, -1.0, 2.0]), None, &mut p, &SolverConfig::default()).unwrap();
        assert!(out.trace.steps.iter().all(|s| s.p_resnorm < 1e-14));
    }

    #[test]
    fn zero_rhs_is_immediately_converged() {
        let mut p = make_fixed_preconditioner(IdentityOperator(2));
        let out = fgmres(&IdentityOperator(2), &[c(0.0), c(0.0)], None, &mut p, &SolverConfig::default()).unwrap();
        assert_eq!(out.trace.status, Termination::Converged);
        assert!(out.trace.steps.is_empty());
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let mut p = make_fixed_preconditioner(IdentityOperator(3));
        let err = fgmres(&IdentityOperator(3), &[c(1.0)], None, &mut p, &SolverConfig::default());
        assert!(matches!(err, Err(SolverError::DimensionMismatch { .. })));
        let mut bad = FnPreconditioner(|_, v: &[c64]| v.iter().map(|_| c(f64::NAN)).collect());
        let err = fgmres(&IdentityOperator(3), &unit(3, 0), None, &mut bad, &SolverConfig::default());
        assert!(matches!(err, Err(SolverError::NonFinite { step: 1 })));
    }

    #[test]
    fn lying_preconditioner_is_caught() {
        struct Liar;
        impl Preconditioner for Liar {
            fn apply(
                &mut self,
                _: usize,
                v: &[c64],
                _: &FlexibleArnoldiState,
            ) -> Result<crate::solver::PrecondOutput, SolverError> {
                Ok(crate::solver::PrecondOutput {
                    z: v.iter().map(|x| x * 0.5).collect(),
                    az: None,
                    residual_norm: Some(0.1),
                    inner_iterations: 1,
                })
            }
        }
        let err = fgmres(&IdentityOperator(3), &unit(3, 0), None, &mut Liar, &SolverConfig::default());
        assert!(matches!(err, Err(SolverError::ResidualMismatch { .. })));
        let ok =
            fgmres(&IdentityOperator(3), &unit(3, 0), None, &mut Liar, &SolverConfig::default().with_verify(false));
        assert!(ok.is_ok());
    }

    #[test]
    fn exact_stall_makes_ffom_undefined_and_is_detected() {
        // A z_2 and A z_3 are orthogonal to the residual left after step 1.
        let a = IdentityOperator(4);
        let b = unit(4, 0);
        let mut p = FnPreconditioner(|step: usize, _v: &[c64]| match step {
            1 => from_real(&[0.5, 0.5, 0.0, 0.0]),
            s => unit(4, s),
        });
        let cfg = SolverConfig::default().with_max_outer(3);
        let out = fgmres(&a, &b, None, &mut p, &cfg).unwrap();
        let fg = out.trace.fg_history();
        assert!((fg[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((fg[2] - fg[1]).abs() < 1e-15);
        assert!(out.trace.steps[0].ff_resnorm.is_some());
        assert_eq!(out.trace.steps[1].ff_resnorm, None);
        assert!(matches!(out.state.ffom_iterate(2), Err(LinalgError::Singular)));
        assert!(matches!(ffom_step(&out.state), Err(LinalgError::Singular)));
        assert_eq!(out.trace.status, Termination::Stagnation);
        assert_eq!(out.trace.stagnation_at, Some(2));
    }

    #[test]
    fn ffom_identity_exact() {
        let mut p = make_fixed_preconditioner(IdentityOperator(3));
        let b = from_real(&[1.0, 2.0, 2.0]);
        let out = fgmres(&IdentityOperator(3), &b, None, &mut p, &SolverConfig::default()).unwrap();
        let x = ffom_step(&out.state).unwrap();
        assert!(norm(&sub(&x, &b)) < 1e-15);
    }

    #[test]
    fn ffom_residual_is_parallel_to_next_arnoldi_vector() {
        let a = DenseMatrix::from_real_rows(&[
            &[3.0, 1.0, 0.0, 0.5],
            &[0.0, 2.0, 1.0, 0.0],
            &[1.0, 0.0, 4.0, 1.0],
            &[0.0, 1.0, 0.0, 1.5],
        ]);
        let b = from_real(&[1.0, 0.0, 2.0, -1.0]);
        let mut p = InnerGmresPreconditioner::fixed(&a, 1);
        let cfg = SolverConfig::default().with_max_outer(2);
        let out = fgmres(&a, &b, None, &mut p, &cfg).unwrap();
        assert_eq!(out.trace.status, Termination::MaxIterations, "{:?}", out.trace);
        assert_eq!(out.state.arnoldi_vectors().len(), 3);
        for j in 1..=out.state.steps() {
            let x = out.state.ffom_iterate(j).unwrap();
            let r = sub(&b, &a.apply(&x));
            let v = &out.state.arnoldi_vectors()[j];
            let cos = dot(v, &r).norm() / norm(&r);
            assert!((1.0 - cos).abs() < 1e-8);
            let ff = out.trace.steps[j - 1].ff_resnorm.unwrap();
            assert!((ff - norm(&r)).abs() < 1e-10 * ff);
        }
        let _ = dense_solve(&a, &b).unwrap();
    }
}
