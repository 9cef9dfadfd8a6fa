//! Explicit systems `A` on which FGMRES with inner GMRES(k) follows the
//! worst-case inner residual sequence.
//!
//! With `X = [v_1..v_m, d_{1,1..k-1}, .., d_{m,1..k-1}]` orthonormal and
//! `Y` the image columns (`v_j -> d_{j,1}`, `d_{j,i} -> d_{j,i+1}`,
//! `d_{j,k-1} -> w_j`), the operator is `A = Y X^* + (I - X X^*)`. Inner
//! GMRES started at `v_j` then walks `v_j, d_{j,1}, .., d_{j,k-1}` and its
//! best residual after `k` steps is exactly `v_j - w_j`.

use super::frame::{Frame, SparseColumn};
use super::worst_case::{stagnation_step, worst_case_step, WorstCaseState};
use super::AdversarialError;
use crate::bounds::{fgmres_bound, fgmres_bound_capped};
use crate::linalg::{
    c, c64, mgs_orthogonalize, norm, split_against_span, unit, CsrMatrix, DenseMatrix, LinearOperator, LuFactor, Vector,
};
use crate::solver::SolveTrace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outer Arnoldi vectors, prescribed `w_k = A z_k`, and the residual norms
/// FGMRES/FFOM will report on them.
#[derive(Debug, Clone, PartialEq)]
pub struct WSequence {
    pub mu: f64,
    pub rhs: Vector,
    /// `v_1..v_{s+1}`, or `v_1..v_s` after a happy breakdown.
    pub v: Vec<Vector>,
    /// `w_1..w_s`.
    pub w: Vec<Vector>,
    /// Whether step `k` was a sharp step (as opposed to a stagnation step).
    pub sharp: Vec<bool>,
    /// `‖r_k^FG‖` for `k = 0..=s`.
    pub fg_norms: Vec<f64>,
    /// `‖r_k^FF‖` for `k = 0..=s`; `None` where FFOM is undefined.
    pub ff_norms: Vec<Option<f64>>,
    pub happy_breakdown: bool,
}

impl WSequence {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Number of outer steps `s`.
    pub fn steps(&self) -> usize {
        self.w.len()
    }

    /// Length of the leading run of sharp steps.
    pub fn sharp_steps(&self) -> usize {
        self.sharp.iter().take_while(|&&s| s).count()
    }
}

fn check_rhs(b: &[c64], n: usize) -> Result<f64, AdversarialError> {
    if b.len() != n {
        return Err(AdversarialError::DimensionMismatch { expected: n, found: b.len() });
    }
    let beta = norm(b);
    if beta == 0.0 {
        return Err(AdversarialError::ZeroRhs);
    }
    if !beta.is_finite() {
        return Err(AdversarialError::InvalidParameter("right-hand side is not finite".into()));
    }
    Ok(beta)
}

fn synthesize(b: &[c64], mu: f64, m: usize, allow_stagnation: bool) -> Result<WSequence, AdversarialError> {
    if m == 0 {
        return Err(AdversarialError::InvalidParameter("m must be at least 1".into()));
    }
    let beta = check_rhs(b, b.len())?;
    let mut state = WorstCaseState::with_rhs(b);
    let mut seq = WSequence {
        mu,
        rhs: b.to_vec(),
        v: vec![b.iter().map(|x| x / beta).collect()],
        w: Vec::new(),
        sharp: Vec::new(),
        fg_norms: vec![beta],
        ff_norms: vec![Some(beta)],
        happy_breakdown: false,
    };
    for k in 1..=m {
        let vk = &seq.v[k - 1];
        let step = match worst_case_step(&state, vk, mu) {
            Ok(s) => s,
            Err(AdversarialError::Infeasible { .. }) if allow_stagnation => stagnation_step(&state, vk, mu)?,
            Err(e) => return Err(e),
        };
        if !state.record(&step.w) {
            return Err(AdversarialError::InvalidParameter(format!("w_{k} adds no new direction")));
        }
        let fg = state.fg_norm().expect("residual is tracked");
        seq.fg_norms.push(fg);
        seq.sharp.push(step.sharp);
        let o = mgs_orthogonalize(&step.w, &seq.v);
        seq.w.push(step.w);
        if o.norm <= 1e-12 * norm(seq.w.last().unwrap()) {
            seq.happy_breakdown = true;
            seq.ff_norms.push(Some(fg));
            break;
        }
        let next: Vector = o.residual.iter().map(|x| x / o.norm).collect();
        // r_k^FG = c u_{k+1} and r_k^FF = c v_{k+1}
        let (_, u) = split_against_span(&next, state.w_basis());
        let un = norm(&u);
        seq.ff_norms.push((un > 1e-14).then(|| fg / un));
        seq.v.push(next);
    }
    Ok(seq)
}

/// The worst-case sequence for `mu <= 1/2`: every step is sharp, so
/// `fg_norms[k] / ‖b‖` equals the FGMRES bound at `k`.
pub fn generate_w_sequence(b: &[c64], mu: f64, m: usize, n: usize) -> Result<WSequence, AdversarialError> {
    if !(0.0..=0.5).contains(&mu) {
        return Err(AdversarialError::InvalidMu(mu));
    }
    check_rhs(b, n)?;
    synthesize(b, mu, m, false)
}

/// A concrete operator built from a [`WSequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialSystem {
    pub(crate) k: usize,
    pub(crate) x: Frame,
    pub(crate) y: Frame,
    pub(crate) sequence: WSequence,
}

impl AdversarialSystem {
    pub(crate) fn assemble(sequence: WSequence, k: usize) -> Result<Self, AdversarialError> {
        if k == 0 {
            return Err(AdversarialError::InvalidParameter("k must be at least 1".into()));
        }
        let n = sequence.dim();
        let s = sequence.steps();
        let needed_d = s * (k - 1);
        let mut span = Frame::new(n);
        for v in &sequence.v {
            span.push(SparseColumn::from_dense(v));
        }
        let mut d = Vec::with_capacity(needed_d);
        for i in 0..n {
            if d.len() == needed_d {
                break;
            }
            let mut e = unit(n, i);
            let r = span.orthogonalize(&mut e);
            if r < super::FRESH_DIRECTION_TOL {
                continue;
            }
            e.iter_mut().for_each(|x| *x /= r);
            let col = SparseColumn::from_dense(&e);
            span.push(col.clone());
            d.push(col);
        }
        if d.len() < needed_d {
            return Err(AdversarialError::DimensionTooSmall { needed: s * k + 1, available: n });
        }

        let dj = |j: usize, i: usize| d[j * (k - 1) + (i - 1)].clone();
        let wj = |j: usize| SparseColumn::from_dense(&sequence.w[j]);
        let mut x = Frame::new(n);
        let mut y = Frame::new(n);
        for j in 0..s {
            x.push(SparseColumn::from_dense(&sequence.v[j]));
            y.push(if k > 1 { dj(j, 1) } else { wj(j) });
        }
        for j in 0..s {
            for i in 1..k {
                x.push(dj(j, i));
                y.push(if i + 1 < k { dj(j, i + 1) } else { wj(j) });
            }
        }
        Ok(Self { k, x, y, sequence })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> f64 {
        self.sequence.mu
    }

    pub fn rhs(&self) -> &[c64] {
        &self.sequence.rhs
    }

    pub fn sequence(&self) -> &WSequence {
        &self.sequence
    }

    /// Number of outer steps the construction covers.
    pub fn outer_steps(&self) -> usize {
        self.sequence.steps()
    }

    pub fn x_frame(&self) -> &Frame {
        &self.x
    }

    pub fn y_frame(&self) -> &Frame {
        &self.y
    }

    /// `d_{j,i}` for one-based `j` and `i < k`.
    pub fn d_vector(&self, j: usize, i: usize) -> Vector {
        let s = self.outer_steps();
        self.x.col(s + (j - 1) * (self.k - 1) + (i - 1)).to_dense(self.dim())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let cols: Vec<Vector> = (0..n).map(|i| self.apply(&unit(n, i))).collect();
        DenseMatrix::from_columns(n, &cols)
    }

    /// `I + sum_c (y_c - x_c) x_c^*`, entries summed and exact zeros dropped.
    pub fn to_csr(&self) -> Result<CsrMatrix, AdversarialError> {
        let n = self.dim();
        let mut t: Vec<(usize, usize, c64)> = (0..n).map(|i| (i, i, c(1.0))).collect();
        for (xc, yc) in self.x.columns().iter().zip(self.y.columns()) {
            for (&jx, &vx) in xc.indices.iter().zip(&xc.values) {
                let conj = vx.conj();
                for (&iy, &vy) in yc.indices.iter().zip(&yc.values) {
                    t.push((iy, jx, vy * conj));
                }
                for (&ix, &vx2) in xc.indices.iter().zip(&xc.values) {
                    t.push((ix, jx, -vx2 * conj));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t)?;
        let dense_free: Vec<(usize, usize, c64)> = (0..n)
            .flat_map(|i| a.row(i).filter(|e| e.1 != c(0.0)).map(move |(j, v)| (i, j, v)).collect::<Vec<_>>())
            .collect();
        Ok(CsrMatrix::from_triplets(n, n, &dense_free)?)
    }

    /// Exact invertibility test. `A` is invertible iff the `w_j` together
    /// with `v_{s+1}` span `span(v_1..v_{s+1})`; this checks that small
    /// Gram-type matrix with a pivoted LU.
    pub fn is_invertible(&self) -> bool {
        let seq = &self.sequence;
        let mut cols: Vec<&Vector> = seq.w.iter().collect();
        if seq.v.len() > seq.w.len() {
            cols.push(seq.v.last().unwrap());
        }
        let g: Vec<Vector> = cols.iter().map(|w| seq.v.iter().map(|v| crate::linalg::dot(v, w)).collect()).collect();
        LuFactor::new(&DenseMatrix::from_columns(seq.v.len(), &g)).is_ok()
    }

    /// Smallest `‖A x‖ / ‖x‖` over random probes supported on the frame
    /// columns plus a random vector.
    pub fn probe_gain(&self, probes: usize, seed: u64) -> f64 {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::INFINITY;
        for p in 0..probes {
            let mut x = vec![c(0.0); n];
            if p % 2 == 0 {
                let t: Vector =
                    (0..self.x.len()).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                self.x.apply_add(&t, &mut x);
            } else {
                x.iter_mut().for_each(|e| *e = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
            let nx = norm(&x);
            if nx > 0.0 {
                worst = worst.min(norm(&self.apply(&x)) / nx);
            }
        }
        worst
    }
}

impl LinearOperator for AdversarialSystem {
    fn dim(&self) -> usize {
        self.x.rows()
    }

    fn apply_into(&self, x: &[c64], out: &mut [c64]) {
        let t = self.x.adjoint_apply(x);
        out.copy_from_slice(x);
        let neg: Vector = t.iter().map(|v| -v).collect();
        self.x.apply_add(&neg, out);
        self.y.apply_add(&t, out);
    }
}

/// The system on which FGMRES with inner GMRES(k) attains the FGMRES bound
/// at every step `1..=m`. Requires `0 <= mu <= 1/2` and `n >= m k + 1`.
pub fn build_adversarial_operator(
    b: &[c64],
    mu: f64,
    m: usize,
    k: usize,
    n: usize,
) -> Result<AdversarialSystem, AdversarialError> {
    if k == 0 {
        return Err(AdversarialError::InvalidParameter("k must be at least 1".into()));
    }
    if n < m * k + 1 {
        return Err(AdversarialError::DimensionTooSmall { needed: m * k + 1, available: n });
    }
    let seq = generate_w_sequence(b, mu, m, n)?;
    AdversarialSystem::assemble(seq, k)
}

/// Same construction for `1/2 < mu < 1`: sharp through the stalling
/// index, after which each step keeps the residual fixed.
pub fn build_stagnating_system(
    b: &[c64],
    mu: f64,
    m: usize,
    k: usize,
    n: usize,
) -> Result<AdversarialSystem, AdversarialError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(AdversarialError::InvalidMu(mu));
    }
    if k == 0 {
        return Err(AdversarialError::InvalidParameter("k must be at least 1".into()));
    }
    if n < m * k + 1 {
        return Err(AdversarialError::DimensionTooSmall { needed: m * k + 1, available: n });
    }
    check_rhs(b, n)?;
    let seq = synthesize(b, mu, m, true)?;
    AdversarialSystem::assemble(seq, k)
}

/// Largest relative gap `|‖r_j‖/‖r_0‖ - bound_j| / bound_j` over the trace
/// steps where the bound is defined.
pub fn verify_sharpness(trace: &SolveTrace, mu: f64) -> f64 {
    verify_sharpness_upto(trace, mu, trace.steps.len())
}

/// [`verify_sharpness`] restricted to steps `1..=upto`.
pub fn verify_sharpness_upto(trace: &SolveTrace, mu: f64, upto: usize) -> f64 {
    let r0 = trace.initial_resnorm;
    trace
        .steps
        .iter()
        .enumerate()
        .take(upto)
        .filter_map(|(i, s)| {
            let bound = fgmres_bound(mu, i + 1).value()?;
            Some((s.fg_resnorm / r0 - bound).abs() / bound)
        })
        .fold(0.0, f64::max)
}

/// Largest `‖r_j‖/‖r_0‖ - bound_j` with the bound held past the stalling
/// index. Positive values are violations.
pub fn bound_excess(trace: &SolveTrace, mu: f64) -> f64 {
    let r0 = trace.initial_resnorm;
    trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| s.fg_resnorm / r0 - fgmres_bound_capped(mu, i + 1))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{ffom_bound, stalling_index, StallIndex};
    use crate::linalg::sub;
    use crate::solver::{fgmres, InnerGmresPreconditioner, SolverConfig, Termination};

    #[test]
    fn sequence_matches_bounds() {
        let seq = generate_w_sequence(&unit(30, 0), 0.4, 10, 30).unwrap();
        assert_eq!(seq.steps(), 10);
        for j in 1..=10 {
            let fg = fgmres_bound(0.4, j).value().unwrap();
            let ff = ffom_bound(0.4, j).value().unwrap();
            assert!((seq.fg_norms[j] - fg).abs() <= 1e-12 * fg, "fg at {j}");
            assert!((seq.ff_norms[j].unwrap() - ff).abs() <= 1e-10 * ff, "ff at {j}");
            assert!((norm(&sub(&seq.v[j - 1], &seq.w[j - 1])) - 0.4).abs() < 1e-14);
        }
    }

    #[test]
    fn frames_are_orthonormal_and_map_as_designed() {
        let sys = build_adversarial_operator(&unit(40, 0), 0.5, 6, 4, 40).unwrap();
        assert!(sys.x_frame().orthonormality_defect() < 1e-12);
        for j in 1..=6 {
            let v = &sys.sequence().v[j - 1];
            assert!(norm(&sub(&sys.apply(v), &sys.d_vector(j, 1))) < 1e-13);
            assert!(norm(&sub(&sys.apply(&sys.d_vector(j, 1)), &sys.d_vector(j, 2))) < 1e-13);
            assert!(norm(&sub(&sys.apply(&sys.d_vector(j, 3)), &sys.sequence().w[j - 1])) < 1e-13);
        }
        assert!(sys.is_invertible());
        let dense = sys.to_dense();
        assert!(LuFactor::new(&dense).is_ok());
        let csr = sys.to_csr().unwrap();
        let x: Vector = (0..40).map(|i| c(i as f64 * 0.1 - 1.0)).collect();
        assert!(norm(&sub(&crate::linalg::csr_matvec(&csr, &x).unwrap(), &sys.apply(&x))) < 1e-12);
    }

    #[test]
    fn inner_gmres_reaches_bound() {
        let (m, k) = (8, 3);
        let sys = build_adversarial_operator(&unit(m * k + 1, 0), 0.45, m, k, m * k + 1).unwrap();
        let mut pre = InnerGmresPreconditioner::fixed(&sys, k);
        let cfg = SolverConfig::default().with_max_outer(m).with_tol(1e-300);
        let out = fgmres(&sys, sys.rhs(), None, &mut pre, &cfg).unwrap();
        assert_eq!(out.trace.steps.len(), m);
        assert!(verify_sharpness(&out.trace, 0.45) < 1e-8);
    }

    #[test]
    fn stagnating_system_is_sharp_then_flat() {
        assert_eq!(stalling_index(0.55), StallIndex::Finite(5));
        let (m, k) = (10, 2);
        let sys = build_stagnating_system(&unit(m * k + 1, 0), 0.55, m, k, m * k + 1).unwrap();
        assert_eq!(sys.sequence().sharp_steps(), 5);
        let mut pre = InnerGmresPreconditioner::fixed(&sys, k);
        let cfg = SolverConfig::default().with_max_outer(m).with_tol(1e-300).with_stop_on_stagnation(false);
        let out = fgmres(&sys, sys.rhs(), None, &mut pre, &cfg).unwrap();
        assert_eq!(out.trace.status, Termination::Stagnation);
        assert_eq!(out.trace.stagnation_at, Some(6));
        assert_eq!(out.trace.steps.len(), m);
        assert!(verify_sharpness_upto(&out.trace, 0.55, 5) < 1e-8);
        let fg = out.trace.fg_history();
        for j in 6..=m {
            assert!((fg[j] - fg[5]).abs() <= 1e-10 * fg[5], "step {j}");
        }
    }

    #[test]
    fn rejects_small_dimension_and_bad_mu() {
        assert!(matches!(
            build_adversarial_operator(&unit(10, 0), 0.3, 5, 2, 10),
            Err(AdversarialError::DimensionTooSmall { .. })
        ));
        assert!(matches!(generate_w_sequence(&unit(10, 0), 0.6, 3, 10), Err(AdversarialError::InvalidMu(_))));
        assert!(matches!(generate_w_sequence(&[c(0.0); 4], 0.3, 2, 4), Err(AdversarialError::ZeroRhs)));
    }

    #[test]
    fn exact_inner_solve_breaks_down_happily() {
        let seq = generate_w_sequence(&unit(5, 0), 0.0, 3, 5).unwrap();
        assert!(seq.happy_breakdown);
        assert_eq!(seq.steps(), 1);
        assert_eq!(seq.fg_norms[1], 0.0);
    }
}
