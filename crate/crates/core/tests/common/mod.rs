//! Shared fixtures: random systems, an independent least-squares oracle
//! and the residual identities every trace must satisfy.
#![allow(dead_code)]

use flexkrylov::linalg::{c, c64, dot, norm, sub, DenseMatrix, LinearOperator, Vector};
use flexkrylov::solver::{
    fgmres, make_fixed_preconditioner, FgmresOutput, FnPreconditioner, InnerGmresPreconditioner, SolverConfig,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DenseMatrix {
    let cols: Vec<Vector> = (0..n)
        .map(|j| {
            let mut v = random_vector(rng, n);
            v[j] += c(shift);
            v
        })
        .collect();
    DenseMatrix::from_columns(n, &cols)
}

/// `min_y ‖b - A Z y‖` by Householder QR of `A Z`, independent of the
/// solver's Arnoldi/Givens path.
pub fn oracle_min_residual<A: LinearOperator + ?Sized>(a: &A, z: &[Vector], b: &[c64]) -> f64 {
    let n = b.len();
    let az: Vec<Vector> = z.iter().map(|zc| a.apply(zc)).collect();
    let m = DMatrix::from_fn(n, z.len(), |r, col| az[col][r]);
    let bb = DVector::from_column_slice(b);
    let qr = m.clone().qr();
    let qtb = qr.q().adjoint() * &bb;
    let y = qr.r().solve_upper_triangular(&qtb).expect("A Z has full column rank");
    (bb - m * y).norm()
}

/// A solved system kept for identity checks.
pub struct Case {
    pub name: String,
    pub a: Box<dyn LinearOperator>,
    pub b: Vector,
    pub out: FgmresOutput,
}

/// One random system of size `4..=12` with one of three preconditioner
/// kinds: a fresh random matrix per step, inner GMRES(k), or a fixed
/// random matrix.
pub fn random_case(seed: u64) -> Case {
    let mut r = rng(seed);
    let n = r.gen_range(4..=12);
    let a = random_matrix(&mut r, n, 2.0);
    let b = random_vector(&mut r, n);
    let cfg = SolverConfig::default().with_max_outer(n - 1).with_tol(1e-300);
    let kind = seed % 3;
    let out = match kind {
        0 => {
            let mut pr = rng(seed ^ 0x9e37_79b9);
            let mut p = FnPreconditioner(move |_step: usize, v: &[c64]| {
                let m = random_matrix(&mut pr, v.len(), 1.0);
                m.matvec(v).unwrap()
            });
            fgmres(&a, &b, None, &mut p, &cfg).unwrap()
        }
        1 => {
            let k = r.gen_range(1..=3);
            let mut p = InnerGmresPreconditioner::fixed(&a, k);
            fgmres(&a, &b, None, &mut p, &cfg).unwrap()
        }
        _ => {
            let m = random_matrix(&mut r, n, 1.0);
            let mut p = make_fixed_preconditioner(m);
            fgmres(&a, &b, None, &mut p, &cfg).unwrap()
        }
    };
    Case { name: format!("random seed {seed} (n = {n}, kind {kind})"), a: Box::new(a), b, out }
}

fn max_column_norm(cols: &[Vector]) -> f64 {
    cols.iter().map(|v| norm(v)).fold(0.0, f64::max)
}

/// Worst violation of each identity over one trace, as a ratio to its
/// allowed tolerance (`<= 1` passes).
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityReport {
    pub orthogonality: f64,
    pub inner_product: f64,
    pub ffom_fgmres: f64,
    pub product_bound: f64,
    pub gamma_bound: f64,
    pub arnoldi: f64,
    pub final_residual: f64,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        [
            self.orthogonality,
            self.inner_product,
            self.ffom_fgmres,
            self.product_bound,
            self.gamma_bound,
            self.arnoldi,
            self.final_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn merge(&mut self, o: &IdentityReport) {
        self.orthogonality = self.orthogonality.max(o.orthogonality);
        self.inner_product = self.inner_product.max(o.inner_product);
        self.ffom_fgmres = self.ffom_fgmres.max(o.ffom_fgmres);
        self.product_bound = self.product_bound.max(o.product_bound);
        self.gamma_bound = self.gamma_bound.max(o.gamma_bound);
        self.arnoldi = self.arnoldi.max(o.arnoldi);
        self.final_residual = self.final_residual.max(o.final_residual);
    }
}

pub fn check_identities<A: LinearOperator + ?Sized>(a: &A, b: &[c64], out: &FgmresOutput) -> IdentityReport {
    let trace = &out.trace;
    let state = &out.state;
    let r0 = trace.initial_resnorm;
    let fg = trace.fg_history();
    let mut rep = IdentityReport::default();
    let steps = trace.steps.len();

    let residuals: Vec<Vector> = (0..=steps).map(|j| sub(b, &a.apply(&state.fgmres_iterate(j)))).collect();
    let az: Vec<Vector> = state.search_directions().iter().map(|z| a.apply(z)).collect();
    for j in 1..=steps {
        let r = &residuals[j];
        // (A Z_j)^* r_j = 0
        let scale = max_column_norm(&az[..j]) * r0;
        let worst = az[..j].iter().map(|w| dot(w, r).norm()).fold(0.0, f64::max);
        rep.orthogonality = rep.orthogonality.max(worst / (1e-8 * scale));
        // r_j^* r_{j-1} = ‖r_j‖^2
        let ip = (dot(r, &residuals[j - 1]) - c(norm(r).powi(2))).norm();
        rep.inner_product = rep.inner_product.max(ip / (1e-8 * r0 * r0));

        let step = &trace.steps[j - 1];
        if let Some(ff) = step.ff_resnorm {
            let ratio = fg[j] / fg[j - 1];
            if ratio < 1.0 {
                let predicted = fg[j] / (1.0 - ratio * ratio).sqrt();
                rep.ffom_fgmres =
                    rep.ffom_fgmres.max((ff - predicted).abs() / (1e-8 * predicted.max(f64::MIN_POSITIVE)));
            }
        }
        let ff_prev = if j == 1 { Some(r0) } else { trace.steps[j - 2].ff_resnorm };
        if let Some(ffp) = ff_prev {
            let excess = fg[j] - ffp * step.p_resnorm;
            rep.product_bound = rep.product_bound.max(excess / (1e-10 * r0));
        }
    }

    let p = trace.p_resnorms();
    let gamma = flexkrylov::bounds::gamma_sequence(&p);
    for j in 1..=steps {
        if !(0..j).all(|i| gamma.valid[i] && gamma.values[i] < 1.0) {
            break;
        }
        let excess = fg[j] - gamma.values[j - 1] * fg[j - 1];
        rep.gamma_bound = rep.gamma_bound.max(excess / (1e-10 * r0));
    }

    rep.arnoldi = state.arnoldi_defect(a) / 1e-10;
    let true_final = norm(&residuals[steps]);
    let reported = fg[steps];
    // relative 1e-8, with a rounding floor once the residual is tiny
    rep.final_residual = (true_final - reported).abs() / (1e-8 * reported + 1e-14 * r0);
    rep
}
