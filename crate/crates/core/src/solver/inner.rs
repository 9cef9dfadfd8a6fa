use crate::linalg::{c, c64, mgs_orthogonalize, norm, GivensLsq, LinearOperator, Vector};

#[derive(Debug, Clone)]
pub struct InnerGmresResult {
    pub z: Vector,
    /// `A z`, computed explicitly.
    pub az: Vector,
    /// True residual norm `‖v - A z‖`.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Arnoldi broke down before the residual vanished.
    pub breakdown: bool,
}

/// GMRES from a zero initial guess on `A z = v`.
///
/// Without `mu_target` it runs exactly `max_iters` iterations (fewer only
/// on an exact breakdown). With `mu_target` it stops at the first
/// iteration whose relative residual is at most `mu_target`, or at
/// `max_iters`.
pub fn inner_gmres<A: LinearOperator + ?Sized>(
    a: &A,
    v: &[c64],
    max_iters: usize,
    mu_target: Option<f64>,
) -> InnerGmresResult {
    assert!(max_iters >= 1, "inner GMRES needs at least one iteration");
    let n = a.dim();
    let beta = norm(v);
    if beta == 0.0 {
        return InnerGmresResult {
            z: vec![c(0.0); n],
            az: vec![c(0.0); n],
            residual_norm: 0.0,
            iterations: 0,
            breakdown: false,
        };
    }
    let mut basis: Vec<Vector> = vec![v.iter().map(|x| x / beta).collect()];
    let mut lsq = GivensLsq::new(beta);
    let mut breakdown = false;
    let mut w = vec![c(0.0); n];
    for j in 0..max_iters {
        a.apply_into(&basis[j], &mut w);
        let o = mgs_orthogonalize(&w, &basis);
        let mut col = o.coeffs;
        col.push(c(o.norm));
        lsq.push_column(col);
        if o.norm <= 1e-12 * beta {
            breakdown = true;
            break;
        }
        if mu_target.is_some_and(|mu| lsq.residual() <= mu * beta) {
            break;
        }
        if j + 1 < max_iters {
            basis.push(o.residual.iter().map(|x| x / o.norm).collect());
        }
    }

    let mut sol = lsq.solution();
    let mut used = lsq.len();
    while sol.singular && used > 1 {
        used -= 1;
        sol = GivensLsq::from_factor(&lsq.hessenberg().truncated(used)).solution();
    }
    let mut z = vec![c(0.0); n];
    if !sol.singular {
        for (q, &y) in basis.iter().zip(&sol.y) {
            crate::linalg::axpy(y, q, &mut z);
        }
    }
    let az = a.apply(&z);
    let residual_norm = norm(&crate::linalg::sub(v, &az));
    InnerGmresResult {
        z,
        az,
        residual_norm,
        iterations: lsq.len(),
        breakdown: breakdown && residual_norm > 1e-10 * beta,
    }
}
