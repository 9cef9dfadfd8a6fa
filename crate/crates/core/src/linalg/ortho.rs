use super::{axpy, c64, dot, norm, zeros, Vector};

/// Reorthogonalization trigger: a second sweep runs when the deflated norm
/// drops below `REORTH_ETA` times the input norm.
pub const REORTH_ETA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone)]
pub struct Orthogonalized {
    /// Projection coefficients `h_i = v_i^* w`, accumulated over both sweeps.
    pub coeffs: Vector,
    /// Component of `w` orthogonal to the basis.
    pub residual: Vector,
    /// `‖residual‖`, the next subdiagonal Hessenberg entry.
    pub norm: f64,
    pub reorthogonalized: bool,
}

fn mgs_sweep(w: &mut [c64], basis: &[Vector], coeffs: &mut [c64]) {
    for (q, h) in basis.iter().zip(coeffs.iter_mut()) {
        let hi = dot(q, w);
        axpy(-hi, q, w);
        *h += hi;
    }
}

/// Modified Gram-Schmidt against an orthonormal `basis`, with one
/// conditional reorthogonalization sweep.
///
/// A zero `norm` is a valid outcome (the input lies in the span).
pub fn mgs_orthogonalize(w: &[c64], basis: &[Vector]) -> Orthogonalized {
    let input_norm = norm(w);
    let mut residual = w.to_vec();
    let mut coeffs = zeros(basis.len());
    mgs_sweep(&mut residual, basis, &mut coeffs);
    let mut n = norm(&residual);
    let reorthogonalized = !basis.is_empty() && n < REORTH_ETA * input_norm;
    if reorthogonalized {
        mgs_sweep(&mut residual, basis, &mut coeffs);
        n = norm(&residual);
    }
    Orthogonalized { coeffs, residual, norm: n, reorthogonalized }
}

/// Splits `v = p + u` with `p` in the span of the orthonormal `frame` and
/// `u` orthogonal to it. An empty frame gives `p = 0`.
pub fn split_against_span(v: &[c64], frame: &[Vector]) -> (Vector, Vector) {
    let o = mgs_orthogonalize(v, frame);
    let mut p = zeros(v.len());
    for (q, &h) in frame.iter().zip(&o.coeffs) {
        axpy(h, q, &mut p);
    }
    let u = v.iter().zip(&p).map(|(a, b)| a - b).collect();
    (p, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, sub, unit};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn random_frame(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vector> {
        let mut basis: Vec<Vector> = Vec::new();
        while basis.len() < k {
            let o = mgs_orthogonalize(&rand_vec(rng, n), &basis);
            basis.push(o.residual.iter().map(|x| x / o.norm).collect());
        }
        basis
    }

    fn gram_defect(basis: &[Vector]) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - c(target)).norm());
            }
        }
        worst
    }

    #[test]
    fn basis_vector_projects_fully() {
        let v1 = unit(4, 0);
        let o = mgs_orthogonalize(&v1, std::slice::from_ref(&v1));
        assert_eq!(o.coeffs, vec![c(1.0)]);
        assert_eq!(o.norm, 0.0);
        assert!(o.residual.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn orthogonal_input_is_untouched() {
        let w = unit(4, 2);
        let o = mgs_orthogonalize(&w, &[unit(4, 0), unit(4, 1)]);
        assert!(o.coeffs.iter().all(|x| x.norm() == 0.0));
        assert_eq!(o.residual, w);
        assert!(!o.reorthogonalized);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let basis = random_frame(&mut rng, 6, 3);
            let w = rand_vec(&mut rng, 6);
            let o = mgs_orthogonalize(&w, &basis);
            let mut rebuilt = o.residual.clone();
            for (q, &h) in basis.iter().zip(&o.coeffs) {
                axpy(h, q, &mut rebuilt);
            }
            assert!(norm(&sub(&rebuilt, &w)) <= 1e-12 * norm(&w));
            let leak = basis.iter().map(|q| dot(q, &o.residual).norm()).fold(0.0, f64::max);
            assert!(leak <= 1e-12 * norm(&w));
            assert!((o.norm - norm(&o.residual)).abs() == 0.0);
        }
    }

    #[test]
    fn chained_basis_stays_orthonormal() {
        // Nearly dependent inputs exercise the second sweep.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40;
        let seed = rand_vec(&mut rng, n);
        let mut basis: Vec<Vector> = Vec::new();
        let mut any_reorth = false;
        for _ in 0..30 {
            let mut w = seed.clone();
            for x in w.iter_mut() {
                *x += c64::new(1e-6 * rng.gen_range(-1.0..1.0), 0.0);
            }
            let o = mgs_orthogonalize(&w, &basis);
            any_reorth |= o.reorthogonalized;
            basis.push(o.residual.iter().map(|x| x / o.norm).collect());
        }
        assert!(any_reorth);
        assert!(gram_defect(&basis) <= 1e-10);
    }

    #[test]
    fn split_edge_cases() {
        let v = vec![c(1.0), c(2.0), c(0.0)];
        let (p, u) = split_against_span(&v, &[]);
        assert!(p.iter().all(|x| x.norm() == 0.0));
        assert_eq!(u, v);
        let (p, u) = split_against_span(&v, &[unit(3, 0), unit(3, 1)]);
        assert_eq!(p, v);
        assert!(norm(&u) == 0.0);
    }

    proptest! {
        #[test]
        fn split_is_orthogonal_and_idempotent(seed in any::<u64>(), n in 3usize..12, k in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frame = random_frame(&mut rng, n, k);
            let v = rand_vec(&mut rng, n);
            let (p, u) = split_against_span(&v, &frame);
            let nv = norm(&v);
            for q in &frame {
                prop_assert!(dot(q, &u).norm() <= 1e-12 * nv);
            }
            let pyth = norm(&p).powi(2) + norm(&u).powi(2);
            prop_assert!((pyth - nv * nv).abs() <= 1e-12 * nv * nv);
            let (p2, u2) = split_against_span(&u, &frame);
            prop_assert!(norm(&p2) <= 1e-12 * nv);
            prop_assert!(norm(&sub(&u2, &u)) <= 1e-12 * nv);
        }
    }
}
