use super::{c64, CsrMatrix, DenseMatrix, LuFactor, Vector};

/// Action `x -> A x` of a square operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`. Both slices have length `dim()`.
    fn apply_into(&self, x: &[c64], y: &mut [c64]);

    fn apply(&self, x: &[c64]) -> Vector {
        let mut y = vec![c64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        (**self).apply_into(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        (**self).apply_into(x, y)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols(), "operator must be square");
        self.rows()
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        self.matvec_into(x, y)
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols(), "operator must be square");
        self.rows()
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        self.matvec_into(x, y)
    }
}

/// Applies the inverse of the factored matrix.
impl LinearOperator for LuFactor {
    fn dim(&self) -> usize {
        LuFactor::dim(self)
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        let z = self.solve(x).expect("dimension checked by caller");
        y.copy_from_slice(&z);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        y.copy_from_slice(x);
    }
}

/// `x -> alpha x`
#[derive(Debug, Clone, Copy)]
pub struct ScaledIdentity {
    pub n: usize,
    pub alpha: c64,
}

impl LinearOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[c64], y: &mut [c64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.alpha * xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{axpy, norm, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn check_linearity(op: &dyn LinearOperator, op_norm: f64, rng: &mut ChaCha8Rng) {
        let n = op.dim();
        for _ in 0..10 {
            let (x, y) = (rand_vec(rng, n), rand_vec(rng, n));
            let (a, b) = (c64::new(rng.gen_range(-2.0..2.0), 1.0), c64::new(0.5, rng.gen_range(-2.0..2.0)));
            let mut comb = x.iter().map(|v| a * v).collect::<Vector>();
            axpy(b, &y, &mut comb);
            let lhs = op.apply(&comb);
            let mut rhs = op.apply(&x).iter().map(|v| a * v).collect::<Vector>();
            axpy(b, &op.apply(&y), &mut rhs);
            let scale = norm(&x) * a.norm() + norm(&y) * b.norm();
            assert!(norm(&sub(&lhs, &rhs)) <= 1e-13 * scale * op_norm);
        }
    }

    #[test]
    fn operators_are_linear_on_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let mut dense = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                dense[(i, j)] = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let sparse = CsrMatrix::from_dense(&dense);
        let fro = dense.frobenius_norm();
        check_linearity(&dense, fro, &mut rng);
        check_linearity(&sparse, fro, &mut rng);
        check_linearity(&IdentityOperator(n), 1.0, &mut rng);
        check_linearity(&ScaledIdentity { n, alpha: c64::new(0.5, 0.25) }, 1.0, &mut rng);
    }
}
