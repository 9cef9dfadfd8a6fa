//! Dense and sparse linear algebra kernels shared by the solvers.
//!
//! Vectors are plain `Vec<c64>` / `&[c64]`; all scalars are complex doubles
//! and real data is promoted on the way in. Dense matrices are stored
//! column-major.

mod dense;
mod hessenberg;
mod operator;
mod ortho;
mod sparse;

pub use dense::{dense_solve, DenseMatrix, LuFactor};
pub use hessenberg::{hessenberg_lsq, hessenberg_square_solve, GivensLsq, HessenbergFactor, LsqSolution};
pub use operator::{IdentityOperator, LinearOperator, ScaledIdentity};
pub use ortho::{mgs_orthogonalize, split_against_span, Orthogonalized, REORTH_ETA};
pub use sparse::{csr_matvec, CsrMatrix};

pub use num_complex::Complex64 as c64;

/// A dense complex vector.
pub type Vector = Vec<c64>;

/// Relative pivot size below which a factorization is treated as singular.
pub const SINGULAR_RCOND: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
}

#[inline]
pub fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// Hermitian inner product `x^* y`.
pub fn dot(x: &[c64], y: &[c64]) -> c64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Euclidean norm, scaled to avoid overflow on large entries.
pub fn norm(x: &[c64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.re.abs()).max(v.im.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return if scale.is_nan() { f64::NAN } else { scale };
    }
    let s: f64 = x.iter().map(|v| (v / scale).norm_sqr()).sum();
    scale * s.sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: c64, x: &[c64], y: &mut [c64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: c64, x: &mut [c64]) {
    for v in x {
        *v *= alpha;
    }
}

pub fn sub(x: &[c64], y: &[c64]) -> Vector {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn zeros(n: usize) -> Vector {
    vec![c64::new(0.0, 0.0); n]
}

/// Canonical basis vector `e_{i+1}` (zero-based index `i`).
pub fn unit(n: usize, i: usize) -> Vector {
    let mut e = zeros(n);
    e[i] = c(1.0);
    e
}

pub fn from_real(x: &[f64]) -> Vector {
    x.iter().map(|&v| c(v)).collect()
}

pub fn is_finite(x: &[c64]) -> bool {
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_handles_scale_extremes() {
        let x = vec![c(3e200), c64::new(0.0, 4e200)];
        assert!((norm(&x) / 5e200 - 1.0).abs() < 1e-15);
        let y = vec![c(3e-200), c(4e-200)];
        assert!((norm(&y) / 5e-200 - 1.0).abs() < 1e-15);
        assert_eq!(norm(&zeros(3)), 0.0);
    }

    #[test]
    fn dot_is_conjugate_linear_in_first_argument() {
        let x = vec![c64::new(0.0, 1.0)];
        let y = vec![c(1.0)];
        assert_eq!(dot(&x, &y), c64::new(0.0, -1.0));
    }
}
