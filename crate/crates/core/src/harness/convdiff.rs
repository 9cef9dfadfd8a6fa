use crate::linalg::{c, CsrMatrix};

/// Upwind 5-point convection-diffusion on an `n x n` interior grid with
/// homogeneous Dirichlet boundary, unscaled (no `1/h^2`), convection along
/// `+x`. Unknown `(i, j)` is row `i + n j`.
///
/// Row stencil: center `4 + peclet`, west `-1 - peclet`, east, south and
/// north `-1`. Every full interior row therefore sums to zero for any
/// `peclet`; rows touching the boundary lose their missing neighbours.
pub fn generate_convdiff(n: usize, peclet: f64) -> CsrMatrix {
    assert!(n >= 2, "grid size must be at least 2");
    let idx = |i: usize, j: usize| i + n * j;
    let mut t = Vec::with_capacity(5 * n * n);
    for j in 0..n {
        for i in 0..n {
            let row = idx(i, j);
            t.push((row, row, c(4.0 + peclet)));
            if i > 0 {
                t.push((row, idx(i - 1, j), c(-1.0 - peclet)));
            }
            if i + 1 < n {
                t.push((row, idx(i + 1, j), c(-1.0)));
            }
            if j > 0 {
                t.push((row, idx(i, j - 1), c(-1.0)));
            }
            if j + 1 < n {
                t.push((row, idx(i, j + 1), c(-1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n * n, n * n, &t).expect("stencil indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_grid() {
        let a = generate_convdiff(2, 0.5).to_dense();
        for i in 0..4 {
            assert_eq!(a[(i, i)], c(4.5));
        }
        assert_eq!(a[(1, 0)], c(-1.5));
        assert_eq!(a[(0, 1)], c(-1.0));
        assert_eq!(a[(0, 3)], c(0.0));
    }

    #[test]
    fn symmetric_without_convection() {
        let a = generate_convdiff(5, 0.0).to_dense();
        assert_eq!(a, a.adjoint());
        let b = generate_convdiff(5, 1.0).to_dense();
        assert_ne!(b, b.adjoint());
    }

    #[test]
    fn interior_rows_sum_to_zero() {
        let n = 6;
        for pe in [0.0, 2.0] {
            let a = generate_convdiff(n, pe);
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let s: crate::linalg::c64 = a.row(i + n * j).map(|e| e.1).sum();
                    assert_eq!(s, c(0.0));
                }
            }
        }
    }
}
