use crate::linalg::{c, c64, DenseMatrix, Vector, REORTH_ETA};

/// A vector stored by its nonzero entries, indices ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumn {
    pub indices: Vec<usize>,
    pub values: Vec<c64>,
}

impl SparseColumn {
    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(x: &[c64]) -> Self {
        let (indices, values) = x.iter().enumerate().filter(|(_, v)| **v != c(0.0)).map(|(i, v)| (i, *v)).unzip();
        Self { indices, values }
    }

    pub fn unit(i: usize) -> Self {
        Self { indices: vec![i], values: vec![c(1.0)] }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self, n: usize) -> Vector {
        let mut x = vec![c(0.0); n];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    /// `self^* x`.
    pub fn dot_dense(&self, x: &[c64]) -> c64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| v.conj() * x[i]).sum()
    }

    /// `self^* other`, merging sorted index lists.
    pub fn dot(&self, other: &SparseColumn) -> c64 {
        let (mut a, mut b) = (0, 0);
        let mut s = c(0.0);
        while a < self.nnz() && b < other.nnz() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s += self.values[a].conj() * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        s
    }

    /// `y += alpha * self`.
    pub fn axpy_into(&self, alpha: c64, y: &mut [c64]) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            y[i] += alpha * v;
        }
    }
}

/// An `n x p` matrix of sparse columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    n: usize,
    cols: Vec<SparseColumn>,
}

impl Frame {
    pub fn new(n: usize) -> Self {
        Self { n, cols: Vec::new() }
    }

    pub fn from_columns(n: usize, cols: Vec<SparseColumn>) -> Self {
        debug_assert!(cols.iter().all(|c| c.indices.iter().all(|&i| i < n)));
        Self { n, cols }
    }

    pub fn push(&mut self, col: SparseColumn) {
        self.cols.push(col);
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn col(&self, j: usize) -> &SparseColumn {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.cols
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(SparseColumn::nnz).sum()
    }

    /// `F^* x`.
    pub fn adjoint_apply(&self, x: &[c64]) -> Vector {
        self.cols.iter().map(|q| q.dot_dense(x)).collect()
    }

    /// `y += F t`.
    pub fn apply_add(&self, t: &[c64], y: &mut [c64]) {
        for (q, &s) in self.cols.iter().zip(t) {
            if s != c(0.0) {
                q.axpy_into(s, y);
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let cols: Vec<Vector> = self.cols.iter().map(|q| q.to_dense(self.n)).collect();
        DenseMatrix::from_columns(self.n, &cols)
    }

    /// `max |F^*F - I|`, entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.cols.iter().enumerate() {
            for (j, b) in self.cols.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).norm());
            }
        }
        worst
    }

    /// Orthogonalizes dense `x` against the columns (assumed orthonormal),
    /// with one conditional second sweep. Returns the residual norm.
    pub fn orthogonalize(&self, x: &mut [c64]) -> f64 {
        let before = crate::linalg::norm(x);
        self.sweep(x);
        let mut after = crate::linalg::norm(x);
        if after < REORTH_ETA * before {
            self.sweep(x);
            after = crate::linalg::norm(x);
        }
        after
    }

    fn sweep(&self, x: &mut [c64]) {
        for q in &self.cols {
            let h = q.dot_dense(x);
            if h != c(0.0) {
                q.axpy_into(-h, x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, unit};

    #[test]
    fn sparse_roundtrip_and_dots() {
        let x = vec![c(0.0), c(2.0), c(0.0), c64::new(0.0, -1.0)];
        let s = SparseColumn::from_dense(&x);
        assert_eq!(s.indices, vec![1, 3]);
        assert_eq!(s.to_dense(4), x);
        assert_eq!(s.dot(&s), c(5.0));
        assert_eq!(s.dot_dense(&x), c(5.0));
    }

    #[test]
    fn orthogonalize_against_canonical() {
        let f = Frame::from_columns(3, vec![SparseColumn::unit(0), SparseColumn::unit(2)]);
        let mut x = vec![c(1.0), c(1.0), c(1.0)];
        let r = f.orthogonalize(&mut x);
        assert_eq!(x, unit(3, 1));
        assert_eq!(r, 1.0);
        assert_eq!(f.orthonormality_defect(), 0.0);
        assert_eq!(norm(&f.adjoint_apply(&unit(3, 2))), 1.0);
    }
}
