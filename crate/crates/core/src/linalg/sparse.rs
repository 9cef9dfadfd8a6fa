use super::{c64, DenseMatrix, LinalgError, Vector};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<c64>,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<c64>,
    ) -> Result<Self, LinalgError> {
        if offsets.len() != rows + 1 {
            return Err(LinalgError::InvalidCsr(format!("expected {} row offsets, got {}", rows + 1, offsets.len())));
        }
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(LinalgError::InvalidCsr("row offsets must start at 0 and be nondecreasing".into()));
        }
        if offsets[rows] != values.len() || indices.len() != values.len() {
            return Err(LinalgError::InvalidCsr(format!(
                "offsets[N] = {}, {} column indices, {} values",
                offsets[rows],
                indices.len(),
                values.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&j| j >= cols) {
            return Err(LinalgError::InvalidCsr(format!("column index {bad} out of range [0, {cols})")));
        }
        Ok(Self { rows, cols, offsets, indices, values })
    }

    /// Assembles from (row, col, value) triplets; duplicates are summed and
    /// each row is sorted by column.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, c64)]) -> Result<Self, LinalgError> {
        let mut per_row: Vec<Vec<(usize, c64)>> = vec![Vec::new(); rows];
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(LinalgError::InvalidCsr(format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            per_row[i].push((j, v));
        }
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for mut row in per_row {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if indices.len() > *offsets.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(values.len());
        }
        Self::new(rows, cols, offsets, indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![c64::new(1.0, 0.0); n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[c64] {
        &self.values
    }

    /// Iterates over stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.row(i).find(|&(k, _)| k == j).map_or(c64::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let v = a[(i, j)];
                if v != c64::new(0.0, 0.0) {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &trip).expect("dense entries are in range")
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = (0..self.rows).flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v))).collect();
        Self::from_triplets(self.cols, self.rows, &trip).expect("transposed entries are in range")
    }

    pub(crate) fn matvec_into(&self, x: &[c64], y: &mut [c64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }
}

pub fn csr_matvec(a: &CsrMatrix, x: &[c64]) -> Result<Vector, LinalgError> {
    if x.len() != a.cols {
        return Err(LinalgError::DimensionMismatch { expected: a.cols, found: x.len() });
    }
    let mut y = vec![c64::new(0.0, 0.0); a.rows];
    a.matvec_into(x, &mut y);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real, norm, sub, unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_matvec() {
        let x = from_real(&[1.0, 2.0, 3.0]);
        assert_eq!(csr_matvec(&CsrMatrix::identity(3), &x).unwrap(), x);
    }

    #[test]
    fn single_entry() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 2, c(3.0))]).unwrap();
        assert_eq!(csr_matvec(&a, &unit(3, 2)).unwrap(), from_real(&[3.0, 0.0, 0.0]));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(csr_matvec(&a, &from_real(&[1.0])), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_malformed_structure() {
        assert!(CsrMatrix::new(2, 2, vec![0, 2, 1], vec![0], vec![c(1.0)]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![5], vec![c(1.0)]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![0], vec![c(1.0)]).is_err());
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(1, 1, c(1.0)), (1, 1, c(2.5)), (0, 1, c(1.0))]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 1), c(3.5));
    }

    #[test]
    fn random_sparse_matches_densified() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = 30;
            let trip: Vec<_> = (0..120)
                .map(|_| {
                    (
                        rng.gen_range(0..n),
                        rng.gen_range(0..n),
                        c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            let a = CsrMatrix::from_triplets(n, n, &trip).unwrap();
            let x: Vector = (0..n).map(|_| c64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
            let ys = csr_matvec(&a, &x).unwrap();
            let yd = a.to_dense().matvec(&x).unwrap();
            assert!(norm(&sub(&ys, &yd)) <= 1e-14 * norm(&yd));
        }
    }
}
