use super::{c, c64, DenseMatrix, LinalgError, Vector, SINGULAR_RCOND};

/// The `(m+1) x m` upper Hessenberg matrix of the (flexible) Arnoldi
/// process together with `beta = ‖r_0‖`. Column `j` (zero-based) stores
/// `h_{1..j+2, j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessenbergFactor {
    beta: f64,
    columns: Vec<Vector>,
}

impl HessenbergFactor {
    pub fn new(beta: f64) -> Self {
        assert!(beta >= 0.0, "beta must be nonnegative");
        Self { beta, columns: Vec::new() }
    }

    /// Builds from a dense `(m+1) x m` matrix; entries below the first
    /// subdiagonal must be zero.
    pub fn from_dense(beta: f64, h: &DenseMatrix) -> Result<Self, LinalgError> {
        let m = h.cols();
        if h.rows() != m + 1 {
            return Err(LinalgError::DimensionMismatch { expected: m + 1, found: h.rows() });
        }
        let mut f = Self::new(beta);
        for j in 0..m {
            if (j + 2..m + 1).any(|i| h[(i, j)] != c(0.0)) {
                return Err(LinalgError::InvalidCsr(format!("column {j} is not upper Hessenberg")));
            }
            f.push_column(h.col(j)[..j + 2].to_vec());
        }
        Ok(f)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of columns `m`.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn push_column(&mut self, col: Vector) {
        assert_eq!(col.len(), self.columns.len() + 2, "Hessenberg column has wrong length");
        self.columns.push(col);
    }

    pub fn column(&self, j: usize) -> &[c64] {
        &self.columns[j]
    }

    /// `h_{i+1, j+1}` (zero-based indices).
    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.columns[j].get(i).copied().unwrap_or(c(0.0))
    }

    /// The leading `k` columns (and `k+1` rows).
    pub fn truncated(&self, k: usize) -> Self {
        Self { beta: self.beta, columns: self.columns[..k].to_vec() }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let m = self.len();
        let mut d = DenseMatrix::zeros(m + 1, m);
        for (j, col) in self.columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                d[(i, j)] = v;
            }
        }
        d
    }
}

/// Plane rotation `[x; y] -> [c x + s y; -conj(s) x + c y]` with real `c`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    c: f64,
    s: c64,
}

impl Rotation {
    /// Rotation that annihilates `b` against `a`; returns it with the new
    /// leading entry.
    fn annihilating(a: c64, b: c64) -> (Self, c64) {
        let (na, nb) = (a.norm(), b.norm());
        if nb == 0.0 {
            return (Self { c: 1.0, s: c(0.0) }, a);
        }
        if na == 0.0 {
            return (Self { c: 0.0, s: c(1.0) }, b);
        }
        let rho = na.hypot(nb);
        let phase = a / na;
        (Self { c: na / rho, s: phase * b.conj() / rho }, phase * rho)
    }

    fn apply(&self, x: &mut c64, y: &mut c64) {
        let (a, b) = (*x, *y);
        *x = self.c * a + self.s * b;
        *y = -self.s.conj() * a + self.c * b;
    }
}

/// Solution of `min_y ‖beta e_1 - H y‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub y: Vector,
    pub residual: f64,
    /// A zero pivot remained after rotation; `y` is then not unique.
    pub singular: bool,
}

/// Incremental QR of a growing Hessenberg matrix by plane rotations. Each
/// pushed column costs `O(m)`; the least-squares residual is available
/// after every push without a solve.
#[derive(Debug, Clone)]
pub struct GivensLsq {
    hess: HessenbergFactor,
    r_cols: Vec<Vector>,
    rotations: Vec<Rotation>,
    g: Vector,
    /// Diagonal entry of the last column before its own rotation; this is
    /// the last diagonal of the square block after the previous rotations.
    last_unrotated_diag: c64,
    last_unrotated_g: c64,
}

impl GivensLsq {
    pub fn new(beta: f64) -> Self {
        Self {
            hess: HessenbergFactor::new(beta),
            r_cols: Vec::new(),
            rotations: Vec::new(),
            g: vec![c(beta)],
            last_unrotated_diag: c(0.0),
            last_unrotated_g: c(beta),
        }
    }

    pub fn from_factor(h: &HessenbergFactor) -> Self {
        let mut lsq = Self::new(h.beta());
        for j in 0..h.len() {
            lsq.push_column(h.column(j).to_vec());
        }
        lsq
    }

    pub fn len(&self) -> usize {
        self.r_cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_cols.is_empty()
    }

    pub fn hessenberg(&self) -> &HessenbergFactor {
        &self.hess
    }

    pub fn push_column(&mut self, h: Vector) {
        let j = self.r_cols.len();
        self.hess.push_column(h.clone());
        let mut col = h;
        for (i, rot) in self.rotations.iter().enumerate() {
            let (head, tail) = col.split_at_mut(i + 1);
            rot.apply(&mut head[i], &mut tail[0]);
        }
        self.last_unrotated_diag = col[j];
        self.last_unrotated_g = self.g[j];
        let (rot, r) = Rotation::annihilating(col[j], col[j + 1]);
        col[j] = r;
        col.truncate(j + 1);
        self.r_cols.push(col);
        self.g.push(c(0.0));
        let (head, tail) = self.g.split_at_mut(j + 1);
        rot.apply(&mut head[j], &mut tail[0]);
        self.rotations.push(rot);
    }

    /// Current least-squares residual `‖beta e_1 - H_m y_m‖`.
    pub fn residual(&self) -> f64 {
        self.g[self.len()].norm()
    }

    fn max_r_entry(&self) -> f64 {
        self.r_cols.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn back_substitute(&self, diag_last: c64, rhs: &[c64]) -> Vector {
        let m = self.len();
        let mut y = rhs.to_vec();
        for i in (0..m).rev() {
            let mut s = y[i];
            for (k, col) in self.r_cols.iter().enumerate().skip(i + 1) {
                s -= col[i] * y[k];
            }
            let d = if i + 1 == m { diag_last } else { self.r_cols[i][i] };
            y[i] = s / d;
        }
        y
    }

    pub fn solution(&self) -> LsqSolution {
        let m = self.len();
        let tol = SINGULAR_RCOND * self.max_r_entry();
        let singular = self.r_cols.iter().enumerate().any(|(i, col)| col[i].norm() <= tol);
        let y = if singular {
            vec![c(f64::NAN); m]
        } else {
            let last = if m > 0 { self.r_cols[m - 1][m - 1] } else { c(0.0) };
            self.back_substitute(last, &self.g[..m])
        };
        LsqSolution { y, residual: self.residual(), singular }
    }

    /// Solves the square system `H_m y = beta e_1` using the rotations
    /// already applied to the first `m - 1` columns. `Err(Singular)` when the
    /// estimated condition number exceeds `1 / (100 eps)`.
    pub fn square_solution(&self) -> Result<Vector, LinalgError> {
        let m = self.len();
        if m == 0 {
            return Ok(Vec::new());
        }
        let diag = |i: usize| if i + 1 == m { self.last_unrotated_diag } else { self.r_cols[i][i] };
        let min_diag = (0..m).map(|i| diag(i).norm()).fold(f64::INFINITY, f64::min);
        let max_entry = self.max_r_entry().max(self.last_unrotated_diag.norm());
        if min_diag == 0.0 || max_entry / min_diag > 1.0 / SINGULAR_RCOND {
            return Err(LinalgError::Singular);
        }
        let mut rhs = self.g[..m].to_vec();
        rhs[m - 1] = self.last_unrotated_g;
        Ok(self.back_substitute(self.last_unrotated_diag, &rhs))
    }

    /// `‖r^FF_m‖ = h_{m+1,m} |y^FF_m|` when the square block is nonsingular.
    pub fn square_residual(&self) -> Result<f64, LinalgError> {
        let y = self.square_solution()?;
        let m = self.len();
        Ok(self.hess.get(m, m - 1).norm() * y[m - 1].norm())
    }
}

/// Least-squares solve of `min ‖beta e_1 - H y‖` by plane rotations.
pub fn hessenberg_lsq(h: &HessenbergFactor) -> LsqSolution {
    GivensLsq::from_factor(h).solution()
}

/// Solves the square upper Hessenberg system `H y = beta e_1`.
pub fn hessenberg_square_solve(h: &DenseMatrix, beta: f64) -> Result<Vector, LinalgError> {
    let m = h.rows();
    if h.cols() != m {
        return Err(LinalgError::NotSquare { rows: m, cols: h.cols() });
    }
    let mut lsq = GivensLsq::new(beta);
    for j in 0..m {
        let mut col: Vector = h.col(j)[..(j + 2).min(m)].to_vec();
        col.resize(j + 2, c(0.0));
        lsq.push_column(col);
    }
    lsq.square_solution()
}
