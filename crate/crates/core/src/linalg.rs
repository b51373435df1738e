//! Dense complex linear algebra used throughout the solver.
//!
//! Everything here works on `Array2<C64>` with conjugate-symmetric
//! (Hermitian) conventions. Factorizations go through LAPACK via
//! `ndarray-linalg`; the helpers add the pivot and pseudo-inverse
//! tolerances the substructuring code relies on.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{Diag, Eigh, SolveTriangular, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

/// Relative pivot tolerance for conjugate-symmetric factorizations.
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative eigenvalue cutoff for pseudo-inverses and range projections.
pub const PINV_CUTOFF: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Conjugate transpose.
pub fn ct(a: &ArrayView2<C64>) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    let mut h = a.clone();
    h += &a.t().mapv(|z| z.conj());
    h.mapv_inplace(|z| z * 0.5);
    h
}

/// Max-abs entry of `A - A^H` relative to the max-abs entry of `A`.
pub fn hermitian_defect(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut defect = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((a[[i, j]] - a[[j, i]].conj()).norm());
            scale = scale.max(a[[i, j]].norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        defect / scale
    }
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn identity(n: usize) -> CMat {
    let mut m = CMat::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = c(1.0, 0.0);
    }
    m
}

/// Submatrix `A[rows, cols]`.
pub fn select(a: &ArrayView2<C64>, rows: &[usize], cols: &[usize]) -> CMat {
    let mut out = CMat::zeros((rows.len(), cols.len()));
    for (i, &r) in rows.iter().enumerate() {
        for (j, &cc) in cols.iter().enumerate() {
            out[[i, j]] = a[[r, cc]];
        }
    }
    out
}

pub fn select_vec(v: &ArrayView1<C64>, idx: &[usize]) -> CVec {
    idx.iter().map(|&i| v[i]).collect()
}

/// Euclidean inner product `x^H y`.
pub fn dotc(x: &ArrayView1<C64>, y: &ArrayView1<C64>) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &ArrayView1<C64>) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Quadratic form `x^H A x` (real part; imaginary part vanishes for Hermitian `A`).
pub fn energy(a: &ArrayView2<C64>, x: &ArrayView1<C64>) -> f64 {
    dotc(x, &a.dot(x).view()).re
}

/// Compressed sparse row storage of a complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMat {
    n: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMat {
    /// Keeps the exactly nonzero entries of `a`.
    pub fn from_dense(a: &ArrayView2<C64>) -> Self {
        let (n, ncols) = a.dim();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in a.rows() {
            for (j, &z) in row.iter().enumerate() {
                if z != C64::new(0.0, 0.0) {
                    indices.push(j);
                    values.push(z);
                }
            }
            indptr.push(indices.len());
        }
        Self { n, ncols, indptr, indices, values }
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.n, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> CMat {
        let mut a = CMat::zeros((self.n, self.ncols));
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                a[[i, self.indices[k]]] = self.values[k];
            }
        }
        a
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    /// `A x`.
    pub fn matvec(&self, x: &ArrayView1<C64>) -> CVec {
        CVec::from_shape_fn(self.n, |i| self.row(i).map(|(j, z)| z * x[j]).sum())
    }

    /// `A^H x`.
    pub fn matvec_h(&self, x: &ArrayView1<C64>) -> CVec {
        let mut y = CVec::zeros(self.ncols);
        for i in 0..self.n {
            for (j, z) in self.row(i) {
                y[j] += z.conj() * x[i];
            }
        }
        y
    }
}

/// Cholesky factor kept in sparse form for repeated vector solves.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    lower: CsrMat,
}

impl SparseCholesky {
    pub fn new(ch: &Cholesky) -> Self {
        Self {
            lower: CsrMat::from_dense(&ch.lower.view()),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.n
    }

    pub fn nnz(&self) -> usize {
        self.lower.nnz()
    }

    /// `A^{-1} b` by a forward sweep with `L` and a backward sweep with `L^H`.
    pub fn solve_vec(&self, b: &ArrayView1<C64>) -> CVec {
        let l = &self.lower;
        let mut y = b.to_owned();
        for i in 0..l.n {
            let mut acc = y[i];
            let mut diag = C64::new(1.0, 0.0);
            for (j, z) in l.row(i) {
                if j < i {
                    acc -= z * y[j];
                } else if j == i {
                    diag = z;
                }
            }
            y[i] = acc / diag;
        }
        for i in (0..l.n).rev() {
            let diag = l.row(i).find(|&(j, _)| j == i).map_or(C64::new(1.0, 0.0), |(_, z)| z);
            y[i] /= diag.conj();
            let xi = y[i];
            for (j, z) in l.row(i) {
                if j < i {
                    y[j] -= z.conj() * xi;
                }
            }
        }
        y
    }
}

/// Cholesky factor `A = L L^H` of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: CMat,
}

impl Cholesky {
    /// Factorizes `a`, rejecting pivots below `PIVOT_TOL` times the largest
    /// diagonal entry.
    pub fn new(a: &ArrayView2<C64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Ok(Self {
                lower: CMat::zeros((0, 0)),
            });
        }
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[[i, i]].re.abs()));
        let mut lower = CMat::from_shape_fn((n, n), |(i, j)| (a[[i, j]] + a[[j, i]].conj()) * 0.5);
        {
            use ndarray_linalg::CholeskyInplace;
            if lower.cholesky_inplace(UPLO::Lower).is_err() {
                return Err(Error::NotPositiveDefinite { dim: n });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                lower[[i, j]] = C64::new(0.0, 0.0);
            }
        }
        let min_pivot = (0..n).fold(f64::INFINITY, |m, i| m.min(lower[[i, i]].norm_sqr()));
        if !(min_pivot > PIVOT_TOL * max_diag) {
            return Err(Error::NotPositiveDefinite { dim: n });
        }
        Ok(Self { lower })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &CMat {
        &self.lower
    }

    pub fn solve_mat(&self, b: &ArrayView2<C64>) -> CMat {
        if self.dim() == 0 || b.ncols() == 0 {
            return CMat::zeros(b.raw_dim());
        }
        let y = self
            .lower
            .solve_triangular(UPLO::Lower, Diag::NonUnit, &b.to_owned())
            .expect("triangular solve");
        self.solve_upper(&y.view())
    }

    pub fn solve_vec(&self, b: &ArrayView1<C64>) -> CVec {
        if self.dim() == 0 {
            return CVec::zeros(0);
        }
        let y = self
            .lower
            .solve_triangular(UPLO::Lower, Diag::NonUnit, &b.to_owned())
            .expect("triangular solve");
        // L^H x = y  <=>  L^T conj(x) = conj(y), with L^T a transposed view
        self.lower
            .t()
            .solve_triangular(UPLO::Upper, Diag::NonUnit, &y.mapv(|z| z.conj()))
            .expect("triangular solve")
            .mapv(|z| z.conj())
    }

    /// `L^{-1} B`.
    pub fn solve_lower(&self, b: &ArrayView2<C64>) -> CMat {
        if self.dim() == 0 || b.ncols() == 0 {
            return CMat::zeros(b.raw_dim());
        }
        self.lower
            .solve_triangular(UPLO::Lower, Diag::NonUnit, &b.to_owned())
            .expect("triangular solve")
    }

    /// `L^{-H} B`.
    pub fn solve_upper(&self, b: &ArrayView2<C64>) -> CMat {
        if self.dim() == 0 || b.ncols() == 0 {
            return CMat::zeros(b.raw_dim());
        }
        self.lower
            .t()
            .solve_triangular(UPLO::Upper, Diag::NonUnit, &b.mapv(|z| z.conj()))
            .expect("triangular solve")
            .mapv(|z| z.conj())
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, CMat)> {
    if a.nrows() == 0 {
        return Ok((Array1::zeros(0), CMat::zeros((0, 0))));
    }
    // row-major input is seen by LAPACK as the transpose, i.e. the conjugate
    let (w, v) = hermitian_part(&a.to_owned())
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Lapack(e.to_string()))?;
    Ok((w, v.mapv(|z| z.conj())))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eigvalsh_real(a: &Array2<f64>) -> Result<Array1<f64>> {
    if a.nrows() == 0 {
        return Ok(Array1::zeros(0));
    }
    a.eigh(UPLO::Lower)
        .map(|(w, _)| w)
        .map_err(|e| Error::Lapack(e.to_string()))
}

/// Spectral pseudo-inverse of a Hermitian matrix with relative eigenvalue
/// cutoff `PINV_CUTOFF`.
pub fn pinv_hermitian(a: &ArrayView2<C64>) -> Result<CMat> {
    let (w, v) = eigh(a)?;
    let wmax = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut scaled = v.clone();
    for (j, &lam) in w.iter().enumerate() {
        let inv = if lam.abs() > PINV_CUTOFF * wmax && wmax > 0.0 {
            1.0 / lam
        } else {
            0.0
        };
        scaled.column_mut(j).mapv_inplace(|z| z * inv);
    }
    Ok(scaled.dot(&ct(&v.view())))
}

/// Inverse of a Hermitian matrix: Cholesky when positive definite, spectral
/// pseudo-inverse otherwise.
pub enum HermitianSolver {
    Cholesky(Cholesky),
    Pseudo(CMat),
}

impl HermitianSolver {
    pub fn new(a: &ArrayView2<C64>) -> Result<Self> {
        match Cholesky::new(a) {
            Ok(ch) => Ok(Self::Cholesky(ch)),
            Err(Error::NotPositiveDefinite { .. }) => Ok(Self::Pseudo(pinv_hermitian(a)?)),
            Err(e) => Err(e),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Cholesky(_))
    }

    pub fn solve_mat(&self, b: &ArrayView2<C64>) -> CMat {
        match self {
            Self::Cholesky(ch) => ch.solve_mat(b),
            Self::Pseudo(p) => p.dot(b),
        }
    }

    pub fn solve_vec(&self, b: &ArrayView1<C64>) -> CVec {
        match self {
            Self::Cholesky(ch) => ch.solve_vec(b),
            Self::Pseudo(p) => p.dot(b),
        }
    }
}

/// Schur complement `A_kk - A_ke A_ee^{-1} A_ek` of the Hermitian matrix `a`,
/// eliminating the index set `elim` and keeping `keep` (in that order).
pub fn schur_complement(a: &ArrayView2<C64>, keep: &[usize], elim: &[usize]) -> Result<CMat> {
    let akk = select(a, keep, keep);
    if elim.is_empty() {
        return Ok(hermitian_part(&akk));
    }
    let aee = select(a, elim, elim);
    let aek = select(a, elim, keep);
    let ch = Cholesky::new(&aee.view())?;
    // A_ke A_ee^{-1} A_ek = (L^{-1} A_ek)^H (L^{-1} A_ek)
    let y = ch.solve_lower(&aek.view());
    let s = akk - ct(&y.view()).dot(&y);
    Ok(hermitian_part(&s))
}

/// Stack columns of a block-structured dense matrix: `out[rows_a, cols_a] += blk`.
pub fn add_block(out: &mut CMat, rows: &[usize], cols: &[usize], blk: &ArrayView2<C64>) {
    for (i, &r) in rows.iter().enumerate() {
        for (j, &cc) in cols.iter().enumerate() {
            out[[r, cc]] += blk[[i, j]];
        }
    }
}

/// Horizontal concatenation of column blocks.
pub fn hstack(blocks: &[CMat], nrows: usize) -> CMat {
    let ncols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros((nrows, ncols));
    let mut off = 0;
    for b in blocks {
        out.slice_mut(s![.., off..off + b.ncols()]).assign(b);
        off += b.ncols();
    }
    out
}

/// Smallest and largest eigenvalue of the Hermitian pencil `(A, B)` with `B`
/// positive definite, used by tests and diagnostics.
pub fn pencil_extremes(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Result<(f64, f64)> {
    let ch = Cholesky::new(b)?;
    let x = ch.solve_lower(a);
    let y = ch.solve_lower(&ct(&x.view()).view());
    let (w, _) = eigh(&y.view())?;
    Ok((w[0], w[w.len() - 1]))
}

/// Columns as vectors, for building matrices from operator applications.
pub fn columns_to_mat(cols: Vec<CVec>, nrows: usize) -> CMat {
    let mut out = CMat::zeros((nrows, cols.len()));
    for (j, col) in cols.into_iter().enumerate() {
        out.column_mut(j).assign(&col);
    }
    out
}

/// Sums of squares of each column (diagnostics).
pub fn column_norms(a: &ArrayView2<C64>) -> Array1<f64> {
    a.map_axis(Axis(0), |col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}
