//! Small dense complex linear algebra: the Gram solve behind the zero-forcing
//! combiner, Hermitian eigendecomposition and a few helpers for the waveform
//! checks. Matrices here are at most a few dozen entries on a side.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use thiserror::Error;

/// Pivot threshold (relative to the largest Gram diagonal) below which a
/// Gram matrix is treated as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("numerically singular Gram matrix (pivot ratio {ratio:e})")]
    Singular { ratio: f64 },
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major complex matrix with fixed dimensions.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, " ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Copy with column `c` removed.
    pub fn without_column(&self, c: usize) -> Self {
        assert!(self.cols > 1 && c < self.cols);
        Self::from_fn(self.rows, self.cols - 1, |r, j| {
            let src = if j < c { j } else { j + 1 };
            self[(r, src)]
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest |A_ij − conj(A_ji)|.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs.data[k * rhs.cols + c];
                }
            }
        }
        out
    }
}

/// Inner product a^H b.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix,
/// stored row-major. Fails when a pivot drops below
/// `SINGULAR_PIVOT_RATIO` times the largest diagonal entry.
fn cholesky(g: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let n = g.rows();
    let scale = (0..n).map(|i| g[(i, i)].re).fold(0.0, f64::max);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > SINGULAR_PIVOT_RATIO * scale) {
            return Err(LinalgError::Singular {
                ratio: if scale > 0.0 { d / scale } else { 0.0 },
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves (L L^H) x = b in place.
fn cholesky_solve(l: &ComplexMatrix, b: &mut [Complex64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)].re;
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * b[k];
        }
        b[i] = s / l[(i, i)].re;
    }
}

/// A (A^H A)^{-1} for a tall matrix with full column rank.
pub fn gram_solve(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if a.cols() > a.rows() {
        return Err(LinalgError::Dimension(format!(
            "gram_solve needs cols <= rows, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let gram = &a.adjoint() * a;
    let l = cholesky(&gram)?;
    let m = a.cols();
    // (A^H A)^{-1} column by column
    let mut inv = ComplexMatrix::zeros(m, m);
    let mut e = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        e.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        e[c] = Complex64::new(1.0, 0.0);
        cholesky_solve(&l, &mut e);
        for r in 0..m {
            inv[(r, c)] = e[r];
        }
    }
    Ok(a * &inv)
}

/// Zero-forcing combiner for group `k` (1-based) of a channel matrix laid out
/// as [h_1 h_1' h_2 h_2' ... h_K h_K'].
///
/// The combiner nulls every column except the near user h_k and the
/// group's own far user h_k', and is normalised so that w^H h_k = 1/‖p_k‖ > 0.
pub fn zf_combiner(h: &ComplexMatrix, k: usize) -> Result<Vec<Complex64>, LinalgError> {
    let groups = h.cols() / 2;
    if h.cols() % 2 != 0 || k == 0 || k > groups {
        return Err(LinalgError::Dimension(format!(
            "group {k} invalid for a {}-column channel",
            h.cols()
        )));
    }
    if h.rows() < h.cols() {
        return Err(LinalgError::Dimension(format!(
            "zero forcing needs N >= 2K, got N={} 2K={}",
            h.rows(),
            h.cols()
        )));
    }
    let hk = h.without_column(2 * k - 1);
    let p = gram_solve(&hk)?.column(2 * k - 2);
    let nrm = norm(&p);
    Ok(p.into_iter().map(|z| z / nrm).collect())
}

/// Eigendecomposition R = V diag(values) V^H of a Hermitian matrix, with
/// eigenvalues sorted in descending order and eigenvectors as columns of V.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// V diag(values) V^H.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diagonal(&self.values);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }

    /// Hermitian square root V diag(√values) V^H (negative round-off clamped).
    pub fn sqrt_matrix(&self) -> ComplexMatrix {
        let roots: Vec<f64> = self.values.iter().map(|v| v.max(0.0).sqrt()).collect();
        let d = ComplexMatrix::from_diagonal(&roots);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }

    /// Diagonal case: eigenvalues given directly, identity eigenbasis.
    pub fn from_eigenvalues(values: &[f64]) -> Self {
        Self {
            values: values.to_vec(),
            vectors: ComplexMatrix::identity(values.len()),
        }
    }
}

/// Hermitian tolerance accepted by `hermitian_eigendecomposition`.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn hermitian_eigendecomposition(r: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    let defect = r.hermitian_defect();
    if defect > HERMITIAN_TOL * r.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian { asymmetry: defect });
    }
    let n = r.rows();
    let m = nalgebra::DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        // symmetrise to exactly Hermitian before handing over
        0.5 * (r[(i, j)] + r[(j, i)].conj())
    });
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |row, c| eig.eigenvectors[(row, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// log₂ det(I + A) for Hermitian positive semidefinite A, via Cholesky of I + A.
pub fn log2_det_identity_plus(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::Dimension("log2_det_identity_plus needs a square matrix".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let l = cholesky(&m)?;
    Ok((0..n).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}
