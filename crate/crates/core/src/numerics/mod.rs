//! Small dense complex linear algebra used by the beamformers.
//!
//! Everything here is sized for antenna arrays (N ≤ 64), stored row-major,
//! and immutable once built.

mod evd;
mod solve;

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

pub use evd::{hermitian_evd, EvdResult};
pub use solve::{inv_by_lemma, inverse, solve};
pub(crate) use solve::solve_many;

pub use num_complex::Complex64 as Cplx;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi sweeps did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { pivot: f64, column: usize },
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Complex column vector with a fixed, non-zero length.
#[derive(Clone, PartialEq)]
pub struct CVec(Vec<Cplx>);

impl CVec {
    pub fn new(entries: Vec<Cplx>) -> Self {
        assert!(!entries.is_empty(), "CVec must have at least one entry");
        CVec(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Cplx::new(0.0, 0.0); n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> Cplx) -> Self {
        Self::new((0..n).map(f).collect())
    }

    /// ⟨self, other⟩ = Σ conj(self_i)·other_i
    pub fn dot(&self, other: &[Cplx]) -> Cplx {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        self.0.iter().zip(other).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: Cplx) -> CVec {
        CVec(self.0.iter().map(|z| z * s).collect())
    }

    pub fn into_inner(self) -> Vec<Cplx> {
        self.0
    }
}

impl Deref for CVec {
    type Target = [Cplx];
    fn deref(&self) -> &[Cplx] {
        &self.0
    }
}

impl DerefMut for CVec {
    fn deref_mut(&mut self) -> &mut [Cplx] {
        &mut self.0
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Cplx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Cplx::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Cplx::new(1.0, 0.0) } else { Cplx::new(0.0, 0.0) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Cplx>) -> Self {
        assert_eq!(data.len(), rows * cols, "from_row_major: entry count");
        CMat { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVec]) -> Self {
        assert!(!columns.is_empty(), "from_columns: no columns");
        let rows = columns[0].len();
        assert!(columns.iter().all(|c| c.len() == rows), "from_columns: ragged columns");
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { Cplx::new(values[i], 0.0) } else { Cplx::new(0.0, 0.0) })
    }

    /// a·bᴴ
    pub fn outer(a: &[Cplx], b: &[Cplx]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Cplx] {
        &self.data
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn adjoint(&self) -> CMat {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Cplx::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Cplx]) -> CVec {
        assert_eq!(self.cols, x.len(), "matvec: dimension");
        CVec::from_fn(self.rows, |i| {
            self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    /// xᴴ·A·y
    pub fn quad_form(&self, x: &[Cplx], y: &[Cplx]) -> Cplx {
        let ay = self.matvec(y);
        x.iter().zip(ay.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        self.add(&other.scale(Cplx::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Cplx) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.scale(Cplx::new(s, 0.0))
    }

    pub fn add_diagonal(&self, d: f64) -> CMat {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] += d;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Cplx {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest |A_ij − conj(A_ji)|.
    pub fn hermitian_asymmetry(&self) -> f64 {
        assert!(self.is_square(), "hermitian_asymmetry: non-square");
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_asymmetry() <= tol
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "max_abs_diff: shape");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Cplx;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_and_quad_form_agree() {
        let a = CVec::new(vec![Cplx::new(1.0, 2.0), Cplx::new(-0.5, 0.25)]);
        let m = CMat::outer(&a, &a);
        let q = m.quad_form(&a, &a);
        let expected = a.norm_sqr() * a.norm_sqr();
        assert!((q.re - expected).abs() < 1e-12 && q.im.abs() < 1e-12);
        assert!(m.is_hermitian(1e-14));
    }

    #[test]
    fn adjoint_of_product() {
        let a = CMat::from_fn(2, 3, |i, j| Cplx::new(i as f64, j as f64 + 1.0));
        let b = CMat::from_fn(3, 2, |i, j| Cplx::new(j as f64 - 1.0, i as f64));
        let lhs = a.matmul(&b).adjoint();
        let rhs = b.adjoint().matmul(&a.adjoint());
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    #[should_panic]
    fn empty_vector_rejected() {
        CVec::new(Vec::new());
    }
}
