//! Minimal dense complex linear algebra: column-major matrices, Hermitian
//! rank-1 updates, Cholesky factorization, and triangular solves.
//!
//! Sized for this simulator (matrices up to 64x64); no attempt at BLAS-level
//! performance.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// n x n matrix `s * I`.
    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(s, 0.0));
        }
        m
    }

    /// Build from column vectors; all columns must share one length.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged column set");
            data.extend_from_slice(c);
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[j * self.rows + i] = v;
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `self += alpha * v * v^H` (alpha real). Keeps the matrix exactly
    /// Hermitian by mirroring the computed lower triangle.
    pub fn herm_rank1_update(&mut self, alpha: f64, v: &[C64]) {
        let n = self.rows;
        assert_eq!(self.cols, n, "rank-1 update needs a square matrix");
        assert_eq!(v.len(), n);
        for j in 0..n {
            let vj_conj = v[j].conj();
            // diagonal gets a purely real increment
            let d = self.get(j, j) + C64::new(alpha * v[j].norm_sqr(), 0.0);
            self.set(j, j, d);
            for i in (j + 1)..n {
                let inc = v[i] * vj_conj * alpha;
                let lower = self.get(i, j) + inc;
                self.set(i, j, lower);
                self.set(j, i, lower.conj());
            }
        }
    }

    /// Element-wise sum; dimensions must match.
    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Largest `|A[i][j] - conj(A[j][i])|` over all entries.
    pub fn hermitian_error(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0_f64;
        for j in 0..self.cols {
            for i in 0..self.rows {
                let e = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(e);
            }
        }
        worst
    }

    pub fn trace_real(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).re).sum()
    }

    /// Lower-triangular Cholesky factor L with `A = L * L^H`.
    ///
    /// Requires a Hermitian positive-definite input; fails with a
    /// `Numerical` error when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Result<CMatrix> {
        let n = self.rows;
        assert_eq!(self.cols, n, "cholesky needs a square matrix");
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            // NaN pivots must fail too, hence the negated comparison
            if d.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Numerical(format!(
                    "cholesky pivot {j} not positive ({d:e}); matrix is not positive definite"
                )));
            }
            let ljj = d.sqrt();
            l.set(j, j, C64::new(ljj, 0.0));
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(l)
    }
}

/// Solve `L y = b` for lower-triangular L.
pub fn forward_solve(l: &CMatrix, b: &[C64]) -> Vec<C64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    y
}

/// Solve `L^H x = y` for lower-triangular L.
pub fn backward_solve_herm(l: &CMatrix, y: &[C64]) -> Vec<C64> {
    let n = l.rows();
    assert_eq!(y.len(), n);
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l.get(k, i).conj() * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Solve `A x = b` for Hermitian positive-definite A via Cholesky.
pub fn solve_hermitian(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let l = a.cholesky()?;
    Ok(backward_solve_herm(&l, &forward_solve(&l, b)))
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Inner product `a^H b`.
pub fn dot_herm(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
