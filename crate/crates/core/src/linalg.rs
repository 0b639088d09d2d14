//! Small dense and row-sparse complex linear algebra.
//!
//! Vectors are rows; `⟨x, y⟩ = Σ x_i conj(y_i)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CVector = Vec<Complex64>;

pub fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

pub fn conj(x: &[Complex64]) -> CVector {
    x.iter().map(|z| z.conj()).collect()
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == zero() {
                    continue;
                }
                let row = other.row(l);
                let target = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (t, b) in target.iter_mut().zip(row) {
                    *t += a * b;
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, x: &[Complex64]) -> CVector {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![zero(); self.cols];
        for (i, a) in x.iter().enumerate() {
            if *a == zero() {
                continue;
            }
            for (t, b) in out.iter_mut().zip(self.row(i)) {
                *t += a * b;
            }
        }
        out
    }

    /// `max |A_{ij} - s δ_{ij}|`.
    pub fn scaled_identity_residual(&self, s: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { s } else { 0.0 };
                worst = worst.max((self.get(i, j) - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        max_abs_diff(&self.data, &other.data)
    }
}

/// Matrix stored as per-row lists of `(column, value)`, 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRows {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseRows {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows.len(), self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m.set(i, j, m.get(i, j) + v);
            }
        }
        m
    }

    /// `x · A` for a row vector `x`.
    pub fn left_apply(&self, x: &[Complex64]) -> CVector {
        assert_eq!(x.len(), self.rows.len());
        let mut out = vec![zero(); self.cols];
        for (a, row) in x.iter().zip(&self.rows) {
            if *a == zero() {
                continue;
            }
            for &(j, v) in row {
                out[j] += a * v;
            }
        }
        out
    }

    /// `y · A^*`: entry `i` is `⟨y, row_i⟩`.
    pub fn left_apply_adjoint(&self, y: &[Complex64]) -> CVector {
        assert_eq!(y.len(), self.cols);
        self.rows.iter().map(|row| row.iter().map(|&(j, v)| y[j] * v.conj()).sum()).collect()
    }

    /// Column lists `(row, value)`.
    pub fn columns(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut cols = vec![Vec::new(); self.cols];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                cols[j].push((i, v));
            }
        }
        cols
    }

    /// `max |(A A^*)_{ij} - δ_{ij}|`, accumulated column by column.
    pub fn row_gram_residual(&self) -> f64 {
        let n = self.rows.len();
        let mut gram: std::collections::HashMap<(usize, usize), Complex64> = std::collections::HashMap::new();
        for col in self.columns() {
            for &(i, a) in &col {
                for &(l, b) in &col {
                    *gram.entry((i, l)).or_insert_with(zero) += a * b.conj();
                }
            }
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            let d = gram.get(&(i, i)).copied().unwrap_or_else(zero);
            worst = worst.max((d - 1.0).norm());
        }
        for (&(i, l), v) in &gram {
            if i != l {
                worst = worst.max(v.norm());
            }
        }
        worst
    }
}

/// Modified Gram-Schmidt with a second orthogonalization pass.
///
/// Each candidate is orthogonalized against `basis` and appended when its
/// remaining norm exceeds `tol`. Returns how many candidates were accepted.
pub fn extend_orthonormal(basis: &mut Vec<CVector>, candidates: impl IntoIterator<Item = CVector>, tol: f64, limit: usize) -> usize {
    let mut accepted = 0;
    for mut v in candidates {
        if accepted == limit {
            break;
        }
        for _ in 0..2 {
            for q in basis.iter() {
                let c = inner(&v, q);
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= c * b;
                }
            }
        }
        let n = norm(&v);
        if n > tol {
            for a in v.iter_mut() {
                *a /= n;
            }
            basis.push(v);
            accepted += 1;
        }
    }
    accepted
}

/// Rank of a set of vectors under [`extend_orthonormal`].
pub fn rank(vectors: impl IntoIterator<Item = CVector>, tol: f64) -> usize {
    let mut basis = Vec::new();
    extend_orthonormal(&mut basis, vectors, tol, usize::MAX)
}

/// `max |⟨q_i, q_j⟩ - δ_{ij}|`.
pub fn orthonormality_residual(vectors: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(a, b) - target).norm());
        }
    }
    worst
}
