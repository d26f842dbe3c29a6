//! A small dense row-major matrix.
//!
//! Weight matrices are stored row-major with `f64` entries, which is also the
//! layout used when models are serialised. Heavy linear algebra (eigenvalues,
//! Cholesky, SVD) converts to `nalgebra` at the call site.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row-major data. Returns `None` if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self * v`
    pub fn mul_vec_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols.max(1))) {
            *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `v^T * self`, i.e. a row vector times the matrix.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (&x, row) in v.iter().zip(self.data.chunks_exact(self.cols.max(1))) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += x * a;
            }
        }
        out
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|x| *x *= k);
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.set(r, c, m[(r, c)]);
            }
        }
        out
    }

    /// Largest eigenvalue modulus. Square matrices only.
    ///
    /// The unbounded QR iteration in `nalgebra` can cycle forever on some
    /// small integer matrices, so the Schur decomposition is capped and
    /// retried on diagonal similarity transforms (same spectrum, different
    /// rounding), with Gelfand's formula as the last resort.
    pub fn spectral_radius(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "spectral radius of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return 0.0;
        }
        let max_iter = 200 * n.max(10);
        for attempt in 0..4u32 {
            let mut m = self.to_dmatrix();
            if attempt > 0 {
                // D M D^-1 with irrational-ish positive weights
                let d: Vec<f64> =
                    (0..n).map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_034 * f64::from(attempt)).fract()).collect();
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] *= d[i] / d[j];
                    }
                }
            }
            if let Some(schur) = Schur::try_new(m, f64::EPSILON, max_iter) {
                return schur.complex_eigenvalues().iter().fold(0.0, |r, z| r.max(z.norm()));
            }
        }
        self.gelfand_radius()
    }

    /// `lim ||A^k||^(1/k)` via 64 normalised squarings.
    fn gelfand_radius(&self) -> f64 {
        let mut b = self.to_dmatrix();
        let mut log_scale = 0.0;
        let mut power = 1.0;
        for _ in 0..64 {
            let norm = b.norm();
            if norm == 0.0 {
                return 0.0;
            }
            b /= norm;
            log_scale += norm.ln() / power;
            b = &b * &b;
            power *= 2.0;
        }
        (log_scale + b.norm().ln() / power).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let m = Matrix::from_row_major(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.row(0), &[1., 2., 3.]);
        let mut out = vec![0.0; 2];
        m.mul_vec_add(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, vec![-2.0, -2.0]);
        assert_eq!(m.vec_mul(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(Matrix::from_dmatrix(&m.to_dmatrix()), m);
        assert!(Matrix::from_row_major(2, 2, vec![1.0]).is_none());
    }

    #[test]
    fn spectral_radius_of_rotation_is_one() {
        // Complex eigenvalues ±i.
        let m = Matrix::from_row_major(2, 2, vec![0., -1., 1., 0.]).unwrap();
        assert!((m.spectral_radius() - 1.0).abs() < 1e-12);
        let d = Matrix::from_row_major(2, 2, vec![0.3, 0., 0., -0.7]).unwrap();
        assert!((d.spectral_radius() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_terminates_on_cycling_sign_mask() {
        // eigenvalues -1/2 ± i sqrt(7)/2 and 0; plain QR iteration never converges
        let m = Matrix::from_row_major(3, 3, vec![0., -1., 0., 1., -1., 1., 0., -1., 0.]).unwrap();
        assert!((m.spectral_radius() - 2f64.sqrt()).abs() < 1e-12);
        assert!((m.gelfand_radius() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn gelfand_radius_agrees_with_eigenvalues() {
        let m = Matrix::from_row_major(3, 3, vec![0.2, -0.5, 0.1, 0.4, 0.3, -0.2, 0.0, 0.6, -0.1]).unwrap();
        assert!((m.gelfand_radius() - m.spectral_radius()).abs() < 1e-9);
        assert_eq!(Matrix::zeros(3, 3).gelfand_radius(), 0.0);
        // nilpotent
        let n = Matrix::from_row_major(2, 2, vec![0., 1., 0., 0.]).unwrap();
        assert_eq!(n.gelfand_radius(), 0.0);
    }
}
