use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ReservoirError, Result};
use crate::matrix::Matrix;
use crate::seed::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutMode {
    /// `beta = (I/C + H^T H)^-1 H^T T`
    Ridge,
    /// `beta = H^+ T`
    Pseudoinverse,
    /// Seeded uniform `[-1, 1]` weights; never sees labels.
    Random,
}

/// Linear map from concatenated reservoir states to category scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// `hidden_dim x n_categories`
    pub beta: Matrix,
    pub ridge_c: f64,
    pub mode: ReadoutMode,
}

impl ReadoutModel {
    pub fn n_categories(&self) -> usize {
        self.beta.cols()
    }

    pub fn scores(&self, h: &[f64]) -> Vec<f64> {
        self.beta.vec_mul(h)
    }
}

/// Singular values at or below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-12;

fn one_hot(labels: &[usize], k: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(labels.len(), k);
    for (i, &l) in labels.iter().enumerate() {
        t[(i, l)] = 1.0;
    }
    t
}

/// Fits the readout on hidden states `h` (`n x M`) against one-hot targets.
pub fn fit_readout(
    h: &Matrix,
    labels: &[usize],
    n_categories: usize,
    ridge_c: f64,
    mode: ReadoutMode,
) -> Result<ReadoutModel> {
    if h.rows() == 0 {
        return Err(ReservoirError::EmptyTraining);
    }
    if labels.len() != h.rows() {
        return Err(ReservoirError::DimensionMismatch { expected: h.rows(), got: labels.len() });
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= n_categories) {
        return Err(ReservoirError::LabelOutOfRange(l));
    }
    let hm = h.to_dmatrix();
    let t = one_hot(labels, n_categories);
    let beta = match mode {
        ReadoutMode::Ridge => {
            if !(ridge_c > 0.0) || !ridge_c.is_finite() {
                return Err(ReservoirError::InvalidRidge(ridge_c));
            }
            let m = hm.ncols();
            let a = hm.tr_mul(&hm) + DMatrix::<f64>::identity(m, m) / ridge_c;
            let b = hm.tr_mul(&t);
            match a.clone().cholesky() {
                Some(ch) => ch.solve(&b),
                // Only reachable when C is so large the system is singular in
                // floating point; fall back to a least-squares solve.
                None => {
                    let svd = a.svd(true, true);
                    let eps = PINV_RELATIVE_TOLERANCE * svd.singular_values.max();
                    svd.solve(&b, eps).map_err(|_| ReservoirError::SingularSystem)?
                }
            }
        }
        ReadoutMode::Pseudoinverse => {
            let m = hm.ncols();
            let svd = hm.svd(true, true);
            let sigma_max = svd.singular_values.max();
            if sigma_max == 0.0 {
                DMatrix::zeros(m, n_categories)
            } else {
                svd.solve(&t, PINV_RELATIVE_TOLERANCE * sigma_max).map_err(|_| ReservoirError::SingularSystem)?
            }
        }
        ReadoutMode::Random => return Err(ReservoirError::InvalidReadoutMode),
    };
    if beta.iter().any(|x| !x.is_finite()) {
        return Err(ReservoirError::SingularSystem);
    }
    Ok(ReadoutModel { beta: Matrix::from_dmatrix(&beta), ridge_c, mode })
}

/// Label-free readout used by weight-agnostic evaluation.
pub fn random_readout(hidden_dim: usize, n_categories: usize, seed: u64) -> ReadoutModel {
    let mut r = rng(seed);
    let data = (0..hidden_dim * n_categories).map(|_| r.random_range(-1.0..=1.0)).collect();
    ReadoutModel {
        beta: Matrix::from_row_major(hidden_dim, n_categories, data).expect("shape"),
        ridge_c: 0.0,
        mode: ReadoutMode::Random,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_pseudoinverse() {
        let r = fit_readout(&Matrix::identity(2), &[0, 1], 2, 1.0, ReadoutMode::Pseudoinverse).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((r.beta.get(i, j) - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_hidden_matrix_is_defined() {
        let r = fit_readout(&Matrix::zeros(3, 2), &[0, 1, 0], 2, 1.0, ReadoutMode::Pseudoinverse).unwrap();
        assert!(r.beta.data().iter().all(|&x| x == 0.0));
        let r = fit_readout(&Matrix::zeros(3, 2), &[0, 1, 0], 2, 1.0, ReadoutMode::Ridge).unwrap();
        assert!(r.beta.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn errors() {
        let h = Matrix::identity(2);
        assert!(matches!(fit_readout(&h, &[0, 1], 2, 0.0, ReadoutMode::Ridge), Err(ReservoirError::InvalidRidge(_))));
        assert!(matches!(fit_readout(&h, &[0, 5], 2, 1.0, ReadoutMode::Ridge), Err(ReservoirError::LabelOutOfRange(5))));
        assert!(fit_readout(&h, &[0], 2, 1.0, ReadoutMode::Ridge).is_err());
        assert!(fit_readout(&Matrix::zeros(0, 2), &[], 2, 1.0, ReadoutMode::Ridge).is_err());
    }

    #[test]
    fn random_readout_is_seeded() {
        assert_eq!(random_readout(4, 3, 9), random_readout(4, 3, 9));
        assert_ne!(random_readout(4, 3, 9), random_readout(4, 3, 10));
    }
}
