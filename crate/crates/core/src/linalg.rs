//! Small dense linear-algebra helpers shared by fitting and inference.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn cholesky(precision: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(precision)
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Inverse of a symmetric positive-definite matrix through its Cholesky
/// factor, symmetrized to remove round-off asymmetry.
pub fn spd_inverse(chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    symmetrize(&chol.inverse())
}

/// Eigendecomposition of a symmetric matrix with a canonical ordering:
/// eigenvalues non-increasing (stable with respect to the solver's order on
/// ties) and every eigenvector signed so that its largest-magnitude entry is
/// positive (first such entry on ties).
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to eigendecomposition"));
    }
    let eigen = m.clone().symmetric_eigen();
    let n = eigen.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let values = DVector::from_iterator(n, order.iter().map(|&i| eigen.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        let mut column = eigen.eigenvectors.column(src).into_owned();
        let mut pivot = 0;
        for (i, v) in column.iter().enumerate() {
            if v.abs() > column[pivot].abs() {
                pivot = i;
            }
        }
        if column[pivot] < 0.0 {
            column.neg_mut();
        }
        vectors.set_column(dst, &column);
    }
    Ok((values, vectors))
}

/// Neumaier-compensated summation; the result does not depend on how large
/// and small terms are interleaved to within a few ulps.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}
