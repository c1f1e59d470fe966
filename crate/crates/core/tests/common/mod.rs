#![allow(dead_code)]

use famiss::{FactorModel, GaussianPosterior, Mask};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn random_model<R: Rng>(rng: &mut R, d: usize, k: usize) -> FactorModel {
    let loading = DMatrix::from_fn(d, k, |_, _| StandardNormal.sample(rng));
    let mean = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let noise = DVector::from_fn(d, |_, _| rng.random_range(0.05..2.0));
    FactorModel::new(loading, mean, noise).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        2.0 * v
    })
}

pub fn random_mask<R: Rng>(rng: &mut R, d: usize) -> Mask {
    let p = rng.random_range(0.0..1.0);
    Mask::new((0..d).map(|_| rng.random::<f64>() >= p).collect())
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    a.qr().q()
}

/// Conditions the joint Gaussian of `(z, x)` on the observed block of `x`:
/// `Cov(z, x) = [[I, Wᵀ], [W, WWᵀ + Ψ]]`. Uses a general LU inverse of the
/// D_v×D_v marginal covariance and never forms a latent precision.
pub fn joint_conditioning_oracle(
    model: &FactorModel,
    x: &DVector<f64>,
    mask: &Mask,
) -> GaussianPosterior {
    let k = model.latent_dim();
    let observed: Vec<usize> = mask.observed_indices().collect();
    if observed.is_empty() {
        return GaussianPosterior::prior(k);
    }
    let w_v = model.loading().select_rows(&observed);
    let psi_v = DMatrix::from_diagonal(&model.noise_diag().select_rows(&observed));
    let cov_vv = &w_v * w_v.transpose() + psi_v;
    let inv = cov_vv
        .try_inverse()
        .expect("marginal covariance invertible");
    let gain = w_v.transpose() * inv;
    let residual = DVector::from_iterator(
        observed.len(),
        observed.iter().map(|&j| x[j] - model.mean()[j]),
    );
    GaussianPosterior {
        mean: &gain * residual,
        covariance: DMatrix::identity(k, k) - &gain * w_v,
    }
}

/// Per-pixel predictive variance `v_jᵀ Σ v_j + ψ_jj`.
pub fn predictive_variance(model: &FactorModel, covariance: &DMatrix<f64>, j: usize) -> f64 {
    let v = model.loading().row(j).transpose();
    (v.transpose() * covariance * &v)[(0, 0)] + model.noise_diag()[j]
}
