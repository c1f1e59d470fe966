//! Latent posterior `p(z | x_v, m)` under a missingness mask: exact, and the
//! full-covariance (FCA) and scaled-covariance (SCA) approximations.
//!
//! Every method takes a full-length data vector plus a [`Mask`]; entries in
//! missing slots are never read.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, spd_inverse};
use crate::masking::Mask;
use crate::model::FactorModel;

/// Gaussian over the K latent dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianPosterior {
    /// `N(0, I_K)`.
    pub fn prior(latent_dim: usize) -> Self {
        Self {
            mean: DVector::zeros(latent_dim),
            covariance: DMatrix::identity(latent_dim, latent_dim),
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn determinant(&self) -> f64 {
        self.covariance.determinant()
    }
}

/// Inference for one model, holding the mask-independent quantities
/// (`Ψ⁻¹W`, `P_{z|x}`, `Σ_{z|x}`) computed once at construction.
#[derive(Debug, Clone)]
pub struct LatentInference {
    model: FactorModel,
    scaled_loading: DMatrix<f64>,
    full_precision: DMatrix<f64>,
    full_covariance: DMatrix<f64>,
}

impl LatentInference {
    pub fn new(model: FactorModel) -> Result<Self> {
        let scaled_loading = model.scaled_loading();
        let full_precision = model.full_precision();
        let full_covariance =
            spd_inverse(&cholesky(full_precision.clone(), "full-data precision")?);
        Ok(Self {
            model,
            scaled_loading,
            full_precision,
            full_covariance,
        })
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    /// `P_{z|x} = I_K + WᵀΨ⁻¹W`.
    pub fn full_precision(&self) -> &DMatrix<f64> {
        &self.full_precision
    }

    /// `Σ_{z|x} = P_{z|x}⁻¹`.
    pub fn full_covariance(&self) -> &DMatrix<f64> {
        &self.full_covariance
    }

    /// The complete-data encoder as an affine map `z̄ = A x + b`:
    /// `A = Σ_{z|x} WᵀΨ⁻¹`, `b = −A μ`.
    pub fn exact_encoder(&self) -> (DMatrix<f64>, DVector<f64>) {
        let weights = &self.full_covariance * self.scaled_loading.transpose();
        let bias = -(&weights * self.model.mean());
        (weights, bias)
    }

    fn check_inputs(&self, x: &DVector<f64>, mask: &Mask) -> Result<()> {
        let d = self.model.data_dim();
        Error::check_len("mask", d, mask.len())?;
        Error::check_len("data vector", d, x.len())?;
        if mask.observed_indices().any(|j| !x[j].is_finite()) {
            return Err(Error::NonFinite("observed data"));
        }
        Ok(())
    }

    /// `I_K + W_vᵀ Ψ_v⁻¹ W_v`, formed from the observed rows only.
    pub fn exact_precision(&self, mask: &Mask) -> Result<DMatrix<f64>> {
        Error::check_len("mask", self.model.data_dim(), mask.len())?;
        let k = self.model.latent_dim();
        let observed: Vec<usize> = mask.observed_indices().collect();
        let w_v = self.model.loading().select_rows(&observed);
        let scaled_v = self.scaled_loading.select_rows(&observed);
        Ok(DMatrix::identity(k, k) + linalg::symmetrize(&(w_v.transpose() * scaled_v)))
    }

    /// Exact posterior: `Σ = (I + W_vᵀΨ_v⁻¹W_v)⁻¹`,
    /// `μ_z = Σ W_vᵀΨ_v⁻¹ (x_v − μ_v)`, solved through a Cholesky factor of
    /// the K×K precision.
    pub fn exact_posterior(&self, x: &DVector<f64>, mask: &Mask) -> Result<GaussianPosterior> {
        self.check_inputs(x, mask)?;
        let observed: Vec<usize> = mask.observed_indices().collect();
        let scaled_v = self.scaled_loading.select_rows(&observed);
        let centered_v = DVector::from_iterator(
            observed.len(),
            observed.iter().map(|&j| x[j] - self.model.mean()[j]),
        );
        let rhs = scaled_v.transpose() * centered_v;
        let chol = cholesky(self.exact_precision(mask)?, "posterior precision")?;
        Ok(GaussianPosterior {
            mean: chol.solve(&rhs),
            covariance: spd_inverse(&chol),
        })
    }

    /// Precision accumulated one observed dimension at a time:
    /// `I_K + Σ_j m_j ψ_jj⁻¹ v_j v_jᵀ`.
    pub fn rank1_precision(&self, mask: &Mask) -> Result<DMatrix<f64>> {
        Error::check_len("mask", self.model.data_dim(), mask.len())?;
        let k = self.model.latent_dim();
        let mut precision = DMatrix::identity(k, k);
        for j in mask.observed_indices() {
            let v = self.model.loading().row(j).transpose();
            precision.ger(1.0 / self.model.noise_diag()[j], &v, &v, 1.0);
        }
        Ok(precision)
    }

    /// Same posterior as [`Self::exact_posterior`], built from per-dimension
    /// rank-1 terms and a general (LU) inverse. Kept as an independent route
    /// for cross-checking.
    pub fn exact_posterior_rank1(
        &self,
        x: &DVector<f64>,
        mask: &Mask,
    ) -> Result<GaussianPosterior> {
        self.check_inputs(x, mask)?;
        let precision = self.rank1_precision(mask)?;
        let mut weighted = DVector::zeros(self.model.latent_dim());
        for j in mask.observed_indices() {
            let v = self.model.loading().row(j).transpose();
            let coeff = (x[j] - self.model.mean()[j]) / self.model.noise_diag()[j];
            weighted.axpy(coeff, &v, 1.0);
        }
        let covariance = precision
            .try_inverse()
            .ok_or_else(|| Error::Numerical("rank-1 precision is singular".into()))?;
        let covariance = linalg::symmetrize(&covariance);
        Ok(GaussianPosterior {
            mean: &covariance * weighted,
            covariance,
        })
    }

    /// `x^mi`: observed entries of `x`, model means in missing slots.
    pub fn mean_impute(&self, x: &DVector<f64>, mask: &Mask) -> Result<DVector<f64>> {
        mean_impute_input(&self.model, x, mask)
    }

    /// `WᵀΨ⁻¹ (x^mi − μ)`; missing slots contribute exactly zero.
    fn imputed_statistic(&self, x: &DVector<f64>, mask: &Mask) -> Result<DVector<f64>> {
        self.check_inputs(x, mask)?;
        let centered = self.mean_impute(x, mask)? - self.model.mean();
        Ok(self.scaled_loading.transpose() * centered)
    }

    /// Full covariance approximation: the mask-independent `Σ_{z|x}` in place
    /// of `Σ_{z|x_v}`. With nothing observed the covariance stays `Σ_{z|x}`
    /// rather than reverting to the prior.
    pub fn fca_posterior(&self, x: &DVector<f64>, mask: &Mask) -> Result<GaussianPosterior> {
        let stat = self.imputed_statistic(x, mask)?;
        Ok(GaussianPosterior {
            mean: &self.full_covariance * stat,
            covariance: self.full_covariance.clone(),
        })
    }

    /// `(D_m/D) I_K + (D_v/D) P_{z|x}`.
    pub fn sca_precision(&self, mask: &Mask) -> Result<DMatrix<f64>> {
        let d = self.model.data_dim();
        Error::check_len("mask", d, mask.len())?;
        let k = self.model.latent_dim();
        let visible = mask.n_observed() as f64 / d as f64;
        let missing = mask.n_missing() as f64 / d as f64;
        Ok(DMatrix::identity(k, k) * missing + &self.full_precision * visible)
    }

    /// Scaled covariance approximation: the precision interpolates linearly
    /// between the prior and the complete-data precision by observed
    /// fraction; the mean uses the mean-imputed statistic.
    pub fn sca_posterior(&self, x: &DVector<f64>, mask: &Mask) -> Result<GaussianPosterior> {
        let stat = self.imputed_statistic(x, mask)?;
        let chol = cholesky(self.sca_precision(mask)?, "SCA precision")?;
        Ok(GaussianPosterior {
            mean: chol.solve(&stat),
            covariance: spd_inverse(&chol),
        })
    }

    /// Covariance of the SCA posterior alone (no data needed).
    pub fn sca_covariance(&self, mask: &Mask) -> Result<DMatrix<f64>> {
        Ok(spd_inverse(&cholesky(
            self.sca_precision(mask)?,
            "SCA precision",
        )?))
    }
}

/// Replaces missing entries of `x` by the model means.
pub fn mean_impute_input(
    model: &FactorModel,
    x: &DVector<f64>,
    mask: &Mask,
) -> Result<DVector<f64>> {
    let d = model.data_dim();
    Error::check_len("mask", d, mask.len())?;
    Error::check_len("data vector", d, x.len())?;
    Ok(DVector::from_iterator(
        d,
        (0..d).map(|j| {
            if mask.is_observed(j) {
                x[j]
            } else {
                model.mean()[j]
            }
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn running_example() -> LatentInference {
        let model = FactorModel::isotropic(dmatrix![1.0; 1.0], dvector![0.0, 0.0], 1.0).unwrap();
        LatentInference::new(model).unwrap()
    }

    fn first_only() -> Mask {
        Mask::new(vec![true, false])
    }

    #[test]
    fn exact_running_example() {
        let post = running_example()
            .exact_posterior(&dvector![1.0, f64::NAN], &first_only())
            .unwrap();
        assert!((post.covariance[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((post.mean[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_empty_mask_is_prior() {
        let inf = running_example();
        let post = inf
            .exact_posterior(&dvector![3.0, 4.0], &Mask::all_missing(2))
            .unwrap();
        assert_eq!(post, GaussianPosterior::prior(1));
    }

    #[test]
    fn fca_running_example() {
        let inf = running_example();
        let post = inf
            .fca_posterior(&dvector![1.0, 100.0], &first_only())
            .unwrap();
        assert!((post.covariance[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((post.mean[0] - 1.0 / 3.0).abs() < 1e-15);
        let empty = inf
            .fca_posterior(&dvector![1.0, 1.0], &Mask::all_missing(2))
            .unwrap();
        assert_eq!(empty.mean[0], 0.0);
        assert_eq!(empty.covariance, *inf.full_covariance());
    }

    #[test]
    fn sca_running_example() {
        let inf = running_example();
        assert_eq!(inf.sca_precision(&first_only()).unwrap(), dmatrix![2.0]);
        let post = inf
            .sca_posterior(&dvector![1.0, 0.0], &first_only())
            .unwrap();
        assert!((post.covariance[(0, 0)] - 0.5).abs() < 1e-15);
        let empty = inf
            .sca_posterior(&dvector![1.0, 1.0], &Mask::all_missing(2))
            .unwrap();
        assert_eq!(empty, GaussianPosterior::prior(1));
    }

    #[test]
    fn single_observed_dimension_rank1() {
        let model = FactorModel::new(
            dmatrix![1.0, 2.0; 0.5, -1.0; 3.0, 0.0],
            dvector![0.0, 0.0, 0.0],
            dvector![0.5, 2.0, 4.0],
        )
        .unwrap();
        let inf = LatentInference::new(model).unwrap();
        let mask = Mask::new(vec![false, true, false]);
        let expected = dmatrix![1.0 + 0.25 / 2.0, -0.5 / 2.0; -0.5 / 2.0, 1.0 + 1.0 / 2.0];
        assert_eq!(inf.rank1_precision(&mask).unwrap(), expected);
    }

    #[test]
    fn two_independent_rows_raise_determinant() {
        let model =
            FactorModel::isotropic(dmatrix![1.0, 0.0; 1.0, 1.0], dvector![0.0, 0.0], 1.0).unwrap();
        let inf = LatentInference::new(model).unwrap();
        // I + [1 0;0 0] + [1 1;1 1] = [3 1;1 2], det 5.
        let precision = inf.rank1_precision(&Mask::all_observed(2)).unwrap();
        assert_eq!(precision, dmatrix![3.0, 1.0; 1.0, 2.0]);
        assert!((precision.determinant() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mean_impute_cases() {
        let model = FactorModel::isotropic(dmatrix![1.0; 1.0], dvector![1.0, 2.0], 1.0).unwrap();
        let x = dvector![9.0, 5.0];
        assert_eq!(
            mean_impute_input(&model, &x, &Mask::new(vec![false, true])).unwrap(),
            dvector![1.0, 5.0]
        );
        assert_eq!(
            mean_impute_input(&model, &x, &Mask::all_observed(2)).unwrap(),
            x
        );
        assert_eq!(
            mean_impute_input(&model, &x, &Mask::all_missing(2)).unwrap(),
            dvector![1.0, 2.0]
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let inf = running_example();
        assert!(matches!(
            inf.exact_posterior(&dvector![1.0, 2.0], &Mask::all_observed(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            inf.exact_posterior(&dvector![f64::INFINITY, 2.0], &first_only()),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            inf.sca_posterior(&dvector![1.0], &first_only()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn full_mask_methods_coincide() {
        let model = FactorModel::new(
            dmatrix![1.0, 0.2; -0.3, 0.8; 0.5, 0.5; 0.0, -1.0],
            dvector![0.1, -0.2, 0.3, 0.0],
            dvector![0.3, 0.4, 0.5, 0.6],
        )
        .unwrap();
        let inf = LatentInference::new(model).unwrap();
        let x = dvector![0.4, -1.0, 2.0, 0.7];
        let mask = Mask::all_observed(4);
        let exact = inf.exact_posterior(&x, &mask).unwrap();
        for other in [
            inf.fca_posterior(&x, &mask).unwrap(),
            inf.sca_posterior(&x, &mask).unwrap(),
            inf.exact_posterior_rank1(&x, &mask).unwrap(),
        ] {
            assert!((&other.mean - &exact.mean).amax() < 1e-10);
            assert!((&other.covariance - &exact.covariance).amax() < 1e-10);
        }
        let (a, b) = inf.exact_encoder();
        assert!((&a * &x + b - &exact.mean).amax() < 1e-12);
    }
}
