//! The linear-Gaussian generative model `x = W z + μ + ε`, with
//! `z ~ N(0, I_K)` and `ε ~ N(0, Ψ)` for diagonal `Ψ`, plus its closed-form
//! maximum-likelihood PPCA fit.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, sorted_symmetric_eigen};
use crate::rng;

/// Factor-analysis model. PPCA is the special case of a constant
/// `noise_diag`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    loading: DMatrix<f64>,
    mean: DVector<f64>,
    noise_diag: DVector<f64>,
}

impl FactorModel {
    pub fn new(
        loading: DMatrix<f64>,
        mean: DVector<f64>,
        noise_diag: DVector<f64>,
    ) -> Result<Self> {
        let (d, k) = loading.shape();
        if d == 0 || k == 0 {
            return Err(Error::invalid(format!(
                "loading matrix must be at least 1x1, got {d}x{k}"
            )));
        }
        Error::check_len("mean", d, mean.len())?;
        Error::check_len("noise_diag", d, noise_diag.len())?;
        if loading.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loading"));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean"));
        }
        if noise_diag.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::invalid("noise variances must be finite and > 0"));
        }
        Ok(Self {
            loading,
            mean,
            noise_diag,
        })
    }

    /// PPCA model with `Ψ = σ² I`.
    pub fn isotropic(loading: DMatrix<f64>, mean: DVector<f64>, sigma2: f64) -> Result<Self> {
        let d = loading.nrows();
        Self::new(loading, mean, DVector::from_element(d, sigma2))
    }

    /// `W`, D×K. Row `j` is the loading vector of data dimension `j`.
    pub fn loading(&self) -> &DMatrix<f64> {
        &self.loading
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Diagonal of `Ψ`.
    pub fn noise_diag(&self) -> &DVector<f64> {
        &self.noise_diag
    }

    pub fn data_dim(&self) -> usize {
        self.loading.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.loading.ncols()
    }

    /// `Ψ⁻¹ W`.
    pub fn scaled_loading(&self) -> DMatrix<f64> {
        let mut scaled = self.loading.clone();
        for (mut row, psi) in scaled.row_iter_mut().zip(self.noise_diag.iter()) {
            row /= *psi;
        }
        scaled
    }

    /// Complete-data posterior precision `I_K + Wᵀ Ψ⁻¹ W`.
    pub fn full_precision(&self) -> DMatrix<f64> {
        let k = self.latent_dim();
        let gram = self.loading.transpose() * self.scaled_loading();
        DMatrix::identity(k, k) + linalg::symmetrize(&gram)
    }

    /// Diagonal of the marginal data covariance `W Wᵀ + Ψ`.
    pub fn marginal_variance(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.data_dim(),
            self.loading
                .row_iter()
                .zip(self.noise_diag.iter())
                .map(|(row, psi)| row.norm_squared() + psi),
        )
    }

    /// Draws `count` rows `W z + μ + ε`. For each row the K latent normals
    /// are drawn first, then the D noise normals, from one seeded stream.
    pub fn sample(&self, count: usize, seed: u64) -> DMatrix<f64> {
        let (d, k) = self.loading.shape();
        let noise_std = self.noise_diag.map(f64::sqrt);
        let mut rng = rng::seeded(seed);
        let mut out = DMatrix::zeros(count, d);
        let mut z = DVector::zeros(k);
        for n in 0..count {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let mut x = &self.loading * &z + &self.mean;
            for (xj, sj) in x.iter_mut().zip(noise_std.iter()) {
                let eps: f64 = StandardNormal.sample(&mut rng);
                *xj += sj * eps;
            }
            out.set_row(n, &x.transpose());
        }
        out
    }

    /// Rotates the factors so that the complete-data posterior covariance is
    /// diagonal. Returns the rotated model and the orthogonal `U` with
    /// `W̃ = W U`.
    ///
    /// The columns of `U` are ordered by descending posterior variance
    /// (ascending precision) and signed so their largest-magnitude entry is
    /// positive.
    pub fn rotate_to_diagonal(&self) -> Result<(FactorModel, DMatrix<f64>)> {
        let gram = self.loading.transpose() * self.scaled_loading();
        let (values, vectors) = sorted_symmetric_eigen(&linalg::symmetrize(&gram))?;
        // Largest gram eigenvalue first; reverse for descending covariance.
        let k = values.len();
        let mut rotation = DMatrix::zeros(k, k);
        for i in 0..k {
            rotation.set_column(i, &vectors.column(k - 1 - i));
        }
        let rotated = FactorModel {
            loading: &self.loading * &rotation,
            mean: self.mean.clone(),
            noise_diag: self.noise_diag.clone(),
        };
        Ok((rotated, rotation))
    }
}

/// Spectrum-level facts about a PPCA fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    /// Sample-covariance eigenvalues, non-increasing.
    pub eigenvalues: DVector<f64>,
    /// Maximum-likelihood residual variance: mean of the discarded
    /// eigenvalues.
    pub sigma2: f64,
    /// Fraction of total variance carried by the retained components.
    pub explained_fraction: f64,
    /// Retained components whose `λ_i − σ²` came out negative in floating
    /// point and were clamped to zero.
    pub clamped_components: Vec<usize>,
}

/// Centered sample covariance spectrum of a complete data matrix; computing
/// it is the expensive part of a PPCA fit, so it is kept for choosing K.
#[derive(Debug, Clone)]
pub struct CovarianceSpectrum {
    mean: DVector<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl CovarianceSpectrum {
    /// Eigendecomposes the maximum-likelihood (divide by N) sample
    /// covariance of the rows of `data`.
    pub fn from_data(data: &DMatrix<f64>) -> Result<Self> {
        let (n, d) = data.shape();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 rows, got {n}")));
        }
        if d == 0 {
            return Err(Error::invalid("data has no columns"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training data"));
        }
        let mean = data.row_mean().transpose();
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let covariance = linalg::symmetrize(&(centered.transpose() * &centered)) / n as f64;
        let (eigenvalues, eigenvectors) = sorted_symmetric_eigen(&covariance)?;
        Ok(Self {
            mean,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Closed-form ML PPCA with `latent_dim` components.
    pub fn ppca(&self, latent_dim: usize) -> Result<(FactorModel, FitDiagnostics)> {
        let d = self.eigenvalues.len();
        let k = latent_dim;
        if k == 0 || k >= d {
            return Err(Error::invalid(format!(
                "latent dimension must satisfy 1 <= K < D = {d}, got {k}"
            )));
        }
        let top = self.eigenvalues[0];
        let floor = top.max(0.0) * d as f64 * f64::EPSILON;
        let positive = self.eigenvalues.iter().filter(|&&l| l > floor).count();
        if positive < k {
            return Err(Error::Degenerate(format!(
                "sample covariance has {positive} positive eigenvalues, fewer than K = {k}"
            )));
        }

        let tail = &self.eigenvalues.as_slice()[k..];
        let sigma2 = linalg::compensated_sum(tail.iter().copied()) / (d - k) as f64;
        if sigma2 <= floor {
            return Err(Error::Degenerate(format!(
                "residual variance is {sigma2}; data lie in a {k}-dimensional subspace"
            )));
        }

        let mut clamped_components = Vec::new();
        let mut loading = DMatrix::zeros(d, k);
        for i in 0..k {
            let excess = self.eigenvalues[i] - sigma2;
            if excess < 0.0 {
                clamped_components.push(i);
            }
            let scale = excess.max(0.0).sqrt();
            loading.set_column(i, &(self.eigenvectors.column(i) * scale));
        }

        let total = linalg::compensated_sum(self.eigenvalues.iter().map(|l| l.max(0.0)));
        let kept = linalg::compensated_sum(self.eigenvalues.iter().take(k).map(|l| l.max(0.0)));
        let diagnostics = FitDiagnostics {
            eigenvalues: self.eigenvalues.clone(),
            sigma2,
            explained_fraction: (kept / total).clamp(0.0, 1.0),
            clamped_components,
        };
        let model = FactorModel::isotropic(loading, self.mean.clone(), sigma2)?;
        Ok((model, diagnostics))
    }
}

/// Fits PPCA by maximum likelihood from complete data.
pub fn fit_ppca(data: &DMatrix<f64>, latent_dim: usize) -> Result<(FactorModel, FitDiagnostics)> {
    if latent_dim >= data.ncols() {
        return Err(Error::invalid(format!(
            "latent dimension {latent_dim} must be below data dimension {}",
            data.ncols()
        )));
    }
    CovarianceSpectrum::from_data(data)?.ppca(latent_dim)
}

/// Smallest K whose leading eigenvalues carry at least `target_fraction` of
/// the total.
pub fn select_latent_dim(eigenvalues: &[f64], target_fraction: f64) -> Result<usize> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "target fraction must lie in (0, 1], got {target_fraction}"
        )));
    }
    if eigenvalues.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
        return Err(Error::invalid(
            "eigenvalues must be finite and non-negative",
        ));
    }
    let total = linalg::compensated_sum(eigenvalues.iter().copied());
    if total <= 0.0 {
        return Err(Error::Degenerate("spectrum is identically zero".into()));
    }
    let mut cumulative = Vec::with_capacity(eigenvalues.len());
    for (i, _) in eigenvalues.iter().enumerate() {
        cumulative.push(linalg::compensated_sum(eigenvalues[..=i].iter().copied()));
    }
    Ok(cumulative
        .iter()
        .position(|&c| c / total >= target_fraction)
        .map_or(eigenvalues.len(), |i| i + 1))
}
