//! Denoising encoder: an affine regression from mean-imputed, masked inputs
//! to the complete-data posterior mean.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::inference::{GaussianPosterior, LatentInference};
use crate::linalg::cholesky;
use crate::masking::{Mask, MaskGenerator};

/// Relative size of the ridge term added to the normal equations, as a
/// multiple of `tr(XᵀX)/D`.
pub const RIDGE_SCALE: f64 = 1e-8;

/// Learned map `z̄ = A x^mi + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoisingEncoder {
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    training_mask_kind: String,
}

impl DenoisingEncoder {
    pub fn new(
        weights: DMatrix<f64>,
        bias: DVector<f64>,
        training_mask_kind: impl Into<String>,
    ) -> Result<Self> {
        Error::check_len("encoder bias", weights.nrows(), bias.len())?;
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder parameters"));
        }
        Ok(Self {
            weights,
            bias,
            training_mask_kind: training_mask_kind.into(),
        })
    }

    /// `A`, K×D.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    /// Label of the missingness mechanism the encoder was trained on.
    pub fn training_mask_kind(&self) -> &str {
        &self.training_mask_kind
    }

    pub fn data_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn latent_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Predicts the latent mean from `x^mi`. The encoder has no uncertainty
    /// model of its own; the returned covariance is the SCA covariance for
    /// the same mask.
    pub fn predict(
        &self,
        inference: &LatentInference,
        x: &DVector<f64>,
        mask: &Mask,
    ) -> Result<GaussianPosterior> {
        let model = inference.model();
        Error::check_len("encoder input dimension", model.data_dim(), self.data_dim())?;
        Error::check_len(
            "encoder latent dimension",
            model.latent_dim(),
            self.latent_dim(),
        )?;
        Error::check_len("mask", model.data_dim(), mask.len())?;
        Error::check_len("data vector", model.data_dim(), x.len())?;
        if mask.observed_indices().any(|j| !x[j].is_finite()) {
            return Err(Error::NonFinite("observed data"));
        }
        let input = inference.mean_impute(x, mask)?;
        Ok(GaussianPosterior {
            mean: &self.weights * input + &self.bias,
            covariance: inference.sca_covariance(mask)?,
        })
    }
}

/// Trains a denoising encoder on complete data.
///
/// Row `n` of `train_data` gets its exact complete-data posterior mean as
/// the target and one corruption `masks.mask(n)` as input. The regression
/// keeps an unpenalized bias and adds a ridge of
/// `RIDGE_SCALE · tr(XᵀX) / D` on the weights.
pub fn train_denoising_encoder(
    inference: &LatentInference,
    train_data: &DMatrix<f64>,
    masks: &MaskGenerator,
) -> Result<DenoisingEncoder> {
    let model = inference.model();
    let (n, d) = train_data.shape();
    if n == 0 {
        return Err(Error::invalid(
            "denoising encoder needs at least one training row",
        ));
    }
    Error::check_len("training data columns", model.data_dim(), d)?;
    Error::check_len("mask generator dimension", d, masks.data_dim())?;
    if train_data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data"));
    }

    let (exact_weights, exact_bias) = inference.exact_encoder();
    let mut targets = &exact_weights * train_data.transpose();
    for mut column in targets.column_iter_mut() {
        column += &exact_bias;
    }
    let targets = targets.transpose();

    let mut inputs = DMatrix::zeros(n, d);
    for i in 0..n {
        let row = train_data.row(i).transpose();
        let imputed = inference.mean_impute(&row, &masks.mask(i))?;
        inputs.set_row(i, &imputed.transpose());
    }

    let ridge = RIDGE_SCALE * inputs.norm_squared() / d as f64;

    // Centering both sides leaves the bias out of the penalty.
    let input_mean = inputs.row_mean();
    let target_mean = targets.row_mean();
    for mut row in inputs.row_iter_mut() {
        row -= &input_mean;
    }
    let mut centered_targets = targets;
    for mut row in centered_targets.row_iter_mut() {
        row -= &target_mean;
    }

    let mut gram = inputs.transpose() * &inputs;
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let cross = inputs.transpose() * centered_targets;
    let solution = cholesky(gram, "regression normal equations")?.solve(&cross);

    let weights = solution.transpose();
    let bias = target_mean.transpose() - &weights * input_mean.transpose();
    DenoisingEncoder::new(weights, bias, masks.spec().to_string())
}
