//! Decoding latent posteriors into data space, filling in missing entries
//! and scoring the result.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::encoder::DenoisingEncoder;
use crate::error::{Error, Result};
use crate::inference::{GaussianPosterior, LatentInference};
use crate::linalg::compensated_sum;
use crate::masking::Mask;
use crate::model::FactorModel;

/// Imputation method. `DeStar` is a denoising encoder trained on a
/// different missingness mechanism than it is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mean,
    Fca,
    Sca,
    De,
    DeStar,
    Exact,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mean,
        Method::Fca,
        Method::Sca,
        Method::De,
        Method::DeStar,
        Method::Exact,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Fca => "fca",
            Method::Sca => "sca",
            Method::De => "de",
            Method::DeStar => "de_star",
            Method::Exact => "exact",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::Mean => "Mean imputation",
            Method::Fca => "Full-covariance approx.",
            Method::Sca => "Scaled-covariance approx.",
            Method::De => "Denoising encoder",
            Method::DeStar => "Denoising encoder*",
            Method::Exact => "Exact inference",
        }
    }

    pub fn needs_encoder(self) -> bool {
        matches!(self, Method::De | Method::DeStar)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// `W z + μ`.
pub fn decode(model: &FactorModel, z_mean: &DVector<f64>) -> Result<DVector<f64>> {
    Error::check_len("latent vector", model.latent_dim(), z_mean.len())?;
    Ok(model.loading() * z_mean + model.mean())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    /// Observed entries copied verbatim, missing entries imputed.
    pub completed: DVector<f64>,
    /// Predictive standard deviation of each missing entry; zero where
    /// observed.
    pub predictive_std: DVector<f64>,
    pub method: Method,
}

/// Latent posterior under `method`; `None` for mean imputation, which has
/// no latent posterior.
pub fn posterior(
    method: Method,
    inference: &LatentInference,
    encoder: Option<&DenoisingEncoder>,
    x: &DVector<f64>,
    mask: &Mask,
) -> Result<Option<GaussianPosterior>> {
    Ok(Some(match method {
        Method::Mean => return Ok(None),
        Method::Fca => inference.fca_posterior(x, mask)?,
        Method::Sca => inference.sca_posterior(x, mask)?,
        Method::Exact => inference.exact_posterior(x, mask)?,
        Method::De | Method::DeStar => encoder
            .ok_or_else(|| Error::invalid(format!("method {method} needs a trained encoder")))?
            .predict(inference, x, mask)?,
    }))
}

/// Fills the missing entries of `x` with the predictive mean under
/// `method`. Missing entries get predictive standard deviation
/// `sqrt(v_jᵀ Σ v_j + ψ_jj)` for posterior methods, and the marginal
/// standard deviation under mean imputation.
pub fn impute(
    method: Method,
    inference: &LatentInference,
    encoder: Option<&DenoisingEncoder>,
    x: &DVector<f64>,
    mask: &Mask,
) -> Result<ImputationResult> {
    let model = inference.model();
    let d = model.data_dim();
    Error::check_len("mask", d, mask.len())?;
    Error::check_len("data vector", d, x.len())?;

    let (prediction, variance) = match posterior(method, inference, encoder, x, mask)? {
        None => (model.mean().clone(), model.marginal_variance()),
        Some(post) => {
            let loading = model.loading();
            let spread = loading * &post.covariance;
            let variance = DVector::from_iterator(
                d,
                (0..d).map(|j| spread.row(j).dot(&loading.row(j)) + model.noise_diag()[j]),
            );
            (decode(model, &post.mean)?, variance)
        }
    };

    let mut completed = x.clone();
    let mut predictive_std = DVector::zeros(d);
    for j in mask.missing_indices() {
        completed[j] = prediction[j];
        predictive_std[j] = variance[j].max(0.0).sqrt();
    }
    Ok(ImputationResult {
        completed,
        predictive_std,
        method,
    })
}

/// Per-example mean squared imputation errors and their aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationReport {
    pub method: Method,
    pub mask_kind: String,
    pub split: String,
    /// One entry per example with at least one missing slot.
    pub per_example_error: Vec<f64>,
    pub mean_error: f64,
    /// Sample standard deviation of the per-example errors over `sqrt(N)`.
    pub std_error: f64,
}

impl ImputationReport {
    pub const CSV_HEADER: &'static str = "method,mask_kind,split,n_examples,mean_error,std_error";

    pub fn n_examples(&self) -> usize {
        self.per_example_error.len()
    }

    /// One CSV row in [`Self::CSV_HEADER`] order; floats use the shortest
    /// representation that round-trips.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.method,
            self.mask_kind,
            self.split,
            self.n_examples(),
            self.mean_error,
            self.std_error
        )
    }
}

/// Scores imputations against ground truth. Each example's error is the
/// mean of `(truth_j − completed_j)²` over its missing slots; examples with
/// nothing missing are left out.
pub fn score(
    truth: &DMatrix<f64>,
    results: &[ImputationResult],
    masks: &[Mask],
    mask_kind: &str,
    split: &str,
) -> Result<ImputationReport> {
    let n = truth.nrows();
    Error::check_len("imputation results", n, results.len())?;
    Error::check_len("masks", n, masks.len())?;
    let method = match results.first() {
        Some(r) => r.method,
        None => return Err(Error::invalid("no examples to score")),
    };
    if results.iter().any(|r| r.method != method) {
        return Err(Error::invalid("results mix imputation methods"));
    }

    let mut per_example_error = Vec::with_capacity(n);
    for (i, (result, mask)) in results.iter().zip(masks).enumerate() {
        Error::check_len("mask", truth.ncols(), mask.len())?;
        Error::check_len("completed vector", truth.ncols(), result.completed.len())?;
        let missing = mask.n_missing();
        if missing == 0 {
            continue;
        }
        let sse = compensated_sum(mask.missing_indices().map(|j| {
            let diff = truth[(i, j)] - result.completed[j];
            diff * diff
        }));
        per_example_error.push(sse / missing as f64);
    }

    let count = per_example_error.len();
    if count == 0 {
        return Err(Error::invalid("no example has missing entries"));
    }
    let mean_error = compensated_sum(per_example_error.iter().copied()) / count as f64;
    let std_error = if count > 1 {
        let ss = compensated_sum(per_example_error.iter().map(|e| (e - mean_error).powi(2)));
        (ss / (count - 1) as f64).sqrt() / (count as f64).sqrt()
    } else {
        0.0
    };
    Ok(ImputationReport {
        method,
        mask_kind: mask_kind.to_owned(),
        split: split.to_owned(),
        per_example_error,
        mean_error,
        std_error,
    })
}
