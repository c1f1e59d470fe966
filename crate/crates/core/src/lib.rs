//! Latent-posterior inference for factor analysis and probabilistic PCA
//! under arbitrary missing-data patterns.
//!
//! A [`FactorModel`] is fitted once on complete data. Given a partially
//! observed vector and its [`Mask`], [`LatentInference`] returns the exact
//! Gaussian posterior over the latent factors, or one of the cheaper
//! approximations (full-covariance, scaled-covariance); a
//! [`DenoisingEncoder`] learns an amortized affine approximation. The
//! [`imputation`] module decodes posteriors into filled-in data and scores
//! them, and [`benchmark`] ties everything into a reproducible experiment.

pub mod benchmark;
pub mod container;
pub mod data;
pub mod encoder;
mod error;
pub mod imputation;
pub mod inference;
pub mod linalg;
pub mod masking;
pub mod model;
pub mod pgm;
pub mod rng;

pub use encoder::{train_denoising_encoder, DenoisingEncoder};
pub use error::{Error, Result};
pub use imputation::{decode, impute, score, ImputationReport, ImputationResult, Method};
pub use inference::{mean_impute_input, GaussianPosterior, LatentInference};
pub use masking::{
    quarters_mask, random_mask, top_rows_mask, Mask, MaskGenerator, MaskSpec, Quarter, QuarterMode,
};
pub use model::{fit_ppca, select_latent_dim, CovarianceSpectrum, FactorModel, FitDiagnostics};
