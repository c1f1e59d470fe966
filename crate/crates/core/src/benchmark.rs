//! Imputation benchmark: corrupt each evaluation row with a seeded mask,
//! impute with every requested method, and score against the truth.

use nalgebra::DMatrix;

use crate::encoder::{train_denoising_encoder, DenoisingEncoder};
use crate::error::{Error, Result};
use crate::imputation::{impute, score, ImputationReport, ImputationResult, Method};
use crate::inference::LatentInference;
use crate::masking::{Mask, MaskGenerator, MaskSpec};

/// Dropout rate of the random mechanism that `de_star` encoders are trained
/// on when the evaluation mechanism is not random.
pub const DE_STAR_DROPOUT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub mask: MaskSpec,
    /// `(width, height)`, required for quarters masks.
    pub image_shape: Option<(usize, usize)>,
    /// Seeds evaluation masks; split `i` uses `mask_seed + i`.
    pub mask_seed: u64,
    /// Seeds the single corruption drawn per encoder training row.
    pub de_seed: u64,
}

impl BenchmarkConfig {
    /// Mechanism used to train the `de_star` encoder: the evaluation
    /// mechanism itself when it is random, otherwise random dropout.
    pub fn de_star_mask(&self) -> MaskSpec {
        match self.mask {
            MaskSpec::Random { .. } => self.mask,
            MaskSpec::Quarters { .. } => MaskSpec::Random { p: DE_STAR_DROPOUT },
        }
    }

    fn generator(&self, spec: MaskSpec, data_dim: usize, seed: u64) -> Result<MaskGenerator> {
        let shape = match spec {
            MaskSpec::Random { .. } => None,
            MaskSpec::Quarters { .. } => self.image_shape,
        };
        MaskGenerator::new(spec, data_dim, shape, seed)
    }

    /// Masks for evaluation split number `split_index`.
    pub fn eval_masks(&self, data_dim: usize, split_index: usize) -> Result<MaskGenerator> {
        self.generator(
            self.mask,
            data_dim,
            self.mask_seed.wrapping_add(split_index as u64),
        )
    }
}

/// A named block of complete rows to corrupt and impute.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a> {
    pub split: &'a str,
    pub data: &'a DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    /// One report per (split, method), splits outermost, methods in the
    /// configured order.
    pub reports: Vec<ImputationReport>,
    pub de: Option<DenoisingEncoder>,
    pub de_star: Option<DenoisingEncoder>,
}

impl BenchmarkOutcome {
    pub fn report(&self, method: Method, split: &str) -> Option<&ImputationReport> {
        self.reports
            .iter()
            .find(|r| r.method == method && r.split == split)
    }

    /// Header plus one row per report, newline-terminated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ImputationReport::CSV_HEADER);
        out.push('\n');
        for report in &self.reports {
            out.push_str(&report.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Imputes every row of `data` under its mask.
pub fn impute_rows(
    method: Method,
    inference: &LatentInference,
    encoder: Option<&DenoisingEncoder>,
    data: &DMatrix<f64>,
    masks: &[Mask],
) -> Result<Vec<ImputationResult>> {
    Error::check_len("masks", data.nrows(), masks.len())?;
    data.row_iter()
        .zip(masks)
        .map(|(row, mask)| impute(method, inference, encoder, &row.transpose(), mask))
        .collect()
}

pub fn run_benchmark(
    inference: &LatentInference,
    encoder_train: &DMatrix<f64>,
    eval_sets: &[EvalSet<'_>],
    config: &BenchmarkConfig,
) -> Result<BenchmarkOutcome> {
    if config.methods.is_empty() {
        return Err(Error::invalid("no imputation methods requested"));
    }
    let d = inference.model().data_dim();

    let train = |spec: MaskSpec| -> Result<DenoisingEncoder> {
        let masks = config.generator(spec, d, config.de_seed)?;
        train_denoising_encoder(inference, encoder_train, &masks)
    };
    let de = if config.methods.contains(&Method::De) {
        Some(train(config.mask)?)
    } else {
        None
    };
    let de_star = if config.methods.contains(&Method::DeStar) {
        match (&de, config.de_star_mask() == config.mask) {
            (Some(shared), true) => Some(shared.clone()),
            _ => Some(train(config.de_star_mask())?),
        }
    } else {
        None
    };

    let mut reports = Vec::with_capacity(eval_sets.len() * config.methods.len());
    for (split_index, set) in eval_sets.iter().enumerate() {
        let masks = config.eval_masks(d, split_index)?.masks(set.data.nrows());
        for &method in &config.methods {
            let encoder = match method {
                Method::De => de.as_ref(),
                Method::DeStar => de_star.as_ref(),
                _ => None,
            };
            let results = impute_rows(method, inference, encoder, set.data, &masks)?;
            let label = config.mask.to_string();
            reports.push(score(set.data, &results, &masks, &label, set.split)?);
        }
    }
    Ok(BenchmarkOutcome {
        reports,
        de,
        de_star,
    })
}
