//! PGM dumps: per-example reconstruction strips and the uncertainty sweep.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use famiss::pgm::GrayImage;
use famiss::{impute, top_rows_mask, DenoisingEncoder, LatentInference, Mask, Method};
use nalgebra::{DMatrix, DVector};

use crate::error::CliResult;

const GAP: usize = 2;
const GAP_FILL: u8 = 255;

/// Number of row-reveal steps in the uncertainty sweep.
pub const SWEEP_STEPS: usize = 7;

fn save(image: &GrayImage, path: &Path) -> CliResult<()> {
    image.write_pgm(BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Writes, for each of the first `count` rows, a two-row strip: on top the
/// original image, the original restricted to its missing region, then
/// one completed image per method; below, the per-pixel squared error of
/// each method.
#[allow(clippy::too_many_arguments)]
pub fn write_example_strips(
    dir: &Path,
    inference: &LatentInference,
    de: Option<&DenoisingEncoder>,
    de_star: Option<&DenoisingEncoder>,
    data: &DMatrix<f64>,
    masks: &[Mask],
    methods: &[Method],
    (width, height): (usize, usize),
    count: usize,
) -> CliResult<Vec<PathBuf>> {
    let (low, high) = (data.min(), data.max());
    let high = if high > low { high } else { low + 1.0 };
    let mut written = Vec::new();
    for (i, (row, mask)) in data.row_iter().zip(masks).take(count).enumerate() {
        let x: DVector<f64> = row.transpose();
        let img = |values: &[f64]| GrayImage::from_values(values, width, height, low, high);

        let hidden: Vec<f64> = (0..x.len())
            .map(|j| if mask.is_observed(j) { low } else { x[j] })
            .collect();
        let mut top = vec![img(x.as_slice())?, img(&hidden)?];
        let mut errors = Vec::new();
        for &method in methods {
            let encoder = match method {
                Method::De => de,
                Method::DeStar => de_star,
                _ => None,
            };
            let result = impute(method, inference, encoder, &x, mask)?;
            top.push(img(result.completed.as_slice())?);
            errors.push((&result.completed - &x).map(|e| e * e));
        }
        let max_error = errors
            .iter()
            .map(|e| e.max())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let blank = GrayImage::from_values(&vec![0.0; width * height], width, height, 0.0, 1.0)?;
        let mut bottom = vec![blank.clone(), blank];
        for e in &errors {
            bottom.push(GrayImage::from_values(
                e.as_slice(),
                width,
                height,
                0.0,
                max_error,
            )?);
        }
        let strip = GrayImage::vconcat(&[
            GrayImage::hconcat(&top, GAP, GAP_FILL)?,
            GrayImage::hconcat(&bottom, GAP, GAP_FILL)?,
        ])?;
        let path = dir.join(format!("example_{i:03}.pgm"));
        save(&strip, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Row counts revealed at each sweep step, top to bottom.
pub fn sweep_rows(height: usize) -> Vec<usize> {
    (1..=SWEEP_STEPS)
        .map(|s| s * height / (SWEEP_STEPS + 1))
        .collect()
}

/// Exact-inference sweep on one image: at each step more rows from the top
/// are observed. Writes a strip of completed images and a strip of
/// predictive standard deviation maps.
pub fn write_uncertainty_sweep(
    dir: &Path,
    inference: &LatentInference,
    x: &DVector<f64>,
    (width, height): (usize, usize),
    display: (f64, f64),
) -> CliResult<Vec<PathBuf>> {
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for rows in sweep_rows(height) {
        let mask = top_rows_mask(width, height, rows);
        let result = impute(Method::Exact, inference, None, x, &mask)?;
        means.push(result.completed);
        stds.push(result.predictive_std);
    }
    let max_std = stds
        .iter()
        .map(|s| s.max())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mean_panels = means
        .iter()
        .map(|m| GrayImage::from_values(m.as_slice(), width, height, display.0, display.1))
        .collect::<Result<Vec<_>, _>>()?;
    let std_panels = stds
        .iter()
        .map(|s| GrayImage::from_values(s.as_slice(), width, height, 0.0, max_std))
        .collect::<Result<Vec<_>, _>>()?;
    let mean_path = dir.join("sweep_mean.pgm");
    let std_path = dir.join("sweep_std.pgm");
    save(
        &GrayImage::hconcat(&mean_panels, GAP, GAP_FILL)?,
        &mean_path,
    )?;
    save(&GrayImage::hconcat(&std_panels, GAP, GAP_FILL)?, &std_path)?;
    Ok(vec![mean_path, std_path])
}
