//! Subcommand implementations. Each takes a resolved configuration and a
//! sink for human-readable progress lines, and returns what it wrote.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use famiss::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkOutcome, EvalSet};
use famiss::container;
use famiss::data::{self, Dataset, SplitTag};
use famiss::{
    impute, select_latent_dim, CovarianceSpectrum, DenoisingEncoder, FactorModel, FitDiagnostics,
    LatentInference, Method,
};
use nalgebra::DMatrix;

use crate::config::{ExperimentConfig, LatentChoice};
use crate::error::{CliError, CliResult};
use crate::images;
use crate::table;

pub const MODEL_FILE: &str = "model.fam";
pub const REPORT_FILE: &str = "report.csv";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const DE_FILE: &str = "de.fam";
pub const DE_STAR_FILE: &str = "de_star.fam";

fn out_dir(cfg: &ExperimentConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

/// Loads, optionally rescales to [-1, 1], and splits the configured data.
pub fn prepare_data(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    let path = cfg
        .data
        .as_deref()
        .ok_or_else(|| CliError::Usage("no --data given".into()))?;
    let mut dataset = data::load_matrix(path, cfg.format)?;
    if let (None, Some((w, h))) = (dataset.image_shape(), cfg.image_shape) {
        dataset = Dataset::new(dataset.values().clone(), Some((w, h)))?;
    }
    if cfg.rescale {
        dataset = data::rescale_to_unit_interval(&dataset, -1.0, 1.0)?.0;
    }
    Ok(data::split(&dataset, cfg.train_fraction, cfg.seeds.split)?)
}

/// Closed-form PPCA on `train`, with K fixed or chosen by explained
/// variance.
pub fn fit_model(
    cfg: &ExperimentConfig,
    train: &DMatrix<f64>,
) -> CliResult<(FactorModel, FitDiagnostics)> {
    let spectrum = CovarianceSpectrum::from_data(train)?;
    let k = match cfg.latent {
        LatentChoice::Fixed(k) => k,
        LatentChoice::Explained(fraction) => {
            let k = select_latent_dim(spectrum.eigenvalues().as_slice(), fraction)?;
            k.min(train.ncols() - 1)
        }
    };
    Ok(spectrum.ppca(k)?)
}

fn describe_fit(model: &FactorModel, diag: &FitDiagnostics, log: &mut dyn Write) -> CliResult<()> {
    writeln!(
        log,
        "fitted PPCA: D={} K={} explained_fraction={:.4} sigma2={:.6e}",
        model.data_dim(),
        model.latent_dim(),
        diag.explained_fraction,
        diag.sigma2
    )?;
    if !diag.clamped_components.is_empty() {
        writeln!(
            log,
            "warning: components {:?} had eigenvalue below sigma2 and were clamped to zero loading",
            diag.clamped_components
        )?;
    }
    Ok(())
}

pub struct FitOutput {
    pub model_path: PathBuf,
    pub model: FactorModel,
    pub diagnostics: FitDiagnostics,
}

pub fn cmd_fit(cfg: &ExperimentConfig, log: &mut dyn Write) -> CliResult<FitOutput> {
    let dataset = prepare_data(cfg)?;
    let train = dataset.rows(SplitTag::Train)?;
    let (model, diagnostics) = fit_model(cfg, &train)?;
    describe_fit(&model, &diagnostics, log)?;
    let model_path = out_dir(cfg)?.join(MODEL_FILE);
    container::save_model(&model_path, &model, Some(&diagnostics))?;
    writeln!(log, "wrote {}", model_path.display())?;
    Ok(FitOutput {
        model_path,
        model,
        diagnostics,
    })
}

fn load_model(cfg: &ExperimentConfig) -> CliResult<FactorModel> {
    let path = cfg
        .model
        .as_deref()
        .ok_or_else(|| CliError::Usage("no --model given".into()))?;
    Ok(container::load_model(path)?.0)
}

pub fn cmd_sample(cfg: &ExperimentConfig, log: &mut dyn Write) -> CliResult<PathBuf> {
    let model = load_model(cfg)?;
    let draws = model.sample(cfg.count, cfg.seeds.sample);
    let path = out_dir(cfg)?.join(SAMPLES_FILE);
    data::write_csv_matrix(BufWriter::new(fs::File::create(&path)?), &draws, true)?;
    writeln!(log, "wrote {} rows to {}", cfg.count, path.display())?;
    Ok(path)
}

pub struct BenchmarkRun {
    pub report_path: PathBuf,
    pub outcome: BenchmarkOutcome,
    pub images: Vec<PathBuf>,
}

/// With `--data`, fits (or loads) a model on the train split and scores
/// both splits. Without data, draws `n_test` evaluation rows and `n_train`
/// encoder-training rows from the `--model` file.
pub fn cmd_benchmark(cfg: &ExperimentConfig, log: &mut dyn Write) -> CliResult<BenchmarkRun> {
    if cfg.methods.is_empty() {
        return Err(CliError::Usage(
            "--methods lists no imputation method".into(),
        ));
    }

    let (model, encoder_train, eval, image_shape) = match cfg.data {
        Some(_) => {
            let dataset = prepare_data(cfg)?;
            let train = dataset.rows(SplitTag::Train)?;
            let test = dataset.rows(SplitTag::Test)?;
            let model = match cfg.model {
                Some(_) => load_model(cfg)?,
                None => {
                    let (model, diag) = fit_model(cfg, &train)?;
                    describe_fit(&model, &diag, log)?;
                    model
                }
            };
            let shape = dataset.image_shape().or(cfg.image_shape);
            (
                model,
                train.clone(),
                vec![("train", train), ("test", test)],
                shape,
            )
        }
        None => {
            let model = load_model(cfg)?;
            let test = model.sample(cfg.n_test, cfg.seeds.sample);
            let train = model.sample(cfg.n_train, cfg.seeds.sample.wrapping_add(1));
            (model, train, vec![("test", test)], cfg.image_shape)
        }
    };

    let inference = LatentInference::new(model)?;
    let bench = BenchmarkConfig {
        methods: cfg.methods.clone(),
        mask: cfg.mask,
        image_shape,
        mask_seed: cfg.seeds.mask,
        de_seed: cfg.seeds.de,
    };
    let sets: Vec<EvalSet<'_>> = eval
        .iter()
        .map(|(split, data)| EvalSet { split, data })
        .collect();
    let outcome = run_benchmark(&inference, &encoder_train, &sets, &bench)?;

    let dir = out_dir(cfg)?;
    let report_path = dir.join(REPORT_FILE);
    fs::write(&report_path, outcome.to_csv())?;
    if let Some(de) = &outcome.de {
        container::save_encoder(&dir.join(DE_FILE), de)?;
    }
    if let Some(de_star) = &outcome.de_star {
        container::save_encoder(&dir.join(DE_STAR_FILE), de_star)?;
    }

    let rows = table::parse_report_csv(&outcome.to_csv())?;
    write!(log, "{}", table::render_table(&rows))?;
    writeln!(log, "wrote {}", report_path.display())?;

    let mut written = Vec::new();
    if cfg.images > 0 {
        let shape = image_shape
            .ok_or_else(|| CliError::Usage("--images needs --width and --height".into()))?;
        let (split_index, (_, data)) = eval
            .iter()
            .enumerate()
            .next_back()
            .expect("at least one split");
        let masks = bench
            .eval_masks(inference.model().data_dim(), split_index)?
            .masks(cfg.images.min(data.nrows()));
        let image_dir = dir.join("images");
        fs::create_dir_all(&image_dir)?;
        written = images::write_example_strips(
            &image_dir,
            &inference,
            outcome.de.as_ref(),
            outcome.de_star.as_ref(),
            data,
            &masks,
            &cfg.methods,
            shape,
            cfg.images,
        )?;
        if data.nrows() > 0 {
            let x = data.row(0).transpose();
            let display = (data.min(), data.max());
            written.extend(images::write_uncertainty_sweep(
                &image_dir, &inference, &x, shape, display,
            )?);
        }
        writeln!(
            log,
            "wrote {} images to {}",
            written.len(),
            image_dir.display()
        )?;
    }

    Ok(BenchmarkRun {
        report_path,
        outcome,
        images: written,
    })
}

/// Imputes every row of a masked CSV (`bits,x0,...`) and writes the
/// completed rows and their predictive standard deviations.
pub fn cmd_impute(
    cfg: &ExperimentConfig,
    input: &Path,
    method: Method,
    encoder: Option<&Path>,
    log: &mut dyn Write,
) -> CliResult<(PathBuf, PathBuf)> {
    let inference = LatentInference::new(load_model(cfg)?)?;
    let encoder: Option<DenoisingEncoder> = match (method.needs_encoder(), encoder) {
        (true, None) => {
            return Err(CliError::Usage(format!("method {method} needs --encoder")));
        }
        (true, Some(path)) => Some(container::load_encoder(path)?),
        (false, _) => None,
    };
    let (values, masks) = data::read_masked_csv(fs::File::open(input)?, input)?;
    let d = inference.model().data_dim();
    let mut completed = DMatrix::zeros(values.nrows(), d);
    let mut stds = DMatrix::zeros(values.nrows(), d);
    for (i, (row, mask)) in values.row_iter().zip(&masks).enumerate() {
        let result = impute(method, &inference, encoder.as_ref(), &row.transpose(), mask)?;
        completed.set_row(i, &result.completed.transpose());
        stds.set_row(i, &result.predictive_std.transpose());
    }
    let dir = out_dir(cfg)?;
    let completed_path = dir.join("imputed.csv");
    let std_path = dir.join("imputed_std.csv");
    data::write_csv_matrix(
        BufWriter::new(fs::File::create(&completed_path)?),
        &completed,
        false,
    )?;
    data::write_csv_matrix(BufWriter::new(fs::File::create(&std_path)?), &stds, false)?;
    writeln!(log, "imputed {} rows with {method}", values.nrows())?;
    Ok((completed_path, std_path))
}

pub fn cmd_report(input: &Path, out: &mut dyn Write) -> CliResult<()> {
    let text = fs::read_to_string(input)?;
    let rows = table::parse_report_csv(&text)?;
    write!(out, "{}", table::render_table(&rows))?;
    Ok(())
}
