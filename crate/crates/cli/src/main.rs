use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use famiss::Method;
use famiss_cli::commands;
use famiss_cli::{CliError, CliResult, ConfigFile, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "famiss",
    version,
    about = "Factor-analysis imputation under missing data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a PPCA model on the train split of a dataset.
    Fit(Common),
    /// Draw synthetic rows from a fitted model.
    Sample(Common),
    /// Score imputation methods under a missingness mechanism.
    Benchmark(Common),
    /// Impute the rows of a masked CSV (`bits,x0,x1,...`).
    Impute {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "exact")]
        method: String,
        /// Trained encoder file, for `de` and `de_star`.
        #[arg(long)]
        encoder: Option<PathBuf>,
    },
    /// Render a report CSV as an aligned table.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// `csv` or `raw-u8`.
    #[arg(long)]
    format: Option<String>,
    /// CSV input has a header line.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Keep data in its original units instead of rescaling to [-1, 1].
    #[arg(long)]
    no_rescale: bool,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, conflicts_with = "explained")]
    latent_dim: Option<usize>,
    /// Choose the smallest K explaining this fraction of variance.
    #[arg(long)]
    explained: Option<f64>,
    /// Fitted model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// `random:<p>`, `quarters:uniform` or `quarters:cycle`.
    #[arg(long)]
    mask: Option<String>,
    /// Comma-separated subset of mean,fca,sca,de,de_star,exact (or `all`).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Synthetic evaluation rows (benchmark without --data).
    #[arg(long)]
    n_test: Option<usize>,
    /// Synthetic encoder-training rows (benchmark without --data).
    #[arg(long)]
    n_train: Option<usize>,
    /// Rows to draw (sample).
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed_split: Option<u64>,
    #[arg(long)]
    seed_mask: Option<u64>,
    #[arg(long)]
    seed_sample: Option<u64>,
    #[arg(long)]
    seed_de: Option<u64>,
    /// Dump reconstruction strips for this many evaluation examples.
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> CliResult<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            data: self.data,
            format: self.format,
            header: self.header.then_some(true),
            width: self.width,
            height: self.height,
            rescale: self.no_rescale.then_some(false),
            train_fraction: self.train_fraction,
            latent_dim: self.latent_dim,
            explained: self.explained,
            model: self.model,
            mask: self.mask,
            methods: self.methods,
            n_test: self.n_test,
            n_train: self.n_train,
            count: self.count,
            seeds: None,
            images: self.images,
            out: self.out,
        };
        let mut cfg = ExperimentConfig::resolve(base.overlay(flags))?;
        let seeds = &mut cfg.seeds;
        seeds.split = self.seed_split.unwrap_or(seeds.split);
        seeds.mask = self.seed_mask.unwrap_or(seeds.mask);
        seeds.sample = self.seed_sample.unwrap_or(seeds.sample);
        seeds.de = self.seed_de.unwrap_or(seeds.de);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut log = stdout.lock();
    match cli.command {
        Command::Fit(common) => {
            commands::cmd_fit(&common.resolve()?, &mut log)?;
        }
        Command::Sample(common) => {
            commands::cmd_sample(&common.resolve()?, &mut log)?;
        }
        Command::Benchmark(common) => {
            commands::cmd_benchmark(&common.resolve()?, &mut log)?;
        }
        Command::Impute {
            common,
            input,
            method,
            encoder,
        } => {
            let method: Method = method.parse().map_err(CliError::Core)?;
            commands::cmd_impute(
                &common.resolve()?,
                &input,
                method,
                encoder.as_deref(),
                &mut log,
            )?;
        }
        Command::Report { input } => commands::cmd_report(&input, &mut log)?,
    }
    log.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("famiss: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
