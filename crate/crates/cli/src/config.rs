//! Experiment configuration: an optional TOML file overlaid by command-line
//! flags, resolved into a validated [`ExperimentConfig`].

use std::path::{Path, PathBuf};

use famiss::data::DataFormat;
use famiss::{MaskSpec, Method};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Seeds for the four independent sources of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Train/test split shuffle.
    pub split: u64,
    /// Evaluation masks.
    pub mask: u64,
    /// Synthetic draws from the model.
    pub sample: u64,
    /// Denoising-encoder training corruptions.
    pub de: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            split: 0,
            mask: 1,
            sample: 2,
            de: 3,
        }
    }
}

/// File-level configuration; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub format: Option<String>,
    pub header: Option<bool>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub rescale: Option<bool>,
    pub train_fraction: Option<f64>,
    pub latent_dim: Option<usize>,
    pub explained: Option<f64>,
    pub model: Option<PathBuf>,
    pub mask: Option<String>,
    pub methods: Option<Vec<String>>,
    pub n_test: Option<usize>,
    pub n_train: Option<usize>,
    pub count: Option<usize>,
    pub seeds: Option<Seeds>,
    pub images: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            data: other.data.or(self.data),
            format: other.format.or(self.format),
            header: other.header.or(self.header),
            width: other.width.or(self.width),
            height: other.height.or(self.height),
            rescale: other.rescale.or(self.rescale),
            train_fraction: other.train_fraction.or(self.train_fraction),
            latent_dim: other.latent_dim.or(self.latent_dim),
            explained: other.explained.or(self.explained),
            model: other.model.or(self.model),
            mask: other.mask.or(self.mask),
            methods: other.methods.or(self.methods),
            n_test: other.n_test.or(self.n_test),
            n_train: other.n_train.or(self.n_train),
            count: other.count.or(self.count),
            seeds: other.seeds.or(self.seeds),
            images: other.images.or(self.images),
            out: other.out.or(self.out),
        }
    }
}

/// How the number of latent dimensions is chosen when fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatentChoice {
    Fixed(usize),
    Explained(f64),
}

pub const DEFAULT_EXPLAINED: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: Option<PathBuf>,
    pub format: DataFormat,
    pub image_shape: Option<(usize, usize)>,
    pub rescale: bool,
    pub train_fraction: f64,
    pub latent: LatentChoice,
    pub model: Option<PathBuf>,
    pub mask: MaskSpec,
    pub methods: Vec<Method>,
    pub n_test: usize,
    pub n_train: usize,
    pub count: usize,
    pub seeds: Seeds,
    pub images: usize,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(file: ConfigFile) -> CliResult<Self> {
        let image_shape = match (file.width, file.height) {
            (Some(w), Some(h)) => Some((w, h)),
            (None, None) => None,
            _ => {
                return Err(CliError::Usage(
                    "--width and --height must be given together".into(),
                ))
            }
        };
        let format = match file.format.as_deref().unwrap_or("csv") {
            "csv" => DataFormat::Csv {
                header: file.header.unwrap_or(false),
            },
            "raw-u8" | "raw" => {
                let (width, height) = image_shape.ok_or_else(|| {
                    CliError::Usage("raw-u8 data needs --width and --height".into())
                })?;
                DataFormat::RawU8 { width, height }
            }
            other => return Err(CliError::Usage(format!("unknown data format {other:?}"))),
        };
        let latent = match (file.latent_dim, file.explained) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "--latent-dim and --explained are exclusive".into(),
                ))
            }
            (Some(k), None) => LatentChoice::Fixed(k),
            (None, e) => LatentChoice::Explained(e.unwrap_or(DEFAULT_EXPLAINED)),
        };
        let mask: MaskSpec = file.mask.as_deref().unwrap_or("random:0.5").parse()?;
        if matches!(mask, MaskSpec::Quarters { .. }) && image_shape.is_none() {
            return Err(CliError::Usage(
                "quarters masks need --width and --height".into(),
            ));
        }
        let methods = match file.methods {
            None => Method::ALL.to_vec(),
            Some(list) => {
                let mut methods = Vec::with_capacity(list.len());
                for tag in list
                    .iter()
                    .flat_map(|s| s.split(','))
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                {
                    let method = if tag == "all" {
                        methods.extend(Method::ALL);
                        continue;
                    } else {
                        tag.parse::<Method>()?
                    };
                    methods.push(method);
                }
                let mut seen = std::collections::HashSet::new();
                methods.retain(|m| seen.insert(*m));
                methods
            }
        };
        Ok(Self {
            data: file.data,
            format,
            image_shape,
            rescale: file.rescale.unwrap_or(true),
            train_fraction: file.train_fraction.unwrap_or(0.8),
            latent,
            model: file.model,
            mask,
            methods,
            n_test: file.n_test.unwrap_or(400),
            n_train: file.n_train.unwrap_or(1600),
            count: file.count.unwrap_or(400),
            seeds: file.seeds.unwrap_or_default(),
            images: file.images.unwrap_or(0),
            out: file.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::resolve(ConfigFile::default()).unwrap();
        assert_eq!(cfg.methods, Method::ALL.to_vec());
        assert_eq!(cfg.mask, MaskSpec::Random { p: 0.5 });
        assert_eq!(cfg.latent, LatentChoice::Explained(0.9));
        assert_eq!((cfg.n_test, cfg.n_train), (400, 1600));
        assert_eq!(cfg.seeds, Seeds::default());
    }

    #[test]
    fn toml_and_overlay() {
        let file: ConfigFile = toml::from_str(
            r#"
            format = "raw-u8"
            width = 20
            height = 28
            mask = "quarters:cycle"
            methods = ["exact", "mean"]
            latent_dim = 43
            [seeds]
            mask = 9
            "#,
        )
        .unwrap();
        let flags = ConfigFile {
            methods: Some(vec!["fca,sca".into()]),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(file.overlay(flags)).unwrap();
        assert_eq!(
            cfg.format,
            DataFormat::RawU8 {
                width: 20,
                height: 28
            }
        );
        assert_eq!(cfg.methods, vec![Method::Fca, Method::Sca]);
        assert_eq!(cfg.latent, LatentChoice::Fixed(43));
        assert_eq!(cfg.seeds.mask, 9);
        assert_eq!(cfg.seeds.de, 3);
    }

    #[test]
    fn rejects_inconsistent_settings() {
        let both = ConfigFile {
            latent_dim: Some(3),
            explained: Some(0.5),
            ..Default::default()
        };
        assert!(matches!(
            ExperimentConfig::resolve(both),
            Err(CliError::Usage(_))
        ));
        let quarters = ConfigFile {
            mask: Some("quarters:uniform".into()),
            ..Default::default()
        };
        assert!(matches!(
            ExperimentConfig::resolve(quarters),
            Err(CliError::Usage(_))
        ));
        let bad_method = ConfigFile {
            methods: Some(vec!["magic".into()]),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(bad_method).is_err());
        assert!(toml::from_str::<ConfigFile>("bogus = 1").is_err());
    }
}
