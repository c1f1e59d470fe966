//! Missingness masks and the seeded mechanisms that generate them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Per-dimension observed/missing indicator; `true` means observed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    observed: Vec<bool>,
}

impl Mask {
    pub fn new(observed: Vec<bool>) -> Self {
        Self { observed }
    }

    pub fn all_observed(len: usize) -> Self {
        Self::new(vec![true; len])
    }

    pub fn all_missing(len: usize) -> Self {
        Self::new(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn is_observed(&self, j: usize) -> bool {
        self.observed[j]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.observed
    }

    /// `D_v`.
    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// `D_m`.
    pub fn n_missing(&self) -> usize {
        self.len() - self.n_observed()
    }

    pub fn observed_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(j, _)| j)
    }

    pub fn missing_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| !o)
            .map(|(j, _)| j)
    }

    /// True when every dimension observed here is also observed in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.len() == other.len()
            && self
                .observed
                .iter()
                .zip(&other.observed)
                .all(|(&a, &b)| !a || b)
    }

    /// `0` = missing, `1` = observed, one character per dimension.
    pub fn to_bits(&self) -> String {
        self.observed
            .iter()
            .map(|&o| if o { '1' } else { '0' })
            .collect()
    }

    pub fn from_bits(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::invalid(format!(
                    "mask bit must be 0 or 1, got {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

/// Each slot independently missing with probability `p`.
pub fn random_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Result<Mask> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "dropout probability must be in [0, 1], got {p}"
        )));
    }
    Ok(Mask::new(
        (0..len).map(|_| rng.random::<f64>() >= p).collect(),
    ))
}

/// Image quadrant, in row-major reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quarter {
    TopLeft = 0,
    TopRight = 1,
    BottomLeft = 2,
    BottomRight = 3,
}

impl Quarter {
    pub const ALL: [Quarter; 4] = [
        Quarter::TopLeft,
        Quarter::TopRight,
        Quarter::BottomLeft,
        Quarter::BottomRight,
    ];

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::invalid(format!("quarter index must be 0..=3, got {index}")))
    }
}

/// Mask with one quadrant of a row-major `width`×`height` image missing.
/// The top and left halves take `floor(height/2)` rows and `floor(width/2)`
/// columns.
pub fn quarters_mask(width: usize, height: usize, quarter: Quarter) -> Result<Mask> {
    if width < 2 || height < 2 {
        return Err(Error::invalid(format!(
            "quarters need an image of at least 2x2, got {width}x{height}"
        )));
    }
    let (half_w, half_h) = (width / 2, height / 2);
    let (top, left) = match quarter {
        Quarter::TopLeft => (true, true),
        Quarter::TopRight => (true, false),
        Quarter::BottomLeft => (false, true),
        Quarter::BottomRight => (false, false),
    };
    let observed = (0..height)
        .flat_map(|r| (0..width).map(move |c| (r, c)))
        .map(|(r, c)| (r < half_h) != top || (c < half_w) != left)
        .collect();
    Ok(Mask::new(observed))
}

/// Mask of a row-major `width`×`height` image with the top `rows` rows
/// observed and the rest missing. Increasing `rows` gives nested masks.
pub fn top_rows_mask(width: usize, height: usize, rows: usize) -> Mask {
    let visible = rows.min(height) * width;
    Mask::new((0..width * height).map(|j| j < visible).collect())
}

/// How quarters are assigned to successive examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarterMode {
    /// Example `i` loses quarter `i mod 4`.
    Cycle,
    /// Each example's quarter is drawn uniformly from its own seeded stream.
    Uniform,
}

/// A missingness mechanism without dimensions, as written on the command
/// line: `random:<p>`, `quarters:cycle` or `quarters:uniform`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskSpec {
    Random { p: f64 },
    Quarters { mode: QuarterMode },
}

impl MaskSpec {
    /// Short mechanism tag used in reports.
    pub fn family(&self) -> &'static str {
        match self {
            MaskSpec::Random { .. } => "random",
            MaskSpec::Quarters { .. } => "quarters",
        }
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSpec::Random { p } => write!(f, "random:{p}"),
            MaskSpec::Quarters {
                mode: QuarterMode::Cycle,
            } => f.write_str("quarters:cycle"),
            MaskSpec::Quarters {
                mode: QuarterMode::Uniform,
            } => f.write_str("quarters:uniform"),
        }
    }
}

impl FromStr for MaskSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "random" => {
                let p = if arg.is_empty() {
                    0.5
                } else {
                    arg.parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad dropout probability {arg:?}")))?
                };
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!(
                        "dropout probability {p} outside [0, 1]"
                    )));
                }
                Ok(MaskSpec::Random { p })
            }
            "quarters" => match arg {
                "" | "uniform" | "uniform-random" => Ok(MaskSpec::Quarters {
                    mode: QuarterMode::Uniform,
                }),
                "cycle" => Ok(MaskSpec::Quarters {
                    mode: QuarterMode::Cycle,
                }),
                other => Err(Error::invalid(format!("unknown quarters mode {other:?}"))),
            },
            other => Err(Error::invalid(format!("unknown mask kind {other:?}"))),
        }
    }
}

/// Deterministic per-example mask source. The mask for example `i` depends
/// only on `(spec, seed, i)`, so generators can be shared across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGenerator {
    spec: MaskSpec,
    data_dim: usize,
    image_shape: Option<(usize, usize)>,
    seed: u64,
}

impl MaskGenerator {
    pub fn random(data_dim: usize, p: f64, seed: u64) -> Result<Self> {
        Self::new(MaskSpec::Random { p }, data_dim, None, seed)
    }

    pub fn quarters(width: usize, height: usize, mode: QuarterMode, seed: u64) -> Result<Self> {
        Self::new(
            MaskSpec::Quarters { mode },
            width * height,
            Some((width, height)),
            seed,
        )
    }

    /// `image_shape` is `(width, height)` and is required for quarters.
    pub fn new(
        spec: MaskSpec,
        data_dim: usize,
        image_shape: Option<(usize, usize)>,
        seed: u64,
    ) -> Result<Self> {
        if let Some((w, h)) = image_shape {
            Error::check_len("image width*height", data_dim, w * h)?;
        }
        match spec {
            MaskSpec::Random { p } if !(0.0..=1.0).contains(&p) => {
                return Err(Error::invalid(format!(
                    "dropout probability {p} outside [0, 1]"
                )));
            }
            MaskSpec::Quarters { .. } => match image_shape {
                None => return Err(Error::invalid("quarters masks need an image shape")),
                Some((w, h)) if w < 2 || h < 2 => {
                    return Err(Error::invalid(format!(
                        "image {w}x{h} too small for quarters"
                    )));
                }
                _ => {}
            },
            _ => {}
        }
        Ok(Self {
            spec,
            data_dim,
            image_shape,
            seed,
        })
    }

    pub fn spec(&self) -> MaskSpec {
        self.spec
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same mechanism with a different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn mask(&self, index: usize) -> Mask {
        match self.spec {
            MaskSpec::Random { p } => {
                let mut rng = rng::stream(self.seed, index as u64);
                random_mask(self.data_dim, p, &mut rng).expect("p validated at construction")
            }
            MaskSpec::Quarters { mode } => {
                let (w, h) = self.image_shape.expect("validated at construction");
                let quarter = match mode {
                    QuarterMode::Cycle => index % 4,
                    QuarterMode::Uniform => rng::stream(self.seed, index as u64).random_range(0..4),
                };
                quarters_mask(w, h, Quarter::ALL[quarter]).expect("shape validated at construction")
            }
        }
    }

    pub fn masks(&self, count: usize) -> Vec<Mask> {
        (0..count).map(|i| self.mask(i)).collect()
    }
}
