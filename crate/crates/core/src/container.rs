//! Versioned binary container for fitted models and trained encoders.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes   "FAMISS\0\0"
//! kind     4 bytes   "MODL" | "DENC"
//! version  u32       currently 1
//! payload  kind-specific, see below
//! ```
//!
//! `MODL`: `D u64, K u64, W (D*K f64, row-major), μ (D f64), ψ (D f64)`,
//! then a `u8` diagnostics flag; when 1: `n u64, eigenvalues (n f64),
//! σ² f64, explained_fraction f64, m u64, clamped indices (m u64)`.
//!
//! `DENC`: `D u64, K u64, A (K*D f64, row-major), b (K f64),
//! tag length u32, tag UTF-8 bytes`.
//!
//! Floats are stored as raw IEEE-754 bits, so a decode of an encode is
//! bit-identical.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::encoder::DenoisingEncoder;
use crate::error::{Error, Result};
use crate::model::{FactorModel, FitDiagnostics};

pub const MAGIC: &[u8; 8] = b"FAMISS\0\0";
pub const VERSION: u32 = 1;
const MODEL_KIND: &[u8; 4] = b"MODL";
const ENCODER_KIND: &[u8; 4] = b"DENC";

/// Largest dimension accepted when decoding, to reject corrupt headers
/// before allocating.
const MAX_DIM: u64 = 1 << 24;

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn header(kind: &[u8; 4]) -> Self {
        let mut w = Writer::default();
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(kind);
        w.u32(VERSION);
        w
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s<'a>(&mut self, values: impl IntoIterator<Item = &'a f64>) {
        for v in values {
            self.0.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }

    fn row_major(&mut self, m: &DMatrix<f64>) {
        for row in m.row_iter() {
            self.f64s(row.iter());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], kind: &[u8; 4]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("missing FAMISS magic header".into()));
        }
        let found = r.take(4)?;
        if found != kind {
            return Err(Error::Format(format!(
                "expected a {} container, found {}",
                String::from_utf8_lossy(kind),
                String::from_utf8_lossy(found)
            )));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported container version {version}"
            )));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("unexpected end of container".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn dim(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > MAX_DIM {
            return Err(Error::Format(format!("dimension {v} exceeds limit")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn finish(self) -> Result<()> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )))
        }
    }
}

pub fn encode_model(model: &FactorModel, diagnostics: Option<&FitDiagnostics>) -> Vec<u8> {
    let mut w = Writer::header(MODEL_KIND);
    w.u64(model.data_dim() as u64);
    w.u64(model.latent_dim() as u64);
    w.row_major(model.loading());
    w.f64s(model.mean().iter());
    w.f64s(model.noise_diag().iter());
    match diagnostics {
        None => w.u8(0),
        Some(diag) => {
            w.u8(1);
            w.u64(diag.eigenvalues.len() as u64);
            w.f64s(diag.eigenvalues.iter());
            w.f64s([diag.sigma2, diag.explained_fraction].iter());
            w.u64(diag.clamped_components.len() as u64);
            for &i in &diag.clamped_components {
                w.u64(i as u64);
            }
        }
    }
    w.0
}

pub fn decode_model(bytes: &[u8]) -> Result<(FactorModel, Option<FitDiagnostics>)> {
    let mut r = Reader::open(bytes, MODEL_KIND)?;
    let d = r.dim()?;
    let k = r.dim()?;
    let loading = DMatrix::from_row_slice(d, k, &r.f64s(d * k)?);
    let mean = DVector::from_vec(r.f64s(d)?);
    let noise = DVector::from_vec(r.f64s(d)?);
    let diagnostics = match r.u8()? {
        0 => None,
        1 => {
            let n = r.dim()?;
            let eigenvalues = DVector::from_vec(r.f64s(n)?);
            let sigma2 = r.f64()?;
            let explained_fraction = r.f64()?;
            let m = r.dim()?;
            let clamped_components = (0..m).map(|_| r.dim()).collect::<Result<_>>()?;
            Some(FitDiagnostics {
                eigenvalues,
                sigma2,
                explained_fraction,
                clamped_components,
            })
        }
        flag => return Err(Error::Format(format!("bad diagnostics flag {flag}"))),
    };
    r.finish()?;
    Ok((FactorModel::new(loading, mean, noise)?, diagnostics))
}

pub fn encode_encoder(encoder: &DenoisingEncoder) -> Vec<u8> {
    let mut w = Writer::header(ENCODER_KIND);
    w.u64(encoder.data_dim() as u64);
    w.u64(encoder.latent_dim() as u64);
    w.row_major(encoder.weights());
    w.f64s(encoder.bias().iter());
    let tag = encoder.training_mask_kind().as_bytes();
    w.u32(tag.len() as u32);
    w.0.extend_from_slice(tag);
    w.0
}

pub fn decode_encoder(bytes: &[u8]) -> Result<DenoisingEncoder> {
    let mut r = Reader::open(bytes, ENCODER_KIND)?;
    let d = r.dim()?;
    let k = r.dim()?;
    let weights = DMatrix::from_row_slice(k, d, &r.f64s(k * d)?);
    let bias = DVector::from_vec(r.f64s(k)?);
    let len = r.u32()? as usize;
    let tag = std::str::from_utf8(r.take(len)?)
        .map_err(|_| Error::Format("encoder tag is not UTF-8".into()))?
        .to_owned();
    r.finish()?;
    DenoisingEncoder::new(weights, bias, tag)
}

pub fn save_model(
    path: &Path,
    model: &FactorModel,
    diagnostics: Option<&FitDiagnostics>,
) -> Result<()> {
    fs::write(path, encode_model(model, diagnostics))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(FactorModel, Option<FitDiagnostics>)> {
    decode_model(&fs::read(path)?)
}

pub fn save_encoder(path: &Path, encoder: &DenoisingEncoder) -> Result<()> {
    fs::write(path, encode_encoder(encoder))?;
    Ok(())
}

pub fn load_encoder(path: &Path) -> Result<DenoisingEncoder> {
    decode_encoder(&fs::read(path)?)
}
