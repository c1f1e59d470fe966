//! Dataset ingestion, global rescaling, train/test splitting and CSV I/O.

use std::cmp::Ordering;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::masking::Mask;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Comma-separated numbers, one row per example.
    Csv { header: bool },
    /// Concatenated 8-bit greyscale frames, each `width*height` bytes in
    /// row-major pixel order.
    RawU8 { width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: DMatrix<f64>,
    image_shape: Option<(usize, usize)>,
    split: Option<Vec<SplitTag>>,
}

impl Dataset {
    /// `image_shape` is `(width, height)`.
    pub fn new(values: DMatrix<f64>, image_shape: Option<(usize, usize)>) -> Result<Self> {
        if let Some((w, h)) = image_shape {
            Error::check_len("image width*height", values.ncols(), w * h)?;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset values"));
        }
        Ok(Self {
            values,
            image_shape,
            split: None,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn data_dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn split_tags(&self) -> Option<&[SplitTag]> {
        self.split.as_deref()
    }

    /// Rows carrying `tag`, in original order.
    pub fn rows(&self, tag: SplitTag) -> Result<DMatrix<f64>> {
        let tags = self
            .split
            .as_ref()
            .ok_or_else(|| Error::invalid("dataset has not been split"))?;
        let picked: Vec<usize> = tags
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == tag)
            .map(|(i, _)| i)
            .collect();
        Ok(self.values.select_rows(&picked))
    }
}

pub fn load_matrix(path: &Path, format: DataFormat) -> Result<Dataset> {
    match format {
        DataFormat::Csv { header } => {
            let values = read_csv_matrix(fs::File::open(path)?, header, path)?;
            Dataset::new(values, None)
        }
        DataFormat::RawU8 { width, height } => {
            let frame = width * height;
            if frame == 0 {
                return Err(Error::invalid("frame width and height must be positive"));
            }
            let bytes = fs::read(path)?;
            if bytes.is_empty() || bytes.len() % frame != 0 {
                return Err(parse_error(
                    path,
                    format!(
                        "{} bytes is not a positive multiple of the {frame}-byte frame",
                        bytes.len()
                    ),
                ));
            }
            let rows = bytes.len() / frame;
            let values =
                DMatrix::from_row_iterator(rows, frame, bytes.iter().map(|&b| f64::from(b)));
            Dataset::new(values, Some((width, height)))
        }
    }
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        message: message.into(),
    }
}

/// Reads a numeric CSV matrix. Rows must all have the same width.
pub fn read_csv_matrix<R: Read>(reader: R, header: bool, path: &Path) -> Result<DMatrix<f64>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, e.to_string()))?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_error(
                path,
                format!("row {line} has {} fields, expected {w}", record.len()),
            ));
        }
        for cell in record.iter() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, format!("row {line}: non-numeric cell {cell:?}")))?;
            values.push(v);
        }
        rows += 1;
    }
    match width {
        Some(w) if w > 0 => Ok(DMatrix::from_row_slice(rows, w, &values)),
        _ => Err(parse_error(path, "no data rows")),
    }
}

/// Writes a matrix as CSV, optionally with an `x0,x1,...` header line.
/// Values are printed in shortest round-trip form, so output bytes are a
/// pure function of the values.
pub fn write_csv_matrix<W: Write>(writer: W, values: &DMatrix<f64>, header: bool) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    if header {
        csv.write_record((0..values.ncols()).map(|j| format!("x{j}")))
            .map_err(csv_io)?;
    }
    for row in values.row_iter() {
        csv.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_io)?;
    }
    csv.flush()?;
    Ok(())
}

/// Rows of `mask_bits,x0,...,x{D-1}`; values in missing slots are written
/// as given.
pub fn write_masked_csv<W: Write>(writer: W, values: &DMatrix<f64>, masks: &[Mask]) -> Result<()> {
    Error::check_len("masks", values.nrows(), masks.len())?;
    let mut csv = csv::Writer::from_writer(writer);
    for (row, mask) in values.row_iter().zip(masks) {
        Error::check_len("mask", values.ncols(), mask.len())?;
        let fields = std::iter::once(mask.to_bits()).chain(row.iter().map(|v| v.to_string()));
        csv.write_record(fields).map_err(csv_io)?;
    }
    csv.flush()?;
    Ok(())
}

/// Inverse of [`write_masked_csv`]. Missing slots may hold any text
/// (including `nan` or empty) and are read as NaN.
pub fn read_masked_csv<R: Read>(reader: R, path: &Path) -> Result<(DMatrix<f64>, Vec<Mask>)> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut masks = Vec::new();
    let mut width = None;
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, e.to_string()))?;
        let mut fields = record.iter();
        let bits = fields.next().unwrap_or_default();
        let mask =
            Mask::from_bits(bits).map_err(|e| parse_error(path, format!("row {line}: {e}")))?;
        let d = *width.get_or_insert(mask.len());
        if mask.len() != d || record.len() != d + 1 {
            return Err(parse_error(
                path,
                format!("row {line} does not have {d} values and a {d}-bit mask"),
            ));
        }
        for (j, cell) in fields.enumerate() {
            let v = if mask.is_observed(j) {
                cell.parse::<f64>().map_err(|_| {
                    parse_error(path, format!("row {line}: non-numeric cell {cell:?}"))
                })?
            } else {
                f64::NAN
            };
            values.push(v);
        }
        masks.push(mask);
    }
    let d = width.ok_or_else(|| parse_error(path, "no data rows"))?;
    Ok((DMatrix::from_row_slice(masks.len(), d, &values), masks))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Affine map from the global data range `[source_min, source_max]` onto
/// `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleParams {
    pub source_min: f64,
    pub source_max: f64,
    pub low: f64,
    pub high: f64,
}

impl RescaleParams {
    pub fn apply(&self, v: f64) -> f64 {
        self.low
            + (v - self.source_min) * (self.high - self.low) / (self.source_max - self.source_min)
    }

    pub fn invert(&self, v: f64) -> f64 {
        self.source_min
            + (v - self.low) * (self.source_max - self.source_min) / (self.high - self.low)
    }
}

/// Rescales every entry with one global affine map so the smallest value
/// lands on `low` and the largest on `high`.
pub fn rescale_to_unit_interval(
    dataset: &Dataset,
    low: f64,
    high: f64,
) -> Result<(Dataset, RescaleParams)> {
    if low.partial_cmp(&high) != Some(Ordering::Less) {
        return Err(Error::invalid(format!(
            "rescale target [{low}, {high}] is empty"
        )));
    }
    let values = dataset.values();
    if values.is_empty() {
        return Err(Error::invalid("cannot rescale an empty dataset"));
    }
    let (source_min, source_max) = (values.min(), values.max());
    if source_max.partial_cmp(&source_min) != Some(Ordering::Greater) {
        return Err(Error::Degenerate(
            "dataset is constant; range is zero".into(),
        ));
    }
    let params = RescaleParams {
        source_min,
        source_max,
        low,
        high,
    };
    let rescaled = Dataset {
        values: values.map(|v| params.apply(v)),
        ..dataset.clone()
    };
    Ok((rescaled, params))
}

/// Tags `floor(train_fraction · N)` rows as train through a seeded shuffle
/// and the rest as test.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<Dataset> {
    let n = dataset.n_rows();
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} of {n} rows leaves an empty split"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut tags = vec![SplitTag::Test; n];
    for &i in &order[..n_train] {
        tags[i] = SplitTag::Train;
    }
    Ok(Dataset {
        split: Some(tags),
        ..dataset.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use std::io::Cursor;

    fn csv(text: &str, header: bool) -> Result<DMatrix<f64>> {
        read_csv_matrix(Cursor::new(text), header, Path::new("mem.csv"))
    }

    #[test]
    fn reads_plain_csv() {
        assert_eq!(
            csv("1,2\n3,4", false).unwrap(),
            dmatrix![1.0, 2.0; 3.0, 4.0]
        );
        assert_eq!(csv("a,b\n1, 2\n", true).unwrap(), dmatrix![1.0, 2.0]);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(csv("", false), Err(Error::Parse { .. })));
        assert!(matches!(csv("1,2\n3\n", false), Err(Error::Parse { .. })));
        assert!(matches!(csv("1,x\n", false), Err(Error::Parse { .. })));
    }

    #[test]
    fn raw_frames() {
        let dir = tempfile::tempdir().unwrap();
        let dir = dir.path();
        let path = dir.join("frames.raw");
        let bytes: Vec<u8> = (0..3 * 560).map(|i| (i % 256) as u8).collect();
        fs::write(&path, &bytes).unwrap();
        let ds = load_matrix(
            &path,
            DataFormat::RawU8 {
                width: 20,
                height: 28,
            },
        )
        .unwrap();
        assert_eq!((ds.n_rows(), ds.data_dim()), (3, 560));
        assert_eq!(ds.values()[(1, 0)], f64::from(bytes[560]));
        assert_eq!(ds.image_shape(), Some((20, 28)));

        fs::write(&path, &bytes[..561]).unwrap();
        assert!(load_matrix(
            &path,
            DataFormat::RawU8 {
                width: 20,
                height: 28
            }
        )
        .is_err());
        fs::write(&path, b"").unwrap();
        assert!(load_matrix(
            &path,
            DataFormat::RawU8 {
                width: 20,
                height: 28
            }
        )
        .is_err());
        assert!(matches!(
            load_matrix(&dir.join("absent"), DataFormat::Csv { header: false }),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn rescale_u8_range() {
        let ds = Dataset::new(dmatrix![0.0, 127.5, 255.0], None).unwrap();
        let (scaled, params) = rescale_to_unit_interval(&ds, -1.0, 1.0).unwrap();
        assert_eq!(scaled.values(), &dmatrix![-1.0, 0.0, 1.0]);
        assert_eq!(params.invert(0.0), 127.5);
    }

    #[test]
    fn rescale_identity_and_constant() {
        let ds = Dataset::new(dmatrix![-1.0, 0.25; 1.0, 0.0], None).unwrap();
        let (scaled, _) = rescale_to_unit_interval(&ds, -1.0, 1.0).unwrap();
        assert_eq!(scaled, ds);
        let flat = Dataset::new(dmatrix![2.0, 2.0], None).unwrap();
        assert!(matches!(
            rescale_to_unit_interval(&flat, -1.0, 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn split_counts() {
        let ds = Dataset::new(DMatrix::zeros(1965, 1), None).unwrap();
        let tagged = split(&ds, 0.8, 1).unwrap();
        assert_eq!(tagged.rows(SplitTag::Train).unwrap().nrows(), 1572);
        assert_eq!(tagged.rows(SplitTag::Test).unwrap().nrows(), 393);
        assert_eq!(split(&ds, 0.8, 1).unwrap(), tagged);
        assert_ne!(
            split(&ds, 0.8, 2).unwrap().split_tags(),
            tagged.split_tags()
        );

        let two = Dataset::new(dmatrix![1.0; 2.0], None).unwrap();
        let tagged = split(&two, 0.5, 9).unwrap();
        assert_eq!(tagged.rows(SplitTag::Train).unwrap().nrows(), 1);
        assert_eq!(tagged.rows(SplitTag::Test).unwrap().nrows(), 1);
        assert!(split(&two, 1.0, 0).is_err());
        assert!(split(&two, 0.2, 0).is_err());
    }

    #[test]
    fn masked_csv_round_trip() {
        let values = dmatrix![1.5, -2.0, 0.125; 3.0, 4.0, 5.0];
        let masks = vec![Mask::from_bits("101").unwrap(), Mask::all_observed(3)];
        let mut out = Vec::new();
        write_masked_csv(&mut out, &values, &masks).unwrap();
        assert_eq!(
            String::from_utf8(out.clone()).unwrap(),
            "101,1.5,-2,0.125\n111,3,4,5\n"
        );
        let (back, back_masks) = read_masked_csv(Cursor::new(out), Path::new("mem")).unwrap();
        assert_eq!(back_masks, masks);
        assert!(back[(0, 1)].is_nan());
        assert_eq!(back[(1, 2)], 5.0);
    }

    #[test]
    fn csv_write_with_header() {
        let mut out = Vec::new();
        write_csv_matrix(&mut out, &dmatrix![0.1, 2.0], true).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x0,x1\n0.1,2\n");
        let mut empty = Vec::new();
        write_csv_matrix(&mut empty, &DMatrix::<f64>::zeros(0, 2), true).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "x0,x1\n");
    }
}
