//! Binary greyscale PGM (`P5`, maxval 255) images for imputation dumps.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Quantizes row-major `values`, mapping `low` to 0 and `high` to 255
    /// and clamping outside that range.
    pub fn from_values(
        values: &[f64],
        width: usize,
        height: usize,
        low: f64,
        high: f64,
    ) -> Result<Self> {
        Error::check_len("image pixels", width * height, values.len())?;
        if high.partial_cmp(&low) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::invalid(format!(
                "display range [{low}, {high}] is empty"
            )));
        }
        let pixels = values
            .iter()
            .map(|&v| {
                let t = ((v - low) / (high - low)).clamp(0.0, 1.0);
                if t.is_nan() {
                    0
                } else {
                    (t * 255.0).round() as u8
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Places images side by side, separated by `gap` columns of `fill`.
    pub fn hconcat(panels: &[GrayImage], gap: usize, fill: u8) -> Result<Self> {
        let height = panels.first().map_or(0, |p| p.height);
        if panels.iter().any(|p| p.height != height) {
            return Err(Error::invalid("panels must share a height"));
        }
        let width =
            panels.iter().map(|p| p.width).sum::<usize>() + gap * panels.len().saturating_sub(1);
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for (i, panel) in panels.iter().enumerate() {
                if i > 0 {
                    pixels.extend(std::iter::repeat_n(fill, gap));
                }
                pixels.extend_from_slice(&panel.pixels[r * panel.width..(r + 1) * panel.width]);
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Stacks images vertically; widths must match.
    pub fn vconcat(panels: &[GrayImage]) -> Result<Self> {
        let width = panels.first().map_or(0, |p| p.width);
        if panels.iter().any(|p| p.width != width) {
            return Err(Error::invalid("panels must share a width"));
        }
        Ok(Self {
            width,
            height: panels.iter().map(|p| p.height).sum(),
            pixels: panels
                .iter()
                .flat_map(|p| p.pixels.iter().copied())
                .collect(),
        })
    }

    pub fn write_pgm<W: Write>(&self, mut writer: W) -> Result<()> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        writer.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn read_pgm<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Format(format!(
                "expected P5 magic, got {:?}",
                fields[0]
            )));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PGM field {s:?}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(Error::Format(format!(
                "only maxval 255 is supported, got {maxval}"
            )));
        }
        let data = &bytes[pos + 1..];
        if data.len() != width * height {
            return Err(Error::Format(format!(
                "PGM body has {} bytes, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: data.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantizes_and_round_trips() {
        let img = GrayImage::from_values(&[-1.0, 0.0, 1.0, 5.0], 2, 2, -1.0, 1.0).unwrap();
        assert_eq!(img.pixels, vec![0, 128, 255, 255]);
        let mut buf = Vec::new();
        img.write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(GrayImage::read_pgm(&buf[..]).unwrap(), img);
    }

    #[test]
    fn concatenation() {
        let a = GrayImage {
            width: 1,
            height: 2,
            pixels: vec![1, 2],
        };
        let b = GrayImage {
            width: 2,
            height: 2,
            pixels: vec![3, 4, 5, 6],
        };
        let strip = GrayImage::hconcat(&[a.clone(), b.clone()], 1, 9).unwrap();
        assert_eq!(strip.width, 4);
        assert_eq!(strip.pixels, vec![1, 9, 3, 4, 2, 9, 5, 6]);
        let stacked = GrayImage::vconcat(&[b.clone(), b]).unwrap();
        assert_eq!(stacked.height, 4);
        assert!(GrayImage::vconcat(&[a, strip]).is_err());
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(GrayImage::read_pgm(&b"P2\n1 1\n255\n\x00"[..]).is_err());
        assert!(GrayImage::read_pgm(&b"P5\n2 2\n255\n\x00"[..]).is_err());
    }
}
