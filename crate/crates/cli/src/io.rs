//! Whitespace-separated `.dat` tables and 16-bit PGM images.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sparsecert_core::fresnel::Image;

use crate::error::CliError;

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write_text(path, &s)
}

/// One row per entry, columns separated by a single space. Floats use the
/// shortest representation that reads back exactly.
pub fn format_dat<R: AsRef<[f64]>>(rows: impl IntoIterator<Item = R>) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for v in row.as_ref() {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_dat<R: AsRef<[f64]>>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
    write_text(path, &format_dat(rows))
}

/// Rows of a `.dat` file. Blank lines and `#` comments are skipped.
pub fn read_dat(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| CliError::Parse {
                        path: path.to_path_buf(),
                        message: format!("line {}: {e}", n + 1),
                    })
                })
                .collect()
        })
        .collect()
}

/// Last column of every row.
pub fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    read_dat(path)?
        .into_iter()
        .map(|r| {
            r.last().copied().ok_or_else(|| CliError::Parse {
                path: path.to_path_buf(),
                message: "empty row".into(),
            })
        })
        .collect()
}

/// Linear grey-level mapping of a PGM, stored next to it as JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub width: usize,
    pub height: usize,
    /// Intensity at grey level 0.
    pub min: f64,
    /// Intensity at grey level 65535.
    pub max: f64,
}

/// Binary 16-bit PGM, first row at the top. Returns the grey-level scale.
pub fn encode_pgm16(image: &Image) -> (Vec<u8>, PgmScale) {
    let (min, max) = image
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if max > min { max - min } else { 1.0 };
    let mut out = format!("P5\n{} {}\n65535\n", image.width, image.height).into_bytes();
    out.reserve(2 * image.data.len());
    for &v in &image.data {
        let g = ((v - min) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&g.to_be_bytes());
    }
    let scale = PgmScale {
        width: image.width,
        height: image.height,
        min,
        max,
    };
    (out, scale)
}

/// Writes `path` and a `.json` sidecar holding the grey-level scale.
pub fn write_pgm16(path: &Path, image: &Image) -> Result<(), CliError> {
    let (bytes, scale) = encode_pgm16(image);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    write_json(&path.with_extension("json"), &scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dat_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.dat");
        let rows = vec![vec![0.1 + 0.2, -1e-300], vec![3.0, f64::MAX]];
        write_dat(&p, &rows).unwrap();
        assert_eq!(read_dat(&p).unwrap(), rows);
        assert_eq!(read_values(&p).unwrap(), vec![-1e-300, f64::MAX]);
    }

    #[test]
    fn pgm_header_and_extremes() {
        let img = Image {
            width: 3,
            height: 2,
            data: vec![0.5, 1.0, 1.5, 1.0, 1.0, 1.0],
        };
        let (bytes, scale) = encode_pgm16(&img);
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 12);
        assert_eq!(u16::from_be_bytes([px[0], px[1]]), 0);
        assert_eq!(u16::from_be_bytes([px[4], px[5]]), 65535);
        assert_eq!(u16::from_be_bytes([px[2], px[3]]), 32768);
        assert_eq!((scale.min, scale.max), (0.5, 1.5));
    }
}
