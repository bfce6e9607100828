//! On-disk grid encodings.
//!
//! `RSGF1`: the 5 magic bytes `RSGF1`, then `height` and `width` as u32
//! little-endian, then `height * width` f32 little-endian values, row-major.
//! Label maps are stored as integer-valued floats, or as binary PGM (`P5`).
//! Desk-scale grids may also be written as JSON `{"height","width","values"}`.

use std::fs;
use std::path::Path;

use super::{GridData, LabelMap, ProbabilityMap};
use crate::error::{Error, Result};

pub const RSGF_MAGIC: &[u8; 5] = b"RSGF1";

/// An unvalidated real-valued grid as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl RawGrid {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + 4 * self.values.len());
        out.extend_from_slice(RSGF_MAGIC);
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 13 || &bytes[..5] != RSGF_MAGIC {
            return Err(Error::Format("missing RSGF1 header".into()));
        }
        let height = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let width = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let body = &bytes[13..];
        let expected = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
        if body.len() != expected {
            return Err(Error::Format(format!(
                "{height}x{width} grid needs {expected} payload bytes, found {}",
                body.len()
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(RawGrid {
            height,
            width,
            values,
        })
    }

    pub fn from_probability_map(map: &ProbabilityMap) -> Self {
        RawGrid {
            height: map.height(),
            width: map.width(),
            values: map.values().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_labels(labels: &LabelMap) -> Self {
        RawGrid {
            height: labels.height(),
            width: labels.width(),
            values: labels.labels().iter().map(|&l| l as f32).collect(),
        }
    }

    pub fn to_probability_map(&self) -> Result<ProbabilityMap> {
        ProbabilityMap::new(
            self.height,
            self.width,
            self.values.iter().map(|&v| v as f64).collect(),
        )
    }

    pub fn to_labels(&self) -> Result<LabelMap> {
        let labels = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| {
                if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f32 {
                    Ok(v as usize)
                } else {
                    Err(Error::Format(format!(
                        "label at ({},{}) is not a non-negative integer: {v}",
                        idx / self.width.max(1),
                        idx % self.width.max(1)
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LabelMap::new(self.height, self.width, labels)
    }
}

/// Encodes labels as binary PGM with maxval 255.
pub fn encode_pgm(labels: &LabelMap) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n255\n", labels.width(), labels.height()).into_bytes();
    for &l in labels.labels() {
        let byte = u8::try_from(l)
            .map_err(|_| Error::Format(format!("label {l} does not fit in a PGM byte")))?;
        out.push(byte);
    }
    Ok(out)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<LabelMap> {
    // Header: magic, width, height, maxval separated by whitespace; `#` comments.
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
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
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Format(format!("unsupported PGM magic `{}`", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM header field `{s}`")))
    };
    let width = parse(&fields[1])?;
    let height = parse(&fields[2])?;
    let maxval = parse(&fields[3])?;
    if maxval > 255 {
        return Err(Error::Format("16-bit PGM is not supported".into()));
    }
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != width * height {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, expected {}",
            raster.len(),
            width * height
        )));
    }
    LabelMap::new(height, width, raster.iter().map(|&b| b as usize).collect())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Reads a grid from RSGF1, or JSON when the extension is `.json`.
pub fn read_raw(path: &Path) -> Result<RawGrid> {
    let bytes = read(path)?;
    if is_json(path) {
        let data: GridData = serde_json::from_slice(&bytes)?;
        return Ok(RawGrid {
            height: data.height,
            width: data.width,
            values: data.values.iter().map(|&v| v as f32).collect(),
        });
    }
    RawGrid::decode(&bytes)
}

pub fn write_raw(path: &Path, grid: &RawGrid) -> Result<()> {
    if is_json(path) {
        let data = GridData {
            height: grid.height,
            width: grid.width,
            values: grid.values.iter().map(|&v| v as f64).collect(),
        };
        let mut bytes = serde_json::to_vec(&data)?;
        bytes.push(b'\n');
        return write(path, &bytes);
    }
    write(path, &grid.encode())
}

pub fn read_probability_map(path: &Path) -> Result<ProbabilityMap> {
    if is_json(path) {
        return Ok(serde_json::from_slice(&read(path)?)?);
    }
    read_raw(path)?.to_probability_map()
}

pub fn write_probability_map(path: &Path, map: &ProbabilityMap) -> Result<()> {
    if is_json(path) {
        let mut bytes = serde_json::to_vec(map)?;
        bytes.push(b'\n');
        return write(path, &bytes);
    }
    write(path, &RawGrid::from_probability_map(map).encode())
}

/// Reads labels from PGM (`.pgm`), JSON or RSGF1.
pub fn read_labels(path: &Path) -> Result<LabelMap> {
    if path.extension().is_some_and(|e| e == "pgm") {
        return decode_pgm(&read(path)?);
    }
    read_raw(path)?.to_labels()
}

pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    if path.extension().is_some_and(|e| e == "pgm") {
        return write(path, &encode_pgm(labels)?);
    }
    write_raw(path, &RawGrid::from_labels(labels))
}
