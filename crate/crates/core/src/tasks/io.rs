//! Image and volume file formats.
//!
//! - PGM (`P5`) / PPM (`P6`): 8-bit (or 16-bit big-endian when maxval > 255).
//! - PFM: `Pf` (gray) or `PF` (RGB), little-endian `f32` with scale `-1.0`,
//!   rows stored bottom to top.
//! - Volumes: raw little-endian `f32`, x fastest, plus a JSON sidecar
//!   `{resolution, extent, threshold}` next to it with a `.json` extension.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ImageGrid;
use crate::error::{Error, Result};

fn format_err(format: &'static str, detail: impl Into<String>) -> Error {
    Error::Format { format, detail: detail.into() }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn token(&mut self, format: &'static str) -> Result<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err(format, "truncated header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| format_err(format, "non-ascii header"))
    }

    fn number<T: std::str::FromStr>(&mut self, format: &'static str) -> Result<T> {
        let t = self.token(format)?;
        t.parse().map_err(|_| format_err(format, format!("bad header field {t:?}")))
    }

    /// Skips the single whitespace byte that ends a header.
    fn body(self) -> &'a [u8] {
        &self.bytes[(self.pos + 1).min(self.bytes.len())..]
    }
}

/// Decodes PGM, PPM or PFM by magic number.
pub fn decode_image(bytes: &[u8]) -> Result<ImageGrid> {
    match bytes.get(..2) {
        Some(b"P5") | Some(b"P6") => decode_netpbm(bytes),
        Some(b"Pf") | Some(b"PF") => decode_pfm(bytes),
        _ => Err(format_err("image", "unknown magic number (expected P5, P6, Pf or PF)")),
    }
}

fn decode_netpbm(bytes: &[u8]) -> Result<ImageGrid> {
    const F: &str = "netpbm";
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token(F)?;
    let channels = if magic == "P5" { 1 } else { 3 };
    let width: usize = h.number(F)?;
    let height: usize = h.number(F)?;
    let maxval: u32 = h.number(F)?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(F, format!("maxval {maxval} out of range")));
    }
    let body = h.body();
    let n = width * height * channels;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    if body.len() < need {
        return Err(format_err(F, format!("expected {need} data bytes, found {}", body.len())));
    }
    let scale = maxval as f64;
    let pixels = (0..n)
        .map(|k| {
            let v = if wide { u16::from_be_bytes([body[2 * k], body[2 * k + 1]]) as f64 } else { body[k] as f64 };
            v / scale
        })
        .collect();
    ImageGrid::new(height, width, channels, pixels)
}

fn decode_pfm(bytes: &[u8]) -> Result<ImageGrid> {
    const F: &str = "pfm";
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token(F)?;
    let channels = if magic == "Pf" { 1 } else { 3 };
    let width: usize = h.number(F)?;
    let height: usize = h.number(F)?;
    let scale: f64 = h.number(F)?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format_err(F, "scale must be non-zero"));
    }
    let little = scale < 0.0;
    let body = h.body();
    let n = width * height * channels;
    if body.len() < 4 * n {
        return Err(format_err(F, format!("expected {} data bytes, found {}", 4 * n, body.len())));
    }
    let mut pixels = vec![0.0; n];
    let row_len = width * channels;
    for file_row in 0..height {
        let i = height - 1 - file_row;
        for k in 0..row_len {
            let off = 4 * (file_row * row_len + k);
            let raw = [body[off], body[off + 1], body[off + 2], body[off + 3]];
            let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
            pixels[i * row_len + k] = v as f64;
        }
    }
    ImageGrid::new(height, width, channels, pixels)
}

/// PGM for one channel, PPM for three; values clipped to [0, 1] and rounded.
pub fn encode_netpbm(img: &ImageGrid) -> Result<Vec<u8>> {
    let magic = match img.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::arg(format!("netpbm supports 1 or 3 channels, got {c}"))),
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn encode_pfm(img: &ImageGrid) -> Result<Vec<u8>> {
    let magic = match img.channels {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::arg(format!("pfm supports 1 or 3 channels, got {c}"))),
    };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    let row_len = img.width * img.channels;
    for i in (0..img.height).rev() {
        for v in &img.pixels[i * row_len..(i + 1) * row_len] {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Writes by extension: `.pfm` as float, anything else as PGM/PPM.
pub fn write_image(path: &Path, img: &ImageGrid) -> Result<()> {
    let bytes = match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => encode_pfm(img)?,
        _ => encode_netpbm(img)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Sidecar of a raw volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeMeta {
    pub resolution: usize,
    /// The volume covers `[-extent, extent]^3`.
    pub extent: f64,
    pub threshold: f64,
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn write_volume(path: &Path, values: &[f32], meta: &VolumeMeta) -> Result<()> {
    let r = meta.resolution;
    if values.len() != r * r * r {
        return Err(Error::shape(format!("{} values for a {r}^3 volume", values.len())));
    }
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_vec_pretty(meta)?).map_err(|e| Error::io(side, e))
}

pub fn read_volume(path: &Path) -> Result<(Vec<f32>, VolumeMeta)> {
    let side = sidecar_path(path);
    let meta_bytes = fs::read(&side).map_err(|e| Error::io(&side, e))?;
    let meta: VolumeMeta = serde_json::from_slice(&meta_bytes)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let r = meta.resolution;
    if bytes.len() != 4 * r * r * r {
        return Err(format_err("raw volume", format!("expected {} bytes, found {}", 4 * r * r * r, bytes.len())));
    }
    let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok((values, meta))
}
