//! Single-channel portable float map.
//!
//! ```text
//! "Pf" LF  "<width> <height>" LF  "<scale>" LF  payload
//! ```
//!
//! A negative scale marks a little-endian payload, a positive one big-endian.
//! The payload is `width * height` 32-bit floats, scanline 0 first. Files are
//! written little-endian with scale `-1.0`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Raw single-precision image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    /// Narrows a field to single precision.
    pub fn from_field(field: &ScalarField) -> Self {
        let s = field.spec();
        Self {
            width: s.width,
            height: s.height,
            data: field.values().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_field(&self, spec: GridSpec) -> Result<ScalarField> {
        ScalarField::new(spec, self.data.iter().map(|&v| f64::from(v)).collect())
    }
}

pub fn encode_float_image(img: &FloatImage) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    out.reserve(4 * img.data.len());
    for v in &img.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_float_image(path: &Path, bytes: &[u8]) -> Result<FloatImage> {
    let bad = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut pos = 0;
    let mut token = || -> Option<&[u8]> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| &bytes[start..pos])
    };
    match token() {
        Some(b"Pf") => {}
        Some(b"PF") => return Err(bad("three-channel maps are not supported")),
        _ => return Err(bad("missing `Pf` tag")),
    }
    let mut number = |what: &str| -> Result<String> {
        let t = token().ok_or_else(|| bad(&format!("missing {what}")))?;
        String::from_utf8(t.to_vec()).map_err(|_| bad(&format!("{what} is not text")))
    };
    let width: usize = number("width")?
        .parse()
        .map_err(|_| bad("width is not an integer"))?;
    let height: usize = number("height")?
        .parse()
        .map_err(|_| bad("height is not an integer"))?;
    let scale: f64 = number("scale")?
        .parse()
        .map_err(|_| bad("scale is not a number"))?;
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be finite and nonzero"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("header not terminated"));
    }
    let payload = &bytes[pos + 1..];
    let n = width
        .checked_mul(height)
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| bad("dimensions overflow"))?;
    if payload.len() != 4 * n {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: 4 * n,
            found: payload.len(),
        });
    }
    let little = scale < 0.0;
    let mut data = Vec::with_capacity(n);
    for (index, c) in payload.chunks_exact(4).enumerate() {
        let b = [c[0], c[1], c[2], c[3]];
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                path: path.to_path_buf(),
                index,
            });
        }
        data.push(v);
    }
    Ok(FloatImage {
        width,
        height,
        data,
    })
}

pub fn read_float_image(path: impl AsRef<Path>) -> Result<FloatImage> {
    let path = path.as_ref();
    decode_float_image(path, &super::read_bytes(path)?)
}

/// Writes the field narrowed to `f32`.
pub fn write_float_image(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    super::write_bytes(
        path.as_ref(),
        &encode_float_image(&FloatImage::from_field(field)),
    )
}
