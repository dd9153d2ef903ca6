//! Middlebury `.flo` flow files.
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic, f32 LE `202021.25` (bytes `PIEH`)  |
//! | 4      | 4    | width, i32 LE                             |
//! | 8      | 4    | height, i32 LE                            |
//! | 12     | 8·wh | `(u¹, u²)` pairs as f32 LE, row-major     |

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};

pub const FLOW_MAGIC: f32 = 202021.25;

/// Raw single-precision flow, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f32; 2]>,
}

impl FlowImage {
    pub fn from_field(u: &VectorField) -> Self {
        let s = u.spec();
        Self {
            width: s.width,
            height: s.height,
            data: u
                .u1
                .values()
                .iter()
                .zip(u.u2.values())
                .map(|(&a, &b)| [a as f32, b as f32])
                .collect(),
        }
    }

    pub fn to_field(&self, spec: GridSpec) -> Result<VectorField> {
        let u1 = self.data.iter().map(|v| f64::from(v[0])).collect();
        let u2 = self.data.iter().map(|v| f64::from(v[1])).collect();
        VectorField::new(ScalarField::new(spec, u1)?, ScalarField::new(spec, u2)?)
    }
}

pub fn encode_flow(flow: &FlowImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * flow.data.len());
    out.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for [a, b] in &flow.data {
        out.extend_from_slice(&a.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    out
}

pub fn decode_flow(path: &Path, bytes: &[u8]) -> Result<FlowImage> {
    let word = |k: usize| {
        [
            bytes[4 * k],
            bytes[4 * k + 1],
            bytes[4 * k + 2],
            bytes[4 * k + 3],
        ]
    };
    if bytes.len() < 12 {
        if bytes.len() >= 4 && f32::from_le_bytes(word(0)) != FLOW_MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                found: f32::from_le_bytes(word(0)),
            });
        }
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: 12,
            found: bytes.len(),
        });
    }
    let magic = f32::from_le_bytes(word(0));
    if magic != FLOW_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let (w, h) = (i32::from_le_bytes(word(1)), i32::from_le_bytes(word(2)));
    if w <= 0 || h <= 0 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("dimensions {w}x{h}"),
        });
    }
    let (width, height) = (w as usize, h as usize);
    let expected = 12 + 8 * width * height;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: bytes.len(),
        });
    }
    let data = (0..width * height)
        .map(|p| {
            [
                f32::from_le_bytes(word(3 + 2 * p)),
                f32::from_le_bytes(word(4 + 2 * p)),
            ]
        })
        .collect();
    Ok(FlowImage {
        width,
        height,
        data,
    })
}

pub fn read_flow(path: impl AsRef<Path>) -> Result<FlowImage> {
    let path = path.as_ref();
    decode_flow(path, &super::read_bytes(path)?)
}

/// Reads a flow file and checks its size against `spec`.
pub fn read_flow_field(path: impl AsRef<Path>, spec: GridSpec) -> Result<VectorField> {
    let path = path.as_ref();
    let flow = read_flow(path)?;
    if (flow.width, flow.height) != (spec.width, spec.height) {
        return Err(Error::DimensionMismatch {
            path: path.to_path_buf(),
            expected: format!("{}x{}", spec.width, spec.height),
            found: format!("{}x{}", flow.width, flow.height),
        });
    }
    flow.to_field(spec)
}

/// Writes the field narrowed to `f32`.
pub fn write_flow(path: impl AsRef<Path>, u: &VectorField) -> Result<()> {
    super::write_bytes(path.as_ref(), &encode_flow(&FlowImage::from_field(u)))
}
