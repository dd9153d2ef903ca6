//! File formats for frames, height maps, flow fields and flow visualisations.
//!
//! All formats index samples the same way as the grid: scanline `j` of the
//! payload holds row `j` of the field. Binary PPM output is the exception; it
//! is written top row first so image viewers show x₂ pointing up, matching
//! how they display float maps.

mod color;
mod flo;
mod manifest;
mod pfm;

use std::path::Path;

use crate::error::{Error, Result};

pub use color::{
    colorize, encode_ppm, wheel_color, wheel_position, write_ppm, RgbImage, WHEEL, WHEEL_SEGMENTS,
};
pub use flo::{
    decode_flow, encode_flow, read_flow, read_flow_field, write_flow, FlowImage, FLOW_MAGIC,
};
pub use manifest::{load_frames, load_sequence, read_manifest, Manifest, Sequence};
pub use pfm::{
    decode_float_image, encode_float_image, read_float_image, write_float_image, FloatImage,
};

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            Error::io(path, e)
        }
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
