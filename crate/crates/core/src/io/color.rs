//! Flow colour coding on the 55-entry Middlebury wheel.
//!
//! The wheel runs red → yellow → green → cyan → blue → magenta → red in
//! segments of 15, 6, 4, 11, 13 and 6 entries. A vector at angle `θ`
//! (counter-clockwise from +x₁) sits at wheel position `55 θ / 2π`, so `(1, 0)`
//! is pure red and opposite vectors are 27.5 entries apart. Colours between
//! entries are interpolated linearly, wrapping from entry 54 back to 0.
//! Saturation is `r = min(|u| / max, 1)` and each channel is
//! `1 − r (1 − wheel)`, so zero flow is white.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::VectorField;

/// Segment lengths: red-yellow, yellow-green, green-cyan, cyan-blue,
/// blue-magenta, magenta-red.
pub const WHEEL_SEGMENTS: [usize; 6] = [15, 6, 4, 11, 13, 6];

const N: usize = 55;

pub const WHEEL: [[u8; 3]; N] = build_wheel();

const fn build_wheel() -> [[u8; 3]; N] {
    let mut w = [[0u8; 3]; N];
    let mut k = 0;
    let mut seg = 0;
    while seg < 6 {
        let len = WHEEL_SEGMENTS[seg];
        let mut i = 0;
        while i < len {
            let up = (255 * i / len) as u8;
            let down = 255 - up;
            w[k] = match seg {
                0 => [255, up, 0],
                1 => [down, 255, 0],
                2 => [0, 255, up],
                3 => [0, down, 255],
                4 => [up, 0, 255],
                _ => [255, 0, down],
            };
            i += 1;
            k += 1;
        }
        seg += 1;
    }
    w
}

/// Row-major 8-bit RGB image in grid order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

/// Wheel position in `[0, 55)` of the direction `(u, v)`.
pub fn wheel_position(u: f64, v: f64) -> f64 {
    let a = v.atan2(u).rem_euclid(std::f64::consts::TAU);
    let pos = a / std::f64::consts::TAU * N as f64;
    // Snap values a few ulps away from an entry so anchor angles hit it.
    let r = pos.round();
    let pos = if (pos - r).abs() < 1e-9 { r } else { pos };
    if pos >= N as f64 {
        0.0
    } else {
        pos
    }
}

/// Interpolated wheel colour at `pos`, channels in `[0, 1]`.
pub fn wheel_color(pos: f64) -> [f64; 3] {
    let pos = pos.rem_euclid(N as f64);
    let k0 = (pos.floor() as usize).min(N - 1);
    let k1 = (k0 + 1) % N;
    let f = pos - k0 as f64;
    let mut c = [0.0; 3];
    for (ch, out) in c.iter_mut().enumerate() {
        *out = ((1.0 - f) * f64::from(WHEEL[k0][ch]) + f * f64::from(WHEEL[k1][ch])) / 255.0;
    }
    c
}

fn encode(u: f64, v: f64, max: f64) -> [u8; 3] {
    let mag = u.hypot(v);
    if mag == 0.0 {
        return [255; 3];
    }
    let r = (mag / max).min(1.0);
    let c = wheel_color(wheel_position(u, v));
    c.map(|w| (255.0 * (1.0 - r * (1.0 - w))).round().clamp(0.0, 255.0) as u8)
}

/// Nearest-rank 99th percentile of `|u|`, or 1 when that is zero.
fn auto_max(u: &VectorField) -> f64 {
    let mut m: Vec<f64> =
        u.u1.values()
            .iter()
            .zip(u.u2.values())
            .map(|(a, b)| a.hypot(*b))
            .collect();
    m.sort_by(f64::total_cmp);
    let rank = ((0.99 * m.len() as f64).ceil() as usize).clamp(1, m.len());
    let p = m[rank - 1];
    if p > 0.0 && p.is_finite() {
        p
    } else {
        1.0
    }
}

/// Colour-codes a flow field. `max_magnitude = None` normalises by the 99th
/// percentile of the vector lengths.
pub fn colorize(u: &VectorField, max_magnitude: Option<f64>) -> Result<RgbImage> {
    let max = match max_magnitude {
        Some(m) if m > 0.0 && m.is_finite() => m,
        Some(m) => {
            return Err(Error::InvalidParameter(format!(
                "max magnitude must be positive, got {m}"
            )))
        }
        None => auto_max(u),
    };
    let s = u.spec();
    Ok(RgbImage {
        width: s.width,
        height: s.height,
        data: u
            .u1
            .values()
            .iter()
            .zip(u.u2.values())
            .map(|(&a, &b)| encode(a, b, max))
            .collect(),
    })
}

/// Binary PPM (`P6`, maxval 255), top row (largest `j`) first.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for row in img.data.chunks(img.width).rev() {
        for px in row {
            out.extend_from_slice(px);
        }
    }
    out
}

pub fn write_ppm(path: impl AsRef<Path>, img: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_ppm(img))
        .map_err(|e| Error::io(path, e))
}
