//! Flow error statistics against ground truth.

use crate::error::Result;
use crate::grid::{ensure_same, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowErrors {
    pub mean_epe: f64,
    pub median_epe: f64,
    pub max_epe: f64,
    /// Mean angle in degrees between `(u, 1)` and `(u_true, 1)`.
    pub mean_angular: f64,
    pub max_magnitude: f64,
}

/// Per-sample endpoint error `|u − u_true|`.
pub fn endpoint_errors(u: &VectorField, truth: &VectorField) -> Result<Vec<f64>> {
    ensure_same(u.spec(), truth.spec())?;
    Ok((0..u.spec().len())
        .map(|p| {
            (u.u1.values()[p] - truth.u1.values()[p]).hypot(u.u2.values()[p] - truth.u2.values()[p])
        })
        .collect())
}

fn angular_error(a: (f64, f64), b: (f64, f64)) -> f64 {
    let num = a.0 * b.0 + a.1 * b.1 + 1.0;
    let den = ((a.0 * a.0 + a.1 * a.1 + 1.0) * (b.0 * b.0 + b.1 * b.1 + 1.0)).sqrt();
    (num / den).clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn flow_errors(u: &VectorField, truth: &VectorField) -> Result<FlowErrors> {
    let mut epe = endpoint_errors(u, truth)?;
    let n = epe.len() as f64;
    let mean_epe = epe.iter().sum::<f64>() / n;
    let max_epe = epe.iter().copied().fold(0.0, f64::max);
    epe.sort_by(f64::total_cmp);
    let m = epe.len();
    let median_epe = if m % 2 == 1 {
        epe[m / 2]
    } else {
        0.5 * (epe[m / 2 - 1] + epe[m / 2])
    };
    let ang = (0..m)
        .map(|p| {
            angular_error(
                (u.u1.values()[p], u.u2.values()[p]),
                (truth.u1.values()[p], truth.u2.values()[p]),
            )
        })
        .sum::<f64>();
    let max_magnitude = (0..m)
        .map(|p| u.u1.values()[p].hypot(u.u2.values()[p]))
        .fold(0.0, f64::max);
    Ok(FlowErrors {
        mean_epe,
        median_epe,
        max_epe,
        mean_angular: ang / n,
        max_magnitude,
    })
}
