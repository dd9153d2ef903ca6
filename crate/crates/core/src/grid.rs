//! Regular-grid containers and finite-difference stencils.
//!
//! Samples are stored row-major: the sample at column `i` (along x₁) and row
//! `j` (along x₂) lives at `j * width + i`. First derivatives use the
//! symmetric stencil `(v[i+1] - v[i-1]) / 2h` in the interior and first-order
//! one-sided differences on the boundary rows and columns.

use crate::error::{Error, Result};

/// Sampling layout shared by every field of one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// Grid spacing.
    pub h: f64,
    /// Temporal displacement between consecutive frames.
    pub dt: f64,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, h: f64, dt: f64) -> Result<Self> {
        let spec = Self {
            width,
            height,
            h,
            dt,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::InvalidGrid(format!(
                "grid must be at least 3x3, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing h must be positive, got {}",
                self.h
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    /// True for samples on the outermost rows or columns.
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.width || j + 1 == self.height
    }

    /// Compares sample counts only, ignoring spacing and time step.
    #[inline]
    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// A finite real sample per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    /// Builds a field, rejecting wrong lengths and non-finite samples.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::LengthMismatch {
                expected: spec.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Samples `f(i, j)` at every grid index.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.height {
            for i in 0..spec.width {
                values.push(f(i, j));
            }
        }
        Self { spec, values }
    }

    pub(crate) fn from_vec_unchecked(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same(&self.spec, &other.spec)?;
        Ok(Self::from_vec_unchecked(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute value over samples at least `margin` points away
    /// from every edge.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let s = self.spec;
        let mut m = 0.0f64;
        for j in margin..s.height.saturating_sub(margin) {
            for i in margin..s.width.saturating_sub(margin) {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }
}

/// Coefficient pair (u¹, u²) of a tangential field in the coordinate basis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        ensure_same(u1.spec(), u2.spec())?;
        Ok(Self { u1, u2 })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            u1: ScalarField::zeros(spec),
            u2: ScalarField::zeros(spec),
        }
    }

    pub fn constant(spec: GridSpec, a: f64, b: f64) -> Self {
        Self {
            u1: ScalarField::constant(spec, a),
            u2: ScalarField::constant(spec, b),
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let mut a = Vec::with_capacity(spec.len());
        let mut b = Vec::with_capacity(spec.len());
        for j in 0..spec.height {
            for i in 0..spec.width {
                let (x, y) = f(i, j);
                a.push(x);
                b.push(y);
            }
        }
        Self {
            u1: ScalarField::from_vec_unchecked(spec, a),
            u2: ScalarField::from_vec_unchecked(spec, b),
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.u1.spec()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        (self.u1.at(i, j), self.u2.at(i, j))
    }

    /// Largest absolute coefficient over both components.
    pub fn max_abs(&self) -> f64 {
        self.u1.max_abs().max(self.u2.max_abs())
    }

    /// Pointwise `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &VectorField) -> Result<Self> {
        Ok(Self {
            u1: self.u1.zip_map(&other.u1, |a, b| a + scale * b)?,
            u2: self.u2.zip_map(&other.u2, |a, b| a + scale * b)?,
        })
    }

    /// Euclidean inner product of the coefficient vectors.
    pub fn dot(&self, other: &VectorField) -> f64 {
        let a = self.u1.values().iter().zip(other.u1.values());
        let b = self.u2.values().iter().zip(other.u2.values());
        a.chain(b).map(|(x, y)| x * y).sum()
    }
}

pub(crate) fn ensure_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.same_shape(b) && a.h == b.h {
        Ok(())
    } else {
        Err(Error::SpecMismatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Axis {
    X1,
    X2,
}

impl Axis {
    pub(crate) fn from_index(j: usize) -> Axis {
        if j == 0 {
            Axis::X1
        } else {
            Axis::X2
        }
    }
}

/// Stencil of the first derivative along `axis` at `(i, j)`: flat sample
/// indices with their weights. End points use one-sided differences.
#[inline]
pub(crate) fn first_diff_stencil(
    spec: &GridSpec,
    axis: Axis,
    i: usize,
    j: usize,
) -> [(usize, f64); 2] {
    let (pos, n, stride) = match axis {
        Axis::X1 => (i, spec.width, 1),
        Axis::X2 => (j, spec.height, spec.width),
    };
    let p = spec.index(i, j);
    let inv_h = 1.0 / spec.h;
    if pos == 0 {
        [(p, -inv_h), (p + stride, inv_h)]
    } else if pos + 1 == n {
        [(p - stride, -inv_h), (p, inv_h)]
    } else {
        [(p - stride, -0.5 * inv_h), (p + stride, 0.5 * inv_h)]
    }
}

fn diff_axis(field: &ScalarField, axis: Axis) -> Result<ScalarField> {
    let spec = *field.spec();
    spec.validate()?;
    let v = field.values();
    let out = ScalarField::from_fn(spec, |i, j| {
        let [(a, wa), (b, wb)] = first_diff_stencil(&spec, axis, i, j);
        // Ordering keeps the central stencil exactly (v[+] - v[-]) / 2h.
        wb * v[b] + wa * v[a]
    });
    Ok(out)
}

/// ∂₁ of a field.
pub fn diff_x1(field: &ScalarField) -> Result<ScalarField> {
    diff_axis(field, Axis::X1)
}

/// ∂₂ of a field.
pub fn diff_x2(field: &ScalarField) -> Result<ScalarField> {
    diff_axis(field, Axis::X2)
}

/// Forward difference `(frame_b - frame_a) / dt` between two frames.
pub fn diff_t(frame_a: &ScalarField, frame_b: &ScalarField, dt: f64) -> Result<ScalarField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    frame_a.zip_map(frame_b, |a, b| (b - a) / dt)
}

/// Second derivatives of a scalar field. The mixed derivative is stored once
/// so that ∂₁₂ and ∂₂₁ agree exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub d11: ScalarField,
    pub d12: ScalarField,
    pub d22: ScalarField,
}

impl Hessian {
    #[inline]
    pub fn d21(&self) -> &ScalarField {
        &self.d12
    }

    /// Entry ∂ⱼₖ for zero-based axis indices.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> &ScalarField {
        match (j, k) {
            (0, 0) => &self.d11,
            (1, 1) => &self.d22,
            _ => &self.d12,
        }
    }
}

fn second_diff_axis(field: &ScalarField, axis: Axis) -> ScalarField {
    let spec = *field.spec();
    let v = field.values();
    let inv_h2 = 1.0 / (spec.h * spec.h);
    ScalarField::from_fn(spec, |i, j| {
        let (pos, n, stride) = match axis {
            Axis::X1 => (i, spec.width, 1),
            Axis::X2 => (j, spec.height, spec.width),
        };
        // Boundary samples reuse the centred stencil of their inner neighbour.
        let c = spec.index(i, j);
        let c = if pos == 0 {
            c + stride
        } else if pos + 1 == n {
            c - stride
        } else {
            c
        };
        (v[c + stride] - 2.0 * v[c] + v[c - stride]) * inv_h2
    })
}

/// Second central differences; mixed term is `diff_x2(diff_x1(field))`.
pub fn hessian(field: &ScalarField) -> Result<Hessian> {
    field.spec().validate()?;
    let d11 = second_diff_axis(field, Axis::X1);
    let d22 = second_diff_axis(field, Axis::X2);
    let d12 = diff_x2(&diff_x1(field)?)?;
    Ok(Hessian { d11, d12, d22 })
}
