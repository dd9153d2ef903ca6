//! Optical flow constraints, the covariant derivative and the regularised
//! energy
//!
//! ```text
//! E(u) = ½ Σₚ h² √det g [ α (∇f·u + ∂ₜf)² + Σᵢⱼ (Dⱼuⁱ)² ]
//! ```
//!
//! with `Dⱼuⁱ = ∂ⱼuⁱ + Σₖ Γⁱⱼₖ uᵏ`. The energy is a weighted sum of squares of
//! five affine forms per grid point (one data residual, four covariant
//! derivative entries). Its gradient is computed exactly from those forms, so
//! the linear system solved downstream is the stationarity condition of this
//! discrete energy.

use crate::error::{Error, Result};
use crate::geometry::{dot3, SurfaceGeometry};
use crate::grid::{
    diff_t, diff_x1, diff_x2, ensure_same, first_diff_stencil, Axis, GridSpec, ScalarField,
    VectorField,
};

/// Regularisation weight used by the reference experiments.
pub const DEFAULT_ALPHA: f64 = 10.0;

/// Data and geometry of one frame pair.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub spec: GridSpec,
    pub fx1: ScalarField,
    pub fx2: ScalarField,
    pub ft: ScalarField,
    pub geom: SurfaceGeometry,
    pub alpha: f64,
}

impl FlowProblem {
    pub fn new(
        fx1: ScalarField,
        fx2: ScalarField,
        ft: ScalarField,
        geom: SurfaceGeometry,
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let spec = geom.spec;
        for f in [&fx1, &fx2, &ft] {
            ensure_same(f.spec(), &spec)?;
        }
        Ok(Self {
            spec,
            fx1,
            fx2,
            ft,
            geom,
            alpha,
        })
    }

    /// Spatial derivatives averaged over both frames, forward time
    /// difference from `frame_a` to `frame_b` over `dt`. Both are then
    /// centred half a step after `frame_a`.
    pub fn from_frames(
        frame_a: &ScalarField,
        frame_b: &ScalarField,
        dt: f64,
        geom: SurfaceGeometry,
        alpha: f64,
    ) -> Result<Self> {
        let avg = |a: ScalarField, b: ScalarField| a.zip_map(&b, |x, y| 0.5 * (x + y));
        let fx1 = avg(diff_x1(frame_a)?, diff_x1(frame_b)?)?;
        let fx2 = avg(diff_x2(frame_a)?, diff_x2(frame_b)?)?;
        let ft = diff_t(frame_a, frame_b, dt)?;
        Self::new(fx1, fx2, ft, geom, alpha)
    }

    /// Quadrature weight `h² √det g` per sample.
    pub(crate) fn cell_weights(&self) -> Vec<f64> {
        let h2 = self.spec.h * self.spec.h;
        self.geom
            .detg
            .values()
            .iter()
            .map(|d| h2 * d.sqrt())
            .collect()
    }
}

/// Entries `Dⱼuⁱ`; `dij` holds direction `j` of component `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantDerivative {
    pub d11: ScalarField,
    pub d12: ScalarField,
    pub d21: ScalarField,
    pub d22: ScalarField,
}

impl CovariantDerivative {
    /// Zero-based access: component `i`, direction `j`.
    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        match (i, j) {
            (0, 0) => &self.d11,
            (0, 1) => &self.d12,
            (1, 0) => &self.d21,
            _ => &self.d22,
        }
    }

    /// Pointwise squared Frobenius norm.
    pub fn frobenius_sq(&self) -> ScalarField {
        let spec = *self.d11.spec();
        ScalarField::from_vec_unchecked(
            spec,
            (0..spec.len())
                .map(|p| {
                    let a = self.d11.values()[p];
                    let b = self.d12.values()[p];
                    let c = self.d21.values()[p];
                    let d = self.d22.values()[p];
                    a * a + b * b + c * c + d * d
                })
                .collect(),
        )
    }
}

/// Pulled-back constraint `∇f · u + ∂ₜf`.
pub fn ofc_residual(problem: &FlowProblem, u: &VectorField) -> Result<ScalarField> {
    ensure_same(u.spec(), &problem.spec)?;
    let (a, b, t) = (
        problem.fx1.values(),
        problem.fx2.values(),
        problem.ft.values(),
    );
    let (u1, u2) = (u.u1.values(), u.u2.values());
    Ok(ScalarField::from_vec_unchecked(
        problem.spec,
        (0..problem.spec.len())
            .map(|p| a[p] * u1[p] + b[p] * u2[p] + t[p])
            .collect(),
    ))
}

/// Parametrisation-free constraint `∇_M f̃ · γ̇_tan + dⁿₜ f̃`.
///
/// `f_param_t` is the time derivative of the pulled-back data (the derivative
/// following the parametrisation) and `v_tan_coeffs` the coordinates of the
/// absolute tangential velocity. The normal time derivative is recovered as
/// `f_param_t − ∇_M f̃ · ẋ`; every inner product is taken between embedded
/// 3-vectors. A static geometry is treated as `ẋ = 0`.
pub fn intrinsic_ofc_residual(
    geom: &SurfaceGeometry,
    fx1: &ScalarField,
    fx2: &ScalarField,
    f_param_t: &ScalarField,
    v_tan_coeffs: &VectorField,
) -> Result<ScalarField> {
    let spec = geom.spec;
    for f in [fx1, fx2, f_param_t] {
        ensure_same(f.spec(), &spec)?;
    }
    ensure_same(v_tan_coeffs.spec(), &spec)?;
    let out = (0..spec.len())
        .map(|p| {
            let (c1, c2) = geom.raise(p, fx1.values()[p], fx2.values()[p]);
            let grad = geom.embed(p, c1, c2);
            let gamma = geom.embed(p, v_tan_coeffs.u1.values()[p], v_tan_coeffs.u2.values()[p]);
            let xdot = [0.0, 0.0, geom.zt.as_ref().map_or(0.0, |zt| zt.values()[p])];
            let normal_rate = f_param_t.values()[p] - dot3(&grad, &xdot);
            dot3(&grad, &gamma) + normal_rate
        })
        .collect();
    Ok(ScalarField::from_vec_unchecked(spec, out))
}

/// `Dⱼuⁱ = ∂ⱼuⁱ + Σₖ Γⁱⱼₖ uᵏ` with the grid difference stencils.
pub fn covariant_derivative(
    geom: &SurfaceGeometry,
    u: &VectorField,
) -> Result<CovariantDerivative> {
    ensure_same(u.spec(), &geom.spec)?;
    let comps = [&u.u1, &u.u2];
    let entry = |i: usize, j: usize| -> Result<ScalarField> {
        let d = if j == 0 {
            diff_x1(comps[i])?
        } else {
            diff_x2(comps[i])?
        };
        let g1 = geom.christoffel(i, j, 0).values();
        let g2 = geom.christoffel(i, j, 1).values();
        let (u1, u2) = (u.u1.values(), u.u2.values());
        Ok(ScalarField::from_vec_unchecked(
            geom.spec,
            d.values()
                .iter()
                .enumerate()
                .map(|(p, &v)| v + g1[p] * u1[p] + g2[p] * u2[p])
                .collect(),
        ))
    };
    Ok(CovariantDerivative {
        d11: entry(0, 0)?,
        d12: entry(0, 1)?,
        d21: entry(1, 0)?,
        d22: entry(1, 1)?,
    })
}

/// Rectangle-rule energy, accumulated sequentially in row-major order.
pub fn energy(problem: &FlowProblem, u: &VectorField) -> Result<f64> {
    let r = ofc_residual(problem, u)?;
    let du = covariant_derivative(&problem.geom, u)?.frobenius_sq();
    let h2 = problem.spec.h * problem.spec.h;
    let mut total = 0.0;
    for p in 0..problem.spec.len() {
        let rp = r.values()[p];
        let integrand = problem.alpha * rp * rp + du.values()[p];
        total += integrand * problem.geom.detg.values()[p].sqrt() * h2;
    }
    Ok(0.5 * total)
}

/// Exact gradient of [`energy`] with respect to the grid values of `u`.
pub fn energy_gradient(problem: &FlowProblem, u: &VectorField) -> Result<VectorField> {
    ensure_same(u.spec(), &problem.spec)?;
    let terms = Terms::new(problem);
    let mut res = vec![0.0; terms.n_forms()];
    terms.evaluate(u.u1.values(), u.u2.values(), true, &mut res);
    let n = problem.spec.len();
    let (mut g1, mut g2) = (vec![0.0; n], vec![0.0; n]);
    terms.scatter(&res, &mut g1, &mut g2);
    Ok(VectorField {
        u1: ScalarField::from_vec_unchecked(problem.spec, g1),
        u2: ScalarField::from_vec_unchecked(problem.spec, g2),
    })
}

pub(crate) const FORMS_PER_POINT: usize = 5;

/// Maximum number of forms that involve a single unknown.
pub(crate) const MAX_TOUCHING: usize = 9;

/// The affine forms whose weighted squares make up the energy.
///
/// Form `5p` is the data residual at point `p` (weight `α w_p`) and form
/// `5p + 1 + 2i + j` is `Dⱼuⁱ` at `p` (weight `w_p`), with
/// `w_p = h² √det g`. Coefficients are regenerated from the problem fields
/// on every use; nothing is assembled.
pub(crate) struct Terms<'a> {
    problem: &'a FlowProblem,
    weights: Vec<f64>,
}

impl<'a> Terms<'a> {
    pub(crate) fn new(problem: &'a FlowProblem) -> Self {
        Self {
            problem,
            weights: problem.cell_weights(),
        }
    }

    #[inline]
    pub(crate) fn n_forms(&self) -> usize {
        FORMS_PER_POINT * self.problem.spec.len()
    }

    #[inline]
    pub(crate) fn form_weight(&self, id: usize) -> f64 {
        let w = self.weights[id / FORMS_PER_POINT];
        if id.is_multiple_of(FORMS_PER_POINT) {
            self.problem.alpha * w
        } else {
            w
        }
    }

    #[inline]
    fn gamma(&self, i: usize, j: usize, k: usize, p: usize) -> f64 {
        self.problem.geom.christoffel(i, j, k).values()[p]
    }

    /// Values of every form at `u`; with `affine == false` the constant
    /// `∂ₜf` is dropped, giving the homogeneous part.
    pub(crate) fn evaluate(&self, u1: &[f64], u2: &[f64], affine: bool, out: &mut [f64]) {
        let pr = self.problem;
        let spec = pr.spec;
        let comps = [u1, u2];
        for j in 0..spec.height {
            for i in 0..spec.width {
                let p = spec.index(i, j);
                let base = FORMS_PER_POINT * p;
                let t = if affine { pr.ft.values()[p] } else { 0.0 };
                out[base] = pr.fx1.values()[p] * u1[p] + pr.fx2.values()[p] * u2[p] + t;
                for c in 0..2 {
                    for ax in 0..2 {
                        let [(a, wa), (b, wb)] =
                            first_diff_stencil(&spec, Axis::from_index(ax), i, j);
                        let u = comps[c];
                        out[base + 1 + 2 * c + ax] = wb * u[b]
                            + wa * u[a]
                            + self.gamma(c, ax, 0, p) * u1[p]
                            + self.gamma(c, ax, 1, p) * u2[p];
                    }
                }
            }
        }
    }

    /// Accumulates `Σ_f weight_f · res_f · ∇(form_f)` into `g1`, `g2`.
    pub(crate) fn scatter(&self, res: &[f64], g1: &mut [f64], g2: &mut [f64]) {
        let pr = self.problem;
        let spec = pr.spec;
        for j in 0..spec.height {
            for i in 0..spec.width {
                let p = spec.index(i, j);
                let base = FORMS_PER_POINT * p;
                let r = self.form_weight(base) * res[base];
                g1[p] += r * pr.fx1.values()[p];
                g2[p] += r * pr.fx2.values()[p];
                for c in 0..2 {
                    for ax in 0..2 {
                        let id = base + 1 + 2 * c + ax;
                        let r = self.form_weight(id) * res[id];
                        let [(a, wa), (b, wb)] =
                            first_diff_stencil(&spec, Axis::from_index(ax), i, j);
                        let g = if c == 0 { &mut *g1 } else { &mut *g2 };
                        g[a] += r * wa;
                        g[b] += r * wb;
                        g1[p] += r * self.gamma(c, ax, 0, p);
                        g2[p] += r * self.gamma(c, ax, 1, p);
                    }
                }
            }
        }
    }

    /// Forms that involve unknown `u^m` at grid point `(qi, qj)`, with the
    /// coefficient of that unknown in each. Returns the number of entries.
    pub(crate) fn touching(
        &self,
        m: usize,
        qi: usize,
        qj: usize,
        out: &mut [(usize, f64); MAX_TOUCHING],
    ) -> usize {
        let pr = self.problem;
        let spec = pr.spec;
        let q = spec.index(qi, qj);
        let fm = if m == 0 {
            pr.fx1.values()[q]
        } else {
            pr.fx2.values()[q]
        };
        out[0] = (FORMS_PER_POINT * q, fm);
        let mut n = 1;
        for ax in 0..2 {
            let axis = Axis::from_index(ax);
            let (pos, len) = if ax == 0 {
                (qi, spec.width)
            } else {
                (qj, spec.height)
            };
            for off in [-1isize, 0, 1] {
                let np = pos as isize + off;
                if np < 0 || np as usize >= len {
                    continue;
                }
                let (pi, pj) = if ax == 0 {
                    (np as usize, qj)
                } else {
                    (qi, np as usize)
                };
                let p = spec.index(pi, pj);
                let mut coef = 0.0;
                for (idx, w) in first_diff_stencil(&spec, axis, pi, pj) {
                    if idx == q {
                        coef += w;
                    }
                }
                if p == q {
                    coef += self.gamma(m, ax, m, q);
                }
                out[n] = (FORMS_PER_POINT * p + 1 + 2 * m + ax, coef);
                n += 1;
            }
            let other = 1 - m;
            out[n] = (
                FORMS_PER_POINT * q + 1 + 2 * other + ax,
                self.gamma(other, ax, m, q),
            );
            n += 1;
        }
        n
    }
}
