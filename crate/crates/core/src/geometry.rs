//! Differential geometry of a graph surface `x(x₁, x₂) = (x₁, x₂, z(x₁, x₂))`
//! at a fixed time.
//!
//! For a graph the metric is `g = I + ∇z ∇zᵀ`, `det g = 1 + |∇z|²`, and the
//! Christoffel symbols reduce to `Γⁱⱼₖ = ∂ᵢz ∂ⱼₖz / det g`, which is what is
//! stored here. Indices in the API are zero-based (`0` is x₁).

use crate::error::{Error, Result};
use crate::grid::{
    diff_t, diff_x1, diff_x2, ensure_same, hessian, GridSpec, Hessian, ScalarField, VectorField,
};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A 3-vector per grid point, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Vec3Field {
    pub spec: GridSpec,
    pub data: Vec<Vec3>,
}

impl Vec3Field {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vec3 {
        self.data[self.spec.index(i, j)]
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(dot3(v, v).sqrt()))
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    pub spec: GridSpec,
    pub z: ScalarField,
    pub dz1: ScalarField,
    pub dz2: ScalarField,
    pub hess: Hessian,
    pub g11: ScalarField,
    pub g12: ScalarField,
    pub g22: ScalarField,
    pub detg: ScalarField,
    pub ginv11: ScalarField,
    pub ginv12: ScalarField,
    pub ginv22: ScalarField,
    /// Γⁱⱼₖ with `j <= k`, indexed `[i][slot]` where slot 0 = (1,1),
    /// 1 = (1,2), 2 = (2,2).
    christoffel: [[ScalarField; 3]; 2],
    /// ∂ₜz, absent for a surface built as static.
    pub zt: Option<ScalarField>,
}

#[inline]
fn pair_slot(j: usize, k: usize) -> usize {
    debug_assert!(j < 2 && k < 2);
    j + k
}

impl SurfaceGeometry {
    /// Geometry from sampled heights. `z_next` is the height one frame
    /// later; its forward difference gives ∂ₜz.
    pub fn build(z: &ScalarField, z_next: Option<&ScalarField>, spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        ensure_same(z.spec(), spec)?;
        let zt = match z_next {
            Some(next) => Some(diff_t(z, next, spec.dt)?),
            None => None,
        };
        let dz1 = diff_x1(z)?;
        let dz2 = diff_x2(z)?;
        let hess = hessian(z)?;
        Self::from_derivatives(z.clone(), dz1, dz2, hess, zt)
    }

    /// Geometry from externally supplied derivatives of the height, e.g.
    /// closed-form ones.
    pub fn from_derivatives(
        z: ScalarField,
        dz1: ScalarField,
        dz2: ScalarField,
        hess: Hessian,
        zt: Option<ScalarField>,
    ) -> Result<Self> {
        let spec = *z.spec();
        for f in [&dz1, &dz2, &hess.d11, &hess.d12, &hess.d22] {
            ensure_same(f.spec(), &spec)?;
        }
        if let Some(zt) = &zt {
            ensure_same(zt.spec(), &spec)?;
        }

        let g11 = dz1.map(|a| 1.0 + a * a);
        let g12 = dz1.zip_map(&dz2, |a, b| a * b)?;
        let g22 = dz2.map(|b| 1.0 + b * b);
        let n = spec.len();
        let mut detg = Vec::with_capacity(n);
        let mut ginv11 = Vec::with_capacity(n);
        let mut ginv12 = Vec::with_capacity(n);
        let mut ginv22 = Vec::with_capacity(n);
        for p in 0..n {
            let (a, b, c) = (g11.values()[p], g12.values()[p], g22.values()[p]);
            let d = a * c - b * b;
            detg.push(d);
            ginv11.push(c / d);
            ginv12.push(-b / d);
            ginv22.push(a / d);
        }
        let detg = ScalarField::from_vec_unchecked(spec, detg);

        let dz = [&dz1, &dz2];
        let christoffel = std::array::from_fn(|i| {
            std::array::from_fn(|slot| {
                let hjk = match slot {
                    0 => &hess.d11,
                    1 => &hess.d12,
                    _ => &hess.d22,
                };
                let v = (0..n)
                    .map(|p| dz[i].values()[p] * hjk.values()[p] / detg.values()[p])
                    .collect();
                ScalarField::from_vec_unchecked(spec, v)
            })
        });

        Ok(Self {
            spec,
            z,
            dz1,
            dz2,
            hess,
            g11,
            g12,
            g22,
            detg,
            ginv11: ScalarField::from_vec_unchecked(spec, ginv11),
            ginv12: ScalarField::from_vec_unchecked(spec, ginv12),
            ginv22: ScalarField::from_vec_unchecked(spec, ginv22),
            christoffel,
            zt,
        })
    }

    /// The plane z ≡ 0.
    pub fn flat(spec: GridSpec) -> Self {
        Self::build(&ScalarField::zeros(spec), None, &spec).expect("valid flat geometry")
    }

    /// Γⁱⱼₖ, zero-based. `christoffel(i, j, k)` and `christoffel(i, k, j)`
    /// return the same field.
    #[inline]
    pub fn christoffel(&self, i: usize, j: usize, k: usize) -> &ScalarField {
        &self.christoffel[i][pair_slot(j, k)]
    }

    #[inline]
    pub fn is_static(&self) -> bool {
        self.zt.is_none()
    }

    /// Surface-gradient coordinates `g⁻¹ (fx1, fx2)` at a single sample.
    #[inline]
    pub(crate) fn raise(&self, p: usize, a: f64, b: f64) -> (f64, f64) {
        let (i11, i12, i22) = (
            self.ginv11.values()[p],
            self.ginv12.values()[p],
            self.ginv22.values()[p],
        );
        (i11 * a + i12 * b, i12 * a + i22 * b)
    }

    /// `J c` for the coefficient pair `c` at a single sample.
    #[inline]
    pub(crate) fn embed(&self, p: usize, c1: f64, c2: f64) -> Vec3 {
        [
            c1,
            c2,
            c1 * self.dz1.values()[p] + c2 * self.dz2.values()[p],
        ]
    }

    #[inline]
    pub(crate) fn normal_at(&self, p: usize) -> Vec3 {
        let s = 1.0 / self.detg.values()[p].sqrt();
        [-self.dz1.values()[p] * s, -self.dz2.values()[p] * s, s]
    }
}

/// Convenience wrapper for [`SurfaceGeometry::build`].
pub fn build_geometry(
    z: &ScalarField,
    z_next: Option<&ScalarField>,
    spec: &GridSpec,
) -> Result<SurfaceGeometry> {
    SurfaceGeometry::build(z, z_next, spec)
}

/// Coefficients `g⁻¹ ∇f` of the surface gradient; the embedded gradient is
/// `J` applied to them.
pub fn surface_gradient_coeffs(
    geom: &SurfaceGeometry,
    fx1: &ScalarField,
    fx2: &ScalarField,
) -> Result<VectorField> {
    ensure_same(fx1.spec(), &geom.spec)?;
    ensure_same(fx2.spec(), &geom.spec)?;
    let spec = geom.spec;
    let (mut a, mut b) = (
        Vec::with_capacity(spec.len()),
        Vec::with_capacity(spec.len()),
    );
    for p in 0..spec.len() {
        let (x, y) = geom.raise(p, fx1.values()[p], fx2.values()[p]);
        a.push(x);
        b.push(y);
    }
    Ok(VectorField {
        u1: ScalarField::from_vec_unchecked(spec, a),
        u2: ScalarField::from_vec_unchecked(spec, b),
    })
}

/// Ambient vectors `J u = (u¹, u², u¹∂₁z + u²∂₂z)`.
pub fn embed_tangent(geom: &SurfaceGeometry, u: &VectorField) -> Result<Vec3Field> {
    ensure_same(u.spec(), &geom.spec)?;
    let data = (0..geom.spec.len())
        .map(|p| geom.embed(p, u.u1.values()[p], u.u2.values()[p]))
        .collect();
    Ok(Vec3Field {
        spec: geom.spec,
        data,
    })
}

/// Upward unit normal `(-∂₁z, -∂₂z, 1) / √det g`.
pub fn unit_normal(geom: &SurfaceGeometry) -> Vec3Field {
    let data = (0..geom.spec.len()).map(|p| geom.normal_at(p)).collect();
    Vec3Field {
        spec: geom.spec,
        data,
    }
}

/// Projection of the surface velocity `(0, 0, ∂ₜz)` onto the tangent plane.
pub fn tangential_surface_velocity(geom: &SurfaceGeometry) -> Result<Vec3Field> {
    let zt = geom.zt.as_ref().ok_or(Error::StaticSurface)?;
    let data = (0..geom.spec.len())
        .map(|p| {
            let v = [0.0, 0.0, zt.values()[p]];
            let n = geom.normal_at(p);
            let s = dot3(&v, &n);
            [v[0] - s * n[0], v[1] - s * n[1], v[2] - s * n[2]]
        })
        .collect();
    Ok(Vec3Field {
        spec: geom.spec,
        data,
    })
}

/// Coordinates `g⁻¹ Jᵀ w` of the tangential part of ambient vectors `w`.
pub fn tangent_coordinates(geom: &SurfaceGeometry, w: &Vec3Field) -> Result<VectorField> {
    ensure_same(&w.spec, &geom.spec)?;
    let spec = geom.spec;
    let (mut a, mut b) = (
        Vec::with_capacity(spec.len()),
        Vec::with_capacity(spec.len()),
    );
    for (p, v) in w.data.iter().enumerate() {
        let jt1 = v[0] + geom.dz1.values()[p] * v[2];
        let jt2 = v[1] + geom.dz2.values()[p] * v[2];
        let (x, y) = geom.raise(p, jt1, jt2);
        a.push(x);
        b.push(y);
    }
    Ok(VectorField {
        u1: ScalarField::from_vec_unchecked(spec, a),
        u2: ScalarField::from_vec_unchecked(spec, b),
    })
}

/// Coordinates of the absolute tangential motion `ẋ_tan + J β̇` for a
/// relative (coordinate) flow `beta_dot`.
pub fn absolute_tangential_coords(
    geom: &SurfaceGeometry,
    beta_dot: &VectorField,
) -> Result<VectorField> {
    let coords = tangent_coordinates(geom, &tangential_surface_velocity(geom)?)?;
    coords.axpy(1.0, beta_dot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centred_spec(n: usize) -> GridSpec {
        GridSpec::new(n, n, 1.0, 1.0).unwrap()
    }

    /// Field sampled at coordinates centred on the middle of an n x n unit grid.
    fn centred(n: usize, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let c = (n / 2) as f64;
        ScalarField::from_fn(centred_spec(n), |i, j| f(i as f64 - c, j as f64 - c))
    }

    #[test]
    fn flat_surface_is_euclidean() {
        let spec = centred_spec(5);
        let z = ScalarField::zeros(spec);
        let g = build_geometry(&z, Some(&z), &spec).unwrap();
        for p in 0..spec.len() {
            assert_eq!(g.g11.values()[p], 1.0);
            assert_eq!(g.g12.values()[p], 0.0);
            assert_eq!(g.g22.values()[p], 1.0);
            assert_eq!(g.detg.values()[p], 1.0);
            assert_eq!(g.ginv11.values()[p], 1.0);
            assert_eq!(g.ginv12.values()[p], 0.0);
            assert_eq!(g.ginv22.values()[p], 1.0);
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(g.christoffel(i, j, k).max_abs(), 0.0);
                }
            }
        }
        assert_eq!(g.zt.as_ref().unwrap().max_abs(), 0.0);
        assert_eq!(unit_normal(&g).at(2, 2), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn tilted_plane() {
        let z = centred(5, |x, _| x);
        let g = build_geometry(&z, None, z.spec()).unwrap();
        for p in 0..25 {
            assert_eq!(g.g11.values()[p], 2.0);
            assert_eq!(g.g12.values()[p], 0.0);
            assert_eq!(g.g22.values()[p], 1.0);
            assert_eq!(g.detg.values()[p], 2.0);
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(g.christoffel(i, j, k).max_abs() < 1e-15);
                }
            }
        }
        let n = unit_normal(&g).at(2, 2);
        let s = 1.0 / 2f64.sqrt();
        assert!((n[0] + s).abs() < 1e-15 && n[1].abs() < 1e-15 && (n[2] - s).abs() < 1e-15);

        let grad = surface_gradient_coeffs(
            &g,
            &ScalarField::constant(g.spec, 1.0),
            &ScalarField::zeros(g.spec),
        )
        .unwrap();
        assert_eq!(grad.at(2, 2), (0.5, 0.0));

        let e = embed_tangent(&g, &VectorField::constant(g.spec, 1.0, 0.0)).unwrap();
        assert_eq!(e.at(2, 2), [1.0, 0.0, 1.0]);
    }

    #[test]
    fn paraboloid_christoffel_symbols() {
        // Sample (1, 0) is interior, where central differences are exact.
        let z = centred(7, |x, y| 0.5 * (x * x + y * y));
        let g = build_geometry(&z, None, z.spec()).unwrap();
        let (i, j) = (4, 3);
        assert_eq!(g.detg.at(i, j), 2.0);
        assert_eq!(g.christoffel(0, 0, 0).at(i, j), 0.5);
        assert_eq!(g.christoffel(0, 1, 1).at(i, j), 0.5);
        assert_eq!(g.christoffel(1, 0, 1).at(i, j), 0.0);
        assert_eq!(g.christoffel(1, 0, 0).at(i, j), 0.0);
        assert!(std::ptr::eq(g.christoffel(1, 0, 1), g.christoffel(1, 1, 0)));
    }

    #[test]
    fn flat_gradient_and_embedding() {
        let g = SurfaceGeometry::flat(centred_spec(4));
        let one = ScalarField::constant(g.spec, 1.0);
        let zero = ScalarField::zeros(g.spec);
        assert_eq!(
            surface_gradient_coeffs(&g, &one, &zero).unwrap().at(1, 1),
            (1.0, 0.0)
        );
        assert_eq!(
            surface_gradient_coeffs(&g, &zero, &zero).unwrap().max_abs(),
            0.0
        );
        assert_eq!(
            embed_tangent(&g, &VectorField::constant(g.spec, 3.0, 4.0))
                .unwrap()
                .at(1, 2),
            [3.0, 4.0, 0.0]
        );
        assert_eq!(
            embed_tangent(&g, &VectorField::zeros(g.spec))
                .unwrap()
                .max_norm(),
            0.0
        );
    }

    #[test]
    fn static_build_has_no_surface_velocity() {
        let g = SurfaceGeometry::flat(centred_spec(4));
        assert!(matches!(
            tangential_surface_velocity(&g),
            Err(Error::StaticSurface)
        ));
    }

    #[test]
    fn zero_height_rate_gives_zero_tangential_velocity() {
        let z = centred(6, |x, y| (0.3 * x).sin() + 0.1 * y * y);
        let g = build_geometry(&z, Some(&z), z.spec()).unwrap();
        assert_eq!(tangential_surface_velocity(&g).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn normal_velocity_on_flat_surface_projects_to_zero() {
        // z(x, t) = t x₁ at t = 0: ∇z = 0, ∂ₜz = x₁.
        let spec = centred_spec(5);
        let z = ScalarField::zeros(spec);
        let zt = centred(5, |x, _| x);
        let hess = hessian(&z).unwrap();
        let g = SurfaceGeometry::from_derivatives(z.clone(), z.clone(), z.clone(), hess, Some(zt))
            .unwrap();
        assert_eq!(tangential_surface_velocity(&g).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn tilted_plane_rising_uniformly() {
        let z = centred(5, |x, _| x);
        let next = z.map(|v| v + 1.0);
        let g = build_geometry(&z, Some(&next), z.spec()).unwrap();
        let v = tangential_surface_velocity(&g).unwrap().at(2, 2);
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!(v[1].abs() < 1e-15);
        assert!((v[2] - 0.5).abs() < 1e-15);
        // Its coordinates (1/2, 0) embed back to the same vector.
        let c = tangent_coordinates(&g, &tangential_surface_velocity(&g).unwrap()).unwrap();
        let (a, b) = c.at(2, 2);
        assert!((a - 0.5).abs() < 1e-15 && b.abs() < 1e-15);
    }
}
