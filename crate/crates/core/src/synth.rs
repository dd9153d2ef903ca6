//! Synthetic evolving-surface sequences with known flow.
//!
//! A scene is a closed-form height `z(x, t)`, a brightness pattern `F` and a
//! coordinate motion `β(x₀, t)` with `β(·, 0) = id`. Frames are rendered as
//! `f(x, t) = F(β⁻¹(x, t))`, so brightness is exactly conserved along the
//! trajectories, and the ground truth at `(x, t)` is the coordinate velocity
//! `β̇(β⁻¹(x, t), t)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::SurfaceGeometry;
use crate::grid::{ensure_same, GridSpec, Hessian, ScalarField, VectorField};

type P2 = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Flat,
    /// `z = s₁x₁ + s₂x₂`.
    Tilt {
        slope: P2,
    },
    /// `z = κ |x − c|² / 2`.
    Paraboloid {
        curvature: f64,
        center: P2,
    },
    /// `z = a (1 + r t) exp(−|x − c|² / 2σ²)`.
    MovingBump {
        amplitude: f64,
        rate: f64,
        center: P2,
        sigma: f64,
    },
}

impl Surface {
    pub fn height(&self, x: P2, t: f64) -> f64 {
        match *self {
            Surface::Flat => 0.0,
            Surface::Tilt { slope } => slope.0 * x.0 + slope.1 * x.1,
            Surface::Paraboloid { curvature, center } => {
                let (a, b) = (x.0 - center.0, x.1 - center.1);
                0.5 * curvature * (a * a + b * b)
            }
            Surface::MovingBump {
                amplitude,
                rate,
                center,
                sigma,
            } => amplitude * (1.0 + rate * t) * bump(x, center, sigma),
        }
    }

    pub fn gradient(&self, x: P2, t: f64) -> P2 {
        match *self {
            Surface::Flat => (0.0, 0.0),
            Surface::Tilt { slope } => slope,
            Surface::Paraboloid { curvature, center } => {
                (curvature * (x.0 - center.0), curvature * (x.1 - center.1))
            }
            Surface::MovingBump {
                amplitude,
                rate,
                center,
                sigma,
            } => {
                let s = -amplitude * (1.0 + rate * t) * bump(x, center, sigma) / (sigma * sigma);
                (s * (x.0 - center.0), s * (x.1 - center.1))
            }
        }
    }

    /// `(∂₁₁z, ∂₁₂z, ∂₂₂z)`.
    pub fn hessian(&self, x: P2, t: f64) -> (f64, f64, f64) {
        match *self {
            Surface::Flat | Surface::Tilt { .. } => (0.0, 0.0, 0.0),
            Surface::Paraboloid { curvature, .. } => (curvature, 0.0, curvature),
            Surface::MovingBump {
                amplitude,
                rate,
                center,
                sigma,
            } => {
                let s2 = sigma * sigma;
                let g = amplitude * (1.0 + rate * t) * bump(x, center, sigma) / s2;
                let (a, b) = (x.0 - center.0, x.1 - center.1);
                (
                    g * (a * a / s2 - 1.0),
                    g * a * b / s2,
                    g * (b * b / s2 - 1.0),
                )
            }
        }
    }

    pub fn rate(&self, x: P2, _t: f64) -> f64 {
        match *self {
            Surface::MovingBump {
                amplitude,
                rate,
                center,
                sigma,
            } => amplitude * rate * bump(x, center, sigma),
            _ => 0.0,
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, Surface::MovingBump { rate, .. } if *rate != 0.0)
    }
}

#[inline]
fn bump(x: P2, c: P2, sigma: f64) -> f64 {
    let (a, b) = (x.0 - c.0, x.1 - c.1);
    (-(a * a + b * b) / (2.0 * sigma * sigma)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub center: P2,
    pub sigma: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    /// `offset + Σ aₖ exp(−|x − cₖ|² / 2σₖ²)`.
    Gaussians { offset: f64, blobs: Vec<Blob> },
    /// `|x − c|²`.
    Quadratic { center: P2 },
}

impl Pattern {
    pub fn value(&self, x: P2) -> f64 {
        match self {
            Pattern::Gaussians { offset, blobs } => {
                offset
                    + blobs
                        .iter()
                        .map(|b| b.amplitude * bump(x, b.center, b.sigma))
                        .sum::<f64>()
            }
            Pattern::Quadratic { center } => {
                let (a, b) = (x.0 - center.0, x.1 - center.1);
                a * a + b * b
            }
        }
    }

    pub fn gradient(&self, x: P2) -> P2 {
        match self {
            Pattern::Gaussians { blobs, .. } => blobs.iter().fold((0.0, 0.0), |acc, b| {
                let s = -b.amplitude * bump(x, b.center, b.sigma) / (b.sigma * b.sigma);
                (
                    acc.0 + s * (x.0 - b.center.0),
                    acc.1 + s * (x.1 - b.center.1),
                )
            }),
            Pattern::Quadratic { center } => (2.0 * (x.0 - center.0), 2.0 * (x.1 - center.1)),
        }
    }

    fn anchors(&self) -> Vec<P2> {
        match self {
            Pattern::Gaussians { blobs, .. } => blobs.iter().map(|b| b.center).collect(),
            Pattern::Quadratic { center } => vec![*center],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Identity,
    Translation {
        velocity: P2,
    },
    /// Rigid rotation about `center` at `omega` radians per unit time.
    Rotation {
        center: P2,
        omega: f64,
    },
}

impl Motion {
    /// `β(x₀, t)`.
    pub fn forward(&self, x0: P2, t: f64) -> P2 {
        match *self {
            Motion::Identity => x0,
            Motion::Translation { velocity } => (x0.0 + velocity.0 * t, x0.1 + velocity.1 * t),
            Motion::Rotation { center, omega } => rotate(x0, center, omega * t),
        }
    }

    /// `β⁻¹(x, t)`.
    pub fn inverse(&self, x: P2, t: f64) -> P2 {
        match *self {
            Motion::Identity => x,
            Motion::Translation { velocity } => (x.0 - velocity.0 * t, x.1 - velocity.1 * t),
            Motion::Rotation { center, omega } => rotate(x, center, -omega * t),
        }
    }

    /// Eulerian coordinate velocity at `(x, t)`.
    pub fn velocity(&self, x: P2, _t: f64) -> P2 {
        match *self {
            Motion::Identity => (0.0, 0.0),
            Motion::Translation { velocity } => velocity,
            Motion::Rotation { center, omega } => {
                (-omega * (x.1 - center.1), omega * (x.0 - center.0))
            }
        }
    }

    /// Gradient of `F(β⁻¹(x, t))` from the gradient of `F` at `β⁻¹(x, t)`.
    fn pull_gradient(&self, g: P2, t: f64) -> P2 {
        match *self {
            Motion::Rotation { omega, .. } => {
                // (Dβ⁻¹)ᵀ = R(ωt).
                let (s, c) = (omega * t).sin_cos();
                (c * g.0 - s * g.1, s * g.0 + c * g.1)
            }
            _ => g,
        }
    }
}

fn rotate(x: P2, c: P2, angle: f64) -> P2 {
    let (s, co) = angle.sin_cos();
    let (a, b) = (x.0 - c.0, x.1 - c.1);
    (c.0 + co * a - s * b, c.1 + s * a + co * b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: GridSpec,
    /// Coordinates of sample `(0, 0)`.
    pub origin: P2,
    pub surface: Surface,
    pub pattern: Pattern,
    pub motion: Motion,
    pub frame_count: usize,
    /// Standard deviation and seed of optional additive Gaussian noise.
    pub noise: Option<(f64, u64)>,
}

/// Rendered frames, heights and coordinate ground-truth flow per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<ScalarField>,
    pub heights: Vec<ScalarField>,
    pub truth: Vec<VectorField>,
}

impl SyntheticScene {
    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> P2 {
        (
            self.origin.0 + i as f64 * self.spec.h,
            self.origin.1 + j as f64 * self.spec.h,
        )
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.spec.dt
    }

    fn extent(&self) -> (P2, P2) {
        let hi = self.coords(self.spec.width - 1, self.spec.height - 1);
        (self.origin, hi)
    }

    fn contains(&self, x: P2) -> bool {
        let (lo, hi) = self.extent();
        let eps = 1e-9 * self.spec.h;
        x.0 >= lo.0 - eps && x.0 <= hi.0 + eps && x.1 >= lo.1 - eps && x.1 <= hi.1 + eps
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.frame_count < 2 {
            return Err(Error::InvalidParameter(
                "a scene needs at least two frames".into(),
            ));
        }
        for a in self.pattern.anchors() {
            for k in 0..self.frame_count {
                if !self.contains(self.motion.forward(a, self.time(k))) {
                    return Err(Error::MotionLeavesDomain { frame: k });
                }
            }
        }
        Ok(())
    }

    /// `f(x, t)`.
    pub fn brightness(&self, x: P2, t: f64) -> f64 {
        self.pattern.value(self.motion.inverse(x, t))
    }

    /// `(∂₁f, ∂₂f, ∂ₜf)` in closed form. The time derivative follows from
    /// brightness constancy: `∂ₜf = −∇f · β̇`.
    pub fn brightness_derivatives(&self, x: P2, t: f64) -> (f64, f64, f64) {
        let g = self
            .motion
            .pull_gradient(self.pattern.gradient(self.motion.inverse(x, t)), t);
        let v = self.motion.velocity(x, t);
        (g.0, g.1, -(g.0 * v.0 + g.1 * v.1))
    }

    fn sample(&self, f: impl Fn(P2) -> f64) -> ScalarField {
        ScalarField::from_fn(self.spec, |i, j| f(self.coords(i, j)))
    }

    pub fn render(&self) -> Result<SyntheticSequence> {
        self.validate()?;
        let mut noise = self
            .noise
            .map(|(sigma, seed)| {
                Normal::new(0.0, sigma).map(|n| (n, ChaCha8Rng::seed_from_u64(seed)))
            })
            .transpose()
            .map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?;
        let mut out = SyntheticSequence {
            frames: Vec::with_capacity(self.frame_count),
            heights: Vec::with_capacity(self.frame_count),
            truth: Vec::with_capacity(self.frame_count),
        };
        for k in 0..self.frame_count {
            let t = self.time(k);
            let mut frame = self.sample(|x| self.brightness(x, t));
            if let Some((dist, rng)) = noise.as_mut() {
                for v in frame.values_mut() {
                    *v += dist.sample(rng);
                }
            }
            out.frames.push(frame);
            out.heights.push(self.sample(|x| self.surface.height(x, t)));
            out.truth.push(VectorField::from_fn(self.spec, |i, j| {
                self.motion.velocity(self.coords(i, j), t)
            }));
        }
        Ok(out)
    }

    /// Closed-form `(∂₁f, ∂₂f, ∂ₜf)` sampled at time `t`.
    pub fn analytic_data(&self, t: f64) -> (ScalarField, ScalarField, ScalarField) {
        let d: Vec<_> = (0..self.spec.len())
            .map(|p| {
                self.brightness_derivatives(
                    self.coords(p % self.spec.width, p / self.spec.width),
                    t,
                )
            })
            .collect();
        let f = |sel: fn(&(f64, f64, f64)) -> f64| {
            ScalarField::from_vec_unchecked(self.spec, d.iter().map(sel).collect())
        };
        (f(|d| d.0), f(|d| d.1), f(|d| d.2))
    }

    /// Geometry from closed-form derivatives of the height at time `t`,
    /// including `∂ₜz`.
    pub fn analytic_geometry(&self, t: f64) -> Result<SurfaceGeometry> {
        let s = &self.surface;
        let z = self.sample(|x| s.height(x, t));
        let dz1 = self.sample(|x| s.gradient(x, t).0);
        let dz2 = self.sample(|x| s.gradient(x, t).1);
        let hess = Hessian {
            d11: self.sample(|x| s.hessian(x, t).0),
            d12: self.sample(|x| s.hessian(x, t).1),
            d22: self.sample(|x| s.hessian(x, t).2),
        };
        let zt = self.sample(|x| s.rate(x, t));
        SurfaceGeometry::from_derivatives(z, dz1, dz2, hess, Some(zt))
    }

    /// Catalog lookup by name, e.g. `flat-translate`, `paraboloid-rotate`,
    /// `moving-bump`, `flat-quadratic`. `params` is a comma-separated list of
    /// `key=value` overrides.
    pub fn from_name(name: &str, params: &str, spec: GridSpec, frame_count: usize) -> Result<Self> {
        SceneBuilder::parse(name, params)?.build(spec, frame_count)
    }
}

/// Names accepted by [`SyntheticScene::from_name`] (surface-motion pairs
/// are also accepted in any combination).
pub const SCENE_NAMES: &[&str] = &[
    "flat-static",
    "flat-translate",
    "flat-rotate",
    "flat-quadratic",
    "tilt-translate",
    "paraboloid-translate",
    "paraboloid-rotate",
    "moving-bump",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SurfaceKind {
    Flat,
    Tilt,
    Paraboloid,
    MovingBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MotionKind {
    Static,
    Translate,
    Rotate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PatternKind {
    Mixture,
    Gaussian,
    Quadratic,
}

struct SceneBuilder {
    surface: SurfaceKind,
    motion: MotionKind,
    pattern: PatternKind,
    params: Vec<(String, f64)>,
}

impl SceneBuilder {
    fn parse(name: &str, params: &str) -> Result<Self> {
        let unknown = || Error::UnknownScene(name.to_string());
        let (surface, motion, pattern) = match name {
            "moving-bump" => (
                SurfaceKind::MovingBump,
                MotionKind::Translate,
                PatternKind::Mixture,
            ),
            "flat-quadratic" => (
                SurfaceKind::Flat,
                MotionKind::Translate,
                PatternKind::Quadratic,
            ),
            _ => {
                let (s, m) = name.rsplit_once('-').ok_or_else(unknown)?;
                let surface = match s {
                    "flat" => SurfaceKind::Flat,
                    "tilt" => SurfaceKind::Tilt,
                    "paraboloid" => SurfaceKind::Paraboloid,
                    "moving-bump" => SurfaceKind::MovingBump,
                    _ => return Err(unknown()),
                };
                let motion = match m {
                    "static" => MotionKind::Static,
                    "translate" => MotionKind::Translate,
                    "rotate" => MotionKind::Rotate,
                    _ => return Err(unknown()),
                };
                (surface, motion, PatternKind::Mixture)
            }
        };
        let mut b = SceneBuilder {
            surface,
            motion,
            pattern,
            params: Vec::new(),
        };
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("expected key=value, got `{item}`"))
            })?;
            let k = k.trim();
            if k == "pattern" {
                b.pattern = match v.trim() {
                    "mixture" => PatternKind::Mixture,
                    "gaussian" => PatternKind::Gaussian,
                    "quadratic" => PatternKind::Quadratic,
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "unknown pattern `{other}`"
                        )))
                    }
                };
                continue;
            }
            if !PARAM_KEYS.contains(&k) {
                return Err(Error::InvalidParameter(format!(
                    "unknown scene parameter `{k}`"
                )));
            }
            let v: f64 = v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("parameter `{k}` is not a number: `{v}`"))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "parameter `{k}` must be finite"
                )));
            }
            b.params.push((k.to_string(), v));
        }
        Ok(b)
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map_or(default, |&(_, v)| v)
    }

    fn build(&self, spec: GridSpec, frame_count: usize) -> Result<SyntheticScene> {
        spec.validate()?;
        let origin = (self.get("x0", 0.0), self.get("y0", 0.0));
        let ext = (
            (spec.width - 1) as f64 * spec.h,
            (spec.height - 1) as f64 * spec.h,
        );
        let center = (origin.0 + 0.5 * ext.0, origin.1 + 0.5 * ext.1);
        let size = ext.0.min(ext.1);

        let surface = match self.surface {
            SurfaceKind::Flat => Surface::Flat,
            SurfaceKind::Tilt => Surface::Tilt {
                slope: (self.get("slope", 0.5), self.get("slope2", 0.0)),
            },
            SurfaceKind::Paraboloid => Surface::Paraboloid {
                curvature: self.get("curvature", 1.0 / (spec.width as f64 * spec.h)),
                center,
            },
            SurfaceKind::MovingBump => Surface::MovingBump {
                amplitude: self.get("amp", 0.15 * size),
                rate: self.get("rate", 0.05),
                center,
                sigma: self.get("width", size / 6.0),
            },
        };
        let motion = match self.motion {
            MotionKind::Static => Motion::Identity,
            MotionKind::Translate => Motion::Translation {
                velocity: (self.get("vx", 1.0), self.get("vy", 0.0)),
            },
            MotionKind::Rotate => Motion::Rotation {
                center,
                omega: self.get("omega", 0.01),
            },
        };

        let mut scene = SyntheticScene {
            spec,
            origin,
            surface,
            pattern: Pattern::Quadratic { center },
            motion,
            frame_count,
            noise: None,
        };
        let seed = self.get("seed", 0.0) as u64;
        scene.pattern = match self.pattern {
            PatternKind::Quadratic => Pattern::Quadratic {
                center: (self.get("cx", center.0), self.get("cy", center.1)),
            },
            PatternKind::Gaussian => Pattern::Gaussians {
                offset: 0.1,
                blobs: vec![Blob {
                    center: (self.get("cx", center.0), self.get("cy", center.1)),
                    sigma: self.get("sigma", size / 8.0),
                    amplitude: 0.8,
                }],
            },
            PatternKind::Mixture => {
                let sigma = self.get("sigma", (size / 12.0).max(3.0 * spec.h));
                let area = ext.0 * ext.1;
                let default_count = (2.0 * area / (4.0 * sigma * sigma)).ceil().max(4.0);
                let count = self.get("blobs", default_count) as usize;
                Pattern::Gaussians {
                    offset: 0.1,
                    blobs: scatter_blobs(&scene, count, sigma, seed),
                }
            }
        };
        let noise = self.get("noise", 0.0);
        if noise < 0.0 {
            return Err(Error::InvalidParameter("noise must be non-negative".into()));
        }
        if noise > 0.0 {
            scene.noise = Some((noise, seed));
        }
        scene.validate()?;
        Ok(scene)
    }
}

const PARAM_KEYS: &[&str] = &[
    "x0",
    "y0",
    "slope",
    "slope2",
    "curvature",
    "amp",
    "rate",
    "width",
    "vx",
    "vy",
    "omega",
    "cx",
    "cy",
    "sigma",
    "blobs",
    "seed",
    "noise",
];

/// Blob centres drawn uniformly over the region whose trajectories stay in
/// the domain for every frame.
fn scatter_blobs(scene: &SyntheticScene, count: usize, sigma: f64, seed: u64) -> Vec<Blob> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = scene.extent();
    let mut blobs = Vec::with_capacity(count);
    let mut attempts = 0;
    while blobs.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let c = (rng.random_range(lo.0..=hi.0), rng.random_range(lo.1..=hi.1));
        let amplitude = rng.random_range(0.3..0.6);
        let s = sigma * rng.random_range(0.8..1.25);
        let stays =
            (0..scene.frame_count).all(|k| scene.contains(scene.motion.forward(c, scene.time(k))));
        if stays {
            blobs.push(Blob {
                center: c,
                sigma: s,
                amplitude,
            });
        }
    }
    blobs
}

/// Largest brightness-constancy violation `|f(β(x₀, tₖ), tₖ) − f(x₀, 0)|`
/// over trajectories started at grid points, reading frames by bilinear
/// interpolation. Trajectories that leave the sampled domain are skipped.
pub fn bca_residual(scene: &SyntheticScene, frames: &[ScalarField]) -> Result<f64> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidParameter("no frames".into()))?;
    for f in frames {
        ensure_same(f.spec(), &scene.spec)?;
    }
    let s = scene.spec;
    let mut worst = 0.0f64;
    for (k, frame) in frames.iter().enumerate().skip(1) {
        let t = scene.time(k);
        for j in 0..s.height {
            for i in 0..s.width {
                let y = scene.motion.forward(scene.coords(i, j), t);
                if let Some(v) = bilinear(scene, frame, y) {
                    worst = worst.max((v - first.at(i, j)).abs());
                }
            }
        }
    }
    Ok(worst)
}

fn bilinear(scene: &SyntheticScene, field: &ScalarField, x: P2) -> Option<f64> {
    let s = scene.spec;
    let gx = (x.0 - scene.origin.0) / s.h;
    let gy = (x.1 - scene.origin.1) / s.h;
    let snap = |g: f64| {
        if (g - g.round()).abs() < 1e-9 {
            g.round()
        } else {
            g
        }
    };
    let (gx, gy) = (snap(gx), snap(gy));
    let (wmax, hmax) = ((s.width - 1) as f64, (s.height - 1) as f64);
    if gx < 0.0 || gy < 0.0 || gx > wmax || gy > hmax {
        return None;
    }
    let i0 = (gx.floor() as usize).min(s.width - 2);
    let j0 = (gy.floor() as usize).min(s.height - 2);
    let (fx, fy) = (gx - i0 as f64, gy - j0 as f64);
    let v00 = field.at(i0, j0);
    let v10 = field.at(i0 + 1, j0);
    let v01 = field.at(i0, j0 + 1);
    let v11 = field.at(i0 + 1, j0 + 1);
    Some((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
}
