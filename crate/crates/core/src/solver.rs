//! Linear solve of the stationarity condition `∇E(u) = A u + b = 0`.
//!
//! `A` is never stored. It is applied through the per-point affine forms of
//! the energy, and the SOR sweep regenerates the coefficients of each unknown
//! on the fly. Every SOR coordinate step minimises the energy along that
//! coordinate scaled by `omega`, so for `0 < omega < 2` the energy cannot
//! increase.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::SurfaceGeometry;
use crate::grid::{ensure_same, ScalarField, VectorField};
use crate::model::{covariant_derivative, energy, FlowProblem, Terms, MAX_TOUCHING};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    SuccessiveOverRelaxation,
    ConjugateGradient,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SuccessiveOverRelaxation => "sor",
            Method::ConjugateGradient => "cg",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sor" => Ok(Method::SuccessiveOverRelaxation),
            "cg" => Ok(Method::ConjugateGradient),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver method `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Stop once the infinity norm of the energy gradient is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor, SOR only.
    pub omega: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::SuccessiveOverRelaxation,
            tol: 1e-6,
            max_iter: 50_000,
            omega: 1.9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in (0, 2), got {}",
                self.omega
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub method: Method,
    pub iterations: usize,
    pub grad_inf_norm: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub converged: bool,
}

/// Matrix-free handle on `A u + b`.
pub struct LinearSystem<'a> {
    problem: &'a FlowProblem,
    terms: Terms<'a>,
    rhs: VectorField,
}

/// Prepares the operator and computes `b = ∇E(0)`.
pub fn assemble(problem: &FlowProblem) -> LinearSystem<'_> {
    let terms = Terms::new(problem);
    let mut sys = LinearSystem {
        problem,
        terms,
        rhs: VectorField::zeros(problem.spec),
    };
    let zero = VectorField::zeros(problem.spec);
    sys.rhs = sys.eval(&zero, true);
    sys
}

impl<'a> LinearSystem<'a> {
    fn eval(&self, u: &VectorField, affine: bool) -> VectorField {
        let mut res = vec![0.0; self.terms.n_forms()];
        self.terms
            .evaluate(u.u1.values(), u.u2.values(), affine, &mut res);
        let mut out = VectorField::zeros(self.problem.spec);
        self.terms
            .scatter(&res, out.u1.values_mut(), out.u2.values_mut());
        out
    }

    pub fn problem(&self) -> &FlowProblem {
        self.problem
    }

    /// `A u`.
    pub fn apply(&self, u: &VectorField) -> VectorField {
        self.eval(u, false)
    }

    /// `b`.
    pub fn rhs(&self) -> &VectorField {
        &self.rhs
    }

    /// `A u + b`, the energy gradient.
    pub fn gradient(&self, u: &VectorField) -> VectorField {
        self.eval(u, true)
    }

    /// Diagonal of `A`.
    pub fn diagonal(&self) -> VectorField {
        let spec = self.problem.spec;
        let mut out = VectorField::zeros(spec);
        let mut buf = [(0usize, 0.0f64); MAX_TOUCHING];
        for m in 0..2 {
            for j in 0..spec.height {
                for i in 0..spec.width {
                    let k = self.terms.touching(m, i, j, &mut buf);
                    let d: f64 = buf[..k]
                        .iter()
                        .map(|&(id, c)| self.terms.form_weight(id) * c * c)
                        .sum();
                    let field = if m == 0 { &mut out.u1 } else { &mut out.u2 };
                    field.values_mut()[spec.index(i, j)] = d;
                }
            }
        }
        out
    }
}

/// Solves with `u0` (zero if absent) as the starting point.
pub fn solve(
    problem: &FlowProblem,
    config: &SolverConfig,
    u0: Option<&VectorField>,
) -> Result<(VectorField, SolverReport)> {
    solve_observed(problem, config, u0, |_, _| {})
}

/// Like [`solve`], calling `observer(k, u_k)` after every iteration.
pub fn solve_observed(
    problem: &FlowProblem,
    config: &SolverConfig,
    u0: Option<&VectorField>,
    observer: impl FnMut(usize, &VectorField),
) -> Result<(VectorField, SolverReport)> {
    config.validate()?;
    let u = match u0 {
        Some(u0) => {
            ensure_same(u0.spec(), &problem.spec)?;
            u0.clone()
        }
        None => VectorField::zeros(problem.spec),
    };
    let energy_initial = energy(problem, &u)?;
    let sys = assemble(problem);
    let (u, iterations, grad_inf_norm) = match config.method {
        Method::SuccessiveOverRelaxation => run_sor(&sys, config, u, observer),
        Method::ConjugateGradient => run_cg(&sys, config, u, observer),
    };
    let energy_final = energy(problem, &u)?;
    let report = SolverReport {
        method: config.method,
        iterations,
        grad_inf_norm,
        energy_initial,
        energy_final,
        converged: grad_inf_norm <= config.tol,
    };
    Ok((u, report))
}

fn run_sor(
    sys: &LinearSystem<'_>,
    config: &SolverConfig,
    mut u: VectorField,
    mut observer: impl FnMut(usize, &VectorField),
) -> (VectorField, usize, f64) {
    let terms = &sys.terms;
    let spec = sys.problem.spec;
    let mut res = vec![0.0; terms.n_forms()];
    let mut grad = VectorField::zeros(spec);
    let mut buf = [(0usize, 0.0f64); MAX_TOUCHING];

    // Residuals are rebuilt from u at the start of each sweep; the in-sweep
    // updates only need to be consistent within one pass.
    let refresh = |u: &VectorField, res: &mut [f64], grad: &mut VectorField| -> f64 {
        terms.evaluate(u.u1.values(), u.u2.values(), true, res);
        grad.u1.values_mut().fill(0.0);
        grad.u2.values_mut().fill(0.0);
        terms.scatter(res, grad.u1.values_mut(), grad.u2.values_mut());
        grad.max_abs()
    };

    let mut norm = refresh(&u, &mut res, &mut grad);
    let mut iter = 0;
    while norm > config.tol && iter < config.max_iter {
        for j in 0..spec.height {
            for i in 0..spec.width {
                let q = spec.index(i, j);
                for m in 0..2 {
                    let k = terms.touching(m, i, j, &mut buf);
                    let (mut g, mut d) = (0.0, 0.0);
                    for &(id, c) in &buf[..k] {
                        let w = terms.form_weight(id) * c;
                        g += w * res[id];
                        d += w * c;
                    }
                    if d <= 0.0 {
                        continue;
                    }
                    let delta = -config.omega * g / d;
                    let field = if m == 0 { &mut u.u1 } else { &mut u.u2 };
                    field.values_mut()[q] += delta;
                    for &(id, c) in &buf[..k] {
                        res[id] += c * delta;
                    }
                }
            }
        }
        iter += 1;
        observer(iter, &u);
        norm = refresh(&u, &mut res, &mut grad);
    }
    (u, iter, norm)
}

/// Jacobi-preconditioned conjugate gradients on `A u = -b`. The residual is
/// recomputed from scratch every `RESTART` iterations and the search
/// direction reset.
fn run_cg(
    sys: &LinearSystem<'_>,
    config: &SolverConfig,
    mut u: VectorField,
    mut observer: impl FnMut(usize, &VectorField),
) -> (VectorField, usize, f64) {
    const RESTART: usize = 50;
    let n = sys.problem.spec.len();
    let diag = sys.diagonal();
    let inv_diag: Vec<f64> = diag
        .u1
        .values()
        .iter()
        .chain(diag.u2.values())
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let flat = |v: &VectorField| -> Vec<f64> {
        v.u1.values().iter().chain(v.u2.values()).copied().collect()
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let inf = |a: &[f64]| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let to_field = |v: &[f64]| -> VectorField {
        VectorField {
            u1: ScalarField::from_vec_unchecked(sys.problem.spec, v[..n].to_vec()),
            u2: ScalarField::from_vec_unchecked(sys.problem.spec, v[n..].to_vec()),
        }
    };

    let mut x = flat(&u);
    let mut r: Vec<f64> = flat(&sys.gradient(&u)).into_iter().map(|g| -g).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iter = 0;
    let mut norm = inf(&r);

    while norm > config.tol && iter < config.max_iter {
        let ap = flat(&sys.apply(&to_field(&p)));
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            break;
        }
        let a = rz / pap;
        for k in 0..2 * n {
            x[k] += a * p[k];
            r[k] -= a * ap[k];
        }
        iter += 1;
        u = to_field(&x);
        observer(iter, &u);

        let restart = iter % RESTART == 0;
        if restart {
            r = flat(&sys.gradient(&u)).into_iter().map(|g| -g).collect();
        }
        norm = inf(&r);
        for k in 0..2 * n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = if restart { 0.0 } else { rz_new / rz };
        for k in 0..2 * n {
            p[k] = z[k] + beta * p[k];
        }
        rz = rz_new;
    }
    // Report the true gradient, not the recursively updated residual.
    let u = to_field(&x);
    let norm = sys.gradient(&u).max_abs();
    (u, iter, norm)
}

/// Residual of the natural boundary conditions `∂ⱼuⁱ + Σₖ Γⁱⱼₖ uᵏ = 0` on
/// edges normal to xⱼ, evaluated with the one-sided boundary stencils. Each
/// boundary sample holds the largest absolute residual over its components
/// (and both edges at corners); interior samples are zero.
pub fn check_natural_bc(geom: &SurfaceGeometry, u: &VectorField) -> Result<ScalarField> {
    let d = covariant_derivative(geom, u)?;
    let s = geom.spec;
    Ok(ScalarField::from_fn(s, |i, j| {
        let mut m = 0.0f64;
        if i == 0 || i + 1 == s.width {
            m = m.max(d.d11.at(i, j).abs()).max(d.d21.at(i, j).abs());
        }
        if j == 0 || j + 1 == s.height {
            m = m.max(d.d12.at(i, j).abs()).max(d.d22.at(i, j).abs());
        }
        m
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_geometry;
    use crate::grid::GridSpec;
    use crate::model::energy_gradient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(seed: u64, n: usize, curved: bool) -> FlowProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = GridSpec::new(n, n, 1.0, 1.0).unwrap();
        let geom = if curved {
            let a = rng.random_range(0.1..0.3);
            let z = ScalarField::from_fn(s, |i, j| {
                2.0 * (a * i as f64).sin() * (0.2 * j as f64).cos()
            });
            build_geometry(&z, None, &s).unwrap()
        } else {
            SurfaceGeometry::flat(s)
        };
        let mut f = |_: usize, _: usize| rng.random_range(-1.0..1.0);
        let fx1 = ScalarField::from_fn(s, &mut f);
        let fx2 = ScalarField::from_fn(s, &mut f);
        let ft = ScalarField::from_fn(s, &mut f);
        FlowProblem::new(fx1, fx2, ft, geom, 10.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for omega in [0.0, 2.0, -1.0] {
            assert!(SolverConfig {
                omega,
                ..Default::default()
            }
            .validate()
            .is_err());
        }
        assert!(SolverConfig {
            tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            max_iter: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!("cg".parse::<Method>().unwrap(), Method::ConjugateGradient);
        assert!("gmres".parse::<Method>().is_err());
    }

    #[test]
    fn operator_is_linear_part_of_gradient() {
        let p = random_problem(1, 8, true);
        let sys = assemble(&p);
        assert_eq!(sys.apply(&VectorField::zeros(p.spec)).max_abs(), 0.0);
        let g0 = energy_gradient(&p, &VectorField::zeros(p.spec)).unwrap();
        assert_eq!(&g0, sys.rhs());

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let w = VectorField::from_fn(p.spec, |_, _| {
                (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            assert!(sys.apply(&w).dot(&w) >= 0.0);
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let p = random_problem(4, 9, true);
        let sys = assemble(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rnd = || {
            VectorField::from_fn(p.spec, |_, _| {
                (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        };
        for _ in 0..10 {
            let (a, b) = (rnd(), rnd());
            let lhs = sys.apply(&a).dot(&b);
            let rhs = a.dot(&sys.apply(&b));
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn diagonal_matches_unit_probes() {
        let p = random_problem(8, 6, true);
        let sys = assemble(&p);
        let d = sys.diagonal();
        for q in [0usize, 7, 20, 35] {
            let mut e = VectorField::zeros(p.spec);
            e.u2.values_mut()[q] = 1.0;
            let col = sys.apply(&e);
            assert!((col.u2.values()[q] - d.u2.values()[q]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_temporal_change_returns_zero_flow() {
        let s = GridSpec::new(8, 8, 1.0, 1.0).unwrap();
        let p = FlowProblem::new(
            ScalarField::constant(s, 1.0),
            ScalarField::constant(s, 0.5),
            ScalarField::zeros(s),
            SurfaceGeometry::flat(s),
            10.0,
        )
        .unwrap();
        for method in [Method::SuccessiveOverRelaxation, Method::ConjugateGradient] {
            let cfg = SolverConfig {
                method,
                ..Default::default()
            };
            let (u, rep) = solve(&p, &cfg, None).unwrap();
            assert_eq!(u.max_abs(), 0.0);
            assert!(rep.iterations <= 1);
            assert!(rep.converged);
        }
    }

    #[test]
    fn sor_and_cg_agree() {
        for seed in 0..3 {
            let p = random_problem(100 + seed, 12, seed % 2 == 0);
            let tol = 1e-9;
            let sor = SolverConfig {
                tol,
                ..Default::default()
            };
            let cg = SolverConfig {
                method: Method::ConjugateGradient,
                tol,
                ..Default::default()
            };
            let (a, ra) = solve(&p, &sor, None).unwrap();
            let (b, rb) = solve(&p, &cg, None).unwrap();
            assert!(ra.converged && rb.converged);
            let diff = a.axpy(-1.0, &b).unwrap().max_abs();
            assert!(diff <= 10.0 * tol, "diff {diff}");
            assert!(assemble(&p).gradient(&a).max_abs() <= tol);
            assert!(ra.energy_final <= ra.energy_initial);
        }
    }

    #[test]
    fn sor_energy_never_increases() {
        let p = random_problem(42, 16, true);
        let cfg = SolverConfig {
            tol: 1e-300,
            max_iter: 200,
            ..Default::default()
        };
        let mut last = energy(&p, &VectorField::zeros(p.spec)).unwrap();
        solve_observed(&p, &cfg, None, |_, u| {
            let e = energy(&p, u).unwrap();
            assert!(e <= last + 1e-12 * last.max(1.0), "{e} > {last}");
            last = e;
        })
        .unwrap();
    }

    #[test]
    fn non_convergence_is_reported() {
        let p = random_problem(9, 12, true);
        let cfg = SolverConfig {
            tol: 1e-14,
            max_iter: 2,
            ..Default::default()
        };
        let (_, rep) = solve(&p, &cfg, None).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn constant_field_satisfies_flat_natural_bc() {
        let p = {
            let s = GridSpec::new(10, 10, 1.0, 1.0).unwrap();
            FlowProblem::new(
                ScalarField::zeros(s),
                ScalarField::zeros(s),
                ScalarField::zeros(s),
                SurfaceGeometry::flat(s),
                10.0,
            )
            .unwrap()
        };
        let u0 = VectorField::constant(p.spec, 0.3, -0.7);
        let (u, rep) = solve(&p, &SolverConfig::default(), Some(&u0)).unwrap();
        assert!(rep.converged);
        assert!(check_natural_bc(&p.geom, &u).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn random_flow_violates_natural_bc() {
        let p = random_problem(3, 10, true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = VectorField::from_fn(p.spec, |_, _| {
            (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        assert!(check_natural_bc(&p.geom, &u).unwrap().max_abs() > 1e-6);
    }
}
