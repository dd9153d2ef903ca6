//! Reference implementations written independently of the library code.
#![allow(dead_code, clippy::needless_range_loop)]

use surfflow::{GridSpec, ScalarField, VectorField};

/// Row-major samples of `f` over an `n x m` grid with origin `o` and spacing `h`.
pub fn sample(n: usize, m: usize, o: (f64, f64), h: f64, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            v.push(f(o.0 + i as f64 * h, o.1 + j as f64 * h));
        }
    }
    v
}

/// Christoffel symbols from `½ g^{im} (∂ⱼ g_{km} + ∂ₖ g_{mj} − ∂ₘ g_{jk})`,
/// with the metric built from centred differences of `z` and then
/// differenced again. Only points at least two samples from the edge are
/// meaningful; others are zero. Output `[i][j][k]`, each row-major.
pub fn general_christoffel(z: &[f64], n: usize, m: usize, h: f64) -> [[[Vec<f64>; 2]; 2]; 2] {
    let at = |v: &[f64], i: usize, j: usize| v[j * n + i];
    let cd = |v: &[f64], i: usize, j: usize, axis: usize| {
        if axis == 0 {
            (at(v, i + 1, j) - at(v, i - 1, j)) / (2.0 * h)
        } else {
            (at(v, i, j + 1) - at(v, i, j - 1)) / (2.0 * h)
        }
    };
    let mut grad = [vec![0.0; n * m], vec![0.0; n * m]];
    for j in 1..m - 1 {
        for i in 1..n - 1 {
            for a in 0..2 {
                grad[a][j * n + i] = cd(z, i, j, a);
            }
        }
    }
    // g[a][b] = δ + ∂ₐz ∂_b z
    let mut g: [[Vec<f64>; 2]; 2] = Default::default();
    for a in 0..2 {
        for b in 0..2 {
            g[a][b] = (0..n * m)
                .map(|p| f64::from(u8::from(a == b)) + grad[a][p] * grad[b][p])
                .collect();
        }
    }
    let mut out: [[[Vec<f64>; 2]; 2]; 2] = Default::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j][k] = vec![0.0; n * m];
            }
        }
    }
    for jj in 2..m - 2 {
        for ii in 2..n - 2 {
            let p = jj * n + ii;
            let det = g[0][0][p] * g[1][1][p] - g[0][1][p] * g[1][0][p];
            let inv = [
                [g[1][1][p] / det, -g[0][1][p] / det],
                [-g[1][0][p] / det, g[0][0][p] / det],
            ];
            // dg[c][a][b] = ∂_c g_ab
            let dg = |c: usize, a: usize, b: usize| cd(&g[a][b], ii, jj, c);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let mut s = 0.0;
                        for mm in 0..2 {
                            s += inv[i][mm] * (dg(j, k, mm) + dg(k, mm, j) - dg(mm, j, k));
                        }
                        out[i][j][k][p] = 0.5 * s;
                    }
                }
            }
        }
    }
    out
}

/// Sparse matrix as row lists of `(column, value)`.
pub struct Sparse {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn mul_transpose(&self, y: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                out[c] += v * y[r];
            }
        }
        out
    }
}

/// First-difference matrix along `axis`: centred inside, one-sided forward
/// at the first sample and backward at the last.
pub fn difference_matrix(n: usize, m: usize, h: f64, axis: usize) -> Sparse {
    let mut rows = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            let (pos, len) = if axis == 0 { (i, n) } else { (j, m) };
            let idx = |q: usize| if axis == 0 { j * n + q } else { q * n + i };
            let row = if pos == 0 {
                vec![(idx(0), -1.0 / h), (idx(1), 1.0 / h)]
            } else if pos == len - 1 {
                vec![(idx(len - 2), -1.0 / h), (idx(len - 1), 1.0 / h)]
            } else {
                vec![(idx(pos - 1), -0.5 / h), (idx(pos + 1), 0.5 / h)]
            };
            rows.push(row);
        }
    }
    Sparse { rows }
}

/// Linear part of the gradient of the classical Horn–Schunck energy
/// `½ Σ h² [α (f₁u¹ + f₂u² + fₜ)² + |∇u¹|² + |∇u²|²]`.
pub fn horn_schunck_apply(
    spec: GridSpec,
    fx1: &[f64],
    fx2: &[f64],
    alpha: f64,
    u: &VectorField,
) -> (Vec<f64>, Vec<f64>) {
    let (n, m, h) = (spec.width, spec.height, spec.h);
    let h2 = h * h;
    let len = n * m;
    let l = [difference_matrix(n, m, h, 0), difference_matrix(n, m, h, 1)];
    let laplace = |x: &[f64]| {
        let mut acc = vec![0.0; len];
        for lj in &l {
            let t = lj.mul_transpose(&lj.mul(x), len);
            for (a, b) in acc.iter_mut().zip(t) {
                *a += b;
            }
        }
        acc
    };
    let (u1, u2) = (u.u1.values(), u.u2.values());
    let s1 = laplace(u1);
    let s2 = laplace(u2);
    let mut a1 = vec![0.0; len];
    let mut a2 = vec![0.0; len];
    for p in 0..len {
        let r = fx1[p] * u1[p] + fx2[p] * u2[p];
        a1[p] = h2 * (alpha * fx1[p] * r + s1[p]);
        a2[p] = h2 * (alpha * fx2[p] * r + s2[p]);
    }
    (a1, a2)
}

pub fn field(spec: GridSpec, v: Vec<f64>) -> ScalarField {
    ScalarField::new(spec, v).unwrap()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
