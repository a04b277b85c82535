//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;
use std::sync::Arc;

use csf_core::manifold::{ManifoldModel, Point};
use csf_core::{DiscreteCurve, RunConfig};

/// Truncated Taylor series `f(u0 + e) = sum c_k e^k`.
#[derive(Debug, Clone)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(c: f64, len: usize) -> Self {
        let mut v = vec![0.0; len];
        v[0] = c;
        Jet(v)
    }

    /// `cos(u0 + e)` and `sin(u0 + e)`.
    pub fn cos_sin(u0: f64, len: usize) -> (Self, Self) {
        let mut c = vec![0.0; len];
        let mut s = vec![0.0; len];
        let mut fact = 1.0;
        for k in 0..len {
            if k > 0 {
                fact *= k as f64;
            }
            let shift = u0 + k as f64 * TAU / 4.0;
            c[k] = shift.cos() / fact;
            s[k] = shift.sin() / fact;
        }
        (Jet(c), Jet(s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn scale(&self, a: f64) -> Self {
        Jet(self.0.iter().map(|c| a * c).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.len().min(o.len());
        Jet((0..n).map(|k| self.0[k] + o.0[k]).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.len().min(o.len());
        Jet((0..n)
            .map(|k| (0..=k).map(|j| self.0[j] * o.0[k - j]).sum())
            .collect())
    }

    pub fn div(&self, o: &Self) -> Self {
        let n = self.len().min(o.len());
        let mut q = vec![0.0; n];
        for k in 0..n {
            let acc: f64 = (0..k).map(|j| q[j] * o.0[k - j]).sum();
            q[k] = (self.0[k] - acc) / o.0[0];
        }
        Jet(q)
    }

    pub fn sqrt(&self) -> Self {
        let n = self.len();
        let mut r = vec![0.0; n];
        r[0] = self.0[0].sqrt();
        for k in 1..n {
            let acc: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (self.0[k] - acc) / (2.0 * r[0]);
        }
        Jet(r)
    }

    /// d/de, one order shorter.
    pub fn deriv(&self) -> Self {
        Jet((1..self.len()).map(|k| k as f64 * self.0[k]).collect())
    }
}

/// `d^m kappa / ds^m` for `m = 0..=m_max` of the ellipse `(a cos u, b sin u)`
/// at parameter `u0`, with the signed curvature `kappa`.
pub fn ellipse_kappa_derivatives(a: f64, b: f64, u0: f64, m_max: usize) -> Vec<f64> {
    let len = m_max + 4;
    let (c, s) = Jet::cos_sin(u0, len);
    let x = c.scale(a);
    let y = s.scale(b);
    let (x1, y1) = (x.deriv(), y.deriv());
    let (x2, y2) = (x1.deriv(), y1.deriv());
    let speed = x1.mul(&x1).add(&y1.mul(&y1)).sqrt();
    let cube = speed.mul(&speed).mul(&speed);
    let mut f = x1.mul(&y2).sub(&y1.mul(&x2)).div(&cube);
    let mut out = vec![f.value()];
    for _ in 0..m_max {
        f = f.deriv().div(&speed);
        out.push(f.value());
    }
    out
}

pub fn ellipse(a: f64, b: f64, n: usize) -> (DiscreteCurve, Vec<f64>) {
    let model = Arc::new(ManifoldModel::euclidean(2).unwrap());
    let us: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let nodes = us.iter().map(|u| vec![a * u.cos(), b * u.sin()]).collect();
    (DiscreteCurve::new(model, nodes).unwrap(), us)
}

/// `Gamma^k_{ij}` assembled from central differences of the metric,
/// `Gamma^k_{ij} = g^{kl} (d_i g_jl + d_j g_il - d_l g_ij) / 2`.
pub fn christoffel_from_metric(model: &ManifoldModel, p: &[f64], h: f64) -> Vec<f64> {
    let n = model.dim();
    let g = |q: &[f64]| model.metric(&Point::new(q.to_vec())).unwrap();
    let mut dg = vec![nalgebra::DMatrix::<f64>::zeros(n, n); n];
    for (l, d) in dg.iter_mut().enumerate() {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[l] += h;
        minus[l] -= h;
        *d = (g(&plus) - g(&minus)) / (2.0 * h);
    }
    let inv = g(p).try_inverse().unwrap();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for l in 0..n {
                    v += inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                out[(k * n + i) * n + j] = 0.5 * v;
            }
        }
    }
    out
}

/// `R(X,Y,Z,W)` assembled from the closed-form Christoffel symbols and their
/// central differences, for the sign convention
/// `R(X,Y) = D_Y D_X - D_X D_Y + D_[X,Y]`.
pub fn riemann_from_christoffel(
    model: &ManifoldModel,
    p: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
    w: &[f64],
    h: f64,
) -> f64 {
    let n = model.dim();
    let gamma = |q: &[f64]| model.christoffel(&Point::new(q.to_vec())).unwrap();
    let g0 = gamma(p);
    let mut dgamma = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let (gp, gm) = (gamma(&plus), gamma(&minus));
        dgamma.push(move |l: usize, j: usize, k: usize| (gp.get(l, j, k) - gm.get(l, j, k)) / (2.0 * h));
    }
    let metric = model.metric(&Point::new(p.to_vec())).unwrap();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let coeff = x[i] * y[j] * z[k];
                if coeff == 0.0 {
                    continue;
                }
                for l in 0..n {
                    // standard-convention component R^l_{ijk}
                    let mut r = dgamma[i](l, j, k) - dgamma[j](l, i, k);
                    for m in 0..n {
                        r += g0.get(l, i, m) * g0.get(m, j, k) - g0.get(l, j, m) * g0.get(m, i, k);
                    }
                    let lowered: f64 = (0..n).map(|q| metric[(l, q)] * w[q]).sum();
                    total -= coeff * r * lowered;
                }
            }
        }
    }
    total
}

pub fn config(json: &str) -> RunConfig {
    RunConfig::from_json(json).unwrap_or_else(|e| panic!("bad test config: {e}"))
}

pub fn sine_graph_config(n: usize, t_end: f64, sample_every: f64) -> RunConfig {
    config(&format!(
        r#"{{
            "manifold": {{"kind": "flat_torus", "periods": [1, 1]}},
            "initial_curve": {{"preset": "periodic_graph", "parameters": {{"a": [0.1], "k": [1]}}, "N": {n}}},
            "flow": {{"t_end": {t_end:?}, "sample_every": {sample_every:?}}},
            "diagnostics": {{"forms": ["du"]}},
            "output": {{"snapshot_every": 0}}
        }}"#
    ))
}

pub fn band_config(n: usize, t_end: f64, sample_every: f64) -> RunConfig {
    config(&format!(
        r#"{{
            "manifold": {{"kind": "cylinder_sphere", "sphere_dim": 2, "sphere_radius": 1}},
            "initial_curve": {{
                "preset": "sphere_band",
                "parameters": {{"a": 0.3, "k": 2, "phi0": 0}},
                "N": {n},
                "perturbation": {{"amplitude": 0.1, "frequency": 1, "seed": 7}}
            }},
            "flow": {{"t_end": {t_end:?}, "sample_every": {sample_every:?}}},
            "diagnostics": {{"forms": ["du"]}},
            "output": {{"snapshot_every": 0}}
        }}"#
    ))
}

pub fn circle_config(n: usize, t_end: f64, sample_every: f64) -> RunConfig {
    config(&format!(
        r#"{{
            "manifold": {{"kind": "euclidean", "dim": 2}},
            "initial_curve": {{"preset": "circle", "parameters": {{"r": 1}}, "N": {n}}},
            "flow": {{"t_end": {t_end:?}, "sample_every": {sample_every:?}, "scheme": "rk2", "cfl_factor": 0.5}},
            "output": {{"snapshot_every": 0}}
        }}"#
    ))
}

pub fn winding_config(n: usize, t_end: f64, sample_every: f64) -> RunConfig {
    config(&format!(
        r#"{{
            "manifold": {{"kind": "flat_torus", "periods": [1, 1]}},
            "initial_curve": {{"preset": "winding", "parameters": {{"p": 1, "q": 1, "a": 0.1, "k": 3}}, "N": {n}}},
            "flow": {{"t_end": {t_end:?}, "sample_every": {sample_every:?}}},
            "diagnostics": {{"forms": ["du"]}},
            "output": {{"snapshot_every": 0}}
        }}"#
    ))
}
