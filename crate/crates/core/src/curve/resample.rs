//! Equal-arc-length resampling by periodic cubic interpolation.
//!
//! Coordinates are unwrapped along the curve and the closing lattice offset is
//! subtracted linearly, leaving a periodic function of the chord-length
//! parameter. A periodic cubic spline through it is then sampled at parameters
//! adjusted iteratively until consecutive metric chords are equal.

use crate::curve::{DiscreteCurve, EPS_DEGENERATE};
use crate::error::{CsfError, Result};

const MAX_EQUALIZE_ITERS: usize = 50;
const EQUALIZE_TOL: f64 = 1e-12;

pub fn resample_uniform(curve: &DiscreteCurve) -> Result<DiscreteCurve> {
    let model = curve.model();
    let n = curve.dim();
    let count = curve.len();
    let edges = curve.edge_lengths();
    for (index, &length) in edges.iter().enumerate() {
        if !(length > EPS_DEGENERATE) {
            return Err(CsfError::DegenerateEdge { index, length });
        }
    }

    let unwrapped = curve.unwrapped();
    let offset: Vec<f64> = (0..n).map(|k| unwrapped[count * n + k] - unwrapped[k]).collect();
    let mut knots = Vec::with_capacity(count);
    let mut acc = 0.0;
    for &h in &edges {
        knots.push(acc);
        acc += h;
    }
    let period = acc;

    let splines: Vec<PeriodicSpline> = (0..n)
        .map(|k| {
            let values = (0..count)
                .map(|i| unwrapped[i * n + k] - offset[k] * knots[i] / period)
                .collect();
            PeriodicSpline::new(&knots, &edges, period, values)
        })
        .collect();
    let eval = |tau: f64, out: &mut [f64]| {
        for k in 0..n {
            out[k] = splines[k].eval(tau) + offset[k] * tau / period;
        }
    };

    let mut params: Vec<f64> = (0..=count).map(|j| period * j as f64 / count as f64).collect();
    let mut points = vec![0.0; (count + 1) * n];
    let mut chords = vec![0.0; count];
    let mut scratch = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut best_points = Vec::new();
    for _ in 0..MAX_EQUALIZE_ITERS {
        for j in 0..count {
            eval(params[j], &mut points[j * n..(j + 1) * n]);
        }
        for k in 0..n {
            points[count * n + k] = points[k] + offset[k];
        }
        for j in 0..count {
            for k in 0..n {
                d[k] = points[(j + 1) * n + k] - points[j * n + k];
            }
            chords[j] = model.chord_length(&points[j * n..(j + 1) * n], &d, &mut scratch);
        }
        let total: f64 = chords.iter().sum();
        let mean = total / count as f64;
        let spread = chords
            .iter()
            .map(|c| (c / mean - 1.0).abs())
            .fold(0.0, f64::max);
        if spread < best {
            best = spread;
            best_points.clone_from(&points);
        }
        if spread < EQUALIZE_TOL {
            break;
        }

        // invert the cumulative chord map piecewise linearly
        let mut cumulative = Vec::with_capacity(count + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for c in &chords {
            acc += c;
            cumulative.push(acc);
        }
        let mut updated = params.clone();
        let mut seg = 0;
        for (j, p) in updated.iter_mut().enumerate().take(count).skip(1) {
            let target = total * j as f64 / count as f64;
            while seg + 1 < count && cumulative[seg + 1] < target {
                seg += 1;
            }
            let frac = (target - cumulative[seg]) / (cumulative[seg + 1] - cumulative[seg]);
            *p = params[seg] + frac * (params[seg + 1] - params[seg]);
        }
        params = updated;
    }

    let mut nodes = best_points;
    nodes.truncate(count * n);
    curve.with_nodes(nodes)
}

/// Periodic cubic spline on non-uniform knots.
struct PeriodicSpline {
    knots: Vec<f64>,
    widths: Vec<f64>,
    period: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl PeriodicSpline {
    fn new(knots: &[f64], widths: &[f64], period: f64, values: Vec<f64>) -> Self {
        let count = values.len();
        let mut sub = vec![0.0; count];
        let mut diag = vec![0.0; count];
        let mut sup = vec![0.0; count];
        let mut rhs = vec![0.0; count];
        for i in 0..count {
            let prev = (i + count - 1) % count;
            let next = (i + 1) % count;
            let (hm, hp) = (widths[prev], widths[i]);
            sub[i] = hm;
            diag[i] = 2.0 * (hm + hp);
            sup[i] = hp;
            rhs[i] = 6.0 * ((values[next] - values[i]) / hp - (values[i] - values[prev]) / hm);
        }
        let second = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        Self {
            knots: knots.to_vec(),
            widths: widths.to_vec(),
            period,
            values,
            second,
        }
    }

    fn eval(&self, tau: f64) -> f64 {
        let count = self.values.len();
        let tau = tau.rem_euclid(self.period);
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&tau)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let next = (i + 1) % count;
        let h = self.widths[i];
        let a = tau - self.knots[i];
        let b = h - a;
        let (mi, mj) = (self.second[i], self.second[next]);
        mi * b * b * b / (6.0 * h)
            + mj * a * a * a / (6.0 * h)
            + (self.values[i] / h - mi * h / 6.0) * b
            + (self.values[next] / h - mj * h / 6.0) * a
    }
}

/// Solves a cyclic tridiagonal system where row `i` reads
/// `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` with periodic
/// indices (Sherman-Morrison on top of the Thomas algorithm).
fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut modified = diag.to_vec();
    modified[0] -= gamma;
    modified[n - 1] -= sub[0] * sup[n - 1] / gamma;

    let y = solve_tridiagonal(sub, &modified, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = solve_tridiagonal(sub, &modified, sup, &u);

    let v_dot = |x: &[f64]| x[0] + sub[0] / gamma * x[n - 1];
    let factor = v_dot(&y) / (1.0 + v_dot(&z));
    y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect()
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
