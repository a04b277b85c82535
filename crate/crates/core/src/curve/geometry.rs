//! Per-node differential geometry of a discrete curve.
//!
//! Arc-length derivatives of positions use the non-uniform three-point
//! stencils, which are exact for quadratics:
//!
//! ```text
//! x'  = (h- d+ / h+ + h+ d- / h-) / (h- + h+)
//! x'' = 2 (d+ / h+ - d- / h-) / (h- + h+)
//! ```
//!
//! where `d+-` are the edge increments and `h+-` their metric lengths. The
//! mean curvature vector is the covariant acceleration `x'' + Gamma(x', x')`
//! with its tangential part removed.
//!
//! Covariant derivatives of normal fields, and scalar first derivatives, use
//! the centred difference `(f[i+1] - f[i-1]) / (h- + h+)`. Together with the
//! trapezoidal weights `(h- + h+) / 2` this operator is exactly skew-adjoint,
//! so discrete integration by parts holds without remainder.

use crate::curve::{DiscreteCurve, EPS_DEGENERATE};
use crate::error::{CsfError, Result};
use crate::manifold::{Point, TangentVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CurveGeometry {
    dim: usize,
    count: usize,
    edge_lengths: Vec<f64>,
    tangent: Vec<f64>,
    curvature: Vec<f64>,
    tangential_defect: Vec<f64>,
    normal_fields: Vec<Vec<f64>>,
    a_norms: Vec<Vec<f64>>,
    length: f64,
}

/// Computes tangents, mean curvature and `|nabla^m A|^2` for `m <= m_max`.
pub fn compute_geometry(curve: &DiscreteCurve, m_max: usize) -> Result<CurveGeometry> {
    let model = curve.model();
    let n = curve.dim();
    let count = curve.len();

    let mut increments = vec![0.0; count * n];
    let mut edge_lengths = vec![0.0; count];
    let mut scratch = vec![0.0; n];
    for i in 0..count {
        let d = &mut increments[i * n..(i + 1) * n];
        curve.edge_vector(i, d);
        let length = model.chord_length(curve.node(i), d, &mut scratch);
        if !(length > EPS_DEGENERATE) {
            return Err(CsfError::DegenerateEdge { index: i, length });
        }
        edge_lengths[i] = length;
    }

    let mut tangent = vec![0.0; count * n];
    let mut curvature = vec![0.0; count * n];
    let mut tangential_defect = vec![0.0; count];
    let mut a2 = vec![0.0; count];
    let mut first = vec![0.0; n];
    let mut raw = vec![0.0; n];
    let mut conn = vec![0.0; n];
    for i in 0..count {
        let prev = (i + count - 1) % count;
        let (hm, hp) = (edge_lengths[prev], edge_lengths[i]);
        let dm = &increments[prev * n..(prev + 1) * n];
        let dp = &increments[i * n..(i + 1) * n];
        let x = curve.node(i);
        let sum = hm + hp;
        for k in 0..n {
            first[k] = (hm * dp[k] / hp + hp * dm[k] / hm) / sum;
            raw[k] = 2.0 * (dp[k] / hp - dm[k] / hm) / sum;
        }
        model.connection_term(x, &first, &first, &mut conn);
        let speed = model.inner(x, &first, &first).sqrt();
        let t = &mut tangent[i * n..(i + 1) * n];
        for k in 0..n {
            t[k] = first[k] / speed;
            raw[k] += conn[k];
        }
        let along = model.inner(x, &raw, t);
        let h = &mut curvature[i * n..(i + 1) * n];
        for k in 0..n {
            h[k] = raw[k] - along * t[k];
        }
        tangential_defect[i] = along;
        a2[i] = model.inner(x, h, h);
        if !a2[i].is_finite() {
            return Err(CsfError::NonFinite {
                context: format!("mean curvature at node {i}"),
            });
        }
    }

    let length = edge_lengths.iter().sum();
    let mut geometry = CurveGeometry {
        dim: n,
        count,
        edge_lengths,
        tangent,
        curvature,
        tangential_defect,
        normal_fields: Vec::new(),
        a_norms: vec![a2],
        length,
    };
    if m_max > 0 {
        let (fields, norms) = normal_derivatives(curve, &geometry, m_max);
        geometry.normal_fields = fields;
        geometry.a_norms.extend(norms);
    }
    Ok(geometry)
}

/// `|nabla^m A|^2` per node for `m = 1..=m_max`.
///
/// Uses the recursion `nabla^m A = P_perp(nabla_T nabla^{m-1} A)` starting from
/// `nabla^0 A = H`. The tangential corrections of the general recursion vanish
/// for a unit-speed curve since the tangential part of `nabla_T T` is zero.
pub fn higher_a(
    curve: &DiscreteCurve,
    geometry: &CurveGeometry,
    m_max: usize,
) -> Result<Vec<Vec<f64>>> {
    if curve.len() != geometry.count {
        return Err(CsfError::ShapeMismatch {
            expected: geometry.count,
            found: curve.len(),
        });
    }
    Ok(normal_derivatives(curve, geometry, m_max).1)
}

fn normal_derivatives(
    curve: &DiscreteCurve,
    geometry: &CurveGeometry,
    m_max: usize,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let model = curve.model();
    let n = geometry.dim;
    let count = geometry.count;
    let mut fields: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut norms = Vec::with_capacity(m_max);
    let mut conn = vec![0.0; n];
    let mut w = vec![0.0; n];
    for m in 1..=m_max {
        let previous: &[f64] = if m == 1 {
            &geometry.curvature
        } else {
            &fields[m - 2]
        };
        let mut next = vec![0.0; count * n];
        let mut norm = vec![0.0; count];
        for i in 0..count {
            let (prev, succ) = ((i + count - 1) % count, (i + 1) % count);
            let span = geometry.edge_lengths[prev] + geometry.edge_lengths[i];
            let x = curve.node(i);
            let t = geometry.tangent(i);
            let v = &previous[i * n..(i + 1) * n];
            model.connection_term(x, t, v, &mut conn);
            for k in 0..n {
                w[k] = (previous[succ * n + k] - previous[prev * n + k]) / span + conn[k];
            }
            let along = model.inner(x, &w, t);
            let out = &mut next[i * n..(i + 1) * n];
            for k in 0..n {
                out[k] = w[k] - along * t[k];
            }
            norm[i] = model.inner(x, out, out);
        }
        fields.push(next);
        norms.push(norm);
    }
    (fields, norms)
}

impl CurveGeometry {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Unit tangent at node `i`, chart components.
    pub fn tangent(&self, i: usize) -> &[f64] {
        &self.tangent[i * self.dim..(i + 1) * self.dim]
    }

    /// Mean curvature vector at node `i`, chart components.
    pub fn curvature(&self, i: usize) -> &[f64] {
        &self.curvature[i * self.dim..(i + 1) * self.dim]
    }

    pub fn curvature_flat(&self) -> &[f64] {
        &self.curvature
    }

    pub fn tangent_vector(&self, curve: &DiscreteCurve, i: usize) -> TangentVector {
        TangentVector {
            base: Point::new(curve.node(i).to_vec()),
            components: self.tangent(i).to_vec(),
        }
    }

    pub fn curvature_vector(&self, curve: &DiscreteCurve, i: usize) -> TangentVector {
        TangentVector {
            base: Point::new(curve.node(i).to_vec()),
            components: self.curvature(i).to_vec(),
        }
    }

    /// `<D_T T, T>` before projection; second order small in the spacing.
    pub fn tangential_defect(&self) -> &[f64] {
        &self.tangential_defect
    }

    /// `|A|^2 = |H|^2` per node.
    pub fn a2(&self) -> &[f64] {
        &self.a_norms[0]
    }

    pub fn max_a2(&self) -> f64 {
        self.a2().iter().copied().fold(0.0, f64::max)
    }

    /// Highest order of `|nabla^m A|^2` computed.
    pub fn m_max(&self) -> usize {
        self.a_norms.len() - 1
    }

    /// `|nabla^m A|^2` per node.
    pub fn a_norms(&self, m: usize) -> &[f64] {
        &self.a_norms[m]
    }

    /// The normal field `nabla^m A(T, .., T)` for `1 <= m <= m_max`.
    pub fn normal_field(&self, m: usize) -> &[f64] {
        if m == 0 {
            &self.curvature
        } else {
            &self.normal_fields[m - 1]
        }
    }

    /// Trapezoidal node weights `(ds_{i-1} + ds_i) / 2`.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| 0.5 * (self.edge_lengths[(i + self.count - 1) % self.count] + self.edge_lengths[i]))
            .collect()
    }

    /// Periodic trapezoidal integral of a nodal field against `ds`.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        assert_eq!(field.len(), self.count, "field length must equal node count");
        self.weights().iter().zip(field).map(|(w, f)| w * f).sum()
    }

    /// Centred first arc-length derivative of a nodal scalar.
    pub fn derivative(&self, field: &[f64]) -> Vec<f64> {
        let c = self.count;
        (0..c)
            .map(|i| {
                let (prev, succ) = ((i + c - 1) % c, (i + 1) % c);
                (field[succ] - field[prev]) / (self.edge_lengths[prev] + self.edge_lengths[i])
            })
            .collect()
    }

    /// Non-uniform three-point second arc-length derivative of a nodal scalar.
    pub fn laplacian(&self, field: &[f64]) -> Vec<f64> {
        let c = self.count;
        (0..c)
            .map(|i| {
                let (prev, succ) = ((i + c - 1) % c, (i + 1) % c);
                let (hm, hp) = (self.edge_lengths[prev], self.edge_lengths[i]);
                2.0 * ((field[succ] - field[i]) / hp - (field[i] - field[prev]) / hm) / (hm + hp)
            })
            .collect()
    }
}
