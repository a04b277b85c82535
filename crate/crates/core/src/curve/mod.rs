//! Discrete closed curves in a chart of a [`ManifoldModel`].

mod geometry;
mod resample;

use std::sync::Arc;

use crate::error::{CsfError, Result};
use crate::manifold::{ManifoldModel, Point};

pub use geometry::{compute_geometry, higher_a, CurveGeometry};
pub use resample::resample_uniform;

/// Smallest accepted node count.
pub const MIN_NODES: usize = 16;
/// Edges at or below this metric length are treated as degenerate.
pub const EPS_DEGENERATE: f64 = 1e-10;
pub const DEFAULT_M_MAX: usize = 3;

/// A closed polyline with cyclically ordered nodes stored in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    model: Arc<ManifoldModel>,
    nodes: Vec<f64>,
}

impl DiscreteCurve {
    /// Builds a curve from per-node coordinates.
    pub fn new(model: Arc<ManifoldModel>, nodes: Vec<Vec<f64>>) -> Result<Self> {
        let dim = model.dim();
        if let Some(bad) = nodes.iter().find(|p| p.len() != dim) {
            return Err(CsfError::ShapeMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::from_flat(model, nodes.concat())
    }

    /// Builds a curve from row-major node coordinates (`N * dim` values).
    ///
    /// Coordinates are wrapped and validated: finite, away from the poles,
    /// consecutive nodes closer than half the smallest period, no degenerate
    /// edges.
    pub fn from_flat(model: Arc<ManifoldModel>, mut nodes: Vec<f64>) -> Result<Self> {
        let dim = model.dim();
        if nodes.len() % dim != 0 {
            return Err(CsfError::InvalidCurve(format!(
                "{} coordinates is not a multiple of dimension {dim}",
                nodes.len()
            )));
        }
        let count = nodes.len() / dim;
        if count < MIN_NODES {
            return Err(CsfError::InvalidCurve(format!(
                "{count} nodes, need at least {MIN_NODES}"
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(CsfError::NonFinite {
                context: "curve nodes".into(),
            });
        }
        // jumps are checked before wrapping, on the raw coordinates
        let mut d = vec![0.0; dim];
        for i in 0..count {
            let j = (i + 1) % count;
            for k in 0..dim {
                d[k] = nodes[j * dim + k] - nodes[i * dim + k];
            }
            model.min_image(&mut d);
            for (k, dk) in d.iter().enumerate() {
                if let Some(period) = model.period(k) {
                    if dk.abs() >= 0.5 * period {
                        return Err(CsfError::InvalidCurve(format!(
                            "nodes {i} and {j} are half a period apart in coordinate {k}"
                        )));
                    }
                }
            }
        }
        for p in nodes.chunks_mut(dim) {
            model.wrap(p);
            model.check_chart(p)?;
        }
        let curve = Self { model, nodes };
        for (index, length) in curve.edge_lengths().into_iter().enumerate() {
            if !(length > EPS_DEGENERATE) {
                return Err(CsfError::DegenerateEdge { index, length });
            }
        }
        Ok(curve)
    }

    pub fn model(&self) -> &Arc<ManifoldModel> {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.nodes[i * n..(i + 1) * n]
    }

    pub fn point(&self, i: usize) -> Point {
        Point::new(self.node(i).to_vec())
    }

    pub fn nodes_flat(&self) -> &[f64] {
        &self.nodes
    }

    /// Minimal-image coordinate increment from node `i` to node `i + 1`.
    pub fn edge_vector(&self, i: usize, out: &mut [f64]) {
        let j = (i + 1) % self.len();
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.node(j)[k] - self.node(i)[k];
        }
        self.model.min_image(out);
    }

    /// Metric edge lengths `ds_i` from node `i` to node `i + 1`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        (0..self.len())
            .map(|i| {
                self.edge_vector(i, &mut d);
                self.model.chord_length(self.node(i), &d, &mut scratch)
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Coordinates unwrapped along the curve, `N + 1` rows where the last row
    /// is node 0 shifted by the closing lattice offset.
    pub fn unwrapped(&self) -> Vec<f64> {
        let n = self.dim();
        let count = self.len();
        let mut out = Vec::with_capacity((count + 1) * n);
        out.extend_from_slice(self.node(0));
        let mut d = vec![0.0; n];
        for i in 0..count {
            self.edge_vector(i, &mut d);
            for k in 0..n {
                let next = out[i * n + k] + d[k];
                out.push(next);
            }
        }
        // the closing offset is an exact lattice vector
        for k in 0..n {
            let offset = out[count * n + k] - out[k];
            let exact = match self.model.period(k) {
                Some(p) => p * (offset / p).round(),
                None => 0.0,
            };
            out[count * n + k] = out[k] + exact;
        }
        out
    }

    /// Lattice offset accumulated by going once around the curve.
    pub fn winding_offset(&self) -> Vec<f64> {
        let n = self.dim();
        let count = self.len();
        let u = self.unwrapped();
        (0..n)
            .map(|k| {
                let offset = u[count * n + k] - u[k];
                self.model.period(k).map_or(0.0, |p| p * (offset / p).round())
            })
            .collect()
    }

    /// Replaces the node coordinates, revalidating the curve.
    pub fn with_nodes(&self, nodes: Vec<f64>) -> Result<Self> {
        Self::from_flat(Arc::clone(&self.model), nodes)
    }
}
