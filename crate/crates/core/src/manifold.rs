//! Ambient Riemannian geometries in explicit coordinate charts.
//!
//! Three model families are supported:
//!
//! * `euclidean(n)`: flat R^n with Cartesian coordinates.
//! * `flat_torus(periods)`: R^n modulo a rectangular lattice, coordinates in
//!   length units and wrapped componentwise into `[0, period)`.
//! * `cylinder_sphere(k, r)`: the product S^1 x S^k(r) with chart
//!   `(u, theta_1, .., theta_{k-1}, phi)`. `u` has period 2*pi, the thetas are
//!   polar angles in `(0, pi)` and `phi` is the azimuth with period 2*pi.
//!
//! All three have diagonal metrics, which the hot paths exploit. Curvature is
//! evaluated with the sign convention `R(X,Y) = D_Y D_X - D_X D_Y + D_[X,Y]` and
//! `R(X,Y,Z,W) = <R(X,Y)Z, W>`, so a round sphere of radius r has
//! `R(X,Y,X,Y) = (|X|^2 |Y|^2 - <X,Y>^2) / r^2`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use crate::error::{CsfError, Result};

pub const DEFAULT_POLE_MARGIN: f64 = 0.05;

/// A point given by its chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.dim() {
            return Err(CsfError::ShapeMismatch {
                expected: base.dim(),
                found: components.len(),
            });
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(CsfError::NonFinite {
                context: "tangent vector components".into(),
            });
        }
        Ok(Self { base, components })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl Covector {
    /// Natural pairing with a vector at the same base point.
    pub fn pair(&self, v: &TangentVector) -> f64 {
        debug_assert_eq!(self.base, v.base);
        dot(&self.components, &v.components)
    }
}

/// A named 1-form with constant chart components.
///
/// Every declared form of the supported models is parallel, and in the
/// charts used here parallel forms have constant components.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelForm {
    pub name: String,
    pub components: Vec<f64>,
}

impl ParallelForm {
    pub fn eval(&self, p: &Point) -> Covector {
        Covector {
            base: p.clone(),
            components: self.components.clone(),
        }
    }

    /// `Omega(v)` for a vector given by chart components.
    #[inline]
    pub fn apply(&self, v: &[f64]) -> f64 {
        dot(&self.components, v)
    }
}

/// Christoffel symbols `Gamma^k_{ij}` at one point, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.dim;
        self.data[(k * n + i) * n + j] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Euclidean { dim: usize },
    FlatTorus { periods: Vec<f64> },
    CylinderSphere { sphere_dim: usize, sphere_radius: f64 },
}

/// An immutable ambient geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    kind: ModelKind,
    pole_margin: f64,
}

impl ManifoldModel {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CsfError::InvalidModel("euclidean dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: ModelKind::Euclidean { dim },
            pole_margin: DEFAULT_POLE_MARGIN,
        })
    }

    pub fn flat_torus(periods: Vec<f64>) -> Result<Self> {
        if periods.is_empty() {
            return Err(CsfError::InvalidModel("flat torus needs at least one period".into()));
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(CsfError::InvalidModel("torus periods must be finite and > 0".into()));
        }
        Ok(Self {
            kind: ModelKind::FlatTorus { periods },
            pole_margin: DEFAULT_POLE_MARGIN,
        })
    }

    pub fn cylinder_sphere(sphere_dim: usize, sphere_radius: f64) -> Result<Self> {
        if sphere_dim == 0 {
            return Err(CsfError::InvalidModel("sphere dimension must be >= 1".into()));
        }
        if !(sphere_radius.is_finite() && sphere_radius > 0.0) {
            return Err(CsfError::InvalidModel("sphere radius must be finite and > 0".into()));
        }
        Ok(Self {
            kind: ModelKind::CylinderSphere {
                sphere_dim,
                sphere_radius,
            },
            pole_margin: DEFAULT_POLE_MARGIN,
        })
    }

    pub fn with_pole_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin.is_finite() && (0.0..PI / 2.0).contains(&margin)) {
            return Err(CsfError::InvalidModel(format!(
                "pole margin {margin} outside [0, pi/2)"
            )));
        }
        self.pole_margin = margin;
        Ok(self)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn pole_margin(&self) -> f64 {
        self.pole_margin
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::Euclidean { dim } => *dim,
            ModelKind::FlatTorus { periods } => periods.len(),
            ModelKind::CylinderSphere { sphere_dim, .. } => 1 + sphere_dim,
        }
    }

    pub fn is_flat(&self) -> bool {
        match &self.kind {
            ModelKind::Euclidean { .. } | ModelKind::FlatTorus { .. } => true,
            // S^1 x S^1(r) is flat as well
            ModelKind::CylinderSphere { sphere_dim, .. } => *sphere_dim == 1,
        }
    }

    /// Period of coordinate `i`, if it is periodic.
    pub fn period(&self, i: usize) -> Option<f64> {
        match &self.kind {
            ModelKind::Euclidean { .. } => None,
            ModelKind::FlatTorus { periods } => periods.get(i).copied(),
            ModelKind::CylinderSphere { sphere_dim, .. } => {
                if i == 0 || i == *sphere_dim {
                    Some(TAU)
                } else {
                    None
                }
            }
        }
    }

    /// Smallest period among the periodic coordinates.
    pub fn min_period(&self) -> Option<f64> {
        (0..self.dim())
            .filter_map(|i| self.period(i))
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Indices of polar-angle coordinates (sphere factor only).
    fn polar_range(&self) -> std::ops::Range<usize> {
        match &self.kind {
            ModelKind::CylinderSphere { sphere_dim, .. } => 1..*sphere_dim,
            _ => 0..0,
        }
    }

    /// Sectional curvature of the sphere factor, zero when it has dimension 1.
    fn sphere_curvature(&self) -> f64 {
        match &self.kind {
            ModelKind::CylinderSphere {
                sphere_dim,
                sphere_radius,
            } if *sphere_dim >= 2 => 1.0 / (sphere_radius * sphere_radius),
            _ => 0.0,
        }
    }

    /// `C0 = max |R(T,H,T,H)| / |H|^2` over unit `T`.
    pub fn curvature_bound(&self) -> f64 {
        self.sphere_curvature()
    }

    /// Fails with `PoleProximity` if `p` lies inside the pole margin.
    pub fn check_chart(&self, p: &[f64]) -> Result<()> {
        for i in self.polar_range() {
            let theta = p[i];
            if !(theta >= self.pole_margin && theta <= PI - self.pole_margin) {
                return Err(CsfError::PoleProximity {
                    coord: i,
                    angle: theta,
                    margin: self.pole_margin,
                });
            }
        }
        Ok(())
    }

    /// Wraps periodic coordinates into `[0, period)`.
    pub fn wrap(&self, p: &mut [f64]) {
        for (i, x) in p.iter_mut().enumerate() {
            if let Some(period) = self.period(i) {
                let mut w = x.rem_euclid(period);
                if w >= period {
                    w = 0.0;
                }
                *x = w;
            }
        }
    }

    /// Replaces a coordinate difference by its minimal periodic image.
    #[inline]
    pub fn min_image(&self, d: &mut [f64]) {
        for (i, x) in d.iter_mut().enumerate() {
            if let Some(period) = self.period(i) {
                *x -= period * (*x / period).round();
            }
        }
    }

    /// Builds a validated point: correct dimension, finite, wrapped, away from poles.
    pub fn point(&self, mut coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(CsfError::ShapeMismatch {
                expected: self.dim(),
                found: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(CsfError::NonFinite {
                context: "point coordinates".into(),
            });
        }
        self.wrap(&mut coords);
        self.check_chart(&coords)?;
        Ok(Point::new(coords))
    }

    /// Diagonal of the metric at `p`; every supported model has a diagonal metric.
    #[inline]
    pub fn metric_diagonal(&self, p: &[f64], out: &mut [f64]) {
        match &self.kind {
            ModelKind::Euclidean { .. } | ModelKind::FlatTorus { .. } => out.fill(1.0),
            ModelKind::CylinderSphere {
                sphere_dim,
                sphere_radius,
            } => {
                out[0] = 1.0;
                let mut scale = sphere_radius * sphere_radius;
                for i in 1..=*sphere_dim {
                    out[i] = scale;
                    if i < *sphere_dim {
                        let s = p[i].sin();
                        scale *= s * s;
                    }
                }
            }
        }
    }

    pub fn metric(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.check_chart(p.coords())?;
        let n = self.dim();
        let mut diag = vec![0.0; n];
        self.metric_diagonal(p.coords(), &mut diag);
        Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// `<a, b>_g` at chart point `p`.
    #[inline]
    pub fn inner(&self, p: &[f64], a: &[f64], b: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Euclidean { .. } | ModelKind::FlatTorus { .. } => dot(a, b),
            ModelKind::CylinderSphere {
                sphere_dim,
                sphere_radius,
            } => {
                let mut acc = a[0] * b[0];
                let mut scale = sphere_radius * sphere_radius;
                for i in 1..=*sphere_dim {
                    acc += scale * a[i] * b[i];
                    if i < *sphere_dim {
                        let s = p[i].sin();
                        scale *= s * s;
                    }
                }
                acc
            }
        }
    }

    /// Metric length of the chord from `a` along the coordinate increment `d`,
    /// using the metric at the chord midpoint.
    #[inline]
    pub fn chord_length(&self, a: &[f64], d: &[f64], scratch: &mut [f64]) -> f64 {
        if self.is_flat_metric() {
            return dot(d, d).sqrt();
        }
        for ((m, x), dx) in scratch.iter_mut().zip(a).zip(d) {
            *m = x + 0.5 * dx;
        }
        self.inner(scratch, d, d).sqrt()
    }

    #[inline]
    fn is_flat_metric(&self) -> bool {
        !matches!(self.kind, ModelKind::CylinderSphere { .. })
    }

    pub fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        self.check_chart(p.coords())?;
        let n = self.dim();
        let mut gamma = Christoffel::zeros(n);
        let ModelKind::CylinderSphere { sphere_dim, .. } = &self.kind else {
            return Ok(gamma);
        };
        let x = p.coords();
        for i in 2..=*sphere_dim {
            // g_ii / g_jj = prod_{l=j}^{i-1} sin^2(theta_l), accumulated from j = i-1 down
            let mut ratio = 1.0;
            for j in (1..i).rev() {
                let s = x[j].sin();
                ratio *= s * s;
                let cot = x[j].cos() / s;
                gamma.set(i, i, j, cot);
                gamma.set(i, j, i, cot);
                gamma.set(j, i, i, -ratio * cot);
            }
        }
        Ok(gamma)
    }

    /// Writes `Gamma^k_{ij}(p) a^i b^j` into `out`.
    #[inline]
    pub fn connection_term(&self, p: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let ModelKind::CylinderSphere { sphere_dim, .. } = &self.kind else {
            return;
        };
        for i in 2..=*sphere_dim {
            let mut ratio = 1.0;
            for j in (1..i).rev() {
                let s = p[j].sin();
                ratio *= s * s;
                let cot = p[j].cos() / s;
                out[i] += cot * (a[i] * b[j] + a[j] * b[i]);
                out[j] -= ratio * cot * a[i] * b[i];
            }
        }
    }

    /// `R(X,Y,Z,W)` at `p` for vectors given by chart components.
    pub fn riemann(&self, p: &Point, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> Result<f64> {
        self.check_chart(p.coords())?;
        Ok(self.riemann_at(p.coords(), x, y, z, w))
    }

    /// Unchecked variant of [`ManifoldModel::riemann`] for callers that already
    /// validated the chart point.
    #[inline]
    pub fn riemann_at(&self, p: &[f64], x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let kappa = self.sphere_curvature();
        if kappa == 0.0 {
            return 0.0;
        }
        // the u-direction is flat: only sphere components enter
        let sphere = |a: &[f64], b: &[f64]| {
            let mut ua = a.to_vec();
            let mut ub = b.to_vec();
            ua[0] = 0.0;
            ub[0] = 0.0;
            self.inner(p, &ua, &ub)
        };
        kappa * (sphere(x, z) * sphere(y, w) - sphere(y, z) * sphere(x, w))
    }

    /// Declared parallel 1-forms of the model.
    pub fn parallel_forms(&self) -> Vec<ParallelForm> {
        let n = self.dim();
        let coordinate_form = |name: String, i: usize| {
            let mut components = vec![0.0; n];
            components[i] = 1.0;
            ParallelForm { name, components }
        };
        match &self.kind {
            ModelKind::Euclidean { dim } => (0..*dim)
                .map(|i| coordinate_form(format!("dx{}", i + 1), i))
                .collect(),
            ModelKind::FlatTorus { periods } if periods.len() == 2 => vec![
                coordinate_form("du".into(), 0),
                coordinate_form("dv".into(), 1),
            ],
            ModelKind::FlatTorus { periods } => (0..periods.len())
                .map(|i| coordinate_form(format!("dx{}", i + 1), i))
                .collect(),
            ModelKind::CylinderSphere { .. } => vec![coordinate_form("du".into(), 0)],
        }
    }

    pub fn form(&self, name: &str) -> Option<ParallelForm> {
        self.parallel_forms().into_iter().find(|f| f.name == name)
    }
}

/// Residual of `D Omega = 0` at `p`:
/// `max_{i,j} |d_i Omega_j - Gamma^k_{ij} Omega_k|` with `d_i` by central
/// differences of step `h`.
pub fn check_parallel<F>(model: &ManifoldModel, form: F, p: &Point, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = model.dim();
    let gamma = model.christoffel(p)?;
    let at = form(p.coords());
    let mut worst = 0.0_f64;
    for i in 0..n {
        let mut plus = p.coords().to_vec();
        let mut minus = p.coords().to_vec();
        plus[i] += h;
        minus[i] -= h;
        let (fp, fm) = (form(&plus), form(&minus));
        for j in 0..n {
            let derivative = (fp[j] - fm[j]) / (2.0 * h);
            let correction: f64 = (0..n).map(|k| gamma.get(k, i, j) * at[k]).sum();
            worst = worst.max((derivative - correction).abs());
        }
    }
    Ok(worst)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn flat_metrics_are_identity() {
        let e = ManifoldModel::euclidean(2).unwrap();
        let g = e.metric(&Point::new(vec![3.0, -7.0])).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
        let t = ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap();
        let g = t.metric(&Point::new(vec![0.3, 0.9])).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
    }

    #[test]
    fn round_metric_at_equator() {
        let m = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let g = m.metric(&Point::new(vec![0.4, PI / 2.0, 1.0])).unwrap();
        for i in 0..3 {
            assert!(close(g[(i, i)], 1.0, 1e-15));
        }
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let m = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let theta: f64 = 0.8;
        let gamma = m.christoffel(&Point::new(vec![1.0, theta, 2.0])).unwrap();
        assert!(close(gamma.get(1, 2, 2), -theta.sin() * theta.cos(), 1e-15));
        assert!(close(gamma.get(2, 1, 2), theta.cos() / theta.sin(), 1e-15));
        assert!(close(gamma.get(2, 2, 1), theta.cos() / theta.sin(), 1e-15));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(gamma.get(0, i, j), 0.0);
                assert_eq!(gamma.get(i, 0, j), 0.0);
            }
        }
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let t = ManifoldModel::flat_torus(vec![2.0, 3.0, 1.0]).unwrap();
        let gamma = t.christoffel(&Point::new(vec![0.1, 0.2, 0.3])).unwrap();
        assert!(gamma.data.iter().all(|&g| g == 0.0));
        let e = ManifoldModel::euclidean(4).unwrap();
        let gamma = e.christoffel(&Point::new(vec![0.0; 4])).unwrap();
        assert!(gamma.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn connection_term_matches_table() {
        let m = ManifoldModel::cylinder_sphere(3, 1.7).unwrap();
        let p = Point::new(vec![0.2, 1.1, 0.7, 2.5]);
        let gamma = m.christoffel(&p).unwrap();
        let a = [0.3, -1.2, 0.5, 0.9];
        let b = [1.1, 0.4, -0.6, 0.2];
        let mut out = [0.0; 4];
        m.connection_term(p.coords(), &a, &b, &mut out);
        for k in 0..4 {
            let mut expected = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    expected += gamma.get(k, i, j) * a[i] * b[j];
                }
            }
            assert!(close(out[k], expected, 1e-13), "k={k}: {} vs {expected}", out[k]);
        }
    }

    #[test]
    fn pole_proximity_is_reported() {
        let m = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let err = m.metric(&Point::new(vec![0.0, 0.01, 0.0])).unwrap_err();
        assert!(matches!(err, CsfError::PoleProximity { coord: 1, .. }));
        assert!(m.christoffel(&Point::new(vec![0.0, PI - 0.02, 0.0])).is_err());
        // the azimuth is unconstrained
        assert!(m.metric(&Point::new(vec![0.0, 1.0, 0.0])).is_ok());
    }

    #[test]
    fn unit_sphere_sectional_curvature() {
        let m = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let theta: f64 = 1.2;
        let p = Point::new(vec![0.0, theta, 0.5]);
        let x = [0.0, 1.0, 0.0];
        let y = [0.0, 0.0, 1.0 / theta.sin()];
        assert!(close(m.riemann(&p, &x, &y, &x, &y).unwrap(), 1.0, 1e-14));
        assert_eq!(m.riemann(&p, &x, &x, &y, &y).unwrap(), 0.0);
        // mixing in the flat factor does not change anything
        let xu = [5.0, 1.0, 0.0];
        assert!(close(m.riemann(&p, &xu, &y, &xu, &y).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn curvature_bound_per_model() {
        assert_eq!(ManifoldModel::euclidean(3).unwrap().curvature_bound(), 0.0);
        assert_eq!(ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap().curvature_bound(), 0.0);
        let m = ManifoldModel::cylinder_sphere(2, 2.0).unwrap();
        assert!(close(m.curvature_bound(), 0.25, 1e-15));
        assert_eq!(ManifoldModel::cylinder_sphere(1, 2.0).unwrap().curvature_bound(), 0.0);
    }

    #[test]
    fn declared_forms() {
        let m = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let forms = m.parallel_forms();
        assert_eq!(forms.len(), 1);
        assert_eq!(forms[0].name, "du");
        assert_eq!(forms[0].components, vec![1.0, 0.0, 0.0]);

        let e = ManifoldModel::euclidean(2).unwrap().parallel_forms();
        assert_eq!(e[0].name, "dx1");
        assert_eq!(e[0].components, vec![1.0, 0.0]);
        assert_eq!(e[1].name, "dx2");
        assert_eq!(e[1].components, vec![0.0, 1.0]);

        let t = ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap();
        let names: Vec<_> = t.parallel_forms().into_iter().map(|f| f.name).collect();
        assert_eq!(names, ["du", "dv"]);
    }

    #[test]
    fn check_parallel_examples() {
        let t = ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap();
        let du = t.form("du").unwrap();
        let p = Point::new(vec![0.3, 0.6]);
        let r = check_parallel(&t, |_| du.components.clone(), &p, 1e-4).unwrap();
        assert_eq!(r, 0.0);
        // u du is not parallel: d_u (u) = 1
        let r = check_parallel(&t, |x| vec![x[0], 0.0], &p, 1e-4).unwrap();
        assert!(close(r, 1.0, 1e-9));

        let c = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let du = c.form("du").unwrap();
        let p = Point::new(vec![0.5, 1.0, 2.0]);
        let r = check_parallel(&c, |_| du.components.clone(), &p, 1e-4).unwrap();
        assert!(r <= 1e-7);
        // d phi is not parallel on the sphere
        let r = check_parallel(&c, |_| vec![0.0, 0.0, 1.0], &p, 1e-4).unwrap();
        assert!(r > 0.1);
    }

    #[test]
    fn wrapping_and_min_image() {
        let t = ManifoldModel::flat_torus(vec![1.0, 2.0]).unwrap();
        let mut p = [1.25, -0.5];
        t.wrap(&mut p);
        assert!(close(p[0], 0.25, 1e-15) && close(p[1], 1.5, 1e-15));
        let mut d = [0.9, -1.8];
        t.min_image(&mut d);
        assert!(close(d[0], -0.1, 1e-15) && close(d[1], 0.2, 1e-15));
        let c = ManifoldModel::cylinder_sphere(2, 1.0).unwrap();
        let mut q = [-0.1, 1.0, 7.0];
        c.wrap(&mut q);
        assert!(close(q[0], TAU - 0.1, 1e-15) && q[1] == 1.0 && close(q[2], 7.0 - TAU, 1e-15));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ManifoldModel::euclidean(0).is_err());
        assert!(ManifoldModel::flat_torus(vec![1.0, 0.0]).is_err());
        assert!(ManifoldModel::flat_torus(vec![]).is_err());
        assert!(ManifoldModel::cylinder_sphere(2, -1.0).is_err());
        assert!(ManifoldModel::cylinder_sphere(0, 1.0).is_err());
        assert!(ManifoldModel::euclidean(2).unwrap().with_pole_margin(2.0).is_err());
    }
}
