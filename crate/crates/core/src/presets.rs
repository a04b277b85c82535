//! Initial curves.
//!
//! Every preset is a closed curve `x(theta)` sampled at `theta_j = 2 pi j / N`:
//!
//! - `circle(r, center)` in the plane of the first two Euclidean coordinates;
//! - `winding(p, q, a, k)` on a 2-torus with periods `(P_u, P_v)`:
//!   `(p theta P_u / 2pi, q theta P_v / 2pi + a sin(k theta))`;
//! - `sphere_band(a, k, phi0)` on a cylinder over `S^k`, `k >= 2`:
//!   `(theta, pi/2 + a sin(k theta), pi/2, ..., phi0)`;
//! - `periodic_graph(a, k)` on a `(1 + p)`-torus: the graph of
//!   `f_i(x) = a_i sin(2 pi k_i x / P_0)`, `x` running once around the first
//!   period.
//!
//! An optional perturbation adds
//! `amplitude * (xi_c0 sin(f theta) + xi_c1 cos(f theta))` to coordinate `c`,
//! with `f` the perturbation frequency and `xi` uniform in `[-1, 1)` drawn from
//! [`SplitMix64`] seeded with `seed`, two draws per perturbed coordinate in
//! increasing `c`. All coordinates of a circle are perturbed; for the other
//! presets coordinate 0 is left alone so that `Omega = du` keeps its sign.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use crate::config::{InitialCurveSpec, PresetName};
use crate::curve::DiscreteCurve;
use crate::error::{CsfError, Result};
use crate::manifold::{ManifoldModel, ModelKind};
use crate::rng::SplitMix64;

pub fn make_initial_curve(spec: &InitialCurveSpec, model: Arc<ManifoldModel>) -> Result<DiscreteCurve> {
    let n = spec.n;
    let thetas: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let mut nodes = match spec.preset {
        PresetName::Circle => circle(spec, &model, &thetas)?,
        PresetName::Winding => winding(spec, &model, &thetas)?,
        PresetName::SphereBand => sphere_band(spec, &model, &thetas)?,
        PresetName::PeriodicGraph => periodic_graph(spec, &model, &thetas)?,
    };
    if let Some(p) = &spec.perturbation {
        if !p.amplitude.is_finite() {
            return Err(CsfError::Config("perturbation.amplitude must be finite".into()));
        }
        let first = if spec.preset == PresetName::Circle { 0 } else { 1 };
        let mut rng = SplitMix64::new(p.seed);
        let f = p.frequency as f64;
        for c in first..model.dim() {
            let (xs, xc) = (rng.next_signed(), rng.next_signed());
            for (node, theta) in nodes.iter_mut().zip(&thetas) {
                node[c] += p.amplitude * (xs * (f * theta).sin() + xc * (f * theta).cos());
            }
        }
    }
    DiscreteCurve::new(model, nodes)
}

fn required(spec: &InitialCurveSpec, name: &str) -> Result<f64> {
    spec.scalar(name)?.ok_or_else(|| {
        CsfError::Config(format!("preset {:?} needs parameter {name:?}", spec.preset))
    })
}

fn integer(spec: &InitialCurveSpec, name: &str, default: Option<f64>) -> Result<f64> {
    let v = match default {
        Some(d) => spec.scalar(name)?.unwrap_or(d),
        None => required(spec, name)?,
    };
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(CsfError::Config(format!("parameter {name:?} must be an integer, got {v}")));
    }
    Ok(v)
}

fn check_known(spec: &InitialCurveSpec, known: &[&str]) -> Result<()> {
    match spec.parameters.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(CsfError::Config(format!(
            "unknown parameter {k:?} for preset {:?}",
            spec.preset
        ))),
        None => Ok(()),
    }
}

fn wrong_model(preset: &str, needed: &str) -> CsfError {
    CsfError::Config(format!("preset {preset} needs a {needed} manifold"))
}

fn circle(spec: &InitialCurveSpec, model: &ManifoldModel, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_known(spec, &["r", "center"])?;
    let ModelKind::Euclidean { dim } = *model.kind() else {
        return Err(wrong_model("circle", "euclidean"));
    };
    if dim < 2 {
        return Err(CsfError::Config("circle needs euclidean dimension >= 2".into()));
    }
    let r = required(spec, "r")?;
    if !(r.is_finite() && r > 0.0) {
        return Err(CsfError::Config(format!("circle radius must be > 0, got {r}")));
    }
    let center = spec.list("center")?.unwrap_or_else(|| vec![0.0; dim]);
    if center.len() != dim {
        return Err(CsfError::Config(format!(
            "circle center has {} entries, expected {dim}",
            center.len()
        )));
    }
    Ok(thetas
        .iter()
        .map(|t| {
            let mut p = center.clone();
            p[0] += r * t.cos();
            p[1] += r * t.sin();
            p
        })
        .collect())
}

fn winding(spec: &InitialCurveSpec, model: &ManifoldModel, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_known(spec, &["p", "q", "a", "k"])?;
    let ModelKind::FlatTorus { periods } = model.kind() else {
        return Err(wrong_model("winding", "flat_torus"));
    };
    if periods.len() != 2 {
        return Err(CsfError::Config("winding needs a 2-dimensional flat torus".into()));
    }
    let p = integer(spec, "p", None)?;
    let q = integer(spec, "q", None)?;
    let a = spec.scalar("a")?.unwrap_or(0.0);
    let k = integer(spec, "k", Some(1.0))?;
    if p == 0.0 && q == 0.0 {
        return Err(CsfError::Config("winding needs (p, q) != (0, 0)".into()));
    }
    let (pu, pv) = (periods[0], periods[1]);
    Ok(thetas
        .iter()
        .map(|t| vec![p * t * pu / TAU, q * t * pv / TAU + a * (k * t).sin()])
        .collect())
}

fn sphere_band(spec: &InitialCurveSpec, model: &ManifoldModel, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_known(spec, &["a", "k", "phi0"])?;
    let ModelKind::CylinderSphere { sphere_dim, .. } = *model.kind() else {
        return Err(wrong_model("sphere_band", "cylinder_sphere"));
    };
    if sphere_dim < 2 {
        return Err(CsfError::Config("sphere_band needs sphere_dim >= 2".into()));
    }
    let a = required(spec, "a")?;
    let k = integer(spec, "k", Some(1.0))?;
    let phi0 = spec.scalar("phi0")?.unwrap_or(0.0);
    let margin = model.pole_margin();
    if !a.is_finite() || a.abs() >= FRAC_PI_2 - margin {
        return Err(CsfError::PoleProximity {
            coord: 1,
            angle: FRAC_PI_2 + a.abs(),
            margin,
        });
    }
    Ok(thetas
        .iter()
        .map(|t| {
            let mut p = vec![FRAC_PI_2; 1 + sphere_dim];
            p[0] = *t;
            p[1] = FRAC_PI_2 + a * (k * t).sin();
            p[sphere_dim] = phi0;
            p
        })
        .collect())
}

fn periodic_graph(spec: &InitialCurveSpec, model: &ManifoldModel, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_known(spec, &["a", "k"])?;
    let ModelKind::FlatTorus { periods } = model.kind() else {
        return Err(wrong_model("periodic_graph", "flat_torus"));
    };
    let amplitudes = spec
        .list("a")?
        .ok_or_else(|| CsfError::Config("periodic_graph needs parameter \"a\"".into()))?;
    let p = amplitudes.len();
    if periods.len() != 1 + p {
        return Err(CsfError::Config(format!(
            "periodic_graph with {p} amplitudes needs a {}-dimensional torus",
            1 + p
        )));
    }
    let frequencies = spec.list("k")?.unwrap_or_else(|| vec![1.0; p]);
    if frequencies.len() != p || frequencies.iter().any(|k| k.fract() != 0.0) {
        return Err(CsfError::Config(format!(
            "periodic_graph needs {p} integer frequencies"
        )));
    }
    let p0 = periods[0];
    Ok(thetas
        .iter()
        .map(|t| {
            let mut x = vec![t * p0 / TAU];
            x.extend(
                amplitudes
                    .iter()
                    .zip(&frequencies)
                    .map(|(a, k)| a * (k * t).sin()),
            );
            x
        })
        .collect())
}
