//! Explicit time integration of the curve shortening flow `dx/dt = H`.

use serde::{Deserialize, Serialize};

use crate::curve::{compute_geometry, resample_uniform, CurveGeometry, DiscreteCurve, EPS_DEGENERATE};
use crate::error::{CsfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Forward Euler.
    Euler,
    /// Explicit midpoint rule.
    Rk2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Rk2 => "rk2",
        }
    }
}

fn default_dt_max() -> f64 {
    1e-2
}
fn default_cfl() -> f64 {
    0.5
}
fn default_resample_every() -> u64 {
    50
}
fn default_m_max() -> usize {
    crate::curve::DEFAULT_M_MAX
}
fn default_blowup() -> f64 {
    1e8
}
fn default_scheme() -> Scheme {
    Scheme::Rk2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
    #[serde(default = "default_resample_every")]
    pub resample_every: u64,
    pub sample_every: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    /// Threshold on `max |A|^2` beyond which the run is declared blown up.
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

impl FlowConfig {
    /// A configuration with default step control.
    pub fn new(t_end: f64, sample_every: f64) -> Self {
        Self {
            t_end,
            dt_max: default_dt_max(),
            cfl_factor: default_cfl(),
            resample_every: default_resample_every(),
            sample_every,
            m_max: default_m_max(),
            blowup_threshold: default_blowup(),
            scheme: default_scheme(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.t_end) {
            return Err(CsfError::Config("flow.t_end must be > 0".into()));
        }
        if !positive(self.dt_max) {
            return Err(CsfError::Config("flow.dt_max must be > 0".into()));
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(CsfError::Config("flow.cfl_factor must lie in (0, 1]".into()));
        }
        if self.resample_every == 0 {
            return Err(CsfError::Config("flow.resample_every must be >= 1".into()));
        }
        if !positive(self.sample_every) {
            return Err(CsfError::Config("flow.sample_every must be > 0".into()));
        }
        if !positive(self.blowup_threshold) {
            return Err(CsfError::Config("flow.blowup_threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// A curve at time `t` together with its order-zero geometry.
///
/// Higher covariant derivatives are not part of the cached geometry; the
/// diagnostics compute them on demand at sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub step: u64,
    pub curve: DiscreteCurve,
    pub geometry: CurveGeometry,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve) -> Result<Self> {
        let geometry = compute_geometry(&curve, 0)?;
        Ok(Self {
            t: 0.0,
            step: 0,
            curve,
            geometry,
        })
    }
}

/// Why [`advance`] stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Blowup,
    Error(CsfError),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Blowup => "blowup",
            Termination::Error(_) => "error",
        }
    }
}

#[inline]
fn time_tol(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

/// Parabolic step bound `cfl * min(ds)^2 / 2`, also capped by `dt_max`.
pub fn cfl_dt(geometry: &CurveGeometry, config: &FlowConfig) -> Result<f64> {
    let h = geometry.min_edge();
    if !(h > EPS_DEGENERATE) {
        let index = geometry
            .edge_lengths()
            .iter()
            .position(|&e| e == h)
            .unwrap_or(0);
        return Err(CsfError::DegenerateEdge { index, length: h });
    }
    Ok(config.dt_max.min(config.cfl_factor * h * h / 2.0))
}

/// Next sample time strictly after `t`, capped at `t_end`.
pub fn next_stop(t: f64, config: &FlowConfig) -> f64 {
    let se = config.sample_every;
    let mut next = ((t / se).floor() + 1.0) * se;
    if next - t <= time_tol(next) {
        next += se;
    }
    next.min(config.t_end)
}

/// Step size for the next step: the CFL bound clamped to land exactly on the
/// next sample time or `t_end`.
pub fn stable_dt(state: &FlowState, config: &FlowConfig) -> Result<f64> {
    let dt = cfl_dt(&state.geometry, config)?;
    let remaining = next_stop(state.t, config) - state.t;
    Ok(if remaining > 0.0 { dt.min(remaining) } else { dt })
}

/// Moves every node by `dt * H` (euler) or by the midpoint rule (rk2),
/// without resampling.
pub fn raw_step(state: &FlowState, scheme: Scheme, dt: f64) -> Result<FlowState> {
    Ok(raw_step_with_midpoint(state, scheme, dt)?.0)
}

/// Like [`raw_step`], additionally returning the midpoint state for rk2.
pub fn raw_step_with_midpoint(
    state: &FlowState,
    scheme: Scheme,
    dt: f64,
) -> Result<(FlowState, Option<FlowState>)> {
    let (velocity, mid) = match scheme {
        Scheme::Euler => (state.geometry.curvature_flat().to_vec(), None),
        Scheme::Rk2 => {
            let half = displace(&state.curve, state.geometry.curvature_flat(), 0.5 * dt)?;
            let geometry = compute_geometry(&half, 0)?;
            let mid = FlowState {
                t: state.t + 0.5 * dt,
                step: state.step,
                curve: half,
                geometry,
            };
            (mid.geometry.curvature_flat().to_vec(), Some(mid))
        }
    };
    let curve = displace(&state.curve, &velocity, dt)?;
    let geometry = compute_geometry(&curve, 0)?;
    let next = FlowState {
        t: state.t + dt,
        step: state.step + 1,
        curve,
        geometry,
    };
    Ok((next, mid))
}

fn displace(curve: &DiscreteCurve, velocity: &[f64], dt: f64) -> Result<DiscreteCurve> {
    let nodes: Vec<f64> = curve
        .nodes_flat()
        .iter()
        .zip(velocity)
        .map(|(x, v)| x + dt * v)
        .collect();
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(CsfError::NonFinite {
            context: "node update".into(),
        });
    }
    curve.with_nodes(nodes)
}

/// One accepted step with an explicit `dt`, resampling when the step counter
/// hits a multiple of `resample_every`.
pub fn step_with_dt(state: &FlowState, config: &FlowConfig, dt: f64) -> Result<FlowState> {
    let mut next = raw_step(state, config.scheme, dt)?;
    if next.step % config.resample_every == 0 {
        next.curve = resample_uniform(&next.curve)?;
        next.geometry = compute_geometry(&next.curve, 0)?;
    }
    Ok(next)
}

pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let dt = stable_dt(state, config)?;
    step_with_dt(state, config, dt)
}

pub fn detect_blowup(state: &FlowState, config: &FlowConfig) -> bool {
    state.geometry.max_a2() > config.blowup_threshold
}

/// Integrates until `t_end`, blow-up, or an error.
///
/// `on_sample` sees the state at every multiple of `sample_every` (including
/// `t = 0`) and at `t_end`.
pub fn advance<F>(mut state: FlowState, config: &FlowConfig, mut on_sample: F) -> (FlowState, Termination)
where
    F: FnMut(&FlowState),
{
    if let Err(e) = config.validate() {
        return (state, Termination::Error(e));
    }
    let se = config.sample_every;
    let mut sample_index = (state.t / se - 1e-9).ceil().max(0.0) as u64;
    let mut last_sampled = f64::NAN;
    loop {
        let sample_time = sample_index as f64 * se;
        if state.t >= sample_time - time_tol(sample_time) {
            on_sample(&state);
            last_sampled = state.t;
            sample_index = (state.t / se + 1e-9).floor() as u64 + 1;
        }
        if detect_blowup(&state, config) {
            return (state, Termination::Blowup);
        }
        if state.t >= config.t_end - time_tol(config.t_end) {
            if last_sampled != state.t {
                on_sample(&state);
            }
            return (state, Termination::Completed);
        }
        let dt = match stable_dt(&state, config) {
            Ok(dt) => dt,
            Err(e) => return (state, Termination::Error(e)),
        };
        match step_with_dt(&state, config, dt) {
            Ok(mut next) => {
                let stop = next_stop(state.t, config);
                if (next.t - stop).abs() <= time_tol(stop) {
                    next.t = stop;
                }
                state = next;
            }
            Err(e) => return (state, Termination::Error(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldModel;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn circle(n: usize, r: f64) -> DiscreteCurve {
        let e = Arc::new(ManifoldModel::euclidean(2).unwrap());
        let nodes = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        DiscreteCurve::new(e, nodes).unwrap()
    }

    fn mean_radius(curve: &DiscreteCurve) -> f64 {
        (0..curve.len())
            .map(|i| {
                let p = curve.node(i);
                (p[0] * p[0] + p[1] * p[1]).sqrt()
            })
            .sum::<f64>()
            / curve.len() as f64
    }

    fn torus_line(n: usize) -> DiscreteCurve {
        let t = Arc::new(ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap());
        let nodes = (0..n).map(|i| vec![i as f64 / n as f64, 0.3]).collect();
        DiscreteCurve::new(t, nodes).unwrap()
    }

    #[test]
    fn cfl_step_on_unit_circle() {
        let state = FlowState::new(circle(256, 1.0)).unwrap();
        let config = FlowConfig::new(1.0, 0.5);
        let h = 2.0 * (std::f64::consts::PI / 256.0).sin();
        let dt = stable_dt(&state, &config).unwrap();
        assert!((dt - 0.5 * h * h / 2.0).abs() < 1e-15);
        assert!((dt - 1.506e-4).abs() < 1e-6);
    }

    #[test]
    fn dt_max_and_sample_clamps() {
        let state = FlowState::new(circle(16, 1.0)).unwrap();
        let mut config = FlowConfig::new(1.0, 0.5);
        config.dt_max = 1e-3;
        assert_eq!(stable_dt(&state, &config).unwrap(), 1e-3);
        let mut late = state.clone();
        late.t = 0.5 - 2e-4;
        assert!((stable_dt(&late, &config).unwrap() - 2e-4).abs() < 1e-15);
    }

    #[test]
    fn next_stop_skips_current_sample() {
        let config = FlowConfig::new(1.0, 0.25);
        assert_eq!(next_stop(0.0, &config), 0.25);
        assert_eq!(next_stop(0.25, &config), 0.5);
        assert_eq!(next_stop(0.9, &config), 1.0);
    }

    #[test]
    fn closed_geodesic_is_stationary() {
        let state = FlowState::new(torus_line(64)).unwrap();
        let config = FlowConfig::new(0.05, 0.05);
        let (end, term) = advance(state.clone(), &config, |_| {});
        assert_eq!(term, Termination::Completed);
        for (a, b) in state.curve.nodes_flat().iter().zip(end.curve.nodes_flat()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_step_shrinks_circle() {
        let state = FlowState::new(circle(128, 1.0)).unwrap();
        let next = raw_step(&state, Scheme::Euler, 1e-4).unwrap();
        let r = mean_radius(&next.curve);
        assert!(r < 1.0);
        assert!((r - (1.0 - 1e-4)).abs() < 1e-6);
    }

    #[test]
    fn circle_radius_follows_exact_solution() {
        // r(t)^2 = 1 - 2t
        let state = FlowState::new(circle(128, 1.0)).unwrap();
        let config = FlowConfig::new(0.375, 0.125);
        let (end, term) = advance(state, &config, |_| {});
        assert_eq!(term, Termination::Completed);
        assert_eq!(end.t, 0.375);
        assert!((mean_radius(&end.curve) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn midpoint_rule_beats_euler() {
        let error = |scheme| {
            let state = FlowState::new(circle(64, 1.0)).unwrap();
            let mut config = FlowConfig::new(0.1, 0.1);
            config.scheme = scheme;
            config.dt_max = 2e-3;
            config.cfl_factor = 1.0;
            let (end, _) = advance(state, &config, |_| {});
            // reference: same spatial discretisation, much smaller steps
            let fine_state = FlowState::new(circle(64, 1.0)).unwrap();
            let mut fine = config.clone();
            fine.dt_max = 2e-5;
            fine.scheme = Scheme::Rk2;
            let (reference, _) = advance(fine_state, &fine, |_| {});
            (mean_radius(&end.curve) - mean_radius(&reference.curve)).abs()
        };
        let (e1, e2) = (error(Scheme::Euler), error(Scheme::Rk2));
        assert!(e1 / e2 >= 5.0, "{e1} vs {e2}");
    }

    #[test]
    fn small_circle_blows_up_before_extinction() {
        let state = FlowState::new(circle(64, 1.0)).unwrap();
        let mut config = FlowConfig::new(1.0, 0.05);
        config.blowup_threshold = 1e4;
        let (end, term) = advance(state, &config, |_| {});
        assert_eq!(term, Termination::Blowup);
        assert!(end.t < 0.5);
        // max|A|^2 (T - t) stays near 1/2 for a shrinking circle
        let product = end.geometry.max_a2() * (0.5 - end.t);
        assert!((product - 0.5).abs() < 0.05, "{product}");
    }

    #[test]
    fn length_decreases_and_run_is_deterministic() {
        let config = FlowConfig::new(0.2, 0.02);
        let run = || {
            let mut lengths = Vec::new();
            let state = FlowState::new(circle(96, 1.0)).unwrap();
            let (end, _) = advance(state, &config, |s| lengths.push((s.t, s.geometry.length())));
            (lengths, end.curve.nodes_flat().to_vec())
        };
        let (lengths, nodes) = run();
        assert_eq!(lengths.len(), 11);
        assert!(lengths.windows(2).all(|w| w[1].1 < w[0].1));
        let (again, nodes_again) = run();
        assert_eq!(lengths, again);
        assert_eq!(nodes, nodes_again);
    }

    #[test]
    fn resampling_is_transparent_on_a_circle() {
        let run = |resample_every| {
            let state = FlowState::new(circle(128, 1.0)).unwrap();
            let mut config = FlowConfig::new(0.1, 0.1);
            config.resample_every = resample_every;
            let (end, _) = advance(state, &config, |_| {});
            mean_radius(&end.curve)
        };
        assert!((run(5) - run(1_000_000)).abs() < 1e-6);
    }

    #[test]
    fn invalid_config_is_reported() {
        let state = FlowState::new(circle(16, 1.0)).unwrap();
        let (_, term) = advance(state, &FlowConfig::new(-1.0, 0.1), |_| {});
        assert!(matches!(term, Termination::Error(CsfError::Config(_))));
    }
}
