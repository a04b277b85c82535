//! Evolution identities, monotonicity statements and interpolation
//! inequalities of the flow, evaluated as numerical residuals.
//!
//! Residuals compare two states one explicit step apart with no resampling in
//! between, so node `i` of both states is the same material point. The
//! right-hand sides are evaluated at the start state for forward Euler and at
//! the half-step state for the midpoint rule, so that the time differencing is
//! consistent with the integrator.

use serde::{Deserialize, Serialize};

use crate::curve::{compute_geometry, CurveGeometry, DiscreteCurve};
use crate::error::{CsfError, Result};
use crate::flow::{cfl_dt, raw_step_with_midpoint, FlowConfig, FlowState, Scheme, Termination};
use crate::manifold::{ManifoldModel, ParallelForm};

/// Floor below which `Omega(T)` is not considered positive.
pub const EPS_POS: f64 = 1e-8;

fn default_ep_rel() -> f64 {
    0.05
}
fn default_residual_abs() -> f64 {
    1e-8
}
fn default_mono() -> f64 {
    1e-8
}
fn default_exp() -> f64 {
    1e-2
}
fn default_interp() -> f64 {
    1e-6
}
fn default_conv_a() -> f64 {
    1e-3
}
fn default_conv_higher() -> f64 {
    1e-2
}
fn default_length_floor() -> f64 {
    1e-6
}
fn default_eps_pos() -> f64 {
    EPS_POS
}

/// Check thresholds; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative bound on the Omega(T) evolution residual, against `max |A|^2`.
    #[serde(default = "default_ep_rel")]
    pub ep_rel: f64,
    /// Relative bound on the `|A|^2` evolution residual, against its largest term.
    #[serde(default = "default_ep_rel")]
    pub eqsf_rel: f64,
    #[serde(default = "default_ep_rel")]
    pub gf_rel: f64,
    /// Relative bound on the length residual, against `max int |A|^2 ds`.
    #[serde(default = "default_ep_rel")]
    pub length_rel: f64,
    /// Absolute floor added to every residual bound.
    #[serde(default = "default_residual_abs")]
    pub residual_abs: f64,
    #[serde(default = "default_mono")]
    pub mono: f64,
    #[serde(default = "default_exp")]
    pub exp: f64,
    /// Per-sample slack for the nonincreasing `max |A|^2 mu^2` on flat models.
    #[serde(default = "default_mono")]
    pub flat_monotone: f64,
    #[serde(default = "default_interp")]
    pub interp: f64,
    #[serde(default = "default_conv_a")]
    pub conv_a: f64,
    #[serde(default = "default_conv_higher")]
    pub conv_higher: f64,
    #[serde(default = "default_length_floor")]
    pub length_floor: f64,
    #[serde(default = "default_eps_pos")]
    pub eps_pos: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all tolerance fields have defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Ep,
    Eqsf,
    Gf,
    Length,
    MonoMinOmega,
    A2mu2Bound,
    Interpolation,
    Convergence,
}

impl CheckName {
    pub const ALL: [CheckName; 8] = [
        CheckName::Ep,
        CheckName::Eqsf,
        CheckName::Gf,
        CheckName::Length,
        CheckName::MonoMinOmega,
        CheckName::A2mu2Bound,
        CheckName::Interpolation,
        CheckName::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Ep => "ep",
            CheckName::Eqsf => "eqsf",
            CheckName::Gf => "gf",
            CheckName::Length => "length",
            CheckName::MonoMinOmega => "mono_min_omega",
            CheckName::A2mu2Bound => "a2mu2_bound",
            CheckName::Interpolation => "interpolation",
            CheckName::Convergence => "convergence",
        }
    }
}

/// A residual together with the magnitude it should be judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn passes(&self, rel: f64, abs: f64) -> bool {
        self.value <= rel * self.scale + abs
    }
}

/// Two states one raw step apart, plus the rk2 half-step state.
#[derive(Debug, Clone)]
pub struct ProbeStep {
    pub prev: FlowState,
    pub mid: Option<FlowState>,
    pub next: FlowState,
    pub dt: f64,
}

impl ProbeStep {
    pub fn new(state: &FlowState, scheme: Scheme, dt: f64) -> Result<Self> {
        let (next, mid) = raw_step_with_midpoint(state, scheme, dt)?;
        Ok(Self {
            prev: state.clone(),
            mid,
            next,
            dt,
        })
    }

    /// Pairs two externally produced states. `mid` must be supplied for
    /// midpoint-consistent evaluation.
    pub fn from_states(prev: FlowState, next: FlowState, mid: Option<FlowState>) -> Result<Self> {
        if prev.curve.len() != next.curve.len() {
            return Err(CsfError::ShapeMismatch {
                expected: prev.curve.len(),
                found: next.curve.len(),
            });
        }
        let dt = next.t - prev.t;
        Ok(Self { prev, mid, next, dt })
    }

    /// State at which right-hand sides are evaluated.
    pub fn eval_state(&self) -> &FlowState {
        self.mid.as_ref().unwrap_or(&self.prev)
    }
}

/// Nodal values of `Omega(T)` and their extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaProfile {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn omega_t(curve: &DiscreteCurve, geometry: &CurveGeometry, form: &ParallelForm) -> OmegaProfile {
    let values: Vec<f64> = (0..curve.len()).map(|i| form.apply(geometry.tangent(i))).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    OmegaProfile { values, min, max }
}

/// `mu = 1 / Omega(T)`, defined while `Omega(T)` stays above the positivity floor.
pub fn mu(curve: &DiscreteCurve, geometry: &CurveGeometry, form: &ParallelForm) -> Result<Vec<f64>> {
    mu_with_floor(curve, geometry, form, EPS_POS)
}

pub fn mu_with_floor(
    curve: &DiscreteCurve,
    geometry: &CurveGeometry,
    form: &ParallelForm,
    floor: f64,
) -> Result<Vec<f64>> {
    let omega = omega_t(curve, geometry, form);
    if !(omega.min > floor) {
        return Err(CsfError::NonPositiveOmega { min: omega.min, floor });
    }
    Ok(omega.values.iter().map(|w| 1.0 / w).collect())
}

fn max_abs_diff(lhs: impl Iterator<Item = f64>, rhs: impl Iterator<Item = f64>) -> f64 {
    lhs.zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Residual of `d/dt Omega(T) = Lap Omega(T) + |A|^2 Omega(T)` for a parallel form.
pub fn residual_form_evolution(probe: &ProbeStep, form: &ParallelForm) -> Result<Residual> {
    let before = omega_t(&probe.prev.curve, &probe.prev.geometry, form);
    let after = omega_t(&probe.next.curve, &probe.next.geometry, form);
    let eval = probe.eval_state();
    let at = omega_t(&eval.curve, &eval.geometry, form);
    let lap = eval.geometry.laplacian(&at.values);
    let a2 = eval.geometry.a2();
    let lhs = before
        .values
        .iter()
        .zip(&after.values)
        .map(|(b, a)| (a - b) / probe.dt);
    let rhs = (0..at.values.len()).map(|i| lap[i] + a2[i] * at.values[i]);
    Ok(Residual {
        value: max_abs_diff(lhs, rhs),
        scale: max_of(a2),
    })
}

/// Right-hand side of the `|A|^2` evolution,
/// `Lap|A|^2 - 2|DA|^2 + 2|A|^4 + 2 R(T,H,T,H)`, and the largest term magnitude.
pub fn a2_evolution_rhs(curve: &DiscreteCurve, geometry: &CurveGeometry) -> (Vec<f64>, f64) {
    assert!(geometry.m_max() >= 1, "needs |DA|^2");
    let model: &ManifoldModel = curve.model();
    let a2 = geometry.a2();
    let grad = geometry.a_norms(1);
    let lap = geometry.laplacian(a2);
    let mut scale = 0.0_f64;
    let rhs = (0..curve.len())
        .map(|i| {
            let (t, h) = (geometry.tangent(i), geometry.curvature(i));
            let curv = 2.0 * model.riemann_at(curve.node(i), t, h, t, h);
            let terms = [lap[i], -2.0 * grad[i], 2.0 * a2[i] * a2[i], curv];
            scale = terms.iter().fold(scale, |s, v| s.max(v.abs()));
            terms.iter().sum()
        })
        .collect();
    (rhs, scale)
}

/// Residual of the `|A|^2` evolution identity.
pub fn residual_a2_evolution(probe: &ProbeStep) -> Result<Residual> {
    check_shapes(probe)?;
    let eval = probe.eval_state();
    let geometry = compute_geometry(&eval.curve, 1)?;
    let (rhs, scale) = a2_evolution_rhs(&eval.curve, &geometry);
    let lhs = probe
        .prev
        .geometry
        .a2()
        .iter()
        .zip(probe.next.geometry.a2())
        .map(|(b, a)| (a - b) / probe.dt);
    Ok(Residual {
        value: max_abs_diff(lhs, rhs.into_iter()),
        scale,
    })
}

fn check_shapes(probe: &ProbeStep) -> Result<()> {
    if probe.prev.curve.len() != probe.next.curve.len() {
        return Err(CsfError::ShapeMismatch {
            expected: probe.prev.curve.len(),
            found: probe.next.curve.len(),
        });
    }
    Ok(())
}

/// `-|A|^2 mu - 2 mu^{-1} (d mu / ds)^2`, the reaction part of the mu equation.
pub fn gf_source_direct(geometry: &CurveGeometry, mu: &[f64]) -> Vec<f64> {
    let ds_mu = geometry.derivative(mu);
    let a2 = geometry.a2();
    (0..mu.len())
        .map(|i| -a2[i] * mu[i] - 2.0 * ds_mu[i] * ds_mu[i] / mu[i])
        .collect()
}

/// The same quantity obtained from the Omega(T) equation through the quotient
/// rule: `-mu^2 (|A|^2 w) - 2 mu^3 (dw/ds)^2` with `w = Omega(T)` and
/// `dw/ds = -w^2 d mu/ds`.
pub fn gf_source_via_ep(geometry: &CurveGeometry, omega: &[f64]) -> Vec<f64> {
    let mu: Vec<f64> = omega.iter().map(|w| 1.0 / w).collect();
    let ds_mu = geometry.derivative(&mu);
    let a2 = geometry.a2();
    (0..omega.len())
        .map(|i| {
            let (w, m) = (omega[i], mu[i]);
            let ds_w = -w * w * ds_mu[i];
            -m * m * (a2[i] * w) - 2.0 * m * m * m * ds_w * ds_w
        })
        .collect()
}

/// Residual of `(d/dt - Lap) mu = -|A|^2 mu - 2 mu^{-1} |d mu/ds|^2`.
pub fn residual_mu(probe: &ProbeStep, form: &ParallelForm) -> Result<Residual> {
    residual_mu_with_floor(probe, form, EPS_POS)
}

pub fn residual_mu_with_floor(probe: &ProbeStep, form: &ParallelForm, floor: f64) -> Result<Residual> {
    check_shapes(probe)?;
    let before = mu_with_floor(&probe.prev.curve, &probe.prev.geometry, form, floor)?;
    let after = mu_with_floor(&probe.next.curve, &probe.next.geometry, form, floor)?;
    let eval = probe.eval_state();
    let at = mu_with_floor(&eval.curve, &eval.geometry, form, floor)?;
    let lap = eval.geometry.laplacian(&at);
    let source = gf_source_direct(&eval.geometry, &at);
    let a2 = eval.geometry.a2();
    let ds_mu = eval.geometry.derivative(&at);
    let mut scale = 0.0_f64;
    for i in 0..at.len() {
        let reaction = 2.0 * ds_mu[i] * ds_mu[i] / at[i];
        scale = scale.max(lap[i].abs()).max(a2[i] * at[i]).max(reaction);
    }
    let lhs = before.iter().zip(&after).map(|(b, a)| (a - b) / probe.dt);
    let rhs = (0..at.len()).map(|i| lap[i] + source[i]);
    Ok(Residual {
        value: max_abs_diff(lhs, rhs),
        scale,
    })
}

/// Extrema of `Omega(T)` for one form at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaExtrema {
    pub form: String,
    pub min: f64,
    pub max: f64,
}

/// One sampled row of the diagnostics time series.
///
/// Quantities that do not apply at a sample (no form declared, `Omega(T)` not
/// positive, failed probe step) are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub length: f64,
    /// One entry per diagnosed form; the first is the primary form.
    pub omega: Vec<OmegaExtrema>,
    pub max_mu: f64,
    pub max_a2: f64,
    /// `max |nabla^m A|^2` for `m = 1..=m_max`.
    pub max_grad_a2: Vec<f64>,
    pub int_a2: f64,
    /// `int |nabla^m A|^2 ds` for `m = 1..=m_max`.
    pub int_grad_a2: Vec<f64>,
    pub residual_ep: Residual,
    pub residual_eqsf: Residual,
    pub residual_length: f64,
    pub residual_gf: Residual,
    pub bound_a2mu2: f64,
    pub interp: InterpolationReport,
    /// The `Ta` check counts as hard once `|dL/dt| = int |A|^2 ds < 1e-4`.
    pub ta_hard: bool,
}

impl DiagnosticsRecord {
    pub fn min_omega(&self) -> f64 {
        self.omega.first().map_or(f64::NAN, |o| o.min)
    }

    pub fn max_omega(&self) -> f64 {
        self.omega.first().map_or(f64::NAN, |o| o.max)
    }

    pub fn m_max(&self) -> usize {
        self.max_grad_a2.len()
    }
}

const NAN_RESIDUAL: Residual = Residual {
    value: f64::NAN,
    scale: f64::NAN,
};

/// Evaluates every diagnostic at one sample.
///
/// `forms[0]`, when present, is the primary form used for mu, the
/// Omega(T)/mu residuals and the `|A|^2 mu^2` bound.
pub fn sample_record(
    state: &FlowState,
    config: &FlowConfig,
    forms: &[ParallelForm],
    tolerances: &Tolerances,
) -> Result<DiagnosticsRecord> {
    let m_max = config.m_max.max(2);
    let curve = &state.curve;
    let geometry = compute_geometry(curve, m_max)?;
    let omega: Vec<OmegaExtrema> = forms
        .iter()
        .map(|f| {
            let p = omega_t(curve, &geometry, f);
            OmegaExtrema {
                form: f.name.clone(),
                min: p.min,
                max: p.max,
            }
        })
        .collect();
    let primary = forms.first();
    let mu_values = primary.and_then(|f| mu_with_floor(curve, &geometry, f, tolerances.eps_pos).ok());
    let (max_mu, bound_a2mu2) = match &mu_values {
        Some(mu) => (
            mu.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            geometry
                .a2()
                .iter()
                .zip(mu)
                .map(|(a, m)| a * m * m)
                .fold(0.0, f64::max),
        ),
        None => (f64::NAN, f64::NAN),
    };

    let int_a2 = geometry.integrate(geometry.a2());
    let max_grad_a2 = (1..=m_max).map(|m| max_of(geometry.a_norms(m))).collect();
    let int_grad_a2 = (1..=m_max).map(|m| geometry.integrate(geometry.a_norms(m))).collect();

    let (residual_ep, residual_eqsf, residual_gf) = match cfl_dt(&geometry, config)
        .and_then(|dt| ProbeStep::new(state, config.scheme, dt))
    {
        Ok(probe) => {
            let ep = primary
                .map(|f| residual_form_evolution(&probe, f))
                .transpose()?
                .unwrap_or(NAN_RESIDUAL);
            let eqsf = residual_a2_evolution(&probe)?;
            let gf = primary
                .and_then(|f| residual_mu_with_floor(&probe, f, tolerances.eps_pos).ok())
                .unwrap_or(NAN_RESIDUAL);
            (ep, eqsf, gf)
        }
        Err(e) => {
            log::warn!("probe step failed at t = {}: {e}", state.t);
            (NAN_RESIDUAL, NAN_RESIDUAL, NAN_RESIDUAL)
        }
    };

    Ok(DiagnosticsRecord {
        t: state.t,
        length: geometry.length(),
        omega,
        max_mu,
        max_a2: geometry.max_a2(),
        max_grad_a2,
        int_a2,
        int_grad_a2,
        residual_ep,
        residual_eqsf,
        residual_length: f64::NAN,
        residual_gf,
        bound_a2mu2,
        interp: interpolation_checks(&geometry),
        ta_hard: int_a2 < 1e-4,
    })
}

fn uniform_triple(history: &[DiagnosticsRecord], k: usize) -> bool {
    let (a, b) = (history[k].t - history[k - 1].t, history[k + 1].t - history[k].t);
    a > 0.0 && (a - b).abs() <= 1e-9 * a.max(b)
}

/// Per-sample `|dL/dt + int |A|^2 ds|` with a centred time difference; NaN at
/// the ends and wherever the three samples are not uniformly spaced.
pub fn length_residuals(history: &[DiagnosticsRecord]) -> Vec<f64> {
    let mut out = vec![f64::NAN; history.len()];
    for k in 1..history.len().saturating_sub(1) {
        if uniform_triple(history, k) {
            let dl = (history[k + 1].length - history[k - 1].length)
                / (history[k + 1].t - history[k - 1].t);
            out[k] = (dl + history[k].int_a2).abs();
        }
    }
    out
}

/// Largest length-identity residual over the interior samples.
pub fn residual_length(history: &[DiagnosticsRecord]) -> Result<f64> {
    let values = length_residuals(history);
    let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(CsfError::InsufficientSamples {
            needed: 3,
            found: history.len(),
        });
    }
    Ok(finite.into_iter().fold(0.0, f64::max))
}

/// Largest decrease of `min Omega(T)` between consecutive samples (negative
/// when it increased throughout).
pub fn monitor_mono_min_omega(history: &[DiagnosticsRecord]) -> f64 {
    if history.len() < 2 {
        return 0.0;
    }
    history
        .windows(2)
        .map(|w| w[0].min_omega() - w[1].min_omega())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A2Mu2Report {
    pub holds: bool,
    /// Largest `b(t) - e^{2 C0 t} b(0) (1 + tol_exp)` over the samples.
    pub worst_excess: f64,
    /// Largest increase of `b` between consecutive samples.
    pub worst_increase: f64,
}

/// Checks `max|A|^2 mu^2 (t) <= e^{2 C0 t} max|A|^2 mu^2 (0) (1 + tol_exp)`;
/// on flat models also that it is nonincreasing up to `tol_flat` per sample.
pub fn monitor_a2mu2(
    history: &[DiagnosticsRecord],
    c0: f64,
    tol_exp: f64,
    tol_flat: f64,
) -> Result<A2Mu2Report> {
    if let Some(bad) = history.iter().find(|r| !r.bound_a2mu2.is_finite()) {
        return Err(CsfError::NonPositiveOmega {
            min: bad.min_omega(),
            floor: EPS_POS,
        });
    }
    let Some(first) = history.first() else {
        return Ok(A2Mu2Report {
            holds: true,
            worst_excess: 0.0,
            worst_increase: 0.0,
        });
    };
    let b0 = first.bound_a2mu2;
    let worst_excess = history
        .iter()
        .map(|r| r.bound_a2mu2 - (2.0 * c0 * (r.t - first.t)).exp() * b0 * (1.0 + tol_exp))
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_increase = history
        .windows(2)
        .map(|w| w[1].bound_a2mu2 - w[0].bound_a2mu2)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut holds = worst_excess <= tol_flat;
    if c0 == 0.0 && history.len() > 1 {
        holds &= worst_increase <= tol_flat;
    }
    Ok(A2Mu2Report {
        holds,
        worst_excess,
        worst_increase,
    })
}

/// Margins of the pointwise (`Ta`) and integral (`Tb`) interpolation
/// inequalities. A margin is `rhs - lhs`; the relative margins divide each
/// order's margin by the magnitude of its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationReport {
    pub ta_margin: f64,
    pub tb_margin: f64,
    pub ta_relative: f64,
    pub tb_relative: f64,
}

impl InterpolationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.ta_relative >= -tol && self.tb_relative >= -tol
    }
}

/// `Ta`: `max |D^m A|^2 <= a int |D^m A|^2 + 2 int |D^{m+1} A|^2` with
/// `a = 1/L + 2`, for `m < m_max`.
/// `Tb`: `(int |D^m A|^2)^2 <= int |D^{m-1} A|^2 int |D^{m+1} A|^2`, for
/// `1 <= m < m_max`.
pub fn interpolation_checks(geometry: &CurveGeometry) -> InterpolationReport {
    let m_max = geometry.m_max();
    let integrals: Vec<f64> = (0..=m_max).map(|m| geometry.integrate(geometry.a_norms(m))).collect();
    let a = 1.0 / geometry.length() + 2.0;
    let relative = |margin: f64, scale: f64| if scale > 0.0 { margin / scale } else { 0.0 };

    let mut report = InterpolationReport {
        ta_margin: f64::INFINITY,
        tb_margin: f64::INFINITY,
        ta_relative: f64::INFINITY,
        tb_relative: f64::INFINITY,
    };
    for m in 0..m_max {
        let peak = max_of(geometry.a_norms(m));
        let bound = a * integrals[m] + 2.0 * integrals[m + 1];
        let margin = bound - peak;
        report.ta_margin = report.ta_margin.min(margin);
        report.ta_relative = report.ta_relative.min(relative(margin, bound + peak));
    }
    for m in 1..m_max {
        let product = integrals[m - 1] * integrals[m + 1];
        let square = integrals[m] * integrals[m];
        let margin = product - square;
        report.tb_margin = report.tb_margin.min(margin);
        report.tb_relative = report.tb_relative.min(relative(margin, product + square));
    }
    for v in [
        &mut report.ta_margin,
        &mut report.tb_margin,
        &mut report.ta_relative,
        &mut report.tb_relative,
    ] {
        if v.is_infinite() {
            *v = f64::NAN;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub m: usize,
    /// Final `max |nabla^m A|`.
    pub final_max: f64,
    /// Whether the last quarter of the series ends below where it started.
    pub decreasing: bool,
    pub converged: bool,
}

/// Convergence of `max |nabla^m A|` to zero for `m = 0..=m_max`.
pub fn convergence_report(
    history: &[DiagnosticsRecord],
    m_max: usize,
    tolerances: &Tolerances,
    termination: &Termination,
) -> Vec<ConvergenceVerdict> {
    let Some(last) = history.last() else {
        return Vec::new();
    };
    let eligible = matches!(termination, Termination::Completed) && last.length > tolerances.length_floor;
    let series = |m: usize| -> Vec<f64> {
        history
            .iter()
            .map(|r| {
                let sq = if m == 0 { r.max_a2 } else { r.max_grad_a2.get(m - 1).copied().unwrap_or(f64::NAN) };
                sq.sqrt()
            })
            .collect()
    };
    (0..=m_max.min(last.m_max()))
        .map(|m| {
            let values = series(m);
            let start = values.len() * 3 / 4;
            let final_max = *values.last().expect("non-empty history");
            let decreasing = final_max <= values[start.min(values.len() - 1)];
            let tol = if m == 0 { tolerances.conv_a } else { tolerances.conv_higher };
            ConvergenceVerdict {
                m,
                final_max,
                decreasing,
                converged: eligible && final_max < tol,
            }
        })
        .collect()
}

/// Outcome of one configured check over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub applicable: bool,
    pub passed: bool,
    /// Check-specific worst value (see `detail`).
    pub worst: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn not_applicable(name: CheckName, why: &str) -> Self {
        Self {
            name: name.as_str().into(),
            applicable: false,
            passed: true,
            worst: f64::NAN,
            detail: why.into(),
        }
    }
}

fn residual_outcome(
    name: CheckName,
    residuals: impl Iterator<Item = Residual>,
    rel: f64,
    abs: f64,
) -> CheckOutcome {
    let ratios: Vec<f64> = residuals
        .filter(|r| r.value.is_finite() && r.scale.is_finite())
        .map(|r| r.value / (rel * r.scale + abs))
        .collect();
    if ratios.is_empty() {
        return CheckOutcome::not_applicable(name, "no sample where the residual is defined");
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    CheckOutcome {
        name: name.as_str().into(),
        applicable: true,
        passed: worst <= 1.0,
        worst,
        detail: format!("max residual / ({rel:?} * scale + {abs:?})"),
    }
}

/// Evaluates the configured checks over a finished run.
pub fn evaluate_checks(
    history: &[DiagnosticsRecord],
    checks: &[CheckName],
    tolerances: &Tolerances,
    model: &ManifoldModel,
    termination: &Termination,
    m_max: usize,
) -> Vec<CheckOutcome> {
    checks
        .iter()
        .map(|&name| match name {
            CheckName::Ep => residual_outcome(
                name,
                history.iter().map(|r| r.residual_ep),
                tolerances.ep_rel,
                tolerances.residual_abs,
            ),
            CheckName::Eqsf => residual_outcome(
                name,
                history.iter().map(|r| r.residual_eqsf),
                tolerances.eqsf_rel,
                tolerances.residual_abs,
            ),
            CheckName::Gf => residual_outcome(
                name,
                history.iter().map(|r| r.residual_gf),
                tolerances.gf_rel,
                tolerances.residual_abs,
            ),
            CheckName::Length => {
                let values = length_residuals(history);
                // the centred difference spans three samples, so does its scale
                let residuals = values.iter().enumerate().map(|(k, &value)| {
                    let window = &history[k.saturating_sub(1)..(k + 2).min(history.len())];
                    Residual {
                        value,
                        scale: window.iter().map(|r| r.int_a2).fold(0.0, f64::max),
                    }
                });
                residual_outcome(name, residuals, tolerances.length_rel, tolerances.residual_abs)
            }
            CheckName::MonoMinOmega => {
                let positive = history
                    .first()
                    .is_some_and(|r| r.min_omega() > tolerances.eps_pos);
                if !positive {
                    return CheckOutcome::not_applicable(name, "min Omega(T) not positive initially");
                }
                let worst = monitor_mono_min_omega(history);
                CheckOutcome {
                    name: name.as_str().into(),
                    applicable: true,
                    passed: worst <= tolerances.mono,
                    worst,
                    detail: format!("largest decrease of min Omega(T), limit {:?}", tolerances.mono),
                }
            }
            CheckName::A2mu2Bound => {
                match monitor_a2mu2(
                    history,
                    model.curvature_bound(),
                    tolerances.exp,
                    tolerances.flat_monotone,
                ) {
                    Ok(report) => CheckOutcome {
                        name: name.as_str().into(),
                        applicable: true,
                        passed: report.holds,
                        worst: if model.curvature_bound() == 0.0 {
                            report.worst_increase.max(report.worst_excess)
                        } else {
                            report.worst_excess
                        },
                        detail: "largest excess over the exponential bound (flat: per-sample increase)"
                            .into(),
                    },
                    Err(_) => CheckOutcome::not_applicable(name, "mu undefined at some sample"),
                }
            }
            CheckName::Interpolation => {
                let worst = history
                    .iter()
                    .map(|r| r.interp.ta_relative.min(r.interp.tb_relative))
                    .filter(|v| v.is_finite())
                    .fold(f64::INFINITY, f64::min);
                if worst.is_infinite() {
                    return CheckOutcome::not_applicable(name, "no interpolation margins");
                }
                CheckOutcome {
                    name: name.as_str().into(),
                    applicable: true,
                    passed: worst >= -tolerances.interp,
                    worst,
                    detail: format!("smallest relative margin, limit -{:?}", tolerances.interp),
                }
            }
            CheckName::Convergence => {
                if !matches!(termination, Termination::Completed) {
                    return CheckOutcome::not_applicable(name, "run did not complete");
                }
                let verdicts = convergence_report(history, m_max, tolerances, termination);
                let worst = verdicts.iter().map(|v| v.final_max).fold(0.0, f64::max);
                CheckOutcome {
                    name: name.as_str().into(),
                    applicable: true,
                    passed: !verdicts.is_empty() && verdicts.iter().all(|v| v.converged),
                    worst,
                    detail: "largest final max |D^m A|".into(),
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowState;
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn torus_line(n: usize, p: f64, q: f64) -> DiscreteCurve {
        let t = Arc::new(ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap());
        let nodes = (0..n)
            .map(|i| {
                let s = i as f64 / n as f64;
                vec![p * s, q * s + 0.2]
            })
            .collect();
        DiscreteCurve::new(t, nodes).unwrap()
    }

    fn circle(n: usize) -> DiscreteCurve {
        let e = Arc::new(ManifoldModel::euclidean(2).unwrap());
        let nodes = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        DiscreteCurve::new(e, nodes).unwrap()
    }

    fn wavy(n: usize) -> DiscreteCurve {
        let t = Arc::new(ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap());
        let nodes = (0..n)
            .map(|i| {
                let s = i as f64 / n as f64;
                vec![s, 0.5 + 0.1 * (TAU * s).sin() + 0.05 * (2.0 * TAU * s).cos()]
            })
            .collect();
        DiscreteCurve::new(t, nodes).unwrap()
    }

    fn du(curve: &DiscreteCurve) -> ParallelForm {
        curve.model().parallel_forms().remove(0)
    }

    fn probe(curve: DiscreteCurve, scheme: Scheme) -> ProbeStep {
        let state = FlowState::new(curve).unwrap();
        let dt = cfl_dt(&state.geometry, &FlowConfig::new(1.0, 1.0)).unwrap();
        ProbeStep::new(&state, scheme, dt).unwrap()
    }

    #[test]
    fn omega_of_slanted_line_is_cos_alpha() {
        let c = torus_line(64, 1.0, 2.0);
        let g = compute_geometry(&c, 0).unwrap();
        let w = omega_t(&c, &g, &du(&c));
        let cos_alpha = 1.0 / 5f64.sqrt();
        assert!(w.values.iter().all(|v| (v - cos_alpha).abs() < 1e-12));
        let m = mu(&c, &g, &du(&c)).unwrap();
        assert!(m.iter().all(|v| (v - 5f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn unit_slope_graph_has_mu_sqrt2() {
        let c = torus_line(64, 1.0, 1.0);
        let g = compute_geometry(&c, 0).unwrap();
        let m = mu(&c, &g, &du(&c)).unwrap();
        assert!(m.iter().all(|v| (v - 2f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn circle_omega_spans_minus_one_to_one() {
        let c = circle(256);
        let g = compute_geometry(&c, 0).unwrap();
        let form = du(&c);
        let w = omega_t(&c, &g, &form);
        assert!((w.min + 1.0).abs() < 1e-6 && (w.max - 1.0).abs() < 1e-6);
        assert!(matches!(mu(&c, &g, &form), Err(CsfError::NonPositiveOmega { .. })));
    }

    #[test]
    fn residuals_vanish_on_geodesics() {
        let c = torus_line(64, 1.0, 1.0);
        let form = du(&c);
        for scheme in [Scheme::Euler, Scheme::Rk2] {
            let p = probe(c.clone(), scheme);
            assert!(residual_form_evolution(&p, &form).unwrap().value <= 1e-8);
            assert!(residual_a2_evolution(&p).unwrap().value <= 1e-8);
            assert!(residual_mu(&p, &form).unwrap().value <= 1e-10);
        }
    }

    #[test]
    fn shrinking_circle_a2_identity() {
        let p = probe(circle(512), Scheme::Rk2);
        let r = residual_a2_evolution(&p).unwrap();
        assert!(r.value <= 1e-2, "{}", r.value);
        let r = residual_form_evolution(&p, &du(&p.prev.curve)).unwrap();
        assert!(r.passes(0.05, 1e-8), "{r:?}");
    }

    #[test]
    fn mu_equation_has_two_agreeing_forms() {
        let c = wavy(1024);
        let g = compute_geometry(&c, 0).unwrap();
        let w = omega_t(&c, &g, &du(&c));
        let m: Vec<f64> = w.values.iter().map(|v| 1.0 / v).collect();
        let direct = gf_source_direct(&g, &m);
        let via = gf_source_via_ep(&g, &w.values);
        let scale = direct.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn mu_residual_small_on_wavy_graph() {
        let c = wavy(256);
        let form = du(&c);
        let p = probe(c, Scheme::Rk2);
        let r = residual_mu(&p, &form).unwrap();
        assert!(r.passes(0.05, 1e-8), "{r:?}");
    }

    #[test]
    fn probe_pairs_must_match() {
        let a = FlowState::new(torus_line(32, 1.0, 0.0)).unwrap();
        let b = FlowState::new(torus_line(64, 1.0, 0.0)).unwrap();
        assert!(matches!(
            ProbeStep::from_states(a, b, None),
            Err(CsfError::ShapeMismatch { .. })
        ));
    }

    fn history(curve: DiscreteCurve, t_end: f64, every: f64) -> Vec<DiagnosticsRecord> {
        let config = FlowConfig::new(t_end, every);
        let forms = vec![du(&curve)];
        let mut out = Vec::new();
        let state = FlowState::new(curve).unwrap();
        crate::flow::advance(state, &config, |s| {
            out.push(sample_record(s, &config, &forms, &Tolerances::default()).unwrap())
        });
        out
    }

    #[test]
    fn geodesic_history_is_trivial() {
        let h = history(torus_line(64, 1.0, 1.0), 0.02, 0.005);
        assert_eq!(h.len(), 5);
        assert!(residual_length(&h).unwrap() < 1e-10);
        assert!(monitor_mono_min_omega(&h).abs() < 1e-12);
        let report = monitor_a2mu2(&h, 0.0, 1e-2, 1e-8).unwrap();
        assert!(report.holds);
        assert!(h.iter().all(|r| r.bound_a2mu2 < 1e-20));
        let i = h[0].interp;
        assert!(i.ta_margin.abs() < 1e-12 && i.tb_margin.abs() < 1e-12);
        let verdicts = convergence_report(&h[..1], 3, &Tolerances::default(), &Termination::Completed);
        assert_eq!(verdicts.len(), 4);
        assert!(verdicts.iter().all(|v| v.converged));
    }

    #[test]
    fn circle_length_identity() {
        let h = history(circle(256), 0.1, 0.01);
        let r = residual_length(&h).unwrap();
        assert!(r <= 1e-2, "{r}");
        assert!(residual_length(&h[..2]).is_err());
        // circle: |DA| = 0, so Tb at m = 1 holds with margin >= 0
        assert!(h[0].interp.tb_margin >= -1e-9);
    }

    #[test]
    fn wavy_graph_min_omega_increases() {
        let h = history(wavy(128), 0.05, 0.005);
        assert!(monitor_mono_min_omega(&h) <= 1e-8);
        assert!(h.last().unwrap().min_omega() > h[0].min_omega());
        assert!(monitor_a2mu2(&h, 0.0, 1e-2, 1e-8).unwrap().holds);
    }

    #[test]
    fn a2mu2_monitor_needs_mu() {
        let h = history(circle(64), 0.01, 0.005);
        assert!(matches!(
            monitor_a2mu2(&h, 0.0, 1e-2, 1e-8),
            Err(CsfError::NonPositiveOmega { .. })
        ));
    }

    #[test]
    fn interpolation_on_ellipse() {
        let e = Arc::new(ManifoldModel::euclidean(2).unwrap());
        let nodes = (0..1024)
            .map(|i| {
                let u = TAU * i as f64 / 1024.0;
                vec![2.0 * u.cos(), u.sin()]
            })
            .collect();
        let c = DiscreteCurve::new(e, nodes).unwrap();
        let g = compute_geometry(&c, 3).unwrap();
        let report = interpolation_checks(&g);
        assert!(report.passes(1e-6), "{report:?}");
        assert!(report.ta_margin > 0.0);
    }

    #[test]
    fn default_tolerances() {
        let t = Tolerances::default();
        assert_eq!(t.eps_pos, 1e-8);
        assert_eq!(t.conv_a, 1e-3);
        assert_eq!(t.conv_higher, 1e-2);
        assert_eq!(t.interp, 1e-6);
    }
}
