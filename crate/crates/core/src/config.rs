//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{CheckName, Tolerances};
use crate::error::{CsfError, Result};
use crate::flow::FlowConfig;
use crate::manifold::{ManifoldModel, ParallelForm, DEFAULT_POLE_MARGIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKindName {
    Euclidean,
    FlatTorus,
    CylinderSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole_margin: Option<f64>,
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<ManifoldModel> {
        let stray = |field: &str, present: bool| -> Result<()> {
            if present {
                Err(CsfError::Config(format!(
                    "manifold.{field} does not apply to kind {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let missing = |field: &str| CsfError::Config(format!("manifold.{field} is required"));
        let model = match self.kind {
            ManifoldKindName::Euclidean => {
                stray("periods", self.periods.is_some())?;
                stray("sphere_dim", self.sphere_dim.is_some())?;
                stray("sphere_radius", self.sphere_radius.is_some())?;
                stray("pole_margin", self.pole_margin.is_some())?;
                ManifoldModel::euclidean(self.dim.ok_or_else(|| missing("dim"))?)?
            }
            ManifoldKindName::FlatTorus => {
                stray("sphere_dim", self.sphere_dim.is_some())?;
                stray("sphere_radius", self.sphere_radius.is_some())?;
                stray("pole_margin", self.pole_margin.is_some())?;
                let periods = self.periods.clone().ok_or_else(|| missing("periods"))?;
                if let Some(dim) = self.dim {
                    if dim != periods.len() {
                        return Err(CsfError::Config(format!(
                            "manifold.dim = {dim} but {} periods given",
                            periods.len()
                        )));
                    }
                }
                ManifoldModel::flat_torus(periods)?
            }
            ManifoldKindName::CylinderSphere => {
                stray("periods", self.periods.is_some())?;
                let sphere_dim = self.sphere_dim.ok_or_else(|| missing("sphere_dim"))?;
                if let Some(dim) = self.dim {
                    if dim != sphere_dim + 1 {
                        return Err(CsfError::Config(format!(
                            "manifold.dim = {dim} but sphere_dim + 1 = {}",
                            sphere_dim + 1
                        )));
                    }
                }
                ManifoldModel::cylinder_sphere(sphere_dim, self.sphere_radius.unwrap_or(1.0))?
                    .with_pole_margin(self.pole_margin.unwrap_or(DEFAULT_POLE_MARGIN))?
            }
        };
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Circle,
    Winding,
    SphereBand,
    PeriodicGraph,
}

/// A preset parameter: a real or a list of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    pub frequency: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCurveSpec {
    pub preset: PresetName,
    #[serde(default)]
    pub parameters: BTreeMap<String, ParamValue>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

impl InitialCurveSpec {
    pub fn scalar(&self, name: &str) -> Result<Option<f64>> {
        match self.parameters.get(name) {
            None => Ok(None),
            Some(ParamValue::Scalar(v)) => Ok(Some(*v)),
            Some(ParamValue::List(_)) => Err(CsfError::Config(format!(
                "initial_curve.parameters.{name} must be a number"
            ))),
        }
    }

    pub fn list(&self, name: &str) -> Result<Option<Vec<f64>>> {
        match self.parameters.get(name) {
            None => Ok(None),
            Some(ParamValue::List(v)) => Ok(Some(v.clone())),
            Some(ParamValue::Scalar(v)) => Ok(Some(vec![*v])),
        }
    }
}

fn default_checks() -> Vec<CheckName> {
    vec![
        CheckName::Ep,
        CheckName::Eqsf,
        CheckName::Gf,
        CheckName::Length,
        CheckName::MonoMinOmega,
        CheckName::A2mu2Bound,
        CheckName::Interpolation,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Form names; empty means every parallel form of the model. The first is
    /// the primary form.
    #[serde(default)]
    pub forms: Vec<String>,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            forms: Vec::new(),
            checks: default_checks(),
            tolerances: Tolerances::default(),
        }
    }
}

fn default_snapshot_every() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    /// Write a curve snapshot every this many samples; 0 disables snapshots.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: None,
            snapshot_every: default_snapshot_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldSpec,
    pub initial_curve: InitialCurveSpec,
    pub flow: FlowConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| CsfError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CsfError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builds the model and checks everything that can be checked without
    /// constructing the curve.
    pub fn validate(&self) -> Result<()> {
        let model = self.manifold.build().map_err(as_config)?;
        self.flow.validate()?;
        if self.initial_curve.n < crate::curve::MIN_NODES {
            return Err(CsfError::Config(format!(
                "initial_curve.N = {} is below {}",
                self.initial_curve.n,
                crate::curve::MIN_NODES
            )));
        }
        self.forms(&model)?;
        let t = &self.diagnostics.tolerances;
        let all = [
            t.ep_rel,
            t.eqsf_rel,
            t.gf_rel,
            t.length_rel,
            t.residual_abs,
            t.mono,
            t.exp,
            t.flat_monotone,
            t.interp,
            t.conv_a,
            t.conv_higher,
            t.length_floor,
            t.eps_pos,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CsfError::Config("tolerances must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// The diagnosed forms, primary first.
    pub fn forms(&self, model: &ManifoldModel) -> Result<Vec<ParallelForm>> {
        if self.diagnostics.forms.is_empty() {
            return Ok(model.parallel_forms());
        }
        self.diagnostics
            .forms
            .iter()
            .map(|name| {
                model.form(name).ok_or_else(|| {
                    let known: Vec<String> = model.parallel_forms().into_iter().map(|f| f.name).collect();
                    CsfError::Config(format!(
                        "form {name:?} is not declared on this model (known: {})",
                        known.join(", ")
                    ))
                })
            })
            .collect()
    }
}

/// Model construction failures inside a config are config errors.
fn as_config(e: CsfError) -> CsfError {
    match e {
        CsfError::InvalidModel(msg) => CsfError::Config(msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WINDING: &str = r#"{
        "manifold": {"kind": "flat_torus", "periods": [1, 1]},
        "initial_curve": {"preset": "winding", "parameters": {"p": 1, "q": 1, "a": 0.1, "k": 3}, "N": 128},
        "flow": {"t_end": 5, "sample_every": 0.05},
        "diagnostics": {"forms": ["du"], "tolerances": {"mono": 1e-8}}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_json(WINDING).unwrap();
        assert_eq!(c.initial_curve.n, 128);
        assert_eq!(c.flow.dt_max, 1e-2);
        assert_eq!(c.diagnostics.checks.len(), 7);
        assert_eq!(c.output.snapshot_every, 10);
    }

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig::from_json(WINDING).unwrap();
        let again = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = WINDING.replace("\"N\": 128", "\"N\": 128, \"n_nodes\": 3");
        assert!(matches!(RunConfig::from_json(&bad), Err(CsfError::Config(_))));
        let bad = WINDING.replace("\"mono\"", "\"monotone\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(CsfError::Config(_))));
    }

    #[test]
    fn unknown_form_and_small_n_are_rejected() {
        let bad = WINDING.replace("[\"du\"]", "[\"dw\"]");
        assert!(matches!(RunConfig::from_json(&bad), Err(CsfError::Config(_))));
        let bad = WINDING.replace("\"N\": 128", "\"N\": 8");
        assert!(matches!(RunConfig::from_json(&bad), Err(CsfError::Config(_))));
    }

    #[test]
    fn manifold_fields_must_match_kind() {
        let spec = ManifoldSpec {
            kind: ManifoldKindName::Euclidean,
            dim: Some(2),
            periods: Some(vec![1.0]),
            sphere_dim: None,
            sphere_radius: None,
            pole_margin: None,
        };
        assert!(spec.build().is_err());
        let spec = ManifoldSpec {
            kind: ManifoldKindName::CylinderSphere,
            dim: None,
            periods: None,
            sphere_dim: Some(2),
            sphere_radius: Some(1.0),
            pole_margin: Some(0.1),
        };
        let m = spec.build().unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.pole_margin(), 0.1);
    }
}
