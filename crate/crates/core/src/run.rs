//! Run orchestration: initial curve, integration, diagnostics, output files
//! and exit codes.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{PresetName, RunConfig};
use crate::diagnostics::{
    convergence_report, evaluate_checks, length_residuals, sample_record, CheckOutcome, ConvergenceVerdict,
    DiagnosticsRecord,
};
use crate::error::{CsfError, Result};
use crate::flow::{advance, FlowState, Termination};
use crate::io;
use crate::presets::make_initial_curve;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub termination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    pub t_final: f64,
    pub steps: u64,
    pub samples: usize,
    pub final_length: f64,
    pub final_max_a2: f64,
    /// Mean node distance from the centre, circle preset only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_radius: Option<f64>,
    pub checks: Vec<CheckOutcome>,
    pub convergence: Vec<ConvergenceVerdict>,
    pub exit_code: i32,
}

/// Everything a run produces, before anything is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
    /// `(sample index, curve)` for every snapshotted sample.
    pub snapshots: Vec<(usize, crate::curve::DiscreteCurve)>,
    pub final_state: FlowState,
}

pub fn exit_code_for_error(e: &CsfError) -> i32 {
    match e {
        CsfError::Config(_) | CsfError::InvalidModel(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Validates a configuration and builds its initial curve without running.
pub fn check_config(config: &RunConfig) -> Result<()> {
    config.validate()?;
    let model = Arc::new(config.manifold.build()?);
    make_initial_curve(&config.initial_curve, model).map(|_| ())
}

/// Runs a validated configuration in memory. Errors are setup failures
/// (configuration or initial curve); failures during the flow end up in the
/// summary instead.
pub fn simulate(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let model = Arc::new(config.manifold.build()?);
    let forms = config.forms(&model)?;
    let curve = make_initial_curve(&config.initial_curve, Arc::clone(&model))?;
    let state = FlowState::new(curve)?;
    let tolerances = &config.diagnostics.tolerances;
    let snapshot_every = config.output.snapshot_every as usize;
    log::info!(
        "starting {:?} run: N = {}, t_end = {}, scheme {}",
        config.initial_curve.preset,
        state.curve.len(),
        config.flow.t_end,
        config.flow.scheme.name()
    );

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut sample_error = None;
    let (final_state, mut termination) = advance(state, &config.flow, |s| {
        if sample_error.is_some() {
            return;
        }
        let index = records.len();
        match sample_record(s, &config.flow, &forms, tolerances) {
            Ok(r) => {
                log::debug!("t = {:.6}  L = {:.9}  max|A|^2 = {:.6e}", r.t, r.length, r.max_a2);
                records.push(r);
            }
            Err(e) => sample_error = Some(e),
        }
        if snapshot_every > 0 && index % snapshot_every == 0 {
            snapshots.push((index, s.curve.clone()));
        }
    });
    if let Some(e) = sample_error {
        termination = Termination::Error(e);
    }
    let length_res = length_residuals(&records);
    for (r, v) in records.iter_mut().zip(length_res) {
        r.residual_length = v;
    }

    let checks = evaluate_checks(
        &records,
        &config.diagnostics.checks,
        tolerances,
        &model,
        &termination,
        config.flow.m_max,
    );
    let convergence = convergence_report(&records, config.flow.m_max, tolerances, &termination);
    let exit_code = match &termination {
        Termination::Error(e) => exit_code_for_error(e),
        Termination::Blowup => EXIT_BLOWUP,
        Termination::Completed if checks.iter().all(|c| c.passed) => EXIT_OK,
        Termination::Completed => EXIT_CHECK_FAILURE,
    };
    match &termination {
        Termination::Error(e) => log::error!("run stopped at t = {}: {e}", final_state.t),
        Termination::Blowup => log::info!("blow-up at t = {}", final_state.t),
        Termination::Completed => log::info!("completed at t = {}", final_state.t),
    }
    for c in checks.iter().filter(|c| !c.passed) {
        log::warn!("check {} failed: worst {} ({})", c.name, c.worst, c.detail);
    }

    let mean_radius = (config.initial_curve.preset == PresetName::Circle).then(|| {
        let center = config
            .initial_curve
            .list("center")
            .ok()
            .flatten()
            .unwrap_or_else(|| vec![0.0; model.dim()]);
        let curve = &final_state.curve;
        (0..curve.len())
            .map(|i| {
                curve
                    .node(i)
                    .iter()
                    .zip(&center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            / curve.len() as f64
    });

    let (error, error_kind) = match &termination {
        Termination::Error(e) => (Some(e.to_string()), Some(e.kind().to_string())),
        _ => (None, None),
    };
    let summary = RunSummary {
        termination: termination.name().into(),
        error,
        error_kind,
        t_final: final_state.t,
        steps: final_state.step,
        samples: records.len(),
        final_length: final_state.geometry.length(),
        final_max_a2: final_state.geometry.max_a2(),
        mean_radius,
        checks,
        convergence,
        exit_code,
    };
    Ok(RunOutput {
        summary,
        records,
        snapshots,
        final_state,
    })
}

/// Writes `diagnostics.csv`, `summary.json`, `final.csv` and
/// `snapshots/snapshot_NNNNNN.csv` into `out_dir`.
pub fn write_outputs(output: &RunOutput, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    io::write_diagnostics(&out_dir.join("diagnostics.csv"), &output.records)?;
    if !output.snapshots.is_empty() {
        let dir = out_dir.join("snapshots");
        std::fs::create_dir_all(&dir)?;
        for (index, curve) in &output.snapshots {
            io::write_snapshot(&dir.join(format!("snapshot_{index:06}.csv")), curve)?;
        }
    }
    io::write_snapshot(&out_dir.join("final.csv"), &output.final_state.curve)?;
    let summary = serde_json::to_string_pretty(&output.summary).map_err(|e| CsfError::Io(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), summary + "\n")?;
    Ok(())
}

/// Runs a configuration and writes its outputs; returns the process exit code.
pub fn run_experiment(config: &RunConfig, out_dir: &Path) -> i32 {
    let output = match simulate(config) {
        Ok(o) => o,
        Err(e) => {
            log::error!("{e}");
            write_failure(out_dir, &e);
            return exit_code_for_error(&e);
        }
    };
    if let Err(e) = write_outputs(&output, out_dir) {
        log::error!("writing outputs: {e}");
        return EXIT_RUNTIME;
    }
    output.summary.exit_code
}

fn write_failure(out_dir: &Path, e: &CsfError) {
    let body = serde_json::json!({
        "termination": "error",
        "error": e.to_string(),
        "error_kind": e.kind(),
        "exit_code": exit_code_for_error(e),
    });
    let written = std::fs::create_dir_all(out_dir)
        .and_then(|_| std::fs::write(out_dir.join("summary.json"), format!("{body:#}\n")));
    if let Err(io) = written {
        log::warn!("could not write failure summary: {io}");
    }
}
