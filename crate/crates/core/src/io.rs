//! CSV files: curve snapshots and the diagnostics time series.
//!
//! Reals are written as shortest round-trip decimals, so reading a snapshot
//! back reproduces the coordinates bit for bit. Undefined values are `NaN`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::curve::DiscreteCurve;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{CsfError, Result};
use crate::manifold::ManifoldModel;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

pub fn snapshot_csv(curve: &DiscreteCurve) -> String {
    let n = curve.dim();
    let mut out = String::from("index");
    for k in 0..n {
        write!(out, ",coord_{k}").unwrap();
    }
    out.push('\n');
    for i in 0..curve.len() {
        write!(out, "{i}").unwrap();
        for x in curve.node(i) {
            write!(out, ",{}", fmt_real(*x)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_snapshot(text: &str, model: Arc<ManifoldModel>) -> Result<DiscreteCurve> {
    let n = model.dim();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CsfError::InvalidCurve("empty snapshot".into()))?;
    let expected: String = std::iter::once("index".to_string())
        .chain((0..n).map(|k| format!("coord_{k}")))
        .collect::<Vec<_>>()
        .join(",");
    if header.trim() != expected {
        return Err(CsfError::InvalidCurve(format!(
            "snapshot header {header:?}, expected {expected:?}"
        )));
    }
    let mut nodes = Vec::new();
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(CsfError::InvalidCurve(format!("snapshot row {row} has {} fields", fields.len())));
        }
        if fields[0].trim().parse::<usize>().ok() != Some(row) {
            return Err(CsfError::InvalidCurve(format!("snapshot row {row} has index {:?}", fields[0])));
        }
        for f in &fields[1..] {
            let x = f
                .trim()
                .parse::<f64>()
                .map_err(|e| CsfError::InvalidCurve(format!("snapshot row {row}: {e}")))?;
            nodes.push(x);
        }
    }
    DiscreteCurve::from_flat(model, nodes)
}

pub fn write_snapshot(path: &Path, curve: &DiscreteCurve) -> Result<()> {
    std::fs::write(path, snapshot_csv(curve))?;
    Ok(())
}

pub fn read_snapshot(path: &Path, model: Arc<ManifoldModel>) -> Result<DiscreteCurve> {
    parse_snapshot(&std::fs::read_to_string(path)?, model)
}

/// Column names of the diagnostics CSV for a given `m_max`.
pub fn diagnostics_header(m_max: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "length", "min_omega_T", "max_omega_T", "max_mu", "max_A2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=m_max).map(|m| format!("max_gradA2_{m}")));
    cols.push("int_A2".into());
    cols.extend((1..=m_max).map(|m| format!("int_gradA2_{m}")));
    cols.extend(
        [
            "residual_EP",
            "residual_EQSF",
            "residual_length",
            "residual_GF",
            "bound_A2mu2",
            "interp_Ta",
            "interp_Tb",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let m_max = records.first().map_or(0, DiagnosticsRecord::m_max);
    let mut out = diagnostics_header(m_max).join(",");
    out.push('\n');
    for r in records {
        let mut row = vec![r.t, r.length, r.min_omega(), r.max_omega(), r.max_mu, r.max_a2];
        row.extend(&r.max_grad_a2);
        row.push(r.int_a2);
        row.extend(&r.int_grad_a2);
        row.extend([
            r.residual_ep.value,
            r.residual_eqsf.value,
            r.residual_length,
            r.residual_gf.value,
            r.bound_a2mu2,
            r.interp.ta_margin,
            r.interp.tb_margin,
        ]);
        let cells: Vec<String> = row.into_iter().map(fmt_real).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    std::fs::write(path, diagnostics_csv(records))?;
    Ok(())
}
