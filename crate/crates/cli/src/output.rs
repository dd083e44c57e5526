//! Plot-ready CSV and JSON files.
//!
//! Column order and decimal places are part of the output schema, whose version is written
//! into every JSON file. Energy is reported in W/km², fractions with six decimals.

use std::path::Path;

use anyhow::Result;
use netshare::simulate::{CheckOutcome, CheckStatus};
use netshare::strategies::StrategyResult;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const SOLVE_COLUMNS: [&str; 7] = [
    "strategy",
    "feasible",
    "energy_w_per_km2",
    "operator",
    "beta",
    "utilization",
    "reason",
];

pub const MONTECARLO_COLUMNS: [&str; 9] = [
    "check",
    "status",
    "analytical",
    "estimate",
    "std_error",
    "rel_error",
    "rel_tol",
    "sigmas",
    "reason",
];

pub fn energy_w_per_km2(w_per_m2: f64) -> f64 {
    w_per_m2 * 1e6
}

fn fixed(x: Option<f64>, decimals: usize) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.decimals$}"),
        _ => String::new(),
    }
}

pub fn energy_field(w_per_m2: Option<f64>) -> String {
    fixed(w_per_m2.map(energy_w_per_km2), 4)
}

pub fn fraction_field(x: f64) -> String {
    fixed(Some(x), 6)
}

pub fn percent_field(x: Option<f64>) -> String {
    fixed(x, 4)
}

/// One row per operator: `strategy, feasible, energy, operator, beta, utilization, reason`,
/// optionally prefixed by extra leading fields.
pub fn strategy_rows(prefix: &[String], r: &StrategyResult, operators: &[String]) -> Vec<Vec<String>> {
    operators
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let mut row = prefix.to_vec();
            row.extend([
                r.label.clone(),
                r.feasible.to_string(),
                energy_field(r.energy_w_per_m2),
                op.clone(),
                fraction_field(r.beta.get(i).copied().unwrap_or(0.0)),
                fraction_field(r.utilization.get(i).copied().unwrap_or(0.0)),
                r.reason.clone().unwrap_or_default(),
            ]);
            row
        })
        .collect()
}

pub fn check_row(c: &CheckOutcome) -> Vec<String> {
    let (status, reason) = match &c.status {
        CheckStatus::Pass => ("pass", String::new()),
        CheckStatus::Fail => ("fail", String::new()),
        CheckStatus::Skipped(r) => ("skipped", r.clone()),
    };
    vec![
        c.name.clone(),
        status.into(),
        c.analytical.map(|v| format!("{v:.6e}")).unwrap_or_default(),
        c.estimate.map(|e| format!("{:.6e}", e.mean)).unwrap_or_default(),
        c.estimate.map(|e| format!("{:.6e}", e.se)).unwrap_or_default(),
        fixed(c.relative_error(), 6),
        fixed(Some(c.rel_tol), 4),
        fixed(Some(c.sigmas), 2),
        reason,
    ]
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| -> anyhow::Error {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => netshare::Error::Io {
                path: path.into(),
                source,
            }
            .into(),
            other => anyhow::anyhow!("writing {}: {other:?}", path.display()),
        }
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| netshare::Error::Io {
        path: path.into(),
        source: e,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, command: &str, body: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        command,
        body,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| netshare::Error::Io {
        path: path.into(),
        source: e,
    })?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| netshare::Error::Io {
        path: dir.into(),
        source: e,
    })?;
    Ok(())
}
