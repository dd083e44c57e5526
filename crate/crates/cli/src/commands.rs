//! The `validate`, `solve`, `sweep` and `montecarlo` subcommands.

use anyhow::{anyhow, Result};
use log::{info, warn};
use netshare::domain::{validate_model, NetworkModel};
use netshare::scenario::synthetic::DiurnalFixture;
use netshare::scenario::{DayType, SlotSeries};
use netshare::simulate::{reference_model, run_oracles, CheckStatus, OracleReport};
use netshare::strategies::{
    evaluate_switchoff, optimize_full_ns, optimize_no_sharing, period_savings, savings_report, sweep as sweep_models,
    PeriodSaving, Saving, SolverDiagnostics, SolverOptions, Strategy, StrategyResult,
};
use serde::Serialize;

use crate::manifest::{RunManifest, Source, StrategyKind};
use crate::output::{
    check_row, ensure_dir, energy_w_per_km2, percent_field, strategy_rows, write_csv, write_json, MONTECARLO_COLUMNS,
    SOLVE_COLUMNS,
};

/// How a command ended, short of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Validation violations or failed Monte Carlo checks.
    Failed,
    /// Some strategy was infeasible and `--strict` was set.
    Infeasible,
}

pub struct Ctx {
    pub manifest: RunManifest,
    pub strict: bool,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    netshare::Error::InvalidInput(msg.into()).into()
}

/// Whether the error, or anything it wraps, is an I/O failure.
pub fn is_io(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(c.downcast_ref::<netshare::Error>(), Some(netshare::Error::Io { .. }))
            || c.downcast_ref::<std::io::Error>().is_some()
    })
}

fn operator_ids(m: &NetworkModel) -> Vec<String> {
    m.operators.iter().map(|o| o.id.clone()).collect()
}

fn slot_model(series: &SlotSeries, ctx: &Ctx) -> Result<NetworkModel> {
    let slot = ctx
        .manifest
        .slot
        .ok_or_else(|| invalid("a slot is required when the manifest names a scenario"))?;
    let area = ctx.manifest.area();
    let day = ctx.manifest.day.unwrap_or(DayType::Weekday);
    let entry = series
        .entry(area, day)
        .ok_or_else(|| invalid(format!("the scenario has no {area} {day} data")))?;
    entry
        .models
        .get(slot)
        .cloned()
        .ok_or_else(|| invalid(format!("slot {slot} is outside 0..{}", entry.models.len())))
}

/// The single model a command operates on, with manifest overrides applied.
fn single_model(ctx: &Ctx, default: Option<NetworkModel>) -> Result<NetworkModel> {
    let m = match ctx.manifest.source()? {
        Source::Model(m) => m,
        Source::Scenario(series) => slot_model(&series, ctx)?,
        Source::None => default.ok_or_else(|| invalid("the manifest names neither a model nor a scenario"))?,
    };
    Ok(ctx.manifest.adjust(&m)?.validated()?)
}

#[derive(Serialize)]
struct ViolationRow {
    context: String,
    field: String,
    constraint: String,
}

#[derive(Serialize)]
struct ValidateReport {
    ok: bool,
    models_checked: usize,
    violations: Vec<ViolationRow>,
    errors: Vec<String>,
}

pub fn validate(ctx: &Ctx) -> Result<Outcome> {
    let mut report = ValidateReport {
        ok: false,
        models_checked: 0,
        violations: Vec::new(),
        errors: Vec::new(),
    };
    let check = |context: String, m: &NetworkModel, report: &mut ValidateReport| {
        report.models_checked += 1;
        match ctx.manifest.adjust(m) {
            Ok(m) => report.violations.extend(validate_model(&m).into_iter().map(|v| ViolationRow {
                context: context.clone(),
                field: v.field,
                constraint: v.constraint,
            })),
            Err(e) => report.errors.push(format!("{context}: {e:#}")),
        }
    };
    match ctx.manifest.source() {
        Err(e) if is_io(&e) => return Err(e),
        Err(e) => report.errors.push(format!("{e:#}")),
        Ok(Source::Model(m)) => check("model".into(), &m, &mut report),
        Ok(Source::Scenario(series)) => {
            for entry in &series.entries {
                for (slot, m) in entry.models.iter().enumerate() {
                    check(format!("{} {} slot {slot}", entry.area, entry.day), m, &mut report);
                }
            }
        }
        Ok(Source::None) => report
            .errors
            .push("the manifest names neither a model nor a scenario".into()),
    }
    report.ok = report.violations.is_empty() && report.errors.is_empty();
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.ok { Outcome::Clean } else { Outcome::Failed })
}

fn failed_result(strategy: Strategy, n: usize, e: &netshare::Error) -> StrategyResult {
    StrategyResult {
        strategy,
        label: strategy.to_string(),
        beta: vec![0.0; n],
        energy_w_per_m2: None,
        utilization: vec![0.0; n],
        feasible: false,
        reason: Some(format!("solver error: {e}")),
        diagnostics: SolverDiagnostics::default(),
    }
}

/// Runs the selected strategies; a solver error becomes an infeasible row.
fn run_strategies(m: &NetworkModel, kinds: &[StrategyKind], opts: &SolverOptions) -> Vec<StrategyResult> {
    let n = m.num_operators();
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let mut out = Vec::new();
    for kind in kinds {
        match kind {
            StrategyKind::NoSharing => out.push(
                optimize_no_sharing(m, opts)
                    .map(|r| r.total)
                    .unwrap_or_else(|e| failed_result(Strategy::NoSharing, n, &e)),
            ),
            StrategyKind::Switchoff => out.extend((0..n).map(|s| {
                evaluate_switchoff(m, s, opts)
                    .unwrap_or_else(|e| failed_result(Strategy::Switchoff { survivor: s }, n, &e))
            })),
            StrategyKind::FullNs => out.push(
                optimize_full_ns(m, opts).unwrap_or_else(|e| failed_result(Strategy::FullSharing, n, &e)),
            ),
        }
    }
    out
}

#[derive(Serialize)]
struct SolveReport<'a> {
    operators: Vec<String>,
    results: &'a [StrategyResult],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    savings_percent: Vec<Saving>,
}

pub fn solve(ctx: &Ctx) -> Result<Outcome> {
    let m = single_model(ctx, None)?;
    let opts = ctx.manifest.solver();
    let results = run_strategies(&m, &ctx.manifest.strategies, &opts);
    let operators = operator_ids(&m);
    let savings = match results.iter().find(|r| r.strategy == Strategy::NoSharing) {
        Some(base) if base.feasible => {
            let others: Vec<_> = results.iter().filter(|r| r.strategy != Strategy::NoSharing).cloned().collect();
            savings_report(base, &others)?
        }
        _ => Vec::new(),
    };
    let dir = &ctx.manifest.output_dir;
    ensure_dir(dir)?;
    let rows: Vec<_> = results.iter().flat_map(|r| strategy_rows(&[], r, &operators)).collect();
    write_csv(&dir.join("solve.csv"), &SOLVE_COLUMNS, &rows)?;
    write_json(
        &dir.join("solve.json"),
        "solve",
        &SolveReport {
            operators,
            results: &results,
            savings_percent: savings,
        },
    )?;
    for r in &results {
        match r.energy_w_per_m2 {
            Some(e) if r.feasible => println!(
                "{:<22} feasible  {:>14.4} W/km²  beta {:?}",
                r.label,
                energy_w_per_km2(e),
                r.beta.iter().map(|b| (b * 1e6).round() / 1e6).collect::<Vec<_>>()
            ),
            _ => println!("{:<22} infeasible  {}", r.label, r.reason.clone().unwrap_or_default()),
        }
    }
    let infeasible = results.iter().any(|r| !r.feasible);
    Ok(if ctx.strict && infeasible { Outcome::Infeasible } else { Outcome::Clean })
}

#[derive(Serialize)]
struct SlotRecord {
    slot: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    results: Vec<StrategyResult>,
}

#[derive(Serialize)]
struct DayRecord {
    day: DayType,
    slots: Vec<SlotRecord>,
    savings: Vec<PeriodSaving>,
}

#[derive(Serialize)]
struct SweepReport {
    area: String,
    operators: Vec<String>,
    days: Vec<DayRecord>,
}

pub const SWEEP_PREFIX: [&str; 2] = ["day", "slot"];

pub fn sweep(ctx: &Ctx) -> Result<Outcome> {
    let series = match ctx.manifest.source()? {
        Source::Scenario(s) => s,
        _ => return Err(invalid("sweep needs a scenario")),
    };
    let area = ctx.manifest.area();
    let days: Vec<DayType> = match ctx.manifest.day {
        Some(d) => vec![d],
        None => series.entries.iter().filter(|e| e.area == area).map(|e| e.day).collect(),
    };
    if days.is_empty() {
        return Err(invalid(format!("the scenario has no {area} data")));
    }
    let opts = ctx.manifest.solver();
    let kinds = &ctx.manifest.strategies;
    let selected = |s: &Strategy| kinds.iter().any(|k| k.matches(s));
    let mut rows = Vec::new();
    let mut report = SweepReport {
        area: area.to_string(),
        operators: series.operators.clone(),
        days: Vec::new(),
    };
    let mut any_infeasible = false;
    for day in days {
        let entry = series
            .entry(area, day)
            .ok_or_else(|| invalid(format!("the scenario has no {area} {day} data")))?;
        let models = entry
            .models
            .iter()
            .map(|m| ctx.manifest.adjust(m))
            .collect::<Result<Vec<_>>>()?;
        info!("sweeping {} slots of {area} {day}", models.len());
        let comparisons = sweep_models(&models, &opts);
        let mut slots = Vec::with_capacity(comparisons.len());
        for (slot, c) in comparisons.iter().enumerate() {
            let prefix = [day.to_string(), slot.to_string()];
            match c {
                Ok(c) => {
                    let results: Vec<StrategyResult> =
                        c.results().into_iter().filter(|r| selected(&r.strategy)).cloned().collect();
                    any_infeasible |= results.iter().any(|r| !r.feasible);
                    for r in &results {
                        rows.extend(strategy_rows(&prefix, r, &series.operators));
                    }
                    slots.push(SlotRecord {
                        slot,
                        error: None,
                        results,
                    });
                }
                Err(e) => {
                    warn!("{area} {day} slot {slot} failed: {e}");
                    any_infeasible = true;
                    let mut row = prefix.to_vec();
                    row.extend(["invalid".into(), "false".into(), String::new(), String::new()]);
                    row.extend([String::new(), String::new(), format!("slot failed: {e}")]);
                    rows.push(row);
                    slots.push(SlotRecord {
                        slot,
                        error: Some(e.to_string()),
                        results: Vec::new(),
                    });
                }
            }
        }
        let ok: Vec<_> = comparisons.iter().map(|c| c.as_ref().ok()).collect();
        let strategies_of_savings: Vec<Strategy> = ok
            .iter()
            .flatten()
            .next()
            .map(|c| c.results().iter().skip(1).map(|r| r.strategy).collect())
            .unwrap_or_default();
        let savings = period_savings(&ok)
            .into_iter()
            .zip(strategies_of_savings)
            .filter(|(_, s)| selected(s))
            .map(|(p, _)| p)
            .collect();
        report.days.push(DayRecord { day, slots, savings });
    }
    let dir = &ctx.manifest.output_dir;
    ensure_dir(dir)?;
    let header: Vec<&str> = SWEEP_PREFIX.iter().chain(SOLVE_COLUMNS.iter()).copied().collect();
    write_csv(&dir.join("sweep.csv"), &header, &rows)?;
    write_savings_table(ctx, &report)?;
    write_json(&dir.join("sweep.json"), "sweep", &report)?;
    Ok(if ctx.strict && any_infeasible { Outcome::Infeasible } else { Outcome::Clean })
}

/// Strategy × period table of savings relative to no sharing.
fn write_savings_table(ctx: &Ctx, report: &SweepReport) -> Result<()> {
    let mut labels: Vec<String> = Vec::new();
    for d in &report.days {
        for s in &d.savings {
            if !labels.contains(&s.label) {
                labels.push(s.label.clone());
            }
        }
    }
    let day_names: Vec<String> = report.days.iter().map(|d| d.day.to_string()).collect();
    let mut header = vec!["strategy"];
    header.extend(day_names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = labels
        .iter()
        .map(|label| {
            let mut row = vec![label.clone()];
            row.extend(report.days.iter().map(|d| {
                percent_field(d.savings.iter().find(|s| &s.label == label).and_then(|s| s.percent))
            }));
            row
        })
        .collect();
    for row in &rows {
        println!("{}", row.join("\t"));
    }
    write_csv(&ctx.manifest.output_dir.join("savings.csv"), &header, &rows)
}

pub fn montecarlo(ctx: &Ctx) -> Result<Outcome> {
    let m = single_model(ctx, Some(reference_model()))?;
    let opts = ctx.manifest.solver();
    let spec = ctx.manifest.simulation();
    info!("running {} replicates on a {} m torus", spec.replicates, spec.window_side_m);
    let report: OracleReport = run_oracles(&m, &spec, &opts.fixed_point, &opts.quadrature, &ctx.manifest.tolerances)?;
    let dir = &ctx.manifest.output_dir;
    ensure_dir(dir)?;
    let rows: Vec<_> = report.checks.iter().map(check_row).collect();
    write_csv(&dir.join("montecarlo.csv"), &MONTECARLO_COLUMNS, &rows)?;
    write_json(&dir.join("montecarlo.json"), "montecarlo", &report)?;
    for c in &report.checks {
        match (&c.status, c.analytical, c.estimate) {
            (CheckStatus::Skipped(reason), _, _) => println!("SKIP {}: {reason}", c.name),
            (status, Some(a), Some(e)) => println!(
                "{} {}: analytical {a:.4e}, simulated {:.4e} ± {:.1e} ({:+.2}%), band {:.0}% + {}σ",
                if *status == CheckStatus::Pass { "PASS" } else { "FAIL" },
                c.name,
                e.mean,
                e.se,
                100.0 * c.relative_error().unwrap_or(f64::NAN),
                100.0 * c.rel_tol,
                c.sigmas,
            ),
            _ => return Err(anyhow!("check {} has no values", c.name)),
        }
    }
    println!("{}", report.serving.summary());
    Ok(if report.all_passed() { Outcome::Clean } else { Outcome::Failed })
}

/// Writes the synthetic scenario plus `run.toml` pointing at it.
pub fn fixture(ctx: &Ctx, slots_per_day: usize) -> Result<Outcome> {
    if slots_per_day == 0 {
        return Err(invalid("slots_per_day must be positive"));
    }
    let base = DiurnalFixture::default();
    let fixture = DiurnalFixture {
        peak_slot: base.peak_slot * slots_per_day / base.slots_per_day,
        slot_seconds: base.slot_seconds * base.slots_per_day as f64 / slots_per_day as f64,
        slots_per_day,
        ..base
    };
    let dir = &ctx.manifest.output_dir;
    fixture.write(dir)?;
    let run = format!(
        "scenario = \"scenario.toml\"\noutput_dir = \"results\"\nseed = {}\nslot = {}\n",
        ctx.manifest.seed, fixture.peak_slot
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, run).map_err(|e| netshare::Error::Io { path: path.clone(), source: e })?;
    println!("wrote {}", path.display());
    Ok(Outcome::Clean)
}
