//! Energy-optimal activation fractions under the three sharing strategies.
//!
//! * Full sharing: every operator's base stations jointly serve all users and
//!   the activation fractions of all operators are chosen together.
//! * No sharing: each operator serves its own subscribers on its own band and
//!   picks its own activation fraction.
//! * Switchoff: one surviving operator serves every user, the others are off.
//!
//! All three reduce to the same problem on different models: minimize the
//! area power `Σ β_i λ_i E_i(U_i)` over `β ∈ [0, 1]^I` such that every active
//! operator's utilization stays at most one and the mixture delay of each class
//! meets its target. The problem is solved on every admissible face of the box
//! (subsets of operators switched on) with a log-barrier interior-point method
//! from several deterministic starts; the best certified point wins.

pub mod interior;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delay::{solve_delay_fixed_point, DelaySolution, FixedPointInit, FixedPointSpec};
use crate::domain::{LoadModel, NetworkModel};
use crate::energy::{network_power, NetworkPower, FEASIBILITY_SLACK};
use crate::error::{Error, Result};
use crate::geometry::QuadratureSpec;
use interior::{BarrierOptions, Evaluation};

/// Distance of the interior upper corner from `β = 1`.
const CORNER_GAP: f64 = 1e-9;
const PHASE_ONE_BISECTIONS: usize = 40;
/// Relative energy difference below which two candidates are tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub barrier: BarrierOptions,
    pub multi_starts: usize,
    /// Delay solves inside the optimizer; tight so finite differences see a smooth objective.
    pub inner_fixed_point: FixedPointSpec,
    /// Independent solve used to certify returned points.
    pub fixed_point: FixedPointSpec,
    pub quadrature: QuadratureSpec,
    /// Which users load a base station under full sharing.
    pub full_ns_load_model: LoadModel,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            barrier: BarrierOptions::default(),
            multi_starts: 5,
            inner_fixed_point: FixedPointSpec {
                rel_tol: 1e-12,
                max_iters: 1000,
                ..FixedPointSpec::default()
            },
            fixed_point: FixedPointSpec::default(),
            quadrature: QuadratureSpec::default(),
            full_ns_load_model: LoadModel::Aggregate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    NoSharing,
    Switchoff { survivor: usize },
    FullSharing,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::NoSharing => f.write_str("no-sharing"),
            Strategy::Switchoff { survivor } => write!(f, "switchoff-{survivor}"),
            Strategy::FullSharing => f.write_str("full-ns"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub faces: usize,
    pub starts: usize,
    pub newton_iterations: usize,
    pub evaluations: usize,
    /// Infinity norm of the barrier gradient at the returned point.
    pub stationarity: f64,
    pub duality_gap: f64,
}

impl SolverDiagnostics {
    fn absorb(&mut self, other: &SolverDiagnostics) {
        self.faces += other.faces;
        self.starts += other.starts;
        self.newton_iterations += other.newton_iterations;
        self.evaluations += other.evaluations;
        self.stationarity = self.stationarity.max(other.stationarity);
        self.duality_gap += other.duality_gap;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub label: String,
    /// Activation fraction per operator of the original model.
    pub beta: Vec<f64>,
    /// Area power in W/m²; `None` when infeasible.
    pub energy_w_per_m2: Option<f64>,
    pub utilization: Vec<f64>,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub diagnostics: SolverDiagnostics,
}

impl StrategyResult {
    fn infeasible(strategy: Strategy, label: String, n: usize, reason: String, diagnostics: SolverDiagnostics) -> Self {
        Self {
            strategy,
            label,
            beta: vec![0.0; n],
            energy_w_per_m2: None,
            utilization: vec![0.0; n],
            feasible: false,
            reason: Some(reason),
            diagnostics,
        }
    }
}

/// Independent check of a candidate: fresh delay solve, every class target and every active
/// operator's utilization within [`FEASIBILITY_SLACK`].
pub fn certify(m: &NetworkModel, beta: &[f64], fp: &FixedPointSpec, q: &QuadratureSpec) -> Result<(DelaySolution, NetworkPower)> {
    let model = m.with_active_fractions(beta);
    if model.total_user_intensity() == 0.0 && beta.iter().all(|&b| b == 0.0) {
        let n = m.num_operators();
        let zeros = DelaySolution {
            tau_bar: vec![vec![0.0; n]; m.classes.len()],
            tau_bar_mix: vec![0.0; m.classes.len()],
            serving_probs: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        };
        let power = network_power(&model, &zeros)?;
        return Ok((zeros, power));
    }
    let fp = FixedPointSpec {
        init: FixedPointInit::NoiseOnly,
        ..fp.clone()
    };
    let sol = solve_delay_fixed_point(&model, &fp, q)?;
    for (j, class) in model.classes.iter().enumerate() {
        let target = class.target_delay();
        if sol.tau_bar_mix[j] > target * (1.0 + FEASIBILITY_SLACK) {
            return Err(Error::Infeasible(format!(
                "class {} mean delay {:.6e} s/bit exceeds target {:.6e}",
                class.label, sol.tau_bar_mix[j], target
            )));
        }
    }
    let power = network_power(&model, &sol)?;
    Ok((sol, power))
}

struct Problem<'a> {
    model: &'a NetworkModel,
    face: Vec<usize>,
    energy_scale: f64,
    opts: &'a SolverOptions,
    cache: HashMap<Vec<u64>, Option<(Evaluation, Vec<f64>)>>,
    warm: Option<Vec<f64>>,
    evaluations: usize,
}

impl<'a> Problem<'a> {
    fn beta(&self, x: &[f64]) -> Vec<f64> {
        let mut beta = vec![0.0; self.model.num_operators()];
        for (&op, &v) in self.face.iter().zip(x) {
            beta[op] = v;
        }
        beta
    }

    /// Scaled area power and constraints `U_i - 1` (active operators) and `τ̄_J / τ0_J - 1`.
    fn evaluate(&mut self, x: &[f64]) -> Option<Evaluation> {
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return None;
        }
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(hit) = self.cache.get(&key) {
            return hit.as_ref().map(|(e, _)| e.clone());
        }
        let model = self.model.with_active_fractions(&self.beta(x));
        let spec = FixedPointSpec {
            init: self
                .warm
                .clone()
                .map_or(FixedPointInit::NoiseOnly, FixedPointInit::Custom),
            ..self.opts.inner_fixed_point.clone()
        };
        self.evaluations += 1;
        let result = solve_delay_fixed_point(&model, &spec, &self.opts.quadrature)
            .ok()
            .map(|sol| {
                let target = model.reference_delay();
                let tau = sol.reference_delays();
                let p = model.radio.transmit_power_w;
                let mut objective = 0.0;
                let mut constraints = Vec::with_capacity(self.face.len() + 1);
                for &op in &self.face {
                    let cfg = &model.operators[op];
                    let u = tau[op] / target;
                    objective += cfg.active_intensity() * (cfg.energy.q1_w + u * (cfg.energy.q2_w + cfg.energy.q3 * p));
                    constraints.push(u - 1.0);
                }
                if model.num_operators() > 1 {
                    let j = model.classes.len() - 1;
                    constraints.push(sol.tau_bar_mix[j] / target - 1.0);
                }
                (
                    Evaluation {
                        objective: objective / self.energy_scale,
                        constraints,
                    },
                    tau.to_vec(),
                )
            });
        if let Some((_, tau)) = &result {
            self.warm = Some(tau.clone());
        }
        let out = result.as_ref().map(|(e, _)| e.clone());
        self.cache.insert(key, result);
        out
    }

    fn strictly_feasible(&mut self, x: &[f64]) -> bool {
        self.evaluate(x)
            .is_some_and(|e| e.constraints.iter().all(|&c| c < 0.0))
    }
}

/// Deterministic multi-start list on an `n`-dimensional face.
fn starts(n: usize, count: usize) -> Vec<Vec<f64>> {
    let (hi, mid, lo) = (0.95, 0.5, 0.2);
    let mut list = vec![vec![hi; n], vec![mid; n], vec![lo; n]];
    for i in 0..n {
        let mut v = vec![lo; n];
        v[i] = hi;
        list.push(v);
        let mut w = vec![hi; n];
        w[i] = lo;
        list.push(w);
    }
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for s in list {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }
    unique.truncate(count.max(1));
    unique
}

struct Candidate {
    beta: Vec<f64>,
    energy: f64,
    utilization: Vec<f64>,
    stationarity: f64,
    duality_gap: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    let scale = a.energy.abs().max(b.energy.abs()).max(f64::MIN_POSITIVE);
    if (a.energy - b.energy).abs() <= TIE_TOLERANCE * scale {
        a.beta
            .iter()
            .zip(&b.beta)
            .find(|(x, y)| x != y)
            .is_some_and(|(x, y)| x < y)
    } else {
        a.energy < b.energy
    }
}

/// Faces admissible under the model's load semantics: under the literal load model every
/// operator with subscribers must keep some base stations on.
fn faces(m: &NetworkModel) -> Vec<Vec<usize>> {
    let n = m.num_operators();
    let required: Vec<usize> = match m.load_model {
        LoadModel::Aggregate => Vec::new(),
        LoadModel::PerOperatorLiteral => (0..n).filter(|&i| m.operators[i].user_intensity > 0.0).collect(),
    };
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|face| required.iter().all(|r| face.contains(r)))
        .filter(|face| face.iter().all(|&i| m.operators[i].deployed_intensity > 0.0))
        .collect()
}

struct Optimum {
    best: Option<Candidate>,
    diagnostics: SolverDiagnostics,
    reason: String,
}

fn optimize_model(m: &NetworkModel, opts: &SolverOptions) -> Result<Optimum> {
    let violations = crate::domain::validate_model(m);
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations.iter().map(ToString::to_string).collect()));
    }
    let n = m.num_operators();
    let mut diagnostics = SolverDiagnostics::default();
    if m.total_user_intensity() == 0.0 {
        return Ok(Optimum {
            best: Some(Candidate {
                beta: vec![0.0; n],
                energy: 0.0,
                utilization: vec![0.0; n],
                stationarity: 0.0,
                duality_gap: 0.0,
            }),
            diagnostics,
            reason: String::new(),
        });
    }
    let energy_scale: f64 = m
        .operators
        .iter()
        .map(|o| o.deployed_intensity * o.energy.max_power(m.radio.transmit_power_w))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut best: Option<Candidate> = None;
    let mut reasons = Vec::new();
    let consider = |beta: Vec<f64>, stationarity: f64, duality_gap: f64, best: &mut Option<Candidate>, reasons: &mut Vec<String>| {
        match certify(m, &beta, &opts.fixed_point, &opts.quadrature) {
            Ok((_, power)) => {
                let cand = Candidate {
                    utilization: power.per_bs.iter().map(|b| b.utilization).collect(),
                    energy: power.total,
                    beta,
                    stationarity,
                    duality_gap,
                };
                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                    *best = Some(cand);
                }
            }
            Err(e) => reasons.push(e.to_string()),
        }
    };
    for face in faces(m) {
        diagnostics.faces += 1;
        let dim = face.len();
        let mut problem = Problem {
            model: m,
            face,
            energy_scale,
            opts,
            cache: HashMap::new(),
            warm: None,
            evaluations: 0,
        };
        let corner = vec![1.0 - CORNER_GAP; dim];
        if !problem.strictly_feasible(&corner) {
            // Feasible only on the outer corner, if at all.
            let full = problem.beta(&vec![1.0; dim]);
            consider(full, 0.0, 0.0, &mut best, &mut reasons);
            diagnostics.evaluations += problem.evaluations;
            continue;
        }
        for x0 in starts(dim, opts.multi_starts) {
            diagnostics.starts += 1;
            let start = if problem.strictly_feasible(&x0) {
                x0
            } else {
                // Phase one: bisect along the segment towards the feasible corner.
                let (mut lo, mut hi) = (0.0, 1.0);
                let point = |t: f64| -> Vec<f64> {
                    x0.iter().zip(&corner).map(|(a, b)| a + t * (b - a)).collect()
                };
                for _ in 0..PHASE_ONE_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if problem.strictly_feasible(&point(mid)) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                point(hi)
            };
            let barrier = opts.barrier.clone();
            let outcome = interior::minimize(|x| problem.evaluate(x), &start, &barrier);
            match outcome {
                Some(out) => {
                    diagnostics.newton_iterations += out.newton_iterations;
                    let beta = problem.beta(&out.x);
                    consider(beta, out.stationarity, out.duality_gap, &mut best, &mut reasons);
                }
                None => reasons.push("interior-point start could not be evaluated".into()),
            }
            let beta = problem.beta(&start);
            consider(beta, f64::NAN, f64::NAN, &mut best, &mut reasons);
        }
        diagnostics.evaluations += problem.evaluations;
    }
    if let Some(b) = &best {
        diagnostics.stationarity = b.stationarity;
        diagnostics.duality_gap = b.duality_gap;
    }
    reasons.dedup();
    Ok(Optimum {
        best,
        diagnostics,
        reason: reasons
            .first()
            .cloned()
            .unwrap_or_else(|| "no feasible activation found".into()),
    })
}

fn into_result(strategy: Strategy, label: String, n: usize, opt: Optimum, embed: impl Fn(&[f64]) -> Vec<f64>) -> StrategyResult {
    match opt.best {
        Some(c) => StrategyResult {
            strategy,
            label,
            beta: embed(&c.beta),
            energy_w_per_m2: Some(c.energy),
            utilization: embed(&c.utilization),
            feasible: true,
            reason: None,
            diagnostics: opt.diagnostics,
        },
        None => StrategyResult::infeasible(strategy, label, n, opt.reason, opt.diagnostics),
    }
}

/// Jointly optimal activation fractions when all operators share their networks.
pub fn optimize_full_ns(m: &NetworkModel, opts: &SolverOptions) -> Result<StrategyResult> {
    let mut shared = m.clone();
    shared.load_model = opts.full_ns_load_model;
    let opt = optimize_model(&shared, opts)?;
    Ok(into_result(
        Strategy::FullSharing,
        Strategy::FullSharing.to_string(),
        m.num_operators(),
        opt,
        |v| v.to_vec(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSharingResult {
    pub per_operator: Vec<StrategyResult>,
    /// Sum over operators; infeasible if any operator is.
    pub total: StrategyResult,
}

fn embed_single(n: usize, op: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    move |v: &[f64]| {
        let mut out = vec![0.0; n];
        out[op] = v[0];
        out
    }
}

/// Each operator independently serves its own subscribers.
pub fn optimize_no_sharing(m: &NetworkModel, opts: &SolverOptions) -> Result<NoSharingResult> {
    let n = m.num_operators();
    let mut per_operator = Vec::with_capacity(n);
    for op in 0..n {
        let single = m.single_operator(op, m.operators[op].user_intensity);
        let opt = optimize_model(&single, opts)?;
        per_operator.push(into_result(
            Strategy::NoSharing,
            format!("no-sharing-{}", m.operators[op].id),
            n,
            opt,
            embed_single(n, op),
        ));
    }
    let mut diagnostics = SolverDiagnostics::default();
    per_operator.iter().for_each(|r| diagnostics.absorb(&r.diagnostics));
    let label = Strategy::NoSharing.to_string();
    let total = if let Some(bad) = per_operator.iter().find(|r| !r.feasible) {
        StrategyResult::infeasible(
            Strategy::NoSharing,
            label,
            n,
            format!("{} infeasible: {}", bad.label, bad.reason.clone().unwrap_or_default()),
            diagnostics,
        )
    } else {
        let sum = |f: &dyn Fn(&StrategyResult) -> Vec<f64>| -> Vec<f64> {
            per_operator.iter().fold(vec![0.0; n], |acc, r| acc.iter().zip(f(r)).map(|(a, b)| a + b).collect())
        };
        StrategyResult {
            strategy: Strategy::NoSharing,
            label,
            beta: sum(&|r| r.beta.clone()),
            energy_w_per_m2: Some(per_operator.iter().filter_map(|r| r.energy_w_per_m2).sum()),
            utilization: sum(&|r| r.utilization.clone()),
            feasible: true,
            reason: None,
            diagnostics,
        }
    };
    Ok(NoSharingResult { per_operator, total })
}

/// Only `survivor` stays on and serves every operator's subscribers on its own band.
pub fn evaluate_switchoff(m: &NetworkModel, survivor: usize, opts: &SolverOptions) -> Result<StrategyResult> {
    if survivor >= m.num_operators() {
        return Err(Error::invalid(format!("no operator {survivor}")));
    }
    let single = m.single_operator(survivor, m.total_user_intensity());
    let opt = optimize_model(&single, opts)?;
    let strategy = Strategy::Switchoff { survivor };
    Ok(into_result(
        strategy,
        format!("switchoff-{}", m.operators[survivor].id),
        m.num_operators(),
        opt,
        embed_single(m.num_operators(), survivor),
    ))
}

/// Whether each operator alone meets its own subscribers' targets with every base station on.
pub fn self_sufficiency(m: &NetworkModel, opts: &SolverOptions) -> Vec<bool> {
    (0..m.num_operators())
        .map(|op| {
            let single = m.single_operator(op, m.operators[op].user_intensity);
            certify(&single, &[1.0], &opts.fixed_point, &opts.quadrature).is_ok()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saving {
    pub label: String,
    pub percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

/// `100 (1 - alternative / baseline)`.
pub fn saving_percent(baseline: f64, alternative: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::invalid(format!("savings need a positive baseline energy, got {baseline}")));
    }
    Ok(100.0 * (1.0 - alternative / baseline))
}

/// Savings of each alternative relative to the baseline; infeasible alternatives are excluded
/// with their reason.
pub fn savings_report(baseline: &StrategyResult, alternatives: &[StrategyResult]) -> Result<Vec<Saving>> {
    let base = match (baseline.feasible, baseline.energy_w_per_m2) {
        (true, Some(e)) => e,
        _ => {
            return Err(Error::Infeasible(format!(
                "baseline {} is infeasible: {}",
                baseline.label,
                baseline.reason.clone().unwrap_or_default()
            )))
        }
    };
    alternatives
        .iter()
        .map(|alt| {
            Ok(match (alt.feasible, alt.energy_w_per_m2) {
                (true, Some(e)) => Saving {
                    label: alt.label.clone(),
                    percent: Some(saving_percent(base, e)?),
                    excluded: None,
                },
                _ => Saving {
                    label: alt.label.clone(),
                    percent: None,
                    excluded: Some(alt.reason.clone().unwrap_or_else(|| "infeasible".into())),
                },
            })
        })
        .collect()
}

/// Savings over a period: `100 (1 - Σ alternative / Σ baseline)`.
pub fn aggregate_saving(baseline: &[f64], alternative: &[f64]) -> Result<f64> {
    if baseline.len() != alternative.len() {
        return Err(Error::invalid("baseline and alternative series differ in length"));
    }
    saving_percent(baseline.iter().sum(), alternative.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub no_sharing: NoSharingResult,
    pub switchoff: Vec<StrategyResult>,
    pub full_ns: StrategyResult,
}

impl Comparison {
    /// Lowest-energy feasible survivor.
    pub fn best_switchoff(&self) -> Option<&StrategyResult> {
        self.switchoff
            .iter()
            .filter(|r| r.feasible)
            .min_by(|a, b| a.energy_w_per_m2.unwrap_or(f64::INFINITY).total_cmp(&b.energy_w_per_m2.unwrap_or(f64::INFINITY)))
    }

    /// Baseline first, then each survivor, then full sharing.
    pub fn results(&self) -> Vec<&StrategyResult> {
        let mut out = vec![&self.no_sharing.total];
        out.extend(self.switchoff.iter());
        out.push(&self.full_ns);
        out
    }
}

/// Runs every strategy on one model.
pub fn compare_strategies(m: &NetworkModel, opts: &SolverOptions) -> Result<Comparison> {
    Ok(Comparison {
        no_sharing: optimize_no_sharing(m, opts)?,
        switchoff: (0..m.num_operators())
            .map(|s| evaluate_switchoff(m, s, opts))
            .collect::<Result<_>>()?,
        full_ns: optimize_full_ns(m, opts)?,
    })
}

/// Strategy comparison for every model of a series, in slot order; failures stay per slot.
pub fn sweep(models: &[NetworkModel], opts: &SolverOptions) -> Vec<Result<Comparison>> {
    models.par_iter().map(|m| compare_strategies(m, opts)).collect()
}

/// Saving of one strategy over a period of slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSaving {
    pub label: String,
    /// `None` when no slot has both the baseline and this strategy feasible.
    pub percent: Option<f64>,
    pub slots_used: usize,
    /// Slots left out because the baseline or this strategy was infeasible there.
    pub excluded_slots: Vec<usize>,
}

/// Period savings of every strategy relative to no sharing, in [`Comparison::results`] order
/// without the baseline. Slots are indexed by position in `comparisons`; `None` entries
/// (failed slots) are excluded.
pub fn period_savings(comparisons: &[Option<&Comparison>]) -> Vec<PeriodSaving> {
    let Some(first) = comparisons.iter().flatten().next() else {
        return Vec::new();
    };
    let n_alternatives = first.results().len() - 1;
    (0..n_alternatives)
        .map(|k| {
            let mut base = Vec::new();
            let mut alt = Vec::new();
            let mut excluded = Vec::new();
            let mut label = first.results()[k + 1].label.clone();
            for (t, c) in comparisons.iter().enumerate() {
                let pair = c.and_then(|c| {
                    let r = c.results();
                    label = r[k + 1].label.clone();
                    let b = &c.no_sharing.total;
                    let a = r[k + 1];
                    match (b.feasible, b.energy_w_per_m2, a.feasible, a.energy_w_per_m2) {
                        (true, Some(eb), true, Some(ea)) => Some((eb, ea)),
                        _ => None,
                    }
                });
                match pair {
                    Some((eb, ea)) => {
                        base.push(eb);
                        alt.push(ea);
                    }
                    None => excluded.push(t),
                }
            }
            PeriodSaving {
                label,
                percent: aggregate_saving(&base, &alt).ok(),
                slots_used: base.len(),
                excluded_slots: excluded,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::two_operator_model;

    #[test]
    fn start_list_is_deterministic_and_unique() {
        assert_eq!(starts(1, 5), vec![vec![0.95], vec![0.5], vec![0.2]]);
        let two = starts(2, 5);
        assert_eq!(two.len(), 5);
        assert_eq!(two[0], vec![0.95, 0.95]);
        assert_eq!(two[3], vec![0.95, 0.2]);
    }

    #[test]
    fn faces_respect_load_semantics() {
        let mut m = two_operator_model();
        m.load_model = LoadModel::Aggregate;
        assert_eq!(faces(&m), vec![vec![0], vec![1], vec![0, 1]]);
        m.load_model = LoadModel::PerOperatorLiteral;
        assert_eq!(faces(&m), vec![vec![0, 1]]);
        m.operators[1].user_intensity = 0.0;
        assert_eq!(faces(&m), vec![vec![0], vec![0, 1]]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = |beta: Vec<f64>, energy| Candidate {
            beta,
            energy,
            utilization: vec![],
            stationarity: 0.0,
            duality_gap: 0.0,
        };
        assert!(better(&c(vec![0.3, 0.7], 1.0), &c(vec![0.7, 0.3], 1.0)));
        assert!(!better(&c(vec![0.7, 0.3], 1.0), &c(vec![0.3, 0.7], 1.0)));
        assert!(better(&c(vec![0.7, 0.3], 0.9), &c(vec![0.3, 0.7], 1.0)));
    }

    #[test]
    fn saving_arithmetic() {
        assert_eq!(saving_percent(2.0, 2.0).unwrap(), 0.0);
        assert!((saving_percent(1.0, 0.6674).unwrap() - 33.26).abs() < 1e-9);
        assert!(saving_percent(0.0, 1.0).is_err());
        assert!((aggregate_saving(&[1.0, 3.0], &[1.0, 1.0]).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn period_savings_skip_infeasible_slots() {
        let r = |label: &str, e: Option<f64>| StrategyResult {
            strategy: Strategy::FullSharing,
            label: label.into(),
            beta: vec![],
            energy_w_per_m2: e,
            utilization: vec![],
            feasible: e.is_some(),
            reason: None,
            diagnostics: SolverDiagnostics::default(),
        };
        let cmp = |base: Option<f64>, full: Option<f64>| Comparison {
            no_sharing: NoSharingResult {
                per_operator: vec![],
                total: r("no-sharing", base),
            },
            switchoff: vec![],
            full_ns: r("full-ns", full),
        };
        let a = cmp(Some(2.0), Some(1.0));
        let b = cmp(Some(2.0), None);
        let c = cmp(Some(4.0), Some(3.0));
        let s = period_savings(&[Some(&a), Some(&b), None, Some(&c)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].slots_used, 2);
        assert_eq!(s[0].excluded_slots, vec![1, 2]);
        assert!((s[0].percent.unwrap() - 100.0 / 3.0).abs() < 1e-12);
    }
}
