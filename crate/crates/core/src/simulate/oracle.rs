//! Pass/fail comparison of the analytical engine against the simulator.
//!
//! Each check compares one analytical number with a Monte Carlo estimate and passes when
//! the two agree within a relative tolerance plus a number of standard errors. Checks that
//! cannot be run on the given model (an operator with no active stations, a class nobody
//! uses) are reported as skipped with a reason.

use serde::{Deserialize, Serialize};

use super::{
    campbell_interference, empirical_network_power, empirical_serving_shares, simulate_palm_delay, BusyModel,
    Estimate, SimSpec,
};
use crate::delay::{serving_probability, solve_delay_fixed_point, FixedPointSpec};
use crate::domain::NetworkModel;
use crate::energy::network_power;
use crate::error::Result;
use crate::geometry::QuadratureSpec;
use crate::radio::mean_interference;

/// Expected number of points per Campbell replicate above which the window stops growing.
const MAX_CAMPBELL_POINTS: f64 = 2e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleTolerances {
    pub delay_rel: f64,
    pub interference_rel: f64,
    pub energy_rel: f64,
    pub serving_rel: f64,
    /// Standard errors added to every relative band.
    pub sigmas: f64,
    pub campbell_replicates: usize,
    /// Largest bias from interferers outside the Campbell window, relative.
    pub campbell_truncation: f64,
}

impl Default for OracleTolerances {
    fn default() -> Self {
        Self {
            delay_rel: 0.10,
            interference_rel: 0.05,
            energy_rel: 0.05,
            serving_rel: 0.05,
            sigmas: 3.0,
            campbell_replicates: 20_000,
            campbell_truncation: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub analytical: Option<f64>,
    pub estimate: Option<Estimate>,
    pub rel_tol: f64,
    pub sigmas: f64,
    pub status: CheckStatus,
}

impl CheckOutcome {
    fn compare(name: String, analytical: f64, estimate: Estimate, rel_tol: f64, sigmas: f64) -> Self {
        let status = if estimate.agrees_with(analytical, rel_tol, sigmas) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            name,
            analytical: Some(analytical),
            estimate: Some(estimate),
            rel_tol,
            sigmas,
            status,
        }
    }

    fn skipped(name: String, reason: impl Into<String>) -> Self {
        Self {
            name,
            analytical: None,
            estimate: None,
            rel_tol: 0.0,
            sigmas: 0.0,
            status: CheckStatus::Skipped(reason.into()),
        }
    }

    /// `(estimate − analytical) / analytical`.
    pub fn relative_error(&self) -> Option<f64> {
        match (self.analytical, &self.estimate) {
            (Some(a), Some(e)) if a != 0.0 => Some((e.mean - a) / a),
            _ => None,
        }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServingVariant {
    Literal,
    Normalized,
    /// Both variants coincide, so the data cannot separate them.
    Indistinguishable,
}

/// Simulated serving shares set against both readings of the analytical formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServingVerdict {
    pub literal: Vec<f64>,
    pub normalized: Vec<f64>,
    pub empirical: Vec<Estimate>,
    /// Largest deviation from each variant in standard errors.
    pub literal_z: f64,
    pub normalized_z: f64,
    pub supports: ServingVariant,
}

impl ServingVerdict {
    pub fn summary(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", ");
        let emp: Vec<f64> = self.empirical.iter().map(|e| e.mean).collect();
        let choice = match self.supports {
            ServingVariant::Literal => "the literal formula",
            ServingVariant::Normalized => "the normalized formula",
            ServingVariant::Indistinguishable => "neither over the other (the variants coincide)",
        };
        format!(
            "simulated shares ({}) vs literal ({}, max {:.1} SE) and normalized ({}, max {:.1} SE): data supports {choice}",
            fmt(&emp),
            fmt(&self.literal),
            self.literal_z,
            fmt(&self.normalized),
            self.normalized_z,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: Vec<CheckOutcome>,
    pub serving: ServingVerdict,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.iter().any(CheckOutcome::failed)
    }

    pub fn skipped(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks
            .iter()
            .filter(|c| matches!(c.status, CheckStatus::Skipped(_)))
    }
}

fn max_z(empirical: &[Estimate], analytical: &[f64]) -> f64 {
    empirical
        .iter()
        .zip(analytical)
        .map(|(e, a)| {
            let d = (e.mean - a).abs();
            if e.se > 0.0 {
                d / e.se
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Compares simulated serving shares with the literal and normalized formulas.
pub fn serving_verdict(m: &NetworkModel, spec: &SimSpec) -> Result<ServingVerdict> {
    let mut variant = m.clone();
    variant.normalize_serving_probs = false;
    let literal = serving_probability(&variant)?;
    variant.normalize_serving_probs = true;
    let normalized = serving_probability(&variant)?;
    let empirical = empirical_serving_shares(m, spec)?;
    let literal_z = max_z(&empirical, &literal);
    let normalized_z = max_z(&empirical, &normalized);
    let same = literal.iter().zip(&normalized).all(|(a, b)| (a - b).abs() <= 1e-12);
    let supports = if same {
        ServingVariant::Indistinguishable
    } else if literal_z < normalized_z {
        ServingVariant::Literal
    } else {
        ServingVariant::Normalized
    };
    Ok(ServingVerdict {
        literal,
        normalized,
        empirical,
        literal_z,
        normalized_z,
        supports,
    })
}

/// Side of the Campbell window, in multiples of `r`, that leaves at most `truncation` of the
/// mean interference outside the inscribed disk, capped by the point budget.
fn campbell_window_factor(alpha: f64, truncation: f64, lambda: f64, r: f64) -> f64 {
    let wanted = 2.0 * truncation.powf(-1.0 / (alpha - 2.0));
    let cap = (MAX_CAMPBELL_POINTS / (lambda * r * r)).sqrt();
    wanted.min(cap).max(4.0)
}

/// Runs every oracle on `m` at its current active fractions.
///
/// Interferers in the delay simulation are busy with the analytical utilization, so the
/// delay checks isolate the delay formula from the busy-probability closure.
pub fn run_oracles(
    m: &NetworkModel,
    spec: &SimSpec,
    fp: &FixedPointSpec,
    q: &QuadratureSpec,
    tol: &OracleTolerances,
) -> Result<OracleReport> {
    spec.validate(m)?;
    let analytic = solve_delay_fixed_point(m, fp, q)?;
    let target = m.reference_delay();
    let tau_ref = analytic.reference_delays().to_vec();
    let busy: Vec<f64> = tau_ref.iter().map(|t| (t / target).clamp(0.0, 1.0)).collect();
    let n = m.num_operators();
    let mut checks = Vec::new();

    let est = simulate_palm_delay(m, spec, &BusyModel::Fixed(busy.clone()))?;
    for (j, class) in m.classes.iter().enumerate() {
        for (i, op) in m.operators.iter().enumerate() {
            let name = format!("delay {} class {}", op.id, class.label);
            let e = &est.tau_bar[j][i];
            if op.active_intensity() == 0.0 {
                checks.push(CheckOutcome::skipped(name, "operator has no active base stations"));
            } else if class.share == 0.0 || !e.mean.is_finite() || e.samples < 2 {
                checks.push(CheckOutcome::skipped(name, "no simulated users in this class"));
            } else {
                checks.push(CheckOutcome::compare(name, analytic.tau_bar[j][i], *e, tol.delay_rel, tol.sigmas));
            }
        }
    }

    for (i, op) in m.operators.iter().enumerate() {
        let name = format!("interference {}", op.id);
        let lambda = op.active_intensity();
        if lambda == 0.0 {
            checks.push(CheckOutcome::skipped(name, "operator has no active base stations"));
            continue;
        }
        if busy[i] == 0.0 {
            checks.push(CheckOutcome::skipped(name, "operator is never busy"));
            continue;
        }
        // Median distance to the nearest active station.
        let r = (std::f64::consts::LN_2 / (std::f64::consts::PI * lambda)).sqrt();
        let wf = campbell_window_factor(m.radio.pathloss_exponent, tol.campbell_truncation, lambda, r);
        let mc = campbell_interference(
            m,
            i,
            r,
            busy[i] * target,
            wf,
            tol.campbell_replicates,
            spec.seed.wrapping_add(1 + i as u64),
        )?;
        let exact = mean_interference(r, m, i, busy[i] * target)?;
        checks.push(CheckOutcome::compare(name, exact, mc, tol.interference_rel, tol.sigmas));
    }

    let name = "network power".to_string();
    if m.total_active_intensity() == 0.0 {
        checks.push(CheckOutcome::skipped(name, "no active base stations"));
    } else if tau_ref.iter().zip(&m.operators).any(|(t, o)| o.active_intensity() > 0.0 && *t > target) {
        checks.push(CheckOutcome::skipped(name, "analytical solution violates the delay target"));
    } else {
        let exact = network_power(m, &analytic)?.total;
        let mc = empirical_network_power(m, spec, &est)?;
        checks.push(CheckOutcome::compare(name, exact, mc, tol.energy_rel, tol.sigmas));
    }

    let serving = serving_verdict(m, spec)?;
    let configured = if m.normalize_serving_probs {
        &serving.normalized
    } else {
        &serving.literal
    };
    for i in 0..n {
        let name = format!("serving share {}", m.operators[i].id);
        if m.operators[i].active_intensity() == 0.0 {
            checks.push(CheckOutcome::skipped(name, "operator has no active base stations"));
        } else {
            checks.push(CheckOutcome::compare(
                name,
                configured[i],
                serving.empirical[i],
                tol.serving_rel,
                tol.sigmas,
            ));
        }
    }
    Ok(OracleReport { checks, serving })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_factor_meets_truncation() {
        let wf = campbell_window_factor(4.0, 0.01, 1e-6, 100.0);
        assert!(((2.0 / wf).powf(2.0) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn window_factor_respects_point_budget() {
        let wf = campbell_window_factor(2.2, 0.01, 1e-4, 100.0);
        assert!(1e-4 * (wf * 100.0).powi(2) <= MAX_CAMPBELL_POINTS * (1.0 + 1e-12));
    }

    #[test]
    fn z_score_handles_exact_estimates() {
        let e = Estimate {
            mean: 0.5,
            se: 0.0,
            samples: 10,
        };
        assert_eq!(max_z(&[e], &[0.5]), 0.0);
        assert!(max_z(&[e], &[0.4]).is_infinite());
    }
}
