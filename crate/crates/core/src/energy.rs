//! Base-station power and the mapping from delay slack to utilization.
//!
//! A base station tunes its utilization `U` so that the actual per-bit delay
//! seen by its users, `ideal / U`, lands exactly on the target. The smallest
//! such utilization is `U = τ̄_J^i / τ0_J`, and the station then draws
//! `q1 + U (q2 + q3 P)`.

use serde::{Deserialize, Serialize};

use crate::delay::DelaySolution;
use crate::domain::{EnergyParams, NetworkModel};
use crate::error::{Error, Result};

/// Relative slack accepted above the target before a delay is declared infeasible.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    /// W
    pub fixed: f64,
    /// W
    pub load: f64,
    /// W
    pub total: f64,
    pub utilization: f64,
    /// Idle weight `ι` in `U = S / (S + ι)` per unit of served weight `S`; `None` at `U = 0`.
    pub idle_fraction: Option<f64>,
}

impl PowerBreakdown {
    pub fn new(utilization: f64, e: &EnergyParams, transmit_power_w: f64) -> Result<Self> {
        check_utilization(utilization)?;
        let load = utilization * (e.q2_w + e.q3 * transmit_power_w);
        Ok(Self {
            fixed: e.q1_w,
            load,
            total: e.q1_w + load,
            utilization,
            idle_fraction: (utilization > 0.0).then(|| (1.0 - utilization) / utilization),
        })
    }
}

fn check_utilization(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::invalid(format!("utilization must lie in [0, 1], got {u}")))
    }
}

/// `q1 + U (q2 + q3 P)` in watts.
pub fn bs_power(utilization: f64, e: &EnergyParams, transmit_power_w: f64) -> Result<f64> {
    check_utilization(utilization)?;
    Ok(e.q1_w + utilization * (e.q2_w + e.q3 * transmit_power_w))
}

/// Smallest utilization that meets the target delay, `τ̄_J / τ0_J`.
///
/// Delays up to [`FEASIBILITY_SLACK`] above the target are clamped to `U = 1`.
pub fn utilization_from_delay(ideal_delay: f64, target_delay: f64) -> Result<f64> {
    if !(ideal_delay >= 0.0) || !(target_delay > 0.0) {
        return Err(Error::invalid(format!(
            "utilization needs ideal delay >= 0 and target > 0 (got {ideal_delay}, {target_delay})"
        )));
    }
    let u = ideal_delay / target_delay;
    if u > 1.0 + FEASIBILITY_SLACK {
        return Err(Error::Infeasible(format!(
            "ideal per-bit delay {ideal_delay:.6e} s/bit exceeds the target {target_delay:.6e} s/bit"
        )));
    }
    Ok(u.min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPower {
    /// W/m²
    pub total: f64,
    /// Per-operator power per m², `β_i λ_i E_i`.
    pub per_operator: Vec<f64>,
    /// Per-base-station breakdown for each operator.
    pub per_bs: Vec<PowerBreakdown>,
}

/// `Σ_i β_i λ_i E_i(U_i, P)` in W/m².
///
/// Operators with no active base stations contribute nothing and report zero utilization.
pub fn network_power(m: &NetworkModel, d: &DelaySolution) -> Result<NetworkPower> {
    let tau = d.reference_delays();
    if tau.len() != m.num_operators() {
        return Err(Error::invalid("delay solution does not match the model's operators"));
    }
    let target = m.reference_delay();
    let p = m.radio.transmit_power_w;
    let mut out = NetworkPower {
        total: 0.0,
        per_operator: Vec::with_capacity(tau.len()),
        per_bs: Vec::with_capacity(tau.len()),
    };
    for (op, cfg) in m.operators.iter().enumerate() {
        let active = cfg.active_intensity();
        let u = if active > 0.0 {
            utilization_from_delay(tau[op], target)?
        } else {
            0.0
        };
        let bs = PowerBreakdown::new(u, &cfg.energy, p)?;
        let area_power = active * bs.total;
        out.total += area_power;
        out.per_operator.push(area_power);
        out.per_bs.push(bs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{solve_delay_fixed_point, FixedPointSpec};
    use crate::domain::tests::two_operator_model;
    use crate::geometry::QuadratureSpec;
    use proptest::prelude::*;

    #[test]
    fn idle_base_station_draws_fixed_power() {
        let e = EnergyParams::hlp(1000.0, 20.0);
        assert_eq!(bs_power(0.0, &e, 20.0).unwrap(), 360.0);
        assert!(bs_power(1.2, &e, 20.0).is_err());
        assert!(bs_power(-0.1, &e, 20.0).is_err());
    }

    #[test]
    fn normalized_profiles_at_half_load() {
        let hlp = EnergyParams::hlp(1.0, 20.0);
        let llp = EnergyParams::llp(1.0, 20.0);
        assert!((bs_power(0.5, &hlp, 20.0).unwrap() - 0.68).abs() < 1e-12);
        assert!((bs_power(0.5, &llp, 20.0).unwrap() - 0.875).abs() < 1e-12);
    }

    #[test]
    fn utilization_mapping() {
        assert_eq!(utilization_from_delay(1e-6, 1e-6).unwrap(), 1.0);
        assert_eq!(utilization_from_delay(0.5e-6, 1e-6).unwrap(), 0.5);
        assert!(matches!(utilization_from_delay(1.2e-6, 1e-6), Err(Error::Infeasible(_))));
        assert_eq!(utilization_from_delay(1e-6 * (1.0 + 1e-7), 1e-6).unwrap(), 1.0);
    }

    #[test]
    fn breakdown_identity() {
        let b = PowerBreakdown::new(0.25, &EnergyParams::llp(1000.0, 20.0), 20.0).unwrap();
        assert_eq!(b.total, b.fixed + b.load);
        assert!((b.idle_fraction.unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(PowerBreakdown::new(0.0, &EnergyParams::llp(1.0, 20.0), 20.0).unwrap().idle_fraction, None);
    }

    #[test]
    fn switched_off_network_draws_nothing() {
        let m = two_operator_model();
        let d = solve_delay_fixed_point(&m, &FixedPointSpec::default(), &QuadratureSpec::default()).unwrap();
        let off = m.with_active_fractions(&[0.0, 0.0]);
        assert_eq!(network_power(&off, &d).unwrap().total, 0.0);
    }

    #[test]
    fn full_load_single_operator() {
        let m = two_operator_model().single_operator(0, 3e-5);
        let d = DelaySolution {
            tau_bar: vec![vec![m.reference_delay()]],
            tau_bar_mix: vec![m.reference_delay()],
            serving_probs: vec![1.0],
            iterations: 0,
            residual: 0.0,
        };
        // 3 BS/km² at 1 kW each.
        let w_per_km2 = network_power(&m, &d).unwrap().total * 1e6;
        assert!((w_per_km2 - 3000.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn power_monotone_in_utilization(u in 0.0f64..1.0, du in 0.0f64..0.5, e_max in 1.0f64..2000.0) {
            for e in [EnergyParams::hlp(e_max, 20.0), EnergyParams::llp(e_max, 20.0)] {
                let lo = bs_power(u, &e, 20.0).unwrap();
                let hi = bs_power((u + du).min(1.0), &e, 20.0).unwrap();
                prop_assert!(hi >= lo);
            }
        }

        #[test]
        fn load_share_larger_under_hlp(u in 1e-6f64..1.0) {
            let hlp = PowerBreakdown::new(u, &EnergyParams::hlp(1000.0, 20.0), 20.0).unwrap();
            let llp = PowerBreakdown::new(u, &EnergyParams::llp(1000.0, 20.0), 20.0).unwrap();
            prop_assert!(hlp.load / hlp.total > llp.load / llp.total);
        }
    }
}
