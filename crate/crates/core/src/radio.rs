//! Link capacity and the mean-interference closure.
//!
//! Interference reaching a user comes only from the other active base stations
//! of its serving operator (operators transmit on disjoint bands). An
//! interferer transmits a fraction of time equal to its utilization, which the
//! closure approximates by `τ̄_J^i / τ0_J`, and shares the user's channel with
//! probability `1 / k` under random frequency reuse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{NetworkModel, RadioParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub sinr: f64,
    /// bits/s
    pub capacity: f64,
    pub interference: f64,
    pub noise: f64,
}

impl LinkBudget {
    pub fn new(r: f64, interference: f64, radio: &RadioParams, bandwidth_hz: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::invalid(format!(
                "link distance must be positive (got {r}); clamp to the minimum distance"
            )));
        }
        if !(interference >= 0.0) {
            return Err(Error::invalid(format!("interference must be non-negative, got {interference}")));
        }
        let noise = radio.noise_power(bandwidth_hz);
        let signal = radio.transmit_power_w * r.powf(-radio.pathloss_exponent);
        let sinr = signal / (noise + interference);
        Ok(Self {
            sinr,
            capacity: channel_capacity(sinr, bandwidth_hz, radio.reuse_factor),
            interference,
            noise,
        })
    }
}

#[inline]
pub(crate) fn channel_capacity(sinr: f64, bandwidth_hz: f64, reuse_factor: u32) -> f64 {
    bandwidth_hz / f64::from(reuse_factor) * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Shannon capacity (bits/s) of a user at distance `r` from its serving base station.
pub fn shannon_capacity(r: f64, interference: f64, radio: &RadioParams, bandwidth_hz: f64) -> Result<f64> {
    Ok(LinkBudget::new(r, interference, radio, bandwidth_hz)?.capacity)
}

/// Coefficient `K` such that the mean interference is `K · r^(2-α) · τ̄_J^i`.
pub(crate) fn interference_coefficient(m: &NetworkModel, op: usize) -> f64 {
    let radio = &m.radio;
    let alpha = radio.pathloss_exponent;
    2.0 * radio.transmit_power_w * PI * m.operators[op].active_intensity()
        / (m.reference_delay() * f64::from(radio.reuse_factor) * (alpha - 2.0))
}

/// Mean interference (W) at a user of operator `op` at distance `r` from its serving base
/// station, when that operator's reference-class ideal delay is `tau_ref`.
pub fn mean_interference(r: f64, m: &NetworkModel, op: usize, tau_ref: f64) -> Result<f64> {
    let alpha = m.radio.pathloss_exponent;
    if !(alpha > 2.0) {
        return Err(Error::invalid(format!(
            "mean interference diverges for pathloss exponent {alpha} <= 2"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::invalid(format!("distance must be positive, got {r}")));
    }
    if op >= m.num_operators() {
        return Err(Error::invalid(format!("no operator {op}")));
    }
    if !(tau_ref >= 0.0) {
        return Err(Error::invalid(format!("ideal delay must be non-negative, got {tau_ref}")));
    }
    Ok(interference_coefficient(m, op) * r.powf(2.0 - alpha) * tau_ref)
}
