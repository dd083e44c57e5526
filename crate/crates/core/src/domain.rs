//! Scenario and result types shared by every analysis stage.
//!
//! A [`NetworkModel`] is the analytical description of one time slot: the
//! operators' deployments, the user classes, the co-location fraction and the
//! radio parameters. All quantities are SI (metres, watts, hertz, seconds,
//! bits); intensities are per square metre.
//!
//! Models are plain data. [`validate_model`] reports every violated invariant
//! instead of failing on the first one, so configuration errors can be shown
//! to the user in one pass.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-power share of the high load-proportionality profile.
pub const HLP_FIXED_SHARE: f64 = 0.36;
/// Fixed-power share of the low load-proportionality profile.
pub const LLP_FIXED_SHARE: f64 = 0.75;
/// Default split of the load-proportional power attributed to the transmit chain (`q3 * P`).
pub const DEFAULT_TRANSMIT_SHARE: f64 = 0.5;
/// Thermal noise, -174 dBm/Hz.
pub const THERMAL_NOISE_PSD: f64 = 3.981_071_705_534_972e-21;
/// Default path-loss exponent for dense urban deployments.
pub const DEFAULT_PATHLOSS_EXPONENT: f64 = 3.5;

const SHARE_SUM_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Noise {
    /// Power spectral density in W/Hz; integrated over the per-channel bandwidth `B_i / k`.
    Psd(f64),
    /// Total noise power in W, used as is.
    Power(f64),
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Psd(THERMAL_NOISE_PSD)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub transmit_power_w: f64,
    /// Channel bandwidth shared by every operator unless overridden per operator.
    pub bandwidth_hz: f64,
    pub reuse_factor: u32,
    pub pathloss_exponent: f64,
    #[serde(default)]
    pub noise: Noise,
    /// Distances below this are clamped to avoid the path-loss singularity.
    #[serde(default = "default_min_distance")]
    pub min_distance_m: f64,
}

fn default_min_distance() -> f64 {
    1.0
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            transmit_power_w: 20.0,
            bandwidth_hz: 20e6,
            reuse_factor: 1,
            pathloss_exponent: DEFAULT_PATHLOSS_EXPONENT,
            noise: Noise::default(),
            min_distance_m: default_min_distance(),
        }
    }
}

impl RadioParams {
    /// Noise power seen over one reuse channel of an operator with bandwidth `bandwidth_hz`.
    pub fn noise_power(&self, bandwidth_hz: f64) -> f64 {
        match self.noise {
            Noise::Psd(psd) => psd * bandwidth_hz / f64::from(self.reuse_factor),
            Noise::Power(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyProfile {
    Hlp,
    Llp,
    Custom,
}

impl EnergyProfile {
    pub fn fixed_share(self) -> Option<f64> {
        match self {
            EnergyProfile::Hlp => Some(HLP_FIXED_SHARE),
            EnergyProfile::Llp => Some(LLP_FIXED_SHARE),
            EnergyProfile::Custom => None,
        }
    }
}

impl fmt::Display for EnergyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyProfile::Hlp => "hlp",
            EnergyProfile::Llp => "llp",
            EnergyProfile::Custom => "custom",
        })
    }
}

impl std::str::FromStr for EnergyProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hlp" => Ok(EnergyProfile::Hlp),
            "llp" => Ok(EnergyProfile::Llp),
            "custom" => Ok(EnergyProfile::Custom),
            other => Err(Error::invalid(format!("unknown energy profile '{other}'"))),
        }
    }
}

/// Base-station power model `q1 + U * (q2 + q3 * P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub q1_w: f64,
    pub q2_w: f64,
    pub q3: f64,
    #[serde(default = "custom_profile")]
    pub profile: EnergyProfile,
}

fn custom_profile() -> EnergyProfile {
    EnergyProfile::Custom
}

impl EnergyParams {
    /// Parameterizes a named profile from the full-load power `e_max_w = q1 + q2 + q3 * P`.
    ///
    /// `transmit_share` is the fraction of the load-proportional part carried by `q3 * P`.
    /// Returns an error for [`EnergyProfile::Custom`], which has no fixed share.
    pub fn from_profile(
        profile: EnergyProfile,
        e_max_w: f64,
        transmit_power_w: f64,
        transmit_share: f64,
    ) -> Result<Self> {
        let fixed = profile
            .fixed_share()
            .ok_or_else(|| Error::invalid("custom energy profile needs explicit q1, q2, q3"))?;
        if !(e_max_w >= 0.0) || !(transmit_power_w > 0.0) || !(0.0..=1.0).contains(&transmit_share)
        {
            return Err(Error::invalid(format!(
                "energy profile needs e_max >= 0, P > 0 and transmit share in [0,1] (got {e_max_w}, {transmit_power_w}, {transmit_share})"
            )));
        }
        let load = (1.0 - fixed) * e_max_w;
        Ok(Self {
            q1_w: fixed * e_max_w,
            q2_w: (1.0 - transmit_share) * load,
            q3: transmit_share * load / transmit_power_w,
            profile,
        })
    }

    pub fn hlp(e_max_w: f64, transmit_power_w: f64) -> Self {
        Self::from_profile(EnergyProfile::Hlp, e_max_w, transmit_power_w, DEFAULT_TRANSMIT_SHARE)
            .expect("valid HLP parameters")
    }

    pub fn llp(e_max_w: f64, transmit_power_w: f64) -> Self {
        Self::from_profile(EnergyProfile::Llp, e_max_w, transmit_power_w, DEFAULT_TRANSMIT_SHARE)
            .expect("valid LLP parameters")
    }

    /// Power drawn at full utilization.
    pub fn max_power(&self, transmit_power_w: f64) -> f64 {
        self.q1_w + self.q2_w + self.q3 * transmit_power_w
    }

    /// The same full-load power and transmit share under another named profile.
    ///
    /// Asking for [`EnergyProfile::Custom`] keeps explicit custom parameters and is an error
    /// for a named profile, which has no custom values to fall back on.
    pub fn reprofiled(&self, profile: EnergyProfile, transmit_power_w: f64) -> Result<Self> {
        if profile == EnergyProfile::Custom {
            return if self.profile == EnergyProfile::Custom {
                Ok(self.clone())
            } else {
                Err(Error::invalid("custom energy profile needs explicit q1, q2, q3"))
            };
        }
        let load = self.q2_w + self.q3 * transmit_power_w;
        let share = if load > 0.0 {
            self.q3 * transmit_power_w / load
        } else {
            DEFAULT_TRANSMIT_SHARE
        };
        Self::from_profile(profile, self.max_power(transmit_power_w), transmit_power_w, share)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub id: String,
    /// Deployed base stations per m².
    pub deployed_intensity: f64,
    /// Subscribers per m².
    pub user_intensity: f64,
    /// Fraction of base stations left active by the random sleep policy.
    #[serde(default = "one")]
    pub active_fraction: f64,
    pub energy: EnergyParams,
    /// Overrides [`RadioParams::bandwidth_hz`] for this operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl OperatorConfig {
    pub fn active_intensity(&self) -> f64 {
        self.active_fraction * self.deployed_intensity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserClassSpec {
    pub label: String,
    pub target_rate_bps: f64,
    /// Mean fraction of users in this class.
    pub share: f64,
    /// Processor-sharing weight, `R_j / R_J` with `J` the last class.
    pub weight: f64,
}

impl UserClassSpec {
    /// Builds classes from `(label, target rate, share)` triples; weights are normalized to the last class.
    pub fn from_rates(classes: &[(&str, f64, f64)]) -> Result<Vec<UserClassSpec>> {
        let &(_, reference, _) = classes
            .last()
            .ok_or_else(|| Error::invalid("at least one user class is required"))?;
        if !(reference > 0.0) {
            return Err(Error::invalid("reference class rate must be positive"));
        }
        Ok(classes
            .iter()
            .map(|&(label, rate, share)| UserClassSpec {
                label: label.to_string(),
                target_rate_bps: rate,
                share,
                weight: rate / reference,
            })
            .collect())
    }

    /// Per-bit delay target, the inverse of the target rate.
    pub fn target_delay(&self) -> f64 {
        1.0 / self.target_rate_bps
    }
}

/// Which user population loads a base station of operator `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadModel {
    /// Only operator `i`'s own users, as the delay expression is written.
    #[default]
    PerOperatorLiteral,
    /// Users of every operator, as seen by a fully shared network.
    Aggregate,
}

impl std::str::FromStr for LoadModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-operator-literal" | "literal" => Ok(LoadModel::PerOperatorLiteral),
            "aggregate" => Ok(LoadModel::Aggregate),
            other => Err(Error::invalid(format!("unknown load model '{other}'"))),
        }
    }
}

impl fmt::Display for LoadModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoadModel::PerOperatorLiteral => "per-operator-literal",
            LoadModel::Aggregate => "aggregate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkModel {
    #[serde(default)]
    pub colocation_fraction: f64,
    #[serde(default)]
    pub load_model: LoadModel,
    /// Rescale serving probabilities so they sum to one.
    #[serde(default)]
    pub normalize_serving_probs: bool,
    pub radio: RadioParams,
    pub operators: Vec<OperatorConfig>,
    pub classes: Vec<UserClassSpec>,
}

impl NetworkModel {
    pub fn num_operators(&self) -> usize {
        self.operators.len()
    }

    /// `Σ β_i λ_i`, the intensity of the superposed active network.
    pub fn total_active_intensity(&self) -> f64 {
        self.operators.iter().map(OperatorConfig::active_intensity).sum()
    }

    pub fn total_user_intensity(&self) -> f64 {
        self.operators.iter().map(|o| o.user_intensity).sum()
    }

    pub fn bandwidth(&self, op: usize) -> f64 {
        self.operators[op]
            .bandwidth_hz
            .unwrap_or(self.radio.bandwidth_hz)
    }

    pub fn noise_power(&self, op: usize) -> f64 {
        self.radio.noise_power(self.bandwidth(op))
    }

    /// The last class, whose weight is one.
    pub fn reference_class(&self) -> &UserClassSpec {
        self.classes.last().expect("model has at least one class")
    }

    /// `τ0_J`.
    pub fn reference_delay(&self) -> f64 {
        self.reference_class().target_delay()
    }

    /// `Σ_j γ_j w_j`.
    pub fn weighted_share(&self) -> f64 {
        self.classes.iter().map(|c| c.share * c.weight).sum()
    }

    /// User intensity loading a base station of operator `op` under the configured load model.
    pub fn load_intensity(&self, op: usize) -> f64 {
        match self.load_model {
            LoadModel::PerOperatorLiteral => self.operators[op].user_intensity,
            LoadModel::Aggregate => self.total_user_intensity(),
        }
    }

    pub fn active_fractions(&self) -> Vec<f64> {
        self.operators.iter().map(|o| o.active_fraction).collect()
    }

    pub fn with_active_fractions(&self, beta: &[f64]) -> NetworkModel {
        assert_eq!(beta.len(), self.operators.len());
        let mut m = self.clone();
        for (op, &b) in m.operators.iter_mut().zip(beta) {
            op.active_fraction = b;
        }
        m
    }

    /// Every operator's energy parameters moved to `profile`; see [`EnergyParams::reprofiled`].
    pub fn with_energy_profile(&self, profile: EnergyProfile) -> Result<NetworkModel> {
        let mut m = self.clone();
        for op in &mut m.operators {
            op.energy = op.energy.reprofiled(profile, self.radio.transmit_power_w)?;
        }
        Ok(m)
    }

    /// Single-operator model of operator `op` serving `user_intensity` users per m² on its own band.
    pub fn single_operator(&self, op: usize, user_intensity: f64) -> NetworkModel {
        let mut operator = self.operators[op].clone();
        operator.user_intensity = user_intensity;
        NetworkModel {
            colocation_fraction: 0.0,
            load_model: self.load_model,
            normalize_serving_probs: self.normalize_serving_probs,
            radio: self.radio.clone(),
            operators: vec![operator],
            classes: self.classes.clone(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse {
            path: "<model>".into(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// Validates and returns the model, or every violation as an error.
    pub fn validated(self) -> Result<Self> {
        let violations = validate_model(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidModel(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
}

impl Violation {
    fn new(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            constraint: constraint.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

fn finite_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Returns every violated invariant of `m`; an empty list means the model is valid.
pub fn validate_model(m: &NetworkModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let r = &m.radio;
    if !finite_positive(r.transmit_power_w) {
        out.push(Violation::new("radio.transmit_power_w", "must be positive"));
    }
    if !finite_positive(r.bandwidth_hz) {
        out.push(Violation::new("radio.bandwidth_hz", "must be positive"));
    }
    if r.reuse_factor < 1 {
        out.push(Violation::new("radio.reuse_factor", "must be at least 1"));
    }
    if !(r.pathloss_exponent.is_finite() && r.pathloss_exponent > 2.0) {
        out.push(Violation::new(
            "radio.pathloss_exponent",
            "pathloss_exponent must exceed 2",
        ));
    }
    match r.noise {
        Noise::Psd(v) | Noise::Power(v) if !finite_nonneg(v) => {
            out.push(Violation::new("radio.noise", "must be non-negative"));
        }
        _ => {}
    }
    if !finite_positive(r.min_distance_m) {
        out.push(Violation::new("radio.min_distance_m", "must be positive"));
    }
    if !(0.0..=1.0).contains(&m.colocation_fraction) {
        out.push(Violation::new("colocation_fraction", "must lie in [0, 1]"));
    }

    if m.operators.is_empty() {
        out.push(Violation::new("operators", "at least one operator is required"));
    }
    for (i, op) in m.operators.iter().enumerate() {
        let f = |name: &str| format!("operators[{i}].{name}");
        if !finite_positive(op.deployed_intensity) {
            out.push(Violation::new(f("deployed_intensity"), "must be positive"));
        }
        if !finite_nonneg(op.user_intensity) {
            out.push(Violation::new(f("user_intensity"), "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&op.active_fraction) {
            out.push(Violation::new(f("active_fraction"), "must lie in [0, 1]"));
        }
        let e = &op.energy;
        if !(finite_nonneg(e.q1_w) && finite_nonneg(e.q2_w) && finite_nonneg(e.q3)) {
            out.push(Violation::new(f("energy"), "q1, q2, q3 must be non-negative"));
        }
        if let Some(b) = op.bandwidth_hz {
            if !finite_positive(b) {
                out.push(Violation::new(f("bandwidth_hz"), "must be positive"));
            }
        }
    }

    if m.classes.is_empty() {
        out.push(Violation::new("classes", "at least one user class is required"));
        return out;
    }
    let reference = m.classes.last().map(|c| c.target_rate_bps).unwrap_or(0.0);
    for (j, c) in m.classes.iter().enumerate() {
        let f = |name: &str| format!("classes[{j}].{name}");
        if !finite_positive(c.target_rate_bps) {
            out.push(Violation::new(f("target_rate_bps"), "must be positive"));
            continue;
        }
        if !finite_nonneg(c.share) {
            out.push(Violation::new(f("share"), "must be non-negative"));
        }
        if finite_positive(reference) {
            let expected = c.target_rate_bps / reference;
            if (c.weight - expected).abs() > WEIGHT_TOL * expected {
                out.push(Violation::new(
                    f("weight"),
                    format!("must equal target_rate / reference rate = {expected}"),
                ));
            }
        }
    }
    let share_sum: f64 = m.classes.iter().map(|c| c.share).sum();
    if (share_sum - 1.0).abs() > SHARE_SUM_TOL {
        out.push(Violation::new(
            "classes.share",
            format!("class shares must sum to 1 (got {share_sum})"),
        ));
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn two_operator_model() -> NetworkModel {
        let radio = RadioParams {
            pathloss_exponent: 4.0,
            ..RadioParams::default()
        };
        let op = |id: &str| OperatorConfig {
            id: id.into(),
            deployed_intensity: 3e-6,
            user_intensity: 3e-5,
            active_fraction: 1.0,
            energy: EnergyParams::hlp(1000.0, 20.0),
            bandwidth_hz: None,
        };
        NetworkModel {
            colocation_fraction: 0.0,
            load_model: LoadModel::PerOperatorLiteral,
            normalize_serving_probs: false,
            radio,
            operators: vec![op("a"), op("b")],
            classes: UserClassSpec::from_rates(&[("H", 1e6, 1.0)]).unwrap(),
        }
    }

    #[test]
    fn reprofiling_keeps_full_load_power() {
        let m = two_operator_model().with_energy_profile(EnergyProfile::Llp).unwrap();
        let e = &m.operators[0].energy;
        assert_eq!(e.profile, EnergyProfile::Llp);
        assert!((e.max_power(20.0) - 1000.0).abs() < 1e-9);
        assert!((e.q1_w - 750.0).abs() < 1e-9);
        assert!((e.q2_w - 125.0).abs() < 1e-9);
        assert!(two_operator_model().with_energy_profile(EnergyProfile::Custom).is_err());
    }

    #[test]
    fn alpha_two_is_rejected() {
        let mut m = two_operator_model();
        m.radio.pathloss_exponent = 2.0;
        let v = validate_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, "pathloss_exponent must exceed 2");
        assert_eq!(v[0].field, "radio.pathloss_exponent");
    }

    #[test]
    fn consistent_two_class_model_is_clean() {
        let mut m = two_operator_model();
        m.classes = UserClassSpec::from_rates(&[("H", 5e6, 0.5), ("L", 5e4, 0.5)]).unwrap();
        assert!(validate_model(&m).is_empty());
    }

    #[test]
    fn shares_not_summing_to_one() {
        let mut m = two_operator_model();
        m.classes = UserClassSpec::from_rates(&[("H", 5e6, 0.5), ("L", 5e4, 0.4)]).unwrap();
        let v = validate_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "classes.share");
    }

    #[test]
    fn inconsistent_weight_is_reported() {
        let mut m = two_operator_model();
        m.classes = UserClassSpec::from_rates(&[("H", 5e6, 0.5), ("L", 5e4, 0.5)]).unwrap();
        m.classes[0].weight = 1.0;
        let v = validate_model(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "classes[0].weight");
    }

    #[test]
    fn every_violation_is_listed() {
        let mut m = two_operator_model();
        m.colocation_fraction = 1.5;
        m.operators[0].active_fraction = -0.1;
        m.operators[1].deployed_intensity = 0.0;
        m.radio.reuse_factor = 0;
        let fields: Vec<_> = validate_model(&m).into_iter().map(|v| v.field).collect();
        assert_eq!(
            fields,
            [
                "radio.reuse_factor",
                "colocation_fraction",
                "operators[0].active_fraction",
                "operators[1].deployed_intensity"
            ]
        );
    }

    #[test]
    fn weights_from_rates_are_exact() {
        let classes =
            UserClassSpec::from_rates(&[("H", 5e6, 0.2), ("M", 2e5, 0.3), ("L", 5e4, 0.5)])
                .unwrap();
        assert_eq!(classes[0].weight, 5e6 / 5e4);
        assert_eq!(classes[1].weight, 2e5 / 5e4);
        assert_eq!(classes[2].weight, 1.0);
        assert_eq!(classes[2].target_delay(), 1.0 / 5e4);
    }

    #[test]
    fn profile_split() {
        let hlp = EnergyParams::hlp(1.0, 20.0);
        assert!((hlp.q1_w - 0.36).abs() < 1e-15);
        assert!((hlp.q2_w - 0.32).abs() < 1e-15);
        assert!((hlp.q3 * 20.0 - 0.32).abs() < 1e-15);
        assert!((hlp.max_power(20.0) - 1.0).abs() < 1e-15);
        let llp = EnergyParams::llp(1.0, 20.0);
        assert!((llp.q1_w - 0.75).abs() < 1e-15);
        assert!(EnergyParams::from_profile(EnergyProfile::Custom, 1.0, 20.0, 0.5).is_err());
    }

    #[test]
    fn noise_psd_scales_with_channel_bandwidth() {
        let mut r = RadioParams::default();
        r.noise = Noise::Psd(1e-20);
        r.reuse_factor = 2;
        assert!((r.noise_power(20e6) - 1e-13).abs() < 1e-28);
        r.noise = Noise::Power(3e-13);
        assert_eq!(r.noise_power(20e6), 3e-13);
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        let mut m = two_operator_model();
        m.operators[1].bandwidth_hz = Some(1.0e7 / 3.0);
        m.colocation_fraction = 0.1 + 0.2;
        let text = m.to_toml_string().unwrap();
        let back = NetworkModel::from_toml_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
