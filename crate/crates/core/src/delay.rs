//! Palm expectation of the ideal per-bit delay as a fixed point.
//!
//! For operator `i` the reference-class delay `τ̄_J^i` satisfies
//!
//! ```text
//! τ̄_J^i = λ_load,i (Σ_j γ_j w_j) ∫ h(r) H_i(P, r; τ̄_J^i) dr
//! ```
//!
//! where `H_i` divides the serving-distance density by the capacity, and the
//! capacity depends on `τ̄_J^i` through the mean interference. Every other class
//! follows from `τ̄_j^i = τ̄_J^i / w_j` and the mixture `τ̄_j = Σ_i p_i τ̄_j^i`.
//!
//! The fixed-point state is the vector of reference-class delays, one entry
//! per operator. The cell-area weight `h` depends only on the superposed
//! intensity `Λ = Σ β λ` and obeys `h(r; Λ) = h(r √Λ; 1) / Λ`, so the integral
//! is carried out in the normalized distance `ρ = r √Λ` against a memoized
//! unit-intensity `h`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::domain::{validate_model, NetworkModel};
use crate::error::{Error, Result};
use crate::geometry::quadrature::{self, panel_estimate, panel_nodes};
use crate::geometry::{mean_cell_area_weight, nearest_bs_pdf, QuadratureSpec};
use crate::radio::{channel_capacity, interference_coefficient, mean_interference, shannon_capacity};

/// Iterates beyond this multiple of the reference target are treated as divergence.
const DIVERGENCE_FACTOR: f64 = 1e6;
const MAX_TABLE_REBUILDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum FixedPointInit {
    /// Start from the delay with interference switched off.
    NoiseOnly,
    /// Start from the given reference-class delays, one per operator.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointSpec {
    pub rel_tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub init: FixedPointInit,
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iters: 200,
            damping: 1.0,
            init: FixedPointInit::NoiseOnly,
        }
    }
}

impl FixedPointSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::invalid("fixed point needs rel_tol > 0 and max_iters >= 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySolution {
    /// `τ̄_j^i` indexed `[class][operator]`, s/bit.
    pub tau_bar: Vec<Vec<f64>>,
    /// `τ̄_j = Σ_i p_i τ̄_j^i`, s/bit.
    pub tau_bar_mix: Vec<f64>,
    pub serving_probs: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl DelaySolution {
    /// Reference-class delays `τ̄_J^i`, one per operator.
    pub fn reference_delays(&self) -> &[f64] {
        self.tau_bar.last().expect("at least one class")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayRhs {
    pub tau_bar: Vec<Vec<f64>>,
    pub tau_bar_mix: Vec<f64>,
}

/// Probability that the typical user is served by each operator.
///
/// Uses the co-location decomposition `λ_c = c Σβλ / I`, `p_c = c`. The raw
/// expression does not sum to one for `0 < c < 1`; set
/// `normalize_serving_probs` to rescale.
pub fn serving_probability(m: &NetworkModel) -> Result<Vec<f64>> {
    let total = m.total_active_intensity();
    if !(total > 0.0) {
        return Err(Error::invalid("serving probabilities need at least one active base station"));
    }
    let n = m.num_operators() as f64;
    let c = m.colocation_fraction;
    let lambda_c = c * total / n;
    let non_colocated = total - lambda_c;
    let mut p: Vec<f64> = m
        .operators
        .iter()
        .map(|op| {
            let colocated = lambda_c / total * c;
            // At c = 1 the second term is 0/0 times zero weight; zero by continuity.
            let independent = if non_colocated > 0.0 && c < 1.0 {
                (op.active_intensity() - lambda_c / n) / non_colocated * (1.0 - c)
            } else {
                0.0
            };
            colocated + independent
        })
        .collect();
    if m.normalize_serving_probs {
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            p.iter_mut().for_each(|v| *v /= sum);
        }
    }
    Ok(p)
}

/// `H_i(P, r)`: serving-distance density over capacity, in s/bit per metre.
pub fn delay_kernel(r: f64, m: &NetworkModel, op: usize, tau_ref: f64) -> Result<f64> {
    if !(r >= m.radio.min_distance_m) {
        return Err(Error::invalid(format!(
            "kernel distance {r} below the minimum distance {}",
            m.radio.min_distance_m
        )));
    }
    let pdf = nearest_bs_pdf(r, m.total_active_intensity())?;
    let interference = mean_interference(r, m, op, tau_ref)?;
    Ok(pdf / shannon_capacity(r, interference, &m.radio, m.bandwidth(op))?)
}

type CacheKey = (u64, [u64; 4]);

fn h_cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `h(ρ; 1)`, memoized per quadrature setting.
pub fn normalized_cell_area(rho: f64, q: &QuadratureSpec) -> Result<f64> {
    let key = (
        rho.to_bits(),
        [
            q.rel_tol.to_bits(),
            q.abs_tol.to_bits(),
            q.max_subdivisions as u64,
            q.truncation_multiplier.to_bits(),
        ],
    );
    if let Some(&v) = h_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(v);
    }
    let v = mean_cell_area_weight(rho, 1.0, q)?;
    h_cache().lock().expect("cache poisoned").insert(key, v);
    Ok(v)
}

struct OperatorTerms {
    /// `λ_load (Σ γ w) / Λ`
    prefactor: f64,
    bandwidth: f64,
    noise: f64,
    interference_coef: f64,
}

/// Per-node factors on a fixed partition of `[0, ρ_max]`.
struct NodeTable {
    panels: Vec<(f64, f64)>,
    /// `h(ρ; 1) · 2πρ e^{-πρ²}`
    weight: Vec<f64>,
    signal: Vec<f64>,
    /// `K_i r^{2-α}`, multiplied by the delay iterate to give the interference.
    interference: Vec<f64>,
}

struct DelayEngine<'a> {
    model: &'a NetworkModel,
    quad: QuadratureSpec,
    sqrt_lambda: f64,
    terms: Vec<OperatorTerms>,
    tables: Vec<Option<NodeTable>>,
}

impl<'a> DelayEngine<'a> {
    fn new(model: &'a NetworkModel, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let lambda = model.total_active_intensity();
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(
                "delay evaluation needs a positive active base-station intensity",
            ));
        }
        let shared = model.weighted_share() / lambda;
        let terms = (0..model.num_operators())
            .map(|op| OperatorTerms {
                prefactor: model.load_intensity(op) * shared,
                bandwidth: model.bandwidth(op),
                noise: model.noise_power(op),
                interference_coef: interference_coefficient(model, op),
            })
            .collect();
        Ok(Self {
            model,
            quad: *quad,
            sqrt_lambda: lambda.sqrt(),
            terms,
            tables: (0..model.num_operators()).map(|_| None).collect(),
        })
    }

    fn distance(&self, rho: f64) -> f64 {
        (rho / self.sqrt_lambda).max(self.model.radio.min_distance_m)
    }

    fn node_weight(&self, rho: f64) -> Result<f64> {
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(normalized_cell_area(rho, &self.quad)? * 2.0 * PI * rho * (-PI * rho * rho).exp())
    }

    fn integrand(&self, weight: f64, signal: f64, interference: f64, op: usize) -> f64 {
        if weight == 0.0 {
            return 0.0;
        }
        let t = &self.terms[op];
        let sinr = signal / (t.noise + interference);
        weight / channel_capacity(sinr, t.bandwidth, self.model.radio.reuse_factor)
    }

    /// Adaptive integral at `tau`, also rebuilding the node table for `op`.
    fn rebuild(&mut self, op: usize, tau: f64) -> Result<f64> {
        let radio = &self.model.radio;
        let alpha = radio.pathloss_exponent;
        let coef = self.terms[op].interference_coef;
        let mut failure = None;
        let integral = quadrature::integrate(
            |rho| {
                if failure.is_some() {
                    return 0.0;
                }
                match self.node_weight(rho) {
                    Ok(w) => {
                        let r = self.distance(rho);
                        let signal = radio.transmit_power_w * r.powf(-alpha);
                        self.integrand(w, signal, coef * r.powf(2.0 - alpha) * tau, op)
                    }
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            self.quad.truncation_multiplier,
            self.quad.rel_tol,
            self.quad.abs_tol,
            self.quad.max_subdivisions,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let integral = integral?;
        let mut table = NodeTable {
            panels: Vec::with_capacity(integral.segments.len()),
            weight: Vec::new(),
            signal: Vec::new(),
            interference: Vec::new(),
        };
        for s in &integral.segments {
            table.panels.push((s.lower, s.upper));
            for rho in panel_nodes(s.lower, s.upper) {
                let r = self.distance(rho);
                table.weight.push(self.node_weight(rho)?);
                table.signal.push(radio.transmit_power_w * r.powf(-alpha));
                table.interference.push(coef * r.powf(2.0 - alpha));
            }
        }
        self.tables[op] = Some(table);
        Ok(integral.value)
    }

    /// Integral on the cached partition, with its error estimate.
    fn evaluate(&self, op: usize, tau: f64) -> (f64, f64) {
        let table = self.tables[op].as_ref().expect("table built");
        let mut total = (0.0, 0.0);
        let mut fv = [0.0; 15];
        for (k, &(a, b)) in table.panels.iter().enumerate() {
            for (n, v) in fv.iter_mut().enumerate() {
                let idx = 15 * k + n;
                *v = self.integrand(
                    table.weight[idx],
                    table.signal[idx],
                    table.interference[idx] * tau,
                    op,
                );
            }
            let (v, e) = panel_estimate(a, b, &fv);
            total.0 += v;
            total.1 += e;
        }
        total
    }

    fn within_tolerance(&self, value: f64, error: f64) -> bool {
        error <= self.quad.abs_tol.max(self.quad.rel_tol * value.abs())
    }

    /// Reference-class delay update `T_i(τ)` for every operator.
    fn update(&mut self, tau: &[f64]) -> Result<Vec<f64>> {
        (0..tau.len())
            .map(|op| {
                let value = match self.tables[op] {
                    None => self.rebuild(op, tau[op])?,
                    Some(_) => {
                        let (v, e) = self.evaluate(op, tau[op]);
                        if self.within_tolerance(v, e) {
                            v
                        } else {
                            self.rebuild(op, tau[op])?
                        }
                    }
                };
                Ok(self.terms[op].prefactor * value)
            })
            .collect()
    }

    /// Fast update on the cached partitions; tolerance is rechecked at convergence.
    fn update_cached(&self, tau: &[f64]) -> Vec<f64> {
        (0..tau.len())
            .map(|op| self.terms[op].prefactor * self.evaluate(op, tau[op]).0)
            .collect()
    }

    fn cached_tables_accurate(&self, tau: &[f64]) -> bool {
        (0..tau.len()).all(|op| {
            let (v, e) = self.evaluate(op, tau[op]);
            self.within_tolerance(v, e)
        })
    }
}

fn expand(m: &NetworkModel, reference: &[f64], p: &[f64]) -> DelayRhs {
    let tau_bar: Vec<Vec<f64>> = m
        .classes
        .iter()
        .map(|c| reference.iter().map(|&t| t / c.weight).collect())
        .collect();
    let tau_bar_mix = tau_bar
        .iter()
        .map(|row| row.iter().zip(p).map(|(t, p)| t * p).sum())
        .collect();
    DelayRhs {
        tau_bar,
        tau_bar_mix,
    }
}

/// One application of the delay map at the reference-class delays `tau_ref`.
pub fn ideal_delay_rhs(tau_ref: &[f64], m: &NetworkModel, q: &QuadratureSpec) -> Result<DelayRhs> {
    if tau_ref.len() != m.num_operators() {
        return Err(Error::invalid(format!(
            "expected {} reference delays, got {}",
            m.num_operators(),
            tau_ref.len()
        )));
    }
    if tau_ref.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("reference delays must be non-negative"));
    }
    let mut engine = DelayEngine::new(m, q)?;
    let reference: Vec<f64> = tau_ref
        .iter()
        .enumerate()
        .map(|(op, &t)| Ok(engine.terms[op].prefactor * engine.rebuild(op, t)?))
        .collect::<Result<_>>()?;
    Ok(expand(m, &reference, &serving_probability(m)?))
}

fn max_relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(&a, &b)| {
            let diff = (b - a).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / b.abs().max(a.abs())
            }
        })
        .fold(0.0, f64::max)
}

/// Solves the delay fixed point for the model's current active fractions.
pub fn solve_delay_fixed_point(
    m: &NetworkModel,
    spec: &FixedPointSpec,
    q: &QuadratureSpec,
) -> Result<DelaySolution> {
    let violations = validate_model(m);
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations.iter().map(ToString::to_string).collect()));
    }
    spec.validate()?;
    let mut engine = DelayEngine::new(m, q)?;
    let n = m.num_operators();
    let mut tau = match &spec.init {
        FixedPointInit::NoiseOnly => engine.update(&vec![0.0; n])?,
        FixedPointInit::Custom(v) => {
            if v.len() != n || v.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(Error::invalid(format!(
                    "custom initialization needs {n} finite non-negative delays"
                )));
            }
            // Builds the partitions around the starting point.
            engine.update(v)?;
            v.clone()
        }
    };
    let cap = DIVERGENCE_FACTOR * m.reference_delay();
    let mut rebuilds = 0;
    let mut residual = f64::INFINITY;
    for iteration in 1..=spec.max_iters {
        let mapped = engine.update_cached(&tau);
        let next: Vec<f64> = tau
            .iter()
            .zip(&mapped)
            .map(|(t, f)| (1.0 - spec.damping) * t + spec.damping * f)
            .collect();
        residual = max_relative_change(&tau, &next);
        tau = next;
        if tau.iter().any(|t| !t.is_finite() || *t > cap) {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual,
                last_iterate: tau,
            });
        }
        if residual <= spec.rel_tol {
            if engine.cached_tables_accurate(&tau) || rebuilds >= MAX_TABLE_REBUILDS {
                let p = serving_probability(m)?;
                let rhs = expand(m, &tau, &p);
                return Ok(DelaySolution {
                    tau_bar: rhs.tau_bar,
                    tau_bar_mix: rhs.tau_bar_mix,
                    serving_probs: p,
                    iterations: iteration,
                    residual,
                });
            }
            rebuilds += 1;
            for (op, &t) in tau.iter().enumerate() {
                engine.rebuild(op, t)?;
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: spec.max_iters,
        residual,
        last_iterate: tau,
    })
}
