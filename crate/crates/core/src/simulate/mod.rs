//! Monte Carlo realizations of the network, used as an oracle for the analytical model.
//!
//! Base stations and users are drawn as Poisson processes on a torus, users
//! attach to an active base station, each base station shares its time among
//! its users by weighted processor sharing, and every user's ideal per-bit
//! delay is computed from the realized interference. Interferers transmit with
//! a busy probability equal to their operator's utilization, either supplied or
//! estimated by iterating to a self-consistent value with common random numbers.
//!
//! Busy thinning mirrors the analytical closure instead of simulating queues, so
//! agreement validates the model's algebra and geometry, not the closure itself.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{EnergyParams, LoadModel, NetworkModel, OperatorConfig, RadioParams, UserClassSpec};
use crate::energy::bs_power;
use crate::error::{Error, Result};
use crate::geometry::{sample_ppp_with, Point, Window};
use crate::radio::{channel_capacity, interference_coefficient};

pub mod oracle;

pub use oracle::{run_oracles, serving_verdict, CheckOutcome, CheckStatus, OracleReport, OracleTolerances, ServingVariant, ServingVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Association {
    #[default]
    Nearest,
    /// Largest signal over noise plus the mean interference of the candidate's operator.
    MaxMeanSinr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub window_side_m: f64,
    pub replicates: usize,
    pub seed: u64,
    pub association: Association,
    /// Rounds of the busy-probability iteration.
    pub busy_iterations: usize,
    /// Relative change in busy probabilities that ends the iteration early.
    pub busy_rel_tol: f64,
    /// Count the typical user itself in its base station's load.
    pub count_self: bool,
    /// Replace the realized interference by its mean given the serving distance.
    pub mean_interference: bool,
    /// Writes one CSV of per-user values per replicate when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_dir: Option<PathBuf>,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            window_side_m: 10_000.0,
            replicates: 200,
            seed: 1,
            association: Association::Nearest,
            busy_iterations: 8,
            busy_rel_tol: 1e-3,
            count_self: true,
            mean_interference: false,
            trace_dir: None,
        }
    }
}

impl SimSpec {
    pub fn validate(&self, m: &NetworkModel) -> Result<()> {
        let lambda = m.total_active_intensity();
        if self.replicates == 0 {
            return Err(Error::invalid("simulation needs at least one replicate"));
        }
        if lambda > 0.0 && self.window_side_m < 10.0 / lambda.sqrt() {
            return Err(Error::invalid(format!(
                "window side {} m is below 10 mean inter-site distances ({:.0} m)",
                self.window_side_m,
                10.0 / lambda.sqrt()
            )));
        }
        Ok(())
    }

    fn window(&self) -> Window {
        Window::square(self.window_side_m)
    }
}

/// Default validation scenario: two identical operators of 3 stations and 30 users per km²
/// with no co-location, pathloss exponent 4, 20 MHz, 20 W and one 1 Mbit/s class.
pub fn reference_model() -> NetworkModel {
    let radio = RadioParams {
        pathloss_exponent: 4.0,
        ..RadioParams::default()
    };
    let op = |id: &str| OperatorConfig {
        id: id.into(),
        deployed_intensity: 3e-6,
        user_intensity: 3e-5,
        active_fraction: 1.0,
        energy: EnergyParams::hlp(1000.0, radio.transmit_power_w),
        bandwidth_hz: None,
    };
    NetworkModel {
        colocation_fraction: 0.0,
        load_model: LoadModel::PerOperatorLiteral,
        normalize_serving_probs: false,
        operators: vec![op("a"), op("b")],
        classes: vec![UserClassSpec {
            label: "ref".into(),
            target_rate_bps: 1e6,
            share: 1.0,
            weight: 1.0,
        }],
        radio,
    }
}

/// Seed stream for one replicate: `(seed, replicate)` fully determines the draw.
pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub position: Point,
    pub operator: usize,
    /// Shared site index for co-located stations.
    pub site: Option<usize>,
    pub active: bool,
    pub channel: u32,
    /// Uniform draw compared against the busy probability.
    pub busy_draw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub position: Point,
    pub operator: usize,
    pub class: usize,
    /// Uniform draw that breaks ties between equidistant stations.
    pub tie_draw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub window: Window,
    pub base_stations: Vec<BaseStation>,
    pub users: Vec<User>,
}

/// Intensity of shared sites, each hosting one station of every operator.
///
/// Every operator contributes `c Σλ / I²` co-located stations per m², the decomposition
/// behind the analytical serving probabilities, capped by the sparsest operator.
pub fn colocated_site_intensity(m: &NetworkModel) -> f64 {
    let n = m.num_operators() as f64;
    let total: f64 = m.operators.iter().map(|o| o.deployed_intensity).sum();
    let min = m
        .operators
        .iter()
        .map(|o| o.deployed_intensity)
        .fold(f64::INFINITY, f64::min);
    (m.colocation_fraction * total / (n * n)).min(min)
}

/// Draws base stations and users for one replicate.
pub fn realize_network(m: &NetworkModel, spec: &SimSpec, replicate: usize) -> Result<Realization> {
    let window = spec.window();
    let mut rng = replicate_rng(spec.seed, replicate);
    let k = m.radio.reuse_factor;
    let mut base_stations = Vec::new();
    let station = |rng: &mut ChaCha8Rng, position, operator: usize, site| BaseStation {
        position,
        operator,
        site,
        active: rng.random::<f64>() < m.operators[operator].active_fraction,
        channel: rng.random_range(0..k),
        busy_draw: rng.random::<f64>(),
    };
    let shared = colocated_site_intensity(m);
    let sites = if m.num_operators() > 1 && shared > 0.0 {
        sample_ppp_with(&mut rng, shared, &window)?
    } else {
        Vec::new()
    };
    for (s, &p) in sites.iter().enumerate() {
        for op in 0..m.num_operators() {
            let bs = station(&mut rng, p, op, Some(s));
            base_stations.push(bs);
        }
    }
    let own_shared = if m.num_operators() > 1 { shared } else { 0.0 };
    for (op, cfg) in m.operators.iter().enumerate() {
        let independent = (cfg.deployed_intensity - own_shared).max(0.0);
        for p in sample_ppp_with(&mut rng, independent, &window)? {
            let bs = station(&mut rng, p, op, None);
            base_stations.push(bs);
        }
    }
    let mut users = Vec::new();
    for (op, cfg) in m.operators.iter().enumerate() {
        for (class, spec_class) in m.classes.iter().enumerate() {
            for p in sample_ppp_with(&mut rng, cfg.user_intensity * spec_class.share, &window)? {
                users.push(User {
                    position: p,
                    operator: op,
                    class,
                    tie_draw: rng.random::<f64>(),
                });
            }
        }
    }
    Ok(Realization {
        window,
        base_stations,
        users,
    })
}

/// Serving station index and distance for every user; `None` when no station is active.
pub fn associate(
    real: &Realization,
    m: &NetworkModel,
    association: Association,
    busy: &[f64],
) -> Vec<Option<(usize, f64)>> {
    let active: Vec<usize> = (0..real.base_stations.len())
        .filter(|&b| real.base_stations[b].active)
        .collect();
    let alpha = m.radio.pathloss_exponent;
    let r_min = m.radio.min_distance_m;
    real.users
        .iter()
        .map(|u| {
            let mut best: Vec<usize> = Vec::new();
            let mut best_score = f64::NEG_INFINITY;
            for &b in &active {
                let bs = &real.base_stations[b];
                let d2 = real.window.torus_dist2(u.position, bs.position);
                let score = match association {
                    Association::Nearest => -d2,
                    Association::MaxMeanSinr => {
                        let r = d2.sqrt().max(r_min);
                        let mean_i = interference_coefficient(m, bs.operator)
                            * r.powf(2.0 - alpha)
                            * busy[bs.operator]
                            * m.reference_delay();
                        r.powf(-alpha) * m.radio.transmit_power_w / (m.noise_power(bs.operator) + mean_i)
                    }
                };
                if score > best_score {
                    best_score = score;
                    best.clear();
                    best.push(b);
                } else if score == best_score {
                    best.push(b);
                }
            }
            if best.is_empty() {
                return None;
            }
            let pick = best[((u.tie_draw * best.len() as f64) as usize).min(best.len() - 1)];
            let d = real.window.torus_dist2(u.position, real.base_stations[pick].position).sqrt();
            Some((pick, d))
        })
        .collect()
}

/// Interference at `probe` from the active, busy, same-channel stations of `serving`'s operator.
pub fn empirical_interference(real: &Realization, m: &NetworkModel, probe: Point, serving: usize, busy: &[f64]) -> f64 {
    let s = &real.base_stations[serving];
    let alpha = m.radio.pathloss_exponent;
    let r_min = m.radio.min_distance_m;
    real.base_stations
        .iter()
        .enumerate()
        .filter(|&(b, bs)| {
            b != serving
                && bs.active
                && bs.operator == s.operator
                && bs.channel == s.channel
                && bs.busy_draw < busy[bs.operator]
        })
        .map(|(_, bs)| {
            let d = real.window.torus_dist2(probe, bs.position).sqrt().max(r_min);
            m.radio.transmit_power_w * d.powf(-alpha)
        })
        .sum()
}

/// Per-replicate sums of user delays, indexed `[class][operator]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateDelays {
    pub sums: Vec<Vec<f64>>,
    pub counts: Vec<Vec<usize>>,
    /// Users attached to each operator.
    pub served_by: Vec<usize>,
    pub users: usize,
    pub unserved: usize,
    pub active_stations: Vec<usize>,
    pub deployed_stations: Vec<usize>,
}

/// Ideal per-bit delays of every user of one realization, summed per class and serving operator.
pub fn empirical_palm_delay(
    real: &Realization,
    m: &NetworkModel,
    spec: &SimSpec,
    busy: &[f64],
) -> Result<ReplicateDelays> {
    let n = m.num_operators();
    let classes = m.classes.len();
    let links = associate(real, m, spec.association, busy);
    // Weighted load per station, split by the users' home operator.
    let mut load = vec![vec![0.0; n]; real.base_stations.len()];
    for (u, link) in real.users.iter().zip(&links) {
        if let Some((b, _)) = link {
            load[*b][u.operator] += m.classes[u.class].weight;
        }
    }
    let mut out = ReplicateDelays {
        sums: vec![vec![0.0; n]; classes],
        counts: vec![vec![0; n]; classes],
        served_by: vec![0; n],
        users: real.users.len(),
        unserved: 0,
        active_stations: vec![0; n],
        deployed_stations: vec![0; n],
    };
    for bs in &real.base_stations {
        out.deployed_stations[bs.operator] += 1;
        if bs.active {
            out.active_stations[bs.operator] += 1;
        }
    }
    for (u, link) in real.users.iter().zip(&links) {
        let Some((b, d)) = *link else {
            out.unserved += 1;
            continue;
        };
        let bs = &real.base_stations[b];
        let op = bs.operator;
        let w = m.classes[u.class].weight;
        let counted = match m.load_model {
            LoadModel::Aggregate => load[b].iter().sum::<f64>(),
            LoadModel::PerOperatorLiteral => load[b][op] + if u.operator == op { 0.0 } else { w },
        };
        let weighted = if spec.count_self { counted } else { counted - w };
        let r = d.max(m.radio.min_distance_m);
        let interference = if spec.mean_interference {
            interference_coefficient(m, op) * r.powf(2.0 - m.radio.pathloss_exponent) * busy[op] * m.reference_delay()
        } else {
            empirical_interference(real, m, u.position, b, busy)
        };
        let signal = m.radio.transmit_power_w * r.powf(-m.radio.pathloss_exponent);
        let sinr = signal / (m.noise_power(op) + interference);
        let capacity = channel_capacity(sinr, m.bandwidth(op), m.radio.reuse_factor);
        let delay = weighted / (w * capacity);
        out.sums[u.class][op] += delay;
        out.counts[u.class][op] += 1;
        out.served_by[op] += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error across replicates.
    pub se: f64,
    pub samples: usize,
}

impl Estimate {
    /// Ratio estimator `Σ y / Σ x` over replicates with its linearized standard error.
    pub fn ratio(y: &[f64], x: &[f64]) -> Self {
        let r = y.len();
        let sy: f64 = y.iter().sum();
        let sx: f64 = x.iter().sum();
        if sx == 0.0 {
            return Self {
                mean: f64::NAN,
                se: f64::NAN,
                samples: 0,
            };
        }
        let mean = sy / sx;
        let se = if r > 1 {
            let resid: f64 = y.iter().zip(x).map(|(a, b)| (a - mean * b).powi(2)).sum();
            let xbar = sx / r as f64;
            (resid / (r as f64 * (r as f64 - 1.0))).sqrt() / xbar
        } else {
            f64::NAN
        };
        Self {
            mean,
            se,
            samples: sx as usize,
        }
    }

    /// Mean and standard error of independent samples.
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            f64::NAN
        };
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// Whether `value` lies within `sigmas` standard errors plus a relative tolerance.
    pub fn agrees_with(&self, value: f64, rel_tol: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.se + rel_tol * value.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmEstimate {
    /// `[class][operator]`
    pub tau_bar: Vec<Vec<Estimate>>,
    pub tau_bar_mix: Vec<Estimate>,
    pub serving_shares: Vec<Estimate>,
    pub active_fraction: Vec<Estimate>,
    /// Busy probabilities of the reported round.
    pub busy: Vec<f64>,
    pub busy_rounds: usize,
    /// Estimated reference-class utilization `τ̂_J^i / τ0_J` of each operator, clamped to `[0, 1]`.
    pub utilization: Vec<f64>,
}

fn pooled(m: &NetworkModel, reps: &[ReplicateDelays], busy: Vec<f64>, rounds: usize) -> PalmEstimate {
    let n = m.num_operators();
    let column = |f: &dyn Fn(&ReplicateDelays) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
    let tau_bar: Vec<Vec<Estimate>> = (0..m.classes.len())
        .map(|j| {
            (0..n)
                .map(|i| Estimate::ratio(&column(&|r| r.sums[j][i]), &column(&|r| r.counts[j][i] as f64)))
                .collect()
        })
        .collect();
    let utilization = tau_bar[m.classes.len() - 1]
        .iter()
        .map(|e| {
            if e.mean.is_finite() {
                (e.mean / m.reference_delay()).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let tau_bar_mix = (0..m.classes.len())
        .map(|j| {
            Estimate::ratio(
                &column(&|r| r.sums[j].iter().sum()),
                &column(&|r| r.counts[j].iter().sum::<usize>() as f64),
            )
        })
        .collect();
    let served = column(&|r| r.served_by.iter().sum::<usize>() as f64);
    let serving_shares = (0..n)
        .map(|i| Estimate::ratio(&column(&|r| r.served_by[i] as f64), &served))
        .collect();
    let active_fraction = (0..n)
        .map(|i| {
            Estimate::ratio(
                &column(&|r| r.active_stations[i] as f64),
                &column(&|r| r.deployed_stations[i] as f64),
            )
        })
        .collect();
    PalmEstimate {
        tau_bar,
        tau_bar_mix,
        serving_shares,
        active_fraction,
        utilization,
        busy,
        busy_rounds: rounds,
    }
}

fn write_trace(dir: &PathBuf, replicate: usize, real: &Realization, m: &NetworkModel, spec: &SimSpec, busy: &[f64]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("replicate_{replicate:04}.csv"));
    let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let links = associate(real, m, spec.association, busy);
    writeln!(f, "user,x_m,y_m,home_operator,class,serving_station,serving_operator,distance_m,interference_w")
        .map_err(|e| Error::io(&path, e))?;
    for (idx, (u, link)) in real.users.iter().zip(&links).enumerate() {
        let (b, d, op, i) = match link {
            Some((b, d)) => (
                b.to_string(),
                format!("{d:.3}"),
                real.base_stations[*b].operator.to_string(),
                format!("{:.6e}", empirical_interference(real, m, u.position, *b, busy)),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        writeln!(f, "{idx},{:.3},{:.3},{},{},{b},{op},{d},{i}", u.position.x, u.position.y, u.operator, u.class)
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Where interferers' busy probabilities come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum BusyModel {
    /// Fixed per-operator probabilities, typically the analytical `τ̄_J^i / τ0_J`.
    Fixed(Vec<f64>),
    /// Estimated from the simulation itself.
    SelfConsistent,
}

/// Palm estimates of the ideal per-bit delays.
///
/// With [`BusyModel::SelfConsistent`] the iteration starts without interference and sets
/// each operator's busy probability to its estimated reference-class utilization
/// `τ̂_J^i / τ0_J` until the change falls below `busy_rel_tol` or `busy_iterations` rounds
/// have run. Every round reuses the same realizations.
pub fn simulate_palm_delay(m: &NetworkModel, spec: &SimSpec, busy_model: &BusyModel) -> Result<PalmEstimate> {
    spec.validate(m)?;
    let n = m.num_operators();
    let realizations: Vec<Realization> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| realize_network(m, spec, r))
        .collect::<Result<_>>()?;
    let (mut busy, fixed) = match busy_model {
        BusyModel::Fixed(b) => {
            if b.len() != n || b.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid("busy probabilities need one value in [0, 1] per operator"));
            }
            (b.clone(), true)
        }
        BusyModel::SelfConsistent => (vec![0.0; n], false),
    };
    let mut rounds = 0;
    loop {
        rounds += 1;
        let reps: Vec<ReplicateDelays> = realizations
            .par_iter()
            .map(|real| empirical_palm_delay(real, m, spec, &busy))
            .collect::<Result<_>>()?;
        let est = pooled(m, &reps, busy.clone(), rounds);
        let next = est.utilization.clone();
        let change = busy
            .iter()
            .zip(&next)
            .map(|(a, b)| if *b == 0.0 { (a - b).abs() } else { (a - b).abs() / b })
            .fold(0.0, f64::max);
        if fixed || rounds >= spec.busy_iterations.max(1) || change <= spec.busy_rel_tol {
            if let Some(dir) = &spec.trace_dir {
                for (r, real) in realizations.iter().enumerate() {
                    write_trace(dir, r, real, m, spec, &busy)?;
                }
            }
            return Ok(est);
        }
        busy = next;
    }
}

/// Fraction of users attached to each operator, with co-located ties broken uniformly.
pub fn empirical_serving_shares(m: &NetworkModel, spec: &SimSpec) -> Result<Vec<Estimate>> {
    spec.validate(m)?;
    let n = m.num_operators();
    let mut per_op = vec![Vec::with_capacity(spec.replicates); n];
    let mut totals = Vec::with_capacity(spec.replicates);
    for r in 0..spec.replicates {
        let real = realize_network(m, spec, r)?;
        let links = associate(&real, m, spec.association, &vec![0.0; n]);
        let mut counts = vec![0.0; n];
        for (b, _) in links.iter().flatten() {
            counts[real.base_stations[*b].operator] += 1.0;
        }
        totals.push(counts.iter().sum());
        for (i, c) in counts.into_iter().enumerate() {
            per_op[i].push(c);
        }
    }
    Ok(per_op.iter().map(|c| Estimate::ratio(c, &totals)).collect())
}

/// Campbell-sum estimate of the mean interference at a user whose serving station of
/// operator `op` is at distance `r`, when that operator's reference-class delay is `tau_ref`.
///
/// Interferers of intensity `β λ` are drawn outside the disk of radius `r` around the user,
/// each transmits with probability `τ_ref / τ0_J` on the user's channel with probability
/// `1 / k`. The window is a square of side `window_factor · r` centred on the user.
pub fn campbell_interference(
    m: &NetworkModel,
    op: usize,
    r: f64,
    tau_ref: f64,
    window_factor: f64,
    replicates: usize,
    seed: u64,
) -> Result<Estimate> {
    if op >= m.num_operators() || !(r > 0.0) || replicates < 2 {
        return Err(Error::invalid("Campbell oracle needs a valid operator, r > 0 and two replicates"));
    }
    let busy = tau_ref / m.reference_delay();
    if !(0.0..=1.0).contains(&busy) {
        return Err(Error::invalid(format!("busy probability {busy} outside [0, 1]")));
    }
    let side = window_factor * r;
    let window = Window {
        x0: -0.5 * side,
        y0: -0.5 * side,
        width: side,
        height: side,
    };
    let lambda = m.operators[op].active_intensity();
    let alpha = m.radio.pathloss_exponent;
    let k = f64::from(m.radio.reuse_factor);
    let samples: Vec<f64> = (0..replicates)
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            let points = sample_ppp_with(&mut rng, lambda, &window)?;
            Ok(points
                .iter()
                .filter_map(|p| {
                    let d2 = p.x * p.x + p.y * p.y;
                    let transmits = rng.random::<f64>() < busy && rng.random::<f64>() < 1.0 / k;
                    (d2 > r * r && transmits).then(|| m.radio.transmit_power_w * d2.powf(-0.5 * alpha))
                })
                .sum())
        })
        .collect::<Result<_>>()?;
    // Interferers beyond the window are missing; their share of the mean is roughly
    // (2 / window_factor)^(α-2).
    Ok(Estimate::from_samples(&samples))
}

/// Area power from the simulation alone: empirical active station density times the
/// per-station power at the simulated utilization.
pub fn empirical_network_power(m: &NetworkModel, spec: &SimSpec, est: &PalmEstimate) -> Result<Estimate> {
    let area = spec.window().area();
    let per_replicate: Vec<f64> = (0..spec.replicates)
        .map(|r| {
            let real = realize_network(m, spec, r)?;
            let mut total = 0.0;
            for bs in real.base_stations.iter().filter(|b| b.active) {
                let cfg = &m.operators[bs.operator];
                total += bs_power(est.utilization[bs.operator], &cfg.energy, m.radio.transmit_power_w)?;
            }
            Ok(total / area)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&per_replicate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tests::two_operator_model;
    use crate::domain::Noise;

    fn small_spec() -> SimSpec {
        SimSpec {
            window_side_m: 6000.0,
            replicates: 4,
            seed: 7,
            ..SimSpec::default()
        }
    }

    #[test]
    fn full_colocation_stacks_every_operator() {
        let mut m = two_operator_model();
        m.colocation_fraction = 1.0;
        let real = realize_network(&m, &small_spec(), 0).unwrap();
        let shared = real.base_stations.iter().filter(|b| b.site.is_some()).count();
        assert!(shared > 0);
        for pair in real.base_stations[..shared].chunks(2) {
            assert_eq!(pair[0].position, pair[1].position);
            assert_ne!(pair[0].operator, pair[1].operator);
        }
    }

    #[test]
    fn no_colocation_means_independent_sets() {
        let real = realize_network(&two_operator_model(), &small_spec(), 0).unwrap();
        assert!(real.base_stations.iter().all(|b| b.site.is_none()));
    }

    #[test]
    fn replicate_is_a_pure_function_of_seed_and_index() {
        let m = two_operator_model();
        let a = realize_network(&m, &small_spec(), 3).unwrap();
        let b = realize_network(&m, &small_spec(), 3).unwrap();
        let c = realize_network(&m, &small_spec(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    fn lone_station_model() -> (NetworkModel, Realization) {
        let mut m = two_operator_model().single_operator(0, 1e-6);
        m.radio.noise = Noise::Power(1e-12);
        let real = Realization {
            window: Window::square(1000.0),
            base_stations: vec![BaseStation {
                position: Point::new(500.0, 500.0),
                operator: 0,
                site: None,
                active: true,
                channel: 0,
                busy_draw: 0.5,
            }],
            users: vec![User {
                position: Point::new(600.0, 500.0),
                operator: 0,
                class: 0,
                tie_draw: 0.1,
            }],
        };
        (m, real)
    }

    #[test]
    fn lone_user_delay_is_inverse_capacity() {
        let (m, real) = lone_station_model();
        let d = empirical_palm_delay(&real, &m, &SimSpec::default(), &[1.0]).unwrap();
        let c = crate::radio::shannon_capacity(100.0, 0.0, &m.radio, 20e6).unwrap();
        assert!((d.sums[0][0] - 1.0 / c).abs() < 1e-15 / c.min(1.0));
    }

    #[test]
    fn two_users_share_time() {
        let (m, mut real) = lone_station_model();
        let solo = empirical_palm_delay(&real, &m, &SimSpec::default(), &[1.0]).unwrap().sums[0][0];
        // Mirror image at the same distance.
        real.users.push(User {
            position: Point::new(400.0, 500.0),
            ..real.users[0]
        });
        let pair = empirical_palm_delay(&real, &m, &SimSpec::default(), &[1.0]).unwrap();
        assert!((pair.sums[0][0] / 2.0 - 2.0 * solo).abs() < 1e-12 * solo);
    }

    #[test]
    fn interference_zero_without_active_peers() {
        let m = two_operator_model().with_active_fractions(&[1.0, 0.0]);
        let real = realize_network(&m, &small_spec(), 1).unwrap();
        let serving = real
            .base_stations
            .iter()
            .position(|b| b.operator == 1)
            .unwrap();
        let i = empirical_interference(&real, &m, Point::new(10.0, 10.0), serving, &[1.0, 1.0]);
        assert_eq!(i, 0.0);
    }

    #[test]
    fn interference_linear_in_power() {
        let m = two_operator_model();
        let real = realize_network(&m, &small_spec(), 2).unwrap();
        let serving = 0;
        let base = empirical_interference(&real, &m, Point::new(10.0, 10.0), serving, &[1.0, 1.0]);
        let mut loud = m.clone();
        loud.radio.transmit_power_w *= 3.0;
        let tripled = empirical_interference(&real, &loud, Point::new(10.0, 10.0), serving, &[1.0, 1.0]);
        assert!(base > 0.0 && (tripled / base - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_association_on_torus() {
        let (m, mut real) = lone_station_model();
        real.base_stations.push(BaseStation {
            position: Point::new(10.0, 500.0),
            ..real.base_stations[0]
        });
        real.users[0].position = Point::new(990.0, 500.0);
        let links = associate(&real, &m, Association::Nearest, &[0.0]);
        // Across the seam the second station is 20 m away.
        assert_eq!(links[0].unwrap().0, 1);
        assert!((links[0].unwrap().1 - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ratio_estimator_of_constant_ratio() {
        let e = Estimate::ratio(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!(e.se.abs() < 1e-15);
    }

    #[test]
    fn window_must_hold_ten_cells() {
        let spec = SimSpec {
            window_side_m: 1000.0,
            ..SimSpec::default()
        };
        assert!(spec.validate(&two_operator_model()).is_err());
    }
}
