//! Log-barrier interior-point minimization on the unit box with black-box constraints.
//!
//! Minimizes `f(x)` subject to `c_k(x) ≤ 0` and `0 ≤ x ≤ 1` where `f` and `c`
//! are only available by evaluation. Derivatives come from finite differences
//! of `f` and `c`; the barrier terms are differentiated analytically, so the
//! Newton system stays accurate as iterates approach the boundary.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Objective and constraint values at a point, `None` outside the evaluation domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub constraints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierOptions {
    pub fd_step: f64,
    pub mu_initial: f64,
    pub mu_final: f64,
    pub mu_factor: f64,
    pub max_newton_iters: usize,
    /// Newton stage stops once half the squared Newton decrement falls below this.
    pub newton_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            fd_step: 1e-4,
            mu_initial: 1e-1,
            mu_final: 1e-9,
            mu_factor: 0.2,
            max_newton_iters: 50,
            newton_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierOutcome {
    pub x: Vec<f64>,
    pub evaluation: Evaluation,
    pub newton_iterations: usize,
    /// Infinity norm of the barrier gradient at the last stage.
    pub stationarity: f64,
    /// `μ` times the number of barrier terms at the last stage; bounds the suboptimality of a
    /// convex problem.
    pub duality_gap: f64,
}

struct Derivatives {
    eval: Evaluation,
    grad_f: DVector<f64>,
    grad_c: Vec<DVector<f64>>,
    hess_f: DMatrix<f64>,
    hess_c: Vec<DMatrix<f64>>,
}

/// Inward step along coordinate `i`: central when both neighbours fit in the box.
#[derive(Clone, Copy)]
enum Stencil {
    Central(f64),
    OneSided(f64),
}

fn stencil(x: f64, h: f64) -> Stencil {
    if x - h >= 0.0 && x + h <= 1.0 {
        Stencil::Central(h)
    } else if x + 2.0 * h <= 1.0 {
        Stencil::OneSided(h)
    } else {
        Stencil::OneSided(-h)
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// Finite-difference gradients and Hessians of `f` and every `c_k`, reading values as one
/// vector `[f, c_1, ..., c_m]` per stencil point.
fn derivatives<F>(eval: &mut F, x: &[f64], h: f64) -> Option<Derivatives>
where
    F: FnMut(&[f64]) -> Option<Evaluation>,
{
    let n = x.len();
    let centre = eval(x)?;
    let m = centre.constraints.len();
    let as_vec = |e: &Evaluation| {
        let mut v = Vec::with_capacity(m + 1);
        v.push(e.objective);
        v.extend_from_slice(&e.constraints);
        v
    };
    let f0 = as_vec(&centre);
    let value = |moves: &[(usize, f64)], eval: &mut F| -> Option<Vec<f64>> {
        eval(&shifted(x, moves)).map(|e| as_vec(&e))
    };
    let stencils: Vec<Stencil> = x.iter().map(|&xi| stencil(xi, h)).collect();
    let mut grad = vec![vec![0.0; n]; m + 1];
    let mut hess = vec![vec![vec![0.0; n]; n]; m + 1];
    // One-sided points along each axis, kept for the mixed terms.
    let mut axis: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for i in 0..n {
        match stencils[i] {
            Stencil::Central(s) => {
                let plus = value(&[(i, s)], eval)?;
                let minus = value(&[(i, -s)], eval)?;
                for k in 0..=m {
                    grad[k][i] = (plus[k] - minus[k]) / (2.0 * s);
                    hess[k][i][i] = (plus[k] - 2.0 * f0[k] + minus[k]) / (s * s);
                }
                axis.push((s, plus));
            }
            Stencil::OneSided(s) => {
                let one = value(&[(i, s)], eval)?;
                let two = value(&[(i, 2.0 * s)], eval)?;
                for k in 0..=m {
                    grad[k][i] = (-3.0 * f0[k] + 4.0 * one[k] - two[k]) / (2.0 * s);
                    hess[k][i][i] = (two[k] - 2.0 * one[k] + f0[k]) / (s * s);
                }
                axis.push((s, one));
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let both_central =
                matches!(stencils[i], Stencil::Central(_)) && matches!(stencils[j], Stencil::Central(_));
            if both_central {
                let (si, sj) = (axis[i].0, axis[j].0);
                let pp = value(&[(i, si), (j, sj)], eval)?;
                let pm = value(&[(i, si), (j, -sj)], eval)?;
                let mp = value(&[(i, -si), (j, sj)], eval)?;
                let mm = value(&[(i, -si), (j, -sj)], eval)?;
                for k in 0..=m {
                    let v = (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * si * sj);
                    hess[k][i][j] = v;
                    hess[k][j][i] = v;
                }
            } else {
                let (si, sj) = (axis[i].0, axis[j].0);
                let both = value(&[(i, si), (j, sj)], eval)?;
                for k in 0..=m {
                    let v = (both[k] - axis[i].1[k] - axis[j].1[k] + f0[k]) / (si * sj);
                    hess[k][i][j] = v;
                    hess[k][j][i] = v;
                }
            }
        }
    }
    let to_matrix = |h: &Vec<Vec<f64>>| DMatrix::from_fn(n, n, |r, c| h[r][c]);
    Some(Derivatives {
        grad_f: DVector::from_vec(grad[0].clone()),
        grad_c: grad[1..].iter().map(|g| DVector::from_vec(g.clone())).collect(),
        hess_f: to_matrix(&hess[0]),
        hess_c: hess[1..].iter().map(to_matrix).collect(),
        eval: centre,
    })
}

fn barrier_value(x: &[f64], e: &Evaluation, mu: f64) -> f64 {
    let mut phi = e.objective;
    for &c in &e.constraints {
        if !(c < 0.0) {
            return f64::INFINITY;
        }
        phi -= mu * (-c).ln();
    }
    for &xi in x {
        if !(xi > 0.0 && xi < 1.0) {
            return f64::INFINITY;
        }
        phi -= mu * (xi.ln() + (1.0 - xi).ln());
    }
    if phi.is_finite() {
        phi
    } else {
        f64::INFINITY
    }
}

fn barrier_point<F>(eval: &mut F, x: &[f64], mu: f64) -> f64
where
    F: FnMut(&[f64]) -> Option<Evaluation>,
{
    if x.iter().any(|&xi| !(xi > 0.0 && xi < 1.0)) {
        return f64::INFINITY;
    }
    eval(x).map_or(f64::INFINITY, |e| barrier_value(x, &e, mu))
}

fn barrier_newton_system(x: &[f64], d: &Derivatives, mu: f64) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut g = d.grad_f.clone();
    let mut h = d.hess_f.clone();
    for (k, &c) in d.eval.constraints.iter().enumerate() {
        let gc = &d.grad_c[k];
        g += gc * (mu / -c);
        h += (gc * gc.transpose()) * (mu / (c * c)) + &d.hess_c[k] * (mu / -c);
    }
    for i in 0..n {
        let xi = x[i];
        g[i] -= mu * (1.0 / xi - 1.0 / (1.0 - xi));
        h[(i, i)] += mu * (1.0 / (xi * xi) + 1.0 / ((1.0 - xi) * (1.0 - xi)));
    }
    (g, h)
}

/// Solves `H d = -g`, shifting `H` by a multiple of the identity until it is positive definite.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
    let n = g.len();
    let scale = h.diagonal().abs().max().max(1e-300);
    let mut shift = 0.0;
    for _ in 0..60 {
        let shifted = h + DMatrix::identity(n, n) * shift;
        if let Some(chol) = shifted.cholesky() {
            let d = chol.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
    }
    -g / scale
}

/// Largest step in `(0, 1]` that keeps `x + a d` strictly inside the box.
fn fraction_to_boundary(x: &[f64], d: &DVector<f64>) -> f64 {
    let mut a: f64 = 1.0;
    for (i, &xi) in x.iter().enumerate() {
        if d[i] < 0.0 {
            a = a.min(0.99 * xi / -d[i]);
        } else if d[i] > 0.0 {
            a = a.min(0.99 * (1.0 - xi) / d[i]);
        }
    }
    a
}

/// Minimizes from a strictly feasible interior start `x0`.
///
/// Returns `None` if `x0` is not strictly feasible or the objective cannot be evaluated there.
pub fn minimize<F>(mut eval: F, x0: &[f64], opts: &BarrierOptions) -> Option<BarrierOutcome>
where
    F: FnMut(&[f64]) -> Option<Evaluation>,
{
    let mut x = x0.to_vec();
    let start = eval(&x)?;
    if !barrier_value(&x, &start, opts.mu_initial).is_finite() {
        return None;
    }
    let mut mu = opts.mu_initial;
    let mut newton_iterations = 0;
    let mut stationarity = f64::INFINITY;
    loop {
        for _ in 0..opts.max_newton_iters {
            let mut h = opts.fd_step;
            let derivs = loop {
                if let Some(d) = derivatives(&mut eval, &x, h) {
                    break Some(d);
                }
                h *= 0.1;
                if h < opts.fd_step * 1e-4 {
                    break None;
                }
            };
            let Some(derivs) = derivs else { break };
            let (g, hess) = barrier_newton_system(&x, &derivs, mu);
            stationarity = g.amax();
            let d = newton_direction(&g, &hess);
            let slope = g.dot(&d);
            let phi0 = barrier_value(&x, &derivs.eval, mu);
            if -slope / 2.0 <= opts.newton_tol {
                // Converged; the last full step is kept when it does not increase the barrier.
                if fraction_to_boundary(&x, &d) >= 1.0 {
                    let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + di).collect();
                    if barrier_point(&mut eval, &trial, mu) <= phi0 {
                        x = trial;
                    }
                }
                break;
            }
            newton_iterations += 1;
            let mut a = fraction_to_boundary(&x, &d);
            let mut accepted = false;
            for _ in 0..50 {
                let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(xi, di)| xi + a * di).collect();
                let phi = barrier_point(&mut eval, &trial, mu);
                if phi <= phi0 + 1e-4 * a * slope {
                    x = trial;
                    accepted = true;
                    break;
                }
                a *= 0.5;
            }
            if !accepted || a * d.amax() < 1e-14 {
                break;
            }
        }
        if mu <= opts.mu_final {
            break;
        }
        mu = (mu * opts.mu_factor).max(opts.mu_final);
    }
    let evaluation = eval(&x)?;
    let terms = evaluation.constraints.len() + 2 * x.len();
    Some(BarrierOutcome {
        x,
        evaluation,
        newton_iterations,
        stationarity,
        duality_gap: mu * terms as f64,
    })
}
