//! Planar stochastic-geometry primitives for a homogeneous Poisson network.
//!
//! The serving-cell geometry is set up with the serving base station at the
//! origin and the typical user at `(0, -r)`. A point at polar coordinates
//! `(x, θ)` belongs to the serving cell when no other base station lies in
//! the disk of radius `x` around it; since the disk of radius `r` around the
//! user is known to be empty, the void probability only involves the part of
//! that disk outside the user's disk, [`exclusion_area`].

pub mod ppp;
pub mod quadrature;

use std::f64::consts::{FRAC_PI_2, PI};

pub use ppp::{sample_ppp, sample_ppp_with, Point, Window};
pub use quadrature::QuadratureSpec;

use crate::error::{Error, Result};

/// Density of the distance from a typical user to the nearest point of a PPP of intensity `lambda`.
pub fn nearest_bs_pdf(r: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("BS intensity must be positive, got {lambda}")));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("distance must be non-negative, got {r}")));
    }
    Ok((-lambda * PI * r * r).exp() * lambda * 2.0 * PI * r)
}

/// Intersection area of two disks with radii `r1`, `r2` whose centres are `d` apart.
pub fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return PI * small * small;
    }
    let c1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0);
    let c2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0);
    let k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    let area = r1 * r1 * c1.acos() + r2 * r2 * c2.acos() - 0.5 * k.max(0.0).sqrt();
    area.clamp(0.0, PI * small * small)
}

/// Distance between the point at polar `(x, θ)` and the user at `(0, -r)`, given `sin θ`.
#[inline]
fn user_distance(r: f64, x: f64, sin_theta: f64) -> f64 {
    (x * x + r * r + 2.0 * x * r * sin_theta).max(0.0).sqrt()
}

#[inline]
pub(crate) fn exclusion_area_sin(r: f64, x: f64, sin_theta: f64) -> f64 {
    let disk = PI * x * x;
    let d = user_distance(r, x, sin_theta);
    (disk - lens_area(x, r, d)).clamp(0.0, disk)
}

/// Area of the disk of radius `x` centred at polar `(x, θ)` that lies outside the disk of
/// radius `r` centred at the user `(0, -r)`.
pub fn exclusion_area(r: f64, x: f64, theta: f64) -> Result<f64> {
    if r.is_nan() || x.is_nan() || theta.is_nan() {
        return Err(Error::invalid("exclusion area arguments must not be NaN"));
    }
    if r < 0.0 || x < 0.0 {
        return Err(Error::invalid(format!(
            "exclusion area needs r >= 0 and x >= 0 (got r={r}, x={x})"
        )));
    }
    Ok(exclusion_area_sin(r, x, theta.sin()))
}

/// Truncation radius for integrals with Gaussian factor `exp(-λ π x²)` offset by the user's disk.
pub fn truncation_radius(r: f64, lambda: f64, q: &QuadratureSpec) -> f64 {
    let m = q.truncation_multiplier;
    (m * m / lambda + r * r).sqrt()
}

/// Mean area of the serving Voronoi cell seen by a user at distance `r` from its base
/// station, for a superposed active network of intensity `lambda`:
///
/// `h(r) = ∫₀^∞ ∫₀^{2π} exp(-λ A(r, x, θ)) x dθ dx`.
pub fn mean_cell_area_weight(r: f64, lambda: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("BS intensity must be positive, got {lambda}")));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("distance must be non-negative, got {r}")));
    }
    q.validate()?;
    let x_max = truncation_radius(r, lambda, q);
    let inner_rel = 0.1 * q.rel_tol;
    // Absolute inner tolerance relative to the largest possible inner value (π).
    let inner_abs = 1e-3 * q.rel_tol * PI;
    let mut failure = None;
    let outer = quadrature::integrate(
        |x| {
            if x == 0.0 || failure.is_some() {
                return 0.0;
            }
            // The integrand depends on θ through sin θ only: mirror symmetric about θ = π/2.
            let inner = quadrature::integrate(
                |theta: f64| (-lambda * exclusion_area_sin(r, x, theta.sin())).exp(),
                -FRAC_PI_2,
                FRAC_PI_2,
                inner_rel,
                inner_abs,
                q.max_subdivisions,
            );
            match inner {
                Ok(i) => 2.0 * i.value * x,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        0.0,
        x_max,
        q.rel_tol,
        q.abs_tol,
        q.max_subdivisions,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outer?.value)
}
