//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |I|)`. The error estimate follows
//! the QUADPACK `qk15` heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Controls for every numerical integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Improper integrals are cut where the Gaussian factor falls below `exp(-m² π)`.
    pub truncation_multiplier: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-300,
            max_subdivisions: 200,
            truncation_multiplier: 6.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("quadrature needs at least one subdivision"));
        }
        if !(self.truncation_multiplier >= 3.0) {
            return Err(Error::invalid("truncation multiplier must be at least 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    /// Final partition, sorted by lower bound.
    pub segments: Vec<Segment>,
}

/// Abscissae of the 15-point Kronrod panel on `[a, b]`: the centre first, then
/// `center - dx_j`, `center + dx_j` pairs.
pub fn panel_nodes(a: f64, b: f64) -> [f64; 15] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut x = [center; 15];
    for j in 0..7 {
        x[1 + 2 * j] = center - half * XGK[j];
        x[2 + 2 * j] = center + half * XGK[j];
    }
    x
}

/// Kronrod value and error estimate from integrand values at [`panel_nodes`].
pub fn panel_estimate(a: f64, b: f64, fv: &[f64; 15]) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let fc = fv[0];
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    for j in 0..7 {
        let (f1, f2) = (fv[1 + 2 * j], fv[2 + 2 * j]);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[1 + 2 * j] - mean).abs() + (fv[2 + 2 * j] - mean).abs());
    }
    let value = res_k * half;
    res_asc *= half.abs();
    res_abs *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && round > err {
        err = round;
    }
    (value, err)
}

/// One 15-point Kronrod panel on `[a, b]`, returning `(value, error estimate)`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let x = panel_nodes(a, b);
    let mut fv = [0.0; 15];
    for (v, &xi) in fv.iter_mut().zip(&x) {
        *v = f(xi);
    }
    panel_estimate(a, b, &fv)
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            segments: Vec::new(),
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut segments = vec![Segment {
        lower: a,
        upper: b,
        value: v,
        error: e,
    }];
    let mut evaluations = 15;
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::invalid(format!("non-finite integrand on [{a}, {b}]")));
        }
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target || error <= 50.0 * f64::EPSILON * value.abs() {
            segments.sort_by(|s, t| s.lower.total_cmp(&t.lower));
            return Ok(Integral {
                value,
                error,
                evaluations,
                segments,
            });
        }
        let (worst, seg) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, s)| (i, *s))
            .expect("non-empty partition");
        let mid = 0.5 * (seg.lower + seg.upper);
        if segments.len() >= max_subdivisions || mid <= seg.lower || mid >= seg.upper {
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                subdivisions: segments.len(),
                estimate: value,
                error,
            });
        }
        let (v1, e1) = gk15(&mut f, seg.lower, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.upper);
        evaluations += 30;
        segments[worst] = Segment {
            lower: seg.lower,
            upper: mid,
            value: v1,
            error: e1,
        };
        segments.push(Segment {
            lower: mid,
            upper: seg.upper,
            value: v2,
            error: e2,
        });
    }
}

/// Re-evaluates `f` on a fixed partition, returning `(value, summed error estimate)`.
pub fn integrate_on<F: FnMut(f64) -> f64>(mut f: F, segments: &[Segment]) -> (f64, f64) {
    segments.iter().fold((0.0, 0.0), |(v, e), s| {
        let (sv, se) = gk15(&mut f, s.lower, s.upper);
        (v + sv, e + se)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-12, 1e-300, 10).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_and_kink() {
        let r = integrate(|x| (-PI * x * x).exp() * 2.0 * PI * x, 0.0, 6.0, 1e-10, 1e-300, 100)
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let k = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10, 1e-300, 200).unwrap();
        assert!((k.value - (0.045 + 0.245)).abs() < 1e-9);
    }

    #[test]
    fn exhausted_subdivisions_is_an_error() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-14, 1e-300, 3);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn fixed_partition_reproduces_value() {
        let f = |x: f64| x.sin().exp();
        let r = integrate(f, 0.0, 3.0, 1e-10, 1e-300, 50).unwrap();
        let (v, _) = integrate_on(f, &r.segments);
        assert!((v - r.value).abs() < 1e-13);
    }
}
