use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle `[x0, x0 + width) × [y0, y0 + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Window {
    pub fn square(side: f64) -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            width: side,
            height: side,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    fn check(&self) -> Result<()> {
        let ok = [self.x0, self.y0, self.width, self.height]
            .iter()
            .all(|v| v.is_finite())
            && self.width > 0.0
            && self.height > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate window {self:?}")))
        }
    }

    /// Squared distance on the torus obtained by identifying opposite edges.
    #[inline]
    pub fn torus_dist2(&self, a: Point, b: Point) -> f64 {
        let mut dx = (a.x - b.x).abs();
        let mut dy = (a.y - b.y).abs();
        if dx > 0.5 * self.width {
            dx = self.width - dx;
        }
        if dy > 0.5 * self.height {
            dy = self.height - dy;
        }
        dx * dx + dy * dy
    }
}

/// Homogeneous PPP of intensity `lambda` on `window`, drawn from `rng`.
pub fn sample_ppp_with<R: Rng + ?Sized>(rng: &mut R, lambda: f64, window: &Window) -> Result<Vec<Point>> {
    window.check()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("PPP intensity must be non-negative, got {lambda}")));
    }
    let mean = lambda * window.area();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("Poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    Ok((0..count)
        .map(|_| {
            Point::new(
                window.x0 + window.width * rng.random::<f64>(),
                window.y0 + window.height * rng.random::<f64>(),
            )
        })
        .collect())
}

/// Homogeneous PPP of intensity `lambda` on `window`; identical seeds give identical point sets.
pub fn sample_ppp(lambda: f64, window: &Window, seed: u64) -> Result<Vec<Point>> {
    sample_ppp_with(&mut ChaCha8Rng::seed_from_u64(seed), lambda, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        assert!(sample_ppp(0.0, &Window::square(10.0), 1).unwrap().is_empty());
    }

    #[test]
    fn degenerate_window_rejected() {
        assert!(sample_ppp(1.0, &Window::square(0.0), 1).is_err());
        assert!(sample_ppp(-1.0, &Window::square(1.0), 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let w = Window::square(100.0);
        assert_eq!(sample_ppp(0.01, &w, 9).unwrap(), sample_ppp(0.01, &w, 9).unwrap());
        assert_ne!(sample_ppp(0.01, &w, 9).unwrap(), sample_ppp(0.01, &w, 10).unwrap());
    }

    #[test]
    fn mean_count_matches_poisson() {
        // λ·area = 50; the mean of 10⁴ counts has standard error sqrt(50/10⁴).
        let w = Window::square(10.0);
        let n = 10_000;
        let total: usize = (0..n).map(|s| sample_ppp(0.5, &w, s).unwrap().len()).sum();
        let mean = total as f64 / n as f64;
        let se = (50.0f64 / n as f64).sqrt();
        assert!((mean - 50.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn points_inside_window() {
        let w = Window {
            x0: -5.0,
            y0: 2.0,
            width: 3.0,
            height: 7.0,
        };
        for p in sample_ppp(4.0, &w, 3).unwrap() {
            assert!(p.x >= -5.0 && p.x < -2.0 && p.y >= 2.0 && p.y < 9.0);
        }
    }

    #[test]
    fn torus_distance_wraps() {
        let w = Window::square(10.0);
        let d2 = w.torus_dist2(Point::new(0.5, 0.5), Point::new(9.5, 9.5));
        assert!((d2 - 2.0).abs() < 1e-12);
    }
}
