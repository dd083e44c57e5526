//! Voronoi cell areas clipped to a rectangle.

use serde::{Deserialize, Serialize};
use voronoice::{BoundingBox, ClipBehavior, VoronoiBuilder};

use crate::error::{Error, Result};

/// Axis-aligned study area, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Bounding box of `points` padded by `pad` times its larger side.
    pub fn around(points: &[(f64, f64)], pad: f64) -> Result<Self> {
        let mut b = Bounds {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for &(x, y) in points {
            b.x_min = b.x_min.min(x);
            b.y_min = b.y_min.min(y);
            b.x_max = b.x_max.max(x);
            b.y_max = b.y_max.max(y);
        }
        let side = (b.x_max - b.x_min).max(b.y_max - b.y_min);
        if !(side > 0.0) {
            return Err(Error::invalid("sites span no area; set explicit bounds"));
        }
        let p = pad * side;
        Ok(Bounds {
            x_min: b.x_min - p,
            y_min: b.y_min - p,
            x_max: b.x_max + p,
            y_max: b.y_max + p,
        })
    }
}

fn polygon_area<'a>(vertices: impl Iterator<Item = &'a voronoice::Point>) -> f64 {
    let v: Vec<_> = vertices.collect();
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}

/// Area of each point's Voronoi cell within `bounds`, in input order.
///
/// Points must be distinct and inside `bounds`; at least three non-collinear points are
/// needed.
pub fn cell_areas(points: &[(f64, f64)], bounds: &Bounds) -> Result<Vec<f64>> {
    if let Some(p) = points.iter().find(|p| !bounds.contains(p.0, p.1)) {
        return Err(Error::invalid(format!("site at ({}, {}) lies outside the study area", p.0, p.1)));
    }
    let sites = points
        .iter()
        .map(|&(x, y)| voronoice::Point { x, y })
        .collect();
    let center = voronoice::Point {
        x: 0.5 * (bounds.x_min + bounds.x_max),
        y: 0.5 * (bounds.y_min + bounds.y_max),
    };
    let voronoi = VoronoiBuilder::default()
        .set_sites(sites)
        .set_bounding_box(BoundingBox::new(
            center,
            bounds.x_max - bounds.x_min,
            bounds.y_max - bounds.y_min,
        ))
        .set_clip_behavior(ClipBehavior::Clip)
        .build()
        .ok_or_else(|| Error::invalid("Voronoi tessellation needs at least three non-collinear sites"))?;
    let areas: Vec<f64> = voronoi
        .iter_cells()
        .map(|c| polygon_area(c.iter_vertices()))
        .collect();
    let total: f64 = areas.iter().sum();
    if (total - bounds.area()).abs() > 1e-6 * bounds.area() {
        return Err(Error::invalid(format!(
            "Voronoi cells cover {total} m² of a {} m² study area",
            bounds.area()
        )));
    }
    Ok(areas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_cells_are_equal() {
        let b = Bounds {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 300.0,
            y_max: 300.0,
        };
        let pts: Vec<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (50.0 + 100.0 * i as f64, 50.0 + 100.0 * j as f64)))
            .collect();
        for a in cell_areas(&pts, &b).unwrap() {
            assert!((a - 10_000.0).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_sites_rejected() {
        let b = Bounds {
            x_min: -10.0,
            y_min: -10.0,
            x_max: 10.0,
            y_max: 10.0,
        };
        assert!(cell_areas(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], &b).is_err());
    }

    proptest! {
        #[test]
        fn cells_tile_the_study_area(seed in 0u64..1000, n in 5usize..60) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = Bounds { x_min: 0.0, y_min: 0.0, x_max: 1000.0, y_max: 600.0 };
            let pts: Vec<_> = (0..n).map(|_| (rng.random_range(0.0..1000.0), rng.random_range(0.0..600.0))).collect();
            let areas = cell_areas(&pts, &b).unwrap();
            prop_assert!(areas.iter().all(|&a| a > 0.0));
            prop_assert!((areas.iter().sum::<f64>() - 600_000.0).abs() < 1e-6 * 600_000.0);
        }
    }
}
