//! Synthetic scenario files with a diurnal traffic cycle.
//!
//! The study area is a row of vertical strips, one district each. Every operator places
//! a fixed number of sites uniformly at random in each strip; a share of them are paired
//! across operators on common coordinates and flagged as co-located. Each site carries an
//! equal share of its operator's users, scaled over the day by a raised-cosine profile
//! whose peak-to-trough ratio is configurable.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Bounds, ClassRate, Coordinates, ModelTemplate, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureOperator {
    pub id: String,
    pub sites_per_km2: f64,
    /// Mean concurrent users per km² at the weekday peak.
    pub peak_users_per_km2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureDistrict {
    pub district_id: String,
    pub population_density_per_km2: f64,
    pub urban: bool,
    pub width_m: f64,
    pub operators: Vec<FixtureOperator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiurnalFixture {
    pub seed: u64,
    pub height_m: f64,
    pub districts: Vec<FixtureDistrict>,
    /// Target share of sites flagged as co-located.
    pub colocated_fraction: f64,
    pub peak_to_trough: f64,
    pub peak_slot: usize,
    pub slots_per_day: usize,
    pub slot_seconds: f64,
    /// `(class, rate, share of users)`; the last class is the reference.
    pub classes: Vec<(String, f64, f64)>,
    /// Weekend volume relative to the weekday at every slot, for ordinary sites.
    pub weekend_factor: f64,
    /// Share of each operator's sites with a business profile.
    pub business_fraction: f64,
    /// Weekend volume relative to the weekday for business sites.
    pub business_weekend_factor: f64,
    pub model: ModelTemplate,
}

impl Default for DiurnalFixture {
    /// Three 4 km strips (urban, suburban, rural) of 12 km, two operators, with networks
    /// dimensioned so that the weekday peak needs almost every site without sharing.
    fn default() -> Self {
        let district = |id: &str, density: f64, urban: bool, scale: f64| FixtureDistrict {
            district_id: id.into(),
            population_density_per_km2: density,
            urban,
            width_m: 4000.0,
            operators: vec![
                FixtureOperator {
                    id: "mno-a".into(),
                    sites_per_km2: 5.0 * scale,
                    peak_users_per_km2: 150.0 * scale,
                },
                FixtureOperator {
                    id: "mno-b".into(),
                    sites_per_km2: 4.0 * scale,
                    peak_users_per_km2: 105.0 * scale,
                },
            ],
        };
        Self {
            seed: 2024,
            height_m: 12_000.0,
            districts: vec![
                district("paris-01", 20_000.0, true, 1.0),
                district("suburb-1", 9_000.0, false, 0.5),
                district("rural-1", 3_000.0, false, 0.2),
            ],
            colocated_fraction: 0.3,
            peak_to_trough: 14.0,
            peak_slot: 80,
            slots_per_day: super::SLOTS_PER_DAY,
            slot_seconds: super::SLOT_SECONDS,
            classes: vec![
                ("H".into(), 5e6, 0.05),
                ("M".into(), 0.2e6, 0.25),
                ("L".into(), 0.05e6, 0.70),
            ],
            weekend_factor: 0.9,
            business_fraction: 0.064,
            business_weekend_factor: 0.4,
            model: ModelTemplate::default(),
        }
    }
}

/// Raised-cosine daily profile in `[1/ratio, 1]`, maximal at `peak_slot` and minimal half a day later.
pub fn diurnal_profile(slot: usize, slots_per_day: usize, peak_slot: usize, ratio: f64) -> f64 {
    let phase = 2.0 * PI * (slot as f64 - peak_slot as f64) / slots_per_day as f64;
    let trough = 1.0 / ratio;
    trough + (1.0 - trough) * 0.5 * (1.0 + phase.cos())
}

struct PlacedSite {
    id: String,
    operator: String,
    x: f64,
    y: f64,
    colocated: bool,
    district: String,
    /// Peak users of each class.
    peak_users: f64,
    business: bool,
}

impl DiurnalFixture {
    pub fn validate(&self) -> Result<()> {
        if self.districts.is_empty() || !(self.height_m > 0.0) {
            return Err(Error::invalid("fixture needs districts and a positive height"));
        }
        if !(self.peak_to_trough >= 1.0) || self.peak_slot >= self.slots_per_day {
            return Err(Error::invalid("peak_to_trough must be >= 1 and peak_slot within the day"));
        }
        if !(0.0..=1.0).contains(&self.colocated_fraction) || !(0.0..=1.0).contains(&self.business_fraction) {
            return Err(Error::invalid("fractions must lie in [0, 1]"));
        }
        let share: f64 = self.classes.iter().map(|c| c.2).sum();
        if (share - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("class shares must sum to 1"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            x_min: 0.0,
            y_min: 0.0,
            x_max: self.districts.iter().map(|d| d.width_m).sum(),
            y_max: self.height_m,
        }
    }

    fn place(&self) -> Vec<PlacedSite> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut sites = Vec::new();
        let mut x0 = 0.0;
        for d in &self.districts {
            let area_km2 = d.width_m * self.height_m * 1e-6;
            let counts: Vec<usize> = d
                .operators
                .iter()
                .map(|o| ((o.sites_per_km2 * area_km2).round() as usize).max(1))
                .collect();
            let total: usize = counts.iter().sum();
            let n_ops = counts.len();
            // Every shared position flags one site per operator.
            let shared = if n_ops > 1 {
                ((self.colocated_fraction * total as f64 / n_ops as f64).round() as usize)
                    .min(*counts.iter().min().expect("operators"))
            } else {
                0
            };
            let draw = |rng: &mut ChaCha8Rng| {
                (
                    x0 + rng.random::<f64>() * d.width_m,
                    rng.random::<f64>() * self.height_m,
                )
            };
            let shared_xy: Vec<(f64, f64)> = (0..shared).map(|_| draw(&mut rng)).collect();
            for (o, op) in d.operators.iter().enumerate() {
                let n = counts[o];
                let per_site = op.peak_users_per_km2 * area_km2 / n as f64;
                let business = (self.business_fraction * n as f64).round() as usize;
                for k in 0..n {
                    let (xy, colocated) = if k < shared {
                        (shared_xy[k], true)
                    } else {
                        (draw(&mut rng), false)
                    };
                    sites.push(PlacedSite {
                        id: format!("{}-{}-{k:04}", d.district_id, op.id),
                        operator: op.id.clone(),
                        x: xy.0,
                        y: xy.1,
                        colocated,
                        district: d.district_id.clone(),
                        peak_users: per_site,
                        // Business sites are spread over the index range, not clustered.
                        business: business > 0 && k * business / n != (k + 1) * business / n,
                    });
                }
            }
            x0 += d.width_m;
        }
        sites
    }

    /// Writes `sites.csv`, `traffic.csv`, `districts.csv` and `scenario.toml` into `dir` and
    /// returns the scenario configuration.
    pub fn write(&self, dir: &Path) -> Result<ScenarioConfig> {
        self.validate()?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let sites = self.place();
        let mut s = String::from("site_id,operator_id,x,y,colocated,district_id\n");
        for p in &sites {
            writeln!(s, "{},{},{:.3},{:.3},{},{}", p.id, p.operator, p.x, p.y, u8::from(p.colocated), p.district)
                .expect("write to string");
        }
        write_file(&dir.join("sites.csv"), &s)?;

        let mut t = String::from("site_id,day,slot,class,volume_bits\n");
        for p in &sites {
            for (day, factor) in [
                ("weekday", 1.0),
                (
                    "weekend",
                    if p.business { self.business_weekend_factor } else { self.weekend_factor },
                ),
            ] {
                for slot in 0..self.slots_per_day {
                    let f = factor * diurnal_profile(slot, self.slots_per_day, self.peak_slot, self.peak_to_trough);
                    for (label, rate, share) in &self.classes {
                        let volume = p.peak_users * f * share * rate * self.slot_seconds;
                        writeln!(t, "{},{day},{slot},{label},{volume}", p.id).expect("write to string");
                    }
                }
            }
        }
        write_file(&dir.join("traffic.csv"), &t)?;

        let mut d = String::from("district_id,population_density_per_km2\n");
        for district in &self.districts {
            writeln!(d, "{},{}", district.district_id, district.population_density_per_km2).expect("write to string");
        }
        write_file(&dir.join("districts.csv"), &d)?;

        let mut config = ScenarioConfig::new("sites.csv", "traffic.csv", "districts.csv");
        config.coordinates = Coordinates::Planar;
        config.urban_districts = self
            .districts
            .iter()
            .filter(|d| d.urban)
            .map(|d| d.district_id.clone())
            .collect();
        config.slot_seconds = self.slot_seconds;
        config.slots_per_day = self.slots_per_day;
        config.bounds = Some(self.bounds());
        config.classes = self
            .classes
            .iter()
            .map(|(label, rate, _)| ClassRate {
                label: label.clone(),
                rate_bps: *rate,
            })
            .collect();
        config.model = self.model.clone();
        let manifest = toml::to_string(&config).map_err(|e| Error::invalid(e.to_string()))?;
        write_file(&dir.join("scenario.toml"), &manifest)?;
        config.resolve(dir);
        Ok(config)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_spans_the_ratio() {
        let v: Vec<f64> = (0..96).map(|t| diurnal_profile(t, 96, 80, 14.0)).collect();
        let max = v.iter().copied().fold(0.0, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(max, 1.0);
        assert!((max / min - 14.0).abs() < 1e-9);
        assert_eq!(v[80], 1.0);
        assert!((v[32] - 1.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn business_sites_follow_the_fraction() {
        let f = DiurnalFixture {
            business_fraction: 0.25,
            ..DiurnalFixture::default()
        };
        let sites = f.place();
        let a: Vec<_> = sites.iter().filter(|s| s.district == "paris-01" && s.operator == "mno-a").collect();
        let b = a.iter().filter(|s| s.business).count();
        assert_eq!(b, (0.25 * a.len() as f64).round() as usize);
    }

    #[test]
    fn colocated_sites_share_coordinates() {
        let sites = DiurnalFixture::default().place();
        let shared: Vec<_> = sites.iter().filter(|s| s.colocated).collect();
        assert!(!shared.is_empty());
        for s in &shared {
            assert!(shared
                .iter()
                .any(|o| o.operator != s.operator && o.x == s.x && o.y == s.y));
        }
    }
}
