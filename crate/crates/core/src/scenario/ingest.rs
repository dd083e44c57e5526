//! CSV records for sites, traffic and districts.
//!
//! Schemas (header row required, column order free):
//!
//! - sites: `site_id, operator_id, x, y, colocated, district_id`. `x`/`y` are metres in a
//!   planar projection, or longitude/latitude in degrees when the manifest says so.
//!   `colocated` accepts `0/1/true/false`.
//! - traffic: `site_id, day, slot, class, volume_bits`. `day` is `weekday` or `weekend`.
//! - districts: `district_id, population_density_per_km2`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by the local projection, m.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub site_id: String,
    pub operator_id: String,
    pub x: f64,
    pub y: f64,
    #[serde(deserialize_with = "flag")]
    pub colocated: bool,
    pub district_id: String,
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a flag: '{other}'"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl std::fmt::Display for DayType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub site_id: String,
    pub day: DayType,
    pub slot: usize,
    pub class: String,
    pub volume_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictRecord {
    pub district_id: String,
    pub population_density_per_km2: f64,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    reader
        .deserialize()
        .enumerate()
        .map(|(row, rec)| {
            rec.map_err(|e| Error::Parse {
                path: path.into(),
                message: format!("row {}: {e}", row + 2),
            })
        })
        .collect()
}

fn parse_error(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.into(),
        message,
    }
}

pub fn read_sites(path: &Path) -> Result<Vec<SiteRecord>> {
    let sites: Vec<SiteRecord> = read_csv(path)?;
    let mut seen = BTreeSet::new();
    for s in &sites {
        if !(s.x.is_finite() && s.y.is_finite()) {
            return Err(parse_error(path, format!("site '{}' has a non-finite position", s.site_id)));
        }
        if !seen.insert(s.site_id.as_str()) {
            return Err(parse_error(path, format!("duplicate site id '{}'", s.site_id)));
        }
    }
    if sites.is_empty() {
        return Err(parse_error(path, "no sites".into()));
    }
    Ok(sites)
}

/// Reads traffic records, checking volumes and slot indices.
pub fn read_traffic(path: &Path, slots_per_day: usize) -> Result<Vec<TrafficRecord>> {
    let traffic: Vec<TrafficRecord> = read_csv(path)?;
    if traffic.is_empty() {
        return Err(parse_error(path, "no traffic records".into()));
    }
    for t in &traffic {
        if !(t.volume_bits >= 0.0 && t.volume_bits.is_finite()) {
            return Err(parse_error(
                path,
                format!("site '{}' slot {}: volume must be finite and >= 0", t.site_id, t.slot),
            ));
        }
        if t.slot >= slots_per_day {
            return Err(parse_error(
                path,
                format!("site '{}': slot {} outside 0..{slots_per_day}", t.site_id, t.slot),
            ));
        }
    }
    Ok(traffic)
}

pub fn read_districts(path: &Path) -> Result<Vec<DistrictRecord>> {
    let districts: Vec<DistrictRecord> = read_csv(path)?;
    for d in &districts {
        if !(d.population_density_per_km2 >= 0.0) {
            return Err(parse_error(
                path,
                format!("district '{}' has a negative population density", d.district_id),
            ));
        }
    }
    Ok(districts)
}

/// Equirectangular projection around the centroid of `lon_lat` (degrees) to metres.
///
/// Distances are accurate to about `(Δφ)² / 2` relative, with `Δφ` the latitude span in
/// radians: below 0.01 % for a 0.5° (city-sized) extent.
pub fn project_lon_lat(lon_lat: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if lon_lat.is_empty() {
        return Vec::new();
    }
    let n = lon_lat.len() as f64;
    let lon0 = lon_lat.iter().map(|p| p.0).sum::<f64>() / n;
    let lat0 = lon_lat.iter().map(|p| p.1).sum::<f64>() / n;
    let k = lat0.to_radians().cos();
    lon_lat
        .iter()
        .map(|&(lon, lat)| {
            (
                EARTH_RADIUS_M * (lon - lon0).to_radians() * k,
                EARTH_RADIUS_M * (lat - lat0).to_radians(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn sites_with_shuffled_columns() {
        let f = file("district_id,site_id,colocated,operator_id,x,y\nd1,s1,1,a,0,10\nd1,s2,false,b,5,5\n");
        let s = read_sites(f.path()).unwrap();
        assert!(s[0].colocated && !s[1].colocated);
        assert_eq!(s[0].y, 10.0);
    }

    #[test]
    fn duplicate_site_rejected() {
        let f = file("site_id,operator_id,x,y,colocated,district_id\ns1,a,0,0,0,d\ns1,b,1,1,0,d\n");
        assert!(read_sites(f.path()).is_err());
    }

    #[test]
    fn negative_volume_and_bad_slot_rejected() {
        let neg = file("site_id,day,slot,class,volume_bits\ns1,weekday,0,H,-1\n");
        assert!(read_traffic(neg.path(), 96).is_err());
        let slot = file("site_id,day,slot,class,volume_bits\ns1,weekday,96,H,1\n");
        assert!(read_traffic(slot.path(), 96).is_err());
    }

    #[test]
    fn empty_traffic_is_an_error() {
        let f = file("site_id,day,slot,class,volume_bits\n");
        assert!(read_traffic(f.path(), 96).is_err());
    }

    #[test]
    fn parse_errors_name_the_row() {
        let f = file("site_id,day,slot,class,volume_bits\ns1,weekday,0,H,1\ns1,holiday,0,H,1\n");
        let msg = read_traffic(f.path(), 96).unwrap_err().to_string();
        assert!(msg.contains("row 3"), "{msg}");
    }

    #[test]
    fn projection_preserves_short_distances() {
        // Two points 0.01° of latitude apart near Paris: 1111.95 m on the sphere.
        let p = project_lon_lat(&[(2.35, 48.85), (2.35, 48.86)]);
        let d = ((p[0].0 - p[1].0).powi(2) + (p[0].1 - p[1].1).powi(2)).sqrt();
        assert!((d - EARTH_RADIUS_M * 0.01f64.to_radians()).abs() < 1e-6);
    }
}
