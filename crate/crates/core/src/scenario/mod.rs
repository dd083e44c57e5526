//! From site lists and per-slot traffic volumes to one analytical model per slot.
//!
//! Sites carry an operator, a position, a co-location flag and a district. Districts are
//! labelled urban, suburban or rural. Each site's traffic volume is turned into a mean
//! number of concurrent users per class, the users are attached to the site's Voronoi
//! cell, and within every area kind and slot the load is collapsed to one homogeneous
//! user intensity per operator. The spread of the per-cell densities around that mean is
//! kept as a diagnostic.

mod ingest;
pub mod synthetic;
mod voronoi;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{EnergyParams, EnergyProfile, LoadModel, NetworkModel, OperatorConfig, RadioParams, UserClassSpec};
use crate::error::{Error, Result};

pub use ingest::{
    project_lon_lat, read_districts, read_sites, read_traffic, DayType, DistrictRecord, SiteRecord, TrafficRecord,
    EARTH_RADIUS_M,
};
pub use voronoi::{cell_areas, Bounds};

/// Weekend-to-weekday peak ratio below which a site has a business profile.
pub const BUSINESS_THRESHOLD: f64 = 0.6;
/// Population density separating suburban from rural districts, inhabitants/km².
pub const DENSITY_THRESHOLD_PER_KM2: f64 = 8161.0;
pub const SLOT_SECONDS: f64 = 900.0;
pub const SLOTS_PER_DAY: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaKind {
    Urban,
    Suburban,
    Rural,
}

impl std::fmt::Display for AreaKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AreaKind::Urban => "urban",
            AreaKind::Suburban => "suburban",
            AreaKind::Rural => "rural",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaLabel {
    pub district_id: String,
    pub kind: AreaKind,
    /// inhabitants/km²
    pub population_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    /// `x`, `y` in metres.
    #[default]
    Planar,
    /// `x` = longitude, `y` = latitude, degrees.
    LonLat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassRate {
    pub label: String,
    pub rate_bps: f64,
}

fn default_classes() -> Vec<ClassRate> {
    [("H", 5e6), ("M", 0.2e6), ("L", 0.05e6)]
        .into_iter()
        .map(|(label, rate_bps)| ClassRate {
            label: label.into(),
            rate_bps,
        })
        .collect()
}

/// Radio and energy settings shared by every generated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelTemplate {
    pub radio: RadioParams,
    pub load_model: LoadModel,
    pub normalize_serving_probs: bool,
    pub energy_profile: EnergyProfile,
    /// Full-load base-station power, W.
    pub e_max_w: f64,
    /// Share of the load-proportional power attributed to `q3 P`.
    pub transmit_share: f64,
    /// Explicit parameters for [`EnergyProfile::Custom`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom_energy: Option<EnergyParams>,
}

impl Default for ModelTemplate {
    fn default() -> Self {
        Self {
            radio: RadioParams::default(),
            load_model: LoadModel::default(),
            normalize_serving_probs: false,
            energy_profile: EnergyProfile::Hlp,
            e_max_w: 1000.0,
            transmit_share: crate::domain::DEFAULT_TRANSMIT_SHARE,
            custom_energy: None,
        }
    }
}

impl ModelTemplate {
    pub fn energy(&self) -> Result<EnergyParams> {
        match (self.energy_profile, &self.custom_energy) {
            (EnergyProfile::Custom, Some(e)) => Ok(EnergyParams {
                profile: EnergyProfile::Custom,
                ..e.clone()
            }),
            (EnergyProfile::Custom, None) => Err(Error::invalid("custom energy profile needs custom_energy")),
            (p, _) => EnergyParams::from_profile(p, self.e_max_w, self.radio.transmit_power_w, self.transmit_share),
        }
    }
}

/// Scenario manifest; relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub sites: PathBuf,
    pub traffic: PathBuf,
    pub districts: PathBuf,
    #[serde(default)]
    pub coordinates: Coordinates,
    #[serde(default)]
    pub urban_districts: Vec<String>,
    #[serde(default = "default_density_threshold")]
    pub density_threshold_per_km2: f64,
    #[serde(default = "default_business_threshold")]
    pub business_threshold: f64,
    #[serde(default = "default_slot_seconds")]
    pub slot_seconds: f64,
    #[serde(default = "default_slots_per_day")]
    pub slots_per_day: usize,
    /// Study area; defaults to the sites' bounding box padded by `bounds_padding`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default = "default_padding")]
    pub bounds_padding: f64,
    #[serde(default = "default_classes")]
    pub classes: Vec<ClassRate>,
    #[serde(default)]
    pub model: ModelTemplate,
}

fn default_density_threshold() -> f64 {
    DENSITY_THRESHOLD_PER_KM2
}
fn default_business_threshold() -> f64 {
    BUSINESS_THRESHOLD
}
fn default_slot_seconds() -> f64 {
    SLOT_SECONDS
}
fn default_slots_per_day() -> usize {
    SLOTS_PER_DAY
}
fn default_padding() -> f64 {
    0.05
}

impl ScenarioConfig {
    pub fn new(sites: impl Into<PathBuf>, traffic: impl Into<PathBuf>, districts: impl Into<PathBuf>) -> Self {
        Self {
            sites: sites.into(),
            traffic: traffic.into(),
            districts: districts.into(),
            coordinates: Coordinates::default(),
            urban_districts: Vec::new(),
            density_threshold_per_km2: DENSITY_THRESHOLD_PER_KM2,
            business_threshold: BUSINESS_THRESHOLD,
            slot_seconds: SLOT_SECONDS,
            slots_per_day: SLOTS_PER_DAY,
            bounds: None,
            bounds_padding: default_padding(),
            classes: default_classes(),
            model: ModelTemplate::default(),
        }
    }

    pub fn from_toml_str(s: &str, base_dir: &Path) -> Result<Self> {
        let mut c: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Parse {
            path: base_dir.into(),
            message: e.to_string(),
        })?;
        c.resolve(base_dir);
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        toml::from_str::<ScenarioConfig>(&text)
            .map_err(|e| Error::Parse {
                path: path.into(),
                message: e.to_string(),
            })
            .map(|mut c| {
                c.resolve(base);
                c
            })
    }

    /// Joins relative file paths onto `base_dir`.
    pub fn resolve(&mut self, base_dir: &Path) {
        for p in [&mut self.sites, &mut self.traffic, &mut self.districts] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slot_seconds > 0.0) || self.slots_per_day == 0 {
            return Err(Error::invalid("slot_seconds and slots_per_day must be positive"));
        }
        if !(self.business_threshold > 0.0) || !(self.density_threshold_per_km2 >= 0.0) {
            return Err(Error::invalid("thresholds must be positive"));
        }
        if !(self.bounds_padding >= 0.0) {
            return Err(Error::invalid("bounds_padding must be non-negative"));
        }
        self.user_classes()?;
        self.model.energy()?;
        Ok(())
    }

    /// Classes with equal placeholder shares; the last class is the reference.
    pub fn user_classes(&self) -> Result<Vec<UserClassSpec>> {
        if self.classes.is_empty() {
            return Err(Error::invalid("at least one traffic class is required"));
        }
        let mut labels = BTreeSet::new();
        for c in &self.classes {
            if !(c.rate_bps > 0.0) {
                return Err(Error::invalid(format!("class '{}' needs a positive rate", c.label)));
            }
            if !labels.insert(c.label.as_str()) {
                return Err(Error::invalid(format!("duplicate class '{}'", c.label)));
            }
        }
        let share = 1.0 / self.classes.len() as f64;
        let triples: Vec<_> = self
            .classes
            .iter()
            .map(|c| (c.label.as_str(), c.rate_bps, share))
            .collect();
        UserClassSpec::from_rates(&triples)
    }
}

/// Mean number of concurrent users that carry `volume_bits` in one slot at the class's target rate.
pub fn users_from_volume(volume_bits: f64, class: &UserClassSpec, slot_seconds: f64) -> Result<f64> {
    if !(slot_seconds > 0.0) {
        return Err(Error::invalid(format!("slot length must be positive, got {slot_seconds}")));
    }
    if !(volume_bits >= 0.0) {
        return Err(Error::invalid(format!("traffic volume must be non-negative, got {volume_bits}")));
    }
    Ok(volume_bits / (class.target_rate_bps * slot_seconds))
}

/// Business profile: weekend peak below `threshold` times the weekday peak.
pub fn classify_business(weekend_peak: f64, weekday_peak: f64, threshold: f64) -> Result<bool> {
    if !(weekday_peak > 0.0) {
        return Err(Error::invalid("business profile undefined without weekday traffic"));
    }
    Ok(weekend_peak / weekday_peak < threshold)
}

/// Urban if listed, otherwise suburban at or above the density threshold and rural below.
pub fn classify_area(density_per_km2: f64, listed_urban: bool, threshold_per_km2: f64) -> Result<AreaKind> {
    if !(density_per_km2 >= 0.0) {
        return Err(Error::invalid(format!("population density must be >= 0, got {density_per_km2}")));
    }
    Ok(if listed_urban {
        AreaKind::Urban
    } else if density_per_km2 >= threshold_per_km2 {
        AreaKind::Suburban
    } else {
        AreaKind::Rural
    })
}

pub fn label_districts(districts: &[DistrictRecord], config: &ScenarioConfig) -> Result<BTreeMap<String, AreaLabel>> {
    let urban: BTreeSet<&str> = config.urban_districts.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    for d in districts {
        let kind = classify_area(
            d.population_density_per_km2,
            urban.contains(d.district_id.as_str()),
            config.density_threshold_per_km2,
        )?;
        let label = AreaLabel {
            district_id: d.district_id.clone(),
            kind,
            population_density: d.population_density_per_km2,
        };
        if out.insert(d.district_id.clone(), label).is_some() {
            return Err(Error::invalid(format!("duplicate district '{}'", d.district_id)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub record: SiteRecord,
    /// Projected position, m.
    pub x_m: f64,
    pub y_m: f64,
    pub area: AreaKind,
}

/// Parsed and cross-checked inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub sites: Vec<Site>,
    pub traffic: Vec<TrafficRecord>,
    pub labels: BTreeMap<String, AreaLabel>,
    pub bounds: Bounds,
    /// Operator ids, sorted.
    pub operators: Vec<String>,
}

impl Scenario {
    pub fn load(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let records = read_sites(&config.sites)?;
        let traffic = read_traffic(&config.traffic, config.slots_per_day)?;
        let labels = label_districts(&read_districts(&config.districts)?, config)?;
        Self::from_records(config, records, traffic, labels)
    }

    pub fn from_records(
        config: &ScenarioConfig,
        records: Vec<SiteRecord>,
        traffic: Vec<TrafficRecord>,
        labels: BTreeMap<String, AreaLabel>,
    ) -> Result<Self> {
        let raw: Vec<(f64, f64)> = records.iter().map(|r| (r.x, r.y)).collect();
        let xy = match config.coordinates {
            Coordinates::Planar => raw,
            Coordinates::LonLat => project_lon_lat(&raw),
        };
        let bounds = match config.bounds {
            Some(b) => b,
            None => Bounds::around(&xy, config.bounds_padding)?,
        };
        let mut sites = Vec::with_capacity(records.len());
        for (record, (x_m, y_m)) in records.into_iter().zip(xy) {
            let label = labels.get(&record.district_id).ok_or_else(|| {
                Error::invalid(format!(
                    "site '{}' references unknown district '{}'",
                    record.site_id, record.district_id
                ))
            })?;
            sites.push(Site {
                area: label.kind,
                record,
                x_m,
                y_m,
            });
        }
        let known: BTreeSet<&str> = sites.iter().map(|s| s.record.site_id.as_str()).collect();
        if let Some(t) = traffic.iter().find(|t| !known.contains(t.site_id.as_str())) {
            return Err(Error::invalid(format!("traffic references unknown site '{}'", t.site_id)));
        }
        let classes: BTreeSet<&str> = config.classes.iter().map(|c| c.label.as_str()).collect();
        if let Some(t) = traffic.iter().find(|t| !classes.contains(t.class.as_str())) {
            return Err(Error::invalid(format!("traffic references unknown class '{}'", t.class)));
        }
        let operators = sites
            .iter()
            .map(|s| s.record.operator_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Self {
            config: config.clone(),
            sites,
            traffic,
            labels,
            bounds,
            operators,
        })
    }

    fn operator_index(&self, id: &str) -> usize {
        self.operators.binary_search_by(|o| o.as_str().cmp(id)).expect("known operator")
    }

    fn day_types(&self) -> Vec<DayType> {
        self.traffic
            .iter()
            .map(|t| t.day)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Users per `[day][site][slot][class]` derived from the traffic records.
    fn site_users(&self) -> Result<BTreeMap<DayType, Vec<Vec<Vec<f64>>>>> {
        let classes = self.config.user_classes()?;
        let class_index: BTreeMap<&str, usize> = self
            .config
            .classes
            .iter()
            .enumerate()
            .map(|(j, c)| (c.label.as_str(), j))
            .collect();
        let site_index: BTreeMap<&str, usize> = self
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.record.site_id.as_str(), i))
            .collect();
        let empty = vec![vec![vec![0.0; classes.len()]; self.config.slots_per_day]; self.sites.len()];
        let mut out: BTreeMap<DayType, _> = self.day_types().into_iter().map(|d| (d, empty.clone())).collect();
        for t in &self.traffic {
            let j = class_index[t.class.as_str()];
            let users = users_from_volume(t.volume_bits, &classes[j], self.config.slot_seconds)?;
            out.get_mut(&t.day).expect("day present")[site_index[t.site_id.as_str()]][t.slot][j] += users;
        }
        Ok(out)
    }

    /// Total users per `[day][slot]` straight from the traffic records.
    pub fn total_users(&self) -> Result<BTreeMap<DayType, Vec<f64>>> {
        Ok(self
            .site_users()?
            .into_iter()
            .map(|(d, per_site)| {
                let mut totals = vec![0.0; self.config.slots_per_day];
                for site in &per_site {
                    for (t, classes) in site.iter().enumerate() {
                        totals[t] += classes.iter().sum::<f64>();
                    }
                }
                (d, totals)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteProfile {
    pub site_id: String,
    pub weekday_peak_bits: f64,
    pub weekend_peak_bits: f64,
    /// `None` when the site has no weekday traffic.
    pub business: Option<bool>,
}

/// Weekday and weekend peak slot volumes of every site and its business classification.
pub fn site_profiles(scn: &Scenario) -> Vec<SiteProfile> {
    let mut peaks: BTreeMap<&str, [Vec<f64>; 2]> = scn
        .sites
        .iter()
        .map(|s| {
            let slots = vec![0.0; scn.config.slots_per_day];
            (s.record.site_id.as_str(), [slots.clone(), slots])
        })
        .collect();
    for t in &scn.traffic {
        let d = match t.day {
            DayType::Weekday => 0,
            DayType::Weekend => 1,
        };
        peaks.get_mut(t.site_id.as_str()).expect("validated site")[d][t.slot] += t.volume_bits;
    }
    scn.sites
        .iter()
        .map(|s| {
            let [wd, we] = &peaks[s.record.site_id.as_str()];
            let wd = wd.iter().copied().fold(0.0, f64::max);
            let we = we.iter().copied().fold(0.0, f64::max);
            let business = classify_business(we, wd, scn.config.business_threshold).ok();
            if business.is_none() {
                log::warn!("site '{}' has no weekday traffic; business profile skipped", s.record.site_id);
            }
            SiteProfile {
                site_id: s.record.site_id.clone(),
                weekday_peak_bits: wd,
                weekend_peak_bits: we,
                business,
            }
        })
        .collect()
}

/// Share of classified sites with a business profile.
pub fn business_fraction(profiles: &[SiteProfile]) -> Option<f64> {
    let classified: Vec<bool> = profiles.iter().filter_map(|p| p.business).collect();
    (!classified.is_empty()).then(|| classified.iter().filter(|&&b| b).count() as f64 / classified.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotLoad {
    /// Mean concurrent users, `[operator][class]`.
    pub users: Vec<Vec<f64>>,
    /// Users per m² for each operator.
    pub user_intensity: Vec<f64>,
    /// `γ_j`; equal shares when the slot has no users.
    pub class_shares: Vec<f64>,
    /// Coefficient of variation of the per-cell user densities of each operator; `None` when
    /// fewer than two cells carry the operator or the mean is zero.
    pub load_cv: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaIntensities {
    pub kind: AreaKind,
    /// Area covered by the Voronoi cells of this kind's sites, m².
    pub area_m2: f64,
    pub site_counts: Vec<usize>,
    /// Sites per m² for each operator.
    pub deployed_intensity: Vec<f64>,
    /// Fraction of this kind's sites flagged as co-located.
    pub colocation_fraction: f64,
    pub slots: BTreeMap<DayType, Vec<SlotLoad>>,
}

fn coefficient_of_variation(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if !(mean > 0.0) {
        return None;
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    Some(var.sqrt() / mean)
}

/// Distinct positions and, for every site, the index of its position.
fn distinct_positions(sites: &[&Site]) -> (Vec<(f64, f64)>, Vec<usize>) {
    let mut index: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut points = Vec::new();
    let of_site = sites
        .iter()
        .map(|s| {
            *index.entry((s.x_m.to_bits(), s.y_m.to_bits())).or_insert_with(|| {
                points.push((s.x_m, s.y_m));
                points.len() - 1
            })
        })
        .collect();
    (points, of_site)
}

/// Homogeneous intensities per area kind, day type and slot.
///
/// An area's surface is the union of the Voronoi cells (over all operators' sites) of the
/// sites located in districts of that kind. Every site's users are counted in exactly one
/// area, so the users summed over areas equal the users derived from the traffic.
pub fn estimate_intensities(scn: &Scenario) -> Result<Vec<AreaIntensities>> {
    let n_ops = scn.operators.len();
    let all: Vec<&Site> = scn.sites.iter().collect();
    let (points, position_of) = distinct_positions(&all);
    let areas = cell_areas(&points, &scn.bounds)?;
    let mut position_kind: Vec<Option<AreaKind>> = vec![None; points.len()];
    for (s, &p) in all.iter().zip(&position_of) {
        match position_kind[p] {
            None => position_kind[p] = Some(s.area),
            Some(k) if k != s.area => log::warn!(
                "co-sited stations at ({}, {}) lie in districts of different kinds; using {k}",
                s.x_m,
                s.y_m
            ),
            _ => {}
        }
    }
    // Each operator's own tessellation apportions its users for the inhomogeneity diagnostic.
    let mut own_cell = vec![f64::NAN; scn.sites.len()];
    for op in &scn.operators {
        let idx: Vec<usize> = (0..scn.sites.len())
            .filter(|&i| &scn.sites[i].record.operator_id == op)
            .collect();
        let members: Vec<&Site> = idx.iter().map(|&i| &scn.sites[i]).collect();
        let (pts, of) = distinct_positions(&members);
        if pts.len() >= 3 {
            if let Ok(a) = cell_areas(&pts, &scn.bounds) {
                for (k, &i) in idx.iter().enumerate() {
                    own_cell[i] = a[of[k]];
                }
            }
        }
    }
    let users = scn.site_users()?;
    let n_classes = scn.config.classes.len();
    let mut out = Vec::new();
    for kind in [AreaKind::Urban, AreaKind::Suburban, AreaKind::Rural] {
        let members: Vec<usize> = (0..scn.sites.len()).filter(|&i| scn.sites[i].area == kind).collect();
        if members.is_empty() {
            continue;
        }
        let area_m2: f64 = (0..points.len())
            .filter(|&p| position_kind[p] == Some(kind))
            .map(|p| areas[p])
            .sum();
        if !(area_m2 > 0.0) {
            return Err(Error::invalid(format!("{kind} area is empty")));
        }
        let mut site_counts = vec![0; n_ops];
        for &i in &members {
            site_counts[scn.operator_index(&scn.sites[i].record.operator_id)] += 1;
        }
        if let Some(op) = site_counts.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!(
                "{kind} area has no site of operator '{}'",
                scn.operators[op]
            )));
        }
        let colocated = members.iter().filter(|&&i| scn.sites[i].record.colocated).count();
        let mut slots = BTreeMap::new();
        for (&day, per_site) in &users {
            let series = (0..scn.config.slots_per_day)
                .map(|t| {
                    let mut u = vec![vec![0.0; n_classes]; n_ops];
                    let mut densities = vec![Vec::new(); n_ops];
                    for &i in &members {
                        let op = scn.operator_index(&scn.sites[i].record.operator_id);
                        for (j, v) in per_site[i][t].iter().enumerate() {
                            u[op][j] += v;
                        }
                        if own_cell[i] > 0.0 {
                            densities[op].push(per_site[i][t].iter().sum::<f64>() / own_cell[i]);
                        }
                    }
                    let total: f64 = u.iter().flatten().sum();
                    let class_shares = if total > 0.0 {
                        (0..n_classes)
                            .map(|j| u.iter().map(|o| o[j]).sum::<f64>() / total)
                            .collect()
                    } else {
                        vec![1.0 / n_classes as f64; n_classes]
                    };
                    SlotLoad {
                        user_intensity: u.iter().map(|o| o.iter().sum::<f64>() / area_m2).collect(),
                        users: u,
                        class_shares,
                        load_cv: densities.iter().map(|d| coefficient_of_variation(d)).collect(),
                    }
                })
                .collect();
            slots.insert(day, series);
        }
        out.push(AreaIntensities {
            kind,
            area_m2,
            deployed_intensity: site_counts.iter().map(|&c| c as f64 / area_m2).collect(),
            site_counts,
            colocation_fraction: colocated as f64 / members.len() as f64,
            slots,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub area: AreaKind,
    pub day: DayType,
    pub area_m2: f64,
    pub colocation_fraction: f64,
    /// One validated model per slot.
    pub models: Vec<NetworkModel>,
    /// Per slot and operator.
    pub load_cv: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSeries {
    pub slot_seconds: f64,
    pub slots_per_day: usize,
    pub operators: Vec<String>,
    pub business_fraction: Option<f64>,
    pub entries: Vec<SeriesEntry>,
}

impl SlotSeries {
    pub fn entry(&self, area: AreaKind, day: DayType) -> Option<&SeriesEntry> {
        self.entries.iter().find(|e| e.area == area && e.day == day)
    }
}

/// One validated model per slot for every area kind and day type present in the data.
pub fn build_slot_series(scn: &Scenario) -> Result<SlotSeries> {
    let intensities = estimate_intensities(scn)?;
    let base_classes = scn.config.user_classes()?;
    let energy = scn.config.model.energy()?;
    let template = &scn.config.model;
    let mut entries = Vec::new();
    for area in &intensities {
        for (&day, loads) in &area.slots {
            let models = loads
                .iter()
                .enumerate()
                .map(|(t, load)| {
                    let operators = scn
                        .operators
                        .iter()
                        .enumerate()
                        .map(|(i, id)| OperatorConfig {
                            id: id.clone(),
                            deployed_intensity: area.deployed_intensity[i],
                            user_intensity: load.user_intensity[i],
                            active_fraction: 1.0,
                            energy: energy.clone(),
                            bandwidth_hz: None,
                        })
                        .collect();
                    let mut classes = base_classes.clone();
                    for (c, &g) in classes.iter_mut().zip(&load.class_shares) {
                        c.share = g;
                    }
                    NetworkModel {
                        colocation_fraction: area.colocation_fraction,
                        load_model: template.load_model,
                        normalize_serving_probs: template.normalize_serving_probs,
                        radio: template.radio.clone(),
                        operators,
                        classes,
                    }
                    .validated()
                    .map_err(|e| Error::invalid(format!("slot {t} ({}, {day}): {e}", area.kind)))
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push(SeriesEntry {
                area: area.kind,
                day,
                area_m2: area.area_m2,
                colocation_fraction: area.colocation_fraction,
                models,
                load_cv: loads.iter().map(|l| l.load_cv.clone()).collect(),
            });
        }
    }
    Ok(SlotSeries {
        slot_seconds: scn.config.slot_seconds,
        slots_per_day: scn.config.slots_per_day,
        operators: scn.operators.clone(),
        business_fraction: business_fraction(&site_profiles(scn)),
        entries,
    })
}

/// Loads the manifest's files and builds the slot series.
pub fn load_slot_series(config: &ScenarioConfig) -> Result<SlotSeries> {
    build_slot_series(&Scenario::load(config)?)
}
