//! Run manifests: which model or scenario to analyze, with which strategies and settings.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use netshare::domain::{EnergyProfile, LoadModel, NetworkModel};
use netshare::scenario::{load_slot_series, AreaKind, DayType, ScenarioConfig, SlotSeries};
use netshare::simulate::{OracleTolerances, SimSpec};
use netshare::strategies::{SolverOptions, Strategy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    NoSharing,
    /// Every single-survivor variant.
    Switchoff,
    FullNs,
}

impl StrategyKind {
    pub fn matches(self, s: &Strategy) -> bool {
        matches!(
            (self, s),
            (StrategyKind::NoSharing, Strategy::NoSharing)
                | (StrategyKind::Switchoff, Strategy::Switchoff { .. })
                | (StrategyKind::FullNs, Strategy::FullSharing)
        )
    }
}

fn all_strategies() -> Vec<StrategyKind> {
    vec![StrategyKind::NoSharing, StrategyKind::Switchoff, StrategyKind::FullNs]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("netshare-out")
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// A single network model (TOML).
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// A scenario manifest with site, traffic and district files.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub area: Option<AreaKind>,
    #[serde(default)]
    pub day: Option<DayType>,
    #[serde(default)]
    pub slot: Option<usize>,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub energy_profile: Option<EnergyProfile>,
    #[serde(default)]
    pub normalize_serving_probs: Option<bool>,
    #[serde(default)]
    pub load_model: Option<LoadModel>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub simulation: SimSpec,
    #[serde(default)]
    pub tolerances: OracleTolerances,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            model: None,
            scenario: None,
            area: None,
            day: None,
            slot: None,
            strategies: all_strategies(),
            energy_profile: None,
            normalize_serving_probs: None,
            load_model: None,
            output_dir: default_output_dir(),
            seed: default_seed(),
            solver: SolverOptions::default(),
            simulation: SimSpec::default(),
            tolerances: OracleTolerances::default(),
        }
    }
}

/// Where the models of a run come from.
pub enum Source {
    Model(NetworkModel),
    Scenario(Box<SlotSeries>),
    /// No model given; commands that have a built-in default use it.
    None,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| netshare::Error::Io {
                path: path.into(),
                source: e,
            })
            .with_context(|| "reading the run manifest")?;
        let mut m: RunManifest = toml::from_str(&text).map_err(|e| netshare::Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut m.model, &mut m.scenario].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if m.output_dir.is_relative() {
            m.output_dir = base.join(&m.output_dir);
        }
        Ok(m)
    }

    /// Checks the manifest's own invariants; missing files are I/O errors.
    pub fn check(&self) -> Result<()> {
        if self.strategies.is_empty() {
            bail!(netshare::Error::InvalidInput("the strategy list is empty".into()));
        }
        if self.model.is_some() && self.scenario.is_some() {
            bail!(netshare::Error::InvalidInput(
                "give either a model or a scenario, not both".into()
            ));
        }
        for p in [&self.model, &self.scenario].into_iter().flatten() {
            if !p.exists() {
                return Err(netshare::Error::Io {
                    path: p.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file does not exist"),
                }
                .into());
            }
        }
        Ok(())
    }

    pub fn source(&self) -> Result<Source> {
        self.check()?;
        if let Some(p) = &self.model {
            return Ok(Source::Model(NetworkModel::load(p)?));
        }
        if let Some(p) = &self.scenario {
            let config = ScenarioConfig::load(p)?;
            for f in [&config.sites, &config.traffic, &config.districts] {
                if !f.exists() {
                    return Err(netshare::Error::Io {
                        path: f.clone(),
                        source: std::io::Error::new(std::io::ErrorKind::NotFound, "scenario file does not exist"),
                    }
                    .into());
                }
            }
            return Ok(Source::Scenario(Box::new(load_slot_series(&config)?)));
        }
        Ok(Source::None)
    }

    pub fn area(&self) -> AreaKind {
        self.area.unwrap_or(AreaKind::Urban)
    }

    /// Applies the model-level overrides of this manifest.
    pub fn adjust(&self, m: &NetworkModel) -> Result<NetworkModel> {
        let mut m = match self.energy_profile {
            Some(p) => m.with_energy_profile(p)?,
            None => m.clone(),
        };
        if let Some(n) = self.normalize_serving_probs {
            m.normalize_serving_probs = n;
        }
        if let Some(l) = self.load_model {
            m.load_model = l;
        }
        Ok(m)
    }

    pub fn solver(&self) -> SolverOptions {
        let mut s = self.solver.clone();
        if let Some(l) = self.load_model {
            s.full_ns_load_model = l;
        }
        s
    }

    pub fn simulation(&self) -> SimSpec {
        SimSpec {
            seed: self.seed,
            ..self.simulation.clone()
        }
    }
}
