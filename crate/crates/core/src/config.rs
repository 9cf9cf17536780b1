//! TOML experiment configuration.
//!
//! ```toml
//! [network]
//! shells = ["iridium", "meo-10354"]
//! ground_stations = "three-cities"
//!
//! [time]
//! step_s = 15.0
//!
//! [run]
//! strategies = ["eunomia", "odc", "greedy"]
//! gammas = [0.25, 0.5, 0.75, 1.0]
//! seeds = [1, 2, 3]
//! ```
//!
//! Every section except `network` is optional and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constellation::{Network, ShellSpec, NINE_CITIES};
use crate::emulator::{EmulatorParams, ScenarioSpec};
use crate::error::{Error, Result};
use crate::overhead::OverheadParams;
use crate::partition::{PartitionParams, Strategy};
use crate::traffic::TrafficParams;
use crate::visibility::Thresholds;

/// A named preset or a fully specified shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShellEntry {
    Preset(String),
    Explicit(ShellSpec),
}

impl ShellEntry {
    pub fn resolve(&self) -> Result<ShellSpec> {
        match self {
            ShellEntry::Preset(name) => ShellSpec::preset(name),
            ShellEntry::Explicit(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationEntry {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

/// `"nine-cities"`, `"three-cities"`, `"none"` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroundStations {
    Preset(String),
    List(Vec<StationEntry>),
}

impl Default for GroundStations {
    fn default() -> Self {
        GroundStations::Preset("nine-cities".into())
    }
}

/// Cities of the `three-cities` preset, roughly 100° apart in longitude.
pub const THREE_CITIES: [&str; 3] = ["new-york", "cairo", "tokyo"];

impl GroundStations {
    pub fn resolve(&self) -> Result<Vec<(String, f64, f64)>> {
        let named = |names: &[&str]| {
            NINE_CITIES
                .iter()
                .filter(|(n, _, _)| names.contains(n))
                .map(|&(n, lat, lon)| (n.to_string(), lat, lon))
                .collect()
        };
        match self {
            GroundStations::Preset(p) => match p.as_str() {
                "nine-cities" => Ok(NINE_CITIES.iter().map(|&(n, lat, lon)| (n.to_string(), lat, lon)).collect()),
                "three-cities" => Ok(named(&THREE_CITIES)),
                "none" => Ok(Vec::new()),
                other => Err(Error::UnknownPreset(other.to_string())),
            },
            GroundStations::List(list) => Ok(list.iter().map(|s| (s.name.clone(), s.lat, s.lon)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub shells: Vec<ShellEntry>,
    #[serde(default)]
    pub ground_stations: GroundStations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Defaults to one orbital period of the first LEO shell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<f64>,
    #[serde(default = "default_step")]
    pub step_s: f64,
}

fn default_step() -> f64 {
    15.0
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { horizon_s: None, step_s: default_step() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}
fn default_gammas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { strategies: default_strategies(), gammas: default_gammas(), seeds: default_seeds() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub overhead: OverheadParams,
    #[serde(default)]
    pub partition: PartitionParams,
    #[serde(default)]
    pub traffic: TrafficParams,
    #[serde(default)]
    pub emulator: EmulatorParams,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    /// Iridium under six MEOs at 10 354 km and three ground stations.
    pub fn desk() -> Self {
        Self::with_network(NetworkConfig {
            shells: vec![ShellEntry::Preset("iridium".into()), ShellEntry::Preset("meo-10354".into())],
            ground_stations: GroundStations::Preset("three-cities".into()),
        })
    }

    pub fn with_network(network: NetworkConfig) -> Self {
        Self {
            network,
            thresholds: Thresholds::default(),
            time: TimeConfig::default(),
            overhead: OverheadParams::default(),
            partition: PartitionParams::default(),
            traffic: TrafficParams::default(),
            emulator: EmulatorParams::default(),
            run: RunConfig::default(),
        }
    }

    /// Parses and validates. Syntax and schema errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.network.shells.is_empty() {
            return Err(Error::Config("network.shells is empty".into()));
        }
        for s in &self.network.shells {
            s.resolve()?;
        }
        self.network.ground_stations.resolve()?;
        self.overhead.validate()?;
        self.partition.corg.validate()?;
        if let Some(&g) = self.run.gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::InvalidGamma(g));
        }
        if self.run.strategies.is_empty() || self.run.seeds.is_empty() {
            return Err(Error::Config("run needs at least one strategy and one seed".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Comment line embedded at the top of every output file.
    pub fn provenance(&self, seed: Option<u64>) -> String {
        match seed {
            Some(s) => format!("# config_hash={} seed={s}", self.hash()),
            None => format!("# config_hash={}", self.hash()),
        }
    }

    pub fn build_network(&self) -> Result<Network> {
        let shells = self.network.shells.iter().map(ShellEntry::resolve).collect::<Result<Vec<_>>>()?;
        Network::new(&shells, &self.network.ground_stations.resolve()?)
    }

    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        let network = self.build_network()?;
        let horizon_s = match self.time.horizon_s {
            Some(h) => h,
            None => {
                network.leo_period().ok_or_else(|| Error::Config("no LEO shell to derive the horizon from".into()))?
            }
        };
        Ok(ScenarioSpec {
            network,
            thresholds: self.thresholds,
            horizon_s,
            step_s: self.time.step_s,
            overhead: self.overhead.clone(),
            partition: self.partition.clone(),
            traffic: self.traffic.clone(),
            emulator: self.emulator,
        })
    }
}
