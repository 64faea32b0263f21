//! Scenario configuration files.
//!
//! ```json
//! {
//!   "network": "networks/boston_like.json",
//!   "fleet": {"private": 500, "autonomous": 300, "ride_hailing": 200,
//!             "depart_start_min": 480, "depart_end_min": 600},
//!   "modes": { "private": {...}, "autonomous": {...}, "ride_hailing": {...} },
//!   "sim": {"monitor_half_width_s": 60, "candidates": 7, "seed": 1, "workers": 1},
//!   "strategy": "equity"
//! }
//! ```
//!
//! The network path is resolved against the directory holding the config.
//! Every section except `network` may be omitted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::equity::ModeTable;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, RoadNetwork};
use crate::planner::Strategy;
use crate::sim::{generate_scenario, FleetConfig, Scenario, SimParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub network: PathBuf,
    #[serde(default)]
    pub fleet: FleetConfig,
    #[serde(default)]
    pub modes: ModeTable,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
}

fn default_strategy() -> Strategy {
    Strategy::Equity
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.fleet.validate()?;
        self.modes.validate()?;
        self.sim.validate()
    }
}

/// A configuration together with the network it names.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub path: PathBuf,
    pub network_path: PathBuf,
    pub network_spec: NetworkSpec,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and checks a configuration without touching the network.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = read(path)?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    config
        .validate()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(config)
}

/// Reads a configuration and the network file it points to.
pub fn load(path: &Path) -> Result<LoadedConfig> {
    let config = load_config(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let network_path = base.join(&config.network);
    let network_spec = NetworkSpec::load(&network_path)?;
    Ok(LoadedConfig {
        config,
        path: path.to_path_buf(),
        network_path,
        network_spec,
    })
}

impl LoadedConfig {
    /// Overrides the seed from the file.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.config.sim.seed = seed;
        }
        self
    }

    pub fn network(&self) -> Result<RoadNetwork> {
        RoadNetwork::build(&self.network_spec)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let c = &self.config;
        generate_scenario(self.network()?, c.modes, &c.fleet, &c.sim, c.sim.seed)
    }

    /// Hex SHA-256 of the effective configuration and network, serialised as
    /// compact JSON with sorted keys.
    pub fn digest(&self) -> Result<String> {
        digest(&self.config, &self.network_spec)
    }
}

pub fn digest(config: &ScenarioConfig, network: &NetworkSpec) -> Result<String> {
    #[derive(Serialize)]
    struct Canonical<'a> {
        config: &'a ScenarioConfig,
        network: &'a NetworkSpec,
    }
    // Round-tripping through `Value` sorts object keys.
    let value = serde_json::to_value(Canonical { config, network })?;
    let text = serde_json::to_string(&value)?;
    Ok(format!("{:x}", Sha256::digest(text.as_bytes())))
}
