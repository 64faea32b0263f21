use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// JSON network description, as read from disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub origins: Vec<u64>,
    pub destinations: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bpr: Option<BprSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

impl NodeSpec {
    pub fn new(id: u64) -> Self {
        Self { id, x: None, y: None }
    }

    pub fn at(id: u64, x: f64, y: f64) -> Self {
        Self {
            id,
            x: Some(x),
            y: Some(y),
        }
    }
}

/// An edge either carries its free-flow time directly or a length and speed
/// from which the time is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: u64,
    pub to: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_flow_time_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_kmh: Option<f64>,
    pub capacity_veh_per_min_per_lane: f64,
    #[serde(default = "one_lane")]
    pub lanes: u32,
}

fn one_lane() -> u32 {
    1
}

impl EdgeSpec {
    pub fn timed(from: u64, to: u64, free_flow_time_min: f64, capacity: f64) -> Self {
        Self {
            from,
            to,
            free_flow_time_min: Some(free_flow_time_min),
            length_m: None,
            speed_kmh: None,
            capacity_veh_per_min_per_lane: capacity,
            lanes: 1,
        }
    }

    pub fn measured(from: u64, to: u64, length_m: f64, speed_kmh: f64, capacity: f64) -> Self {
        Self {
            from,
            to,
            free_flow_time_min: None,
            length_m: Some(length_m),
            speed_kmh: Some(speed_kmh),
            capacity_veh_per_min_per_lane: capacity,
            lanes: 1,
        }
    }

    /// Free-flow minutes; an explicit time wins over length and speed.
    pub fn free_flow_minutes(&self) -> Option<f64> {
        if let Some(t) = self.free_flow_time_min {
            return Some(t);
        }
        match (self.length_m, self.speed_kmh) {
            (Some(len), Some(speed)) if speed > 0.0 => Some(len / 1000.0 / speed * 60.0),
            (Some(_), Some(_)) => Some(f64::NAN),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BprSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
