use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equity::{Mode, ModeTable};
use crate::error::{Error, Result};
use crate::flow::VehicleId;
use crate::network::{NodeId, RoadNetwork};

/// Fleet composition and departure window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FleetConfig {
    pub private: usize,
    pub autonomous: usize,
    pub ride_hailing: usize,
    /// Departures are uniform on `[depart_start_min, depart_end_min)`.
    pub depart_start_min: f64,
    pub depart_end_min: f64,
}

impl Default for FleetConfig {
    /// 500 private, 300 autonomous and 200 ride-hailing vehicles departing
    /// between 08:00 and 10:00.
    fn default() -> Self {
        Self {
            private: 500,
            autonomous: 300,
            ride_hailing: 200,
            depart_start_min: 480.0,
            depart_end_min: 600.0,
        }
    }
}

impl FleetConfig {
    pub fn count(&self, mode: Mode) -> usize {
        match mode {
            Mode::Private => self.private,
            Mode::Autonomous => self.autonomous,
            Mode::RideHailing => self.ride_hailing,
        }
    }

    pub fn total(&self) -> usize {
        Mode::ALL.iter().map(|&m| self.count(m)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.depart_start_min, self.depart_end_min);
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && a < b) {
            return Err(Error::Config(format!(
                "departure window must satisfy 0 <= start < end, got [{a}, {b})"
            )));
        }
        if self.total() > u32::MAX as usize {
            return Err(Error::Config("fleet too large".into()));
        }
        Ok(())
    }
}

/// Simulation knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    /// Monitoring half-width, seconds.
    pub monitor_half_width_s: f64,
    /// Candidate routes per decision.
    pub candidates: usize,
    pub seed: u64,
    /// Threads used when several strategies run side by side.
    pub workers: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            monitor_half_width_s: 60.0,
            candidates: 7,
            seed: 1,
            workers: 1,
        }
    }
}

impl SimParams {
    pub fn half_width_min(&self) -> f64 {
        self.monitor_half_width_s / 60.0
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.monitor_half_width_s;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("monitor_half_width_s must be > 0, got {h}")));
        }
        if self.candidates == 0 {
            return Err(Error::Config("candidates must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub id: VehicleId,
    pub mode: Mode,
    pub origin: NodeId,
    pub destination: NodeId,
    /// Minutes.
    pub departure: f64,
}

/// Everything a run needs, frozen.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub network: RoadNetwork,
    pub modes: ModeTable,
    pub vehicles: Vec<VehicleSpec>,
    /// Minutes.
    pub half_width: f64,
    pub candidates: usize,
    pub seed: u64,
}

impl Scenario {
    /// A scenario with an explicit vehicle list.
    pub fn new(
        network: RoadNetwork,
        modes: ModeTable,
        vehicles: Vec<VehicleSpec>,
        half_width: f64,
        candidates: usize,
    ) -> Result<Self> {
        modes.validate()?;
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!("half-width must be > 0, got {half_width}")));
        }
        if candidates == 0 {
            return Err(Error::Config("candidates must be at least 1".into()));
        }
        for (i, v) in vehicles.iter().enumerate() {
            if v.id.index() != i {
                return Err(Error::Config(format!("vehicle {i} has id {}", v.id.0)));
            }
            if !(network.contains(v.origin) && network.contains(v.destination)) {
                return Err(Error::Config(format!("vehicle {i} has an unknown node")));
            }
            if !(v.departure.is_finite() && v.departure >= 0.0) {
                return Err(Error::Config(format!("vehicle {i} departs at {}", v.departure)));
            }
        }
        Ok(Self {
            network,
            modes,
            vehicles,
            half_width,
            candidates,
            seed: 0,
        })
    }
}

/// Samples the fleet: vehicles are numbered private first, then autonomous,
/// then ride-hailing. Each draws a departure time, then an origin, then a
/// destination, all uniformly.
pub fn generate_scenario(
    network: RoadNetwork,
    modes: ModeTable,
    fleet: &FleetConfig,
    params: &SimParams,
    seed: u64,
) -> Result<Scenario> {
    fleet.validate()?;
    params.validate()?;
    let origins = network.origins().to_vec();
    let destinations = network.destinations().to_vec();
    if origins.is_empty() || destinations.is_empty() {
        return Err(Error::Config(
            "network needs at least one origin and one destination".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vehicles = Vec::with_capacity(fleet.total());
    for mode in Mode::ALL {
        for _ in 0..fleet.count(mode) {
            let departure = rng.random_range(fleet.depart_start_min..fleet.depart_end_min);
            let origin = origins[rng.random_range(0..origins.len())];
            let destination = destinations[rng.random_range(0..destinations.len())];
            vehicles.push(VehicleSpec {
                id: VehicleId(vehicles.len() as u32),
                mode,
                origin,
                destination,
                departure,
            });
        }
    }
    let mut scenario = Scenario::new(network, modes, vehicles, params.half_width_min(), params.candidates)?;
    scenario.seed = seed;
    Ok(scenario)
}
