//! Discrete-event simulation of a mixed fleet.
//!
//! Every node a vehicle reaches is a decision point. Events that share a
//! timestamp are handled as one batch: each vehicle in the batch plans in
//! turn and its edge entry is logged, then every entering vehicle's
//! traversal time is fixed from the monitored flow on its edge, which by
//! then includes all simultaneous entries.

mod event;
mod scenario;

pub use event::{Event, EventQueue};
pub use scenario::{generate_scenario, FleetConfig, Scenario, SimParams, VehicleSpec};

use std::collections::HashMap;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::equity::{dte, dtx_for_trip_time, DtxScore, EquityReport, Mode, ModeParams, TripMinima};
use crate::error::{Error, Result};
use crate::flow::{monitor_adjacent_flow, EntryLog, PlanRegistry, VehicleId};
use crate::network::{EdgeId, NodeId, Route};
use crate::planner::{
    plan_psr, score_dsr, score_equity, CandidateCache, DecisionPoint, PlanningDecision, Strategy, TripProfile,
    WorldSnapshot,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Waiting,
    EnRoute,
    Completed,
    Failed,
}

/// One edge traversal as it happened.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    pub edge: EdgeId,
    pub entry: f64,
    /// Monitored flow at entry, veh/min.
    pub flow: f64,
    pub travel_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleState {
    pub spec: VehicleSpec,
    pub minima: Option<TripMinima>,
    pub status: Status,
    /// Remaining route from the last node reached.
    pub plan: Option<Route>,
    pub experienced: Vec<Traversal>,
    /// Nodes reached, with arrival times.
    pub arrivals: Vec<(NodeId, f64)>,
    pub reroutes: u32,
    pub failure: Option<String>,
}

impl VehicleState {
    fn new(spec: VehicleSpec) -> Self {
        Self {
            spec,
            minima: None,
            status: Status::Waiting,
            plan: None,
            experienced: Vec::new(),
            arrivals: Vec::new(),
            reroutes: 0,
            failure: None,
        }
    }

    pub fn travel_time(&self) -> f64 {
        self.experienced.iter().map(|t| t.travel_time).sum()
    }

    pub fn completion(&self) -> Option<f64> {
        match self.status {
            Status::Completed => self.arrivals.last().map(|&(_, t)| t),
            _ => None,
        }
    }

    fn fail(&mut self, reason: String) {
        debug!("vehicle {} failed: {reason}", self.spec.id.0);
        self.status = Status::Failed;
        self.plan = None;
        self.failure = Some(reason);
    }
}

/// Score of a completed trip from its realised travel time.
pub fn final_dtx(vehicle: &VehicleState, minima: &TripMinima, mode: &ModeParams) -> Result<DtxScore> {
    if vehicle.status != Status::Completed {
        return Err(Error::State(format!(
            "vehicle {} has not completed its trip",
            vehicle.spec.id.0
        )));
    }
    if minima.is_degenerate() {
        return Ok(DtxScore::perfect(mode));
    }
    Ok(dtx_for_trip_time(vehicle.travel_time(), minima, mode))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: u32,
    pub mode: Mode,
    /// Node labels.
    pub origin: u64,
    pub dest: u64,
    pub depart_min: f64,
    pub complete_min: Option<f64>,
    pub travel_min: Option<f64>,
    pub cost_usd: Option<f64>,
    pub dtx: Option<f64>,
    pub status: Status,
    pub reroutes: u32,
    pub failure: Option<String>,
    pub traversals: Vec<Traversal>,
}

impl VehicleRecord {
    /// Origin equals destination; such trips are left out of fleet metrics.
    pub fn is_degenerate(&self) -> bool {
        self.origin == self.dest
    }

    fn scored(&self) -> bool {
        self.status == Status::Completed && !self.is_degenerate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub completed: usize,
    pub mean_travel_min: Option<f64>,
    pub mean_cost_usd: Option<f64>,
    pub mean_dtx: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub strategy: Strategy,
    pub seed: u64,
    pub vehicles: Vec<VehicleRecord>,
    /// Over completed, non-degenerate trips; absent when there are none.
    pub fleet_equity: Option<EquityReport>,
    pub modes: Vec<ModeSummary>,
    pub completed: usize,
    pub failed: usize,
    pub degenerate: usize,
    pub decisions: u64,
}

impl RunResults {
    pub fn fleet_dte(&self) -> Option<f64> {
        self.fleet_equity.as_ref().map(|e| e.dte)
    }

    pub fn mode(&self, mode: Mode) -> &ModeSummary {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .expect("one summary per mode")
    }
}

struct Run<'a> {
    scenario: &'a Scenario,
    strategy: Strategy,
    vehicles: Vec<VehicleState>,
    trips: Vec<TripProfile>,
    log: EntryLog,
    registry: PlanRegistry,
    cache: CandidateCache,
    queue: EventQueue,
    decisions: u64,
}

/// Simulates `scenario` with every vehicle following `strategy`.
pub fn run(scenario: &Scenario, strategy: Strategy) -> Result<RunResults> {
    let mut sim = Run::new(scenario, strategy)?;
    while let Some((now, batch)) = sim.queue.pop_batch() {
        sim.step(now, &batch)?;
    }
    let results = sim.finish()?;
    info!(
        "{strategy}: {} completed, {} failed, fleet DTE {:?}",
        results.completed,
        results.failed,
        results.fleet_dte()
    );
    Ok(results)
}

impl<'a> Run<'a> {
    fn new(scenario: &'a Scenario, strategy: Strategy) -> Result<Self> {
        let network = &scenario.network;
        let mut vehicles: Vec<VehicleState> = scenario.vehicles.iter().copied().map(VehicleState::new).collect();
        let mut minima_by_od: HashMap<(NodeId, NodeId), Result<TripMinima, String>> = HashMap::new();
        let mut trips = Vec::with_capacity(vehicles.len());
        for v in &mut vehicles {
            let key = (v.spec.origin, v.spec.destination);
            let minima = minima_by_od
                .entry(key)
                .or_insert_with(|| {
                    crate::equity::trip_minima(network, key.0, key.1, &scenario.modes).map_err(|e| e.to_string())
                })
                .clone();
            // Placeholder minima keep trips indexable; failed vehicles never plan.
            let placeholder = TripMinima {
                tau_min: 0.0,
                phi_min: 0.0,
                q_min: scenario.modes.inconvenience_min(),
            };
            match minima {
                Ok(m) => v.minima = Some(m),
                Err(reason) => v.fail(reason),
            }
            trips.push(TripProfile {
                mode: v.spec.mode,
                departure: v.spec.departure,
                minima: v.minima.unwrap_or(placeholder),
            });
        }
        let mut queue = EventQueue::new();
        for v in vehicles.iter().filter(|v| v.status == Status::Waiting) {
            queue.push(v.spec.departure, Event::Depart(v.spec.id));
        }
        Ok(Self {
            scenario,
            strategy,
            vehicles,
            trips,
            log: EntryLog::new(network),
            registry: PlanRegistry::new(),
            cache: CandidateCache::new(network, scenario.candidates)?,
            queue,
            decisions: 0,
        })
    }

    fn step(&mut self, now: f64, batch: &[Event]) -> Result<()> {
        let network = &self.scenario.network;
        let horizon = 2.0 * self.scenario.half_width + network.max_free_flow_time();
        self.log.prune_before(now - horizon);

        let mut entering: Vec<(VehicleId, EdgeId)> = Vec::new();
        for &event in batch {
            let (id, node) = match event {
                Event::Depart(v) => (v, self.vehicles[v.index()].spec.origin),
                Event::ArriveAtNode(v, n) => (v, n),
            };
            let state = &mut self.vehicles[id.index()];
            state.status = Status::EnRoute;
            state.arrivals.push((node, now));
            if node == state.spec.destination {
                state.status = Status::Completed;
                state.plan = None;
                self.registry.remove(id);
                continue;
            }
            let route = match self.decide(id, node, now) {
                Ok(route) => route,
                Err(e) => {
                    self.vehicles[id.index()].fail(e.to_string());
                    self.registry.remove(id);
                    continue;
                }
            };
            let state = &mut self.vehicles[id.index()];
            if state.plan.as_ref().is_some_and(|old| *old != route) {
                state.reroutes += 1;
            }
            let edge = route.edges()[0];
            state.plan = Some(route.clone());
            self.registry.register(id, route, now);
            self.log.record(id, edge, now)?;
            entering.push((id, edge));
        }

        for (id, edge) in entering {
            let flow = monitor_adjacent_flow(&self.log, edge, now, self.scenario.half_width, id);
            let travel_time = network.travel_time(edge, flow)?;
            let state = &mut self.vehicles[id.index()];
            state.experienced.push(Traversal {
                edge,
                entry: now,
                flow,
                travel_time,
            });
            let plan = state.plan.as_ref().expect("just planned");
            state.plan = plan.advance();
            let next = network.edge(edge).to;
            self.queue.push(now + travel_time, Event::ArriveAtNode(id, next));
        }
        Ok(())
    }

    /// Route from `node` for vehicle `id`, never revisiting a node it has
    /// already passed.
    fn decide(&mut self, id: VehicleId, node: NodeId, now: f64) -> Result<Route> {
        let state = &self.vehicles[id.index()];
        let point = DecisionPoint {
            vehicle: id,
            at: node,
            destination: state.spec.destination,
        };
        if !self.strategy.replans() {
            if let Some(plan) = &state.plan {
                return Ok(plan.clone());
            }
        }
        self.decisions += 1;
        let network = &self.scenario.network;
        let decision: PlanningDecision = match self.strategy {
            Strategy::Psr => plan_psr(&point, network)?,
            Strategy::Dsr | Strategy::Equity => {
                let passed: Vec<NodeId> = state.arrivals[..state.arrivals.len() - 1]
                    .iter()
                    .map(|&(n, _)| n)
                    .collect();
                let candidates = self.cache.get_avoiding(network, node, point.destination, &passed)?;
                let world = WorldSnapshot {
                    network,
                    log: &self.log,
                    registry: &self.registry,
                    modes: &self.scenario.modes,
                    trips: &self.trips,
                    now,
                    half_width: self.scenario.half_width,
                };
                match self.strategy {
                    Strategy::Dsr => score_dsr(&point, &world, &candidates)?,
                    _ => score_equity(&point, &world, &candidates)?,
                }
            }
        };
        Ok(decision.route)
    }

    fn finish(self) -> Result<RunResults> {
        let network = &self.scenario.network;
        let modes = &self.scenario.modes;
        let mut records = Vec::with_capacity(self.vehicles.len());
        for v in &self.vehicles {
            if !matches!(v.status, Status::Completed | Status::Failed) {
                return Err(Error::State(format!("vehicle {} never finished", v.spec.id.0)));
            }
            let params = modes.get(v.spec.mode);
            let completed = v.status == Status::Completed;
            let travel = completed.then(|| v.travel_time());
            let dtx = match (completed, &v.minima) {
                (true, Some(m)) => Some(final_dtx(v, m, params)?.value),
                _ => None,
            };
            records.push(VehicleRecord {
                id: v.spec.id.0,
                mode: v.spec.mode,
                origin: network.label(v.spec.origin),
                dest: network.label(v.spec.destination),
                depart_min: v.spec.departure,
                complete_min: v.completion(),
                travel_min: travel,
                cost_usd: travel.map(|t| params.epsilon_usd_per_min * t),
                dtx,
                status: v.status,
                reroutes: v.reroutes,
                failure: v.failure.clone(),
                traversals: v.experienced.clone(),
            });
        }
        summarize(self.strategy, self.scenario.seed, records, modes, self.decisions)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Fleet-level metrics from per-vehicle records.
pub fn summarize(
    strategy: Strategy,
    seed: u64,
    vehicles: Vec<VehicleRecord>,
    modes: &crate::equity::ModeTable,
    decisions: u64,
) -> Result<RunResults> {
    let scored: Vec<&VehicleRecord> = vehicles.iter().filter(|r| r.scored()).collect();
    let entries: Vec<(f64, u32)> = scored
        .iter()
        .map(|r| (r.dtx.expect("completed trips are scored"), modes.get(r.mode).occupancy))
        .collect();
    let fleet_equity = if entries.is_empty() { None } else { Some(dte(&entries)?) };
    let summaries = Mode::ALL
        .iter()
        .map(|&mode| {
            let of_mode = || scored.iter().filter(move |r| r.mode == mode);
            ModeSummary {
                mode,
                completed: of_mode().count(),
                mean_travel_min: mean(of_mode().filter_map(|r| r.travel_min)),
                mean_cost_usd: mean(of_mode().filter_map(|r| r.cost_usd)),
                mean_dtx: mean(of_mode().filter_map(|r| r.dtx)),
            }
        })
        .collect();
    Ok(RunResults {
        strategy,
        seed,
        completed: vehicles.iter().filter(|r| r.status == Status::Completed).count(),
        failed: vehicles.iter().filter(|r| r.status == Status::Failed).count(),
        degenerate: vehicles
            .iter()
            .filter(|r| r.status == Status::Completed && r.is_degenerate())
            .count(),
        fleet_equity,
        modes: summaries,
        vehicles,
        decisions,
    })
}
