//! Route choice at a decision point.
//!
//! Three strategies share one candidate set, the `L` free-flow shortest
//! loopless routes from the current node:
//!
//! * `equity` picks the candidate that maximises the trip equity of the
//!   subject and its road-resource competitors,
//! * `dsr` picks the candidate with the least rolled-out remaining time,
//! * `psr` takes the free-flow shortest route once, at the origin.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equity::{competitors, dte, dtx, dtx_for_trip_time, Mode, ModeTable, TripMinima};
use crate::error::{Error, Result};
use crate::flow::{EntryLog, FlowView, PlanRegistry, RouteRollout, VehicleId};
use crate::network::{free_flow_route_time, NodeId, RoadNetwork, Route};
use crate::paths::{k_shortest_routes, k_shortest_routes_avoiding, shortest_route, CandidateSet, Weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Psr,
    Dsr,
    Equity,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Psr, Strategy::Dsr, Strategy::Equity];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Psr => "psr",
            Strategy::Dsr => "dsr",
            Strategy::Equity => "equity",
        }
    }

    /// Whether the strategy revises its route after leaving the origin.
    pub fn replans(self) -> bool {
        !matches!(self, Strategy::Psr)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psr" => Ok(Strategy::Psr),
            "dsr" => Ok(Strategy::Dsr),
            "equity" => Ok(Strategy::Equity),
            other => Err(Error::Config(format!(
                "unknown strategy '{other}', expected psr, dsr or equity"
            ))),
        }
    }
}

/// What the planner needs to know about any vehicle's trip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripProfile {
    pub mode: Mode,
    pub departure: f64,
    pub minima: TripMinima,
}

/// Immutable view of the world at one instant.
#[derive(Clone, Copy)]
pub struct WorldSnapshot<'a> {
    pub network: &'a RoadNetwork,
    pub log: &'a EntryLog,
    pub registry: &'a PlanRegistry,
    pub modes: &'a ModeTable,
    /// Indexed by vehicle id.
    pub trips: &'a [TripProfile],
    pub now: f64,
    /// Monitoring half-width, minutes.
    pub half_width: f64,
}

impl WorldSnapshot<'_> {
    fn trip(&self, vehicle: VehicleId) -> Result<&TripProfile> {
        self.trips
            .get(vehicle.index())
            .ok_or_else(|| Error::State(format!("no trip profile for vehicle {}", vehicle.0)))
    }
}

/// A vehicle standing at a decision point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecisionPoint {
    pub vehicle: VehicleId,
    pub at: NodeId,
    pub destination: NodeId,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateScore {
    #[serde(skip)]
    pub route: Route,
    pub free_flow_time: f64,
    /// Rolled-out remaining time; absent for strategies that do not roll out.
    pub estimated_time: Option<f64>,
    pub dtx: Option<f64>,
    pub dte: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanningDecision {
    pub strategy: Strategy,
    #[serde(skip)]
    pub route: Route,
    /// DTE for `equity`, estimated remaining minutes for `dsr`, free-flow
    /// minutes for `psr`.
    pub objective: f64,
    /// Index of the chosen route in `candidates`.
    pub chosen: usize,
    pub candidates: Vec<CandidateScore>,
    /// Size of the competitor set, subject included. Zero when not computed.
    pub competitors: usize,
}

/// Free-flow candidate sets, memoised per node pair. Candidates depend only
/// on the network, so one cache serves a whole run.
#[derive(Clone, Debug)]
pub struct CandidateCache {
    weights: Weights,
    l: usize,
    sets: HashMap<(NodeId, NodeId), CandidateSet>,
}

impl CandidateCache {
    pub fn new(network: &RoadNetwork, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::Input("candidate count must be at least 1".into()));
        }
        Ok(Self {
            weights: Weights::free_flow(network),
            l,
            sets: HashMap::new(),
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn get(&mut self, network: &RoadNetwork, from: NodeId, to: NodeId) -> Result<&CandidateSet> {
        if !self.sets.contains_key(&(from, to)) {
            let set = k_shortest_routes(network, &self.weights, from, to, self.l)?;
            self.sets.insert((from, to), set);
        }
        Ok(&self.sets[&(from, to)])
    }

    /// Candidates that touch none of `avoid`. The memoised set is reused when
    /// no member touches `avoid`; otherwise the search reruns with those
    /// nodes removed.
    pub fn get_avoiding(
        &mut self,
        network: &RoadNetwork,
        from: NodeId,
        to: NodeId,
        avoid: &[NodeId],
    ) -> Result<Cow<'_, CandidateSet>> {
        let l = self.l;
        let cached = self.get(network, from, to)?;
        let clean = |r: &Route| !r.nodes().iter().any(|n| avoid.contains(n));
        if avoid.is_empty() || cached.iter().all(clean) {
            return Ok(Cow::Borrowed(self.sets.get(&(from, to)).expect("just cached")));
        }
        k_shortest_routes_avoiding(network, &self.weights, from, to, l, avoid).map(Cow::Owned)
    }
}

fn check_point(point: &DecisionPoint, network: &RoadNetwork) -> Result<()> {
    if point.at == point.destination {
        return Err(Error::State(format!(
            "vehicle {} is already at its destination",
            point.vehicle.0
        )));
    }
    if !network.contains(point.at) || !network.contains(point.destination) {
        return Err(Error::Input(format!("vehicle {} has an unknown node", point.vehicle.0)));
    }
    Ok(())
}

fn candidates_for(point: &DecisionPoint, network: &RoadNetwork, l: usize) -> Result<CandidateSet> {
    check_point(point, network)?;
    k_shortest_routes(network, &Weights::free_flow(network), point.at, point.destination, l)
}

/// Best first: higher DTE, then shorter estimated time, then node order.
fn equity_order(a: &CandidateScore, b: &CandidateScore) -> Ordering {
    let dte = |c: &CandidateScore| c.dte.unwrap_or(f64::NEG_INFINITY);
    let est = |c: &CandidateScore| c.estimated_time.unwrap_or(f64::INFINITY);
    dte(b)
        .total_cmp(&dte(a))
        .then_with(|| est(a).total_cmp(&est(b)))
        .then_with(|| a.route.nodes().cmp(b.route.nodes()))
}

/// Best first: shorter estimated time, then node order.
fn time_order(a: &CandidateScore, b: &CandidateScore) -> Ordering {
    let est = |c: &CandidateScore| c.estimated_time.unwrap_or(f64::INFINITY);
    est(a)
        .total_cmp(&est(b))
        .then_with(|| a.route.nodes().cmp(b.route.nodes()))
}

fn best_by(scores: &[CandidateScore], order: fn(&CandidateScore, &CandidateScore) -> Ordering) -> usize {
    (1..scores.len()).fold(0, |best, i| {
        if order(&scores[i], &scores[best]) == Ordering::Less {
            i
        } else {
            best
        }
    })
}

fn rollouts(
    point: &DecisionPoint,
    world: &WorldSnapshot<'_>,
    candidates: &CandidateSet,
) -> Result<Vec<(RouteRollout, f64)>> {
    let view = FlowView::new(
        world.network,
        world.log,
        world.registry,
        world.half_width,
        point.vehicle,
    )?;
    candidates
        .routes
        .iter()
        .map(|w| Ok((view.rollout(&w.route, world.now)?, w.weight)))
        .collect()
}

/// Equity-maximising choice among `l` free-flow candidates.
pub fn plan_equity(point: &DecisionPoint, world: &WorldSnapshot<'_>, l: usize) -> Result<PlanningDecision> {
    let candidates = candidates_for(point, world.network, l)?;
    score_equity(point, world, &candidates)
}

/// Equity-maximising choice among precomputed candidates.
///
/// Competitors are scored on their registered plans at free-flow speed from
/// their last decision point; the subject is scored on the rolled-out
/// candidate. With no competitor the free-flow shortest candidate is taken.
pub fn score_equity(
    point: &DecisionPoint,
    world: &WorldSnapshot<'_>,
    candidates: &CandidateSet,
) -> Result<PlanningDecision> {
    check_point(point, world.network)?;
    if candidates.is_empty() {
        return Err(no_route(world.network, point));
    }
    let subject = *world.trip(point.vehicle)?;
    let subject_mode = world.modes.get(subject.mode);
    let rrc = competitors(point.vehicle, candidates, world.registry);

    let mut others = Vec::with_capacity(rrc.len());
    for &v in rrc.iter().filter(|&&v| v != point.vehicle) {
        let plan = world
            .registry
            .get(v)
            .ok_or_else(|| Error::State(format!("competitor {} has no plan", v.0)))?;
        let trip = world.trip(v)?;
        let params = world.modes.get(trip.mode);
        let remaining = free_flow_route_time(world.network, &plan.route)?;
        let experienced = plan.head_arrival - trip.departure;
        let score = dtx_for_trip_time(experienced + remaining, &trip.minima, params);
        others.push((score.value, params.occupancy));
    }

    let experienced = world.now - subject.departure;
    let mut scores = Vec::with_capacity(candidates.len());
    for (w, (rollout, free_flow_time)) in candidates.routes.iter().zip(rollouts(point, world, candidates)?) {
        let mine = dtx(experienced, &rollout, &subject.minima, subject_mode).value;
        let equity = if others.is_empty() {
            1.0
        } else {
            let mut entries = Vec::with_capacity(others.len() + 1);
            entries.push((mine, subject_mode.occupancy));
            entries.extend_from_slice(&others);
            dte(&entries)?.dte
        };
        scores.push(CandidateScore {
            route: w.route.clone(),
            free_flow_time,
            estimated_time: Some(rollout.total),
            dtx: Some(mine),
            dte: Some(equity),
        });
    }

    let chosen = if others.is_empty() {
        0
    } else {
        best_by(&scores, equity_order)
    };
    let decision = PlanningDecision {
        strategy: Strategy::Equity,
        route: scores[chosen].route.clone(),
        objective: scores[chosen].dte.expect("scored"),
        chosen,
        candidates: scores,
        competitors: rrc.len(),
    };
    debug_assert!(decision
        .candidates
        .iter()
        .all(|c| c.dte.expect("scored") <= decision.objective));
    Ok(decision)
}

/// Least rolled-out remaining time among `l` free-flow candidates.
pub fn plan_dsr(point: &DecisionPoint, world: &WorldSnapshot<'_>, l: usize) -> Result<PlanningDecision> {
    let candidates = candidates_for(point, world.network, l)?;
    score_dsr(point, world, &candidates)
}

/// Least rolled-out remaining time among precomputed candidates.
pub fn score_dsr(
    point: &DecisionPoint,
    world: &WorldSnapshot<'_>,
    candidates: &CandidateSet,
) -> Result<PlanningDecision> {
    check_point(point, world.network)?;
    if candidates.is_empty() {
        return Err(no_route(world.network, point));
    }
    let scores: Vec<CandidateScore> = candidates
        .routes
        .iter()
        .zip(rollouts(point, world, candidates)?)
        .map(|(w, (rollout, free_flow_time))| CandidateScore {
            route: w.route.clone(),
            free_flow_time,
            estimated_time: Some(rollout.total),
            dtx: None,
            dte: None,
        })
        .collect();
    let chosen = best_by(&scores, time_order);
    Ok(PlanningDecision {
        strategy: Strategy::Dsr,
        route: scores[chosen].route.clone(),
        objective: scores[chosen].estimated_time.expect("rolled out"),
        chosen,
        candidates: scores,
        competitors: 0,
    })
}

/// Free-flow shortest route, planned once at departure.
pub fn plan_psr(point: &DecisionPoint, network: &RoadNetwork) -> Result<PlanningDecision> {
    check_point(point, network)?;
    let weights = Weights::free_flow(network);
    let route = shortest_route(network, &weights, point.at, point.destination)?;
    let free_flow_time = weights.route_weight(&route);
    Ok(PlanningDecision {
        strategy: Strategy::Psr,
        route: route.clone(),
        objective: free_flow_time,
        chosen: 0,
        candidates: vec![CandidateScore {
            route,
            free_flow_time,
            estimated_time: None,
            dtx: None,
            dte: None,
        }],
        competitors: 0,
    })
}

fn no_route(network: &RoadNetwork, point: &DecisionPoint) -> Error {
    Error::NoRoute {
        from: network.label(point.at),
        to: network.label(point.destination),
    }
}
