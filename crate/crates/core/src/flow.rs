//! Flow monitoring on the edge a vehicle is about to enter, flow estimation on
//! edges further along its route, and the rollout that chains the two into an
//! estimated arrival schedule.
//!
//! Times are minutes. Every flow counts the subject vehicle itself, so flows
//! are at least `1 / (2 * half_width)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EdgeId, RoadNetwork, Route};

/// Vehicle identifier, assigned in generation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl VehicleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Closed interval `[center - half_width, center + half_width]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorWindow {
    pub center: f64,
    pub half_width: f64,
}

impl MonitorWindow {
    pub fn new(center: f64, half_width: f64) -> Self {
        Self { center, half_width }
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        self.lower() <= t && t <= self.upper()
    }
}

pub fn in_window(t: f64, window: MonitorWindow) -> bool {
    window.contains(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub vehicle: VehicleId,
    pub edge: EdgeId,
    pub time: f64,
}

/// Append-only record of edge entries, kept per edge in time order.
#[derive(Clone, Debug, Default)]
pub struct EntryLog {
    by_edge: Vec<Vec<(f64, VehicleId)>>,
    len: usize,
}

impl EntryLog {
    pub fn new(network: &RoadNetwork) -> Self {
        Self {
            by_edge: vec![Vec::new(); network.edge_count()],
            len: 0,
        }
    }

    pub fn from_records(network: &RoadNetwork, records: &[EntryRecord]) -> Result<Self> {
        let mut log = Self::new(network);
        for r in records {
            log.record(r.vehicle, r.edge, r.time)?;
        }
        Ok(log)
    }

    /// Appends an entry. Entries on one edge must arrive in non-decreasing
    /// time order.
    pub fn record(&mut self, vehicle: VehicleId, edge: EdgeId, time: f64) -> Result<()> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::Input(format!("entry time must be >= 0, got {time}")));
        }
        let list = self
            .by_edge
            .get_mut(edge.index())
            .ok_or_else(|| Error::Input(format!("unknown edge {edge:?}")))?;
        if let Some(&(last, _)) = list.last() {
            if time < last {
                return Err(Error::State(format!(
                    "entry at {time} precedes logged entry at {last} on edge {edge:?}"
                )));
            }
        }
        list.push((time, vehicle));
        self.len += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entries on `edge` by vehicles other than `exclude` inside `window`.
    pub fn count_in_window(&self, edge: EdgeId, window: MonitorWindow, exclude: VehicleId) -> usize {
        let list = &self.by_edge[edge.index()];
        let start = list.partition_point(|&(t, _)| t < window.lower());
        list[start..]
            .iter()
            .take_while(|&&(t, _)| t <= window.upper())
            .filter(|&&(_, v)| v != exclude)
            .count()
    }

    /// Drops entries strictly older than `before`.
    pub fn prune_before(&mut self, before: f64) {
        for list in &mut self.by_edge {
            let cut = list.partition_point(|&(t, _)| t < before);
            if cut > 0 {
                list.drain(..cut);
                self.len -= cut;
            }
        }
    }
}

/// A vehicle's committed remaining route and the time it reached the route's
/// first node.
#[derive(Clone, Debug, PartialEq)]
pub struct RegisteredPlan {
    pub route: Route,
    pub head_arrival: f64,
}

impl RegisteredPlan {
    /// Projected entry time of every edge of the plan, accumulating free-flow
    /// times from the head arrival.
    pub fn projected_entries<'a>(&'a self, network: &'a RoadNetwork) -> impl Iterator<Item = (EdgeId, f64)> + 'a {
        let mut t = self.head_arrival;
        self.route.edges().iter().map(move |&e| {
            let entry = t;
            t += network.edge(e).free_flow_time;
            (e, entry)
        })
    }
}

/// Current plans of all active vehicles, with an index from each edge to
/// the vehicles whose plan uses it.
#[derive(Clone, Debug, Default)]
pub struct PlanRegistry {
    plans: BTreeMap<VehicleId, RegisteredPlan>,
    users: BTreeMap<EdgeId, BTreeSet<VehicleId>>,
}

impl PlanRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any earlier plan of `vehicle`.
    pub fn register(&mut self, vehicle: VehicleId, route: Route, head_arrival: f64) {
        self.remove(vehicle);
        for &e in route.edges() {
            self.users.entry(e).or_default().insert(vehicle);
        }
        self.plans.insert(vehicle, RegisteredPlan { route, head_arrival });
    }

    pub fn remove(&mut self, vehicle: VehicleId) -> Option<RegisteredPlan> {
        let plan = self.plans.remove(&vehicle)?;
        for e in plan.route.edges() {
            if let Some(set) = self.users.get_mut(e) {
                set.remove(&vehicle);
                if set.is_empty() {
                    self.users.remove(e);
                }
            }
        }
        Some(plan)
    }

    pub fn get(&self, vehicle: VehicleId) -> Option<&RegisteredPlan> {
        self.plans.get(&vehicle)
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// Plans in vehicle-id order.
    pub fn iter(&self) -> impl Iterator<Item = (VehicleId, &RegisteredPlan)> {
        self.plans.iter().map(|(&v, p)| (v, p))
    }

    /// Vehicles whose plan uses `edge`, in id order.
    pub fn users_of(&self, edge: EdgeId) -> impl Iterator<Item = VehicleId> + '_ {
        self.users.get(&edge).into_iter().flatten().copied()
    }
}

fn per_window(count: usize, half_width: f64) -> f64 {
    (count as f64 + 1.0) / (2.0 * half_width)
}

fn check_half_width(half_width: f64) -> Result<()> {
    if half_width > 0.0 && half_width.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("window half-width must be > 0, got {half_width}")))
    }
}

/// Monitored flow on the edge entered at `arrival`: other vehicles' entries
/// inside the window, plus the subject, over the window length.
pub fn monitor_adjacent_flow(log: &EntryLog, edge: EdgeId, arrival: f64, half_width: f64, subject: VehicleId) -> f64 {
    let count = log.count_in_window(edge, MonitorWindow::new(arrival, half_width), subject);
    per_window(count, half_width)
}

/// Estimated flow on `edge` when the subject is expected to enter it at
/// `est_arrival`, from the projected entries of every other registered plan
/// that uses the edge.
pub fn estimate_future_flow(
    registry: &PlanRegistry,
    network: &RoadNetwork,
    edge: EdgeId,
    est_arrival: f64,
    half_width: f64,
    subject: VehicleId,
) -> f64 {
    per_window(
        projected_count(
            registry,
            network,
            edge,
            MonitorWindow::new(est_arrival, half_width),
            subject,
        ),
        half_width,
    )
}

fn projected_count(
    registry: &PlanRegistry,
    network: &RoadNetwork,
    edge: EdgeId,
    window: MonitorWindow,
    subject: VehicleId,
) -> usize {
    registry
        .users_of(edge)
        .filter(|&v| v != subject)
        .filter_map(|v| registry.get(v))
        .flat_map(|plan| plan.projected_entries(network))
        .filter(|&(e, t)| e == edge && window.contains(t))
        .count()
}

/// Estimated traversal of a route: entry time, flow and travel time per edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteRollout {
    pub entry_times: Vec<f64>,
    pub flows: Vec<f64>,
    pub travel_times: Vec<f64>,
    pub total: f64,
}

impl RouteRollout {
    pub fn arrival(&self) -> Option<f64> {
        match (self.entry_times.last(), self.travel_times.last()) {
            (Some(t), Some(d)) => Some(t + d),
            _ => None,
        }
    }
}

/// Read-only traffic picture used to roll out candidate routes for one
/// subject vehicle.
pub struct FlowView<'a> {
    network: &'a RoadNetwork,
    log: &'a EntryLog,
    registry: &'a PlanRegistry,
    half_width: f64,
    subject: VehicleId,
}

impl<'a> FlowView<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        log: &'a EntryLog,
        registry: &'a PlanRegistry,
        half_width: f64,
        subject: VehicleId,
    ) -> Result<Self> {
        check_half_width(half_width)?;
        Ok(Self {
            network,
            log,
            registry,
            half_width,
            subject,
        })
    }

    /// First edge from the monitored flow, each later edge from the flow
    /// estimated at the accumulated arrival time.
    pub fn rollout(&self, route: &Route, start: f64) -> Result<RouteRollout> {
        let edges = route.edges();
        if edges.is_empty() {
            return Err(Error::Input("cannot roll out an empty route".into()));
        }
        if let Some(e) = edges.iter().find(|e| e.index() >= self.network.edge_count()) {
            return Err(Error::Input(format!("edge {e:?} not in network")));
        }
        let n = edges.len();
        let mut rollout = RouteRollout {
            entry_times: Vec::with_capacity(n),
            flows: Vec::with_capacity(n),
            travel_times: Vec::with_capacity(n),
            total: 0.0,
        };
        let mut t = start;
        for (s, &e) in edges.iter().enumerate() {
            let flow = if s == 0 {
                monitor_adjacent_flow(self.log, e, t, self.half_width, self.subject)
            } else {
                let window = MonitorWindow::new(t, self.half_width);
                let count = projected_count(self.registry, self.network, e, window, self.subject);
                per_window(count, self.half_width)
            };
            let tau = self.network.travel_time(e, flow)?;
            rollout.entry_times.push(t);
            rollout.flows.push(flow);
            rollout.travel_times.push(tau);
            rollout.total += tau;
            t += tau;
        }
        Ok(rollout)
    }
}

/// Rolls out `route` for `subject` starting at `start`.
pub fn rollout_route(
    network: &RoadNetwork,
    log: &EntryLog,
    registry: &PlanRegistry,
    route: &Route,
    start: f64,
    half_width: f64,
    subject: VehicleId,
) -> Result<RouteRollout> {
    FlowView::new(network, log, registry, half_width, subject)?.rollout(route, start)
}
