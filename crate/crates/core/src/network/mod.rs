//! Directed road graph with free-flow attributes and the BPR volume-delay curve.

mod file;
pub mod generate;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{BprSpec, EdgeSpec, NetworkSpec, NodeSpec};

/// Default BPR sensitivity coefficient.
pub const DEFAULT_BPR_ALPHA: f64 = 0.15;
/// Default BPR exponent.
pub const DEFAULT_BPR_BETA: f64 = 4.0;

/// Dense node index. Indices follow the ascending order of the external node
/// labels, so comparing `NodeId`s compares labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense edge index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    /// Identifier as written in the network file.
    pub label: u64,
    pub x: Option<f64>,
    pub y: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// Minutes.
    pub free_flow_time: f64,
    /// Vehicles per minute per lane.
    pub capacity: f64,
    pub lanes: u32,
}

impl Edge {
    /// Capacity across all lanes, vehicles per minute.
    #[inline]
    pub fn effective_capacity(&self) -> f64 {
        self.capacity * f64::from(self.lanes)
    }
}

/// BPR curve parameters, shared by every edge of a network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bpr {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Bpr {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_BPR_ALPHA,
            beta: DEFAULT_BPR_BETA,
        }
    }
}

/// Immutable road network. Built from a [`NetworkSpec`] after validation.
#[derive(Clone, Debug)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    edge_index: HashMap<(NodeId, NodeId), EdgeId>,
    origins: Vec<NodeId>,
    destinations: Vec<NodeId>,
    bpr: Bpr,
}

impl RoadNetwork {
    /// Validates `spec` and builds the network. Any finding from
    /// [`validate_network`] is an error; unreachable OD pairs are reported
    /// separately so callers can tell them apart from malformed input.
    pub fn build(spec: &NetworkSpec) -> Result<Self> {
        let report = validate_network(spec);
        if !report.is_empty() {
            return Err(Error::InvalidNetwork(report));
        }
        Ok(Self::build_unchecked(spec))
    }

    fn build_unchecked(spec: &NetworkSpec) -> Self {
        let mut labels: Vec<&NodeSpec> = spec.nodes.iter().collect();
        labels.sort_by_key(|n| n.id);
        let lookup: HashMap<u64, NodeId> = labels
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, NodeId(i as u32)))
            .collect();
        let nodes = labels
            .iter()
            .map(|n| Node {
                label: n.id,
                x: n.x,
                y: n.y,
            })
            .collect::<Vec<_>>();

        let mut edges = Vec::with_capacity(spec.edges.len());
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut edge_index = HashMap::with_capacity(spec.edges.len());
        for e in &spec.edges {
            let from = lookup[&e.from];
            let to = lookup[&e.to];
            let id = EdgeId(edges.len() as u32);
            edges.push(Edge {
                from,
                to,
                free_flow_time: e.free_flow_minutes().expect("validated"),
                capacity: e.capacity_veh_per_min_per_lane,
                lanes: e.lanes,
            });
            out_edges[from.index()].push(id);
            edge_index.insert((from, to), id);
        }
        // Deterministic adjacency order: by head node.
        for list in &mut out_edges {
            list.sort_by_key(|&id| edges[id.index()].to);
        }
        let mut origins: Vec<NodeId> = spec.origins.iter().map(|o| lookup[o]).collect();
        let mut destinations: Vec<NodeId> = spec.destinations.iter().map(|d| lookup[d]).collect();
        origins.sort();
        origins.dedup();
        destinations.sort();
        destinations.dedup();
        let bpr = spec
            .bpr
            .map(|b| Bpr {
                alpha: b.alpha,
                beta: b.beta,
            })
            .unwrap_or_default();

        Self {
            nodes,
            edges,
            out_edges,
            edge_index,
            origins,
            destinations,
            bpr,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn label(&self, id: NodeId) -> u64 {
        self.nodes[id.index()].label
    }

    /// Looks up a node by its file label.
    pub fn node_by_label(&self, label: u64) -> Option<NodeId> {
        self.nodes
            .binary_search_by_key(&label, |n| n.label)
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn edge_between(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        self.edge_index.get(&(from, to)).copied()
    }

    /// Outgoing edges of `node`, ordered by head node.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.index()]
    }

    pub fn origins(&self) -> &[NodeId] {
        &self.origins
    }

    pub fn destinations(&self) -> &[NodeId] {
        &self.destinations
    }

    pub fn bpr(&self) -> Bpr {
        self.bpr
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.nodes.len()
    }

    pub fn max_free_flow_time(&self) -> f64 {
        self.edges.iter().map(|e| e.free_flow_time).fold(0.0, f64::max)
    }

    /// Congested traversal time of `edge` at `flow` vehicles per minute.
    pub fn travel_time(&self, edge: EdgeId, flow: f64) -> Result<f64> {
        bpr_travel_time(self.edge(edge), flow, self.bpr)
    }
}

/// BPR travel time in minutes:
/// `free_flow_time * (1 + alpha * (flow / effective_capacity)^beta)`.
pub fn bpr_travel_time(edge: &Edge, flow: f64, bpr: Bpr) -> Result<f64> {
    if !flow.is_finite() || flow < 0.0 {
        return Err(Error::Input(format!("flow must be finite and >= 0, got {flow}")));
    }
    let ratio = flow / edge.effective_capacity();
    Ok(edge.free_flow_time * (1.0 + bpr.alpha * ratio.powf(bpr.beta)))
}

/// A simple path, stored both as its edges and its node sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Route {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

impl Route {
    /// The zero-length route that stays at `node`.
    pub fn empty(node: NodeId) -> Self {
        Self {
            nodes: vec![node],
            edges: Vec::new(),
        }
    }

    /// Builds a route from a node sequence, checking that consecutive nodes
    /// are joined by an edge and that no node repeats.
    pub fn from_nodes(network: &RoadNetwork, nodes: Vec<NodeId>) -> Result<Self> {
        let Some(&first) = nodes.first() else {
            return Err(Error::Input("route needs at least one node".into()));
        };
        if !network.contains(first) {
            return Err(Error::Input(format!("unknown node {first:?}")));
        }
        let mut seen = vec![false; network.node_count()];
        seen[first.index()] = true;
        let mut edges = Vec::with_capacity(nodes.len().saturating_sub(1));
        for pair in nodes.windows(2) {
            let edge = network.edge_between(pair[0], pair[1]).ok_or_else(|| {
                Error::Input(format!(
                    "no edge {} -> {}",
                    network.label(pair[0]),
                    network.label(pair[1])
                ))
            })?;
            let next = pair[1];
            if std::mem::replace(&mut seen[next.index()], true) {
                return Err(Error::Input(format!("route revisits node {}", network.label(next))));
            }
            edges.push(edge);
        }
        Ok(Self { nodes, edges })
    }

    /// Builds a route from a chain of edges.
    pub fn from_edges(network: &RoadNetwork, edges: &[EdgeId]) -> Result<Self> {
        let Some(&first) = edges.first() else {
            return Err(Error::Input("edge chain is empty".into()));
        };
        if first.index() >= network.edge_count() {
            return Err(Error::Input(format!("unknown edge {first:?}")));
        }
        let mut nodes = vec![network.edge(first).from];
        for &e in edges {
            if e.index() >= network.edge_count() {
                return Err(Error::Input(format!("unknown edge {e:?}")));
            }
            let edge = network.edge(e);
            if edge.from != *nodes.last().expect("non-empty") {
                return Err(Error::Input("edges do not chain".into()));
            }
            nodes.push(edge.to);
        }
        Self::from_nodes(network, nodes)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("route has at least one node")
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    /// The remainder of the route after its first edge.
    pub fn advance(&self) -> Option<Route> {
        if self.edges.is_empty() {
            return None;
        }
        Some(Route {
            nodes: self.nodes[1..].to_vec(),
            edges: self.edges[1..].to_vec(),
        })
    }

    pub fn contains_edge(&self, edge: EdgeId) -> bool {
        self.edges.contains(&edge)
    }

    /// Node labels, for display and serialization.
    pub fn labels(&self, network: &RoadNetwork) -> Vec<u64> {
        self.nodes.iter().map(|&n| network.label(n)).collect()
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str("->")?;
            }
            write!(f, "{}", n.0)?;
        }
        Ok(())
    }
}

/// Sum of free-flow times along `route`, added from the first edge onward.
pub fn free_flow_route_time(network: &RoadNetwork, route: &Route) -> Result<f64> {
    route.edges().iter().try_fold(0.0, |acc, &e| {
        if e.index() >= network.edge_count() {
            return Err(Error::Input(format!("edge {e:?} not in network")));
        }
        Ok(acc + network.edge(e).free_flow_time)
    })
}

/// A single problem found by [`validate_network`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateNode { node: u64 },
    DanglingEndpoint { edge: usize, node: u64 },
    SelfLoop { edge: usize, node: u64 },
    ParallelEdge { edge: usize, from: u64, to: u64 },
    NonPositiveFreeFlowTime { edge: usize },
    MissingFreeFlowTime { edge: usize },
    NonPositiveCapacity { edge: usize },
    ZeroLanes { edge: usize },
    UnknownOrigin { node: u64 },
    UnknownDestination { node: u64 },
    NoOrigins,
    NoDestinations,
    InvalidBpr,
    Unreachable { origin: u64, destination: u64 },
}

impl Finding {
    pub fn is_unreachable(&self) -> bool {
        matches!(self, Finding::Unreachable { .. })
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateNode { node } => write!(f, "node {node} declared twice"),
            Finding::DanglingEndpoint { edge, node } => {
                write!(f, "edge #{edge} has dangling endpoint {node}")
            }
            Finding::SelfLoop { edge, node } => write!(f, "edge #{edge} loops on node {node}"),
            Finding::ParallelEdge { edge, from, to } => {
                write!(f, "edge #{edge} duplicates {from} -> {to}")
            }
            Finding::NonPositiveFreeFlowTime { edge } => {
                write!(f, "edge #{edge} has non-positive free-flow time")
            }
            Finding::MissingFreeFlowTime { edge } => {
                write!(f, "edge #{edge} needs free_flow_time_min or length_m with speed_kmh")
            }
            Finding::NonPositiveCapacity { edge } => {
                write!(f, "edge #{edge} has non-positive capacity")
            }
            Finding::ZeroLanes { edge } => write!(f, "edge #{edge} has zero lanes"),
            Finding::UnknownOrigin { node } => write!(f, "origin {node} is not a node"),
            Finding::UnknownDestination { node } => write!(f, "destination {node} is not a node"),
            Finding::NoOrigins => f.write_str("no origins"),
            Finding::NoDestinations => f.write_str("no destinations"),
            Finding::InvalidBpr => f.write_str("bpr alpha/beta must be finite and >= 0"),
            Finding::Unreachable { origin, destination } => {
                write!(f, "destination {destination} unreachable from origin {origin}")
            }
        }
    }
}

/// Findings from [`validate_network`]; empty when every invariant holds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    /// True when the only problems are unreachable OD pairs.
    pub fn only_unreachable(&self) -> bool {
        !self.findings.is_empty() && self.findings.iter().all(Finding::is_unreachable)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Checks a network description against the road-network invariants.
/// Never fails; every problem is returned as a finding.
pub fn validate_network(spec: &NetworkSpec) -> ValidationReport {
    let mut findings = Vec::new();

    let mut ids: HashMap<u64, usize> = HashMap::with_capacity(spec.nodes.len());
    for node in &spec.nodes {
        if ids.contains_key(&node.id) {
            findings.push(Finding::DuplicateNode { node: node.id });
        } else {
            ids.insert(node.id, ids.len());
        }
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    let mut pairs = HashMap::new();
    for (i, e) in spec.edges.iter().enumerate() {
        let mut usable = true;
        for endpoint in [e.from, e.to] {
            if !ids.contains_key(&endpoint) {
                findings.push(Finding::DanglingEndpoint {
                    edge: i,
                    node: endpoint,
                });
                usable = false;
            }
        }
        if e.from == e.to {
            findings.push(Finding::SelfLoop { edge: i, node: e.from });
            usable = false;
        }
        if pairs.insert((e.from, e.to), i).is_some() {
            findings.push(Finding::ParallelEdge {
                edge: i,
                from: e.from,
                to: e.to,
            });
        }
        match e.free_flow_minutes() {
            None => findings.push(Finding::MissingFreeFlowTime { edge: i }),
            Some(t) if !(t > 0.0 && t.is_finite()) => findings.push(Finding::NonPositiveFreeFlowTime { edge: i }),
            Some(_) => {}
        }
        if !(e.capacity_veh_per_min_per_lane > 0.0 && e.capacity_veh_per_min_per_lane.is_finite()) {
            findings.push(Finding::NonPositiveCapacity { edge: i });
        }
        if e.lanes == 0 {
            findings.push(Finding::ZeroLanes { edge: i });
        }
        if usable {
            adjacency[ids[&e.from]].push(ids[&e.to]);
        }
    }

    if let Some(b) = spec.bpr {
        if !(b.alpha >= 0.0 && b.alpha.is_finite() && b.beta >= 0.0 && b.beta.is_finite()) {
            findings.push(Finding::InvalidBpr);
        }
    }

    if spec.origins.is_empty() {
        findings.push(Finding::NoOrigins);
    }
    if spec.destinations.is_empty() {
        findings.push(Finding::NoDestinations);
    }
    for &o in &spec.origins {
        if !ids.contains_key(&o) {
            findings.push(Finding::UnknownOrigin { node: o });
        }
    }
    for &d in &spec.destinations {
        if !ids.contains_key(&d) {
            findings.push(Finding::UnknownDestination { node: d });
        }
    }

    let mut origins: Vec<u64> = spec.origins.iter().copied().filter(|o| ids.contains_key(o)).collect();
    origins.sort_unstable();
    origins.dedup();
    let mut destinations: Vec<u64> = spec
        .destinations
        .iter()
        .copied()
        .filter(|d| ids.contains_key(d))
        .collect();
    destinations.sort_unstable();
    destinations.dedup();
    for o in origins {
        let reach = reachable_from(&adjacency, ids[&o]);
        for &d in &destinations {
            if !reach[ids[&d]] {
                findings.push(Finding::Unreachable {
                    origin: o,
                    destination: d,
                });
            }
        }
    }

    ValidationReport { findings }
}

fn reachable_from(adjacency: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}
