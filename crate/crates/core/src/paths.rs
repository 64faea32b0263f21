//! Shortest and L-shortest loopless routes.
//!
//! Routes are ordered by total weight, then by their node sequence compared
//! lexicographically. Total weight is always the left-to-right sum of edge
//! weights along the route, so two routes with the same edges compare equal
//! bit for bit no matter how they were found.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::network::{EdgeId, NodeId, RoadNetwork, Route};

/// Non-negative, finite weight per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Free-flow travel times.
    pub fn free_flow(network: &RoadNetwork) -> Self {
        Self(network.edges().iter().map(|e| e.free_flow_time).collect())
    }

    /// A caller-supplied table indexed by [`EdgeId`].
    pub fn from_table(network: &RoadNetwork, table: Vec<f64>) -> Result<Self> {
        if table.len() != network.edge_count() {
            return Err(Error::Input(format!(
                "weight table has {} entries for {} edges",
                table.len(),
                network.edge_count()
            )));
        }
        if let Some((i, w)) = table.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Input(format!("weight of edge {i} is {w}")));
        }
        Ok(Self(table))
    }

    #[inline]
    pub fn get(&self, edge: EdgeId) -> f64 {
        self.0[edge.index()]
    }

    pub fn route_weight(&self, route: &Route) -> f64 {
        route.edges().iter().fold(0.0, |acc, &e| acc + self.get(e))
    }
}

/// A route with its total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedRoute {
    pub route: Route,
    pub weight: f64,
}

/// The `L` best routes between two nodes, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub routes: Vec<WeightedRoute>,
    pub requested: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Route> {
        self.routes.iter().map(|w| &w.route)
    }
}

/// Total order on routes: weight, then node sequence.
pub fn route_order(a_weight: f64, a_nodes: &[NodeId], b_weight: f64, b_nodes: &[NodeId]) -> Ordering {
    a_weight.total_cmp(&b_weight).then_with(|| a_nodes.cmp(b_nodes))
}

fn check_endpoints(network: &RoadNetwork, from: NodeId, to: NodeId) -> Result<()> {
    for n in [from, to] {
        if !network.contains(n) {
            return Err(Error::Input(format!("unknown node {n:?}")));
        }
    }
    Ok(())
}

fn no_route(network: &RoadNetwork, from: NodeId, to: NodeId) -> Error {
    Error::NoRoute {
        from: network.label(from),
        to: network.label(to),
    }
}

/// Minimum-weight route; ties go to the lexicographically smallest node
/// sequence. `from == to` yields the empty route.
pub fn shortest_route(network: &RoadNetwork, weights: &Weights, from: NodeId, to: NodeId) -> Result<Route> {
    check_endpoints(network, from, to)?;
    let search = Search::new(network, weights);
    let bans = Bans::new(network);
    search
        .best_path(from, to, 0.0, &bans)
        .map(|nodes| Route::from_nodes(network, nodes).expect("search yields simple paths"))
        .ok_or_else(|| no_route(network, from, to))
}

/// The `l` best loopless routes (Yen's deviation algorithm). Fewer than `l`
/// routes are returned only when fewer simple paths exist.
pub fn k_shortest_routes(
    network: &RoadNetwork,
    weights: &Weights,
    from: NodeId,
    to: NodeId,
    l: usize,
) -> Result<CandidateSet> {
    k_shortest_routes_avoiding(network, weights, from, to, l, &[])
}

/// As [`k_shortest_routes`], over routes that touch none of `avoid`.
pub fn k_shortest_routes_avoiding(
    network: &RoadNetwork,
    weights: &Weights,
    from: NodeId,
    to: NodeId,
    l: usize,
    avoid: &[NodeId],
) -> Result<CandidateSet> {
    check_endpoints(network, from, to)?;
    if l == 0 {
        return Err(Error::Input("candidate count must be at least 1".into()));
    }
    if avoid.iter().any(|n| !network.contains(*n)) {
        return Err(Error::Input("unknown node in avoid list".into()));
    }
    let search = Search::new(network, weights);
    let mut bans = Bans::new(network);
    bans.reset(avoid);
    let first = search
        .best_path(from, to, 0.0, &bans)
        .ok_or_else(|| no_route(network, from, to))?;

    let mut accepted: Vec<(f64, Vec<NodeId>)> = vec![(search.weight_of(&first), first)];
    let mut pool: BTreeSet<Pending> = BTreeSet::new();
    let mut seen: HashSet<Vec<NodeId>> = HashSet::new();
    seen.insert(accepted[0].1.clone());

    while accepted.len() < l {
        let last = accepted.last().expect("non-empty").1.clone();
        let mut root_weight = 0.0;
        for i in 0..last.len().saturating_sub(1) {
            let spur = last[i];
            let root = &last[..=i];
            bans.reset(avoid);
            for (_, path) in &accepted {
                if path.len() > i + 1 && &path[..=i] == root {
                    if let Some(e) = network.edge_between(path[i], path[i + 1]) {
                        bans.edge(e);
                    }
                }
            }
            for &n in &root[..i] {
                bans.node(n);
            }
            if let Some(tail) = search.best_path(spur, to, root_weight, &bans) {
                let mut nodes = root[..i].to_vec();
                nodes.extend(tail);
                if seen.insert(nodes.clone()) {
                    let weight = search.weight_of(&nodes);
                    pool.insert(Pending { weight, nodes });
                }
            }
            let e = network
                .edge_between(last[i], last[i + 1])
                .expect("accepted path follows edges");
            root_weight += weights.get(e);
        }
        match pool.pop_first() {
            Some(best) => accepted.push((best.weight, best.nodes)),
            None => break,
        }
    }

    Ok(CandidateSet {
        routes: accepted
            .into_iter()
            .map(|(weight, nodes)| WeightedRoute {
                route: Route::from_nodes(network, nodes).expect("search yields simple paths"),
                weight,
            })
            .collect(),
        requested: l,
    })
}

#[derive(Debug, PartialEq)]
struct Pending {
    weight: f64,
    nodes: Vec<NodeId>,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        route_order(self.weight, &self.nodes, other.weight, &other.nodes)
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Bans {
    nodes: Vec<bool>,
    edges: Vec<bool>,
    touched_nodes: Vec<NodeId>,
    touched_edges: Vec<EdgeId>,
}

impl Bans {
    fn new(network: &RoadNetwork) -> Self {
        Self {
            nodes: vec![false; network.node_count()],
            edges: vec![false; network.edge_count()],
            touched_nodes: Vec::new(),
            touched_edges: Vec::new(),
        }
    }

    fn node(&mut self, n: NodeId) {
        if !self.nodes[n.index()] {
            self.nodes[n.index()] = true;
            self.touched_nodes.push(n);
        }
    }

    fn edge(&mut self, e: EdgeId) {
        if !self.edges[e.index()] {
            self.edges[e.index()] = true;
            self.touched_edges.push(e);
        }
    }

    fn reset(&mut self, permanent: &[NodeId]) {
        self.clear();
        for &n in permanent {
            self.node(n);
        }
    }

    fn clear(&mut self) {
        for n in self.touched_nodes.drain(..) {
            self.nodes[n.index()] = false;
        }
        for e in self.touched_edges.drain(..) {
            self.edges[e.index()] = false;
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    dist: f64,
    node: NodeId,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then node id.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    network: &'a RoadNetwork,
    weights: &'a Weights,
}

impl<'a> Search<'a> {
    fn new(network: &'a RoadNetwork, weights: &'a Weights) -> Self {
        Self { network, weights }
    }

    fn weight_of(&self, nodes: &[NodeId]) -> f64 {
        nodes.windows(2).fold(0.0, |acc, w| {
            acc + self
                .weights
                .get(self.network.edge_between(w[0], w[1]).expect("path follows edges"))
        })
    }

    /// Best path from `from` to `to` avoiding banned nodes and edges. The
    /// search starts at distance `offset` so that labels equal the
    /// left-to-right weight of the full route being assembled.
    fn best_path(&self, from: NodeId, to: NodeId, offset: f64, bans: &Bans) -> Option<Vec<NodeId>> {
        if bans.nodes[from.index()] {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let n = self.network.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[from.index()] = offset;
        heap.push(Label {
            dist: offset,
            node: from,
        });
        while let Some(Label { dist: d, node: u }) = heap.pop() {
            if d > dist[to.index()] {
                // Everything that can lie on a minimum path is settled.
                break;
            }
            if done[u.index()] {
                continue;
            }
            done[u.index()] = true;
            for &e in self.network.out_edges(u) {
                if bans.edges[e.index()] {
                    continue;
                }
                let v = self.network.edge(e).to;
                if bans.nodes[v.index()] || done[v.index()] {
                    continue;
                }
                let nd = d + self.weights.get(e);
                if nd < dist[v.index()] {
                    dist[v.index()] = nd;
                    heap.push(Label { dist: nd, node: v });
                }
            }
        }
        if !dist[to.index()].is_finite() {
            return None;
        }
        self.lexicographic_tight_path(from, to, &dist, bans)
    }

    /// Among the minimum-weight paths (those whose every edge is tight with
    /// respect to `dist`), the one with the smallest node sequence.
    fn lexicographic_tight_path(&self, from: NodeId, to: NodeId, dist: &[f64], bans: &Bans) -> Option<Vec<NodeId>> {
        let n = self.network.node_count();
        let tight = |e: EdgeId| -> bool {
            if bans.edges[e.index()] {
                return false;
            }
            let edge = self.network.edge(e);
            if bans.nodes[edge.to.index()] {
                return false;
            }
            let du = dist[edge.from.index()];
            du.is_finite() && du + self.weights.get(e) == dist[edge.to.index()]
        };

        // Nodes that reach `to` over tight edges.
        let mut reverse: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (i, edge) in self.network.edges().iter().enumerate() {
            if tight(EdgeId(i as u32)) {
                reverse[edge.to.index()].push(edge.from);
            }
        }
        let mut useful = vec![false; n];
        let mut stack = vec![to];
        useful[to.index()] = true;
        while let Some(v) = stack.pop() {
            for &u in &reverse[v.index()] {
                if !useful[u.index()] {
                    useful[u.index()] = true;
                    stack.push(u);
                }
            }
        }
        if !useful[from.index()] {
            return None;
        }

        // Depth-first in ascending node order; the first simple path found is
        // the lexicographic minimum. With positive weights the tight graph is
        // acyclic and no backtracking happens.
        let mut on_path = vec![false; n];
        let mut path = vec![from];
        on_path[from.index()] = true;
        let mut cursor: Vec<usize> = vec![0];
        while let Some(&u) = path.last() {
            if u == to {
                return Some(path);
            }
            let out = self.network.out_edges(u);
            let pos = cursor.last_mut().expect("parallel to path");
            let mut next = None;
            while *pos < out.len() {
                let e = out[*pos];
                *pos += 1;
                let v = self.network.edge(e).to;
                if tight(e) && useful[v.index()] && !on_path[v.index()] {
                    next = Some(v);
                    break;
                }
            }
            match next {
                Some(v) => {
                    on_path[v.index()] = true;
                    path.push(v);
                    cursor.push(0);
                }
                None => {
                    on_path[u.index()] = false;
                    path.pop();
                    cursor.pop();
                }
            }
        }
        None
    }
}
