//! Synthetic network generators.
//!
//! The `boston_like` preset stands in for a mid-size downtown network: a
//! 9 x 5 grid of 45 intersections fed by 8 origin stubs and drained by 5
//! destination stubs, with free-flow times derived from edge length at 27 km/h.

use serde::{Deserialize, Serialize};

use super::{EdgeSpec, NetworkSpec, NodeSpec};
use crate::error::{Error, Result};

pub const DEFAULT_SPEED_KMH: f64 = 27.0;
pub const DEFAULT_CAPACITY_PER_LANE: f64 = 5.0;

/// Physical parameters shared by generated edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadParams {
    pub block_m: f64,
    pub speed_kmh: f64,
    pub capacity_veh_per_min_per_lane: f64,
    pub lanes: u32,
}

impl Default for RoadParams {
    fn default() -> Self {
        Self {
            block_m: 300.0,
            speed_kmh: DEFAULT_SPEED_KMH,
            capacity_veh_per_min_per_lane: DEFAULT_CAPACITY_PER_LANE,
            lanes: 1,
        }
    }
}

impl RoadParams {
    fn check(&self) -> Result<()> {
        let ok = self.block_m > 0.0
            && self.block_m.is_finite()
            && self.speed_kmh > 0.0
            && self.speed_kmh.is_finite()
            && self.capacity_veh_per_min_per_lane > 0.0
            && self.capacity_veh_per_min_per_lane.is_finite()
            && self.lanes > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!("invalid road parameters {self:?}")))
        }
    }

    fn edge(&self, from: u64, to: u64, length_m: f64) -> EdgeSpec {
        EdgeSpec {
            lanes: self.lanes,
            ..EdgeSpec::measured(from, to, length_m, self.speed_kmh, self.capacity_veh_per_min_per_lane)
        }
    }
}

/// `n` nodes joined by forward edges `i -> i+1`; node 0 is the origin and
/// node `n-1` the destination.
pub fn line(n: usize, road: RoadParams) -> Result<NetworkSpec> {
    road.check()?;
    if n < 2 {
        return Err(Error::Input("a line needs at least 2 nodes".into()));
    }
    let n = n as u64;
    Ok(NetworkSpec {
        nodes: (0..n).map(|i| NodeSpec::at(i, i as f64 * road.block_m, 0.0)).collect(),
        edges: (0..n - 1).map(|i| road.edge(i, i + 1, road.block_m)).collect(),
        origins: vec![0],
        destinations: vec![n - 1],
        bpr: None,
    })
}

/// `rows x cols` grid with a bidirectional edge pair between neighbours.
/// Node `r * cols + c` sits at column `c`, row `r`. The corner `0` is the
/// origin and the opposite corner the destination.
pub fn grid(rows: usize, cols: usize, road: RoadParams) -> Result<NetworkSpec> {
    road.check()?;
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(Error::Input(format!("invalid grid dimensions {rows}x{cols}")));
    }
    let mut spec = NetworkSpec {
        nodes: Vec::with_capacity(rows * cols),
        edges: Vec::new(),
        origins: vec![0],
        destinations: vec![(rows * cols - 1) as u64],
        bpr: None,
    };
    add_grid(&mut spec, rows, cols, road);
    Ok(spec)
}

fn add_grid(spec: &mut NetworkSpec, rows: usize, cols: usize, road: RoadParams) {
    let id = |r: usize, c: usize| (r * cols + c) as u64;
    for r in 0..rows {
        for c in 0..cols {
            spec.nodes
                .push(NodeSpec::at(id(r, c), c as f64 * road.block_m, r as f64 * road.block_m));
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                spec.edges.push(road.edge(id(r, c), id(r, c + 1), road.block_m));
                spec.edges.push(road.edge(id(r, c + 1), id(r, c), road.block_m));
            }
            if r + 1 < rows {
                spec.edges.push(road.edge(id(r, c), id(r + 1, c), road.block_m));
                spec.edges.push(road.edge(id(r + 1, c), id(r, c), road.block_m));
            }
        }
    }
}

pub const PRESET_ROWS: usize = 5;
pub const PRESET_COLS: usize = 9;
pub const PRESET_ORIGINS: usize = 8;
pub const PRESET_DESTINATIONS: usize = 5;

/// Grid cells `(row, col)` where the origin stubs attach.
const ORIGIN_ATTACH: [(usize, usize); PRESET_ORIGINS] =
    [(0, 0), (2, 0), (4, 0), (0, 2), (4, 2), (1, 0), (3, 0), (0, 4)];

/// Grid cells `(row, col)` where the destination stubs attach.
const DESTINATION_ATTACH: [(usize, usize); PRESET_DESTINATIONS] = [(0, 8), (2, 8), (4, 8), (0, 6), (4, 6)];

/// The 58-node preset: 45 intersections, then origin stubs `45..53`, then
/// destination stubs `53..58`. Stub roads are half a block long.
pub fn boston_like(road: RoadParams) -> Result<NetworkSpec> {
    road.check()?;
    let mut spec = NetworkSpec {
        nodes: Vec::new(),
        edges: Vec::new(),
        origins: Vec::new(),
        destinations: Vec::new(),
        bpr: None,
    };
    add_grid(&mut spec, PRESET_ROWS, PRESET_COLS, road);
    let intersections = (PRESET_ROWS * PRESET_COLS) as u64;
    let stub = road.block_m / 2.0;
    let cell = |(r, c): (usize, usize)| (r * PRESET_COLS + c) as u64;
    let pos = |(r, c): (usize, usize)| (c as f64 * road.block_m, r as f64 * road.block_m);

    for (i, &at) in ORIGIN_ATTACH.iter().enumerate() {
        let id = intersections + i as u64;
        let (x, y) = pos(at);
        let (x, y) = if at.1 == 0 {
            (x - stub, y)
        } else if at.0 == 0 {
            (x, y - stub)
        } else {
            (x, y + stub)
        };
        spec.nodes.push(NodeSpec::at(id, x, y));
        spec.edges.push(road.edge(id, cell(at), stub));
        spec.origins.push(id);
    }
    for (i, &at) in DESTINATION_ATTACH.iter().enumerate() {
        let id = intersections + (PRESET_ORIGINS + i) as u64;
        let (x, y) = pos(at);
        let (x, y) = if at.1 == PRESET_COLS - 1 {
            (x + stub, y)
        } else if at.0 == 0 {
            (x, y - stub)
        } else {
            (x, y + stub)
        };
        spec.nodes.push(NodeSpec::at(id, x, y));
        spec.edges.push(road.edge(cell(at), id, stub));
        spec.destinations.push(id);
    }
    Ok(spec)
}
