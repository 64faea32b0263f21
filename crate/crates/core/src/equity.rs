//! Trip-quality index (DTX) and trip equity (DTE).
//!
//! DTX scores one traveler's trip as a weighted sum of three ratios, each in
//! `(0, 1]`: best achievable time over actual time, best achievable cost over
//! actual cost, and best achievable convenience over the mode's convenience.
//! DTE is one minus the Gini coefficient of a multiset of DTX values in which
//! every vehicle appears once per occupant.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{PlanRegistry, RouteRollout, VehicleId};
use crate::network::{NodeId, RoadNetwork};
use crate::paths::{shortest_route, CandidateSet, Weights};

/// Default tolerance for the perfect-equity check.
pub const DEFAULT_EQUITY_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Private,
    Autonomous,
    RideHailing,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Private, Mode::Autonomous, Mode::RideHailing];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Private => "private",
            Mode::Autonomous => "autonomous",
            Mode::RideHailing => "ride_hailing",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Economics and convenience of one vehicle type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    /// Cost per traveler, $ per minute.
    pub epsilon_usd_per_min: f64,
    /// Average wait to access the vehicle, minutes.
    pub wait_min: f64,
    /// Feasible departure window, hours per day.
    pub departure_window_h: f64,
    /// Travelers carried per vehicle.
    #[serde(default = "one")]
    pub occupancy: u32,
}

fn one() -> u32 {
    1
}

impl ModeParams {
    /// Inconvenience ratio `wait / window`, both in minutes.
    pub fn inconvenience(&self) -> f64 {
        self.wait_min / (self.departure_window_h * 60.0)
    }

    pub fn validate(&self, mode: Mode) -> Result<()> {
        let sum = self.xi1 + self.xi2 + self.xi3;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("{mode}: xi1+xi2+xi3 = {sum}, expected 1")));
        }
        for (name, v) in [("xi1", self.xi1), ("xi2", self.xi2), ("xi3", self.xi3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{mode}: {name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("epsilon_usd_per_min", self.epsilon_usd_per_min),
            ("wait_min", self.wait_min),
            ("departure_window_h", self.departure_window_h),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{mode}: {name} must be > 0, got {v}")));
            }
        }
        if self.occupancy == 0 {
            return Err(Error::Config(format!("{mode}: occupancy must be > 0")));
        }
        Ok(())
    }
}

/// Parameters of the three vehicle types. Table-wide optima are computed on
/// demand from the entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTable {
    pub private: ModeParams,
    pub autonomous: ModeParams,
    pub ride_hailing: ModeParams,
}

impl Default for ModeTable {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModeTable {
    /// Reference parameters: equal weights 0.4/0.4/0.2; private $0.27/min,
    /// 2 min wait, 24 h window; autonomous $0.1485/min, 15 min, 18 h;
    /// ride-hailing $0.1536/min, 6 min, 12 h, two travelers per vehicle.
    pub fn reference() -> Self {
        let base = |eps: f64, wait: f64, window: f64, occupancy: u32| ModeParams {
            xi1: 0.4,
            xi2: 0.4,
            xi3: 0.2,
            epsilon_usd_per_min: eps,
            wait_min: wait,
            departure_window_h: window,
            occupancy,
        };
        Self {
            private: base(0.27, 2.0, 24.0, 1),
            autonomous: base(0.1485, 15.0, 18.0, 1),
            ride_hailing: base(0.1536, 6.0, 12.0, 2),
        }
    }

    /// The same parameters for every mode.
    pub fn uniform(params: ModeParams) -> Self {
        Self {
            private: params,
            autonomous: params,
            ride_hailing: params,
        }
    }

    pub fn get(&self, mode: Mode) -> &ModeParams {
        match mode {
            Mode::Private => &self.private,
            Mode::Autonomous => &self.autonomous,
            Mode::RideHailing => &self.ride_hailing,
        }
    }

    pub fn get_mut(&mut self, mode: Mode) -> &mut ModeParams {
        match mode {
            Mode::Private => &mut self.private,
            Mode::Autonomous => &mut self.autonomous,
            Mode::RideHailing => &mut self.ride_hailing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Mode::ALL.iter().try_for_each(|&m| self.get(m).validate(m))
    }

    fn fold(&self, pick: impl Fn(&ModeParams) -> f64, f: fn(f64, f64) -> f64) -> f64 {
        let [a, b, c] = Mode::ALL.map(|m| pick(self.get(m)));
        f(f(a, b), c)
    }

    pub fn epsilon_min(&self) -> f64 {
        self.fold(|p| p.epsilon_usd_per_min, f64::min)
    }

    pub fn wait_min(&self) -> f64 {
        self.fold(|p| p.wait_min, f64::min)
    }

    pub fn departure_window_max_h(&self) -> f64 {
        self.fold(|p| p.departure_window_h, f64::max)
    }

    /// Best achievable inconvenience: shortest wait over the widest window.
    pub fn inconvenience_min(&self) -> f64 {
        self.wait_min() / (self.departure_window_max_h() * 60.0)
    }
}

/// Best achievable time, cost and inconvenience for one OD pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripMinima {
    pub tau_min: f64,
    pub phi_min: f64,
    pub q_min: f64,
}

impl TripMinima {
    /// Origin equals destination.
    pub fn is_degenerate(&self) -> bool {
        self.tau_min == 0.0
    }
}

/// Free-flow shortest time between `origin` and `dest`, and the table optima.
pub fn trip_minima(network: &RoadNetwork, origin: NodeId, dest: NodeId, modes: &ModeTable) -> Result<TripMinima> {
    let weights = Weights::free_flow(network);
    let route = shortest_route(network, &weights, origin, dest)?;
    let tau_min = weights.route_weight(&route);
    Ok(TripMinima {
        tau_min,
        phi_min: modes.epsilon_min() * tau_min,
        q_min: modes.inconvenience_min(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtxScore {
    pub value: f64,
    pub efficiency: f64,
    pub cost: f64,
    pub convenience: f64,
}

impl DtxScore {
    fn combine(mode: &ModeParams, efficiency: f64, cost: f64, convenience: f64) -> Self {
        Self {
            value: mode.xi1 * efficiency + mode.xi2 * cost + mode.xi3 * convenience,
            efficiency,
            cost,
            convenience,
        }
    }

    /// Score of a degenerate trip: every component is 1.
    pub fn perfect(mode: &ModeParams) -> Self {
        Self::combine(mode, 1.0, 1.0, 1.0)
    }
}

/// DTX of a trip whose total (experienced plus expected) time is
/// `trip_time` minutes. Cost scales with time at the mode's rate.
pub fn dtx_for_trip_time(trip_time: f64, minima: &TripMinima, mode: &ModeParams) -> DtxScore {
    let (efficiency, cost) = if trip_time > 0.0 && !minima.is_degenerate() {
        (
            minima.tau_min / trip_time,
            minima.phi_min / (mode.epsilon_usd_per_min * trip_time),
        )
    } else {
        (1.0, 1.0)
    };
    DtxScore::combine(mode, efficiency, cost, minima.q_min / mode.inconvenience())
}

/// DTX at a decision point: time already spent, plus the rolled-out
/// remaining time of the chosen route.
pub fn dtx(experienced: f64, rollout: &RouteRollout, minima: &TripMinima, mode: &ModeParams) -> DtxScore {
    dtx_for_trip_time(experienced + rollout.total, minima, mode)
}

/// DTX of an uncongested trip on a shortest route; independent of the trip.
pub fn free_flow_dtx(mode: &ModeParams, modes: &ModeTable) -> DtxScore {
    DtxScore::combine(
        mode,
        1.0,
        modes.epsilon_min() / mode.epsilon_usd_per_min,
        modes.inconvenience_min() / mode.inconvenience(),
    )
}

/// Vehicles whose registered plan shares at least one edge with any of the
/// subject's candidate routes. Always contains the subject.
pub fn competitors(subject: VehicleId, candidates: &CandidateSet, registry: &PlanRegistry) -> BTreeSet<VehicleId> {
    let mut set: BTreeSet<VehicleId> = candidates
        .iter()
        .flat_map(|r| r.edges().iter().flat_map(|&e| registry.users_of(e)))
        .collect();
    set.insert(subject);
    set
}

/// DTX multiset with its mean and equity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquityReport {
    pub dtx_multiset: Vec<f64>,
    pub mean: f64,
    pub gini: f64,
    pub dte: f64,
}

/// Gini coefficient of `values`, from the sorted gaps:
/// `sum_{i<j} |x_i - x_j| = sum_k gap_k * (k+1) * (n-k-1)`.
/// Zero exactly when all values are equal.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    let mut pair_sum = 0.0;
    for (k, w) in sorted.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap > 0.0 {
            pair_sum += gap * ((k + 1) as f64) * ((n - k - 1) as f64);
        }
    }
    // sum over ordered pairs = 2 * pair_sum; divided by 2 n^2 mean = 2 n total.
    pair_sum / (n as f64 * total)
}

/// Expands each `(dtx, occupancy)` entry into `occupancy` copies and scores
/// the resulting multiset.
pub fn dte(entries: &[(f64, u32)]) -> Result<EquityReport> {
    if entries.is_empty() {
        return Err(Error::Input("equity needs at least one traveler".into()));
    }
    let mut multiset = Vec::with_capacity(entries.iter().map(|&(_, m)| m as usize).sum());
    for &(value, occupancy) in entries {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Input(format!("DTX must be > 0, got {value}")));
        }
        if occupancy == 0 {
            return Err(Error::Input("occupancy must be > 0".into()));
        }
        multiset.extend(std::iter::repeat_n(value, occupancy as usize));
    }
    Ok(equity_of_multiset(multiset))
}

fn equity_of_multiset(multiset: Vec<f64>) -> EquityReport {
    let mean = multiset.iter().sum::<f64>() / multiset.len() as f64;
    let g = gini(&multiset);
    EquityReport {
        dtx_multiset: multiset,
        mean,
        gini: g,
        dte: 1.0 - g,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerfectEquityReport {
    pub free_flow_dtx: Vec<(Mode, f64)>,
    pub max_gap: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Whether every mode reaches the same free-flow DTX (within `tol`), which is
/// what makes perfect equity attainable in an uncongested network.
pub fn check_perfect_equity(modes: &ModeTable, tol: f64) -> Result<PerfectEquityReport> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::Input(format!("tolerance must be >= 0, got {tol}")));
    }
    let values: Vec<(Mode, f64)> = Mode::ALL
        .iter()
        .map(|&m| (m, free_flow_dtx(modes.get(m), modes).value))
        .collect();
    let mut max_gap: f64 = 0.0;
    for (i, &(_, a)) in values.iter().enumerate() {
        for &(_, b) in &values[i + 1..] {
            max_gap = max_gap.max((a - b).abs());
        }
    }
    Ok(PerfectEquityReport {
        free_flow_dtx: values,
        max_gap,
        tolerance: tol,
        holds: max_gap <= tol,
    })
}
