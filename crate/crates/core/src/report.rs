//! Strategy comparison and result files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equity::Mode;
use crate::error::{Error, Result};
use crate::planner::Strategy;
use crate::sim::{run, ModeSummary, RunResults, Scenario};

/// Runs every strategy on the same scenario using `workers` threads.
/// Results come back in the order of `strategies`.
pub fn run_strategies(scenario: &Scenario, strategies: &[Strategy], workers: usize) -> Result<Vec<RunResults>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    pool.install(|| strategies.par_iter().map(|&s| run(scenario, s)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_digest: String,
    pub vehicles: usize,
    pub version: String,
}

/// Headline numbers of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub fleet_dte: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    pub degenerate: usize,
    pub decisions: u64,
    pub modes: Vec<ModeSummary>,
}

impl RunSummary {
    pub fn of(results: &RunResults) -> Self {
        Self {
            strategy: results.strategy,
            fleet_dte: results.fleet_dte(),
            completed: results.completed,
            failed: results.failed,
            degenerate: results.degenerate,
            decisions: results.decisions,
            modes: results.modes.clone(),
        }
    }

    fn mode(&self, mode: Mode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Summary file of a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: RunMetadata,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub metric: String,
    pub from: Strategy,
    pub to: Strategy,
    pub absolute: f64,
    /// Relative to `from`; absent when `from` is zero.
    pub percent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metadata: RunMetadata,
    pub strategies: Vec<RunSummary>,
    pub deltas: Vec<Delta>,
}

impl ComparisonReport {
    pub fn new(metadata: RunMetadata, results: &[RunResults]) -> Self {
        let strategies: Vec<RunSummary> = results.iter().map(RunSummary::of).collect();
        let deltas = recompute_deltas(&strategies);
        Self {
            metadata,
            strategies,
            deltas,
        }
    }

    pub fn summary(&self, strategy: Strategy) -> Option<&RunSummary> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

fn metrics(s: &RunSummary) -> Vec<(String, Option<f64>)> {
    let mut out = vec![("fleet_dte".to_string(), s.fleet_dte)];
    for mode in Mode::ALL {
        let m = s.mode(mode);
        out.push((format!("mean_travel_min.{mode}"), m.and_then(|m| m.mean_travel_min)));
        out.push((format!("mean_cost_usd.{mode}"), m.and_then(|m| m.mean_cost_usd)));
    }
    out
}

/// Pairwise differences for every ordered pair `(earlier, later)` of the
/// summaries, for every metric both sides define.
pub fn recompute_deltas(strategies: &[RunSummary]) -> Vec<Delta> {
    let mut deltas = Vec::new();
    for (i, a) in strategies.iter().enumerate() {
        for b in &strategies[i + 1..] {
            for ((metric, x), (_, y)) in metrics(a).into_iter().zip(metrics(b)) {
                if let (Some(x), Some(y)) = (x, y) {
                    deltas.push(Delta {
                        metric,
                        from: a.strategy,
                        to: b.strategy,
                        absolute: y - x,
                        percent: (x != 0.0).then(|| (y - x) / x * 100.0),
                    });
                }
            }
        }
    }
    deltas
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per vehicle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleRow {
    pub id: u32,
    pub mode: Mode,
    pub origin: u64,
    pub dest: u64,
    pub depart_min: f64,
    pub complete_min: Option<f64>,
    pub travel_min: Option<f64>,
    pub cost_usd: Option<f64>,
    pub dtx: Option<f64>,
    pub strategy: Strategy,
}

pub fn vehicle_rows(results: &RunResults) -> Vec<VehicleRow> {
    results
        .vehicles
        .iter()
        .map(|v| VehicleRow {
            id: v.id,
            mode: v.mode,
            origin: v.origin,
            dest: v.dest,
            depart_min: v.depart_min,
            complete_min: v.complete_min,
            travel_min: v.travel_min,
            cost_usd: v.cost_usd,
            dtx: v.dtx,
            strategy: results.strategy,
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_vehicle_csv(path: &Path, results: &RunResults) -> Result<()> {
    write_rows(path, vehicle_rows(results))
}

pub fn read_vehicle_csv(path: &Path) -> Result<Vec<VehicleRow>> {
    let mut r = csv::Reader::from_reader(std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Serialize)]
struct DtxRow {
    strategy: Strategy,
    mode: Mode,
    id: u32,
    dtx: f64,
}

#[derive(Serialize)]
struct TripTimeRow {
    strategy: Strategy,
    mode: Mode,
    completed: usize,
    mean_travel_min: Option<f64>,
    mean_cost_usd: Option<f64>,
    mean_dtx: Option<f64>,
}

/// Per-vehicle DTX of every scored trip, for box plots by mode and strategy.
pub fn write_dtx_distribution_csv(path: &Path, results: &[RunResults]) -> Result<()> {
    let rows = results.iter().flat_map(|r| {
        r.vehicles.iter().filter(|v| !v.is_degenerate()).filter_map(move |v| {
            v.dtx.map(|dtx| DtxRow {
                strategy: r.strategy,
                mode: v.mode,
                id: v.id,
                dtx,
            })
        })
    });
    write_rows(path, rows)
}

/// Mean trip time, cost and DTX by mode and strategy.
pub fn write_trip_time_csv(path: &Path, results: &[RunResults]) -> Result<()> {
    let rows = results.iter().flat_map(|r| {
        r.modes.iter().map(move |m| TripTimeRow {
            strategy: r.strategy,
            mode: m.mode,
            completed: m.completed,
            mean_travel_min: m.mean_travel_min,
            mean_cost_usd: m.mean_cost_usd,
            mean_dtx: m.mean_dtx,
        })
    });
    write_rows(path, rows)
}

/// Names of the files written by [`write_comparison`].
pub const COMPARISON_JSON: &str = "comparison.json";
pub const DTX_CSV: &str = "fig1_dtx.csv";
pub const TRIP_TIME_CSV: &str = "fig2_trip_time.csv";

pub fn vehicles_csv_name(strategy: Strategy) -> String {
    format!("vehicles_{strategy}.csv")
}

/// Writes the comparison report and its CSVs into `dir`; returns the paths.
pub fn write_comparison(dir: &Path, report: &ComparisonReport, results: &[RunResults]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let path = dir.join(COMPARISON_JSON);
    write_json(&path, report)?;
    written.push(path);
    let path = dir.join(DTX_CSV);
    write_dtx_distribution_csv(&path, results)?;
    written.push(path);
    let path = dir.join(TRIP_TIME_CSV);
    write_trip_time_csv(&path, results)?;
    written.push(path);
    for r in results {
        let path = dir.join(vehicles_csv_name(r.strategy));
        write_vehicle_csv(&path, r)?;
        written.push(path);
    }
    Ok(written)
}
