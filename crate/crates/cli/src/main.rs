//! `equiroute`: run fleet simulations, compare routing strategies, check the
//! perfect-equity condition and generate or validate networks.
//!
//! Exit status: 0 on success, 1 when a check fails or on an internal error,
//! 2 for unreadable or invalid configuration and network files, 3 when a
//! network leaves some destination unreachable from some origin.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use equiroute_core::config::{self, LoadedConfig};
use equiroute_core::equity::check_perfect_equity;
use equiroute_core::equity::DEFAULT_EQUITY_TOLERANCE;
use equiroute_core::network::generate::{self, RoadParams};
use equiroute_core::network::{validate_network, NetworkSpec, ValidationReport};
use equiroute_core::planner::Strategy;
use equiroute_core::report::{
    run_strategies, write_comparison, write_json, write_vehicle_csv, ComparisonReport, RunMetadata, RunReport,
    RunSummary,
};
use equiroute_core::sim::run;
use equiroute_core::Error;

#[derive(Parser)]
#[command(name = "equiroute", version, about = "Equity-aware dynamic route guidance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one strategy and write summary.json and vehicles.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the strategy in the config.
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<Strategy>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate psr, dsr and equity on one scenario and write the comparison.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `sim.workers` in the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Report each mode's free-flow DTX and whether they coincide.
    CheckEquity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EQUITY_TOLERANCE)]
        tolerance: f64,
    },
    /// Write a synthetic network file.
    GenNetwork {
        #[arg(long, value_enum, default_value_t = Kind::BostonLike)]
        kind: Kind,
        /// Grid rows.
        #[arg(long, default_value_t = 3)]
        rows: usize,
        /// Grid columns.
        #[arg(long, default_value_t = 3)]
        cols: usize,
        /// Line length in nodes.
        #[arg(long, default_value_t = 2)]
        nodes: usize,
        #[arg(long, default_value_t = RoadParams::default().block_m)]
        block_m: f64,
        #[arg(long, default_value_t = generate::DEFAULT_SPEED_KMH)]
        speed_kmh: f64,
        /// Vehicles per minute per lane.
        #[arg(long, default_value_t = generate::DEFAULT_CAPACITY_PER_LANE)]
        capacity: f64,
        #[arg(long, default_value_t = 1)]
        lanes: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a network file, or the network named by a config.
    Validate {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        network: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    BostonLike,
    Grid,
    Line,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// An error with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Parse { .. } | Error::Json(_) | Error::Config(_) | Error::Input(_) => 2,
            Error::InvalidNetwork(report) if report.only_unreachable() => 3,
            Error::InvalidNetwork(_) => 2,
            Error::NoRoute { .. } => 3,
            Error::State(_) | Error::Csv(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQUIROUTE_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Run {
            config,
            strategy,
            seed,
            out,
        } => cmd_run(&config, strategy, seed, &out),
        Command::Compare {
            config,
            seed,
            out,
            workers,
        } => cmd_compare(&config, seed, &out, workers),
        Command::CheckEquity { config, tolerance } => cmd_check_equity(&config, tolerance),
        Command::GenNetwork {
            kind,
            rows,
            cols,
            nodes,
            block_m,
            speed_kmh,
            capacity,
            lanes,
            out,
        } => {
            let road = RoadParams {
                block_m,
                speed_kmh,
                capacity_veh_per_min_per_lane: capacity,
                lanes,
            };
            let spec = match kind {
                Kind::BostonLike => generate::boston_like(road),
                Kind::Grid => generate::grid(rows, cols, road),
                Kind::Line => generate::line(nodes, road),
            }?;
            spec.save(&out)?;
            println!(
                "wrote {} ({} nodes, {} edges)",
                out.display(),
                spec.nodes.len(),
                spec.edges.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { network, config } => {
            let path = match (network, config) {
                (Some(n), _) => n,
                (None, Some(c)) => {
                    let cfg = config::load_config(&c)?;
                    c.parent().unwrap_or(Path::new(".")).join(cfg.network)
                }
                (None, None) => unreachable!("clap requires one of the two"),
            };
            cmd_validate(&path)
        }
    }
}

/// Loads a config and insists its network passes validation.
fn load_checked(path: &Path, seed: Option<u64>) -> Result<LoadedConfig, Failure> {
    let loaded = config::load(path)?.with_seed(seed);
    let report = validate_network(&loaded.network_spec);
    if !report.is_empty() {
        return Err(Error::InvalidNetwork(report).into());
    }
    Ok(loaded)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|source| {
        Failure::from(Error::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn metadata(loaded: &LoadedConfig, vehicles: usize) -> Result<RunMetadata, Failure> {
    Ok(RunMetadata {
        seed: loaded.config.sim.seed,
        config_digest: loaded.digest()?,
        vehicles,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

fn cmd_run(config: &Path, strategy: Option<Strategy>, seed: Option<u64>, out: &Path) -> Outcome {
    let loaded = load_checked(config, seed)?;
    let strategy = strategy.unwrap_or(loaded.config.strategy);
    let scenario = loaded.scenario()?;
    info!("running {strategy} on {} vehicles", scenario.vehicles.len());
    let results = run(&scenario, strategy)?;
    create_dir(out)?;
    let report = RunReport {
        metadata: metadata(&loaded, scenario.vehicles.len())?,
        summary: RunSummary::of(&results),
    };
    write_json(&out.join("summary.json"), &report)?;
    write_vehicle_csv(&out.join("vehicles.csv"), &results)?;
    print_summary(&report.summary);
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(config: &Path, seed: Option<u64>, out: &Path, workers: Option<usize>) -> Outcome {
    let loaded = load_checked(config, seed)?;
    let scenario = loaded.scenario()?;
    let workers = workers.unwrap_or(loaded.config.sim.workers);
    info!(
        "comparing strategies on {} vehicles with {workers} workers",
        scenario.vehicles.len()
    );
    let results = run_strategies(&scenario, &Strategy::ALL, workers)?;
    let report = ComparisonReport::new(metadata(&loaded, scenario.vehicles.len())?, &results);
    for path in write_comparison(out, &report, &results)? {
        info!("wrote {}", path.display());
    }
    for s in &report.strategies {
        print_summary(s);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(s: &RunSummary) {
    let dte = s.fleet_dte.map_or("n/a".to_string(), |d| format!("{d:.4}"));
    println!(
        "{:<7} fleet DTE {dte}  completed {}  failed {}",
        s.strategy.as_str(),
        s.completed,
        s.failed
    );
    for m in &s.modes {
        let t = m.mean_travel_min.map_or("n/a".to_string(), |t| format!("{t:.2} min"));
        println!("        {:<13} mean trip {t}", m.mode.as_str());
    }
}

fn cmd_check_equity(config: &Path, tolerance: f64) -> Outcome {
    let cfg = config::load_config(config)?;
    let report = check_perfect_equity(&cfg.modes, tolerance)?;
    for (mode, value) in &report.free_flow_dtx {
        println!("{:<13} {value:.6}", mode.as_str());
    }
    let verdict = if report.holds { "holds" } else { "fails" };
    println!(
        "max gap {:.6} (tolerance {}): {verdict}",
        report.max_gap, report.tolerance
    );
    Ok(if report.holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_validate(path: &Path) -> Outcome {
    let spec = NetworkSpec::load(path)?;
    let report: ValidationReport = validate_network(&spec);
    if report.is_empty() {
        println!(
            "{}: ok ({} nodes, {} edges, {} origins, {} destinations)",
            path.display(),
            spec.nodes.len(),
            spec.edges.len(),
            spec.origins.len(),
            spec.destinations.len()
        );
        return Ok(ExitCode::SUCCESS);
    }
    println!("{}:\n{report}", path.display());
    Ok(ExitCode::from(if report.only_unreachable() { 3 } else { 2 }))
}
