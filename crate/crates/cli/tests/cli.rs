use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn equiroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equiroute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a 3x3 grid network and a small config next to it.
fn small_setup(dir: &Path, extra: &str) -> PathBuf {
    let net = dir.join("grid.json");
    let o = equiroute(&[
        "gen-network",
        "--kind",
        "grid",
        "--rows",
        "3",
        "--cols",
        "3",
        "--out",
        net.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = dir.join("scenario.json");
    let text = format!(
        r#"{{"network": "grid.json",
 "fleet": {{"private": 12, "autonomous": 8, "ride_hailing": 5, "depart_start_min": 0, "depart_end_min": 10}},
 "sim": {{"monitor_half_width_s": 60, "candidates": 3, "seed": 4, "workers": 2}}{extra}}}"#
    );
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn run_writes_summary_and_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path(), "");
    let out = dir.path().join("out");
    let o = equiroute(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--strategy",
        "dsr",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("dsr"));
    let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"strategy\": \"dsr\""));
    assert!(summary.contains("\"config_digest\""));
    let csv = std::fs::read_to_string(out.join("vehicles.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,mode,origin,dest,depart_min,complete_min,travel_min,cost_usd,dtx,strategy"
    );
    assert_eq!(lines.count(), 25);
}

#[test]
fn seed_flag_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path(), "");
    let read = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        let o = equiroute(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out.join("vehicles.csv")).unwrap()
    };
    assert_eq!(read("7"), read("7"));
    assert_ne!(read("7"), read("8"));
}

#[test]
fn compare_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path(), "");
    let files = [
        "comparison.json",
        "fig1_dtx.csv",
        "fig2_trip_time.csv",
        "vehicles_psr.csv",
        "vehicles_dsr.csv",
        "vehicles_equity.csv",
    ];
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let o = equiroute(&[
            "compare",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn check_equity_reports_and_fails_on_skewed_costs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path(), "");
    let o = equiroute(&["check-equity", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("holds"));

    let skewed = small_setup(
        dir.path(),
        r#", "modes": {
  "private": {"xi1": 0.34, "xi2": 0.33, "xi3": 0.33, "epsilon_usd_per_min": 0.54, "wait_min": 2, "departure_window_h": 24},
  "autonomous": {"xi1": 0.34, "xi2": 0.33, "xi3": 0.33, "epsilon_usd_per_min": 0.1485, "wait_min": 15, "departure_window_h": 18},
  "ride_hailing": {"xi1": 0.34, "xi2": 0.33, "xi3": 0.33, "epsilon_usd_per_min": 0.1536, "wait_min": 6, "departure_window_h": 12, "occupancy": 2}}"#,
    );
    let o = equiroute(&["check-equity", "--config", skewed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("fails"));
}

#[test]
fn bad_inputs_exit_with_two_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = equiroute(&[
        "run",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"network\": \"grid.json\",\n  \"sim\": {\"seed\": \"x\"}}").unwrap();
    let o = equiroute(&[
        "compare",
        "--config",
        broken.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("broken.json") && stderr(&o).contains("line 2"),
        "{}",
        stderr(&o)
    );

    let o = equiroute(&[
        "run",
        "--config",
        broken.to_str().unwrap(),
        "--strategy",
        "fastest",
        "--out",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_destination_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("cut.json");
    std::fs::write(
        &net,
        r#"{"nodes": [{"id": 1}, {"id": 2}, {"id": 3}],
 "edges": [{"from": 1, "to": 2, "free_flow_time_min": 1.0, "capacity_veh_per_min_per_lane": 5.0}],
 "origins": [1], "destinations": [3]}"#,
    )
    .unwrap();
    let o = equiroute(&["validate", "--network", net.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn generated_presets_validate() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, n) in [("boston-like", "58 nodes"), ("line", "4 nodes")] {
        let net = dir.path().join(format!("{kind}.json"));
        let o = equiroute(&[
            "gen-network",
            "--kind",
            kind,
            "--nodes",
            "4",
            "--out",
            net.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = equiroute(&["validate", "--network", net.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stdout(&o));
        assert!(stdout(&o).contains(n));
    }
}
