//! Property suites over randomly generated networks, logs and fleets.

use proptest::prelude::*;

use crate::equity::{dte, ModeParams, ModeTable};
use crate::flow::VehicleId;
use crate::network::{EdgeSpec, NetworkSpec, NodeId, NodeSpec, RoadNetwork};
use crate::sim::{Scenario, VehicleSpec};

/// `rows x cols` grid, both directions between neighbours, integer
/// free-flow times so route sums are exact.
fn grid_spec(rows: usize, cols: usize, times: &[u8], capacity: f64) -> NetworkSpec {
    let id = |r: usize, c: usize| (r * cols + c) as u64;
    let mut edges = Vec::new();
    let mut k = 0;
    let mut time = || {
        k += 1;
        f64::from(times[k % times.len()])
    };
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push(EdgeSpec::timed(id(r, c), id(r, c + 1), time(), capacity));
                edges.push(EdgeSpec::timed(id(r, c + 1), id(r, c), time(), capacity));
            }
            if r + 1 < rows {
                edges.push(EdgeSpec::timed(id(r, c), id(r + 1, c), time(), capacity));
                edges.push(EdgeSpec::timed(id(r + 1, c), id(r, c), time(), capacity));
            }
        }
    }
    NetworkSpec {
        nodes: (0..(rows * cols) as u64).map(NodeSpec::new).collect(),
        edges,
        origins: vec![0],
        destinations: vec![(rows * cols - 1) as u64],
        bpr: None,
    }
}

fn arb_grid(capacity: f64) -> impl Strategy<Value = RoadNetwork> {
    (2usize..=4, 2usize..=4, prop::collection::vec(1u8..=5, 1..30))
        .prop_map(move |(r, c, times)| RoadNetwork::build(&grid_spec(r, c, &times, capacity)).unwrap())
}

/// Random directed graph on up to 7 nodes with integer weights.
fn arb_digraph() -> impl Strategy<Value = RoadNetwork> {
    (2usize..=7)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(prop::option::weighted(0.5, 1u8..=4), n * n),
            )
        })
        .prop_map(|(n, cells)| {
            let mut edges = Vec::new();
            for (i, w) in cells.into_iter().enumerate() {
                let (a, b) = (i / n, i % n);
                if let (true, Some(w)) = (a != b, w) {
                    edges.push(EdgeSpec::timed(a as u64, b as u64, f64::from(w), 1.0));
                }
            }
            RoadNetwork::build(&NetworkSpec {
                nodes: (0..n as u64).map(NodeSpec::new).collect(),
                edges,
                origins: vec![0],
                destinations: vec![0],
                bpr: None,
            })
            .unwrap()
        })
}

fn arb_mode_params() -> impl Strategy<Value = ModeParams> {
    (
        0.05f64..0.9,
        0.05f64..0.9,
        0.05f64..1.0,
        0.5f64..30.0,
        1.0f64..48.0,
        1u32..=3,
    )
        .prop_map(|(a, b, eps, wait, window, occupancy)| {
            let total = a + b + 1.0;
            ModeParams {
                xi1: a / total,
                xi2: b / total,
                xi3: 1.0 - a / total - b / total,
                epsilon_usd_per_min: eps,
                wait_min: wait,
                departure_window_h: window,
                occupancy,
            }
        })
}

fn arb_modes() -> impl Strategy<Value = ModeTable> {
    (arb_mode_params(), arb_mode_params(), arb_mode_params()).prop_map(|(p, a, r)| ModeTable {
        private: p,
        autonomous: a,
        ride_hailing: r,
    })
}

/// Fleet on `network` drawn from per-vehicle seeds.
fn fleet(network: &RoadNetwork, draws: &[(u8, u16, u16, u16)]) -> Vec<VehicleSpec> {
    let n = network.node_count();
    draws
        .iter()
        .enumerate()
        .map(|(i, &(mode, o, d, t))| VehicleSpec {
            id: VehicleId(i as u32),
            mode: crate::equity::Mode::ALL[mode as usize % 3],
            origin: NodeId(u32::from(o) % n as u32),
            destination: NodeId(u32::from(d) % n as u32),
            departure: f64::from(t % 40) / 4.0,
        })
        .collect()
}

fn brute_force_gini(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sum: f64 = xs.iter().flat_map(|a| xs.iter().map(move |b| (a - b).abs())).sum();
    sum / (2.0 * n * n * mean)
}

mod network_props {
    use super::*;
    use crate::network::{free_flow_route_time, Route};

    proptest! {
        #[test]
        fn bpr_is_exact_at_zero_and_monotone_convex(
            tau0 in 0.1f64..20.0,
            cap in 0.5f64..20.0,
            lanes in 1u32..=4,
            mut flows in prop::collection::vec(0.0f64..100.0, 3..40),
        ) {
            let spec = NetworkSpec {
                nodes: vec![NodeSpec::new(0), NodeSpec::new(1)],
                edges: vec![EdgeSpec { lanes, ..EdgeSpec::timed(0, 1, tau0, cap) }],
                origins: vec![0],
                destinations: vec![1],
                bpr: None,
            };
            let net = RoadNetwork::build(&spec).unwrap();
            let e = net.edge_between(NodeId(0), NodeId(1)).unwrap();
            prop_assert_eq!(net.travel_time(e, 0.0).unwrap(), tau0);
            flows.sort_by(f64::total_cmp);
            let times: Vec<f64> = flows.iter().map(|&f| net.travel_time(e, f).unwrap()).collect();
            for w in times.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            // Convexity at evenly spaced points.
            let step = flows[flows.len() - 1] / 8.0;
            let at = |k: f64| net.travel_time(e, k * step).unwrap();
            for k in 1..8 {
                let k = k as f64;
                prop_assert!(at(k) <= (at(k - 1.0) + at(k + 1.0)) / 2.0 + 1e-9 * at(k));
            }
        }

        #[test]
        fn route_time_adds_over_concatenation(net in arb_grid(5.0), cut in 0usize..100) {
            let last = NodeId(net.node_count() as u32 - 1);
            let route = crate::paths::shortest_route(&net, &crate::paths::Weights::free_flow(&net), NodeId(0), last)
                .unwrap();
            let nodes = route.nodes();
            let k = cut % nodes.len();
            let head = Route::from_nodes(&net, nodes[..=k].to_vec()).unwrap();
            let tail = Route::from_nodes(&net, nodes[k..].to_vec()).unwrap();
            prop_assert_eq!(
                free_flow_route_time(&net, &route).unwrap(),
                free_flow_route_time(&net, &head).unwrap() + free_flow_route_time(&net, &tail).unwrap()
            );
        }
    }
}

mod path_props {
    use super::*;
    use crate::paths::{k_shortest_routes, k_shortest_routes_avoiding, route_order, shortest_route, Weights};

    proptest! {
        #[test]
        fn candidate_sets_are_prefixes_and_well_formed(net in arb_digraph(), from in 0u32..7, to in 0u32..7, l in 1usize..8) {
            let n = net.node_count() as u32;
            let (from, to) = (NodeId(from % n), NodeId(to % n));
            prop_assume!(from != to);
            let w = Weights::free_flow(&net);
            let (Ok(small), Ok(big)) = (
                k_shortest_routes(&net, &w, from, to, l),
                k_shortest_routes(&net, &w, from, to, l + 1),
            ) else {
                prop_assert!(shortest_route(&net, &w, from, to).is_err());
                return Ok(());
            };
            prop_assert!(small.len() <= l);
            prop_assert_eq!(&big.routes[..small.len()], &small.routes[..]);
            prop_assert_eq!(&shortest_route(&net, &w, from, to).unwrap(), &small.routes[0].route);
            for r in &small.routes {
                prop_assert_eq!(r.route.source(), from);
                prop_assert_eq!(r.route.target(), to);
                prop_assert_eq!(r.weight, w.route_weight(&r.route));
            }
            for pair in small.routes.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                prop_assert_eq!(
                    route_order(a.weight, a.route.nodes(), b.weight, b.route.nodes()),
                    std::cmp::Ordering::Less
                );
            }
        }

        #[test]
        fn avoiding_matches_filtered_search(
            net in arb_digraph(),
            from in 0u32..7,
            to in 0u32..7,
            banned in prop::collection::vec(0u32..7, 0..3),
            l in 1usize..6,
        ) {
            let n = net.node_count() as u32;
            let (from, to) = (NodeId(from % n), NodeId(to % n));
            let avoid: Vec<NodeId> = banned.iter().map(|&b| NodeId(b % n)).filter(|&b| b != from && b != to).collect();
            prop_assume!(from != to);
            let w = Weights::free_flow(&net);
            let got = k_shortest_routes_avoiding(&net, &w, from, to, l, &avoid).map(|s| s.routes).unwrap_or_default();
            // Reference: all routes, best first, minus those touching a banned node.
            let all = k_shortest_routes(&net, &w, from, to, 200).map(|s| s.routes).unwrap_or_default();
            let want: Vec<_> = all
                .into_iter()
                .filter(|r| !r.route.nodes().iter().any(|v| avoid.contains(v)))
                .take(l)
                .collect();
            prop_assert_eq!(got, want);
        }
    }
}

mod flow_props {
    use super::*;
    use crate::flow::{monitor_adjacent_flow, rollout_route, EntryLog, PlanRegistry};

    proptest! {
        #[test]
        fn monitored_flow_counts_others_plus_self(
            times in prop::collection::vec((0u32..5, 0u16..400), 0..60),
            at in 0u16..400,
            hw_quarters in 1u16..40,
        ) {
            let spec = NetworkSpec {
                nodes: vec![NodeSpec::new(0), NodeSpec::new(1)],
                edges: vec![EdgeSpec::timed(0, 1, 1.0, 5.0)],
                origins: vec![0],
                destinations: vec![1],
                bpr: None,
            };
            let net = RoadNetwork::build(&spec).unwrap();
            let e = net.edge_between(NodeId(0), NodeId(1)).unwrap();
            let mut entries: Vec<(f64, u32)> = times.iter().map(|&(v, t)| (f64::from(t) / 4.0, v)).collect();
            entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut log = EntryLog::new(&net);
            for &(t, v) in &entries {
                log.record(VehicleId(v), e, t).unwrap();
            }
            let (a, hw) = (f64::from(at) / 4.0, f64::from(hw_quarters) / 4.0);
            let others = entries.iter().filter(|&&(t, v)| v != 0 && (a - t).abs() <= hw).count();
            let flow = monitor_adjacent_flow(&log, e, a, hw, VehicleId(0));
            prop_assert_eq!(flow, (others as f64 + 1.0) / (2.0 * hw));
            prop_assert!(flow >= 1.0 / (2.0 * hw));
        }

        #[test]
        fn rollout_is_increasing_additive_and_repeatable(
            net in arb_grid(2.0),
            plans in prop::collection::vec((0u16..16, 0u16..16, 0u16..40), 0..12),
            start in 0u16..40,
        ) {
            let n = net.node_count() as u32;
            let w = crate::paths::Weights::free_flow(&net);
            let mut registry = PlanRegistry::new();
            for (i, &(o, d, t)) in plans.iter().enumerate() {
                let (o, d) = (NodeId(u32::from(o) % n), NodeId(u32::from(d) % n));
                if o != d {
                    let r = crate::paths::shortest_route(&net, &w, o, d).unwrap();
                    registry.register(VehicleId(i as u32 + 1), r, f64::from(t) / 4.0);
                }
            }
            let log = EntryLog::new(&net);
            let route = crate::paths::shortest_route(&net, &w, NodeId(0), NodeId(n - 1)).unwrap();
            let start = f64::from(start) / 4.0;
            let a = rollout_route(&net, &log, &registry, &route, start, 1.0, VehicleId(0)).unwrap();
            let b = rollout_route(&net, &log, &registry, &route, start, 1.0, VehicleId(0)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.entry_times[0], start);
            for pair in a.entry_times.windows(2) {
                prop_assert!(pair[0] < pair[1]);
            }
            prop_assert_eq!(a.total, a.travel_times.iter().sum::<f64>());
            prop_assert!(a.flows.iter().all(|&f| f >= 0.5));
        }

        #[test]
        fn lone_vehicle_flow_scales_with_window(hw_quarters in 1u16..400) {
            let spec = NetworkSpec {
                nodes: vec![NodeSpec::new(0), NodeSpec::new(1)],
                edges: vec![EdgeSpec::timed(0, 1, 1.0, 5.0)],
                origins: vec![0],
                destinations: vec![1],
                bpr: None,
            };
            let net = RoadNetwork::build(&spec).unwrap();
            let e = net.edge_between(NodeId(0), NodeId(1)).unwrap();
            let mut log = EntryLog::new(&net);
            log.record(VehicleId(0), e, 3.0).unwrap();
            let hw = f64::from(hw_quarters) / 4.0;
            prop_assert_eq!(monitor_adjacent_flow(&log, e, 3.0, hw, VehicleId(0)), 1.0 / (2.0 * hw));
        }
    }
}

mod equity_props {
    use super::*;
    use crate::equity::{dtx_for_trip_time, gini, Mode, TripMinima};

    proptest! {
        #[test]
        fn dte_matches_brute_force(xs in prop::collection::vec((0.01f64..5.0, 1u32..=3), 1..60)) {
            let report = dte(&xs).unwrap();
            let expanded: Vec<f64> = xs.iter().flat_map(|&(x, m)| std::iter::repeat_n(x, m as usize)).collect();
            prop_assert!((report.gini - brute_force_gini(&expanded)).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&report.dte));
            prop_assert_eq!(report.gini, gini(&expanded));
        }

        #[test]
        fn dtx_falls_as_trips_lengthen(modes in arb_modes(), tau_min in 0.5f64..30.0, a in 1.0f64..3.0, b in 1.0f64..3.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let mode = modes.private;
            let minima = TripMinima {
                tau_min,
                phi_min: modes.epsilon_min() * tau_min,
                q_min: modes.inconvenience_min(),
            };
            let (short, long) = if a < b { (a, b) } else { (b, a) };
            let quick = dtx_for_trip_time(short * tau_min, &minima, &mode);
            let slow = dtx_for_trip_time(long * tau_min, &minima, &mode);
            prop_assert!(slow.value < quick.value);
            for c in [quick.efficiency, quick.cost, quick.convenience] {
                prop_assert!(c > 0.0 && c <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn convenience_is_unit_free(modes in arb_modes(), scale in 0.01f64..100.0, tau_min in 0.5f64..30.0, ratio in 1.0f64..3.0) {
            let mut rescaled = modes;
            for m in Mode::ALL {
                let p = rescaled.get_mut(m);
                p.wait_min *= scale;
                p.departure_window_h *= scale;
            }
            for m in Mode::ALL {
                let score = |table: &ModeTable| {
                    let minima = TripMinima {
                        tau_min,
                        phi_min: table.epsilon_min() * tau_min,
                        q_min: table.inconvenience_min(),
                    };
                    dtx_for_trip_time(ratio * tau_min, &minima, table.get(m)).value
                };
                prop_assert!((score(&modes) - score(&rescaled)).abs() <= 1e-12);
            }
        }
    }
}

mod planner_props {
    use super::*;
    use crate::equity::{trip_minima, Mode};
    use crate::flow::{EntryLog, PlanRegistry};
    use crate::paths::{shortest_route, Weights};
    use crate::planner::{plan_dsr, plan_equity, DecisionPoint, TripProfile, WorldSnapshot};

    /// Registers a shortest-route plan for every drawn competitor.
    fn world(net: &RoadNetwork, modes: &ModeTable, draws: &[(u8, u16, u16, u16)]) -> (PlanRegistry, Vec<TripProfile>) {
        let w = Weights::free_flow(net);
        let mut registry = PlanRegistry::new();
        let mut trips = vec![TripProfile {
            mode: Mode::Private,
            departure: 0.0,
            minima: trip_minima(net, NodeId(0), NodeId(net.node_count() as u32 - 1), modes).unwrap(),
        }];
        for (i, v) in fleet(net, draws).into_iter().enumerate() {
            let minima = trip_minima(net, v.origin, v.destination, modes).unwrap();
            trips.push(TripProfile {
                mode: v.mode,
                departure: v.departure,
                minima,
            });
            if v.origin != v.destination {
                let r = shortest_route(net, &w, v.origin, v.destination).unwrap();
                registry.register(VehicleId(i as u32 + 1), r, v.departure);
            }
        }
        (registry, trips)
    }

    proptest! {
        #[test]
        fn equity_choice_is_a_certified_argmax(
            net in arb_grid(1.0),
            draws in prop::collection::vec(any::<(u8, u16, u16, u16)>(), 0..15),
            l in 1usize..6,
        ) {
            let modes = ModeTable::reference();
            let (registry, trips) = world(&net, &modes, &draws);
            let log = EntryLog::new(&net);
            let snapshot = WorldSnapshot {
                network: &net,
                log: &log,
                registry: &registry,
                modes: &modes,
                trips: &trips,
                now: 2.0,
                half_width: 1.0,
            };
            let point = DecisionPoint {
                vehicle: VehicleId(0),
                at: NodeId(0),
                destination: NodeId(net.node_count() as u32 - 1),
            };
            let d = plan_equity(&point, &snapshot, l).unwrap();
            prop_assert!(d.chosen < d.candidates.len());
            prop_assert_eq!(&d.route, &d.candidates[d.chosen].route);
            if d.competitors > 1 {
                let best = d.candidates[d.chosen].dte.unwrap();
                prop_assert_eq!(d.objective, best);
                for c in &d.candidates {
                    prop_assert!(c.dte.unwrap() <= best);
                }
            }
            // Same snapshot, same decision.
            prop_assert_eq!(&plan_equity(&point, &snapshot, l).unwrap(), &d);

            let fast = plan_dsr(&point, &snapshot, l).unwrap();
            prop_assert_eq!(fast.objective, fast.candidates[fast.chosen].estimated_time.unwrap());
            let nominal = fast.candidates[0].estimated_time.unwrap();
            prop_assert!(fast.objective <= nominal);
        }
    }
}

mod sim_props {
    use super::*;
    use crate::planner::Strategy;
    use crate::sim::{run, Status};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn runs_conserve_vehicles_and_replay(
            net in arb_grid(1.0),
            draws in prop::collection::vec(any::<(u8, u16, u16, u16)>(), 1..25),
            strategy in prop::sample::select(Strategy::ALL.to_vec()),
        ) {
            let vehicles = fleet(&net, &draws);
            let scenario = Scenario::new(net, ModeTable::reference(), vehicles, 1.0, 3).unwrap();
            let a = run(&scenario, strategy).unwrap();
            prop_assert_eq!(&a, &run(&scenario, strategy).unwrap());
            prop_assert_eq!(a.completed + a.failed, scenario.vehicles.len());
            prop_assert_eq!(a.failed, 0);

            let mut travelers = Vec::new();
            for (v, spec) in a.vehicles.iter().zip(&scenario.vehicles) {
                prop_assert_eq!(v.status, Status::Completed);
                // The traversals form a simple path from origin to destination.
                let mut at = spec.origin;
                let mut seen = vec![at];
                let mut clock = spec.departure;
                for t in &v.traversals {
                    let edge = scenario.network.edge(t.edge);
                    prop_assert_eq!(edge.from, at);
                    prop_assert_eq!(t.entry, clock);
                    at = edge.to;
                    prop_assert!(!seen.contains(&at));
                    seen.push(at);
                    clock += t.travel_time;
                }
                prop_assert_eq!(at, spec.destination);
                prop_assert_eq!(v.travel_min, Some(v.traversals.iter().map(|t| t.travel_time).sum()));
                if !v.is_degenerate() {
                    let m = scenario.modes.get(v.mode).occupancy as usize;
                    travelers.extend(std::iter::repeat_n(v.dtx.unwrap(), m));
                }
            }
            match a.fleet_dte() {
                Some(d) => prop_assert!((d - (1.0 - brute_force_gini(&travelers))).abs() <= 1e-12),
                None => prop_assert!(travelers.is_empty()),
            }
        }

        #[test]
        fn lone_vehicle_sees_only_its_own_flow(net in arb_grid(3.0), mode in 0u8..3, dest in 1u16..16) {
            let n = net.node_count() as u32;
            let dest = NodeId(1 + u32::from(dest) % (n - 1));
            let vehicles = fleet(&net, &[(mode, 0, dest.0 as u16, 0)]);
            let scenario = Scenario::new(net, ModeTable::reference(), vehicles, 1.0, 3).unwrap();
            let results: Vec<_> = Strategy::ALL.iter().map(|&s| run(&scenario, s).unwrap()).collect();
            for r in &results {
                for t in &r.vehicles[0].traversals {
                    let e = scenario.network.edge(t.edge);
                    let inflated = e.free_flow_time * (1.0 + 0.15 * (0.5 / e.effective_capacity()).powi(4));
                    prop_assert_eq!(t.flow, 0.5);
                    prop_assert_eq!(t.travel_time, inflated);
                }
                prop_assert_eq!(&r.vehicles[0].traversals, &results[0].vehicles[0].traversals);
            }
        }

        #[test]
        fn equal_free_flow_scores_give_perfect_equity(
            net in arb_grid(1e6),
            params in arb_mode_params(),
            draws in prop::collection::vec(any::<(u8, u16, u16, u16)>(), 1..20),
        ) {
            let modes = ModeTable::uniform(params);
            prop_assert!(crate::equity::check_perfect_equity(&modes, 0.0).unwrap().holds);
            let vehicles = fleet(&net, &draws);
            let scenario = Scenario::new(net, modes, vehicles, 1.0, 3).unwrap();
            let r = run(&scenario, Strategy::Psr).unwrap();
            if let Some(d) = r.fleet_dte() {
                prop_assert!(d >= 1.0 - 1e-12, "fleet DTE {}", d);
            }
        }
    }
}

mod report_props {
    use super::*;
    use crate::planner::Strategy;
    use crate::report::{
        read_json, read_vehicle_csv, recompute_deltas, run_strategies, vehicle_rows, write_comparison,
        ComparisonReport, RunMetadata, COMPARISON_JSON,
    };

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn comparison_files_round_trip(
            net in arb_grid(1.0),
            draws in prop::collection::vec(any::<(u8, u16, u16, u16)>(), 1..15),
        ) {
            let vehicles = fleet(&net, &draws);
            let scenario = Scenario::new(net, ModeTable::reference(), vehicles, 1.0, 3).unwrap();
            let results = run_strategies(&scenario, &Strategy::ALL, 2).unwrap();
            // One frozen fleet for every strategy.
            for r in &results[1..] {
                for (a, b) in r.vehicles.iter().zip(&results[0].vehicles) {
                    prop_assert_eq!((a.id, a.mode, a.origin, a.dest, a.depart_min), (b.id, b.mode, b.origin, b.dest, b.depart_min));
                }
            }
            let meta = RunMetadata { seed: 0, config_digest: "x".into(), vehicles: scenario.vehicles.len(), version: "0".into() };
            let report = ComparisonReport::new(meta, &results);
            let dir = tempfile::tempdir().unwrap();
            write_comparison(dir.path(), &report, &results).unwrap();
            let back: ComparisonReport = read_json(&dir.path().join(COMPARISON_JSON)).unwrap();
            prop_assert_eq!(&back, &report);
            prop_assert_eq!(recompute_deltas(&back.strategies), report.deltas.clone());
            for r in &results {
                let path = dir.path().join(crate::report::vehicles_csv_name(r.strategy));
                prop_assert_eq!(read_vehicle_csv(&path).unwrap(), vehicle_rows(r));
            }
        }
    }
}
