mod common;

use common::{boxed, brute_force_pair, empty_scenario, micro_scenario, service};
use piperoute::cost::EdgeCostTable;
use piperoute::exact::{solve_exact, ExactConfig, Problem};
use piperoute::geometry::Point3;
use piperoute::graph::RoutingGraph;
use piperoute::heuristics::{run_h1, run_h2, spp_elbow_test, H1Settings, H2Settings};
use piperoute::instances::{generate_random, RandomInstanceSpec};
use piperoute::report::validate;
use piperoute::scenario::{Axis, CostModelKind, Scenario};
use piperoute::shortest_path::Dijkstra;
use piperoute::solution::{Solution, SolveStatus};

fn p(x: f64, y: f64, z: f64) -> Point3 {
    Point3::new(x, y, z)
}

fn along_x(mut s: Scenario) -> Scenario {
    for svc in &mut s.services {
        svc.source_axis = Some(Axis::X);
        svc.destination_axis = Some(Axis::X);
    }
    s
}

fn build(s: &Scenario) -> (RoutingGraph, EdgeCostTable) {
    let g = RoutingGraph::build(s).unwrap();
    let c = EdgeCostTable::build(&g, s).unwrap();
    (g, c)
}

fn elbow_points(g: &RoutingGraph, arcs: &[usize]) -> Vec<Point3> {
    arcs.iter()
        .filter(|&&a| g.is_virtual_arc(a))
        .map(|&a| g.node_point(g.arc_tail(a)))
        .collect()
}

fn is_walk(g: &RoutingGraph, k: usize, arcs: &[usize]) -> bool {
    let v = &g.services[k];
    !arcs.is_empty()
        && g.arc_tail(arcs[0]) == v.source
        && g.arc_head(*arcs.last().unwrap()) == v.target
        && arcs.windows(2).all(|w| g.arc_head(w[0]) == g.arc_tail(w[1]))
}

fn elbow_route(s: &Scenario, k: usize) -> (RoutingGraph, Result<Vec<usize>, piperoute::heuristics::ElbowTestFailed>) {
    let (g, c) = build(s);
    let mut dj = Dijkstra::new(g.num_nodes());
    let r = spp_elbow_test(
        &g,
        k,
        s.services[k].elbow_min,
        c.service_costs(k),
        &g.services[k].allowed,
        50,
        2.0,
        &mut dj,
    );
    (g, r)
}

#[test]
fn straight_corridor_needs_no_elbows() {
    let mut s = empty_scenario(boxed([0.0; 3], [6.0, 2.0, 2.0]), 1.0, CostModelKind::Random);
    s.services.push(service(1, p(0.0, 1.0, 1.0), p(6.0, 1.0, 1.0), 0.3, 0.1, 2.0));
    let (g, r) = elbow_route(&along_x(s), 0);
    let arcs = r.unwrap();
    assert!(is_walk(&g, 0, &arcs));
    assert_eq!(arcs.len(), 6);
    assert!(elbow_points(&g, &arcs).is_empty());
}

#[test]
fn zero_elbow_minimum_keeps_first_shortest_path() {
    let mut s = empty_scenario(boxed([0.0; 3], [8.0, 4.0, 0.0]), 1.0, CostModelKind::Random);
    s.services.push(service(1, p(0.0, 0.0, 0.0), p(8.0, 1.0, 0.0), 0.3, 0.1, 0.0));
    let s = along_x(s);
    let (g, r) = elbow_route(&s, 0);
    let (_, c) = build(&s);
    let plain = Dijkstra::new(g.num_nodes())
        .path(&g, g.services[0].source, g.services[0].target, |a| c.arc_cost(0, a), |a| {
            g.services[0].allowed.contains(a)
        })
        .unwrap()
        .1;
    assert_eq!(r.unwrap(), plain);
}

#[test]
fn close_turns_are_spread_apart() {
    // The shortest route jogs one step in y, placing its two elbows 1 apart.
    let mut s = empty_scenario(boxed([0.0; 3], [8.0, 4.0, 0.0]), 1.0, CostModelKind::Random);
    s.services.push(service(1, p(0.0, 0.0, 0.0), p(8.0, 1.0, 0.0), 0.3, 0.1, 2.0));
    let (g, r) = elbow_route(&along_x(s), 0);
    let arcs = r.unwrap();
    assert!(is_walk(&g, 0, &arcs));
    let e = elbow_points(&g, &arcs);
    assert!(e.len() >= 2);
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            assert!(e[i].distance(&e[j]) > 2.0, "{:?} {:?}", e[i], e[j]);
        }
    }
}

fn independent_cost(g: &RoutingGraph, c: &EdgeCostTable, k: usize) -> f64 {
    Dijkstra::new(g.num_nodes())
        .path(g, g.services[k].source, g.services[k].target, |a| c.arc_cost(k, a), |a| {
            g.services[k].allowed.contains(a)
        })
        .unwrap()
        .0
}

#[test]
fn disjoint_corridors_finish_in_one_iteration() {
    let mut s = empty_scenario(boxed([0.0; 3], [6.0, 4.0, 2.0]), 1.0, CostModelKind::Random);
    s.services.push(service(1, p(0.0, 0.0, 1.0), p(6.0, 0.0, 1.0), 0.3, 0.1, 1.0));
    s.services.push(service(2, p(0.0, 4.0, 1.0), p(6.0, 4.0, 1.0), 0.3, 0.1, 1.0));
    let s = along_x(s);
    let (g, c) = build(&s);
    let sol = run_h2(&g, &s, &c, &H2Settings::default()).unwrap();
    assert_eq!(sol.meta.iterations, 1);
    assert_eq!(sol.status, SolveStatus::Feasible);
    for k in 0..2 {
        assert_eq!(sol.routes[k].cost_breakdown.total, independent_cost(&g, &c, k));
    }
    assert!(validate(&g, &s, &c, &sol).passed());
}

/// Two services crossing at the centre of a 5x5x5 grid.
fn crossing() -> Scenario {
    let mut s = empty_scenario(boxed([0.0; 3], [4.0; 3]), 1.0, CostModelKind::Random);
    let mut a = service(1, p(0.0, 2.0, 2.0), p(4.0, 2.0, 2.0), 0.3, 0.1, 0.5);
    a.source_axis = Some(Axis::X);
    a.destination_axis = Some(Axis::X);
    let mut b = service(2, p(2.0, 0.0, 2.0), p(2.0, 4.0, 2.0), 0.3, 0.1, 0.5);
    b.source_axis = Some(Axis::Y);
    b.destination_axis = Some(Axis::Y);
    s.services = vec![a, b];
    s
}

#[test]
fn crossing_services_are_separated() {
    let s = crossing();
    let (g, c) = build(&s);
    assert!(brute_force_pair(&g, &s, &c).optimum.is_some());
    let sol = run_h2(&g, &s, &c, &H2Settings::default()).unwrap();
    let r = validate(&g, &s, &c, &sol);
    assert!(r.passed(), "{}", r.summary());
    assert!(sol.meta.iterations > 1);
}

fn strip_time(mut s: Solution) -> Solution {
    s.meta.wall_time = 0.0;
    s
}

#[test]
fn h2_is_reproducible_across_thread_counts() {
    let s = generate_random(&RandomInstanceSpec::new(17, 4, 3, 1, 7)).unwrap();
    let (g, c) = build(&s);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| strip_time(run_h2(&g, &s, &c, &H2Settings::default()).unwrap()))
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(3));
    assert!(validate(&g, &s, &c, &one).passed());
}

#[test]
fn h1_grows_tubes_around_a_pinch() {
    // Independent optima cross; tubes of width R + safety only hold the
    // lattice line of each route, so the first restricted model is infeasible.
    let s = crossing();
    let (g, c) = build(&s);
    let sol = run_h1(&g, &s, &c, &H1Settings::default(), &ExactConfig::default()).unwrap();
    assert!(sol.meta.iterations >= 2);
    assert!(validate(&g, &s, &c, &sol).passed());
    let full = Problem::full(&g, &s, &c).num_variables() as u64;
    assert!(sol.meta.variables < full);
}

#[test]
fn h1_open_instance_restricts_once_and_bounds_exact() {
    let s = generate_random(&RandomInstanceSpec::new(17, 2, 0, 2, 7)).unwrap();
    let (g, c) = build(&s);
    let sol = run_h1(&g, &s, &c, &H1Settings::default(), &ExactConfig::default()).unwrap();
    assert_eq!(sol.meta.iterations, 1);
    let exact = solve_exact(&g, &s, &c, &ExactConfig::default());
    assert_eq!(exact.status, SolveStatus::Optimal);
    assert!(sol.objective >= exact.objective.unwrap() - 1e-9);
    assert!(sol.meta.variables < Problem::full(&g, &s, &c).num_variables() as u64);
}

#[test]
fn heuristics_bound_exact_on_micro_instances() {
    for seed in 0..12 {
        let s = micro_scenario(seed);
        let Ok((g, c)) = RoutingGraph::build(&s).and_then(|g| {
            let c = EdgeCostTable::build(&g, &s)?;
            Ok((g, c))
        }) else {
            continue;
        };
        let exact = solve_exact(&g, &s, &c, &ExactConfig::default());
        let Some(opt) = exact.objective else {
            continue;
        };
        if let Ok(sol) = run_h1(&g, &s, &c, &H1Settings::default(), &ExactConfig::default()) {
            assert!(sol.objective >= opt - 1e-9, "seed {seed}");
            assert!(validate(&g, &s, &c, &sol).passed(), "seed {seed}");
        }
        if let Ok(sol) = run_h2(&g, &s, &c, &H2Settings::default()) {
            assert!(sol.objective >= opt - 1e-9, "seed {seed}");
            assert!(validate(&g, &s, &c, &sol).passed(), "seed {seed}");
        }
    }
}
