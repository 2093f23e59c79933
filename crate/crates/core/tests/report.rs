mod common;

use common::{break_mutation, corridor_mutation, elbow_mutation, load_data};
use piperoute::cost::EdgeCostTable;
use piperoute::exact::{solve_exact, ExactConfig, Problem};
use piperoute::geometry::{point_segment_distance, Point3, Segment3};
use piperoute::graph::RoutingGraph;
use piperoute::report::{validate, validate_standalone, write_obj, CheckKind, ObjOptions, Witness};
use piperoute::scenario::Scenario;
use piperoute::solution::{Solution, SolveStatus};

struct Solved {
    scenario: Scenario,
    g: RoutingGraph,
    costs: EdgeCostTable,
    solution: Solution,
}

fn solve(scenario: Scenario) -> Solved {
    let g = RoutingGraph::build(&scenario).unwrap();
    let costs = EdgeCostTable::build(&g, &scenario).unwrap();
    let r = solve_exact(&g, &scenario, &costs, &ExactConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    let solution = r.to_solution(&Problem::full(&g, &scenario, &costs), "exact");
    Solved {
        scenario,
        g,
        costs,
        solution,
    }
}

fn pillar() -> Solved {
    solve(load_data("pillar.json"))
}

impl Solved {
    fn mutated(&self, paths: &[Vec<usize>]) -> Solution {
        Solution::from_paths(&self.g, &self.scenario, &self.costs, paths, SolveStatus::Feasible, "mutant")
    }

    fn paths(&self) -> Vec<Vec<usize>> {
        self.solution.paths(&self.scenario).unwrap()
    }
}

#[test]
fn exact_solution_passes_every_check() {
    let s = pillar();
    let r = validate(&s.g, &s.scenario, &s.costs, &s.solution);
    assert!(r.passed(), "{}", r.summary());
    assert!(r.summary().contains("all checks passed"));
    assert!((r.recomputed_objective - s.solution.objective).abs() < 1e-9);
}

#[test]
fn validation_is_repeatable_and_grid_independent() {
    let s = pillar();
    let a = validate(&s.g, &s.scenario, &s.costs, &s.solution);
    let b = validate(&s.g, &s.scenario, &s.costs, &s.solution);
    let c = validate_standalone(&s.scenario, &s.solution).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn corridor_reroute_fails_clearance_with_witness() {
    let s = pillar();
    let paths = corridor_mutation(&s.g, &s.costs, &s.paths(), 0, 1, 0).unwrap();
    let r = validate(&s.g, &s.scenario, &s.costs, &s.mutated(&paths));
    assert!(!r.check_passed(CheckKind::Dist));
    let w = r.witnesses_of(CheckKind::Dist).next().unwrap();
    match w {
        Witness::Dist {
            services,
            distance,
            required,
            ..
        } => {
            assert_eq!(*services, (1, 2));
            assert!(distance < required);
        }
        other => panic!("unexpected witness {other:?}"),
    }
}

#[test]
fn elbows_closer_than_minimum_fail_elbow_check() {
    // jog of one lattice step = 0.4 of the elbow minimum
    let mut scenario = load_data("pillar.json");
    scenario.services[0].elbow_min = 2.5;
    let s = solve(scenario);
    assert!(validate(&s.g, &s.scenario, &s.costs, &s.solution).passed());
    let paths = elbow_mutation(&s.g, &s.paths(), 0, 0).unwrap();
    let r = validate(&s.g, &s.scenario, &s.costs, &s.mutated(&paths));
    assert!(!r.check_passed(CheckKind::Elbow));
    assert!(r.witnesses_of(CheckKind::Elbow).any(|w| matches!(
        w,
        Witness::Elbow { service: 1, distance, .. } if (*distance - 1.0).abs() < 1e-12
    )));
}

#[test]
fn broken_walk_fails_path_structure() {
    let s = pillar();
    for pick in [0, 3, 1000] {
        let paths = break_mutation(&s.paths(), 1, pick);
        let r = validate(&s.g, &s.scenario, &s.costs, &s.mutated(&paths));
        assert!(!r.check_passed(CheckKind::PathStructure), "pick {pick}");
    }
}

#[test]
fn missing_route_and_bad_objective_are_reported() {
    let s = pillar();
    let mut sol = s.solution.clone();
    sol.routes.pop();
    let r = validate(&s.g, &s.scenario, &s.costs, &sol);
    assert!(r.witnesses.iter().any(|w| matches!(w, Witness::Walk { service: 3, .. })));

    let mut sol = s.solution.clone();
    sol.objective *= 1.0 + 1e-5;
    let r = validate(&s.g, &s.scenario, &s.costs, &sol);
    assert_eq!(r.witnesses.len(), 1);
    assert_eq!(r.witnesses[0].kind(), CheckKind::Objective);

    let mut sol = s.solution.clone();
    sol.objective *= 1.0 + 1e-8;
    assert!(validate(&s.g, &s.scenario, &s.costs, &sol).passed());
}

#[test]
fn widening_beyond_closest_pair_fails() {
    let s = pillar();
    let r = validate(&s.g, &s.scenario, &s.costs, &s.solution);
    let closest = r.closest_pair.unwrap();
    let mut wider = s.scenario.clone();
    let k = wider.service_index(closest.services.0).unwrap();
    wider.services[k].radius += closest.distance - closest.required + 1e-3;
    let r = validate(&s.g, &wider, &s.costs, &s.solution);
    assert!(!r.check_passed(CheckKind::Dist));
}

#[test]
fn plain_flow_optimum_is_cheaper_but_violates_clearance() {
    let s = pillar();
    let cfg = ExactConfig {
        separate_dist: false,
        separate_elbow: false,
        ..Default::default()
    };
    let plain = solve_exact(&s.g, &s.scenario, &s.costs, &cfg);
    assert_eq!(plain.status, SolveStatus::Optimal);
    assert!(plain.objective.unwrap() < s.solution.objective);
    let sol = plain.to_solution(&Problem::full(&s.g, &s.scenario, &s.costs), "plain");
    let r = validate(&s.g, &s.scenario, &s.costs, &sol);
    assert!(!r.check_passed(CheckKind::Dist));
}

/// Object name to its vertices and element lines.
fn parse_obj(text: &str) -> Vec<(String, Vec<Point3>, Vec<String>)> {
    let mut out: Vec<(String, Vec<Point3>, Vec<String>)> = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("o") => out.push((it.next().unwrap().to_string(), Vec::new(), Vec::new())),
            Some("v") => {
                let c: Vec<f64> = it.map(|x| x.parse().unwrap()).collect();
                out.last_mut().unwrap().1.push(Point3::new(c[0], c[1], c[2]));
            }
            Some(tag @ ("l" | "f")) => out.last_mut().unwrap().2.push(tag.to_string()),
            _ => {}
        }
    }
    out
}

#[test]
fn obj_has_one_object_per_service_and_obstacle() {
    let s = pillar();
    let mut buf = Vec::new();
    write_obj(&s.scenario, &s.solution, &ObjOptions { tube_sides: None }, &mut buf).unwrap();
    let objs = parse_obj(&String::from_utf8(buf).unwrap());
    let names: Vec<&str> = objs.iter().map(|o| o.0.as_str()).collect();
    assert_eq!(names, ["service_1", "service_2", "service_3", "obstacle_0"]);
    for (o, route) in objs.iter().zip(&s.solution.routes) {
        assert_eq!(o.1, route.polyline);
        assert_eq!(o.2, ["l"]);
    }
    assert_eq!(objs[3].1.len(), 8);
    assert_eq!(objs[3].2.len(), 6);
}

#[test]
fn obj_of_empty_solution_has_obstacles_only() {
    let s = pillar();
    let empty = Solution::empty(SolveStatus::Infeasible, "exact", 1.0);
    let mut buf = Vec::new();
    write_obj(&s.scenario, &empty, &ObjOptions::default(), &mut buf).unwrap();
    let objs = parse_obj(&String::from_utf8(buf).unwrap());
    assert_eq!(objs.len(), 1);
    assert_eq!(objs[0].0, "obstacle_0");
}

#[test]
fn tube_vertices_lie_on_the_pipe_surface() {
    let s = pillar();
    let mut buf = Vec::new();
    write_obj(&s.scenario, &s.solution, &ObjOptions { tube_sides: Some(9) }, &mut buf).unwrap();
    let objs = parse_obj(&String::from_utf8(buf).unwrap());
    for (k, route) in s.solution.routes.iter().enumerate() {
        let (_, verts, elems) = &objs[k];
        let radius = s.scenario.services[k].radius;
        let segs: Vec<Segment3> = route.polyline.windows(2).map(|w| Segment3::new(w[0], w[1])).collect();
        let tube = &verts[route.polyline.len()..];
        assert_eq!(tube.len(), 2 * 9 * segs.len());
        assert_eq!(elems.iter().filter(|e| *e == "f").count(), 2 * 9 * segs.len());
        for v in tube {
            let d = segs.iter().map(|sg| point_segment_distance(v, sg)).fold(f64::INFINITY, f64::min);
            assert!(d <= radius + 1e-6, "vertex {v:?} at {d}");
        }
    }
}
