//! Dimensionality reduction: the exact model restricted to boxes around each
//! service's independently optimal route, widened until it is feasible.

use std::time::Instant;

use fixedbitset::FixedBitSet;
use log::info;

use super::{DeltaMode, H1Settings};
use crate::cost::EdgeCostTable;
use crate::error::{Error, Result};
use crate::exact::{branch_and_bound, ExactConfig, Problem};
use crate::geometry::Cuboid;
use crate::graph::{ArcId, RoutingGraph};
use crate::scenario::Scenario;
use crate::solution::{polyline, Solution, SolveStatus};

/// Boxes covering each straight run of a route, widened by `delta`.
pub fn tube(g: &RoutingGraph, arcs: &[ArcId], delta: f64) -> Vec<Cuboid> {
    polyline(g, arcs)
        .windows(2)
        .map(|w| {
            let lo = w[0].min(&w[1]);
            let hi = w[0].max(&w[1]);
            Cuboid::new(lo, hi).expect("ordered corners").expanded(delta)
        })
        .collect()
}

/// Admissible arcs of `base` lying inside one of `boxes`: straight arcs whose
/// segment is contained in a box and elbow arcs at contained nodes.
pub fn restrict(g: &RoutingGraph, base: &FixedBitSet, boxes: &[Cuboid]) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(g.num_arcs());
    for b in boxes {
        for e in g.physical_edges_in_box(b) {
            if b.contains_segment(&g.edge_segment(e)) {
                for a in [2 * e, 2 * e + 1] {
                    if base.contains(a) {
                        out.insert(a);
                    }
                }
            }
        }
        for p in g.physical_nodes_in_box(b) {
            for e in g.elbow_edges(p) {
                for a in [2 * e, 2 * e + 1] {
                    if base.contains(a) {
                        out.insert(a);
                    }
                }
            }
        }
    }
    out
}

fn initial_deltas(scenario: &Scenario, settings: &H1Settings) -> Vec<f64> {
    let s = &scenario.services;
    if let Some(d) = settings.delta_init {
        return vec![d; s.len()];
    }
    match settings.delta_mode {
        DeltaMode::PerService => s.iter().map(|x| x.clearance()).collect(),
        DeltaMode::MaxOverServices => {
            let m = s.iter().map(|x| x.clearance()).fold(0.0, f64::max);
            vec![m; s.len()]
        }
    }
}

/// The dimensionality-reduction heuristic. `exact` configures the restricted
/// solves; its time limit is replaced by the per-solve limit of `settings`.
pub fn run_h1(
    g: &RoutingGraph,
    scenario: &Scenario,
    costs: &EdgeCostTable,
    settings: &H1Settings,
    exact: &ExactConfig,
) -> Result<Solution> {
    let start = Instant::now();
    let n = scenario.services.len();
    let step = settings.delta_step.unwrap_or(g.spacing());
    if step <= 0.0 {
        return Err(Error::Config(format!("tube increment must be positive, got {step}")));
    }
    let mut deltas = initial_deltas(scenario, settings);
    if let Some(d) = deltas.iter().find(|&&d| d <= 0.0) {
        return Err(Error::Config(format!("tube half-width must be positive, got {d}")));
    }
    let cfg = ExactConfig {
        time_limit: Some(settings.time_limit),
        ..exact.clone()
    };

    let mut seeds = Vec::with_capacity(n);
    for k in 0..n {
        let single = Problem::subset(g, scenario, costs, vec![k]);
        let r = branch_and_bound(&single, &cfg);
        if !r.status.has_solution() {
            return Err(match r.status {
                SolveStatus::Infeasible => Error::InfeasibleScenario(format!(
                    "service {} has no route satisfying the elbow spacing",
                    scenario.services[k].id
                )),
                _ => Error::Heuristic(format!(
                    "no route found for service {} within the time limit",
                    scenario.services[k].id
                )),
            });
        }
        seeds.push(r.paths.into_iter().next().unwrap_or_default());
    }

    let full = Problem::full(g, scenario, costs);
    let mut iterations = 0u64;
    loop {
        iterations += 1;
        let allowed: Vec<FixedBitSet> = (0..n)
            .map(|k| {
                let mut boxes = tube(g, &seeds[k], deltas[k]);
                if let Some(z) = settings.init_zones.get(&scenario.services[k].id) {
                    boxes.extend(z.iter().copied());
                }
                restrict(g, &g.services[k].allowed, &boxes)
            })
            .collect();
        let whole = allowed.iter().zip(&full.allowed).all(|(a, b)| a == b);
        let problem = Problem {
            allowed,
            ..full.clone()
        };
        let r = branch_and_bound(&problem, &cfg);
        info!(
            "h1 round {iterations}: {} of {} variables, {:?}",
            problem.num_variables(),
            full.num_variables(),
            r.status
        );
        if r.status.has_solution() {
            let mut sol = r.to_solution(&problem, "h1");
            sol.status = SolveStatus::Feasible;
            sol.meta.lower_bound = None;
            sol.meta.gap = None;
            sol.meta.iterations = iterations;
            sol.meta.wall_time = start.elapsed().as_secs_f64();
            return Ok(sol);
        }
        if whole {
            return Err(match r.status {
                SolveStatus::Infeasible => Error::InfeasibleScenario("the full model is infeasible".into()),
                _ => Error::Heuristic("restricted solve hit its time limit on the full model".into()),
            });
        }
        for d in &mut deltas {
            *d += step;
        }
    }
}
