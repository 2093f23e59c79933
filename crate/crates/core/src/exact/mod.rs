//! Exact routing: multicommodity flow master with clearance and elbow
//! constraints enforced lazily by branch-and-bound.

mod bnb;
pub mod cuts;
pub mod model;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::cost::EdgeCostTable;
use crate::graph::{ArcId, RoutingGraph};
use crate::scenario::Scenario;
use crate::solution::{Solution, SolveStatus};

pub use bnb::branch_and_bound;
pub use cuts::{big_m, separate_dist, separate_elbow, Cut, CutKind, CutTerm, Violation};
pub use model::{export_model, MasterModel};

/// A routing problem over a subset of the scenario's services with
/// per-service admissible arcs.
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub graph: &'a RoutingGraph,
    pub scenario: &'a Scenario,
    pub costs: &'a EdgeCostTable,
    /// Scenario indices of the participating services.
    pub services: Vec<usize>,
    /// Admissible arcs, parallel to `services`.
    pub allowed: Vec<FixedBitSet>,
}

impl<'a> Problem<'a> {
    /// All services with their obstacle-clearance masks.
    pub fn full(graph: &'a RoutingGraph, scenario: &'a Scenario, costs: &'a EdgeCostTable) -> Self {
        let services: Vec<usize> = (0..scenario.services.len()).collect();
        Self::subset(graph, scenario, costs, services)
    }

    pub fn subset(
        graph: &'a RoutingGraph,
        scenario: &'a Scenario,
        costs: &'a EdgeCostTable,
        services: Vec<usize>,
    ) -> Self {
        let allowed = services.iter().map(|&k| graph.services[k].allowed.clone()).collect();
        Problem {
            graph,
            scenario,
            costs,
            services,
            allowed,
        }
    }

    /// Number of arc variables.
    pub fn num_variables(&self) -> usize {
        self.allowed.iter().map(|b| b.count_ones(..)).sum()
    }

    /// Rows of the static master: node capacity, conservation and terminals.
    pub fn num_constraints(&self) -> usize {
        let n = self.graph.num_nodes();
        let k = self.services.len();
        n + k * n.saturating_sub(2) + 2 * k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactConfig {
    /// Seconds; `None` for no limit.
    pub time_limit: Option<f64>,
    /// Maximum number of processed branch-and-bound nodes.
    pub node_limit: Option<u64>,
    /// Seed the search with independently optimal per-service routes when
    /// they happen to be jointly feasible.
    pub warm_start: bool,
    /// Worker threads for child evaluation.
    pub threads: usize,
    /// Enforce inter-service clearance.
    pub separate_dist: bool,
    /// Enforce elbow spacing.
    pub separate_elbow: bool,
    /// Keep every emitted cut in the result.
    pub record_cuts: bool,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            time_limit: None,
            node_limit: None,
            warm_start: true,
            threads: 1,
            separate_dist: true,
            separate_elbow: true,
            record_cuts: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Routes parallel to the problem's services (empty without incumbent).
    pub paths: Vec<Vec<ArcId>>,
    pub objective: Option<f64>,
    pub lower_bound: f64,
    pub gap: Option<f64>,
    pub nodes: u64,
    pub cuts_dist: u64,
    pub cuts_elbow: u64,
    pub wall_time: f64,
    pub cuts: Vec<Cut>,
}

impl SolveResult {
    pub fn to_solution(&self, problem: &Problem, method: &str) -> Solution {
        let g = problem.graph;
        let mut sol = if self.status.has_solution() {
            let mut all = vec![Vec::new(); problem.scenario.services.len()];
            for (i, &k) in problem.services.iter().enumerate() {
                all[k] = self.paths[i].clone();
            }
            Solution::from_paths(g, problem.scenario, problem.costs, &all, self.status, method)
        } else {
            Solution::empty(self.status, method, g.spacing())
        };
        sol.meta.lower_bound = Some(self.lower_bound);
        sol.meta.gap = self.gap;
        sol.meta.nodes = self.nodes;
        sol.meta.cuts_dist = self.cuts_dist;
        sol.meta.cuts_elbow = self.cuts_elbow;
        sol.meta.wall_time = self.wall_time;
        sol.meta.variables = problem.num_variables() as u64;
        sol.meta.constraints = problem.num_constraints() as u64;
        sol
    }
}

/// Solves the full routing problem of a scenario exactly.
pub fn solve_exact(
    g: &RoutingGraph,
    scenario: &Scenario,
    costs: &EdgeCostTable,
    config: &ExactConfig,
) -> SolveResult {
    branch_and_bound(&Problem::full(g, scenario, costs), config)
}
