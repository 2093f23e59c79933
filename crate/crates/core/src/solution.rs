//! Routed solutions: one arc path per service, with objective breakdown and
//! solver metadata.

use serde::{Deserialize, Serialize};

use crate::cost::{CostBreakdown, EdgeCostTable};
use crate::geometry::Point3;
use crate::graph::{ArcId, RoutingGraph};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Proven optimal.
    Optimal,
    /// Feasible, optimality not proven.
    Feasible,
    /// Proven infeasible.
    Infeasible,
    /// Stopped at a limit without a feasible solution.
    TimeLimit,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub service: u32,
    pub arc_ids: Vec<ArcId>,
    /// Path corners from source to destination; straight runs are merged.
    pub polyline: Vec<Point3>,
    pub cost_breakdown: CostBreakdown,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    #[serde(default)]
    pub lower_bound: Option<f64>,
    #[serde(default)]
    pub gap: Option<f64>,
    #[serde(default)]
    pub nodes: u64,
    #[serde(default)]
    pub cuts_dist: u64,
    #[serde(default)]
    pub cuts_elbow: u64,
    #[serde(default)]
    pub iterations: u64,
    #[serde(default)]
    pub variables: u64,
    #[serde(default)]
    pub constraints: u64,
    /// Seconds.
    #[serde(default)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    #[serde(default = "crate::scenario::default_schema_version")]
    pub schema_version: u32,
    pub status: SolveStatus,
    pub method: String,
    /// Spacing of the grid the arc ids refer to.
    pub grid_spacing: f64,
    pub routes: Vec<Route>,
    pub objective: f64,
    pub breakdown: CostBreakdown,
    #[serde(default)]
    pub meta: SolveMeta,
}

/// Corner points of an arc path, merging straight runs and elbows.
pub fn polyline(g: &RoutingGraph, arcs: &[ArcId]) -> Vec<Point3> {
    let mut pts: Vec<Point3> = Vec::new();
    if let Some(&first) = arcs.first() {
        pts.push(g.node_point(g.arc_tail(first)));
    }
    for &a in arcs {
        let q = g.node_point(g.arc_head(a));
        if pts.last() == Some(&q) {
            continue;
        }
        if pts.len() >= 2 {
            let (p0, p1) = (pts[pts.len() - 2], pts[pts.len() - 1]);
            let (d1, d2) = (p1 - p0, q - p1);
            let cross = Point3::new(
                d1.y * d2.z - d1.z * d2.y,
                d1.z * d2.x - d1.x * d2.z,
                d1.x * d2.y - d1.y * d2.x,
            );
            if cross.norm() == 0.0 && d1.dot(&d2) > 0.0 {
                pts.pop();
            }
        }
        pts.push(q);
    }
    pts
}

impl Solution {
    /// Solution without routes.
    pub fn empty(status: SolveStatus, method: &str, grid_spacing: f64) -> Self {
        Solution {
            schema_version: crate::scenario::SCHEMA_VERSION,
            status,
            method: method.to_string(),
            grid_spacing,
            routes: Vec::new(),
            objective: 0.0,
            breakdown: CostBreakdown::default(),
            meta: SolveMeta::default(),
        }
    }

    /// Assembles a solution from per-service arc paths (indexed like
    /// `scenario.services`).
    pub fn from_paths(
        g: &RoutingGraph,
        scenario: &Scenario,
        costs: &EdgeCostTable,
        paths: &[Vec<ArcId>],
        status: SolveStatus,
        method: &str,
    ) -> Self {
        let mut sol = Solution::empty(status, method, g.spacing());
        let mut objective = 0.0;
        for (k, arcs) in paths.iter().enumerate() {
            let b = costs.path_breakdown(g, k, arcs);
            objective += costs.path_cost(k, arcs);
            sol.breakdown += b;
            sol.routes.push(Route {
                service: scenario.services[k].id,
                arc_ids: arcs.clone(),
                polyline: polyline(g, arcs),
                cost_breakdown: b,
            });
        }
        sol.objective = objective;
        sol
    }

    /// Arc paths indexed like `scenario.services`; `None` if a service has
    /// no route or a route names an unknown service.
    pub fn paths(&self, scenario: &Scenario) -> Option<Vec<Vec<ArcId>>> {
        let mut out = vec![None; scenario.services.len()];
        for r in &self.routes {
            let k = scenario.service_index(r.service)?;
            out[k] = Some(r.arc_ids.clone());
        }
        out.into_iter().collect()
    }
}
