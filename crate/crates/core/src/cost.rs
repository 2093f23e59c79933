//! Per-service edge costs for the designer cost system and the simplified
//! benchmark cost, plus objective breakdowns.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::graph::{ArcId, EdgeId, RoutingGraph};
use crate::scenario::{Axis, CostModelKind, Scenario};

/// Cost criteria of one edge for one service.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeCriteria {
    /// Physical length `d_e` (0 for elbow edges).
    pub length: f64,
    /// `El_e`: the edge is an elbow.
    pub elbow: bool,
    /// `H_e = MH - h_e` for horizontal edges, 0 otherwise.
    pub height: f64,
    /// `Ch_e`: the edge is vertical.
    pub vertical: bool,
    /// `Pr_e`: the edge lies in a preference zone.
    pub preference: bool,
    /// `Pc_e`: the edge crosses a penetrable zone.
    pub penetrable: bool,
    /// `Cl_e`: the edge is an elbow close to one of the service's terminals.
    pub terminal_elbow: bool,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Criteria of edge `e` for service index `k`.
pub fn criteria(g: &RoutingGraph, scenario: &Scenario, e: EdgeId, k: usize) -> EdgeCriteria {
    let mut c = base_criteria(g, scenario, e);
    if c.elbow {
        let s = &scenario.services[k];
        c.terminal_elbow = near_terminal(&g.edge_segment(e).a, &s.source, &s.destination, scenario.terminal_radius());
    }
    c
}

fn near_terminal(p: &Point3, s: &Point3, t: &Point3, radius: f64) -> bool {
    p.distance(s) <= radius || p.distance(t) <= radius
}

fn base_criteria(g: &RoutingGraph, scenario: &Scenario, e: EdgeId) -> EdgeCriteria {
    let seg = g.edge_segment(e);
    let preference = scenario.preference_zones.iter().any(|z| z.contains_segment(&seg));
    match g.edge_axis(e) {
        None => EdgeCriteria {
            elbow: true,
            preference,
            ..Default::default()
        },
        Some(axis) => EdgeCriteria {
            length: seg.length(),
            elbow: false,
            height: if axis == Axis::Z {
                0.0
            } else {
                (scenario.ceiling() - seg.midpoint().z).max(0.0)
            },
            vertical: axis == Axis::Z,
            preference,
            penetrable: scenario
                .penetrable_zones
                .iter()
                .any(|z| z.clip_parameters(&seg).is_some()),
            terminal_elbow: false,
        },
    }
}

/// Cost split by criterion; `total` is the sum of the other fields.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub length: f64,
    pub preference: f64,
    pub elbow: f64,
    pub height: f64,
    pub vertical: f64,
    pub penetrable: f64,
    pub terminal_elbow: f64,
    pub total: f64,
}

impl Add for CostBreakdown {
    type Output = CostBreakdown;

    fn add(mut self, o: CostBreakdown) -> CostBreakdown {
        self += o;
        self
    }
}

impl AddAssign for CostBreakdown {
    fn add_assign(&mut self, o: CostBreakdown) {
        self.length += o.length;
        self.preference += o.preference;
        self.elbow += o.elbow;
        self.height += o.height;
        self.vertical += o.vertical;
        self.penetrable += o.penetrable;
        self.terminal_elbow += o.terminal_elbow;
        self.total += o.total;
    }
}

/// `(a1 + a5 Pr) d + a2 El + a3 H + a4 Ch + a6 Pc + a7 Cl`, split by term.
pub fn case_study_breakdown(c: &EdgeCriteria, alpha: &[f64; 7]) -> CostBreakdown {
    let mut b = CostBreakdown {
        length: alpha[0] * c.length,
        preference: alpha[4] * flag(c.preference) * c.length,
        elbow: alpha[1] * flag(c.elbow),
        height: alpha[2] * c.height,
        vertical: alpha[3] * flag(c.vertical),
        penetrable: alpha[5] * flag(c.penetrable),
        terminal_elbow: alpha[6] * flag(c.terminal_elbow),
        total: 0.0,
    };
    b.total = b.length + b.preference + b.elbow + b.height + b.vertical + b.penetrable + b.terminal_elbow;
    b
}

/// Designer cost of an edge; fails on a negative result.
pub fn case_study_cost(c: &EdgeCriteria, alpha: &[f64; 7]) -> Result<f64> {
    let v = case_study_breakdown(c, alpha).total;
    if v < 0.0 {
        return Err(Error::CostParameters(format!("edge cost {v} is negative")));
    }
    Ok(v)
}

/// `a1 (d + 10 El + 2 Ch)`, split by term.
pub fn random_breakdown(c: &EdgeCriteria, alpha1: f64) -> CostBreakdown {
    let length = alpha1 * c.length;
    let elbow = alpha1 * 10.0 * flag(c.elbow);
    let vertical = alpha1 * 2.0 * flag(c.vertical);
    CostBreakdown {
        length,
        elbow,
        vertical,
        total: length + elbow + vertical,
        ..Default::default()
    }
}

pub fn random_cost(c: &EdgeCriteria, alpha1: f64) -> f64 {
    random_breakdown(c, alpha1).total
}

/// Dense per-service edge costs `c_e^k`; both arc orientations share the
/// edge cost.
#[derive(Clone, Debug)]
pub struct EdgeCostTable {
    costs: Vec<Vec<f64>>,
    base: Vec<EdgeCriteria>,
    model: CostModelKind,
    alphas: Vec<[f64; 7]>,
    terminals: Vec<(Point3, Point3)>,
    terminal_radius: f64,
}

impl EdgeCostTable {
    pub fn build(g: &RoutingGraph, scenario: &Scenario) -> Result<Self> {
        let base: Vec<EdgeCriteria> = (0..g.num_edges())
            .map(|e| base_criteria(g, scenario, e))
            .collect();
        let mut table = EdgeCostTable {
            costs: Vec::with_capacity(scenario.services.len()),
            base,
            model: scenario.cost_model,
            alphas: scenario.services.iter().map(|s| s.alpha).collect(),
            terminals: scenario
                .services
                .iter()
                .map(|s| (s.source, s.destination))
                .collect(),
            terminal_radius: scenario.terminal_radius(),
        };
        for k in 0..scenario.services.len() {
            let mut row = Vec::with_capacity(g.num_edges());
            for e in 0..g.num_edges() {
                let c = table.criteria_at(g, e, k);
                let v = match table.model {
                    CostModelKind::CaseStudy => case_study_cost(&c, &table.alphas[k]).map_err(|_| {
                        Error::CostParameters(format!(
                            "service {} has a negative cost on edge {e}",
                            scenario.services[k].id
                        ))
                    })?,
                    CostModelKind::Random => random_cost(&c, table.alphas[k][0]),
                };
                row.push(v);
            }
            table.costs.push(row);
        }
        Ok(table)
    }

    fn criteria_at(&self, g: &RoutingGraph, e: EdgeId, k: usize) -> EdgeCriteria {
        let mut c = self.base[e];
        if c.elbow {
            let (s, t) = &self.terminals[k];
            c.terminal_elbow = near_terminal(&g.edge_segment(e).a, s, t, self.terminal_radius);
        }
        c
    }

    pub fn num_services(&self) -> usize {
        self.costs.len()
    }

    pub fn edge_cost(&self, k: usize, e: EdgeId) -> f64 {
        self.costs[k][e]
    }

    pub fn arc_cost(&self, k: usize, a: ArcId) -> f64 {
        self.costs[k][a / 2]
    }

    /// Edge costs of service `k`, for use as a mutable overlay.
    pub fn service_costs(&self, k: usize) -> &[f64] {
        &self.costs[k]
    }

    pub fn service_costs_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.costs[k]
    }

    /// Largest edge cost over all services.
    pub fn max_cost(&self) -> f64 {
        self.costs
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn edge_breakdown(&self, g: &RoutingGraph, k: usize, e: EdgeId) -> CostBreakdown {
        let c = self.criteria_at(g, e, k);
        match self.model {
            CostModelKind::CaseStudy => case_study_breakdown(&c, &self.alphas[k]),
            CostModelKind::Random => random_breakdown(&c, self.alphas[k][0]),
        }
    }

    /// Cost of a path of service `k` given as arcs.
    pub fn path_cost(&self, k: usize, arcs: &[ArcId]) -> f64 {
        arcs.iter().map(|&a| self.arc_cost(k, a)).sum()
    }

    pub fn path_breakdown(&self, g: &RoutingGraph, k: usize, arcs: &[ArcId]) -> CostBreakdown {
        let mut b = CostBreakdown::default();
        for &a in arcs {
            b += self.edge_breakdown(g, k, a / 2);
        }
        b
    }
}

/// Objective of per-service arc paths (indexed by service) and its breakdown.
pub fn objective(g: &RoutingGraph, costs: &EdgeCostTable, paths: &[Vec<ArcId>]) -> (f64, CostBreakdown) {
    let mut total = 0.0;
    let mut b = CostBreakdown::default();
    for (k, p) in paths.iter().enumerate() {
        total += costs.path_cost(k, p);
        b += costs.path_breakdown(g, k, p);
    }
    (total, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cuboid;
    use crate::scenario::{GridSettings, Service, SCHEMA_VERSION};

    const CASE_ALPHA: [f64; 7] = [1.0, 2800.0, 700.0, 200.0, -0.7, 4000.0, 3000.0];

    #[test]
    fn case_study_preference_edge() {
        let c = EdgeCriteria {
            length: 100.0,
            preference: true,
            ..Default::default()
        };
        assert!((case_study_cost(&c, &CASE_ALPHA).unwrap() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn case_study_elbow_near_terminal() {
        let c = EdgeCriteria {
            elbow: true,
            terminal_elbow: true,
            ..Default::default()
        };
        assert_eq!(case_study_cost(&c, &CASE_ALPHA).unwrap(), 5800.0);
        assert_eq!(case_study_cost(&EdgeCriteria::default(), &CASE_ALPHA).unwrap(), 0.0);
    }

    #[test]
    fn case_study_negative_rejected() {
        let c = EdgeCriteria {
            length: 1.0,
            preference: true,
            ..Default::default()
        };
        let alpha = [1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0];
        assert!(matches!(case_study_cost(&c, &alpha), Err(Error::CostParameters(_))));
    }

    #[test]
    fn random_cost_examples() {
        let straight = EdgeCriteria {
            length: 8.0,
            ..Default::default()
        };
        let elbow = EdgeCriteria {
            elbow: true,
            ..Default::default()
        };
        let vertical = EdgeCriteria {
            length: 8.0,
            vertical: true,
            ..Default::default()
        };
        assert_eq!(random_cost(&straight, 3.0), 24.0);
        assert_eq!(random_cost(&elbow, 3.0), 30.0);
        assert_eq!(random_cost(&vertical, 3.0), 30.0);
    }

    fn scenario() -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            region: Cuboid::new(Point3::new(0.0, 0.0, 0.0), Point3::new(400.0, 400.0, 400.0)).unwrap(),
            obstacles: vec![],
            penetrable_zones: vec![],
            preference_zones: vec![Cuboid::new(
                Point3::new(0.0, 0.0, 400.0),
                Point3::new(400.0, 400.0, 400.0),
            )
            .unwrap()],
            services: vec![Service {
                id: 7,
                source: Point3::new(0.0, 0.0, 0.0),
                destination: Point3::new(400.0, 400.0, 400.0),
                radius: 50.0,
                safety: 50.0,
                elbow_min: 50.0,
                alpha: CASE_ALPHA,
                source_axis: None,
                destination_axis: None,
            }],
            grid: GridSettings { spacing: 100.0 },
            cost_model: CostModelKind::CaseStudy,
            terminal_radius: None,
            solver: None,
        }
    }

    #[test]
    fn criteria_from_graph() {
        let s = scenario();
        let g = RoutingGraph::build(&s).unwrap();
        let top = g.physical.node_at(&Point3::new(200.0, 200.0, 400.0)).unwrap();
        let ve = g.elbow_edges(top)[0];
        let c = criteria(&g, &s, ve, 0);
        assert!(c.elbow && c.preference && !c.vertical);
        assert_eq!((c.length, c.height), (0.0, 0.0));
        assert!(!c.terminal_elbow);
        for e in 0..g.num_physical_edges() {
            let c = criteria(&g, &s, e, 0);
            let seg = g.edge_segment(e);
            if g.edge_axis(e) == Some(Axis::Z) {
                assert!(c.vertical);
                assert_eq!(c.height, 0.0);
            } else {
                assert_eq!(c.height, 400.0 - seg.a.z);
            }
        }
        let corner = g.physical.node_at(&Point3::new(100.0, 100.0, 0.0)).unwrap();
        assert!(criteria(&g, &s, g.elbow_edges(corner)[1], 0).terminal_elbow);
    }

    #[test]
    fn table_is_symmetric_and_nonnegative() {
        let s = scenario();
        let g = RoutingGraph::build(&s).unwrap();
        let t = EdgeCostTable::build(&g, &s).unwrap();
        for a in 0..g.num_arcs() {
            assert_eq!(t.arc_cost(0, a), t.arc_cost(0, a ^ 1));
            assert!(t.arc_cost(0, a) >= 0.0);
            let b = t.edge_breakdown(&g, 0, a / 2);
            assert!((b.total - t.arc_cost(0, a)).abs() < 1e-9);
        }
        assert_eq!(objective(&g, &t, &[vec![]]).0, 0.0);
    }
}
