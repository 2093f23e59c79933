//! Independent feasibility check of a routed solution. Everything is
//! re-measured from lattice geometry; no solver state is consulted.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::cost::EdgeCostTable;
use crate::error::Result;
use crate::geometry::{cuboid_segment_distance, segment_distance, Segment3};
use crate::graph::{ArcId, NodeId, RoutingGraph};
use crate::scenario::{pair_clearance, Scenario};
use crate::solution::Solution;

/// Relative tolerance of the objective comparison.
pub const OBJECTIVE_RTOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    PathStructure,
    Dist,
    Elbow,
    Obstacle,
    Objective,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckKind::PathStructure => "path structure",
            CheckKind::Dist => "clearance",
            CheckKind::Elbow => "elbow spacing",
            CheckKind::Obstacle => "obstacle clearance",
            CheckKind::Objective => "objective",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A route that is not a walk from its source to its destination, or a
    /// service with no (or more than one) route.
    Walk {
        service: u32,
        arc: Option<ArcId>,
        message: String,
    },
    /// A node left more than once, by one service or by two.
    NodeReuse { node: NodeId, services: (u32, u32) },
    /// Two arcs of different services closer than their pair clearance.
    Dist {
        services: (u32, u32),
        arcs: (ArcId, ArcId),
        distance: f64,
        required: f64,
    },
    /// Two elbows of one service no farther apart than its elbow minimum.
    Elbow {
        service: u32,
        arcs: (ArcId, ArcId),
        distance: f64,
        minimum: f64,
    },
    /// A straight arc too close to (or through) a blocking obstacle.
    Obstacle {
        service: u32,
        arc: ArcId,
        obstacle: usize,
        distance: f64,
        required: f64,
    },
    /// Stored objective differing from the recomputed one.
    Objective { stored: f64, recomputed: f64 },
}

impl Witness {
    pub fn kind(&self) -> CheckKind {
        match self {
            Witness::Walk { .. } | Witness::NodeReuse { .. } => CheckKind::PathStructure,
            Witness::Dist { .. } => CheckKind::Dist,
            Witness::Elbow { .. } => CheckKind::Elbow,
            Witness::Obstacle { .. } => CheckKind::Obstacle,
            Witness::Objective { .. } => CheckKind::Objective,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Walk { service, arc, message } => match arc {
                Some(a) => write!(f, "service {service}, arc {a}: {message}"),
                None => write!(f, "service {service}: {message}"),
            },
            Witness::NodeReuse { node, services } if services.0 == services.1 => {
                write!(f, "service {} leaves node {node} twice", services.0)
            }
            Witness::NodeReuse { node, services } => {
                write!(f, "services {} and {} both leave node {node}", services.0, services.1)
            }
            Witness::Dist {
                services,
                arcs,
                distance,
                required,
            } => write!(
                f,
                "service {} arc {} and service {} arc {} are {distance} apart, need {required}",
                services.0, arcs.0, services.1, arcs.1
            ),
            Witness::Elbow {
                service,
                arcs,
                distance,
                minimum,
            } => write!(
                f,
                "service {service} elbows {} and {} are {distance} apart, need more than {minimum}",
                arcs.0, arcs.1
            ),
            Witness::Obstacle {
                service,
                arc,
                obstacle,
                distance,
                required,
            } => write!(
                f,
                "service {service} arc {arc} is {distance} from obstacle {obstacle}, need {required}"
            ),
            Witness::Objective { stored, recomputed } => {
                write!(f, "stored objective {stored} but routes cost {recomputed}")
            }
        }
    }
}

/// Smallest distance between arcs of two different services.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosestPair {
    pub services: (u32, u32),
    pub distance: f64,
    pub required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub witnesses: Vec<Witness>,
    pub recomputed_objective: f64,
    pub closest_pair: Option<ClosestPair>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn check_passed(&self, kind: CheckKind) -> bool {
        !self.witnesses.iter().any(|w| w.kind() == kind)
    }

    pub fn witnesses_of(&self, kind: CheckKind) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(move |w| w.kind() == kind)
    }

    /// One line per check, then one line per witness.
    pub fn summary(&self) -> String {
        use CheckKind::*;
        let mut out = String::new();
        for kind in [PathStructure, Dist, Elbow, Obstacle, Objective] {
            let n = self.witnesses_of(kind).count();
            let verdict = if n == 0 { "ok".to_string() } else { format!("FAILED ({n})") };
            out.push_str(&format!("{kind}: {verdict}\n"));
        }
        for w in &self.witnesses {
            out.push_str(&format!("  {w}\n"));
        }
        if self.passed() {
            out.push_str("all checks passed\n");
        }
        out
    }
}

/// Checks `solution` against every constraint family of the scenario.
pub fn validate(g: &RoutingGraph, scenario: &Scenario, costs: &EdgeCostTable, solution: &Solution) -> ValidationReport {
    let mut w = Vec::new();
    let paths = collect_paths(g, scenario, solution, &mut w);
    check_walks(g, scenario, &paths, &mut w);
    check_node_reuse(g, scenario, &paths, &mut w);
    let closest_pair = check_dist(g, scenario, &paths, &mut w);
    check_elbows(g, scenario, &paths, &mut w);
    check_obstacles(g, scenario, &paths, &mut w);

    let recomputed: f64 = paths
        .iter()
        .enumerate()
        .map(|(k, p)| p.map_or(0.0, |p| costs.path_cost(k, p)))
        .sum();
    if (solution.objective - recomputed).abs() > OBJECTIVE_RTOL * recomputed.abs().max(1.0) {
        w.push(Witness::Objective {
            stored: solution.objective,
            recomputed,
        });
    }
    ValidationReport {
        witnesses: w,
        recomputed_objective: recomputed,
        closest_pair,
    }
}

/// Validates on a graph built at the solution's own grid spacing, so that
/// solutions from a fallback grid can be checked too.
pub fn validate_standalone(scenario: &Scenario, solution: &Solution) -> Result<ValidationReport> {
    let g = RoutingGraph::build_with_spacing(scenario, solution.grid_spacing)?;
    let costs = EdgeCostTable::build(&g, scenario)?;
    Ok(validate(&g, scenario, &costs, solution))
}

/// Routes per scenario service. Routes with unknown arcs are reported and
/// dropped from the geometric checks.
fn collect_paths<'s>(
    g: &RoutingGraph,
    scenario: &Scenario,
    solution: &'s Solution,
    w: &mut Vec<Witness>,
) -> Vec<Option<&'s [ArcId]>> {
    let mut paths: Vec<Option<&[ArcId]>> = vec![None; scenario.services.len()];
    if solution.grid_spacing != g.spacing() {
        for s in &scenario.services {
            w.push(Witness::Walk {
                service: s.id,
                arc: None,
                message: format!(
                    "solution refers to a grid of spacing {}, not {}",
                    solution.grid_spacing,
                    g.spacing()
                ),
            });
        }
        return paths;
    }
    for r in &solution.routes {
        let Some(k) = scenario.service_index(r.service) else {
            w.push(Witness::Walk {
                service: r.service,
                arc: None,
                message: "no such service".into(),
            });
            continue;
        };
        if paths[k].is_some() {
            w.push(Witness::Walk {
                service: r.service,
                arc: None,
                message: "more than one route".into(),
            });
            continue;
        }
        if let Some(&a) = r.arc_ids.iter().find(|&&a| a >= g.num_arcs()) {
            w.push(Witness::Walk {
                service: r.service,
                arc: Some(a),
                message: "arc does not exist".into(),
            });
            continue;
        }
        paths[k] = Some(&r.arc_ids);
    }
    paths
}

fn check_walks(g: &RoutingGraph, scenario: &Scenario, paths: &[Option<&[ArcId]>], w: &mut Vec<Witness>) {
    for (k, p) in paths.iter().enumerate() {
        let id = scenario.services[k].id;
        let walk = |arc: Option<ArcId>, message: &str| Witness::Walk {
            service: id,
            arc,
            message: message.to_string(),
        };
        let Some(p) = p else {
            if !w.iter().any(|x| matches!(x, Witness::Walk { service, .. } if *service == id)) {
                w.push(walk(None, "no route"));
            }
            continue;
        };
        let (source, target) = (g.services[k].source, g.services[k].target);
        let (Some(&first), Some(&last)) = (p.first(), p.last()) else {
            w.push(walk(None, "empty route"));
            continue;
        };
        if g.arc_tail(first) != source {
            w.push(walk(Some(first), "route does not start at the source"));
        }
        for pair in p.windows(2) {
            if g.arc_head(pair[0]) != g.arc_tail(pair[1]) {
                w.push(walk(Some(pair[1]), "arc does not continue the route"));
            }
        }
        if g.arc_head(last) != target {
            w.push(walk(Some(last), "route does not end at the destination"));
        }
    }
}

/// At most one arc may leave any node over all services.
fn check_node_reuse(g: &RoutingGraph, scenario: &Scenario, paths: &[Option<&[ArcId]>], w: &mut Vec<Witness>) {
    let mut owner: HashMap<NodeId, usize> = HashMap::new();
    for (k, p) in paths.iter().enumerate() {
        for &a in p.unwrap_or_default() {
            let v = g.arc_tail(a);
            if let Some(&j) = owner.get(&v) {
                w.push(Witness::NodeReuse {
                    node: v,
                    services: (scenario.services[j].id, scenario.services[k].id),
                });
            } else {
                owner.insert(v, k);
            }
        }
    }
}

fn check_dist(
    g: &RoutingGraph,
    scenario: &Scenario,
    paths: &[Option<&[ArcId]>],
    w: &mut Vec<Witness>,
) -> Option<ClosestPair> {
    let segs: Vec<Vec<(ArcId, Segment3)>> = paths
        .iter()
        .map(|p| p.unwrap_or_default().iter().map(|&a| (a, g.arc_segment(a))).collect())
        .collect();
    let mut closest: Option<ClosestPair> = None;
    for k in 0..segs.len() {
        for l in k + 1..segs.len() {
            let (sk, sl) = (&scenario.services[k], &scenario.services[l]);
            let required = pair_clearance(sk, sl);
            for (a, x) in &segs[k] {
                for (b, y) in &segs[l] {
                    let d = segment_distance(x, y);
                    if closest.is_none_or(|c| d < c.distance) {
                        closest = Some(ClosestPair {
                            services: (sk.id, sl.id),
                            distance: d,
                            required,
                        });
                    }
                    if d < required {
                        w.push(Witness::Dist {
                            services: (sk.id, sl.id),
                            arcs: (*a, *b),
                            distance: d,
                            required,
                        });
                    }
                }
            }
        }
    }
    closest
}

fn check_elbows(g: &RoutingGraph, scenario: &Scenario, paths: &[Option<&[ArcId]>], w: &mut Vec<Witness>) {
    for (k, p) in paths.iter().enumerate() {
        let s = &scenario.services[k];
        let elbows: Vec<ArcId> = p.unwrap_or_default().iter().copied().filter(|&a| g.is_virtual_arc(a)).collect();
        for i in 0..elbows.len() {
            for j in i + 1..elbows.len() {
                let d = g.node_point(g.arc_tail(elbows[i])).distance(&g.node_point(g.arc_tail(elbows[j])));
                if d <= s.elbow_min {
                    w.push(Witness::Elbow {
                        service: s.id,
                        arcs: (elbows[i], elbows[j]),
                        distance: d,
                        minimum: s.elbow_min,
                    });
                }
            }
        }
    }
}

fn check_obstacles(g: &RoutingGraph, scenario: &Scenario, paths: &[Option<&[ArcId]>], w: &mut Vec<Witness>) {
    for (k, p) in paths.iter().enumerate() {
        let s = &scenario.services[k];
        let required = s.clearance();
        for &a in p.unwrap_or_default() {
            if g.is_virtual_arc(a) {
                continue;
            }
            let seg = g.arc_segment(a);
            for (o, obstacle) in scenario.obstacles.iter().enumerate() {
                let clip = obstacle.clip(&seg);
                let exempt = scenario
                    .penetrable_zones
                    .iter()
                    .any(|z| z.clip_parameters(&seg).is_some() && clip.is_none_or(|c| z.contains_segment(&c)));
                if exempt {
                    continue;
                }
                let distance = if obstacle.intersects_interior(&seg) {
                    0.0
                } else {
                    cuboid_segment_distance(obstacle, &seg)
                };
                if distance < required {
                    w.push(Witness::Obstacle {
                        service: s.id,
                        arc: a,
                        obstacle: o,
                        distance,
                        required,
                    });
                }
            }
        }
    }
}
