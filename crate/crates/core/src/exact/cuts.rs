//! Detection of clearance and elbow-spacing violations in candidate routes
//! and the linear cuts that exclude them.

use std::collections::HashMap;

use crate::geometry::{closest_points, Cuboid, Point3};
use crate::graph::{ArcId, NodeId, RoutingGraph};
use crate::scenario::{pair_clearance, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutKind {
    /// Inter-service clearance.
    Dist,
    /// Elbow spacing within one service.
    Elbow,
}

/// One variable `x_a^k` with its coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutTerm {
    pub service: usize,
    pub arc: ArcId,
    pub coef: f64,
}

/// A linear constraint `sum coef * x <= rhs` over arc variables.
/// `service` indexes the scenario's service list.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    pub kind: CutKind,
    pub service: usize,
    /// Dist: `(a, None)` with `a` the straight arc of `service`.
    /// Elbow: the two elbow arcs.
    pub arcs: (ArcId, Option<ArcId>),
    pub terms: Vec<CutTerm>,
    pub rhs: f64,
}

impl Cut {
    pub fn key(&self) -> (CutKind, usize, ArcId, Option<ArcId>) {
        (self.kind, self.service, self.arcs.0, self.arcs.1)
    }

    /// Left-hand side for routes given as arc lists per scenario service
    /// (`None` for services without a route).
    pub fn lhs(&self, routes: &[Option<&[ArcId]>]) -> f64 {
        self.terms
            .iter()
            .filter(|t| routes[t.service].is_some_and(|r| r.contains(&t.arc)))
            .map(|t| t.coef)
            .sum()
    }

    pub fn is_satisfied(&self, routes: &[Option<&[ArcId]>]) -> bool {
        self.lhs(routes) <= self.rhs + 1e-9
    }
}

/// A violated constraint found in candidate routes. Services are positions
/// in the problem's service list.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// One service leaves a virtual node twice, by `arc` and `other_arc`.
    Revisit {
        service: usize,
        arc: ArcId,
        other_arc: ArcId,
    },
    /// Two services leave the same virtual node.
    SharedNode { node: NodeId, first: usize, second: usize },
    /// Straight arc `arc` of `service` is closer than the pair clearance to
    /// arc `other_arc` of `other`.
    Dist {
        service: usize,
        arc: ArcId,
        other: usize,
        other_arc: ArcId,
        distance: f64,
        threshold: f64,
    },
    /// Two elbows of `service` at most the elbow spacing apart.
    Elbow {
        service: usize,
        arc: ArcId,
        other_arc: ArcId,
        distance: f64,
    },
}

/// The services of a (sub)problem, as scenario indices.
#[derive(Clone, Copy, Debug)]
pub struct Participants<'a> {
    pub scenario: &'a Scenario,
    pub services: &'a [usize],
}

impl Participants<'_> {
    fn clearance(&self, i: usize, j: usize) -> f64 {
        let s = &self.scenario.services;
        pair_clearance(&s[self.services[i]], &s[self.services[j]])
    }

    fn elbow_min(&self, i: usize) -> f64 {
        self.scenario.services[self.services[i]].elbow_min
    }
}

/// A virtual node that `path` leaves twice by different arcs, if any.
pub fn revisit(g: &RoutingGraph, service: usize, path: &[ArcId]) -> Option<Violation> {
    let mut first: HashMap<NodeId, ArcId> = HashMap::new();
    for &a in path {
        match first.get(&g.arc_tail(a)) {
            Some(&b) if b != a => {
                return Some(Violation::Revisit {
                    service,
                    arc: b,
                    other_arc: a,
                })
            }
            Some(_) => {}
            None => {
                first.insert(g.arc_tail(a), a);
            }
        }
    }
    None
}

/// Virtual nodes left by more than one service, smallest node first.
pub fn shared_nodes(g: &RoutingGraph, paths: &[&[ArcId]]) -> Vec<Violation> {
    let mut owner: HashMap<NodeId, usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        for &a in p.iter() {
            let v = g.arc_tail(a);
            match owner.get(&v) {
                Some(&j) if j != i => out.push(Violation::SharedNode {
                    node: v,
                    first: j,
                    second: i,
                }),
                Some(_) => {}
                None => {
                    owner.insert(v, i);
                }
            }
        }
    }
    out.sort_by_key(|v| match v {
        Violation::SharedNode { node, first, second } => (*node, *first, *second),
        _ => unreachable!(),
    });
    out
}

struct ArcGeom {
    arc: ArcId,
    bbox: Cuboid,
    straight: bool,
}

fn geoms(g: &RoutingGraph, path: &[ArcId]) -> Vec<ArcGeom> {
    path.iter()
        .map(|&a| {
            ArcGeom {
                arc: a,
                bbox: g.edge_segment(a / 2).bounding_box(),
                straight: !g.is_virtual_arc(a),
            }
        })
        .collect()
}

fn bbox_of(items: &[ArcGeom]) -> Option<Cuboid> {
    let mut it = items.iter();
    let first = it.next()?.bbox;
    Some(it.fold(first, |b, x| Cuboid {
        lo: Point3::new(b.lo.x.min(x.bbox.lo.x), b.lo.y.min(x.bbox.lo.y), b.lo.z.min(x.bbox.lo.z)),
        hi: Point3::new(b.hi.x.max(x.bbox.hi.x), b.hi.y.max(x.bbox.hi.y), b.hi.z.max(x.bbox.hi.z)),
    }))
}

/// All clearance violations between services: pairs with a straight arc of
/// one service closer than the pair clearance to any arc of another.
pub fn dist_violations(g: &RoutingGraph, who: Participants, paths: &[&[ArcId]]) -> Vec<Violation> {
    let gs: Vec<Vec<ArcGeom>> = paths.iter().map(|p| geoms(g, p)).collect();
    let boxes: Vec<Option<Cuboid>> = gs.iter().map(|x| bbox_of(x)).collect();
    let mut out = Vec::new();
    for i in 0..paths.len() {
        for j in 0..paths.len() {
            if i == j {
                continue;
            }
            let r = who.clearance(i, j);
            let (Some(bi), Some(bj)) = (boxes[i], boxes[j]) else {
                continue;
            };
            if !bi.expanded(r).intersects(&bj) {
                continue;
            }
            for x in gs[i].iter().filter(|x| x.straight) {
                let reach = x.bbox.expanded(r);
                if !reach.intersects(&bj) {
                    continue;
                }
                for y in &gs[j] {
                    if !reach.intersects(&y.bbox) {
                        continue;
                    }
                    let d = g.arc_distance(x.arc, y.arc);
                    if d < r {
                        out.push(Violation::Dist {
                            service: i,
                            arc: x.arc,
                            other: j,
                            other_arc: y.arc,
                            distance: d,
                            threshold: r,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Elbow arcs of a path in traversal order.
fn elbows(g: &RoutingGraph, path: &[ArcId]) -> Vec<ArcId> {
    path.iter().copied().filter(|&a| g.is_virtual_arc(a)).collect()
}

/// Elbow-spacing violations of one path: consecutive elbow pairs when
/// `consecutive_only`, otherwise every pair.
pub fn elbow_violations(
    g: &RoutingGraph,
    service: usize,
    path: &[ArcId],
    elbow_min: f64,
    consecutive_only: bool,
) -> Vec<Violation> {
    let e = elbows(g, path);
    let mut out = Vec::new();
    for x in 0..e.len() {
        let end = if consecutive_only { (x + 2).min(e.len()) } else { e.len() };
        for y in x + 1..end {
            let d = g.arc_distance(e[x], e[y]);
            if e[x] != e[y] && d <= elbow_min {
                out.push(Violation::Elbow {
                    service,
                    arc: e[x],
                    other_arc: e[y],
                    distance: d,
                });
            }
        }
    }
    out
}

/// The violation to branch on: a shared node first, then the most violated
/// clearance pair, then the first elbow pair along a path.
pub fn select_violation(
    g: &RoutingGraph,
    who: Participants,
    paths: &[&[ArcId]],
    check_dist: bool,
    check_elbow: bool,
) -> Option<Violation> {
    if let Some(v) = paths.iter().enumerate().find_map(|(i, p)| revisit(g, i, p)) {
        return Some(v);
    }
    if let Some(v) = shared_nodes(g, paths).into_iter().next() {
        return Some(v);
    }
    if check_dist {
        let best = dist_violations(g, who, paths).into_iter().min_by(|a, b| {
            let key = |v: &Violation| match *v {
                Violation::Dist {
                    service,
                    arc,
                    other,
                    other_arc,
                    distance,
                    threshold,
                } => (distance - threshold, service, arc, other, other_arc),
                _ => unreachable!(),
            };
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then((ka.1, ka.2, ka.3, ka.4).cmp(&(kb.1, kb.2, kb.3, kb.4)))
        });
        if best.is_some() {
            return best;
        }
    }
    if check_elbow {
        for (i, p) in paths.iter().enumerate() {
            let d = who.elbow_min(i);
            if let Some(v) = elbow_violations(g, i, p, d, true).into_iter().next() {
                return Some(v);
            }
            if let Some(v) = elbow_violations(g, i, p, d, false).into_iter().next() {
                return Some(v);
            }
        }
    }
    None
}

/// `2 (|K| - 1) N + 1`, where `N` counts the straight edges meeting the cube
/// centred at the midpoint of `a` with side `len(a) + 2 max_k' R^{kk'}`.
/// `k` and the other services are scenario indices.
pub fn big_m(g: &RoutingGraph, scenario: &Scenario, services: &[usize], a: ArcId, k: usize) -> f64 {
    if services.len() <= 1 {
        return 1.0;
    }
    let s = &scenario.services;
    let rmax = services
        .iter()
        .filter(|&&o| o != k)
        .map(|&o| pair_clearance(&s[k], &s[o]))
        .fold(0.0, f64::max);
    let seg = g.edge_segment(a / 2);
    let half = seg.length() / 2.0 + rmax;
    let cube = Cuboid::centered(seg.midpoint(), half);
    let n = g.physical_edges_in_box(&cube).len();
    2.0 * (services.len() as f64 - 1.0) * n as f64 + 1.0
}

/// The clearance cut for straight arc `a` of scenario service `k`:
/// `M x_a^k + sum_{k' != k} sum_{d(a,a') < R^{kk'}} x_{a'}^{k'} <= M`.
/// `allowed(k', a')` restricts the conflict set to existing variables.
pub fn dist_cut(
    g: &RoutingGraph,
    scenario: &Scenario,
    services: &[usize],
    a: ArcId,
    k: usize,
    allowed: impl Fn(usize, ArcId) -> bool,
) -> Cut {
    let m = big_m(g, scenario, services, a, k);
    let mut terms = vec![CutTerm {
        service: k,
        arc: a,
        coef: m,
    }];
    let s = &scenario.services;
    let seg = g.edge_segment(a / 2);
    let rmax = services
        .iter()
        .filter(|&&o| o != k)
        .map(|&o| pair_clearance(&s[k], &s[o]))
        .fold(0.0, f64::max);
    let near = g.edges_near(&seg, rmax, true);
    for &o in services.iter().filter(|&&o| o != k) {
        let r = pair_clearance(&s[k], &s[o]);
        for &e in &near {
            if crate::geometry::segment_distance(&seg, &g.edge_segment(e)) < r {
                for arc in [2 * e, 2 * e + 1] {
                    if allowed(o, arc) {
                        terms.push(CutTerm {
                            service: o,
                            arc,
                            coef: 1.0,
                        });
                    }
                }
            }
        }
    }
    Cut {
        kind: CutKind::Dist,
        service: k,
        arcs: (a, None),
        terms,
        rhs: m,
    }
}

/// The elbow cut for elbow arcs `a != b` of scenario service `k` with
/// `d(a, b) <= D^k`. At distinct nodes it covers every elbow arc at both
/// nodes; at the same node it is the pairwise exclusion.
pub fn elbow_cut(g: &RoutingGraph, a: ArcId, b: ArcId, k: usize) -> Cut {
    let (a, b) = (a.min(b), a.max(b));
    let pa = g.elbow_node(a / 2);
    let pb = g.elbow_node(b / 2);
    let arcs: Vec<ArcId> = if pa == pb {
        vec![a, b]
    } else {
        g.coincident_elbow_arcs(a)
            .into_iter()
            .chain(g.coincident_elbow_arcs(b))
            .collect()
    };
    Cut {
        kind: CutKind::Elbow,
        service: k,
        arcs: (a, Some(b)),
        terms: arcs
            .into_iter()
            .map(|arc| CutTerm {
                service: k,
                arc,
                coef: 1.0,
            })
            .collect(),
        rhs: 1.0,
    }
}

/// Clearance cuts violated by routes indexed like `services`, deduplicated.
pub fn separate_dist(g: &RoutingGraph, scenario: &Scenario, services: &[usize], paths: &[&[ArcId]]) -> Vec<Cut> {
    let who = Participants { scenario, services };
    let mut seen = std::collections::BTreeSet::new();
    let mut cuts = Vec::new();
    for v in dist_violations(g, who, paths) {
        if let Violation::Dist { service, arc, .. } = v {
            let k = services[service];
            if seen.insert((k, arc)) {
                cuts.push(dist_cut(g, scenario, services, arc, k, |o, x| {
                    g.services.get(o).is_none_or(|sv| sv.allowed.contains(x))
                }));
            }
        }
    }
    cuts
}

/// Elbow cuts for consecutive elbow pairs along each route.
pub fn separate_elbow(g: &RoutingGraph, scenario: &Scenario, services: &[usize], paths: &[&[ArcId]]) -> Vec<Cut> {
    let mut seen = std::collections::BTreeSet::new();
    let mut cuts = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let k = services[i];
        let d = scenario.services[k].elbow_min;
        for v in elbow_violations(g, i, p, d, true) {
            if let Violation::Elbow { arc, other_arc, .. } = v {
                let c = elbow_cut(g, arc, other_arc, k);
                if seen.insert(c.key()) {
                    cuts.push(c);
                }
            }
        }
    }
    cuts
}

/// Midpoint and separation of the closest points of two arcs.
pub fn closest_midpoint(g: &RoutingGraph, a: ArcId, b: ArcId) -> (Point3, f64) {
    let (p, q) = closest_points(&g.edge_segment(a / 2), &g.edge_segment(b / 2));
    (p.midpoint(&q), p.distance(&q))
}
