//! Shared fixtures for integration tests: micro scenarios and an exhaustive
//! path-pair enumeration used as an independent optimality oracle.
#![allow(dead_code)]

use piperoute::cost::EdgeCostTable;
use piperoute::geometry::{segment_distance, Cuboid, Point3, Segment3};
use piperoute::graph::{ArcId, RoutingGraph};
use piperoute::scenario::{Axis, CostModelKind, GridSettings, Scenario, Service, SCHEMA_VERSION};
use piperoute::shortest_path::Dijkstra;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn service(id: u32, source: Point3, destination: Point3, radius: f64, safety: f64, elbow_min: f64) -> Service {
    Service {
        id,
        source,
        destination,
        radius,
        safety,
        elbow_min,
        alpha: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        source_axis: None,
        destination_axis: None,
    }
}

pub fn boxed(lo: [f64; 3], hi: [f64; 3]) -> Cuboid {
    Cuboid::new(Point3::new(lo[0], lo[1], lo[2]), Point3::new(hi[0], hi[1], hi[2])).unwrap()
}

pub fn empty_scenario(region: Cuboid, spacing: f64, cost_model: CostModelKind) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        region,
        obstacles: vec![],
        penetrable_zones: vec![],
        preference_zones: vec![],
        services: vec![],
        grid: GridSettings { spacing },
        cost_model,
        terminal_radius: None,
        solver: None,
    }
}

/// A unit-spacing box of at most 5x5x5 nodes with two services running
/// between the `x = 0` and `x = max` faces and at most one obstacle.
pub fn micro_scenario(seed: u64) -> Scenario {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = [rng.random_range(4..=5), rng.random_range(4..=5), rng.random_range(4..=5)];
    let hi = [(n[0] - 1) as f64, (n[1] - 1) as f64, (n[2] - 1) as f64];
    let mut s = empty_scenario(boxed([0.0; 3], hi), 1.0, CostModelKind::Random);
    if rng.random_bool(0.5) {
        let c = [
            rng.random_range(1..n[0] - 1) as f64,
            rng.random_range(1..n[1] - 1) as f64,
            rng.random_range(1..n[2] - 1) as f64,
        ];
        let h = rng.random_range(0.3..0.7);
        s.obstacles.push(boxed([c[0] - h, c[1] - h, c[2] - h], [c[0] + h, c[1] + h, c[2] + h]));
    }
    let radius = rng.random_range(0.15..0.45);
    let safety = 0.1;
    let elbow_min = [0.5, 1.0][rng.random_range(0..2)];
    let gap = 2.0 * radius + safety;
    let mut taken: Vec<Point3> = Vec::new();
    for k in 0..2u32 {
        let mut pick = |x: f64, taken: &[Point3]| loop {
            let p = Point3::new(x, rng.random_range(0..n[1]) as f64, rng.random_range(0..n[2]) as f64);
            if taken.iter().all(|q| q.distance(&p) >= gap) {
                return p;
            }
        };
        let a = pick(0.0, &taken);
        taken.push(a);
        let b = pick(hi[0], &taken);
        taken.push(b);
        let mut svc = service(k, a, b, radius, safety, elbow_min);
        svc.alpha[0] = rng.random_range(1..=9) as f64;
        s.services.push(svc);
    }
    s
}

/// Every elbow-feasible route of one service up to a cost cap, found by
/// depth-first search over virtual nodes.
#[derive(Default)]
pub struct RouteList {
    /// (cost, arcs), ascending by cost.
    pub routes: Vec<(f64, Vec<ArcId>)>,
    /// Whether the cap cut off any branch.
    pub truncated: bool,
}

/// Cost-to-go to `target` by Bellman-Ford over the admissible arcs.
fn cost_to_go(g: &RoutingGraph, costs: &EdgeCostTable, k: usize, target: usize) -> Vec<f64> {
    let allowed = &g.services[k].allowed;
    let mut h = vec![f64::INFINITY; g.num_nodes()];
    h[target] = 0.0;
    loop {
        let mut changed = false;
        for a in 0..g.num_arcs() {
            if !allowed.contains(a) {
                continue;
            }
            let (u, v) = (g.arc_tail(a), g.arc_head(a));
            let c = h[v] + costs.arc_cost(k, a);
            if c < h[u] {
                h[u] = c;
                changed = true;
            }
        }
        if !changed {
            return h;
        }
    }
}

pub fn enumerate_routes(g: &RoutingGraph, scenario: &Scenario, costs: &EdgeCostTable, k: usize, cap: f64) -> RouteList {
    let view = &g.services[k];
    let h = cost_to_go(g, costs, k, view.target);
    let dmin = scenario.services[k].elbow_min;
    let mut out = RouteList {
        routes: Vec::new(),
        truncated: false,
    };
    let mut on_path = vec![false; g.num_nodes()];
    let mut arcs = Vec::new();
    let mut elbows: Vec<Point3> = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        g: &RoutingGraph,
        costs: &EdgeCostTable,
        k: usize,
        v: usize,
        cost: f64,
        cap: f64,
        dmin: f64,
        h: &[f64],
        on_path: &mut [bool],
        arcs: &mut Vec<ArcId>,
        elbows: &mut Vec<Point3>,
        out: &mut RouteList,
    ) {
        if v == g.services[k].target {
            out.routes.push((cost, arcs.clone()));
            return;
        }
        for &a in g.out_arcs(v) {
            let a = a as usize;
            if !g.services[k].allowed.contains(a) {
                continue;
            }
            let w = g.arc_head(a);
            if on_path[w] {
                continue;
            }
            let c = cost + costs.arc_cost(k, a);
            if c + h[w] > cap {
                if h[w].is_finite() {
                    out.truncated = true;
                }
                continue;
            }
            let elbow = g.is_virtual_arc(a);
            if elbow {
                let p = g.node_point(v);
                if elbows.iter().any(|q| q.distance(&p) <= dmin) {
                    continue;
                }
                elbows.push(p);
            }
            on_path[w] = true;
            arcs.push(a);
            dfs(g, costs, k, w, c, cap, dmin, h, on_path, arcs, elbows, out);
            arcs.pop();
            on_path[w] = false;
            if elbow {
                elbows.pop();
            }
        }
    }
    on_path[view.source] = true;
    dfs(
        g,
        costs,
        k,
        view.source,
        0.0,
        cap,
        dmin,
        &h,
        &mut on_path,
        &mut arcs,
        &mut elbows,
        &mut out,
    );
    out.routes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

pub fn straight_segments(g: &RoutingGraph, arcs: &[ArcId]) -> Vec<Segment3> {
    arcs.iter().filter(|&&a| !g.is_virtual_arc(a)).map(|&a| g.arc_segment(a)).collect()
}

/// Whether two routes keep the pairwise clearance everywhere.
pub fn compatible(a: &[Segment3], b: &[Segment3], clearance: f64) -> bool {
    a.iter().all(|x| b.iter().all(|y| segment_distance(x, y) >= clearance))
}

/// Cost of the cheapest elbow-feasible route of service `k` alone.
pub fn cheapest_route(g: &RoutingGraph, scenario: &Scenario, costs: &EdgeCostTable, k: usize) -> Option<f64> {
    let h = cost_to_go(g, costs, k, g.services[k].target);
    let mut cap = h[g.services[k].source];
    if !cap.is_finite() {
        return None;
    }
    loop {
        let l = enumerate_routes(g, scenario, costs, k, cap);
        if let Some(r) = l.routes.first() {
            return Some(r.0);
        }
        if !l.truncated {
            return None;
        }
        cap *= 1.1;
    }
}

pub struct PairOracle {
    pub optimum: Option<f64>,
    pub lists: [RouteList; 2],
}

/// Optimal two-service routing by enumeration: grows a total-cost budget
/// until the cheapest compatible pair fits inside it or the lists are
/// exhaustive.
pub fn brute_force_pair(g: &RoutingGraph, scenario: &Scenario, costs: &EdgeCostTable) -> PairOracle {
    assert_eq!(scenario.services.len(), 2);
    let (s0, s1) = (&scenario.services[0], &scenario.services[1]);
    let clearance = s0.radius + s1.radius + s0.safety.max(s1.safety);
    let mut base = [0.0; 2];
    for (k, b) in base.iter_mut().enumerate() {
        match cheapest_route(g, scenario, costs, k) {
            Some(c) => *b = c,
            None => {
                return PairOracle {
                    optimum: None,
                    lists: [RouteList::default(), RouteList::default()],
                }
            }
        }
    }
    let mut budget = base[0] + base[1];
    loop {
        let l0 = enumerate_routes(g, scenario, costs, 0, budget - base[1]);
        let l1 = enumerate_routes(g, scenario, costs, 1, budget - base[0]);
        let segs1: Vec<Vec<Segment3>> = l1.routes.iter().map(|r| straight_segments(g, &r.1)).collect();
        let mut best = f64::INFINITY;
        for (c0, r0) in &l0.routes {
            if c0 + base[1] >= best {
                break;
            }
            let s = straight_segments(g, r0);
            for (j, (c1, _)) in l1.routes.iter().enumerate() {
                if c0 + c1 >= best {
                    break;
                }
                if compatible(&s, &segs1[j], clearance) {
                    best = c0 + c1;
                }
            }
        }
        let exhaustive = !l0.truncated && !l1.truncated;
        if best <= budget || exhaustive {
            return PairOracle {
                optimum: best.is_finite().then_some(best),
                lists: [l0, l1],
            };
        }
        budget *= 1.1;
    }
}

pub fn load_data(name: &str) -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    piperoute::instances::load_scenario(&path).unwrap()
}

/// Reroutes service `k` through a node on service `l`'s route (the
/// `pick`-th corner candidate), so the two routes touch.
pub fn corridor_mutation(
    g: &RoutingGraph,
    costs: &EdgeCostTable,
    paths: &[Vec<ArcId>],
    k: usize,
    l: usize,
    pick: usize,
) -> Option<Vec<Vec<ArcId>>> {
    let inner: Vec<ArcId> = paths[l].iter().copied().skip(1).filter(|&a| !g.is_virtual_arc(a)).collect();
    if inner.is_empty() {
        return None;
    }
    let used: std::collections::HashSet<usize> = paths[l].iter().map(|&a| g.arc_tail(a)).collect();
    let allowed = &g.services[k].allowed;
    let mut dj = Dijkstra::new(g.num_nodes());
    for t in 0..inner.len() {
        let p = g.physical_of(g.arc_tail(inner[(pick + t) % inner.len()]));
        for w in 3 * p..3 * p + 3 {
            if used.contains(&w) {
                continue;
            }
            let cost = |a: ArcId| costs.arc_cost(k, a);
            let ok = |a: ArcId| allowed.contains(a);
            let Some((_, mut first)) = dj.path(g, g.services[k].source, w, cost, ok) else {
                continue;
            };
            let Some((_, second)) = dj.path(g, w, g.services[k].target, cost, ok) else {
                continue;
            };
            first.extend(second);
            let mut out = paths.to_vec();
            out[k] = first;
            return Some(out);
        }
    }
    None
}

/// Replaces one straight arc of service `k` by a three-step jog with four
/// elbows one lattice step apart.
pub fn elbow_mutation(g: &RoutingGraph, paths: &[Vec<ArcId>], k: usize, pick: usize) -> Option<Vec<Vec<ArcId>>> {
    let path = &paths[k];
    let on_path: std::collections::HashSet<usize> = path.iter().flat_map(|&a| [g.arc_tail(a), g.arc_head(a)]).collect();
    let allowed = &g.services[k].allowed;
    let h = g.spacing();
    for t in 0..path.len() {
        let i = (pick + t) % path.len();
        let a = path[i];
        if g.is_virtual_arc(a) {
            continue;
        }
        let (u, v) = (g.arc_tail(a), g.arc_head(a));
        let ax = g.axis_of(u);
        let (pu, pv) = (g.node_point(u), g.node_point(v));
        for ay in Axis::ALL.into_iter().filter(|&x| x != ax) {
            for sign in [1.0, -1.0] {
                let shift = |p: Point3| p.with_coord(ay.index(), p.coord(ay.index()) + sign * h);
                let node = |p: Point3, axis: Axis| g.node_at(&p, axis);
                let (Some(u_y), Some(u2_y), Some(u2_x), Some(v2_x), Some(v2_y), Some(v_y)) = (
                    node(pu, ay),
                    node(shift(pu), ay),
                    node(shift(pu), ax),
                    node(shift(pv), ax),
                    node(shift(pv), ay),
                    node(pv, ay),
                ) else {
                    continue;
                };
                if [u_y, u2_y, u2_x, v2_x, v2_y, v_y].iter().any(|n| on_path.contains(n)) {
                    continue;
                }
                let hops = [(u, u_y), (u_y, u2_y), (u2_y, u2_x), (u2_x, v2_x), (v2_x, v2_y), (v2_y, v_y), (v_y, v)];
                let arcs: Option<Vec<ArcId>> = hops
                    .iter()
                    .map(|&(x, y)| g.arc_between(x, y).filter(|&b| allowed.contains(b)))
                    .collect();
                let Some(arcs) = arcs else {
                    continue;
                };
                let mut out = paths.to_vec();
                out[k].splice(i..=i, arcs);
                return Some(out);
            }
        }
    }
    None
}

/// Drops one arc of service `k`, breaking its walk.
pub fn break_mutation(paths: &[Vec<ArcId>], k: usize, pick: usize) -> Vec<Vec<ArcId>> {
    let mut out = paths.to_vec();
    let n = out[k].len();
    out[k].remove(pick % n);
    out
}

/// Minimum of a function convex on `[0, 1]` by grid sampling: a dense
/// first grid, then finer grids around the best sample. For a convex
/// function the minimiser lies within one cell of the best sample.
fn sampled_minimum(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    let mut n = 100;
    for _ in 0..30 {
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(t);
            if v < best {
                best = v;
                arg = t;
            }
        }
        let w = 2.0 * (hi - lo) / n as f64;
        lo = (arg - w).max(0.0);
        hi = (arg + w).min(1.0);
        n = 10;
    }
    best
}

/// Segment distance by nested sampling: the distance from `s1(u)` to `s2`
/// is convex in `u`, and so is the distance along `s2` for fixed `u`.
pub fn sampled_segment_distance(s1: &Segment3, s2: &Segment3) -> f64 {
    sampled_minimum(|u| {
        let p = s1.at(u);
        sampled_minimum(|v| p.distance(&s2.at(v)))
    })
}

/// Segment to box distance by sampling the segment parameter against the
/// coordinate-wise excess over the box bounds.
pub fn sampled_cuboid_distance(c: &Cuboid, s: &Segment3) -> f64 {
    sampled_minimum(|t| {
        let p = s.at(t);
        let excess = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
        let (dx, dy, dz) = (excess(p.x, c.lo.x, c.hi.x), excess(p.y, c.lo.y, c.hi.y), excess(p.z, c.lo.z, c.hi.z));
        (dx * dx + dy * dy + dz * dz).sqrt()
    })
}

pub fn random_point(rng: &mut impl Rng, scale: f64) -> Point3 {
    Point3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

/// Random segment; every fourth one is axis-parallel like a grid edge.
pub fn random_segment(rng: &mut impl Rng, scale: f64) -> Segment3 {
    let a = random_point(rng, scale);
    if rng.random_range(0..4) == 0 {
        let axis = rng.random_range(0..3);
        let b = a.with_coord(axis, a.coord(axis) + rng.random_range(-scale..scale));
        return Segment3::new(a, b);
    }
    Segment3::new(a, random_point(rng, scale))
}

pub fn random_cuboid(rng: &mut impl Rng, scale: f64) -> Cuboid {
    let a = random_point(rng, scale);
    let b = random_point(rng, scale);
    Cuboid::new(a.min(&b), a.max(&b)).unwrap()
}

/// Largest deviation of the library distances from the sampling oracles
/// over `n` random segment pairs and `n` random segment-box pairs.
pub fn geometry_oracle_deviation(n: usize, seed: u64) -> (f64, f64) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut seg: f64 = 0.0;
    let mut cub: f64 = 0.0;
    for _ in 0..n {
        let (s1, s2) = (random_segment(&mut rng, 5.0), random_segment(&mut rng, 5.0));
        seg = seg.max((segment_distance(&s1, &s2) - sampled_segment_distance(&s1, &s2)).abs());
        let (c, s) = (random_cuboid(&mut rng, 5.0), random_segment(&mut rng, 5.0));
        let lib = piperoute::geometry::cuboid_segment_distance(&c, &s);
        cub = cub.max((lib - sampled_cuboid_distance(&c, &s)).abs());
    }
    (seg, cub)
}
