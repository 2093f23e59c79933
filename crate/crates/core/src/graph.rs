//! Grid discretization of the region, obstacle pruning, and the exploded
//! routing graph with zero-length elbow edges.
//!
//! Layout of the exploded graph:
//! * node `3p + axis` is the virtual node of physical node `p` for `axis`;
//! * edges `0..m` are the physical edges, joining the axis-matching virtual
//!   nodes of their endpoints;
//! * edge `m + 3p + j` is the `j`-th elbow edge of physical node `p`
//!   (`j = 0: X-Y`, `1: X-Z`, `2: Y-Z`);
//! * arc `2e` runs along edge `e` from its first to its second endpoint and
//!   arc `2e + 1` the other way, so the reverse of arc `a` is `a ^ 1`.

use std::collections::{HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::geometry::{cuboid_segment_distance, segment_distance, Cuboid, Point3, Segment3};
use crate::scenario::{Axis, Scenario};

/// Tolerance, in lattice steps, for deciding that a coordinate lies on the lattice.
const LATTICE_TOL: f64 = 1e-9;

/// Upper bound on the number of spatial-index cells.
const MAX_INDEX_CELLS: f64 = 4.0e6;

pub type NodeId = usize;
pub type EdgeId = usize;
pub type ArcId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct CoordKey([i64; 3]);

impl CoordKey {
    fn of(p: &Point3) -> Self {
        let r = |c: f64| (c * 1e6).round() as i64;
        CoordKey([r(p.x), r(p.y), r(p.z)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalEdge {
    pub u: usize,
    pub v: usize,
    pub axis: Axis,
    /// Distance to the nearest obstacle that constrains this edge
    /// (infinite when none does).
    pub clearance: f64,
}

/// The pruned orthogonal grid before node explosion.
#[derive(Clone, Debug)]
pub struct PhysicalGraph {
    pub nodes: Vec<Point3>,
    pub edges: Vec<PhysicalEdge>,
    pub spacing: f64,
    pub origin: Point3,
    /// Lattice points per axis.
    pub dims: [usize; 3],
    pub region: Cuboid,
    index: HashMap<CoordKey, usize>,
}

impl PhysicalGraph {
    pub fn node_at(&self, p: &Point3) -> Option<usize> {
        self.index.get(&CoordKey::of(p)).copied()
    }

    pub fn edge_segment(&self, e: usize) -> Segment3 {
        let edge = &self.edges[e];
        Segment3::new(self.nodes[edge.u], self.nodes[edge.v])
    }
}

fn lattice_dims(region: &Cuboid, spacing: f64) -> [usize; 3] {
    let n = |i: usize| (region.extent(i) / spacing + LATTICE_TOL).floor() as usize + 1;
    [n(0), n(1), n(2)]
}

fn lattice_coord(origin: f64, spacing: f64, i: usize) -> f64 {
    origin + i as f64 * spacing
}

/// Lattice step index of `c` along one axis if it lies on the lattice.
fn lattice_index(c: f64, origin: f64, spacing: f64, count: usize) -> Option<usize> {
    let t = (c - origin) / spacing;
    let r = t.round();
    ((t - r).abs() < LATTICE_TOL && r >= 0.0 && (r as usize) < count).then_some(r as usize)
}

struct GridBuilder<'a> {
    scenario: &'a Scenario,
    spacing: f64,
    dims: [usize; 3],
    points: Vec<Point3>,
    seen: HashMap<CoordKey, usize>,
    connectors: Vec<(Point3, Point3, Axis)>,
}

impl GridBuilder<'_> {
    fn add_point(&mut self, p: Point3) -> bool {
        let key = CoordKey::of(&p);
        if self.seen.contains_key(&key) {
            return false;
        }
        self.seen.insert(key, self.points.len());
        self.points.push(p);
        true
    }

    /// Links an off-lattice point to the lattice through axis-parallel
    /// connectors, one off-lattice axis at a time.
    fn project(&mut self, p: Point3) {
        let lo = self.scenario.region.lo;
        for axis in 0..3 {
            let t = (p.coord(axis) - lo.coord(axis)) / self.spacing;
            if (t - t.round()).abs() < LATTICE_TOL {
                continue;
            }
            let floor = t.floor();
            for idx in [floor, floor + 1.0] {
                if idx < 0.0 || idx as usize >= self.dims[axis] {
                    continue;
                }
                let q = p.with_coord(axis, lattice_coord(lo.coord(axis), self.spacing, idx as usize));
                if self.scenario.is_blocked(&q) {
                    continue;
                }
                self.connectors.push((p, q, Axis::from_index(axis)));
                if self.add_point(q) {
                    self.project(q);
                }
            }
            return;
        }
    }
}

/// Clearance of `seg` to the obstacles, or `None` if it must be removed
/// because it cuts through an obstacle outside every penetrable zone.
/// Obstacles farther than `horizon` are not measured.
fn edge_clearance(scenario: &Scenario, seg: &Segment3, horizon: f64) -> Option<f64> {
    let bbox = seg.bounding_box();
    let mut clearance = f64::INFINITY;
    for obstacle in &scenario.obstacles {
        if !obstacle.expanded(horizon).intersects(&bbox) {
            continue;
        }
        let clip = obstacle.clip(seg);
        let exempt = scenario.penetrable_zones.iter().any(|z| {
            z.clip_parameters(seg).is_some()
                && clip.is_none_or(|c| z.contains_segment(&c))
        });
        if exempt {
            continue;
        }
        if obstacle.intersects_interior(seg) {
            return None;
        }
        clearance = clearance.min(cuboid_segment_distance(obstacle, seg));
    }
    Some(clearance)
}

/// Builds the pruned physical lattice of the scenario region at `spacing`,
/// inserting off-lattice service terminals.
pub fn build_grid(scenario: &Scenario, spacing: f64) -> Result<PhysicalGraph> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Scenario(format!("grid spacing must be positive, got {spacing}")));
    }
    let region = scenario.region;
    let origin = region.lo;
    let dims = lattice_dims(&region, spacing);
    let mut b = GridBuilder {
        scenario,
        spacing,
        dims,
        points: Vec::with_capacity(dims[0] * dims[1] * dims[2]),
        seen: HashMap::new(),
        connectors: Vec::new(),
    };
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for l in 0..dims[2] {
                let p = Point3::new(
                    lattice_coord(origin.x, spacing, i),
                    lattice_coord(origin.y, spacing, j),
                    lattice_coord(origin.z, spacing, l),
                );
                if !scenario.is_blocked(&p) {
                    b.add_point(p);
                }
            }
        }
    }
    for s in &scenario.services {
        for t in [s.source, s.destination] {
            if scenario.is_blocked(&t) {
                return Err(Error::Scenario(format!(
                    "terminal {:?} of service {} lies inside an obstacle",
                    [t.x, t.y, t.z],
                    s.id
                )));
            }
            if b.add_point(t) {
                b.project(t);
            }
        }
    }

    let GridBuilder { points, connectors, .. } = b;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &c| {
        let (p, q) = (points[a], points[c]);
        (p.x, p.y, p.z).partial_cmp(&(q.x, q.y, q.z)).unwrap()
    });
    let nodes: Vec<Point3> = order.iter().map(|&i| points[i]).collect();
    let index: HashMap<CoordKey, usize> =
        nodes.iter().enumerate().map(|(i, p)| (CoordKey::of(p), i)).collect();

    let mut candidates: Vec<(usize, usize, Axis)> = Vec::new();
    for (u, p) in nodes.iter().enumerate() {
        let on_lattice: Vec<Option<usize>> = (0..3)
            .map(|a| lattice_index(p.coord(a), origin.coord(a), spacing, dims[a]))
            .collect();
        if on_lattice.iter().any(Option::is_none) {
            continue;
        }
        for axis in 0..3 {
            let i = on_lattice[axis].unwrap();
            if i + 1 >= dims[axis] {
                continue;
            }
            let q = p.with_coord(axis, lattice_coord(origin.coord(axis), spacing, i + 1));
            if let Some(&v) = index.get(&CoordKey::of(&q)) {
                candidates.push((u, v, Axis::from_index(axis)));
            }
        }
    }
    for (p, q, axis) in connectors {
        let (Some(&u), Some(&v)) = (index.get(&CoordKey::of(&p)), index.get(&CoordKey::of(&q)))
        else {
            continue;
        };
        candidates.push((u.min(v), u.max(v), axis));
    }
    candidates.sort_by_key(|&(u, v, a)| (u, v, a));
    candidates.dedup();

    let threshold = scenario
        .services
        .iter()
        .map(|s| s.clearance())
        .fold(f64::INFINITY, f64::min);
    let threshold = if threshold.is_finite() { threshold } else { 0.0 };
    let horizon = scenario
        .services
        .iter()
        .map(|s| s.clearance())
        .fold(0.0, f64::max);

    let mut edges = Vec::with_capacity(candidates.len());
    for (u, v, axis) in candidates {
        let seg = Segment3::new(nodes[u], nodes[v]);
        match edge_clearance(scenario, &seg, horizon) {
            Some(c) if c >= threshold => edges.push(PhysicalEdge { u, v, axis, clearance: c }),
            _ => {}
        }
    }

    Ok(PhysicalGraph {
        nodes,
        edges,
        spacing,
        origin,
        dims,
        region,
        index,
    })
}

/// Uniform-grid bucket index over physical edges and nodes.
#[derive(Clone, Debug)]
struct SpatialIndex {
    origin: Point3,
    cell: f64,
    dims: [usize; 3],
    offsets: Vec<u32>,
    /// Entries `< m` are physical edges; `m + p` stands for node `p`.
    entries: Vec<u32>,
}

impl SpatialIndex {
    fn build(pg: &PhysicalGraph) -> Self {
        let region = pg.region;
        let mut cell = pg.spacing;
        let count = |c: f64| {
            let mut d = [0usize; 3];
            for (i, slot) in d.iter_mut().enumerate() {
                *slot = (region.extent(i) / c).floor() as usize + 1;
            }
            d
        };
        let mut dims = count(cell);
        while (dims[0] * dims[1] * dims[2]) as f64 > MAX_INDEX_CELLS {
            cell *= 2.0;
            dims = count(cell);
        }
        let mut index = SpatialIndex {
            origin: region.lo,
            cell,
            dims,
            offsets: Vec::new(),
            entries: Vec::new(),
        };
        let m = pg.edges.len();
        let items: Vec<Cuboid> = (0..m)
            .map(|e| pg.edge_segment(e).bounding_box())
            .chain(pg.nodes.iter().map(|p| Cuboid { lo: *p, hi: *p }))
            .collect();
        let ncell = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0u32; ncell + 1];
        for b in &items {
            index.for_cells(b, |c| counts[c] += 1);
        }
        let mut offsets = vec![0u32; ncell + 1];
        for c in 0..ncell {
            offsets[c + 1] = offsets[c] + counts[c];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![0u32; offsets[ncell] as usize];
        for (i, b) in items.iter().enumerate() {
            index.for_cells(b, |c| {
                entries[fill[c] as usize] = i as u32;
                fill[c] += 1;
            });
        }
        index.offsets = offsets;
        index.entries = entries;
        index
    }

    fn cell_range(&self, lo: f64, hi: f64, axis: usize) -> (usize, usize) {
        let o = self.origin.coord(axis);
        let max = self.dims[axis] as isize - 1;
        let a = (((lo - o) / self.cell).floor() as isize).clamp(0, max) as usize;
        let b = (((hi - o) / self.cell).floor() as isize).clamp(0, max) as usize;
        (a, b)
    }

    fn for_cells(&self, b: &Cuboid, mut f: impl FnMut(usize)) {
        let (x0, x1) = self.cell_range(b.lo.x, b.hi.x, 0);
        let (y0, y1) = self.cell_range(b.lo.y, b.hi.y, 1);
        let (z0, z1) = self.cell_range(b.lo.z, b.hi.z, 2);
        for x in x0..=x1 {
            for y in y0..=y1 {
                for z in z0..=z1 {
                    f((x * self.dims[1] + y) * self.dims[2] + z);
                }
            }
        }
    }

    fn candidates(&self, b: &Cuboid, out: &mut Vec<u32>) {
        out.clear();
        self.for_cells(b, |c| {
            let (s, e) = (self.offsets[c] as usize, self.offsets[c + 1] as usize);
            out.extend_from_slice(&self.entries[s..e]);
        });
        out.sort_unstable();
        out.dedup();
    }
}

/// Per-service view of the graph: terminals and admissible arcs.
#[derive(Clone, Debug)]
pub struct ServiceTerminals {
    pub source: NodeId,
    pub target: NodeId,
    /// Arcs the service may use (obstacle clearance respected).
    pub allowed: FixedBitSet,
}

/// The exploded graph `G = (V, A)` with elbow arcs.
#[derive(Clone, Debug)]
pub struct RoutingGraph {
    pub physical: PhysicalGraph,
    out_offsets: Vec<u32>,
    out_arcs: Vec<u32>,
    index: SpatialIndex,
    pub services: Vec<ServiceTerminals>,
}

/// Explodes every physical node into three virtual nodes linked by elbow edges.
pub fn explode(pg: PhysicalGraph) -> RoutingGraph {
    let n = 3 * pg.nodes.len();
    let m = pg.edges.len();
    let num_edges = m + n;
    let endpoints = |e: usize| -> (usize, usize) {
        if e < m {
            let edge = &pg.edges[e];
            let a = edge.axis.index();
            (3 * edge.u + a, 3 * edge.v + a)
        } else {
            let p = (e - m) / 3;
            match (e - m) % 3 {
                0 => (3 * p, 3 * p + 1),
                1 => (3 * p, 3 * p + 2),
                _ => (3 * p + 1, 3 * p + 2),
            }
        }
    };
    let mut degree = vec![0u32; n + 1];
    for e in 0..num_edges {
        let (u, v) = endpoints(e);
        degree[u] += 1;
        degree[v] += 1;
    }
    let mut offsets = vec![0u32; n + 1];
    for v in 0..n {
        offsets[v + 1] = offsets[v] + degree[v];
    }
    let mut fill = offsets.clone();
    let mut arcs = vec![0u32; offsets[n] as usize];
    for e in 0..num_edges {
        let (u, v) = endpoints(e);
        arcs[fill[u] as usize] = (2 * e) as u32;
        fill[u] += 1;
        arcs[fill[v] as usize] = (2 * e + 1) as u32;
        fill[v] += 1;
    }
    let index = SpatialIndex::build(&pg);
    RoutingGraph {
        physical: pg,
        out_offsets: offsets,
        out_arcs: arcs,
        index,
        services: Vec::new(),
    }
}

impl RoutingGraph {
    /// Builds the routing graph of a scenario at its configured spacing and
    /// attaches its services.
    pub fn build(scenario: &Scenario) -> Result<Self> {
        Self::build_with_spacing(scenario, scenario.grid.spacing)
    }

    pub fn build_with_spacing(scenario: &Scenario, spacing: f64) -> Result<Self> {
        let pg = build_grid(scenario, spacing)?;
        let mut g = explode(pg);
        g.attach_services(scenario)?;
        Ok(g)
    }

    /// Resolves terminals and per-service clearance masks, and checks that
    /// every service can reach its destination.
    pub fn attach_services(&mut self, scenario: &Scenario) -> Result<()> {
        let m = self.num_physical_edges();
        let mut views = Vec::with_capacity(scenario.services.len());
        for (k, s) in scenario.services.iter().enumerate() {
            let lookup = |p: &Point3| {
                self.physical.node_at(p).ok_or_else(|| {
                    Error::Scenario(format!(
                        "terminal {:?} of service {} is not a grid node",
                        [p.x, p.y, p.z],
                        s.id
                    ))
                })
            };
            let ps = lookup(&s.source)?;
            let pt = lookup(&s.destination)?;
            let source = 3 * ps + scenario.source_axis(k).index();
            let target = 3 * pt + scenario.destination_axis(k).index();
            let mut allowed = FixedBitSet::with_capacity(self.num_arcs());
            allowed.insert_range(2 * m..self.num_arcs());
            let need = s.clearance();
            for (e, edge) in self.physical.edges.iter().enumerate() {
                if edge.clearance >= need {
                    allowed.insert(2 * e);
                    allowed.insert(2 * e + 1);
                }
            }
            let view = ServiceTerminals { source, target, allowed };
            if !self.reachable(&view) {
                return Err(Error::InfeasibleScenario(format!(
                    "service {} cannot reach its destination on the pruned grid",
                    s.id
                )));
            }
            views.push(view);
        }
        self.services = views;
        Ok(())
    }

    fn reachable(&self, view: &ServiceTerminals) -> bool {
        let mut seen = vec![false; self.num_nodes()];
        let mut queue = VecDeque::from([view.source]);
        seen[view.source] = true;
        while let Some(v) = queue.pop_front() {
            if v == view.target {
                return true;
            }
            for &a in self.out_arcs(v) {
                let a = a as usize;
                if !view.allowed.contains(a) {
                    continue;
                }
                let w = self.arc_head(a);
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    pub fn num_nodes(&self) -> usize {
        3 * self.physical.nodes.len()
    }

    pub fn num_physical_nodes(&self) -> usize {
        self.physical.nodes.len()
    }

    pub fn num_physical_edges(&self) -> usize {
        self.physical.edges.len()
    }

    pub fn num_edges(&self) -> usize {
        self.physical.edges.len() + self.num_nodes()
    }

    pub fn num_arcs(&self) -> usize {
        2 * self.num_edges()
    }

    pub fn spacing(&self) -> f64 {
        self.physical.spacing
    }

    pub fn physical_of(&self, v: NodeId) -> usize {
        v / 3
    }

    pub fn axis_of(&self, v: NodeId) -> Axis {
        Axis::from_index(v % 3)
    }

    pub fn node_point(&self, v: NodeId) -> Point3 {
        self.physical.nodes[v / 3]
    }

    pub fn is_virtual_edge(&self, e: EdgeId) -> bool {
        e >= self.physical.edges.len()
    }

    pub fn is_virtual_arc(&self, a: ArcId) -> bool {
        self.is_virtual_edge(a / 2)
    }

    /// Axis tag of a physical edge; `None` for elbow edges.
    pub fn edge_axis(&self, e: EdgeId) -> Option<Axis> {
        self.physical.edges.get(e).map(|edge| edge.axis)
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (NodeId, NodeId) {
        let m = self.physical.edges.len();
        if e < m {
            let edge = &self.physical.edges[e];
            let a = edge.axis.index();
            (3 * edge.u + a, 3 * edge.v + a)
        } else {
            let p = (e - m) / 3;
            match (e - m) % 3 {
                0 => (3 * p, 3 * p + 1),
                1 => (3 * p, 3 * p + 2),
                _ => (3 * p + 1, 3 * p + 2),
            }
        }
    }

    /// Physical node carrying an elbow edge.
    pub fn elbow_node(&self, e: EdgeId) -> usize {
        (e - self.physical.edges.len()) / 3
    }

    /// The three elbow edges of physical node `p`.
    pub fn elbow_edges(&self, p: usize) -> [EdgeId; 3] {
        let b = self.physical.edges.len() + 3 * p;
        [b, b + 1, b + 2]
    }

    /// Elbow edge joining the virtual nodes of `p` for two distinct axes.
    pub fn elbow_edge_between(&self, p: usize, a: Axis, b: Axis) -> EdgeId {
        let j = match (a.min(b), a.max(b)) {
            (Axis::X, Axis::Y) => 0,
            (Axis::X, Axis::Z) => 1,
            (Axis::Y, Axis::Z) => 2,
            _ => panic!("elbow edge needs two distinct axes"),
        };
        self.physical.edges.len() + 3 * p + j
    }

    pub fn arc_tail(&self, a: ArcId) -> NodeId {
        let (u, v) = self.edge_endpoints(a / 2);
        if a.is_multiple_of(2) {
            u
        } else {
            v
        }
    }

    pub fn arc_head(&self, a: ArcId) -> NodeId {
        let (u, v) = self.edge_endpoints(a / 2);
        if a.is_multiple_of(2) {
            v
        } else {
            u
        }
    }

    pub fn out_arcs(&self, v: NodeId) -> &[u32] {
        &self.out_arcs[self.out_offsets[v] as usize..self.out_offsets[v + 1] as usize]
    }

    /// Arcs entering `v` are the reverses of its out-arcs.
    pub fn in_arcs(&self, v: NodeId) -> impl Iterator<Item = ArcId> + '_ {
        self.out_arcs(v).iter().map(|&a| a as usize ^ 1)
    }

    pub fn edge_segment(&self, e: EdgeId) -> Segment3 {
        if e < self.physical.edges.len() {
            self.physical.edge_segment(e)
        } else {
            Segment3::point(self.physical.nodes[self.elbow_node(e)])
        }
    }

    pub fn arc_segment(&self, a: ArcId) -> Segment3 {
        Segment3::new(self.node_point(self.arc_tail(a)), self.node_point(self.arc_head(a)))
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        self.edge_segment(e).length()
    }

    /// Elbow arcs located at the same physical node as elbow arc `a`.
    pub fn coincident_elbow_arcs(&self, a: ArcId) -> [ArcId; 6] {
        let p = self.elbow_node(a / 2);
        let [e0, e1, e2] = self.elbow_edges(p);
        [2 * e0, 2 * e0 + 1, 2 * e1, 2 * e1 + 1, 2 * e2, 2 * e2 + 1]
    }

    /// Edges (physical and elbow) whose geometry lies within `r` of `seg`:
    /// distance `< r` when `strict`, `<= r` otherwise. Sorted ascending.
    pub fn edges_near(&self, seg: &Segment3, r: f64, strict: bool) -> Vec<EdgeId> {
        let mut cand = Vec::new();
        self.index.candidates(&seg.bounding_box().expanded(r), &mut cand);
        let m = self.physical.edges.len();
        let ok = |d: f64| if strict { d < r } else { d <= r };
        let mut out = Vec::new();
        for c in cand {
            let c = c as usize;
            if c < m {
                if ok(segment_distance(seg, &self.physical.edge_segment(c))) {
                    out.push(c);
                }
            } else {
                let p = c - m;
                let q = Segment3::point(self.physical.nodes[p]);
                if ok(segment_distance(seg, &q)) {
                    out.extend(self.elbow_edges(p));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Physical edges meeting the closed box `b`.
    pub fn physical_edges_in_box(&self, b: &Cuboid) -> Vec<EdgeId> {
        let mut cand = Vec::new();
        self.index.candidates(b, &mut cand);
        let m = self.physical.edges.len();
        cand.into_iter()
            .map(|c| c as usize)
            .filter(|&c| c < m && b.clip_parameters(&self.physical.edge_segment(c)).is_some())
            .collect()
    }

    /// Physical nodes inside the closed box `b`.
    pub fn physical_nodes_in_box(&self, b: &Cuboid) -> Vec<usize> {
        let mut cand = Vec::new();
        self.index.candidates(b, &mut cand);
        let m = self.physical.edges.len();
        cand.into_iter()
            .map(|c| c as usize)
            .filter(|&c| c >= m && b.contains(&self.physical.nodes[c - m]))
            .map(|c| c - m)
            .collect()
    }

    /// Euclidean distance between the geometries of two arcs.
    pub fn arc_distance(&self, a: ArcId, b: ArcId) -> f64 {
        if a / 2 == b / 2 {
            return 0.0;
        }
        segment_distance(&self.edge_segment(a / 2), &self.edge_segment(b / 2))
    }

    pub fn node_at(&self, p: &Point3, axis: Axis) -> Option<NodeId> {
        self.physical.node_at(p).map(|q| 3 * q + axis.index())
    }

    /// Arc from `u` to `v`, if they are adjacent.
    pub fn arc_between(&self, u: NodeId, v: NodeId) -> Option<ArcId> {
        self.out_arcs(u)
            .iter()
            .map(|&a| a as usize)
            .find(|&a| self.arc_head(a) == v)
    }
}
