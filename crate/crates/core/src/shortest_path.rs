//! Dijkstra over the routing graph with caller-supplied arc costs and
//! admissibility.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{ArcId, NodeId, RoutingGraph};

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    node: u32,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` pops the smallest (dist, node).
    fn cmp(&self, o: &Self) -> Ordering {
        o.dist.total_cmp(&self.dist).then(o.node.cmp(&self.node))
    }
}

const NO_ARC: u32 = u32::MAX;

/// Reusable Dijkstra workspace. Ties are broken by node id so results are
/// deterministic.
#[derive(Clone, Debug)]
pub struct Dijkstra {
    dist: Vec<f64>,
    pred: Vec<u32>,
    stamp: Vec<u32>,
    done: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Entry>,
}

impl Dijkstra {
    pub fn new(num_nodes: usize) -> Self {
        Dijkstra {
            dist: vec![f64::INFINITY; num_nodes],
            pred: vec![NO_ARC; num_nodes],
            stamp: vec![0; num_nodes],
            done: vec![0; num_nodes],
            generation: 0,
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.done.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.heap.clear();
    }

    fn dist_of(&self, v: usize) -> f64 {
        if self.stamp[v] == self.generation {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }

    /// Cheapest path from `source` to `target` using arcs accepted by
    /// `allowed`, as (cost, arcs). Costs must be nonnegative.
    pub fn path(
        &mut self,
        g: &RoutingGraph,
        source: NodeId,
        target: NodeId,
        cost: impl Fn(ArcId) -> f64,
        allowed: impl Fn(ArcId) -> bool,
    ) -> Option<(f64, Vec<ArcId>)> {
        self.search(g, source, Some(target), &cost, &allowed)?;
        let mut arcs = Vec::new();
        let mut v = target;
        while v != source {
            let a = self.pred[v] as usize;
            arcs.push(a);
            v = g.arc_tail(a);
        }
        arcs.reverse();
        Some((self.dist[target], arcs))
    }

    /// Distances from `source` to every node (infinite when unreachable).
    pub fn distances(
        &mut self,
        g: &RoutingGraph,
        source: NodeId,
        cost: impl Fn(ArcId) -> f64,
        allowed: impl Fn(ArcId) -> bool,
    ) -> Vec<f64> {
        self.search(g, source, None, &cost, &allowed);
        (0..self.dist.len()).map(|v| self.dist_of(v)).collect()
    }

    /// Distances from every node to `target` (infinite when it cannot be
    /// reached).
    pub fn distances_to(
        &mut self,
        g: &RoutingGraph,
        target: NodeId,
        cost: impl Fn(ArcId) -> f64,
        allowed: impl Fn(ArcId) -> bool,
    ) -> Vec<f64> {
        self.search_dir(g, target, None, &cost, &allowed, true);
        (0..self.dist.len()).map(|v| self.dist_of(v)).collect()
    }

    fn search(
        &mut self,
        g: &RoutingGraph,
        source: NodeId,
        target: Option<NodeId>,
        cost: &impl Fn(ArcId) -> f64,
        allowed: &impl Fn(ArcId) -> bool,
    ) -> Option<()> {
        self.search_dir(g, source, target, cost, allowed, false)
    }

    /// Dijkstra from `source`, over reversed arcs when `backward`.
    fn search_dir(
        &mut self,
        g: &RoutingGraph,
        source: NodeId,
        target: Option<NodeId>,
        cost: &impl Fn(ArcId) -> f64,
        allowed: &impl Fn(ArcId) -> bool,
        backward: bool,
    ) -> Option<()> {
        self.reset();
        let gen = self.generation;
        self.dist[source] = 0.0;
        self.pred[source] = NO_ARC;
        self.stamp[source] = gen;
        self.heap.push(Entry {
            dist: 0.0,
            node: source as u32,
        });
        while let Some(Entry { dist, node }) = self.heap.pop() {
            let v = node as usize;
            if self.done[v] == gen {
                continue;
            }
            self.done[v] = gen;
            if Some(v) == target {
                return Some(());
            }
            for &b in g.out_arcs(v) {
                // Reversed, `a = b ^ 1` enters `v` from `w`.
                let (a, w) = if backward {
                    (b as usize ^ 1, g.arc_head(b as usize))
                } else {
                    (b as usize, g.arc_head(b as usize))
                };
                if !allowed(a) {
                    continue;
                }
                if self.done[w] == gen {
                    continue;
                }
                let nd = dist + cost(a);
                if nd < self.dist_of(w) {
                    self.dist[w] = nd;
                    self.pred[w] = a as u32;
                    self.stamp[w] = gen;
                    self.heap.push(Entry {
                        dist: nd,
                        node: w as u32,
                    });
                }
            }
        }
        if target.is_none() {
            Some(())
        } else {
            None
        }
    }
}

/// Run length meaning "no elbow yet, or the last one is far enough back".
const RUN_CLEAR: f64 = f64::INFINITY;

#[derive(Clone, Copy, Debug)]
struct RunEntry {
    /// `cost` plus the potential of the node.
    key: f64,
    /// Secondary cost breaking ties in `key`.
    penalty: u32,
    cost: f64,
    /// `3 * node + direction`, see [`ElbowDijkstra`].
    slot: u32,
    run: f64,
    pred: u32,
    arc: u32,
}

impl PartialEq for RunEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for RunEntry {}

impl PartialOrd for RunEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for RunEntry {
    // Smallest key first, then smaller penalty, longer run, slot, arc.
    fn cmp(&self, o: &Self) -> Ordering {
        o.key
            .total_cmp(&self.key)
            .then(o.penalty.cmp(&self.penalty))
            .then(self.run.total_cmp(&o.run))
            .then(o.slot.cmp(&self.slot))
            .then(o.arc.cmp(&self.arc))
    }
}

#[derive(Clone, Copy, Debug)]
struct Label {
    pred: u32,
    arc: u32,
}

/// Shortest paths in which every straight run between two consecutive
/// elbows is longer than a minimum spacing. Labels carry the length of the
/// run since the last elbow and the travel direction along the node's axis
/// (free at the source and after an elbow), so a run cannot double back on
/// itself; a label is dominated by an earlier (cheaper) one in the same
/// node and direction with an equal or longer run.
#[derive(Clone, Debug)]
pub struct ElbowDijkstra {
    best_run: Vec<f64>,
    stamp: Vec<u32>,
    generation: u32,
    labels: Vec<Label>,
    heap: BinaryHeap<RunEntry>,
}

impl ElbowDijkstra {
    pub fn new(num_nodes: usize) -> Self {
        ElbowDijkstra {
            best_run: vec![f64::NEG_INFINITY; 3 * num_nodes],
            stamp: vec![0; 3 * num_nodes],
            generation: 0,
            labels: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn settled_run(&self, slot: usize) -> f64 {
        if self.stamp[slot] == self.generation {
            self.best_run[slot]
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Cheapest `source -> target` path whose consecutive elbows are more
    /// than `elbow_min` apart, as (cost, arcs). `potential`, when given, is a
    /// consistent lower bound on the cost to `target` used to direct the
    /// search (for instance unconstrained distances to `target`).
    #[allow(clippy::too_many_arguments)]
    pub fn path(
        &mut self,
        g: &RoutingGraph,
        source: NodeId,
        target: NodeId,
        elbow_min: f64,
        potential: Option<&[f64]>,
        cost: impl Fn(ArcId) -> f64,
        allowed: impl Fn(ArcId) -> bool,
    ) -> Option<(f64, Vec<ArcId>)> {
        self.path_with_penalty(g, source, target, elbow_min, potential, cost, |_| 0, allowed)
    }

    /// As [`ElbowDijkstra::path`], choosing among equally cheap paths one
    /// with the least total `penalty`.
    #[allow(clippy::too_many_arguments)]
    pub fn path_with_penalty(
        &mut self,
        g: &RoutingGraph,
        source: NodeId,
        target: NodeId,
        elbow_min: f64,
        potential: Option<&[f64]>,
        cost: impl Fn(ArcId) -> f64,
        penalty: impl Fn(ArcId) -> u32,
        allowed: impl Fn(ArcId) -> bool,
    ) -> Option<(f64, Vec<ArcId>)> {
        let h = |v: usize| potential.map_or(0.0, |p| p[v]);
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        let gen = self.generation;
        self.labels.clear();
        self.heap.clear();
        self.heap.push(RunEntry {
            key: h(source),
            penalty: 0,
            cost: 0.0,
            slot: 3 * source as u32,
            run: RUN_CLEAR,
            pred: NO_ARC,
            arc: NO_ARC,
        });
        while let Some(e) = self.heap.pop() {
            let slot = e.slot as usize;
            let (v, dir) = (slot / 3, slot % 3);
            if self.settled_run(slot) >= e.run {
                continue;
            }
            self.best_run[slot] = e.run;
            self.stamp[slot] = gen;
            let id = self.labels.len() as u32;
            self.labels.push(Label {
                pred: e.pred,
                arc: e.arc,
            });
            if v == target {
                let mut arcs = Vec::new();
                let mut l = id;
                while self.labels[l as usize].arc != NO_ARC {
                    let lab = self.labels[l as usize];
                    arcs.push(lab.arc as usize);
                    l = lab.pred;
                }
                arcs.reverse();
                return Some((e.cost, arcs));
            }
            for &a in g.out_arcs(v) {
                let a = a as usize;
                if !allowed(a) {
                    continue;
                }
                let w = g.arc_head(a);
                let (run, next_dir) = if g.is_virtual_arc(a) {
                    if e.run <= elbow_min {
                        continue;
                    }
                    (0.0, 0)
                } else {
                    let axis = g.axis_of(v).index();
                    let forward = g.node_point(w).coord(axis) > g.node_point(v).coord(axis);
                    let d = if forward { 1 } else { 2 };
                    if dir != 0 && dir != d {
                        continue;
                    }
                    let r = e.run + g.edge_length(a / 2);
                    (if r > elbow_min { RUN_CLEAR } else { r }, d)
                };
                let next = 3 * w + next_dir;
                if self.settled_run(next) >= run || !h(w).is_finite() {
                    continue;
                }
                let c = e.cost + cost(a);
                self.heap.push(RunEntry {
                    key: c + h(w),
                    penalty: e.penalty + penalty(a),
                    cost: c,
                    slot: next as u32,
                    run,
                    pred: id,
                    arc: a as u32,
                });
            }
        }
        None
    }
}
