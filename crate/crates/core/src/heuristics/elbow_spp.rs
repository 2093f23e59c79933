//! Single-service routing that repairs elbow-spacing failures of plain
//! shortest paths by truncation, elbow-cost inflation and, on cycling, a
//! reversed search.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;

use crate::graph::{ArcId, NodeId, RoutingGraph};
use crate::shortest_path::Dijkstra;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElbowTestFailed {
    pub iterations: usize,
}

/// Elbows of a path as (position in `arcs`, arc).
fn elbows(g: &RoutingGraph, arcs: &[ArcId]) -> Vec<(usize, ArcId)> {
    arcs.iter()
        .enumerate()
        .filter(|&(_, &a)| g.is_virtual_arc(a))
        .map(|(i, &a)| (i, a))
        .collect()
}

/// First elbow at most `dmin` from an earlier one, as (earlier position,
/// failing position) in `arcs`.
pub fn first_elbow_failure(g: &RoutingGraph, arcs: &[ArcId], dmin: f64) -> Option<(usize, usize)> {
    let el = elbows(g, arcs);
    for i in 0..el.len() {
        let p = g.node_point(g.arc_tail(el[i].1));
        for &(j, b) in &el[..i] {
            if g.node_point(g.arc_tail(b)).distance(&p) <= dmin {
                return Some((j, el[i].0));
            }
        }
    }
    None
}

/// Route of service `k` whose elbows are pairwise more than `dmin` apart.
///
/// Each round runs Dijkstra from the end of the kept prefix. When the route
/// fails the elbow test, it is truncated before the earlier elbow of the
/// failing pair and the failing elbow's cost is multiplied by `inflation`.
/// A repeated (truncation node, failing elbow) pair restarts the search
/// from the other terminal with the inflated costs kept.
#[allow(clippy::too_many_arguments)]
pub fn spp_elbow_test(
    g: &RoutingGraph,
    k: usize,
    dmin: f64,
    costs: &[f64],
    allowed: &FixedBitSet,
    max_iter: usize,
    inflation: f64,
    dijkstra: &mut Dijkstra,
) -> Result<Vec<ArcId>, ElbowTestFailed> {
    let view = &g.services[k];
    let mut overlay: HashMap<usize, f64> = HashMap::new();
    let (mut from, mut to) = (view.source, view.target);
    let mut reversed = false;
    let mut prefix: Vec<ArcId> = Vec::new();
    let mut seen: HashSet<(NodeId, ArcId)> = HashSet::new();
    for iter in 1..=max_iter {
        let visited: HashSet<NodeId> = prefix.iter().map(|&a| g.arc_tail(a)).collect();
        let start = prefix.last().map_or(from, |&a| g.arc_head(a));
        let cost = |a: ArcId| overlay.get(&(a / 2)).copied().unwrap_or(costs[a / 2]);
        let suffix = dijkstra.path(g, start, to, cost, |a| {
            allowed.contains(a) && !visited.contains(&g.arc_head(a))
        });
        let Some((_, suffix)) = suffix else {
            if prefix.is_empty() {
                return Err(ElbowTestFailed { iterations: iter });
            }
            prefix.clear();
            continue;
        };
        let mut path = std::mem::take(&mut prefix);
        path.extend(suffix);
        let Some((j, i)) = first_elbow_failure(g, &path, dmin) else {
            if reversed {
                path.reverse();
                path.iter_mut().for_each(|a| *a ^= 1);
            }
            return Ok(path);
        };
        let e = path[i] / 2;
        let c = overlay.get(&e).copied().unwrap_or(costs[e]);
        let unit = path.iter().map(|&a| costs[a / 2]).fold(g.spacing(), f64::max);
        overlay.insert(e, if c > 0.0 { c * inflation } else { unit });
        if !seen.insert((g.arc_tail(path[j]), path[i])) {
            std::mem::swap(&mut from, &mut to);
            reversed = !reversed;
            seen.clear();
            continue;
        }
        path.truncate(j);
        prefix = path;
    }
    Err(ElbowTestFailed { iterations: max_iter })
}
