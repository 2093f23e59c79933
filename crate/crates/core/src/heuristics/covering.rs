//! Covering lists: the vertices within a radius of a path, reached through
//! graph adjacency, and the service pairs whose coverings overlap.

use std::collections::{HashSet, VecDeque};

use crate::graph::{ArcId, NodeId, RoutingGraph};

/// Virtual nodes visited by an arc path, in order.
pub fn path_nodes(g: &RoutingGraph, arcs: &[ArcId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = arcs.iter().map(|&a| g.arc_tail(a)).collect();
    if let Some(&a) = arcs.last() {
        out.push(g.arc_head(a));
    }
    out
}

/// The path vertices plus every vertex reachable from some path vertex `v0`
/// through vertices closer than `delta` to `v0`. Sorted ascending.
pub fn covering_list(g: &RoutingGraph, path: &[NodeId], delta: f64) -> Vec<NodeId> {
    let mut cover: HashSet<NodeId> = path.iter().copied().collect();
    let mut seen: HashSet<NodeId> = HashSet::new();
    let mut queue = VecDeque::new();
    for &v0 in path {
        let anchor = g.node_point(v0);
        seen.clear();
        seen.insert(v0);
        queue.push_back(v0);
        while let Some(v) = queue.pop_front() {
            for &a in g.out_arcs(v) {
                let w = g.arc_head(a as usize);
                if seen.contains(&w) || g.node_point(w).distance(&anchor) >= delta {
                    continue;
                }
                seen.insert(w);
                cover.insert(w);
                queue.push_back(w);
            }
        }
    }
    let mut out: Vec<NodeId> = cover.into_iter().collect();
    out.sort_unstable();
    out
}

/// Common elements of two sorted lists.
pub fn intersection(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Unordered pairs `(k, k')`, `k < k'`, whose sorted coverings intersect.
pub fn conflict_pairs(coverings: &[Vec<NodeId>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 0..coverings.len() {
        for l in k + 1..coverings.len() {
            if !intersection(&coverings[k], &coverings[l]).is_empty() {
                out.push((k, l));
            }
        }
    }
    out
}
