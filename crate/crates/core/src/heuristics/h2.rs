//! Decomposition heuristic: services are routed one at a time by elbow-aware
//! shortest paths and pushed apart by raising the costs of contested edges,
//! alternating parallel, cluster and sequential iterations.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use log::{debug, info, trace};
use rayon::prelude::*;

use super::covering::{covering_list, intersection, path_nodes};
use super::elbow_spp::spp_elbow_test;
use super::{H2Settings, Schedule};
use crate::cost::EdgeCostTable;
use crate::error::{Error, Result};
use crate::exact::cuts::{dist_violations, shared_nodes, Participants};
use crate::exact::{branch_and_bound, ExactConfig, Problem};
use crate::graph::{ArcId, EdgeId, NodeId, RoutingGraph};
use crate::scenario::{pair_clearance, Scenario};
use crate::shortest_path::Dijkstra;
use crate::solution::{Solution, SolveStatus};

/// Seconds allowed for the exact single-service fallback.
const FALLBACK_TIME_LIMIT: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IterationKind {
    Parallel,
    Cluster,
    Sequential,
}

/// Kind of 1-based iteration `t`: the first share of `maxit` iterations is
/// parallel, then cluster, then sequential.
pub fn iteration_kind(t: usize, maxit: usize, schedule: &Schedule) -> IterationKind {
    let n_par = (schedule.par * maxit as f64).round() as usize;
    let n_cluster = (schedule.cluster * maxit as f64).round() as usize;
    if t <= n_par {
        IterationKind::Parallel
    } else if t <= n_par + n_cluster {
        IterationKind::Cluster
    } else {
        IterationKind::Sequential
    }
}

fn check_settings(s: &H2Settings) -> Result<()> {
    let sc = &s.schedule;
    let total = sc.par + sc.cluster + sc.seq;
    if [sc.par, sc.cluster, sc.seq].iter().any(|f| !(0.0..=1.0).contains(f)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "iteration schedule {}:{}:{} must be nonnegative fractions summing to 1",
            sc.par, sc.cluster, sc.seq
        )));
    }
    if s.maxit == 0 {
        return Err(Error::Config("maxit must be positive".into()));
    }
    if s.gamma <= 1.0 || s.gamma_seq <= 1.0 {
        return Err(Error::Config("conflict inflation factors must exceed 1".into()));
    }
    Ok(())
}

/// Conflicting service pairs of a candidate routing with the vertices their
/// coverings share.
#[derive(Debug, Default)]
pub struct Conflicts {
    pub pairs: BTreeMap<(usize, usize), Vec<NodeId>>,
}

impl Conflicts {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn partners(&self, k: usize) -> Vec<usize> {
        self.pairs
            .keys()
            .filter_map(|&(a, b)| {
                if a == k {
                    Some(b)
                } else if b == k {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    fn shared(&self, k: usize, l: usize) -> &[NodeId] {
        self.pairs.get(&(k.min(l), k.max(l))).map_or(&[], |v| v.as_slice())
    }
}

struct State<'a> {
    g: &'a RoutingGraph,
    scenario: &'a Scenario,
    settings: &'a H2Settings,
    work: EdgeCostTable,
    /// Highest base edge cost over all services.
    max_base: f64,
}

impl State<'_> {
    fn route(&self, k: usize) -> Result<Vec<ArcId>> {
        let g = self.g;
        let svc = &self.scenario.services[k];
        let mut dijkstra = Dijkstra::new(g.num_nodes());
        let res = spp_elbow_test(
            g,
            k,
            svc.elbow_min,
            self.work.service_costs(k),
            &g.services[k].allowed,
            self.settings.elbow_test_max_iter,
            self.settings.elbow_inflation,
            &mut dijkstra,
        );
        match res {
            Ok(p) => Ok(p),
            Err(e) => {
                debug!("service {}: elbow test gave up after {} rounds", svc.id, e.iterations);
                let problem = Problem {
                    graph: g,
                    scenario: self.scenario,
                    costs: &self.work,
                    services: vec![k],
                    allowed: vec![g.services[k].allowed.clone()],
                };
                let cfg = ExactConfig {
                    time_limit: Some(FALLBACK_TIME_LIMIT),
                    ..Default::default()
                };
                let r = branch_and_bound(&problem, &cfg);
                match r.status {
                    s if s.has_solution() => Ok(r.paths.into_iter().next().unwrap_or_default()),
                    SolveStatus::Infeasible => Err(Error::InfeasibleScenario(format!(
                        "service {} has no elbow-feasible route",
                        svc.id
                    ))),
                    _ => Err(Error::Heuristic(format!("no route found for service {}", svc.id))),
                }
            }
        }
    }

    fn route_many(&self, ks: &[usize]) -> Result<Vec<Vec<ArcId>>> {
        ks.par_iter().map(|&k| self.route(k)).collect()
    }

    fn coverings(&self, paths: &[Vec<ArcId>]) -> Vec<Vec<NodeId>> {
        paths
            .par_iter()
            .enumerate()
            .map(|(k, p)| covering_list(self.g, &path_nodes(self.g, p), self.scenario.services[k].clearance()))
            .collect()
    }

    /// Pairs whose coverings overlap, whose routes come closer than the pair
    /// clearance, or which leave a common vertex.
    fn conflicts(&self, paths: &[Vec<ArcId>]) -> Conflicts {
        let covs = self.coverings(paths);
        let mut out = Conflicts::default();
        for k in 0..paths.len() {
            for l in k + 1..paths.len() {
                let shared = intersection(&covs[k], &covs[l]);
                if !shared.is_empty() {
                    out.pairs.insert((k, l), shared);
                }
            }
        }
        let all: Vec<usize> = (0..paths.len()).collect();
        let who = Participants {
            scenario: self.scenario,
            services: &all,
        };
        let refs: Vec<&[ArcId]> = paths.iter().map(|p| p.as_slice()).collect();
        let geometric = shared_nodes(self.g, &refs)
            .into_iter()
            .chain(dist_violations(self.g, who, &refs))
            .filter_map(|v| match v {
                crate::exact::Violation::SharedNode { first, second, .. } => Some((first, second)),
                crate::exact::Violation::Dist { service, other, .. } => Some((service, other)),
                _ => None,
            });
        for (a, b) in geometric {
            out.pairs.entry((a.min(b), a.max(b))).or_default();
        }
        out
    }

    /// Edges service `k` cannot use next to route `other_path` of service
    /// `other` without a conflict, plus the edges touching their shared
    /// covering vertices.
    fn conflict_edges(&self, k: usize, other: usize, other_path: &[ArcId], shared: &[NodeId]) -> BTreeSet<EdgeId> {
        let g = self.g;
        let s = &self.scenario.services;
        // coverings of routes closer than the summed clearances can overlap
        let r = pair_clearance(&s[k], &s[other]).max(s[k].clearance() + s[other].clearance());
        let mut out = BTreeSet::new();
        for &a in other_path {
            if !g.is_virtual_arc(a) {
                out.extend(g.edges_near(&g.arc_segment(a), r, true));
            }
        }
        for &v in shared {
            out.extend(g.out_arcs(v).iter().map(|&a| a as usize / 2));
        }
        out
    }

    fn raise(&mut self, k: usize, edges: &BTreeSet<EdgeId>) {
        let level = self.settings.gamma * self.max_base;
        let row = self.work.service_costs_mut(k);
        for &e in edges {
            row[e] = row[e].max(level);
        }
    }

    fn scale(&mut self, k: usize, edges: &BTreeSet<EdgeId>) {
        let f = self.settings.gamma_seq;
        let row = self.work.service_costs_mut(k);
        for &e in edges {
            row[e] *= f;
        }
    }
}

fn path_length(g: &RoutingGraph, p: &[ArcId]) -> f64 {
    p.iter().map(|&a| g.edge_length(a / 2)).sum()
}

/// Services ordered by ascending current route length, ties by index.
fn by_priority(g: &RoutingGraph, paths: &[Vec<ArcId>], ks: &[usize]) -> Vec<usize> {
    let mut out = ks.to_vec();
    out.sort_by(|&a, &b| {
        path_length(g, &paths[a])
            .total_cmp(&path_length(g, &paths[b]))
            .then(a.cmp(&b))
    });
    out
}

/// Connected components of the conflict graph, each sorted ascending.
fn clusters(n: usize, conflicts: &Conflicts) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in conflicts.pairs.keys() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..n {
        let r = find(&mut parent, k);
        groups.entry(r).or_default().push(k);
    }
    groups.into_values().filter(|c| c.len() > 1).collect()
}

/// Runs the decomposition on one graph; `None` when no conflict-free
/// routing appeared within `maxit` iterations.
fn decompose(
    g: &RoutingGraph,
    scenario: &Scenario,
    costs: &EdgeCostTable,
    settings: &H2Settings,
) -> Result<Option<(Vec<Vec<ArcId>>, usize)>> {
    let n = scenario.services.len();
    let mut st = State {
        g,
        scenario,
        settings,
        work: costs.clone(),
        max_base: costs.max_cost(),
    };
    let all: Vec<usize> = (0..n).collect();
    let mut paths: Vec<Vec<ArcId>> = Vec::new();
    for t in 1..=settings.maxit {
        let kind = iteration_kind(t, settings.maxit, &settings.schedule);
        match kind {
            IterationKind::Parallel => {
                paths = st.route_many(&all)?;
                let c = st.conflicts(&paths);
                debug!("h2 iteration {t} ({kind:?}): {} conflicting pairs", c.pairs.len());
                if c.is_empty() {
                    return Ok(Some((paths, t)));
                }
                for (&(a, b), shared) in &c.pairs {
                    let ea = st.conflict_edges(a, b, &paths[b], shared);
                    let eb = st.conflict_edges(b, a, &paths[a], shared);
                    st.raise(a, &ea);
                    st.raise(b, &eb);
                }
            }
            IterationKind::Cluster => {
                paths = st.route_many(&all)?;
                let c = st.conflicts(&paths);
                debug!("h2 iteration {t} ({kind:?}): {} conflicting pairs", c.pairs.len());
                if c.is_empty() {
                    return Ok(Some((paths, t)));
                }
                let mut movers = Vec::new();
                for cluster in clusters(n, &c) {
                    movers.extend(by_priority(g, &paths, &cluster).into_iter().skip(1));
                }
                movers.sort_unstable();
                for &k in &movers {
                    for l in c.partners(k) {
                        let e = st.conflict_edges(k, l, &paths[l], c.shared(k, l));
                        st.raise(k, &e);
                    }
                }
                for (k, p) in movers.iter().zip(st.route_many(&movers)?) {
                    paths[*k] = p;
                }
                let c = st.conflicts(&paths);
                if c.is_empty() {
                    return Ok(Some((paths, t)));
                }
            }
            IterationKind::Sequential => {
                let order = if paths.is_empty() {
                    all.clone()
                } else {
                    by_priority(g, &paths, &all)
                };
                let mut fixed: Vec<Option<Vec<ArcId>>> = vec![None; n];
                for (i, &k) in order.iter().enumerate() {
                    let p = st.route(k)?;
                    let nodes = path_nodes(g, &p);
                    let cover = covering_list(g, &nodes, scenario.services[k].clearance());
                    for &l in &order[i + 1..] {
                        let e = st.conflict_edges(l, k, &p, &cover);
                        st.scale(l, &e);
                    }
                    fixed[k] = Some(p);
                }
                paths = fixed.into_iter().map(|p| p.unwrap_or_default()).collect();
                let c = st.conflicts(&paths);
                debug!("h2 iteration {t} ({kind:?}): {} conflicting pairs", c.pairs.len());
                trace!("conflicting pairs: {:?}", c.pairs.keys().collect::<Vec<_>>());
                if c.is_empty() {
                    return Ok(Some((paths, t)));
                }
            }
        }
    }
    Ok(None)
}

/// Spacing of a grid with `density` points along the longest region axis.
pub fn density_spacing(scenario: &Scenario, density: usize) -> f64 {
    let r = &scenario.region;
    let longest = (0..3).map(|a| r.extent(a)).fold(0.0, f64::max);
    longest / (density.max(2) - 1) as f64
}

/// The decomposition heuristic. Returns the first routing without
/// conflicts, retrying once on the fallback grid when configured.
pub fn run_h2(g: &RoutingGraph, scenario: &Scenario, costs: &EdgeCostTable, settings: &H2Settings) -> Result<Solution> {
    check_settings(settings)?;
    let start = Instant::now();
    let failure = match decompose(g, scenario, costs, settings) {
        Ok(Some((paths, it))) => {
            info!("h2: conflict-free after {it} iterations");
            let mut sol = Solution::from_paths(g, scenario, costs, &paths, SolveStatus::Feasible, "h2");
            sol.meta.iterations = it as u64;
            sol.meta.wall_time = start.elapsed().as_secs_f64();
            return Ok(sol);
        }
        Ok(None) => Error::Heuristic(format!("no conflict-free routing within {} iterations", settings.maxit)),
        Err(e @ (Error::InfeasibleScenario(_) | Error::Heuristic(_))) => e,
        Err(e) => return Err(e),
    };
    let Some(density) = settings.fallback_density else {
        return Err(failure);
    };
    let spacing = density_spacing(scenario, density);
    info!("h2: retrying on the density-{density} grid (spacing {spacing})");
    let coarse = RoutingGraph::build_with_spacing(scenario, spacing)?;
    let coarse_costs = EdgeCostTable::build(&coarse, scenario)?;
    match decompose(&coarse, scenario, &coarse_costs, settings)? {
        Some((paths, it)) => {
            let mut sol = Solution::from_paths(&coarse, scenario, &coarse_costs, &paths, SolveStatus::Feasible, "h2");
            sol.meta.iterations = (settings.maxit + it) as u64;
            sol.meta.wall_time = start.elapsed().as_secs_f64();
            Ok(sol)
        }
        None => Err(Error::Heuristic(format!(
            "no conflict-free routing within {} iterations on either grid",
            settings.maxit
        ))),
    }
}
