//! Best-first branch-and-bound. A node's relaxation drops node capacity,
//! clearance and all but the consecutive-elbow constraints, so its bound is
//! the sum of independent per-service shortest paths under the node's arc
//! exclusions. Candidates
//! violating a dropped constraint are split into two children that each
//! exclude the candidate while keeping every feasible routing in one of them.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use log::{debug, info};

use super::cuts::{closest_midpoint, dist_cut, elbow_cut, select_violation, Cut, CutKind, Participants, Violation};
use super::{ExactConfig, Problem, SolveResult};
use crate::geometry::Segment3;
use crate::graph::ArcId;
use crate::scenario::pair_clearance;
use crate::shortest_path::{Dijkstra, ElbowDijkstra};
use crate::solution::SolveStatus;

/// Relative tolerance for pruning against the incumbent.
const PRUNE_TOL: f64 = 1e-9;

/// Arcs excluded for one service, linked to the decisions above it.
struct Decision {
    parent: Option<Arc<Decision>>,
    service: usize,
    arcs: Vec<ArcId>,
}

struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    paths: Vec<Arc<Vec<ArcId>>>,
    costs: Vec<f64>,
    decisions: Option<Arc<Decision>>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Node {
    // `BinaryHeap` pops the maximum: lowest bound, then deepest, then oldest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&o.depth))
            .then(o.seq.cmp(&self.seq))
    }
}

struct Workspace {
    dijkstra: Dijkstra,
    elbow: ElbowDijkstra,
    forbidden: FixedBitSet,
    /// Edges too close to another service's current route.
    contested: FixedBitSet,
}

struct Engine<'p, 'a> {
    problem: &'p Problem<'a>,
    /// Route with consecutive elbows already spaced apart.
    elbow_aware: bool,
    /// Unconstrained cost to the target per service position, directing
    /// the elbow-aware searches.
    potentials: Vec<Vec<f64>>,
    pool: Mutex<Vec<Workspace>>,
}

impl Engine<'_, '_> {
    fn workspace(&self) -> Workspace {
        self.pool.lock().unwrap().pop().unwrap_or_else(|| Workspace {
            dijkstra: Dijkstra::new(self.problem.graph.num_nodes()),
            elbow: ElbowDijkstra::new(self.problem.graph.num_nodes()),
            forbidden: FixedBitSet::with_capacity(self.problem.graph.num_arcs()),
            contested: FixedBitSet::with_capacity(self.problem.graph.num_edges()),
        })
    }

    fn release(&self, ws: Workspace) {
        self.pool.lock().unwrap().push(ws);
    }

    /// Shortest path of service position `i` avoiding the arcs excluded by
    /// `decisions`. Among equally cheap paths, prefers those keeping clear of
    /// the other services' `current` routes.
    fn route(
        &self,
        i: usize,
        decisions: &Option<Arc<Decision>>,
        current: &[Arc<Vec<ArcId>>],
    ) -> Option<(f64, Vec<ArcId>)> {
        let p = self.problem;
        let g = p.graph;
        let mut ws = self.workspace();
        ws.forbidden.clear();
        ws.contested.clear();
        for (j, path) in current.iter().enumerate() {
            if j == i {
                continue;
            }
            let s = &p.scenario.services;
            let r = pair_clearance(&s[p.services[i]], &s[p.services[j]]);
            for &a in path.iter().filter(|&&a| !g.is_virtual_arc(a)) {
                for e in g.edges_near(&g.arc_segment(a), r, true) {
                    ws.contested.insert(e);
                }
            }
        }
        let mut d = decisions.as_ref();
        while let Some(dec) = d {
            if dec.service == i {
                for &a in &dec.arcs {
                    ws.forbidden.insert(a);
                }
            }
            d = dec.parent.as_ref();
        }
        let k = p.services[i];
        let view = &p.graph.services[k];
        let allowed = &p.allowed[i];
        let forbidden = &ws.forbidden;
        let contested = &ws.contested;
        let cost = |a| p.costs.arc_cost(k, a);
        let ok = |a| allowed.contains(a) && !forbidden.contains(a);
        let res = if self.elbow_aware {
            let dmin = p.scenario.services[k].elbow_min;
            let pot = Some(self.potentials[i].as_slice());
            let pen = |a: ArcId| contested.contains(a / 2) as u32;
            ws.elbow
                .path_with_penalty(g, view.source, view.target, dmin, pot, cost, pen, ok)
        } else {
            ws.dijkstra.path(p.graph, view.source, view.target, cost, ok)
        };
        self.release(ws);
        res
    }

    fn child(&self, parent: &Node, service: usize, arcs: Vec<ArcId>) -> Option<Node> {
        let decisions = Some(Arc::new(Decision {
            parent: parent.decisions.clone(),
            service,
            arcs,
        }));
        let (cost, path) = self.route(service, &decisions, &parent.paths)?;
        let mut paths = parent.paths.clone();
        let mut costs = parent.costs.clone();
        paths[service] = Arc::new(path);
        costs[service] = cost;
        Some(Node {
            bound: costs.iter().sum(),
            depth: parent.depth + 1,
            seq: 0,
            paths,
            costs,
            decisions,
        })
    }

    /// The two exclusion sets `(service, arcs)` resolving a violation.
    fn split(&self, node: &Node, v: &Violation) -> [(usize, Vec<ArcId>); 2] {
        let g = self.problem.graph;
        match *v {
            Violation::Revisit { service, arc, other_arc } => [(service, vec![arc]), (service, vec![other_arc])],
            Violation::SharedNode { node: vtx, first, second } => {
                let out: Vec<ArcId> = g.out_arcs(vtx).iter().map(|&a| a as usize).collect();
                [(first, out.clone()), (second, out)]
            }
            Violation::Dist {
                service,
                arc,
                other,
                other_arc,
                threshold,
                ..
            } => {
                // Two arcs both within `r` of `m` are closer than
                // `(delta + threshold) / 2 < threshold`, so no feasible
                // routing has arcs of both services in that ball.
                let (m, delta) = closest_midpoint(g, arc, other_arc);
                let r = (delta + threshold) / 4.0;
                let near: Vec<ArcId> = g
                    .edges_near(&Segment3::point(m), r, false)
                    .into_iter()
                    .flat_map(|e| [2 * e, 2 * e + 1])
                    .collect();
                debug_assert!(node.paths[service].iter().any(|a| near.contains(a)));
                [(service, near.clone()), (other, near)]
            }
            Violation::Elbow {
                service,
                arc,
                other_arc,
                ..
            } => {
                if g.elbow_node(arc / 2) == g.elbow_node(other_arc / 2) {
                    [(service, vec![arc]), (service, vec![other_arc])]
                } else {
                    [
                        (service, g.coincident_elbow_arcs(arc).to_vec()),
                        (service, g.coincident_elbow_arcs(other_arc).to_vec()),
                    ]
                }
            }
        }
    }

    fn make_cut(&self, v: &Violation) -> Option<Cut> {
        let p = self.problem;
        let allowed = |k: usize, a: ArcId| {
            p.services
                .iter()
                .position(|&s| s == k)
                .is_some_and(|i| p.allowed[i].contains(a))
        };
        match *v {
            Violation::Dist { service, arc, .. } => Some(dist_cut(
                p.graph,
                p.scenario,
                &p.services,
                arc,
                p.services[service],
                allowed,
            )),
            Violation::Elbow {
                service,
                arc,
                other_arc,
                ..
            } => Some(elbow_cut(p.graph, arc, other_arc, p.services[service])),
            Violation::SharedNode { .. } | Violation::Revisit { .. } => None,
        }
    }
}

fn cut_key(problem: &Problem, v: &Violation) -> Option<(CutKind, usize, ArcId, Option<ArcId>)> {
    match *v {
        Violation::Dist { service, arc, .. } => Some((CutKind::Dist, problem.services[service], arc, None)),
        Violation::Elbow {
            service,
            arc,
            other_arc,
            ..
        } => Some((
            CutKind::Elbow,
            problem.services[service],
            arc.min(other_arc),
            Some(arc.max(other_arc)),
        )),
        Violation::SharedNode { .. } | Violation::Revisit { .. } => None,
    }
}

/// Solves `problem` to optimality or until a limit is reached.
pub fn branch_and_bound(problem: &Problem, config: &ExactConfig) -> SolveResult {
    if config.threads > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(config.threads).build() {
            Ok(pool) => return pool.install(|| run(problem, config)),
            Err(e) => log::warn!("could not start {} threads ({e}); running single-threaded", config.threads),
        }
    }
    run(problem, config)
}

fn run(problem: &Problem, config: &ExactConfig) -> SolveResult {
    let start = Instant::now();
    let deadline = config.time_limit.map(|t| start + Duration::from_secs_f64(t.max(0.0)));
    let potentials = if config.separate_elbow {
        potentials(problem)
    } else {
        Vec::new()
    };
    let engine = Engine {
        problem,
        elbow_aware: config.separate_elbow,
        potentials,
        pool: Mutex::new(Vec::new()),
    };
    let mut result = SolveResult {
        status: SolveStatus::Infeasible,
        paths: Vec::new(),
        objective: None,
        lower_bound: 0.0,
        gap: None,
        nodes: 0,
        cuts_dist: 0,
        cuts_elbow: 0,
        wall_time: 0.0,
        cuts: Vec::new(),
    };

    let mut root = Node {
        bound: 0.0,
        depth: 0,
        seq: 0,
        paths: Vec::new(),
        costs: Vec::new(),
        decisions: None,
    };
    for i in 0..problem.services.len() {
        match engine.route(i, &None, &[]) {
            Some((c, p)) => {
                root.costs.push(c);
                root.paths.push(Arc::new(p));
            }
            None => {
                result.wall_time = start.elapsed().as_secs_f64();
                return result;
            }
        }
    }
    root.bound = root.costs.iter().sum();

    let mut incumbent: Option<Incumbent> = None;
    let mut lower = root.bound;
    if config.warm_start && problem.services.len() > 1 && (config.separate_dist || config.separate_elbow) {
        let (inc, floor) = warm_start(problem, config, deadline);
        if let Some(f) = floor {
            lower = lower.max(f);
        }
        if let Some(inc) = inc {
            info!("warm start incumbent {:.6}", inc.0);
            incumbent = Some(inc);
        }
    }

    let who = Participants {
        scenario: problem.scenario,
        services: &problem.services,
    };
    let mut seen_cuts = BTreeSet::new();
    let mut heap = BinaryHeap::new();
    heap.push(root);
    let mut seq = 1u64;
    let mut hit_limit = false;
    let tol = |inc: f64| PRUNE_TOL * inc.abs().max(1.0);

    loop {
        if let Some((inc, _)) = &incumbent {
            if lower >= inc - tol(*inc) {
                lower = *inc;
                break;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d)
            || config.node_limit.is_some_and(|n| result.nodes >= n)
        {
            hit_limit = true;
            break;
        }
        let Some(node) = heap.pop() else {
            if let Some((inc, _)) = &incumbent {
                lower = *inc;
            }
            break;
        };
        lower = lower.max(node.bound);
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - tol(*inc) {
                lower = *inc;
                break;
            }
        }
        result.nodes += 1;
        if result.nodes.is_multiple_of(1000) {
            debug!(
                "nodes {} open {} bound {:.6} incumbent {:?} cuts {}",
                result.nodes,
                heap.len(),
                lower,
                incumbent.as_ref().map(|x| x.0),
                seen_cuts.len()
            );
        }
        let refs: Vec<&[ArcId]> = node.paths.iter().map(|p| p.as_slice()).collect();
        let violation = select_violation(
            problem.graph,
            who,
            &refs,
            config.separate_dist,
            config.separate_elbow,
        );
        let Some(v) = violation else {
            // Best-first: nothing open can beat a feasible popped node.
            let paths = node.paths.iter().map(|p| p.as_ref().clone()).collect();
            incumbent = Some((node.bound, paths));
            lower = node.bound;
            break;
        };
        if let Some(key) = cut_key(problem, &v) {
            if seen_cuts.insert(key) {
                match key.0 {
                    CutKind::Dist => result.cuts_dist += 1,
                    CutKind::Elbow => result.cuts_elbow += 1,
                }
                if config.record_cuts {
                    result.cuts.extend(engine.make_cut(&v));
                }
            }
        }
        let [(sa, aa), (sb, ab)] = engine.split(&node, &v);
        let (ca, cb) = if config.threads > 1 {
            rayon::join(|| engine.child(&node, sa, aa), || engine.child(&node, sb, ab))
        } else {
            (engine.child(&node, sa, aa), engine.child(&node, sb, ab))
        };
        for mut c in [ca, cb].into_iter().flatten() {
            if let Some((inc, _)) = &incumbent {
                if c.bound >= inc - tol(*inc) {
                    continue;
                }
            }
            c.seq = seq;
            seq += 1;
            heap.push(c);
        }
    }

    result.wall_time = start.elapsed().as_secs_f64();
    match incumbent {
        Some((obj, paths)) => {
            let lb = lower.min(obj);
            result.status = if hit_limit { SolveStatus::Feasible } else { SolveStatus::Optimal };
            result.lower_bound = if hit_limit { lb } else { obj };
            result.objective = Some(obj);
            result.paths = paths;
            let gap = if obj.abs() > 0.0 { (obj - result.lower_bound) / obj.abs() } else { 0.0 };
            result.gap = Some(gap.max(0.0));
        }
        None => {
            result.status = if hit_limit { SolveStatus::TimeLimit } else { SolveStatus::Infeasible };
            result.lower_bound = lower;
        }
    }
    info!(
        "exact: status {:?} objective {:?} bound {:.6} nodes {} cuts {}/{} in {:.2}s",
        result.status,
        result.objective,
        result.lower_bound,
        result.nodes,
        result.cuts_dist,
        result.cuts_elbow,
        result.wall_time
    );
    result
}

type Incumbent = (f64, Vec<Vec<ArcId>>);

fn potentials(problem: &Problem) -> Vec<Vec<f64>> {
    let g = problem.graph;
    let mut d = Dijkstra::new(g.num_nodes());
    problem
        .services
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let allowed = &problem.allowed[i];
            d.distances_to(
                g,
                g.services[k].target,
                |a| problem.costs.arc_cost(k, a),
                |a| allowed.contains(a),
            )
        })
        .collect()
}

/// Independently optimal elbow-feasible routes. Returns them as an incumbent
/// if they are jointly feasible, and their total cost as a valid lower bound
/// when every single-service solve was proven optimal.
fn warm_start(problem: &Problem, config: &ExactConfig, deadline: Option<Instant>) -> (Option<Incumbent>, Option<f64>) {
    let mut paths = Vec::new();
    let mut total = 0.0;
    let mut all_optimal = true;
    for i in 0..problem.services.len() {
        let sub = Problem {
            graph: problem.graph,
            scenario: problem.scenario,
            costs: problem.costs,
            services: vec![problem.services[i]],
            allowed: vec![problem.allowed[i].clone()],
        };
        let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()).as_secs_f64());
        let cfg = ExactConfig {
            time_limit: remaining,
            warm_start: false,
            threads: 1,
            record_cuts: false,
            node_limit: config.node_limit,
            ..config.clone()
        };
        let r = run(&sub, &cfg);
        if !r.status.has_solution() {
            return (None, None);
        }
        all_optimal &= r.status == SolveStatus::Optimal;
        total += r.objective.unwrap_or(0.0);
        paths.push(r.paths.into_iter().next().unwrap_or_default());
    }
    let refs: Vec<&[ArcId]> = paths.iter().map(|p| p.as_slice()).collect();
    let who = Participants {
        scenario: problem.scenario,
        services: &problem.services,
    };
    let feasible = select_violation(problem.graph, who, &refs, config.separate_dist, config.separate_elbow).is_none();
    let floor = all_optimal.then_some(total);
    (feasible.then_some((total, paths)), floor)
}
