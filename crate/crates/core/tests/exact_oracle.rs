mod common;

use piperoute::cost::EdgeCostTable;
use piperoute::exact::{solve_exact, ExactConfig};
use piperoute::graph::RoutingGraph;
use piperoute::solution::SolveStatus;

#[test]
fn exact_matches_enumeration_on_micro_instances() {
    let mut checked = 0;
    for seed in 0..24 {
        let s = common::micro_scenario(seed);
        let Ok(g) = RoutingGraph::build(&s) else { continue };
        let costs = EdgeCostTable::build(&g, &s).unwrap();
        let oracle = common::brute_force_pair(&g, &s, &costs);
        let cfg = ExactConfig {
            time_limit: Some(60.0),
            ..Default::default()
        };
        let r = solve_exact(&g, &s, &costs, &cfg);
        match oracle.optimum {
            Some(opt) => {
                assert_eq!(r.status, SolveStatus::Optimal, "seed {seed}");
                assert_eq!(r.objective, Some(opt), "seed {seed}");
            }
            None => assert_eq!(r.status, SolveStatus::Infeasible, "seed {seed}"),
        }
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} micro instances built");
}
