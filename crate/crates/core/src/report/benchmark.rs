//! Benchmark runs over generated instances and the averaged per-group report.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::validate::validate_standalone;
use crate::cost::EdgeCostTable;
use crate::error::{Error, Result};
use crate::exact::{solve_exact, ExactConfig, Problem};
use crate::graph::RoutingGraph;
use crate::heuristics::{run_h1, run_h2, H1Settings, H2Settings};
use crate::instances::{generate_random, RandomInstanceSpec};
use crate::scenario::Scenario;
use crate::solution::{Solution, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    H1,
    H2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Exact, Method::H1, Method::H2];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::H1 => "h1",
            Method::H2 => "h2",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkLimits {
    pub exact: ExactConfig,
    pub h1: H1Settings,
    pub h2: H2Settings,
}

/// What one method produced on one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Relative optimality gap (exact only).
    pub gap: Option<f64>,
    /// Whether the solution passed validation.
    pub valid: Option<bool>,
    /// Seconds.
    pub time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceResult {
    pub spec: RandomInstanceSpec,
    pub variables: Option<usize>,
    pub constraints: Option<usize>,
    pub outcomes: BTreeMap<Method, MethodOutcome>,
}

impl InstanceResult {
    pub fn outcome(&self, m: Method) -> Option<&MethodOutcome> {
        self.outcomes.get(&m)
    }

    /// Percent deviation of a heuristic from the exact incumbent.
    pub fn deviation(&self, m: Method) -> Option<f64> {
        let best = self.outcome(Method::Exact)?.objective?;
        let h = self.outcome(m)?.objective?;
        Some(100.0 * (h - best) / best.abs().max(f64::MIN_POSITIVE))
    }
}

fn outcome_of(sol: Result<Solution>, scenario: &Scenario, time: f64) -> MethodOutcome {
    match sol {
        Ok(sol) => {
            let has = sol.status.has_solution();
            let valid = has.then(|| validate_standalone(scenario, &sol).map(|r| r.passed()).unwrap_or(false));
            MethodOutcome {
                status: sol.status,
                objective: has.then_some(sol.objective),
                gap: sol.meta.gap,
                valid,
                time,
                error: None,
            }
        }
        Err(e) => failure(&e, time),
    }
}

fn failure(e: &Error, time: f64) -> MethodOutcome {
    MethodOutcome {
        status: match e {
            Error::InfeasibleScenario(_) => SolveStatus::Infeasible,
            _ => SolveStatus::TimeLimit,
        },
        objective: None,
        gap: None,
        valid: None,
        time,
        error: Some(e.to_string()),
    }
}

/// Runs `methods` on one scenario.
pub fn run_scenario(
    spec: &RandomInstanceSpec,
    scenario: &Scenario,
    methods: &[Method],
    limits: &BenchmarkLimits,
) -> InstanceResult {
    let mut result = InstanceResult {
        spec: spec.clone(),
        variables: None,
        constraints: None,
        outcomes: BTreeMap::new(),
    };
    let start = Instant::now();
    let built = RoutingGraph::build(scenario).and_then(|g| {
        let costs = EdgeCostTable::build(&g, scenario)?;
        Ok((g, costs))
    });
    let (g, costs) = match built {
        Ok(x) => x,
        Err(e) => {
            warn!("{}: {e}", spec.name());
            let time = start.elapsed().as_secs_f64();
            for &m in methods {
                result.outcomes.insert(m, failure(&e, time));
            }
            return result;
        }
    };
    let full = Problem::full(&g, scenario, &costs);
    result.variables = Some(full.num_variables());
    result.constraints = Some(full.num_constraints());
    for &m in methods {
        let t = Instant::now();
        let sol = match m {
            Method::Exact => Ok(solve_exact(&g, scenario, &costs, &limits.exact).to_solution(&full, "exact")),
            Method::H1 => run_h1(&g, scenario, &costs, &limits.h1, &limits.exact),
            Method::H2 => run_h2(&g, scenario, &costs, &limits.h2),
        };
        let o = outcome_of(sol, scenario, t.elapsed().as_secs_f64());
        info!("{} {}: {:?} {:?}", spec.name(), m.name(), o.status, o.objective);
        result.outcomes.insert(m, o);
    }
    result
}

/// Generates and runs every instance, in order. Generation failures are
/// logged and skipped.
pub fn benchmark(specs: &[RandomInstanceSpec], methods: &[Method], limits: &BenchmarkLimits) -> Vec<InstanceResult> {
    if specs.is_empty() {
        warn!("no benchmark instances requested");
    }
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        match generate_random(spec) {
            Ok(s) => out.push(run_scenario(spec, &s, methods, limits)),
            Err(e) => warn!("{}: generation failed: {e}", spec.name()),
        }
    }
    out
}

/// Column headers of the report.
pub const COLUMNS: [&str; 12] = [
    "d", "s", "o", "Vars", "Cons", "Solved", "GAP_Ex", "GAP_H1", "GAP_H2", "Time_Ex", "Time_H1", "Time_H2",
];

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn fmt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

/// One averaged report row over `rows`.
fn summary_row(key: [String; 3], rows: &[&InstanceResult], methods: &[Method]) -> Vec<String> {
    let ran = |m: Method| methods.contains(&m);
    let gap = |m: Method| -> Option<f64> {
        if !ran(m) {
            return None;
        }
        match m {
            Method::Exact => mean(
                rows.iter()
                    .filter_map(|r| r.outcome(Method::Exact)?.gap)
                    .map(|g| 100.0 * g),
            ),
            _ => mean(rows.iter().filter_map(|r| r.deviation(m))),
        }
    };
    let time = |m: Method| {
        ran(m)
            .then(|| mean(rows.iter().filter_map(|r| r.outcome(m)).map(|o| o.time)))
            .flatten()
    };
    let solved = ran(Method::Exact).then(|| {
        rows.iter()
            .filter(|r| {
                r.outcome(Method::Exact)
                    .is_some_and(|o| matches!(o.status, SolveStatus::Optimal | SolveStatus::Infeasible))
            })
            .count()
    });
    let [d, s, o] = key;
    vec![
        d,
        s,
        o,
        fmt(mean(rows.iter().filter_map(|r| r.variables).map(|v| v as f64)), 1),
        fmt(mean(rows.iter().filter_map(|r| r.constraints).map(|v| v as f64)), 1),
        solved.map(|n| n.to_string()).unwrap_or_default(),
        fmt(gap(Method::Exact), 2),
        fmt(gap(Method::H1), 2),
        fmt(gap(Method::H2), 2),
        fmt(time(Method::Exact), 2),
        fmt(time(Method::H1), 2),
        fmt(time(Method::H2), 2),
    ]
}

/// Report rows: one per `(d, s, o)` group in ascending order, then one
/// summary row per density and a final row over all instances.
pub fn report_rows(results: &[InstanceResult], methods: &[Method]) -> Vec<Vec<String>> {
    let mut groups: BTreeMap<(usize, usize, usize), Vec<&InstanceResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.spec.density, r.spec.services, r.spec.obstacles))
            .or_default()
            .push(r);
    }
    let mut rows = Vec::new();
    for ((d, s, o), rs) in &groups {
        rows.push(summary_row([d.to_string(), s.to_string(), o.to_string()], rs, methods));
    }
    let mut by_density: BTreeMap<usize, Vec<&InstanceResult>> = BTreeMap::new();
    for r in results {
        by_density.entry(r.spec.density).or_default().push(r);
    }
    for (d, rs) in &by_density {
        rows.push(summary_row([d.to_string(), "all".into(), "all".into()], rs, methods));
    }
    if !results.is_empty() {
        let all: Vec<&InstanceResult> = results.iter().collect();
        rows.push(summary_row(["all".into(), "all".into(), "all".into()], &all, methods));
    }
    rows
}

pub fn write_csv(results: &[InstanceResult], methods: &[Method], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in report_rows(results, methods) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(d: usize, s: usize, exact: Option<f64>, h2: Option<f64>) -> InstanceResult {
        let o = |objective: Option<f64>, gap| MethodOutcome {
            status: if objective.is_some() { SolveStatus::Optimal } else { SolveStatus::TimeLimit },
            objective,
            gap,
            valid: objective.map(|_| true),
            time: 1.0,
            error: None,
        };
        InstanceResult {
            spec: RandomInstanceSpec::new(d, s, 0, 1, 0),
            variables: Some(100),
            constraints: Some(10),
            outcomes: BTreeMap::from([(Method::Exact, o(exact, exact.map(|_| 0.0))), (Method::H2, o(h2, None))]),
        }
    }

    #[test]
    fn rows_are_groups_plus_summaries() {
        let rs = vec![
            result(17, 2, Some(100.0), Some(110.0)),
            result(17, 2, Some(200.0), Some(200.0)),
            result(17, 3, None, Some(50.0)),
            result(9, 2, Some(10.0), Some(10.0)),
        ];
        let methods = [Method::Exact, Method::H2];
        let rows = report_rows(&rs, &methods);
        // three groups, two densities, one total
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0][..3], ["9", "2", "0"]);
        let g = &rows[1];
        assert_eq!(g[..3], ["17", "2", "0"]);
        assert_eq!(g[5], "2");
        assert_eq!(g[6], "0.00");
        assert_eq!(g[7], "");
        assert_eq!(g[8], "5.00");
        // no exact incumbent: no heuristic gap
        assert_eq!(rows[2][8], "");
        assert_eq!(rows[2][5], "0");
        assert_eq!(rows[5][..3], ["all", "all", "all"]);
    }

    #[test]
    fn empty_report_has_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &Method::ALL, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }
}
