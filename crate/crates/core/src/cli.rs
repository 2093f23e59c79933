//! Command-line front end: solve, generate, benchmark, validate and export.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use crate::cost::EdgeCostTable;
use crate::error::{Error, Result};
use crate::exact::{solve_exact, ExactConfig, Problem};
use crate::graph::RoutingGraph;
use crate::heuristics::{run_h1, run_h2, H1Settings, H2Settings, Schedule};
use crate::instances::{generate_random, load_scenario, load_solution, save_scenario, save_solution, RandomInstanceSpec};
use crate::report::{benchmark, export_geometry, validate_standalone, write_csv, BenchmarkLimits, Method, ObjOptions};
use crate::scenario::{Scenario, SolverSettings};
use crate::solution::{Solution, SolveStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NO_SOLUTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "piperoute", version, about = "Multi-service 3D pipe routing")]
pub struct Cli {
    /// More log output on standard error (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Route the services of a scenario file.
    Solve(SolveArgs),
    /// Write a random benchmark scenario.
    Generate(GenerateArgs),
    /// Run methods over a grid of random instances and write a CSV report.
    Benchmark(BenchmarkArgs),
    /// Check a solution against its scenario.
    Validate(ValidateArgs),
    /// Write routes, obstacles and zones as a Wavefront OBJ file.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    H1,
    H2,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::H1 => Method::H1,
            MethodArg::H2 => Method::H2,
        }
    }
}

/// Overrides of the solver settings.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    /// Seconds for the exact solver, and for each restricted solve of h1.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Iteration cap of h2.
    #[arg(long)]
    pub maxit: Option<usize>,
    /// Fractions of h2 iterations per type, as par:cluster:seq.
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<Schedule>,
    /// Initial tube half-width of h1.
    #[arg(long)]
    pub delta_init: Option<f64>,
    /// Tube half-width increment of h1.
    #[arg(long)]
    pub delta_step: Option<f64>,
    /// Grid points per axis of the grid h2 falls back to.
    #[arg(long)]
    pub fallback_density: Option<usize>,
    /// JSON file with `exact`, `h1` and `h2` settings blocks.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long, default_value = "solution.json")]
    pub out: PathBuf,
    /// Also write the routes as an OBJ file.
    #[arg(long)]
    pub obj: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Grid points per axis.
    #[arg(long = "d")]
    pub density: usize,
    /// Number of services.
    #[arg(long = "s")]
    pub services: usize,
    /// Number of obstacles.
    #[arg(long = "o")]
    pub obstacles: usize,
    /// Replicate index.
    #[arg(long = "g", default_value_t = 1)]
    pub replicate: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "scenario.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long = "d", num_args = 0.., value_delimiter = ',', default_value = "17")]
    pub densities: Vec<usize>,
    #[arg(long = "s", num_args = 0.., value_delimiter = ',', default_value = "2,3,4,5")]
    pub services: Vec<usize>,
    #[arg(long = "o", num_args = 0.., value_delimiter = ',', default_value = "0,3,5")]
    pub obstacles: Vec<usize>,
    /// Replicate indices; an empty list requests no instances.
    #[arg(long = "g", num_args = 0.., value_delimiter = ',', default_value = "1")]
    pub replicates: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,h1,h2")]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value = "benchmark.csv")]
    pub out: PathBuf,
    /// Directory for per-instance scenarios and results.
    #[arg(long)]
    pub keep: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub scenario: PathBuf,
    pub solution: PathBuf,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub scenario: PathBuf,
    /// Without a solution only obstacles and zones are written.
    pub solution: Option<PathBuf>,
    #[arg(long, default_value = "routes.obj")]
    pub out: PathBuf,
    /// Sides of the tube mesh around each route.
    #[arg(long, default_value_t = 12)]
    pub tube_sides: usize,
    /// Write polylines only.
    #[arg(long)]
    pub no_tubes: bool,
}

fn parse_schedule(s: &str) -> std::result::Result<Schedule, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let [par, cluster, seq] = parts[..] else {
        return Err("expected three fractions par:cluster:seq".into());
    };
    if parts.iter().any(|x| !(0.0..=1.0).contains(x)) || ((par + cluster + seq) - 1.0).abs() > 1e-9 {
        return Err("fractions must lie in [0, 1] and sum to 1".into());
    }
    Ok(Schedule { par, cluster, seq })
}

/// Solver settings after layering the scenario block, the config file and
/// the flags, in that order.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub exact: ExactConfig,
    pub h1: H1Settings,
    pub h2: H2Settings,
}

impl Settings {
    pub fn resolve(scenario: Option<&Scenario>, flags: &SolverFlags) -> Result<Self> {
        let mut s = Settings::default();
        let mut layer = |block: &SolverSettings| {
            if let Some(x) = &block.exact {
                s.exact = x.clone();
            }
            if let Some(x) = &block.h1 {
                s.h1 = x.clone();
            }
            if let Some(x) = &block.h2 {
                s.h2 = x.clone();
            }
        };
        if let Some(block) = scenario.and_then(|x| x.solver.as_ref()) {
            layer(block);
        }
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path)?;
            let block: SolverSettings = serde_json::from_str(&text)?;
            layer(&block);
        }
        if let Some(t) = flags.time_limit {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::Config(format!("time limit must be positive, got {t}")));
            }
            s.exact.time_limit = Some(t);
            s.h1.time_limit = t;
        }
        s.exact.threads = flags.threads.max(1);
        if let Some(m) = flags.maxit {
            s.h2.maxit = m;
        }
        if let Some(x) = flags.schedule {
            s.h2.schedule = x;
        }
        if let Some(d) = flags.delta_init {
            s.h1.delta_init = Some(d);
        }
        if let Some(d) = flags.delta_step {
            s.h1.delta_step = Some(d);
        }
        if let Some(d) = flags.fallback_density {
            s.h2.fallback_density = Some(d);
        }
        Ok(s)
    }
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp_millis()
        .try_init();
}

fn set_threads(n: usize) {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
        warn!("thread pool already configured: {e}");
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    init_logging(&cli);
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Export(a) => cmd_export(a),
    };
    result.unwrap_or_else(|e| {
        error!("{e}");
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let scenario = load_scenario(&a.scenario)?;
    let settings = Settings::resolve(Some(&scenario), &a.solver)?;
    set_threads(a.solver.threads);
    let method: Method = a.method.into();
    let built = RoutingGraph::build(&scenario).and_then(|g| {
        let costs = EdgeCostTable::build(&g, &scenario)?;
        Ok((g, costs))
    });
    let (g, costs) = match built {
        Ok(x) => x,
        Err(Error::InfeasibleScenario(msg)) => {
            return finish_without_solution(a, &scenario, method, SolveStatus::Infeasible, &msg);
        }
        Err(e) => return Err(e),
    };
    info!(
        "{} services, {} nodes, {} arcs",
        scenario.services.len(),
        g.num_nodes(),
        g.num_arcs()
    );
    let outcome = match method {
        Method::Exact => {
            let r = solve_exact(&g, &scenario, &costs, &settings.exact);
            Ok(r.to_solution(&Problem::full(&g, &scenario, &costs), "exact"))
        }
        Method::H1 => run_h1(&g, &scenario, &costs, &settings.h1, &settings.exact),
        Method::H2 => run_h2(&g, &scenario, &costs, &settings.h2),
    };
    let solution = match outcome {
        Ok(s) => s,
        Err(Error::InfeasibleScenario(msg)) => {
            return finish_without_solution(a, &scenario, method, SolveStatus::Infeasible, &msg);
        }
        Err(Error::Heuristic(msg)) => {
            return finish_without_solution(a, &scenario, method, SolveStatus::TimeLimit, &msg);
        }
        Err(e) => return Err(e),
    };
    save_solution(&solution, &a.out)?;
    if !solution.status.has_solution() {
        let code = if solution.status == SolveStatus::Infeasible {
            EXIT_INFEASIBLE
        } else {
            EXIT_NO_SOLUTION
        };
        warn!("{}: no solution ({:?})", method.name(), solution.status);
        return Ok(code);
    }
    let report = validate_standalone(&scenario, &solution)?;
    eprint!("{}", report.summary());
    if let Some(path) = &a.obj {
        export_geometry(&scenario, &solution, &ObjOptions::default(), path)?;
    }
    println!(
        "{} {:?} objective {} in {:.2}s",
        method.name(),
        solution.status,
        solution.objective,
        solution.meta.wall_time
    );
    if !report.passed() {
        return Err(Error::Heuristic("returned solution failed validation".into()));
    }
    Ok(EXIT_OK)
}

fn finish_without_solution(
    a: &SolveArgs,
    scenario: &Scenario,
    method: Method,
    status: SolveStatus,
    msg: &str,
) -> Result<i32> {
    warn!("{}: {msg}", method.name());
    save_solution(&Solution::empty(status, method.name(), scenario.grid.spacing), &a.out)?;
    println!("{} {status:?}: {msg}", method.name());
    Ok(if status == SolveStatus::Infeasible {
        EXIT_INFEASIBLE
    } else {
        EXIT_NO_SOLUTION
    })
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32> {
    let spec = RandomInstanceSpec::new(a.density, a.services, a.obstacles, a.replicate, a.seed);
    let scenario = generate_random(&spec)?;
    save_scenario(&scenario, &a.out)?;
    info!("wrote {} to {}", spec.name(), a.out.display());
    Ok(EXIT_OK)
}

pub fn benchmark_specs(a: &BenchmarkArgs) -> Vec<RandomInstanceSpec> {
    let mut out = Vec::new();
    for &d in &a.densities {
        for &s in &a.services {
            for &o in &a.obstacles {
                for &g in &a.replicates {
                    out.push(RandomInstanceSpec::new(d, s, o, g, a.seed));
                }
            }
        }
    }
    out
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<i32> {
    let mut settings = Settings::resolve(None, &a.solver)?;
    if a.solver.time_limit.is_none() && settings.exact.time_limit.is_none() {
        settings.exact.time_limit = Some(300.0);
    }
    set_threads(a.solver.threads);
    let methods: Vec<Method> = a.methods.iter().map(|&m| m.into()).collect();
    let limits = BenchmarkLimits {
        exact: settings.exact,
        h1: settings.h1,
        h2: settings.h2,
    };
    let specs = benchmark_specs(a);
    let results = benchmark(&specs, &methods, &limits);
    if let Some(dir) = &a.keep {
        fs::create_dir_all(dir)?;
        for r in &results {
            let name = r.spec.name();
            save_scenario(&generate_random(&r.spec)?, &dir.join(format!("{name}.json")))?;
            let text = serde_json::to_string_pretty(r)?;
            fs::write(dir.join(format!("{name}_result.json")), text + "\n")?;
        }
    }
    write_csv(&results, &methods, fs::File::create(&a.out)?)?;
    println!("{} instances, report written to {}", results.len(), a.out.display());
    Ok(EXIT_OK)
}

pub fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let scenario = load_scenario(&a.scenario)?;
    let solution = load_solution(&a.solution)?;
    let report = validate_standalone(&scenario, &solution)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.summary());
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn cmd_export(a: &ExportArgs) -> Result<i32> {
    let scenario = load_scenario(&a.scenario)?;
    let solution = match &a.solution {
        Some(p) => load_solution(p)?,
        None => Solution::empty(SolveStatus::Infeasible, "none", scenario.grid.spacing),
    };
    let options = ObjOptions {
        tube_sides: (!a.no_tubes).then_some(a.tube_sides),
    };
    export_geometry(&scenario, &solution, &options, Path::new(&a.out))?;
    info!("wrote {}", a.out.display());
    Ok(EXIT_OK)
}
