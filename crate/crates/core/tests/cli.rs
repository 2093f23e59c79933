use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use piperoute::instances::{load_scenario, load_solution};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piperoute")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_h2_writes_a_valid_solution() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let scenario = data("pillar.json");
    let o = run(&["solve", s(&scenario), "--method", "h2", "--out", s(&sol)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let solution = load_solution(&sol).unwrap();
    assert_eq!(solution.routes.len(), 3);

    let o = run(&["validate", s(&scenario), s(&sol)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("all checks passed"));
}

#[test]
fn walled_off_terminal_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    for method in ["exact", "h1", "h2"] {
        let o = run(&["solve", s(&data("walled.json")), "--method", method, "--out", s(&sol)]);
        assert_eq!(code(&o), 2, "{method}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_or_bad_input_is_an_error() {
    let o = run(&["solve", "/nonexistent/scenario.json", "--method", "h2"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
    let o = run(&["solve", s(&data("pillar.json")), "--method", "h2", "--schedule", "0.5:0.5:0.5"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn generate_writes_a_loadable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let o = run(&["generate", "--d", "17", "--s", "5", "--o", "5", "--seed", "42", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sc = load_scenario(&out).unwrap();
    assert_eq!(sc.services.len(), 5);
    assert_eq!(sc.obstacles.len(), 5);
}

#[test]
fn validate_rejects_a_mismatched_solution() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let o = run(&["solve", s(&data("pillar.json")), "--method", "exact", "--out", s(&sol)]);
    assert_eq!(code(&o), 0);
    // the same routes against a wider pipe
    let mut sc = load_scenario(&data("pillar.json")).unwrap();
    for svc in &mut sc.services {
        svc.radius = 0.6;
    }
    let wide = dir.path().join("wide.json");
    piperoute::instances::save_scenario(&sc, &wide).unwrap();
    let o = run(&["validate", s(&wide), s(&sol)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAILED"));
}

#[test]
fn export_writes_routes_and_obstacles() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let obj = dir.path().join("routes.obj");
    let scenario = data("pillar.json");
    assert_eq!(code(&run(&["solve", s(&scenario), "--method", "exact", "--out", s(&sol)])), 0);
    let o = run(&["export", s(&scenario), s(&sol), "--out", s(&obj)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&obj).unwrap();
    let objects: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("o ")).collect();
    assert_eq!(objects, ["service_1", "service_2", "service_3", "obstacle_0"]);
    assert!(text.lines().any(|l| l.starts_with("l ")));
    assert!(text.lines().any(|l| l.starts_with("f ")));
}

#[test]
fn benchmark_writes_one_row_per_group() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let keep = dir.path().join("runs");
    let o = run(&[
        "benchmark", "--d", "9", "--s", "2,3", "--o", "2,4", "--g", "1,2", "--methods", "exact,h2",
        "--time-limit", "30", "--out", s(&csv), "--keep", s(&keep),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("8 instances"));
    let mut r = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, piperoute::report::benchmark::COLUMNS);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    // four groups, one density summary, one total
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0].iter().take(3).collect::<Vec<_>>(), ["9", "2", "2"]);
    assert!(rows.iter().all(|row| row[7].is_empty()));
    assert_eq!(std::fs::read_dir(&keep).unwrap().count(), 16);
}

#[test]
fn empty_benchmark_writes_header_and_warns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = run(&["benchmark", "--g", "--out", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no benchmark instances"));
}
