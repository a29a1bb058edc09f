//! End-to-end tests of the `heatctl` binary: exit codes, file formats,
//! determinism, and cross-subcommand consistency.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_heatctl");

const BASE_CFG: &str = "\
omega_a = 0.2
omega_b = 0.8
num_modes = 8
t_end = 1.0
n_steps = 80
y0 = mode1
z_d = bump
tau = 0.25
tol_bvp = 1e-10
tol_m = 1e-8
tol_tau = 1e-3
max_iter = 200000
seed = 7
";

fn run(sub: &str, cfg: &str, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let cfg_path = dir.join("problem.cfg");
    fs::write(&cfg_path, cfg).unwrap();
    Command::new(BIN)
        .args([sub, "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(out: &Path) -> Value {
    let text = fs::read_to_string(out.join("summary.json")).expect("summary.json exists");
    serde_json::from_str(&text).expect("summary.json is valid JSON")
}

fn parse(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

#[test]
fn solve_op_with_zero_bound_reports_free_reach() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = format!("{BASE_CFG}m = 0.0\n");
    let res = run("solve-op", &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    // With M = 0 the optimal reach distance is exactly the free-flow
    // distance; the two 17-digit strings must agree verbatim.
    assert_eq!(s["r"], s["r_T"]);
    assert!(out.join("control.csv").exists());
}

#[test]
fn solve_np_then_op_round_trips_the_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let np_out = tmp.path().join("np");
    let cfg = format!("{BASE_CFG}r = 0.25\n");
    let res = run("solve-np", &cfg, &np_out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let np = summary(&np_out);
    let m_star = parse(&np["m_star"]);
    assert!(m_star > 0.0);

    let op_out = tmp.path().join("op");
    let op_cfg = format!("{BASE_CFG}m = {m_star}\n");
    let res = run("solve-op", &op_cfg, &op_out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let op = summary(&op_out);
    // r(tau, M*) = r up to the bisection value budget (T - tau) tol_m plus
    // solver noise.
    let budget = 0.75 * 1e-8 + 2e-10;
    assert!((parse(&op["r"]) - 0.25).abs() <= 10.0 * budget);
}

#[test]
fn unknown_config_key_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = format!("{BASE_CFG}m = 1.0\nbogus_knob = 3\n");
    let res = run("solve-op", &cfg, &out);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("bogus_knob"));
}

#[test]
fn missing_radius_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let res = run("solve-np", BASE_CFG, &out);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("r"));
}

#[test]
fn unreachable_radius_exits_2_and_names_the_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    // A radius far below the free-flow distance is infeasible for the time
    // problem no matter how large M is on a fixed horizon.
    let cfg = format!("{BASE_CFG}m = 1.0\nr = 1e-9\n");
    let res = run("solve-tp", &cfg, &out);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("infeasible"), "stderr: {stderr}");
    assert!(stderr.contains("bound"), "stderr: {stderr}");
}

#[test]
fn csv_headers_match_the_documented_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = format!("{BASE_CFG}r = 0.25\n");
    let res = run("solve-np", &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let control = fs::read_to_string(out.join("control.csv")).unwrap();
    let header = control.lines().next().unwrap();
    assert_eq!(header, "t,coeff_1,coeff_2,coeff_3,coeff_4,coeff_5,coeff_6,coeff_7,coeff_8");
    assert_eq!(control.lines().count(), 81); // header + one row per cell

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "n,a,b,mid,r_mid");
}

#[test]
fn feedback_sim_writes_loop_and_norm_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = format!("{BASE_CFG}r = 0.25\n");
    let res = run("feedback-sim", &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let s = summary(&out);
    let steps = s["steps"].as_u64().unwrap() as usize;

    let states = fs::read_to_string(out.join("closed_loop.csv")).unwrap();
    assert!(states.lines().next().unwrap().starts_with("t,coeff_1"));
    assert_eq!(states.lines().count(), steps + 2); // header + one row per node

    let norms = fs::read_to_string(out.join("norm_values.csv")).unwrap();
    assert_eq!(norms.lines().next().unwrap(), "t,n_value,masked_adjoint_norm");

    assert!(parse(&s["terminal_miss"]) <= 0.25 + 1e-6);
}

#[test]
fn verify_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "\
omega_a = 0.2
omega_b = 0.8
num_modes = 6
t_end = 1.0
n_steps = 60
y0 = mode1
z_d = bump
r = 0.3
m = 0.8
tau = 0.25
tol_bvp = 1e-10
tol_m = 1e-8
tol_tau = 1e-3
max_iter = 200000
seed = 42
";
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let res = run("verify", cfg, out);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let a = fs::read(out_a.join("report.json")).unwrap();
    let b = fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(a, b, "verification reports differ between identical runs");
    assert_eq!(
        fs::read(out_a.join("summary.json")).unwrap(),
        fs::read(out_b.join("summary.json")).unwrap()
    );
}
