//! End-to-end tests of the `mrlab` binary: artifacts, exit codes,
//! reproducibility, and the documented example runs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn mrlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mrlab"))
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    mrlab()
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn flow_default_reproduces_rate_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["flow"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("flow_report.json")).unwrap())
            .unwrap();
    // default flow: n=2, g0 = π/2, T = 3, step 1e-3 → fitted rate ≈ 2 (±5%)
    let rate = report["fitted_rate"].as_f64().expect("rate fitted");
    assert!((rate - 2.0).abs() / 2.0 < 0.05, "fitted rate {rate}");
    assert!(tmp.path().join("flow_path.csv").exists());
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn energy_on_constant_equally_spaced_csv_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    // constant equally spaced path CSV
    let path = mrlab::path::DrivingPath::from_fn(3, 1.0, 0.01, |_, j| {
        j as f64 * 2.0 * std::f64::consts::PI / 3.0
    });
    let csv = tmp.path().join("input.csv");
    path.write_csv(fs::File::create(&csv).unwrap()).unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, format!("[energy]\npath = {:?}\nkappa = 0.0\n", csv)).unwrap();

    let out = run_in(tmp.path(), &["energy", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("energy_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["dirichlet_E"].as_f64().unwrap(), 0.0);
    // the cotangent pair sums cancel to round-off, not bit-exactly
    assert!(report["multiradial_J"].as_f64().unwrap().abs() < 1e-25);
    assert!(report["residual"].as_f64().unwrap().abs() < 1e-25);
    assert!(report["phi_kappa_a"].as_f64().unwrap().abs() < 1e-25);
}

#[test]
fn trace_constant_driver_hits_slit_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, "[trace]\nn = 1\nT = 1.0\nsamples = 4\n").unwrap();
    let out = run_in(tmp.path(), &["trace", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    // endpoint at T = 1 on the positive real axis at the slit-map radius
    let e = std::f64::consts::E;
    let oracle = 2.0 * e - 1.0 - 2.0 * (e * e - e).sqrt();
    assert!((fields[0] - 1.0).abs() < 1e-12); // t
    assert!((fields[1] - oracle).abs() < 1e-3, "re = {}", fields[1]);
    assert!(fields[2].abs() < 1e-6); // im
}

#[test]
fn simulate_writes_paths_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(
        &config,
        "[simulate]\nn = 2\nkappa = 1.0\nT = 0.2\ndt = 0.01\nensemble = 5\nsave_paths = 3\n",
    )
    .unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", config.to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..3 {
        assert!(tmp.path().join(format!("path_{i:05}.csv")).exists());
    }
    assert!(!tmp.path().join("path_00003.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("ensemble.json")).unwrap())
            .unwrap();
    assert_eq!(summary["ensemble"].as_u64().unwrap(), 5);
    assert_eq!(summary["collision_times"].as_array().unwrap().len(), 5);
}

#[test]
fn reproducible_outputs_for_same_seed() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let config_text = "[simulate]\nn = 2\nT = 0.1\ndt = 0.01\nensemble = 4\n";
    for tmp in [&tmp_a, &tmp_b] {
        let config = tmp.path().join("config.toml");
        fs::write(&config, config_text).unwrap();
        let out = run_in(tmp.path(), &["simulate", "--config", config.to_str().unwrap(), "--seed", "3"]);
        assert!(out.status.success());
    }
    let a = fs::read(tmp_a.path().join("path_00000.csv")).unwrap();
    let b = fs::read(tmp_b.path().join("path_00000.csv")).unwrap();
    assert_eq!(a, b);
    let a = fs::read(tmp_a.path().join("ensemble.json")).unwrap();
    let b = fs::read(tmp_b.path().join("ensemble.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let config_text = "[simulate]\nn = 3\nT = 0.1\ndt = 0.01\nensemble = 6\n";
    for (tmp, workers) in [(&tmp_a, "1"), (&tmp_b, "4")] {
        let config = tmp.path().join("config.toml");
        fs::write(&config, config_text).unwrap();
        let out = run_in(
            tmp.path(),
            &["simulate", "--config", config.to_str().unwrap(), "--seed", "5", "--workers", workers],
        );
        assert!(out.status.success());
    }
    for i in 0..6 {
        let a = fs::read(tmp_a.path().join(format!("path_{i:05}.csv"))).unwrap();
        let b = fs::read(tmp_b.path().join(format!("path_{i:05}.csv"))).unwrap();
        assert_eq!(a, b, "path {i} differs across worker counts");
    }
}

#[test]
fn config_parse_error_exits_2_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "[simulate]\nn = \"two\"\n").unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "missing position info: {err}");
}

#[test]
fn invalid_input_invariant_exits_1_named() {
    let tmp = tempfile::tempdir().unwrap();
    // a CSV violating the ordering invariant
    let csv = tmp.path().join("bad_path.csv");
    fs::write(&csv, "t,theta1,theta2\n0,1.0,0.5\n").unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, format!("[energy]\npath = {:?}\n", csv)).unwrap();
    let out = run_in(tmp.path(), &["energy", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not strictly increasing"), "unnamed invariant: {err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, "[simulate]\nnn = 2\n").unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hull_svg_format_renders() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(&config, "[hull]\nn = 1\nT = 0.4\nstep = 0.005\nradial = 12\nangular = 24\n").unwrap();
    let out = run_in(
        tmp.path(),
        &["hull", "--config", config.to_str().unwrap(), "--format", "svg"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("hull.csv").exists());
    assert!(tmp.path().join("hull.svg").exists());
    let text = fs::read_to_string(tmp.path().join("hull.csv")).unwrap();
    assert!(text.starts_with("re,im,tau\n"));
}

#[test]
fn ldp_endpoint_event_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    fs::write(
        &config,
        "[ldp]\nn = 1\nkappa_list = [1.0, 0.5]\nensemble = 500\nT = 1.0\ndt = 0.01\n\
         event = \"endpoint\"\nshift = 0.5\nradius = 0.4\ngrid_steps = 40\n",
    )
    .unwrap();
    let out = run_in(tmp.path(), &["ldp", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = fs::read_to_string(tmp.path().join("ldp_curve.csv")).unwrap();
    assert!(curve.starts_with("kappa,estimate,ci_lo,ci_hi,method\n"));
    assert_eq!(curve.lines().count(), 1 + 4); // 2 kappas × {direct, weighted}
    let rate: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("rate_result.json")).unwrap())
            .unwrap();
    assert!(rate["feasible"].as_bool().unwrap());
    // J* = c²/(2T) at the ball boundary: (0.5-0.4)²/2 = 0.005
    let v = rate["value"].as_f64().unwrap();
    assert!((v - 0.005).abs() < 5e-4, "J* = {v}");
}
