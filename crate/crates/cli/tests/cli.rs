use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_backflow-lab");
const PI: f64 = std::f64::consts::PI;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

fn csv_rows(p: PathBuf) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

fn state(alpha: f64, delta_t: f64, theta: f64) -> Value {
    json!({"p0_t": 3.0, "delta_t": delta_t, "alpha": alpha, "theta": theta})
}

#[test]
fn fig1_trace_probability_dips_match_negative_current() {
    let out = tempfile::tempdir().unwrap();
    let o = run("trace", &configs_dir().join("fig1.json"), out.path(), &[]);
    ok(&o);
    for f in ["trace.csv", "trace.json", "trace.svg"] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }
    let (header, rows) = csv_rows(out.path().join("trace.csv"));
    assert_eq!(header, "t_tilde,P,j_tilde");
    assert_eq!(rows.len(), 801);
    let mut dips = 0;
    for w in rows.windows(2) {
        let dp = w[1][1] - w[0][1];
        if w[0][2] > 0.0 && w[1][2] > 0.0 {
            assert!(dp > -1e-12, "P decreases while j > 0 at t = {}", w[0][0]);
        }
        if w[0][2] < 0.0 && w[1][2] < 0.0 {
            assert!(dp < 1e-12, "P increases while j < 0 at t = {}", w[0][0]);
            dips += 1;
        }
    }
    assert!(dips > 0, "the figure state has backflow intervals");
}

#[test]
fn no_interference_current_stays_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a0.json",
        &json!({"state": state(0.0, 11.0, 0.0), "trace": {"window": [-1.0, 1.0], "n_samples": 300}}),
    );
    ok(&run("trace", &cfg, dir.path(), &["--format", "csv"]));
    let (_, rows) = csv_rows(dir.path().join("trace.csv"));
    assert_eq!(rows.len(), 300);
    // Positive everywhere, not merely above -1e-8.
    assert!(rows.iter().all(|r| r[2] > 0.0));
    assert!(rows.iter().map(|r| r[2]).fold(0.0, f64::max) > 1e-2);
    assert!(!dir.path().join("trace.svg").exists(), "--format csv must not write svg");
}

#[test]
fn backflow_at_maximum_and_after_sudden_death() {
    let out = tempfile::tempdir().unwrap();
    ok(&run("backflow", &configs_dir().join("fig5.json"), out.path(), &[]));
    let v = read_json(out.path().join("backflow.json"));
    let beta = v["beta"].as_f64().unwrap();
    assert!((beta - 0.0063).abs() <= 0.05 * 0.0063, "beta = {beta}");
    assert!((v["flux_check"].as_f64().unwrap() + beta).abs() <= 1e-8);
    assert_eq!(v["beta_le_delta"], json!(true));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dead.json", &json!({"state": state(1.0 + 11.0 / 3.0 + 0.1, 11.0, PI)}));
    ok(&run("backflow", &cfg, dir.path(), &[]));
    let v = read_json(dir.path().join("backflow.json"));
    assert!(v["beta"].as_f64().unwrap() <= 1e-6);
    assert!(v["delta_neg"].as_f64().unwrap() >= 0.01);
    assert!(v["flux_check_error"].as_f64().unwrap() <= 1e-8);
}

fn assert_json_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "one error line expected: {err}");
    let v: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["error"], json!(kind), "{err}");
    assert!(v["message"].is_string());
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", &json!({"state": state(2.0, 11.0, PI), "colour": "red"}));
    assert_json_error(&run("backflow", &unknown, dir.path(), &[]), 2, "config");

    let nested = write_config(
        dir.path(),
        "n.json",
        &json!({"state": state(2.0, 11.0, PI), "trace": {"n_samples": 100, "smoothing": 1}}),
    );
    assert_json_error(&run("trace", &nested, dir.path(), &[]), 2, "config");

    let negative = write_config(dir.path(), "neg.json", &json!({"state": state(-1.0, 11.0, PI)}));
    assert_json_error(&run("backflow", &negative, dir.path(), &[]), 2, "config");

    let missing = dir.path().join("absent.json");
    assert_json_error(&run("backflow", &missing, dir.path(), &[]), 2, "config");

    let no_eta = write_config(dir.path(), "e.json", &json!({"state": state(2.0, 11.0, PI)}));
    assert_json_error(&run("eta", &no_eta, dir.path(), &[]), 2, "config");

    let o = Command::new(BIN).args(["scan", "--bogus"]).output().unwrap();
    assert_json_error(&o, 2, "usage");
}

#[test]
fn numerical_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // The achieving interval straddles the origin, so a window on one side
    // of it cuts the interval even after one expansion.
    let cfg = write_config(
        dir.path(),
        "w.json",
        &json!({"state": state(1.9, 11.0, PI), "backflow": {"window": [0.0, 0.002]}}),
    );
    assert_json_error(&run("backflow", &cfg, dir.path(), &[]), 3, "window_too_small");
}

fn scan_config(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "scan.json",
        &json!({
            "title": "small scan",
            "scan": {"panels": [
                {"title": "map", "kind": "heatmap", "series": [{"axes": {
                    "alpha": {"start": 1.5, "end": 3.0, "n": 4},
                    "delta_t": {"start": 5.0, "end": 25.0, "n": 4}}}]},
                {"title": "curve", "kind": "parametric", "series": [{"label": "delta=11", "axes": {
                    "alpha": {"start": 1.5, "end": 10.0, "n": 12},
                    "delta_t": {"start": 11.0, "end": 11.0, "n": 1}}}]}
            ]}
        }),
    )
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scan_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&run("scan", &cfg, &a, &["--threads", "1"]));
    ok(&run("scan", &cfg, &b, &["--threads", "3"]));
    for f in ["scan_0_0.csv", "scan_1_0.csv", "scan.json", "scan.svg"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(x == y, "{f} differs between thread counts");
    }
    let (header, rows) = csv_rows(a.join("scan_0_0.csv"));
    assert_eq!(header, "alpha,delta_t,p0_t,theta,beta,delta_neg,tail_limited,flags");
    assert_eq!(rows.len(), 16);
    for r in &rows {
        assert!(r[4] >= 0.0 && r[4] <= r[5] && r[4] < 0.041, "{r:?}");
    }
}

#[test]
fn smooth_matches_backflow_at_zero_and_orders_fig6_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &json!({
            "states": [
                {"label": "a", "p0_t": 3.0, "delta_t": 7.0, "alpha": 2.0, "theta": PI},
                {"label": "b", "p0_t": 3.0, "delta_t": 6.0, "alpha": 2.0, "theta": PI},
                {"label": "c", "p0_t": 3.0, "delta_t": 10.0, "alpha": 3.0, "theta": PI}
            ],
            "smooth": {"s": {"start": 0.0, "end": -0.02, "n": 5}}
        }),
    );
    ok(&run("smooth", &cfg, dir.path(), &[]));
    let firsts: Vec<f64> = (0..3)
        .map(|k| {
            let (header, rows) = csv_rows(dir.path().join(format!("smooth_{k}.csv")));
            assert_eq!(header, "s,beta_s");
            assert_eq!(rows.len(), 5);
            assert_eq!(rows[0][0], 0.0);
            rows[0][1]
        })
        .collect();
    assert!(firsts[0] > firsts[1] && firsts[1] > firsts[2], "{firsts:?}");

    let single = write_config(dir.path(), "b.json", &json!({"state": state(2.0, 7.0, PI)}));
    let bdir = dir.path().join("bf");
    ok(&run("backflow", &single, &bdir, &["--format", "json"]));
    let beta = read_json(bdir.join("backflow.json"))["beta"].as_f64().unwrap();
    assert!((beta - firsts[0]).abs() <= 1e-8);

    let depth = read_json(dir.path().join("depth.json"));
    for s in depth["states"].as_array().unwrap() {
        let s_m = s["s_m"].as_f64().unwrap();
        assert!(s_m > 0.0 && s_m < 1.0);
        let widths: Vec<f64> = s["bisection"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["alive"].as_f64().unwrap() - b["dead"].as_f64().unwrap())
            .collect();
        assert!(widths.windows(2).all(|w| w[1].abs() < w[0].abs()));
        assert!(widths.last().unwrap().abs() <= 1e-4);
    }
}

#[test]
fn eta_collapsed_alpha_range_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "eta.json",
        &json!({"eta": {"params": {"p1": 7.0, "p2": 9.0}, "delta_t": [10.0],
                        "alpha": {"start": 2.0, "end": 2.0, "n": 1}}}),
    );
    ok(&run("eta", &cfg, dir.path(), &[]));
    let text = std::fs::read_to_string(dir.path().join("eta.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("delta_t,alpha,delta_neg,eta_neg_flux"));
    assert_eq!(lines.len(), 2);
    let flux: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!(flux > 0.0 && flux.is_finite());
}

#[test]
fn wigner_grid_round_trips_and_uses_beta_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.json",
        &json!({"state": state(1.9, 11.0, PI),
                "wigner": {"grid": {"x_range": [-4.0, 4.0], "p_range": [-2.0, 18.0], "nx": 64, "np": 80}}}),
    );
    ok(&run("wigner", &cfg, dir.path(), &[]));
    let bytes = std::fs::read(dir.path().join("wigner.bin")).unwrap();
    let grid = backflow_core::phase_space::PhaseSpaceGrid::read_binary(bytes.as_slice()).unwrap();
    assert_eq!(grid.to_binary(), bytes);
    assert_eq!((grid.nx, grid.np), (64, 80));
    let (_, rows) = csv_rows(dir.path().join("wigner.csv"));
    assert_eq!(rows.len(), 64 * 80);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[2].to_bits(), grid.values[k].to_bits());
    }

    let summary = read_json(dir.path().join("wigner.json"));
    ok(&run("backflow", &cfg, &dir.path().join("bf"), &["--format", "json"]));
    let bf = read_json(dir.path().join("bf/backflow.json"));
    assert_eq!(summary["t1"], bf["t1"]);
    assert_eq!(summary["t2"], bf["t2"]);
    let svg = std::fs::read_to_string(dir.path().join("wigner.svg")).unwrap();
    assert!(svg.contains("<polygon"), "wedge overlay missing");

    let classical = write_config(dir.path(), "c.json", &json!({"state": state(0.0, 11.0, 0.0)}));
    let cdir = dir.path().join("c");
    ok(&run("wigner", &classical, &cdir, &["--format", "json"]));
    assert!(read_json(cdir.join("wigner.json"))["min"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn tolerance_override_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.json", &json!({"state": state(2.0, 11.0, PI)}));
    let o = Command::new(BIN)
        .env("BACKFLOW_LAB_TOL", "1e-9")
        .args(["backflow", "--format", "json", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    ok(&o);
    let beta = read_json(dir.path().join("backflow.json"))["beta"].as_f64().unwrap();
    assert!((beta - 0.006297).abs() < 1e-5, "{beta}");
}

#[test]
fn eta_emits_one_curve_per_delta() {
    let dir = tempfile::tempdir().unwrap();
    // The shipped figure config with a coarser alpha axis.
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(configs_dir().join("fig8.json")).unwrap()).unwrap();
    v["eta"]["alpha"] = json!({"start": 0.5, "end": 3.0, "n": 3});
    let cfg = write_config(dir.path(), "fig8_small.json", &v);
    ok(&run("eta", &cfg, dir.path(), &[]));
    let svg = std::fs::read_to_string(dir.path().join("eta.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    for d in ["9.5", "10", "10.5"] {
        assert!(svg.contains(&format!("delta~ = {d}<")), "curve for {d} missing");
    }
    let summary = read_json(dir.path().join("eta.json"));
    assert_eq!(summary["rows"].as_array().unwrap().len(), 9);
    for s in summary["spearman"].as_array().unwrap() {
        assert!(s["spearman"].as_f64().unwrap() >= 0.9, "{s}");
    }
}
