use std::process::Command;

use sdpi::cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["sdpi".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn data_rows(out: &str) -> Vec<Vec<f64>> {
    out.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn bsc_closed_curve_has_one_row_per_grid_point() {
    let (code, out, _) = invoke(&["fi-curve", "--channel", "bsc:0.1", "--t-grid", "0:0.7:0.01", "--method", "closed"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# meta: {"));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 71);
    assert_eq!(rows[0], vec![0.0, 0.0]);
    assert_eq!(rows[30][0], 0.3);
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1]);
    }
}

#[test]
fn diag_bounds_rows_and_meta() {
    let (code, out, _) = invoke(&["bounds", "diag", "--gamma", "1", "--t-grid", "0.1:1:0.1"]);
    assert_eq!(code, 0);
    let meta: serde_json::Value = serde_json::from_str(out.lines().next().unwrap().trim_start_matches("# meta: ")).unwrap();
    assert_eq!(meta["command"], "bounds diag");
    let c = meta["constants"]["c"].as_f64().unwrap();
    assert!((c - (2.0 + (8.0 * std::f64::consts::PI).sqrt())).abs() < 1e-12);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[1] >= 0.0 && r[1] <= r[0]));
}

#[test]
fn usage_and_numeric_errors_have_distinct_codes() {
    let (code, _, _) = invoke(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _, _) = invoke(&["fi-curve", "--channel", "bsc:0.1", "--t-grid", "0:x:1"]);
    assert_eq!(code, 2);
    let (code, out, err) = invoke(&["bounds", "diag", "--gamma", "-1", "--t-grid", "0.1:1:0.1"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    let rec: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(rec["error"], "domain");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "gamma = 2\nt_grid = 0.5:1:0.5\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, a, _) = invoke(&["--config", cfg, "bounds", "diag"]);
    assert_eq!(code, 0);
    let (_, b, _) = invoke(&["bounds", "diag", "--gamma", "2", "--t-grid", "0.5:1:0.5"]);
    assert_eq!(data_rows(&a), data_rows(&b));
    let (_, c, _) = invoke(&["--config", cfg, "bounds", "diag", "--gamma", "1"]);
    let (_, d, _) = invoke(&["bounds", "diag", "--gamma", "1", "--t-grid", "0.5:1:0.5"]);
    assert_eq!(data_rows(&c), data_rows(&d));
    assert_ne!(data_rows(&a), data_rows(&c));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let args = ["fi-curve", "--channel", "erasure:0.3", "--t-grid", "0:1:0.25", "--method", "closed"];
    let (_, stdout, _) = invoke(&args);
    let mut with_out = vec!["--out", path.to_str().unwrap()];
    with_out.extend(args);
    let (code, empty, _) = invoke(&with_out);
    assert_eq!(code, 0);
    assert!(empty.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
}

#[test]
fn repeated_seeded_runs_are_byte_identical() {
    let args = ["--seed", "11", "fi-curve", "--channel", "bsc:0.2", "--t-grid", "0:0.6:0.2", "--method", "envelope"];
    let (c1, a, _) = invoke(&args);
    let (c2, b, _) = invoke(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn horizontal_meta_reports_constants() {
    let (code, out, _) = invoke(&["bounds", "horiz", "--gamma", "1", "--t-grid", "0:1:0.5"]);
    assert_eq!(code, 0);
    let meta: serde_json::Value = serde_json::from_str(out.lines().next().unwrap().trim_start_matches("# meta: ")).unwrap();
    for k in ["kappa", "a5", "c1", "ln_inv_eps0"] {
        assert!(meta["constants"][k].as_f64().unwrap() > 0.0, "{k}");
    }
}

#[test]
fn binary_verify_bsc_exits_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_sdpi"))
        .args(["verify", "--suite", "bsc", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.is_object());
}
