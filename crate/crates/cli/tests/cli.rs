use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lasercon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lasercon")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = lasercon(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const MICRO: &str = "preset:micro_mission";

#[test]
fn design_writes_placement_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["design", "--config", MICRO, "--out", out]);
    let design = json(&dir.path().join("design.json"));
    assert_eq!(design["slots"], serde_json::json!([2, 7]));
    assert_eq!(design["status"], "Optimal");
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "design");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read_to_string(dir.path().join("placement.csv")).unwrap();
    assert!(csv.starts_with("id,sma_km,ecc,inc_deg,raan_deg,argp_deg,anomaly_deg"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn zero_platforms_cover_nothing() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["design", "--config", MICRO, "--platforms", "0", "--out", dir.path().to_str().unwrap()]);
    let design = json(&dir.path().join("design.json"));
    assert_eq!(design["pi"].as_f64(), Some(0.0));
    assert_eq!(design["slots"], serde_json::json!([]));
}

#[test]
fn runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&["run", "--config", MICRO, "--seed", "5", "--out", d.path().to_str().unwrap()]);
    }
    for name in ["placement.csv", "design.json", "engagements.csv", "metrics.json", "timeline.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
    let manifest = json(&a.path().join("manifest.json"));
    assert_eq!(manifest["seed"].as_u64(), Some(5));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);
}

#[test]
fn schedule_reads_a_placement() {
    let design = tempfile::tempdir().unwrap();
    let sched = tempfile::tempdir().unwrap();
    ok(&["run", "--config", MICRO, "--out", design.path().to_str().unwrap()]);
    let placement = design.path().join("placement.csv");
    ok(&["schedule", "--config", MICRO, "--placement", placement.to_str().unwrap(), "--out", sched.path().to_str().unwrap()]);
    let a = json(&design.path().join("metrics.json"));
    let b = json(&sched.path().join("metrics.json"));
    assert!((a["v"].as_f64().unwrap() - b["v"].as_f64().unwrap()).abs() < 1e-6 * a["v"].as_f64().unwrap());
}

#[test]
fn illustrative_clsp_objective() {
    let dir = tempfile::tempdir().unwrap();
    for full in [false, true] {
        let mut args = vec!["clsp", "--illustrative", "--out", dir.path().to_str().unwrap()];
        if full {
            args.push("--full-declaration");
        }
        ok(&args);
        let report = json(&dir.path().join("clsp.json"));
        assert!((report["objective"].as_f64().unwrap() - 7.5).abs() < 1e-9);
        assert_eq!(report["slots"], serde_json::json!([1, 2]));
    }
}

#[test]
fn sweep_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["sweep", "--config", MICRO, "--p-values", "0,2", "--out", dir.path().to_str().unwrap()]);
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "0");
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
    assert!(rows[1][2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn walker_reports_best_pattern() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["walker", "--config", MICRO, "--pairs", "2", "--patterns", "1/0,2/1", "--schedule", "--out", dir.path().to_str().unwrap()]);
    let report = json(&dir.path().join("walker.json"));
    // The micro grid holds a single (sma, inc) pair, so each pattern is scored once.
    assert_eq!(report["evaluated"].as_u64(), Some(2));
    assert_eq!(fs::read_to_string(dir.path().join("walker.csv")).unwrap().lines().count(), 3);
    assert!(report["v"].is_number());
    let placement = fs::read_to_string(dir.path().join("placement.csv")).unwrap();
    assert_eq!(placement.lines().count(), 3);
}

#[test]
fn errors_are_structured() {
    let dir = tempfile::tempdir().unwrap();
    let out = lasercon(&["design", "--config", "does/not/exist.toml", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("exist.toml"));

    let out = lasercon(&["design", "--config", "preset:nonexistent"]);
    assert!(!out.status.success());
    assert!(serde_json::from_slice::<Value>(&out.stderr).is_ok());

    let out = lasercon(&["sweep", "--config", MICRO, "--p-values", "99", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn exported_model_round_trips_through_a_solution_file() {
    let dir = tempfile::tempdir().unwrap();
    let export = dir.path().join("export");
    ok(&["design", "--config", MICRO, "--solver", "export-only", "--out", export.to_str().unwrap()]);
    assert!(!export.join("placement.csv").exists());

    let model = binprog::parse_mps(&fs::read_to_string(export.join("design.mps")).unwrap()).unwrap();
    let sol = binprog::solve_exact(&model, &binprog::SolveLimits::default()).unwrap();
    let sol_path = dir.path().join("design.sol");
    fs::write(&sol_path, binprog::write_solution_string(&model, &sol.assignment)).unwrap();

    let imported = dir.path().join("imported");
    ok(&["design", "--config", MICRO, "--solution", sol_path.to_str().unwrap(), "--out", imported.to_str().unwrap()]);
    let design = json(&imported.join("design.json"));
    assert_eq!(design["status"], "Imported");
    assert!(design["gap"].is_null());
    assert_eq!(design["slots"], serde_json::json!([2, 7]));

    // An infeasible assignment is refused.
    fs::write(&sol_path, binprog::write_solution_string(&model, &vec![true; model.num_vars()])).unwrap();
    let out = lasercon(&["design", "--config", MICRO, "--solution", sol_path.to_str().unwrap(), "--out", imported.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn empty_placement_earns_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let placement = dir.path().join("empty.csv");
    fs::write(&placement, "id,sma_km,ecc,inc_deg,raan_deg,argp_deg,anomaly_deg\n").unwrap();
    let out = dir.path().join("ops");
    ok(&["schedule", "--config", MICRO, "--placement", placement.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(json(&out.join("metrics.json"))["v"].as_f64(), Some(0.0));
    let timeline = fs::read_to_string(out.join("timeline.csv")).unwrap();
    assert!(timeline.starts_with("step,cum_engagements,cum_deorbits"));
}

#[test]
fn coverage_grows_with_platform_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["sweep", "--config", MICRO, "--p-values", "0,1,2,3", "--threads", "1", "--out", dir.path().to_str().unwrap()]);
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let pi: Vec<f64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(pi.len(), 4);
    assert!(pi.windows(2).all(|w| w[1] >= w[0]), "{pi:?}");
}
