use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn coniso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coniso"))
        .args(args)
        .env("CONISO_THREADS", "1")
        .output()
        .expect("coniso runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const QUADRANT_XY: &str = "[cone]\nkind = \"orthant\"\nn = 2\nmask = [1, 2]\n\n[weight]\nkind = \"monomial\"\nA = [1.0, 1.0]\n";

#[test]
fn measure_quadrant_ball() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.toml", QUADRANT_XY);
    let csv = dir.path().join("rows.csv");
    let out = coniso(&["measure", "--config", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["Q"].to_string(), "2.37841423001");
    assert_eq!(r["P"].as_f64(), Some(0.5));
    assert_eq!(r["m"].as_f64(), Some(0.125));
    assert_eq!(r["D"].as_f64(), Some(4.0));
    assert_eq!(r["N"], 256);
    assert_eq!(r["violation"], "none");
    let rows = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines[0], "N,P,m,Q,deficit");
    assert!(lines[1].starts_with("256,0.5,0.125,2.37841423001,"));
}

#[test]
fn json_report_is_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{QUADRANT_XY}\n[domain]\nkind = \"modes\"\ncoeffs = [0.0, 0.2]\n");
    let cfg = write_config(dir.path(), "m.toml", &body);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = coniso(&["measure", "--config", cfg.to_str().unwrap(), "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let r: Value = serde_json::from_slice(&a).unwrap();
    assert!(r["deficit"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_weight_reports_radial_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "r.toml",
        "[cone]\nkind = \"sector\"\nbeta = 2.0\n[weight]\nkind = \"radial\"\nalpha = 1.0\n",
    );
    let out = coniso(&["check-weight", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["concavity"], "fail");
    assert_eq!(r["witness"]["x"].as_array().unwrap().len(), 2);
    assert!(r["witness"]["defect"].as_f64().unwrap() > 0.0);
    assert!(r["witness"]["pairwise_slack"].as_f64().unwrap() < 0.0);

    let cfg = write_config(dir.path(), "q.toml", QUADRANT_XY);
    let r = json(&coniso(&["check-weight", "--config", cfg.to_str().unwrap()]));
    assert_eq!(r["concavity"], "pass");
    assert_eq!(r["witness"], Value::Null);
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &format!("{QUADRANT_XY}\n[grid]\nN = 64\nsmoothing = 2\n"));
    let out = coniso(&["measure", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("smoothing"));

    assert_eq!(coniso(&["measure"]).status.code(), Some(1));
    assert_eq!(coniso(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(coniso(&["measure", "--config", "/nonexistent.toml"]).status.code(), Some(1));
    assert_eq!(coniso(&["--help"]).status.code(), Some(0));

    let out = Command::new(env!("CARGO_BIN_EXE_coniso"))
        .args(["measure", "--config", bad.to_str().unwrap()])
        .env("CONISO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let incompatible = write_config(
        dir.path(),
        "inc.toml",
        "[cone]\nkind = \"sector\"\nbeta = 2.0\n[weight]\nkind = \"monomial\"\nA = [1.0, 1.0]\n",
    );
    assert_eq!(coniso(&["measure", "--config", incompatible.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn optimized_profile_remeasures() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[cone]\nkind = \"sector\"\nbeta = 3.0\n[weight]\nkind = \"radial\"\nalpha = 1.0\n\
                [grid]\nN = 128\n[optimize]\nmodes = 4\nstarts = 2\nmax_iter = 4000\nseed = 3\nmethod = \"nelder-mead\"\ninit_amplitude = 0.3\n";
    let cfg = write_config(dir.path(), "o.toml", body);
    let profile = dir.path().join("best.txt");
    let history = dir.path().join("history.csv");
    let out = coniso(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--profile",
        profile.to_str().unwrap(),
        "--csv",
        history.to_str().unwrap(),
    ]);
    // Past the critical angle the ball is beaten; that is the expected finding.
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert!(r["deficit_vs_ball"].as_f64().unwrap() < -1e-4);
    assert!(r["violation"].as_str().unwrap().starts_with("expected"));
    assert_eq!(r["starts"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(&history).unwrap().starts_with("iteration,Q\n"));

    let measure = "[cone]\nkind = \"sector\"\nbeta = 3.0\n[weight]\nkind = \"radial\"\nalpha = 1.0\n\
                   [grid]\nN = 128\n[domain]\nkind = \"profile-file\"\npath = \"best.txt\"\n";
    let cfg = write_config(dir.path(), "m.toml", measure);
    let out = coniso(&["measure", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let m = json(&out);
    let (a, b) = (r["best_Q"].as_f64().unwrap(), m["Q"].as_f64().unwrap());
    assert!((a - b).abs() / a < 1e-10, "{a} vs {b}");
}

#[test]
fn scan_angle_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let profiles = dir.path().join("profiles");
    let out = coniso(&[
        "scan-angle",
        "--alpha",
        "1",
        "--beta-min",
        "2.9",
        "--beta-max",
        "3.1",
        "--steps",
        "2",
        "--starts",
        "2",
        "--grid",
        "128",
        "--csv",
        csv.to_str().unwrap(),
        "--profiles",
        profiles.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["violation"], "expected: w^(1/alpha) is not concave");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,deficit_opt,c2_min,class");
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",ball-beaten")));
    assert_eq!(std::fs::read_dir(&profiles).unwrap().count(), 2);

    let bad = coniso(&["scan-angle", "--alpha", "1", "--beta-min", "2", "--beta-max", "1", "--steps", "3"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verify_abp_disk_and_field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{QUADRANT_XY}\n[domain]\nkind = \"disk\"\ncenter = [1.0, 1.0]\nradius = 0.5\n[grid]\nradial = 64\n");
    let cfg = write_config(dir.path(), "abp.toml", &body);
    let field = dir.path().join("field.csv");
    let out = coniso(&["verify-abp", "--config", cfg.to_str().unwrap(), "--dump-field", field.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    for key in ["b", "b_consistency", "coverage_boundary_hits", "contact_fraction", "coverage_defect", "pointwise_margin", "integral_slack"] {
        assert!(r[key].is_number(), "{key}");
    }
    assert_eq!(r["pass"], true);
    assert_eq!(r["broken_links"], Value::Array(vec![]));
    assert!((r["b"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    let text = std::fs::read_to_string(&field).unwrap();
    assert!(text.starts_with("x,y,u,ux,uy\n"));
    assert_eq!(text.lines().count(), 1 + 64 * 128);

    // A disk on a star-domain-only command is a configuration error.
    assert_eq!(coniso(&["measure", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn verify_abp_cone_ball() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{QUADRANT_XY}\n[grid]\nradial = 48\n");
    let cfg = write_config(dir.path(), "ball.toml", &body);
    let out = coniso(&["verify-abp", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["contact_fraction"].as_f64(), Some(1.0));
    assert!(r["max_abs_margin"].as_f64().unwrap() <= r["tau_chain"].as_f64().unwrap());
}
