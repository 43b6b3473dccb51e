//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1 to 9 come from a `repro-all` run of the release binary and are
//! then re-checked here against independent references where one exists.
//! Criterion 10 runs `repro-all` a second time and compares bytes.
//!
//! A criterion listed in `KNOWN_FAILURES` still prints FAIL. The target only
//! tolerates it when the failure matches the recorded analysis exactly.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use coniso_core::cone::{cap_quadrature, ConvexCone};
use coniso_core::optimize::{multi_start, OptimOptions};
use coniso_core::weight::HomogeneousWeight;
use serde_json::Value;
use statrs::function::gamma::gamma;

const SEED: u64 = 0;

/// Criteria whose failure is explained and must not be papered over.
const KNOWN_FAILURES: &[u32] = &[4];

struct Line {
    id: u32,
    pass: bool,
    summary: String,
}

fn repro(out: &Path) -> (i32, String, f64) {
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_coniso"))
        .args(["repro-all", "--seed", &SEED.to_string(), "--out"])
        .arg(out)
        .env("CONISO_THREADS", "1")
        .stdout(std::process::Stdio::null())
        .status()
        .expect("coniso runs");
    let text = std::fs::read_to_string(out).expect("report written");
    (status.code().unwrap_or(-1), text, t.elapsed().as_secs_f64())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn criterion(report: &Value, id: u32) -> &Value {
    report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == id)
        .unwrap_or_else(|| panic!("criterion {id} missing"))
}

/// Gamma closed form recomputed with an independent Gamma implementation.
fn check_1(c: &Value) -> Line {
    let d = &c["details"];
    let mut worst = 0.0f64;
    for case in d["cases"].as_array().unwrap() {
        let a: Vec<f64> = case["A"].as_array().unwrap().iter().map(f).collect();
        let n = a.len() as i32;
        let dim = n as f64 + a.iter().sum::<f64>();
        let p = a.iter().map(|&ai| gamma((ai + 1.0) / 2.0)).product::<f64>()
            / (2f64.powi(n - 1) * gamma(dim / 2.0));
        worst = worst.max((f(&case["P"]) - p).abs() / p);
        worst = worst.max((f(&case["m"]) - p / dim).abs() / (p / dim));
    }
    let w = &d["quadrant_xy"];
    let worked = (f(&w["P"]) - 0.5).abs() < 1e-11
        && (f(&w["m"]) - 0.125).abs() < 1e-11
        && (f(&w["Q"]) - 2f64.powf(1.25)).abs() < 1e-10;
    // Reported values carry 12 significant digits.
    let pass = c["pass"] == true && worst <= 1e-9 && worked;
    Line {
        id: 1,
        pass,
        summary: format!(
            "ball oracle: max rel err {:.2e} (library), {worst:.2e} (statrs); quadrant xy P=1/2 m=1/8 Q=2^(5/4) [tol 1e-9]",
            f(&d["max_rel_error"])
        ),
    }
}

fn check_2(c: &Value) -> Line {
    let pairs = c["details"]["pairs"].as_array().unwrap();
    let min = pairs.iter().map(|p| f(&p["min_deficit"])).fold(f64::INFINITY, f64::min);
    let count: u64 = pairs.iter().map(|p| p["domains"].as_u64().unwrap()).sum();
    Line {
        id: 2,
        pass: c["pass"] == true && min >= -1e-6 && count == 600,
        summary: format!("{count} random domains over 3 pairs: min deficit {min:.3e} [tol -1e-6]"),
    }
}

fn check_3(c: &Value) -> Line {
    let pairs = c["details"]["pairs"].as_array().unwrap();
    let ball = pairs.iter().map(|p| f(&p["ball_deficit"]).abs()).fold(0.0, f64::max);
    let scale = pairs.iter().map(|p| f(&p["scale_rel_error"])).fold(0.0, f64::max);
    Line {
        id: 3,
        pass: c["pass"] == true && ball <= 1e-10 && scale <= 1e-10,
        summary: format!("|deficit(ball)| ≤ {ball:.2e}, scale error ≤ {scale:.2e} for t ∈ {{0.5, 2, 7}} [tol 1e-10]"),
    }
}

/// On the half-plane every translate of the half-disk along the boundary
/// line has the same quotient. Checks that each optimizer run at β = π
/// returned such a translate, `R(θ) = t cos θ + √(1 - t² sin² θ)`.
fn half_plane_translates() -> (bool, f64, f64) {
    let cone = ConvexCone::sector(PI).unwrap();
    let grid = cap_quadrature(&cone, 256).unwrap();
    let w = HomogeneousWeight::constant(2);
    let opts = OptimOptions { seed: SEED, ..OptimOptions::default() };
    let ms = multi_start(&cone, &grid, &w, &opts).unwrap();
    let mut worst_fit = 0.0f64;
    let mut max_shift = 0.0f64;
    for run in &ms.runs {
        let dom = &run.best_profile;
        let t = 0.5 * (dom.radius_at(0.0) - dom.radius_at(PI));
        max_shift = max_shift.max(t.abs());
        for j in 0..grid.len() {
            let th = grid.theta(j);
            let model = t * th.cos() + (1.0 - t * t * th.sin().powi(2)).sqrt();
            worst_fit = worst_fit.max((dom.radial()[j] - model).abs());
        }
    }
    (worst_fit < 1e-6, worst_fit, max_shift)
}

fn check_4(c: &Value) -> (Line, bool) {
    let angles = c["details"]["angles"].as_array().unwrap();
    let mut parts = Vec::new();
    let mut small_ok = true;
    let mut pi_deficit_ok = false;
    let mut pi_amp = 0.0;
    for a in angles {
        let beta = f(&a["beta"]);
        let (d, amp) = (f(&a["max_deficit"]), f(&a["max_mode_amplitude"]));
        parts.push(format!("β={beta:.4}: deficit {d:.1e} amp {amp:.1e}"));
        if (beta - PI).abs() < 1e-9 {
            pi_deficit_ok = d <= 1e-4;
            pi_amp = amp;
        } else {
            small_ok &= a["pass"] == true && d <= 1e-4 && amp <= 1e-2;
        }
    }
    let pass = c["pass"] == true && small_ok && pi_amp <= 1e-2;
    let (translates, fit, shift) = half_plane_translates();
    let explained = !pass && small_ok && pi_deficit_ok && pi_amp > 1e-2 && translates;
    let mut summary = format!("{} [tol deficit 1e-4, amplitude 1e-2]", parts.join("; "));
    if explained {
        summary.push_str(&format!(
            " | known: at β=π the optimizer returns translated half-disks (|t| ≤ {shift:.3}, fit {fit:.1e}), a zero mode of the half-plane"
        ));
    }
    (Line { id: 4, pass, summary }, explained)
}

fn check_5(c: &Value) -> Line {
    let d = &c["details"];
    let samples = d["samples"].as_array().unwrap();
    let first = &samples[0];
    let last = &samples[samples.len() - 1];
    let width = f(&d["bracket"]["width"]);
    let remeasured = d["remeasured_competitors"].as_array().unwrap();
    let competitors_ok = !remeasured.is_empty() && remeasured.iter().all(|r| f(&r["deficit"]) < -1e-4);
    let pass = c["pass"] == true
        && first["optimizer_class"] == "ball-optimal"
        && last["optimizer_class"] == "ball-beaten"
        && width <= 1e-2
        && d["disagreements"].as_array().unwrap().is_empty()
        && competitors_ok;
    Line {
        id: 5,
        pass,
        summary: format!(
            "β0 ∈ [{:.4}, {:.4}] (width {width:.4}); β={:.2} ball-optimal, β={:.2} ball-beaten (deficit {:.2e}); {} competitors re-measured [margin 1e-4, width ≤ 1e-2]",
            f(&d["bracket"]["lo"]),
            f(&d["bracket"]["hi"]),
            f(&first["beta"]),
            f(&last["beta"]),
            f(&last["deficit_opt"]),
            remeasured.len()
        ),
    }
}

fn check_6(c: &Value) -> Line {
    let d = &c["details"];
    let mono = d["monomial"].as_array().unwrap();
    let radial = d["radial"].as_array().unwrap();
    let min_slack = mono.iter().map(|m| f(&m["min_pairwise_slack"])).fold(f64::INFINITY, f64::min);
    let gates = mono.iter().all(|m| m["gate"] == true);
    let witnesses = radial.iter().all(|r| r["gate"] == false && f(&r["pairwise_slack_at_witness"]) < 0.0);
    Line {
        id: 6,
        pass: c["pass"] == true && gates && witnesses && min_slack >= -1e-8,
        summary: format!(
            "{} monomial weights pass (min pairwise slack {min_slack:.2e}); |x|^α fails with witness for α ∈ {{0.5, 1, 2}} [tol -1e-8, 1e5 pairs]",
            mono.len()
        ),
    }
}

fn check_7(c: &Value) -> Line {
    let d = &c["details"];
    let worst = f(&d["min_scaled_slack"]);
    Line {
        id: 7,
        pass: c["pass"] == true && worst >= -1e-12 && d["draws"] == 1_000_000,
        summary: format!("10^6 draws: min slack / max(1, RHS) = {worst:.2e} [tol -1e-12]"),
    }
}

fn check_8(c: &Value) -> Line {
    let d = &c["details"];
    let levels = d["disk"]["levels"].as_array().unwrap();
    let errs: Vec<(f64, f64)> = levels.iter().map(|l| (f(&l["linf_error"]), f(&l["h"]))).collect();
    let within = errs.iter().all(|(e, h)| *e <= h * h);
    let rates = errs.windows(2).all(|p| p[0].0 / p[1].0 >= 3.0 || p[1].0 < 1e-8);
    let cons = d["b_consistency"].as_array().unwrap();
    let worst_b = cons.iter().map(|x| f(&x["b_consistency"])).fold(0.0, f64::max);
    Line {
        id: 8,
        pass: c["pass"] == true && within && rates && worst_b <= 0.01,
        summary: format!(
            "disk L∞ errors {} at N=64/128/256; max |b m - P|/P = {worst_b:.2e} at N=128 [err ≤ h², tol 1%]",
            errs.iter().map(|(e, _)| format!("{e:.1e}")).collect::<Vec<_>>().join("/")
        ),
    }
}

fn check_9(c: &Value) -> Line {
    let d = &c["details"];
    let off = &d["off_center_disk"]["certificate"];
    let ball = &d["cone_ball"]["certificate"];
    let off_ok = off["pass"] == true
        && f(&off["pointwise_margin"]) >= -f(&off["tau_chain"])
        && f(&off["integral_slack"]) >= 0.0
        && f(&off["coverage_defect"]) <= f(&off["coverage_threshold"]);
    let ball_ok = ball["pass"] == true
        && f(&ball["max_abs_margin"]) <= f(&ball["tau_chain"])
        && f(&ball["integral_slack"]).abs() <= f(&ball["tau_chain"]);
    Line {
        id: 9,
        pass: c["pass"] == true && off_ok && ball_ok,
        summary: format!(
            "off-center disk: margin {:.3e}, slack {:.3e}, coverage {:.2e} ≤ {:.2e}; cone ball: |margin| ≤ {:.2e}, slack {:.2e} [τ_chain {:.3e}]",
            f(&off["pointwise_margin"]),
            f(&off["integral_slack"]),
            f(&off["coverage_defect"]),
            f(&off["coverage_threshold"]),
            f(&ball["max_abs_margin"]),
            f(&ball["integral_slack"]),
            f(&ball["tau_chain"]),
        ),
    }
}

fn main() {
    // Honour libtest's filter argument so `cargo test <name>` can skip this.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filter.is_empty() && !filter.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let (code, text, secs) = repro(&dir.path().join("first.json"));
    let report: Value = serde_json::from_str(&text).expect("valid JSON");
    println!("repro-all finished in {secs:.1} s with exit code {code}");

    let mut lines = vec![
        check_1(criterion(&report, 1)),
        check_2(criterion(&report, 2)),
        check_3(criterion(&report, 3)),
    ];
    let (line4, explained4) = check_4(criterion(&report, 4));
    lines.push(line4);
    lines.extend([
        check_5(criterion(&report, 5)),
        check_6(criterion(&report, 6)),
        check_7(criterion(&report, 7)),
        check_8(criterion(&report, 8)),
        check_9(criterion(&report, 9)),
    ]);
    let (_, again, _) = repro(&dir.path().join("second.json"));
    lines.push(Line {
        id: 10,
        pass: again == text,
        summary: format!("two repro-all runs with seed {SEED}: {} bytes, identical = {}", text.len(), again == text),
    });

    let mut unexpected = Vec::new();
    for l in &lines {
        println!("criterion {:>2}: {} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.summary);
        let tolerated = l.id == 4 && explained4 && KNOWN_FAILURES.contains(&l.id);
        if !l.pass && !tolerated {
            unexpected.push(l.id);
        }
    }
    let all_pass = lines.iter().all(|l| l.pass);
    let expected_code = if all_pass { 0 } else { 2 };
    if code != expected_code {
        unexpected.push(0);
        println!("repro-all exit code {code}, expected {expected_code}");
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
