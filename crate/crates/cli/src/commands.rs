//! One function per subcommand. Each returns the JSON report and whether an
//! inequality violation was observed.

use std::path::Path;

use anyhow::{bail, Result};
use coniso_core::abp::{contact_set, solve_neumann, verify_chain, AbpCertificate, NeumannSolution};
use coniso_core::cone::ConvexCone;
use coniso_core::measure::quotient;
use coniso_core::optimize::{minimize_quotient, multi_start, scan_critical_angle, AngleScan, ScanOptions};
use coniso_core::weight::{check_concavity, concavity_pairwise, ConcavityCheck, HomogeneousWeight};
use serde_json::{json, Map, Value};

use crate::config::{write_profile, ExperimentConfig};
use crate::report::{append_csv, cell, num, nums};

/// A finished command: its report and whether it found a violation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub violation: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.violation {
            2
        } else {
            0
        }
    }
}

/// Seed of the concavity gate run alongside other commands.
const GATE_SEED: u64 = 0x5eed;

fn describe_weight(w: &HomogeneousWeight<f64>) -> String {
    format!("{:?}", w.kind())
}

fn describe_cone(c: &ConvexCone<f64>) -> String {
    format!("{:?}", c.kind())
}

/// How to read a violation: a bug signal when `w^{1/α}` passed the
/// concavity gate, the expected finding otherwise.
fn label(violation: bool, concave: bool) -> &'static str {
    match (violation, concave) {
        (false, _) => "none",
        (true, true) => "unexpected: the weight passes the concavity gate",
        (true, false) => "expected: w^(1/alpha) is not concave",
    }
}

fn concave(cfg: &ExperimentConfig, cone: &ConvexCone<f64>, w: &HomogeneousWeight<f64>) -> bool {
    check_concavity(w, cone, cfg.tolerances.concavity_samples, GATE_SEED).passed()
}

pub fn check_weight(cfg: &ExperimentConfig) -> Result<Outcome> {
    let cone = cfg.cone()?;
    let w = cfg.weight()?;
    w.check_compatible(&cone)?;
    let samples = cfg.tolerances.concavity_samples;
    let check = check_concavity(&w, &cone, samples, GATE_SEED);
    let mut report = Map::new();
    report.insert("command".into(), json!("check-weight"));
    report.insert("cone".into(), json!(describe_cone(&cone)));
    report.insert("weight".into(), json!(describe_weight(&w)));
    report.insert("alpha".into(), num(w.degree()));
    report.insert("D".into(), num(w.effective_dimension()));
    report.insert("samples".into(), json!(samples));
    match &check {
        ConcavityCheck::Pass { .. } => {
            report.insert("concavity".into(), json!("pass"));
            report.insert("witness".into(), Value::Null);
        }
        ConcavityCheck::Fail { x, y, defect } => {
            report.insert("concavity".into(), json!("fail"));
            let pairwise = concavity_pairwise(&w, x, y)?;
            report.insert(
                "witness".into(),
                json!({ "x": nums(x), "y": nums(y), "defect": num(*defect), "pairwise_slack": num(pairwise) }),
            );
        }
    }
    Ok(Outcome {
        report: Value::Object(report),
        violation: false,
    })
}

pub fn measure(cfg: &ExperimentConfig, csv: Option<&Path>) -> Result<Outcome> {
    let cone = cfg.cone()?;
    let w = cfg.weight()?;
    let grid = cfg.grid(&cone)?;
    let dom = cfg.star_domain(&cone, &grid)?;
    let r = quotient(&dom, &w)?;
    let violation = r.deficit < -cfg.tolerances.deficit;
    let concave = concave(cfg, &cone, &w);
    if let Some(path) = csv.or(cfg.output.csv.as_deref()) {
        let row = std::iter::once(r.resolution.to_string())
            .chain([r.perimeter, r.volume, r.quotient, r.deficit].map(cell))
            .collect::<Vec<_>>()
            .join(",");
        append_csv(path, "N,P,m,Q,deficit", &[row])?;
    }
    let report = json!({
        "command": "measure",
        "P": num(r.perimeter),
        "m": num(r.volume),
        "D": num(r.effective_dimension),
        "Q": num(r.quotient),
        "Q_ball": num(r.ball_quotient),
        "deficit": num(r.deficit),
        "N": r.resolution,
        "violation": label(violation, concave),
    });
    Ok(Outcome { report, violation })
}

pub fn optimize(cfg: &ExperimentConfig, profile: Option<&Path>, csv: Option<&Path>) -> Result<Outcome> {
    let cone = cfg.cone()?;
    let w = cfg.weight()?;
    let grid = cfg.grid(&cone)?;
    let opts = cfg.optimize.options();
    let (runs, best) = if opts.starts == 0 {
        let init = cfg.star_domain(&cone, &grid)?;
        (vec![minimize_quotient(&cone, &w, &init, &opts)?], 0)
    } else {
        let ms = multi_start(&cone, &grid, &w, &opts)?;
        let best = ms.best;
        (ms.runs, best)
    };
    let r = &runs[best];
    let violation = r.deficit_vs_ball < -cfg.tolerances.deficit;
    let concave = concave(cfg, &cone, &w);
    if let Some(path) = profile.or(cfg.output.profile.as_deref()) {
        write_profile(path, r.best_profile.radial())?;
    }
    if let Some(path) = csv.or(cfg.output.csv.as_deref()) {
        let rows: Vec<String> = r.history.iter().map(|(i, q)| format!("{i},{}", cell(*q))).collect();
        append_csv(path, "iteration,Q", &rows)?;
    }
    let starts: Vec<Value> = runs
        .iter()
        .map(|run| {
            json!({
                "deficit": num(run.deficit_vs_ball),
                "mode_amplitude": num(run.mode_amplitude()),
                "iterations": run.iterations,
                "converged": run.converged,
            })
        })
        .collect();
    let report = json!({
        "command": "optimize",
        "method": r.method.as_str(),
        "best_Q": num(r.best_q),
        "initial_Q": num(r.initial_q),
        "ball_Q": num(r.ball_q),
        "deficit_vs_ball": num(r.deficit_vs_ball),
        "coefficients": nums(&r.coefficients),
        "mode_amplitude": num(r.mode_amplitude()),
        "iterations": r.iterations,
        "converged": r.converged,
        "best_start": best,
        "starts": starts,
        "N": grid.resolution(),
        "violation": label(violation, concave),
    });
    Ok(Outcome { report, violation })
}

pub fn scan_report(scan: &AngleScan<f64>) -> Value {
    let transition = |t: &Option<coniso_core::optimize::Transition<f64>>| match t {
        Some(t) => json!({ "lo": num(t.lo), "hi": num(t.hi), "width": num(t.width()) }),
        None => Value::Null,
    };
    let samples: Vec<Value> = scan
        .samples
        .iter()
        .map(|s| {
            let competitor = s.competitor.as_ref().map_or(Value::Null, |c| {
                json!({
                    "N": c.resolution,
                    "Q": num(c.quotient),
                    "deficit": num(c.deficit),
                    "radii": nums(&c.radii),
                })
            });
            json!({
                "beta": num(s.beta),
                "deficit_opt": num(s.deficit),
                "c2": nums(&s.c2),
                "c2_min": num(s.c2_min),
                "c2_noisy": s.c2_noisy,
                "optimizer_class": s.optimizer_class.as_str(),
                "c2_class": s.c2_class.as_str(),
                "refined": s.refined,
                "competitor": competitor,
            })
        })
        .collect();
    json!({
        "alpha": num(scan.alpha),
        "samples": samples,
        "optimizer_transition": transition(&scan.optimizer_transition),
        "c2_transition": transition(&scan.c2_transition),
        "bracket": transition(&scan.bracket),
        "beta0_estimate": scan.estimate().map_or(Value::Null, num),
        "single_crossing": scan.single_crossing,
        "disagreements": nums(&scan.disagreements),
        "pass": scan.pass,
    })
}

pub fn scan_csv_rows(scan: &AngleScan<f64>) -> Vec<String> {
    scan.samples
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{}",
                cell(s.beta),
                cell(s.deficit),
                cell(s.c2_min),
                s.optimizer_class.as_str()
            )
        })
        .collect()
}

pub const SCAN_CSV_HEADER: &str = "beta,deficit_opt,c2_min,class";

/// Angles `beta_min + i (beta_max - beta_min) / (steps - 1)`.
pub fn beta_grid(beta_min: f64, beta_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        bail!("scan needs at least 2 steps, got {steps}");
    }
    if !(beta_min > 0.0 && beta_max > beta_min && beta_max <= std::f64::consts::PI) {
        bail!("need 0 < beta-min < beta-max ≤ π, got [{beta_min}, {beta_max}]");
    }
    Ok((0..steps)
        .map(|i| beta_min + i as f64 * (beta_max - beta_min) / (steps - 1) as f64)
        .collect())
}

pub fn scan_angle(
    alpha: f64,
    betas: &[f64],
    opts: &ScanOptions<f64>,
    csv: Option<&Path>,
    profiles: Option<&Path>,
) -> Result<Outcome> {
    let scan = scan_critical_angle(alpha, betas, opts)?;
    if let Some(path) = csv {
        append_csv(path, SCAN_CSV_HEADER, &scan_csv_rows(&scan))?;
    }
    if let Some(dir) = profiles {
        std::fs::create_dir_all(dir)?;
        for c in scan.samples.iter().filter_map(|s| s.competitor.as_ref()) {
            write_profile(&dir.join(format!("competitor_beta_{:.6}.txt", c.beta)), &c.radii)?;
        }
    }
    let violation = scan.samples.iter().any(|s| s.competitor.is_some());
    let mut report = scan_report(&scan);
    let obj = report.as_object_mut().expect("scan report is an object");
    obj.insert("command".into(), json!("scan-angle"));
    // |x|^α has w^{1/α} = |x|, which is never concave.
    obj.insert("violation".into(), json!(label(violation, false)));
    Ok(Outcome { report, violation })
}

pub fn certificate_report(cert: &AbpCertificate<f64>, sol: &NeumannSolution<f64>) -> Value {
    let l = &cert.links;
    json!({
        "b": num(cert.b),
        "b_reference": num(cert.b_reference),
        "b_consistency": num(cert.b_consistency),
        "h": num(cert.h),
        "tau_contact": num(cert.tau_contact),
        "tau_chain": num(cert.tau_chain),
        "contact_fraction": num(cert.contact_fraction),
        "coverage_defect": num(cert.coverage.max_defect),
        "coverage_threshold": num(cert.coverage.threshold),
        "coverage_pass": cert.coverage.pass,
        "coverage_boundary_hits": cert.coverage.boundary_hits,
        "coverage_non_contact_hits": cert.coverage.non_contact_hits,
        "checked_nodes": cert.checked_nodes,
        "pointwise_margin": num(cert.pointwise_margin),
        "max_abs_margin": num(cert.max_abs_margin),
        "links": {
            "hessian": num(l.hessian),
            "amgm": num(l.amgm),
            "concavity": num(l.concavity),
            "equation": num(l.equation),
        },
        "broken_links": cert.broken_links,
        "ball_volume": num(cert.ball_volume),
        "area_integral": num(cert.area_integral),
        "amgm_integral": num(cert.amgm_integral),
        "bound": num(cert.bound),
        "integral_slack": num(cert.integral_slack),
        "chain_monotone": cert.chain_monotone,
        "isoperimetric_slack": num(cert.isoperimetric_slack),
        "grid": [sol.ns, sol.nt],
        "solver_iterations": sol.iterations,
        "pass": cert.pass,
    })
}

pub fn verify_abp(cfg: &ExperimentConfig, dump: Option<&Path>) -> Result<Outcome> {
    let cone = cfg.cone()?;
    let w = cfg.weight()?;
    let dom = cfg.mapped_domain(&cone)?;
    let sol = solve_neumann(&dom, &w, &cfg.solver_options())?;
    let contact = contact_set(&sol);
    let cert = verify_chain(&sol, &contact, &cone, &w, &cfg.chain_options())?;
    if let Some(path) = dump.or(cfg.output.field.as_deref()) {
        let rows: Vec<String> = (0..sol.len())
            .map(|k| {
                let [x, y] = sol.points[k];
                let [ux, uy] = sol.grad[k];
                format!("{x:e},{y:e},{:e},{ux:e},{uy:e}", sol.u[k])
            })
            .collect();
        let _ = std::fs::remove_file(path);
        append_csv(path, "x,y,u,ux,uy", &rows)?;
    }
    let violation = !cert.pass;
    let concave = concave(cfg, &cone, &w);
    let mut report = certificate_report(&cert, &sol);
    let obj = report.as_object_mut().expect("certificate report is an object");
    obj.insert("command".into(), json!("verify-abp"));
    obj.insert("violation".into(), json!(label(violation, concave)));
    Ok(Outcome { report, violation })
}
