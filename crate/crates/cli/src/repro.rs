//! `repro-all`: every acceptance criterion as a deterministic report.

use std::f64::consts::PI;

use anyhow::Result;
use coniso_core::abp::{
    contact_set, solve_neumann, verify_chain, weighted_amgm, ChainOptions, MappedDomain,
    SolverOptions,
};
use coniso_core::cone::{cap_quadrature, ConvexCone};
use coniso_core::domain::StarDomain;
use coniso_core::measure::{ball_closed_form, ball_reference, quotient};
use coniso_core::optimize::{
    multi_start, random_coefficients, scan_critical_angle, AngleClass, ModeBasis, OptimOptions,
    ScanOptions,
};
use coniso_core::weight::{check_concavity, concavity_pairwise, ConcavityCheck, HomogeneousWeight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::{certificate_report, scan_report};
use crate::report::{num, nums};

/// Quadrature resolution used throughout.
pub const N: usize = 256;

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub details: Value,
}

impl Criterion {
    pub fn to_json(&self) -> Value {
        json!({ "id": self.id, "name": self.name, "pass": self.pass, "details": self.details })
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn quadrant() -> ConvexCone<f64> {
    ConvexCone::orthant(2, &[0, 1]).expect("quadrant")
}

fn xy() -> HomogeneousWeight<f64> {
    HomogeneousWeight::monomial(vec![1.0, 1.0]).expect("xy")
}

/// The three cone/weight pairs of the deficit experiments.
pub fn concave_pairs() -> Vec<(&'static str, ConvexCone<f64>, HomogeneousWeight<f64>)> {
    vec![
        ("quadrant, xy", quadrant(), xy()),
        (
            "half-plane, y",
            ConvexCone::halfspace(2, 1).expect("half-plane"),
            HomogeneousWeight::monomial(vec![0.0, 1.0]).expect("y"),
        ),
        ("sector 2.0, constant", ConvexCone::sector(2.0).expect("sector"), HomogeneousWeight::constant(2)),
    ]
}

/// Random mode profile `c_k ~ U(-0.3, 0.3)/k`, `K = 8`, as a star domain.
fn random_domain(
    cone: &ConvexCone<f64>,
    basis: &ModeBasis<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<StarDomain<f64>> {
    let c = random_coefficients(basis, rng, 0.3);
    let (radii, _) = basis.profile(&c);
    Ok(StarDomain::from_profile(cone, basis.grid(), radii)?)
}

pub fn ball_oracle(seed: u64) -> Result<Criterion> {
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut worst = 0.0f64;
    for case in 0..10 {
        let n = 2 + case % 2;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let cone = ConvexCone::orthant(n, &(0..n).collect::<Vec<_>>())?;
        let w = HomogeneousWeight::monomial(a.clone())?;
        let grid = cap_quadrature(&cone, N)?;
        let quad = ball_reference(&cone, &grid, &w)?;
        let exact = ball_closed_form(&cone, &w)?;
        let err = rel(quad.perimeter, exact.perimeter).max(rel(quad.volume, exact.volume));
        worst = worst.max(err);
        cases.push(json!({
            "n": n,
            "A": nums(&a),
            "P": num(quad.perimeter),
            "m": num(quad.volume),
            "P_closed_form": num(exact.perimeter),
            "rel_error": num(err),
        }));
    }
    let grid = cap_quadrature(&quadrant(), N)?;
    let b = ball_reference(&quadrant(), &grid, &xy())?;
    let worked = [
        (b.perimeter - 0.5).abs() / 0.5,
        (b.volume - 0.125).abs() / 0.125,
        rel(b.quotient, 2f64.powf(1.25)),
    ];
    let worked_err = worked.iter().copied().fold(0.0, f64::max);
    Ok(Criterion {
        id: 1,
        name: "closed-form ball oracle",
        pass: worst <= tol && worked_err <= tol,
        details: json!({
            "N": N,
            "tolerance": num(tol),
            "cases": cases,
            "max_rel_error": num(worst),
            "quadrant_xy": { "P": num(b.perimeter), "m": num(b.volume), "Q": num(b.quotient), "rel_error": num(worked_err) },
        }),
    })
}

pub fn deficit_nonnegative(seed: u64) -> Result<Criterion> {
    let tol = 1e-6;
    let mut pairs = Vec::new();
    let mut pass = true;
    for (k, (name, cone, w)) in concave_pairs().into_iter().enumerate() {
        let grid = cap_quadrature(&cone, N)?;
        let basis = ModeBasis::new(&cone, &grid, &w, 8)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut min = f64::INFINITY;
        for _ in 0..200 {
            let dom = random_domain(&cone, &basis, &mut rng)?;
            min = min.min(quotient(&dom, &w)?.deficit);
        }
        pass &= min >= -tol;
        pairs.push(json!({ "pair": name, "domains": 200, "min_deficit": num(min) }));
    }
    Ok(Criterion {
        id: 2,
        name: "deficit is nonnegative for concave weights",
        pass,
        details: json!({ "N": N, "tolerance": num(-tol), "pairs": pairs }),
    })
}

pub fn equality_case(seed: u64) -> Result<Criterion> {
    let tol = 1e-10;
    let mut pairs = Vec::new();
    let mut pass = true;
    for (k, (name, cone, w)) in concave_pairs().into_iter().enumerate() {
        let grid = cap_quadrature(&cone, N)?;
        let ball = StarDomain::ball(&cone, &grid, 1.0)?;
        let ball_deficit = quotient(&ball, &w)?.deficit;
        let basis = ModeBasis::new(&cone, &grid, &w, 8)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let dom = random_domain(&cone, &basis, &mut rng)?;
        let mut scale_err = 0.0f64;
        for d in [&ball, &dom] {
            let q = quotient(d, &w)?.quotient;
            for t in [0.5, 2.0, 7.0] {
                scale_err = scale_err.max(rel(quotient(&d.scaled(t)?, &w)?.quotient, q));
            }
        }
        pass &= ball_deficit.abs() <= tol && scale_err <= tol;
        pairs.push(json!({
            "pair": name,
            "ball_deficit": num(ball_deficit),
            "scale_rel_error": num(scale_err),
        }));
    }
    Ok(Criterion {
        id: 3,
        name: "equality case and scale invariance",
        pass,
        details: json!({ "N": N, "tolerance": num(tol), "scales": [0.5, 2.0, 7.0], "pairs": pairs }),
    })
}

pub fn constant_weight_recovery(seed: u64) -> Result<Criterion> {
    let (deficit_tol, amp_tol) = (1e-4, 1e-2);
    let w = HomogeneousWeight::constant(2);
    let opts = OptimOptions {
        seed,
        ..OptimOptions::default()
    };
    let mut angles = Vec::new();
    let mut pass = true;
    for beta in [1.0, 2.0, PI] {
        let cone = ConvexCone::sector(beta)?;
        let grid = cap_quadrature(&cone, N)?;
        let ms = multi_start(&cone, &grid, &w, &opts)?;
        let max_deficit = ms.runs.iter().map(|r| r.deficit_vs_ball).fold(f64::NEG_INFINITY, f64::max);
        let max_amp = ms.runs.iter().map(|r| r.mode_amplitude()).fold(0.0, f64::max);
        let ok = max_deficit <= deficit_tol && max_amp <= amp_tol;
        pass &= ok;
        angles.push(json!({
            "beta": num(beta),
            "starts": ms.runs.len(),
            "max_deficit": num(max_deficit),
            "max_mode_amplitude": num(max_amp),
            "best_deficit": num(ms.best().deficit_vs_ball),
            "best_mode_amplitude": num(ms.best().mode_amplitude()),
            "pass": ok,
        }));
    }
    Ok(Criterion {
        id: 4,
        name: "constant weight recovers the ball",
        pass,
        details: json!({
            "N": N,
            "deficit_tolerance": num(deficit_tol),
            "amplitude_tolerance": num(amp_tol),
            "angles": angles,
        }),
    })
}

/// The coarse angle grid of the radial-weight scan.
pub fn scan_betas() -> Vec<f64> {
    (0..=14).map(|i| 0.2 + i as f64 * (3.1 - 0.2) / 14.0).collect()
}

pub fn radial_dichotomy(seed: u64) -> Result<Criterion> {
    let alpha = 1.0;
    let mut opts = ScanOptions::<f64>::default();
    opts.optim.seed = seed;
    let scan = scan_critical_angle(alpha, &scan_betas(), &opts)?;
    let w = HomogeneousWeight::radial_power(2, alpha)?;
    // Re-measure each competitor from its radii alone.
    let mut remeasured = Vec::new();
    let mut competitors_ok = true;
    for c in scan.samples.iter().filter_map(|s| s.competitor.as_ref()) {
        let cone = ConvexCone::sector(c.beta)?;
        let grid = cap_quadrature(&cone, c.resolution)?;
        let dom = StarDomain::from_profile(&cone, &grid, c.radii.clone())?;
        let d = quotient(&dom, &w)?.deficit;
        competitors_ok &= d < -opts.margin;
        remeasured.push(json!({ "beta": num(c.beta), "deficit": num(d) }));
    }
    let first = scan.samples.first();
    let last = scan.samples.last();
    let small_ok = first.is_some_and(|s| {
        s.optimizer_class == AngleClass::BallOptimal && s.c2_class == AngleClass::BallOptimal
    });
    let large_ok = last.is_some_and(|s| {
        s.optimizer_class == AngleClass::BallBeaten && s.c2_class == AngleClass::BallBeaten
    });
    let bracket_ok = scan.bracket.as_ref().is_some_and(|b| b.width() <= opts.max_bracket);
    let pass = scan.pass && small_ok && large_ok && bracket_ok && competitors_ok && !remeasured.is_empty();
    let mut details = scan_report(&scan);
    // Radii are reproduced in `remeasured`; keep the report compact.
    if let Some(samples) = details.get_mut("samples").and_then(Value::as_array_mut) {
        for s in samples {
            if let Some(c) = s.get_mut("competitor").and_then(Value::as_object_mut) {
                c.remove("radii");
            }
        }
    }
    let obj = details.as_object_mut().expect("scan report is an object");
    obj.insert("margin".into(), num(opts.margin));
    obj.insert("max_bracket".into(), num(opts.max_bracket));
    obj.insert("remeasured_competitors".into(), Value::Array(remeasured));
    Ok(Criterion {
        id: 5,
        name: "radial weight dichotomy",
        pass,
        details,
    })
}

pub fn concavity_gate(seed: u64) -> Result<Criterion> {
    let samples = 100_000;
    let pairwise_tol = 1e-8;
    let mut monomials = Vec::new();
    let mut pass = true;
    let cases: Vec<(ConvexCone<f64>, Vec<f64>)> = vec![
        (quadrant(), vec![1.0, 1.0]),
        (quadrant(), vec![0.5, 2.0]),
        (quadrant(), vec![3.0, 0.25]),
        (ConvexCone::halfspace(2, 1)?, vec![0.0, 1.0]),
        (ConvexCone::orthant(3, &[0, 1, 2])?, vec![1.0, 1.0, 1.0]),
    ];
    for (k, (cone, a)) in cases.into_iter().enumerate() {
        let w = HomogeneousWeight::monomial(a.clone())?;
        let gate = check_concavity(&w, &cone, samples, seed.wrapping_add(k as u64)).passed();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + k as u64));
        let mut min_slack = f64::INFINITY;
        for _ in 0..samples {
            let x = cone.sample(&mut rng, 2.0);
            let p = cone.sample(&mut rng, 2.0);
            min_slack = min_slack.min(concavity_pairwise(&w, &x, &p)?);
        }
        pass &= gate && min_slack >= -pairwise_tol;
        monomials.push(json!({ "A": nums(&a), "gate": gate, "min_pairwise_slack": num(min_slack) }));
    }
    let mut radial = Vec::new();
    for (k, alpha) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let w = HomogeneousWeight::radial_power(2, alpha)?;
        let entry = match check_concavity(&w, &quadrant(), samples, seed.wrapping_add(2000 + k as u64)) {
            ConcavityCheck::Fail { x, y, defect } => {
                let slack = concavity_pairwise(&w, &x, &y)?;
                pass &= slack < 0.0;
                json!({
                    "alpha": num(alpha),
                    "gate": false,
                    "witness": { "x": nums(&x), "y": nums(&y), "defect": num(defect) },
                    "pairwise_slack_at_witness": num(slack),
                })
            }
            ConcavityCheck::Pass { .. } => {
                pass = false;
                json!({ "alpha": num(alpha), "gate": true })
            }
        };
        radial.push(entry);
    }
    Ok(Criterion {
        id: 6,
        name: "concavity gate",
        pass,
        details: json!({
            "samples": samples,
            "pairwise_tolerance": num(-pairwise_tol),
            "monomial": monomials,
            "radial": radial,
        }),
    })
}

pub fn weighted_amgm_draws(seed: u64) -> Result<Criterion> {
    let draws = 1_000_000;
    let tol = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..draws {
        let y = 10f64.powf(rng.random_range(-3.0..3.0));
        let z = 10f64.powf(rng.random_range(-3.0..3.0));
        let alpha = rng.random_range(0.0..6.0);
        let n = rng.random_range(1..4usize);
        let d = alpha + n as f64;
        let rhs = ((alpha * y + n as f64 * z) / d).powf(d);
        worst = worst.min(weighted_amgm(y, z, alpha, n) / rhs.max(1.0));
    }
    Ok(Criterion {
        id: 7,
        name: "weighted AM-GM",
        pass: worst >= -tol,
        details: json!({ "draws": draws, "tolerance": num(-tol), "min_scaled_slack": num(worst) }),
    })
}

pub fn solver_convergence() -> Result<Criterion> {
    let (center, rho) = ([1.2, 0.9], 0.5);
    let cone = quadrant();
    let one = HomogeneousWeight::constant(2);
    let disk = MappedDomain::disk(&cone, center, rho)?;
    let mut levels = Vec::new();
    let mut errors = Vec::new();
    let mut pass = true;
    for n in [64, 128, 256] {
        let sol = solve_neumann(&disk, &one, &SolverOptions::with_radial(n))?;
        let exact: Vec<f64> = sol
            .points
            .iter()
            .map(|p| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)) / (2.0 * rho))
            .collect();
        let total: f64 = sol.area.iter().sum();
        let mean = exact.iter().zip(&sol.area).map(|(e, a)| e * a).sum::<f64>() / total;
        let err = sol.u.iter().zip(&exact).map(|(u, e)| (u - e + mean).abs()).fold(0.0, f64::max);
        pass &= err <= sol.h * sol.h;
        errors.push(err);
        levels.push(json!({ "N": n, "h": num(sol.h), "linf_error": num(err), "b": num(sol.b) }));
    }
    // O(h²): each halving cuts the error by ≥ 3 unless it is at round-off.
    for k in 1..errors.len() {
        pass &= errors[k - 1] / errors[k] >= 3.0 || errors[k] < 1e-8;
    }
    let g = cap_quadrature(&cone, N)?;
    let ball = StarDomain::ball(&cone, &g, 1.0)?;
    let domains = [
        ("disk, constant", disk.clone(), one.clone()),
        ("off-center disk, xy", MappedDomain::disk(&cone, [1.0, 1.0], 0.5)?, xy()),
        ("cone ball, xy", MappedDomain::star(&ball)?, xy()),
        ("perturbed cone ball, xy", MappedDomain::star(&ball.perturb(2, 0.2)?)?, xy()),
    ];
    let mut consistency = Vec::new();
    for (name, dom, w) in domains {
        let sol = solve_neumann(&dom, &w, &SolverOptions::with_radial(128))?;
        let c = sol.b_consistency();
        pass &= c <= 0.01;
        consistency.push(json!({ "domain": name, "b": num(sol.b), "P_over_m": num(sol.reference_b()), "b_consistency": num(c) }));
    }
    Ok(Criterion {
        id: 8,
        name: "Neumann solver accuracy",
        pass,
        details: json!({
            "disk": { "center": nums(&center), "radius": num(rho), "levels": levels },
            "b_consistency_tolerance": 0.01,
            "b_consistency": consistency,
        }),
    })
}

pub fn abp_certificate() -> Result<Criterion> {
    let cone = quadrant();
    let w = xy();
    let opts = SolverOptions::with_radial(128);
    let chain = ChainOptions::default();

    let off = MappedDomain::disk(&cone, [1.0, 1.0], 0.5)?;
    let sol = solve_neumann(&off, &w, &opts)?;
    let cert = verify_chain(&sol, &contact_set(&sol), &cone, &w, &chain)?;
    let off_ok = cert.pass
        && cert.pointwise_margin >= -cert.tau_chain
        && cert.integral_slack >= 0.0
        && cert.coverage.max_defect <= cert.coverage.threshold;
    let off_report = certificate_report(&cert, &sol);

    let g = cap_quadrature(&cone, N)?;
    let ball = MappedDomain::star(&StarDomain::ball(&cone, &g, 1.0)?)?;
    let sol = solve_neumann(&ball, &w, &opts)?;
    let cert = verify_chain(&sol, &contact_set(&sol), &cone, &w, &chain)?;
    let ball_ok = cert.pass
        && cert.max_abs_margin <= cert.tau_chain
        && cert.integral_slack.abs() <= cert.tau_chain;
    let ball_report = certificate_report(&cert, &sol);

    Ok(Criterion {
        id: 9,
        name: "ABP certificate",
        pass: off_ok && ball_ok,
        details: json!({
            "off_center_disk": { "center": [1.0, 1.0], "radius": 0.5, "pass": off_ok, "certificate": off_report },
            "cone_ball": { "pass": ball_ok, "certificate": ball_report },
        }),
    })
}

/// Runs criterion `id` (1 to 9).
pub fn run_criterion(id: u32, seed: u64) -> Result<Criterion> {
    match id {
        1 => ball_oracle(seed),
        2 => deficit_nonnegative(seed),
        3 => equality_case(seed),
        4 => constant_weight_recovery(seed),
        5 => radial_dichotomy(seed),
        6 => concavity_gate(seed),
        7 => weighted_amgm_draws(seed),
        8 => solver_convergence(),
        9 => abp_certificate(),
        _ => anyhow::bail!("no criterion {id}"),
    }
}

pub const CRITERIA: std::ops::RangeInclusive<u32> = 1..=9;

#[derive(Debug, Clone)]
pub struct ReproReport {
    pub seed: u64,
    pub criteria: Vec<Criterion>,
}

impl ReproReport {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": "repro-all",
            "seed": self.seed,
            "criteria": self.criteria.iter().map(Criterion::to_json).collect::<Vec<_>>(),
            "pass": self.pass(),
        })
    }
}

pub fn run_all(seed: u64) -> Result<ReproReport> {
    let criteria = CRITERIA.map(|id| run_criterion(id, seed)).collect::<Result<Vec<_>>>()?;
    Ok(ReproReport { seed, criteria })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 3, 7] {
            let c = run_criterion(id, 0).unwrap();
            assert!(c.pass, "criterion {id}: {}", c.details);
        }
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(11, 0).is_err());
    }

    #[test]
    fn scan_grid_spans_the_range() {
        let b = scan_betas();
        assert_eq!(b.len(), 15);
        assert!((b[0] - 0.2).abs() < 1e-15 && (b[14] - 3.1).abs() < 1e-12);
        assert!(b.iter().all(|&x| x > 0.0 && x < PI));
    }
}
