//! Contact set, gradient-image covering and the inequality chain.
//!
//! At a contact node `x` with `p = ∇u(x) ∈ Σ`, put `Y = (w(p)/w(x))^{1/α}`
//! and `Z = Δu/n`. The chain is
//!
//! ```text
//! w(p)/w(x) · det D²u ≤ Y^α Z^n                      (eigenvalues ≥ 0, AM-GM)
//!                     ≤ ((αY + nZ)/D)^D              (weighted AM-GM)
//!                     ≤ ((∇w·p/w + Δu)/D)^D          (concavity of w^{1/α})
//!                     = (b/D)^D                      (the equation)
//! ```
//!
//! and integrating `w(x)·` over the contact set, with the area formula on the
//! left, gives `m(Σ ∩ B_1) ≤ (b/D)^D m(Ω)`.

use rayon::prelude::*;

use super::solver::NeumannSolution;
use crate::error::Result;
use crate::measure::ball_reference_at;
use crate::scalar::Scalar;
use crate::weight::{concavity_pairwise, HomogeneousWeight};
use crate::cone::ConvexCone;

/// `τ_contact = CONTACT_FACTOR · h²`.
pub const CONTACT_FACTOR: f64 = 5.0;
/// `τ_chain = CHAIN_FACTOR · h`.
pub const CHAIN_FACTOR: f64 = 10.0;
/// Coverage defects up to `COVER_KAPPA · h` are accepted.
pub const COVER_KAPPA: f64 = 10.0;
/// Slopes are sampled in `B_{1-η}`.
pub const COVER_ETA: f64 = 0.05;

/// Nodes `x` whose tangent plane lies below `u` at every node, up to
/// `CONTACT_FACTOR · h²`. Exhaustive over node pairs.
pub fn contact_set<T: Scalar>(sol: &NeumannSolution<T>) -> Vec<bool> {
    let tau = T::lit(CONTACT_FACTOR) * sol.h * sol.h;
    let pts = &sol.points;
    let u = &sol.u;
    (0..sol.len())
        .into_par_iter()
        .map(|k| {
            let [x0, x1] = pts[k];
            let [g0, g1] = sol.grad[k];
            let base = u[k] - g0 * x0 - g1 * x1;
            // u(y) - u(x) - g·(y - x) = u(y) - g·y - base
            pts.iter()
                .zip(u)
                .all(|(p, &uy)| uy - g0 * p[0] - g1 * p[1] - base >= -tau)
        })
        .collect()
}

/// Slope coverage statistic.
#[derive(Debug, Clone)]
pub struct Coverage<T> {
    pub samples: usize,
    pub eta: T,
    /// `max |∇u(x_p) - p|` over sampled slopes.
    pub max_defect: T,
    pub worst_slope: [T; 2],
    /// Slopes whose minimizer sits on the free boundary.
    pub boundary_hits: usize,
    /// Slopes whose minimizer is not a contact node.
    pub non_contact_hits: usize,
    /// `COVER_KAPPA · h`.
    pub threshold: T,
    pub pass: bool,
}

/// Quasi-uniform slopes (a sunflower lattice) in `B_{1-η}`, restricted to the
/// angular span for domains whose sides lie on `∂Σ`.
fn slope_samples<T: Scalar>(sol: &NeumannSolution<T>, eta: T, samples: usize) -> Vec<[T; 2]> {
    let (lo, hi) = sol.domain().interval();
    let golden = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let n = T::from_usize_lossy(samples);
    let half = T::lit(0.5);
    (0..samples)
        .map(|i| {
            let fi = T::from_usize_lossy(i) + half;
            let r = (T::one() - eta) * (fi / n).sqrt();
            let frac = (fi * golden).fract();
            let phi = lo + (hi - lo) * frac;
            [r * phi.cos(), r * phi.sin()]
        })
        .collect()
}

/// For each sampled slope `p`, finds `x_p = argmin_y u(y) - p·y` (lowest
/// index on ties) and checks that it is an interior contact node with
/// `|∇u(x_p) - p| ≤ κh`.
pub fn gradient_image_cover<T: Scalar>(
    sol: &NeumannSolution<T>,
    contact: &[bool],
    eta: T,
    samples: usize,
) -> Coverage<T> {
    let slopes = slope_samples(sol, eta, samples);
    let hits: Vec<(usize, T)> = slopes
        .par_iter()
        .map(|p| {
            let mut best = 0;
            let mut best_v = T::infinity();
            for (k, (x, &u)) in sol.points.iter().zip(&sol.u).enumerate() {
                let v = u - p[0] * x[0] - p[1] * x[1];
                if v < best_v {
                    best_v = v;
                    best = k;
                }
            }
            let g = sol.grad[best];
            let d = ((g[0] - p[0]).powi(2) + (g[1] - p[1]).powi(2)).sqrt();
            (best, d)
        })
        .collect();
    let mut max_defect = T::zero();
    let mut worst_slope = [T::zero(), T::zero()];
    let mut boundary_hits = 0;
    let mut non_contact_hits = 0;
    for (p, &(k, d)) in slopes.iter().zip(&hits) {
        if sol.is_outer(k) {
            boundary_hits += 1;
        }
        if !contact[k] {
            non_contact_hits += 1;
        }
        if d > max_defect {
            max_defect = d;
            worst_slope = *p;
        }
    }
    let threshold = T::lit(COVER_KAPPA) * sol.h;
    Coverage {
        samples,
        eta,
        max_defect,
        worst_slope,
        boundary_hits,
        non_contact_hits,
        threshold,
        pass: max_defect <= threshold && boundary_hits == 0 && non_contact_hits == 0,
    }
}

/// `((αY + nZ)/(α+n))^{α+n} - Y^α Z^n`, nonnegative for `Y, Z > 0`.
pub fn weighted_amgm<T: Scalar>(y: T, z: T, alpha: T, n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    let d = alpha + nf;
    ((alpha * y + nf * z) / d).powf(d) - y.powf(alpha) * z.powi(n as i32)
}

/// `Δu + ∇w·∇u/w - b`, the pointwise residual of the equation.
pub fn pointwise_residual<T: Scalar>(
    w: &HomogeneousWeight<T>,
    x: &[T],
    grad: &[T],
    laplacian: T,
    b: T,
) -> Result<T> {
    let gw = w.gradient(x)?;
    let drift = gw.iter().zip(grad).fold(T::zero(), |a, (&g, &p)| a + g * p) / w.evaluate(x);
    Ok(laplacian + drift - b)
}

#[derive(Debug, Clone, Copy)]
pub struct ChainOptions<T> {
    pub eta: T,
    pub samples: usize,
    /// Resolution of the cap quadrature for `m(Σ ∩ B_1)`.
    pub ball_resolution: usize,
}

impl<T: Scalar> Default for ChainOptions<T> {
    fn default() -> Self {
        Self {
            eta: T::lit(COVER_ETA),
            samples: 2000,
            ball_resolution: 256,
        }
    }
}

/// Smallest slack of each link over the checked nodes (`+∞` when vacuous).
#[derive(Debug, Clone, Copy)]
pub struct ChainLinks<T> {
    /// Smallest Hessian eigenvalue; broken below `-τ_contact/h²`.
    pub hessian: T,
    /// Weighted AM-GM slack.
    pub amgm: T,
    /// `∇w·p/w - αY`.
    pub concavity: T,
    /// `b - Δu - ∇w·p/w`.
    pub equation: T,
}

/// The node realizing the pointwise margin.
#[derive(Debug, Clone, Copy)]
pub struct NodeDump<T> {
    pub index: usize,
    pub x: [T; 2],
    pub grad: [T; 2],
    pub laplacian: T,
    pub margin: T,
}

#[derive(Debug, Clone)]
pub struct AbpCertificate<T> {
    pub b: T,
    /// `P(Ω)/m(Ω)` from reference quadrature.
    pub b_reference: T,
    /// `|b m(Ω) - P(Ω)| / P(Ω)`.
    pub b_consistency: T,
    pub h: T,
    pub tau_contact: T,
    pub tau_chain: T,
    pub contact: Vec<bool>,
    pub contact_fraction: T,
    pub coverage: Coverage<T>,
    /// Contact nodes with `∇u ∈ Σ`.
    pub checked_nodes: usize,
    /// `min (b/D)^D - w(∇u)/w(x) (Δu/n)^n` over checked nodes.
    pub pointwise_margin: T,
    pub max_abs_margin: T,
    pub worst_node: Option<NodeDump<T>>,
    pub links: ChainLinks<T>,
    pub broken_links: Vec<&'static str>,
    /// `m(Σ ∩ B_1)`.
    pub ball_volume: T,
    /// `∫ w(∇u) det D²u` over checked nodes.
    pub area_integral: T,
    /// `∫ w(∇u) (Δu/n)^n` over checked nodes.
    pub amgm_integral: T,
    /// `(b/D)^D m(Ω)`.
    pub bound: T,
    /// `bound - m(Σ ∩ B_1)`.
    pub integral_slack: T,
    /// The three integrals increase within `τ_chain`.
    pub chain_monotone: bool,
    /// `P^D/m^{D-1} / (D^D m(Σ ∩ B_1)) - 1` from the reference measures.
    pub isoperimetric_slack: T,
    pub pass: bool,
}

impl<T: Scalar> ChainLinks<T> {
    /// Names of the links below their tolerance, in chain order.
    pub fn broken(&self, hessian_tol: T, tol: T) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.hessian < -hessian_tol {
            out.push("hessian");
        }
        if self.amgm < -tol {
            out.push("amgm");
        }
        if self.concavity < -tol {
            out.push("concavity");
        }
        if !(self.equation >= -tol) {
            out.push("equation");
        }
        out
    }
}

/// Slack of each link at one node with `p = ∇u(x)` and Hessian
/// `[u_xx, u_xy, u_yy]`. Links that do not apply are `+∞`.
pub fn node_links<T: Scalar>(
    w: &HomogeneousWeight<T>,
    x: &[T; 2],
    p: &[T; 2],
    hessian: [T; 3],
    b: T,
) -> Result<ChainLinks<T>> {
    let n = 2usize;
    let half = T::lit(0.5);
    let alpha = w.degree();
    let [hxx, hxy, hyy] = hessian;
    let lap = hxx + hyy;
    let z = lap / T::from_usize_lossy(n);
    let wx = w.evaluate(x);
    let ratio = w.evaluate(p) / wx;
    let drift = match w.gradient(x) {
        Ok(g) => (g[0] * p[0] + g[1] * p[1]) / wx,
        Err(_) => T::nan(),
    };
    let mut links = ChainLinks {
        hessian: half * (hxx + hyy) - (half * (hxx - hyy)).hypot(hxy),
        amgm: T::infinity(),
        concavity: T::infinity(),
        equation: b - lap - drift,
    };
    if alpha > T::zero() {
        if z > T::zero() {
            links.amgm = weighted_amgm(ratio.powf(T::one() / alpha), z, alpha, n);
        }
        links.concavity = concavity_pairwise(w, x, p)?;
    } else if z > T::zero() {
        links.amgm = weighted_amgm(T::one(), z, alpha, n);
    }
    Ok(links)
}

/// Runs every check on `sol` and collects the certificate. Failures are
/// reported, never raised.
pub fn verify_chain<T: Scalar>(
    sol: &NeumannSolution<T>,
    contact: &[bool],
    cone: &ConvexCone<T>,
    w: &HomogeneousWeight<T>,
    opts: &ChainOptions<T>,
) -> Result<AbpCertificate<T>> {
    let n = 2usize;
    let nf = T::from_usize_lossy(n);
    let d = w.effective_dimension();
    let h = sol.h;
    let tau_contact = T::lit(CONTACT_FACTOR) * h * h;
    let tau_chain = T::lit(CHAIN_FACTOR) * h;
    let top = (sol.b / d).powf(d);
    let half = T::lit(0.5);

    let mut links = ChainLinks {
        hessian: T::infinity(),
        amgm: T::infinity(),
        concavity: T::infinity(),
        equation: T::infinity(),
    };
    let mut checked = 0usize;
    let mut margin_min = T::infinity();
    let mut margin_abs = T::zero();
    let mut worst: Option<NodeDump<T>> = None;
    let mut area_integral = T::zero();
    let mut amgm_integral = T::zero();
    for k in 0..sol.len() {
        if !contact[k] {
            continue;
        }
        let p = sol.grad[k];
        if !cone.contains(&p) {
            continue;
        }
        checked += 1;
        let x = sol.points[k];
        let wx = w.evaluate(&x);
        let ratio = w.evaluate(&p) / wx;
        let lap = sol.laplacian[k];
        let [hxx, hxy, hyy] = sol.hessian[k];
        let det = hxx * hyy - hxy * hxy;
        let tr_half = half * (hxx + hyy);
        links.hessian = links.hessian.min(tr_half - (half * (hxx - hyy)).hypot(hxy));

        let z = lap / nf;
        let lhs = ratio * z.powi(n as i32);
        let margin = top - lhs;
        if margin < margin_min {
            margin_min = margin;
            worst = Some(NodeDump {
                index: k,
                x,
                grad: p,
                laplacian: lap,
                margin,
            });
        }
        margin_abs = margin_abs.max(margin.abs());

        let at = node_links(w, &x, &p, sol.hessian[k], sol.b)?;
        links.amgm = links.amgm.min(at.amgm);
        links.concavity = links.concavity.min(at.concavity);
        links.equation = links.equation.min(at.equation);

        let wp = w.evaluate(&p);
        area_integral = area_integral + sol.area[k] * wp * det;
        amgm_integral = amgm_integral + sol.area[k] * wp * z.powi(n as i32);
    }

    let broken_links = links.broken(tau_contact / (h * h), tau_chain);

    let coverage = gradient_image_cover(sol, contact, opts.eta, opts.samples);
    let ball_volume = ball_reference_at(cone, w, opts.ball_resolution)?.volume;
    let volume = sol.mass.iter().copied().fold(T::zero(), |a, b| a + b);
    let bound = top * volume;
    let integral_slack = bound - ball_volume;
    let chain_monotone = ball_volume <= area_integral + tau_chain
        && area_integral <= amgm_integral + tau_chain
        && amgm_integral <= bound + tau_chain;
    let (pr, mr) = (sol.reference_perimeter, sol.reference_volume);
    let isoperimetric_slack = pr.powf(d) / mr.powf(d - T::one()) / (d.powf(d) * ball_volume) - T::one();
    let contact_count = contact.iter().filter(|&&c| c).count();
    let pointwise_margin = if checked == 0 { T::zero() } else { margin_min };
    let pass = pointwise_margin >= -tau_chain
        && integral_slack >= -tau_chain
        && coverage.pass
        && broken_links.is_empty()
        && chain_monotone;
    Ok(AbpCertificate {
        b: sol.b,
        b_reference: sol.reference_b(),
        b_consistency: sol.b_consistency(),
        h,
        tau_contact,
        tau_chain,
        contact_fraction: T::from_usize_lossy(contact_count) / T::from_usize_lossy(contact.len()),
        contact: contact.to_vec(),
        coverage,
        checked_nodes: checked,
        pointwise_margin,
        max_abs_margin: margin_abs,
        worst_node: worst,
        links,
        broken_links,
        ball_volume,
        area_integral,
        amgm_integral,
        bound,
        integral_slack,
        chain_monotone,
        isoperimetric_slack,
        pass,
    })
}
