//! Finite-volume solution of the weighted Neumann problem on a mapped grid.
//!
//! Cells are centred at `s_i = (i + ½)Δs`, `θ_j = lo + (j + ½)Δθ`. With
//! `J = sR²` the operator is `∂_s F^s + ∂_θ F^θ = b w J`, where
//!
//! ```text
//! F^s = w [ s (R'² + R²)/R² u_s - (R'/R) u_θ ]
//! F^θ = w [ -(R'/R) u_s + u_θ / s ]
//! ```
//!
//! The outer face carries the prescribed flux `w √(R² + R'²)`, the centre
//! face none, and lateral faces none (the weight vanishes there). `b` is the
//! total outer flux over the total weighted cell mass, which makes the
//! singular system consistent.

use super::sparse::{bicgstab, CsrMatrix, Ilu0};
use super::{MappedDomain, Profile, Span};
use crate::error::{Error, Result};
use crate::measure;
use crate::quadrature::gauss_legendre;
use crate::scalar::Scalar;
use crate::weight::HomogeneousWeight;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    /// Cells along `s`.
    pub radial: usize,
    /// Cells along θ; defaults to `radial` on sectors and `2·radial` when periodic.
    pub angular: Option<usize>,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            radial: 128,
            angular: None,
            tol: T::lit(1e-13).max(T::epsilon() * T::lit(1000.0)),
            max_iter: 20_000,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn with_radial(n: usize) -> Self {
        Self { radial: n, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct NeumannSolution<T> {
    domain: MappedDomain<T>,
    pub ns: usize,
    pub nt: usize,
    pub ds: T,
    pub dt: T,
    /// Cell-centre coordinates, index `i * nt + j`.
    pub points: Vec<[T; 2]>,
    /// Mean-zero (by area) nodal values.
    pub u: Vec<T>,
    pub grad: Vec<[T; 2]>,
    /// `(u_xx, u_xy, u_yy)`.
    pub hessian: Vec<[T; 3]>,
    pub laplacian: Vec<T>,
    /// Unweighted cell areas.
    pub area: Vec<T>,
    /// Weighted cell masses `∫_cell w`.
    pub mass: Vec<T>,
    pub b: T,
    /// Mesh size `max(Δs, Δθ) · max R`.
    pub h: T,
    /// Reference `P(Ω)` and `m(Ω)` from quadrature independent of the grid.
    pub reference_perimeter: T,
    pub reference_volume: T,
    pub iterations: usize,
    pub residual: T,
}

impl<T: Scalar> NeumannSolution<T> {
    pub fn domain(&self) -> &MappedDomain<T> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Cells touching the free boundary `s = 1`.
    pub fn is_outer(&self, k: usize) -> bool {
        k / self.nt == self.ns - 1
    }

    /// `P(Ω) / m(Ω)` from the reference measures.
    pub fn reference_b(&self) -> T {
        self.reference_perimeter / self.reference_volume
    }

    /// `|b m(Ω) - P(Ω)| / P(Ω)`.
    pub fn b_consistency(&self) -> T {
        (self.b * self.reference_volume - self.reference_perimeter).abs() / self.reference_perimeter
    }
}

/// Second-order difference stencil along one axis, as `(offset index, coefficient)`
/// relative to a spacing of 1.
fn stencil(i: usize, n: usize, periodic: bool) -> [(usize, f64); 3] {
    if periodic {
        return [((i + 1) % n, 0.5), ((i + n - 1) % n, -0.5), (i, 0.0)];
    }
    if i == 0 {
        [(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if i == n - 1 {
        [(n - 1, 1.5), (n - 2, -2.0), (n - 3, 0.5)]
    } else {
        [(i + 1, 0.5), (i - 1, -0.5), (i, 0.0)]
    }
}

/// Solves the Neumann problem on `dom` for weight `w`.
pub fn solve_neumann<T: Scalar>(
    dom: &MappedDomain<T>,
    w: &HomogeneousWeight<T>,
    opts: &SolverOptions<T>,
) -> Result<NeumannSolution<T>> {
    w.check_compatible(dom.cone())?;
    let periodic = dom.is_periodic();
    let ns = opts.radial;
    let nt = opts.angular.unwrap_or(if periodic { 2 * ns } else { ns });
    if ns < 4 || nt < 4 {
        return Err(Error::Domain(format!("grid {ns}×{nt} is too coarse")));
    }
    let (lo, hi) = dom.interval();
    if let Span::Sector { .. } = dom.span() {
        // Snap round-off so that edges along the axes land exactly on them.
        let snap = |v: T| if v.abs() <= T::lit(1e-12) { T::zero() } else { v };
        let edge = |t: T| w.evaluate(&[snap(t.cos()), snap(t.sin())]);
        if edge(lo) != T::zero() || edge(hi) != T::zero() {
            return Err(Error::Unsupported(
                "lateral sides on ∂Σ need a weight vanishing there".into(),
            ));
        }
    }

    let ds = T::one() / T::from_usize_lossy(ns);
    let dt = (hi - lo) / T::from_usize_lossy(nt);
    let half = T::lit(0.5);
    let s_c: Vec<T> = (0..ns).map(|i| (T::from_usize_lossy(i) + half) * ds).collect();
    let th_c: Vec<T> = (0..nt).map(|j| lo + (T::from_usize_lossy(j) + half) * dt).collect();
    let th_f: Vec<T> = (0..nt).map(|j| lo + T::from_usize_lossy(j + 1) * dt).collect();
    let r_c: Vec<T> = th_c.iter().map(|&t| dom.radius(t)).collect();
    let rp_c: Vec<T> = th_c.iter().map(|&t| dom.slope(t)).collect();
    let r_f: Vec<T> = th_f.iter().map(|&t| dom.radius(t)).collect();
    let rp_f: Vec<T> = th_f.iter().map(|&t| dom.slope(t)).collect();
    if let Some(j) = r_c.iter().chain(&r_f).position(|&r| !(r > T::zero())) {
        return Err(Error::Domain(format!("profile is not positive near angle index {j}")));
    }

    let weight_at = |p: [T; 2]| -> Result<T> {
        let v = w.evaluate(&p);
        if v > T::zero() && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Ellipticity(format!(
                "w = {v} at ({}, {})",
                p[0], p[1]
            )))
        }
    };

    let idx = |i: usize, j: usize| i * nt + j;
    let m = ns * nt;

    // Cell geometry and masses.
    let mut points = Vec::with_capacity(m);
    let mut area = Vec::with_capacity(m);
    let mut mass = Vec::with_capacity(m);
    let homogeneous_path = dom.centered_at_origin();
    let dplus = w.degree() + T::lit(2.0);
    let gl = gauss_legendre::<T>(4);
    for i in 0..ns {
        let s_lo = T::from_usize_lossy(i) * ds;
        let s_hi = s_lo + ds;
        for j in 0..nt {
            let (r, t) = (r_c[j], th_c[j]);
            let p = dom.point(s_c[i], t);
            weight_at(p)?;
            points.push(p);
            area.push(r * r * (s_hi * s_hi - s_lo * s_lo) * half * dt);
            let cell = if homogeneous_path {
                // ∫ w(sRω) s R² ds = w(ω) R^{α+2} (s_hi^{α+2} - s_lo^{α+2}) / (α+2).
                let wo = w.evaluate(&[t.cos(), t.sin()]);
                wo * r.powf(dplus) * (s_hi.powf(dplus) - s_lo.powf(dplus)) / dplus * dt
            } else {
                let mut acc = T::zero();
                for (&x, &wt) in gl.nodes.iter().zip(&gl.weights) {
                    let s = s_lo + half * ds * (x + T::one());
                    acc = acc + wt * half * ds * w.evaluate(&dom.point(s, t)) * s * r * r;
                }
                acc * dt
            };
            mass.push(cell);
        }
    }

    let mut trip: Vec<(usize, usize, T)> = Vec::with_capacity(m * 14);
    let mut rhs = vec![T::zero(); m];
    // Adds `flux = Σ coef·u` leaving cell `from` and entering cell `to`;
    // rows hold minus the net outward flux.
    let mut push_face = |from: usize, to: usize, coefs: &[(usize, T)]| {
        for &(col, v) in coefs {
            trip.push((from, col, -v));
            trip.push((to, col, v));
        }
    };

    let ut = |i: usize, j: usize, scale: T| -> Vec<(usize, T)> {
        stencil(j, nt, periodic)
            .iter()
            .filter(|(_, k)| *k != 0.0)
            .map(|&(jj, k)| (idx(i, jj), T::lit(k) * scale))
            .collect()
    };
    let us = |i: usize, j: usize, scale: T| -> Vec<(usize, T)> {
        stencil(i, ns, false)
            .iter()
            .filter(|(_, k)| *k != 0.0)
            .map(|&(ii, k)| (idx(ii, j), T::lit(k) * scale))
            .collect()
    };

    // s-faces between rows i and i+1.
    for i in 0..ns - 1 {
        let sf = T::from_usize_lossy(i + 1) * ds;
        for j in 0..nt {
            let (r, rp) = (r_c[j], rp_c[j]);
            let wf = weight_at(dom.point(sf, th_c[j]))?;
            let a = wf * sf * (rp * rp + r * r) / (r * r) / ds * dt;
            let mut coefs = vec![(idx(i + 1, j), a), (idx(i, j), -a)];
            if rp != T::zero() {
                // u_θ on the face is the mean of the two cell-centred differences.
                let cross = -wf * rp / r * half;
                coefs.extend(ut(i, j, cross));
                coefs.extend(ut(i + 1, j, cross));
            }
            push_face(idx(i, j), idx(i + 1, j), &coefs);
        }
    }
    // θ-faces between columns j and j+1.
    let nfaces = if periodic { nt } else { nt - 1 };
    for i in 0..ns {
        for j in 0..nfaces {
            let jn = (j + 1) % nt;
            let (r, rp) = (r_f[j], rp_f[j]);
            let wf = weight_at(dom.point(s_c[i], th_f[j]))?;
            let a = wf / (dt * s_c[i]) * ds;
            let mut coefs = vec![(idx(i, jn), a), (idx(i, j), -a)];
            if rp != T::zero() {
                let cross = -wf * rp / r * half;
                coefs.extend(us(i, j, cross));
                coefs.extend(us(i, jn, cross));
            }
            push_face(idx(i, j), idx(i, jn), &coefs);
        }
    }

    // Outer boundary flux and b.
    let mut outer = vec![T::zero(); nt];
    for j in 0..nt {
        let (r, rp) = (r_c[j], rp_c[j]);
        outer[j] = weight_at(dom.point(T::one(), th_c[j]))? * (r * r + rp * rp).sqrt() * dt;
    }
    let perimeter: T = outer.iter().copied().fold(T::zero(), |a, b| a + b);
    let volume: T = mass.iter().copied().fold(T::zero(), |a, b| a + b);
    let b = perimeter / volume;
    for (k, r) in rhs.iter_mut().enumerate() {
        *r = -b * mass[k];
    }
    for j in 0..nt {
        rhs[idx(ns - 1, j)] = rhs[idx(ns - 1, j)] + outer[j];
    }

    let mut a = CsrMatrix::from_triplets(m, trip);
    // Round-off in the compatibility condition lands in the pinned equation,
    // so pin the cell that carries the most weighted mass.
    let pin = (0..m).fold(0, |best, k| if mass[k] > mass[best] { k } else { best });
    a.pin_row(pin);
    rhs[pin] = T::zero();
    // Face coefficients scale like w·s near a degenerate vertex; without
    // equilibration the stopping test ignores those rows.
    a.equilibrate(&mut rhs)?;
    let pre = Ilu0::new(&a)?;
    let mut u = vec![T::zero(); m];
    let stats = bicgstab(&a, &pre, &rhs, &mut u, opts.tol, opts.max_iter)?;

    let total_area: T = area.iter().copied().fold(T::zero(), |a, b| a + b);
    let mean = u.iter().zip(&area).fold(T::zero(), |acc, (&v, &ar)| acc + v * ar) / total_area;
    u.iter_mut().for_each(|v| *v = *v - mean);

    // Nodal derivatives through the inverse Jacobian of x(s, θ).
    let inv_jac: Vec<[[T; 2]; 2]> = (0..m)
        .map(|k| {
            let (i, j) = (k / nt, k % nt);
            let (s, t, r, rp) = (s_c[i], th_c[j], r_c[j], rp_c[j]);
            let (co, si) = (t.cos(), t.sin());
            let xs = [r * co, r * si];
            let xt = [s * (rp * co - r * si), s * (rp * si + r * co)];
            let det = s * r * r;
            // rows: ∇s, ∇θ
            [[xt[1] / det, -xt[0] / det], [-xs[1] / det, xs[0] / det]]
        })
        .collect();
    let derivative = |f: &[T], k: usize| -> [T; 2] {
        let (i, j) = (k / nt, k % nt);
        let fs = stencil(i, ns, false)
            .iter()
            .fold(T::zero(), |acc, &(ii, c)| acc + T::lit(c) * f[idx(ii, j)])
            / ds;
        let ft = stencil(j, nt, periodic)
            .iter()
            .fold(T::zero(), |acc, &(jj, c)| acc + T::lit(c) * f[idx(i, jj)])
            / dt;
        let g = inv_jac[k];
        [fs * g[0][0] + ft * g[1][0], fs * g[0][1] + ft * g[1][1]]
    };
    let grad: Vec<[T; 2]> = (0..m).map(|k| derivative(&u, k)).collect();
    let gx: Vec<T> = grad.iter().map(|g| g[0]).collect();
    let gy: Vec<T> = grad.iter().map(|g| g[1]).collect();
    let hessian: Vec<[T; 3]> = (0..m)
        .map(|k| {
            let dx = derivative(&gx, k);
            let dy = derivative(&gy, k);
            [dx[0], half * (dx[1] + dy[0]), dy[1]]
        })
        .collect();
    let laplacian = hessian.iter().map(|h| h[0] + h[2]).collect();

    let rmax = r_c.iter().chain(&r_f).copied().fold(T::zero(), T::max);
    let h = ds.max(dt) * rmax;
    let (reference_perimeter, reference_volume) = reference_measures(dom, w)?;
    Ok(NeumannSolution {
        domain: dom.clone(),
        ns,
        nt,
        ds,
        dt,
        points,
        u,
        grad,
        hessian,
        laplacian,
        area,
        mass,
        b,
        h,
        reference_perimeter,
        reference_volume,
        iterations: stats.iterations,
        residual: stats.relative_residual,
    })
}

/// `(P(Ω), m(Ω))`: from the `measure` module for star domains, otherwise by
/// Gauss–Legendre in `s` and the trapezoidal rule in the periodic angle.
pub fn reference_measures<T: Scalar>(
    dom: &MappedDomain<T>,
    w: &HomogeneousWeight<T>,
) -> Result<(T, T)> {
    if let Profile::Star(star) = dom.profile() {
        return Ok((
            measure::perimeter_inside_cone(star, w)?,
            measure::volume(star, w)?,
        ));
    }
    let nt = 1024;
    let gl = gauss_legendre::<T>(48);
    let (lo, hi) = dom.interval();
    let dt = (hi - lo) / T::from_usize_lossy(nt);
    let half = T::lit(0.5);
    let mut p = T::zero();
    let mut m = T::zero();
    for j in 0..nt {
        let t = lo + T::from_usize_lossy(j) * dt;
        let (r, rp) = (dom.radius(t), dom.slope(t));
        p = p + w.evaluate(&dom.point(T::one(), t)) * (r * r + rp * rp).sqrt() * dt;
        let mut ring = T::zero();
        for (&x, &wt) in gl.nodes.iter().zip(&gl.weights) {
            let s = half * (x + T::one());
            ring = ring + wt * half * w.evaluate(&dom.point(s, t)) * s * r * r;
        }
        m = m + ring * dt;
    }
    Ok((p, m))
}
