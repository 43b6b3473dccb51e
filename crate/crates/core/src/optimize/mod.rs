//! Shape optimization of the quotient over planar star-shaped domains.
//!
//! Profiles are parametrized by cosine modes,
//! `R(θ) = c₀ (1 + Σ_{k=1}^K c_k cos(kπ(θ - θ_lo)/β))`, which keep zero slope
//! at the cap edges. `Q` is scale-free, so the search runs with `c₀ = 1` and
//! the returned domain is rescaled to the weighted volume of `Σ ∩ B_1`.

mod gradient;
mod nelder_mead;
mod scan;

pub use gradient::{central_gradient, gradient_descent, DescentOptions, DescentOutcome};
pub use nelder_mead::{nelder_mead, SimplexOptions, SimplexOutcome};
pub use scan::{
    scan_critical_angle, second_variation_coefficient, AngleClass, AngleSample, AngleScan,
    Competitor, ScanOptions, SecondVariation, Transition,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cone::{CapGrid, ConvexCone};
use crate::domain::{planar_interval, StarDomain};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weight::HomogeneousWeight;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    NelderMead,
    FdGradient,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::NelderMead => "NelderMead",
            Method::FdGradient => "FDGradient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimOptions<T> {
    /// Number of cosine modes `K`.
    pub modes: usize,
    pub method: Method,
    /// Objective evaluations (Nelder–Mead) or descent iterations.
    pub max_iter: usize,
    /// Number of random starts in [`multi_start`].
    pub starts: usize,
    pub seed: u64,
    /// Random starts draw `c_k ~ U(-a, a)/k`.
    pub init_amplitude: T,
    /// Profiles with `min R / c₀` below this are infeasible.
    pub min_radius: T,
    pub simplex: SimplexOptions<T>,
    pub descent: DescentOptions<T>,
}

impl<T: Scalar> Default for OptimOptions<T> {
    fn default() -> Self {
        Self {
            modes: 8,
            method: Method::NelderMead,
            max_iter: 40_000,
            starts: 20,
            seed: 0,
            init_amplitude: T::lit(0.3),
            min_radius: T::lit(1e-3),
            simplex: SimplexOptions::default(),
            descent: DescentOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult<T> {
    /// Optimized domain, scaled to the weighted volume of `Σ ∩ B_1`.
    pub best_profile: StarDomain<T>,
    /// Mode coefficients `c_1..c_K` relative to `c₀`.
    pub coefficients: Vec<T>,
    pub best_q: T,
    pub initial_q: T,
    pub ball_q: T,
    pub deficit_vs_ball: T,
    pub iterations: usize,
    /// `(iteration, Q)`, non-increasing in `Q`.
    pub history: Vec<(usize, T)>,
    pub converged: bool,
    pub method: Method,
}

impl<T: Scalar> OptimResult<T> {
    /// `max_k |c_k| / c₀`.
    pub fn mode_amplitude(&self) -> T {
        self.coefficients.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

/// Cosine modes and cap data for evaluating `Q` straight from coefficients.
#[derive(Debug, Clone)]
pub struct ModeBasis<T> {
    cone: ConvexCone<T>,
    grid: CapGrid<T>,
    modes: usize,
    width: T,
    /// `cos(kπ(θ_j - lo)/β)`, node-major, `k = 1..K`.
    cos: Vec<T>,
    /// θ-derivative of the above.
    dcos: Vec<T>,
    /// Quadrature weight times `w(ω_j)`.
    wcap: Vec<T>,
    dim_eff: T,
    min_radius: T,
}

impl<T: Scalar> ModeBasis<T> {
    pub fn new(
        cone: &ConvexCone<T>,
        grid: &CapGrid<T>,
        w: &HomogeneousWeight<T>,
        modes: usize,
    ) -> Result<Self> {
        if cone.dim() != 2 || grid.dim() != 2 {
            return Err(Error::Unsupported("shape optimization is planar only".into()));
        }
        w.check_compatible(cone)?;
        let (lo, hi) = planar_interval(cone)?;
        let width = hi - lo;
        let n = grid.len();
        let mut cos = Vec::with_capacity(n * modes);
        let mut dcos = Vec::with_capacity(n * modes);
        for j in 0..n {
            let th = grid.theta(j);
            for k in 1..=modes {
                let f = T::from_usize_lossy(k) * T::PI() / width;
                let arg = f * (th - lo);
                cos.push(arg.cos());
                dcos.push(-f * arg.sin());
            }
        }
        let wq = grid.quad_weights();
        let wcap = (0..n).map(|j| wq[j] * w.evaluate(grid.direction(j))).collect();
        Ok(Self {
            cone: cone.clone(),
            grid: grid.clone(),
            modes,
            width,
            cos,
            dcos,
            wcap,
            dim_eff: w.effective_dimension(),
            min_radius: T::lit(crate::domain::R_MIN),
        })
    }

    pub fn with_min_radius(mut self, r: T) -> Self {
        self.min_radius = r;
        self
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid(&self) -> &CapGrid<T> {
        &self.grid
    }

    /// Nodal `(R, R')` for `c₀ = 1`.
    pub fn profile(&self, c: &[T]) -> (Vec<T>, Vec<T>) {
        let k = self.modes;
        let n = self.grid.len();
        let mut r = Vec::with_capacity(n);
        let mut dr = Vec::with_capacity(n);
        for j in 0..n {
            let row = &self.cos[j * k..(j + 1) * k];
            let drow = &self.dcos[j * k..(j + 1) * k];
            let mut v = T::one();
            let mut d = T::zero();
            for i in 0..k.min(c.len()) {
                v = v + c[i] * row[i];
                d = d + c[i] * drow[i];
            }
            r.push(v);
            dr.push(d);
        }
        (r, dr)
    }

    /// `(P, m)` for `c₀ = 1`, or `None` when the profile dips below the floor.
    pub fn measures(&self, c: &[T]) -> Option<(T, T)> {
        let k = self.modes;
        let d = self.dim_eff;
        let pexp = d - T::lit(2.0);
        let mut p = T::zero();
        let mut m = T::zero();
        for (j, &wc) in self.wcap.iter().enumerate() {
            let row = &self.cos[j * k..(j + 1) * k];
            let drow = &self.dcos[j * k..(j + 1) * k];
            let mut r = T::one();
            let mut dr = T::zero();
            for i in 0..k.min(c.len()) {
                r = r + c[i] * row[i];
                dr = dr + c[i] * drow[i];
            }
            if !(r >= self.min_radius) {
                return None;
            }
            p = p + wc * r.powf(pexp) * (r * r + dr * dr).sqrt();
            m = m + wc * r.powf(d);
        }
        Some((p, m / d))
    }

    /// `Q(c)`, `+∞` when infeasible.
    pub fn quotient(&self, c: &[T]) -> T {
        match self.measures(c) {
            Some((p, m)) => crate::measure::isoperimetric_quotient(p, m, self.dim_eff),
            None => T::infinity(),
        }
    }

    pub fn ball_quotient(&self) -> T {
        self.quotient(&[])
    }

    /// Least-squares cosine coefficients of a nodal profile: `(c₀, c_1..c_K)`.
    pub fn project(&self, radial: &[T]) -> (T, Vec<T>) {
        let wq = self.grid.quad_weights();
        let k = self.modes;
        let mut a0 = T::zero();
        let mut a = vec![T::zero(); k];
        for (j, &r) in radial.iter().enumerate() {
            a0 = a0 + wq[j] * r;
            for i in 0..k {
                a[i] = a[i] + wq[j] * r * self.cos[j * k + i];
            }
        }
        let a0 = a0 / self.width;
        let two = T::lit(2.0) / self.width;
        (a0, a.into_iter().map(|v| v * two / a0).collect())
    }

    /// Domain for coefficients `c`, scaled to volume `target`.
    pub fn domain(&self, c: &[T], target: T) -> Result<StarDomain<T>> {
        let (_, m) = self
            .measures(c)
            .ok_or_else(|| Error::Domain("mode profile is not positive".into()))?;
        let c0 = (target / m).powf(T::one() / self.dim_eff);
        let (r, dr) = self.profile(c);
        StarDomain::from_profile_with_derivative(
            &self.cone,
            &self.grid,
            r.into_iter().map(|v| v * c0).collect(),
            dr.into_iter().map(|v| v * c0).collect(),
        )
    }

    /// Weighted volume of `Σ ∩ B_1` on this grid.
    pub fn ball_volume(&self) -> T {
        self.wcap.iter().copied().fold(T::zero(), |a, b| a + b) / self.dim_eff
    }
}

/// Minimizes `Q` over mode profiles, starting from the projection of `init`.
pub fn minimize_quotient<T: Scalar>(
    cone: &ConvexCone<T>,
    w: &HomogeneousWeight<T>,
    init: &StarDomain<T>,
    opts: &OptimOptions<T>,
) -> Result<OptimResult<T>> {
    let basis = ModeBasis::new(cone, init.grid(), w, opts.modes)?.with_min_radius(opts.min_radius);
    let (_, c) = basis.project(init.radial());
    minimize_from(&basis, &c, opts)
}

/// Minimizes `Q` from explicit relative coefficients.
pub fn minimize_from<T: Scalar>(
    basis: &ModeBasis<T>,
    c: &[T],
    opts: &OptimOptions<T>,
) -> Result<OptimResult<T>> {
    if c.len() != basis.modes() {
        return Err(Error::LengthMismatch {
            expected: basis.modes(),
            got: c.len(),
        });
    }
    let initial_q = basis.quotient(c);
    if !initial_q.is_finite() {
        let (r, _) = basis.profile(c);
        let (node, value) = r
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |b, (j, &v)| if v < b.1 { (j, v) } else { b });
        return Err(Error::Positivity {
            node,
            value: value.as_f64(),
        });
    }
    let objective = |x: &[T]| basis.quotient(x);
    let (x, f, iterations, converged, history) = match opts.method {
        Method::NelderMead => {
            let so = SimplexOptions {
                max_evals: opts.max_iter,
                ..opts.simplex
            };
            let out = nelder_mead(objective, c, &so);
            (out.x, out.f, out.iterations, out.converged, out.history)
        }
        Method::FdGradient => {
            let d = DescentOptions {
                max_iter: opts.max_iter,
                ..opts.descent
            };
            let out = gradient_descent(objective, c, &d);
            (out.x, out.f, out.iterations, out.converged, out.history)
        }
    };
    let ball_q = basis.ball_quotient();
    let best_profile = basis.domain(&x, basis.ball_volume())?;
    Ok(OptimResult {
        best_profile,
        coefficients: x,
        best_q: f,
        initial_q,
        ball_q,
        deficit_vs_ball: f / ball_q - T::one(),
        iterations,
        history,
        converged,
        method: opts.method,
    })
}

/// Random relative coefficients `c_k ~ U(-a, a)/k`, redrawn until
/// `min R ≥ 0.2`.
pub fn random_coefficients<T: Scalar, R: Rng + ?Sized>(
    basis: &ModeBasis<T>,
    rng: &mut R,
    amplitude: T,
) -> Vec<T> {
    let a = amplitude.as_f64();
    loop {
        let c: Vec<T> = (1..=basis.modes())
            .map(|k| T::lit(rng.random_range(-a..=a) / k as f64))
            .collect();
        let (r, _) = basis.profile(&c);
        if r.iter().all(|&v| v >= T::lit(0.2)) {
            return c;
        }
    }
}

/// Results of [`multi_start`], ordered by start index.
#[derive(Debug, Clone)]
pub struct MultiStart<T> {
    pub runs: Vec<OptimResult<T>>,
    /// Index of the run with the lowest `Q` (lowest index on ties).
    pub best: usize,
}

impl<T> MultiStart<T> {
    pub fn best(&self) -> &OptimResult<T> {
        &self.runs[self.best]
    }
}

/// Runs `opts.starts` optimizations from seeded random profiles in parallel.
/// Start `i` draws from `ChaCha8Rng::seed_from_u64(opts.seed + i)`.
pub fn multi_start<T: Scalar>(
    cone: &ConvexCone<T>,
    grid: &CapGrid<T>,
    w: &HomogeneousWeight<T>,
    opts: &OptimOptions<T>,
) -> Result<MultiStart<T>> {
    if opts.starts == 0 {
        return Err(Error::Domain("at least one start is required".into()));
    }
    let basis = ModeBasis::new(cone, grid, w, opts.modes)?.with_min_radius(opts.min_radius);
    let runs = (0..opts.starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
            let c = random_coefficients(&basis, &mut rng, opts.init_amplitude);
            minimize_from(&basis, &c, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..runs.len()).fold(0, |b, i| if runs[i].best_q < runs[b].best_q { i } else { b });
    Ok(MultiStart { runs, best })
}
