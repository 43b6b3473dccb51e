//! Second variation of `Q` at the ball and the angle scan for `|x|^α`.

use rayon::prelude::*;

use super::{multi_start, ModeBasis, OptimOptions};
use crate::cone::{cap_quadrature, CapGrid, ConvexCone};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weight::HomogeneousWeight;

/// `c₂(k)` with the raw difference quotients it was extrapolated from.
#[derive(Debug, Clone)]
pub struct SecondVariation<T> {
    pub mode: usize,
    pub value: T,
    /// `(ε, (Q(+ε) + Q(-ε) - 2Q(0))/ε²)`.
    pub raw: Vec<(T, T)>,
    /// Successive raw values did not settle monotonically.
    pub noisy: bool,
}

/// Second difference of `Q` along the cosine mode `k` at `Σ ∩ B_1`,
/// Richardson-extrapolated in `ε²` over `eps_grid` (largest first).
pub fn second_variation_coefficient<T: Scalar>(
    cone: &ConvexCone<T>,
    grid: &CapGrid<T>,
    w: &HomogeneousWeight<T>,
    mode: usize,
    eps_grid: &[T],
) -> Result<SecondVariation<T>> {
    if mode == 0 {
        return Err(Error::Domain("mode must be at least 1".into()));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > T::zero())) {
        return Err(Error::Domain("step sizes must be positive".into()));
    }
    let basis = ModeBasis::new(cone, grid, w, mode)?;
    second_variation_on(&basis, mode, eps_grid)
}

fn second_variation_on<T: Scalar>(
    basis: &ModeBasis<T>,
    mode: usize,
    eps_grid: &[T],
) -> Result<SecondVariation<T>> {
    let q0 = basis.ball_quotient();
    let mut c = vec![T::zero(); basis.modes()];
    let raw: Vec<(T, T)> = eps_grid
        .iter()
        .map(|&e| {
            c[mode - 1] = e;
            let up = basis.quotient(&c);
            c[mode - 1] = -e;
            let down = basis.quotient(&c);
            (e, (up + down - q0 - q0) / (e * e))
        })
        .collect();
    if raw.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain("perturbation left the feasible set".into()));
    }

    // Neville-style table; the error expands in even powers of ε.
    let m = raw.len();
    let mut table: Vec<T> = raw.iter().map(|&(_, v)| v).collect();
    for j in 1..m {
        for i in (j..m).rev() {
            let ratio = (raw[i - j].0 / raw[i].0).powi(2 * j as i32);
            table[i] = table[i] + (table[i] - table[i - 1]) / (ratio - T::one());
        }
    }
    let value = table[m - 1];

    let floor = T::lit(1e-9) * value.abs().max(T::one());
    let diffs: Vec<T> = raw.windows(2).map(|p| (p[1].1 - p[0].1).abs()).collect();
    let noisy = diffs.windows(2).any(|d| d[1] > d[0] && d[1] > floor);
    Ok(SecondVariation {
        mode,
        value,
        raw,
        noisy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleClass {
    BallOptimal,
    BallBeaten,
}

impl AngleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AngleClass::BallOptimal => "ball-optimal",
            AngleClass::BallBeaten => "ball-beaten",
        }
    }
}

/// A profile beating the ball, stored as nodal radii so it can be re-measured
/// without any optimizer state.
#[derive(Debug, Clone)]
pub struct Competitor<T> {
    pub beta: T,
    pub resolution: usize,
    pub radii: Vec<T>,
    pub quotient: T,
    pub deficit: T,
}

#[derive(Debug, Clone)]
pub struct AngleSample<T> {
    pub beta: T,
    /// Best deficit over all starts.
    pub deficit: T,
    /// `c₂(k)` for `k = 1..K`.
    pub c2: Vec<T>,
    pub c2_min: T,
    pub c2_noisy: bool,
    pub optimizer_class: AngleClass,
    pub c2_class: AngleClass,
    /// Added while narrowing a transition.
    pub refined: bool,
    pub competitor: Option<Competitor<T>>,
}

/// Last ball-optimal and first ball-beaten angle of one estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Transition<T> {
    pub fn width(&self) -> T {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct ScanOptions<T> {
    pub optim: OptimOptions<T>,
    /// Cap resolution.
    pub resolution: usize,
    /// The optimizer beats the ball when the deficit is below `-margin`.
    pub margin: T,
    /// Each estimator's transition is narrowed to this width.
    pub refine_width: T,
    /// Largest acceptable width of the combined bracket.
    pub max_bracket: T,
    pub eps_grid: Vec<T>,
}

impl<T: Scalar> Default for ScanOptions<T> {
    fn default() -> Self {
        Self {
            optim: OptimOptions::default(),
            resolution: 256,
            margin: T::lit(1e-4),
            refine_width: T::lit(2.5e-3),
            max_bracket: T::lit(1e-2),
            eps_grid: vec![T::lit(1e-2), T::lit(5e-3), T::lit(2.5e-3)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct AngleScan<T> {
    pub alpha: T,
    /// Grid and refinement samples, ascending in β.
    pub samples: Vec<AngleSample<T>>,
    pub optimizer_transition: Option<Transition<T>>,
    pub c2_transition: Option<Transition<T>>,
    /// Union of both transitions.
    pub bracket: Option<Transition<T>>,
    /// Each estimator switches class exactly once.
    pub single_crossing: bool,
    /// Angles outside the bracket where the estimators disagree.
    pub disagreements: Vec<T>,
    pub pass: bool,
}

impl<T: Scalar> AngleScan<T> {
    /// Midpoint of the bracket.
    pub fn estimate(&self) -> Option<T> {
        self.bracket.map(|b| T::lit(0.5) * (b.lo + b.hi))
    }
}

/// Classifies each β in `beta_grid` by optimizer margin and by the sign of the
/// smallest `c₂`, then bisects both transitions.
pub fn scan_critical_angle<T: Scalar>(
    alpha: T,
    beta_grid: &[T],
    opts: &ScanOptions<T>,
) -> Result<AngleScan<T>> {
    if beta_grid.is_empty() {
        return Err(Error::Domain("empty angle grid".into()));
    }
    let w = HomogeneousWeight::radial_power(2, alpha)?;
    let mut samples = beta_grid
        .par_iter()
        .map(|&b| sample_angle(&w, b, opts, false))
        .collect::<Result<Vec<_>>>()?;
    sort_samples(&mut samples);

    // Narrow whichever transition is widest until both are fine enough.
    for _ in 0..64 {
        let (to, single_o) = transition(&samples, |s| s.optimizer_class);
        let (tc, single_c) = transition(&samples, |s| s.c2_class);
        if !(single_o && single_c) {
            break;
        }
        let wide = [to, tc]
            .into_iter()
            .flatten()
            .filter(|t| t.width() > opts.refine_width)
            .fold(None::<Transition<T>>, |acc, t| match acc {
                Some(a) if a.width() >= t.width() => Some(a),
                _ => Some(t),
            });
        let Some(t) = wide else { break };
        let mid = T::lit(0.5) * (t.lo + t.hi);
        samples.push(sample_angle(&w, mid, opts, true)?);
        sort_samples(&mut samples);
    }

    let (to, single_o) = transition(&samples, |s| s.optimizer_class);
    let (tc, single_c) = transition(&samples, |s| s.c2_class);
    let bracket = match (to, tc) {
        (Some(a), Some(b)) => Some(Transition {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
        }),
        _ => None,
    };
    let disagreements: Vec<T> = samples
        .iter()
        .filter(|s| s.optimizer_class != s.c2_class)
        .filter(|s| bracket.is_none_or(|b| s.beta < b.lo || s.beta > b.hi))
        .map(|s| s.beta)
        .collect();
    let single_crossing = single_o && single_c;
    let pass = single_crossing
        && disagreements.is_empty()
        && bracket.is_some_and(|b| b.width() <= opts.max_bracket && b.lo > T::zero() && b.hi < T::PI());
    Ok(AngleScan {
        alpha,
        samples,
        optimizer_transition: to,
        c2_transition: tc,
        bracket,
        single_crossing,
        disagreements,
        pass,
    })
}

fn sort_samples<T: Scalar>(samples: &mut [AngleSample<T>]) {
    samples.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap());
}

/// First optimal→beaten switch, and whether it is the only class change.
fn transition<T: Scalar>(
    samples: &[AngleSample<T>],
    class: impl Fn(&AngleSample<T>) -> AngleClass,
) -> (Option<Transition<T>>, bool) {
    let changes: Vec<usize> = (1..samples.len())
        .filter(|&i| class(&samples[i]) != class(&samples[i - 1]))
        .collect();
    let first = changes.iter().copied().find(|&i| {
        class(&samples[i - 1]) == AngleClass::BallOptimal && class(&samples[i]) == AngleClass::BallBeaten
    });
    let t = first.map(|i| Transition {
        lo: samples[i - 1].beta,
        hi: samples[i].beta,
    });
    (t, changes.len() == 1 && first.is_some())
}

fn sample_angle<T: Scalar>(
    w: &HomogeneousWeight<T>,
    beta: T,
    opts: &ScanOptions<T>,
    refined: bool,
) -> Result<AngleSample<T>> {
    let cone = ConvexCone::sector(beta)?;
    let grid = cap_quadrature(&cone, opts.resolution)?;
    let ms = multi_start(&cone, &grid, w, &opts.optim)?;
    let best = ms.best();

    let basis = ModeBasis::new(&cone, &grid, w, opts.optim.modes)?;
    let mut c2 = Vec::with_capacity(opts.optim.modes);
    let mut noisy = false;
    for k in 1..=opts.optim.modes {
        let sv = second_variation_on(&basis, k, &opts.eps_grid)?;
        noisy |= sv.noisy;
        c2.push(sv.value);
    }
    let c2_min = c2.iter().copied().fold(T::infinity(), T::min);

    let optimizer_class = if best.deficit_vs_ball < -opts.margin {
        AngleClass::BallBeaten
    } else {
        AngleClass::BallOptimal
    };
    let c2_class = if c2_min < T::zero() {
        AngleClass::BallBeaten
    } else {
        AngleClass::BallOptimal
    };
    let competitor = (optimizer_class == AngleClass::BallBeaten).then(|| Competitor {
        beta,
        resolution: opts.resolution,
        radii: best.best_profile.radial().to_vec(),
        quotient: best.best_q,
        deficit: best.deficit_vs_ball,
    });
    Ok(AngleSample {
        beta,
        deficit: best.deficit_vs_ball,
        c2,
        c2_min,
        c2_noisy: noisy,
        optimizer_class,
        c2_class,
        refined,
        competitor,
    })
}
