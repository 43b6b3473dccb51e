//! Homogeneous weights and the concavity condition on `w^{1/α}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::ConvexCone;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// Slack accepted by the midpoint concavity test (boundary cases such as
/// collinear pairs are exact equalities).
pub const CONCAVITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind<T> {
    Constant,
    /// `x_1^{A_1} ⋯ x_n^{A_n}` with `A_i ≥ 0`.
    Monomial(Vec<T>),
    /// `|x|^α` with `α > 0`.
    RadialPower(T),
}

/// A weight on `ℝⁿ`, positive in its cone and homogeneous of degree `α ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousWeight<T> {
    dim: usize,
    kind: WeightKind<T>,
}

impl<T: Scalar> HomogeneousWeight<T> {
    pub fn constant(dim: usize) -> Self {
        Self {
            dim,
            kind: WeightKind::Constant,
        }
    }

    pub fn monomial(exponents: Vec<T>) -> Result<Self> {
        if exponents.len() < 2 {
            return Err(Error::Domain("monomial weight needs at least two exponents".into()));
        }
        if let Some(a) = exponents.iter().find(|a| !(**a >= T::zero()) || !a.is_finite()) {
            return Err(Error::Domain(format!("monomial exponent {a} must be finite and ≥ 0")));
        }
        Ok(Self {
            dim: exponents.len(),
            kind: WeightKind::Monomial(exponents),
        })
    }

    pub fn radial_power(dim: usize, alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::Domain(format!("radial power must be positive, got {alpha}")));
        }
        Ok(Self {
            dim,
            kind: WeightKind::RadialPower(alpha),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &WeightKind<T> {
        &self.kind
    }

    /// Degree of homogeneity `α`.
    pub fn degree(&self) -> T {
        match &self.kind {
            WeightKind::Constant => T::zero(),
            WeightKind::Monomial(a) => a.iter().copied().fold(T::zero(), |s, x| s + x),
            WeightKind::RadialPower(alpha) => *alpha,
        }
    }

    /// `D = n + α`.
    pub fn effective_dimension(&self) -> T {
        T::from_usize_lossy(self.dim) + self.degree()
    }

    /// Axes on which a monomial weight has a positive exponent.
    pub fn active_axes(&self) -> Vec<usize> {
        match &self.kind {
            WeightKind::Monomial(a) => (0..a.len()).filter(|&i| a[i] > T::zero()).collect(),
            _ => Vec::new(),
        }
    }

    /// `w(x)`. Monomial factors with a non-positive base evaluate to 0, which is
    /// the continuous extension by zero across the weight's cone boundary.
    pub fn evaluate(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            WeightKind::Constant => T::one(),
            WeightKind::Monomial(a) => {
                let mut w = T::one();
                for (&xi, &ai) in x.iter().zip(a) {
                    if ai > T::zero() {
                        if xi <= T::zero() {
                            return T::zero();
                        }
                        w = w * xi.powf(ai);
                    }
                }
                w
            }
            WeightKind::RadialPower(alpha) => norm(x).powf(*alpha),
        }
    }

    /// `∇w(x)` in closed form.
    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            WeightKind::Constant => Ok(vec![T::zero(); self.dim]),
            WeightKind::Monomial(a) => {
                let mut g = vec![T::zero(); self.dim];
                for i in 0..self.dim {
                    if a[i] == T::zero() {
                        continue;
                    }
                    if x[i] <= T::zero() && a[i] < T::one() {
                        return Err(Error::Singular(format!(
                            "∂w/∂x_{} with exponent {} at x_{} = {}",
                            i + 1,
                            a[i],
                            i + 1,
                            x[i]
                        )));
                    }
                    let mut gi = a[i] * x[i].max(T::zero()).powf(a[i] - T::one());
                    for j in (0..self.dim).filter(|&j| j != i && a[j] > T::zero()) {
                        gi = gi * x[j].max(T::zero()).powf(a[j]);
                    }
                    g[i] = gi;
                }
                Ok(g)
            }
            WeightKind::RadialPower(alpha) => {
                let r = norm(x);
                if r == T::zero() {
                    if *alpha > T::one() {
                        return Ok(vec![T::zero(); self.dim]);
                    }
                    return Err(Error::Singular(format!("∇|x|^{alpha} at the origin")));
                }
                let c = *alpha * r.powf(*alpha - T::lit(2.0));
                Ok(x.iter().map(|&xi| c * xi).collect())
            }
        }
    }

    /// Checks that `w > 0` inside `cone`: monomial weights need every active
    /// axis to be constrained positive by the cone.
    pub fn check_compatible(&self, cone: &ConvexCone<T>) -> Result<()> {
        if cone.dim() != self.dim {
            return Err(Error::Domain(format!(
                "weight dimension {} does not match cone dimension {}",
                self.dim,
                cone.dim()
            )));
        }
        let active = self.active_axes();
        if active.is_empty() {
            return Ok(());
        }
        // Σ must sit inside {x_i > 0 : i active}.
        let ok = match cone.positive_axes() {
            Some(mask) => active.iter().all(|a| mask.contains(a)),
            None => {
                let (lo, hi) = cone.angular_interval().expect("planar sector");
                let half = T::lit(0.5) * T::PI();
                active.iter().all(|&a| match a {
                    0 => lo >= -half && hi <= half,
                    _ => lo >= T::zero() && hi <= T::PI(),
                })
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(
                "monomial weight is not positive throughout the cone".into(),
            ))
        }
    }
}

/// Result of the stochastic midpoint-concavity test of `w^{1/α}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConcavityCheck<T> {
    Pass { samples: usize },
    Fail { x: Vec<T>, y: Vec<T>, defect: T },
}

impl<T> ConcavityCheck<T> {
    pub fn passed(&self) -> bool {
        matches!(self, ConcavityCheck::Pass { .. })
    }
}

/// Tests `v((x+y)/2) ≥ (v(x)+v(y))/2 - 1e-12` for `v = w^{1/α}` on `samples`
/// random pairs in `Σ ∩ B_2`, returning the first violating pair.
pub fn check_concavity<T: Scalar>(
    w: &HomogeneousWeight<T>,
    cone: &ConvexCone<T>,
    samples: usize,
    seed: u64,
) -> ConcavityCheck<T> {
    let alpha = w.degree();
    if alpha == T::zero() {
        return ConcavityCheck::Pass { samples: 0 };
    }
    let inv = T::one() / alpha;
    let v = |x: &[T]| w.evaluate(x).powf(inv);
    let tol = T::lit(CONCAVITY_TOLERANCE);
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = cone.sample(&mut rng, two);
        let y = cone.sample(&mut rng, two);
        let mid: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| half * (a + b)).collect();
        let defect = half * (v(&x) + v(&y)) - v(&mid);
        if defect > tol {
            return ConcavityCheck::Fail { x, y, defect };
        }
    }
    ConcavityCheck::Pass { samples }
}

/// `∇w(x)·p / w(x) - α (w(p)/w(x))^{1/α}`; nonnegative for all `x, p ∈ Σ`
/// exactly when `w^{1/α}` is concave.
pub fn concavity_pairwise<T: Scalar>(w: &HomogeneousWeight<T>, x: &[T], p: &[T]) -> Result<T> {
    let alpha = w.degree();
    let wx = w.evaluate(x);
    if !(wx > T::zero()) {
        return Err(Error::Domain("concavity slack needs w(x) > 0".into()));
    }
    if alpha == T::zero() {
        return Ok(T::zero());
    }
    let g = w.gradient(x)?;
    let ratio = (w.evaluate(p) / wx).max(T::zero());
    Ok(dot(&g, p) / wx - alpha * ratio.powf(T::one() / alpha))
}
