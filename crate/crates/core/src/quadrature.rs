//! One-dimensional Gauss–Legendre rules, barycentric interpolation and
//! spectral differentiation on the rule's nodes.
//!
//! Angular axes use a Gauss–Legendre rule in a reference variable
//! `t ∈ (0, 1)` composed with the cubic smoothstep `θ = lo + (hi - lo)(3t² - 2t³)`.
//! The map clusters nodes at the interval ends, so integrands with
//! algebraic endpoint behaviour (monomial weights with non-integer
//! exponents vanish like `θ^A` at a cone edge) still converge fast.

use crate::scalar::Scalar;

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Computes the `n`-point rule by Newton iteration on `P_n`.
pub fn gauss_legendre<T: Scalar>(n: usize) -> GaussLegendre<T> {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let quarter = T::lit(0.25);
    let half = T::lit(0.5);
    let tol = T::epsilon() * T::lit(4.0);
    for i in 0..n.div_ceil(2) {
        let k = T::from_usize_lossy(i + 1);
        // Tricomi initial guess, descending from +1.
        let mut x = (T::PI() * (k - quarter) / (nf + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= tol {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    GaussLegendre { nodes, weights }
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Cubic smoothstep `S(t) = 3t² - 2t³` on `[0, 1]`.
#[inline]
pub(crate) fn smoothstep<T: Scalar>(t: T) -> T {
    t * t * (T::lit(3.0) - T::lit(2.0) * t)
}

#[inline]
pub(crate) fn smoothstep_derivative<T: Scalar>(t: T) -> T {
    T::lit(6.0) * t * (T::one() - t)
}

/// Inverse of [`smoothstep`] on `[0, 1]`.
#[inline]
pub(crate) fn smoothstep_inverse<T: Scalar>(y: T) -> T {
    let y = y.max(T::zero()).min(T::one());
    T::lit(0.5) - ((T::one() - T::lit(2.0) * y).asin() / T::lit(3.0)).sin()
}

/// A mapped Gauss–Legendre rule on an angular interval `[lo, hi]`, together
/// with the data needed to interpolate and differentiate nodal samples.
#[derive(Debug, Clone)]
pub struct AxisRule<T> {
    pub lo: T,
    pub hi: T,
    /// Reference nodes in `(0, 1)`.
    pub t: Vec<T>,
    /// Angles `lo + (hi - lo) S(t)`.
    pub theta: Vec<T>,
    /// Quadrature weights for `dθ`.
    pub weights: Vec<T>,
    /// `dθ/dt` at each node.
    dtheta_dt: Vec<T>,
    bary: Vec<T>,
    /// Row-major `n × n` spectral differentiation matrix in `t`.
    diff: Vec<T>,
}

impl<T: Scalar> AxisRule<T> {
    pub fn new(lo: T, hi: T, n: usize) -> Self {
        let gl = gauss_legendre::<T>(n);
        let half = T::lit(0.5);
        let span = hi - lo;
        let mut t = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut dtheta_dt = Vec::with_capacity(n);
        let mut bary = Vec::with_capacity(n);
        for (j, (&x, &w)) in gl.nodes.iter().zip(&gl.weights).enumerate() {
            let tj = half * (x + T::one());
            let jac = span * smoothstep_derivative(tj);
            t.push(tj);
            theta.push(lo + span * smoothstep(tj));
            weights.push(half * w * jac);
            dtheta_dt.push(jac);
            // Barycentric weights of Gauss–Legendre nodes: (-1)^j sqrt((1-x²) w).
            let mag = ((T::one() - x * x) * w).sqrt();
            bary.push(if j % 2 == 0 { mag } else { -mag });
        }
        let mut diff = vec![T::zero(); n * n];
        for i in 0..n {
            let mut diag = T::zero();
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (t[i] - t[j]);
                    diff[i * n + j] = d;
                    diag = diag - d;
                }
            }
            diff[i * n + i] = diag;
        }
        Self {
            lo,
            hi,
            t,
            theta,
            weights,
            dtheta_dt,
            bary,
            diff,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Derivative with respect to θ of the interpolant of `values` (one per node),
    /// evaluated at the nodes. `values` may be strided: element `j` sits at
    /// `values[offset + j * stride]`.
    pub fn differentiate_strided(&self, values: &[T], offset: usize, stride: usize) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let fi = values[offset + i * stride];
                let row = &self.diff[i * n..(i + 1) * n];
                let mut acc = T::zero();
                for (j, &d) in row.iter().enumerate() {
                    if j != i {
                        acc = acc + d * (values[offset + j * stride] - fi);
                    }
                }
                acc / self.dtheta_dt[i]
            })
            .collect()
    }

    pub fn differentiate(&self, values: &[T]) -> Vec<T> {
        self.differentiate_strided(values, 0, 1)
    }

    /// Evaluates the interpolant of `values` at angle `theta ∈ [lo, hi]`.
    pub fn interpolate(&self, values: &[T], theta: T) -> T {
        let y = (theta - self.lo) / (self.hi - self.lo);
        let t = smoothstep_inverse(y);
        let mut num = T::zero();
        let mut den = T::zero();
        for (j, (&tj, &bj)) in self.t.iter().zip(&self.bary).enumerate() {
            let dt = t - tj;
            if dt == T::zero() {
                return values[j];
            }
            let c = bj / dt;
            num = num + c * values[j];
            den = den + c;
        }
        num / den
    }
}
