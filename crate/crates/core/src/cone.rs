//! Open convex cones given as intersections of homogeneous half-spaces, and
//! angular quadrature over their spherical caps.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature::AxisRule;
use crate::scalar::{dot, Scalar};

/// Tolerance on the unit length of stored normals.
pub const NORMAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ConeKind<T> {
    /// Planar sector `{0 < θ < beta}`.
    Sector { beta: T },
    /// `{x : x_i > 0 for i in mask}`, zero-based axes, at least two of them.
    Orthant { mask: Vec<usize> },
    /// `{x : x_axis > 0}`.
    Halfspace { axis: usize },
    Full,
}

/// An open convex cone `{x : ν_i · x > 0 for all i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCone<T> {
    dim: usize,
    normals: Vec<Vec<T>>,
    kind: ConeKind<T>,
}

impl<T: Scalar> ConvexCone<T> {
    /// Planar cone spanned by the directions with polar angle in `(0, beta)`.
    pub fn sector(beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::Domain(format!("sector angle must be positive, got {beta}")));
        }
        if beta > T::PI() {
            return Err(Error::NonConvex(format!("sector angle {beta} exceeds π")));
        }
        let mut normals = vec![vec![T::zero(), T::one()]];
        if beta < T::PI() {
            let n = vec![beta.sin(), -beta.cos()];
            normals.push(n);
        }
        Ok(Self {
            dim: 2,
            normals,
            kind: ConeKind::Sector { beta },
        })
    }

    /// `{x ∈ ℝⁿ : x_i > 0 for i in mask}` with zero-based axis indices.
    /// An empty mask gives the whole space and a single axis a half-space.
    pub fn orthant(n: usize, mask: &[usize]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
        }
        let mut mask = mask.to_vec();
        mask.sort_unstable();
        mask.dedup();
        if let Some(&bad) = mask.iter().find(|&&a| a >= n) {
            return Err(Error::Domain(format!("axis {bad} out of range for dimension {n}")));
        }
        let normals = mask
            .iter()
            .map(|&a| {
                let mut v = vec![T::zero(); n];
                v[a] = T::one();
                v
            })
            .collect();
        let kind = match mask.len() {
            0 => ConeKind::Full,
            1 => ConeKind::Halfspace { axis: mask[0] },
            _ => ConeKind::Orthant { mask },
        };
        Ok(Self { dim: n, normals, kind })
    }

    pub fn halfspace(n: usize, axis: usize) -> Result<Self> {
        Self::orthant(n, &[axis])
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::orthant(n, &[])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Vec<T>] {
        &self.normals
    }

    pub fn kind(&self) -> &ConeKind<T> {
        &self.kind
    }

    /// Strict membership; points on `∂Σ` are outside.
    pub fn contains(&self, x: &[T]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        self.normals.iter().all(|n| dot(n, x) > T::zero())
    }

    /// `min_i ν_i · x`, or `+∞` for the whole space.
    pub fn margin(&self, x: &[T]) -> T {
        self.normals
            .iter()
            .map(|n| dot(n, x))
            .fold(T::infinity(), T::min)
    }

    /// Axes constrained positive, for orthant-type cones.
    pub fn positive_axes(&self) -> Option<Vec<usize>> {
        match &self.kind {
            ConeKind::Sector { .. } => None,
            ConeKind::Orthant { mask } => Some(mask.clone()),
            ConeKind::Halfspace { axis } => Some(vec![*axis]),
            ConeKind::Full => Some(Vec::new()),
        }
    }

    /// A unit direction strictly inside the cone.
    pub fn interior_direction(&self) -> Vec<T> {
        let mut v = match (&self.kind, self.angular_interval()) {
            (_, Some((lo, hi))) => {
                let mid = T::lit(0.5) * (lo + hi);
                vec![mid.cos(), mid.sin()]
            }
            _ => {
                let mut v = vec![T::zero(); self.dim];
                if self.normals.is_empty() {
                    v[0] = T::one();
                }
                for n in &self.normals {
                    for (vi, &ni) in v.iter_mut().zip(n) {
                        *vi = *vi + ni;
                    }
                }
                v
            }
        };
        let len = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x = *x / len);
        v
    }

    /// Polar-angle interval of the cap for planar cones.
    pub fn angular_interval(&self) -> Option<(T, T)> {
        if self.dim != 2 {
            return None;
        }
        let pi = T::PI();
        let half = T::lit(0.5) * pi;
        Some(match &self.kind {
            ConeKind::Sector { beta } => (T::zero(), *beta),
            ConeKind::Orthant { .. } => (T::zero(), half),
            ConeKind::Halfspace { axis: 0 } => (-half, half),
            ConeKind::Halfspace { .. } => (T::zero(), pi),
            ConeKind::Full => (T::zero(), pi + pi),
        })
    }

    /// Angle intervals of the hyperspherical coordinates `φ_1..φ_{n-1}` whose
    /// box is exactly the cap.
    fn angle_box(&self) -> Result<Vec<(T, T)>> {
        if let Some(iv) = self.angular_interval() {
            return Ok(vec![iv]);
        }
        let n = self.dim;
        let mask = self.positive_axes().ok_or_else(|| {
            Error::UnsupportedCap("only sectors, orthants, half-spaces and full space".into())
        })?;
        let pi = T::PI();
        let half = T::lit(0.5) * pi;
        let mut out = Vec::with_capacity(n - 1);
        for axis in 0..n - 2 {
            out.push(if mask.contains(&axis) {
                (T::zero(), half)
            } else {
                (T::zero(), pi)
            });
        }
        let a = mask.contains(&(n - 2));
        let b = mask.contains(&(n - 1));
        out.push(match (a, b) {
            (true, true) => (T::zero(), half),
            (true, false) => (-half, half),
            (false, true) => (T::zero(), pi),
            (false, false) => (T::zero(), pi + pi),
        });
        Ok(out)
    }

    /// Samples a point of `Σ ∩ B_radius` (never on `∂Σ`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, radius: T) -> Vec<T> {
        loop {
            let x = self.sample_once(rng, radius);
            if self.contains(&x) {
                return x;
            }
        }
    }

    fn sample_once<R: Rng + ?Sized>(&self, rng: &mut R, radius: T) -> Vec<T> {
        let u: f64 = rng.random();
        let r = radius * T::lit(u.powf(1.0 / self.dim as f64));
        if let Some((lo, hi)) = self.angular_interval() {
            let v: f64 = rng.random();
            let th = lo + (hi - lo) * T::lit(v);
            return vec![r * th.cos(), r * th.sin()];
        }
        let mask = self.positive_axes().unwrap_or_default();
        let mut g: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
        for &a in &mask {
            g[a] = g[a].abs();
        }
        let len = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        g.iter().map(|&x| r * T::lit(x / len)).collect()
    }
}

struct CapGridInner<T> {
    dim: usize,
    resolution: usize,
    axes: Vec<AxisRule<T>>,
    directions: Vec<T>,
    weights: Vec<T>,
    angles: Vec<T>,
    scale: Vec<T>,
}

/// Tensor quadrature over the cap `Σ ∩ S^{n-1}`.
///
/// Nodes are ordered row-major over the angle axes (last axis fastest). For
/// planar cones there is a single axis, the polar angle θ.
#[derive(Clone)]
pub struct CapGrid<T> {
    inner: Arc<CapGridInner<T>>,
}

impl<T> std::fmt::Debug for CapGrid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CapGrid")
            .field("dim", &self.inner.dim)
            .field("resolution", &self.inner.resolution)
            .field("nodes", &self.inner.weights.len())
            .finish()
    }
}

/// Builds the angular quadrature of `cone` with `n` points per angle axis.
pub fn cap_quadrature<T: Scalar>(cone: &ConvexCone<T>, n: usize) -> Result<CapGrid<T>> {
    if n < 8 {
        return Err(Error::Domain(format!("cap resolution must be at least 8, got {n}")));
    }
    let dim = cone.dim();
    let boxes = cone.angle_box()?;
    let axes: Vec<AxisRule<T>> = boxes.iter().map(|&(lo, hi)| AxisRule::new(lo, hi, n)).collect();
    let naxes = axes.len();
    let count = n.pow(naxes as u32);

    let mut directions = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut angles = Vec::with_capacity(count * naxes);
    let mut scale = Vec::with_capacity(count * naxes);
    let mut idx = vec![0usize; naxes];
    for _ in 0..count {
        let phi: Vec<T> = idx.iter().zip(&axes).map(|(&i, ax)| ax.theta[i]).collect();
        let mut w = T::one();
        for (a, &i) in idx.iter().enumerate() {
            w = w * axes[a].weights[i];
        }
        // Spherical Jacobian ∏ sin^{n-1-i} φ_i and metric factors h_i = ∏_{k<i} sin φ_k.
        let mut sin_prod = T::one();
        for (a, &p) in phi.iter().enumerate() {
            scale.push(sin_prod);
            if a + 1 < naxes {
                w = w * p.sin().powi((naxes - 1 - a) as i32);
            }
            sin_prod = sin_prod * p.sin();
        }
        let mut sin_prod = T::one();
        for &p in &phi {
            directions.push(sin_prod * p.cos());
            sin_prod = sin_prod * p.sin();
        }
        directions.push(sin_prod);
        weights.push(w);
        angles.extend_from_slice(&phi);

        for a in (0..naxes).rev() {
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(CapGrid {
        inner: Arc::new(CapGridInner {
            dim,
            resolution: n,
            axes,
            directions,
            weights,
            angles,
            scale,
        }),
    })
}

impl<T: Scalar> CapGrid<T> {
    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per angle axis.
    pub fn resolution(&self) -> usize {
        self.inner.resolution
    }

    pub fn len(&self) -> usize {
        self.inner.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.weights.is_empty()
    }

    pub fn axes(&self) -> &[AxisRule<T>] {
        &self.inner.axes
    }

    pub fn direction(&self, j: usize) -> &[T] {
        let d = self.inner.dim;
        &self.inner.directions[j * d..(j + 1) * d]
    }

    pub fn quad_weights(&self) -> &[T] {
        &self.inner.weights
    }

    /// Angle coordinates of node `j`.
    pub fn angles(&self, j: usize) -> &[T] {
        let k = self.inner.axes.len();
        &self.inner.angles[j * k..(j + 1) * k]
    }

    /// Polar angle of node `j` on a planar grid.
    pub fn theta(&self, j: usize) -> T {
        self.angles(j)[0]
    }

    /// Metric factors `h_i` with `|∇_S f|² = Σ (∂_{φ_i} f / h_i)²`.
    pub fn metric(&self, j: usize) -> &[T] {
        let k = self.inner.axes.len();
        &self.inner.scale[j * k..(j + 1) * k]
    }

    /// Partial derivatives of nodal `values` along each angle axis, laid out
    /// node-major (`out[j * axes + a]`).
    pub fn angular_derivatives(&self, values: &[T]) -> Vec<T> {
        let axes = &self.inner.axes;
        let k = axes.len();
        let n = self.inner.resolution;
        let count = self.len();
        let mut out = vec![T::zero(); count * k];
        for (a, ax) in axes.iter().enumerate() {
            let stride = n.pow((k - 1 - a) as u32);
            for base in 0..count {
                // Visit each line along axis `a` once, from its first node.
                if (base / stride) % n != 0 {
                    continue;
                }
                let d = ax.differentiate_strided(values, base, stride);
                for (i, di) in d.into_iter().enumerate() {
                    out[(base + i * stride) * k + a] = di;
                }
            }
        }
        out
    }

    /// Integrates nodal samples over the cap.
    pub fn integrate(&self, values: &[T]) -> T {
        self.inner
            .weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
    }

    /// Unweighted measure of the cap.
    pub fn cap_measure(&self) -> T {
        self.inner.weights.iter().copied().fold(T::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn sector_normals() {
        let half = ConvexCone::<f64>::sector(PI).unwrap();
        assert_eq!(half.normals(), &[vec![0.0, 1.0]]);
        let q = ConvexCone::<f64>::sector(PI / 2.0).unwrap();
        assert_eq!(q.normals().len(), 2);
        assert!((q.normals()[1][0] - 1.0).abs() < 1e-15 && q.normals()[1][1].abs() < 1e-15);
        assert!(matches!(ConvexCone::<f64>::sector(1.5 * PI), Err(Error::NonConvex(_))));
        assert!(ConvexCone::<f64>::sector(0.0).is_err());
        assert!(ConvexCone::<f64>::sector(-1.0).is_err());
    }

    #[test]
    fn orthant_kinds() {
        let q = ConvexCone::<f64>::orthant(2, &[0, 1]).unwrap();
        assert!(matches!(q.kind(), ConeKind::Orthant { .. }));
        let h = ConvexCone::<f64>::orthant(3, &[2]).unwrap();
        assert_eq!(h.kind(), &ConeKind::Halfspace { axis: 2 });
        assert!(h.contains(&[-5.0, 3.0, 0.1]));
        let f = ConvexCone::<f64>::orthant(2, &[]).unwrap();
        assert_eq!(f.kind(), &ConeKind::Full);
        assert!(f.contains(&[-1.0, -1.0]));
        assert!(ConvexCone::<f64>::orthant(2, &[2]).is_err());
        assert!(ConvexCone::<f64>::orthant(1, &[]).is_err());
    }

    #[test]
    fn membership_is_strict() {
        let q = ConvexCone::<f64>::orthant(2, &[0, 1]).unwrap();
        assert!(q.contains(&[1.0, 1.0]));
        assert!(!q.contains(&[-1.0, 1.0]));
        assert!(!q.contains(&[0.0, 1.0]));
    }

    #[test]
    fn normals_are_unit_and_interior_direction_is_inside() {
        let cones = [
            ConvexCone::<f64>::sector(0.3).unwrap(),
            ConvexCone::<f64>::sector(2.7).unwrap(),
            ConvexCone::<f64>::sector(PI).unwrap(),
            ConvexCone::<f64>::orthant(3, &[0, 1, 2]).unwrap(),
            ConvexCone::<f64>::orthant(4, &[1, 3]).unwrap(),
            ConvexCone::<f64>::full(3).unwrap(),
        ];
        for c in &cones {
            for n in c.normals() {
                assert!((dot(n, n).sqrt() - 1.0).abs() < NORMAL_TOLERANCE);
            }
            let d = c.interior_direction();
            assert!(c.margin(&d) > 0.0, "{:?}", c.kind());
        }
    }

    #[test]
    fn samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = ConvexCone::<f64>::orthant(3, &[0, 2]).unwrap();
        for _ in 0..1000 {
            let x = c.sample(&mut rng, 2.0);
            assert!(c.contains(&x));
            assert!(dot(&x, &x).sqrt() <= 2.0);
        }
    }

    #[test]
    fn sector_cap_measure_and_moment() {
        let grid = cap_quadrature(&ConvexCone::<f64>::sector(PI / 2.0).unwrap(), 64).unwrap();
        assert!((grid.cap_measure() - PI / 2.0).abs() < 1e-10);
        let f: Vec<f64> = (0..grid.len())
            .map(|j| grid.theta(j).cos() * grid.theta(j).sin())
            .collect();
        assert!((grid.integrate(&f) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn octant_area() {
        let c = ConvexCone::<f64>::orthant(3, &[0, 1, 2]).unwrap();
        let grid = cap_quadrature(&c, 32).unwrap();
        assert!((grid.cap_measure() - PI / 2.0).abs() < 1e-8);
        for j in 0..grid.len() {
            let d = grid.direction(j);
            assert!((dot(d, d).sqrt() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn full_and_half_spheres() {
        let s2 = cap_quadrature(&ConvexCone::<f64>::full(3).unwrap(), 24).unwrap();
        assert!((s2.cap_measure() - 4.0 * PI).abs() < 1e-9);
        let s3 = cap_quadrature(&ConvexCone::<f64>::halfspace(4, 1).unwrap(), 16).unwrap();
        // |S³| / 2 = π²
        assert!((s3.cap_measure() - PI * PI).abs() < 1e-8);
    }

    #[test]
    fn rejects_small_resolution() {
        let c = ConvexCone::<f64>::sector(1.0).unwrap();
        assert!(cap_quadrature(&c, 4).is_err());
    }

    #[test]
    fn single_precision_grid() {
        let grid = cap_quadrature(&ConvexCone::<f32>::sector(1.0).unwrap(), 64).unwrap();
        assert!((grid.cap_measure() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn quadrature_converges_fast() {
        // Smooth test function on a sector: error should drop at least 4x per doubling.
        let c = ConvexCone::<f64>::sector(2.0).unwrap();
        let exact = (0.5f64 * 2.0).exp() - 1.0;
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let g = cap_quadrature(&c, n).unwrap();
            let f: Vec<f64> = (0..g.len()).map(|j| 0.5 * (0.5 * g.theta(j)).exp()).collect();
            errs.push((g.integrate(&f) - exact).abs());
        }
        for w in errs.windows(2) {
            assert!(w[1] < 1e-14 || w[0] / w[1] >= 4.0, "{errs:?}");
        }
    }
}
