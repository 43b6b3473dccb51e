//! Star-shaped trial domains `Ω = {rω : ω ∈ cap, 0 < r < R(ω)}` inside a cone.

use crate::cone::{CapGrid, ConvexCone};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Positivity floor on the radial profile.
pub const R_MIN: f64 = 1e-6;

/// A star-shaped domain stored by its radial profile on the cap grid.
#[derive(Debug, Clone)]
pub struct StarDomain<T> {
    cone: ConvexCone<T>,
    grid: CapGrid<T>,
    radial: Vec<T>,
    /// `∂R/∂φ_a` per node and angle axis, node-major.
    tangential: Vec<T>,
}

impl<T: Scalar> StarDomain<T> {
    /// `Σ ∩ B_rho`.
    pub fn ball(cone: &ConvexCone<T>, grid: &CapGrid<T>, rho: T) -> Result<Self> {
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::Domain(format!("ball radius must be positive, got {rho}")));
        }
        let axes = grid.axes().len();
        Ok(Self {
            cone: cone.clone(),
            grid: grid.clone(),
            radial: vec![rho; grid.len()],
            tangential: vec![T::zero(); grid.len() * axes],
        })
    }

    /// Domain with the given nodal radii; the tangential derivative comes from
    /// spectral differentiation on the grid.
    pub fn from_profile(cone: &ConvexCone<T>, grid: &CapGrid<T>, values: Vec<T>) -> Result<Self> {
        check_profile(grid, &values)?;
        let tangential = grid.angular_derivatives(&values);
        Ok(Self {
            cone: cone.clone(),
            grid: grid.clone(),
            radial: values,
            tangential,
        })
    }

    /// Planar domain with radii and exact angular derivatives supplied together.
    pub(crate) fn from_profile_with_derivative(
        cone: &ConvexCone<T>,
        grid: &CapGrid<T>,
        values: Vec<T>,
        derivative: Vec<T>,
    ) -> Result<Self> {
        check_profile(grid, &values)?;
        debug_assert_eq!(grid.axes().len(), 1);
        debug_assert_eq!(derivative.len(), values.len());
        Ok(Self {
            cone: cone.clone(),
            grid: grid.clone(),
            radial: values,
            tangential: derivative,
        })
    }

    /// Multiplies the profile by `1 + eps·cos(kπ(θ - θ_lo)/β)`, `β` the
    /// sector width. The cosine modes have zero slope at both cap edges.
    pub fn perturb(&self, mode: usize, eps: T) -> Result<Self> {
        let (lo, hi) = planar_interval(&self.cone)?;
        let width = hi - lo;
        let freq = T::from_usize_lossy(mode) * T::PI() / width;
        let mut radial = Vec::with_capacity(self.radial.len());
        let mut deriv = Vec::with_capacity(self.radial.len());
        for j in 0..self.grid.len() {
            let th = self.grid.theta(j);
            let arg = T::from_usize_lossy(mode) * T::PI() * (th - lo) / width;
            let factor = T::one() + eps * arg.cos();
            let r = self.radial[j];
            radial.push(r * factor);
            deriv.push(self.tangential[j] * factor - r * eps * freq * arg.sin());
        }
        Self::from_profile_with_derivative(&self.cone, &self.grid, radial, deriv)
    }

    /// `t·Ω`.
    pub fn scaled(&self, t: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(Error::Domain(format!("scale must be positive, got {t}")));
        }
        let radial: Vec<T> = self.radial.iter().map(|&r| r * t).collect();
        check_profile(&self.grid, &radial)?;
        Ok(Self {
            cone: self.cone.clone(),
            grid: self.grid.clone(),
            radial,
            tangential: self.tangential.iter().map(|&d| d * t).collect(),
        })
    }

    pub fn cone(&self) -> &ConvexCone<T> {
        &self.cone
    }

    pub fn grid(&self) -> &CapGrid<T> {
        &self.grid
    }

    pub fn radial(&self) -> &[T] {
        &self.radial
    }

    /// Angular partial derivatives of `R` at node `j`.
    pub fn tangential(&self, j: usize) -> &[T] {
        let k = self.grid.axes().len();
        &self.tangential[j * k..(j + 1) * k]
    }

    /// `|∇_S R|²` at node `j`.
    pub fn tangential_norm_sq(&self, j: usize) -> T {
        self.tangential(j)
            .iter()
            .zip(self.grid.metric(j))
            .fold(T::zero(), |acc, (&d, &h)| {
                let g = d / h;
                acc + g * g
            })
    }

    /// `R(θ)` between nodes, for planar domains.
    pub fn radius_at(&self, theta: T) -> T {
        self.grid.axes()[0].interpolate(&self.radial, theta)
    }

    /// `R'(θ)` between nodes, for planar domains.
    pub fn derivative_at(&self, theta: T) -> T {
        self.grid.axes()[0].interpolate(&self.tangential, theta)
    }
}

fn check_profile<T: Scalar>(grid: &CapGrid<T>, values: &[T]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let floor = T::lit(R_MIN);
    if let Some((node, &v)) = values
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v >= floor) || !v.is_finite())
    {
        return Err(Error::Positivity {
            node,
            value: v.as_f64(),
        });
    }
    Ok(())
}

pub(crate) fn planar_interval<T: Scalar>(cone: &ConvexCone<T>) -> Result<(T, T)> {
    match (cone.kind(), cone.angular_interval()) {
        (crate::cone::ConeKind::Full, _) => Err(Error::Unsupported(
            "cosine modes need a cap with edges; the full plane has none".into(),
        )),
        (_, Some(iv)) => Ok(iv),
        _ => Err(Error::Unsupported("mode perturbations are planar only".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::cap_quadrature;
    use std::f64::consts::PI;

    fn setup(beta: f64, n: usize) -> (ConvexCone<f64>, CapGrid<f64>) {
        let c = ConvexCone::<f64>::sector(beta).unwrap();
        let g = cap_quadrature(&c, n).unwrap();
        (c, g)
    }

    #[test]
    fn ball_has_zero_tangential_gradient() {
        let (c, g) = setup(1.3, 64);
        let b = StarDomain::ball(&c, &g, 2.0).unwrap();
        assert!(b.radial().iter().all(|&r| r == 2.0));
        assert!((0..g.len()).all(|j| b.tangential(j)[0].abs() <= 1e-10));
        assert!(StarDomain::ball(&c, &g, 0.0).is_err());
        // from_profile on constants also has (numerically) zero slope
        let f = StarDomain::from_profile(&c, &g, vec![1.0; g.len()]).unwrap();
        assert!((0..g.len()).all(|j| f.tangential(j)[0].abs() <= 1e-10));
    }

    #[test]
    fn perturb_examples() {
        // odd resolution puts a node on the bisector, where mode 2 is minimal
        let (c, g) = setup(PI / 2.0, 65);
        let b = StarDomain::ball(&c, &g, 1.0).unwrap();
        let p0 = b.perturb(0, 0.2).unwrap();
        assert!(p0.radial().iter().all(|&r| (r - 1.2).abs() < 1e-15));
        let same = b.perturb(1, 0.0).unwrap();
        assert_eq!(same.radial(), b.radial());
        let p2 = b.perturb(2, 0.1).unwrap();
        let max = p2.radial().iter().copied().fold(f64::MIN, f64::max);
        let min = p2.radial().iter().copied().fold(f64::MAX, f64::min);
        assert!((max - 1.1).abs() < 1e-6 && (min - 0.9).abs() < 1e-6);
        assert!(matches!(b.perturb(1, -1.5), Err(Error::Positivity { .. })));
    }

    #[test]
    fn from_profile_matches_perturb_exactly() {
        let beta = PI / 2.0;
        let (c, g) = setup(beta, 64);
        let vals: Vec<f64> = (0..g.len())
            .map(|j| 1.0 + 0.1 * (2.0 * PI * g.theta(j) / beta).cos())
            .collect();
        let from = StarDomain::from_profile(&c, &g, vals).unwrap();
        let pert = StarDomain::ball(&c, &g, 1.0).unwrap().perturb(2, 0.1).unwrap();
        assert_eq!(from.radial(), pert.radial());
        let again = StarDomain::from_profile(&c, &g, pert.radial().to_vec()).unwrap();
        assert_eq!(again.radial(), pert.radial());
    }

    #[test]
    fn profile_errors() {
        let (c, g) = setup(1.0, 16);
        assert!(matches!(
            StarDomain::from_profile(&c, &g, vec![1.0; 3]),
            Err(Error::LengthMismatch { expected: 16, got: 3 })
        ));
        let mut v = vec![1.0; 16];
        v[4] = -0.5;
        assert!(matches!(
            StarDomain::from_profile(&c, &g, v),
            Err(Error::Positivity { node: 4, .. })
        ));
    }

    #[test]
    fn differentiation_accuracy() {
        let beta = PI / 2.0;
        let (c, g) = setup(beta, 128);
        let k = 2.0 * PI / beta;
        let vals: Vec<f64> = (0..g.len()).map(|j| 1.0 + 0.1 * (k * g.theta(j)).cos()).collect();
        let d = StarDomain::from_profile(&c, &g, vals).unwrap();
        let err = (0..g.len())
            .map(|j| (d.tangential(j)[0] + 0.1 * k * (k * g.theta(j)).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "max derivative error {err}");
    }

    #[test]
    fn interpolation_between_nodes() {
        let beta = 2.0;
        let (c, g) = setup(beta, 64);
        let d = StarDomain::ball(&c, &g, 1.0).unwrap().perturb(3, 0.2).unwrap();
        for i in 0..=50 {
            let th = beta * i as f64 / 50.0;
            let arg = 3.0 * PI * th / beta;
            assert!((d.radius_at(th) - (1.0 + 0.2 * arg.cos())).abs() < 1e-11);
            assert!((d.derivative_at(th) + 0.2 * 3.0 * PI / beta * arg.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn full_plane_rejects_modes() {
        let c = ConvexCone::<f64>::full(2).unwrap();
        let g = cap_quadrature(&c, 16).unwrap();
        let b = StarDomain::ball(&c, &g, 1.0).unwrap();
        assert!(b.perturb(1, 0.1).is_err());
    }
}
