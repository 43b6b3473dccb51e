//! Weighted volume, perimeter inside the cone, and the isoperimetric quotient.
//!
//! Both integrals are reduced to the cap using homogeneity: along a ray,
//! `∫_0^R w(rω) r^{n-1} dr = w(ω) R^D / D`, and the radial-graph surface
//! element is `R^{n-2} √(R² + |∇_S R|²) dω`. The lateral part of `∂Ω` lies on
//! `∂Σ` and never enters the perimeter.

use crate::cone::{cap_quadrature, CapGrid, ConeKind, ConvexCone};
use crate::domain::StarDomain;
use crate::error::{Error, Result};
use crate::special::gamma;
use crate::weight::{HomogeneousWeight, WeightKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureReport<T> {
    pub perimeter: T,
    pub volume: T,
    pub effective_dimension: T,
    pub quotient: T,
    pub ball_quotient: T,
    pub deficit: T,
    pub resolution: usize,
}

/// Weighted perimeter, volume and quotient of `Σ ∩ B_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallReference<T> {
    pub perimeter: T,
    pub volume: T,
    pub quotient: T,
}

/// `Q = P / m^{(D-1)/D}`.
pub fn isoperimetric_quotient<T: Scalar>(perimeter: T, volume: T, dim_eff: T) -> T {
    perimeter / volume.powf((dim_eff - T::one()) / dim_eff)
}

/// Weight values at the cap nodes.
pub fn weight_on_cap<T: Scalar>(grid: &CapGrid<T>, w: &HomogeneousWeight<T>) -> Vec<T> {
    (0..grid.len()).map(|j| w.evaluate(grid.direction(j))).collect()
}

fn check_pair<T: Scalar>(dom: &StarDomain<T>, w: &HomogeneousWeight<T>) -> Result<()> {
    w.check_compatible(dom.cone())
}

/// `m(Ω) = ∫_Ω w`.
pub fn volume<T: Scalar>(dom: &StarDomain<T>, w: &HomogeneousWeight<T>) -> Result<T> {
    check_pair(dom, w)?;
    let grid = dom.grid();
    let d = w.effective_dimension();
    let wq = grid.quad_weights();
    let sum = (0..grid.len()).fold(T::zero(), |acc, j| {
        acc + wq[j] * w.evaluate(grid.direction(j)) * dom.radial()[j].powf(d)
    });
    Ok(sum / d)
}

/// `P_Σ(Ω) = ∫_{Σ∩∂Ω} w dσ`.
pub fn perimeter_inside_cone<T: Scalar>(dom: &StarDomain<T>, w: &HomogeneousWeight<T>) -> Result<T> {
    check_pair(dom, w)?;
    let grid = dom.grid();
    let exp = w.effective_dimension() - T::lit(2.0);
    let wq = grid.quad_weights();
    Ok((0..grid.len()).fold(T::zero(), |acc, j| {
        let r = dom.radial()[j];
        let elem = r.powf(exp) * (r * r + dom.tangential_norm_sq(j)).sqrt();
        acc + wq[j] * w.evaluate(grid.direction(j)) * elem
    }))
}

/// Full report for `Ω`, including the deficit against `Σ ∩ B_1` computed on
/// the same grid.
pub fn quotient<T: Scalar>(dom: &StarDomain<T>, w: &HomogeneousWeight<T>) -> Result<MeasureReport<T>> {
    let perimeter = perimeter_inside_cone(dom, w)?;
    let volume = volume(dom, w)?;
    let d = w.effective_dimension();
    let q = isoperimetric_quotient(perimeter, volume, d);
    let ball = ball_reference(dom.cone(), dom.grid(), w)?;
    Ok(MeasureReport {
        perimeter,
        volume,
        effective_dimension: d,
        quotient: q,
        ball_quotient: ball.quotient,
        deficit: q / ball.quotient - T::one(),
        resolution: dom.grid().resolution(),
    })
}

/// `(P, m, Q)` of `Σ ∩ B_1` by cap quadrature: `P = ∫_cap w`, `m = P / D`.
pub fn ball_reference<T: Scalar>(
    cone: &ConvexCone<T>,
    grid: &CapGrid<T>,
    w: &HomogeneousWeight<T>,
) -> Result<BallReference<T>> {
    w.check_compatible(cone)?;
    let d = w.effective_dimension();
    let p = grid.integrate(&weight_on_cap(grid, w));
    let m = p / d;
    Ok(BallReference {
        perimeter: p,
        volume: m,
        quotient: isoperimetric_quotient(p, m, d),
    })
}

/// Convenience wrapper building its own grid of resolution `n`.
pub fn ball_reference_at<T: Scalar>(
    cone: &ConvexCone<T>,
    w: &HomogeneousWeight<T>,
    n: usize,
) -> Result<BallReference<T>> {
    let grid = cap_quadrature(cone, n)?;
    ball_reference(cone, &grid, w)
}

/// Closed form of `Σ ∩ B_1` where one exists.
///
/// For monomial (and constant) weights on orthant-type cones, factoring
/// `∫_Σ x^A e^{-|x|²} dx` in Cartesian and in polar coordinates gives
/// `P = 2 ∏_{masked} Γ((A_i+1)/2)/2 · ∏_{free} Γ(1/2) / Γ(D/2)`; with every
/// axis masked this is `∏ Γ((A_i+1)/2) / (2^{n-1} Γ(D/2))`. Constant and
/// radial weights on planar sectors have `P = β`. In all cases `m = P / D`.
pub fn ball_closed_form<T: Scalar>(
    cone: &ConvexCone<T>,
    w: &HomogeneousWeight<T>,
) -> Result<BallReference<T>> {
    w.check_compatible(cone)?;
    let d = w.effective_dimension();
    let unsupported = || {
        Error::Unsupported(format!(
            "no closed form for {:?} weight on {:?} cone",
            w.kind(),
            cone.kind()
        ))
    };
    let p = match (w.kind(), cone.kind()) {
        (WeightKind::Constant | WeightKind::RadialPower(_), ConeKind::Sector { beta }) => *beta,
        (WeightKind::RadialPower(_), _) if cone.dim() == 2 => {
            let (lo, hi) = cone.angular_interval().ok_or_else(unsupported)?;
            hi - lo
        }
        (WeightKind::Constant | WeightKind::Monomial(_), _) => {
            let mask = cone.positive_axes().or_else(|| sector_as_orthant(cone)).ok_or_else(unsupported)?;
            let zeros = vec![T::zero(); cone.dim()];
            let exps = match w.kind() {
                WeightKind::Monomial(a) => a.as_slice(),
                _ => zeros.as_slice(),
            };
            let half = T::lit(0.5);
            let mut prod = T::lit(2.0) / gamma(half * d);
            for (i, &a) in exps.iter().enumerate() {
                if mask.contains(&i) {
                    prod = prod * gamma(half * (a + T::one())) * half;
                } else {
                    prod = prod * gamma(half);
                }
            }
            prod
        }
        _ => return Err(unsupported()),
    };
    let m = p / d;
    Ok(BallReference {
        perimeter: p,
        volume: m,
        quotient: isoperimetric_quotient(p, m, d),
    })
}

/// Sectors of angle π/2 and π coincide with the quadrant and upper half-plane.
fn sector_as_orthant<T: Scalar>(cone: &ConvexCone<T>) -> Option<Vec<usize>> {
    let ConeKind::Sector { beta } = cone.kind() else {
        return None;
    };
    let tol = T::lit(1e-14);
    if (*beta - T::FRAC_PI_2()).abs() < tol {
        Some(vec![0, 1])
    } else if (*beta - T::PI()).abs() < tol {
        Some(vec![1])
    } else {
        None
    }
}
