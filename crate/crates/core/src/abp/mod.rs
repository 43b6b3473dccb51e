//! Discrete checks of the ABP argument on planar domains.
//!
//! The weighted Neumann problem `div(w∇u) = b w` in `Ω`, `∂u/∂ν = 1` on the
//! free boundary, is solved by finite volumes on the reference rectangle
//! `(s, θ) ∈ (0, 1) × span` under `x = c + s R(θ) (cos θ, sin θ)`. The
//! certificate then checks the lower contact set, the covering of the unit
//! ball by the gradient image, and each inequality of the pointwise chain.

mod certificate;
mod solver;
pub mod sparse;

pub use certificate::{
    contact_set, gradient_image_cover, node_links, pointwise_residual, verify_chain, weighted_amgm,
    AbpCertificate, ChainLinks, ChainOptions, Coverage, NodeDump, CHAIN_FACTOR, CONTACT_FACTOR,
    COVER_ETA, COVER_KAPPA,
};
pub use solver::{reference_measures, solve_neumann, NeumannSolution, SolverOptions};

use crate::cone::{ConeKind, ConvexCone};
use crate::domain::StarDomain;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Angular extent of the reference rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Span<T> {
    /// `θ ∈ [0, 2π)`, for domains whose closure lies inside the cone.
    Periodic,
    /// `θ ∈ [lo, hi]` with lateral sides on `∂Σ`.
    Sector { lo: T, hi: T },
}

#[derive(Debug, Clone)]
pub enum Profile<T> {
    Circle(T),
    Star(StarDomain<T>),
}

/// `Ω = {c + s R(θ) ω(θ) : 0 ≤ s < 1, θ ∈ span}`.
#[derive(Debug, Clone)]
pub struct MappedDomain<T> {
    cone: ConvexCone<T>,
    center: [T; 2],
    span: Span<T>,
    profile: Profile<T>,
}

impl<T: Scalar> MappedDomain<T> {
    /// Disk `B_radius(center)`, whose closure must lie inside `cone`.
    pub fn disk(cone: &ConvexCone<T>, center: [T; 2], radius: T) -> Result<Self> {
        if cone.dim() != 2 {
            return Err(Error::Unsupported("mapped domains are planar".into()));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Domain(format!("disk radius must be positive, got {radius}")));
        }
        // Distance from the center to each bounding line through the origin.
        let clearance = cone
            .normals()
            .iter()
            .map(|nu| nu[0] * center[0] + nu[1] * center[1])
            .fold(T::infinity(), T::min);
        if !(clearance > radius) {
            return Err(Error::Domain(format!(
                "disk of radius {radius} around ({}, {}) is not compactly inside the cone",
                center[0], center[1]
            )));
        }
        Ok(Self {
            cone: cone.clone(),
            center,
            span: Span::Periodic,
            profile: Profile::Circle(radius),
        })
    }

    /// A star-shaped domain about the origin; its lateral sides lie on `∂Σ`
    /// unless the cone is the whole plane.
    pub fn star(dom: &StarDomain<T>) -> Result<Self> {
        let cone = dom.cone();
        let (lo, hi) = cone
            .angular_interval()
            .ok_or_else(|| Error::Unsupported("mapped domains are planar".into()))?;
        let span = if matches!(cone.kind(), ConeKind::Full) {
            Span::Periodic
        } else {
            Span::Sector { lo, hi }
        };
        Ok(Self {
            cone: cone.clone(),
            center: [T::zero(), T::zero()],
            span,
            profile: Profile::Star(dom.clone()),
        })
    }

    pub fn cone(&self) -> &ConvexCone<T> {
        &self.cone
    }

    pub fn center(&self) -> [T; 2] {
        self.center
    }

    pub fn span(&self) -> Span<T> {
        self.span
    }

    pub fn profile(&self) -> &Profile<T> {
        &self.profile
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.span, Span::Periodic)
    }

    /// `(lo, hi)` of the angular span.
    pub fn interval(&self) -> (T, T) {
        match self.span {
            Span::Periodic => (T::zero(), T::PI() + T::PI()),
            Span::Sector { lo, hi } => (lo, hi),
        }
    }

    pub fn radius(&self, theta: T) -> T {
        match &self.profile {
            Profile::Circle(r) => *r,
            Profile::Star(d) => d.radius_at(theta),
        }
    }

    pub fn slope(&self, theta: T) -> T {
        match &self.profile {
            Profile::Circle(_) => T::zero(),
            Profile::Star(d) => d.derivative_at(theta),
        }
    }

    /// `c + s R(θ) ω(θ)`.
    pub fn point(&self, s: T, theta: T) -> [T; 2] {
        let r = s * self.radius(theta);
        [self.center[0] + r * theta.cos(), self.center[1] + r * theta.sin()]
    }

    pub(crate) fn centered_at_origin(&self) -> bool {
        self.center == [T::zero(), T::zero()]
    }
}
