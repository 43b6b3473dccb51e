//! Weighted isoperimetric problems in convex cones.
//!
//! For a homogeneous weight `w` of degree `α` on an open convex cone `Σ ⊂ ℝⁿ`,
//! the quotient `P_Σ(Ω) / m(Ω)^{(D-1)/D}` with `D = n + α` is minimized by
//! `Σ ∩ B_1` whenever `w^{1/α}` is concave. This crate evaluates the quotient
//! on star-shaped domains by cap quadrature, searches for better shapes,
//! scans sector angles for the radial weight `|x|^α` (where the ball stops
//! being optimal), and checks each step of the ABP argument on discrete
//! solutions of the weighted Neumann problem.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod abp;
pub mod cone;
pub mod domain;
pub mod error;
pub mod measure;
pub mod optimize;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod weight;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Cone = cone::ConvexCone<f64>;
pub type Grid = cone::CapGrid<f64>;
pub type Weight = weight::HomogeneousWeight<f64>;
pub type Domain = domain::StarDomain<f64>;
pub type Report = measure::MeasureReport<f64>;
pub type BallReference = measure::BallReference<f64>;
pub type OptimResult = optimize::OptimResult<f64>;
pub type AngleScan = optimize::AngleScan<f64>;
pub type MappedDomain = abp::MappedDomain<f64>;
pub type NeumannSolution = abp::NeumannSolution<f64>;
pub type AbpCertificate = abp::AbpCertificate<f64>;
