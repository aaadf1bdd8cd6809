//! Recovery of the semilinear term `f` in `∂_t u - Δu + f(u) = 0` from
//! Dirichlet data and the measured Neumann flux on the boundary.
//!
//! The numerical core is generic over the scalar type (`f32`/`f64`, see
//! [`Real`]); the aliases at the crate root fix it to `f64`, which is what
//! the experiment harness and the CLI use.

pub mod domain;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod field;
pub mod forward;
pub mod kernel;
pub mod linalg;
pub mod observation;
#[cfg(test)]
mod proptests;
pub mod quadrature;
pub mod reconstruction;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instances of the generic core types.
pub type DomainSpec = domain::DomainSpec<f64>;
pub type SpatialGrid = domain::SpatialGrid<f64>;
pub type EigenBasis = eigen::EigenBasis<f64>;
pub type KernelConfig = kernel::KernelConfig<f64>;
pub type KernelEvaluator = kernel::KernelEvaluator<f64>;
pub type TimeGrid = field::TimeGrid<f64>;
pub type SpaceTimeField = field::SpaceTimeField<f64>;
pub type BoundaryTrace = field::BoundaryTrace<f64>;
pub type NonlinearityFn = forward::NonlinearityFn<f64>;
pub type DirichletData = forward::DirichletData<f64>;
pub type ObservedData = observation::ObservedData<f64>;
pub type ReconstructionConfig = reconstruction::ReconstructionConfig<f64>;
pub type CurveEstimate = reconstruction::CurveEstimate<f64>;
