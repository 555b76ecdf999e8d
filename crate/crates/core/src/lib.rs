//! Discontinuous Galerkin viscous-flux formulations for 1D diffusion,
//! von Neumann (eigenmode and combined-mode) analysis of their dissipation
//! and stability, and a time-domain solver for verification on heat,
//! Gaussian, and Burgers-turbulence cases.
//!
//! The numerical kernels are generic over the scalar type through
//! [`scalar::Scalar`]; production code uses the [`Real`] alias.

pub mod basis;
pub mod grid;
pub mod analysis;
pub mod linalg;
pub mod scalar;
pub mod scheme;
pub mod solver;
pub mod special;

pub use scalar::{Scalar, C};

/// Production scalar type.
pub type Real = f64;

/// Complex number over the production scalar.
pub type Complex = C<Real>;

/// Concrete aliases for the main domain types.
pub type SchemeConfig = scheme::SchemeConfig<Real>;
pub type StencilOperator = scheme::StencilOperator<Real>;
pub type GridSpec = grid::GridSpec<Real>;
pub type DGField = grid::DGField<Real>;
