//! Finite-element laboratory for the electrical impedance tomography
//! parameter-to-data map.
//!
//! The crate discretizes the conductivity equation on the unit square with P1
//! elements, represents Dirichlet-to-Neumann forms on a finite orthonormal
//! family of boundary traces, and certifies — to solver precision — the
//! Löwner-order convexity bounds of the forward map together with the
//! tangential cone condition criteria they imply. A nonlinear Landweber
//! harness reproduces the monotone vs. oscillatory initialization experiments.
//!
//! All numerics are generic over the scalar type ([`scalar::Real`], i.e. `f32`
//! or `f64`); certification runs use `f64`.

pub mod error;
pub mod fem;
pub mod landweber;
pub mod loewner;
pub mod mesh;
pub mod operator;
pub mod scalar;
pub mod scenarios;
pub mod tcc;

pub use error::{Error, Result};

/// Concrete `f64` aliases for the main domain types.
pub type Mesh64 = mesh::Mesh<f64>;
pub type Conductivity64 = fem::Conductivity<f64>;
pub type GradientField64 = fem::GradientField<f64>;
pub type BoundaryBasis64 = operator::BoundaryBasis<f64>;
pub type OperatorOnVd64 = operator::OperatorOnVd<f64>;
pub type Scenario64 = scenarios::Scenario<f64>;

/// Concrete `f32` aliases (smoke-test precision).
pub type Mesh32 = mesh::Mesh<f32>;
pub type Conductivity32 = fem::Conductivity<f32>;
pub type OperatorOnVd32 = operator::OperatorOnVd<f32>;
