//! Core library for `adhesim`: a toolkit for the one-dimensional nonlocal
//! cell-cell adhesion equation
//!
//! ```text
//! u_t = D u_xx - alpha ( u K[u] )_x ,
//! K[u](x) = integral over the sensing window of h(u(x + r)) sgn(r) omega(|r|) dr
//! ```
//!
//! with periodic or bounded-domain sensing. The crate evaluates the nonlocal
//! operator, integrates the equation with a conservative finite-volume
//! scheme, solves for steady states by damped Newton, and computes the
//! closed-form bifurcation structure of the periodic problem.
//!
//! All numerics are generic over the floating-point type through
//! [`scalar::Scalar`]; concrete `f64` aliases live at the crate root.

pub mod asymptotics;
pub mod bifurcation;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod nonlocal;
pub mod quad;
pub mod scalar;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};

/// Concrete double-precision aliases for the main domain types.
pub type KernelSpec64 = kernel::KernelSpec<f64>;
pub type KernelFamily64 = kernel::KernelFamily<f64>;
pub type Grid64 = grid::Grid<f64>;
pub type Field64 = grid::Field<f64>;
pub type SensingMode64 = nonlocal::SensingMode<f64>;
pub type AdhesionFunction64 = nonlocal::AdhesionFunction<f64>;
pub type NonlocalOp64 = nonlocal::NonlocalOp<f64>;
pub type SimParams64 = solver::SimParams<f64>;
pub type Kymograph64 = solver::Kymograph<f64>;
pub type BifurcationRecord64 = bifurcation::BifurcationRecord<f64>;

/// Single-precision aliases, for callers that trade accuracy for speed.
pub type KernelSpec32 = kernel::KernelSpec<f32>;
pub type Grid32 = grid::Grid<f32>;
pub type Field32 = grid::Field<f32>;
