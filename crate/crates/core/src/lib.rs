//! Numerical laboratory for the leading-order heat content of time-dependent
//! diffusion.
//!
//! The mass of an indicator `1_S` that diffuses out of `S` by time one under
//! `∂_t u = ε Δ_t u` behaves like `√(ε/π)·Ā(∂S)`, where `Ā` is the boundary
//! area measured in the time-averaged geometry `ḡ = (∫₀¹ g_t⁻¹ dt)⁻¹`. This
//! crate computes that prediction ([`geometry`]) and measures the heat content
//! two independent ways: a conservative grid solver ([`pde`]) and Monte Carlo
//! simulation of the associated backward SDE ([`sde`]). [`analysis`] fits the
//! measurements and [`suites`] bundles the verification experiments.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod par;
pub mod pde;
pub mod quadrature;
pub mod sde;
pub mod suites;

pub use error::{Error, Result};
pub use linalg::{Mat2, Point, Spd2, Sym2};
