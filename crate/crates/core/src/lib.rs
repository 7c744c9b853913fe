//! Pseudospectral simulation of incompressible magnetoelastic flow on the
//! periodic torus: fluid velocity `v`, deformation gradient `F` and a
//! Landau–Lifshitz–Gilbert magnetization `M` with `|M| = 1`.
//!
//! The crate covers both the primitive `(v, F, M)` system and the
//! reformulated `(v, ψ, M)` system with `F⁻¹ − I = ∇ψ`, an implicit-explicit
//! time stepper, a generalized Stokes solver, the mollified and Picard
//! construction schemes, and the energy/constraint diagnostics that go with
//! them.

pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod fields;
pub mod harness;
pub mod schemes;
pub mod spectral;
pub mod stokes;
pub mod timestepper;

pub use error::{Error, Result};
