//! Spectral laboratory for the super-Liouville system on the round two-sphere.
//!
//! Unknowns are a conformal factor `u` and a spinor `ψ`; the functional is
//!
//! ```text
//! J_ρ(u, ψ) = ∫ |∇u|² + 2u − e^{2u} + 2(⟨D̸ψ, ψ⟩ − ρ e^u |ψ|²) + 4π
//! ```
//!
//! Scalars live in real spherical harmonics up to degree `L`; spinors live
//! in the eigenbasis of the round Dirac operator up to `|λ| = L/2`.

pub mod branch_solver;
pub mod conformal;
pub mod error;
pub mod functional;
pub mod nehari;
pub mod report;
pub mod sampling;
pub mod sphere;
pub mod spinor;
pub mod tangent;
pub mod verify;

pub use error::{Error, Result};
pub use sphere::{BandLimit, ScalarField, Sphere, SphereGrid};
pub use spinor::{DiracBasis, Normalization, SpinorField};
pub use conformal::{Axis, MoebiusMap};
pub use functional::{Residual, State};
pub use nehari::{ConstraintValues, NormalFrame, WeightedEigenSystem};
pub use tangent::TangentSpace;
