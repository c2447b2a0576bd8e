//! Spinor fields on S² through a numerically assembled Dirac eigenbasis.

mod basis;
mod field;

pub use basis::{BasisReport, DiracBasis, Mode};
pub use field::{Normalization, SpinorField};
