//! Known branches, constrained Newton, continuation in `ρ`, bifurcation
//! detection and the deformation flow.

mod bifurcation;
mod continuation;
mod flow;
mod newton;
mod system;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use bifurcation::{branch_switch_probe, detect_bifurcation, Bifurcation, SwitchAttempt, SwitchReport};
pub use continuation::{continue_branch, Continuation};
pub use flow::{admissible_start, cutoff, deformation_flow, Drift, FlowOptions, FlowSample, FlowTrace, Invariants};
pub use newton::{newton_solve, orbit_distance, NewtonOptions, NewtonReport};
pub use system::restricted_index;

use crate::error::{Error, Result};
use crate::functional::{el_residual, eval_j1_j2, State};
use crate::nehari::{constraints_with, weighted_eigensystem};
use crate::sphere::ScalarField;
use crate::spinor::{DiracBasis, Normalization, SpinorField};
use crate::tangent::TangentSpace;

/// An accepted solution together with its diagnostics.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub state: State,
    pub residual_norm: f64,
    pub index_l: usize,
    pub constraint_norm: f64,
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
}

/// One row of branch output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchRow {
    pub rho: f64,
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
    pub residual: f64,
    pub index_l: usize,
    pub constraint_norm: f64,
    pub psi_norm: f64,
}

impl BranchPoint {
    /// Diagnoses `state` and computes the restricted Morse index.
    pub fn assess(state: State) -> Result<Self> {
        let ws = weighted_eigensystem(state.basis(), &state.u)?;
        let space = TangentSpace::new(state.basis());
        let index_l = restricted_index(&state, &ws, &space)?.index;
        let (j1, j2) = eval_j1_j2(&state);
        Ok(Self {
            residual_norm: el_residual(&state).norm,
            constraint_norm: constraints_with(&state, &ws).norm(),
            index_l,
            j: j1 - state.rho * j2,
            j1,
            j2,
            state,
        })
    }

    pub fn rho(&self) -> f64 {
        self.state.rho
    }

    pub fn row(&self) -> BranchRow {
        BranchRow {
            rho: self.state.rho,
            j: self.j,
            j1: self.j1,
            j2: self.j2,
            residual: self.residual_norm,
            index_l: self.index_l,
            constraint_norm: self.constraint_norm,
            psi_norm: self.state.psi.l2_norm(),
        }
    }
}

/// `u = −ln ρ`, `ψ = (√(ρ²−1)/ρ) φ₁` with `|φ₁| ≡ 1`; `phase` picks the
/// element of the `λ = 1` cluster.
pub fn killing_branch(basis: &Arc<DiracBasis>, rho: f64, phase: [Complex64; 2]) -> Result<State> {
    if !(rho > 1.0) || !rho.is_finite() {
        return Err(Error::RhoNotAboveOne(rho));
    }
    let phi = SpinorField::first_eigenspinor(basis, phase, Normalization::UnitLength)?;
    let u = ScalarField::constant(basis.band(), -rho.ln());
    State::new(u, phi * ((rho * rho - 1.0).sqrt() / rho), rho)
}

/// Default phase `(1, 0)` of the Killing spinor.
pub const KILLING_PHASE: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

/// `J_ρ` in closed form along the Killing branch.
pub fn killing_energy(rho: f64) -> f64 {
    4.0 * std::f64::consts::PI * (1.0 - 1.0 / (rho * rho) - 2.0 * rho.ln())
}
