//! The functional `J_ρ`, its split `J¹ − ρJ²`, gradients, Euler–Lagrange
//! residuals, second variation and identity checks.

mod hessian;
mod identities;
mod pointwise;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

pub use hessian::{el_jacobian, hessian_index_at_origin, second_variation, IndexReport, OriginHessian, DEGENERACY_WINDOW};
pub use identities::{bar_volume_check, conservation_defect, kazdan_warner_defect, BarReport};
pub(crate) use pointwise::Pointwise;

use crate::error::{Error, Result};
use crate::sphere::{ScalarField, Sphere};
use crate::spinor::{DiracBasis, SpinorField};

/// A point `(u, ψ)` of the variational problem together with `ρ`.
#[derive(Debug, Clone)]
pub struct State {
    pub u: ScalarField,
    pub psi: SpinorField,
    pub rho: f64,
}

impl State {
    pub fn new(u: ScalarField, psi: SpinorField, rho: f64) -> Result<Self> {
        if u.band() != psi.basis().band() {
            return Err(Error::BasisMismatch);
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::RhoNotPositive(rho));
        }
        Ok(Self { u, psi, rho })
    }

    /// The origin `θ = (0, 0)`.
    pub fn trivial(basis: &Arc<DiracBasis>, rho: f64) -> Self {
        Self { u: ScalarField::zeros(basis.band()), psi: SpinorField::zeros(basis), rho }
    }

    pub fn basis(&self) -> &Arc<DiracBasis> {
        self.psi.basis()
    }

    pub fn sphere(&self) -> &Arc<Sphere> {
        self.psi.basis().sphere()
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..self.clone() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rho": self.rho,
            "u": serde_json::to_value(&self.u).expect("scalar field serializes"),
            "psi": self.psi.to_json(),
        })
    }

    pub fn from_json(basis: &Arc<DiracBasis>, value: &serde_json::Value) -> Result<Self> {
        let rho = value.get("rho").and_then(|r| r.as_f64()).ok_or_else(|| Error::Parse("state needs a numeric rho".into()))?;
        let u: ScalarField = serde_json::from_value(value.get("u").cloned().ok_or_else(|| Error::Parse("state needs u".into()))?)?;
        let psi = SpinorField::from_json(basis, value.get("psi").ok_or_else(|| Error::Parse("state needs psi".into()))?)?;
        Self::new(u.with_band(basis.band()), psi, rho)
    }
}

/// Left minus right of the Euler–Lagrange system.
#[derive(Debug, Clone)]
pub struct Residual {
    /// `−Δu − e^{2u} + 1 − ρe^u|ψ|²`.
    pub scalar_part: ScalarField,
    /// `D̸ψ − ρe^uψ`.
    pub spinor_part: SpinorField,
    /// `(‖scalar‖²_{L²} + ‖spinor‖²_{L²})^{1/2}`.
    pub norm: f64,
}

/// The two nonlinear integrals shared by the functionals.
fn integrals(p: &Pointwise) -> (f64, f64) {
    let grid = p.grid();
    (grid.integrate(&p.e2u), grid.integrate(&p.eu_dens()))
}

/// `J_ρ(u, ψ) = ∫|∇u|² + 2u − e^{2u} + 2⟨D̸ψ, ψ⟩ − 2ρe^u|ψ|² + 4π`.
pub fn eval_j(s: &State) -> f64 {
    let (j1, j2) = eval_j1_j2(s);
    j1 - s.rho * j2
}

/// `J¹ = ∫|∇u|² + 2u + 1 − e^{2u} + 2⟨D̸ψ, ψ⟩` and `J² = 2∫e^u|ψ|²`.
pub fn eval_j1_j2(s: &State) -> (f64, f64) {
    let p = Pointwise::new(s);
    let (vol, mixed) = integrals(&p);
    let j1 = s.u.dirichlet_energy() + 2.0 * s.u.integrate() + 4.0 * PI - vol + 2.0 * s.psi.dirac_action();
    (j1, 2.0 * mixed)
}

pub fn el_residual(s: &State) -> Residual {
    el_residual_from(&Pointwise::new(s), s)
}

pub(crate) fn el_residual_from(p: &Pointwise, s: &State) -> Residual {
    let rho = s.rho;
    let nonlinear: Vec<f64> = (0..p.len()).map(|i| p.e2u[i] + rho * p.eu[i] * p.dens[i]).collect();
    let mut scalar = p.analyze_scalar(&nonlinear);
    for c in scalar.coeffs_mut() {
        *c = -*c;
    }
    scalar += &(-s.u.laplacian());
    scalar += &ScalarField::constant(s.u.band(), 1.0);
    let weighted = p.analyze_spinor_weighted(&p.eu);
    let spinor_coeffs: Vec<Complex64> =
        s.psi.apply_dirac().coeffs().iter().zip(&weighted).map(|(d, w)| d - w * rho).collect();
    let spinor = SpinorField::from_coeffs(s.basis(), spinor_coeffs).unwrap_or_else(|_| SpinorField::zeros(s.basis()));
    let norm = (scalar.l2_norm().powi(2) + spinor.l2_norm().powi(2)).sqrt();
    Residual { scalar_part: scalar, spinor_part: spinor, norm }
}

/// Riesz gradient of `J_ρ` in `H¹ × H^{1/2}`: `(2(1−Δ)⁻¹S, 4|D̸|⁻¹P)`.
pub fn gradient(s: &State) -> (ScalarField, SpinorField) {
    let r = el_residual(s);
    (r.scalar_part.inverse_helmholtz() * 2.0, r.spinor_part.abs_dirac_inverse() * 4.0)
}

/// Riesz gradients of `J¹` and `J²`.
pub fn gradients_j1_j2(s: &State) -> ((ScalarField, SpinorField), (ScalarField, SpinorField)) {
    gradients_j1_j2_from(&Pointwise::new(s), s)
}

pub(crate) fn gradients_j1_j2_from(
    p: &Pointwise,
    s: &State,
) -> ((ScalarField, SpinorField), (ScalarField, SpinorField)) {
    let band = s.u.band();
    let mut s1 = p.analyze_scalar(&p.e2u) * -1.0;
    s1 += &(-s.u.laplacian());
    s1 += &ScalarField::constant(band, 1.0);
    let g1 = (s1.inverse_helmholtz() * 2.0, s.psi.apply_dirac().abs_dirac_inverse() * 4.0);
    let s2 = p.analyze_scalar(&p.eu_dens());
    let w = SpinorField::from_coeffs(s.basis(), p.analyze_spinor_weighted(&p.eu)).expect("finite");
    let g2 = (s2.inverse_helmholtz() * 2.0, w.abs_dirac_inverse() * 4.0);
    (g1, g2)
}
