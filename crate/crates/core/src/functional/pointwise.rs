use num_complex::Complex64;

use super::State;
use crate::sphere::{ScalarField, Sphere, SphereGrid};
use crate::spinor::DiracBasis;

/// Fine-grid samples of a state, shared by every nonlinear evaluation.
pub(crate) struct Pointwise<'a> {
    sphere: &'a Sphere,
    basis: &'a DiracBasis,
    band: usize,
    pub u: Vec<f64>,
    pub eu: Vec<f64>,
    pub e2u: Vec<f64>,
    pub psi: [Vec<Complex64>; 2],
    pub dens: Vec<f64>,
}

impl<'a> Pointwise<'a> {
    pub fn new(s: &'a State) -> Self {
        let basis: &DiracBasis = s.basis();
        let sphere: &Sphere = basis.sphere();
        let u = sphere.synthesize_fine(&s.u);
        let eu: Vec<f64> = u.iter().map(|v| v.exp()).collect();
        let e2u = eu.iter().map(|v| v * v).collect();
        let psi = basis.sample(s.psi.coeffs(), sphere.fine_grid());
        let dens = psi[0].iter().zip(&psi[1]).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
        Self { sphere, basis, band: s.u.band(), u, eu, e2u, psi, dens }
    }

    pub fn grid(&self) -> &'a SphereGrid {
        self.sphere.fine_grid()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn eu_dens(&self) -> Vec<f64> {
        self.eu.iter().zip(&self.dens).map(|(a, b)| a * b).collect()
    }

    pub fn analyze_scalar(&self, values: &[f64]) -> ScalarField {
        self.sphere.analyze_fine(values, self.band).expect("fine grid holds band L")
    }

    /// Basis coefficients of `weight · ψ`.
    pub fn analyze_spinor_weighted(&self, weight: &[f64]) -> Vec<Complex64> {
        let up: Vec<Complex64> = self.psi[0].iter().zip(weight).map(|(a, w)| a * w).collect();
        let dn: Vec<Complex64> = self.psi[1].iter().zip(weight).map(|(a, w)| a * w).collect();
        self.analyze_spinor(&up, &dn)
    }

    pub fn analyze_spinor(&self, up: &[Complex64], dn: &[Complex64]) -> Vec<Complex64> {
        self.basis.analyze(self.grid(), up, dn).expect("fine grid holds the spinor band")
    }
}
