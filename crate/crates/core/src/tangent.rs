//! Flat real coordinates on the product space `H¹ × H^{1/2}`.
//!
//! A pair `(v, h)` is stored as `[v_00, v_1,−1, …, Re h_0, Im h_0, Re h_1, …]`.
//! Both metrics are diagonal in these coordinates, so Riesz maps are
//! pointwise divisions by the weight vector.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::sphere::{coeff_count, degree_of, ScalarField};
use crate::spinor::{DiracBasis, SpinorField};

#[derive(Debug, Clone)]
pub struct TangentSpace {
    basis: Arc<DiracBasis>,
    nu: usize,
    weights: DVector<f64>,
}

impl TangentSpace {
    pub fn new(basis: &Arc<DiracBasis>) -> Self {
        let nu = coeff_count(basis.band());
        let n = nu + 2 * basis.len();
        let mut weights = DVector::zeros(n);
        for i in 0..nu {
            let l = degree_of(i) as f64;
            weights[i] = 1.0 + l * (l + 1.0);
        }
        for (j, m) in basis.modes().iter().enumerate() {
            weights[nu + 2 * j] = m.eigenvalue.abs();
            weights[nu + 2 * j + 1] = m.eigenvalue.abs();
        }
        Self { basis: basis.clone(), nu, weights }
    }

    pub fn basis(&self) -> &Arc<DiracBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Number of scalar coordinates.
    pub fn scalar_dim(&self) -> usize {
        self.nu
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn flatten(&self, v: &ScalarField, h: &SpinorField) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        x.rows_mut(0, self.nu).copy_from_slice(v.coeffs());
        for (j, c) in h.coeffs().iter().enumerate() {
            x[self.nu + 2 * j] = c.re;
            x[self.nu + 2 * j + 1] = c.im;
        }
        x
    }

    pub fn split(&self, x: &DVector<f64>) -> (ScalarField, SpinorField) {
        let band = self.basis.band();
        let v = ScalarField::from_coeffs(band, x.rows(0, self.nu).iter().copied().collect())
            .unwrap_or_else(|_| ScalarField::zeros(band));
        let coeffs = (0..self.basis.len())
            .map(|j| Complex64::new(x[self.nu + 2 * j], x[self.nu + 2 * j + 1]))
            .collect();
        let h = SpinorField::from_coeffs(&self.basis, coeffs).unwrap_or_else(|_| SpinorField::zeros(&self.basis));
        (v, h)
    }

    /// `⟨a, b⟩_{H¹×H^{1/2}}`.
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.iter().zip(b.iter()).zip(self.weights.iter()).map(|((x, y), w)| w * x * y).sum()
    }

    pub fn norm(&self, a: &DVector<f64>) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Gradient from a coordinate derivative (dual vector).
    pub fn riesz(&self, dual: &DVector<f64>) -> DVector<f64> {
        dual.component_div(&self.weights)
    }

    /// Coordinate derivative of `x ↦ ⟨g, x⟩`.
    pub fn lower(&self, g: &DVector<f64>) -> DVector<f64> {
        g.component_mul(&self.weights)
    }

    /// Coordinates belonging to positive Dirac modes.
    pub fn positive_spinor_coords(&self) -> impl Iterator<Item = usize> + '_ {
        self.basis.positive().flat_map(move |j| [self.nu + 2 * j, self.nu + 2 * j + 1])
    }
}
