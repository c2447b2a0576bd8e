use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DiracBasis;
use crate::error::{Error, Result};
use crate::sphere::ScalarField;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A spinor expanded in a [`DiracBasis`]; `‖ψ‖²_{L²} = Σ |c_j|²`.
#[derive(Debug, Clone)]
pub struct SpinorField {
    basis: Arc<DiracBasis>,
    coeffs: Vec<Complex64>,
}

/// Normalization of an eigenspinor of constant length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Pointwise unit length, `∫|φ|² = 4π`.
    UnitLength,
    /// `‖φ‖_{L²} = 1`.
    UnitL2,
}

impl SpinorField {
    pub fn zeros(basis: &Arc<DiracBasis>) -> Self {
        Self { basis: basis.clone(), coeffs: vec![ZERO; basis.len()] }
    }

    pub fn from_coeffs(basis: &Arc<DiracBasis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch { expected: basis.len(), found: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spinor coefficients"));
        }
        Ok(Self { basis: basis.clone(), coeffs })
    }

    /// The basis eigenspinor at position `k`, unit L² norm.
    pub fn mode(basis: &Arc<DiracBasis>, k: usize) -> Self {
        let mut s = Self::zeros(basis);
        s.coeffs[k] = Complex64::new(1.0, 0.0);
        s
    }

    /// `σ·x c` combination from the λ = 1 cluster: `phase` picks the unit
    /// element of the cluster, which has constant pointwise length.
    pub fn first_eigenspinor(basis: &Arc<DiracBasis>, phase: [Complex64; 2], norm: Normalization) -> Result<Self> {
        let n = (phase[0].norm_sqr() + phase[1].norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("phase must be a nonzero element of the λ = 1 cluster".into()));
        }
        let scale = match norm {
            Normalization::UnitLength => (4.0 * PI).sqrt(),
            Normalization::UnitL2 => 1.0,
        } / n;
        let k = basis.positive().start;
        let mut s = Self::zeros(basis);
        s.coeffs[k] = phase[0] * scale;
        s.coeffs[k + 1] = phase[1] * scale;
        Ok(s)
    }

    pub fn basis(&self) -> &Arc<DiracBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn same_basis(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.same_basis(other) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    fn map_eigen(&self, f: impl Fn(f64) -> f64) -> Self {
        let coeffs = self.coeffs.iter().zip(self.basis.modes()).map(|(c, m)| c * f(m.eigenvalue)).collect();
        Self { basis: self.basis.clone(), coeffs }
    }

    pub fn apply_dirac(&self) -> Self {
        self.map_eigen(|l| l)
    }

    /// `|D̸|⁻¹`, the Riesz map of the H^{1/2} inner product.
    pub fn abs_dirac_inverse(&self) -> Self {
        self.map_eigen(|l| 1.0 / l.abs())
    }

    pub fn abs_dirac(&self) -> Self {
        self.map_eigen(f64::abs)
    }

    pub fn positive_part(&self) -> Self {
        self.map_eigen(|l| if l > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn negative_part(&self) -> Self {
        self.map_eigen(|l| if l < 0.0 { 1.0 } else { 0.0 })
    }

    /// `Re Σ conj(a_j) b_j`, the real L² pairing.
    pub fn l2_dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ |λ_j| Re(conj(a_j) b_j)`.
    pub fn h_half_dot(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(self.basis.modes())
            .map(|((a, b), m)| m.eigenvalue.abs() * (a.conj() * b).re)
            .sum()
    }

    pub fn h_half_norm(&self) -> f64 {
        self.h_half_dot(self).sqrt()
    }

    /// `∫ ⟨D̸ψ, ψ⟩ = Σ λ_j |c_j|²`.
    pub fn dirac_action(&self) -> f64 {
        self.coeffs.iter().zip(self.basis.modes()).map(|(c, m)| m.eigenvalue * c.norm_sqr()).sum()
    }

    /// `|ψ|²` as a band-`L` scalar field.
    pub fn density(&self) -> ScalarField {
        let sphere = self.basis.sphere();
        let grid = sphere.fine_grid();
        let [a, b] = self.basis.sample(&self.coeffs, grid);
        let v: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.norm_sqr() + y.norm_sqr()).collect();
        sphere.analyze_fine(&v, sphere.band()).expect("fine grid holds band L")
    }

    /// `∫ Re⟨ψ, φ⟩ e^{w} dvol`; without a weight this is [`SpinorField::l2_dot`].
    pub fn real_pairing(&self, other: &Self, weight: Option<&ScalarField>) -> Result<f64> {
        self.check(other)?;
        let Some(w) = weight else {
            return Ok(self.l2_dot(other));
        };
        let sphere = self.basis.sphere();
        let grid = sphere.fine_grid();
        let [a0, a1] = self.basis.sample(&self.coeffs, grid);
        let [b0, b1] = self.basis.sample(&other.coeffs, grid);
        let wv = sphere.synthesize_fine(w);
        let v: Vec<f64> = (0..grid.len())
            .map(|p| wv[p].exp() * (a0[p].conj() * b0[p] + a1[p].conj() * b1[p]).re)
            .collect();
        Ok(grid.integrate(&v))
    }

    /// Clifford multiplication by the volume form, `γ(ω) = γ(e₁)γ(e₂) = −iσ·x`.
    pub fn volume_element_conjugate(&self) -> Self {
        let grid = self.basis.sphere().fine_grid();
        let [a, b] = self.basis.sample(&self.coeffs, grid);
        let mut up = vec![ZERO; grid.len()];
        let mut dn = vec![ZERO; grid.len()];
        let mi = Complex64::new(0.0, -1.0);
        for p in 0..grid.len() {
            let x = grid.point(p);
            let w = Complex64::new(x[0], x[1]);
            up[p] = mi * (a[p] * x[2] + w.conj() * b[p]);
            dn[p] = mi * (w * a[p] - b[p] * x[2]);
        }
        let coeffs = self.basis.analyze(grid, &up, &dn).expect("fine grid holds the spinor band");
        Self { basis: self.basis.clone(), coeffs }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += v * a;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    /// `{"band": L, "coeffs": [[j, re, im], ...]}` with signed labels `j`.
    pub fn to_json(&self) -> serde_json::Value {
        let coeffs: Vec<serde_json::Value> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| serde_json::json!([self.basis.label(k), c.re, c.im]))
            .collect();
        serde_json::json!({ "band": self.basis.band(), "coeffs": coeffs })
    }

    pub fn from_json(basis: &Arc<DiracBasis>, value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            band: usize,
            coeffs: Vec<(i64, f64, f64)>,
        }
        let raw: Raw = serde_json::from_value(value.clone())?;
        if raw.band != basis.band() {
            return Err(Error::BasisMismatch);
        }
        let mut s = Self::zeros(basis);
        for (j, re, im) in raw.coeffs {
            let k = basis.position(j).ok_or_else(|| Error::Parse(format!("spinor label {j} outside the basis")))?;
            s.coeffs[k] = Complex64::new(re, im);
        }
        Ok(s)
    }
}

impl Add for SpinorField {
    type Output = SpinorField;
    fn add(mut self, rhs: SpinorField) -> SpinorField {
        self.axpy(1.0, &rhs);
        self
    }
}

impl Sub for SpinorField {
    type Output = SpinorField;
    fn sub(mut self, rhs: SpinorField) -> SpinorField {
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Mul<f64> for SpinorField {
    type Output = SpinorField;
    fn mul(mut self, a: f64) -> SpinorField {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
        self
    }
}

impl Neg for SpinorField {
    type Output = SpinorField;
    fn neg(self) -> SpinorField {
        self * -1.0
    }
}
