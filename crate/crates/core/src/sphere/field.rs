use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{coeff_count, degree_of, eval_real_at, idx};
use crate::error::{Error, Result};

/// A band-limited real function on S² in orthonormal real harmonics.
///
/// `Y_l0 = P̄_l0`, `Y_lm = √2 P̄_lm cos mφ` and `Y_l,−m = √2 P̄_lm sin mφ`
/// for `m > 0`, so that `x¹, x², x³` are `√(4π/3)` times
/// `Y_11, Y_1,−1, Y_10`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    band: usize,
    coeffs: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(band: usize) -> Self {
        Self { band, coeffs: vec![0.0; coeff_count(band)] }
    }

    pub fn from_coeffs(band: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != coeff_count(band) {
            return Err(Error::LengthMismatch { expected: coeff_count(band), found: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("scalar field coefficients"));
        }
        Ok(Self { band, coeffs })
    }

    pub fn constant(band: usize, value: f64) -> Self {
        let mut f = Self::zeros(band);
        f.coeffs[0] = value * (4.0 * PI).sqrt();
        f
    }

    /// The coordinate function `x^{axis+1}`, `axis ∈ {0, 1, 2}`.
    pub fn coordinate(band: usize, axis: usize) -> Self {
        let mut f = Self::zeros(band);
        let m = [1, -1, 0][axis];
        f.coeffs[idx(1, m)] = (4.0 * PI / 3.0).sqrt();
        f
    }

    /// A single unit coefficient at `(l, m)`.
    pub fn harmonic(band: usize, l: usize, m: i64) -> Self {
        let mut f = Self::zeros(band);
        f.coeffs[idx(l, m)] = 1.0;
        f
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[idx(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        self.coeffs[idx(l, m)] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Zero-pads or truncates to a new band.
    pub fn with_band(&self, band: usize) -> Self {
        let mut c = vec![0.0; coeff_count(band)];
        let n = c.len().min(self.coeffs.len());
        c[..n].copy_from_slice(&self.coeffs[..n]);
        Self { band, coeffs: c }
    }

    fn map_degree(&self, f: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let l = degree_of(i) as f64;
                c * f(l * (l + 1.0))
            })
            .collect();
        Self { band: self.band, coeffs }
    }

    pub fn laplacian(&self) -> Self {
        self.map_degree(|mu| -mu)
    }

    /// `(1 − Δ)⁻¹`, the Riesz map of the H¹ inner product.
    pub fn inverse_helmholtz(&self) -> Self {
        self.map_degree(|mu| 1.0 / (1.0 + mu))
    }

    /// `1 − Δ`.
    pub fn helmholtz(&self) -> Self {
        self.map_degree(|mu| 1.0 + mu)
    }

    /// `∫ f dvol`, read off the degree-zero coefficient.
    pub fn integrate(&self) -> f64 {
        self.coeffs[0] * (4.0 * PI).sqrt()
    }

    /// Average value `(1/4π) ∫ f`.
    pub fn mean(&self) -> f64 {
        self.integrate() / (4.0 * PI)
    }

    /// `∫ f g`.
    pub fn l2_dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_dot(self).sqrt()
    }

    /// `∫ ∇f·∇g + f g`.
    pub fn h1_dot(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| {
                let l = degree_of(i) as f64;
                (1.0 + l * (l + 1.0)) * a * b
            })
            .sum()
    }

    pub fn h1_norm(&self) -> f64 {
        self.h1_dot(self).sqrt()
    }

    /// `∫ |∇f|²`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let l = degree_of(i) as f64;
                l * (l + 1.0) * c * c
            })
            .sum()
    }

    /// Power per degree, `Σ_m c_lm²` for each `l`.
    pub fn degree_spectrum(&self) -> Vec<f64> {
        (0..=self.band)
            .map(|l| (-(l as i64)..=l as i64).map(|m| self.get(l, m).powi(2)).sum())
            .collect()
    }

    pub fn eval_at(&self, points: &[[f64; 3]]) -> Vec<f64> {
        eval_real_at(self.band, &self.coeffs, points)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.eval_at(&[x])[0]
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.band, x.band);
        for (s, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += a * v;
        }
    }
}

impl Add for ScalarField {
    type Output = ScalarField;
    fn add(mut self, rhs: ScalarField) -> ScalarField {
        self += &rhs;
        self
    }
}

impl Sub for ScalarField {
    type Output = ScalarField;
    fn sub(mut self, rhs: ScalarField) -> ScalarField {
        self -= &rhs;
        self
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for ScalarField {
    type Output = ScalarField;
    fn mul(mut self, a: f64) -> ScalarField {
        self.coeffs.iter_mut().for_each(|c| *c *= a);
        self
    }
}

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self * -1.0
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarFieldJson {
    band: usize,
    coeffs: Vec<(usize, i64, f64)>,
}

impl Serialize for ScalarField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for l in 0..=self.band {
            for m in -(l as i64)..=l as i64 {
                coeffs.push((l, m, self.get(l, m)));
            }
        }
        ScalarFieldJson { band: self.band, coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ScalarFieldJson::deserialize(d)?;
        let mut f = ScalarField::zeros(raw.band);
        for (l, m, v) in raw.coeffs {
            if l > raw.band || m.unsigned_abs() as usize > l {
                return Err(D::Error::custom(format!("coefficient ({l}, {m}) outside band {}", raw.band)));
            }
            f.set(l, m, v);
        }
        Ok(f)
    }
}
