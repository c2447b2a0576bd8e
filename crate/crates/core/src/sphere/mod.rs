//! Scalar analysis on the round sphere: quadrature grids, real and complex
//! spherical-harmonic transforms, the Laplacian and gradient pairings.

mod field;
mod grid;
pub(crate) mod legendre;

use serde::{Deserialize, Serialize};

pub use field::ScalarField;
pub use grid::{eval_complex_at, eval_real_at, SphereGrid};

use crate::error::{Error, Result};

/// Position of `(l, m)` in a coefficient vector: `l² + l + m`.
#[inline]
pub fn idx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients with degree ≤ `band`.
#[inline]
pub fn coeff_count(band: usize) -> usize {
    (band + 1) * (band + 1)
}

/// Degree of the coefficient stored at position `i`.
#[inline]
pub fn degree_of(i: usize) -> usize {
    (i as f64).sqrt().floor() as usize
}

/// Maximum spherical-harmonic degree shared by every field of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BandLimit(usize);

impl BandLimit {
    pub const MIN: usize = 4;

    pub fn new(l: usize) -> Result<Self> {
        if l < Self::MIN {
            return Err(Error::BandTooSmall(l));
        }
        Ok(Self(l))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Degree used for spinor components: `⌊L/2⌋`, so that `|ψ|²` stays in band.
    pub fn half(self) -> usize {
        self.0 / 2
    }
}

impl TryFrom<usize> for BandLimit {
    type Error = Error;
    fn try_from(l: usize) -> Result<Self> {
        Self::new(l)
    }
}

impl From<BandLimit> for usize {
    fn from(b: BandLimit) -> usize {
        b.0
    }
}

/// Eigenvalue `k(k+1)` of `−Δ` and its multiplicity `C(k+2,2) − C(k,2)`.
pub fn laplace_eigendata(k: usize) -> (f64, usize) {
    let choose2 = |n: usize| n * n.saturating_sub(1) / 2;
    ((k * (k + 1)) as f64, choose2(k + 2) - choose2(k))
}

/// Grids and transforms for one band limit.
///
/// The base grid integrates products of two band-`L` fields exactly; the
/// fine grid (band `2L`) carries all nonlinear terms before re-analysis.
#[derive(Debug, Clone)]
pub struct Sphere {
    band: BandLimit,
    base: SphereGrid,
    fine: SphereGrid,
}

impl Sphere {
    pub fn new(band: BandLimit) -> Self {
        let l = band.get();
        Self { band, base: SphereGrid::new(l), fine: SphereGrid::new(2 * l) }
    }

    pub fn band_limit(&self) -> BandLimit {
        self.band
    }

    pub fn band(&self) -> usize {
        self.band.get()
    }

    pub fn base_grid(&self) -> &SphereGrid {
        &self.base
    }

    pub fn fine_grid(&self) -> &SphereGrid {
        &self.fine
    }

    /// Values of `f` on the base grid.
    pub fn synthesize(&self, f: &ScalarField) -> Vec<f64> {
        self.base.synthesize_real(f.band(), f.coeffs())
    }

    /// Base-grid samples to a band-`L` field.
    pub fn analyze(&self, values: &[f64]) -> Result<ScalarField> {
        let c = self.base.analyze_real(self.band(), values)?;
        ScalarField::from_coeffs(self.band(), c)
    }

    pub fn synthesize_fine(&self, f: &ScalarField) -> Vec<f64> {
        self.fine.synthesize_real(f.band(), f.coeffs())
    }

    pub fn analyze_fine(&self, values: &[f64], band: usize) -> Result<ScalarField> {
        let c = self.fine.analyze_real(band, values)?;
        ScalarField::from_coeffs(band, c)
    }

    /// Projection of the pointwise product `f·g` to degree `band`.
    pub fn product(&self, f: &ScalarField, g: &ScalarField, band: usize) -> Result<ScalarField> {
        let a = self.synthesize_fine(f);
        let b = self.synthesize_fine(g);
        let v: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        self.analyze_fine(&v, band)
    }

    /// `∇f·∇g` projected to band `L`.
    pub fn grad_dot(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.grad_dot_band(f, g, self.band())
    }

    /// `∇f·∇g = ½(Δ(fg) − fΔg − gΔf)`, each product formed on the fine grid.
    pub fn grad_dot_band(&self, f: &ScalarField, g: &ScalarField, band: usize) -> Result<ScalarField> {
        let fg = self.product(f, g, band)?;
        let f_lg = self.product(f, &g.laplacian(), band)?;
        let g_lf = self.product(g, &f.laplacian(), band)?;
        Ok((fg.laplacian() - f_lg - g_lf) * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigendata() {
        assert_eq!(laplace_eigendata(0), (0.0, 1));
        assert_eq!(laplace_eigendata(1), (2.0, 3));
        assert_eq!(laplace_eigendata(5), (30.0, 11));
        for k in 0..40 {
            assert_eq!(laplace_eigendata(k).1, 2 * k + 1);
        }
    }

    #[test]
    fn index_layout() {
        assert_eq!(idx(0, 0), 0);
        assert_eq!(idx(1, -1), 1);
        assert_eq!(idx(2, 2), 8);
        for i in 0..coeff_count(9) {
            let l = degree_of(i);
            assert!(idx(l, -(l as i64)) <= i && i <= idx(l, l as i64));
        }
    }

    #[test]
    fn band_limit_bounds() {
        assert!(BandLimit::new(3).is_err());
        assert_eq!(BandLimit::new(16).unwrap().half(), 8);
    }
}
