use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{coeff_count, idx, BandLimit, Sphere, SphereGrid};

/// One eigenspinor of the round Dirac operator, supported on a single
/// orbital degree `l` of the assembly basis.
#[derive(Debug, Clone)]
pub struct Mode {
    pub l: usize,
    pub eigenvalue: f64,
    /// Real coefficients on `Y_lm ⊗ e_s`, stored at `2(m + l) + s`.
    pub vector: Vec<f64>,
}

/// Validation metadata recorded while assembling a [`DiracBasis`].
#[derive(Debug, Clone, Serialize)]
pub struct BasisReport {
    pub band: usize,
    pub half_band: usize,
    pub size: usize,
    pub max_spectrum_error: f64,
    pub orthonormality_defect: f64,
    pub roundtrip_defect: f64,
    /// `(eigenvalue, real multiplicity)` per cluster, ascending.
    pub clusters: Vec<(f64, usize)>,
    /// Largest relative deviation of the computed eigenvalues in each cluster.
    pub cluster_errors: Vec<f64>,
}

/// Orthonormal eigenbasis of the round Dirac operator on ℂ²-valued
/// functions, truncated to `|λ| ≤ L/2`.
///
/// Spinors are trivialized as restrictions of spinors on ℝ³. In that frame
/// `D̸ = −(σ·L + 1)` with `L = −i x × ∇`, which preserves each orbital
/// degree `l` and has eigenvalues `+l` (complex multiplicity `2l`) and
/// `−(l+1)` (multiplicity `2l + 2`) there.
#[derive(Debug)]
pub struct DiracBasis {
    sphere: Arc<Sphere>,
    half_band: usize,
    modes: Vec<Mode>,
    n_negative: usize,
    report: BasisReport,
}

/// Matrix of `σ·L + 1` on orbital degree `l`.
pub(crate) fn k_block(l: usize) -> DMatrix<f64> {
    let n = 2 * (2 * l + 1);
    let li = l as i64;
    let mut k = DMatrix::<f64>::identity(n, n);
    let at = |m: i64, s: usize| 2 * (m + li) as usize + s;
    for m in -li..=li {
        let lf = l as f64;
        let mf = m as f64;
        k[(at(m, 0), at(m, 0))] += mf;
        k[(at(m, 1), at(m, 1))] -= mf;
        if m < li {
            let c = ((lf - mf) * (lf + mf + 1.0)).sqrt();
            k[(at(m + 1, 1), at(m, 0))] += c;
            k[(at(m, 0), at(m + 1, 1))] += c;
        }
    }
    k
}

impl DiracBasis {
    /// Builds and validates the basis for band `L`; fails if the computed
    /// spectrum deviates from `±m` with complex multiplicity `2m`.
    pub fn assemble(band: BandLimit) -> Result<Arc<Self>> {
        Self::assemble_on(Arc::new(Sphere::new(band)))
    }

    pub fn assemble_on(sphere: Arc<Sphere>) -> Result<Arc<Self>> {
        let half = sphere.band_limit().half();
        let mut modes = Vec::new();
        let mut spectrum_error: f64 = 0.0;
        let mut ortho: f64 = 0.0;
        let mut errors: Vec<(f64, f64)> = Vec::new();
        for l in 0..=half {
            let eig = SymmetricEigen::new(k_block(l));
            let n = eig.eigenvalues.len();
            for (target, expected, keep) in [(l as f64, 2 * l, l > 0), (-(l as f64) - 1.0, 2 * l + 2, l < half)] {
                let cols: Vec<usize> = (0..n)
                    .filter(|&c| (-eig.eigenvalues[c] - target).abs() < 0.5)
                    .collect();
                if cols.len() != expected {
                    return Err(Error::BasisValidation(format!(
                        "degree {l}: eigenvalue {target} has multiplicity {} instead of {expected}",
                        cols.len()
                    )));
                }
                if !keep {
                    continue;
                }
                for &c in &cols {
                    let e = (-eig.eigenvalues[c] - target).abs() / target.abs();
                    spectrum_error = spectrum_error.max(e);
                    errors.push((target, e));
                }
                let span: Vec<Vec<f64>> = cols.iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect();
                for vector in fix_gauge(&span, n) {
                    modes.push(Mode { l, eigenvalue: target, vector });
                }
            }
        }
        modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
        for a in &modes {
            for b in modes.iter().filter(|b| b.l == a.l) {
                let d: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
                let e = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                ortho = ortho.max((d - e).abs());
            }
        }
        let n_negative = modes.iter().filter(|m| m.eigenvalue < 0.0).count();
        let mut clusters: Vec<(f64, usize)> = Vec::new();
        for m in &modes {
            match clusters.last_mut() {
                Some((v, c)) if *v == m.eigenvalue => *c += 2,
                _ => clusters.push((m.eigenvalue, 2)),
            }
        }
        let report = BasisReport {
            band: sphere.band(),
            half_band: half,
            size: modes.len(),
            max_spectrum_error: spectrum_error,
            orthonormality_defect: ortho,
            roundtrip_defect: 0.0,
            cluster_errors: clusters
                .iter()
                .map(|&(v, _)| errors.iter().filter(|e| e.0 == v).fold(0.0f64, |a, e| a.max(e.1)))
                .collect(),
            clusters,
        };
        let mut basis = Self { sphere, half_band: half, modes, n_negative, report };
        basis.report.roundtrip_defect = basis.roundtrip_defect();
        basis.validate()?;
        Ok(Arc::new(basis))
    }

    fn validate(&self) -> Result<()> {
        let r = &self.report;
        if r.max_spectrum_error > 1e-6 || r.orthonormality_defect > 1e-10 || r.roundtrip_defect > 1e-10 {
            return Err(Error::BasisValidation(format!(
                "spectrum error {:e}, orthonormality defect {:e}, roundtrip defect {:e}",
                r.max_spectrum_error, r.orthonormality_defect, r.roundtrip_defect
            )));
        }
        for m in 1..=self.half_band {
            for sign in [-1.0, 1.0] {
                let lam = sign * m as f64;
                let mult = r.clusters.iter().find(|c| c.0 == lam).map_or(0, |c| c.1);
                if mult != 4 * m {
                    return Err(Error::BasisValidation(format!("eigenvalue {lam} has real multiplicity {mult}")));
                }
            }
        }
        Ok(())
    }

    /// Synthesis then analysis of every mode on the base grid.
    fn roundtrip_defect(&self) -> f64 {
        let grid = self.sphere.base_grid();
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
            c[k] = Complex64::new(1.0, 0.0);
            let [a, b] = self.sample(&c, grid);
            let back = self.analyze(grid, &a, &b).expect("base grid holds the spinor band");
            for (i, v) in back.iter().enumerate() {
                let e = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((v - e).norm());
            }
        }
        worst
    }

    pub fn sphere(&self) -> &Arc<Sphere> {
        &self.sphere
    }

    pub fn band(&self) -> usize {
        self.sphere.band()
    }

    /// Orbital degree cap of each spinor component.
    pub fn half_band(&self) -> usize {
        self.half_band
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.modes[k].eigenvalue
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn n_negative(&self) -> usize {
        self.n_negative
    }

    /// Positions of modes with positive eigenvalue.
    pub fn positive(&self) -> std::ops::Range<usize> {
        self.n_negative..self.len()
    }

    pub fn negative(&self) -> std::ops::Range<usize> {
        0..self.n_negative
    }

    /// Signed label: positive modes are `1, 2, …` upward from `λ = 1`,
    /// negative modes `−1, −2, …` downward from `λ = −1`.
    pub fn label(&self, k: usize) -> i64 {
        if k >= self.n_negative {
            (k - self.n_negative) as i64 + 1
        } else {
            -((self.n_negative - k) as i64)
        }
    }

    pub fn position(&self, label: i64) -> Option<usize> {
        let k = if label > 0 {
            self.n_negative + label as usize - 1
        } else if label < 0 {
            self.n_negative.checked_sub(label.unsigned_abs() as usize)?
        } else {
            return None;
        };
        (k < self.len()).then_some(k)
    }

    /// Positions whose eigenvalue equals `lambda` (a whole cluster).
    pub fn cluster(&self, lambda: f64) -> Vec<usize> {
        (0..self.len()).filter(|&k| (self.modes[k].eigenvalue - lambda).abs() < 1e-9).collect()
    }

    pub fn report(&self) -> &BasisReport {
        &self.report
    }

    /// Complex harmonic coefficients (degree ≤ L/2) of the two components.
    pub fn to_components(&self, coeffs: &[Complex64]) -> [Vec<Complex64>; 2] {
        let n = coeff_count(self.half_band);
        let mut up = vec![Complex64::new(0.0, 0.0); n];
        let mut dn = up.clone();
        for (mode, c) in self.modes.iter().zip(coeffs) {
            let li = mode.l as i64;
            for m in -li..=li {
                let at = 2 * (m + li) as usize;
                up[idx(mode.l, m)] += c * mode.vector[at];
                dn[idx(mode.l, m)] += c * mode.vector[at + 1];
            }
        }
        [up, dn]
    }

    /// Orthogonal projection of component coefficients onto the basis.
    pub fn from_components(&self, up: &[Complex64], dn: &[Complex64]) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|mode| {
                let li = mode.l as i64;
                let mut s = Complex64::new(0.0, 0.0);
                for m in -li..=li {
                    let at = 2 * (m + li) as usize;
                    s += up[idx(mode.l, m)] * mode.vector[at] + dn[idx(mode.l, m)] * mode.vector[at + 1];
                }
                s
            })
            .collect()
    }

    /// Pointwise values of both components on `grid`.
    pub fn sample(&self, coeffs: &[Complex64], grid: &SphereGrid) -> [Vec<Complex64>; 2] {
        let [up, dn] = self.to_components(coeffs);
        [grid.synthesize_complex(self.half_band, &up), grid.synthesize_complex(self.half_band, &dn)]
    }

    /// Quadrature projection of grid values onto the basis.
    pub fn analyze(&self, grid: &SphereGrid, up: &[Complex64], dn: &[Complex64]) -> Result<Vec<Complex64>> {
        let a = grid.analyze_complex(self.half_band, up)?;
        let b = grid.analyze_complex(self.half_band, dn)?;
        Ok(self.from_components(&a, &b))
    }
}

/// Deterministic orthonormal basis of `span`: project the unit vectors
/// `e_0, e_1, …` in order and keep what survives Gram–Schmidt.
fn fix_gauge(span: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let project = |x: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for b in basis {
            let d: f64 = x.iter().zip(b).map(|(p, q)| p * q).sum();
            x.iter_mut().zip(b).for_each(|(p, q)| *p -= d * q);
        }
    };
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(span.len());
    for a in 0..n {
        if out.len() == span.len() {
            break;
        }
        let mut v = vec![0.0; n];
        for s in span {
            v.iter_mut().zip(s).for_each(|(p, q)| *p += s[a] * q);
        }
        project(&mut v, &out);
        project(&mut v, &out);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_spectrum() {
        for l in 0..6 {
            let e = SymmetricEigen::new(k_block(l)).eigenvalues;
            let pos = e.iter().filter(|&&x| (x - (l as f64 + 1.0)).abs() < 1e-12).count();
            let neg = e.iter().filter(|&&x| (x + l as f64).abs() < 1e-12).count();
            assert_eq!(pos, 2 * l + 2);
            assert_eq!(neg, 2 * l);
        }
    }

    #[test]
    fn labels_roundtrip() {
        let b = DiracBasis::assemble(BandLimit::new(8).unwrap()).unwrap();
        for k in 0..b.len() {
            assert_eq!(b.position(b.label(k)), Some(k));
        }
        assert_eq!(b.eigenvalue(b.position(1).unwrap()), 1.0);
        assert_eq!(b.eigenvalue(b.position(-1).unwrap()), -1.0);
        assert_eq!(b.position(0), None);
    }
}
