use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{coeff_count, ScalarField};
use crate::spinor::{DiracBasis, SpinorField};

type CMatrix = DMatrix<Complex64>;
type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative gap below which weighted eigenvalues share a cluster.
const CLUSTER_TOL: f64 = 1e-6;

/// Gram matrix `∫ w ⟨φ_i, φ_j⟩` of the Dirac basis for a weight sampled on
/// the fine grid.
pub(crate) fn weighted_gram(basis: &DiracBasis, weight: &[f64]) -> CMatrix {
    let grid = basis.sphere().fine_grid();
    let lh = basis.half_band();
    let nsh = coeff_count(lh);
    let g = CMatrix::from_row_slice(nsh, nsh, &grid.weighted_gram_complex(lh, weight).expect("fine grid holds twice the spinor band"));
    let n = basis.len();
    let mut up = CMatrix::zeros(nsh, n);
    let mut dn = CMatrix::zeros(nsh, n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = ONE;
        let [cu, cd] = basis.to_components(&e);
        up.set_column(j, &CVector::from_vec(cu));
        dn.set_column(j, &CVector::from_vec(cd));
        e[j] = ZERO;
    }
    // mode vectors are real, so the adjoint is a plain transpose
    let m = up.transpose() * &g * &up + dn.transpose() * &g * &dn;
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Solutions of `D̸φ = λ e^u φ` in the Dirac basis, `e^u`-orthonormal.
#[derive(Debug, Clone)]
pub struct WeightedEigenSystem {
    basis: Arc<DiracBasis>,
    u: ScalarField,
    eigenvalues: Vec<f64>,
    /// Column `k` holds the basis coefficients of `φ_k`.
    vectors: CMatrix,
    /// `M_u`, the weighted Gram matrix.
    mass: CMatrix,
    clusters: Vec<Range<usize>>,
    n_negative: usize,
}

/// Per-pair diagnostics for the eigen-system dump.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub label: i64,
    pub lambda: f64,
    pub residual: f64,
}

/// Weighted Dirac eigensystem at `u`: `D c = λ M_u c` via Cholesky reduction.
pub fn weighted_eigensystem(basis: &Arc<DiracBasis>, u: &ScalarField) -> Result<WeightedEigenSystem> {
    let sphere = basis.sphere();
    let eu: Vec<f64> = sphere.synthesize_fine(u).iter().map(|v| v.exp()).collect();
    let mass = weighted_gram(basis, &eu);
    let n = basis.len();
    let chol = mass.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let linv = chol.l().solve_lower_triangular(&CMatrix::identity(n, n)).ok_or(Error::NotPositiveDefinite)?;
    let d = CMatrix::from_diagonal(&CVector::from_iterator(n, basis.eigenvalues().into_iter().map(|l| Complex64::new(l, 0.0))));
    let a = &linv * d * linv.adjoint();
    let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = linv.adjoint();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &(&back * eig.eigenvectors.column(i)));
    }
    if eigenvalues.iter().any(|l| !l.is_finite() || *l == 0.0) {
        return Err(Error::NonFinite("weighted eigenvalues"));
    }
    let scale = eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || eigenvalues[k] - eigenvalues[k - 1] > CLUSTER_TOL * scale {
            clusters.push(start..k);
            start = k;
        }
    }
    let n_negative = eigenvalues.iter().filter(|l| **l < 0.0).count();
    let mut ws = WeightedEigenSystem { basis: basis.clone(), u: u.clone(), eigenvalues, vectors, mass, clusters, n_negative };
    ws.fix_gauge();
    Ok(ws)
}

impl WeightedEigenSystem {
    /// Inside each cluster, `M`-orthonormalize the projections of the unit
    /// vectors at the cluster's own positions (then any others), in order.
    fn fix_gauge(&mut self) {
        let n = self.len();
        for r in self.clusters.clone() {
            let c = self.vectors.columns(r.start, r.len()).into_owned();
            // columns of C are M-orthonormal, so M-projections of unit vectors
            // reduce to plain Gram–Schmidt on the rows of CᴴM
            let cm = c.adjoint() * &self.mass;
            let candidates = r.clone().chain((0..n).filter(|i| !r.contains(i)));
            let mut kept: Vec<CVector> = Vec::with_capacity(r.len());
            for i in candidates {
                if kept.len() == r.len() {
                    break;
                }
                let mut a = cm.column(i).into_owned();
                for q in &kept {
                    let proj = q.dotc(&a);
                    a -= q * proj;
                }
                let nrm = a.norm();
                if nrm > 1e-3 {
                    kept.push(a / Complex64::new(nrm, 0.0));
                }
            }
            for (j, a) in kept.iter().enumerate() {
                self.vectors.set_column(r.start + j, &(&c * a));
            }
        }
    }

    pub fn basis(&self) -> &Arc<DiracBasis> {
        &self.basis
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn mass(&self) -> &CMatrix {
        &self.mass
    }

    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    pub fn cluster_of(&self, k: usize) -> Range<usize> {
        self.clusters.iter().find(|r| r.contains(&k)).cloned().unwrap_or(k..k + 1)
    }

    pub fn n_negative(&self) -> usize {
        self.n_negative
    }

    pub fn negative(&self) -> Range<usize> {
        0..self.n_negative
    }

    pub fn positive(&self) -> Range<usize> {
        self.n_negative..self.len()
    }

    /// Signed label as for the unweighted basis.
    pub fn label(&self, k: usize) -> i64 {
        if k >= self.n_negative {
            (k - self.n_negative) as i64 + 1
        } else {
            -((self.n_negative - k) as i64)
        }
    }

    pub fn coefficients(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn spinor(&self, k: usize) -> SpinorField {
        SpinorField::from_coeffs(&self.basis, self.vectors.column(k).iter().copied().collect())
            .expect("finite eigenvector")
    }

    /// Eigenpairs with `|label| ≤ j_max`.
    pub fn pairs(&self, j_max: usize) -> Vec<(f64, SpinorField)> {
        (0..self.len())
            .filter(|&k| self.label(k).unsigned_abs() as usize <= j_max)
            .map(|k| (self.eigenvalues[k], self.spinor(k)))
            .collect()
    }

    /// `‖D c_k − λ_k M c_k‖` per pair.
    pub fn residuals(&self) -> Vec<f64> {
        let ev = self.basis.eigenvalues();
        (0..self.len())
            .map(|k| {
                let c = self.vectors.column(k);
                let mc = &self.mass * c;
                (0..c.len()).map(|i| (c[i] * ev[i] - mc[i] * self.eigenvalues[k]).norm_sqr()).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// `max |Cᴴ M C − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.mass * &self.vectors;
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { ONE } else { ZERO };
                worst = worst.max((g[(i, j)] - e).norm());
            }
        }
        worst
    }

    pub fn report(&self) -> Vec<PairReport> {
        self.residuals()
            .into_iter()
            .enumerate()
            .map(|(k, r)| PairReport { label: self.label(k), lambda: self.eigenvalues[k], residual: r })
            .collect()
    }

    /// Coefficient weights of the first-order eigenvector variation:
    /// `δc_k = Σ_i w_ik (c_iᴴ M_v c_k) c_i`.
    pub(crate) fn variation_weight(&self, i: usize, k: usize) -> f64 {
        if self.cluster_of(k).contains(&i) {
            -0.5
        } else {
            self.eigenvalues[k] / (self.eigenvalues[i] - self.eigenvalues[k])
        }
    }
}

/// First-order variation of `φ_k(u)` along `v`.
///
/// Inside the cluster of `k` the variation is the parallel-transport
/// choice (Hermitian part only), which keeps the cluster frame
/// `e^u`-orthonormal to first order.
pub fn eigen_variation(ws: &WeightedEigenSystem, v: &ScalarField, k: usize) -> Result<SpinorField> {
    if k >= ws.len() {
        return Err(Error::InvalidArgument(format!("eigen index {k} out of range")));
    }
    let sphere = ws.basis().sphere();
    let uv = sphere.synthesize_fine(ws.u());
    let vv = sphere.synthesize_fine(v);
    let w: Vec<f64> = uv.iter().zip(&vv).map(|(a, b)| a.exp() * b).collect();
    let mv = weighted_gram(ws.basis(), &w);
    let c = ws.vectors();
    let p = c.adjoint() * (&mv * c.column(k));
    let mut out = CVector::zeros(ws.len());
    for i in 0..ws.len() {
        let a = p[i] * ws.variation_weight(i, k);
        out += c.column(i) * a;
    }
    SpinorField::from_coeffs(ws.basis(), out.iter().copied().collect())
}
