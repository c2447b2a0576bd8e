use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::{Pointwise, State};
use crate::sphere::{degree_of, ScalarField};
use crate::spinor::{DiracBasis, SpinorField};
use crate::tangent::TangentSpace;

use std::sync::Arc;

/// Half-width of the window around integers where the origin Hessian is
/// reported as degenerate.
pub const DEGENERACY_WINDOW: f64 = 1e-8;

/// Eigenvalues below this magnitude count as kernel.
const KERNEL_TOL: f64 = 1e-6;

/// Directional derivative of the Euler–Lagrange residual at a fixed state.
pub(crate) struct Linearization<'a> {
    p: Pointwise<'a>,
    s: &'a State,
    /// `2e^{2u} + ρe^u|ψ|²`, the multiplier of `v` in the scalar equation.
    scalar_coef: Vec<f64>,
}

impl<'a> Linearization<'a> {
    pub fn new(s: &'a State) -> Self {
        let p = Pointwise::new(s);
        let scalar_coef = (0..p.len()).map(|i| 2.0 * p.e2u[i] + s.rho * p.eu[i] * p.dens[i]).collect();
        Self { p, s, scalar_coef }
    }

    /// `(δS, δP)` along `(v, h)`:
    ///
    /// ```text
    /// δS = −Δv − (2e^{2u} + ρe^u|ψ|²)v − 2ρe^u Re⟨ψ, h⟩
    /// δP = D̸h − ρe^u(vψ + h)
    /// ```
    pub fn apply(&self, v: &ScalarField, h: &SpinorField) -> (ScalarField, SpinorField) {
        let p = &self.p;
        let rho = self.s.rho;
        let basis = self.s.basis();
        let grid = p.grid();
        let vv = self.s.sphere().synthesize_fine(v);
        let [h0, h1] = basis.sample(h.coeffs(), grid);
        let mut sv = vec![0.0; p.len()];
        let mut up = vec![Complex64::new(0.0, 0.0); p.len()];
        let mut dn = up.clone();
        for i in 0..p.len() {
            let mix = (p.psi[0][i].conj() * h0[i] + p.psi[1][i].conj() * h1[i]).re;
            sv[i] = -self.scalar_coef[i] * vv[i] - 2.0 * rho * p.eu[i] * mix;
            let a = -rho * p.eu[i];
            up[i] = (p.psi[0][i] * vv[i] + h0[i]) * a;
            dn[i] = (p.psi[1][i] * vv[i] + h1[i]) * a;
        }
        let mut ds = p.analyze_scalar(&sv);
        ds += &(-v.laplacian());
        let mut coeffs = p.analyze_spinor(&up, &dn);
        for (c, d) in coeffs.iter_mut().zip(h.apply_dirac().coeffs()) {
            *c += d;
        }
        (ds, SpinorField::from_coeffs(basis, coeffs).expect("finite linearization"))
    }
}

/// Jacobian of the flat residual `(S, Re P, Im P)` in flat coordinates.
pub fn el_jacobian(s: &State, space: &TangentSpace) -> DMatrix<f64> {
    let lin = Linearization::new(s);
    let n = space.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut e = nalgebra::DVector::zeros(n);
    for col in 0..n {
        e[col] = 1.0;
        let (v, h) = space.split(&e);
        let (ds, dp) = lin.apply(&v, &h);
        jac.set_column(col, &space.flatten(&ds, &dp));
        e[col] = 0.0;
    }
    jac
}

/// Second variation of `J_ρ` as a bilinear form in flat coordinates,
/// symmetrized: `d²J[x, y] = xᵀ H y`.
pub fn second_variation(s: &State, space: &TangentSpace) -> DMatrix<f64> {
    let mut h = el_jacobian(s, space);
    let nu = space.scalar_dim();
    for (r, mut row) in h.row_iter_mut().enumerate() {
        row *= if r < nu { 2.0 } else { 4.0 };
    }
    (&h + h.transpose()) * 0.5
}

/// Restriction of the origin Hessian to the tangent space of the
/// constraint manifold, affine in `ρ`.
#[derive(Debug, Clone)]
pub struct OriginHessian {
    basis: Arc<DiracBasis>,
    constant: DMatrix<f64>,
    slope: DMatrix<f64>,
    keep: Vec<usize>,
    scale: Vec<f64>,
    dim: usize,
}

impl OriginHessian {
    pub fn new(basis: &Arc<DiracBasis>) -> Self {
        let space = TangentSpace::new(basis);
        let nu = space.scalar_dim();
        // degree ≥ 2 scalars and positive spinor modes; scaled so the metric is the identity
        let keep: Vec<usize> =
            (0..nu).filter(|&i| degree_of(i) >= 2).chain(space.positive_spinor_coords()).collect();
        let restrict = |rho: f64| {
            let h = second_variation(&State::trivial(basis, rho), &space);
            let w = space.weights();
            DMatrix::from_fn(keep.len(), keep.len(), |a, b| {
                let (i, j) = (keep[a], keep[b]);
                h[(i, j)] / (w[i] * w[j]).sqrt()
            })
        };
        let h0 = restrict(0.0);
        let slope = restrict(1.0) - &h0;
        let scale = keep.iter().map(|&i| space.weights()[i].sqrt()).collect();
        Self { basis: basis.clone(), constant: h0, slope, keep, scale, dim: space.dim() }
    }

    pub fn basis(&self) -> &Arc<DiracBasis> {
        &self.basis
    }

    pub fn spectrum(&self, rho: f64) -> Vec<f64> {
        let m = &self.constant + &self.slope * rho;
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn index(&self, rho: f64) -> IndexReport {
        IndexReport::from_spectrum(rho, &self.spectrum(rho))
    }

    /// The `count` eigenvectors with eigenvalue closest to zero, as flat
    /// tangent vectors of unit `H¹ × H^{1/2}` norm.
    pub fn near_kernel(&self, rho: f64, count: usize) -> Vec<DVector<f64>> {
        let eig = SymmetricEigen::new(&self.constant + &self.slope * rho);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()).then(a.cmp(&b)));
        order
            .into_iter()
            .take(count)
            .map(|k| {
                let col = eig.eigenvectors.column(k);
                let mut x = DVector::zeros(self.dim);
                for (a, &i) in self.keep.iter().enumerate() {
                    x[i] = col[a] / self.scale[a];
                }
                x
            })
            .collect()
    }
}

/// Morse index of a restricted Hessian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub rho: f64,
    /// Real dimension of the negative eigenspace.
    pub index: usize,
    pub kernel_dim: usize,
    /// `ρ` sits inside the integer window, so the kernel is expected.
    pub degenerate: bool,
    /// Eigenvalues of modulus below 4 (one spinor level), ascending.
    pub spectrum_near_zero: Vec<f64>,
}

impl IndexReport {
    pub fn from_spectrum(rho: f64, spectrum: &[f64]) -> Self {
        let index = spectrum.iter().filter(|&&e| e < -KERNEL_TOL).count();
        let kernel_dim = spectrum.iter().filter(|&&e| e.abs() <= KERNEL_TOL).count();
        let degenerate = (rho - rho.round()).abs() < DEGENERACY_WINDOW && rho.round() >= 1.0;
        let spectrum_near_zero = spectrum.iter().copied().filter(|e| e.abs() < 4.0 - 1e-9).collect();
        Self { rho, index, kernel_dim, degenerate, spectrum_near_zero }
    }
}

/// Morse index `l(ρ)` at the origin, restricted to degree ≥ 2 scalars and
/// positive spinor modes.
pub fn hessian_index_at_origin(basis: &Arc<DiracBasis>, rho: f64) -> IndexReport {
    OriginHessian::new(basis).index(rho)
}
