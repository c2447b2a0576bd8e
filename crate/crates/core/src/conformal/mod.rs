//! Möbius group actions on scalars and spinors, centre of mass and balancing.

mod moebius;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

pub use moebius::{dilation_derivative_checks, Axis, MoebiusMap, MAP_NORM_CAP};

use crate::error::Result;
use crate::sphere::{eval_complex_at, ScalarField, Sphere};
use crate::spinor::SpinorField;

/// Centre of mass `∫x e^{2u} / ∫e^{2u}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassCenter {
    pub vector: [f64; 3],
}

impl MassCenter {
    pub fn norm(&self) -> f64 {
        Vector3::from(self.vector).norm()
    }
}

/// `u_φ = u∘φ + ½ ln det(dφ)`, sampled on the fine grid and re-analyzed.
///
/// Maps with operator norm above [`MAP_NORM_CAP`] are rejected.
pub fn pullback_scalar(sphere: &Sphere, u: &ScalarField, phi: &MoebiusMap) -> Result<ScalarField> {
    phi.check_cap(MAP_NORM_CAP)?;
    Ok(pullback_scalar_unchecked(sphere, u, phi))
}

pub(crate) fn pullback_scalar_unchecked(sphere: &Sphere, u: &ScalarField, phi: &MoebiusMap) -> ScalarField {
    let grid = sphere.fine_grid();
    let (images, factors): (Vec<_>, Vec<_>) = grid.points().iter().map(|&x| phi.apply_with_factor(x)).unzip();
    let uy = u.eval_at(&images);
    let v: Vec<f64> = uy.iter().zip(&factors).map(|(a, f)| a + 0.5 * f.ln()).collect();
    sphere.analyze_fine(&v, u.band()).expect("fine grid holds band L")
}

/// `ψ_φ = det(dφ)^{1/4} β (ψ∘φ)` with the SL(2, ℂ) spin cocycle `β`.
pub fn pullback_spinor(psi: &SpinorField, phi: &MoebiusMap) -> Result<SpinorField> {
    phi.check_cap(MAP_NORM_CAP)?;
    let basis = psi.basis();
    let grid = basis.sphere().fine_grid();
    let lh = basis.half_band();
    let lifts: Vec<_> = grid.points().iter().map(|&x| phi.spin_cocycle(x)).collect();
    let images: Vec<[f64; 3]> = lifts.iter().map(|l| l.0).collect();
    let [cu, cd] = basis.to_components(psi.coeffs());
    let a = eval_complex_at(lh, &cu, &images);
    let b = eval_complex_at(lh, &cd, &images);
    let mut up = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut dn = up.clone();
    for (p, (_, r, beta)) in lifts.iter().enumerate() {
        up[p] = (beta[0][0] * a[p] + beta[0][1] * b[p]) * *r;
        dn[p] = (beta[1][0] * a[p] + beta[1][1] * b[p]) * *r;
    }
    SpinorField::from_coeffs(basis, basis.analyze(grid, &up, &dn)?)
}

fn exp2u(sphere: &Sphere, u: &ScalarField) -> Vec<f64> {
    sphere.synthesize_fine(u).iter().map(|v| (2.0 * v).exp()).collect()
}

pub fn center_of_mass(sphere: &Sphere, u: &ScalarField) -> MassCenter {
    let (m, g, _) = pulled_moments(sphere, &exp2u(sphere, u), &MoebiusMap::identity());
    MassCenter { vector: (g / m).into() }
}

/// `Λ_kj(u) = ∫ e^{2u} x^k x^j`.
pub fn lambda_matrix(sphere: &Sphere, u: &ScalarField) -> Matrix3<f64> {
    pulled_moments(sphere, &exp2u(sphere, u), &MoebiusMap::identity()).2
}

/// Mass, first and second moments of `e^{2u_φ}` without resampling `u`:
/// the change of variables `y = φ(x)` turns `∫ x e^{2u_φ}` into
/// `∫ φ⁻¹(y) e^{2u(y)}`.
fn pulled_moments(sphere: &Sphere, e2u: &[f64], phi: &MoebiusMap) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let grid = sphere.fine_grid();
    let inv = phi.inverse();
    let mut m = 0.0;
    let mut g = Vector3::zeros();
    let mut lam = Matrix3::zeros();
    for p in 0..grid.len() {
        let w = grid.weight(p) * e2u[p];
        let x = Vector3::from(inv.apply(grid.point(p)));
        m += w;
        g += x * w;
        lam += x * x.transpose() * w;
    }
    (m, g, lam)
}

/// Outcome of [`balance`].
#[derive(Debug, Clone, Serialize)]
pub struct Balanced {
    pub map: MoebiusMap,
    pub u_phi: ScalarField,
    /// `|CM|` of the exact pullback, measured through the change of variables.
    pub defect: f64,
    /// `|CM|` recomputed from the band-limited `u_φ`.
    pub truncated_defect: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

pub const BALANCE_TOL: f64 = 1e-8;
pub const BALANCE_MAX_ITER: usize = 50;

/// Finds `φ` with `CM(e^{2u_φ}) = 0` by damped Newton over dilations.
///
/// Writing `φ_s = D_ŝ(e^{−|s|})` for the dilation with parameter `s ∈ ℝ³`,
/// the centre of mass of the pulled-back density moves by
/// `(I − Λ/m) s` to first order, with `m = ∫e^{2u}` and `Λ = Λ(u_φ)`.
pub fn balance(sphere: &Sphere, u: &ScalarField) -> Result<Balanced> {
    let e2u = exp2u(sphere, u);
    let mut phi = MoebiusMap::identity();
    let (mut m, mut g, mut lam) = pulled_moments(sphere, &e2u, &phi);
    let mut cm = g / m;
    let mut history = vec![cm.norm()];
    let mut iterations = 0;
    while cm.norm() >= BALANCE_TOL && iterations < BALANCE_MAX_ITER {
        iterations += 1;
        let jac = Matrix3::identity() - lam / m;
        let Some(step) = jac.lu().solve(&(-cm)) else { break };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let s = step * scale;
            let len = s.norm();
            let trial = if len > 0.0 { phi.compose(&MoebiusMap::dilation_along((-len).exp(), (s / len).into())) } else { phi };
            let (m2, g2, l2) = pulled_moments(sphere, &e2u, &trial);
            if (g2 / m2).norm() < cm.norm() {
                phi = trial;
                (m, g, lam) = (m2, g2, l2);
                cm = g / m;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        history.push(cm.norm());
        if !accepted {
            break;
        }
    }
    let u_phi = pullback_scalar_unchecked(sphere, u, &phi);
    let truncated_defect = center_of_mass(sphere, &u_phi).norm();
    Ok(Balanced { map: phi, u_phi, defect: cm.norm(), truncated_defect, iterations, converged: cm.norm() < BALANCE_TOL, history })
}

/// `(1/4π)∫ e^{2u}`.
pub fn normalized_volume(sphere: &Sphere, u: &ScalarField) -> f64 {
    sphere.fine_grid().integrate(&exp2u(sphere, u)) / (4.0 * PI)
}
