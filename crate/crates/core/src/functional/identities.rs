use std::f64::consts::PI;

use serde::Serialize;

use super::{Pointwise, State};
use crate::error::Result;
use crate::nehari::weighted_eigensystem;
use crate::sphere::{ScalarField, Sphere};

/// `∫ Δu (∇x^j·∇u)` for `j = 1, 2, 3`; zero for every `u`.
pub fn kazdan_warner_defect(sphere: &Sphere, u: &ScalarField) -> [f64; 3] {
    let band = u.band();
    let lap = u.laplacian().with_band(band + 1);
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let x = ScalarField::coordinate(band, j);
        let g = sphere.grad_dot_band(&x, u, band + 1).expect("fine grid holds band L+1");
        *o = lap.l2_dot(&g);
    }
    out
}

/// `∫ e^u ∇|ψ|²·∇x^j − ∫ e^u |ψ|² x^j` per axis.
pub fn conservation_defect(s: &State) -> [f64; 3] {
    let p = Pointwise::new(s);
    let sphere = s.sphere();
    let band = s.u.band();
    let dens = p.analyze_scalar(&p.dens);
    let grid = p.grid();
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let x = ScalarField::coordinate(band, j);
        let g = sphere.grad_dot_band(&dens, &x, band + 1).expect("fine grid holds band L+1");
        let gv = sphere.synthesize_fine(&g);
        let v: Vec<f64> = (0..p.len())
            .map(|i| p.eu[i] * (gv[i] - p.dens[i] * grid.point(i)[j]))
            .collect();
        *o = grid.integrate(&v);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BarReport {
    /// `∫ e^{2u}`.
    pub volume: f64,
    /// Smallest `|λ|` of `D̸φ = λe^uφ`.
    pub lambda_one: f64,
    /// `λ₁² · volume`.
    pub bar_product: f64,
    /// `ψ ≠ 0 ⇒ ρ > 1`.
    pub rho_gt_one: bool,
    pub volume_ok: bool,
    pub bar_ok: bool,
}

impl BarReport {
    pub fn passed(&self) -> bool {
        self.volume_ok && self.bar_ok && self.rho_gt_one
    }
}

/// Volume bound `∫e^{2u} ≤ 4π` and Bär's bound `λ₁² Vol ≥ 4π`.
pub fn bar_volume_check(s: &State) -> Result<BarReport> {
    let p = Pointwise::new(s);
    let volume = p.grid().integrate(&p.e2u);
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    let lambda_one = ws.eigenvalues().iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
    let bar_product = lambda_one * lambda_one * volume;
    let tol = 4.0 * PI * 1e-6;
    Ok(BarReport {
        volume,
        lambda_one,
        bar_product,
        rho_gt_one: s.psi.is_zero() || s.rho > 1.0,
        volume_ok: volume <= 4.0 * PI + tol,
        bar_ok: bar_product >= 4.0 * PI - tol,
    })
}
