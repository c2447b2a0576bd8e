//! The augmented system `{Euler–Lagrange residual, constraints}` in scaled
//! coordinates `y = W^{1/2} x`, where `W` is the diagonal metric weight.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::Result;
use crate::functional::{el_jacobian, el_residual, second_variation, IndexReport, Pointwise, State};
use crate::nehari::{constraints_with, normal_frame_with, WeightedEigenSystem};
use crate::spinor::SpinorField;
use crate::tangent::TangentSpace;

/// Row weights turning the flat residual into the scaled dual gradient.
fn el_row_scale(space: &TangentSpace) -> DVector<f64> {
    let nu = space.scalar_dim();
    DVector::from_fn(space.dim(), |i, _| (if i < nu { 2.0 } else { 4.0 }) / space.weights()[i].sqrt())
}

pub(crate) struct Evaluation {
    /// Scaled residual rows followed by raw constraint values.
    pub f: DVector<f64>,
    pub residual_norm: f64,
    pub constraint_norm: f64,
}

impl Evaluation {
    pub fn merit(&self) -> f64 {
        self.residual_norm + self.constraint_norm
    }
}

pub(crate) fn evaluate(s: &State, ws: &WeightedEigenSystem, space: &TangentSpace) -> Evaluation {
    let r = el_residual(s);
    let c = constraints_with(s, ws);
    let el = space.flatten(&r.scalar_part, &r.spinor_part).component_mul(&el_row_scale(space));
    let cf = c.flat();
    let mut f = DVector::zeros(el.len() + cf.len());
    f.rows_mut(0, el.len()).copy_from(&el);
    f.rows_mut(el.len(), cf.len()).copy_from(&cf);
    Evaluation { f, residual_norm: r.norm, constraint_norm: c.norm() }
}

pub(crate) struct Linearized {
    pub eval: Evaluation,
    /// Jacobian of `f` with respect to `y`.
    pub a: DMatrix<f64>,
    /// `∂f/∂ρ`.
    pub f_rho: DVector<f64>,
}

pub(crate) fn linearize(s: &State, ws: &WeightedEigenSystem, space: &TangentSpace) -> Result<Linearized> {
    let n = space.dim();
    let frame = normal_frame_with(s, ws, space)?;
    let m = frame.len();
    let rs = el_row_scale(space);
    let sw = space.weights().map(f64::sqrt);
    let jac = el_jacobian(s, space);
    let mut a = DMatrix::zeros(n + m, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = rs[i] * jac[(i, j)] / sw[j];
        }
    }
    // constraint differentials are lowered frame vectors: dG = ⟨F, ·⟩
    let factors = std::iter::repeat(2.0).take(3).chain(std::iter::repeat(1.0).take(frame.z.len())).chain(std::iter::once(1.0 / (4.0 * PI)));
    for (r, (v, fac)) in frame.vectors().zip(factors).enumerate() {
        for j in 0..n {
            a[(n + r, j)] = fac * v[j] * sw[j];
        }
    }
    let p = Pointwise::new(s);
    let dens = p.analyze_scalar(&p.eu_dens()) * -1.0;
    let mpsi: Vec<Complex64> = p.analyze_spinor_weighted(&p.eu);
    let d_el = space.flatten(&dens, &(SpinorField::from_coeffs(s.basis(), mpsi.clone())? * -1.0));
    let mut f_rho = DVector::zeros(n + m);
    f_rho.rows_mut(0, n).copy_from(&d_el.component_mul(&rs));
    let mc = DVector::from_vec(mpsi);
    for (j, k) in ws.negative().enumerate() {
        let z = -ws.vectors().column(k).dotc(&mc);
        f_rho[n + 3 + 2 * j] = z.re;
        f_rho[n + 3 + 2 * j + 1] = z.im;
    }
    f_rho[n + m - 1] = p.grid().integrate(&p.eu_dens()) / (4.0 * PI);
    Ok(Linearized { eval: evaluate(s, ws, space), a, f_rho })
}

/// Minimum-norm least-squares solution of `a x = b`, dropping singular
/// values below `rel · σ_max`. Returns the solution and the number kept.
pub(crate) fn tsvd_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> (DVector<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let vt = svd.v_t.as_ref().expect("right vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    let mut x = DVector::zeros(a.ncols());
    let mut kept = 0;
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > rel * smax && *s > 0.0 {
            let coef = u.column(k).dot(b) / s;
            x += vt.row(k).transpose() * coef;
            kept += 1;
        }
    }
    (x, kept)
}

/// Orthonormal basis (columns) of the orthogonal complement of `cols`.
pub(crate) fn complement(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = cols.shape();
    let mut aug = DMatrix::zeros(n, m + n);
    aug.columns_mut(0, m).copy_from(cols);
    aug.columns_mut(m, n).fill_with_identity();
    let q = aug.qr().q();
    q.columns(m, n - m).into_owned()
}

/// Morse index of the second variation restricted to the tangent space of
/// the constraint manifold at `s`.
pub fn restricted_index(s: &State, ws: &WeightedEigenSystem, space: &TangentSpace) -> Result<IndexReport> {
    let frame = normal_frame_with(s, ws, space)?;
    let sw = space.weights().map(f64::sqrt);
    let mut fy = frame.matrix();
    for mut col in fy.column_iter_mut() {
        col.component_mul_assign(&sw);
    }
    let q = complement(&fy);
    let mut h = second_variation(s, space);
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            h[(i, j)] /= sw[i] * sw[j];
        }
    }
    let r = q.transpose() * h * &q;
    let mut ev: Vec<f64> = SymmetricEigen::new((&r + r.transpose()) * 0.5).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(IndexReport::from_spectrum(s.rho, &ev))
}

/// Adds `dy` (scaled coordinates) to the fields of `s`.
pub(crate) fn step(s: &State, space: &TangentSpace, dy: &DVector<f64>, rho: f64) -> Result<State> {
    let dx = dy.component_div(&space.weights().map(f64::sqrt));
    let (v, h) = space.split(&dx);
    State::new(s.u.clone() + v, s.psi.clone() + h, rho)
}
