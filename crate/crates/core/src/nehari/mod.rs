//! The constraint manifold: weighted eigensystems, constraint values, the
//! normal frame and constrained gradients.

mod weighted;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

pub use weighted::{eigen_variation, weighted_eigensystem, PairReport, WeightedEigenSystem};

use crate::error::{Error, Result};
use crate::functional::{gradient, gradients_j1_j2_from, Pointwise, State};
use crate::sphere::ScalarField;
use crate::spinor::SpinorField;
use crate::tangent::TangentSpace;

/// Frames with a larger Gram condition number are rejected.
pub const FRAME_CONDITION_CAP: f64 = 1e10;

/// Values of the three constraint families.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintValues {
    /// `∫ x e^{2u}`.
    pub g1: [f64; 3],
    /// `Re` and `Im` of `∫⟨D̸ψ − ρe^uψ, φ_k(u)⟩` for every negative weighted
    /// mode, interleaved.
    pub g2: Vec<f64>,
    /// `(1/4π)∫(e^{2u} + ρe^u|ψ|²) − 1`.
    pub g3: f64,
    /// Largest `|G2|` over the most negative cluster kept, standing in for
    /// the modes cut off by the band limit.
    pub g2_tail: f64,
}

impl ConstraintValues {
    pub fn g2_max(&self) -> f64 {
        self.g2.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn g1_norm(&self) -> f64 {
        self.g1.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of all entries.
    pub fn norm(&self) -> f64 {
        (self.g1.iter().chain(&self.g2).map(|v| v * v).sum::<f64>() + self.g3 * self.g3).sqrt()
    }

    pub fn flat(&self) -> DVector<f64> {
        DVector::from_iterator(
            4 + self.g2.len(),
            self.g1.iter().copied().chain(self.g2.iter().copied()).chain(std::iter::once(self.g3)),
        )
    }
}

fn complex_vec(psi: &SpinorField) -> DVector<Complex64> {
    DVector::from_column_slice(psi.coeffs())
}

/// `(D − ρM)c` for the coefficient vector `c`.
fn shifted(ws: &WeightedEigenSystem, c: &DVector<Complex64>, rho: f64) -> DVector<Complex64> {
    let ev = ws.basis().eigenvalues();
    let mc = ws.mass() * c;
    DVector::from_fn(c.len(), |i, _| c[i] * ev[i] - mc[i] * rho)
}

pub fn constraints(s: &State) -> Result<ConstraintValues> {
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    Ok(constraints_with(s, &ws))
}

pub fn constraints_with(s: &State, ws: &WeightedEigenSystem) -> ConstraintValues {
    let p = Pointwise::new(s);
    let grid = p.grid();
    let mut g1 = [0.0; 3];
    for (j, g) in g1.iter_mut().enumerate() {
        let v: Vec<f64> = (0..p.len()).map(|i| grid.point(i)[j] * p.e2u[i]).collect();
        *g = grid.integrate(&v);
    }
    let r = shifted(ws, &complex_vec(&s.psi), s.rho);
    let g2c = ws.vectors().columns(0, ws.n_negative()).adjoint() * r;
    let g2: Vec<f64> = g2c.iter().flat_map(|z| [z.re, z.im]).collect();
    let g2_tail = ws
        .clusters()
        .first()
        .filter(|c| c.end <= ws.n_negative())
        .map(|c| c.clone().fold(0.0f64, |a, k| a.max(g2c[k].norm())))
        .unwrap_or(0.0);
    let total: Vec<f64> = (0..p.len()).map(|i| p.e2u[i] + s.rho * p.eu[i] * p.dens[i]).collect();
    let g3 = grid.integrate(&total) / (4.0 * PI) - 1.0;
    ConstraintValues { g1, g2, g3, g2_tail }
}

/// `max_k |G2_k − (λ_k − ρ)∫⟨ψ, φ_k⟩e^u|`.
pub fn g2_equivalence_defect(s: &State, ws: &WeightedEigenSystem) -> f64 {
    let c = complex_vec(&s.psi);
    let r = shifted(ws, &c, s.rho);
    let mc = ws.mass() * &c;
    ws.negative()
        .map(|k| {
            let ck = ws.vectors().column(k);
            let lhs = ck.dotc(&r);
            let rhs = ck.dotc(&mc) * (ws.eigenvalue(k) - s.rho);
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
}

/// Which real part of a complex constraint a frame vector differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Part {
    Re,
    Im,
}

/// Riesz vectors of the constraint differentials, in flat coordinates.
#[derive(Debug, Clone)]
pub struct NormalFrame {
    pub y: [DVector<f64>; 3],
    /// One vector per negative weighted mode and part.
    pub z: Vec<DVector<f64>>,
    pub z_labels: Vec<(i64, Part)>,
    pub w: DVector<f64>,
    /// Gram matrix in the order `Y, Z, W`.
    pub gram: DMatrix<f64>,
    pub condition: f64,
}

impl NormalFrame {
    pub fn len(&self) -> usize {
        4 + self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vectors(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.y.iter().chain(&self.z).chain(std::iter::once(&self.w))
    }

    /// Frame vectors as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.vectors().cloned().collect();
        DMatrix::from_columns(&cols)
    }
}

pub(crate) fn gram_of(space: &TangentSpace, cols: &[&DVector<f64>]) -> DMatrix<f64> {
    let lowered: Vec<DVector<f64>> = cols.iter().map(|c| space.lower(c)).collect();
    DMatrix::from_fn(cols.len(), cols.len(), |i, j| lowered[i].dot(cols[j]))
}

pub(crate) fn condition_number(gram: &DMatrix<f64>) -> f64 {
    let ev = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn normal_frame(s: &State) -> Result<NormalFrame> {
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    normal_frame_with(s, &ws, &TangentSpace::new(s.basis()))
}

pub fn normal_frame_with(s: &State, ws: &WeightedEigenSystem, space: &TangentSpace) -> Result<NormalFrame> {
    let p = Pointwise::new(s);
    let grid = p.grid();
    let basis = s.basis();
    let rho = s.rho;
    let zero_spinor = SpinorField::zeros(basis);

    let y = [0, 1, 2].map(|j| {
        let v: Vec<f64> = (0..p.len()).map(|i| grid.point(i)[j] * p.e2u[i]).collect();
        space.flatten(&p.analyze_scalar(&v).inverse_helmholtz(), &zero_spinor)
    });

    let c = complex_vec(&s.psi);
    let r = shifted(ws, &c, rho);
    // q_i = c_iᴴ (D − ρM) c
    let q = ws.vectors().adjoint() * &r;
    let mut z = Vec::with_capacity(2 * ws.n_negative());
    let mut z_labels = Vec::with_capacity(2 * ws.n_negative());
    for k in ws.negative() {
        let mut rk = c.clone() * Complex64::new(-rho, 0.0);
        for i in 0..ws.len() {
            let a = q[i] * ws.variation_weight(i, k);
            if a != Complex64::new(0.0, 0.0) {
                rk += ws.vectors().column(i) * a;
            }
        }
        let [f0, f1] = basis.sample(ws.vectors().column(k).as_slice(), grid);
        let [r0, r1] = basis.sample(rk.as_slice(), grid);
        let pair: Vec<Complex64> =
            (0..p.len()).map(|i| (f0[i].conj() * r0[i] + f1[i].conj() * r1[i]) * p.eu[i]).collect();
        for (part, zeta) in [(Part::Re, Complex64::new(1.0, 0.0)), (Part::Im, Complex64::new(0.0, 1.0))] {
            let vals: Vec<f64> = pair.iter().map(|w| (zeta.conj() * w).re).collect();
            let scalar = p.analyze_scalar(&vals).inverse_helmholtz();
            let ck = ws.coefficients(k) * zeta;
            let sp = shifted(ws, &ck, rho);
            let spinor = SpinorField::from_coeffs(basis, sp.iter().copied().collect())?.abs_dirac_inverse();
            z.push(space.flatten(&scalar, &spinor));
            z_labels.push((ws.label(k), part));
        }
    }

    let wv: Vec<f64> = (0..p.len()).map(|i| 2.0 * p.e2u[i] + rho * p.eu[i] * p.dens[i]).collect();
    let ws_psi = p.analyze_spinor_weighted(&p.eu).into_iter().map(|x| x * (2.0 * rho)).collect();
    let w = space.flatten(
        &p.analyze_scalar(&wv).inverse_helmholtz(),
        &SpinorField::from_coeffs(basis, ws_psi)?.abs_dirac_inverse(),
    );

    let cols: Vec<&DVector<f64>> = y.iter().chain(&z).chain(std::iter::once(&w)).collect();
    let gram = gram_of(space, &cols);
    let condition = condition_number(&gram);
    if !(condition < FRAME_CONDITION_CAP) {
        return Err(Error::FrameDegenerate(condition));
    }
    Ok(NormalFrame { y, z, z_labels, w, gram, condition })
}

/// Orthogonal projection onto the complement of a frame.
pub(crate) struct Projector<'a> {
    space: &'a TangentSpace,
    frame: DMatrix<f64>,
    lowered: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> Projector<'a> {
    pub fn new(space: &'a TangentSpace, frame: &NormalFrame) -> Result<Self> {
        let m = frame.matrix();
        let mut lowered = m.clone();
        for mut col in lowered.column_iter_mut() {
            col.component_mul_assign(space.weights());
        }
        let chol = frame.gram.clone().cholesky().ok_or(Error::FrameDegenerate(frame.condition))?;
        Ok(Self { space, frame: m, lowered, chol })
    }

    /// Multipliers `a` with `x − F a ⟂ F`.
    pub fn coefficients(&self, x: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(&(self.lowered.transpose() * x))
    }

    pub fn tangent(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.frame * self.coefficients(x)
    }

    pub fn space(&self) -> &TangentSpace {
        self.space
    }
}

/// Multipliers of the constrained Euler–Lagrange equations.
#[derive(Debug, Clone, Serialize)]
pub struct Multipliers {
    pub alpha: [f64; 3],
    pub mu: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct ConstrainedGradient {
    pub tangent: (ScalarField, SpinorField),
    pub multipliers: Multipliers,
    /// `‖grad J‖²`, `‖tangent‖²` and `‖normal part‖²`.
    pub norms_sq: [f64; 3],
}

pub fn constrained_gradient(s: &State) -> Result<ConstrainedGradient> {
    let space = TangentSpace::new(s.basis());
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    let frame = normal_frame_with(s, &ws, &space)?;
    let proj = Projector::new(&space, &frame)?;
    let (gu, gpsi) = gradient(s);
    let g = space.flatten(&gu, &gpsi);
    let a = proj.coefficients(&g);
    let t = &g - frame.matrix() * &a;
    let normal = &g - &t;
    let nz = frame.z.len();
    let multipliers = Multipliers {
        alpha: [a[0], a[1], a[2]],
        mu: a.rows(3, nz).iter().copied().collect(),
        tau: a[3 + nz],
    };
    let norms_sq = [space.inner(&g, &g), space.inner(&t, &t), space.inner(&normal, &normal)];
    Ok(ConstrainedGradient { tangent: space.split(&t), multipliers, norms_sq })
}

/// Components of `grad J¹`, `grad J²` tangent to the constraint manifold.
pub(crate) fn tangent_gradients(
    s: &State,
    proj: &Projector,
) -> (DVector<f64>, DVector<f64>) {
    let space = proj.space();
    let p = Pointwise::new(s);
    let (g1, g2) = gradients_j1_j2_from(&p, s);
    (proj.tangent(&space.flatten(&g1.0, &g1.1)), proj.tangent(&space.flatten(&g2.0, &g2.1)))
}

/// Gram determinant `‖a‖²‖b‖² − ⟨a, b⟩²` of two vectors.
pub fn gram_determinant(space: &TangentSpace, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let aa = space.inner(a, a);
    let bb = space.inner(b, b);
    let ab = space.inner(a, b);
    aa * bb - ab * ab
}

/// `det(J¹, J²)`: Gram determinant of the tangential gradients.
pub fn collinearity_det(s: &State) -> Result<f64> {
    if s.psi.is_zero() {
        return Err(Error::ZeroSpinor);
    }
    let space = TangentSpace::new(s.basis());
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    let frame = normal_frame_with(s, &ws, &space)?;
    let proj = Projector::new(&space, &frame)?;
    let (a, b) = tangent_gradients(s, &proj);
    Ok(gram_determinant(&space, &a, &b))
}

/// `(‖∇û‖² + |ū| + ‖ψ‖²) / r` with `J² = 4πr`; bounded along small
/// solutions on the zero level of `J_ρ`.
pub fn j2_bound_ratio(s: &State) -> f64 {
    let (_, j2) = crate::functional::eval_j1_j2(s);
    let r = j2 / (4.0 * PI);
    let mean = s.u.mean();
    (s.u.dirichlet_energy() + mean.abs() + s.psi.l2_norm().powi(2)) / r
}
