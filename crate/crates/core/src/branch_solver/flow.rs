//! The deformation flow `ρ ↦ (u, ψ)` that keeps `J_ρ`, `J²` and the
//! constraints fixed while `ρ` moves across a regular value.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::system::tsvd_solve;
use crate::error::{Error, Result};
use crate::functional::{eval_j1_j2, gradient, gradients_j1_j2, Pointwise, State};
use crate::nehari::{constraints_with, gram_determinant, gram_of, normal_frame_with, weighted_eigensystem, Projector};
use crate::sphere::ScalarField;
use crate::spinor::{DiracBasis, SpinorField};
use crate::tangent::TangentSpace;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowOptions {
    /// Outer radius of the cutoff.
    pub eps: f64,
    /// The cutoff is identically one on `|t| ≤ 2 eps1`.
    pub eps1: f64,
    /// Nominal (and largest) step in `ρ`.
    pub step: f64,
    /// Step-doubling error tolerance in `H¹ × H^{1/2}`.
    pub tol: f64,
    pub min_step: f64,
    /// Relative floor on `det(J¹, J²)` below which the field is undefined.
    pub det_floor: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { eps: 0.2, eps1: 0.05, step: 1e-3, tol: 1e-8, min_step: 1e-7, det_floor: 1e-14 }
    }
}

/// Smooth cutoff: `1` for `|t| ≤ 2ε₁`, `0` for `|t| ≥ ε`, quintic in between.
pub fn cutoff(t: f64, eps: f64, eps1: f64) -> f64 {
    let a = t.abs();
    if a <= 2.0 * eps1 {
        1.0
    } else if a >= eps {
        0.0
    } else {
        let s = (eps - a) / (eps - 2.0 * eps1);
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Quantities the flow should conserve, plus the cutoff value.
#[derive(Debug, Clone, Serialize)]
pub struct Invariants {
    pub j2: f64,
    pub g1: [f64; 3],
    pub g2_max: f64,
    pub g3: f64,
    pub j_rho: f64,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSample {
    pub state: State,
    pub invariants: Invariants,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub rho_star: f64,
    pub options: FlowOptions,
    pub samples: Vec<FlowSample>,
    pub rejected_steps: usize,
    /// The field vanished identically at the start.
    pub stationary: bool,
}

/// Largest deviations along a trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Drift {
    pub j2: f64,
    pub j_rho: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl FlowTrace {
    pub fn drift(&self) -> Drift {
        let first = &self.samples[0].invariants;
        let mut d = Drift { j2: 0.0, j_rho: 0.0, g1: 0.0, g2: 0.0, g3: 0.0 };
        for s in &self.samples {
            let v = &s.invariants;
            d.j2 = d.j2.max((v.j2 - first.j2).abs());
            d.j_rho = d.j_rho.max((v.j_rho - first.j_rho).abs());
            d.g1 = d.g1.max(v.g1.iter().fold(0.0, |a, x| a.max(x.abs())));
            d.g2 = d.g2.max(v.g2_max);
            d.g3 = d.g3.max(v.g3.abs());
        }
        d
    }
}

fn squared_norm(s: &State) -> f64 {
    s.u.h1_norm().powi(2) + s.psi.h_half_norm().powi(2)
}

fn omega(s: &State, rho_star: f64, opts: &FlowOptions) -> f64 {
    if s.psi.is_zero() {
        return 0.0;
    }
    let (j1, j2) = eval_j1_j2(s);
    cutoff(rho_star - j1 / j2, opts.eps, opts.eps1) * cutoff(squared_norm(s), opts.eps, opts.eps1)
}

fn invariants(s: &State, rho_star: f64, opts: &FlowOptions) -> Result<Invariants> {
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    let c = constraints_with(s, &ws);
    let (j1, j2) = eval_j1_j2(s);
    Ok(Invariants {
        j2,
        g1: c.g1,
        g2_max: c.g2_max(),
        g3: c.g3,
        j_rho: j1 - s.rho * j2,
        omega: omega(s, rho_star, opts),
    })
}

struct Field<'a> {
    space: &'a TangentSpace,
    rho_star: f64,
    opts: FlowOptions,
}

impl Field<'_> {
    fn state(&self, x: &DVector<f64>, rho: f64) -> Result<State> {
        let (u, psi) = self.space.split(x);
        State::new(u, psi, rho)
    }

    /// `ω X` at `(x, ρ)`, where `X` is the vector in the span of the
    /// gradients and the normal frame whose pairings make every invariant
    /// stationary in `ρ`.
    fn eval(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        let space = self.space;
        let s = self.state(x, rho)?;
        let w = omega(&s, self.rho_star, &self.opts);
        if w == 0.0 {
            return Ok(DVector::zeros(x.len()));
        }
        let ws = weighted_eigensystem(s.basis(), &s.u)?;
        let frame = normal_frame_with(&s, &ws, space)?;
        let (g1, g2) = gradients_j1_j2(&s);
        let g1 = space.flatten(&g1.0, &g1.1);
        let g2 = space.flatten(&g2.0, &g2.1);

        // collinearity of the tangential parts
        let proj = Projector::new(space, &frame)?;
        let (t1, t2) = (proj.tangent(&g1), proj.tangent(&g2));
        let det = gram_determinant(space, &t1, &t2);
        let floor = self.opts.det_floor * space.inner(&t1, &t1) * space.inner(&t2, &t2);
        if !(det >= floor) {
            return Err(Error::Collinear { det, floor });
        }

        let (_, j2) = eval_j1_j2(&s);
        let p = Pointwise::new(&s);
        let mc = DVector::from_vec(p.analyze_spinor_weighted(&p.eu));
        let mut rhs = vec![j2, 0.0, 0.0, 0.0, 0.0];
        for k in ws.negative() {
            let z = ws.vectors().column(k).dotc(&mc);
            rhs.push(z.re);
            rhs.push(z.im);
        }
        rhs.push(-0.5 * j2);

        let mut cols: Vec<&DVector<f64>> = vec![&g1, &g2];
        cols.extend(frame.vectors());
        let gram = gram_of(space, &cols);
        let coef = gram
            .clone()
            .lu()
            .solve(&DVector::from_vec(rhs))
            .ok_or(Error::FrameDegenerate(f64::INFINITY))?;
        let mut out = DVector::zeros(x.len());
        for (c, v) in coef.iter().zip(cols) {
            out.axpy(*c * w, v, 1.0);
        }
        Ok(out)
    }

    fn rk4(&self, x: &DVector<f64>, rho: f64, h: f64) -> Result<DVector<f64>> {
        let k1 = self.eval(x, rho)?;
        let k2 = self.eval(&(x + &k1 * (h / 2.0)), rho + h / 2.0)?;
        let k3 = self.eval(&(x + &k2 * (h / 2.0)), rho + h / 2.0)?;
        let k4 = self.eval(&(x + &k3 * h), rho + h)?;
        Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
    }
}

/// Integrates the flow from `start` (at `start.rho`) to `rho_end` with RK4
/// and step doubling.
pub fn deformation_flow(start: &State, rho_star: f64, rho_end: f64, opts: &FlowOptions) -> Result<FlowTrace> {
    let space = TangentSpace::new(start.basis());
    let field = Field { space: &space, rho_star, opts: *opts };
    let stationary = omega(start, rho_star, opts) == 0.0;
    let mut samples = vec![FlowSample { state: start.clone(), invariants: invariants(start, rho_star, opts)? }];
    let mut x = space.flatten(&start.u, &start.psi);
    let mut rho = start.rho;
    let dir = (rho_end - rho).signum();
    let mut h = opts.step;
    let mut rejected_steps = 0;
    while (rho_end - rho) * dir > 0.0 {
        let rem = (rho_end - rho).abs();
        // absorb rounding residue so the last step lands on `rho_end`
        let last = rem <= h * (1.0 + 1e-6);
        let hh = if last { rem } else { h } * dir;
        let (full, half) = std::thread::scope(|sc| {
            let full = sc.spawn(|| field.rk4(&x, rho, hh));
            let half = field.rk4(&x, rho, hh / 2.0).and_then(|m| field.rk4(&m, rho + hh / 2.0, hh / 2.0));
            (full.join().expect("flow worker"), half)
        });
        let (full, half) = (full?, half?);
        let err = space.norm(&(&half - &full));
        if err > opts.tol {
            rejected_steps += 1;
            h *= 0.5;
            if h < opts.min_step {
                return Err(Error::FlowStepUnderflow(rho));
            }
            continue;
        }
        // Richardson extrapolation of the two estimates
        x = &half + (&half - &full) / 15.0;
        rho = if last { rho_end } else { rho + hh };
        let s = field.state(&x, rho)?;
        let inv = invariants(&s, rho_star, opts)?;
        samples.push(FlowSample { state: s, invariants: inv });
    }
    Ok(FlowTrace { rho_star, options: *opts, samples, rejected_steps, stationary })
}

/// A small state with `J_ρ = 0` at `rho` satisfying all constraints, built
/// from a degree-two bump and a first eigenspinor of squared norm
/// `psi_sq`, then projected with minimum-norm Newton.
pub fn admissible_start(basis: &Arc<DiracBasis>, rho: f64, psi_sq: f64) -> Result<State> {
    if !(rho > 0.0) {
        return Err(Error::RhoNotPositive(rho));
    }
    let band = basis.band();
    let k = basis.positive().next().ok_or(Error::InvalidArgument("empty basis".into()))?;
    let psi = SpinorField::mode(basis, k);
    let psi = psi.clone() * (psi_sq.sqrt() / psi.l2_norm());
    // second-order balance: 4‖v‖² ≈ 2(ρ − λ₁)‖ψ‖²
    let amp = (0.5 * (rho - 1.0).abs() * psi_sq).sqrt();
    let u = ScalarField::harmonic(band, 2, 0) * amp;
    project_to_level(State::new(u, psi, rho)?)
}

fn project_to_level(mut s: State) -> Result<State> {
    let space = TangentSpace::new(s.basis());
    let sw = space.weights().map(f64::sqrt);
    for _ in 0..30 {
        let ws = weighted_eigensystem(s.basis(), &s.u)?;
        let c = constraints_with(&s, &ws);
        let (j1, j2) = eval_j1_j2(&s);
        let mut f: Vec<f64> = c.flat().iter().copied().collect();
        f.push(j1 - s.rho * j2);
        let fv = DVector::from_vec(f);
        if fv.amax() < 1e-13 {
            return Ok(s);
        }
        let frame = normal_frame_with(&s, &ws, &space)?;
        let (gu, gpsi) = gradient(&s);
        let g = space.flatten(&gu, &gpsi);
        let nz = frame.z.len();
        let m = frame.len() + 1;
        let n = space.dim();
        let mut a = DMatrix::zeros(m, n);
        for (r, v) in frame.vectors().enumerate() {
            let fac = if r < 3 {
                2.0
            } else if r < 3 + nz {
                1.0
            } else {
                1.0 / (4.0 * PI)
            };
            for j in 0..n {
                a[(r, j)] = fac * v[j] * sw[j];
            }
        }
        for j in 0..n {
            a[(m - 1, j)] = g[j] * sw[j];
        }
        let (dy, _) = tsvd_solve(&a, &(-fv), 1e-12);
        let dx = dy.component_div(&sw);
        let (v, h) = space.split(&dx);
        s = State::new(s.u.clone() + v, s.psi.clone() + h, s.rho)?;
    }
    Err(Error::MaxIterations { iterations: 30, residual: f64::NAN })
}
