use serde::Serialize;

use super::system::{evaluate, linearize, step, tsvd_solve};
use super::BranchPoint;
use crate::error::{Error, Result};
use crate::functional::State;
use crate::nehari::weighted_eigensystem;
use crate::tangent::TangentSpace;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonOptions {
    /// Acceptance threshold on residual norm plus constraint norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Singular values below `sv_cut · σ_max` are dropped.
    pub sv_cut: f64,
    /// Merit growth factor that counts as leaving the basin.
    pub growth: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 25, sv_cut: 1e-8, growth: 10.0, max_halvings: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub point: BranchPoint,
    pub iterations: usize,
    /// Residual plus constraint norm before each iteration and at the end.
    pub history: Vec<f64>,
}

/// Damped Newton on `{Euler–Lagrange residual, constraints}` at fixed `ρ`
/// with truncated-SVD least-squares steps.
pub fn newton_solve(s0: &State, rho: f64, opts: &NewtonOptions) -> Result<NewtonReport> {
    let space = TangentSpace::new(s0.basis());
    let mut s = s0.with_rho(rho);
    let mut ws = weighted_eigensystem(s.basis(), &s.u)?;
    let mut ev = evaluate(&s, &ws, &space);
    let initial = ev.merit();
    if !initial.is_finite() {
        return Err(Error::BasinEscape { initial, current: initial });
    }
    let mut history = vec![initial];
    for it in 0..opts.max_iter {
        if ev.merit() < opts.tol {
            return Ok(NewtonReport { point: BranchPoint::assess(s)?, iterations: it, history });
        }
        let lin = linearize(&s, &ws, &space)?;
        let (dy, _) = tsvd_solve(&lin.a, &(-&lin.eval.f), opts.sv_cut);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..=opts.max_halvings {
            let trial = step(&s, &space, &(&dy * t), rho)?;
            let tws = match weighted_eigensystem(trial.basis(), &trial.u) {
                Ok(w) => w,
                Err(_) => {
                    t *= 0.5;
                    continue;
                }
            };
            let tev = evaluate(&trial, &tws, &space);
            let ok = tev.merit().is_finite() && tev.merit() < ev.merit();
            let last = next.is_none();
            if ok || last {
                next = Some((trial, tws, tev));
            }
            if ok {
                break;
            }
            t *= 0.5;
        }
        let Some((ns, nws, nev)) = next else {
            return Err(Error::BasinEscape { initial, current: f64::INFINITY });
        };
        let current = nev.merit();
        if !current.is_finite() || current > opts.growth * initial.max(opts.tol) {
            return Err(Error::BasinEscape { initial, current });
        }
        history.push(current);
        s = ns;
        ws = nws;
        ev = nev;
    }
    if ev.merit() < opts.tol {
        let n = opts.max_iter;
        return Ok(NewtonReport { point: BranchPoint::assess(s)?, iterations: n, history });
    }
    Err(Error::MaxIterations { iterations: opts.max_iter, residual: ev.merit() })
}

/// Distance between the conformal/rotational orbits of two states, measured
/// through invariants: mean of `u`, per-degree energy of `u`, `∫|ψ|²` and
/// `∫e^u|ψ|²`.
pub fn orbit_distance(a: &State, b: &State) -> f64 {
    let spec_a = a.u.degree_spectrum();
    let spec_b = b.u.degree_spectrum();
    let spec = spec_a.iter().zip(&spec_b).map(|(x, y)| (x.sqrt() - y.sqrt()).abs()).fold(0.0, f64::max);
    let (_, ja) = crate::functional::eval_j1_j2(a);
    let (_, jb) = crate::functional::eval_j1_j2(b);
    [
        (a.u.mean() - b.u.mean()).abs(),
        spec,
        (a.psi.l2_norm().powi(2) - b.psi.l2_norm().powi(2)).abs(),
        (ja - jb).abs() / 2.0,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
