use nalgebra::{DMatrix, DVector};

use super::newton::NewtonOptions;
use super::system::{evaluate, linearize, step, tsvd_solve};
use super::BranchPoint;
use crate::error::Result;
use crate::functional::State;
use crate::nehari::weighted_eigensystem;
use crate::tangent::TangentSpace;

/// Continuation stops once the arclength step falls below this.
pub const MIN_STEP: f64 = 1e-6;

const CORRECTOR_ITERS: usize = 12;

#[derive(Debug, Clone)]
pub struct Continuation {
    pub points: Vec<BranchPoint>,
    /// Why the run ended early, if it did.
    pub stopped: Option<String>,
}

/// Unit tangent `(t_y, t_ρ)` of the solution curve, oriented along `dir`
/// (or along `prev` when given).
fn tangent(a: &DMatrix<f64>, f_rho: &DVector<f64>, cut: f64, dir: f64, prev: Option<&DVector<f64>>) -> DVector<f64> {
    let (ty, _) = tsvd_solve(a, &(-f_rho), cut);
    let n = ty.len();
    let mut t = DVector::zeros(n + 1);
    t.rows_mut(0, n).copy_from(&ty);
    t[n] = 1.0;
    t /= t.norm();
    let sign = match prev {
        Some(p) => p.dot(&t).signum(),
        None => dir.signum() * t[n].signum(),
    };
    t * if sign == 0.0 { 1.0 } else { sign }
}

/// Corrects `(s, ρ)` onto the solution curve within the hyperplane
/// orthogonal to `t` through the predicted point.
fn correct(pred: &State, t: &DVector<f64>, space: &TangentSpace, opts: &NewtonOptions) -> Result<Option<State>> {
    let n = space.dim();
    let mut s = pred.clone();
    // accumulated offset from the predicted point, in (y, ρ)
    let mut offset = DVector::<f64>::zeros(n + 1);
    for _ in 0..CORRECTOR_ITERS {
        let ws = weighted_eigensystem(s.basis(), &s.u)?;
        let ev = evaluate(&s, &ws, space);
        if !ev.merit().is_finite() {
            return Ok(None);
        }
        if ev.merit() < opts.tol {
            return Ok(Some(s));
        }
        let lin = linearize(&s, &ws, space)?;
        let rows = lin.a.nrows();
        let mut a = DMatrix::zeros(rows + 1, n + 1);
        a.view_mut((0, 0), (rows, n)).copy_from(&lin.a);
        a.view_mut((0, n), (rows, 1)).copy_from(&lin.f_rho);
        a.view_mut((rows, 0), (1, n + 1)).copy_from(&t.transpose());
        let mut rhs = DVector::zeros(rows + 1);
        rhs.rows_mut(0, rows).copy_from(&(-&lin.eval.f));
        rhs[rows] = -t.dot(&offset);
        let (d, _) = tsvd_solve(&a, &rhs, opts.sv_cut);
        offset += &d;
        let rho = s.rho + d[n];
        if !(rho > 0.0) {
            return Ok(None);
        }
        s = step(&s, space, &d.rows(0, n).into_owned(), rho)?;
    }
    let ws = weighted_eigensystem(s.basis(), &s.u)?;
    Ok((evaluate(&s, &ws, space).merit() < opts.tol).then_some(s))
}

/// Pseudo-arclength continuation from `start` toward `rho_to` with
/// arclength step `step0`, halving on corrector failure.
pub fn continue_branch(start: &BranchPoint, rho_to: f64, step0: f64, opts: &NewtonOptions) -> Continuation {
    let space = TangentSpace::new(start.state.basis());
    let dir = rho_to - start.rho();
    let mut points = vec![start.clone()];
    let mut ds = step0.abs();
    let mut prev_t: Option<DVector<f64>> = None;
    let n = space.dim();
    loop {
        let cur = points.last().expect("start point").state.clone();
        if (rho_to - cur.rho) * dir <= 0.0 {
            return Continuation { points, stopped: None };
        }
        let t = match weighted_eigensystem(cur.basis(), &cur.u).and_then(|ws| linearize(&cur, &ws, &space)) {
            Ok(lin) => tangent(&lin.a, &lin.f_rho, opts.sv_cut, dir, prev_t.as_ref()),
            Err(e) => return Continuation { points, stopped: Some(e.to_string()) },
        };
        let accepted = loop {
            if ds < MIN_STEP {
                break None;
            }
            let mut h = ds;
            // land exactly on the target when the predictor would overshoot
            let overshoot = (cur.rho + h * t[n] - rho_to) * dir > 0.0;
            if overshoot && t[n].abs() > 1e-12 {
                h = (rho_to - cur.rho) / t[n];
            }
            let attempt = step(&cur, &space, &(t.rows(0, n) * h), cur.rho + h * t[n]).and_then(|pred| {
                if overshoot {
                    // natural-parameter correction at the end point
                    super::newton::newton_solve(&pred, rho_to, opts).map(|r| Some(r.point.state))
                } else {
                    correct(&pred, &t, &space, opts)
                }
            });
            match attempt {
                Ok(Some(s)) => break Some(s),
                _ => ds *= 0.5,
            }
        };
        let Some(s) = accepted else {
            return Continuation { points, stopped: Some(format!("step underflow below {MIN_STEP:e} at rho = {}", cur.rho)) };
        };
        match BranchPoint::assess(s) {
            Ok(p) => points.push(p),
            Err(e) => return Continuation { points, stopped: Some(e.to_string()) },
        }
        ds = (ds * 1.5).min(step0.abs());
        prev_t = Some(t);
    }
}
