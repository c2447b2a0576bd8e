use serde::Serialize;

use super::newton::{newton_solve, NewtonOptions};
use crate::functional::{OriginHessian, State};
use crate::tangent::TangentSpace;

/// Index jumps closer than this are merged into one event.
const MERGE_TOL: f64 = 1e-8;

/// A value of `ρ` where the Morse index of the trivial branch jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bifurcation {
    pub rho: f64,
    /// Size of the jump, equal to the kernel dimension at `rho`.
    pub kernel_dim: usize,
    pub index_below: usize,
    pub index_above: usize,
}

fn negative_count(oh: &OriginHessian, rho: f64) -> usize {
    oh.spectrum(rho).iter().filter(|&&e| e < 0.0).count()
}

/// Scans `[from, to]` with spacing `scan` and bisects every interval on
/// which the number of negative eigenvalues changes.
pub fn detect_bifurcation(oh: &OriginHessian, from: f64, to: f64, scan: f64) -> Vec<Bifurcation> {
    let n = ((to - from) / scan).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| if i == n { to } else { from + scan * i as f64 }).collect();
    let counts: Vec<usize> = grid.iter().map(|&r| negative_count(oh, r)).collect();
    let mut out: Vec<Bifurcation> = Vec::new();
    for i in 0..n {
        if counts[i] == counts[i + 1] {
            continue;
        }
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let (c_lo, c_hi) = (counts[i], counts[i + 1]);
        while hi - lo > 1e-13 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if negative_count(oh, mid) == c_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rho = 0.5 * (lo + hi);
        match out.last_mut() {
            Some(prev) if (prev.rho - rho).abs() < MERGE_TOL => {
                prev.index_above = c_hi;
                prev.kernel_dim = prev.index_above.abs_diff(prev.index_below);
            }
            _ => out.push(Bifurcation { rho, kernel_dim: c_hi.abs_diff(c_lo), index_below: c_lo, index_above: c_hi }),
        }
    }
    out
}

/// Outcome of one Newton attempt off the trivial branch.
#[derive(Debug, Clone, Serialize)]
pub struct SwitchAttempt {
    pub rho: f64,
    pub converged: bool,
    pub error: Option<String>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub constraint_norm: f64,
    pub psi_norm: f64,
    /// `H¹` norm of `u − ū`.
    pub u_oscillation: f64,
    pub j: f64,
    /// Converged to a solution with `ψ ≠ 0` and non-constant `u`, so off
    /// both the trivial and the Killing branch.
    pub nontrivial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchReport {
    pub rho_star: f64,
    pub kernel_dim: usize,
    pub amplitude: f64,
    pub offsets: Vec<f64>,
    pub attempts: Vec<SwitchAttempt>,
}

impl SwitchReport {
    pub fn found_branch(&self) -> bool {
        self.attempts.iter().any(|a| a.nontrivial)
    }
}

/// Seeds Newton with `amplitude` times a kernel vector of the origin Hessian
/// at `b.rho`, at `ρ = b.rho ± offset` for each offset.
pub fn branch_switch_probe(
    oh: &OriginHessian,
    b: &Bifurcation,
    amplitude: f64,
    offsets: &[f64],
    opts: &NewtonOptions,
) -> SwitchReport {
    let basis = oh.basis();
    let space = TangentSpace::new(basis);
    let kernel = oh.near_kernel(b.rho, b.kernel_dim.max(1));
    let dir = &kernel[0] * (amplitude / space.norm(&kernel[0]));
    let (v, h) = space.split(&dir);
    let mut attempts = Vec::new();
    for &off in offsets {
        for rho in [b.rho - off, b.rho + off] {
            let seed = State::new(v.clone(), h.clone(), rho);
            let attempt = match seed.and_then(|s| newton_solve(&s, rho, opts)) {
                Ok(r) => {
                    let p = &r.point;
                    let mut osc = p.state.u.clone();
                    osc.coeffs_mut()[0] = 0.0;
                    let psi_norm = p.state.psi.l2_norm();
                    let u_oscillation = osc.h1_norm();
                    SwitchAttempt {
                        rho,
                        converged: true,
                        error: None,
                        iterations: r.iterations,
                        residual_norm: p.residual_norm,
                        constraint_norm: p.constraint_norm,
                        psi_norm,
                        u_oscillation,
                        j: p.j,
                        nontrivial: psi_norm > 1e-6 && u_oscillation > 1e-8,
                    }
                }
                Err(e) => SwitchAttempt {
                    rho,
                    converged: false,
                    error: Some(e.to_string()),
                    iterations: 0,
                    residual_norm: f64::NAN,
                    constraint_norm: f64::NAN,
                    psi_norm: f64::NAN,
                    u_oscillation: f64::NAN,
                    j: f64::NAN,
                    nontrivial: false,
                },
            };
            attempts.push(attempt);
        }
    }
    SwitchReport { rho_star: b.rho, kernel_dim: b.kernel_dim, amplitude, offsets: offsets.to_vec(), attempts }
}
