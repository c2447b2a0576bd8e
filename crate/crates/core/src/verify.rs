//! The validation suite: fourteen numbered checks, each producing a
//! pass/fail verdict with machine-readable diagnostics.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::branch_solver::{
    admissible_start, branch_switch_probe, deformation_flow, detect_bifurcation, killing_branch, killing_energy,
    FlowOptions, FlowTrace, NewtonOptions, KILLING_PHASE,
};
use crate::conformal::{balance, dilation_derivative_checks, lambda_matrix, pullback_scalar, pullback_spinor};
use crate::error::Result;
use crate::functional::{
    bar_volume_check, conservation_defect, el_residual, eval_j, gradient, kazdan_warner_defect, OriginHessian,
    State,
};
use crate::nehari::{constraints, weighted_eigensystem};
use crate::report::to_value;
use crate::sampling::{random_moebius, random_point, random_scalar, random_spinor, rng};
use crate::sphere::{coeff_count, laplace_eigendata, BandLimit, ScalarField};
use crate::spinor::{DiracBasis, SpinorField};
use crate::tangent::TangentSpace;

/// Band used for the conformal-invariance check, independent of the suite
/// band: the pullback of a band-limited field is not band-limited, and the
/// truncation error only drops below tolerance around `L = 64`.
pub const INVARIANCE_BAND: usize = 64;
/// Band of the random content embedded for the invariance check.
pub const INVARIANCE_CONTENT_BAND: usize = 8;

pub const CRITERIA: [(u8, &str, bool); 14] = [
    (1, "Dirac spectrum", true),
    (2, "Laplace spectrum", true),
    (3, "normalization at the origin", true),
    (4, "Killing branch", true),
    (5, "conformal invariance", true),
    (6, "Kazdan-Warner identity", true),
    (7, "conservation law", true),
    (8, "dilation identities", true),
    (9, "gradient check", true),
    (10, "index function", true),
    (11, "balancing", true),
    (12, "flow conservation", true),
    (13, "volume and Bar bounds", true),
    (14, "branch-switch probe", false),
];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    /// Non-gating checks are recorded but never fail the suite.
    pub gating: bool,
    pub passed: bool,
    /// Wall time; kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
    pub error: Option<String>,
    pub detail: Value,
}

impl Check {
    pub fn line(&self) -> String {
        let verdict = match (self.passed, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        format!("criterion {:>2} {verdict} {} ({:.1} s)", self.id, self.name, self.seconds)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub band: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.gating && !c.passed).collect()
    }
}

pub struct Suite {
    band: BandLimit,
    basis: OnceLock<Arc<DiracBasis>>,
    origin: OnceLock<OriginHessian>,
}

type Outcome = Result<(bool, Value)>;

impl Suite {
    pub fn new(band: BandLimit) -> Self {
        Self { band, basis: OnceLock::new(), origin: OnceLock::new() }
    }

    fn basis(&self) -> Result<Arc<DiracBasis>> {
        if let Some(b) = self.basis.get() {
            return Ok(b.clone());
        }
        let b = DiracBasis::assemble(self.band)?;
        Ok(self.basis.get_or_init(|| b).clone())
    }

    fn origin(&self) -> Result<&OriginHessian> {
        let basis = self.basis()?;
        Ok(self.origin.get_or_init(|| OriginHessian::new(&basis)))
    }

    pub fn run(&self, id: u8) -> Check {
        let (_, name, gating) = CRITERIA.iter().copied().find(|c| c.0 == id).unwrap_or((id, "unknown", true));
        let t = Instant::now();
        let out = match id {
            1 => self.dirac_spectrum(),
            2 => self.laplace_spectrum(),
            3 => self.normalization(),
            4 => self.killing(),
            5 => self.conformal_invariance(),
            6 => self.kazdan_warner(),
            7 => self.conservation(),
            8 => self.dilation(),
            9 => self.gradient_check(),
            10 => self.index_function(),
            11 => self.balancing(),
            12 => self.flow(),
            13 => self.bar_volume(),
            14 => self.switch_probe(),
            _ => Err(crate::Error::InvalidArgument(format!("no criterion {id}"))),
        };
        let seconds = t.elapsed().as_secs_f64();
        match out {
            Ok((passed, detail)) => Check { id, name, gating, passed, seconds, error: None, detail },
            Err(e) => Check { id, name, gating, passed: false, seconds, error: Some(e.to_string()), detail: Value::Null },
        }
    }

    pub fn run_all(&self, ids: &[u8]) -> SuiteReport {
        let checks: Vec<Check> = ids.iter().map(|&id| self.run(id)).collect();
        let passed = checks.iter().all(|c| c.passed || !c.gating);
        SuiteReport { band: self.band.get(), passed, checks }
    }

    fn dirac_spectrum(&self) -> Outcome {
        let t = Instant::now();
        let basis = DiracBasis::assemble(self.band)?;
        let seconds = t.elapsed().as_secs_f64();
        let rep = basis.report();
        let half = basis.half_band() as i64;
        let mut ok = rep.clusters.len() == 2 * half as usize && seconds < 60.0;
        let mut worst_rel: f64 = 0.0;
        for m in 1..=half {
            for target in [-m, m] {
                let t = target as f64;
                match rep.clusters.iter().find(|c| (c.0 - t).abs() < 1e-4) {
                    Some(&(lambda, mult)) => {
                        worst_rel = worst_rel.max((lambda - t).abs() / m as f64);
                        ok &= mult == 4 * m as usize;
                    }
                    None => ok = false,
                }
            }
        }
        ok &= worst_rel < 1e-6 && rep.max_spectrum_error / half as f64 <= 1e-6;
        Ok((ok, json!({ "assembly_under_60s": seconds < 60.0, "worst_relative_error": worst_rel, "report": to_value(rep)? })))
    }

    fn laplace_spectrum(&self) -> Outcome {
        let l = self.band.get();
        let mut worst: f64 = 0.0;
        let mut rows = Vec::new();
        let mut ok = true;
        for k in 0..=l {
            let mut mult = 0;
            for m in -(k as i64)..=(k as i64) {
                let y = ScalarField::harmonic(l, k, m);
                let lap = y.laplacian();
                let mu = -lap.get(k, m);
                let off = lap.coeffs().iter().enumerate().filter(|&(i, _)| i != crate::sphere::idx(k, m));
                worst = worst.max(off.fold((mu - (k * (k + 1)) as f64).abs(), |a, (_, v)| a.max(v.abs())));
                mult += 1;
            }
            let (mu, expected) = laplace_eigendata(k);
            ok &= mult == expected;
            rows.push(json!({ "k": k, "mu": mu, "multiplicity": mult }));
        }
        Ok((ok && worst == 0.0, json!({ "max_error": worst, "levels": rows })))
    }

    fn normalization(&self) -> Outcome {
        let basis = self.basis()?;
        let vals: Vec<(f64, f64)> = [1.2, 2.0, 3.7].into_iter().map(|r| (r, eval_j(&State::trivial(&basis, r)))).collect();
        let ok = vals.iter().all(|v| v.1.abs() < 1e-10);
        Ok((ok, to_value(&vals)?))
    }

    fn killing(&self) -> Outcome {
        let basis = self.basis()?;
        let mut ok = true;
        let mut rows = Vec::new();
        for rho in [1.2, 2.0, 2.5] {
            let s = killing_branch(&basis, rho, KILLING_PHASE)?;
            let residual = el_residual(&s).norm;
            let c = constraints(&s)?;
            let j = eval_j(&s);
            let closed = killing_energy(rho);
            ok &= residual < 1e-8 && c.norm() < 1e-8 && (j - closed).abs() < 1e-7;
            if rho == 2.0 {
                ok &= (j + 7.99582).abs() < 1e-4;
            }
            rows.push(json!({ "rho": rho, "residual": residual, "constraint_norm": c.norm(), "J": j, "closed_form": closed }));
        }
        Ok((ok, Value::Array(rows)))
    }

    fn conformal_invariance(&self) -> Outcome {
        let small = DiracBasis::assemble(BandLimit::new(INVARIANCE_CONTENT_BAND)?)?;
        let big = DiracBasis::assemble(BandLimit::new(INVARIANCE_BAND)?)?;
        let sphere = big.sphere().clone();
        let n_big = coeff_count(big.half_band());
        let mut rng = rng(5);
        let mut worst: f64 = 0.0;
        let mut errors = Vec::new();
        for _ in 0..20 {
            let un = 0.5 * rng.random_range(0.2..1.0);
            let pn = 0.5 * rng.random_range(0.2..1.0);
            let rho = rng.random_range(1.1..3.0);
            let u = random_scalar(&mut rng, INVARIANCE_CONTENT_BAND, un, 0.5).with_band(INVARIANCE_BAND);
            let psi = random_spinor(&mut rng, &small, pn, 0.5);
            let [mut up, mut dn] = small.to_components(psi.coeffs());
            up.resize(n_big, Complex64::new(0.0, 0.0));
            dn.resize(n_big, Complex64::new(0.0, 0.0));
            let psi = SpinorField::from_coeffs(&big, big.from_components(&up, &dn))?;
            let s = State::new(u, psi, rho)?;
            let j0 = eval_j(&s);
            for _ in 0..5 {
                let phi = random_moebius(&mut rng, 2.0);
                let moved = State::new(pullback_scalar(&sphere, &s.u, &phi)?, pullback_spinor(&s.psi, &phi)?, rho)?;
                let err = (eval_j(&moved) - j0).abs();
                worst = worst.max(err);
                errors.push(err);
            }
        }
        Ok((worst < 1e-6, json!({ "band": INVARIANCE_BAND, "content_band": INVARIANCE_CONTENT_BAND, "max_error": worst, "errors": to_value(&errors)? })))
    }

    fn kazdan_warner(&self) -> Outcome {
        let basis = self.basis()?;
        let mut rng = rng(6);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let norm = rng.random_range(0.1..1.0);
            let u = random_scalar(&mut rng, self.band.get(), norm, 0.3);
            let d = kazdan_warner_defect(basis.sphere(), &u);
            worst = d.iter().fold(worst, |a, v| a.max(v.abs()));
        }
        Ok((worst < 1e-7, json!({ "max_defect": worst })))
    }

    fn conservation(&self) -> Outcome {
        let basis = self.basis()?;
        let mut rng = rng(7);
        let mut worst: f64 = 0.0;
        let mut control: f64 = f64::INFINITY;
        let mut rows = Vec::new();
        for _ in 0..5 {
            let norm = 0.3 * rng.random_range(0.5..1.0);
            let u = random_scalar(&mut rng, self.band.get(), norm, 0.5);
            let ws = weighted_eigensystem(&basis, &u)?;
            // lowest positive mode: best resolved at a given band
            let k = ws.positive().start;
            let rho = ws.eigenvalue(k);
            let d = conservation_defect(&State::new(u.clone(), ws.spinor(k), rho)?);
            let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            // same weight, round eigenspinor: not a solution
            let fake = State::new(u, SpinorField::mode(&basis, basis.positive().start), rho)?;
            let c = conservation_defect(&fake).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            worst = worst.max(dmax);
            control = control.min(c);
            rows.push(json!({ "lambda": rho, "defect": d, "control_defect": c }));
        }
        Ok((worst < 1e-6 && control > 1e-3, json!({ "max_defect": worst, "min_control": control, "states": to_value(&rows)? })))
    }

    fn dilation(&self) -> Outcome {
        let mut rng = rng(8);
        let points: Vec<[f64; 3]> = (0..200).map(|_| random_point(&mut rng)).collect();
        let (e_grad, e_det) = dilation_derivative_checks(&points, 1e-4);
        Ok((e_grad < 1e-6 && e_det < 1e-6, json!({ "gradient_error": e_grad, "factor_error": e_det })))
    }

    fn gradient_check(&self) -> Outcome {
        let basis = self.basis()?;
        let space = TangentSpace::new(&basis);
        let band = self.band.get();
        let mut rng = rng(9);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let (un, pn): (f64, f64) = (rng.random_range(0.1..0.5), rng.random_range(0.1..0.5));
            let u = random_scalar(&mut rng, band, un, 0.4);
            let psi = random_spinor(&mut rng, &basis, pn, 0.4);
            let s = State::new(u, psi, rng.random_range(1.1..3.0))?;
            let (gu, gp) = gradient(&s);
            let g = space.flatten(&gu, &gp);
            for _ in 0..5 {
                let v = random_scalar(&mut rng, band, 1.0, 0.4);
                let w = random_spinor(&mut rng, &basis, 1.0, 0.4);
                let d = space.flatten(&v, &w);
                let at = |t: f64| State::new(s.u.clone() + v.clone() * t, s.psi.clone() + w.clone() * t, s.rho).map(|x| eval_j(&x));
                let fd = (at(h)? - at(-h)?) / (2.0 * h);
                let an = space.inner(&g, &d);
                worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()).max(1e-12));
            }
        }
        Ok((worst < 1e-5, json!({ "max_relative_error": worst, "step": h })))
    }

    fn index_function(&self) -> Outcome {
        let oh = self.origin()?;
        let idx: Vec<(f64, usize)> = [1.5, 2.5, 3.5].into_iter().map(|r| (r, oh.index(r).index)).collect();
        let at2 = oh.index(2.0);
        let found = detect_bifurcation(oh, 1.5, 3.5, 0.05);
        let expected = [(2.0, 8), (3.0, 12)];
        let ok = idx.iter().map(|x| x.1).eq([4, 12, 24])
            && at2.kernel_dim == 8
            && found.len() == 2
            && found.iter().zip(expected).all(|(b, (r, k))| (b.rho - r).abs() < 1e-6 && b.kernel_dim == k);
        Ok((ok, json!({ "index": to_value(&idx)?, "at_two": to_value(&at2)?, "bifurcations": to_value(&found)? })))
    }

    fn balancing(&self) -> Outcome {
        let basis = self.basis()?;
        let sphere = basis.sphere();
        let band = self.band.get();
        let u = ScalarField::coordinate(band, 2) * 0.3;
        let b = balance(sphere, &u)?;
        let lam = lambda_matrix(sphere, &ScalarField::zeros(band));
        let lam_err = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (lam[(i, j)] - if i == j { 4.0 * PI / 3.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        let ok = b.converged && b.defect < 1e-8 && b.iterations <= 20 && lam_err < 1e-9;
        Ok((
            ok,
            json!({ "defect": b.defect, "truncated_defect": b.truncated_defect, "iterations": b.iterations, "lambda_error": lam_err, "history": to_value(&b.history)? }),
        ))
    }

    fn flow(&self) -> Outcome {
        let basis = self.basis()?;
        let opts = FlowOptions::default();
        let (rho_star, rho0, rho1) = (1.5, 1.45, 1.55);
        let start = admissible_start(&basis, rho0, 0.01)?;
        let trace = deformation_flow(&start, rho_star, rho1, &opts)?;
        let drift = trace.drift();
        let j_max = trace.samples.iter().fold(0.0f64, |a, s| a.max(s.invariants.j_rho.abs()));
        let moving = [drift.j2, drift.g1, drift.g2, drift.g3, j_max].iter().all(|d| *d < 1e-6)
            && trace.samples.last().map(|s| s.state.rho) == Some(rho1);

        let still = |s: &State| -> Result<(bool, bool, usize)> {
            let tr: FlowTrace = deformation_flow(s, rho_star, rho1, &opts)?;
            let same = tr.samples.iter().all(|x| x.state.u.coeffs() == s.u.coeffs() && x.state.psi.coeffs() == s.psi.coeffs());
            Ok((tr.stationary, same, tr.samples.len()))
        };
        let zero_psi = still(&State::trivial(&basis, rho0))?;
        // far from the origin, the second cutoff factor vanishes
        let outside = still(&killing_branch(&basis, rho0, KILLING_PHASE)?)?;
        let ok = moving && zero_psi.0 && zero_psi.1 && outside.0 && outside.1;
        Ok((
            ok,
            json!({
                "rho_star": rho_star,
                "interval": [rho0, rho1],
                "steps": trace.samples.len() - 1,
                "rejected_steps": trace.rejected_steps,
                "drift": to_value(&drift)?,
                "max_abs_J_rho": j_max,
                "J2": trace.samples[0].invariants.j2,
                "stationary_zero_spinor": { "flagged": zero_psi.0, "constant": zero_psi.1, "samples": zero_psi.2 },
                "stationary_outside_cutoff": { "flagged": outside.0, "constant": outside.1, "samples": outside.2 },
            }),
        ))
    }

    fn bar_volume(&self) -> Outcome {
        let basis = self.basis()?;
        let k = bar_volume_check(&killing_branch(&basis, 2.0, KILLING_PHASE)?)?;
        let t = bar_volume_check(&State::trivial(&basis, 2.0))?;
        let ok = (k.volume - PI).abs() < 1e-6
            && (k.bar_product - 4.0 * PI).abs() < 1e-6
            && (t.volume - 4.0 * PI).abs() < 1e-6
            && (t.bar_product - 4.0 * PI).abs() < 1e-6;
        Ok((ok, json!({ "killing": to_value(&k)?, "trivial": to_value(&t)? })))
    }

    fn switch_probe(&self) -> Outcome {
        let oh = self.origin()?;
        let found = detect_bifurcation(oh, 1.5, 2.5, 0.05);
        let Some(b) = found.first() else {
            return Ok((false, json!({ "bifurcations": [] })));
        };
        let r = branch_switch_probe(oh, b, 1e-2, &[1e-2], &NewtonOptions::default());
        // non-gating: reported as INFO when Newton falls back to the trivial branch
        Ok((r.found_branch(), json!({ "found_branch": r.found_branch(), "probe": to_value(&r)? })))
    }
}

/// Runs `ids` at `band` and returns the report.
pub fn run_suite(band: BandLimit, ids: &[u8]) -> SuiteReport {
    Suite::new(band).run_all(ids)
}

pub fn all_ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.0).collect()
}
