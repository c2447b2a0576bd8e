use std::sync::{Arc, OnceLock};

use superliouville::branch_solver::{
    continue_branch, killing_branch, killing_energy, newton_solve, orbit_distance, BranchPoint, NewtonOptions, KILLING_PHASE,
};
use superliouville::functional::{el_residual, eval_j};
use superliouville::{BandLimit, DiracBasis, Error, ScalarField, State};

fn basis() -> Arc<DiracBasis> {
    static B: OnceLock<Arc<DiracBasis>> = OnceLock::new();
    B.get_or_init(|| DiracBasis::assemble(BandLimit::new(8).unwrap()).unwrap()).clone()
}

#[test]
fn killing_energy_matches_closed_form() {
    for rho in [1.1, 1.5, 2.0, 3.0] {
        let s = killing_branch(&basis(), rho, KILLING_PHASE).unwrap();
        assert!((eval_j(&s) - killing_energy(rho)).abs() < 1e-10, "rho {rho}");
        assert!(el_residual(&s).norm < 1e-12);
    }
}

#[test]
fn killing_spinor_vanishes_as_rho_tends_to_one() {
    let near = killing_branch(&basis(), 1.0 + 1e-8, KILLING_PHASE).unwrap();
    assert!(near.psi.l2_norm() < 1e-3);
    assert!(near.u.mean().abs() < 1e-7);
    assert!(matches!(killing_branch(&basis(), 1.0, KILLING_PHASE), Err(Error::RhoNotAboveOne(_))));
}

#[test]
fn newton_keeps_the_origin() {
    let s0 = State::trivial(&basis(), 1.7);
    let r = newton_solve(&s0, 1.7, &NewtonOptions::default()).unwrap();
    assert!(r.iterations <= 1);
    assert!(r.point.state.u.l2_norm() < 1e-14);
    assert!(r.point.state.psi.l2_norm() < 1e-14);
}

#[test]
fn newton_recovers_a_perturbed_killing_state() {
    let exact = killing_branch(&basis(), 1.5, KILLING_PHASE).unwrap();
    let mut s0 = exact.clone();
    s0.u.axpy(1e-3, &ScalarField::harmonic(8, 2, 1));
    let r = newton_solve(&s0, 1.5, &NewtonOptions::default()).unwrap();
    assert!(r.point.residual_norm < 1e-9);
    assert!(orbit_distance(&r.point.state, &exact) < 1e-8);
}

#[test]
fn newton_far_from_a_solution_reports_escape() {
    let mut s0 = State::trivial(&basis(), 1.5);
    s0.u = ScalarField::harmonic(8, 1, 0) * 10.0;
    match newton_solve(&s0, 1.5, &NewtonOptions::default()) {
        Err(Error::BasinEscape { .. } | Error::MaxIterations { .. }) => {}
        Ok(r) => assert!(r.point.residual_norm < 1e-9, "claimed convergence with residual {}", r.point.residual_norm),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn orbit_distance_is_a_pseudometric() {
    let a = killing_branch(&basis(), 1.5, KILLING_PHASE).unwrap();
    let b = killing_branch(&basis(), 1.6, KILLING_PHASE).unwrap();
    assert_eq!(orbit_distance(&a, &a), 0.0);
    assert_eq!(orbit_distance(&a, &b), orbit_distance(&b, &a));
    assert!(orbit_distance(&a, &b) > 1e-3);
}

#[test]
fn trivial_branch_index_jumps_at_two() {
    let start = BranchPoint::assess(State::trivial(&basis(), 1.5)).unwrap();
    let c = continue_branch(&start, 2.5, 0.25, &NewtonOptions::default());
    assert!(c.stopped.is_none(), "{:?}", c.stopped);
    let idx: Vec<(f64, usize)> = c.points.iter().map(|p| (p.rho(), p.index_l)).collect();
    assert!((idx.last().unwrap().0 - 2.5).abs() < 1e-12);
    for (rho, i) in idx {
        assert_eq!(i, if rho <= 2.0 { 4 } else { 12 }, "rho {rho}");
    }
}
