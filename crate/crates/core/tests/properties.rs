use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use superliouville::branch_solver::cutoff;
use superliouville::functional::eval_j;
use superliouville::nehari::weighted_eigensystem;
use superliouville::report::fmt17;
use superliouville::{BandLimit, DiracBasis, ScalarField, State};

fn basis() -> Arc<DiracBasis> {
    static B: OnceLock<Arc<DiracBasis>> = OnceLock::new();
    B.get_or_init(|| DiracBasis::assemble(BandLimit::new(8).unwrap()).unwrap()).clone()
}

proptest! {
    #[test]
    fn cutoff_is_an_even_bump(t in -1.0f64..1.0, s in 0.0f64..1.0) {
        let (eps, eps1) = (0.2, 0.05);
        let c = cutoff(t, eps, eps1);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, cutoff(-t, eps, eps1));
        // non-increasing in |t|
        let inner = t.abs() * s;
        prop_assert!(cutoff(inner, eps, eps1) >= c);
    }

    #[test]
    fn seventeen_digits_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = fmt17(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn trivial_state_has_zero_energy(rho in 0.01f64..30.0) {
        let s = State::trivial(&basis(), rho);
        prop_assert!(eval_j(&s).abs() < 1e-12);
    }

    #[test]
    fn laplacian_acts_diagonally(l in 0usize..=8, m in -8i64..=8) {
        prop_assume!(m.unsigned_abs() as usize <= l);
        let y = ScalarField::harmonic(8, l, m);
        let ly = y.laplacian();
        prop_assert!((ly.get(l, m) + (l * (l + 1)) as f64).abs() < 1e-12);
        prop_assert!((ly.l2_norm() - (l * (l + 1)) as f64 * y.l2_norm()).abs() < 1e-9);
    }

    #[test]
    fn constant_weight_rescales_the_spectrum(c in -1.0f64..1.0) {
        let b = basis();
        let ws = weighted_eigensystem(&b, &ScalarField::constant(b.band(), c)).unwrap();
        for (k, lam) in ws.eigenvalues().iter().enumerate() {
            let expected = b.eigenvalue(k) * (-c).exp();
            prop_assert!((lam - expected).abs() < 1e-9 * expected.abs().max(1.0), "mode {} {} vs {}", k, lam, expected);
        }
    }
}
