//! Seeded random fields and maps for property checks and diagnostics.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::conformal::MoebiusMap;
use crate::sphere::{degree_of, ScalarField};
use crate::spinor::{DiracBasis, SpinorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller keeps the dependency list short
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gaussian coefficients with envelope `e^{−decay·l}`, rescaled to the
/// requested H¹ norm.
pub fn random_scalar<R: Rng>(rng: &mut R, band: usize, h1_norm: f64, decay: f64) -> ScalarField {
    let mut f = ScalarField::zeros(band);
    for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
        *c = normal(rng) * (-decay * degree_of(i) as f64).exp();
    }
    let n = f.h1_norm();
    if n > 0.0 {
        f * (h1_norm / n)
    } else {
        f
    }
}

/// Random spinor with envelope `e^{−decay·|λ|}` and the requested L² norm.
pub fn random_spinor<R: Rng>(rng: &mut R, basis: &Arc<DiracBasis>, l2_norm: f64, decay: f64) -> SpinorField {
    let coeffs: Vec<Complex64> = basis
        .modes()
        .iter()
        .map(|m| Complex64::new(normal(rng), normal(rng)) * (-decay * m.eigenvalue.abs()).exp())
        .collect();
    let s = SpinorField::from_coeffs(basis, coeffs).expect("finite coefficients");
    let n = s.l2_norm();
    s * (l2_norm / n)
}

/// Random Möbius map with operator norm at most `max_norm`.
pub fn random_moebius<R: Rng>(rng: &mut R, max_norm: f64) -> MoebiusMap {
    let mut axis = [normal(rng), normal(rng), normal(rng)];
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    axis.iter_mut().for_each(|a| *a /= n);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let mut dir = [normal(rng), normal(rng), normal(rng)];
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    dir.iter_mut().for_each(|a| *a /= n);
    // dilation by t has operator norm √max(t, 1/t)
    let t = rng.random_range(1.0..max_norm * max_norm);
    let t = if rng.random::<bool>() { t } else { 1.0 / t };
    MoebiusMap::rotation(axis, angle).compose(&MoebiusMap::dilation_along(t, dir))
}

/// Uniform random point on the sphere.
pub fn random_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}
