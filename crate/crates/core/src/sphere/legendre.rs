//! Orthonormal associated Legendre functions and Gauss–Legendre nodes.
//!
//! `P̄_lm(cos θ)` is normalized so that `P̄_lm(cos θ) e^{imφ}` has unit
//! L² norm on the sphere; no Condon–Shortley phase is included.

use std::f64::consts::PI;

/// Offset of `(l, m)`, `0 ≤ m ≤ l`, in a triangular table.
#[inline]
pub(crate) fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Length of a triangular table up to degree `lmax`.
#[inline]
pub(crate) fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Fills `out[tri(l, m)]` with `P̄_lm(cos θ)` for all `l ≤ lmax`.
pub(crate) fn normalized_legendre(lmax: usize, cos: f64, sin: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= tri_len(lmax));
    let mut pmm = (0.25 / PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin;
        }
        out[tri(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * m as f64 + 3.0).sqrt() * cos * pmm;
        out[tri(m + 1, m)] = p_cur;
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let p_next = a * (cos * p_cur - b * p_prev);
            out[tri(l, m)] = p_next;
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
}

/// Gauss–Legendre nodes on [−1, 1] in decreasing order, with weights.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // x^12 is within the exactness range 2n − 1 = 13
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((q - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn low_degree_values() {
        let theta: f64 = 0.7;
        let mut p = vec![0.0; tri_len(2)];
        normalized_legendre(2, theta.cos(), theta.sin(), &mut p);
        let c = theta.cos();
        let s = theta.sin();
        let n10 = (3.0 / (4.0 * PI)).sqrt();
        assert!((p[tri(1, 0)] - n10 * c).abs() < 1e-15);
        // |Y_11| = sqrt(3/8π) sin θ
        assert!((p[tri(1, 1)] - (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        let n20 = (5.0 / (4.0 * PI)).sqrt();
        assert!((p[tri(2, 0)] - n20 * 0.5 * (3.0 * c * c - 1.0)).abs() < 1e-15);
    }
}
