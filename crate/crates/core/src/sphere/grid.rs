use std::f64::consts::PI;

use num_complex::Complex64;

use super::legendre::{gauss_legendre, normalized_legendre, tri, tri_len};
use super::{coeff_count, idx};
use crate::error::{Error, Result};

/// Gauss–Legendre colatitudes times uniform longitudes.
///
/// A grid built for quadrature band `Q` has `Q + 2` latitudes and `2Q + 2`
/// longitudes, which integrates every product of two degree-`Q` harmonics
/// exactly. Points are stored latitude-major: `index = i * n_lon + k`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    qband: usize,
    n_lat: usize,
    n_lon: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    lat_weights: Vec<f64>,
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
    plm: Vec<f64>,
}

impl SphereGrid {
    pub fn new(qband: usize) -> Self {
        let n_lat = qband + 2;
        let n_lon = 2 * qband + 2;
        let (nodes, weights) = gauss_legendre(n_lat);
        let dphi = 2.0 * PI / n_lon as f64;
        let sin_theta: Vec<f64> = nodes.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let lat_weights = weights.iter().map(|w| w * dphi).collect();

        let mut cos_m = vec![0.0; (qband + 1) * n_lon];
        let mut sin_m = vec![0.0; (qband + 1) * n_lon];
        for m in 0..=qband {
            for k in 0..n_lon {
                let a = m as f64 * k as f64 * dphi;
                cos_m[m * n_lon + k] = a.cos();
                sin_m[m * n_lon + k] = a.sin();
            }
        }

        let nt = tri_len(qband);
        let mut plm = vec![0.0; n_lat * nt];
        for i in 0..n_lat {
            normalized_legendre(qband, nodes[i], sin_theta[i], &mut plm[i * nt..(i + 1) * nt]);
        }

        Self { qband, n_lat, n_lon, cos_theta: nodes, sin_theta, lat_weights, cos_m, sin_m, plm }
    }

    pub fn quadrature_band(&self) -> usize {
        self.qband
    }

    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    pub fn len(&self) -> usize {
        self.n_lat * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> [f64; 3] {
        let (i, k) = (index / self.n_lon, index % self.n_lon);
        let s = self.sin_theta[i];
        [s * self.cos_m[self.n_lon + k], s * self.sin_m[self.n_lon + k], self.cos_theta[i]]
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.lat_weights[index / self.n_lon]
    }

    /// All `(unit vector, quadrature weight)` pairs.
    pub fn nodes(&self) -> Vec<([f64; 3], f64)> {
        (0..self.len()).map(|p| (self.point(p), self.weight(p))).collect()
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|p| self.point(p)).collect()
    }

    /// Quadrature of grid values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n_lat {
            let row: f64 = values[i * self.n_lon..(i + 1) * self.n_lon].iter().sum();
            total += self.lat_weights[i] * row;
        }
        total
    }

    fn check(&self, band: usize, n_values: usize) -> Result<()> {
        if band > self.qband {
            return Err(Error::GridMismatch { band, qband: self.qband });
        }
        if n_values != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: n_values });
        }
        Ok(())
    }

    #[inline]
    fn p(&self, i: usize, l: usize, m: usize) -> f64 {
        self.plm[i * tri_len(self.qband) + tri(l, m)]
    }

    /// Real spherical-harmonic synthesis of band-`band` coefficients.
    pub fn synthesize_real(&self, band: usize, coeffs: &[f64]) -> Vec<f64> {
        assert!(band <= self.qband && coeffs.len() == coeff_count(band));
        let (nl, sq2) = (self.n_lon, std::f64::consts::SQRT_2);
        let mut out = vec![0.0; self.len()];
        let mut a = vec![0.0; band + 1];
        let mut b = vec![0.0; band + 1];
        for i in 0..self.n_lat {
            for m in 0..=band {
                let (mut sa, mut sb) = (0.0, 0.0);
                for l in m..=band {
                    let p = self.p(i, l, m);
                    sa += coeffs[idx(l, m as i64)] * p;
                    if m > 0 {
                        sb += coeffs[idx(l, -(m as i64))] * p;
                    }
                }
                a[m] = sa;
                b[m] = sb;
            }
            let row = &mut out[i * nl..(i + 1) * nl];
            for (k, v) in row.iter_mut().enumerate() {
                let mut s = a[0];
                for m in 1..=band {
                    s += sq2 * (a[m] * self.cos_m[m * nl + k] + b[m] * self.sin_m[m * nl + k]);
                }
                *v = s;
            }
        }
        out
    }

    /// Quadrature projection of grid values onto real harmonics of degree ≤ `band`.
    pub fn analyze_real(&self, band: usize, values: &[f64]) -> Result<Vec<f64>> {
        self.check(band, values.len())?;
        let (nl, sq2) = (self.n_lon, std::f64::consts::SQRT_2);
        let mut out = vec![0.0; coeff_count(band)];
        for i in 0..self.n_lat {
            let row = &values[i * nl..(i + 1) * nl];
            let w = self.lat_weights[i];
            for m in 0..=band {
                let (mut fc, mut fs) = (0.0, 0.0);
                for (k, v) in row.iter().enumerate() {
                    fc += v * self.cos_m[m * nl + k];
                    fs += v * self.sin_m[m * nl + k];
                }
                if m == 0 {
                    for l in 0..=band {
                        out[idx(l, 0)] += w * self.p(i, l, 0) * fc;
                    }
                } else {
                    for l in m..=band {
                        let p = w * sq2 * self.p(i, l, m);
                        out[idx(l, m as i64)] += p * fc;
                        out[idx(l, -(m as i64))] += p * fs;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Complex harmonic synthesis, `Y_lm = (−1)^m P̄_lm e^{imφ}` for `m ≥ 0`
    /// and `Y_l,−m = (−1)^m conj(Y_lm)`.
    pub fn synthesize_complex(&self, band: usize, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert!(band <= self.qband && coeffs.len() == coeff_count(band));
        let nl = self.n_lon;
        let mb = band as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        let mut a = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
        for i in 0..self.n_lat {
            for m in -mb..=mb {
                let am = m.unsigned_abs() as usize;
                let mut s = Complex64::new(0.0, 0.0);
                for l in am..=band {
                    s += coeffs[idx(l, m)] * self.p(i, l, am);
                }
                a[(m + mb) as usize] = s * cs_sign(m);
            }
            let row = &mut out[i * nl..(i + 1) * nl];
            for (k, v) in row.iter_mut().enumerate() {
                let mut s = a[band];
                for m in 1..=band {
                    let e = Complex64::new(self.cos_m[m * nl + k], self.sin_m[m * nl + k]);
                    s += a[band + m] * e + a[band - m] * e.conj();
                }
                *v = s;
            }
        }
        out
    }

    /// `G[a][b] = ∫ w conj(Y_a) Y_b` over complex harmonics of degree ≤ `band`,
    /// row-major. Requires `2·band ≤` the quadrature band.
    pub fn weighted_gram_complex(&self, band: usize, weight: &[f64]) -> Result<Vec<Complex64>> {
        self.check(2 * band, weight.len())?;
        let nl = self.n_lon;
        let n = coeff_count(band);
        let mut g = vec![Complex64::new(0.0, 0.0); n * n];
        // ŵ(d) = Σ_k w_k e^{i d φ_k} for d = 0..=2·band
        let mut what = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
        let mut prof = vec![0.0; n];
        for i in 0..self.n_lat {
            let row = &weight[i * nl..(i + 1) * nl];
            for (d, h) in what.iter_mut().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for (k, w) in row.iter().enumerate() {
                    re += w * self.cos_m[d * nl + k];
                    im += w * self.sin_m[d * nl + k];
                }
                *h = Complex64::new(re, im) * self.lat_weights[i];
            }
            for l in 0..=band {
                for m in -(l as i64)..=l as i64 {
                    prof[idx(l, m)] = self.p(i, l, m.unsigned_abs() as usize) * cs_sign(m);
                }
            }
            for la in 0..=band {
                for ma in -(la as i64)..=la as i64 {
                    let a = idx(la, ma);
                    for lb in 0..=band {
                        for mb in -(lb as i64)..=lb as i64 {
                            let b = idx(lb, mb);
                            let d = mb - ma;
                            let f = if d >= 0 { what[d as usize] } else { what[(-d) as usize].conj() };
                            g[a * n + b] += f * (prof[a] * prof[b]);
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    /// Complex harmonic analysis, inverse of [`SphereGrid::synthesize_complex`].
    pub fn analyze_complex(&self, band: usize, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(band, values.len())?;
        let nl = self.n_lon;
        let mut out = vec![Complex64::new(0.0, 0.0); coeff_count(band)];
        for i in 0..self.n_lat {
            let row = &values[i * nl..(i + 1) * nl];
            let w = self.lat_weights[i];
            for m in -(band as i64)..=(band as i64) {
                let am = m.unsigned_abs() as usize;
                let sgn = m.signum() as f64;
                let mut f = Complex64::new(0.0, 0.0);
                for (k, v) in row.iter().enumerate() {
                    f += v * Complex64::new(self.cos_m[am * nl + k], -sgn * self.sin_m[am * nl + k]);
                }
                let f = f * (w * cs_sign(m));
                for l in am..=band {
                    out[idx(l, m)] += f * self.p(i, l, am);
                }
            }
        }
        Ok(out)
    }
}

#[inline]
fn cs_sign(m: i64) -> f64 {
    if m > 0 && m % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Highest degree `≤ band` carrying a nonzero coefficient.
fn occupied_band<T: PartialEq + Default>(band: usize, coeffs: &[T]) -> usize {
    let zero = T::default();
    (0..=band).rev().find(|&l| coeffs[idx(l, -(l as i64))..=idx(l, l as i64)].iter().any(|c| *c != zero)).unwrap_or(0)
}

/// Evaluates real harmonics of degree ≤ `band` at arbitrary points.
pub fn eval_real_at(band: usize, coeffs: &[f64], points: &[[f64; 3]]) -> Vec<f64> {
    let band = occupied_band(band, coeffs);
    let mut p = vec![0.0; tri_len(band)];
    let sq2 = std::f64::consts::SQRT_2;
    points
        .iter()
        .map(|x| {
            let (cos, sin, phi) = polar(x);
            normalized_legendre(band, cos, sin, &mut p);
            let mut s = 0.0;
            for l in 0..=band {
                s += coeffs[idx(l, 0)] * p[tri(l, 0)];
            }
            for m in 1..=band {
                let (sm, cm) = (m as f64 * phi).sin_cos();
                for l in m..=band {
                    let pl = sq2 * p[tri(l, m)];
                    s += pl * (coeffs[idx(l, m as i64)] * cm + coeffs[idx(l, -(m as i64))] * sm);
                }
            }
            s
        })
        .collect()
}

/// Evaluates complex harmonics of degree ≤ `band` at arbitrary points.
pub fn eval_complex_at(band: usize, coeffs: &[Complex64], points: &[[f64; 3]]) -> Vec<Complex64> {
    let band = occupied_band(band, coeffs);
    let mut p = vec![0.0; tri_len(band)];
    points
        .iter()
        .map(|x| {
            let (cos, sin, phi) = polar(x);
            normalized_legendre(band, cos, sin, &mut p);
            let mut s = Complex64::new(0.0, 0.0);
            for m in -(band as i64)..=(band as i64) {
                let am = m.unsigned_abs() as usize;
                let mut a = Complex64::new(0.0, 0.0);
                for l in am..=band {
                    a += coeffs[idx(l, m)] * p[tri(l, am)];
                }
                s += a * cs_sign(m) * Complex64::from_polar(1.0, m as f64 * phi);
            }
            s
        })
        .collect()
}

fn polar(x: &[f64; 3]) -> (f64, f64, f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let cos = (x[2] / r).clamp(-1.0, 1.0);
    let sin = (x[0] * x[0] + x[1] * x[1]).sqrt() / r;
    (cos, sin, x[1].atan2(x[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_area() {
        for q in [4, 9, 16, 33] {
            let g = SphereGrid::new(q);
            let w: f64 = (0..g.len()).map(|p| g.weight(p)).sum();
            assert!((w / (4.0 * PI) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn real_roundtrip() {
        let band = 7;
        let g = SphereGrid::new(band);
        let c: Vec<f64> = (0..coeff_count(band)).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let back = g.analyze_real(band, &g.synthesize_real(band, &c)).unwrap();
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_roundtrip_and_conjugation() {
        let band = 6;
        let g = SphereGrid::new(band);
        let c: Vec<Complex64> = (0..coeff_count(band))
            .map(|i| Complex64::new((i % 5) as f64 - 2.0, (i % 3) as f64 - 1.0))
            .collect();
        let back = g.analyze_complex(band, &g.synthesize_complex(band, &c)).unwrap();
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
        // Y_{1,-1} = conj(-Y_{1,1}) pointwise
        let mut e1 = vec![Complex64::new(0.0, 0.0); coeff_count(1)];
        let mut em1 = e1.clone();
        e1[idx(1, 1)] = 1.0.into();
        em1[idx(1, -1)] = 1.0.into();
        let g1 = SphereGrid::new(1);
        let (a, b) = (g1.synthesize_complex(1, &e1), g1.synthesize_complex(1, &em1));
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() + y).norm() < 1e-14);
        }
    }

    #[test]
    fn point_evaluation_matches_grid() {
        let band = 5;
        let g = SphereGrid::new(band);
        let c: Vec<f64> = (0..coeff_count(band)).map(|i| (i as f64 * 0.37).sin()).collect();
        let on_grid = g.synthesize_real(band, &c);
        let at = eval_real_at(band, &c, &g.points());
        for (a, b) in on_grid.iter().zip(&at) {
            assert!((a - b).abs() < 1e-13);
        }
        let cc: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x, 0.5 * x)).collect();
        let on_grid = g.synthesize_complex(band, &cc);
        let at = eval_complex_at(band, &cc, &g.points());
        for (a, b) in on_grid.iter().zip(&at) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
