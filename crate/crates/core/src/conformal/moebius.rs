use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Operator-norm cap for maps used in pullbacks: stronger dilations
/// concentrate mass beyond the band limit.
pub const MAP_NORM_CAP: f64 = 2.0;

/// Coordinate axis of the dilation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub fn unit(self) -> [f64; 3] {
        match self {
            Axis::X1 => [1.0, 0.0, 0.0],
            Axis::X2 => [0.0, 1.0, 0.0],
            Axis::X3 => [0.0, 0.0, 1.0],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];
}

/// A conformal automorphism of S², stored as an SL(2, ℂ) matrix acting on
/// `z = (x¹ + i x²)/(1 − x³)` by `z ↦ (az + b)/(cz + d)`.
///
/// The matrix (not its class modulo ±1) is kept, which fixes the sign of
/// the spinor cocycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    m: [[C; 2]; 2],
}

/// Homogeneous coordinates `ξ` with `z = ξ₁/ξ₂`, chosen away from the
/// singular chart at whichever pole is closer.
#[inline]
pub(crate) fn homogeneous(x: &[f64; 3]) -> [C; 2] {
    if x[2] > 0.0 {
        [C::new(1.0 + x[2], 0.0), C::new(x[0], -x[1])]
    } else {
        [C::new(x[0], x[1]), C::new(1.0 - x[2], 0.0)]
    }
}

/// Inverse of [`homogeneous`]: the point with stereographic coordinate `η₁/η₂`.
#[inline]
pub(crate) fn from_homogeneous(e: &[C; 2]) -> [f64; 3] {
    let p = e[0] * e[1].conj();
    let (a, b) = (e[0].norm_sqr(), e[1].norm_sqr());
    let v = [2.0 * p.re, 2.0 * p.im, a - b];
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

/// `F(ζ) = [[ζ₂, conj ζ₁], [−ζ₁, conj ζ₂]]` for a unit vector `ζ`.
#[inline]
fn frame(z: &[C; 2]) -> [[C; 2]; 2] {
    [[z[1], z[0].conj()], [-z[0], z[1].conj()]]
}

fn unit(z: [C; 2]) -> [C; 2] {
    let n = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt();
    [z[0] / n, z[1] / n]
}

impl MoebiusMap {
    pub fn identity() -> Self {
        Self { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    /// Accepts a matrix whose determinant is 1 within 1e-12.
    pub fn new(m: [[C; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - ONE).norm() >= 1e-12 {
            return Err(Error::NotUnimodular(det.norm()));
        }
        Ok(Self { m })
    }

    /// Rescales an invertible matrix by `det^{-1/2}`.
    pub fn normalized(m: [[C; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.norm() < 1e-300 || !det.re.is_finite() || !det.im.is_finite() {
            return Err(Error::NotUnimodular(det.norm()));
        }
        let s = det.sqrt().inv();
        Ok(Self { m: [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]] })
    }

    pub fn matrix(&self) -> [[C; 2]; 2] {
        self.m
    }

    /// Right-handed rotation by `angle` about the unit vector `axis`.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (a, b, c) = (axis[0] / n, -axis[1] / n, axis[2] / n);
        let (s, co) = (0.5 * angle).sin_cos();
        let i = C::new(0.0, s);
        // cos(θ/2) + i sin(θ/2) (a σ₁ + b σ₂ + c σ₃)
        let m = [
            [C::new(co, 0.0) + i * c, i * a + C::new(0.0, -1.0) * i * b],
            [i * a + C::new(0.0, 1.0) * i * b, C::new(co, 0.0) - i * c],
        ];
        Self { m }
    }

    /// A rotation taking the north pole to the unit vector `n`.
    pub fn rotation_to(n: [f64; 3]) -> Self {
        let axis = [-n[1], n[0], 0.0];
        let s = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
        let angle = s.atan2(n[2]);
        if s < 1e-15 {
            return if n[2] > 0.0 { Self::identity() } else { Self::rotation([1.0, 0.0, 0.0], std::f64::consts::PI) };
        }
        Self::rotation(axis, angle)
    }

    /// `z ↦ t z` along the north–south axis, conjugated by a rotation for
    /// the other axes.
    pub fn dilation(t: f64, axis: Axis) -> Self {
        Self::dilation_along(t, axis.unit())
    }

    /// Dilation towards the unit vector `n` (for `t > 1` mass moves to `n`).
    pub fn dilation_along(t: f64, n: [f64; 3]) -> Self {
        let r = t.sqrt();
        let d = Self { m: [[C::new(r, 0.0), ZERO], [ZERO, C::new(1.0 / r, 0.0)]] };
        let q = Self::rotation_to(n);
        q.compose(&d).compose(&q.inverse())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.m, &other.m);
        let mut m = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m }
    }

    pub fn inverse(&self) -> Self {
        let m = &self.m;
        Self { m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]] }
    }

    /// Largest singular value of the matrix.
    pub fn operator_norm(&self) -> f64 {
        let f: f64 = self.m.iter().flatten().map(|c| c.norm_sqr()).sum();
        // singular values s, 1/s with s² + s⁻² = ‖m‖_F²
        let s2 = 0.5 * (f + (f * f - 4.0).max(0.0).sqrt());
        s2.sqrt()
    }

    pub fn check_cap(&self, cap: f64) -> Result<()> {
        let norm = self.operator_norm();
        if norm > cap * (1.0 + 1e-12) {
            return Err(Error::MapTooLarge { norm, cap });
        }
        Ok(())
    }

    #[inline]
    fn act(&self, e: &[C; 2]) -> [C; 2] {
        [self.m[0][0] * e[0] + self.m[0][1] * e[1], self.m[1][0] * e[0] + self.m[1][1] * e[1]]
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        from_homogeneous(&self.act(&homogeneous(&x)))
    }

    /// `det(dφ)(x)`, the factor in `φ*g₀ = det(dφ) g₀`.
    pub fn conformal_factor(&self, x: [f64; 3]) -> f64 {
        self.apply_with_factor(x).1
    }

    /// Image point and conformal factor `(|ξ| / |Aξ|)⁴`.
    pub fn apply_with_factor(&self, x: [f64; 3]) -> ([f64; 3], f64) {
        let xi = homogeneous(&x);
        let eta = self.act(&xi);
        let r = (xi[0].norm_sqr() + xi[1].norm_sqr()) / (eta[0].norm_sqr() + eta[1].norm_sqr());
        (from_homogeneous(&eta), r * r)
    }

    /// The spin lift at `x`: image point, `det(dφ)^{1/4}` and the SU(2)
    /// matrix `β_x` with `ψ_φ(x) = det^{1/4} β_x ψ(φ(x))`.
    pub fn spin_cocycle(&self, x: [f64; 3]) -> ([f64; 3], f64, [[C; 2]; 2]) {
        let xi = homogeneous(&x);
        let eta = self.act(&xi);
        let r = ((xi[0].norm_sqr() + xi[1].norm_sqr()) / (eta[0].norm_sqr() + eta[1].norm_sqr())).sqrt();
        let a = frame(&unit(xi));
        let b = frame(&unit(eta));
        let mut beta = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                beta[i][j] = a[i][0] * b[j][0].conj() + a[i][1] * b[j][1].conj();
            }
        }
        (from_homogeneous(&eta), r, beta)
    }

    /// Distance of the matrix from ±identity.
    pub fn distance_from_identity(&self) -> f64 {
        let d = |s: f64| {
            let e = [[self.m[0][0] - s, self.m[0][1]], [self.m[1][0], self.m[1][1] - s]];
            e.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
        };
        d(1.0).min(d(-1.0))
    }
}

#[derive(Serialize, Deserialize)]
struct MoebiusJson {
    matrix: [[f64; 2]; 4],
}

impl Serialize for MoebiusMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let e = |c: C| [c.re, c.im];
        MoebiusJson { matrix: [e(self.m[0][0]), e(self.m[0][1]), e(self.m[1][0]), e(self.m[1][1])] }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MoebiusJson::deserialize(d)?;
        let c = |p: [f64; 2]| C::new(p[0], p[1]);
        let [a, b, cc, dd] = raw.matrix;
        MoebiusMap::new([[c(a), c(b)], [c(cc), c(dd)]]).map_err(D::Error::custom)
    }
}

/// Finite-difference check of the dilation family at `t = 1`: returns the
/// largest errors of `d/dt φ_t(x)` against `∇x³` and of `d/dt det^{1/2}`
/// against `−x³`.
pub fn dilation_derivative_checks(points: &[[f64; 3]], h: f64) -> (f64, f64) {
    let (plus, minus) = (MoebiusMap::dilation(1.0 + h, Axis::X3), MoebiusMap::dilation(1.0 - h, Axis::X3));
    let mut e_grad: f64 = 0.0;
    let mut e_det: f64 = 0.0;
    for x in points {
        let (yp, fp) = plus.apply_with_factor(*x);
        let (ym, fm) = minus.apply_with_factor(*x);
        let grad = [-x[0] * x[2], -x[1] * x[2], 1.0 - x[2] * x[2]];
        for j in 0..3 {
            e_grad = e_grad.max(((yp[j] - ym[j]) / (2.0 * h) - grad[j]).abs());
        }
        let d = (fp.sqrt() - fm.sqrt()) / (2.0 * h);
        e_det = e_det.max((d + x[2]).abs());
    }
    (e_grad, e_det)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot3(n: [f64; 3], th: f64, x: [f64; 3]) -> [f64; 3] {
        let (s, c) = th.sin_cos();
        let d = n[0] * x[0] + n[1] * x[1] + n[2] * x[2];
        let cr = [n[1] * x[2] - n[2] * x[1], n[2] * x[0] - n[0] * x[2], n[0] * x[1] - n[1] * x[0]];
        [0, 1, 2].map(|j| x[j] * c + cr[j] * s + n[j] * d * (1.0 - c))
    }

    #[test]
    fn rotation_matches_rodrigues() {
        let n = [0.3f64, -0.5, 0.8];
        let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let n = n.map(|v| v / r);
        let q = MoebiusMap::rotation(n, 0.7);
        for x in [[0.0, 0.6, 0.8], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 0.0, 1.0]] {
            let y = q.apply(x);
            let z = rot3(n, 0.7, x);
            for j in 0..3 {
                assert!((y[j] - z[j]).abs() < 1e-14);
            }
            assert!((q.conformal_factor(x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dilation_moves_towards_axis() {
        for axis in Axis::ALL {
            let d = MoebiusMap::dilation(2.0, axis);
            let e = axis.unit();
            let y = d.apply(e);
            assert!((y[axis.index()] - 1.0).abs() < 1e-14);
            let x = [0.48, 0.6, 0.64];
            let y = d.apply(x);
            let dot = |a: [f64; 3]| a[0] * e[0] + a[1] * e[1] + a[2] * e[2];
            assert!(dot(y) > dot(x));
        }
    }

    #[test]
    fn pole_images() {
        let d = MoebiusMap::dilation(2.0, Axis::X3);
        let s = d.apply([0.0, 0.0, -1.0]);
        assert!((s[2] + 1.0).abs() < 1e-15);
        let n = d.apply([0.0, 0.0, 1.0]);
        assert!((n[2] - 1.0).abs() < 1e-15);
        // z ↦ 2z stretches the south pole by |f′|² = 4
        assert!((d.conformal_factor([0.0, 0.0, -1.0]) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn norm_of_dilation() {
        assert!((MoebiusMap::dilation(4.0, Axis::X1).operator_norm() - 2.0).abs() < 1e-12);
        assert!((MoebiusMap::rotation([0.0, 1.0, 0.0], 1.0).operator_norm() - 1.0).abs() < 1e-12);
    }
}
