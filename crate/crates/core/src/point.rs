//! Points on the Riemann sphere in normalized projective coordinates.
//!
//! A point is a pair `(u, v)` with `max(|u|, |v|) = 1`, read as `z = u / v`
//! when `v != 0` and as the point at infinity for `(1, 0)`. Keeping both
//! coordinates normalized makes every map evaluation total: no special
//! cases at infinity and no overflow for iterated polynomials.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::POINT_IDENTITY_TOL;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CPoint {
    u: Complex64,
    v: Complex64,
}

impl CPoint {
    /// Construct from raw projective coordinates. Panics on (0, 0).
    pub fn from_projective(u: Complex64, v: Complex64) -> Self {
        let m = u.norm().max(v.norm());
        assert!(m > 0.0 && m.is_finite(), "degenerate projective pair");
        Self { u: u / m, v: v / m }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.norm() <= 1.0 {
            Self {
                u: z,
                v: Complex64::new(1.0, 0.0),
            }
        } else {
            Self {
                u: Complex64::new(1.0, 0.0),
                v: 1.0 / z,
            }
        }
    }

    pub fn infinity() -> Self {
        Self {
            u: Complex64::new(1.0, 0.0),
            v: Complex64::new(0.0, 0.0),
        }
    }

    pub fn zero() -> Self {
        Self {
            u: Complex64::new(0.0, 0.0),
            v: Complex64::new(1.0, 0.0),
        }
    }

    #[inline]
    pub fn u(&self) -> Complex64 {
        self.u
    }

    #[inline]
    pub fn v(&self) -> Complex64 {
        self.v
    }

    pub fn is_infinity(&self) -> bool {
        self.v.norm() <= POINT_IDENTITY_TOL * self.u.norm()
    }

    /// Finite chart value, if the point is not (numerically) at infinity.
    pub fn finite(&self) -> Option<Complex64> {
        if self.is_infinity() {
            None
        } else {
            Some(self.u / self.v)
        }
    }

    /// |u1 v2 - u2 v1|: zero iff the two points coincide on the sphere.
    /// With both pairs normalized this is comparable to the chordal metric.
    #[inline]
    pub fn cross_dist(&self, other: &CPoint) -> f64 {
        (self.u * other.v - other.u * self.v).norm()
    }

    /// Chordal distance on the sphere of diameter 1.
    pub fn chordal_dist(&self, other: &CPoint) -> f64 {
        let num = self.cross_dist(other);
        let d1 = (self.u.norm_sqr() + self.v.norm_sqr()).sqrt();
        let d2 = (other.u.norm_sqr() + other.v.norm_sqr()).sqrt();
        num / (d1 * d2)
    }

    pub fn approx_eq(&self, other: &CPoint, tol: f64) -> bool {
        self.cross_dist(other) <= tol
    }

    /// Deterministic ordering key: infinity sorts first, then by finite
    /// value (re, im). Used wherever stable enumeration order matters.
    pub fn sort_key(&self) -> (u8, f64, f64) {
        match self.finite() {
            None => (0, 0.0, 0.0),
            Some(z) => (1, z.re, z.im),
        }
    }
}

impl From<Complex64> for CPoint {
    fn from(z: Complex64) -> Self {
        Self::from_complex(z)
    }
}

pub fn cmp_key(a: &CPoint, b: &CPoint) -> std::cmp::Ordering {
    let (ka, kb) = (a.sort_key(), b.sort_key());
    ka.0.cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_invariant() {
        let p = CPoint::from_projective(Complex64::new(3.0, 4.0), Complex64::new(0.5, 0.0));
        let m = p.u().norm().max(p.v().norm());
        assert!((m - 1.0).abs() < 1e-15);
        assert!((p.finite().unwrap() - Complex64::new(6.0, 8.0)).norm() < 1e-12);
    }

    #[test]
    fn infinity_round_trip() {
        let inf = CPoint::infinity();
        assert!(inf.is_infinity());
        assert!(inf.finite().is_none());
        let z = CPoint::from_complex(Complex64::new(1e6, 0.0));
        assert!(!z.is_infinity());
        assert!(z.cross_dist(&inf) < 1e-5);
        // Beyond the identity tolerance a huge value folds into infinity.
        let huge = CPoint::from_complex(Complex64::new(1e12, 0.0));
        assert!(huge.is_infinity());
    }

    #[test]
    fn cross_dist_identifies_equal_points() {
        let a = CPoint::from_complex(Complex64::new(2.0, -1.0));
        let b = CPoint::from_projective(Complex64::new(4.0, -2.0), Complex64::new(2.0, 0.0));
        assert!(a.approx_eq(&b, 1e-12));
        let c = CPoint::from_complex(Complex64::new(2.0, -1.0 + 1e-6));
        assert!(!a.approx_eq(&c, 1e-9));
    }
}
