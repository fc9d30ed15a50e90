//! Rational maps on the Riemann sphere.
//!
//! A map is stored as a numerator/denominator coefficient pair and, in
//! parallel, as the homogeneous pair `(P(u,v), Q(u,v))` of degree
//! `d = deg f`. All pointwise operations (evaluation, spherical
//! derivative) run on normalized projective pairs, so the point at
//! infinity needs no special-casing and iterates never overflow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::point::CPoint;
use crate::poly::{poly_roots, Poly, RootConfig};

/// How far two sphere points may sit while still counting as the same
/// orbit point during cycle detection.
const CYCLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct MapSpec {
    numerator: Poly,
    denominator: Poly,
    degree: usize,
    polynomial: bool,
    /// Homogeneous coefficients of P and Q, index = power of u, padded to
    /// length degree + 1, plus their cached partials.
    hom_p: Vec<Complex64>,
    hom_q: Vec<Complex64>,
    hom_pu: Vec<Complex64>,
    hom_pv: Vec<Complex64>,
    hom_qu: Vec<Complex64>,
    hom_qv: Vec<Complex64>,
    escape_radius: f64,
}

/// Evaluate Σ a_i u^i v^{D-i} at a normalized pair. Horner in whichever
/// ratio has modulus ≤ 1, so intermediate values stay bounded.
fn eval_homogeneous(coeffs: &[Complex64], u: Complex64, v: Complex64) -> Complex64 {
    let d = coeffs.len() - 1;
    if v.norm() >= u.norm() {
        let t = if v.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            u / v
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc * v.powu(d as u32)
    } else {
        let s = v / u;
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in coeffs.iter() {
            acc = acc * s + c;
        }
        acc * u.powu(d as u32)
    }
}

fn partial_u(coeffs: &[Complex64]) -> Vec<Complex64> {
    // d/du Σ a_i u^i v^{D-i} = Σ i a_i u^{i-1} v^{D-i}: homogeneous of
    // degree D-1 with coefficient (i+1) a_{i+1} at u^i v^{D-1-i}.
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

fn partial_v(coeffs: &[Complex64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    coeffs
        .iter()
        .take(d)
        .enumerate()
        .map(|(i, &c)| c * (d - i) as f64)
        .collect()
}

impl MapSpec {
    /// Build and validate a rational map from ascending coefficient lists.
    /// The denominator defaults to the constant 1 when empty.
    pub fn new(num: Vec<Complex64>, den: Vec<Complex64>) -> Result<Self> {
        let numerator = Poly::new(num);
        let denominator = if den.is_empty() {
            Poly::one()
        } else {
            Poly::new(den)
        };
        if numerator.is_zero() || denominator.is_zero() {
            return Err(CoreError::InvalidMap(
                "numerator and denominator must be nonzero".into(),
            ));
        }
        let degree = numerator.degree().max(denominator.degree());
        if degree < 2 {
            return Err(CoreError::InvalidMap(format!(
                "degree {degree} < 2 is not supported"
            )));
        }
        let polynomial = denominator.is_constant();
        if !polynomial {
            // Common-root check in place of a scaled resultant: every root
            // of the denominator must miss the numerator by a margin.
            let den_roots = poly_roots(&denominator, &RootConfig::default())?;
            let scale = numerator
                .coeffs()
                .iter()
                .map(|c| c.norm())
                .fold(0.0f64, f64::max);
            for (r, _) in den_roots {
                if numerator.eval(r).norm() <= 1e-9 * scale * (1.0 + r.norm()).powi(degree as i32) {
                    return Err(CoreError::InvalidMap(format!(
                        "numerator and denominator share a root near {r}"
                    )));
                }
            }
        }

        let mut hom_p = numerator.coeffs().to_vec();
        hom_p.resize(degree + 1, Complex64::new(0.0, 0.0));
        let mut hom_q = denominator.coeffs().to_vec();
        hom_q.resize(degree + 1, Complex64::new(0.0, 0.0));
        let hom_pu = partial_u(&hom_p);
        let hom_pv = partial_v(&hom_p);
        let hom_qu = partial_u(&hom_q);
        let hom_qv = partial_v(&hom_q);

        let escape_radius = if polynomial {
            let lead = numerator.leading().norm();
            let tail: f64 = numerator
                .coeffs()
                .iter()
                .take(numerator.degree())
                .map(|c| c.norm())
                .sum();
            ((tail + 2.0) / lead).max(2.0)
        } else {
            f64::INFINITY
        };

        Ok(Self {
            numerator,
            denominator,
            degree,
            polynomial,
            hom_p,
            hom_q,
            hom_pu,
            hom_pv,
            hom_qu,
            hom_qv,
            escape_radius,
        })
    }

    pub fn from_polynomial_coeffs(num: Vec<Complex64>) -> Result<Self> {
        Self::new(num, vec![])
    }

    /// z^2 + c, the workhorse test family.
    pub fn quadratic(c: Complex64) -> Self {
        Self::new(
            vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![],
        )
        .expect("quadratic family is always valid")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.polynomial
    }

    pub fn numerator(&self) -> &Poly {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly {
        &self.denominator
    }

    /// Radius beyond which polynomial orbits are certified to escape
    /// (|f(z)| ≥ 2|z|). Infinite for non-polynomial maps.
    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    /// f(z) in normalized projective coordinates. Total.
    pub fn evaluate(&self, z: &CPoint) -> CPoint {
        let u = eval_homogeneous(&self.hom_p, z.u(), z.v());
        let v = eval_homogeneous(&self.hom_q, z.u(), z.v());
        CPoint::from_projective(u, v)
    }

    /// Forward orbit z, f(z), ..., f^n(z) (n + 1 points).
    pub fn orbit(&self, start: &CPoint, n: usize) -> Vec<CPoint> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(*start);
        let mut z = *start;
        for _ in 0..n {
            z = self.evaluate(&z);
            out.push(z);
        }
        out
    }

    /// Derivative of the map in the spherical metric,
    /// |f'(z)| (1+|z|^2)/(1+|f(z)|^2) continued over the whole sphere.
    pub fn spherical_derivative(&self, z: &CPoint) -> f64 {
        let (u, v) = (z.u(), z.v());
        let pu = eval_homogeneous(&self.hom_pu, u, v);
        let pv = eval_homogeneous(&self.hom_pv, u, v);
        let qu = eval_homogeneous(&self.hom_qu, u, v);
        let qv = eval_homogeneous(&self.hom_qv, u, v);
        let p = eval_homogeneous(&self.hom_p, u, v);
        let q = eval_homogeneous(&self.hom_q, u, v);
        let jac = (pu * qv - pv * qu).norm();
        let num = (u.norm_sqr() + v.norm_sqr()) * jac;
        let den = self.degree as f64 * (p.norm_sqr() + q.norm_sqr());
        num / den
    }

    /// One projective step carrying a frozen-scale derivative pair:
    /// (u, v, du, dv) -> (P, Q, P_u du + P_v dv, Q_u du + Q_v dv),
    /// all rescaled by 1/max(|P|, |Q|). Ratios such as Newton corrections
    /// of u_m - z v_m are invariant under that common rescale.
    pub(crate) fn projective_step_with_deriv(
        &self,
        u: Complex64,
        v: Complex64,
        du: Complex64,
        dv: Complex64,
    ) -> (Complex64, Complex64, Complex64, Complex64) {
        let nu = eval_homogeneous(&self.hom_p, u, v);
        let nv = eval_homogeneous(&self.hom_q, u, v);
        let pu = eval_homogeneous(&self.hom_pu, u, v);
        let pv = eval_homogeneous(&self.hom_pv, u, v);
        let qu = eval_homogeneous(&self.hom_qu, u, v);
        let qv = eval_homogeneous(&self.hom_qv, u, v);
        let ndu = pu * du + pv * dv;
        let ndv = qu * du + qv * dv;
        let scale = nu.norm().max(nv.norm());
        if scale > 0.0 && scale.is_finite() {
            let inv = 1.0 / scale;
            (nu * inv, nv * inv, ndu * inv, ndv * inv)
        } else {
            (nu, nv, ndu, ndv)
        }
    }

    /// Complex derivative f'(z) at a finite point with finite image.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let q = self.denominator.eval(z);
        if q.norm() < 1e-12 {
            return Err(CoreError::EuclideanAtInfinity);
        }
        let (p, dp) = self.numerator.eval_with_deriv(z);
        let (_, dq) = self.denominator.eval_with_deriv(z);
        Ok((dp * q - p * dq) / (q * q))
    }

    /// |f'(z)| in the requested metric. The euclidean branch errors at or
    /// near infinity (of the point or its image).
    pub fn derivative_modulus(&self, z: &CPoint, metric: crate::backward::Metric) -> Result<f64> {
        match metric {
            crate::backward::Metric::Spherical => Ok(self.spherical_derivative(z)),
            crate::backward::Metric::Euclidean => {
                let zf = z.finite().ok_or(CoreError::EuclideanAtInfinity)?;
                let fz = self.evaluate(z);
                if fz.is_infinity() {
                    return Err(CoreError::EuclideanAtInfinity);
                }
                Ok(self.derivative(zf)?.norm())
            }
        }
    }

    /// The affine critical polynomial P'Q - PQ'. Roots are the finite
    /// critical points; its degree deficit against 2d-2 is the
    /// multiplicity at infinity.
    pub fn critical_poly(&self) -> Poly {
        self.numerator
            .derivative()
            .mul(&self.denominator)
            .sub(&self.numerator.mul(&self.denominator.derivative()))
    }

    /// All critical points with local degrees and a heuristic
    /// in-Julia-set classification.
    pub fn critical_points(&self) -> Result<CriticalData> {
        let w = self.critical_poly();
        let expected = 2 * self.degree - 2;
        let mut points: Vec<(CPoint, usize)> = Vec::new();
        if !w.is_constant() {
            for (root, mult) in poly_roots(&w, &RootConfig::default())? {
                points.push((CPoint::from_complex(root), mult));
            }
        }
        let found: usize = points.iter().map(|p| p.1).sum();
        if found < expected {
            points.push((CPoint::infinity(), expected - found));
        }

        let mut out = Vec::new();
        let mut warnings = Vec::new();
        for (pt, mult) in &points {
            let fate = self.forward_fate(pt, 1000);
            let in_julia = matches!(
                fate,
                OrbitFate::RepellingCycle { .. } | OrbitFate::NoCycleDetected
            );
            let note = format!("{fate:?}");
            let orbit = self.orbit(pt, 256);
            out.push(CriticalPoint {
                point: *pt,
                local_degree: mult + 1,
                in_julia,
                fate,
                orbit,
                note,
            });
        }

        // Convention check: no Julia critical orbit may run into another
        // critical point within the cached horizon.
        for cp in out.iter().filter(|c| c.in_julia) {
            for (k, z) in cp.orbit.iter().enumerate().skip(1) {
                for other in &points {
                    if z.approx_eq(&other.0, crate::POINT_IDENTITY_TOL) {
                        warnings.push(format!(
                            "critical orbit of {:?} hits critical point {:?} at iterate {k}",
                            cp.point.finite(),
                            other.0.finite()
                        ));
                    }
                }
            }
        }

        let data = CriticalData {
            points: out,
            warnings,
        };
        debug_assert_eq!(data.multiplicity_sum(), expected);
        Ok(data)
    }

    /// Where the forward orbit of `start` ends up, within `max_iters`.
    pub fn forward_fate(&self, start: &CPoint, max_iters: usize) -> OrbitFate {
        if self.polynomial && start.is_infinity() {
            return OrbitFate::EscapesToInfinity;
        }
        let window = 64usize;
        let mut orbit: Vec<CPoint> = Vec::with_capacity(max_iters + 1);
        orbit.push(*start);
        let mut z = *start;
        for _ in 0..max_iters {
            z = self.evaluate(&z);
            if self.polynomial {
                if z.is_infinity() {
                    return OrbitFate::EscapesToInfinity;
                }
                if let Some(zf) = z.finite() {
                    if zf.norm() > self.escape_radius {
                        return OrbitFate::EscapesToInfinity;
                    }
                }
            }
            orbit.push(z);
            let k = orbit.len() - 1;
            if k < 2 {
                continue;
            }
            for q in 1..=window.min(k - 1) {
                if orbit[k].approx_eq(&orbit[k - q], CYCLE_TOL) {
                    // Multiplier over one period, in the spherical metric
                    // (chart-independent for cycles).
                    let mut log_mult = 0.0;
                    for j in 0..q {
                        log_mult += self
                            .spherical_derivative(&orbit[k - q + j])
                            .max(1e-300)
                            .ln();
                    }
                    let m = log_mult.exp();
                    return if m < 1.0 - crate::INDIFFERENT_DEADBAND {
                        OrbitFate::AttractingCycle {
                            period: q,
                            multiplier_abs: m,
                        }
                    } else if m <= 1.0 + crate::INDIFFERENT_DEADBAND {
                        OrbitFate::IndifferentCycle { period: q }
                    } else {
                        OrbitFate::RepellingCycle {
                            period: q,
                            multiplier_abs: m,
                        }
                    };
                }
            }
        }
        OrbitFate::NoCycleDetected
    }

    /// Parse the on-disk JSON map format:
    /// `{"numerator": [[re,im],...], "denominator": [[re,im],...]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            numerator: Vec<[f64; 2]>,
            #[serde(default)]
            denominator: Option<Vec<[f64; 2]>>,
        }
        let raw: Raw = serde_json::from_str(s).map_err(|e| CoreError::Config {
            key: "map".into(),
            reason: e.to_string(),
        })?;
        let num = raw
            .numerator
            .iter()
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let den = raw
            .denominator
            .unwrap_or_else(|| vec![[1.0, 0.0]])
            .iter()
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        Self::new(num, den)
    }

    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Raw {
            numerator: Vec<[f64; 2]>,
            denominator: Vec<[f64; 2]>,
        }
        let raw = Raw {
            numerator: self
                .numerator
                .coeffs()
                .iter()
                .map(|c| [c.re, c.im])
                .collect(),
            denominator: self
                .denominator
                .coeffs()
                .iter()
                .map(|c| [c.re, c.im])
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("map serialization cannot fail")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitFate {
    AttractingCycle { period: usize, multiplier_abs: f64 },
    IndifferentCycle { period: usize },
    RepellingCycle { period: usize, multiplier_abs: f64 },
    EscapesToInfinity,
    NoCycleDetected,
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub point: CPoint,
    pub local_degree: usize,
    /// Heuristic: the forward orbit neither escapes nor settles on an
    /// attracting or indifferent cycle.
    pub in_julia: bool,
    pub fate: OrbitFate,
    /// Cached forward orbit (257 points including the critical point).
    pub orbit: Vec<CPoint>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct CriticalData {
    pub points: Vec<CriticalPoint>,
    pub warnings: Vec<String>,
}

impl CriticalData {
    /// Σ (local degree - 1); equals 2d - 2 by Riemann-Hurwitz.
    pub fn multiplicity_sum(&self) -> usize {
        self.points.iter().map(|p| p.local_degree - 1).sum()
    }

    pub fn julia_points(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.in_julia)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backward::Metric;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_square_minus_two() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let z = CPoint::from_complex(c(0.0, 0.0));
        let fz = f.evaluate(&z);
        assert!((fz.finite().unwrap() - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn evaluate_square_at_i() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let fz = f.evaluate(&CPoint::from_complex(c(0.0, 1.0)));
        assert!((fz.finite().unwrap() - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn infinity_is_fixed_for_polynomials() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let fz = f.evaluate(&CPoint::infinity());
        assert!(fz.is_infinity());
    }

    #[test]
    fn derivative_moduli_match_trivia() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let one = CPoint::from_complex(c(1.0, 0.0));
        assert!((f.derivative_modulus(&one, Metric::Euclidean).unwrap() - 2.0).abs() < 1e-13);
        assert!((f.derivative_modulus(&one, Metric::Spherical).unwrap() - 2.0).abs() < 1e-13);

        let g = MapSpec::quadratic(c(-2.0, 0.0));
        let two = CPoint::from_complex(c(2.0, 0.0));
        assert!((g.derivative_modulus(&two, Metric::Euclidean).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn euclidean_at_infinity_errors() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let err = f.derivative_modulus(&CPoint::infinity(), Metric::Euclidean);
        assert!(matches!(err, Err(CoreError::EuclideanAtInfinity)));
    }

    #[test]
    fn spherical_derivative_chart_independent() {
        // Compare the projective formula against the finite-chart formula
        // at a spread of points, including large |z|.
        let f = MapSpec::new(
            vec![c(1.0, 0.5), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.3, -0.2)],
        )
        .unwrap();
        for &z in &[c(0.3, 0.1), c(2.0, -1.0), c(40.0, 13.0), c(-0.01, 0.002)] {
            let p = CPoint::from_complex(z);
            let direct = f.spherical_derivative(&p);
            let fz = f.evaluate(&p).finite();
            if let (Ok(df), Some(fz)) = (f.derivative(z), fz) {
                let chart = df.norm() * (1.0 + z.norm_sqr()) / (1.0 + fz.norm_sqr());
                assert!(
                    (direct - chart).abs() <= 1e-10 * chart.max(1.0),
                    "mismatch at {z}: {direct} vs {chart}"
                );
            }
        }
    }

    #[test]
    fn critical_points_of_quadratics() {
        let f = MapSpec::quadratic(c(0.1, 0.0));
        let crit = f.critical_points().unwrap();
        assert_eq!(crit.multiplicity_sum(), 2);
        let finite: Vec<_> = crit
            .points
            .iter()
            .filter(|p| !p.point.is_infinity())
            .collect();
        assert_eq!(finite.len(), 1);
        assert!(finite[0].point.approx_eq(&CPoint::zero(), 1e-12));
        // Hyperbolic: 0 is attracted to a fixed point, not in J.
        assert!(!finite[0].in_julia);
        assert!(matches!(
            finite[0].fate,
            OrbitFate::AttractingCycle { period: 1, .. }
        ));
    }

    #[test]
    fn cubic_critical_degrees() {
        // z^3: 0 and infinity both have local degree 3.
        let f = MapSpec::from_polynomial_coeffs(vec![
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ])
        .unwrap();
        let crit = f.critical_points().unwrap();
        assert_eq!(crit.multiplicity_sum(), 4);
        for p in &crit.points {
            assert_eq!(p.local_degree, 3);
        }
    }

    #[test]
    fn misiurewicz_critical_point_in_julia() {
        // z^2 + i: orbit of 0 is preperiodic onto a repelling 2-cycle.
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let crit = f.critical_points().unwrap();
        let zero = crit.points.iter().find(|p| !p.point.is_infinity()).unwrap();
        assert!(zero.in_julia);
        match zero.fate {
            OrbitFate::RepellingCycle {
                period,
                multiplier_abs,
            } => {
                assert_eq!(period, 2);
                // |4 (1 + i)| = 4 sqrt(2)
                assert!((multiplier_abs - 4.0 * 2.0f64.sqrt()).abs() < 1e-4);
            }
            ref other => panic!("expected repelling cycle, got {other:?}"),
        }
    }

    #[test]
    fn degree_one_rejected() {
        assert!(MapSpec::new(vec![c(1.0, 0.0), c(2.0, 0.0)], vec![]).is_err());
    }

    #[test]
    fn common_root_rejected() {
        // (z^2 - 1) / (z - 1)
        let err = MapSpec::new(
            vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
        );
        assert!(err.is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = MapSpec::from_json_str(r#"{"numerator": [[-2,0],[0,0],[1,0]]}"#).unwrap();
        assert_eq!(f.degree(), 2);
        assert!(f.is_polynomial());
        let again = MapSpec::from_json_str(&f.to_json_string()).unwrap();
        assert_eq!(again.degree(), 2);
    }

    #[test]
    fn unknown_map_key_rejected() {
        let err = MapSpec::from_json_str(r#"{"numerator": [[0,0],[0,0],[1,0]], "degre": 2}"#);
        assert!(err.is_err());
    }
}
