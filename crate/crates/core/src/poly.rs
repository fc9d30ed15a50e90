//! Dense complex polynomials and a simultaneous root solver.
//!
//! Roots are found with Aberth–Ehrlich iteration (Jacobi style, so sweeps
//! are order-independent and parallelizable) followed by Newton polishing
//! and cluster-based multiplicity assignment. The solver runs either on
//! explicit coefficients or on any [`RootTarget`] that can produce Newton
//! ratios p/p' — the latter is used for iterated-map fixed-point equations
//! whose expanded coefficients would be hopelessly ill-conditioned.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};

const ZERO_COEFF: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Build from ascending coefficients, trimming a (numerically) zero tail.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() <= ZERO_COEFF) == Some(true) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].norm() <= ZERO_COEFF
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_with_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::constant(Complex64::new(0.0, 0.0));
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::constant(Complex64::new(0.0, 0.0));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            out[i] += a;
        }
        for (i, &b) in other.coeffs.iter().enumerate() {
            out[i] -= b;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }
}

/// Solver knobs. The defaults match the accuracy the rest of the crate
/// assumes: absolute tolerance 1e-12, 200 sweeps, clusters at 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct RootConfig {
    pub abs_tol: f64,
    pub max_iters: usize,
    pub cluster_radius: f64,
    pub polish_iters: usize,
    pub restarts: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_iters: 200,
            cluster_radius: 1e-8,
            polish_iters: 5,
            restarts: 3,
        }
    }
}

/// Anything Aberth iteration can run on.
pub trait RootTarget: Sync {
    /// Total number of (finite) roots, counted with multiplicity.
    fn num_roots(&self) -> usize;
    /// Newton ratio p(z)/p'(z). `None` requests a re-seed of this point
    /// (overflow, or landed exactly on a pole of the ratio).
    fn newton_ratio(&self, z: Complex64) -> Option<Complex64>;
    /// Radius of a disk guaranteed (or strongly expected) to contain
    /// every root; initial guesses are placed slightly outside it.
    fn guess_radius(&self) -> f64;
    /// Structured initial guesses (must have exactly `num_roots` entries);
    /// falls back to a circle when absent. High-degree targets need this:
    /// from a distant circle the Newton flow contracts by only ~(1 - 1/N)
    /// per sweep.
    fn initial_guesses(&self) -> Option<Vec<Complex64>> {
        None
    }
}

impl RootTarget for Poly {
    fn num_roots(&self) -> usize {
        self.degree()
    }

    fn newton_ratio(&self, z: Complex64) -> Option<Complex64> {
        let (p, dp) = self.eval_with_deriv(z);
        if !p.is_finite() || !dp.is_finite() {
            return None;
        }
        if dp.norm() == 0.0 {
            return if p.norm() == 0.0 {
                Some(Complex64::new(0.0, 0.0))
            } else {
                None
            };
        }
        Some(p / dp)
    }

    fn guess_radius(&self) -> f64 {
        let lead = self.leading().norm();
        let max_rel = self
            .coeffs
            .iter()
            .take(self.coeffs.len() - 1)
            .map(|c| c.norm() / lead)
            .fold(0.0f64, f64::max);
        1.0 + max_rel
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[inline]
fn unit_jitter(state: &mut u64) -> Complex64 {
    let a = (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64;
    let b = (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64;
    Complex64::new(a - 0.5, b - 0.5)
}

/// Run Aberth–Ehrlich on `target`; returns one point per root (multiplicities
/// appear as coincident points, to be merged by [`cluster_roots`]).
pub fn aberth_roots<T: RootTarget>(target: &T, cfg: &RootConfig) -> Result<Vec<Complex64>> {
    let n = target.num_roots();
    if n == 0 {
        return Ok(Vec::new());
    }
    let radius = target.guess_radius().max(1e-6) * 1.05;
    let mut rng_state: u64 = 0x5eed_c0de_0451_u64 ^ (n as u64);

    let mut z: Vec<Complex64> = match target.initial_guesses() {
        Some(g) => {
            assert_eq!(g.len(), n, "initial guesses must cover every root");
            g
        }
        None => (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.37) / n as f64 + 0.13;
                Complex64::from_polar(radius, theta)
            })
            .collect(),
    };
    // Coincident guesses never separate (identical deterministic sweeps);
    // nudge duplicates apart.
    for i in 1..n {
        for j in 0..i {
            if (z[i] - z[j]).norm() < 1e-12 {
                let nudge = unit_jitter(&mut rng_state) * 1e-6 * (1.0 + z[j].norm());
                z[i] += nudge;
            }
        }
    }

    for attempt in 0..=cfg.restarts {
        // Gauss-Seidel sweeps: each point sees the already-updated others.
        // The simultaneous (Jacobi) variant oscillates for thousands of
        // clustered roots; serial updates converge in a few dozen sweeps
        // and are deterministic by construction.
        for _ in 0..cfg.max_iters {
            let mut all_done = true;
            for i in 0..n {
                let zi = z[i];
                let ratio = match target.newton_ratio(zi) {
                    Some(r) if r.is_finite() => r,
                    _ => {
                        z[i] = unit_jitter(&mut rng_state) * (2.0 * radius);
                        all_done = false;
                        continue;
                    }
                };
                let mut s = Complex64::new(0.0, 0.0);
                for (j, zj) in z.iter().enumerate() {
                    if j != i {
                        let d = zi - *zj;
                        if d.norm() > 1e-300 {
                            s += 1.0 / d;
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - ratio * s;
                let w = if denom.norm() > 1e-300 {
                    ratio / denom
                } else {
                    ratio
                };
                if !w.is_finite() {
                    z[i] = unit_jitter(&mut rng_state) * (2.0 * radius);
                    all_done = false;
                    continue;
                }
                let mut nz = zi - w;
                if !nz.is_finite() || nz.norm() > 1e9 * radius {
                    nz = unit_jitter(&mut rng_state) * (2.0 * radius);
                }
                z[i] = nz;
                all_done &= w.norm() <= cfg.abs_tol * (1.0 + zi.norm());
            }
            if all_done {
                break;
            }
        }

        // Newton polish, independently per point.
        let polished: Vec<Complex64> = z
            .par_iter()
            .map(|&z0| {
                let mut zi = z0;
                for _ in 0..cfg.polish_iters {
                    match target.newton_ratio(zi) {
                        Some(r) if r.is_finite() => {
                            if r.norm() <= 1e-16 * (1.0 + zi.norm()) {
                                break;
                            }
                            zi -= r;
                        }
                        _ => break,
                    }
                }
                zi
            })
            .collect();
        z = polished;

        let bad = z
            .iter()
            .filter(|&&zi| match target.newton_ratio(zi) {
                Some(r) => !r.norm().is_finite() || r.norm() > 1e-6 * (1.0 + zi.norm()),
                None => true,
            })
            .count();
        if bad == 0 {
            return Ok(z);
        }
        if attempt < cfg.restarts {
            // Perturb the points that failed and retry.
            for zi in z.iter_mut() {
                let ok = matches!(target.newton_ratio(*zi),
                    Some(r) if r.norm() <= 1e-6 * (1.0 + zi.norm()));
                if !ok {
                    *zi += unit_jitter(&mut rng_state) * (0.05 * radius * (attempt + 1) as f64);
                }
            }
        } else {
            return Err(CoreError::RootSolverFailure(format!(
                "{bad}/{n} points unconverged after {} restarts",
                cfg.restarts
            )));
        }
    }
    unreachable!()
}

/// Merge coincident points into (representative, multiplicity) pairs.
/// Representatives are multiplicity-weighted means; output is sorted by
/// (re, im) for determinism.
pub fn cluster_roots(points: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut sorted: Vec<Complex64> = points.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    'outer: for &p in &sorted {
        for (rep, count) in out.iter_mut() {
            if (*rep - p).norm() <= radius * (1.0 + rep.norm()) {
                let k = *count as f64;
                *rep = (*rep * k + p) / (k + 1.0);
                *count += 1;
                continue 'outer;
            }
        }
        out.push((p, 1));
    }
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// All roots of `p` with multiplicities. Degrees 1 and 2 use closed forms.
pub fn poly_roots(p: &Poly, cfg: &RootConfig) -> Result<Vec<(Complex64, usize)>> {
    if p.is_zero() {
        return Err(CoreError::RootSolverFailure(
            "zero polynomial has no well-defined roots".into(),
        ));
    }
    match p.degree() {
        0 => Ok(Vec::new()),
        1 => {
            let root = -p.coeffs()[0] / p.coeffs()[1];
            Ok(vec![(root, 1)])
        }
        2 => {
            let (c, b, a) = (p.coeffs()[0], p.coeffs()[1], p.coeffs()[2]);
            let disc = (b * b - 4.0 * a * c).sqrt();
            // Pick the sign that avoids cancellation in -b ± disc.
            let q = if (b + disc).norm() >= (b - disc).norm() {
                -0.5 * (b + disc)
            } else {
                -0.5 * (b - disc)
            };
            let roots = if q.norm() > 0.0 {
                vec![q / a, c / q]
            } else {
                // b = 0 and c = 0: double root at origin.
                vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
            };
            Ok(cluster_roots(&roots, cfg.cluster_radius))
        }
        _ => {
            let pts = aberth_roots(p, cfg)?;
            Ok(cluster_roots(&pts, cfg.cluster_radius))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_and_derivative() {
        // p(z) = 1 + 2z + 3z^2
        let p = Poly::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let (v, d) = p.eval_with_deriv(c(2.0, 0.0));
        assert!((v - c(17.0, 0.0)).norm() < 1e-14);
        assert!((d - c(14.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn quadratic_roots_exact() {
        // z^2 - 2 -> ±sqrt(2)
        let p = Poly::new(vec![c(-2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = poly_roots(&p, &RootConfig::default()).unwrap();
        assert_eq!(roots.len(), 2);
        let mut vals: Vec<f64> = roots.iter().map(|r| r.0.re).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!((vals[1] - std::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn double_root_multiplicity() {
        // (z - 1)^2
        let p = Poly::new(vec![c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)]);
        let roots = poly_roots(&p, &RootConfig::default()).unwrap();
        assert_eq!(roots.iter().map(|r| r.1).sum::<usize>(), 2);
        assert!((roots[0].0 - c(1.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn aberth_on_roots_of_unity() {
        // z^12 - 1
        let mut coeffs = vec![c(0.0, 0.0); 13];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[12] = c(1.0, 0.0);
        let p = Poly::new(coeffs);
        let roots = poly_roots(&p, &RootConfig::default()).unwrap();
        assert_eq!(roots.len(), 12);
        for (z, m) in roots {
            assert_eq!(m, 1);
            assert!((z.norm() - 1.0).abs() < 1e-10);
            assert!(p.eval(z).norm() < 1e-9);
        }
    }

    #[test]
    fn aberth_handles_wide_coefficient_range() {
        // (z - 1e-3)(z - 1)(z - 1e3)
        let p = Poly::new(vec![c(1.0, 0.0), c(-1e-3, 0.0), c(0.0, 0.0)])
            .mul(&Poly::new(vec![c(-1.0, 0.0), c(1.0, 0.0)]))
            .mul(&Poly::new(vec![c(-1e3, 0.0), c(1.0, 0.0)]));
        // p = (1 - 1e3 z ... ) construct directly instead:
        let q = Poly::new(vec![c(-1e-3, 0.0), c(1.0, 0.0)])
            .mul(&Poly::new(vec![c(-1.0, 0.0), c(1.0, 0.0)]))
            .mul(&Poly::new(vec![c(-1e3, 0.0), c(1.0, 0.0)]));
        drop(p);
        let roots = poly_roots(&q, &RootConfig::default()).unwrap();
        let mut res: Vec<f64> = roots.iter().map(|r| r.0.re).collect();
        res.sort_by(f64::total_cmp);
        assert!((res[0] - 1e-3).abs() < 1e-9);
        assert!((res[1] - 1.0).abs() < 1e-9);
        assert!((res[2] - 1e3).abs() < 1e-6);
    }
}
