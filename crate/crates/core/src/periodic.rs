//! Periodic orbits via simultaneous root-finding on f^m(z) = z.
//!
//! The fixed-point equation is never expanded into coefficients: for the
//! m-th iterate those would span hundreds of orders of magnitude and root
//! conditioning would be hopeless. Instead the Aberth solver consumes
//! Newton ratios of E(z) = u_m(z) - z v_m(z), where (u_m, v_m) is the
//! projective iterate evaluated with per-step rescaling. The common scale
//! cancels in E/E', so corrections are exact while intermediates stay
//! bounded.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::map::MapSpec;
use crate::point::{cmp_key, CPoint};
use crate::poly::{aberth_roots, cluster_roots, RootConfig, RootTarget};
use crate::INDIFFERENT_DEADBAND;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Classification {
    Repelling,
    Attracting,
    Indifferent,
}

#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// Deterministic representative (smallest sort key in the orbit).
    pub representative: CPoint,
    /// Primitive period.
    pub period: usize,
    pub points: Vec<CPoint>,
    /// Complex multiplier (f^period)'(p); `None` when the cycle passes
    /// through infinity on a non-polynomial map.
    pub multiplier: Option<Complex64>,
    /// |multiplier|, computed as the spherical-derivative product around
    /// the cycle (chart-independent).
    pub multiplier_abs: f64,
    /// Per-period exponent chi(p) = ln|multiplier| / period, nats.
    pub chi: f64,
    pub classification: Classification,
}

impl PeriodicOrbit {
    pub fn is_repelling(&self) -> bool {
        self.classification == Classification::Repelling
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PeriodicConfig {
    /// Cap on d^m, the finite root count of the period equation.
    pub max_roots: usize,
    pub root_cfg: RootConfig,
    /// Cross-distance below which a forward image counts as a return.
    pub orbit_match_tol: f64,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        Self {
            max_roots: 8192,
            root_cfg: RootConfig::default(),
            orbit_match_tol: 1e-6,
        }
    }
}

struct IteratedFixedPoint<'a> {
    map: &'a MapSpec,
    m: usize,
    roots: usize,
    radius: f64,
    root_cfg: RootConfig,
}

impl IteratedFixedPoint<'_> {
    /// Structured initial guesses: the depth-m backward orbit of a generic
    /// point shadows the repelling periodic points one-to-one (matching
    /// itineraries), so each guess starts within local-Newton range of its
    /// root. Attracting cycles sit off that set and are patched in from
    /// the critical-orbit limits.
    fn shadow_guesses(&self) -> Option<Vec<Complex64>> {
        let d = self.map.degree();
        let seed = Complex64::new(0.437_1, 0.172_9);
        let mut frontier: Vec<Complex64> = vec![seed];
        for _ in 0..self.m {
            let mut next = Vec::with_capacity(frontier.len() * d);
            for &zk in &frontier {
                let pre = self.map.numerator().sub(&self.map.denominator().scale(zk));
                let roots = crate::poly::poly_roots(&pre, &self.root_cfg).ok()?;
                for (w, mult) in roots {
                    for _ in 0..mult {
                        next.push(w);
                    }
                }
                // Preimages at infinity (rational maps): substitute ring
                // points; their basins are recovered by the iteration.
                while next.len() % d != 0 {
                    next.push(Complex64::from_polar(
                        self.radius,
                        0.377 * next.len() as f64,
                    ));
                }
            }
            frontier = next;
        }
        // Pad to the full root count (rational maps have one extra
        // finite fixed point when infinity is not fixed).
        let mut k = 0usize;
        while frontier.len() < self.roots {
            frontier.push(Complex64::from_polar(self.radius * 0.8, 1.1 + k as f64));
            k += 1;
        }
        frontier.truncate(self.roots);

        // Patch in attracting-cycle points with period dividing m.
        if let Ok(crit) = self.map.critical_points() {
            let mut cycle_pts: Vec<Complex64> = Vec::new();
            for cp in &crit.points {
                if let crate::map::OrbitFate::AttractingCycle { period, .. } = cp.fate {
                    if self.m.is_multiple_of(period) {
                        let tail = cp.orbit.len().saturating_sub(period);
                        for p in &cp.orbit[tail..] {
                            if let Some(z) = p.finite() {
                                if !cycle_pts.iter().any(|q| (q - z).norm() < 1e-9) {
                                    cycle_pts.push(z);
                                }
                            }
                        }
                    }
                }
            }
            let n = frontier.len();
            for (i, p) in cycle_pts.into_iter().take(n / 2).enumerate() {
                frontier[n - 1 - i] = p;
            }
        }
        Some(frontier)
    }
}

impl RootTarget for IteratedFixedPoint<'_> {
    fn num_roots(&self) -> usize {
        self.roots
    }

    fn initial_guesses(&self) -> Option<Vec<Complex64>> {
        self.shadow_guesses()
    }

    fn newton_ratio(&self, z: Complex64) -> Option<Complex64> {
        let (mut u, mut v) = (z, Complex64::new(1.0, 0.0));
        let (mut du, mut dv) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        for _ in 0..self.m {
            let (nu, nv, ndu, ndv) = self.map.projective_step_with_deriv(u, v, du, dv);
            u = nu;
            v = nv;
            du = ndu;
            dv = ndv;
        }
        let e = u - z * v;
        let de = du - v - z * dv;
        if !e.is_finite() || !de.is_finite() {
            return None;
        }
        if de.norm() == 0.0 {
            return if e.norm() == 0.0 {
                Some(Complex64::new(0.0, 0.0))
            } else {
                None
            };
        }
        Some(e / de)
    }

    fn guess_radius(&self) -> f64 {
        self.radius
    }
}

/// All solutions of f^m(z) = z, grouped into orbits of primitive period
/// dividing m. For polynomials the fixed point at infinity is appended.
pub fn find_periodic_points(
    map: &MapSpec,
    m: usize,
    cfg: &PeriodicConfig,
) -> Result<Vec<PeriodicOrbit>> {
    assert!(m >= 1, "period must be at least 1");
    let d = map.degree();
    let count = (d as f64).powi(m as i32);
    if count > cfg.max_roots as f64 {
        return Err(CoreError::BudgetExceeded(format!(
            "period {m} needs {count} roots, cap is {}",
            cfg.max_roots
        )));
    }
    let finite_roots = if map.evaluate(&CPoint::infinity()).is_infinity() {
        count as usize
    } else {
        count as usize + 1
    };
    let radius = if map.is_polynomial() {
        map.escape_radius()
    } else {
        4.0 + map
            .numerator()
            .coeffs()
            .iter()
            .chain(map.denominator().coeffs())
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
    };

    let target = IteratedFixedPoint {
        map,
        m,
        roots: finite_roots,
        radius,
        root_cfg: cfg.root_cfg,
    };
    let points = aberth_roots(&target, &cfg.root_cfg)?;
    let clustered = cluster_roots(&points, cfg.root_cfg.cluster_radius);

    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut claimed = vec![false; clustered.len()];
    for i in 0..clustered.len() {
        if claimed[i] {
            continue;
        }
        let start = CPoint::from_complex(clustered[i].0);
        let orbit_pts = map.orbit(&start, m);
        // Least k >= 1 with f^k(p) = p.
        let mut period = m;
        for k in 1..=m {
            if orbit_pts[k].approx_eq(&start, cfg.orbit_match_tol) {
                period = k;
                break;
            }
        }
        let cycle: Vec<CPoint> = orbit_pts[..period].to_vec();
        // Claim every solved root lying on this cycle.
        for (j, (root, _)) in clustered.iter().enumerate() {
            let rp = CPoint::from_complex(*root);
            if cycle.iter().any(|p| p.approx_eq(&rp, cfg.orbit_match_tol)) {
                claimed[j] = true;
            }
        }

        let mut log_abs = 0.0f64;
        for p in &cycle {
            log_abs += map.spherical_derivative(p).max(0.0).ln();
        }
        let multiplier_abs = log_abs.exp();
        let multiplier = cycle
            .iter()
            .map(|p| p.finite())
            .collect::<Option<Vec<_>>>()
            .and_then(|zs| {
                zs.iter()
                    .map(|&z| map.derivative(z).ok())
                    .collect::<Option<Vec<_>>>()
            })
            .map(|ds| ds.into_iter().product());

        let representative = cycle
            .iter()
            .copied()
            .min_by(cmp_key)
            .expect("cycle is nonempty");
        orbits.push(PeriodicOrbit {
            representative,
            period,
            multiplier,
            multiplier_abs,
            chi: log_abs / period as f64,
            classification: classify(multiplier_abs),
            points: cycle,
        });
    }

    if map.is_polynomial() {
        orbits.push(PeriodicOrbit {
            representative: CPoint::infinity(),
            period: 1,
            points: vec![CPoint::infinity()],
            multiplier: Some(Complex64::new(0.0, 0.0)),
            multiplier_abs: 0.0,
            chi: f64::NEG_INFINITY,
            classification: Classification::Attracting,
        });
    }

    orbits.sort_by(|a, b| cmp_key(&a.representative, &b.representative));
    Ok(orbits)
}

fn classify(multiplier_abs: f64) -> Classification {
    if multiplier_abs < 1.0 - INDIFFERENT_DEADBAND {
        Classification::Attracting
    } else if multiplier_abs <= 1.0 + INDIFFERENT_DEADBAND {
        Classification::Indifferent
    } else {
        Classification::Repelling
    }
}

/// (1/m) ln Σ |(f^m)'(p)|^{-t} over repelling solutions of f^m(p) = p.
/// An orbit of primitive period q | m contributes q points, each with
/// |(f^m)'| = |multiplier|^{m/q}.
pub fn periodic_pressure_estimate(orbits: &[PeriodicOrbit], m: usize, t: f64) -> f64 {
    let terms: Vec<f64> = orbits
        .iter()
        .filter(|o| o.is_repelling() && m.is_multiple_of(o.period))
        .map(|o| (o.period as f64).ln() - t * m as f64 * o.chi)
        .collect();
    crate::numerics::log_sum_exp(terms.iter().copied()) / m as f64
}

/// Extremes of chi over repelling orbits; the periodic-orbit estimators
/// of the minimal and maximal Lyapunov exponents.
pub fn chi_range(orbits: &[PeriodicOrbit]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for o in orbits.iter().filter(|o| o.is_repelling()) {
        lo = lo.min(o.chi);
        hi = hi.max(o.chi);
    }
    (lo <= hi).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn orbit_at<'a>(orbits: &'a [PeriodicOrbit], z: Complex64) -> Option<&'a PeriodicOrbit> {
        let p = CPoint::from_complex(z);
        orbits
            .iter()
            .find(|o| o.points.iter().any(|q| q.approx_eq(&p, 1e-7)))
    }

    #[test]
    fn fixed_points_of_square() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let orbits = find_periodic_points(&f, 1, &PeriodicConfig::default()).unwrap();
        // z = 1 repelling with multiplier 2, z = 0 attracting, infinity
        // superattracting.
        let one = orbit_at(&orbits, c(1.0, 0.0)).unwrap();
        assert!(one.is_repelling());
        assert!((one.multiplier.unwrap() - c(2.0, 0.0)).norm() < 1e-10);
        let zero = orbit_at(&orbits, c(0.0, 0.0)).unwrap();
        assert_eq!(zero.classification, Classification::Attracting);
        assert!(orbits.iter().any(|o| o.representative.is_infinity()));
    }

    #[test]
    fn fixed_points_of_chebyshev() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let orbits = find_periodic_points(&f, 1, &PeriodicConfig::default()).unwrap();
        let two = orbit_at(&orbits, c(2.0, 0.0)).unwrap();
        assert!(two.is_repelling());
        assert!((two.multiplier.unwrap() - c(4.0, 0.0)).norm() < 1e-10);
        let minus_one = orbit_at(&orbits, c(-1.0, 0.0)).unwrap();
        assert!(minus_one.is_repelling());
        assert!((minus_one.multiplier.unwrap() - c(-2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn period_two_orbit_of_square() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let orbits = find_periodic_points(&f, 2, &PeriodicConfig::default()).unwrap();
        // Primitive 2-cycle at the cube roots of unity != 1, multiplier 4.
        let angle = 2.0 * std::f64::consts::PI / 3.0;
        let w = Complex64::from_polar(1.0, angle);
        let two_cycle = orbit_at(&orbits, w).expect("2-cycle found");
        assert_eq!(two_cycle.period, 2);
        assert!((two_cycle.multiplier.unwrap() - c(4.0, 0.0)).norm() < 1e-8);
        // Fixed points reappear as period-1 orbits.
        assert!(orbit_at(&orbits, c(1.0, 0.0)).unwrap().period == 1);
    }

    #[test]
    fn multiplier_equals_step_product() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let orbits = find_periodic_points(&f, 3, &PeriodicConfig::default()).unwrap();
        for o in orbits
            .iter()
            .filter(|o| o.multiplier.is_some() && !o.representative.is_infinity())
        {
            let prod: Complex64 = o
                .points
                .iter()
                .map(|p| f.derivative(p.finite().unwrap()).unwrap())
                .product();
            let m = o.multiplier.unwrap();
            assert!(
                (prod - m).norm() <= 1e-9 * (1.0 + m.norm()),
                "orbit at {:?}",
                o.representative.finite()
            );
            // And the spherical product agrees in modulus.
            assert!((prod.norm() - o.multiplier_abs).abs() <= 1e-9 * (1.0 + prod.norm()));
        }
    }

    #[test]
    fn orbit_count_matches_degree() {
        // Solutions of f^m(z) = z counted with multiplicity: 2^m finite
        // ones for a quadratic polynomial.
        let f = MapSpec::quadratic(c(0.0, 1.0));
        for m in 1..=4 {
            let orbits = find_periodic_points(&f, m, &PeriodicConfig::default()).unwrap();
            let finite_pts: usize = orbits
                .iter()
                .filter(|o| !o.representative.is_infinity() && m % o.period == 0)
                .map(|o| o.period)
                .sum();
            assert_eq!(finite_pts, 1usize << m, "period {m}");
        }
    }

    #[test]
    fn budget_guard_fires() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let cfg = PeriodicConfig {
            max_roots: 4,
            ..Default::default()
        };
        assert!(matches!(
            find_periodic_points(&f, 3, &cfg),
            Err(CoreError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn periodic_sum_on_power_map_is_affine() {
        // Λ_m(t) = (2^m - 1) 2^{-t m}: estimate is (1-t) ln 2 up to 2^-m.
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let m = 8;
        let orbits = find_periodic_points(&f, m, &PeriodicConfig::default()).unwrap();
        for t in [-1.0, 0.0, 1.0, 2.5] {
            let est = periodic_pressure_estimate(&orbits, m, t);
            let exact = ((2f64.powi(m as i32) - 1.0).ln() - t * m as f64 * 2f64.ln()) / m as f64;
            assert!((est - exact).abs() < 1e-9, "t = {t}");
            assert!((est - (1.0 - t) * 2f64.ln()).abs() < 2e-3, "t = {t}");
        }
    }

    #[test]
    fn chebyshev_chi_range_up_to_period_8() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let mut all: Vec<PeriodicOrbit> = Vec::new();
        for m in 1..=8 {
            all.extend(find_periodic_points(&f, m, &PeriodicConfig::default()).unwrap());
        }
        let (lo, hi) = chi_range(&all).unwrap();
        let ln2 = 2f64.ln();
        assert!((hi - 2.0 * ln2).abs() < 1e-9, "chi_sup from z = 2");
        assert!((lo - ln2).abs() < 1e-9, "chi_inf from z = -1");
    }
}
