//! Assembly of the pressure curve t -> P(t) and the readings taken off it:
//! one-sided slopes, condensation/freezing points, the first zero, linear
//! asymptotes, and curvature probes.
//!
//! Per grid point the curve fuses several estimators: per-root tree
//! estimates formed as depth-difference quotients
//! (ln Λ_{n2} - ln Λ_{n1})/(n2 - n1), which cancel the depth-independent
//! distortion constant that a raw (1/n) ln Λ_n estimate carries, plus a
//! periodic-orbit sum at the largest affordable period. The median wins;
//! the half-spread is the reported uncertainty. The fused samples are then
//! projected onto the convex non-increasing cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::backward::{
    backward_tree, extremal_derivative_rates, preimages, sup_derivative_rate, BackTree, Metric,
    TreeConfig, TreeMode,
};
use crate::error::{CoreError, Result};
use crate::map::MapSpec;
use crate::periodic::{
    chi_range, find_periodic_points, periodic_pressure_estimate, PeriodicConfig, PeriodicOrbit,
};
use crate::point::CPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "serde_json::Value")]
pub enum ExtReal {
    Finite(f64),
    MinusInfinity,
    PlusInfinity,
    Undetermined,
}

impl ExtReal {
    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_plus_infinity(&self) -> bool {
        matches!(self, ExtReal::PlusInfinity)
    }

    pub fn is_minus_infinity(&self) -> bool {
        matches!(self, ExtReal::MinusInfinity)
    }

    /// Lower bound usable for interval logic (-inf for undetermined-left).
    pub fn lower_value(&self) -> f64 {
        match self {
            ExtReal::Finite(x) => *x,
            ExtReal::PlusInfinity => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn upper_value(&self) -> f64 {
        match self {
            ExtReal::Finite(x) => *x,
            ExtReal::MinusInfinity => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        }
    }
}

impl From<ExtReal> for serde_json::Value {
    fn from(x: ExtReal) -> Self {
        match x {
            ExtReal::Finite(v) => serde_json::json!(v),
            ExtReal::MinusInfinity => serde_json::json!("-inf"),
            ExtReal::PlusInfinity => serde_json::json!("+inf"),
            ExtReal::Undetermined => serde_json::json!("undetermined"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub source: String,
    /// One-sided bracket from the companion estimator: an upper bound for
    /// chi_sup (sup-derivative rate), a lower probe for chi_inf (tree
    /// minimum rate).
    pub bracket: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PressureCurve {
    pub grid: Vec<f64>,
    /// Convexified, non-increasing values.
    pub values: Vec<f64>,
    /// Median-fused values before convexification.
    pub raw: Vec<f64>,
    pub uncertainty: Vec<f64>,
    /// Estimator-systematic scale per point: spread between the
    /// depth-quotient and the raw deepest-level tree estimate. The
    /// half-spread misses it because all fused estimators share the same
    /// finite-depth blending bias near phase kinks.
    pub systematic: Vec<f64>,
    /// Which estimator the median picked, per grid point.
    pub sources: Vec<String>,
    /// Full estimator provenance per grid point: (label, value).
    pub estimates: Vec<Vec<(String, f64)>>,
    pub chi_inf: ExponentEstimate,
    pub chi_sup: ExponentEstimate,
    pub t_minus: ExtReal,
    pub t_plus: ExtReal,
    pub t_star: Option<f64>,
    pub hull_max_move: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AssembleConfig {
    /// Deep tree level n2; clamped by the node budget.
    pub depth_hi: usize,
    /// Shallow comparison level n1 < n2.
    pub depth_lo: usize,
    /// Number of independent tree roots (each a backward-walked generic
    /// point).
    pub roots: usize,
    /// Backward steps used to land each root exponentially close to the
    /// Julia set.
    pub root_walk: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Periodic-orbit estimator uses the largest m with d^m <= this.
    pub period_cap: usize,
    /// chi estimates collect orbits for all periods with d^m <= this.
    pub chi_period_cap: usize,
    pub tree: TreeConfig,
    pub periodic: PeriodicConfig,
    pub uncertainty_floor: f64,
    /// Spread beyond which an EstimatorDisagreement warning is recorded.
    pub disagreement_threshold: f64,
    pub sup_rate_n: usize,
    pub sup_rate_grid: usize,
}

impl Default for AssembleConfig {
    fn default() -> Self {
        Self {
            depth_hi: 18,
            depth_lo: 12,
            roots: 2,
            root_walk: 14,
            seed: 0,
            metric: Metric::Spherical,
            period_cap: 1024,
            chi_period_cap: 256,
            tree: TreeConfig::default(),
            periodic: PeriodicConfig::default(),
            uncertainty_floor: 5e-5,
            disagreement_threshold: 0.05,
            sup_rate_n: 8,
            sup_rate_grid: 300,
        }
    }
}

/// Inclusive arithmetic grid a, a+step, ..., b.
pub fn grid_range(a: f64, b: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && b > a);
    let n = ((b - a) / step).round() as usize;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

/// A generic point exponentially close to the Julia set: a fixed seed
/// point pulled back `walk` steps along a seeded uniform backward path.
pub fn generic_root(map: &MapSpec, index: usize, walk: usize, seed: u64) -> Result<CPoint> {
    let angle = 2.61803398875 * (index as f64 + 0.7313);
    let start = CPoint::from_complex(num_complex::Complex64::from_polar(0.437, angle));
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ 0xdead_beef_cafe_f00du64.wrapping_mul(index as u64 + 1));
    let mut z = start;
    for _ in 0..walk {
        let pres = preimages(map, &z, &crate::poly::RootConfig::default())?;
        let total: usize = pres.iter().map(|p| p.1).sum();
        let mut pick = rng.gen_range(0..total);
        let mut chosen = 0usize;
        for (i, (_, mult)) in pres.iter().enumerate() {
            if pick < *mult {
                chosen = i;
                break;
            }
            pick -= *mult;
        }
        z = pres[chosen].0;
    }
    Ok(z)
}

fn median_with_spread(values: &[(String, f64)]) -> (f64, f64, String) {
    let mut sorted: Vec<(String, f64)> = values.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let n = sorted.len();
    let (median, source) = if n % 2 == 1 {
        (sorted[n / 2].1, sorted[n / 2].0.clone())
    } else {
        (
            0.5 * (sorted[n / 2 - 1].1 + sorted[n / 2].1),
            "median".to_string(),
        )
    };
    let spread = 0.5 * (sorted[n - 1].1 - sorted[0].1);
    (median, spread, source)
}

/// Project samples onto the convex non-increasing cone: lower convex hull
/// followed by flattening of the increasing tail. Returns the projected
/// values and the largest pointwise move.
pub fn convexify(grid: &[f64], samples: &[f64]) -> (Vec<f64>, f64) {
    assert_eq!(grid.len(), samples.len());
    let n = grid.len();
    if n <= 2 {
        let mut vals = samples.to_vec();
        if n == 2 && vals[1] > vals[0] {
            vals[1] = vals[0];
        }
        let max_move = vals
            .iter()
            .zip(samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        return (vals, max_move);
    }

    // Lower hull, Andrew monotone chain over (t, v).
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (grid[b] - grid[a]) * (samples[i] - samples[a])
                - (samples[b] - samples[a]) * (grid[i] - grid[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }

    let mut vals = vec![0.0; n];
    let mut seg = 0usize;
    for i in 0..n {
        while seg + 1 < hull.len() && grid[hull[seg + 1]] < grid[i] {
            seg += 1;
        }
        if hull[seg] == i {
            vals[i] = samples[i];
        } else {
            let (a, b) = (hull[seg], hull[seg + 1]);
            let w = (grid[i] - grid[a]) / (grid[b] - grid[a]);
            vals[i] = samples[a] + w * (samples[b] - samples[a]);
        }
    }

    // Monotone correction: running minimum flattens the convex tail.
    let mut run = vals[0];
    for v in vals.iter_mut() {
        if *v > run {
            *v = run;
        } else {
            run = *v;
        }
    }

    let max_move = vals
        .iter()
        .zip(samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (vals, max_move)
}

impl PressureCurve {
    /// Test/synthetic constructor; transitions and the zero are left
    /// undetermined and exponent estimates are derived from edge slopes.
    pub fn from_samples(grid: Vec<f64>, samples: Vec<f64>, uncertainty: Vec<f64>) -> Self {
        assert_eq!(grid.len(), samples.len());
        assert_eq!(grid.len(), uncertainty.len());
        let (values, hull_max_move) = convexify(&grid, &samples);
        let n = grid.len();
        let chi_sup = -(values[1] - values[0]) / (grid[1] - grid[0]);
        let chi_inf = -(values[n - 1] - values[n - 2]) / (grid[n - 1] - grid[n - 2]);
        Self {
            estimates: vec![Vec::new(); n],
            sources: vec!["synthetic".into(); n],
            raw: samples,
            uncertainty,
            systematic: vec![0.0; n],
            chi_inf: ExponentEstimate {
                value: chi_inf,
                source: "edge-slope".into(),
                bracket: None,
            },
            chi_sup: ExponentEstimate {
                value: chi_sup,
                source: "edge-slope".into(),
                bracket: None,
            },
            t_minus: ExtReal::Undetermined,
            t_plus: ExtReal::Undetermined,
            t_star: None,
            hull_max_move,
            warnings: Vec::new(),
            grid,
            values,
        }
    }

    pub fn t_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    fn locate(&self, t: f64) -> Result<usize> {
        if t < self.t_min() - 1e-12 || t > self.t_max() + 1e-12 {
            return Err(CoreError::OutOfGrid(t));
        }
        let i = self
            .grid
            .partition_point(|&g| g <= t + 1e-12)
            .saturating_sub(1);
        Ok(i.min(self.grid.len() - 2))
    }

    /// Piecewise-linear interpolation of the convexified curve.
    pub fn interp(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        let w = (t - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        Ok(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }

    pub fn uncertainty_at(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        Ok(self.uncertainty[i].max(self.uncertainty[i + 1]))
    }

    /// One-sided secant slopes at an interior t.
    pub fn derivative(&self, t: f64) -> Result<(f64, f64)> {
        if t <= self.t_min() + 1e-12 || t >= self.t_max() - 1e-12 {
            return Err(CoreError::OutOfGrid(t));
        }
        let on_node = self
            .grid
            .iter()
            .position(|&g| (g - t).abs() < 1e-9 * (1.0 + t.abs()));
        Ok(match on_node {
            Some(i) => (
                (self.values[i] - self.values[i - 1]) / (self.grid[i] - self.grid[i - 1]),
                (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i]),
            ),
            None => {
                let i = self.locate(t)?;
                let s = (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i]);
                (s, s)
            }
        })
    }

    /// (P(t-h) - 2 P(t) + P(t+h)) / h^2 on the convexified curve.
    pub fn second_difference(&self, t: f64, h: f64) -> Result<f64> {
        let a = self.interp(t - h)?;
        let b = self.interp(t)?;
        let c = self.interp(t + h)?;
        Ok((a - 2.0 * b + c) / (h * h))
    }

    /// First zero of the convex curve by bisection on the interpolant.
    pub fn first_zero(&self) -> Result<f64> {
        let n = self.grid.len();
        if self.values[0] <= 0.0 {
            return Err(CoreError::NoZeroInGrid);
        }
        let mut bracket = None;
        for i in 0..n - 1 {
            if self.values[i] > 0.0 && self.values[i + 1] <= 0.0 {
                bracket = Some(i);
                break;
            }
        }
        let i = bracket.ok_or(CoreError::NoZeroInGrid)?;
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        Ok(crate::numerics::bisect(
            |t| self.interp(t).unwrap_or(f64::NAN),
            a,
            b,
            1e-12,
        ))
    }

    /// Condensation/freezing points from the fused curve and the exponent
    /// estimates. Infinity is declared only when the defining inequality
    /// holds at the grid edge AND the edge slope matches the exponent.
    pub fn transition_points(&self) -> (ExtReal, ExtReal) {
        let n = self.grid.len();
        let h = self.step();
        let delta = |i: usize| -> f64 {
            (2.5 * self.uncertainty[i])
                .max(0.5 * self.systematic[i])
                .max(0.008)
        };
        let slope_tol = |i: usize| 0.02 + 4.0 * self.uncertainty[i] / h;

        // t_minus: inf { t : P(t) + t chi_sup > delta }.
        let chi_sup = self.chi_sup.value;
        let g_minus = |i: usize| self.values[i] + self.grid[i] * chi_sup;
        let first = (0..n).find(|&i| g_minus(i) > delta(i));
        let t_minus = match first {
            None => ExtReal::Undetermined,
            Some(0) => {
                let edge_slope = (self.values[1] - self.values[0]) / h;
                if (-edge_slope - chi_sup).abs() <= slope_tol(0) {
                    ExtReal::MinusInfinity
                } else {
                    ExtReal::Undetermined
                }
            }
            Some(i) => {
                // Bisect g(t) - delta(t) with delta linearly interpolated,
                // so both bracket endpoints keep their grid-point signs.
                let (t0, t1) = (self.grid[i - 1], self.grid[i]);
                let (d0, d1) = (delta(i - 1), delta(i));
                let f = |t: f64| {
                    let w = (t - t0) / (t1 - t0);
                    self.interp(t).unwrap_or(f64::NAN) + t * chi_sup - (d0 + w * (d1 - d0))
                };
                ExtReal::Finite(crate::numerics::bisect(f, t0, t1, 1e-10))
            }
        };

        // t_plus: sup { t : P(t) + t chi_inf > delta }.
        let chi_inf = self.chi_inf.value;
        let g_plus = |i: usize| self.values[i] + self.grid[i] * chi_inf;
        let last = (0..n).rev().find(|&i| g_plus(i) > delta(i));
        let t_plus = match last {
            None => ExtReal::Undetermined,
            Some(i) if i == n - 1 => {
                let edge_slope = (self.values[n - 1] - self.values[n - 2]) / h;
                if (-edge_slope - chi_inf).abs() <= slope_tol(n - 1) {
                    ExtReal::PlusInfinity
                } else {
                    ExtReal::Undetermined
                }
            }
            Some(i) => {
                let (t0, t1) = (self.grid[i], self.grid[i + 1]);
                let (d0, d1) = (delta(i), delta(i + 1));
                let f = |t: f64| {
                    let w = (t - t0) / (t1 - t0);
                    self.interp(t).unwrap_or(f64::NAN) + t * chi_inf - (d0 + w * (d1 - d0))
                };
                ExtReal::Finite(crate::numerics::bisect(f, t0, t1, 1e-10))
            }
        };

        (t_minus, t_plus)
    }

    /// Residuals of P against max{-t chi_sup, -t chi_inf} outside
    /// (t_minus, t_plus).
    pub fn asymptote_check(&self) -> AsymptoteReport {
        let mut rows = Vec::new();
        let lo = self.t_minus.lower_value();
        let hi = self.t_plus.upper_value();
        for (i, &t) in self.grid.iter().enumerate() {
            let outside = match (self.t_minus, self.t_plus) {
                (ExtReal::Finite(a), _) if t <= a => true,
                (_, ExtReal::Finite(b)) if t >= b => true,
                _ => false,
            };
            let _ = (lo, hi);
            if outside {
                let target = (-t * self.chi_sup.value).max(-t * self.chi_inf.value);
                rows.push(AsymptoteRow {
                    t,
                    pressure: self.values[i],
                    target,
                    residual: self.values[i] - target,
                });
            }
        }
        let max_abs_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
        AsymptoteReport {
            vacuous: rows.is_empty(),
            max_abs_residual,
            rows,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoteRow {
    pub t: f64,
    pub pressure: f64,
    pub target: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoteReport {
    pub vacuous: bool,
    pub max_abs_residual: f64,
    pub rows: Vec<AsymptoteRow>,
}

/// Build the fused pressure curve for `map` over `t_grid`.
pub fn assemble_pressure(
    map: &MapSpec,
    t_grid: &[f64],
    cfg: &AssembleConfig,
) -> Result<PressureCurve> {
    assert!(!t_grid.is_empty(), "grid must be nonempty");
    assert!(cfg.roots >= 1 && cfg.depth_hi > cfg.depth_lo && cfg.depth_lo >= 1);
    let d = map.degree();
    let mut warnings: Vec<String> = Vec::new();

    // Clamp tree depth by the node budget.
    let mut depth_hi = cfg.depth_hi;
    loop {
        let total: f64 = (0..=depth_hi).map(|j| (d as f64).powi(j as i32)).sum();
        if total <= cfg.tree.node_budget as f64 || depth_hi <= cfg.depth_lo + 1 {
            break;
        }
        depth_hi -= 1;
    }
    if depth_hi != cfg.depth_hi {
        warnings.push(format!(
            "tree depth clamped from {} to {depth_hi} by node budget",
            cfg.depth_hi
        ));
    }
    let depth_lo = cfg.depth_lo.min(depth_hi - 1);

    // Trees, one per root.
    let trees: Vec<BackTree> = (0..cfg.roots)
        .map(|i| {
            let root = generic_root(map, i, cfg.root_walk, cfg.seed)?;
            backward_tree(map, &root, depth_hi, TreeMode::Exact, cfg.metric, &cfg.tree)
        })
        .collect::<Result<_>>()?;
    let degenerate: usize = trees.iter().map(|t| t.degenerate_nodes).sum();
    if degenerate > 0 {
        warnings.push(format!(
            "{degenerate} degenerate tree nodes (critical-value collisions)"
        ));
    }

    // Periodic orbits: estimator period plus the chi sweep.
    let m_est = largest_period(d, cfg.period_cap);
    let m_chi = largest_period(d, cfg.chi_period_cap);
    let est_orbits = find_periodic_points(map, m_est, &cfg.periodic)?;
    let mut chi_orbits: Vec<PeriodicOrbit> = Vec::new();
    for m in 1..=m_chi {
        chi_orbits.extend(find_periodic_points(map, m, &cfg.periodic)?);
    }

    // Fused samples per grid point:
    // (median, spread, source, estimates, systematic).
    type Fused = (f64, f64, String, Vec<(String, f64)>, f64);
    let fused: Vec<Fused> = t_grid
        .par_iter()
        .map(|&t| {
            let mut estimates: Vec<(String, f64)> = Vec::new();
            let mut systematic = 0.0f64;
            for (i, tree) in trees.iter().enumerate() {
                let (hi, _) = tree.log_level_sum(depth_hi, t);
                let (lo, _) = tree.log_level_sum(depth_lo, t);
                let quot = (hi - lo) / (depth_hi - depth_lo) as f64;
                let raw_deep = hi / depth_hi as f64;
                systematic = systematic.max((quot - raw_deep).abs());
                estimates.push((format!("tree:r{i}"), quot));
            }
            estimates.push((
                format!("periodic:m{m_est}"),
                periodic_pressure_estimate(&est_orbits, m_est, t),
            ));
            let (median, spread, source) = median_with_spread(&estimates);
            (median, spread, source, estimates, systematic)
        })
        .collect();

    let raw: Vec<f64> = fused.iter().map(|f| f.0).collect();
    let uncertainty: Vec<f64> = fused
        .iter()
        .map(|f| f.1.max(cfg.uncertainty_floor))
        .collect();
    let sources: Vec<String> = fused.iter().map(|f| f.2.clone()).collect();
    let systematic: Vec<f64> = fused.iter().map(|f| f.4).collect();
    let estimates: Vec<Vec<(String, f64)>> = fused.into_iter().map(|f| f.3).collect();

    let max_spread = uncertainty.iter().copied().fold(0.0, f64::max);
    if max_spread > cfg.disagreement_threshold {
        warnings.push(format!(
            "EstimatorDisagreement: max spread {max_spread:.4} exceeds {:.4}",
            cfg.disagreement_threshold
        ));
    }

    let (values, hull_max_move) = convexify(t_grid, &raw);

    // Exponents: point estimates from repelling periodic orbits (fast,
    // bias-free at the orbits we can afford); companion brackets recorded.
    let (chi_lo, chi_hi) = chi_range(&chi_orbits).ok_or_else(|| {
        CoreError::RootSolverFailure("no repelling orbits found for chi estimates".into())
    })?;
    let sup_bracket = sup_derivative_rate(map, cfg.sup_rate_n, cfg.sup_rate_grid);
    let min_rate_bracket = trees
        .iter()
        .filter_map(|t| extremal_derivative_rates(t).ok().map(|r| r.0))
        .fold(f64::INFINITY, f64::min);
    let chi_sup = ExponentEstimate {
        value: chi_hi,
        source: format!("periodic(:{m_chi})"),
        bracket: Some(sup_bracket),
    };
    let chi_inf = ExponentEstimate {
        value: chi_lo,
        source: format!("periodic(:{m_chi})"),
        bracket: min_rate_bracket.is_finite().then_some(min_rate_bracket),
    };

    let mut curve = PressureCurve {
        grid: t_grid.to_vec(),
        values,
        raw,
        uncertainty,
        systematic,
        sources,
        estimates,
        chi_inf,
        chi_sup,
        t_minus: ExtReal::Undetermined,
        t_plus: ExtReal::Undetermined,
        t_star: None,
        hull_max_move,
        warnings,
    };
    let (t_minus, t_plus) = curve.transition_points();
    curve.t_minus = t_minus;
    curve.t_plus = t_plus;
    curve.t_star = curve.first_zero().ok();
    Ok(curve)
}

fn largest_period(d: usize, cap: usize) -> usize {
    let mut m = 1;
    let mut count = d;
    while count * d <= cap {
        count *= d;
        m += 1;
    }
    m
}
