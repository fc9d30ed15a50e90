//! Legendre-transform machinery over a pressure curve: the Lyapunov
//! spectrum L(α), the pointwise-dimension spectrum D(α) of the maximal
//! entropy measure, the integral-means spectrum, the χ* slope range, and
//! the Legendre-pair self-consistency check.
//!
//! Infima are evaluated on the convexified piecewise-linear curve: the
//! discrete grid minimum bracketed and refined by a golden-section pass.
//! Grid-edge minimizers are returned boundary-tagged when the edge slope
//! certifies the one-sided limit, and error out as `OutOfGrid` when the
//! infimum provably escapes the grid.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::numerics::golden_min;
use crate::pressure::{ExtReal, PressureCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleTag {
    Interior,
    Boundary,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub abscissa: f64,
    /// `None` encodes an undefined / -inf value (degenerate cases).
    pub value: Option<f64>,
    pub minimizer_t: Option<f64>,
    pub tag: SampleTag,
}

/// Slope tolerance used for edge certificates and affinity tests.
fn slope_noise(curve: &PressureCurve) -> f64 {
    let h = curve.step();
    let unc = curve.uncertainty.iter().copied().fold(0.0, f64::max);
    0.01 + 4.0 * unc / h
}

fn curve_is_affine(curve: &PressureCurve) -> bool {
    let n = curve.grid.len();
    if n < 3 {
        return true;
    }
    let h = curve.step();
    let s0 = (curve.values[1] - curve.values[0]) / h;
    let s1 = (curve.values[n - 1] - curve.values[n - 2]) / (curve.grid[n - 1] - curve.grid[n - 2]);
    (s1 - s0).abs() <= slope_noise(curve)
}

/// Minimize g(t) = P(t) + alpha * t (or a variant) over a grid slice.
/// Returns (min value, minimizer, index range hit the boundary?).
fn minimize_on(
    curve: &PressureCurve,
    lo_idx: usize,
    hi_idx: usize,
    g: impl Fn(f64, f64) -> f64,
) -> (f64, f64, bool, bool) {
    let mut best = f64::INFINITY;
    let mut arg = curve.grid[lo_idx];
    let mut best_i = lo_idx;
    for i in lo_idx..=hi_idx {
        let v = g(curve.grid[i], curve.values[i]);
        if v < best {
            best = v;
            arg = curve.grid[i];
            best_i = i;
        }
    }
    // One golden-section pass between the bracketing neighbors; on a
    // piecewise-linear convex curve this lands on the vertex again, but it
    // also covers curve refinements that interpolate smoothly.
    let a = curve.grid[best_i.saturating_sub(1).max(lo_idx)];
    let b = curve.grid[(best_i + 1).min(hi_idx)];
    if b > a {
        let (x, v) = golden_min(|t| g(t, curve.interp(t).unwrap_or(f64::INFINITY)), a, b, 48);
        if v < best {
            best = v;
            arg = x;
        }
    }
    let at_lo = best_i == lo_idx;
    let at_hi = best_i == hi_idx;
    (best, arg, at_lo, at_hi)
}

/// L(α) = (1/α) inf_t { P(t) + α t }.
pub fn lyapunov_spectrum(curve: &PressureCurve, alpha: f64) -> Result<SpectrumSample> {
    assert!(alpha > 0.0, "Lyapunov spectrum needs alpha > 0");
    let n = curve.grid.len();
    let h = curve.step();
    let tol = slope_noise(curve);

    if curve_is_affine(curve) {
        let slope = (curve.values[1] - curve.values[0]) / h;
        if (alpha + slope).abs() > tol {
            // inf is -inf: the affine curve has a single attainable slope.
            return Ok(SpectrumSample {
                abscissa: alpha,
                value: None,
                minimizer_t: None,
                tag: SampleTag::Degenerate,
            });
        }
    }

    let (min, arg, at_lo, at_hi) = minimize_on(curve, 0, n - 1, |t, p| p + alpha * t);
    let _ = h;

    if at_lo {
        // Escape certificate: the limit slope of g = P + α t toward -inf
        // is α - chi_sup. Positive means g drops without bound.
        if alpha > curve.chi_sup.value + tol {
            return Err(CoreError::OutOfGrid(curve.t_min()));
        }
        return Ok(SpectrumSample {
            abscissa: alpha,
            value: Some(min / alpha),
            minimizer_t: Some(arg),
            tag: SampleTag::Boundary,
        });
    }
    if at_hi {
        // Toward +inf the limit slope is α - chi_inf; negative escapes.
        if alpha < curve.chi_inf.value - tol {
            return Err(CoreError::OutOfGrid(curve.t_max()));
        }
        return Ok(SpectrumSample {
            abscissa: alpha,
            value: Some(min / alpha),
            minimizer_t: Some(arg),
            tag: SampleTag::Boundary,
        });
    }

    // Interior minimum, but flag boundary when an edge value ties within
    // the uncertainty (the infimum may leak beyond the grid).
    let unc = curve.uncertainty.iter().copied().fold(0.0, f64::max);
    let g0 = curve.values[0] + alpha * curve.grid[0];
    let g1 = curve.values[n - 1] + alpha * curve.grid[n - 1];
    let tag = if g0 <= min + unc.max(1e-9) || g1 <= min + unc.max(1e-9) {
        SampleTag::Boundary
    } else {
        SampleTag::Interior
    };
    Ok(SpectrumSample {
        abscissa: alpha,
        value: Some(min / alpha),
        minimizer_t: Some(arg),
        tag,
    })
}

/// D(α) = inf { t + α P(t)/ln d : t <= 0 }, valid for α <= 1 on
/// polynomials with connected Julia set (caller-asserted).
pub fn dimension_spectrum(
    curve: &PressureCurve,
    alpha: f64,
    ln_deg: f64,
) -> Result<SpectrumSample> {
    assert!(alpha <= 1.0 + 1e-12, "dimension spectrum needs alpha <= 1");
    assert!(ln_deg > 0.0);
    let hi_idx = curve
        .grid
        .iter()
        .rposition(|&t| t <= 1e-12)
        .ok_or(CoreError::OutOfGrid(0.0))?;
    let tol = slope_noise(curve);

    let (min, arg, at_lo, _) = minimize_on(curve, 0, hi_idx, |t, p| t + alpha * p / ln_deg);

    if at_lo {
        // Limit slope of g = t + α P(t)/ln d toward -inf is
        // 1 - α chi_sup/ln d; positive means the infimum escapes.
        let limit_slope = 1.0 - alpha * curve.chi_sup.value / ln_deg;
        if limit_slope > tol {
            return Err(CoreError::OutOfGrid(curve.t_min()));
        }
        return Ok(SpectrumSample {
            abscissa: alpha,
            value: Some(min),
            minimizer_t: Some(arg),
            tag: SampleTag::Boundary,
        });
    }
    Ok(SpectrumSample {
        abscissa: alpha,
        value: Some(min),
        minimizer_t: Some(arg),
        tag: SampleTag::Interior,
    })
}

/// β_φ(t) = P(t)/ln d + t - 1.
pub fn integral_means_spectrum(curve: &PressureCurve, t: f64, ln_deg: f64) -> Result<f64> {
    Ok(curve.interp(t)? / ln_deg + t - 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiStarRange {
    pub chi_star_inf: f64,
    pub chi_star_sup: f64,
    /// Set when the range collapses within slope noise (affine phase).
    pub degenerate: bool,
}

/// Range of -P'(t) over grid points interior to (t_minus, t_plus).
pub fn chi_star_range(curve: &PressureCurve) -> Result<ChiStarRange> {
    let lo = curve.t_minus.lower_value();
    let hi = curve.t_plus.upper_value();
    let mut slopes: Vec<f64> = Vec::new();
    let eps = 1e-9 * (1.0 + curve.t_max().abs());
    for i in 1..curve.grid.len() - 1 {
        let t = curve.grid[i];
        if t > lo + eps && t < hi - eps {
            let (l, r) = curve.derivative(t)?;
            slopes.push(-(l + r) * 0.5);
        }
    }
    if slopes.is_empty() {
        return Err(CoreError::EmptyInterval);
    }
    let inf = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let sup = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ChiStarRange {
        chi_star_inf: inf,
        chi_star_sup: sup,
        degenerate: (sup - inf) <= slope_noise(curve),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LegendreReport {
    /// max |Q** - Q| over the grid, Q(s) = P(-s).
    pub max_gap: f64,
    /// Pointwise allowance: 2 x (grid slack at kinks + uncertainty).
    pub max_allowed: f64,
    pub ok: bool,
    /// max |α L(α) - (P(t) + α t)| over matched interior points.
    pub pairing_residual: f64,
}

/// Double Legendre conjugation of s -> P(-s) must reproduce the (convex)
/// curve up to grid slack; plus the α L(α) pairing identity at matched
/// slopes.
pub fn legendre_pair_check(curve: &PressureCurve) -> LegendreReport {
    let n = curve.grid.len();
    let h = curve.step();
    // Q on the mirrored grid, ascending in s.
    let s_grid: Vec<f64> = curve.grid.iter().rev().map(|&t| -t).collect();
    let q: Vec<f64> = curve.values.iter().rev().copied().collect();

    // Slope range of Q.
    let mut smin = f64::INFINITY;
    let mut smax = f64::NEG_INFINITY;
    for i in 0..n - 1 {
        let sl = (q[i + 1] - q[i]) / (s_grid[i + 1] - s_grid[i]);
        smin = smin.min(sl);
        smax = smax.max(sl);
    }
    if smin > smax {
        smin = 0.0;
        smax = 0.0;
    }
    let pad = 1e-6 + 0.01 * (smax - smin).abs();
    let m = (4 * n).max(64);
    let y_grid: Vec<f64> = (0..=m)
        .map(|i| smin - pad + (smax - smin + 2.0 * pad) * i as f64 / m as f64)
        .collect();

    // Q*(y) = sup_s (s y - Q(s)); Q**(s) = sup_y (s y - Q*(y)).
    let conj: Vec<f64> = y_grid
        .iter()
        .map(|&y| {
            s_grid
                .iter()
                .zip(&q)
                .map(|(&s, &qv)| s * y - qv)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut max_gap = 0.0f64;
    for (i, &s) in s_grid.iter().enumerate() {
        let qss = y_grid
            .iter()
            .zip(&conj)
            .map(|(&y, &qs)| s * y - qs)
            .fold(f64::NEG_INFINITY, f64::max);
        max_gap = max_gap.max((qss - q[i]).abs());
    }

    // Allowance: twice the worst kink slack plus uncertainty.
    let mut max_allowed = 0.0f64;
    for i in 1..n - 1 {
        let sl = (curve.values[i] - curve.values[i - 1]) / h;
        let sr = (curve.values[i + 1] - curve.values[i]) / h;
        let allowance = 2.0 * (h * (sr - sl).abs() + curve.uncertainty[i]) + 1e-9;
        max_allowed = max_allowed.max(allowance);
    }
    max_allowed = max_allowed.max(2.0 * curve.uncertainty[0] + 1e-9);

    // Pairing identity at matched interior slopes.
    let mut pairing_residual = 0.0f64;
    for i in 1..n - 1 {
        let t = curve.grid[i];
        if let Ok((l, r)) = curve.derivative(t) {
            let alpha = -(l + r) * 0.5;
            if alpha > 1e-9 {
                if let Ok(sample) = lyapunov_spectrum(curve, alpha) {
                    if let (Some(val), Some(tm)) = (sample.value, sample.minimizer_t) {
                        if let Ok(p) = curve.interp(tm) {
                            let lhs = alpha * val;
                            let rhs = p + alpha * tm;
                            pairing_residual = pairing_residual.max((lhs - rhs).abs());
                        }
                    }
                }
            }
        }
    }

    LegendreReport {
        max_gap,
        max_allowed,
        ok: max_gap <= max_allowed,
        pairing_residual,
    }
}

/// Convenience: treat `(t_minus, t_plus)` as unavailable in synthetic
/// curves by substituting the full grid.
pub fn with_full_phase(curve: &PressureCurve) -> PressureCurve {
    let mut c = curve.clone();
    c.t_minus = ExtReal::MinusInfinity;
    c.t_plus = ExtReal::PlusInfinity;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::grid_range;

    const LN2: f64 = std::f64::consts::LN_2;

    fn power_curve() -> PressureCurve {
        let grid = grid_range(-3.0, 3.0, 0.1);
        let vals: Vec<f64> = grid.iter().map(|t| (1.0 - t) * LN2).collect();
        let unc = vec![1e-9; grid.len()];
        PressureCurve::from_samples(grid, vals, unc)
    }

    fn chebyshev_curve() -> PressureCurve {
        let grid = grid_range(-3.0, 3.0, 0.1);
        let vals: Vec<f64> = grid
            .iter()
            .map(|t| ((1.0 - t) * LN2).max(-2.0 * t * LN2))
            .collect();
        let unc = vec![1e-9; grid.len()];
        PressureCurve::from_samples(grid, vals, unc)
    }

    #[test]
    fn lyapunov_power_map() {
        let curve = power_curve();
        // α = ln 2: inf of the constant ln 2, L = 1.
        let s = lyapunov_spectrum(&curve, LN2).unwrap();
        assert!((s.value.unwrap() - 1.0).abs() < 1e-9);
        // α far from the single slope: degenerate.
        let s2 = lyapunov_spectrum(&curve, 2.0 * LN2).unwrap();
        assert_eq!(s2.tag, SampleTag::Degenerate);
        assert!(s2.value.is_none());
    }

    #[test]
    fn lyapunov_chebyshev_values() {
        let curve = chebyshev_curve();
        let at_ln2 = lyapunov_spectrum(&curve, LN2).unwrap();
        assert!((at_ln2.value.unwrap() - 1.0).abs() < 0.02, "L(ln 2) = 1");
        let at_2ln2 = lyapunov_spectrum(&curve, 2.0 * LN2).unwrap();
        assert!(at_2ln2.value.unwrap().abs() < 0.02, "L(2 ln 2) = 0");
        assert_eq!(at_2ln2.tag, SampleTag::Boundary);
    }

    #[test]
    fn dimension_chebyshev_values() {
        let curve = chebyshev_curve();
        let d1 = dimension_spectrum(&curve, 1.0, LN2).unwrap();
        assert!((d1.value.unwrap() - 1.0).abs() < 0.02, "D(1) = 1");
        let dhalf = dimension_spectrum(&curve, 0.5, LN2).unwrap();
        assert!(dhalf.value.unwrap().abs() < 0.02, "D(1/2) = 0");
    }

    #[test]
    fn dimension_power_map() {
        let curve = power_curve();
        let d1 = dimension_spectrum(&curve, 1.0, LN2).unwrap();
        assert!((d1.value.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integral_means_values() {
        let power = power_curve();
        for t in [-2.0, -0.5, 0.0, 1.0, 2.5] {
            let b = integral_means_spectrum(&power, t, LN2).unwrap();
            assert!(b.abs() < 1e-9, "power map integral means vanish");
        }
        let cheb = chebyshev_curve();
        assert!(integral_means_spectrum(&cheb, 1.0, LN2).unwrap().abs() < 1e-9);
        let at_m2 = integral_means_spectrum(&cheb, -2.0, LN2).unwrap();
        assert!((at_m2 - 1.0).abs() < 1e-9, "β(-2) = 4ln2/ln2 - 3 = 1");
    }

    #[test]
    fn chi_star_range_power_vs_chebyshev() {
        let power = with_full_phase(&power_curve());
        let r = chi_star_range(&power).unwrap();
        assert!(r.degenerate);
        assert!((r.chi_star_inf - LN2).abs() < 1e-9);

        let mut cheb = chebyshev_curve();
        cheb.t_minus = ExtReal::Finite(-1.0);
        cheb.t_plus = ExtReal::PlusInfinity;
        let rc = chi_star_range(&cheb).unwrap();
        // Interior of (-1, ∞): only the slope ln 2 phase; degenerate with
        // a kink note carried by the caller.
        assert!(rc.degenerate);
        assert!((rc.chi_star_inf - LN2).abs() < 0.02);
    }

    #[test]
    fn empty_interval_errors() {
        let mut curve = power_curve();
        curve.t_minus = ExtReal::Finite(2.95);
        curve.t_plus = ExtReal::Finite(3.0);
        assert!(matches!(
            chi_star_range(&curve),
            Err(CoreError::EmptyInterval)
        ));
    }

    #[test]
    fn legendre_double_conjugation() {
        let power = power_curve();
        let rep = legendre_pair_check(&power);
        assert!(rep.ok, "affine: gap {} <= {}", rep.max_gap, rep.max_allowed);
        assert!(rep.max_gap < 1e-9);
        assert!(rep.pairing_residual < 1e-9);

        let cheb = chebyshev_curve();
        let rep2 = legendre_pair_check(&cheb);
        assert!(
            rep2.ok,
            "two-phase: gap {} <= {}",
            rep2.max_gap, rep2.max_allowed
        );
    }
}
