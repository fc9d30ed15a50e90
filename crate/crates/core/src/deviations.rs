//! Weighted preimage ensembles and level-1 large-deviation readings: the
//! Gibbs ensemble ω_n at inverse temperature t0, its mean Lyapunov
//! observable, the scaled moment generating function, the analytic rate
//! function read off the pressure curve, and empirical tail masses.

use rayon::prelude::*;

use crate::backward::{backward_tree, BackTree, Metric, TreeConfig, TreeMode};
use crate::error::{CoreError, Result};
use crate::map::MapSpec;
use crate::numerics::{log_sum_exp, stable_sum};
use crate::point::CPoint;
use crate::pressure::PressureCurve;

#[derive(Debug, Clone)]
pub struct Atom {
    pub point: CPoint,
    /// ln of the normalized weight.
    pub log_weight: f64,
    /// (1/n) Σ ln |f'| along the forward path to the base point.
    pub birkhoff: f64,
    /// n * birkhoff, kept unscaled for exact reweighting.
    pub log_deriv: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    pub base: CPoint,
    pub t0: f64,
    pub depth: usize,
    pub metric: Metric,
    pub atoms: Vec<Atom>,
    /// ln Σ_x |(f^n)'(x)|^{-t0} over the tree (the Gibbs normalizer).
    pub log_normalizer: f64,
    pub warnings: Vec<String>,
}

/// Gibbs-weighted preimage measure at inverse temperature t0 over the
/// depth-n backward tree of x0.
pub fn omega_ensemble(
    map: &MapSpec,
    x0: &CPoint,
    t0: f64,
    n: usize,
    mode: TreeMode,
    metric: Metric,
    cfg: &TreeConfig,
) -> Result<WeightedEnsemble> {
    let mut warnings = Vec::new();
    // Genericity advisory: x0 should stay away from critical orbits.
    if let Ok(crit) = map.critical_points() {
        'outer: for cp in &crit.points {
            for z in cp.orbit.iter().take(64) {
                if z.approx_eq(x0, 1e-6) {
                    warnings.push(format!(
                        "base point sits near the orbit of critical point {:?}",
                        cp.point.finite()
                    ));
                    break 'outer;
                }
            }
        }
    }
    let tree = backward_tree(map, x0, n, mode, metric, cfg)?;
    ensemble_from_tree(&tree, t0, warnings)
}

pub fn ensemble_from_tree(
    tree: &BackTree,
    t0: f64,
    mut warnings: Vec<String>,
) -> Result<WeightedEnsemble> {
    let n = tree.depth;
    let leaves = tree.leaves();
    let mut dropped = 0usize;
    let unnorm: Vec<(usize, f64)> = leaves
        .iter()
        .enumerate()
        .filter_map(|(i, leaf)| {
            if leaf.acc_log_deriv == f64::NEG_INFINITY {
                dropped += 1;
                return None;
            }
            Some((i, leaf.log_weight - t0 * leaf.acc_log_deriv))
        })
        .collect();
    if unnorm.is_empty() {
        return Err(CoreError::RootSolverFailure(
            "ensemble has no usable atoms".into(),
        ));
    }
    if dropped > 0 {
        warnings.push(format!("{dropped} degenerate leaves dropped"));
    }
    let log_z = log_sum_exp(unnorm.iter().map(|u| u.1));
    let atoms: Vec<Atom> = unnorm
        .into_iter()
        .map(|(i, lw)| {
            let leaf = &leaves[i];
            Atom {
                point: leaf.point,
                log_weight: lw - log_z,
                birkhoff: leaf.acc_log_deriv / n as f64,
                log_deriv: leaf.acc_log_deriv,
            }
        })
        .collect();
    Ok(WeightedEnsemble {
        base: tree.root,
        t0,
        depth: n,
        metric: tree.metric,
        atoms,
        log_normalizer: log_z,
        warnings,
    })
}

impl WeightedEnsemble {
    /// Σ w_x exactly 1 up to compensated rounding.
    pub fn total_weight(&self) -> f64 {
        stable_sum(self.atoms.iter().map(|a| a.log_weight.exp()))
    }

    /// Σ w_x (1/n) ln |(f^n)'(x)|: the equilibrium exponent estimate
    /// -P'(t0).
    pub fn mean_log_derivative(&self) -> f64 {
        stable_sum(self.atoms.iter().map(|a| a.log_weight.exp() * a.birkhoff))
    }

    /// (1/n) ln Σ w_x |(f^n)'(x)|^s -> P(t0 - s) - P(t0).
    pub fn mgf_rate(&self, s: f64) -> f64 {
        let terms: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.log_weight + s * a.log_deriv)
            .collect();
        log_sum_exp(terms.iter().copied()) / self.depth as f64
    }

    /// ω_n-mass of the deviation event. `upper`: birkhoff > threshold;
    /// otherwise birkhoff < threshold.
    pub fn tail_probability(&self, threshold: f64, upper: bool) -> f64 {
        stable_sum(self.atoms.iter().filter_map(|a| {
            let hit = if upper {
                a.birkhoff > threshold
            } else {
                a.birkhoff < threshold
            };
            hit.then(|| a.log_weight.exp())
        }))
    }

    /// ln of the tail mass (for rates; -inf when the event is empty).
    pub fn log_tail_probability(&self, threshold: f64, upper: bool) -> f64 {
        let terms: Vec<f64> = self
            .atoms
            .iter()
            .filter_map(|a| {
                let hit = if upper {
                    a.birkhoff > threshold
                } else {
                    a.birkhoff < threshold
                };
                hit.then_some(a.log_weight)
            })
            .collect();
        log_sum_exp(terms.iter().copied())
    }
}

/// Convenience wrapper matching the operation signature.
pub fn mgf_rate(
    map: &MapSpec,
    x0: &CPoint,
    t0: f64,
    s: f64,
    n: usize,
    metric: Metric,
    cfg: &TreeConfig,
) -> Result<f64> {
    let ens = omega_ensemble(map, x0, t0, n, TreeMode::Exact, metric, cfg)?;
    Ok(ens.mgf_rate(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationSide {
    Upper,
    Lower,
}

/// Level-1 rate at deviation size `eps` around t0:
/// P(t(ε)) - P(t0) - (t(ε) - t0) P'(t(ε)), with t(ε) solved from
/// P'(t(ε)) = P'(t0) ∓ ε on the convexified curve. The result is the
/// negative Bregman gap, hence always <= 0 and decreasing in ε.
pub fn rate_function(curve: &PressureCurve, t0: f64, eps: f64, side: DeviationSide) -> Result<f64> {
    assert!(eps > 0.0, "deviation size must be positive");
    let (l0, r0) = curve.derivative(t0)?;
    let p_t0 = curve.interp(t0)?;
    let slope0 = 0.5 * (l0 + r0);

    // Strict-convexity gate near t0: an affine stretch has no t(ε) at all.
    // Probe at a fixed h = 0.25 when the grid allows (finer steps would
    // blow the noise term 2 unc / h^2 past any genuine curvature), with a
    // floor separating desk-scale curvature from affine-phase residue.
    let h = if t0 - 0.25 >= curve.t_min() && t0 + 0.25 <= curve.t_max() {
        0.25
    } else {
        2.0 * curve.step()
    };
    let dd = curve.second_difference(t0, h).unwrap_or(0.0);
    let unc = curve.uncertainty_at(t0)?;
    let dd_threshold = (2.0 * unc.max(1e-9) / (h * h)).max(2.5e-3);
    if dd <= dd_threshold {
        return Err(CoreError::SlopeUnattainable(match side {
            DeviationSide::Upper => slope0 - eps,
            DeviationSide::Lower => slope0 + eps,
        }));
    }

    let target = match side {
        DeviationSide::Upper => slope0 - eps,
        DeviationSide::Lower => slope0 + eps,
    };

    // Segment slopes of the convex curve are non-decreasing; find where
    // the target slope lives.
    let n = curve.grid.len();
    let slopes: Vec<f64> = (0..n - 1)
        .map(|i| (curve.values[i + 1] - curve.values[i]) / (curve.grid[i + 1] - curve.grid[i]))
        .collect();
    let smin = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if target < smin - 1e-12 || target > smax + 1e-12 {
        return Err(CoreError::SlopeUnattainable(target));
    }

    // Either the target sits inside a segment's slope (rate constant over
    // the segment) or between two segments (vertex with the target as a
    // subgradient).
    let mut t_eps = None;
    for i in 0..n - 1 {
        if (slopes[i] - target).abs() <= 1e-12 {
            t_eps = Some(0.5 * (curve.grid[i] + curve.grid[i + 1]));
            break;
        }
        if i + 1 < n - 1 && slopes[i] < target && target < slopes[i + 1] {
            t_eps = Some(curve.grid[i + 1]);
            break;
        }
    }
    let t_eps = t_eps.ok_or(CoreError::SlopeUnattainable(target))?;
    if (t_eps - t0).abs() < 1e-9 {
        // The target slope is a subgradient at t0 itself: zero Bregman gap.
        return Ok(0.0);
    }

    let p_te = curve.interp(t_eps)?;
    Ok(p_te - p_t0 - (t_eps - t0) * target)
}

/// Attainable ε ranges for the two deviation sides, from the measured χ*
/// slope range: (0, -P'(t0) - χ*_inf) upward, (0, χ*_sup + P'(t0))
/// downward.
pub fn attainable_eps(curve: &PressureCurve, t0: f64) -> Result<(f64, f64)> {
    let range = crate::spectra::chi_star_range(curve)?;
    let (l0, r0) = curve.derivative(t0)?;
    let p = 0.5 * (l0 + r0);
    Ok((
        (-p - range.chi_star_inf).max(0.0),
        (range.chi_star_sup + p).max(0.0),
    ))
}

/// Deterministic parallel helper used by the artifact writer: rates for a
/// batch of (s) values.
pub fn mgf_curve(ens: &WeightedEnsemble, s_values: &[f64]) -> Vec<f64> {
    s_values.par_iter().map(|&s| ens.mgf_rate(s)).collect()
}
