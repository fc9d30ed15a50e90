//! Backward-orbit trees and the estimators living on them: the tree
//! pressure, extremal derivative rates, and the spherical sup-derivative
//! rate.
//!
//! Exact trees enumerate every inverse branch level by level (level j has
//! d^j nodes with multiplicity); sampled trees draw uniform backward paths
//! with weight d^n / k so that weighted leaf sums are unbiased estimators
//! of the exact sums. Log-weights are used throughout.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::map::MapSpec;
use crate::numerics::log_sum_exp;
use crate::point::{cmp_key, CPoint};
use crate::poly::{poly_roots, RootConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Spherical,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeMode {
    Exact,
    Sampled { paths: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub point: CPoint,
    /// Index of the parent in the previous level; the root has none.
    pub parent: u32,
    /// Which preimage (in deterministic sorted order) this node is.
    pub branch: u8,
    /// ln of the path multiplicity (exact) or ln of the sampling weight
    /// contribution carried by this node's subtree path (sampled).
    pub log_weight: f64,
    /// ln |f'| at this node in the tree metric (step toward the parent).
    pub step_log_deriv: f64,
    /// Σ step_log_deriv along the path to the root = ln |(f^n)'| at this
    /// node, where n is the node's level.
    pub acc_log_deriv: f64,
    /// Set when the parent was a critical value and this preimage carries
    /// multiplicity > 1 (derivative modulus 0 at a critical preimage).
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct BackTree {
    pub root: CPoint,
    pub depth: usize,
    pub mode: TreeMode,
    pub metric: Metric,
    /// `levels[0]` is the root alone.
    pub levels: Vec<Vec<TreeNode>>,
    pub degree: usize,
    /// Count of nodes flagged degenerate (critical-value collisions).
    pub degenerate_nodes: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeConfig {
    /// Exact-mode cap on the total node count.
    pub node_budget: usize,
    pub root_cfg: RootConfig,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            node_budget: 10_000_000,
            root_cfg: RootConfig::default(),
        }
    }
}

/// All solutions of f(w) = z with multiplicities summing to deg f.
/// Sorted deterministically (infinity first, then by (re, im)).
pub fn preimages(map: &MapSpec, z: &CPoint, cfg: &RootConfig) -> Result<Vec<(CPoint, usize)>> {
    let d = map.degree();
    // v0 P(w) - u0 Q(w) = 0
    let r = map
        .numerator()
        .scale(z.v())
        .sub(&map.denominator().scale(z.u()));
    let mut out: Vec<(CPoint, usize)> = Vec::new();
    let mut finite_mult = 0usize;
    if !r.is_constant() {
        for (root, mult) in poly_roots(&r, cfg)? {
            finite_mult += mult;
            out.push((CPoint::from_complex(root), mult));
        }
    }
    if finite_mult < d {
        out.push((CPoint::infinity(), d - finite_mult));
    }
    out.sort_by(|a, b| cmp_key(&a.0, &b.0));
    Ok(out)
}

fn step_log_deriv(map: &MapSpec, w: &CPoint, metric: Metric) -> Result<f64> {
    let m = map.derivative_modulus(w, metric)?;
    Ok(if m > 0.0 { m.ln() } else { f64::NEG_INFINITY })
}

/// Build a backward-orbit tree rooted at z0.
pub fn backward_tree(
    map: &MapSpec,
    z0: &CPoint,
    depth: usize,
    mode: TreeMode,
    metric: Metric,
    cfg: &TreeConfig,
) -> Result<BackTree> {
    match mode {
        TreeMode::Exact => exact_tree(map, z0, depth, metric, cfg),
        TreeMode::Sampled { paths, seed } => {
            assert!(paths >= 1, "sampled mode needs at least one path");
            sampled_tree(map, z0, depth, paths, seed, metric, cfg)
        }
    }
}

fn exact_tree(
    map: &MapSpec,
    z0: &CPoint,
    depth: usize,
    metric: Metric,
    cfg: &TreeConfig,
) -> Result<BackTree> {
    let d = map.degree() as f64;
    let mut expected = 1f64;
    let mut total = 1f64;
    for _ in 0..depth {
        expected *= d;
        total += expected;
        if total > cfg.node_budget as f64 {
            return Err(CoreError::BudgetExceeded(format!(
                "exact tree of depth {depth} needs ~{total:.0} nodes, cap {}",
                cfg.node_budget
            )));
        }
    }

    let root = TreeNode {
        point: *z0,
        parent: 0,
        branch: 0,
        log_weight: 0.0,
        step_log_deriv: 0.0,
        acc_log_deriv: 0.0,
        degenerate: false,
    };
    let mut levels = vec![vec![root]];
    let mut degenerate_nodes = 0usize;

    for _ in 0..depth {
        let prev = levels.last().unwrap();
        let children: Vec<Vec<TreeNode>> = prev
            .par_iter()
            .enumerate()
            .map(|(pi, parent)| {
                let pres = preimages(map, &parent.point, &cfg.root_cfg)?;
                let mut out = Vec::with_capacity(map.degree());
                for (bi, (w, mult)) in pres.into_iter().enumerate() {
                    let step = step_log_deriv(map, &w, metric)?;
                    out.push(TreeNode {
                        point: w,
                        parent: pi as u32,
                        branch: bi as u8,
                        log_weight: parent.log_weight + (mult as f64).ln(),
                        step_log_deriv: step,
                        acc_log_deriv: parent.acc_log_deriv + step,
                        degenerate: parent.degenerate || mult > 1,
                    });
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let flat: Vec<TreeNode> = children.into_iter().flatten().collect();
        degenerate_nodes += flat.iter().filter(|n| n.degenerate).count();
        levels.push(flat);
    }

    Ok(BackTree {
        root: *z0,
        depth,
        mode: TreeMode::Exact,
        metric,
        levels,
        degree: map.degree(),
        degenerate_nodes,
    })
}

fn sampled_tree(
    map: &MapSpec,
    z0: &CPoint,
    depth: usize,
    paths: usize,
    seed: u64,
    metric: Metric,
    cfg: &TreeConfig,
) -> Result<BackTree> {
    let d = map.degree() as f64;
    // Weight of each leaf: d^depth / paths, stored in logs. Interior
    // nodes carry weight 0 mass; only leaves enter estimators, so the
    // per-level structure just records the paths.
    let log_leaf_weight = depth as f64 * d.ln() - (paths as f64).ln();

    let walked: Vec<Vec<TreeNode>> = (0..paths)
        .into_par_iter()
        .map(|pi| {
            // Counter-based stream: one independent generator per path, so
            // results do not depend on scheduling.
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(pi as u64 + 1)),
            );
            let mut nodes = Vec::with_capacity(depth);
            let mut current = *z0;
            let mut acc = 0.0f64;
            for _ in 0..depth {
                let pres = preimages(map, &current, &cfg.root_cfg)?;
                // Choose proportionally to multiplicity.
                let total: usize = pres.iter().map(|p| p.1).sum();
                let mut pick = rng.gen_range(0..total);
                let mut chosen = 0usize;
                for (idx, (_, mult)) in pres.iter().enumerate() {
                    if pick < *mult {
                        chosen = idx;
                        break;
                    }
                    pick -= mult;
                }
                let (w, mult) = pres[chosen];
                let step = step_log_deriv(map, &w, metric)?;
                acc += step;
                nodes.push(TreeNode {
                    point: w,
                    parent: pi as u32,
                    branch: chosen as u8,
                    log_weight: log_leaf_weight,
                    step_log_deriv: step,
                    acc_log_deriv: acc,
                    degenerate: mult > 1,
                });
                current = w;
            }
            Ok(nodes)
        })
        .collect::<Result<_>>()?;

    let root = TreeNode {
        point: *z0,
        parent: 0,
        branch: 0,
        log_weight: 0.0,
        step_log_deriv: 0.0,
        acc_log_deriv: 0.0,
        degenerate: false,
    };
    let mut levels = vec![vec![root]];
    for level in 0..depth {
        levels.push(walked.iter().map(|path| path[level].clone()).collect());
    }
    let degenerate_nodes = levels
        .iter()
        .skip(1)
        .flat_map(|l| l.iter())
        .filter(|n| n.degenerate)
        .count();

    Ok(BackTree {
        root: *z0,
        depth,
        mode: TreeMode::Sampled { paths, seed },
        metric,
        levels,
        degree: map.degree(),
        degenerate_nodes,
    })
}

impl BackTree {
    pub fn leaves(&self) -> &[TreeNode] {
        self.levels.last().unwrap()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, TreeMode::Exact)
    }

    /// ln Σ_leaves weight · |(f^n)'|^{-t} at the given level (defaults to
    /// the deepest). Degenerate leaves (derivative 0 somewhere on the
    /// path) are dropped for t > 0 and counted; they contribute exact
    /// zeros for t <= 0.
    pub fn log_level_sum(&self, level: usize, t: f64) -> (f64, usize) {
        let nodes = &self.levels[level];
        let mut skipped = 0usize;
        let terms: Vec<f64> = nodes
            .iter()
            .filter_map(|n| {
                if n.acc_log_deriv == f64::NEG_INFINITY {
                    if t > 0.0 {
                        skipped += 1;
                    }
                    return None; // zero mass either way
                }
                Some(n.log_weight - t * n.acc_log_deriv)
            })
            .collect();
        (log_sum_exp(terms.iter().copied()), skipped)
    }

    /// Branch word of a node (level, index): child ordinals from the root.
    pub fn word(&self, level: usize, index: usize) -> Vec<u8> {
        match self.mode {
            // Sampled levels are parallel arrays indexed by path.
            TreeMode::Sampled { .. } => (1..=level)
                .map(|li| self.levels[li][index].branch)
                .collect(),
            TreeMode::Exact => {
                let mut out = Vec::with_capacity(level);
                let mut li = level;
                let mut idx = index;
                while li > 0 {
                    let node = &self.levels[li][idx];
                    out.push(node.branch);
                    idx = node.parent as usize;
                    li -= 1;
                }
                out.reverse();
                out
            }
        }
    }
}

/// (1/n) ln Λ_n(z0, t): the finite-depth tree pressure. The derivative in
/// the summand is evaluated at the preimage w along each branch.
pub fn tree_pressure_estimate(tree: &BackTree, t: f64) -> f64 {
    assert!(tree.depth >= 1, "tree pressure needs depth >= 1");
    let (ls, _) = tree.log_level_sum(tree.depth, t);
    ls / tree.depth as f64
}

/// ((1/n) min, (1/n) max) of the accumulated log-derivative over leaves.
/// Exact trees only; leaves with an exact zero derivative are excluded
/// (they would pin the minimum at -inf).
pub fn extremal_derivative_rates(tree: &BackTree) -> Result<(f64, f64)> {
    if !tree.is_exact() {
        return Err(CoreError::SampledTreeUnsupported);
    }
    let n = tree.depth as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for node in tree.leaves() {
        if node.acc_log_deriv == f64::NEG_INFINITY {
            continue;
        }
        lo = lo.min(node.acc_log_deriv);
        hi = hi.max(node.acc_log_deriv);
    }
    Ok((lo / n, hi / n))
}

/// Estimate (1/n) ln sup_z |(f^n)'(z)| in the spherical metric: coarse
/// Fibonacci-sphere grid plus repelling periodic points of small period
/// as seeds (the sup rides orbits shadowing the strongest cycles, which
/// blind grid search cannot hit), then coordinate ascent with shrinking
/// steps from the best seeds.
pub fn sup_derivative_rate(map: &MapSpec, n: usize, grid_size: usize) -> f64 {
    assert!(n >= 1);
    let rate = |z: &CPoint| -> f64 {
        let mut acc = 0.0;
        let mut w = *z;
        for _ in 0..n {
            let d = map.spherical_derivative(&w);
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += d.ln();
            w = map.evaluate(&w);
        }
        acc / n as f64
    };

    // Fibonacci sphere in stereographic coordinates.
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let mut seeds: Vec<(f64, CPoint)> = (0..grid_size.max(8))
        .map(|i| {
            let frac = (i as f64 + 0.5) / grid_size.max(8) as f64;
            let cos_theta = 1.0 - 2.0 * frac;
            let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
            // Stereographic projection from the north pole.
            let denom = 1.0 - cos_theta;
            let p = if denom.abs() < 1e-12 {
                CPoint::infinity()
            } else {
                CPoint::from_complex(Complex64::new(
                    sin_theta * phi.cos() / denom,
                    sin_theta * phi.sin() / denom,
                ))
            };
            (rate(&p), p)
        })
        .collect();
    let periodic_cfg = crate::periodic::PeriodicConfig::default();
    for m in 1..=3usize {
        if let Ok(orbits) = crate::periodic::find_periodic_points(map, m, &periodic_cfg) {
            for orbit in orbits.iter().filter(|o| o.is_repelling()) {
                for p in &orbit.points {
                    seeds.push((rate(p), *p));
                }
            }
        }
    }
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
    seeds.truncate(12);

    let mut best = seeds.first().map(|s| s.0).unwrap_or(f64::NEG_INFINITY);
    for (_, seed) in seeds {
        // Ascend in the chart where the point is comfortably finite.
        let mut z = match seed.finite() {
            Some(z) if z.norm() <= 2.0 => (z, false),
            Some(z) => (1.0 / z, true),
            None => (Complex64::new(0.0, 0.0), true),
        };
        let eval_chart = |w: Complex64, inverted: bool| -> f64 {
            let p = if inverted {
                if w.norm() < 1e-14 {
                    CPoint::infinity()
                } else {
                    CPoint::from_complex(1.0 / w)
                }
            } else {
                CPoint::from_complex(w)
            };
            rate(&p)
        };
        let mut step = 0.1;
        let mut value = eval_chart(z.0, z.1);
        while step > 1e-10 {
            let mut improved = false;
            for dir in [
                Complex64::new(step, 0.0),
                Complex64::new(-step, 0.0),
                Complex64::new(0.0, step),
                Complex64::new(0.0, -step),
            ] {
                let candidate = z.0 + dir;
                let v = eval_chart(candidate, z.1);
                if v > value {
                    value = v;
                    z.0 = candidate;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(value);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn preimages_of_square() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let pre = preimages(
            &f,
            &CPoint::from_complex(c(1.0, 0.0)),
            &RootConfig::default(),
        )
        .unwrap();
        assert_eq!(pre.len(), 2);
        assert!(pre.iter().all(|p| p.1 == 1));
        let mut vals: Vec<f64> = pre.iter().map(|p| p.0.finite().unwrap().re).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preimages_of_chebyshev_critical_value() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        // f(w) = -2 has the double root w = 0.
        let pre = preimages(
            &f,
            &CPoint::from_complex(c(-2.0, 0.0)),
            &RootConfig::default(),
        )
        .unwrap();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].1, 2);
        assert!(pre[0].0.approx_eq(&CPoint::zero(), 1e-9));

        let pre2 = preimages(
            &f,
            &CPoint::from_complex(c(2.0, 0.0)),
            &RootConfig::default(),
        )
        .unwrap();
        let mut vals: Vec<f64> = pre2.iter().map(|p| p.0.finite().unwrap().re).collect();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 2.0).abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn preimage_of_infinity_for_polynomial() {
        let f = MapSpec::quadratic(c(0.3, 0.0));
        let pre = preimages(&f, &CPoint::infinity(), &RootConfig::default()).unwrap();
        assert_eq!(pre.len(), 1);
        assert!(pre[0].0.is_infinity());
        assert_eq!(pre[0].1, 2);
    }

    #[test]
    fn exact_tree_shape_and_multiplicity() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(1.0, 0.0)),
            3,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        assert_eq!(tree.leaves().len(), 8);
        // Every leaf of the power map lies on the unit circle.
        for leaf in tree.leaves() {
            assert!((leaf.point.finite().unwrap().norm() - 1.0).abs() < 1e-10);
        }
        // Children map to their parents.
        for level in 1..=3usize {
            for node in &tree.levels[level] {
                let fz = f.evaluate(&node.point);
                let parent = &tree.levels[level - 1][node.parent as usize];
                assert!(fz.approx_eq(&parent.point, 1e-9));
            }
        }
    }

    #[test]
    fn chebyshev_depth2_leaves_are_real() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(0.3, 0.0)),
            2,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        assert_eq!(tree.leaves().len(), 4);
        // Closed form: ±sqrt(±sqrt(2.3) + 2).
        let s = 2.3f64.sqrt();
        let mut expected = vec![
            (s + 2.0).sqrt(),
            -(s + 2.0).sqrt(),
            (2.0 - s).sqrt(),
            -(2.0 - s).sqrt(),
        ];
        expected.sort_by(f64::total_cmp);
        let mut got: Vec<f64> = tree
            .leaves()
            .iter()
            .map(|n| n.point.finite().unwrap().re)
            .collect();
        got.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-10);
            assert!(g.abs() <= 2.0 + 1e-12);
        }
        for leaf in tree.leaves() {
            assert!(leaf.point.finite().unwrap().im.abs() < 1e-10);
        }
    }

    #[test]
    fn tree_pressure_power_map() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let z0 = CPoint::from_complex(c(0.7, 0.3));
        let tree = backward_tree(
            &f,
            &z0,
            8,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        // t = 0: exactly ln 2 whatever the root.
        assert!((tree_pressure_estimate(&tree, 0.0) - LN2).abs() < 1e-12);

        // t = 1 at a root on the circle: exactly 0.
        let tree1 = backward_tree(
            &f,
            &CPoint::from_complex(c(1.0, 0.0)),
            6,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        assert!(tree_pressure_estimate(&tree1, 1.0).abs() < 1e-10);
    }

    #[test]
    fn tree_pressure_chebyshev_positive_phase() {
        // Depth 14, t = 1/2: within 0.05 of (1 - 1/2) ln 2.
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(0.3, 0.0)),
            14,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        let est = tree_pressure_estimate(&tree, 0.5);
        assert!(
            (est - 0.5 * LN2).abs() < 0.05,
            "estimate {est} vs {}",
            0.5 * LN2
        );
    }

    #[test]
    fn sampled_tree_on_power_map_has_zero_variance() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(1.0, 0.0)),
            10,
            TreeMode::Sampled {
                paths: 100,
                seed: 7,
            },
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        // Weighted leaf count estimates 2^10 exactly (all weights equal).
        let (ls, _) = tree.log_level_sum(10, 0.0);
        assert!((ls - (1024f64).ln()).abs() < 1e-10);
        for leaf in tree.leaves() {
            assert!((leaf.log_weight - (1024f64 / 100.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn extremal_rates_power_map() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(1.0, 0.0)),
            8,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        let (lo, hi) = extremal_derivative_rates(&tree).unwrap();
        assert!((lo - LN2).abs() < 1e-10 && (hi - LN2).abs() < 1e-10);
    }

    #[test]
    fn extremal_rates_chebyshev() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(0.3, 0.0)),
            14,
            TreeMode::Exact,
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        let (lo, hi) = extremal_derivative_rates(&tree).unwrap();
        // Max rate approaches 2 ln 2 (orbit of the fixed point 2);
        // min rate stays near the a.c.i.m. exponent ln 2.
        assert!((hi - 2.0 * LN2).abs() < 0.15, "max rate {hi}");
        assert!(lo <= LN2 + 0.15, "min rate {lo}");
        assert!(lo <= hi);
    }

    #[test]
    fn sampled_rejects_extremal() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let tree = backward_tree(
            &f,
            &CPoint::from_complex(c(1.0, 0.0)),
            5,
            TreeMode::Sampled { paths: 10, seed: 1 },
            Metric::Euclidean,
            &TreeConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            extremal_derivative_rates(&tree),
            Err(CoreError::SampledTreeUnsupported)
        ));
    }

    #[test]
    fn sup_rate_power_map() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        // n = 1: the spherical derivative 2r(1+r^2)/(1+r^4) peaks at r = 1
        // with value 2. Cross-check the oracle by brute scan.
        let brute = (0..20000)
            .map(|i| {
                let r = 1e-3 + i as f64 * 2e-4;
                2.0 * r * (1.0 + r * r) / (1.0 + r.powi(4))
            })
            .fold(f64::MIN, f64::max);
        assert!((brute - 2.0).abs() < 1e-4);

        let got1 = sup_derivative_rate(&f, 1, 400);
        assert!((got1 - LN2).abs() < 1e-6, "n=1: {got1}");
        let got8 = sup_derivative_rate(&f, 8, 400);
        assert!((got8 - LN2).abs() < 1e-3, "n=8: {got8}");
    }

    #[test]
    fn sup_rate_chebyshev() {
        // (1/n) ln M_n is always >= chi_sup = 2 ln 2 and decreases toward
        // it; at n = 10 the genuine sup still carries a last-step boost of
        // roughly ln(2.1)/10.
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let got10 = sup_derivative_rate(&f, 10, 600);
        assert!(got10 >= 2.0 * LN2 - 1e-9, "upper estimator: {got10}");
        assert!(got10 - 2.0 * LN2 < 0.2, "n=10: {got10}");
        let got20 = sup_derivative_rate(&f, 20, 600);
        assert!(got20 <= got10 + 1e-9, "decreasing in n");
        assert!((got20 - 2.0 * LN2).abs() < 0.05, "n=20: {got20}");
    }

    #[test]
    fn budget_guard() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let cfg = TreeConfig {
            node_budget: 100,
            ..Default::default()
        };
        assert!(matches!(
            backward_tree(
                &f,
                &CPoint::from_complex(c(1.0, 0.0)),
                10,
                TreeMode::Exact,
                Metric::Euclidean,
                &cfg,
            ),
            Err(CoreError::BudgetExceeded(_))
        ));
    }
}
