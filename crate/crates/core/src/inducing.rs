//! Nice couples, the canonical induced map, and its two-variable pressure.
//!
//! A couple is a pair of concentric round disks (V, V̂) around each Julia
//! critical point. Verification iterates boundary samples forward and
//! tracks the margin to V̂; samples certified to escape (polynomials,
//! beyond the escape radius) are pruned. The certificate is sampled, not
//! rigorous: the report carries the depth up to which the sample density
//! condition (adjacent images within margin/4) actually held.
//!
//! Branch enumeration pulls the couple disks backward over all inverse
//! chains, maintaining per-step enclosure disks with explicit second-order
//! radius bounds and three-way critical-hit classification (hit /
//! uncertain annulus / clear). Canonical branches are the first good
//! times; their derivative sups are boundary-sample maxima (|φ'| attains
//! its maximum on the boundary circle), with the classical Koebe cap
//! recorded alongside as the certified upper bound.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::map::{CriticalData, MapSpec};
use crate::numerics::{linear_fit, log_add_exp, log_sum_exp};
use crate::point::CPoint;
use crate::poly::RootConfig;
use crate::pressure::PressureCurve;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoupleComponent {
    pub label: usize,
    pub center: [f64; 2],
    pub r_v: f64,
    pub r_vhat: f64,
}

impl CoupleComponent {
    pub fn center_c(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NiceCouple {
    pub components: Vec<CoupleComponent>,
    /// Largest L <= cap such that f^l(Crit ∩ J) misses V̂ for l = 1..=L.
    pub l_disjoint: usize,
    pub verification: Option<VerifyReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub accepted: bool,
    pub margin: f64,
    pub checked_depth: usize,
    pub boundary_samples: usize,
    pub escaped_samples: usize,
    /// Depth up to which adjacent active samples stayed within margin/4
    /// of each other; below `checked_depth` the certificate is partial.
    pub density_certified_depth: usize,
    pub fully_certified: bool,
}

#[derive(Debug, Clone)]
pub struct InducingConfig {
    /// Cap on r_V / r_V̂ (Koebe distortion control).
    pub ratio_cap: f64,
    /// Cap when searching the postcritical disjointness horizon L.
    pub l_max: usize,
    /// Inflation factor for the uncertain-univalence annulus.
    pub uncertain_factor: f64,
    /// Boundary samples per component for sup |φ'| evaluation.
    pub sup_samples: usize,
    /// Total chain-node budget for enumeration.
    pub chain_budget: usize,
    pub root_cfg: RootConfig,
}

impl Default for InducingConfig {
    fn default() -> Self {
        Self {
            ratio_cap: 0.5,
            l_max: 32,
            uncertain_factor: 1.5,
            sup_samples: 128,
            chain_budget: 4_000_000,
            root_cfg: RootConfig::default(),
        }
    }
}

/// Round-disk couple candidate centered at the Julia critical points.
pub fn propose_nice_couple(
    _map: &MapSpec,
    crit: &CriticalData,
    radii: &[(f64, f64)],
    cfg: &InducingConfig,
) -> Result<NiceCouple> {
    let julia: Vec<_> = crit.julia_points().collect();
    if julia.is_empty() {
        return Err(CoreError::NoCriticalPointsInJulia);
    }
    if radii.len() != julia.len() && radii.len() != 1 {
        return Err(CoreError::Config {
            key: "radii".into(),
            reason: format!(
                "{} radius pairs for {} Julia critical points",
                radii.len(),
                julia.len()
            ),
        });
    }
    let mut components = Vec::new();
    for (i, cp) in julia.iter().enumerate() {
        let (r_v, r_vhat) = radii[i.min(radii.len() - 1)];
        if !(r_v > 0.0 && r_vhat > r_v) {
            return Err(CoreError::Config {
                key: "radii".into(),
                reason: "need 0 < r_v < r_vhat".into(),
            });
        }
        if r_v / r_vhat > cfg.ratio_cap + 1e-12 {
            return Err(CoreError::Config {
                key: "radii".into(),
                reason: format!(
                    "r_v/r_vhat = {:.3} exceeds the cap {}",
                    r_v / r_vhat,
                    cfg.ratio_cap
                ),
            });
        }
        let center = cp.point.finite().ok_or_else(|| CoreError::Config {
            key: "couple".into(),
            reason: "disk couples need finite critical points".into(),
        })?;
        components.push(CoupleComponent {
            label: i,
            center: [center.re, center.im],
            r_v,
            r_vhat,
        });
    }
    for i in 0..components.len() {
        for j in i + 1..components.len() {
            let d = (components[i].center_c() - components[j].center_c()).norm();
            if d <= components[i].r_vhat + components[j].r_vhat {
                return Err(CoreError::OverlappingComponents(format!(
                    "components {i} and {j} at distance {d:.4}"
                )));
            }
        }
    }

    // Postcritical disjointness horizon L for the bad pull-back bound.
    let mut l_disjoint = cfg.l_max;
    for cp in &julia {
        for (l, z) in cp.orbit.iter().enumerate().skip(1).take(cfg.l_max) {
            let hit = z.finite().map(|zf| {
                components
                    .iter()
                    .any(|comp| (zf - comp.center_c()).norm() <= comp.r_vhat)
            });
            if hit == Some(true) {
                l_disjoint = l_disjoint.min(l - 1);
                break;
            }
        }
    }

    Ok(NiceCouple {
        components,
        l_disjoint,
        verification: None,
    })
}

impl NiceCouple {
    /// Signed distance from a finite point to the V̂ union (negative
    /// inside).
    fn vhat_distance(&self, z: Complex64) -> f64 {
        self.components
            .iter()
            .map(|c| (z - c.center_c()).norm() - c.r_vhat)
            .fold(f64::INFINITY, f64::min)
    }

    /// Component whose V disk contains the point, if any.
    fn v_component(&self, z: Complex64) -> Option<usize> {
        self.components
            .iter()
            .position(|c| (z - c.center_c()).norm() <= c.r_v)
    }
}

/// Forward-orbit verification of the couple: iterate boundary samples of
/// each ∂V up to `depth`, requiring a positive margin to V̂ throughout.
/// Polynomial samples beyond the escape radius are pruned (they can
/// never return). Errors with the offending (step, sample) on rejection.
pub fn verify_nice(
    couple: &NiceCouple,
    map: &MapSpec,
    depth: usize,
    boundary_samples: usize,
    _cfg: &InducingConfig,
) -> Result<VerifyReport> {
    assert!(boundary_samples >= 16);
    let escape_bound = if map.is_polynomial() {
        let couple_extent = couple
            .components
            .iter()
            .map(|c| c.center_c().norm() + c.r_vhat)
            .fold(0.0, f64::max);
        map.escape_radius().max(couple_extent * 1.5 + 1.0)
    } else {
        f64::INFINITY
    };

    struct Sample {
        global: usize,
        comp: usize,
        slot: usize,
        z: CPoint,
        active: bool,
    }
    let mut samples: Vec<Sample> = Vec::new();
    for (ci, comp) in couple.components.iter().enumerate() {
        for k in 0..boundary_samples {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / boundary_samples as f64;
            let z = comp.center_c() + Complex64::from_polar(comp.r_v, theta);
            samples.push(Sample {
                global: samples.len(),
                comp: ci,
                slot: k,
                z: CPoint::from_complex(z),
                active: true,
            });
        }
    }

    let mut margin = f64::INFINITY;
    let mut max_sep_history: Vec<f64> = Vec::with_capacity(depth);
    let mut escaped = 0usize;

    for step in 1..=depth {
        // Advance the active samples.
        let advanced: Vec<CPoint> = samples
            .par_iter()
            .map(|s| if s.active { map.evaluate(&s.z) } else { s.z })
            .collect();
        for (s, z) in samples.iter_mut().zip(advanced) {
            s.z = z;
        }

        // Margin and rejection test.
        for s in samples.iter().filter(|s| s.active) {
            if let Some(zf) = s.z.finite() {
                let dist = couple.vhat_distance(zf);
                if dist <= 0.0 {
                    return Err(CoreError::VerificationFailed {
                        step,
                        sample: s.global,
                        detail: format!(
                            "boundary iterate entered V-hat (distance {dist:.3e}) at {zf}"
                        ),
                    });
                }
                margin = margin.min(dist);
            }
        }

        // Density bookkeeping: adjacent (by boundary slot) pairs that are
        // both still active.
        let mut max_sep = 0.0f64;
        for ci in 0..couple.components.len() {
            let ring: Vec<&Sample> = samples
                .iter()
                .filter(|s| s.comp == ci && s.active)
                .collect();
            for w in ring.windows(2) {
                if w[1].slot == w[0].slot + 1 {
                    if let (Some(a), Some(b)) = (w[0].z.finite(), w[1].z.finite()) {
                        max_sep = max_sep.max((a - b).norm());
                    }
                }
            }
        }
        max_sep_history.push(max_sep);

        // Escape pruning.
        for s in samples.iter_mut().filter(|s| s.active) {
            let gone = match s.z.finite() {
                Some(zf) => zf.norm() >= escape_bound,
                None => true,
            };
            if gone {
                s.active = false;
                escaped += 1;
            }
        }
        if samples.iter().all(|s| !s.active) {
            break;
        }
    }

    let threshold = margin / 4.0;
    let mut density_certified_depth = max_sep_history.len();
    for (i, &sep) in max_sep_history.iter().enumerate() {
        if sep > threshold {
            density_certified_depth = i;
            break;
        }
    }

    Ok(VerifyReport {
        accepted: margin > 0.0,
        margin,
        checked_depth: depth,
        boundary_samples,
        escaped_samples: escaped,
        density_certified_depth,
        fully_certified: density_certified_depth >= max_sep_history.len(),
    })
}

// ---------------------------------------------------------------------
// Backward enumeration.
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
struct ChainNode {
    parent: u32,
    point: Complex64,
    r_v: f64,
    r_vhat: f64,
    /// ln |(f^level)'(point)|.
    log_deriv: f64,
    letter: u8,
    /// V component containing the point, if any.
    in_v: Option<u8>,
    uncertain: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PullbackComponent {
    pub word: Vec<u8>,
    pub order: usize,
    pub home: usize,
    pub target: usize,
    pub center: [f64; 2],
    pub radius_v: f64,
    pub radius_vhat: f64,
    pub log_deriv: f64,
    pub inside_v_certified: bool,
    pub univalent: bool,
    pub uncertain: bool,
    /// Enclosure of the V̂ pull-back stayed inside V̂ (pleasant-couple
    /// containment surrogate).
    pub vhat_contained: bool,
}

#[derive(Debug, Clone)]
pub struct ComponentSet {
    /// Future induced-map branch candidates: chains that landed in V.
    pub candidates: Vec<PullbackComponent>,
    /// Orbit segments backing each candidate (root-first points).
    pub orbits: Vec<Vec<Complex64>>,
    pub max_time: usize,
    pub incomplete: bool,
    pub pruned_chains: usize,
    pub pleasant_violations: usize,
}

/// Sup |f''| estimate over the working region, used for second-order
/// enclosure bounds. Exact for quadratics.
fn second_derivative_bound(map: &MapSpec, radius: f64) -> f64 {
    let num2 = map.numerator().derivative().derivative();
    let den = map.denominator();
    if den.is_constant() {
        let scale = den.leading().norm();
        // Coefficient bound: Σ |a_k| R^k.
        num2.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * radius.powi(k as i32))
            .sum::<f64>()
            / scale
    } else {
        // Crude sampled bound for rational maps.
        let mut best: f64 = 0.0;
        for i in 0..64 {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
            for r in [0.25 * radius, 0.5 * radius, radius] {
                let z = Complex64::from_polar(r, theta);
                let h = 1e-5;
                let d1 = map.derivative(z + h).unwrap_or_default();
                let d0 = map.derivative(z - h).unwrap_or_default();
                best = best.max(((d1 - d0) / (2.0 * h)).norm());
            }
        }
        best * 2.0
    }
}

/// Pull a disk of radius `rho` around f(w) back through the branch at w:
/// smallest rho' with |f'(w)| rho' - M2 rho'^2 / 2 >= rho, written in the
/// cancellation-free form 2 rho / (|f'| + sqrt(disc)). Falls back to a
/// first-order bound (flagged) when the enclosure test fails near a
/// critical point.
fn pull_radius(abs_deriv: f64, m2: f64, rho: f64) -> (f64, bool) {
    let disc = abs_deriv * abs_deriv - 2.0 * m2 * rho;
    if disc > 0.0 && abs_deriv > 0.0 {
        (2.0 * rho / (abs_deriv + disc.sqrt()), false)
    } else if abs_deriv > 0.0 {
        (2.0 * rho / abs_deriv, true)
    } else {
        (f64::INFINITY, true)
    }
}

/// Breadth-first enumeration of all inverse chains of the couple up to
/// order `max_time`, with enclosure tracking and critical-hit pruning.
pub fn enumerate_components(
    couple: &NiceCouple,
    map: &MapSpec,
    max_time: usize,
    cfg: &InducingConfig,
) -> Result<ComponentSet> {
    let crit_pts: Vec<Complex64> = map
        .critical_points()?
        .points
        .iter()
        .filter_map(|c| c.point.finite())
        .collect();
    let work_radius = couple
        .components
        .iter()
        .map(|c| c.center_c().norm() + c.r_vhat)
        .fold(2.0f64, f64::max)
        .max(map.escape_radius().min(1e3));
    let m2 = second_derivative_bound(map, work_radius * 1.5);

    // Arena per level; every chain node remembers its parent.
    let mut levels: Vec<Vec<ChainNode>> = Vec::with_capacity(max_time + 1);
    let mut roots_of: Vec<usize> = Vec::new(); // root component per level-0 node
    let mut level0 = Vec::new();
    for comp in &couple.components {
        roots_of.push(comp.label);
        level0.push(ChainNode {
            parent: u32::MAX,
            point: comp.center_c(),
            r_v: comp.r_v,
            r_vhat: comp.r_vhat,
            log_deriv: 0.0,
            letter: 0,
            in_v: Some(comp.label as u8),
            uncertain: false,
        });
    }
    levels.push(level0);

    let mut total_nodes = couple.components.len();
    let mut incomplete = false;
    let mut pruned = 0usize;

    for _level in 1..=max_time {
        let prev = levels.last().unwrap();
        if prev.is_empty() {
            levels.push(Vec::new());
            continue;
        }
        let expanded: Vec<(Vec<ChainNode>, usize)> = prev
            .par_iter()
            .enumerate()
            .map(|(pi, node)| -> Result<(Vec<ChainNode>, usize)> {
                let mut out = Vec::new();
                let mut dropped = 0usize;
                let pres = crate::backward::preimages(
                    map,
                    &CPoint::from_complex(node.point),
                    &cfg.root_cfg,
                )?;
                for (letter, (wp, _mult)) in pres.iter().enumerate() {
                    let w = match wp.finite() {
                        Some(w) => w,
                        None => continue, // chains through infinity leave the couple for good
                    };
                    let deriv = map.derivative(w).map(|d| d.norm()).unwrap_or(0.0);
                    let (r_vhat, fallback_hat) = pull_radius(deriv, m2, node.r_vhat);
                    let (r_v, fallback_v) = pull_radius(deriv, m2, node.r_v);
                    let mut uncertain = node.uncertain || fallback_hat || fallback_v;
                    // Critical-hit classification on the V̂ enclosure. A
                    // definite hit makes every extension non-univalent, so
                    // this chain is pruned and only shows up in the
                    // separate bad pull-back count.
                    let mut hit = false;
                    for c in &crit_pts {
                        let d = (w - *c).norm();
                        if d <= r_vhat {
                            hit = true;
                        } else if d <= cfg.uncertain_factor * r_vhat {
                            uncertain = true;
                        }
                    }
                    if hit {
                        dropped += 1;
                        continue;
                    }
                    let in_v = couple.v_component(w).map(|c| c as u8);
                    out.push(ChainNode {
                        parent: pi as u32,
                        point: w,
                        r_v,
                        r_vhat,
                        log_deriv: node.log_deriv + deriv.max(1e-300).ln(),
                        letter: letter as u8,
                        in_v,
                        uncertain,
                    });
                }
                Ok((out, dropped))
            })
            .collect::<Result<_>>()?;
        let mut flat: Vec<ChainNode> = Vec::new();
        for (nodes, dropped) in expanded {
            pruned += dropped;
            flat.extend(nodes);
        }
        total_nodes += flat.len();
        if total_nodes > cfg.chain_budget {
            incomplete = true;
            levels.push(flat);
            break;
        }
        levels.push(flat);
    }

    // Collect candidates: chains whose endpoint lies in some V component.
    let mut candidates = Vec::new();
    let mut orbits = Vec::new();
    let mut pleasant_violations = 0usize;
    for (level, nodes) in levels.iter().enumerate().skip(1) {
        for (ni, node) in nodes.iter().enumerate() {
            let home = match node.in_v {
                Some(h) => h as usize,
                None => continue,
            };
            // Reconstruct the orbit segment root..=endpoint.
            let mut orbit = vec![node.point];
            let mut word = vec![node.letter];
            let mut li = level;
            let mut idx = node.parent as usize;
            while li > 1 {
                let up = &levels[li - 1][idx];
                orbit.push(up.point);
                word.push(up.letter);
                idx = up.parent as usize;
                li -= 1;
            }
            let root_label = roots_of[idx];
            orbit.push(couple.components[root_label].center_c());
            orbit.reverse();
            word.reverse();

            let home_comp = &couple.components[home];
            let inside_v_certified =
                (node.point - home_comp.center_c()).norm() + node.r_v <= home_comp.r_v;
            let vhat_contained =
                (node.point - home_comp.center_c()).norm() + node.r_vhat <= home_comp.r_vhat;
            if !vhat_contained {
                pleasant_violations += 1;
            }
            candidates.push(PullbackComponent {
                word,
                order: level,
                home,
                target: root_label,
                center: [node.point.re, node.point.im],
                radius_v: node.r_v,
                radius_vhat: node.r_vhat,
                log_deriv: node.log_deriv,
                inside_v_certified,
                univalent: !node.uncertain,
                uncertain: node.uncertain,
                vhat_contained,
            });
            orbits.push(orbit);
            let _ = ni;
        }
    }

    Ok(ComponentSet {
        candidates,
        orbits,
        max_time,
        incomplete,
        pruned_chains: pruned,
        pleasant_violations,
    })
}

// ---------------------------------------------------------------------
// Canonical branches.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InducedBranch {
    pub word: Vec<u8>,
    pub order: usize,
    pub home: usize,
    pub target: usize,
    /// ln sup_{V^{target}} |φ'_W| from boundary-sample maxima.
    pub log_s_sup: f64,
    /// ln |φ'_W(center)|.
    pub log_s_center: f64,
    /// ln of the classical Koebe upper bound |φ'(center)|((1+λ)/(1-λ))^4.
    pub log_s_koebe_cap: f64,
    pub uncertain: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchTable {
    pub couple: NiceCouple,
    pub max_time: usize,
    pub branches: Vec<InducedBranch>,
    pub uncertain_branches: Vec<InducedBranch>,
    pub incomplete: bool,
}

/// Suffix-chain univalence state: pull the V̂ component containing
/// `orbit[k]` back along orbit[k..]. Returns (univalent-definite,
/// uncertain). The disk tracked is a superset of V̂ centered at the orbit
/// point (radius r_vhat + offset), so hits are over- rather than
/// under-detected.
fn suffix_state(
    couple: &NiceCouple,
    map: &MapSpec,
    crit_pts: &[Complex64],
    m2: f64,
    orbit: &[Complex64],
    k: usize,
    uncertain_factor: f64,
) -> (bool, bool) {
    let comp_idx = match couple.v_component(orbit[k]) {
        Some(c) => c,
        None => return (false, false),
    };
    let comp = &couple.components[comp_idx];
    let offset = (orbit[k] - comp.center_c()).norm();
    let mut rho_hat = comp.r_vhat + offset;
    let mut uncertain = false;
    for j in k..orbit.len() - 1 {
        let w = orbit[j + 1];
        let deriv = map.derivative(w).map(|d| d.norm()).unwrap_or(0.0);
        let (nh, fb) = pull_radius(deriv, m2, rho_hat);
        uncertain |= fb;
        for c in crit_pts {
            let d = (w - *c).norm();
            if d <= nh {
                return (false, uncertain);
            } else if d <= uncertain_factor * nh {
                uncertain = true;
            }
        }
        rho_hat = nh;
    }
    (!uncertain, uncertain)
}

/// Select first-good-time components and compute branch derivative sups.
pub fn canonical_branches(
    set: &ComponentSet,
    couple: &NiceCouple,
    map: &MapSpec,
    cfg: &InducingConfig,
) -> Result<BranchTable> {
    let crit_pts: Vec<Complex64> = map
        .critical_points()?
        .points
        .iter()
        .filter_map(|c| c.point.finite())
        .collect();
    let work_radius = couple
        .components
        .iter()
        .map(|c| c.center_c().norm() + c.r_vhat)
        .fold(2.0f64, f64::max);
    let m2 = second_derivative_bound(map, work_radius * 1.5);

    let classified: Vec<(usize, bool)> = set
        .candidates
        .par_iter()
        .enumerate()
        .filter_map(|(i, cand)| {
            if !cand.univalent && !cand.uncertain {
                return None;
            }
            let orbit = &set.orbits[i];
            // Earlier good time? A good time only needs the orbit point in
            // V plus a univalent V̂ pull-back over the suffix.
            let mut earlier_good = false;
            let mut earlier_uncertain = false;
            for k in 1..orbit.len() - 1 {
                if couple.v_component(orbit[k]).is_some() {
                    let (univalent, uncertain) =
                        suffix_state(couple, map, &crit_pts, m2, orbit, k, cfg.uncertain_factor);
                    if univalent {
                        earlier_good = true;
                        break;
                    }
                    if uncertain {
                        earlier_uncertain = true;
                    }
                }
            }
            if earlier_good {
                return None; // belongs to an iterate of F, not to D
            }
            let uncertain = cand.uncertain || earlier_uncertain || !cand.inside_v_certified;
            Some((i, uncertain))
        })
        .collect();

    let compute = |i: usize, uncertain: bool| -> Result<InducedBranch> {
        let cand = &set.candidates[i];
        let orbit = &set.orbits[i];
        let target_comp = &couple.components[cand.target];
        let lambda = target_comp.r_v / target_comp.r_vhat;
        let koebe = 4.0 * ((1.0 + lambda) / (1.0 - lambda)).ln();

        // φ'_W at boundary samples of ∂V^{target} via branch-tracked
        // pull-back; |φ'| is analytic and attains its max on the circle.
        let mut log_s_sup = f64::NEG_INFINITY;
        let mut sample_uncertain = false;
        for s in 0..cfg.sup_samples {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / cfg.sup_samples as f64;
            let mut zeta = target_comp.center_c() + Complex64::from_polar(target_comp.r_v, theta);
            let mut log_phi = 0.0f64;
            for k in 0..orbit.len() - 1 {
                let anchor = orbit[k + 1];
                let pres =
                    crate::backward::preimages(map, &CPoint::from_complex(zeta), &cfg.root_cfg)?;
                let mut dists: Vec<(f64, Complex64)> = pres
                    .iter()
                    .filter_map(|p| p.0.finite())
                    .map(|w| ((w - anchor).norm(), w))
                    .collect();
                dists.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (d_best, best) = *dists.first().ok_or_else(|| {
                    CoreError::RootSolverFailure("no finite preimage for sample".into())
                })?;
                // Branch tracking is unambiguous only while the nearest
                // preimage is well separated from its siblings.
                if let Some((d_second, _)) = dists.get(1) {
                    if d_best > 0.35 * d_second {
                        sample_uncertain = true;
                    }
                }
                let d = map.derivative(best).map(|x| x.norm()).unwrap_or(0.0);
                log_phi -= d.max(1e-300).ln();
                zeta = best;
            }
            log_s_sup = log_s_sup.max(log_phi);
        }
        let log_s_center = -cand.log_deriv;
        Ok(InducedBranch {
            word: cand.word.clone(),
            order: cand.order,
            home: cand.home,
            target: cand.target,
            log_s_sup,
            log_s_center,
            log_s_koebe_cap: log_s_center + koebe,
            uncertain: uncertain || sample_uncertain,
        })
    };

    let mut branches = Vec::new();
    let mut uncertain_branches = Vec::new();
    let computed: Vec<(InducedBranch, bool)> = classified
        .par_iter()
        .map(|&(i, unc)| compute(i, unc).map(|b| (b, unc)))
        .collect::<Result<_>>()?;
    for (mut b, unc) in computed {
        let unc = unc || b.uncertain;
        b.uncertain = unc;
        if unc {
            uncertain_branches.push(b);
        } else {
            branches.push(b);
        }
    }
    branches.sort_by(|a, b| a.order.cmp(&b.order).then(a.word.cmp(&b.word)));
    uncertain_branches.sort_by(|a, b| a.order.cmp(&b.order).then(a.word.cmp(&b.word)));

    Ok(BranchTable {
        couple: couple.clone(),
        max_time: set.max_time,
        branches,
        uncertain_branches,
        incomplete: set.incomplete,
    })
}

// ---------------------------------------------------------------------
// Two-variable pressure.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureMode {
    /// Truncated (1/n) ln Z_n over admissible words of the given length.
    Words(usize),
    /// ln of the spectral radius of the weighted transfer matrix.
    Spectral,
}

fn transfer_matrix(table: &BranchTable, t: f64, p: f64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut labels: Vec<usize> = table
        .branches
        .iter()
        .flat_map(|b| [b.home, b.target])
        .collect();
    labels.sort_unstable();
    labels.dedup();
    let idx: BTreeMap<usize, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let n = labels.len();
    let mut m_log = vec![vec![f64::NEG_INFINITY; n]; n];
    for b in &table.branches {
        let w = -p * b.order as f64 + t * b.log_s_sup;
        let (i, j) = (idx[&b.home], idx[&b.target]);
        m_log[i][j] = log_add_exp(m_log[i][j], w);
    }
    (labels, m_log)
}

/// Truncated two-variable pressure of the induced map for the potential
/// -t ln|F'| - p m, over admissible words of the canonical branches.
pub fn two_variable_pressure(
    table: &BranchTable,
    t: f64,
    p: f64,
    mode: PressureMode,
) -> Result<f64> {
    if table.branches.is_empty() {
        return Err(CoreError::EmptyBranchSet);
    }
    let (labels, m_log) = transfer_matrix(table, t, p);
    let n = labels.len();
    match mode {
        PressureMode::Words(len) => {
            assert!(len >= 1);
            // u_k = 1ᵀ B^k in log space.
            let mut u = vec![0.0f64; n];
            for _ in 0..len {
                let mut next = vec![f64::NEG_INFINITY; n];
                for (j, nj) in next.iter_mut().enumerate() {
                    let terms: Vec<f64> = (0..n).map(|i| u[i] + m_log[i][j]).collect();
                    *nj = log_sum_exp(terms.iter().copied());
                }
                u = next;
            }
            Ok(log_sum_exp(u.iter().copied()) / len as f64)
        }
        PressureMode::Spectral => {
            // Log-domain power iteration for the Perron value.
            let mut v = vec![0.0f64; n];
            let mut shift_prev = f64::NAN;
            for _ in 0..2000 {
                let mut next = vec![f64::NEG_INFINITY; n];
                for (i, ni) in next.iter_mut().enumerate() {
                    let terms: Vec<f64> = (0..n).map(|j| m_log[i][j] + v[j]).collect();
                    *ni = log_sum_exp(terms.iter().copied());
                }
                let shift = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if shift == f64::NEG_INFINITY {
                    return Ok(f64::NEG_INFINITY);
                }
                for x in next.iter_mut() {
                    *x -= shift;
                }
                v = next;
                if (shift - shift_prev).abs() < 1e-13 {
                    return Ok(shift);
                }
                shift_prev = shift;
            }
            Ok(shift_prev)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingReport {
    pub t: f64,
    pub p: f64,
    /// Spectral-mode two-variable pressure at (t, P(t)).
    pub residual: f64,
    /// Worst per-branch gap ln(koebe cap) - ln(sampled sup): the upward
    /// bias still available to the sup bounds.
    pub koebe_gap_log: f64,
    pub truncated: bool,
}

/// Evaluate the two-variable pressure at (t, P̂(t)); near-zero (within the
/// truncation/sampling bias band) indicates consistency.
pub fn vanishing_check(
    table: &BranchTable,
    curve: &PressureCurve,
    t: f64,
) -> Result<VanishingReport> {
    let p = curve.interp(t)?;
    let residual = two_variable_pressure(table, t, p, PressureMode::Spectral)?;
    let koebe_gap_log = table
        .branches
        .iter()
        .map(|b| b.log_s_koebe_cap - b.log_s_sup)
        .fold(0.0f64, f64::max);
    Ok(VanishingReport {
        t,
        p,
        residual,
        koebe_gap_log,
        truncated: true,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailProfile {
    /// a_k = Σ_{m_W >= k} e^{-p m_W} S_W^t for k = 1..=max_time.
    pub a: Vec<f64>,
    /// Fitted exponential decay rate (positive when the tail decays).
    pub fitted_eps: Option<f64>,
    pub max_log_residual: f64,
}

pub fn tail_profile(table: &BranchTable, t: f64, p: f64) -> TailProfile {
    let max_m = table.max_time;
    let mut log_a = vec![f64::NEG_INFINITY; max_m + 1];
    for b in &table.branches {
        let w = -p * b.order as f64 + t * b.log_s_sup;
        for k in 1..=b.order.min(max_m) {
            log_a[k] = log_add_exp(log_a[k], w);
        }
    }
    let a: Vec<f64> = (1..=max_m).map(|k| log_a[k].exp()).collect();

    // Log-linear fit over the decaying part.
    let pts: Vec<(f64, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| ((i + 1) as f64, v.ln()))
        .collect();
    let (fitted_eps, max_log_residual) = match linear_fit(&pts) {
        Some((slope, intercept)) if pts.len() >= 3 => {
            let res = pts
                .iter()
                .map(|(x, y)| (y - (slope * x + intercept)).abs())
                .fold(0.0, f64::max);
            (Some(-slope), res)
        }
        _ => (None, f64::NAN),
    };
    TailProfile {
        a,
        fitted_eps,
        max_log_residual,
    }
}

// ---------------------------------------------------------------------
// Bad pull-backs and the decomposition check.
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BadPullbackReport {
    pub order: usize,
    pub count: usize,
    pub bound: f64,
    pub pass: bool,
    pub l_used: usize,
    pub total_leaves: usize,
}

/// Enumerate order-n inverse chains of a generic point of V and count the
/// bad iterated pre-images against the combinatorial bound
/// #(Crit∩J) (2 L deg #(Crit∩J))^{n/L}.
pub fn count_bad_pullbacks(
    couple: &NiceCouple,
    map: &MapSpec,
    n: usize,
    cfg: &InducingConfig,
) -> Result<BadPullbackReport> {
    let d = map.degree();
    if (d as f64).powi(n as i32) > cfg.chain_budget as f64 {
        return Err(CoreError::BudgetExceeded(format!(
            "bad pull-back count at order {n} exceeds the chain budget"
        )));
    }
    let l = couple.l_disjoint.max(1);
    let crit_pts: Vec<Complex64> = map
        .critical_points()?
        .points
        .iter()
        .filter_map(|c| c.point.finite())
        .collect();
    let n_crit_julia = couple.components.len();
    let work_radius = couple
        .components
        .iter()
        .map(|c| c.center_c().norm() + c.r_vhat)
        .fold(2.0f64, f64::max);
    let m2 = second_derivative_bound(map, work_radius * 1.5);

    // Generic base point inside V (off-center to dodge the critical point).
    let comp0 = &couple.components[0];
    let z0 = comp0.center_c() + Complex64::new(0.5 * comp0.r_v, 0.31 * comp0.r_v);
    let tree = crate::backward::backward_tree(
        map,
        &CPoint::from_complex(z0),
        n,
        crate::backward::TreeMode::Exact,
        crate::backward::Metric::Euclidean,
        &crate::backward::TreeConfig::default(),
    )?;

    let leaves = tree.leaves();
    let count: usize = (0..leaves.len())
        .into_par_iter()
        .filter(|&li| {
            // Orbit y .. f^n(y) = z0 from the ancestry.
            let mut orbit = Vec::with_capacity(n + 1);
            let mut level = n;
            let mut idx = li;
            loop {
                let node = &tree.levels[level][idx];
                orbit.push(node.point.finite().unwrap_or(Complex64::new(1e9, 0.0)));
                if level == 0 {
                    break;
                }
                idx = node.parent as usize;
                level -= 1;
            }
            orbit.reverse(); // z0 first
                             // j runs over return times: f^j(y) in V, j = 1..=n. In orbit
                             // coordinates f^j(y) = orbit[n - j].
            let mut bad = true;
            let mut has_return = false;
            for j in 1..=n {
                let w = orbit[n - j];
                if couple.v_component(w).is_none() {
                    continue;
                }
                has_return = true;
                // Univalence of the j-step pull-back of V̂ along the
                // orbit segment orbit[n-j..].
                let (univalent, _unc) = suffix_state(
                    couple,
                    map,
                    &crit_pts,
                    m2,
                    &orbit[n - j..],
                    0,
                    cfg.uncertain_factor,
                );
                if univalent {
                    bad = false;
                    break;
                }
            }
            has_return && bad
        })
        .count();

    let bound = n_crit_julia as f64
        * (2.0 * l as f64 * d as f64 * n_crit_julia as f64).powf(n as f64 / l as f64);
    Ok(BadPullbackReport {
        order: n,
        count,
        bound,
        pass: (count as f64) <= bound,
        l_used: l,
        total_leaves: leaves.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub first_entry: usize,
    pub bad_family: usize,
    pub uncertain: usize,
    pub orphans: usize,
    pub ok: bool,
}

/// Assign every canonical branch to the first-entry family of its home
/// component or to a bad pull-back family; orphans indicate an
/// inconsistent classification.
pub fn decomposition_check(
    set: &ComponentSet,
    table: &BranchTable,
    couple: &NiceCouple,
    map: &MapSpec,
    cfg: &InducingConfig,
) -> Result<DecompositionReport> {
    let crit_pts: Vec<Complex64> = map
        .critical_points()?
        .points
        .iter()
        .filter_map(|c| c.point.finite())
        .collect();
    let work_radius = couple
        .components
        .iter()
        .map(|c| c.center_c().norm() + c.r_vhat)
        .fold(2.0f64, f64::max);
    let m2 = second_derivative_bound(map, work_radius * 1.5);

    let mut first_entry = 0usize;
    let mut bad_family = 0usize;
    let mut uncertain = 0usize;
    let mut orphans = 0usize;

    for b in &table.branches {
        // Locate the candidate orbit backing this branch.
        let idx = set
            .candidates
            .iter()
            .position(|c| c.word == b.word && c.target == b.target)
            .expect("branch stems from the candidate set");
        let orbit = &set.orbits[idx];
        let m = orbit.len() - 1;
        // Intermediate V visits: f^k(W) ~ orbit[m - k]... in root-first
        // coordinates orbit[i] = f^{m-i}(center). Interior visits are
        // i = 1..m-1.
        let mut visits: Vec<usize> = Vec::new();
        for i in 1..m {
            if couple.v_component(orbit[i]).is_some() {
                visits.push(i);
            }
        }
        if visits.is_empty() {
            first_entry += 1;
            continue;
        }
        // Every visit must be non-good (else the branch would not be a
        // first good time - an orphan under this decomposition).
        let mut all_definitely_bad = true;
        let mut any_good = false;
        for &i in &visits {
            let (univalent, unc) = suffix_state(
                couple,
                map,
                &crit_pts,
                m2,
                &orbit[i..],
                0,
                cfg.uncertain_factor,
            );
            if univalent {
                any_good = true;
                break;
            }
            if unc {
                all_definitely_bad = false;
            }
        }
        if any_good {
            orphans += 1;
        } else if all_definitely_bad {
            bad_family += 1;
        } else {
            uncertain += 1;
        }
    }

    Ok(DecompositionReport {
        first_entry,
        bad_family,
        uncertain,
        orphans,
        ok: orphans == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn couple_for(
        map: &MapSpec,
        r_v: f64,
        r_vhat: f64,
        cfg: &InducingConfig,
    ) -> Result<NiceCouple> {
        let crit = map.critical_points()?;
        propose_nice_couple(map, &crit, &[(r_v, r_vhat)], cfg)
    }

    #[test]
    fn propose_rejects_maps_without_julia_critical_points() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let cfg = InducingConfig::default();
        assert!(matches!(
            couple_for(&f, 0.05, 0.12, &cfg),
            Err(CoreError::NoCriticalPointsInJulia)
        ));
    }

    #[test]
    fn propose_enforces_ratio_cap() {
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let cfg = InducingConfig::default();
        assert!(matches!(
            couple_for(&f, 0.1, 0.12, &cfg),
            Err(CoreError::Config { .. })
        ));
    }

    #[test]
    fn misiurewicz_couple_is_proposed_with_large_l() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        assert_eq!(couple.components.len(), 1);
        // The postcritical orbit of z^2 + i never re-enters small disks
        // around 0, so L saturates at the cap.
        assert_eq!(couple.l_disjoint, cfg.l_max);
    }

    #[test]
    fn huge_couple_is_rejected_immediately() {
        // (1.9, 2.2) on the Chebyshev map: first iterate of the boundary
        // already meets V-hat. Relax the ratio cap so the geometry is the
        // thing being tested.
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let cfg = InducingConfig {
            ratio_cap: 0.9,
            ..Default::default()
        };
        let couple = couple_for(&f, 1.9, 2.2, &cfg).unwrap();
        let err = verify_nice(&couple, &f, 10, 64, &cfg);
        match err {
            Err(CoreError::VerificationFailed { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected early rejection, got {other:?}"),
        }
    }

    #[test]
    fn chebyshev_small_disks_are_not_nice_at_depth_200() {
        // The circle |z| = 0.05 meets J = [-2, 2] in two real points whose
        // chaotic orbits re-enter B(0, 0.12) well before 200 iterates.
        // (The couple is honestly rejected; small round disks are not nice
        // for the Chebyshev map.)
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.05, 0.12, &cfg).unwrap();
        let res = verify_nice(&couple, &f, 200, 256, &cfg);
        assert!(
            matches!(res, Err(CoreError::VerificationFailed { .. })),
            "expected rejection, got {res:?}"
        );
    }

    #[test]
    fn misiurewicz_disks_at_008_are_rejected_but_smaller_ones_accept() {
        // The circle of radius 0.03 around 0 crosses the dendrite Julia
        // set of z^2 + i; samples shadowing those crossings re-enter
        // B(0, 0.08) within a few dozen iterates, so the (0.03, 0.08)
        // couple is honestly rejected at depth 200. The tighter default
        // couple keeps a positive sampled margin.
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let big = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        assert!(matches!(
            verify_nice(&big, &f, 200, 4096, &cfg),
            Err(CoreError::VerificationFailed { .. })
        ));
        let small = couple_for(&f, 0.02, 0.06, &cfg).unwrap();
        let report = verify_nice(&small, &f, 200, 4096, &cfg).unwrap();
        assert!(report.accepted && report.margin > 0.03);
    }

    #[test]
    fn enumerate_zero_time_is_empty() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let set = enumerate_components(&couple, &f, 0, &cfg).unwrap();
        assert!(set.candidates.is_empty());
    }

    #[test]
    fn misiurewicz_enumeration_finds_branches() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let set = enumerate_components(&couple, &f, 16, &cfg).unwrap();
        assert!(!set.incomplete);
        let table = canonical_branches(&set, &couple, &f, &cfg).unwrap();
        assert!(
            !table.branches.is_empty(),
            "expected canonical branches by order 16"
        );
        for b in &table.branches {
            assert!(b.order >= 1);
            // Inverse branches contract on these couples.
            assert!(b.log_s_sup < 0.0, "S_W < 1 expected, got {}", b.log_s_sup);
            // The Koebe cap really is an upper bound for the sampled sup.
            assert!(b.log_s_koebe_cap >= b.log_s_sup - 1e-9);
            // Submultiplicative consistency: sup >= center value.
            assert!(b.log_s_sup >= b.log_s_center - 1e-9);
        }
        // No early returns: the critical value parks far from 0 for a
        // while, so orders stay >= 4.
        assert!(table.branches.iter().all(|b| b.order >= 4));
    }

    #[test]
    fn two_variable_pressure_counting_case() {
        // K branches, all with the same order m0, single label: at
        // (t, p) = (0, 0) the word sum gives exactly ln K.
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let branches: Vec<InducedBranch> = (0..5)
            .map(|i| InducedBranch {
                word: vec![i as u8],
                order: 7,
                home: 0,
                target: 0,
                log_s_sup: -0.3 - 0.1 * i as f64,
                log_s_center: -0.4,
                log_s_koebe_cap: 0.0,
                uncertain: false,
            })
            .collect();
        let table = BranchTable {
            couple,
            max_time: 7,
            branches,
            uncertain_branches: vec![],
            incomplete: false,
        };
        for n in [1usize, 3, 6] {
            let z = two_variable_pressure(&table, 0.0, 0.0, PressureMode::Words(n)).unwrap();
            assert!((z - 5f64.ln()).abs() < 1e-12, "n = {n}");
        }
        let rho = two_variable_pressure(&table, 0.0, 0.0, PressureMode::Spectral).unwrap();
        assert!((rho - 5f64.ln()).abs() < 1e-12);

        // Monotone in p.
        let a = two_variable_pressure(&table, 0.7, 0.0, PressureMode::Spectral).unwrap();
        let b = two_variable_pressure(&table, 0.7, 0.1, PressureMode::Spectral).unwrap();
        assert!(b < a);
        // Monotone in t for contracting branches.
        let c1 = two_variable_pressure(&table, 0.9, 0.0, PressureMode::Spectral).unwrap();
        assert!(c1 < a);
    }

    #[test]
    fn gelfand_consistency_on_synthetic_two_label_system() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        // Two labels with asymmetric weights.
        let mk = |home: usize, target: usize, m: usize, ls: f64| InducedBranch {
            word: vec![home as u8, target as u8, m as u8],
            order: m,
            home,
            target,
            log_s_sup: ls,
            log_s_center: ls,
            log_s_koebe_cap: ls + 0.1,
            uncertain: false,
        };
        let table = BranchTable {
            couple,
            max_time: 9,
            branches: vec![
                mk(0, 0, 3, -0.2),
                mk(0, 1, 5, -0.9),
                mk(1, 0, 4, -0.5),
                mk(1, 1, 6, -1.1),
            ],
            uncertain_branches: vec![],
            incomplete: false,
        };
        let (t, p) = (1.1, -0.05);
        let rho = two_variable_pressure(&table, t, p, PressureMode::Spectral).unwrap();
        // |(1/n) ln Z_n - ln rho| <= C/n with a modest fitted constant.
        let mut fitted_c = 0.0f64;
        for n in [4usize, 8, 16, 32] {
            let zn = two_variable_pressure(&table, t, p, PressureMode::Words(n)).unwrap();
            fitted_c = fitted_c.max((zn - rho).abs() * n as f64);
        }
        for n in [48usize, 64] {
            let zn = two_variable_pressure(&table, t, p, PressureMode::Words(n)).unwrap();
            assert!(
                (zn - rho).abs() <= 1.2 * fitted_c / n as f64 + 1e-9,
                "n = {n}: {zn} vs {rho}"
            );
        }
    }

    #[test]
    fn tail_profile_is_monotone_and_truncated() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let branches: Vec<InducedBranch> = (0..20)
            .map(|i| InducedBranch {
                word: vec![i as u8],
                order: 1 + (i % 8),
                home: 0,
                target: 0,
                log_s_sup: -0.5 - 0.2 * (i % 8) as f64,
                log_s_center: -0.6,
                log_s_koebe_cap: 0.0,
                uncertain: false,
            })
            .collect();
        let table = BranchTable {
            couple,
            max_time: 12,
            branches,
            uncertain_branches: vec![],
            incomplete: false,
        };
        let profile = tail_profile(&table, 1.0, 0.1);
        for w in profile.a.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "tail must decrease");
        }
        // Orders stop at 8 < max_time = 12: exact zeros beyond.
        assert_eq!(profile.a[9], 0.0);
        assert_eq!(profile.a[11], 0.0);
        assert!(profile.fitted_eps.unwrap() > 0.0);
    }

    #[test]
    fn empty_branch_set_errors() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let table = BranchTable {
            couple,
            max_time: 5,
            branches: vec![],
            uncertain_branches: vec![],
            incomplete: false,
        };
        assert!(matches!(
            two_variable_pressure(&table, 1.0, 0.0, PressureMode::Spectral),
            Err(CoreError::EmptyBranchSet)
        ));
    }

    #[test]
    fn decomposition_of_empty_branch_set_passes() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let set = enumerate_components(&couple, &f, 0, &cfg).unwrap();
        let table = BranchTable {
            couple: couple.clone(),
            max_time: 0,
            branches: vec![],
            uncertain_branches: vec![],
            incomplete: false,
        };
        let report = decomposition_check(&set, &table, &couple, &f, &cfg).unwrap();
        assert!(report.ok);
        assert_eq!(report.first_entry + report.bad_family + report.uncertain, 0);
    }

    #[test]
    fn no_bad_pullbacks_below_the_disjointness_horizon() {
        let f = MapSpec::quadratic(c(0.0, 1.0));
        let cfg = InducingConfig::default();
        let couple = couple_for(&f, 0.03, 0.08, &cfg).unwrap();
        let report = count_bad_pullbacks(&couple, &f, 8, &cfg).unwrap();
        // n = 8 < L = 32: no return to V-hat is possible, so no bad
        // iterated pre-images at all.
        assert_eq!(report.count, 0);
        assert!(report.pass);
        assert_eq!(report.total_leaves, 256);
    }
}
