//! Detection of exceptional sets: finite Σ with f^{-1}(Σ) \ Crit(f) = Σ.
//!
//! Candidates are unions of periodic orbits of small period with at most
//! four points in total. When no candidate satisfies the equality, the
//! containment variant f^{-1}(Σ) \ Crit(f) ⊆ Σ is reported instead — the
//! two notions genuinely differ on power maps, so the result carries a
//! mode tag and whether Σ meets the Julia set.

use crate::error::Result;
use crate::map::MapSpec;
use crate::periodic::{find_periodic_points, Classification, PeriodicConfig, PeriodicOrbit};
use crate::point::{cmp_key, CPoint};
use crate::poly::RootConfig;
use crate::POINT_IDENTITY_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExceptionalMode {
    /// f^{-1}(Σ) \ Crit(f) = Σ
    Equality,
    /// f^{-1}(Σ) \ Crit(f) ⊆ Σ
    Containment,
}

#[derive(Debug, Clone)]
pub struct ExceptionalSet {
    pub points: Vec<CPoint>,
    pub mode: ExceptionalMode,
    pub meets_julia: bool,
}

const MAX_SET_SIZE: usize = 4;

fn contains(set: &[CPoint], p: &CPoint) -> bool {
    set.iter()
        .any(|q| q.approx_eq(p, POINT_IDENTITY_TOL * 10.0))
}

fn check_candidate(
    map: &MapSpec,
    sigma: &[CPoint],
    crit: &[CPoint],
    root_cfg: &RootConfig,
) -> Result<(bool, bool)> {
    // f^{-1}(Σ) \ Crit(f), as a point set.
    let mut pre: Vec<CPoint> = Vec::new();
    for p in sigma {
        for (w, _) in crate::backward::preimages(map, p, root_cfg)? {
            if !contains(crit, &w) && !contains(&pre, &w) {
                pre.push(w);
            }
        }
    }
    let subset = pre.iter().all(|w| contains(sigma, w));
    let equality = subset && sigma.iter().all(|p| contains(&pre, p));
    Ok((equality, subset))
}

/// Close a seed set under non-critical preimages. A set satisfying the
/// defining equality must contain every non-critical preimage of its
/// points, so candidates are grown until stable; growth beyond the size
/// cap disqualifies the seed.
fn preimage_closure(
    map: &MapSpec,
    seed: &[CPoint],
    crit: &[CPoint],
    root_cfg: &RootConfig,
) -> Result<Option<Vec<CPoint>>> {
    let mut sigma: Vec<CPoint> = seed.to_vec();
    for _ in 0..8 {
        let mut grew = false;
        let mut additions: Vec<CPoint> = Vec::new();
        for p in &sigma {
            for (w, _) in crate::backward::preimages(map, p, root_cfg)? {
                if !contains(crit, &w) && !contains(&sigma, &w) && !contains(&additions, &w) {
                    additions.push(w);
                    grew = true;
                }
            }
        }
        sigma.extend(additions);
        if sigma.len() > MAX_SET_SIZE {
            return Ok(None);
        }
        if !grew {
            sigma.sort_by(cmp_key);
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}

/// Search for an exceptional set built from periodic orbits of period at
/// most `max_period`. Returns the maximal satisfying set, preferring the
/// equality mode; `None` when nothing is detected.
pub fn detect_exceptional(
    map: &MapSpec,
    max_period: usize,
    cfg: &PeriodicConfig,
) -> Result<Option<ExceptionalSet>> {
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    for m in 1..=max_period {
        for orbit in find_periodic_points(map, m, cfg)? {
            if orbit.period == m && orbit.points.len() <= MAX_SET_SIZE {
                let dup = orbits
                    .iter()
                    .any(|o| o.representative.approx_eq(&orbit.representative, 1e-8));
                if !dup {
                    orbits.push(orbit);
                }
            }
        }
    }
    orbits.sort_by(|a, b| cmp_key(&a.representative, &b.representative));

    let crit: Vec<CPoint> = map
        .critical_points()?
        .points
        .iter()
        .map(|c| c.point)
        .collect();

    // Candidates: preimage closures of orbit unions with at most four
    // points in total. Closure is required because an exceptional set may
    // contain preperiodic points (f = z^2 - 2 has Σ = {2, -2} with -2
    // strictly preperiodic).
    let n = orbits.len().min(16);
    let mut equality_hits: Vec<Vec<CPoint>> = Vec::new();
    let mut containment_hits: Vec<Vec<CPoint>> = Vec::new();
    for mask in 1u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let size: usize = chosen.iter().map(|&i| orbits[i].points.len()).sum();
        if size == 0 || size > MAX_SET_SIZE {
            continue;
        }
        let seed: Vec<CPoint> = chosen
            .iter()
            .flat_map(|&i| orbits[i].points.iter().copied())
            .collect();
        let sigma = match preimage_closure(map, &seed, &crit, &cfg.root_cfg)? {
            Some(s) => s,
            None => {
                // Closure outgrew the cap: the seed itself may still
                // satisfy the containment variant.
                let (_, subset) = check_candidate(map, &seed, &crit, &cfg.root_cfg)?;
                if subset {
                    containment_hits.push(seed);
                }
                continue;
            }
        };
        let (eq, subset) = check_candidate(map, &sigma, &crit, &cfg.root_cfg)?;
        if eq {
            equality_hits.push(sigma);
        } else if subset {
            containment_hits.push(sigma);
        }
    }

    let union_of = |hits: &[Vec<CPoint>]| -> Vec<CPoint> {
        let mut sigma: Vec<CPoint> = Vec::new();
        for hit in hits {
            for p in hit {
                if !contains(&sigma, p) {
                    sigma.push(*p);
                }
            }
        }
        sigma.sort_by(cmp_key);
        sigma
    };
    let meets_julia = |sigma: &[CPoint]| -> bool {
        sigma.iter().any(|p| {
            orbits.iter().any(|o| {
                o.classification == Classification::Repelling
                    && o.points.iter().any(|q| q.approx_eq(p, 1e-7))
            })
        })
    };

    // Prefer the equality mode; a union of satisfying sets satisfies the
    // same relation (re-checked to guard against tolerance artifacts and
    // the size cap).
    for (hits, mode) in [
        (&equality_hits, ExceptionalMode::Equality),
        (&containment_hits, ExceptionalMode::Containment),
    ] {
        if hits.is_empty() {
            continue;
        }
        let mut sigma = union_of(hits);
        if sigma.len() > MAX_SET_SIZE {
            sigma = hits
                .iter()
                .max_by_key(|h| h.len())
                .cloned()
                .unwrap_or_default();
        }
        let (eq, subset) = check_candidate(map, &sigma, &crit, &cfg.root_cfg)?;
        let ok = match mode {
            ExceptionalMode::Equality => eq,
            ExceptionalMode::Containment => subset,
        };
        if ok {
            return Ok(Some(ExceptionalSet {
                meets_julia: meets_julia(&sigma),
                points: sigma,
                mode,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chebyshev_is_exceptional_by_equality() {
        // f^{-1}({2, -2}) \ {0, inf} = {2, -2}.
        let f = MapSpec::quadratic(c(-2.0, 0.0));
        let set = detect_exceptional(&f, 2, &PeriodicConfig::default())
            .unwrap()
            .expect("Chebyshev map must be detected");
        assert_eq!(set.mode, ExceptionalMode::Equality);
        assert!(set.meets_julia);
        let pts: Vec<f64> = set
            .points
            .iter()
            .filter_map(|p| p.finite())
            .map(|z| z.re)
            .collect();
        assert!(pts.iter().any(|&x| (x - 2.0).abs() < 1e-9));
        assert!(pts.iter().any(|&x| (x + 2.0).abs() < 1e-9));
    }

    #[test]
    fn power_map_falls_back_to_containment() {
        let f = MapSpec::quadratic(c(0.0, 0.0));
        let set = detect_exceptional(&f, 2, &PeriodicConfig::default())
            .unwrap()
            .expect("power map containment set");
        assert_eq!(set.mode, ExceptionalMode::Containment);
        assert!(!set.meets_julia);
        assert_eq!(set.points.len(), 2);
        assert!(set.points.iter().any(|p| p.is_infinity()));
        assert!(set
            .points
            .iter()
            .any(|p| p.approx_eq(&CPoint::zero(), 1e-9)));
    }

    #[test]
    fn generic_hyperbolic_map_is_not_exceptional() {
        let f = MapSpec::quadratic(c(0.1, 0.0));
        let got = detect_exceptional(&f, 3, &PeriodicConfig::default()).unwrap();
        assert!(
            got.is_none() || got.as_ref().unwrap().mode == ExceptionalMode::Containment,
            "no equality set may exist for z^2 + 0.1"
        );
        // Stronger: not even a containment set among small periodic unions
        // (the only candidate would need the superattracting fixed point
        // at infinity, whose preimage set {inf} minus Crit is empty, but
        // infinity alone satisfies containment - accept either outcome
        // above, then pin the equality absence here.)
        if let Some(set) = got {
            assert_ne!(set.mode, ExceptionalMode::Equality);
        }
    }
}
