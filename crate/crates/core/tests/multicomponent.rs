//! Two-component induced-map pipeline on a cubic with both critical
//! points strictly preperiodic onto repelling fixed points. Exercises the
//! cross-component admissibility bookkeeping and the 2x2 transfer matrix
//! on real data rather than synthetic branch tables.
//!
//! The parameters solve f^3(c_i) = f^2(c_i) for both critical points
//! c_i = ±sqrt(-a/3) of f(z) = z^3 + a z + b (Newton-polished to
//! residuals ~1e-15; the property is destroyed by perturbations beyond
//! ~1e-12, so the constants below carry full precision).

use num_complex::Complex64;

use juliatherm_core::inducing::{
    canonical_branches, count_bad_pullbacks, decomposition_check, enumerate_components,
    propose_nice_couple, two_variable_pressure, verify_nice, InducingConfig, PressureMode,
};
use juliatherm_core::map::MapSpec;

fn double_misiurewicz_cubic() -> MapSpec {
    let a = Complex64::new(-1.188_336_561_416_719_2, 1.035_721_073_767_130_5);
    let b = Complex64::new(-0.995_436_206_825_766_4, -0.161_567_622_616_649_45);
    MapSpec::new(
        vec![b, a, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![],
    )
    .unwrap()
}

#[test]
fn two_component_couple_pipeline() {
    let f = double_misiurewicz_cubic();
    let crit = f.critical_points().unwrap();
    assert_eq!(crit.julia_points().count(), 2, "both critical points in J");

    let cfg = InducingConfig {
        sup_samples: 32,
        ..InducingConfig::default()
    };
    let couple = propose_nice_couple(&f, &crit, &[(0.015, 0.0375)], &cfg).unwrap();
    assert_eq!(couple.components.len(), 2);

    let report = verify_nice(&couple, &f, 200, 2048, &cfg).unwrap();
    assert!(
        report.accepted && report.margin > 0.05,
        "margin {}",
        report.margin
    );

    let set = enumerate_components(&couple, &f, 11, &cfg).unwrap();
    assert!(!set.incomplete);
    let table = canonical_branches(&set, &couple, &f, &cfg).unwrap();
    assert!(table.branches.len() > 100);

    // Every home x target transition occurs: the induced map genuinely
    // mixes the two components.
    let mut cross = [[0usize; 2]; 2];
    for b in &table.branches {
        cross[b.home][b.target] += 1;
    }
    for (h, row) in cross.iter().enumerate() {
        for (t, &count) in row.iter().enumerate() {
            assert!(count > 0, "no branches from component {h} to {t}");
        }
    }

    // Gelfand consistency of the 2x2 transfer matrix against truncated
    // word sums: |(1/n) ln Z_n - ln rho| <= C/n with C fitted at small n.
    let (t, p) = (1.1, 0.0);
    let rho = two_variable_pressure(&table, t, p, PressureMode::Spectral).unwrap();
    let mut fitted_c = 0.0f64;
    for n in [8usize, 12, 16] {
        let zn = two_variable_pressure(&table, t, p, PressureMode::Words(n)).unwrap();
        fitted_c = fitted_c.max((zn - rho).abs() * n as f64);
    }
    for n in [32usize, 48] {
        let zn = two_variable_pressure(&table, t, p, PressureMode::Words(n)).unwrap();
        assert!(
            (zn - rho).abs() <= 1.2 * fitted_c / n as f64 + 1e-9,
            "n = {n}: {zn} vs {rho}"
        );
    }

    // Bad pull-back counts within the combinatorial bound.
    for n in [4usize, 6, 8] {
        let bad = count_bad_pullbacks(&couple, &f, n, &cfg).unwrap();
        assert!(bad.pass, "n = {n}: {} > {}", bad.count, bad.bound);
    }

    // Decomposition into first-entry and bad families leaves no orphans.
    let decomp = decomposition_check(&set, &table, &couple, &f, &cfg).unwrap();
    assert!(decomp.ok, "{decomp:?}");
}
