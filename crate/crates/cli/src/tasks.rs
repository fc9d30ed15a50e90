//! Task dispatch: run the requested computation, write CSV artifacts and a
//! summary JSON into the output directory.

use std::fs;
use std::time::Instant;

use serde_json::json;

use juliatherm_core::backward::{
    backward_tree, extremal_derivative_rates, sup_derivative_rate, TreeConfig, TreeMode,
};
use juliatherm_core::deviations::{attainable_eps, omega_ensemble, rate_function, DeviationSide};
use juliatherm_core::exceptional::detect_exceptional;
use juliatherm_core::inducing::{
    canonical_branches, count_bad_pullbacks, decomposition_check, enumerate_components,
    propose_nice_couple, tail_profile, two_variable_pressure, vanishing_check, verify_nice,
    InducingConfig, PressureMode,
};
use juliatherm_core::periodic::{find_periodic_points, PeriodicConfig};
use juliatherm_core::pressure::{assemble_pressure, grid_range, AssembleConfig};
use juliatherm_core::spectra::{
    chi_star_range, dimension_spectrum, integral_means_spectrum, legendre_pair_check,
    lyapunov_spectrum, SampleTag, SpectrumSample,
};
use juliatherm_core::{artifacts, CoreError, PressureCurve};

use crate::config::{RunConfig, Task};

pub struct TaskOutcome {
    pub exit_code: i32,
}

struct Timings {
    rows: Vec<(String, u128)>,
}

impl Timings {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn measure<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.rows
            .push((label.to_string(), start.elapsed().as_millis()));
        out
    }

    fn json(&self) -> serde_json::Value {
        json!(self
            .rows
            .iter()
            .map(|(k, v)| json!({"phase": k, "ms": v}))
            .collect::<Vec<_>>())
    }
}

fn assemble_cfg(cfg: &RunConfig) -> AssembleConfig {
    AssembleConfig {
        depth_hi: cfg.depth_hi,
        depth_lo: cfg.depth_lo,
        roots: cfg.roots,
        seed: cfg.seed,
        metric: cfg.metric,
        period_cap: cfg.period_cap,
        chi_period_cap: cfg.period_cap.min(256),
        ..AssembleConfig::default()
    }
}

fn write(cfg: &RunConfig, name: &str, contents: &str) -> Result<String, CoreError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(name);
    fs::write(&path, contents)?;
    Ok(path.display().to_string())
}

fn base_summary(cfg: &RunConfig, timings: &Timings, warnings: &[String]) -> serde_json::Value {
    json!({
        "inputs": {
            "map": cfg.map_path,
            "task": cfg.task.name(),
            "grid": [cfg.grid.0, cfg.grid.1, cfg.grid.2],
            "depth": cfg.depth_hi,
            "depth_lo": cfg.depth_lo,
            "period": cfg.period_cap,
            "max_return": cfg.max_return,
            "metric": cfg.metric,
            "threads": cfg.threads,
        },
        "versions": { "juliatherm": env!("CARGO_PKG_VERSION") },
        "seed": cfg.seed,
        "timings": timings.json(),
        "warnings": warnings,
    })
}

fn curve_for(cfg: &RunConfig, timings: &mut Timings) -> Result<PressureCurve, CoreError> {
    let grid = grid_range(cfg.grid.0, cfg.grid.1, cfg.grid.2);
    let acfg = assemble_cfg(cfg);
    timings.measure("assemble_pressure", || {
        assemble_pressure(&cfg.map, &grid, &acfg)
    })
}

pub fn run_task(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    match cfg.task {
        Task::Pressure => run_pressure(cfg),
        Task::Exponents => run_exponents(cfg),
        Task::Transitions => run_transitions(cfg),
        Task::Spectra => run_spectra(cfg),
        Task::Induced => run_induced(cfg),
        Task::Deviations => run_deviations(cfg),
    }
}

fn run_pressure(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    let mut timings = Timings::new();
    let curve = curve_for(cfg, &mut timings)?;
    let exceptional = timings.measure("detect_exceptional", || {
        detect_exceptional(&cfg.map, 3, &PeriodicConfig::default())
    })?;
    write(cfg, "pressure.csv", &artifacts::pressure_csv(&curve))?;

    if let Some(tree_path) = &cfg.tree_out {
        let root = juliatherm_core::pressure::generic_root(&cfg.map, 0, 14, cfg.seed)?;
        let mode = match cfg.sampled_paths {
            Some(paths) => TreeMode::Sampled {
                paths,
                seed: cfg.seed,
            },
            None => TreeMode::Exact,
        };
        let depth = cfg.depth_lo.min(12);
        let tree = backward_tree(
            &cfg.map,
            &root,
            depth,
            mode,
            cfg.metric,
            &TreeConfig::default(),
        )?;
        fs::write(tree_path, artifacts::tree_jsonl(&tree))?;
    }

    let mut summary = base_summary(cfg, &timings, &curve.warnings);
    summary["results"] = artifacts::curve_summary(&curve, exceptional.as_ref());
    write(
        cfg,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    let _ = summary;
    Ok(TaskOutcome { exit_code: 0 })
}

fn run_exponents(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    let mut timings = Timings::new();
    let mut warnings: Vec<String> = Vec::new();
    let d = cfg.map.degree();
    let mut m_chi = 1usize;
    while (d as f64).powi(m_chi as i32 + 1) <= cfg.period_cap.min(256) as f64 {
        m_chi += 1;
    }
    let pcfg = PeriodicConfig::default();
    let mut rows = String::from("period,re,im,chi,multiplier_abs,classification\n");
    let mut chi_lo = f64::INFINITY;
    let mut chi_hi = f64::NEG_INFINITY;
    timings.measure("periodic_orbits", || -> Result<(), CoreError> {
        for m in 1..=m_chi {
            for orbit in find_periodic_points(&cfg.map, m, &pcfg)? {
                if orbit.period != m {
                    continue;
                }
                let (re, im) = match orbit.representative.finite() {
                    Some(z) => (format!("{}", z.re), format!("{}", z.im)),
                    None => ("inf".into(), "inf".into()),
                };
                rows.push_str(&format!(
                    "{},{},{},{},{},{:?}\n",
                    orbit.period, re, im, orbit.chi, orbit.multiplier_abs, orbit.classification
                ));
                if orbit.is_repelling() {
                    chi_lo = chi_lo.min(orbit.chi);
                    chi_hi = chi_hi.max(orbit.chi);
                }
            }
        }
        Ok(())
    })?;
    write(cfg, "exponents.csv", &rows)?;

    // Tree extremal rates at three independent roots, plus the sup rate.
    let mut min_rates = Vec::new();
    let mut max_rates = Vec::new();
    timings.measure("tree_rates", || -> Result<(), CoreError> {
        for i in 0..3usize {
            let root = juliatherm_core::pressure::generic_root(&cfg.map, i, 14, cfg.seed)?;
            let tree = backward_tree(
                &cfg.map,
                &root,
                cfg.depth_lo.min(14),
                TreeMode::Exact,
                cfg.metric,
                &TreeConfig::default(),
            )?;
            let (lo, hi) = extremal_derivative_rates(&tree)?;
            min_rates.push(lo);
            max_rates.push(hi);
        }
        Ok(())
    })?;
    let sup_rate = timings.measure("sup_rate", || sup_derivative_rate(&cfg.map, 8, 300));
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    if chi_lo > chi_hi {
        warnings.push("no repelling orbits found".into());
    }

    let mut summary = base_summary(cfg, &timings, &warnings);
    summary["results"] = json!({
        "chi_inf": { "value": chi_lo, "source": format!("periodic(:{m_chi})"),
                     "bracket": min_rates.iter().copied().fold(f64::INFINITY, f64::min) },
        "chi_sup": { "value": chi_hi, "source": format!("periodic(:{m_chi})"),
                     "bracket": sup_rate },
        "tree_min_rates": min_rates.clone(),
        "tree_max_rates": max_rates.clone(),
        "root_spread_min_rate": spread(&min_rates),
        "root_spread_max_rate": spread(&max_rates),
    });
    write(
        cfg,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    let _ = summary;
    Ok(TaskOutcome { exit_code: 0 })
}

fn run_transitions(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    let mut timings = Timings::new();
    let curve = curve_for(cfg, &mut timings)?;
    let report = curve.asymptote_check();
    let mut rows = String::from("t,P,target,residual\n");
    for r in &report.rows {
        rows.push_str(&format!(
            "{},{},{},{}\n",
            r.t, r.pressure, r.target, r.residual
        ));
    }
    write(cfg, "pressure.csv", &artifacts::pressure_csv(&curve))?;
    write(cfg, "transitions.csv", &rows)?;
    let mut summary = base_summary(cfg, &timings, &curve.warnings);
    summary["results"] = json!({
        "t_minus": curve.t_minus,
        "t_plus": curve.t_plus,
        "t_star": curve.t_star,
        "asymptote_vacuous": report.vacuous,
        "asymptote_max_abs_residual": report.max_abs_residual,
        "chi_inf": curve.chi_inf,
        "chi_sup": curve.chi_sup,
    });
    write(
        cfg,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    let _ = summary;
    Ok(TaskOutcome { exit_code: 0 })
}

fn run_spectra(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    let mut timings = Timings::new();
    let mut warnings: Vec<String> = Vec::new();
    let curve = curve_for(cfg, &mut timings)?;
    let ln_d = (cfg.map.degree() as f64).ln();

    // Lyapunov spectrum over an alpha window spanning the slope range.
    let lo = (0.25 * curve.chi_inf.value).max(0.02);
    let hi = 1.5 * curve.chi_sup.value;
    let mut lyap: Vec<SpectrumSample> = Vec::new();
    timings.measure("lyapunov", || {
        for i in 0..=40usize {
            let alpha = lo + (hi - lo) * i as f64 / 40.0;
            match lyapunov_spectrum(&curve, alpha) {
                Ok(s) => lyap.push(s),
                Err(_) => warnings.push(format!("L({alpha:.4}) escaped the grid")),
            }
        }
    });
    write(cfg, "lyapunov.csv", &artifacts::spectrum_csv(&lyap))?;

    // Pointwise-dimension spectrum (polynomial + connected J asserted).
    let mut dim: Vec<SpectrumSample> = Vec::new();
    if cfg.map.is_polynomial() && cfg.connected {
        timings.measure("dimension", || {
            for i in 1..=20usize {
                let alpha = i as f64 / 20.0;
                match dimension_spectrum(&curve, alpha, ln_d) {
                    Ok(s) => dim.push(s),
                    Err(_) => warnings.push(format!("D({alpha:.4}) escaped the grid")),
                }
            }
        });
        write(cfg, "dimension.csv", &artifacts::spectrum_csv(&dim))?;
    } else {
        warnings.push(
            "dimension and integral-means spectra need --connected on a polynomial map".into(),
        );
    }

    // Integral means spectrum over the t grid.
    if cfg.map.is_polynomial() && cfg.connected {
        let mut rows: Vec<SpectrumSample> = Vec::new();
        for &t in &curve.grid {
            if let Ok(beta) = integral_means_spectrum(&curve, t, ln_d) {
                rows.push(SpectrumSample {
                    abscissa: t,
                    value: Some(beta),
                    minimizer_t: None,
                    tag: SampleTag::Interior,
                });
            }
        }
        write(cfg, "integral_means.csv", &artifacts::spectrum_csv(&rows))?;
    }

    let legendre = timings.measure("legendre", || legendre_pair_check(&curve));
    let star = chi_star_range(&curve);

    let mut summary = base_summary(cfg, &timings, &warnings);
    summary["results"] = json!({
        "legendre": legendre,
        "chi_star": star.ok(),
        "t_star": curve.t_star,
        "formula_hypotheses_note":
            "L(alpha) formula assumes a non-exceptional map or an exceptional set disjoint from J",
    });
    write(
        cfg,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    let _ = summary;
    Ok(TaskOutcome { exit_code: 0 })
}

fn run_induced(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    let mut timings = Timings::new();
    let mut warnings: Vec<String> = Vec::new();
    let icfg = InducingConfig::default();

    let crit = cfg.map.critical_points()?;
    let radii = cfg.couple.unwrap_or((0.02, 0.06));
    let mut couple = propose_nice_couple(&cfg.map, &crit, &[radii], &icfg)?;

    let verification = timings.measure("verify_nice", || {
        verify_nice(
            &couple,
            &cfg.map,
            cfg.verify_depth,
            cfg.boundary_samples,
            &icfg,
        )
    });
    let report = match verification {
        Ok(report) => report,
        Err(CoreError::VerificationFailed {
            step,
            sample,
            detail,
        }) => {
            let mut summary = base_summary(cfg, &timings, &warnings);
            summary["results"] = json!({
                "couple_accepted": false,
                "failing_step": step,
                "failing_sample": sample,
                "detail": detail,
            });
            write(
                cfg,
                "summary.json",
                &serde_json::to_string_pretty(&summary).unwrap(),
            )?;
            let _ = summary;
            return Ok(TaskOutcome { exit_code: 3 });
        }
        Err(other) => return Err(other),
    };
    couple.verification = Some(report.clone());
    if !report.fully_certified {
        warnings.push(format!(
            "sample-density condition certified only to depth {} of {}",
            report.density_certified_depth, report.checked_depth
        ));
    }

    // Branch table: load or enumerate.
    let (table, set) = match &cfg.branches_in {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let table = artifacts::branch_table_from_json(&text)?;
            (table, None)
        }
        None => {
            let set = timings.measure("enumerate_components", || {
                enumerate_components(&couple, &cfg.map, cfg.max_return, &icfg)
            })?;
            if set.incomplete {
                warnings.push("component enumeration hit the chain budget".into());
            }
            if set.pleasant_violations > 0 {
                warnings.push(format!(
                    "{} pull-back chains violated the pleasant containment surrogate",
                    set.pleasant_violations
                ));
            }
            let table = timings.measure("canonical_branches", || {
                canonical_branches(&set, &couple, &cfg.map, &icfg)
            })?;
            (table, Some(set))
        }
    };
    if let Some(path) = &cfg.branches_out {
        fs::write(path, artifacts::branch_table_json(&table))?;
    }
    write(cfg, "induced.csv", &artifacts::branches_csv(&table))?;

    // Structural checks against the pressure curve.
    let curve = curve_for(cfg, &mut timings)?;
    let t_star = curve.t_star.unwrap_or(1.0);
    let vanish = timings.measure("vanishing_check", || {
        vanishing_check(&table, &curve, t_star)
    });
    let sign_test = vanish.as_ref().ok().and_then(|v| {
        two_variable_pressure(&table, t_star, v.p + 0.2, PressureMode::Spectral).ok()
    });
    // Gelfand cross-check: truncated word sum at the configured length
    // against the spectral value.
    let word_sum = vanish.as_ref().ok().and_then(|v| {
        two_variable_pressure(&table, t_star, v.p, PressureMode::Words(cfg.words)).ok()
    });
    let tail = vanish
        .as_ref()
        .ok()
        .map(|v| tail_profile(&table, t_star, v.p));

    let mut bad_reports = Vec::new();
    timings.measure("bad_pullbacks", || -> Result<(), CoreError> {
        for n in 1..=cfg.max_return.min(12) {
            bad_reports.push(count_bad_pullbacks(&couple, &cfg.map, n, &icfg)?);
        }
        Ok(())
    })?;
    let decomposition = match &set {
        Some(set) => Some(timings.measure("decomposition", || {
            decomposition_check(set, &table, &couple, &cfg.map, &icfg)
        })?),
        None => None,
    };

    let mut summary = base_summary(cfg, &timings, &warnings);
    summary["results"] = json!({
        "couple_accepted": true,
        "couple": couple,
        "branches": table.branches.len(),
        "uncertain_branches": table.uncertain_branches.len(),
        "min_return_time": table.branches.iter().map(|b| b.order).min(),
        "vanishing": vanish.ok(),
        "word_sum_at_len": { "len": cfg.words, "value": word_sum },
        "sign_test_residual_at_p_plus_0_2": sign_test,
        "tail": tail,
        "bad_pullbacks": bad_reports,
        "decomposition": decomposition,
        "t_star": t_star,
    });
    write(
        cfg,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    let _ = summary;
    Ok(TaskOutcome { exit_code: 0 })
}

fn run_deviations(cfg: &RunConfig) -> Result<TaskOutcome, CoreError> {
    let mut timings = Timings::new();
    let mut warnings: Vec<String> = Vec::new();
    let curve = curve_for(cfg, &mut timings)?;

    let n = cfg.depth_hi.min(16);
    let x0 = juliatherm_core::pressure::generic_root(&cfg.map, 0, 14, cfg.seed)?;
    let mode = match cfg.sampled_paths {
        Some(paths) => TreeMode::Sampled {
            paths,
            seed: cfg.seed,
        },
        None => TreeMode::Exact,
    };
    let ens = timings.measure("omega_ensemble", || {
        omega_ensemble(
            &cfg.map,
            &x0,
            cfg.t0,
            n,
            mode,
            juliatherm_core::backward::Metric::Euclidean,
            &TreeConfig::default(),
        )
    })?;
    warnings.extend(ens.warnings.clone());

    let mut rows = String::from("kind,abscissa,value,n,atoms\n");
    let s_grid = grid_range(-1.0, 1.0, 0.125);
    for &s in &s_grid {
        rows.push_str(&format!(
            "mgf,{},{},{},{}\n",
            s,
            ens.mgf_rate(s),
            ens.depth,
            ens.atoms.len()
        ));
    }
    let mean = ens.mean_log_derivative();
    rows.push_str(&format!(
        "mean_log_deriv,0,{},{},{}\n",
        mean,
        ens.depth,
        ens.atoms.len()
    ));

    match attainable_eps(&curve, cfg.t0) {
        Ok((up, down)) => {
            for frac in [0.25, 0.5, 0.75] {
                let eps = up * frac;
                if eps > 0.0 {
                    match rate_function(&curve, cfg.t0, eps, DeviationSide::Upper) {
                        Ok(r) => rows.push_str(&format!("rate_upper,{eps},{r},{n},\n")),
                        Err(e) => warnings.push(format!("rate_upper eps {eps:.4}: {e}")),
                    }
                }
                let eps = down * frac;
                if eps > 0.0 {
                    match rate_function(&curve, cfg.t0, eps, DeviationSide::Lower) {
                        Ok(r) => rows.push_str(&format!("rate_lower,{eps},{r},{n},\n")),
                        Err(e) => warnings.push(format!("rate_lower eps {eps:.4}: {e}")),
                    }
                }
            }
        }
        Err(e) => warnings.push(format!("attainable eps range: {e}")),
    }

    for deps in [0.1, 0.2] {
        let thr = mean + deps;
        rows.push_str(&format!(
            "tail_upper,{},{},{},{}\n",
            thr,
            ens.tail_probability(thr, true),
            ens.depth,
            ens.atoms.len()
        ));
        let thr = mean - deps;
        rows.push_str(&format!(
            "tail_lower,{},{},{},{}\n",
            thr,
            ens.tail_probability(thr, false),
            ens.depth,
            ens.atoms.len()
        ));
    }
    write(cfg, "deviations.csv", &rows)?;

    let mut summary = base_summary(cfg, &timings, &warnings);
    summary["results"] = json!({
        "t0": cfg.t0,
        "n": ens.depth,
        "atoms": ens.atoms.len(),
        "mean_log_derivative": mean,
        "neg_slope_at_t0": curve.derivative(cfg.t0).ok().map(|(l, r)| -0.5 * (l + r)),
    });
    write(
        cfg,
        "summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    let _ = summary;
    Ok(TaskOutcome { exit_code: 0 })
}
