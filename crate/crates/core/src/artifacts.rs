//! Artifact emission: CSV curves, JSON summaries, JSONL tree dumps and
//! branch tables. Numbers are written with Rust's shortest round-trip
//! formatting so re-runs are byte-comparable.

use std::fmt::Write as _;

use crate::backward::BackTree;
use crate::deviations::WeightedEnsemble;
use crate::exceptional::ExceptionalSet;
use crate::inducing::BranchTable;
use crate::pressure::PressureCurve;
use crate::spectra::SpectrumSample;

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

/// Columns: t, P, P_lo, P_hi, slope_left, slope_right, source.
pub fn pressure_csv(curve: &PressureCurve) -> String {
    let mut out = String::from("t,P,P_lo,P_hi,slope_left,slope_right,source\n");
    let n = curve.grid.len();
    for i in 0..n {
        let t = curve.grid[i];
        let v = curve.values[i];
        let u = curve.uncertainty[i];
        let left = if i > 0 {
            (curve.values[i] - curve.values[i - 1]) / (curve.grid[i] - curve.grid[i - 1])
        } else {
            (curve.values[1] - curve.values[0]) / (curve.grid[1] - curve.grid[0])
        };
        let right = if i + 1 < n {
            (curve.values[i + 1] - curve.values[i]) / (curve.grid[i + 1] - curve.grid[i])
        } else {
            left
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(t),
            num(v),
            num(v - u),
            num(v + u),
            num(left),
            num(right),
            curve.sources[i]
        );
    }
    out
}

/// Summary block {chi_inf, chi_sup, t_minus, t_plus, t_star, exceptional}.
pub fn curve_summary(
    curve: &PressureCurve,
    exceptional: Option<&ExceptionalSet>,
) -> serde_json::Value {
    let exc = match exceptional {
        None => serde_json::json!(null),
        Some(set) => serde_json::json!({
            "mode": set.mode,
            "meets_julia": set.meets_julia,
            "points": set
                .points
                .iter()
                .map(|p| match p.finite() {
                    Some(z) => serde_json::json!([z.re, z.im]),
                    None => serde_json::json!("inf"),
                })
                .collect::<Vec<_>>(),
        }),
    };
    serde_json::json!({
        "chi_inf": curve.chi_inf,
        "chi_sup": curve.chi_sup,
        "t_minus": curve.t_minus,
        "t_plus": curve.t_plus,
        "t_star": curve.t_star,
        "hull_max_move": curve.hull_max_move,
        "warnings": curve.warnings,
        "exceptional": exc,
    })
}

/// Columns: abscissa, value, minimizer_t, tag.
pub fn spectrum_csv(samples: &[SpectrumSample]) -> String {
    let mut out = String::from("abscissa,value,minimizer_t,tag\n");
    for s in samples {
        let value = s.value.map(num).unwrap_or_else(|| "undefined".into());
        let mint = s.minimizer_t.map(num).unwrap_or_default();
        let tag = match s.tag {
            crate::spectra::SampleTag::Interior => "interior",
            crate::spectra::SampleTag::Boundary => "boundary",
            crate::spectra::SampleTag::Degenerate => "degenerate",
        };
        let _ = writeln!(out, "{},{},{},{}", num(s.abscissa), value, mint, tag);
    }
    out
}

/// Per-s rows of the scaled moment generating function.
pub fn mgf_csv(ens: &WeightedEnsemble, s_values: &[f64], rates: &[f64]) -> String {
    let mut out = String::from("s,mgf_rate,n,atoms\n");
    for (s, r) in s_values.iter().zip(rates) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(*s),
            num(*r),
            ens.depth,
            ens.atoms.len()
        );
    }
    out
}

/// One node per line: level, branch word, point, accumulated log-derivative.
pub fn tree_jsonl(tree: &BackTree) -> String {
    let mut out = String::new();
    for (level, nodes) in tree.levels.iter().enumerate() {
        for (i, node) in nodes.iter().enumerate() {
            let word = tree.word(level, i);
            let point = match node.point.finite() {
                Some(z) => serde_json::json!([z.re, z.im]),
                None => serde_json::json!("inf"),
            };
            let line = serde_json::json!({
                "level": level,
                "word": word,
                "point": point,
                "log_deriv": if node.acc_log_deriv.is_finite() {
                    serde_json::json!(node.acc_log_deriv)
                } else {
                    serde_json::json!("-inf")
                },
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    out
}

pub fn branch_table_json(table: &BranchTable) -> String {
    serde_json::to_string_pretty(table).expect("branch table serializes")
}

pub fn branch_table_from_json(s: &str) -> crate::Result<BranchTable> {
    serde_json::from_str(s).map_err(|e| crate::CoreError::Config {
        key: "branches".into(),
        reason: e.to_string(),
    })
}

/// Branch table CSV: word, m_W, home, target, S_W bounds, flags.
pub fn branches_csv(table: &BranchTable) -> String {
    let mut out =
        String::from("word,m_w,home,target,log_s_sup,log_s_center,log_s_koebe_cap,uncertain\n");
    for b in table.branches.iter().chain(&table.uncertain_branches) {
        let word: String = b
            .word
            .iter()
            .map(|l| char::from_digit(*l as u32, 36).unwrap_or('?'))
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            word,
            b.order,
            b.home,
            b.target,
            num(b.log_s_sup),
            num(b.log_s_center),
            num(b.log_s_koebe_cap),
            b.uncertain
        );
    }
    out
}
