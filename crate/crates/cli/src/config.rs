//! Run configuration: JSON file plus flag overrides, strict parsing.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use juliatherm_core::backward::Metric;
use juliatherm_core::{CoreError, MapSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Pressure,
    Exponents,
    Transitions,
    Spectra,
    Induced,
    Deviations,
}

impl Task {
    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s {
            "pressure" => Ok(Task::Pressure),
            "exponents" => Ok(Task::Exponents),
            "transitions" => Ok(Task::Transitions),
            "spectra" => Ok(Task::Spectra),
            "induced" => Ok(Task::Induced),
            "deviations" => Ok(Task::Deviations),
            other => Err(CoreError::Config {
                key: "task".into(),
                reason: format!("unknown task `{other}`"),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Pressure => "pressure",
            Task::Exponents => "exponents",
            Task::Transitions => "transitions",
            Task::Spectra => "spectra",
            Task::Induced => "induced",
            Task::Deviations => "deviations",
        }
    }
}

/// On-disk config; unknown keys are rejected with the key name.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub map: Option<String>,
    pub task: Option<String>,
    pub out: Option<String>,
    pub grid: Option<String>,
    pub depth: Option<i64>,
    pub depth_lo: Option<i64>,
    pub period: Option<i64>,
    pub max_return: Option<i64>,
    pub words: Option<i64>,
    pub metric: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<i64>,
    pub couple: Option<String>,
    pub branches_in: Option<String>,
    pub branches_out: Option<String>,
    pub boundary_samples: Option<i64>,
    pub verify_depth: Option<i64>,
    pub sampled_paths: Option<i64>,
    pub t0: Option<f64>,
    pub connected: Option<bool>,
    pub roots: Option<i64>,
    pub tree_out: Option<String>,
}

/// Flag-level overrides (None = not given on the command line).
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub map: Option<String>,
    pub out: Option<String>,
    pub grid: Option<String>,
    pub depth: Option<usize>,
    pub depth_lo: Option<usize>,
    pub period: Option<usize>,
    pub max_return: Option<usize>,
    pub words: Option<usize>,
    pub metric: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub couple: Option<String>,
    pub branches_in: Option<String>,
    pub branches_out: Option<String>,
    pub boundary_samples: Option<usize>,
    pub verify_depth: Option<usize>,
    pub sampled_paths: Option<usize>,
    pub t0: Option<f64>,
    pub connected: bool,
    pub roots: Option<usize>,
    pub tree_out: Option<String>,
}

/// Fully resolved configuration with defaults filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub map_path: String,
    pub map: MapSpec,
    pub out_dir: PathBuf,
    pub grid: (f64, f64, f64),
    pub depth_hi: usize,
    pub depth_lo: usize,
    pub period_cap: usize,
    pub max_return: usize,
    pub words: usize,
    pub metric: Metric,
    pub seed: u64,
    pub threads: usize,
    pub couple: Option<(f64, f64)>,
    pub branches_in: Option<PathBuf>,
    pub branches_out: Option<PathBuf>,
    pub boundary_samples: usize,
    pub verify_depth: usize,
    pub sampled_paths: Option<usize>,
    pub t0: f64,
    pub connected: bool,
    pub roots: usize,
    pub tree_out: Option<PathBuf>,
}

fn positive(key: &str, v: i64) -> Result<usize, CoreError> {
    if v <= 0 {
        return Err(CoreError::Config {
            key: key.into(),
            reason: format!("must be positive, got {v}"),
        });
    }
    Ok(v as usize)
}

fn parse_grid(s: &str) -> Result<(f64, f64, f64), CoreError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |reason: &str| CoreError::Config {
        key: "grid".into(),
        reason: reason.to_string(),
    };
    if parts.len() != 3 {
        return Err(bad("expected a:b:step"));
    }
    let a: f64 = parts[0].parse().map_err(|_| bad("bad lower bound"))?;
    let b: f64 = parts[1].parse().map_err(|_| bad("bad upper bound"))?;
    let step: f64 = parts[2].parse().map_err(|_| bad("bad step"))?;
    if step.is_nan() || a.is_nan() || b.is_nan() || step <= 0.0 || b <= a {
        return Err(bad("need a < b and step > 0"));
    }
    Ok((a, b, step))
}

fn parse_couple(s: &str) -> Result<(f64, f64), CoreError> {
    let bad = |reason: &str| CoreError::Config {
        key: "couple".into(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(bad("expected r_v:r_vhat"));
    }
    let rv: f64 = parts[0].parse().map_err(|_| bad("bad r_v"))?;
    let rh: f64 = parts[1].parse().map_err(|_| bad("bad r_vhat"))?;
    if !(rv > 0.0 && rh > rv) {
        return Err(bad("need 0 < r_v < r_vhat"));
    }
    Ok((rv, rh))
}

fn parse_metric(s: &str) -> Result<Metric, CoreError> {
    match s {
        "spherical" => Ok(Metric::Spherical),
        "euclidean" => Ok(Metric::Euclidean),
        other => Err(CoreError::Config {
            key: "metric".into(),
            reason: format!("unknown metric `{other}`"),
        }),
    }
}

/// Merge file config and flag overrides into a validated RunConfig.
/// Precedence: defaults < file < flags.
pub fn resolve(
    task_flag: Option<Task>,
    config_path: Option<&Path>,
    flags: &Overrides,
) -> Result<RunConfig, CoreError> {
    let file: FileConfig = match config_path {
        None => FileConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CoreError::Config {
                key: "config".into(),
                reason: format!("{}: {e}", p.display()),
            })?;
            serde_json::from_str(&text).map_err(|e| CoreError::Config {
                key: "config".into(),
                reason: e.to_string(),
            })?
        }
    };

    let task = match task_flag {
        Some(t) => t,
        None => Task::parse(file.task.as_deref().ok_or_else(|| CoreError::Config {
            key: "task".into(),
            reason: "no task given on the command line or in the config file".into(),
        })?)?,
    };

    let map_path = flags
        .map
        .clone()
        .or(file.map.clone())
        .ok_or_else(|| CoreError::Config {
            key: "map".into(),
            reason: "a map specification file is required".into(),
        })?;
    let map_text = std::fs::read_to_string(&map_path).map_err(|e| CoreError::Config {
        key: "map".into(),
        reason: format!("{map_path}: {e}"),
    })?;
    let map = MapSpec::from_json_str(&map_text)?;

    let grid_str = flags
        .grid
        .clone()
        .or(file.grid.clone())
        .unwrap_or_else(|| "-3:3:0.1".into());
    let grid = parse_grid(&grid_str)?;

    let depth_hi = match (flags.depth, file.depth) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("depth", v)?,
        _ => 18,
    };
    let depth_lo = match (flags.depth_lo, file.depth_lo) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("depth_lo", v)?,
        _ => (depth_hi * 2 / 3).max(1),
    };
    if depth_lo >= depth_hi {
        return Err(CoreError::Config {
            key: "depth_lo".into(),
            reason: format!("depth_lo {depth_lo} must be below depth {depth_hi}"),
        });
    }
    let period_cap = match (flags.period, file.period) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("period", v)?,
        _ => 1024,
    };
    let max_return = match (flags.max_return, file.max_return) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("max_return", v)?,
        _ => 20,
    };
    let words = match (flags.words, file.words) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("words", v)?,
        _ => 24,
    };
    let metric = match (&flags.metric, &file.metric) {
        (Some(s), _) => parse_metric(s)?,
        (None, Some(s)) => parse_metric(s)?,
        _ => Metric::Spherical,
    };
    let seed_given = flags.seed.is_some() || file.seed.is_some();
    let seed = flags.seed.or(file.seed).unwrap_or(0);
    let threads = match (flags.threads, file.threads) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("threads", v)?,
        _ => 0, // rayon default
    };
    let couple = match (&flags.couple, &file.couple) {
        (Some(s), _) => Some(parse_couple(s)?),
        (None, Some(s)) => Some(parse_couple(s)?),
        _ => None,
    };
    let boundary_samples = match (flags.boundary_samples, file.boundary_samples) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("boundary_samples", v)?,
        _ => 4096,
    };
    let verify_depth = match (flags.verify_depth, file.verify_depth) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("verify_depth", v)?,
        _ => 200,
    };
    let sampled_paths = match (flags.sampled_paths, file.sampled_paths) {
        (Some(v), _) => Some(v),
        (None, Some(v)) => Some(positive("sampled_paths", v)?),
        _ => None,
    };
    if sampled_paths.is_some() && !seed_given {
        return Err(CoreError::Config {
            key: "seed".into(),
            reason: "sampled mode requires an explicit seed".into(),
        });
    }
    let roots = match (flags.roots, file.roots) {
        (Some(v), _) => v,
        (None, Some(v)) => positive("roots", v)?,
        _ => 2,
    };

    Ok(RunConfig {
        task,
        map_path,
        map,
        out_dir: PathBuf::from(
            flags
                .out
                .clone()
                .or(file.out.clone())
                .unwrap_or_else(|| ".".into()),
        ),
        grid,
        depth_hi,
        depth_lo,
        period_cap,
        max_return,
        words,
        metric,
        seed,
        threads,
        couple,
        branches_in: flags
            .branches_in
            .clone()
            .or(file.branches_in.clone())
            .map(PathBuf::from),
        branches_out: flags
            .branches_out
            .clone()
            .or(file.branches_out.clone())
            .map(PathBuf::from),
        boundary_samples,
        verify_depth,
        sampled_paths,
        t0: flags.t0.or(file.t0).unwrap_or(0.0),
        connected: flags.connected || file.connected.unwrap_or(false),
        roots,
        tree_out: flags
            .tree_out
            .clone()
            .or(file.tree_out.clone())
            .map(PathBuf::from),
    })
}
