//! Batch frontend for the thermodynamic-formalism toolkit.
//!
//! Exit codes: 0 success, 1 computation error, 2 config error,
//! 3 verification failure (e.g. a rejected couple).

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, Task};
use juliatherm_core::CoreError;

#[derive(Parser)]
#[command(
    name = "juliatherm",
    version,
    about = "Pressure curves, phase transitions, induced maps and multifractal spectra of rational maps"
)]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    task: Option<TaskCmd>,
}

#[derive(Subcommand)]
enum TaskCmd {
    /// Assemble the fused pressure curve P(t) and its summary.
    Pressure(CommonArgs),
    /// Periodic-orbit exponents, tree extremal rates and the sup rate.
    Exponents(CommonArgs),
    /// Phase-transition points and linear-asymptote residuals.
    Transitions(CommonArgs),
    /// Lyapunov / pointwise-dimension / integral-means spectra.
    Spectra(CommonArgs),
    /// Nice-couple verification and the canonical induced map.
    Induced(CommonArgs),
    /// Weighted preimage ensembles and level-1 large deviations.
    Deviations(CommonArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Map specification JSON (`{"numerator": [[re,im],...], ...}`).
    #[arg(long)]
    map: Option<String>,
    /// Output directory for CSV artifacts and summary.json.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (0 = rayon default).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for sampled modes and root selection.
    #[arg(long)]
    seed: Option<u64>,
    /// Derivative metric: spherical | euclidean.
    #[arg(long)]
    metric: Option<String>,
    /// Parameter grid a:b:step.
    #[arg(long)]
    grid: Option<String>,
    /// Exact backward-tree depth (deep level).
    #[arg(long)]
    depth: Option<usize>,
    /// Shallow comparison level for the tree difference quotient.
    #[arg(long)]
    depth_lo: Option<usize>,
    /// Cap on d^m for periodic-orbit solves.
    #[arg(long)]
    period: Option<usize>,
    /// Maximum return time for induced-branch enumeration.
    #[arg(long)]
    max_return: Option<usize>,
    /// Word length for truncated Z_n evaluations.
    #[arg(long)]
    words: Option<usize>,
    /// Couple radii r_v:r_vhat for the induced task.
    #[arg(long)]
    couple: Option<String>,
    /// Reuse a serialized branch table instead of enumerating.
    #[arg(long)]
    branches_in: Option<String>,
    /// Write the branch table JSON here for reuse.
    #[arg(long)]
    branches_out: Option<String>,
    /// Boundary samples per couple component during verification.
    #[arg(long)]
    boundary_samples: Option<usize>,
    /// Forward-iteration depth for couple verification.
    #[arg(long)]
    verify_depth: Option<usize>,
    /// Sampled-tree mode with this many backward paths (needs --seed).
    #[arg(long)]
    sampled_paths: Option<usize>,
    /// Inverse temperature t0 for deviation ensembles.
    #[arg(long)]
    t0: Option<f64>,
    /// Assert the Julia set is connected (gates D(alpha) and beta).
    #[arg(long, default_value_t = false)]
    connected: bool,
    /// Number of independent tree roots.
    #[arg(long)]
    roots: Option<usize>,
    /// Dump an audit backward tree (JSON lines) to this path.
    #[arg(long)]
    tree_out: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            map: self.map.clone(),
            out: self.out.clone(),
            grid: self.grid.clone(),
            depth: self.depth,
            depth_lo: self.depth_lo,
            period: self.period,
            max_return: self.max_return,
            words: self.words,
            metric: self.metric.clone(),
            seed: self.seed,
            threads: self.threads,
            couple: self.couple.clone(),
            branches_in: self.branches_in.clone(),
            branches_out: self.branches_out.clone(),
            boundary_samples: self.boundary_samples,
            verify_depth: self.verify_depth,
            sampled_paths: self.sampled_paths,
            t0: self.t0,
            connected: self.connected,
            roots: self.roots,
            tree_out: self.tree_out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match &cli.task {
        Some(TaskCmd::Pressure(a)) => (Some(Task::Pressure), a.clone()),
        Some(TaskCmd::Exponents(a)) => (Some(Task::Exponents), a.clone()),
        Some(TaskCmd::Transitions(a)) => (Some(Task::Transitions), a.clone()),
        Some(TaskCmd::Spectra(a)) => (Some(Task::Spectra), a.clone()),
        Some(TaskCmd::Induced(a)) => (Some(Task::Induced), a.clone()),
        Some(TaskCmd::Deviations(a)) => (Some(Task::Deviations), a.clone()),
        None => (None, CommonArgs::default()),
    };

    let cfg = match config::resolve(task, cli.config.as_deref(), &args.overrides()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
        {
            eprintln!("thread pool: {e}");
        }
    }

    match tasks::run_task(&cfg) {
        Ok(outcome) => {
            println!(
                "{} finished: artifacts in {}",
                cfg.task.name(),
                cfg.out_dir.display()
            );
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                CoreError::VerificationFailed { .. } => 3,
                CoreError::Config { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
