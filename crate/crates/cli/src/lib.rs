//! Command-line front end for the identification experiments.
//!
//! Configuration precedence: built-in defaults, then the `--config` file,
//! then `--set key=value` overrides, then `--runs` / `--seed`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use flaf_core::experiment::{
    run_block_sweep, run_ensemble, run_tracking, steady_state_emse, write_learning_curves,
    write_mixing, write_sweep, Algorithm, ExperimentConfig,
};
use flaf_core::{selftest, FlafError};

/// Default output directory when `--out-dir` is not given.
pub const OUTPUT_DIR_ENV: &str = "FLAF_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Steady-state EMSE over a range of block counts.
    Sweep,
    /// Nonlinearity switch at mid-run; learning curves and mixing trajectories.
    Tracking,
    /// One learning-curve experiment at fixed L_blocks.
    Single,
    /// Golden-trace and reduction-identity checks.
    Selftest,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "flaf",
    version,
    about = "Sparse functional-link filter experiments",
    arg_required_else_help = true
)]
pub struct Invocation {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Directory for CSV outputs.
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = ".", global = true)]
    pub out_dir: PathBuf,
    /// Number of Monte Carlo runs.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

pub fn parse_invocation<I, T>(argv: I) -> Result<Invocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Invocation::try_parse_from(argv)
}

/// Resolves and validates the experiment configuration.
pub fn resolve_config(inv: &Invocation) -> Result<ExperimentConfig, FlafError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &inv.config {
        let text = fs::read_to_string(path)
            .map_err(|e| FlafError::Usage(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for item in &inv.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| FlafError::Usage(format!("override '{item}' is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(r) = inv.runs {
        cfg.num_runs = r;
    }
    if let Some(s) = inv.seed {
        cfg.base_seed = s;
    }
    if inv.command == Command::Tracking && cfg.zeta_schedule.segments().len() != 2 {
        cfg = cfg.with_tracking_schedule(0.08, 0.05)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
    pub success: bool,
}

fn create(dir: &Path, name: &str) -> anyhow::Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

fn finish(path: PathBuf, mut w: BufWriter<File>, files: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn steady_lines(
    cfg: &ExperimentConfig,
    res: &flaf_core::experiment::EnsembleResult,
) -> anyhow::Result<Vec<String>> {
    let mut out = vec![format!("{:<12} {:>12}", "algorithm", "steady_dB")];
    for (a, t) in &res.traces {
        out.push(format!(
            "{:<12} {:>12.3}",
            a.name(),
            steady_state_emse(t, cfg.steady_window)?
        ));
    }
    Ok(out)
}

fn dispatch(inv: &Invocation) -> anyhow::Result<Outcome> {
    let mut outcome = Outcome {
        success: true,
        ..Default::default()
    };
    if inv.command == Command::Selftest {
        for c in selftest::run_all()? {
            outcome.success &= c.passed;
            outcome.summary.push(format!(
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        return Ok(outcome);
    }

    let cfg = resolve_config(inv)?;
    fs::create_dir_all(&inv.out_dir)
        .with_context(|| format!("cannot create {}", inv.out_dir.display()))?;
    match inv.command {
        Command::Sweep => {
            let table = run_block_sweep(&cfg, &cfg.block_counts)?;
            let (path, mut w) = create(&inv.out_dir, "sweep.csv")?;
            write_sweep(&mut w, &cfg, &table)?;
            finish(path, w, &mut outcome.files)?;
            outcome
                .summary
                .push(format!("{:<10} {:>12}", "L_blocks", "combined_dB"));
            for r in &table.rows {
                outcome
                    .summary
                    .push(format!("{:<10} {:>12.3}", r.l_blocks, r.combined_db));
            }
            for (a, v) in &table.baselines {
                outcome
                    .summary
                    .push(format!("{:<10} {:>12.3}", a.name(), v));
            }
        }
        Command::Tracking => {
            let res = run_tracking(&cfg)?;
            let (path, mut w) = create(&inv.out_dir, "tracking_emse.csv")?;
            write_learning_curves(&mut w, &cfg, "tracking", &res)?;
            finish(path, w, &mut outcome.files)?;
            if res.lambda_mean.is_some() {
                let (path, mut w) = create(&inv.out_dir, "tracking_mixing.csv")?;
                write_mixing(&mut w, &cfg, &res)?;
                finish(path, w, &mut outcome.files)?;
            } else if !cfg.algorithms.contains(&Algorithm::Combined) {
                outcome
                    .summary
                    .push("combined scheme not selected; no mixing trace written".into());
            }
            outcome.summary.extend(steady_lines(&cfg, &res)?);
        }
        Command::Single => {
            let res = run_ensemble(&cfg, false)?;
            let (path, mut w) = create(&inv.out_dir, "single_emse.csv")?;
            write_learning_curves(&mut w, &cfg, "single", &res)?;
            finish(path, w, &mut outcome.files)?;
            outcome.summary.extend(steady_lines(&cfg, &res)?);
        }
        Command::Selftest => unreachable!(),
    }
    Ok(outcome)
}

/// Runs an invocation, honoring `--threads`.
pub fn run(inv: &Invocation) -> anyhow::Result<Outcome> {
    match inv.threads {
        Some(0) => bail!("--threads must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot build thread pool")?
            .install(|| dispatch(inv)),
        None => dispatch(inv),
    }
}

/// Process exit status for an error: 2 for usage and configuration errors,
/// 1 otherwise.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<FlafError>() {
        Some(FlafError::Usage(_) | FlafError::Config(_)) => 2,
        _ => 1,
    }
}
