use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use halfspace_core::harness::{self, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(name = "halfspace", version, about = "Random walks killed on leaving the half space {x_1 > 0}")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact local probabilities and survival for a lattice walk
    Exact(RunArgs),
    /// Monte Carlo local probabilities and survival
    Mc(RunArgs),
    /// Measured values against the asymptotic predictors, by regime
    Compare(RunArgs),
    /// Green function, exact with a tail bound or by Monte Carlo
    Green(RunArgs),
    /// Meander histograms and total variation between consecutive times
    Meander(RunArgs),
    /// Quick invariant suite
    Verify(RunArgs),
    /// c_n, survival and renewal tables with power-law fits
    Table(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// overrides the config sample count
    #[arg(long)]
    samples: Option<u64>,
    /// output directory (relative paths resolve against the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads; results do not depend on this
    #[arg(long)]
    threads: Option<usize>,
}

fn run(mode: Mode, args: RunArgs) -> anyhow::Result<bool> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring the thread pool")?;
    }
    let mut cfg = ExperimentConfig::from_path(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    cfg.mode = mode;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(out) = args.out {
        cfg.output.dir = std::env::current_dir()?.join(out);
    }
    let (report, dir) = harness::run(&cfg, &base)?;
    let s = &report.summary;
    println!("{} rows written to {}", s.rows, dir.display());
    for i in &s.invariants {
        println!("[{}] {}: {}", if i.passed { "ok" } else { "FAILED" }, i.name, i.detail);
    }
    for (k, c) in &s.constants {
        println!("constant {k}: {:.6e} (dispersion {:.3}{})", c.value, c.dispersion, if c.unstable { ", unstable" } else { "" });
    }
    for (k, f) in &s.fits {
        println!("fit {k}: index {:.4}, rms {:.2e}", f.index, f.residual_rms);
    }
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    Ok(s.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Exact(a) => (Mode::Exact, a),
        Command::Mc(a) => (Mode::Mc, a),
        Command::Compare(a) => (Mode::Compare, a),
        Command::Green(a) => (Mode::Green, a),
        Command::Meander(a) => (Mode::Meander, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Table(a) => (Mode::Table, a),
    };
    match run(mode, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
