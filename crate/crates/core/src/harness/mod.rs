//! Config-driven experiments: read a JSON config, run one mode, write
//! `rows.csv`, `summary.json` and optionally a gnuplot script.

mod config;
mod modes;
mod rows;
mod verify;

pub use config::{ExperimentConfig, GridSpec, Mode, OutputSpec, PointSet, Tolerances, WalkSpec};
pub use rows::{fit_constant, write_rows, ComparisonRow, ConstantFit, Regime, RegimeGates, Statistic, CSV_HEADER};
pub use verify::verify_suite;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::SvFit;
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Invariant {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Invariant { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub samples: u64,
    pub rows: usize,
    pub invariants: Vec<Invariant>,
    /// fitted constants keyed by regime or quantity
    pub constants: BTreeMap<String, ConstantFit>,
    /// power-law fits keyed by series name
    pub fits: BTreeMap<String, SvFit>,
    pub warnings: Vec<String>,
    /// every invariant held
    pub passed: bool,
}

/// Output of one run before anything is written.
#[derive(Clone, Debug)]
pub struct Report {
    pub rows: Vec<ComparisonRow>,
    pub summary: Summary,
    /// extra CSV files (name, contents), e.g. meander histograms
    pub files: Vec<(String, String)>,
}

/// Runs the configured mode. `base` resolves relative paths in the config.
pub fn execute(cfg: &ExperimentConfig, base: &Path) -> Result<Report> {
    cfg.validate()?;
    let step = cfg.walk.build(base)?;
    let out = match cfg.mode {
        Mode::Exact => modes::exact(cfg, &step)?,
        Mode::Mc => modes::monte_carlo(cfg, &step)?,
        Mode::Compare => modes::compare(cfg, &step)?,
        Mode::Green => modes::green(cfg, &step)?,
        Mode::Meander => modes::meander(cfg, &step)?,
        Mode::Table => modes::table(cfg, &step)?,
        Mode::Verify => modes::Outcome { invariants: verify_suite(cfg, &step)?, ..Default::default() },
    };
    let passed = out.invariants.iter().all(|i| i.passed);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        mode: cfg.mode,
        seed: cfg.seed,
        samples: cfg.samples,
        rows: out.rows.len(),
        invariants: out.invariants,
        constants: out.constants,
        fits: out.fits,
        warnings: out.warnings,
        passed,
    };
    Ok(Report { rows: out.rows, summary, files: out.files })
}

const PLOT: &str = "set datafile separator ','
set logscale xy
set xlabel 'predicted'
set ylabel 'measured'
set key top left
plot 'rows.csv' every ::1 using 8:5 with points pt 7 ps 0.6 title 'rows', x with lines title 'measured = predicted'
";

/// Executes and writes the outputs into `base / cfg.output.dir`; returns the report and the directory.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<(Report, PathBuf)> {
    let report = execute(cfg, base)?;
    let dir = base.join(&cfg.output.dir);
    std::fs::create_dir_all(&dir)?;
    write_rows(std::fs::File::create(dir.join("rows.csv"))?, &report.rows)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report.summary)? + "\n")?;
    std::fs::write(dir.join("config.json"), cfg.to_json() + "\n")?;
    for (name, text) in &report.files {
        std::fs::write(dir.join(name), text)?;
    }
    if cfg.output.plot {
        std::fs::write(dir.join("plot.gp"), PLOT)?;
    }
    Ok((report, dir))
}
