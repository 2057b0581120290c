use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step::{ContinuousStep, LatticeStep, StepDistribution};

/// The increment law of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WalkSpec {
    /// nearest-neighbour simple random walk on Z^dim
    Srw { dim: usize },
    Lattice { support: Vec<Vec<i64>>, probs: Vec<f64> },
    /// JSON file with `support` and `probs`, relative to the config file
    LatticeFile { path: PathBuf },
    /// P(X = k) proportional to |k|^{-1-alpha}, 0 < |k| <= k_max
    ParetoLattice { alpha: f64, k_max: i64 },
    /// lazy isotropic lattice law, see `LatticeStep::pareto_isotropic`
    IsotropicLattice { dim: usize, alpha: f64, k_max: i64, k1_max: i64, q: f64 },
    Continuous { step: ContinuousStep },
}

impl WalkSpec {
    pub fn build(&self, base: &Path) -> Result<StepDistribution> {
        Ok(match self {
            WalkSpec::Srw { dim } => StepDistribution::Lattice(LatticeStep::srw(*dim)),
            WalkSpec::Lattice { support, probs } => {
                let dim = support.first().map(|p| p.len()).unwrap_or(0);
                StepDistribution::Lattice(LatticeStep::new(dim, support.clone(), probs.clone())?)
            }
            WalkSpec::LatticeFile { path } => {
                let text = std::fs::read_to_string(base.join(path))?;
                StepDistribution::Lattice(LatticeStep::from_json(&text)?)
            }
            WalkSpec::ParetoLattice { alpha, k_max } => StepDistribution::Lattice(LatticeStep::pareto_1d(*alpha, *k_max)?),
            WalkSpec::IsotropicLattice { dim, alpha, k_max, k1_max, q } => {
                StepDistribution::Lattice(LatticeStep::pareto_isotropic(*dim, *alpha, *k_max, *k1_max, *q)?)
            }
            WalkSpec::Continuous { step } => {
                step.validate()?;
                StepDistribution::Continuous(step.clone())
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc,
    Compare,
    Green,
    Meander,
    Verify,
    Table,
}

impl Mode {
    pub fn needs_seed(self) -> bool {
        matches!(self, Mode::Mc | Mode::Meander | Mode::Compare)
    }
}

/// A set of points: an explicit list or every integer point of a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSet {
    Points(Vec<Vec<f64>>),
    Box { lo: Vec<i64>, hi: Vec<i64> },
}

impl PointSet {
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            PointSet::Points(p) => p.clone(),
            PointSet::Box { lo, hi } => {
                let mut out = vec![vec![]];
                for (a, b) in lo.iter().zip(hi) {
                    let mut next = Vec::new();
                    for p in &out {
                        for v in *a..=*b {
                            let mut q = p.clone();
                            q.push(v as f64);
                            next.push(q);
                        }
                    }
                    out = next;
                }
                if lo.is_empty() || lo.len() != hi.len() {
                    Vec::new()
                } else {
                    out
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: PointSet,
    #[serde(default = "empty_points")]
    pub y: PointSet,
    #[serde(default)]
    pub n: Vec<usize>,
}

fn empty_points() -> PointSet {
    PointSet::Points(Vec::new())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// also write a gnuplot script next to the CSV
    #[serde(default)]
    pub plot: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_out(), plot: false }
    }
}

/// Tunable gates and targets; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// delta_n = delta_scale / ln n bounds the small-deviation boundary distances
    pub delta_scale: f64,
    /// |x - y| >= large_dev_a c_n marks a large deviation
    pub large_dev_a: f64,
    /// Green truncation tail target
    pub horizon_tail: f64,
    /// Green horizon (exact truncation or MC horizon)
    pub horizon: usize,
    /// side of the MC cubes
    pub cube: f64,
    /// meander window [0, window) per axis (transverse axes are centred)
    pub meander_window: f64,
    pub meander_bins: usize,
    /// allowed escaped mass per exact run
    pub max_escaped: f64,
    /// clips exact boxes to x_1 + e on the first axis and x_i +- e on the others
    pub box_extent: Option<i64>,
    /// kernel standard deviation of the smoothed meander density, in bin widths
    pub bandwidth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            delta_scale: 1.0,
            large_dev_a: 5.0,
            horizon_tail: 1e-3,
            horizon: 10_000,
            cube: 1.0,
            meander_window: 5.0,
            meander_bins: 10,
            max_escaped: 1e-12,
            box_extent: None,
            bandwidth: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub walk: WalkSpec,
    pub mode: Mode,
    pub grid: GridSpec,
    #[serde(default)]
    pub samples: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.grid.x.points().is_empty() {
            return bad("grid.x is empty");
        }
        let needs_y = matches!(self.mode, Mode::Exact | Mode::Mc | Mode::Compare | Mode::Green);
        if needs_y && self.grid.y.points().is_empty() {
            return bad("grid.y is empty");
        }
        let needs_n = matches!(self.mode, Mode::Exact | Mode::Mc | Mode::Compare | Mode::Meander | Mode::Table);
        if needs_n && self.grid.n.is_empty() {
            return bad("grid.n is empty");
        }
        if self.mode.needs_seed() && self.seed.is_none() {
            return bad("a seed is required for Monte Carlo modes");
        }
        let mc = matches!(self.mode, Mode::Mc | Mode::Meander)
            || (matches!(self.mode, Mode::Compare | Mode::Green) && matches!(self.walk, WalkSpec::Continuous { .. }));
        if mc && self.samples == 0 {
            return bad("samples must be positive for Monte Carlo estimates");
        }
        if mc && self.seed.is_none() {
            return bad("a seed is required for Monte Carlo estimates");
        }
        if self.mode == Mode::Compare && self.samples == 0 {
            // normal deviations need a meander histogram
            return bad("compare mode needs samples > 0 for the meander density");
        }
        Ok(())
    }
}
