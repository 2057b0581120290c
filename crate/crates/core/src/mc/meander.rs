use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::{walk, CHUNK};
use super::rng::StreamFactory;
use super::sampler::{check_point, HeavyStepSampler};
use crate::error::{domain, Error, Result};

/// Number of contiguous path batches whose counts are kept for error bars.
pub const BATCHES: usize = 16;

/// Product partition of a box; `edges[i]` are the increasing cut points on axis i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub edges: Vec<Vec<f64>>,
}

impl Binning {
    pub fn new(edges: Vec<Vec<f64>>) -> Result<Self> {
        if edges.is_empty() || edges.iter().any(|e| e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0]))) {
            return domain("each axis needs at least two increasing edges");
        }
        Ok(Binning { edges })
    }

    /// `k[i]` equal bins on [lo[i], hi[i]) per axis.
    pub fn uniform(lo: &[f64], hi: &[f64], k: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != k.len() || k.contains(&0) {
            return domain("uniform binning needs matching lo, hi, k with k >= 1");
        }
        let edges = (0..lo.len())
            .map(|i| (0..=k[i]).map(|j| lo[i] + (hi[i] - lo[i]) * j as f64 / k[i] as f64).collect())
            .collect();
        Self::new(edges)
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn len(&self) -> usize {
        self.edges.iter().map(|e| e.len() - 1).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index of the half-open bin holding `z`, if inside the window.
    pub fn locate(&self, z: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (e, &v) in self.edges.iter().zip(z) {
            if !(v >= e[0] && v < e[e.len() - 1]) {
                return None;
            }
            let j = e.partition_point(|t| *t <= v) - 1;
            idx = idx * (e.len() - 1) + j;
        }
        Some(idx)
    }

    fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (a, e) in self.edges.iter().enumerate().rev() {
            let k = e.len() - 1;
            out[a] = i % k;
            i /= k;
        }
        out
    }

    pub fn lower_corner(&self, i: usize) -> Vec<f64> {
        self.unravel(i).iter().zip(&self.edges).map(|(&j, e)| e[j]).collect()
    }

    pub fn upper_corner(&self, i: usize) -> Vec<f64> {
        self.unravel(i).iter().zip(&self.edges).map(|(&j, e)| e[j + 1]).collect()
    }

    pub fn volume(&self, i: usize) -> f64 {
        self.unravel(i).iter().zip(&self.edges).map(|(&j, e)| e[j + 1] - e[j]).product()
    }

    /// Largest bin width over all axes.
    pub fn max_width(&self) -> f64 {
        self.edges.iter().flat_map(|e| e.windows(2).map(|w| w[1] - w[0])).fold(0.0, f64::max)
    }
}

/// Empirical law of (x + S(n)) / c_n given tau_x > n, by rejection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanderHistogram {
    pub n: usize,
    pub scale: f64,
    pub start: Vec<f64>,
    pub binning: Binning,
    pub samples: u64,
    pub seed: u64,
    pub accepted: u64,
    /// accepted paths outside the window
    pub out_of_window: u64,
    /// accepted paths with first coordinate <= 0 (zero by construction)
    pub nonpositive_first: u64,
    /// counts per bin
    pub counts: Vec<u64>,
    /// counts per bin for each of `BATCHES` contiguous path batches; the last entry of each row is the out-of-window count
    pub batch_counts: Vec<Vec<u64>>,
}

impl MeanderHistogram {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.samples as f64
    }

    /// Bin masses normalized by the accepted count.
    pub fn masses(&self) -> Vec<f64> {
        let a = self.accepted as f64;
        self.counts.iter().map(|&c| c as f64 / a).collect()
    }

    pub fn out_of_window_mass(&self) -> f64 {
        self.out_of_window as f64 / self.accepted as f64
    }

    /// Bin masses divided by bin volumes.
    pub fn densities(&self) -> Vec<f64> {
        self.masses().iter().enumerate().map(|(i, m)| m / self.binning.volume(i)).collect()
    }

    /// Bin masses followed by the out-of-window mass, leaving out batch `skip`.
    fn cells_without(&self, skip: Option<usize>) -> Vec<f64> {
        let k = self.counts.len() + 1;
        let mut c = vec![0u64; k];
        for (b, row) in self.batch_counts.iter().enumerate() {
            if Some(b) == skip {
                continue;
            }
            c.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        let tot: u64 = c.iter().sum();
        c.iter().map(|&v| if tot == 0 { 0.0 } else { v as f64 / tot as f64 }).collect()
    }

    /// CSV with the lower corner of each bin and its mass.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.binning.dim()).map(|i| format!("z{i}")).collect();
        header.push("mass".into());
        w.write_record(&header)?;
        for (i, m) in self.masses().iter().enumerate() {
            let mut rec: Vec<String> = self.binning.lower_corner(i).iter().map(|v| format!("{v:.16e}")).collect();
            rec.push(format!("{m:.16e}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Histogram of (x + S(n)) / scale over paths with x_1 + S_1(k) > 0 for 1 <= k <= n.
/// `start` may lie on the boundary (x_1 = 0).
pub fn meander_histogram(
    s: &HeavyStepSampler,
    start: &[f64],
    n: usize,
    scale: f64,
    samples: u64,
    bins: &Binning,
    seed: u64,
) -> Result<MeanderHistogram> {
    check_point(start, s, 0.0)?;
    if n == 0 || !(scale > 0.0) || bins.dim() != s.dim() || samples == 0 {
        return domain("meander histogram needs n >= 1, scale > 0, matching binning and samples > 0");
    }
    let k = bins.len();
    let factory = StreamFactory::new(seed);
    let chunks = samples.div_ceil(CHUNK);
    let batch_of = |i: u64| (i as u128 * BATCHES as u128 / samples as u128) as usize;
    let parts: Vec<(Vec<Vec<u64>>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rows = vec![vec![0u64; k + 1]; BATCHES];
            let mut nonpos = 0u64;
            let mut pos = vec![0.0; s.dim()];
            let mut z = vec![0.0; s.dim()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = factory.stream(i);
                if !walk(s, start, n, &mut rng, &mut pos, |_, _| {}) {
                    continue;
                }
                z.iter_mut().zip(&pos).for_each(|(a, b)| *a = b / scale);
                if z[0] <= 0.0 {
                    nonpos += 1;
                }
                let cell = bins.locate(&z).unwrap_or(k);
                rows[batch_of(i)][cell] += 1;
            }
            (rows, nonpos)
        })
        .collect();
    let mut batch_counts = vec![vec![0u64; k + 1]; BATCHES];
    let mut nonpositive_first = 0;
    for (rows, np) in &parts {
        for (t, r) in batch_counts.iter_mut().zip(rows) {
            t.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
        nonpositive_first += np;
    }
    let mut counts = vec![0u64; k];
    let mut out_of_window = 0;
    for row in &batch_counts {
        counts.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        out_of_window += row[k];
    }
    let accepted = counts.iter().sum::<u64>() + out_of_window;
    if accepted == 0 {
        return Err(Error::InsufficientSamples(format!("no path out of {samples} survived {n} steps")));
    }
    Ok(MeanderHistogram {
        n,
        scale,
        start: start.to_vec(),
        binning: bins.clone(),
        samples,
        seed,
        accepted,
        out_of_window,
        nonpositive_first,
        counts,
        batch_counts,
    })
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn check_same(a: &MeanderHistogram, b: &MeanderHistogram) -> Result<()> {
    if a.binning != b.binning {
        return domain("histograms have different binnings");
    }
    Ok(())
}

/// Total variation over the bins plus the out-of-window cell.
pub fn tv_distance(a: &MeanderHistogram, b: &MeanderHistogram) -> Result<f64> {
    check_same(a, b)?;
    Ok(tv(&a.cells_without(None), &b.cells_without(None)))
}

/// Total variation with a delete-one-batch jackknife standard error.
pub fn tv_distance_with_error(a: &MeanderHistogram, b: &MeanderHistogram) -> Result<(f64, f64)> {
    check_same(a, b)?;
    let full = tv(&a.cells_without(None), &b.cells_without(None));
    let reps: Vec<f64> =
        (0..BATCHES).map(|j| tv(&a.cells_without(Some(j)), &b.cells_without(Some(j)))).collect();
    let mean = reps.iter().sum::<f64>() / BATCHES as f64;
    let var = reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() * (BATCHES - 1) as f64 / BATCHES as f64;
    Ok((full, var.sqrt()))
}
