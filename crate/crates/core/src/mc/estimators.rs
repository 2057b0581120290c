use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{PathRng, StreamFactory};
use super::sampler::{check_point, HeavyStepSampler};
use crate::error::{domain, Result};

/// Paths per work unit. Fixed, so the reduction order never depends on threads.
pub(crate) const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// sample standard deviation / sqrt(n_samples)
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl Estimate {
    /// |value - target| in units of stderr (infinite when stderr = 0 and they differ).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Running mean and centred second moment, merged pairwise.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub(crate) fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub(crate) fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    pub(crate) fn estimate(&self, seed: u64) -> Estimate {
        let var = if self.n > 1 { (self.m2 / (self.n - 1) as f64).max(0.0) } else { 0.0 };
        Estimate { value: self.mean, stderr: (var / self.n as f64).sqrt(), n_samples: self.n, seed }
    }
}

/// Runs `per_path` for paths 0..samples, each on its own stream, and reduces
/// the `k` values it writes per path in chunk order.
pub(crate) fn run_paths<F>(samples: u64, seed: u64, k: usize, per_path: F) -> Vec<Moments>
where
    F: Fn(&mut PathRng, &mut [f64]) + Sync,
{
    let factory = StreamFactory::new(seed);
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); k];
            let mut out = vec![0.0; k];
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut rng = factory.stream(i);
                out.iter_mut().for_each(|v| *v = 0.0);
                per_path(&mut rng, &mut out);
                for (a, v) in acc.iter_mut().zip(&out) {
                    a.push(*v);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); k];
    for p in &parts {
        for (t, m) in total.iter_mut().zip(p) {
            t.merge(m);
        }
    }
    total
}

/// Walks one path from `x` for at most `n` steps, calling `visit(k, position)`
/// at every time k the walk is still alive (k = 0 included). The walk dies at
/// the first k >= 1 with first coordinate <= 0. Returns whether it survived n steps.
#[inline]
pub(crate) fn walk<F>(s: &HeavyStepSampler, x: &[f64], n: usize, rng: &mut PathRng, pos: &mut [f64], mut visit: F) -> bool
where
    F: FnMut(usize, &[f64]),
{
    pos.copy_from_slice(x);
    visit(0, pos);
    if s.dim() == 1 {
        let mut p = pos[0];
        for k in 1..=n {
            p += s.sample_1d(rng);
            if p <= 0.0 {
                return false;
            }
            pos[0] = p;
            visit(k, pos);
        }
        return true;
    }
    let mut inc = [0.0f64; 8];
    let inc = &mut inc[..s.dim()];
    for k in 1..=n {
        s.sample(rng, inc);
        for (a, b) in pos.iter_mut().zip(inc.iter()) {
            *a += b;
        }
        if pos[0] <= 0.0 {
            return false;
        }
        visit(k, pos);
    }
    true
}

#[inline]
fn in_cube(z: &[f64], y: &[f64], r: f64) -> bool {
    z.iter().zip(y).all(|(a, b)| *a >= *b && *a < *b + r)
}

fn check_common(s: &HeavyStepSampler, x: &[f64], samples: u64) -> Result<()> {
    check_point(x, s, f64::MIN_POSITIVE)?;
    if s.dim() > 8 {
        return domain("dimension above 8 is not supported");
    }
    if samples == 0 {
        return domain("need at least one sample");
    }
    Ok(())
}

fn check_cube(s: &HeavyStepSampler, y: &[f64], r: f64) -> Result<()> {
    check_point(y, s, f64::MIN_POSITIVE)?;
    if !(r > 0.0) {
        return domain(format!("cube side must be positive, got {r}"));
    }
    Ok(())
}

/// P(tau_x > n).
pub fn estimate_survival(s: &HeavyStepSampler, x: &[f64], n: usize, samples: u64, seed: u64) -> Result<Estimate> {
    check_common(s, x, samples)?;
    let m = run_paths(samples, seed, 1, |rng, out| {
        let mut pos = vec![0.0; s.dim()];
        if walk(s, x, n, rng, &mut pos, |_, _| {}) {
            out[0] = 1.0;
        }
    });
    Ok(m[0].estimate(seed))
}

/// P(x + S(n) in y + r[0,1)^d, tau_x > n).
pub fn estimate_pn_cube(
    s: &HeavyStepSampler,
    x: &[f64],
    y: &[f64],
    r: f64,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_common(s, x, samples)?;
    check_cube(s, y, r)?;
    let m = run_paths(samples, seed, 1, |rng, out| {
        let mut pos = vec![0.0; s.dim()];
        if walk(s, x, n, rng, &mut pos, |_, _| {}) && in_cube(&pos, y, r) {
            out[0] = 1.0;
        }
    });
    Ok(m[0].estimate(seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenCubeEstimate {
    pub y: Vec<f64>,
    /// mean occupation of the cube over times 0..=min(tau_x - 1, horizon)
    pub estimate: Estimate,
    pub horizon: usize,
    /// fraction of paths still alive at the horizon
    pub alive_at_horizon: f64,
    /// caller-supplied bound on the occupation after the horizon
    pub bias_bound: Option<f64>,
    /// false when the bias bound exceeds the requested precision
    pub precision_ok: Option<bool>,
}

impl GreenCubeEstimate {
    pub fn with_bias_bound(mut self, bound: f64, target: f64) -> Self {
        self.bias_bound = Some(bound);
        self.precision_ok = Some(bound <= target);
        self
    }
}

/// Occupation estimates of G(x, y + r[0,1)^d) for several cubes from one set of paths.
pub fn estimate_green_cubes(
    s: &HeavyStepSampler,
    x: &[f64],
    ys: &[Vec<f64>],
    r: f64,
    horizon: usize,
    samples: u64,
    seed: u64,
) -> Result<Vec<GreenCubeEstimate>> {
    check_common(s, x, samples)?;
    for y in ys {
        check_cube(s, y, r)?;
    }
    let k = ys.len();
    let m = run_paths(samples, seed, k + 1, |rng, out| {
        let mut pos = vec![0.0; s.dim()];
        let (occ, alive) = out.split_at_mut(k);
        if walk(s, x, horizon, rng, &mut pos, |_, z| {
            for (o, y) in occ.iter_mut().zip(ys) {
                if in_cube(z, y, r) {
                    *o += 1.0;
                }
            }
        }) {
            alive[0] = 1.0;
        }
    });
    let alive = m[k].estimate(seed).value;
    Ok(ys
        .iter()
        .zip(&m)
        .map(|(y, mm)| GreenCubeEstimate {
            y: y.clone(),
            estimate: mm.estimate(seed),
            horizon,
            alive_at_horizon: alive,
            bias_bound: None,
            precision_ok: None,
        })
        .collect())
}

pub fn estimate_green_cube(
    s: &HeavyStepSampler,
    x: &[f64],
    y: &[f64],
    r: f64,
    horizon: usize,
    samples: u64,
    seed: u64,
) -> Result<GreenCubeEstimate> {
    Ok(estimate_green_cubes(s, x, &[y.to_vec()], r, horizon, samples, seed)?.remove(0))
}

/// Mean over paths of (1/n) #{k <= n : S_1(k) > 0} for the free walk from the origin.
pub fn estimate_positivity(s: &HeavyStepSampler, n: usize, samples: u64, seed: u64) -> Result<Estimate> {
    if n == 0 || samples == 0 {
        return domain("need n >= 1 and at least one sample");
    }
    let m = run_paths(samples, seed, 1, |rng, out| {
        let mut pos = vec![0.0; s.dim()];
        let mut inc = vec![0.0; s.dim()];
        let mut hits = 0u64;
        for _ in 0..n {
            s.sample(rng, &mut inc);
            for (a, b) in pos.iter_mut().zip(&inc) {
                *a += b;
            }
            if pos[0] > 0.0 {
                hits += 1;
            }
        }
        out[0] = hits as f64 / n as f64;
    });
    Ok(m[0].estimate(seed))
}
