use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::numerics::{good_size, ConvPlan};
use crate::step::{LatticeStep, Marginal};

/// Inclusive integer box [lo, hi] in Z^d, row-major with the last axis contiguous.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return domain(format!("bad box {lo:?}..{hi:?}"));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// Box holding every point reachable from `x` in `n` steps, first
    /// coordinates clipped below at `floor`.
    pub fn reachable(step: &LatticeStep, x: &[i64], n: usize, floor: i64) -> Self {
        let (zlo, zhi) = step.extent();
        let n = n as i64;
        let lo: Vec<i64> = (0..step.dim()).map(|k| x[k] + n * zlo[k].min(0)).collect();
        let hi: Vec<i64> = (0..step.dim()).map(|k| x[k] + n * zhi[k].max(0)).collect();
        let mut lo = lo;
        lo[0] = lo[0].max(floor).min(x[0]);
        LatticeBox { lo, hi }
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &LatticeBox) -> Self {
        LatticeBox {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.min(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.max(b)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn index(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.dim() || !self.contains(p) {
            return None;
        }
        let mut idx = 0usize;
        for k in 0..self.dim() {
            idx = idx * (self.hi[k] - self.lo[k] + 1) as usize + (p[k] - self.lo[k]) as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut i: usize) -> Vec<i64> {
        let shape = self.shape();
        let mut p = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            p[k] = self.lo[k] + (i % shape[k]) as i64;
            i /= shape[k];
        }
        p
    }

    /// Number of cells per first-coordinate slab.
    pub fn slab(&self) -> usize {
        self.shape()[1..].iter().product()
    }
}

/// Mass over lattice points at a fixed time, with ledgers for mass absorbed
/// by the killing rule and mass that left the box.
#[derive(Clone, Debug, PartialEq)]
pub struct KilledField {
    pub time: usize,
    pub bbox: LatticeBox,
    pub mass: Vec<f64>,
    pub killed_mass: f64,
    pub escaped_mass: f64,
}

impl KilledField {
    pub fn point_mass(bbox: LatticeBox, x: &[i64]) -> Result<Self> {
        let mut mass = vec![0.0; bbox.len()];
        let i = bbox.index(x).ok_or_else(|| Error::Domain(format!("start {x:?} outside box")))?;
        mass[i] = 1.0;
        Ok(KilledField { time: 0, bbox, mass, killed_mass: 0.0, escaped_mass: 0.0 })
    }

    pub fn zero(bbox: LatticeBox) -> Self {
        let mass = vec![0.0; bbox.len()];
        KilledField { time: 0, bbox, mass, killed_mass: 0.0, escaped_mass: 0.0 }
    }

    pub fn at(&self, p: &[i64]) -> f64 {
        self.bbox.index(p).map(|i| self.mass[i]).unwrap_or(0.0)
    }

    pub fn live_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass summed over each first-coordinate slab.
    pub fn slab_masses(&self) -> Vec<f64> {
        self.mass.chunks(self.bbox.slab()).map(|c| c.iter().sum()).collect()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.mass.iter().enumerate().filter(|(_, &m)| m != 0.0).map(|(i, &m)| (self.bbox.point(i), m))
    }

    /// CSV with one row per nonzero cell: coordinates then mass.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.bbox.dim()).map(|k| format!("x{k}")).collect();
        header.push("mass".into());
        wr.write_record(&header)?;
        for (p, m) in self.nonzero() {
            let mut rec: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            rec.push(format!("{m:.16e}"));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Which first-coordinate values are absorbing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KillRule {
    /// absorbed when the first coordinate is <= the threshold
    AtOrBelow(i64),
    /// absorbed when the first coordinate is > the threshold
    Above(i64),
    Never,
}

impl KillRule {
    /// The half-space exit rule: absorb at first coordinate <= 0.
    pub const HALF_SPACE: KillRule = KillRule::AtOrBelow(0);

    fn kills(&self, first: i64) -> bool {
        match *self {
            KillRule::AtOrBelow(t) => first <= t,
            KillRule::Above(t) => first > t,
            KillRule::Never => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Backend {
    Direct,
    Fft,
    /// direct for small supports, FFT otherwise
    Auto,
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOpts {
    pub backend: Backend,
    /// cumulative escaped mass above which evolution fails
    pub max_escaped: f64,
}

impl Default for EvolveOpts {
    fn default() -> Self {
        EvolveOpts { backend: Backend::Auto, max_escaped: 1e-12 }
    }
}

enum Engine {
    Direct { offsets: Vec<(Vec<i64>, f64)> },
    Fft { plan: ConvPlan },
}

/// One-step transition of the killed walk on a fixed box.
pub struct Evolver {
    bbox: LatticeBox,
    kill: KillRule,
    max_escaped: f64,
    marginal: Marginal,
    cdf: Vec<f64>,
    engine: Engine,
}

impl Evolver {
    pub fn new(step: &LatticeStep, bbox: LatticeBox, kill: KillRule, opts: EvolveOpts) -> Result<Self> {
        if step.dim() != bbox.dim() {
            return domain("step and box dimensions differ");
        }
        let use_fft = match opts.backend {
            Backend::Direct => false,
            Backend::Fft => true,
            Backend::Auto => step.len() > 64,
        };
        let engine = if use_fft {
            let (zlo, zhi) = step.extent();
            let shape: Vec<usize> = bbox
                .shape()
                .iter()
                .enumerate()
                .map(|(k, &w)| good_size(w + (-zlo[k]).max(zhi[k]).max(0) as usize))
                .collect();
            let kernel: Vec<(Vec<i64>, f64)> = step.iter().map(|(p, m)| (p.to_vec(), m)).collect();
            Engine::Fft { plan: ConvPlan::new(&shape, &kernel) }
        } else {
            Engine::Direct { offsets: step.iter().map(|(p, m)| (p.to_vec(), m)).collect() }
        };
        let marginal = step.first_marginal();
        let cdf = marginal.cdf_table();
        Ok(Evolver { bbox, kill, max_escaped: opts.max_escaped, marginal, cdf, engine })
    }

    pub fn bbox(&self) -> &LatticeBox {
        &self.bbox
    }

    /// P(X_1 <= k)
    fn marginal_cdf(&self, k: i64) -> f64 {
        if k < self.marginal.lo {
            0.0
        } else if k >= self.marginal.hi() {
            1.0
        } else {
            self.cdf[(k - self.marginal.lo) as usize]
        }
    }

    /// Probability that a single step from first coordinate `j` is absorbed.
    fn kill_prob(&self, j: i64) -> f64 {
        match self.kill {
            KillRule::AtOrBelow(t) => self.marginal_cdf(t - j),
            KillRule::Above(t) => 1.0 - self.marginal_cdf(t - j),
            KillRule::Never => 0.0,
        }
    }

    fn convolve(&self, input: &[f64]) -> Vec<f64> {
        match &self.engine {
            Engine::Fft { plan } => {
                let shape = self.bbox.shape();
                let pshape = plan.shape().to_vec();
                let mut buf = vec![0.0; plan.len()];
                scatter_into(&mut buf, &pshape, input, &shape);
                plan.convolve(&mut buf);
                let mut out = vec![0.0; input.len()];
                gather_from(&buf, &pshape, &mut out, &shape);
                out
            }
            Engine::Direct { offsets } => {
                let b = &self.bbox;
                let shape = b.shape();
                let d = b.dim();
                let kernel = |i: usize| -> f64 {
                    let mut coords = vec![0i64; d];
                    let mut r = i;
                    for k in (0..d).rev() {
                        coords[k] = (r % shape[k]) as i64;
                        r /= shape[k];
                    }
                    let mut acc = 0.0;
                    'outer: for (z, p) in offsets {
                        let mut idx = 0usize;
                        for k in 0..d {
                            let s = coords[k] - z[k];
                            if s < 0 || s >= shape[k] as i64 {
                                continue 'outer;
                            }
                            idx = idx * shape[k] + s as usize;
                        }
                        acc += input[idx] * p;
                    }
                    acc
                };
                let n = input.len();
                if n * offsets.len() > 1 << 16 {
                    (0..n).into_par_iter().map(kernel).collect()
                } else {
                    (0..n).map(kernel).collect()
                }
            }
        }
    }

    /// Advance the field by one step.
    pub fn evolve(&self, field: &KilledField) -> Result<KilledField> {
        if field.bbox != self.bbox {
            return domain("field box differs from the evolver box");
        }
        let before = field.live_mass();
        let slab = self.bbox.slab();
        let mut killed_step = 0.0;
        for (r, m) in field.slab_masses().into_iter().enumerate() {
            if m != 0.0 {
                killed_step += m * self.kill_prob(self.bbox.lo[0] + r as i64);
            }
        }
        let mut out = self.convolve(&field.mass);
        for (r, chunk) in out.chunks_mut(slab).enumerate() {
            let dead = self.kill.kills(self.bbox.lo[0] + r as i64);
            for v in chunk.iter_mut() {
                if dead || *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let live: f64 = out.iter().sum();
        let escaped_step = (before - killed_step - live).max(0.0);
        let escaped = field.escaped_mass + escaped_step;
        if escaped > self.max_escaped {
            return Err(Error::BoxOverflow { escaped, tol: self.max_escaped });
        }
        Ok(KilledField {
            time: field.time + 1,
            bbox: self.bbox.clone(),
            mass: out,
            killed_mass: field.killed_mass + killed_step,
            escaped_mass: escaped,
        })
    }

    /// Evolve `n` steps, calling `visit` on the field at every time 0..=n.
    pub fn run<F: FnMut(&KilledField) -> Result<()>>(&self, start: KilledField, n: usize, mut visit: F) -> Result<KilledField> {
        let mut f = start;
        visit(&f)?;
        for _ in 0..n {
            f = self.evolve(&f)?;
            visit(&f)?;
        }
        Ok(f)
    }
}

/// Copy a box-shaped array into the corner of a larger periodic array.
fn scatter_into(buf: &mut [f64], pshape: &[usize], src: &[f64], shape: &[usize]) {
    let last = *shape.last().unwrap();
    let plast = *pshape.last().unwrap();
    let rows = src.len() / last;
    for r in 0..rows {
        let offset = periodic_row_offset(r, shape, pshape) * plast;
        buf[offset..offset + last].copy_from_slice(&src[r * last..(r + 1) * last]);
    }
}

fn gather_from(buf: &[f64], pshape: &[usize], dst: &mut [f64], shape: &[usize]) {
    let last = *shape.last().unwrap();
    let plast = *pshape.last().unwrap();
    let rows = dst.len() / last;
    for r in 0..rows {
        let offset = periodic_row_offset(r, shape, pshape) * plast;
        dst[r * last..(r + 1) * last].copy_from_slice(&buf[offset..offset + last]);
    }
}

/// Row index (over all but the last axis) of box row `r` inside the periodic array.
fn periodic_row_offset(mut r: usize, shape: &[usize], pshape: &[usize]) -> usize {
    let d = shape.len();
    let mut idx = 0;
    let mut mult = 1;
    for k in (0..d - 1).rev() {
        idx += (r % shape[k]) * mult;
        r /= shape[k];
        mult *= pshape[k];
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw_box(hi: i64) -> LatticeBox {
        LatticeBox::new(vec![0], vec![hi]).unwrap()
    }

    #[test]
    fn srw_one_step() {
        let step = LatticeStep::srw(1);
        let ev = Evolver::new(&step, srw_box(10), KillRule::HALF_SPACE, EvolveOpts::default()).unwrap();
        let f0 = KilledField::point_mass(srw_box(10), &[1]).unwrap();
        let f1 = ev.evolve(&f0).unwrap();
        assert_eq!(f1.at(&[2]), 0.5);
        assert_eq!(f1.at(&[0]), 0.0);
        assert_eq!(f1.killed_mass, 0.5);
        assert_eq!(f1.time, 1);
    }

    #[test]
    fn zero_field_stays_zero() {
        let step = LatticeStep::srw(2);
        let b = LatticeBox::new(vec![0, -3], vec![5, 3]).unwrap();
        let ev = Evolver::new(&step, b.clone(), KillRule::HALF_SPACE, EvolveOpts::default()).unwrap();
        let f = ev.evolve(&KilledField::zero(b)).unwrap();
        assert_eq!(f.live_mass(), 0.0);
        assert_eq!(f.killed_mass, 0.0);
    }

    #[test]
    fn overflow_is_an_error() {
        let step = LatticeStep::srw(1);
        let ev = Evolver::new(&step, srw_box(3), KillRule::HALF_SPACE, EvolveOpts::default()).unwrap();
        let f = KilledField::point_mass(srw_box(3), &[3]).unwrap();
        assert!(matches!(ev.evolve(&f), Err(Error::BoxOverflow { .. })));
    }

    #[test]
    fn fft_matches_direct() {
        let step = LatticeStep::new(
            2,
            vec![vec![1, 0], vec![-1, 1], vec![-2, -1], vec![0, 2], vec![3, -2]],
            vec![0.3, 0.25, 0.15, 0.2, 0.1],
        )
        .unwrap();
        let b = LatticeBox::reachable(&step, &[2, 0], 6, 0);
        let mk = |backend| {
            Evolver::new(&step, b.clone(), KillRule::HALF_SPACE, EvolveOpts { backend, max_escaped: 1e-12 }).unwrap()
        };
        let (d, f) = (mk(Backend::Direct), mk(Backend::Fft));
        let mut a = KilledField::point_mass(b.clone(), &[2, 0]).unwrap();
        let mut c = a.clone();
        for _ in 0..6 {
            a = d.evolve(&a).unwrap();
            c = f.evolve(&c).unwrap();
            for (x, y) in a.mass.iter().zip(&c.mass) {
                assert!((x - y).abs() < 1e-14);
            }
            assert!((a.killed_mass - c.killed_mass).abs() < 1e-14);
            assert!((a.live_mass() + a.killed_mass - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_export() {
        let f = KilledField::point_mass(LatticeBox::new(vec![0, -1], vec![2, 1]).unwrap(), &[1, -1]).unwrap();
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x1,x2,mass\n1,-1,1.0000000000000000e0\n");
    }
}
