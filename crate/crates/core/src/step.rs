//! Increment laws: finite lattice PMFs and parametric heavy-tailed families,
//! the truncated second moment mu(u) and the scaling sequence c_n.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::zeta;
use crate::stable::{Phi, TailProfile};

const SUM_TOL: f64 = 1e-12;

/// Finite PMF on Z^d. Points are stored flat, `dim` coordinates each.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeStep {
    dim: usize,
    points: Vec<i64>,
    probs: Vec<f64>,
    /// mass removed when a heavy-tailed law was truncated to finite support
    pub truncated_mass: f64,
    /// tail comparison used by the large-deviation bound, when known
    pub tail: Option<TailProfile>,
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    support: Vec<Vec<i64>>,
    probs: Vec<f64>,
}

impl LatticeStep {
    pub fn new(dim: usize, support: Vec<Vec<i64>>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return domain("support and probs must be non-empty and of equal length");
        }
        let mut points = Vec::with_capacity(support.len() * dim);
        for p in &support {
            if p.len() != dim {
                return domain(format!("support point {p:?} does not have dimension {dim}"));
            }
            points.extend_from_slice(p);
        }
        Self::from_flat(dim, points, probs)
    }

    fn from_flat(dim: usize, points: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return domain("dimension must be at least 1");
        }
        if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return domain("probabilities must be positive");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return domain(format!("probabilities sum to {total}"));
        }
        Ok(LatticeStep { dim, points, probs, truncated_mass: 0.0, tail: None })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LatticeJson = serde_json::from_str(text)?;
        let dim = raw.support.first().map(|p| p.len()).unwrap_or(0);
        Self::new(dim, raw.support, raw.probs)
    }

    pub fn to_json(&self) -> String {
        let raw = LatticeJson { support: self.iter().map(|(p, _)| p.to_vec()).collect(), probs: self.probs.clone() };
        serde_json::to_string(&raw).expect("plain data serializes")
    }

    /// Simple random walk: +-e_k with probability 1/(2d) each.
    pub fn srw(dim: usize) -> Self {
        let mut support = Vec::new();
        for k in 0..dim {
            for s in [1, -1] {
                let mut v = vec![0; dim];
                v[k] = s;
                support.push(v);
            }
        }
        let p = 1.0 / (2 * dim) as f64;
        Self::new(dim, support, vec![p; 2 * dim]).expect("valid by construction")
    }

    /// P(X = k) proportional to |k|^{-1-alpha} for 0 < |k| <= k_max.
    pub fn pareto_1d(alpha: f64, k_max: i64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 2.0) || k_max < 1 {
            return domain("pareto lattice needs 0 < alpha < 2 and k_max >= 1");
        }
        let s = 1.0 + alpha;
        let w: Vec<f64> = (1..=k_max).map(|k| (k as f64).powf(-s)).collect();
        // sum from the small terms up for accuracy
        let z: f64 = w.iter().rev().sum();
        let mut points = Vec::with_capacity(2 * k_max as usize);
        let mut probs = Vec::with_capacity(2 * k_max as usize);
        for k in (1..=k_max).rev() {
            points.push(-k);
            probs.push(0.5 * w[k as usize - 1] / z);
        }
        for k in 1..=k_max {
            points.push(k);
            probs.push(0.5 * w[k as usize - 1] / z);
        }
        let mut step = Self::from_flat(1, points, probs)?;
        step.truncated_mass = 1.0 - z / zeta(s);
        // P(|X| > t) ~ t^{-alpha} / (alpha zeta(1 + alpha))
        let l = 1.0 / (alpha * zeta(s));
        step.tail = Some(TailProfile::new(Phi::Power { l, alpha }, 0.5, 2.0)?);
        Ok(step)
    }

    /// Lazy isotropic lattice law in Z^d (d = 2 or 3): with probability `q` a
    /// jump z != 0 with weight |z|^{-d-alpha}, restricted to |z|_inf <= k_max
    /// and |z_1| <= k1_max; otherwise stay put.
    pub fn pareto_isotropic(dim: usize, alpha: f64, k_max: i64, k1_max: i64, q: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return domain("isotropic lattice law is provided for d = 2, 3");
        }
        if !(0.0 < alpha && alpha < 2.0) || k_max < 1 || k1_max < 1 || !(0.0 < q && q <= 1.0) {
            return domain("bad isotropic lattice parameters");
        }
        let s = (dim as f64 + alpha) / 2.0;
        let k1 = k1_max.min(k_max);
        let mut points = Vec::new();
        let mut w = Vec::new();
        let mut visit = |z: &[i64]| {
            let r2: i64 = z.iter().map(|v| v * v).sum();
            if r2 > 0 {
                points.extend_from_slice(z);
                w.push((r2 as f64).powf(-s));
            }
        };
        for a in -k1..=k1 {
            for b in -k_max..=k_max {
                if dim == 2 {
                    visit(&[a, b]);
                } else {
                    for c in -k_max..=k_max {
                        visit(&[a, b, c]);
                    }
                }
            }
        }
        let z: f64 = w.iter().sum();
        let mut probs: Vec<f64> = w.iter().map(|v| q * v / z).collect();
        if q < 1.0 {
            points.extend(std::iter::repeat(0).take(dim));
            probs.push(1.0 - q);
        }
        let mut step = Self::from_flat(dim, points, probs)?;
        // |S^{d-1}| / alpha gives P(|X| > t) ~ q t^{-alpha} |S^{d-1}| / (alpha z)
        let sphere = if dim == 2 { 2.0 * std::f64::consts::PI } else { 4.0 * std::f64::consts::PI };
        let l = q * sphere / (alpha * z);
        step.tail = Some(TailProfile::new(Phi::Power { l, alpha }, 0.25, 4.0)?);
        Ok(step)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        self.points.chunks(self.dim).zip(self.probs.iter().copied())
    }

    /// Componentwise min and max of the support.
    pub fn extent(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for (p, _) in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// PMF of the first coordinate as (offset, dense weights).
    pub fn first_marginal(&self) -> Marginal {
        let (lo, hi) = self.extent();
        let mut w = vec![0.0; (hi[0] - lo[0] + 1) as usize];
        for (p, m) in self.iter() {
            w[(p[0] - lo[0]) as usize] += m;
        }
        Marginal { lo: lo[0], w }
    }

    /// Index of the lattice generated by support differences in Z^d
    /// (1 means Z^d is the minimal lattice; None means rank deficient).
    pub fn minimal_lattice_index(&self) -> Option<u64> {
        let base = self.point(0).to_vec();
        let rows: Vec<Vec<i64>> = self
            .iter()
            .map(|(p, _)| p.iter().zip(&base).map(|(a, b)| a - b).collect())
            .filter(|v: &Vec<i64>| v.iter().any(|&x| x != 0))
            .collect();
        lattice_index(rows, self.dim)
    }

    /// The first coordinate takes both signs and has mean zero.
    pub fn check_oscillating(&self) -> Result<()> {
        let m = self.first_marginal();
        let mean: f64 = m.iter().map(|(k, p)| k as f64 * p).sum();
        let up: f64 = m.iter().filter(|(k, _)| *k > 0).map(|(_, p)| p).sum();
        let down: f64 = m.iter().filter(|(k, _)| *k < 0).map(|(_, p)| p).sum();
        if up <= 0.0 || down <= 0.0 {
            return domain("first coordinate does not take both signs");
        }
        if mean.abs() > 1e-10 {
            return domain(format!("first coordinate has drift {mean}; the walk does not oscillate"));
        }
        Ok(())
    }
}

/// Dense PMF on consecutive integers starting at `lo`.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub lo: i64,
    pub w: Vec<f64>,
}

impl Marginal {
    pub fn hi(&self) -> i64 {
        self.lo + self.w.len() as i64 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.w.iter().enumerate().map(move |(i, &p)| (self.lo + i as i64, p))
    }

    pub fn pmf(&self, k: i64) -> f64 {
        if k < self.lo || k > self.hi() {
            0.0
        } else {
            self.w[(k - self.lo) as usize]
        }
    }

    /// Cumulative sums: cdf[i] = P(X <= lo + i).
    pub fn cdf_table(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.w
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Reflected law -X.
    pub fn negated(&self) -> Marginal {
        let mut w = self.w.clone();
        w.reverse();
        Marginal { lo: -self.hi(), w }
    }
}

/// |det| of a basis of the integer span of `rows` (None if rank deficient).
///
/// Vectors are inserted one at a time into an upper-triangular basis whose
/// off-diagonal entries are kept reduced modulo the later pivots.
fn lattice_index(rows: Vec<Vec<i64>>, d: usize) -> Option<u64> {
    let mut basis: Vec<Option<Vec<i64>>> = vec![None; d];
    for mut v in rows {
        for col in 0..d {
            if v[col] == 0 {
                continue;
            }
            match basis[col].take() {
                None => {
                    if v[col] < 0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                    basis[col] = Some(v);
                    break;
                }
                Some(b) => {
                    let (g, x, y) = ext_gcd(b[col], v[col]);
                    let (bu, vu) = (b[col] / g, v[col] / g);
                    let piv: Vec<i64> = (0..d).map(|k| x * b[k] + y * v[k]).collect();
                    let rest: Vec<i64> = (0..d).map(|k| bu * v[k] - vu * b[k]).collect();
                    basis[col] = Some(piv);
                    v = rest;
                }
            }
        }
        // reduce entries right of each pivot
        for col in (0..d).rev() {
            for later in col + 1..d {
                let p = match &basis[later] {
                    Some(p) => p.clone(),
                    None => continue,
                };
                if let Some(b) = basis[col].as_mut() {
                    let q = b[later].div_euclid(p[later]);
                    for k in later..d {
                        b[k] -= q * p[k];
                    }
                }
            }
        }
    }
    let mut det: u64 = 1;
    for b in &basis {
        det = det.saturating_mul(b.as_ref()?.iter().find(|&&x| x != 0).copied()?.unsigned_abs());
    }
    Some(det)
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a.abs(), a.signum(), 0);
    }
    let (g, x, y) = ext_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}

/// Parametric heavy-tailed increments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContinuousStep {
    /// random sign times Pareto: P(|X| > t) = t^{-alpha}, t >= 1
    SymmetricPareto { alpha: f64 },
    /// Pareto magnitude, sign + with probability p_plus, shifted to mean zero (alpha > 1)
    SkewedPareto { alpha: f64, p_plus: f64 },
    /// symmetric with P(|X| > t) = t^{-alpha} (1 + ln t), t >= 1 (alpha >= 1)
    ParetoLog { alpha: f64 },
    /// Pareto radius with uniform direction in R^d
    IsotropicPareto { dim: usize, alpha: f64 },
}

impl ContinuousStep {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ContinuousStep::SymmetricPareto { alpha } if 0.0 < alpha && alpha < 2.0 => Ok(()),
            ContinuousStep::SkewedPareto { alpha, p_plus }
                if 1.0 < alpha && alpha < 2.0 && (0.0..=1.0).contains(&p_plus) =>
            {
                Ok(())
            }
            ContinuousStep::ParetoLog { alpha } if (1.0..2.0).contains(&alpha) => Ok(()),
            ContinuousStep::IsotropicPareto { dim, alpha } if dim >= 1 && 0.0 < alpha && alpha < 2.0 => Ok(()),
            _ => domain(format!("invalid continuous family {self:?}")),
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            ContinuousStep::SymmetricPareto { alpha }
            | ContinuousStep::SkewedPareto { alpha, .. }
            | ContinuousStep::ParetoLog { alpha }
            | ContinuousStep::IsotropicPareto { alpha, .. } => alpha,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ContinuousStep::IsotropicPareto { dim, .. } => dim,
            _ => 1,
        }
    }

    /// Tail balance beta of the first coordinate.
    pub fn beta(&self) -> f64 {
        match *self {
            ContinuousStep::SkewedPareto { p_plus, .. } => 2.0 * p_plus - 1.0,
            _ => 0.0,
        }
    }

    /// Shift subtracted after sampling so that E X = 0.
    pub fn centering(&self) -> f64 {
        match *self {
            ContinuousStep::SkewedPareto { alpha, p_plus } => (2.0 * p_plus - 1.0) * alpha / (alpha - 1.0),
            _ => 0.0,
        }
    }

    pub fn tail_profile(&self) -> TailProfile {
        match *self {
            ContinuousStep::SymmetricPareto { alpha } | ContinuousStep::IsotropicPareto { alpha, .. } => {
                TailProfile::pure_power(alpha)
            }
            ContinuousStep::SkewedPareto { alpha, .. } => {
                TailProfile { phi: Phi::Power { l: 1.0, alpha }, a1: 0.5, a2: 2.0 }
            }
            ContinuousStep::ParetoLog { alpha } => TailProfile { phi: Phi::PowerLog { l: 1.0, alpha }, a1: 1.0, a2: 1.0 },
        }
    }

    /// u^2 mu(u) = E[|X|^2; |X| <= u].
    fn truncated_second_moment(&self, u: f64) -> f64 {
        match *self {
            ContinuousStep::SymmetricPareto { alpha } | ContinuousStep::IsotropicPareto { alpha, .. } => {
                pareto_moment2(alpha, 0.0, 1.0, u)
            }
            ContinuousStep::ParetoLog { alpha } => {
                if u <= 1.0 {
                    return 0.0;
                }
                // int_1^u x^{1-alpha} (alpha - 1 + alpha ln x) dx
                let s = 2.0 - alpha;
                let us = u.powf(s);
                (alpha - 1.0) * (us - 1.0) / s + alpha * (us * u.ln() / s - (us - 1.0) / (s * s))
            }
            ContinuousStep::SkewedPareto { alpha, p_plus } => {
                let m = self.centering();
                // right branch: y - m with |y - m| <= u  <=>  y in [m - u, m + u]
                let right = pareto_moment2(alpha, m, (m - u).max(1.0), m + u);
                // left branch: -y - m, |y + m| <= u  <=>  y in [-u - m, u - m]
                let left = pareto_moment2(alpha, -m, (-u - m).max(1.0), u - m);
                p_plus * right + (1.0 - p_plus) * left
            }
        }
    }
}

/// E[(Y - m)^2; a <= Y <= b] for Y Pareto(alpha) on [1, inf), a >= 1.
fn pareto_moment2(alpha: f64, m: f64, a: f64, b: f64) -> f64 {
    let a = a.max(1.0);
    if b <= a {
        return 0.0;
    }
    // antiderivative of (y - m)^2 alpha y^{-alpha-1}
    let prim = |y: f64| {
        let t2 = y.powf(2.0 - alpha) / (2.0 - alpha);
        let t1 = if alpha == 1.0 { y.ln() } else { y.powf(1.0 - alpha) / (1.0 - alpha) };
        let t0 = -y.powf(-alpha) / alpha;
        alpha * (t2 - 2.0 * m * t1 + m * m * t0)
    };
    prim(b) - prim(a)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepDistribution {
    Lattice(LatticeStep),
    Continuous(ContinuousStep),
}

impl StepDistribution {
    pub fn dim(&self) -> usize {
        match self {
            StepDistribution::Lattice(s) => s.dim(),
            StepDistribution::Continuous(c) => c.dim(),
        }
    }

    pub fn as_lattice(&self) -> Option<&LatticeStep> {
        match self {
            StepDistribution::Lattice(s) => Some(s),
            _ => None,
        }
    }

    /// Smallest |X| charged by the law (the lower end of the search for c_n).
    pub fn min_magnitude(&self) -> f64 {
        match self {
            StepDistribution::Lattice(s) => s
                .iter()
                .map(|(p, _)| norm(p))
                .filter(|&r| r > 0.0)
                .fold(f64::INFINITY, f64::min),
            StepDistribution::Continuous(ContinuousStep::SkewedPareto { .. }) => 0.0,
            StepDistribution::Continuous(_) => 1.0,
        }
    }
}

fn norm(p: &[i64]) -> f64 {
    (p.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt()
}

/// mu(u) = u^{-2} E[|X|^2; |X| <= u].
pub fn mu_truncated(u: f64, step: &StepDistribution) -> Result<f64> {
    if !(u > 0.0) {
        return domain(format!("mu needs u > 0, got {u}"));
    }
    Ok(match step {
        StepDistribution::Lattice(s) => {
            let mut acc = 0.0;
            for (p, m) in s.iter() {
                let r2: f64 = p.iter().map(|&v| (v * v) as f64).sum();
                if r2 <= u * u {
                    acc += r2 * m;
                }
            }
            acc / (u * u)
        }
        StepDistribution::Continuous(c) => c.truncated_second_moment(u) / (u * u),
    })
}

/// Lattice mu is E_j / u^2 on [r_j, r_{j+1}); this holds the (r_j, E_j) pairs.
#[derive(Clone, Debug)]
struct Segments {
    r: Vec<f64>,
    e: Vec<f64>,
}

impl Segments {
    fn new(step: &LatticeStep) -> Self {
        let mut by_r2: BTreeMap<i64, f64> = BTreeMap::new();
        for (p, m) in step.iter() {
            let r2: i64 = p.iter().map(|v| v * v).sum();
            if r2 > 0 {
                *by_r2.entry(r2).or_default() += m * r2 as f64;
            }
        }
        let mut r = Vec::with_capacity(by_r2.len());
        let mut e = Vec::with_capacity(by_r2.len());
        let mut acc = 0.0;
        for (r2, w) in by_r2 {
            acc += w;
            r.push((r2 as f64).sqrt());
            e.push(acc);
        }
        Segments { r, e }
    }

    /// inf{u >= r_0 : mu(v) <= 1/n for all v >= u}
    fn last_crossing(&self, n: f64) -> f64 {
        for j in (0..self.r.len()).rev() {
            let s = (n * self.e[j]).sqrt();
            if s > self.r[j] {
                return s;
            }
        }
        self.r[0]
    }
}

/// The scaling sequence c_n, precomputed for n = 1..=n_max.
///
/// Since mu vanishes below the smallest jump, c_n is taken as the last
/// crossing: inf{u >= u_min : mu(v) <= 1/n for all v >= u}.
#[derive(Clone, Debug)]
pub struct ScalingSeq {
    cache: Vec<f64>,
    segments: Option<Segments>,
    step: Option<StepDistribution>,
}

impl ScalingSeq {
    pub fn new(step: &StepDistribution, n_max: usize) -> Result<Self> {
        let mut cache = Vec::with_capacity(n_max);
        match step {
            StepDistribution::Lattice(s) => {
                let seg = Segments::new(s);
                if seg.r.is_empty() {
                    return Err(Error::Range("degenerate step has no nonzero jumps".into()));
                }
                for n in 1..=n_max {
                    cache.push(seg.last_crossing(n as f64));
                }
                Ok(ScalingSeq { cache, segments: Some(seg), step: None })
            }
            StepDistribution::Continuous(_) => {
                for n in 1..=n_max {
                    cache.push(scaling_c(n, step)?);
                }
                Ok(ScalingSeq { cache, segments: None, step: Some(step.clone()) })
            }
        }
    }

    pub fn n_max(&self) -> usize {
        self.cache.len()
    }

    /// c_n; values past the cache are computed on demand.
    pub fn c(&self, n: usize) -> f64 {
        assert!(n >= 1, "c_n is defined for n >= 1");
        if n <= self.cache.len() {
            return self.cache[n - 1];
        }
        match (&self.segments, &self.step) {
            (Some(seg), _) => seg.last_crossing(n as f64),
            (None, Some(step)) => scaling_c(n, step).expect("search succeeded on the cached range"),
            _ => unreachable!(),
        }
    }
}

/// c_n for a single n.
pub fn scaling_c(n: usize, step: &StepDistribution) -> Result<f64> {
    if n == 0 {
        return domain("c_n is defined for n >= 1");
    }
    let target = 1.0 / n as f64;
    match step {
        StepDistribution::Lattice(s) => {
            let seg = Segments::new(s);
            if seg.r.is_empty() {
                return Err(Error::Range("degenerate step has no nonzero jumps".into()));
            }
            Ok(seg.last_crossing(n as f64))
        }
        StepDistribution::Continuous(c) => {
            let mu = |u: f64| c.truncated_second_moment(u) / (u * u);
            // the shipped families have unimodal mu; locate the mode on a geometric grid
            let u_min = step.min_magnitude().max(1e-9);
            let mut peak = u_min;
            let mut best = 0.0;
            let mut u = u_min.max(1e-3);
            while u < 1e4 {
                let m = mu(u);
                if m > best {
                    best = m;
                    peak = u;
                }
                u *= 1.001;
            }
            if best <= target {
                return Ok(u_min.max(1e-300));
            }
            let mut lo = peak;
            let mut hi = peak * 2.0;
            let mut guard = 0;
            while mu(hi) > target {
                lo = hi;
                hi *= 2.0;
                guard += 1;
                if guard > 2000 || !hi.is_finite() {
                    return Err(Error::Range(format!("mu(u) stays above 1/{n} up to u = {hi:e}")));
                }
            }
            while (hi - lo) > 1e-9 * hi {
                let mid = 0.5 * (lo + hi);
                if mu(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_examples() {
        let srw = StepDistribution::Lattice(LatticeStep::srw(1));
        assert_eq!(mu_truncated(2.0, &srw).unwrap(), 0.25);
        assert_eq!(mu_truncated(0.5, &srw).unwrap(), 0.0);
        let par = StepDistribution::Continuous(ContinuousStep::SymmetricPareto { alpha: 1.5 });
        for u in [1.0f64, 2.0, 17.0] {
            let want = 1.5 / 0.5 * (u.powf(0.5) - 1.0) / (u * u);
            assert!((mu_truncated(u, &par).unwrap() - want).abs() < 1e-14);
        }
        assert_eq!(mu_truncated(0.9, &par).unwrap(), 0.0);
    }

    #[test]
    fn srw_scaling() {
        let srw = StepDistribution::Lattice(LatticeStep::srw(1));
        assert_eq!(scaling_c(1, &srw).unwrap(), 1.0);
        // mu(u) = 1/u^2 for u >= 1, so c_n = sqrt(n)
        let seq = ScalingSeq::new(&srw, 100).unwrap();
        for n in 1..=100 {
            assert!((seq.c(n) - (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn skewed_mu_matches_quadrature() {
        let c = ContinuousStep::SkewedPareto { alpha: 1.5, p_plus: 0.8 };
        let m = c.centering();
        for u in [0.5f64, 2.0, 9.0, 300.0] {
            let f = |y: f64, shift: f64| {
                let v: f64 = y - shift;
                if v.abs() <= u { v * v * 1.5 * y.powf(-2.5) } else { 0.0 }
            };
            let opts = crate::numerics::QuadOpts::new(1e-13, 1e-11);
            let right = crate::numerics::integrate_to_inf(|y| f(y, m), 1.0, opts).unwrap().value;
            let left = crate::numerics::integrate_to_inf(|y| f(y, -m), 1.0, opts).unwrap().value;
            let want = 0.8 * right + 0.2 * left;
            assert!((c.truncated_second_moment(u) - want).abs() < 1e-6 * want.max(1e-6), "{u}");
        }
    }

    #[test]
    fn pareto_log_mu_matches_quadrature() {
        let c = ContinuousStep::ParetoLog { alpha: 1.2 };
        for u in [1.5, 10.0, 1000.0] {
            let want = crate::numerics::integrate(
                |x: f64| x * x * x.powf(-2.2) * (0.2 + 1.2 * x.ln()),
                1.0,
                u,
                crate::numerics::QuadOpts::default(),
            )
            .unwrap()
            .value;
            assert!((c.truncated_second_moment(u) - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn lattice_index_examples() {
        assert_eq!(LatticeStep::srw(1).minimal_lattice_index(), Some(2));
        assert_eq!(LatticeStep::srw(2).minimal_lattice_index(), Some(2));
        let lazy = LatticeStep::new(1, vec![vec![-1], vec![0], vec![1]], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(lazy.minimal_lattice_index(), Some(1));
        let line = LatticeStep::new(2, vec![vec![1, 1], vec![-1, -1]], vec![0.5, 0.5]).unwrap();
        assert_eq!(line.minimal_lattice_index(), None);
        let p = LatticeStep::pareto_1d(1.2, 50).unwrap();
        assert_eq!(p.minimal_lattice_index(), Some(1));
    }

    #[test]
    fn json_round_trip() {
        let s = LatticeStep::new(2, vec![vec![1, 0], vec![-1, 2], vec![0, -1]], vec![0.5, 0.25, 0.25]).unwrap();
        let back = LatticeStep::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        assert!(LatticeStep::from_json(r#"{"support":[[1],[-1]],"probs":[0.5,0.4]}"#).is_err());
    }

    #[test]
    fn oscillation_check() {
        assert!(LatticeStep::srw(2).check_oscillating().is_ok());
        let drift = LatticeStep::new(1, vec![vec![1], vec![-1]], vec![0.6, 0.4]).unwrap();
        assert!(drift.check_oscillating().is_err());
        let up = LatticeStep::new(2, vec![vec![1, 0], vec![0, 1]], vec![0.5, 0.5]).unwrap();
        assert!(up.check_oscillating().is_err());
    }
}
