//! Ladder heights of the first coordinate and the renewal functions H and V.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{good_size, ConvPlan};
use super::field::{Backend, EvolveOpts, Evolver, KillRule, KilledField, LatticeBox};
use crate::step::Marginal;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderConfig {
    /// tables cover heights 0..=level
    pub level: usize,
    /// steps of first-passage DP
    pub horizon: usize,
    /// how far below the start the DP grid reaches
    pub depth: usize,
    /// defect above this is reported as a warning
    pub tol: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { level: 64, horizon: 4096, depth: 4096, tol: 1e-3 }
    }
}

/// One ladder-height law truncated at the table level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderPmf {
    /// pmf[h] = P(chi = h) for 0 <= h <= level
    pub pmf: Vec<f64>,
    /// P(level < chi < inf)
    pub beyond: f64,
    /// mass with no ladder epoch within the horizon, plus mass that left the grid
    pub defect: f64,
    /// closed form (skip-free side) rather than DP
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderData {
    /// strict ascending ladder height chi+
    pub chi_plus: LadderPmf,
    /// weak descending ladder height chi-
    pub chi_minus: LadderPmf,
    /// H(u) for u = 0..=level
    pub h_table: Vec<f64>,
    /// V(u) for u = 0..=level
    pub v_table: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LadderData {
    pub fn level(&self) -> usize {
        self.h_table.len() - 1
    }

    /// H(u) = I{u > 0} + sum_k P(chi+_1 + ... + chi+_k < u) on the reals.
    pub fn h(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let j = u.ceil() as usize;
        self.h_table[j.min(self.level())]
    }

    /// V(u) = I{u >= 0} + sum_k P(chi-_1 + ... + chi-_k <= u) on the reals.
    pub fn v(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        let j = u.floor() as usize;
        self.v_table[j.min(self.level())]
    }

    /// int_a^b H(u) du; H is a step function, constant on (j-1, j].
    pub fn h_integral(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        let mut lo = a.max(0.0);
        while lo < b {
            let hi = (lo.floor() + 1.0).min(b);
            acc += (hi - lo) * self.h(0.5 * (lo + hi));
            lo = hi;
        }
        acc
    }

    /// Whether u lies inside the tabulated range.
    pub fn covers(&self, u: f64) -> bool {
        u <= self.level() as f64
    }
}

/// First-passage law of the first coordinate over level `theta` (start at 0):
/// the landing height h >= theta at the first time S >= theta.
fn first_passage(m: &Marginal, theta: i64, cfg: &LadderConfig) -> LadderPmf {
    let u = cfg.level as i64;
    let d = cfg.depth as i64;
    // coordinates -d..=u
    let w = (d + u + 1) as usize;
    let idx = |x: i64| (x + d) as usize;
    let cdf = m.cdf_table();
    let cdf_at = |k: i64| -> f64 {
        if k < m.lo {
            0.0
        } else if k >= m.hi() {
            1.0
        } else {
            cdf[(k - m.lo) as usize]
        }
    };
    let small = m.w.len() <= 64;
    let plan = if small {
        None
    } else {
        let span = (-m.lo).max(m.hi()).max(0) as usize;
        let kernel: Vec<(Vec<i64>, f64)> = m.iter().filter(|(_, p)| *p > 0.0).map(|(k, p)| (vec![k], p)).collect();
        Some(ConvPlan::new(&[good_size(w + span)], &kernel))
    };
    let mut live = vec![0.0; w];
    live[idx(0)] = 1.0;
    let mut pmf = vec![0.0; cfg.level + 1];
    let (mut beyond, mut escaped) = (0.0, 0.0);
    for _ in 0..cfg.horizon {
        // exact mass over the top of the table and under the floor of the grid
        for x in -d..=u {
            let v = live[idx(x)];
            if v != 0.0 {
                beyond += v * (1.0 - cdf_at(u - x));
                escaped += v * cdf_at(-d - 1 - x);
            }
        }
        let next = match &plan {
            None => {
                let mut out = vec![0.0; w];
                for x in -d..=u {
                    let v = live[idx(x)];
                    if v == 0.0 {
                        continue;
                    }
                    for (k, p) in m.iter() {
                        let y = x + k;
                        if (-d..=u).contains(&y) {
                            out[idx(y)] += v * p;
                        }
                    }
                }
                out
            }
            Some(plan) => {
                let mut buf = vec![0.0; plan.len()];
                buf[..w].copy_from_slice(&live);
                plan.convolve(&mut buf);
                buf.truncate(w);
                buf
            }
        };
        live = next;
        for h in theta..=u {
            let v = live[idx(h)].max(0.0);
            pmf[h as usize] += v;
            live[idx(h)] = 0.0;
        }
        for v in live.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if live.iter().sum::<f64>() < 1e-300 {
            break;
        }
    }
    let remaining: f64 = live.iter().sum();
    LadderPmf { pmf, beyond, defect: remaining + escaped, exact: false }
}

/// H(u) for u = 0..=level from the strict ladder pmf (pmf[0] must be 0).
pub fn renewal_h(pmf: &[f64], level: usize) -> Vec<f64> {
    let mut r = vec![0.0; level + 1];
    r[0] = 1.0;
    for j in 1..=level {
        let mut acc = 0.0;
        for i in 1..=j.min(pmf.len() - 1) {
            acc += pmf[i] * r[j - i];
        }
        r[j] = acc;
    }
    let mut h = vec![0.0; level + 1];
    for u in 1..=level {
        h[u] = h[u - 1] + r[u - 1];
    }
    h
}

/// V(u) for u = 0..=level from the weak ladder pmf (atom pmf[0] allowed).
pub fn renewal_v(pmf: &[f64], level: usize) -> Vec<f64> {
    let stay = 1.0 / (1.0 - pmf[0]);
    let mut r = vec![0.0; level + 1];
    for j in 0..=level {
        let mut acc = if j == 0 { 1.0 } else { 0.0 };
        for i in 1..=j.min(pmf.len() - 1) {
            acc += pmf[i] * r[j - i];
        }
        r[j] = acc * stay;
    }
    let mut v = vec![0.0; level + 1];
    let mut acc = 0.0;
    for u in 0..=level {
        acc += r[u];
        v[u] = acc;
    }
    v
}

/// Renewal table by summing convolution powers until the k-fold law puts
/// less than `tol` on [0, level]. `weak` selects V (<= u) over H (< u).
pub fn renewal_by_powers(pmf: &[f64], level: usize, weak: bool, tol: f64) -> Vec<f64> {
    let mut table = vec![0.0; level + 1];
    for (u, t) in table.iter_mut().enumerate() {
        *t = if weak || u > 0 { 1.0 } else { 0.0 };
    }
    let mut cur = vec![0.0; level + 1];
    cur[0] = 1.0;
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; level + 1];
        for (s, &c) in cur.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (i, &p) in pmf.iter().enumerate() {
                if s + i > level {
                    break;
                }
                next[s + i] += c * p;
            }
        }
        cur = next;
        // cumulative P(sum <= j)
        let mut acc = 0.0;
        for u in 0..=level {
            let below = if weak { acc + cur[u] } else { acc };
            table[u] += below;
            acc += cur[u];
        }
        if acc < tol {
            break;
        }
    }
    table
}

/// Renewal values from occupation sums of a killed walk, for levels far
/// beyond what the ladder tables reach.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualRenewal {
    pub levels: Vec<usize>,
    /// sum over n <= horizon
    pub partial: Vec<f64>,
    /// power-law extrapolation of the terms past the horizon
    pub tail: Vec<f64>,
    /// fitted decay exponent p of the per-step terms, n^{-p}
    pub decay: Vec<f64>,
    pub horizon: usize,
    pub escaped_mass: f64,
}

impl DualRenewal {
    pub fn value(&self, i: usize) -> f64 {
        self.partial[i] + self.tail[i]
    }
}

/// H(u) = sum_n P(tau_0 > n, S_n < u) (killed walk from 0) or, with `weak`,
/// V(u) = sum_n P(1 - S_n in [1, u + 1], killed at <= 0) for the reflected walk.
/// The walk lives on [0, reach]; mass jumping past `reach` is dropped and reported.
pub fn renewal_by_duality(m: &Marginal, levels: &[usize], weak: bool, horizon: usize, reach: i64) -> Result<DualRenewal> {
    if levels.is_empty() || horizon < 8 {
        return domain("need levels and a horizon of at least 8");
    }
    let top = *levels.iter().max().unwrap() as i64 + 1;
    if reach < top {
        return domain("reach must exceed the largest level");
    }
    let law = if weak { m.negated() } else { m.clone() };
    let support: Vec<Vec<i64>> = law.iter().filter(|(_, p)| *p > 0.0).map(|(k, _)| vec![k]).collect();
    let probs: Vec<f64> = law.iter().map(|(_, p)| p).filter(|p| *p > 0.0).collect();
    let step = crate::step::LatticeStep::new(1, support, probs)?;
    let bbox = LatticeBox::new(vec![0], vec![reach])?;
    let ev = Evolver::new(&step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts { backend: Backend::Auto, max_escaped: 1.0 })?;
    let start = if weak { 1 } else { 0 };
    // window of the occupied positions for each level
    let window = |u: usize| if weak { (1usize, u + 1) } else { (1usize, u.max(1) - 1) };
    let k = levels.len();
    let mut partial = vec![0.0; k];
    let (mut quarter, mut half) = (vec![0.0; k], vec![0.0; k]);
    let last = ev.run(KilledField::point_mass(bbox, &[start])?, horizon, |f| {
        let mut prefix = 0.0;
        let mut cum = vec![0.0; top as usize + 1];
        for (j, c) in cum.iter_mut().enumerate().skip(1) {
            prefix += f.mass[j];
            *c = prefix;
        }
        for (i, &u) in levels.iter().enumerate() {
            let term = if f.time == 0 {
                if weak || u > 0 { 1.0 } else { 0.0 }
            } else {
                let (lo, hi) = window(u);
                if hi >= lo { cum[hi] - cum[lo - 1] } else { 0.0 }
            };
            partial[i] += term;
            if f.time > horizon / 4 && f.time <= horizon / 2 {
                quarter[i] += term;
            } else if f.time > horizon / 2 {
                half[i] += term;
            }
        }
        Ok(())
    })?;
    // blocks (N/4, N/2] and (N/2, N] shrink by 2^{1-p}; the remaining blocks form a geometric series
    let mut tail = vec![0.0; k];
    let mut decay = vec![f64::NAN; k];
    for i in 0..k {
        if quarter[i] > 0.0 && half[i] > 0.0 {
            let shrink = half[i] / quarter[i];
            decay[i] = 1.0 - shrink.log2();
            tail[i] = if shrink < 1.0 { half[i] * shrink / (1.0 - shrink) } else { f64::INFINITY };
        }
    }
    Ok(DualRenewal { levels: levels.to_vec(), partial, tail, decay, horizon, escaped_mass: last.escaped_mass })
}

/// Ladder laws and renewal tables for a first-coordinate marginal.
pub fn ladder_data(m: &Marginal, cfg: &LadderConfig) -> Result<LadderData> {
    let mean: f64 = m.iter().map(|(k, p)| k as f64 * p).sum();
    if m.lo >= 0 || m.hi() <= 0 || mean.abs() > 1e-10 {
        return domain("ladder heights need an oscillating first coordinate");
    }
    let level = cfg.level;
    let chi_plus = if m.hi() == 1 {
        let mut pmf = vec![0.0; level + 1];
        pmf[1.min(level)] = 1.0;
        LadderPmf { pmf, beyond: 0.0, defect: 0.0, exact: true }
    } else {
        first_passage(m, 1, cfg)
    };
    let chi_minus = if m.lo == -1 {
        let down = m.pmf(-1);
        let mut pmf = vec![0.0; level + 1];
        pmf[0] = 1.0 - down;
        pmf[1.min(level)] += down;
        LadderPmf { pmf, beyond: 0.0, defect: 0.0, exact: true }
    } else {
        first_passage(&m.negated(), 0, cfg)
    };
    let mut warnings = Vec::new();
    for (name, l) in [("chi+", &chi_plus), ("chi-", &chi_minus)] {
        if l.defect > cfg.tol {
            warnings.push(format!(
                "{name}: defect {:.3e} exceeds tolerance {:.1e}; raise the horizon or depth",
                l.defect, cfg.tol
            ));
        }
    }
    let h_table = renewal_h(&chi_plus.pmf, level);
    let v_table = renewal_v(&chi_minus.pmf, level);
    Ok(LadderData { chi_plus, chi_minus, h_table, v_table, warnings })
}
