//! Truncated exact Green function with an empirical tail bound.

use serde::{Deserialize, Serialize};

use super::field::{EvolveOpts, Evolver, KillRule, KilledField, LatticeBox};
use super::ladder::LadderData;
use crate::error::{domain, Result};
use crate::step::{LatticeStep, ScalingSeq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// no tail estimate
    None,
    /// sum_{n > N} C V(x_1) H(min(c_n, y_1)) / (n c_n^d), C fitted on n <= N
    Bound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenValue {
    pub y: Vec<i64>,
    /// sum_{n <= N} p_n(x, y)
    pub partial: f64,
    /// estimate of sum_{n > N} p_n(x, y); infinite if the tail does not converge
    pub tail_bound: f64,
    /// max over n <= N of p_n n c_n^d / (V(x_1) H(min(c_n, y_1))); empirical
    pub constant: f64,
    pub divergent: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenReport {
    pub x: Vec<i64>,
    pub n_max: usize,
    pub values: Vec<GreenValue>,
    pub escaped_mass: f64,
    pub warnings: Vec<String>,
}

/// sum_{n > n0} V H(min(c_n, y1)) / (n c_n^d), bounded above block by block
/// on a geometric grid; the far tail is closed with a fitted power law.
fn tail_sum(n0: usize, y1: f64, d: usize, ladder: &LadderData, scaling: &ScalingSeq) -> (f64, bool) {
    let term_hi = |a: f64, b: f64| {
        // terms decrease in n apart from H(min(c_n, y1)), which increases
        let ca = scaling.c(a as usize);
        let cb = scaling.c(b as usize);
        ladder.h(cb.min(y1)) / (a * ca.powi(d as i32))
    };
    let mut total = 0.0;
    let mut a = (n0 + 1) as f64;
    let end = (n0 as f64 * 1e4).max(1e6);
    while a < end {
        let b = (a * 1.01).ceil().max(a + 1.0);
        total += (b - a) * term_hi(a, b);
        a = b;
    }
    // local decay exponent of n / (n c_n^d) near the end
    let p = {
        let c1 = scaling.c((end / 2.0) as usize);
        let c2 = scaling.c(end as usize);
        1.0 + d as f64 * (c2 / c1).ln() / 2f64.ln()
    };
    if p <= 1.0 + 1e-9 {
        return (f64::INFINITY, true);
    }
    let last = term_hi(end, end);
    total += last * end / (p - 1.0);
    (total, false)
}

/// Green function G(x, y) = sum_n p_n(x, y) truncated at `n_max`, for every y in `ys`.
pub fn green_exact(
    x: &[i64],
    ys: &[Vec<i64>],
    step: &LatticeStep,
    n_max: usize,
    tail: TailMode,
    ladder: &LadderData,
    scaling: &ScalingSeq,
) -> Result<GreenReport> {
    if x.len() != step.dim() || x[0] < 1 || ys.iter().any(|y| y.len() != step.dim() || y[0] < 1) {
        return domain("green_exact needs points in the half space");
    }
    let d = step.dim();
    let bbox = LatticeBox::reachable(step, x, n_max, 0);
    green_exact_in_box(x, ys, step, n_max, tail, ladder, scaling, bbox, EvolveOpts::default()).map(|mut r| {
        if d == 1 && r.values.iter().any(|v| v.divergent) {
            r.warnings.push("tail sum does not converge; the Green function may be infinite".into());
        }
        r
    })
}

/// As `green_exact` on a caller-chosen box and overflow policy.
#[allow(clippy::too_many_arguments)]
pub fn green_exact_in_box(
    x: &[i64],
    ys: &[Vec<i64>],
    step: &LatticeStep,
    n_max: usize,
    tail: TailMode,
    ladder: &LadderData,
    scaling: &ScalingSeq,
    bbox: LatticeBox,
    opts: EvolveOpts,
) -> Result<GreenReport> {
    let d = step.dim();
    let ev = Evolver::new(step, bbox.clone(), KillRule::HALF_SPACE, opts)?;
    let idx: Vec<Option<usize>> = ys.iter().map(|y| bbox.index(y)).collect();
    let vx = ladder.v(x[0] as f64);
    let mut partial = vec![0.0; ys.len()];
    let mut constant = vec![0.0f64; ys.len()];
    let last = ev.run(KilledField::point_mass(bbox, x)?, n_max, |f| {
        let n = f.time;
        for (j, i) in idx.iter().enumerate() {
            let p = i.map(|i| f.mass[i]).unwrap_or(0.0);
            partial[j] += p;
            if n >= 1 && p > 0.0 {
                let c = scaling.c(n);
                let skel = vx * ladder.h(c.min(ys[j][0] as f64)) / (n as f64 * c.powi(d as i32));
                constant[j] = constant[j].max(p / skel);
            }
        }
        Ok(())
    })?;
    let mut warnings = Vec::new();
    if ys.iter().any(|y| !ladder.covers(y[0] as f64) || !ladder.covers(x[0] as f64)) {
        warnings.push("ladder tables do not cover the requested boundary distances".into());
    }
    let values = ys
        .iter()
        .enumerate()
        .map(|(j, y)| {
            let (tail_bound, divergent) = match tail {
                TailMode::None => (0.0, false),
                TailMode::Bound => {
                    let (s, div) = tail_sum(n_max, y[0] as f64, d, ladder, scaling);
                    (constant[j] * vx * s, div)
                }
            };
            GreenValue { y: y.clone(), partial: partial[j], tail_bound, constant: constant[j], divergent }
        })
        .collect();
    Ok(GreenReport { x: x.to_vec(), n_max, values, escaped_mass: last.escaped_mass, warnings })
}
