use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A regularly varying comparison function for P(|X| > t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    /// L t^{-alpha}
    Power { l: f64, alpha: f64 },
    /// L t^{-alpha} (1 + ln t) for t >= 1
    PowerLog { l: f64, alpha: f64 },
    /// points (t, phi(t)), log-log interpolated, power-law extrapolated
    Table { points: Vec<(f64, f64)>, alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub phi: Phi,
    pub a1: f64,
    pub a2: f64,
}

impl Phi {
    pub fn alpha(&self) -> f64 {
        match self {
            Phi::Power { alpha, .. } | Phi::PowerLog { alpha, .. } | Phi::Table { alpha, .. } => *alpha,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Phi::Power { l, alpha } => l * t.powf(-alpha),
            Phi::PowerLog { l, alpha } => l * t.powf(-alpha) * (1.0 + t.max(1.0).ln()),
            Phi::Table { points, alpha } => {
                let n = points.len();
                if t <= points[0].0 {
                    return points[0].1 * (t / points[0].0).powf(-alpha);
                }
                if t >= points[n - 1].0 {
                    return points[n - 1].1 * (t / points[n - 1].0).powf(-alpha);
                }
                let i = points.partition_point(|p| p.0 <= t) - 1;
                let (t0, f0) = points[i];
                let (t1, f1) = points[i + 1];
                let s = (t / t0).ln() / (t1 / t0).ln();
                (f0.ln() + s * (f1.ln() - f0.ln())).exp()
            }
        }
    }
}

impl TailProfile {
    pub fn new(phi: Phi, a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 >= a1) {
            return domain(format!("need 0 < a1 <= a2, got {a1}, {a2}"));
        }
        if let Phi::Table { points, .. } = &phi {
            if points.len() < 2 || points.windows(2).any(|w| w[1].0 <= w[0].0 || w[0].1 <= 0.0 || w[1].1 <= 0.0) {
                return domain("tail table needs increasing t and positive values");
            }
        }
        Ok(TailProfile { phi, a1, a2 })
    }

    pub fn pure_power(alpha: f64) -> Self {
        TailProfile { phi: Phi::Power { l: 1.0, alpha }, a1: 1.0, a2: 1.0 }
    }

    /// g(r) = phi(r) / r^d
    pub fn kernel(&self, r: f64, d: usize) -> f64 {
        self.phi.eval(r) / r.powi(d as i32)
    }

    /// Whether `tail(t)` lies in the band [a1 phi(t), a2 phi(t)] within `slack` (relative).
    pub fn brackets(&self, t: f64, tail: f64, slack: f64) -> bool {
        let p = self.phi.eval(t);
        tail >= self.a1 * p * (1.0 - slack) && tail <= self.a2 * p * (1.0 + slack)
    }

    /// Checks that the kernel is positive and nonincreasing on a geometric grid over [r0, r1].
    pub fn kernel_monotone(&self, d: usize, r0: f64, r1: f64) -> bool {
        let mut prev = f64::INFINITY;
        let steps = 200;
        for i in 0..=steps {
            let r = r0 * (r1 / r0).powf(i as f64 / steps as f64);
            let g = self.kernel(r, d);
            if !(g > 0.0) || g > prev * (1.0 + 1e-12) {
                return false;
            }
            prev = g;
        }
        true
    }
}
