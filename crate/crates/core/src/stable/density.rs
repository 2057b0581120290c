use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::StableParams;
use crate::error::{domain, Result};
use crate::numerics::{gamma, integrate_points, QuadOpts};

/// |CF| is dropped below this level.
const CF_FLOOR: f64 = 1e-12;

fn skew_factor(p: &StableParams) -> f64 {
    if p.alpha == 1.0 || p.alpha == 2.0 {
        0.0
    } else {
        p.beta * (PI * p.alpha / 2.0).tan()
    }
}

/// t beyond which exp(-c t^alpha) < CF_FLOOR.
pub(crate) fn cf_cutoff(alpha: f64, c: f64) -> f64 {
    (-CF_FLOOR.ln() / c).powf(1.0 / alpha)
}

/// Breakpoints on [0, t_max] that keep roughly one oscillation per panel.
pub(crate) fn panels(t_max: f64, freq: f64) -> Vec<f64> {
    let n = ((t_max * freq.abs() / PI).ceil() as usize).clamp(4, 4000);
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

/// Threshold in |x| (in units of c^{1/alpha}) past which the tail series is used.
const TAIL_START: f64 = 20.0;

pub(crate) fn tail_threshold(p: &StableParams) -> f64 {
    TAIL_START * p.scale_c.powf(1.0 / p.alpha)
}

/// Large-x expansion of the density (cdf = false) or of 1 - F (cdf = true), x > 0.
fn tail_series(x: f64, alpha: f64, c: f64, skew: f64, cdf: bool) -> Option<f64> {
    let a = Complex64::new(c, -c * skew);
    let mut sum: f64 = 0.0;
    let mut pow_a = Complex64::new(1.0, 0.0);
    let mut fact = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        pow_a *= -a;
        fact *= kf;
        let ka = kf * alpha;
        let phase = Complex64::from_polar(1.0, -PI * (ka + 1.0) / 2.0);
        let mut term = (pow_a * phase).re * gamma(ka + 1.0) / fact;
        term *= if cdf { x.powf(-ka) / ka } else { x.powf(-ka - 1.0) };
        if !term.is_finite() {
            return None;
        }
        let mag = (pow_a.norm() * gamma(ka + 1.0) / fact) * if cdf { x.powf(-ka) / ka } else { x.powf(-ka - 1.0) };
        if mag > last && k > 3 {
            // asymptotic series started to diverge
            return if last <= 1e-14 * sum.abs().max(1e-300) { Some(sum / PI) } else { None };
        }
        last = mag;
        sum += term;
        if mag <= 1e-17 * sum.abs() || mag < 1e-300 {
            return Some(sum / PI);
        }
    }
    None
}

fn density_quad(u: f64, p: &StableParams) -> Result<f64> {
    let (a, c, s) = (p.alpha, p.scale_c, skew_factor(p));
    let t_max = cf_cutoff(a, c);
    let f = |t: f64| {
        let ta = c * t.powf(a);
        (-ta).exp() * (s * ta - t * u).cos()
    };
    let r = integrate_points(f, &panels(t_max, u.abs().max(1.0)), QuadOpts::new(1e-14, 1e-11))?;
    Ok((r.value / PI).max(0.0))
}

fn cdf_quad(x: f64, p: &StableParams) -> Result<f64> {
    let (a, c, s) = (p.alpha, p.scale_c, skew_factor(p));
    let t_max = cf_cutoff(a, c);
    let f = |t: f64| {
        let ta = c * t.powf(a);
        (-ta).exp() * (t * x - s * ta).sin() / t
    };
    let r = integrate_points(f, &panels(t_max, x.abs().max(1.0)), QuadOpts::new(1e-14, 1e-11))?;
    Ok((0.5 + r.value / PI).clamp(0.0, 1.0))
}

fn require_1d(p: &StableParams) -> Result<()> {
    if p.dim != 1 {
        return domain(format!("one-dimensional routine called with dim = {}", p.dim));
    }
    Ok(())
}

/// Density of the (alpha, beta, c) stable law at u.
pub fn stable_density_1d(u: f64, p: &StableParams) -> Result<f64> {
    require_1d(p)?;
    if u.abs() >= tail_threshold(p) {
        let (x, s) = if u > 0.0 { (u, skew_factor(p)) } else { (-u, -skew_factor(p)) };
        if let Some(v) = tail_series(x, p.alpha, p.scale_c, s, false) {
            return Ok(v.max(0.0));
        }
    }
    density_quad(u, p)
}

/// Distribution function of the (alpha, beta, c) stable law at x.
pub fn stable_cdf_1d(x: f64, p: &StableParams) -> Result<f64> {
    require_1d(p)?;
    if x.abs() >= tail_threshold(p) {
        let (y, s) = if x > 0.0 { (x, skew_factor(p)) } else { (-x, -skew_factor(p)) };
        if let Some(v) = tail_series(y, p.alpha, p.scale_c, s, true) {
            let v = v.clamp(0.0, 1.0);
            return Ok(if x > 0.0 { 1.0 - v } else { v });
        }
    }
    cdf_quad(x, p)
}

/// Coefficients c_k of the tail expansion, truncated where the terms are
/// negligible at `x_t`: 1 - F(x) = sum c_k x^{-k alpha} / (k alpha), f(x) = sum c_k x^{-k alpha - 1}.
fn tail_coefficients(alpha: f64, c: f64, skew: f64, x_t: f64) -> Option<Vec<f64>> {
    let a = Complex64::new(c, -c * skew);
    let mut pow_a = Complex64::new(1.0, 0.0);
    let mut fact = 1.0;
    let mut out = Vec::new();
    let (mut sum, mut last) = (0.0f64, f64::INFINITY);
    for k in 1..200 {
        let kf = k as f64;
        pow_a *= -a;
        fact *= kf;
        let ka = kf * alpha;
        let g = gamma(ka + 1.0) / fact;
        let phase = Complex64::from_polar(1.0, -PI * (ka + 1.0) / 2.0);
        let coef = (pow_a * phase).re * g / PI;
        let mag = pow_a.norm() * g / PI * x_t.powf(-ka) / ka;
        if !mag.is_finite() || (mag > last && k > 3) {
            return (last <= 1e-14 * sum.abs()).then_some(out);
        }
        out.push(coef);
        sum += coef * x_t.powf(-ka) / ka;
        last = mag;
        if mag <= 1e-17 * sum.abs() {
            return Some(out);
        }
    }
    None
}

/// Tabulated distribution function with Hermite interpolation in the bulk
/// and the tail expansion outside.
#[derive(Clone, Debug)]
pub struct CdfTable {
    params: StableParams,
    lo: f64,
    h: f64,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    /// tail coefficients for x -> +inf and x -> -inf
    right: Option<Vec<f64>>,
    left: Option<Vec<f64>>,
}

impl CdfTable {
    pub fn new(p: &StableParams, h: f64) -> Result<Self> {
        require_1d(p)?;
        let x_t = tail_threshold(p);
        let n = (2.0 * x_t / h).ceil() as usize;
        let h = 2.0 * x_t / n as f64;
        let mut cdf = Vec::with_capacity(n + 1);
        let mut pdf = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = -x_t + h * i as f64;
            cdf.push(cdf_quad(x, p)?);
            pdf.push(density_quad(x, p)?);
        }
        let sk = skew_factor(p);
        let right = tail_coefficients(p.alpha, p.scale_c, sk, x_t);
        let left = tail_coefficients(p.alpha, p.scale_c, -sk, x_t);
        Ok(CdfTable { params: p.clone(), lo: -x_t, h, cdf, pdf, right, left })
    }

    /// (1 - F(|x|) or F(-|x|), density) from the stored tail coefficients.
    fn tail(&self, x: f64) -> Option<(f64, f64)> {
        let coefs = if x > 0.0 { self.right.as_ref()? } else { self.left.as_ref()? };
        let ax = x.abs();
        let y = ax.powf(-self.params.alpha);
        let (mut sf, mut pdf, mut yk) = (0.0, 0.0, 1.0);
        for (k, c) in coefs.iter().enumerate() {
            yk *= y;
            sf += c * yk / ((k + 1) as f64 * self.params.alpha);
            pdf += c * yk;
        }
        Some((sf.clamp(0.0, 1.0), (pdf / ax).max(0.0)))
    }

    fn hermite(&self, x: f64, want_pdf: bool) -> f64 {
        let s = (x - self.lo) / self.h;
        let i = (s.floor() as usize).min(self.cdf.len() - 2);
        let t = s - i as f64;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (self.pdf[i] * self.h, self.pdf[i + 1] * self.h);
        let (t2, t3) = (t * t, t * t * t);
        if want_pdf {
            let d = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0
                + (-6.0 * t2 + 6.0 * t) * y1
                + (3.0 * t2 - 2.0 * t) * m1;
            (d / self.h).max(0.0)
        } else {
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * m1;
            v.clamp(0.0, 1.0)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo || x >= -self.lo {
            if let Some((sf, _)) = self.tail(x) {
                return if x > 0.0 { 1.0 - sf } else { sf };
            }
            stable_cdf_1d(x, &self.params).unwrap_or(if x > 0.0 { 1.0 } else { 0.0 })
        } else {
            self.hermite(x, false)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= self.lo || x >= -self.lo {
            if let Some((_, d)) = self.tail(x) {
                return d;
            }
            stable_density_1d(x, &self.params).unwrap_or(0.0)
        } else {
            self.hermite(x, true)
        }
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }
}
