//! Multivariate stable densities: isotropic laws by radial inversion,
//! atomic spectral measures by direction-wise inversion (d <= 3).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::density::{cf_cutoff, panels};
use super::{stable_density_1d, Spectral, StableParams};
use crate::error::{domain, Result};
use crate::numerics::{gamma, integrate_points, QuadOpts};

const RADIAL_TAIL_START: f64 = 20.0;

/// Large-r series for the isotropic density with unit scale.
fn radial_tail_series(r: f64, alpha: f64, d: usize) -> Option<f64> {
    let df = d as f64;
    let mut sum: f64 = 0.0;
    let mut fact = 1.0;
    let mut last = f64::INFINITY;
    for m in 1..200 {
        let mf = m as f64;
        fact *= mf;
        let am = alpha * mf;
        let coef = gamma(am / 2.0 + 1.0) * gamma((am + df) / 2.0) / fact * (2.0 / r).powf(am);
        let term = if m % 2 == 1 { coef } else { -coef } * (PI * am / 2.0).sin();
        if !term.is_finite() {
            return None;
        }
        if coef > last && m > 3 {
            return if last <= 1e-14 * sum.abs() { Some(sum * PI.powf(-df / 2.0 - 1.0) * r.powf(-df)) } else { None };
        }
        last = coef;
        sum += term;
        if coef <= 1e-17 * sum.abs() {
            break;
        }
    }
    Some(sum * PI.powf(-df / 2.0 - 1.0) * r.powf(-df))
}

/// Isotropic density at radius r for unit scale, d in 1..=3.
fn radial_density_unit(r: f64, alpha: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if r == 0.0 {
        return Ok(2.0 * gamma(df / alpha) / (alpha * (4.0 * PI).powf(df / 2.0) * gamma(df / 2.0)));
    }
    if r >= RADIAL_TAIL_START {
        if let Some(v) = radial_tail_series(r, alpha, d) {
            return Ok(v.max(0.0));
        }
    }
    let t_max = cf_cutoff(alpha, 1.0);
    let pts = panels(t_max, r.max(1.0));
    let opts = QuadOpts::new(1e-14, 1e-11);
    let v = match d {
        1 => integrate_points(|k| (-k.powf(alpha)).exp() * (k * r).cos(), &pts, opts)?.value / PI,
        2 => {
            integrate_points(|k| (-k.powf(alpha)).exp() * k * libm::j0(k * r), &pts, opts)?.value / (2.0 * PI)
        }
        3 => {
            integrate_points(|k| (-k.powf(alpha)).exp() * k * (k * r).sin(), &pts, opts)?.value
                / (2.0 * PI * PI * r)
        }
        _ => return domain(format!("isotropic density implemented for d <= 3, got {d}")),
    };
    Ok(v.max(0.0))
}

/// Density at z of the isotropic law with CF exp(-c|t|^alpha) in R^d.
pub fn isotropic_stable_density(z: &[f64], params: &StableParams) -> Result<f64> {
    if params.spectral != Spectral::Isotropic {
        return domain("isotropic density requested for a non-isotropic law");
    }
    if z.len() != params.dim {
        return domain(format!("point has dimension {}, law has {}", z.len(), params.dim));
    }
    let a = params.alpha;
    if !(0.0 < a && a < 2.0) {
        return domain("isotropic density requires 0 < alpha < 2");
    }
    let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = params.scale_c.powf(1.0 / a);
    Ok(radial_density_unit(r / s, a, params.dim)? / s.powi(params.dim as i32))
}

fn psi(theta: &[f64], atoms: &[(Vec<f64>, f64)], alpha: f64, c: f64) -> Complex64 {
    let skew = if alpha == 1.0 { 0.0 } else { (PI * alpha / 2.0).tan() };
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, w) in atoms {
        let dot: f64 = theta.iter().zip(s).map(|(a, b)| a * b).sum();
        if dot == 0.0 {
            continue;
        }
        let m = w * dot.abs().powf(alpha);
        acc += Complex64::new(m, -m * skew * dot.signum());
    }
    acc * c
}

/// Re of the radial integral along direction theta: int_0^inf k^{d-1} exp(-k^a psi - i k q) dk.
fn ray_integral(psi: Complex64, q: f64, alpha: f64, d: usize, opts: QuadOpts) -> Result<f64> {
    let t_max = cf_cutoff(alpha, psi.re);
    let f = |k: f64| {
        let e = (-psi * k.powf(alpha) - Complex64::new(0.0, k * q)).exp();
        e.re * k.powi(d as i32 - 1)
    };
    Ok(integrate_points(f, &panels(t_max, q.abs().max(1.0)), opts)?.value)
}

fn kinks_2d(atoms: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let mut pts = vec![0.0, 2.0 * PI];
    for (s, _) in atoms {
        let a = s[1].atan2(s[0]);
        for k in [-1.5, -0.5, 0.5, 1.5, 2.5] {
            let t = a + k * PI;
            if t > 0.0 && t < 2.0 * PI {
                pts.push(t);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// Density of a stable law with an atomic spectral measure, d <= 3.
///
/// The CF is exp(-c sum_j w_j |<t,s_j>|^a (1 - i sgn<t,s_j> tan(pi a/2))).
pub fn stable_density_nd(z: &[f64], params: &StableParams) -> Result<f64> {
    let d = params.dim;
    if z.len() != d {
        return domain(format!("point has dimension {}, law has {d}", z.len()));
    }
    let atoms = match &params.spectral {
        Spectral::Isotropic => return isotropic_stable_density(z, params),
        Spectral::Atoms(a) => a,
    };
    let a = params.alpha;
    let c = params.scale_c;
    if a == 1.0 {
        let mut drift = vec![0.0; d];
        for (s, w) in atoms {
            for k in 0..d {
                drift[k] += w * s[k];
            }
        }
        if drift.iter().any(|x| x.abs() > 1e-12) {
            return domain("alpha = 1 with an asymmetric spectral measure is not supported");
        }
    }
    let opts = QuadOpts::new(1e-12, 1e-8);
    match d {
        1 => {
            let (mut up, mut down) = (0.0, 0.0);
            for (s, w) in atoms {
                if s[0] > 0.0 {
                    up += w;
                } else {
                    down += w;
                }
            }
            let beta = if a == 1.0 { 0.0 } else { up - down };
            stable_density_1d(z[0], &StableParams::one_dim(a, beta, c)?)
        }
        2 => {
            let outer = |th: f64| {
                let dir = [th.cos(), th.sin()];
                let p = psi(&dir, atoms, a, c);
                if p.re <= 0.0 {
                    return f64::NAN;
                }
                let q = dir[0] * z[0] + dir[1] * z[1];
                ray_integral(p, q, a, 2, opts).unwrap_or(f64::NAN)
            };
            let r = integrate_points(outer, &kinks_2d(atoms), opts)?;
            if !r.value.is_finite() {
                return domain("spectral measure does not span the plane");
            }
            Ok((r.value / (4.0 * PI * PI)).max(0.0))
        }
        3 => {
            let loose = QuadOpts::new(1e-10, 1e-6);
            let polar = |u: f64| {
                let sin_t = (1.0 - u * u).max(0.0).sqrt();
                let az = |ph: f64| {
                    let dir = [sin_t * ph.cos(), sin_t * ph.sin(), u];
                    let p = psi(&dir, atoms, a, c);
                    if p.re <= 0.0 {
                        return f64::NAN;
                    }
                    let q = dir[0] * z[0] + dir[1] * z[1] + dir[2] * z[2];
                    ray_integral(p, q, a, 3, loose).unwrap_or(f64::NAN)
                };
                let pts: Vec<f64> = (0..=8).map(|i| 2.0 * PI * i as f64 / 8.0).collect();
                integrate_points(az, &pts, loose).map(|r| r.value).unwrap_or(f64::NAN)
            };
            let pts: Vec<f64> = (0..=4).map(|i| -1.0 + 0.5 * i as f64).collect();
            let r = integrate_points(polar, &pts, loose)?;
            if !r.value.is_finite() {
                return domain("spectral measure does not span space");
            }
            Ok((r.value / (8.0 * PI * PI * PI)).max(0.0))
        }
        _ => domain(format!("atomic densities implemented for d <= 3, got {d}")),
    }
}
