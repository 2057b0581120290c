//! Exact local probabilities by three independent routes, survival, and the
//! Baxter-Spitzer coefficient identity.

use rustfft::num_complex::Complex64;

use super::field::{EvolveOpts, Evolver, KillRule, KilledField, LatticeBox};
use crate::error::{domain, Result};
use crate::numerics::exp_series;
use crate::step::LatticeStep;

fn check_start(x: &[i64], step: &LatticeStep) -> Result<()> {
    if x.len() != step.dim() {
        return domain(format!("point {x:?} has the wrong dimension"));
    }
    if x[0] < 1 {
        return domain(format!("point {x:?} is not in the half space"));
    }
    Ok(())
}

/// Killed fields at times 0..=n started from `x` (which may sit on the boundary).
pub fn killed_fields(step: &LatticeStep, x: &[i64], n: usize) -> Result<Vec<KilledField>> {
    let bbox = LatticeBox::reachable(step, x, n, 0);
    let ev = Evolver::new(step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts::default())?;
    let mut out = Vec::with_capacity(n + 1);
    ev.run(KilledField::point_mass(bbox, x)?, n, |f| {
        out.push(f.clone());
        Ok(())
    })?;
    Ok(out)
}

/// P(x + S(n) = y, tau_x > n).
pub fn p_n_exact(x: &[i64], y: &[i64], n: usize, step: &LatticeStep) -> Result<f64> {
    check_start(x, step)?;
    check_start(y, step)?;
    if n == 0 {
        return Ok(if x == y { 1.0 } else { 0.0 });
    }
    let bbox = LatticeBox::reachable(step, x, n, 0);
    let ev = Evolver::new(step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts::default())?;
    let f = ev.run(KilledField::point_mass(bbox, x)?, n, |_| Ok(()))?;
    Ok(f.at(y))
}

/// P(tau_x > n): the live mass after n steps. A start with x_1 = 0 gives
/// the law of tau = tau_0 for the walk started on the boundary.
pub fn survival_exact(x: &[i64], n: usize, step: &LatticeStep) -> Result<f64> {
    if x.len() != step.dim() || x[0] < 0 {
        return domain(format!("start {x:?} must have x_1 >= 0"));
    }
    let bbox = LatticeBox::reachable(step, x, n, 0);
    let ev = Evolver::new(step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts::default())?;
    Ok(ev.run(KilledField::point_mass(bbox, x)?, n, |_| Ok(()))?.live_mass())
}

/// Distributions of the unkilled walk from the origin at times 0..=n on a common box.
fn free_fields(step: &LatticeStep, n: usize) -> Result<Vec<KilledField>> {
    let origin = vec![0; step.dim()];
    let bbox = LatticeBox::reachable(step, &origin, n, i64::MIN);
    let ev = Evolver::new(step, bbox.clone(), KillRule::Never, EvolveOpts::default())?;
    let mut out = Vec::with_capacity(n + 1);
    ev.run(KilledField::point_mass(bbox, &origin)?, n, |f| {
        out.push(f.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Summation order in the ladder recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecursionForm {
    /// outer sum over the support of b_{n-k}
    OverB,
    /// outer sum over the support of the restricted kernel A_k
    OverKernel,
}

/// Sparse (point, value) list of a field's nonzero cells.
fn sparse(f: &KilledField) -> Vec<(Vec<i64>, f64)> {
    f.nonzero().collect()
}

/// b_m(y) = p_m(0, y) for m = 0..=n via
/// m b_m(y) = sum_{k=1}^m sum_z A_k(y - z) b_{m-k}(z), A_k(w) = P(S(k) = w, S_1(k) > 0).
pub fn b_fields_via_recursion(step: &LatticeStep, n: usize, form: RecursionForm) -> Result<Vec<KilledField>> {
    let free = free_fields(step, n)?;
    let kernels: Vec<Vec<(Vec<i64>, f64)>> =
        free.iter().map(|f| sparse(f).into_iter().filter(|(p, _)| p[0] > 0).collect()).collect();
    let origin = vec![0; step.dim()];
    let bbox = LatticeBox::reachable(step, &origin, n, 0);
    let mut b: Vec<KilledField> = vec![KilledField::point_mass(bbox.clone(), &origin)?];
    for m in 1..=n {
        let mut cur = KilledField::zero(bbox.clone());
        cur.time = m;
        let add = |y: Vec<i64>, v: f64, cur: &mut KilledField| {
            if let Some(i) = bbox.index(&y) {
                cur.mass[i] += v;
            }
        };
        for k in 1..=m {
            let bk = &b[m - k];
            match form {
                RecursionForm::OverB => {
                    for (z, bz) in bk.nonzero() {
                        for (w, a) in &kernels[k] {
                            let y: Vec<i64> = z.iter().zip(w).map(|(p, q)| p + q).collect();
                            add(y, a * bz, &mut cur);
                        }
                    }
                }
                RecursionForm::OverKernel => {
                    let bs = sparse(bk);
                    for (w, a) in &kernels[k] {
                        for (z, bz) in &bs {
                            let y: Vec<i64> = z.iter().zip(w).map(|(p, q)| p + q).collect();
                            add(y, a * bz, &mut cur);
                        }
                    }
                }
            }
        }
        let inv = 1.0 / m as f64;
        cur.mass.iter_mut().for_each(|v| *v *= inv);
        b.push(cur);
    }
    Ok(b)
}

/// b_n(y) = p_n(0, y) from the ladder recursion.
pub fn p_n_via_recursion(y: &[i64], n: usize, step: &LatticeStep, form: RecursionForm) -> Result<f64> {
    if y.len() != step.dim() {
        return domain("point has the wrong dimension");
    }
    Ok(b_fields_via_recursion(step, n, form)?[n].at(y))
}

/// p_n(x, y) by splitting the path at the last time it attains its minimum
/// first coordinate: sum_k sum_z p+_k(z - x) b_{n-k}(y - z), 1 <= z_1 <= min(x_1, y_1 + 1).
pub fn p_n_via_min_decomposition(x: &[i64], y: &[i64], n: usize, step: &LatticeStep) -> Result<f64> {
    check_start(x, step)?;
    check_start(y, step)?;
    let origin = vec![0; step.dim()];
    // p+_k: no strict ascent of the first coordinate up to time k
    let pbox = LatticeBox::reachable(step, &origin, n, i64::MIN);
    let ev = Evolver::new(step, pbox.clone(), KillRule::Above(0), EvolveOpts::default())?;
    let mut pplus = Vec::with_capacity(n + 1);
    ev.run(KilledField::point_mass(pbox, &origin)?, n, |f| {
        pplus.push(f.clone());
        Ok(())
    })?;
    let b = killed_fields(step, &origin, n)?;
    let z1_max = x[0].min(y[0] + 1);
    let mut total = 0.0;
    for k in 0..=n {
        for (w, p) in pplus[k].nonzero() {
            let z: Vec<i64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
            if z[0] < 1 || z[0] > z1_max {
                continue;
            }
            let rest: Vec<i64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
            total += p * b[n - k].at(&rest);
        }
    }
    Ok(total)
}

/// Both sides of the Baxter-Spitzer identity at frequency t, orders 0..=n_max:
/// E[e^{i t.S(n)}; tau > n] and the coefficients of exp{sum s^n/n E[e^{i t.S(n)}; S_1(n) > 0]}.
pub fn bs_coefficients(step: &LatticeStep, t: &[f64], n_max: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if t.len() != step.dim() || n_max == 0 {
        return domain("frequency must match the dimension and the order must be >= 1");
    }
    let cf = |f: &KilledField, positive_only: bool| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, m) in f.nonzero() {
            if positive_only && p[0] <= 0 {
                continue;
            }
            let phase: f64 = p.iter().zip(t).map(|(a, b)| *a as f64 * b).sum();
            acc += Complex64::from_polar(m, phase);
        }
        acc
    };
    let origin = vec![0; step.dim()];
    let lhs: Vec<Complex64> = killed_fields(step, &origin, n_max)?.iter().map(|f| cf(f, false)).collect();
    let free = free_fields(step, n_max)?;
    let mut a = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for n in 1..=n_max {
        a[n] = cf(&free[n], true) / n as f64;
    }
    Ok((lhs, exp_series(&a)))
}
