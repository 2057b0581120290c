//! The meander density as a mixture over the last visit of the running
//! minimum:
//!
//!   f(w1, w2; v) = int_{w1}^{w2} t^{rho-1} int_{u_1 < v_1 / t^{1/alpha}}
//!                  g((v - t^{1/alpha} u) / h) h^{-d} P(M in du) dt,  h = (1 - t)^{1/alpha},
//!
//! with P(M in du) taken from a meander histogram. The Jacobian h^{-d} is the
//! density normalisation of t^{1/alpha} u + h Z; in one dimension it is
//! h^{-1} = (1 - t)^{-1/alpha}.

use super::{norm, AsymptoticContext};
use crate::error::{domain, Error, Result};
use crate::mc::MeanderHistogram;
use crate::numerics::{integrate, QuadOpts};
use crate::stable::{isotropic_stable_density, CdfTable, Spectral, StableParams};

#[derive(Clone, Copy, Debug)]
pub struct DenfOpts {
    /// largest admissible bin width (in units of c_n) inside the core region
    pub max_bin_width: f64,
    /// half-width of the core region checked for resolution
    pub core: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// grid step of the tabulated stable law
    pub table_step: f64,
}

impl Default for DenfOpts {
    fn default() -> Self {
        DenfOpts { max_bin_width: 0.25, core: 5.0, rel_tol: 1e-6, abs_tol: 1e-10, table_step: 0.01 }
    }
}

/// Isotropic stable density as a function of the radius, tabulated.
#[derive(Clone, Debug)]
struct RadialTable {
    params: StableParams,
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn new(params: &StableParams, step: f64) -> Result<Self> {
        let r_max = 20.0 * params.scale_c.powf(1.0 / params.alpha);
        let n = (r_max / step).ceil() as usize;
        let mut z = vec![0.0; params.dim];
        let mut values = Vec::with_capacity(n + 1);
        for k in 0..=n {
            z[0] = k as f64 * step;
            values.push(isotropic_stable_density(&z, params)?);
        }
        Ok(RadialTable { params: params.clone(), step, values })
    }

    fn eval(&self, r: f64) -> f64 {
        let s = r / self.step;
        let k = s.floor() as usize;
        if k + 1 >= self.values.len() {
            let mut z = vec![0.0; self.params.dim];
            z[0] = r;
            return isotropic_stable_density(&z, &self.params).unwrap_or(0.0);
        }
        let t = s - k as f64;
        self.values[k] * (1.0 - t) + self.values[k + 1] * t
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    OneDim(CdfTable),
    Radial(RadialTable),
}

/// Evaluates f(w1, w2; v) against one histogram; reusable across points.
#[derive(Clone, Debug)]
pub struct DenfEvaluator {
    kernel: Kernel,
    alpha: f64,
    rho: f64,
    dim: usize,
    lower: Vec<Vec<f64>>,
    upper: Vec<Vec<f64>>,
    masses: Vec<f64>,
    /// first-axis window end and out-of-window mass (one dimension only)
    window_end: f64,
    overflow: f64,
    min_width: f64,
    opts: DenfOpts,
}

impl DenfEvaluator {
    pub fn new(ctx: &AsymptoticContext, hist: &MeanderHistogram, opts: DenfOpts) -> Result<Self> {
        let d = ctx.dim();
        if hist.binning.dim() != d {
            return domain("histogram and limit law have different dimensions");
        }
        let b = &hist.binning;
        let mut min_width = f64::INFINITY;
        for i in 0..b.len() {
            let lo = b.lower_corner(i);
            let hi = b.upper_corner(i);
            let inside = lo.iter().all(|v| v.abs() < opts.core);
            for (a, c) in lo.iter().zip(&hi) {
                let w = c - a;
                min_width = min_width.min(w);
                if inside && w > opts.max_bin_width {
                    return Err(Error::Resolution(format!(
                        "bin at {lo:?} has width {w} > {} in the core region",
                        opts.max_bin_width
                    )));
                }
            }
        }
        if b.edges[0][0] < 0.0 {
            return domain("meander histogram window must lie in the half space");
        }
        let kernel = match (d, &ctx.params.spectral) {
            (1, _) => Kernel::OneDim(CdfTable::new(&ctx.params, opts.table_step)?),
            (_, Spectral::Isotropic) => Kernel::Radial(RadialTable::new(&ctx.params, opts.table_step)?),
            _ => return domain("the mixture representation is provided for d = 1 and isotropic laws"),
        };
        let m = hist.masses();
        let (mut lower, mut upper, mut masses) = (Vec::new(), Vec::new(), Vec::new());
        for (i, &mi) in m.iter().enumerate() {
            if mi > 0.0 {
                lower.push(b.lower_corner(i));
                upper.push(b.upper_corner(i));
                masses.push(mi);
            }
        }
        let e0 = &b.edges[0];
        Ok(DenfEvaluator {
            kernel,
            alpha: ctx.params.alpha,
            rho: ctx.params.rho(),
            dim: d,
            lower,
            upper,
            masses,
            window_end: e0[e0.len() - 1],
            overflow: if d == 1 { hist.out_of_window_mass() } else { 0.0 },
            min_width,
            opts,
        })
    }

    /// h^{-1} int g((v - s u)/h) P(M in du) for d = 1 with bin-uniform mass:
    /// sum_b dens_b (F((v - s lo)/h) - F((v - s hi')/h)) / s plus the overflow term.
    fn inner_1d(&self, f: &CdfTable, v: f64, t: f64) -> f64 {
        let s = t.powf(1.0 / self.alpha);
        let h = (1.0 - t).powf(1.0 / self.alpha);
        let cut = v / s;
        let mut acc = 0.0;
        for ((lo, hi), m) in self.lower.iter().zip(&self.upper).zip(&self.masses) {
            let (lo, hi) = (lo[0], hi[0]);
            if lo >= cut {
                continue;
            }
            let b_hi = hi.min(cut);
            let dens = m / (hi - lo);
            let a = (v - s * lo) / h;
            let b = (v - s * b_hi) / h;
            let width = b_hi - lo;
            let term = if s * width / h < 1e-3 {
                // Simpson on the density avoids cancellation in the CDF difference
                let mid = 0.5 * (a + b);
                width / h * (f.pdf(a) + 4.0 * f.pdf(mid) + f.pdf(b)) / 6.0
            } else {
                (f.cdf(a) - f.cdf(b)) / s
            };
            acc += dens * term;
        }
        if self.overflow > 0.0 && cut > self.window_end {
            // Pareto-shaped overflow beyond the window: u = W q^{-1/alpha}, q uniform
            let w = self.window_end;
            let q_min = (w / cut).powf(self.alpha);
            let g = |q: f64| f.pdf((v - s * w * q.powf(-1.0 / self.alpha)) / h) / h;
            let r = integrate(g, q_min, 1.0, QuadOpts::new(self.opts.abs_tol, self.opts.rel_tol));
            acc += self.overflow * r.map(|r| r.value).unwrap_or(0.0);
        }
        acc
    }

    fn bin_density_at(&self, z: &[f64]) -> f64 {
        for ((lo, hi), m) in self.lower.iter().zip(&self.upper).zip(&self.masses) {
            if z.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v >= a && v < b) {
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                return m / vol;
            }
        }
        0.0
    }

    fn inner_nd(&self, g: &RadialTable, v: &[f64], t: f64) -> f64 {
        let s = t.powf(1.0 / self.alpha);
        let h = (1.0 - t).powf(1.0 / self.alpha);
        let d = self.dim as i32;
        if h < 0.5 * self.min_width * s {
            // the kernel is narrower than a bin: the mixture reduces to the bin density at v / s
            let z: Vec<f64> = v.iter().map(|a| a / s).collect();
            return self.bin_density_at(&z) / s.powi(d);
        }
        let cut = v[0] / s;
        let mut acc = 0.0;
        let mut c = vec![0.0; self.dim];
        for ((lo, hi), m) in self.lower.iter().zip(&self.upper).zip(&self.masses) {
            if lo[0] >= cut {
                continue;
            }
            let top = hi[0].min(cut);
            let frac = (top - lo[0]) / (hi[0] - lo[0]);
            c[0] = 0.5 * (lo[0] + top);
            for i in 1..self.dim {
                c[i] = 0.5 * (lo[i] + hi[i]);
            }
            let r: Vec<f64> = v.iter().zip(&c).map(|(a, b)| (a - s * b) / h).collect();
            acc += m * frac * g.eval(norm(&r));
        }
        acc / h.powi(d)
    }

    /// f(w1, w2; v) for 0 <= w1 <= w2 <= 1.
    pub fn partial(&self, w1: f64, w2: f64, v: &[f64]) -> Result<f64> {
        if !(0.0 <= w1 && w1 <= w2 && w2 <= 1.0) {
            return domain(format!("need 0 <= w1 <= w2 <= 1, got {w1}, {w2}"));
        }
        if v.len() != self.dim {
            return domain("point has the wrong dimension");
        }
        if v[0] <= 0.0 {
            return Ok(0.0);
        }
        // t = x^{1/rho} absorbs t^{rho-1}: dt t^{rho-1} = dx / rho
        let inv_rho = 1.0 / self.rho;
        let integrand = |x: f64| {
            let t = x.powf(inv_rho);
            let inner = match &self.kernel {
                Kernel::OneDim(f) => self.inner_1d(f, v[0], t),
                Kernel::Radial(g) => self.inner_nd(g, v, t),
            };
            inner * inv_rho
        };
        let opts = QuadOpts { abs_tol: self.opts.abs_tol, rel_tol: self.opts.rel_tol, max_evals: 400_000 };
        Ok(integrate(integrand, w1.powf(self.rho), w2.powf(self.rho), opts)?.value)
    }

    /// f(0, 1; v), the meander density at v.
    pub fn density(&self, v: &[f64]) -> Result<f64> {
        self.partial(0.0, 1.0, v)
    }

    /// int over [edges_i, edges_{i+1}) of f(0, 1; v) dv, for d = 1.
    pub fn binned_1d(&self, edges: &[f64]) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return domain("binned_1d needs a one-dimensional law");
        }
        let opts = QuadOpts { abs_tol: 1e-9, rel_tol: 1e-6, max_evals: 20_000 };
        edges
            .windows(2)
            .map(|w| {
                let r = integrate(|v| self.density(&[v]).unwrap_or(f64::NAN), w[0], w[1], opts)?;
                Ok(r.value)
            })
            .collect()
    }
}

/// f(0, 1; v) against `meander_law`.
pub fn predict_denf(ctx: &AsymptoticContext, v: &[f64], meander_law: &MeanderHistogram) -> Result<f64> {
    DenfEvaluator::new(ctx, meander_law, DenfOpts::default())?.density(v)
}

/// f(w1, w2; v) against `meander_law`.
pub fn denf_partial(
    ctx: &AsymptoticContext,
    w1: f64,
    w2: f64,
    v: &[f64],
    meander_law: &MeanderHistogram,
) -> Result<f64> {
    DenfEvaluator::new(ctx, meander_law, DenfOpts::default())?.partial(w1, w2, v)
}
