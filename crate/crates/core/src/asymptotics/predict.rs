use serde::{Deserialize, Serialize};

use super::{norm, AsymptoticContext};
use crate::error::{domain, Error, Result};
use crate::numerics::{integrate, integrate_to_inf, QuadOpts};

/// A predictor value; `surrogate` marks use of fitted renewal functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub surrogate: bool,
}

fn check_pair(ctx: &AsymptoticContext, x: &[f64], y: &[f64]) -> Result<()> {
    let d = ctx.dim();
    if x.len() != d || y.len() != d {
        return domain("points must match the dimension of the limit law");
    }
    if !(x[0] >= 0.0 && y[0] > 0.0) {
        return domain("points must lie in the half space");
    }
    Ok(())
}

/// P(tau_x > n) c_n^{-d} p_M((y - x) / c_n). `survival` is P(tau_x > n) from
/// exact or Monte Carlo tables; `density` returns None where p_M is unknown.
pub fn predict_normal_dev(
    ctx: &AsymptoticContext,
    x: &[f64],
    y: &[f64],
    n: usize,
    survival: f64,
    density: &dyn Fn(&[f64]) -> Option<f64>,
) -> Result<Prediction> {
    check_pair(ctx, x, y)?;
    if n == 0 || !(0.0..=1.0).contains(&survival) {
        return domain("need n >= 1 and a survival probability in [0, 1]");
    }
    let c = ctx.scaling.c(n);
    let z: Vec<f64> = y.iter().zip(x).map(|(a, b)| (a - b) / c).collect();
    let p = density(&z).ok_or_else(|| Error::Domain(format!("meander density unavailable at {z:?}")))?;
    Ok(Prediction { value: survival * p.max(0.0) / c.powi(ctx.dim() as i32), surrogate: false })
}

/// V(x_1) H(y_1) g(0, (y_{2,d} - x_{2,d}) / c_n) / (n c_n^d); on non-lattice
/// walks H(y_1) is replaced by int_{y_1}^{y_1+1} H(u) du.
pub fn predict_small_dev(ctx: &AsymptoticContext, x: &[f64], y: &[f64], n: usize) -> Result<Prediction> {
    check_pair(ctx, x, y)?;
    if n == 0 {
        return domain("need n >= 1");
    }
    let d = ctx.dim();
    let c = ctx.scaling.c(n);
    let mut z = vec![0.0; d];
    for i in 1..d {
        z[i] = (y[i] - x[i]) / c;
    }
    let g = ctx.stable_density(&z)?;
    let hy = if ctx.lattice { ctx.h(y[0]) } else { ctx.h_integral(y[0], y[0] + 1.0) };
    Ok(Prediction { value: ctx.v(x[0]) * hy * g / (n as f64 * c.powi(d as i32)), surrogate: ctx.is_surrogate() })
}

/// g(|x - y|) H(y_1 + 1) V(x_1 + 1): the large-deviation bound without its constant.
pub fn bound_large_dev(ctx: &AsymptoticContext, x: &[f64], y: &[f64]) -> Result<Prediction> {
    check_pair(ctx, x, y)?;
    let r: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let r = norm(&r);
    if r == 0.0 {
        return domain("the bound needs x != y");
    }
    let value = ctx.tail.kernel(r, ctx.dim()) * ctx.h(y[0] + 1.0) * ctx.v(x[0] + 1.0);
    Ok(Prediction { value, surrogate: ctx.is_surrogate() })
}

/// int_0^inf g(0, w t) t^{d-1} dt for a transverse vector w (length d - 1).
pub fn radial_green_integral(ctx: &AsymptoticContext, w: &[f64]) -> Result<f64> {
    let d = ctx.dim();
    if d < 2 {
        return Err(Error::Divergent("the radial integral diverges in dimension 1".into()));
    }
    if w.len() != d - 1 {
        return domain(format!("transverse vector must have {} coordinates", d - 1));
    }
    let r = norm(w);
    if r == 0.0 {
        return Err(Error::Divergent("the radial integral diverges at w = 0".into()));
    }
    let f = |t: f64| {
        let mut z = vec![0.0; d];
        z[1..].iter_mut().zip(w).for_each(|(a, b)| *a = b * t);
        ctx.stable_density(&z).unwrap_or(f64::NAN) * t.powi(d as i32 - 1)
    };
    let opts = QuadOpts::new(1e-14, 1e-11);
    let knee = 1.0 / r;
    let head = integrate(f, 0.0, knee, opts)?.value + integrate(f, knee, 8.0 * knee, opts)?.value;
    let tail = integrate_to_inf(f, 8.0 * knee, opts)?.value;
    let v = head + tail;
    if !v.is_finite() {
        return Err(Error::Divergent("stable density evaluation failed".into()));
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenPrediction {
    pub value: f64,
    pub surrogate: bool,
    /// false when x_1 or y_1 exceeds `REGIME_FRACTION` |x - y|
    pub in_regime: bool,
}

/// Boundary distances above this fraction of |x - y| are flagged.
pub const REGIME_FRACTION: f64 = 0.2;

/// H(y_1) V(x_1) |x - y|^{-d} times the radial integral at w = (y_{2,d} - x_{2,d}) / |x - y|.
pub fn predict_green(ctx: &AsymptoticContext, x: &[f64], y: &[f64]) -> Result<GreenPrediction> {
    check_pair(ctx, x, y)?;
    let d = ctx.dim();
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let r = norm(&diff);
    if r == 0.0 {
        return domain("the Green skeleton needs x != y");
    }
    let w: Vec<f64> = diff[1..].iter().map(|v| v / r).collect();
    let radial = radial_green_integral(ctx, &w)?;
    let hy = if ctx.lattice { ctx.h(y[0]) } else { ctx.h_integral(y[0], y[0] + 1.0) };
    Ok(GreenPrediction {
        value: hy * ctx.v(x[0]) * radial / r.powi(d as i32),
        surrogate: ctx.is_surrogate(),
        in_regime: x[0].max(y[0]) <= REGIME_FRACTION * r,
    })
}
