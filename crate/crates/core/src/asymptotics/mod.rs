//! Right-hand sides of the asymptotic statements: normal, small and large
//! deviation skeletons for p_n(x, y), the Green-function skeleton, and the
//! integral representation of the meander density.

mod denf;
mod fit;
mod predict;
mod smooth;

pub use denf::{denf_partial, predict_denf, DenfEvaluator, DenfOpts};
pub use fit::{fit_slowly_varying, SvFit};
pub use predict::{
    bound_large_dev, predict_green, predict_normal_dev, predict_small_dev, radial_green_integral, GreenPrediction,
    Prediction,
};
pub use smooth::SmoothedMeander;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::LadderData;
use crate::stable::{
    attracting_params_1d, attracting_scale_isotropic, isotropic_stable_density, stable_density_1d, stable_density_nd,
    Spectral, StableParams, TailProfile,
};
use crate::step::{ContinuousStep, ScalingSeq, StepDistribution};

/// Limit law of S(n)/c_n and the tail comparison function for a heavy-tailed step.
/// Lattice laws need a recorded tail; in d >= 2 the limit is taken isotropic.
pub fn limit_law(step: &StepDistribution) -> Result<(StableParams, TailProfile)> {
    match step {
        StepDistribution::Continuous(c) => {
            let tail = c.tail_profile();
            let params = match *c {
                ContinuousStep::IsotropicPareto { dim, alpha } if dim >= 2 => {
                    StableParams::isotropic(alpha, attracting_scale_isotropic(alpha, dim), dim)?
                }
                _ => attracting_params_1d(c.alpha(), c.beta())?,
            };
            Ok((params, tail))
        }
        StepDistribution::Lattice(s) => {
            let Some(tail) = s.tail.clone() else {
                return domain("lattice law has no recorded heavy tail");
            };
            let alpha = tail.phi.alpha();
            if s.dim() >= 2 {
                return Ok((StableParams::isotropic(alpha, attracting_scale_isotropic(alpha, s.dim()), s.dim())?, tail));
            }
            // tail balance from the mass beyond a quarter of the support
            let m = s.first_marginal();
            let t = (m.hi().max(-m.lo) / 4).max(1);
            let (mut up, mut down) = (0.0, 0.0);
            for (k, p) in m.iter() {
                if k > t {
                    up += p;
                } else if k < -t {
                    down += p;
                }
            }
            let beta = if up + down > 0.0 { (up - down) / (up + down) } else { 0.0 };
            let beta = if beta.abs() < 1e-12 { 0.0 } else { beta };
            Ok((attracting_params_1d(alpha, beta)?, tail))
        }
    }
}

/// Regularly varying stand-ins H(u) = kappa_h u^{index_h}, V(u) = kappa_v u^{index_v}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalSurrogate {
    pub kappa_h: f64,
    pub index_h: f64,
    pub kappa_v: f64,
    pub index_v: f64,
}

impl RenewalSurrogate {
    /// The exponents implied by the stable parameters: alpha rho and alpha (1 - rho).
    pub fn from_params(params: &StableParams, kappa_h: f64, kappa_v: f64) -> Self {
        let rho = params.rho();
        RenewalSurrogate { kappa_h, index_h: params.alpha * rho, kappa_v, index_v: params.alpha * (1.0 - rho) }
    }

    /// Log-log fit of the renewal tables on u in [u_min, level].
    pub fn fit(ladder: &LadderData, u_min: usize) -> Result<Self> {
        let level = ladder.level();
        let pts = |t: &[f64]| -> Vec<(f64, f64)> { (u_min.max(1)..=level).map(|u| (u as f64, t[u])).collect() };
        let h = fit_slowly_varying(&pts(&ladder.h_table), f64::NAN)?;
        let v = fit_slowly_varying(&pts(&ladder.v_table), f64::NAN)?;
        Ok(RenewalSurrogate { kappa_h: h.intercept.exp(), index_h: h.index, kappa_v: v.intercept.exp(), index_v: v.index })
    }
}

#[derive(Clone, Debug)]
pub enum RenewalSource {
    Tables(LadderData),
    Surrogate(RenewalSurrogate),
}

/// Everything the predictors need about one walk.
#[derive(Clone, Debug)]
pub struct AsymptoticContext {
    pub params: StableParams,
    pub scaling: ScalingSeq,
    pub renewal: RenewalSource,
    pub tail: TailProfile,
    /// selects the lattice form H(y_1) over the non-lattice int_{y_1}^{y_1+1} H
    pub lattice: bool,
}

impl AsymptoticContext {
    pub fn new(
        params: StableParams,
        scaling: ScalingSeq,
        renewal: RenewalSource,
        tail: TailProfile,
        lattice: bool,
    ) -> Result<Self> {
        if let RenewalSource::Surrogate(s) = &renewal {
            let rho = params.rho();
            let rho_h = s.index_h / params.alpha;
            let rho_v = 1.0 - s.index_v / params.alpha;
            if (rho_h - rho).abs() > 0.05 * rho || (rho_v - rho).abs() > 0.05 * rho {
                return domain(format!(
                    "renewal exponents imply rho = {rho_h:.4} / {rho_v:.4}, the limit law has rho = {rho:.4}"
                ));
            }
            if !(s.kappa_h > 0.0 && s.kappa_v > 0.0) {
                return domain("surrogate prefactors must be positive");
            }
        }
        Ok(AsymptoticContext { params, scaling, renewal, tail, lattice })
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn is_surrogate(&self) -> bool {
        matches!(self.renewal, RenewalSource::Surrogate(_))
    }

    pub fn h(&self, u: f64) -> f64 {
        match &self.renewal {
            RenewalSource::Tables(l) => l.h(u),
            RenewalSource::Surrogate(s) => {
                if u <= 0.0 {
                    0.0
                } else {
                    s.kappa_h * u.powf(s.index_h)
                }
            }
        }
    }

    pub fn v(&self, u: f64) -> f64 {
        match &self.renewal {
            RenewalSource::Tables(l) => l.v(u),
            // floored at u = 1 so that a boundary start keeps V(0) > 0
            RenewalSource::Surrogate(s) => {
                if u < 0.0 {
                    0.0
                } else {
                    s.kappa_v * u.max(1.0).powf(s.index_v)
                }
            }
        }
    }

    /// int_a^b H(u) du.
    pub fn h_integral(&self, a: f64, b: f64) -> f64 {
        match &self.renewal {
            RenewalSource::Tables(l) => l.h_integral(a, b),
            RenewalSource::Surrogate(s) => {
                let e = s.index_h + 1.0;
                s.kappa_h * (b.max(0.0).powf(e) - a.max(0.0).powf(e)) / e
            }
        }
    }

    /// Whether the renewal tables reach boundary distance u (always true for surrogates).
    pub fn covers(&self, u: f64) -> bool {
        match &self.renewal {
            RenewalSource::Tables(l) => l.covers(u),
            RenewalSource::Surrogate(_) => true,
        }
    }

    /// Density of the limit law of S(n)/c_n at z.
    pub fn stable_density(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return domain("point has the wrong dimension");
        }
        match (&self.params.spectral, self.dim()) {
            (_, 1) => stable_density_1d(z[0], &self.params),
            (Spectral::Isotropic, _) => isotropic_stable_density(z, &self.params),
            (Spectral::Atoms(_), _) => stable_density_nd(z, &self.params),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
