//! Stable-law primitives: parameters, positivity, characteristic functions
//! and densities recovered by Fourier inversion.

mod density;
mod multi;
mod tail;

pub use density::{stable_cdf_1d, stable_density_1d, CdfTable};
pub use multi::{isotropic_stable_density, stable_density_nd};
pub use tail::{Phi, TailProfile};

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::gamma;

/// Spectral measure on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectral {
    Isotropic,
    /// (unit vector, weight) atoms
    Atoms(Vec<(Vec<f64>, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub scale_c: f64,
    pub dim: usize,
    pub spectral: Spectral,
}

/// Membership in the admissible (alpha, beta) set.
pub fn check_admissible(alpha: f64, beta: f64) -> Result<()> {
    let ok = if !(alpha > 0.0 && alpha <= 2.0) || !(-1.0..=1.0).contains(&beta) {
        false
    } else if alpha < 1.0 {
        beta.abs() < 1.0
    } else if alpha == 1.0 || alpha == 2.0 {
        beta == 0.0
    } else {
        true
    };
    if ok {
        Ok(())
    } else {
        domain(format!("(alpha, beta) = ({alpha}, {beta}) is not admissible"))
    }
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, scale_c: f64, dim: usize, spectral: Spectral) -> Result<Self> {
        check_admissible(alpha, beta)?;
        if !(scale_c > 0.0 && scale_c.is_finite()) {
            return domain(format!("scale must be positive, got {scale_c}"));
        }
        if dim == 0 {
            return domain("dimension must be at least 1");
        }
        if let Spectral::Atoms(atoms) = &spectral {
            validate_atoms(atoms, dim)?;
        }
        Ok(StableParams { alpha, beta, scale_c, dim, spectral })
    }

    pub fn one_dim(alpha: f64, beta: f64, scale_c: f64) -> Result<Self> {
        Self::new(alpha, beta, scale_c, 1, Spectral::Isotropic)
    }

    pub fn isotropic(alpha: f64, scale_c: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, 0.0, scale_c, dim, Spectral::Isotropic)
    }

    pub fn rho(&self) -> f64 {
        positivity_rho(self.alpha, self.beta).expect("validated at construction")
    }
}

fn validate_atoms(atoms: &[(Vec<f64>, f64)], dim: usize) -> Result<()> {
    if atoms.is_empty() {
        return domain("spectral measure has no atoms");
    }
    let mut total = 0.0;
    let (mut up, mut down) = (0.0, 0.0);
    for (v, w) in atoms {
        if v.len() != dim {
            return domain(format!("atom {v:?} does not have dimension {dim}"));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return domain(format!("atom {v:?} is not a unit vector"));
        }
        if *w < 0.0 {
            return domain("negative spectral weight");
        }
        total += w;
        if v[0] > 0.0 {
            up += w;
        } else if v[0] < 0.0 {
            down += w;
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return domain(format!("spectral weights sum to {total}, not 1"));
    }
    if up <= 0.0 || down <= 0.0 {
        return domain("spectral measure must charge both open half spheres");
    }
    Ok(())
}

/// rho = lim P(S_1(n) > 0) for a walk attracted to the (alpha, beta) law.
pub fn positivity_rho(alpha: f64, beta: f64) -> Result<f64> {
    check_admissible(alpha, beta)?;
    if alpha == 1.0 || beta == 0.0 || alpha == 2.0 {
        return Ok(0.5);
    }
    Ok(0.5 + (beta * (PI * alpha / 2.0).tan()).atan() / (PI * alpha))
}

/// exp{-c|t|^a (1 - i b sgn(t) tan(pi a / 2))}.
pub fn stable_cf_1d(t: f64, params: &StableParams) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let a = params.alpha;
    let skew = if a == 1.0 || a == 2.0 { 0.0 } else { params.beta * (PI * a / 2.0).tan() };
    let mag = params.scale_c * t.abs().powf(a);
    let z = Complex64::new(-mag, mag * skew * t.signum());
    z.exp()
}

/// E|u_1|^a for u uniform on the unit sphere in R^d.
pub fn abs_moment_first_coord(alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    gamma(d / 2.0) * gamma((alpha + 1.0) / 2.0) / (PI.sqrt() * gamma((d + alpha) / 2.0))
}

fn tail_to_scale(alpha: f64) -> f64 {
    if alpha == 1.0 {
        PI / 2.0
    } else {
        gamma(1.0 - alpha) * (PI * alpha / 2.0).cos()
    }
}

/// Scale of the limit law of S(n)/c_n when |X| has regularly varying tail of
/// index -alpha and uniformly distributed direction.
pub fn attracting_scale_isotropic(alpha: f64, d: usize) -> f64 {
    (2.0 - alpha) / alpha * tail_to_scale(alpha) * abs_moment_first_coord(alpha, d)
}

/// Limit law of S(n)/c_n in one dimension for tail balance
/// beta = lim (P(X > t) - P(X < -t)) / P(|X| > t).
pub fn attracting_params_1d(alpha: f64, beta: f64) -> Result<StableParams> {
    if !(0.0 < alpha && alpha < 2.0) {
        return domain("attracting law requires 0 < alpha < 2");
    }
    StableParams::one_dim(alpha, beta, (2.0 - alpha) / alpha * tail_to_scale(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_examples() {
        assert_eq!(positivity_rho(1.0, 0.0).unwrap(), 0.5);
        assert_eq!(positivity_rho(2.0, 0.0).unwrap(), 0.5);
        assert!((positivity_rho(1.5, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(positivity_rho(1.0, 0.5).is_err());
        assert!(positivity_rho(0.5, 1.0).is_err());
        assert!(positivity_rho(2.5, 0.0).is_err());
    }

    #[test]
    fn cf_examples() {
        let cauchy = StableParams::one_dim(1.0, 0.0, 1.0).unwrap();
        assert_eq!(stable_cf_1d(0.0, &cauchy), Complex64::new(1.0, 0.0));
        assert!((stable_cf_1d(2.0, &cauchy).re - (-2.0f64).exp()).abs() < 1e-16);
        let gauss = StableParams::one_dim(2.0, 0.0, 1.0).unwrap();
        assert!((stable_cf_1d(1.0, &gauss) - Complex64::new((-1.0f64).exp(), 0.0)).norm() < 1e-16);
        let skew = StableParams::one_dim(1.5, 0.7, 0.8).unwrap();
        assert!(stable_cf_1d(-0.9, &skew).norm() <= 1.0);
        assert!((stable_cf_1d(-0.9, &skew) - stable_cf_1d(0.9, &skew).conj()).norm() < 1e-15);
    }

    #[test]
    fn attracting_scale_pareto() {
        let c = attracting_params_1d(1.2, 0.0).unwrap().scale_c;
        assert!((c - 1.19922).abs() < 1e-4, "{c}");
        assert!((abs_moment_first_coord(1.3, 1) - 1.0).abs() < 1e-14);
        // E|u_1| on the circle is 2/pi
        assert!((abs_moment_first_coord(1.0, 2) - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn atoms_validated() {
        let ok = Spectral::Atoms(vec![(vec![1.0, 0.0], 0.5), (vec![-1.0, 0.0], 0.5)]);
        assert!(StableParams::new(1.5, 0.0, 1.0, 2, ok).is_ok());
        let one_sided = Spectral::Atoms(vec![(vec![1.0, 0.0], 0.5), (vec![0.0, 1.0], 0.5)]);
        assert!(StableParams::new(1.5, 0.0, 1.0, 2, one_sided).is_err());
        let bad_sum = Spectral::Atoms(vec![(vec![1.0, 0.0], 0.5), (vec![-1.0, 0.0], 0.6)]);
        assert!(StableParams::new(1.5, 0.0, 1.0, 2, bad_sum).is_err());
    }
}
