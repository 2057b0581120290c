use rand::{Rng, RngCore};
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::step::{ContinuousStep, StepDistribution};

#[derive(Clone, Debug)]
enum Kind {
    SymmetricPareto,
    SkewedPareto { p_plus: f64 },
    ParetoLog,
    Isotropic,
    Lattice { points: Vec<f64>, alias: WeightedAliasIndex<f64> },
}

/// Draws increments of a `StepDistribution`. Parametric families use the
/// exact inverse of their tail function; lattice laws use an alias table.
#[derive(Clone, Debug)]
pub struct HeavyStepSampler {
    kind: Kind,
    dim: usize,
    alpha: f64,
    centering: f64,
}

/// Uniform on (0, 1) from the top 53 bits; never 0, so U^{-1/alpha} is finite.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Solves alpha y - ln(1 + y) = e for y >= 0 (e > 0). The left side is
/// convex and increasing, so Newton from the right of the root is monotone.
fn pareto_log_quantile(alpha: f64, e: f64) -> f64 {
    let mut y = 2.0 * (e + 1.0) / alpha;
    for _ in 0..200 {
        let f = alpha * y - (1.0 + y).ln() - e;
        let df = alpha - 1.0 / (1.0 + y);
        let dy = f / df;
        y -= dy;
        if dy.abs() <= 1e-15 * (1.0 + y) {
            break;
        }
    }
    y.max(0.0)
}

impl HeavyStepSampler {
    pub fn new(step: &StepDistribution) -> Result<Self> {
        Ok(match step {
            StepDistribution::Lattice(s) => {
                let alias = WeightedAliasIndex::new(s.probs().to_vec())
                    .map_err(|e| crate::Error::Domain(format!("alias table: {e}")))?;
                let points = s.iter().flat_map(|(p, _)| p.iter().map(|&v| v as f64)).collect();
                let alpha = s.tail.as_ref().map(|t| t.phi.alpha()).unwrap_or(2.0);
                HeavyStepSampler { kind: Kind::Lattice { points, alias }, dim: s.dim(), alpha, centering: 0.0 }
            }
            StepDistribution::Continuous(c) => {
                c.validate()?;
                let kind = match *c {
                    ContinuousStep::SymmetricPareto { .. } => Kind::SymmetricPareto,
                    ContinuousStep::SkewedPareto { p_plus, .. } => Kind::SkewedPareto { p_plus },
                    ContinuousStep::ParetoLog { .. } => Kind::ParetoLog,
                    ContinuousStep::IsotropicPareto { dim: 1, .. } => Kind::SymmetricPareto,
                    ContinuousStep::IsotropicPareto { .. } => Kind::Isotropic,
                };
                HeavyStepSampler { kind, dim: c.dim(), alpha: c.alpha(), centering: c.centering() }
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Tail index; 2 for lattice laws without a recorded tail.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Constant subtracted from the first coordinate of every draw.
    pub fn centering(&self) -> f64 {
        self.centering
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self.kind, Kind::Lattice { .. })
    }

    /// One increment into `out` (length `dim`).
    #[inline]
    pub fn sample<R: RngCore>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            Kind::Lattice { points, alias } => {
                let i = rng.sample(alias);
                out.copy_from_slice(&points[i * self.dim..(i + 1) * self.dim]);
            }
            Kind::Isotropic => {
                let r = open_unit(rng.next_u64()).powf(-1.0 / self.alpha);
                let mut norm2 = 0.0;
                loop {
                    for v in out.iter_mut() {
                        *v = rng.sample(StandardNormal);
                        norm2 += *v * *v;
                    }
                    if norm2 > 1e-300 {
                        break;
                    }
                    norm2 = 0.0;
                }
                let k = r / norm2.sqrt();
                out.iter_mut().for_each(|v| *v *= k);
            }
            _ => out[0] = self.sample_1d(rng),
        }
    }

    /// One increment of a one-dimensional law.
    #[inline]
    pub fn sample_1d<R: RngCore>(&self, rng: &mut R) -> f64 {
        let bits = rng.next_u64();
        let sign = if bits & 1 == 1 { 1.0 } else { -1.0 };
        let u = open_unit(bits);
        match &self.kind {
            Kind::SymmetricPareto => sign * u.powf(-1.0 / self.alpha),
            Kind::SkewedPareto { p_plus } => {
                let s = if open_unit(rng.next_u64()) < *p_plus { 1.0 } else { -1.0 };
                s * u.powf(-1.0 / self.alpha) - self.centering
            }
            Kind::ParetoLog => sign * pareto_log_quantile(self.alpha, -u.ln()).exp(),
            Kind::Lattice { points, alias } => points[rng.sample(alias) * self.dim],
            Kind::Isotropic => {
                let mut z = vec![0.0; self.dim];
                self.sample(rng, &mut z);
                z[0]
            }
        }
    }
}

/// Validates a start point against the sampler dimension and the half space.
pub(crate) fn check_point(x: &[f64], s: &HeavyStepSampler, min_first: f64) -> Result<()> {
    if x.len() != s.dim() {
        return domain(format!("point {x:?} does not have dimension {}", s.dim()));
    }
    if !(x[0] >= min_first) || x.iter().any(|v| !v.is_finite()) {
        return domain(format!("point {x:?} is not in the half space"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::path_rng;
    use crate::step::LatticeStep;

    fn tail_fraction(s: &HeavyStepSampler, t: f64, n: usize) -> f64 {
        let mut rng = path_rng(3, 0);
        let mut z = vec![0.0; s.dim()];
        let mut hits = 0;
        for _ in 0..n {
            s.sample(&mut rng, &mut z);
            let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > t {
                hits += 1;
            }
        }
        hits as f64 / n as f64
    }

    #[test]
    fn pareto_log_quantile_inverts_tail() {
        for &a in &[1.0, 1.2, 1.9] {
            for &e in &[1e-6, 0.3, 5.0, 40.0] {
                let y = pareto_log_quantile(a, e);
                assert!((a * y - (1.0 + y).ln() - e).abs() < 1e-12 * (1.0 + e), "{a} {e}");
            }
        }
    }

    #[test]
    fn symmetric_pareto_tail() {
        let s = HeavyStepSampler::new(&StepDistribution::Continuous(ContinuousStep::SymmetricPareto { alpha: 1.2 }))
            .unwrap();
        let f = tail_fraction(&s, 10.0, 200_000);
        let expect = 10f64.powf(-1.2);
        assert!((f - expect).abs() < 4.0 * (expect / 200_000.0).sqrt());
    }

    #[test]
    fn isotropic_radius_and_direction() {
        let s = HeavyStepSampler::new(&StepDistribution::Continuous(ContinuousStep::IsotropicPareto {
            dim: 3,
            alpha: 1.5,
        }))
        .unwrap();
        let mut rng = path_rng(1, 0);
        let mut z = [0.0; 3];
        let mut pos = 0;
        let n = 100_000;
        for _ in 0..n {
            s.sample(&mut rng, &mut z);
            let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r >= 1.0 - 1e-12);
            if z[2] > 0.0 {
                pos += 1;
            }
        }
        assert!((pos as f64 / n as f64 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn lattice_passthrough_frequencies() {
        let step = LatticeStep::new(1, vec![vec![-1], vec![0], vec![2]], vec![0.4, 0.4, 0.2]).unwrap();
        let s = HeavyStepSampler::new(&StepDistribution::Lattice(step)).unwrap();
        let mut rng = path_rng(5, 2);
        let n = 100_000;
        let twos = (0..n).filter(|_| s.sample_1d(&mut rng) == 2.0).count();
        assert!((twos as f64 / n as f64 - 0.2).abs() < 4.0 * (0.16 / n as f64).sqrt());
    }
}
