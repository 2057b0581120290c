use crate::error::{domain, Result};
use crate::mc::MeanderHistogram;

/// Kernel-smoothed meander density: each bin's mass is spread as a product
/// Gaussian centred on the bin with standard deviation `bandwidth` bin widths
/// per axis. The density is zero on {z_1 <= 0} and outside the window.
#[derive(Clone, Debug)]
pub struct SmoothedMeander {
    centers: Vec<Vec<f64>>,
    widths: Vec<Vec<f64>>,
    masses: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    bandwidth: f64,
}

impl SmoothedMeander {
    pub fn new(h: &MeanderHistogram, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return domain("bandwidth must be positive");
        }
        let b = &h.binning;
        let masses = h.masses();
        let mut centers = Vec::new();
        let mut widths = Vec::new();
        let mut kept = Vec::new();
        for (i, &m) in masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let (l, u) = (b.lower_corner(i), b.upper_corner(i));
            centers.push(l.iter().zip(&u).map(|(a, c)| 0.5 * (a + c)).collect());
            widths.push(l.iter().zip(&u).map(|(a, c)| c - a).collect());
            kept.push(m);
        }
        let lo = b.edges.iter().map(|e| e[0]).collect();
        let hi = b.edges.iter().map(|e| e[e.len() - 1]).collect();
        Ok(SmoothedMeander { centers, widths, masses: kept, lo, hi, bandwidth })
    }

    pub fn density(&self, z: &[f64]) -> Option<f64> {
        if z.len() != self.lo.len() {
            return None;
        }
        if z[0] <= 0.0 || z.iter().zip(self.lo.iter().zip(&self.hi)).any(|(v, (a, b))| v < a || v >= b) {
            return Some(0.0);
        }
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = 0.0;
        for ((c, w), m) in self.centers.iter().zip(&self.widths).zip(&self.masses) {
            let mut k = *m;
            for ((zi, ci), wi) in z.iter().zip(c).zip(w) {
                let s = self.bandwidth * wi;
                let t = (zi - ci) / s;
                if t.abs() > 8.0 {
                    k = 0.0;
                    break;
                }
                k *= (-0.5 * t * t).exp() / (norm * s);
            }
            acc += k;
        }
        Some(acc)
    }
}
