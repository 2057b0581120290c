use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// value(n) ~ n^index l(n): least-squares slope on log-log axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvFit {
    pub index: f64,
    pub intercept: f64,
    /// (n, value / n^index): the residual slowly varying factor
    pub sv_table: Vec<(f64, f64)>,
    pub residual_rms: f64,
    /// fitted index minus the guess, when a finite guess was given
    pub guess_gap: Option<f64>,
}

pub fn fit_slowly_varying(series: &[(f64, f64)], index_guess: f64) -> Result<SvFit> {
    if series.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 points, got {}", series.len())));
    }
    if series.iter().any(|&(n, v)| !(n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite())) {
        return Err(Error::Fit("points must be positive and finite".into()));
    }
    let lo = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = series.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 8.0 {
        return Err(Error::Fit(format!("points span {:.2} doublings, need 3", (hi / lo).log2())));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let index = sxy / sxx;
    let intercept = my - index * mx;
    let residual_rms = (pts.iter().map(|p| (p.1 - intercept - index * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(SvFit {
        index,
        intercept,
        sv_table: series.iter().map(|&(n, v)| (n, v / n.powf(index))).collect(),
        residual_rms,
        guess_gap: index_guess.is_finite().then(|| index - index_guess),
    })
}
