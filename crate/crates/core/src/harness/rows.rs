use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Normal,
    Small,
    Large,
    /// no gate applies (Green rows, survival rows)
    None,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Normal => "normal",
            Regime::Small => "small",
            Regime::Large => "large",
            Regime::None => "none",
        }
    }
}

/// Gates on boundary distances and displacement, in units of c_n.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeGates {
    pub delta_scale: f64,
    pub a: f64,
}

impl RegimeGates {
    /// delta_n = delta_scale / ln n (taken as delta_scale for n < 3).
    pub fn delta(&self, n: usize) -> f64 {
        if n < 3 {
            self.delta_scale
        } else {
            self.delta_scale / (n as f64).ln()
        }
    }

    /// Large if |x - y| >= A c_n; small if also x_1, y_1 <= delta_n c_n; normal otherwise.
    pub fn classify(&self, x: &[f64], y: &[f64], n: usize, c_n: f64) -> Regime {
        let dist = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist >= self.a * c_n {
            Regime::Large
        } else if x[0].max(y[0]) <= self.delta(n) * c_n {
            Regime::Small
        } else {
            Regime::Normal
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// "p_n", "survival", "green" or "meander"
    pub quantity: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: Option<usize>,
    pub measured: f64,
    /// None for exact values
    pub stderr: Option<f64>,
    pub exact: bool,
    pub predicted: Option<f64>,
    pub ratio: Option<f64>,
    pub regime: Regime,
    /// the prediction used fitted renewal surrogates
    pub surrogate: bool,
}

impl ComparisonRow {
    pub fn new(quantity: &str, x: &[f64], y: &[f64], n: Option<usize>, measured: f64, stderr: Option<f64>) -> Self {
        ComparisonRow {
            quantity: quantity.into(),
            x: x.to_vec(),
            y: y.to_vec(),
            n,
            measured,
            stderr,
            exact: stderr.is_none(),
            predicted: None,
            ratio: None,
            regime: Regime::None,
            surrogate: false,
        }
    }

    /// Sets the prediction and the ratio measured / predicted (None unless predicted > 0).
    pub fn with_prediction(mut self, predicted: f64, regime: Regime, surrogate: bool) -> Self {
        self.predicted = Some(predicted);
        self.ratio = (predicted > 0.0).then(|| self.measured / predicted);
        self.regime = regime;
        self.surrogate = surrogate;
        self
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
}

pub const CSV_HEADER: [&str; 11] =
    ["quantity", "x", "y", "n", "measured", "stderr", "exact", "predicted", "ratio", "regime", "surrogate"];

/// Writes rows with a fixed column order; points are `;`-separated, floats have 17 significant digits.
pub fn write_rows<W: Write>(w: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.quantity.clone(),
            fmt_point(&r.x),
            fmt_point(&r.y),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            fmt_f(r.measured),
            r.stderr.map(fmt_f).unwrap_or_default(),
            r.exact.to_string(),
            r.predicted.map(fmt_f).unwrap_or_default(),
            r.ratio.map(fmt_f).unwrap_or_default(),
            r.regime.as_str().into(),
            r.surrogate.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Max,
    Median,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub value: f64,
    /// interquartile range of the ratios over their median
    pub dispersion: f64,
    pub unstable: bool,
    pub rows: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let t = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - t) + sorted[i + 1] * t
    } else {
        sorted[i]
    }
}

/// Max or median of the measured / predicted ratios in `rows`.
pub fn fit_constant(rows: &[ComparisonRow], statistic: Statistic) -> Result<ConstantFit> {
    let mut r: Vec<f64> = rows.iter().filter_map(|r| r.ratio).filter(|v| v.is_finite()).collect();
    if r.is_empty() {
        return Err(Error::Fit("no rows with a ratio in this regime".into()));
    }
    if r.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 rows, got {}", r.len())));
    }
    r.sort_by(|a, b| a.total_cmp(b));
    let med = quantile(&r, 0.5);
    let iqr = quantile(&r, 0.75) - quantile(&r, 0.25);
    let dispersion = if med > 0.0 { iqr / med } else { f64::INFINITY };
    let value = match statistic {
        Statistic::Max => r[r.len() - 1],
        Statistic::Median => med,
    };
    Ok(ConstantFit { value, dispersion, unstable: dispersion > 0.5, rows: r.len() })
}
