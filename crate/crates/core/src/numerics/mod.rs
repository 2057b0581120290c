pub mod fft;
pub mod quad;
pub mod series;

pub use fft::{good_size, ConvPlan};
pub use quad::{integrate, integrate_points, integrate_to_inf, QuadOpts, QuadResult};
pub use series::exp_series;

/// Gamma function on the reals.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Riemann zeta for s > 1 (Euler-Maclaurin with 24 direct terms).
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0);
    let n = 24.0f64;
    let mut sum = 0.0;
    for k in 1..24 {
        sum += (k as f64).powf(-s);
    }
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Bernoulli corrections B2k/(2k)! s(s+1)...(s+2k-2) n^{-s-2k+1}
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    let mut rising = s;
    let mut fact = 2.0;
    for (k, bk) in b.iter().enumerate() {
        let p = 2 * k as i32 + 1;
        sum += bk / fact * rising * n.powf(-s - p as f64);
        rising *= (s + p as f64) * (s + p as f64 + 1.0);
        fact *= ((2 * k + 3) * (2 * k + 4)) as f64;
    }
    sum
}
