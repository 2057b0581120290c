use rustfft::num_complex::Complex64;

/// Coefficients e_0..e_N of exp(sum_{n>=1} a_n s^n), with `a[0]` ignored.
///
/// Uses the recurrence n e_n = sum_{k=1}^n k a_k e_{n-k}, which follows from
/// differentiating E = exp(A): E' = A' E.
pub fn exp_series(a: &[Complex64]) -> Vec<Complex64> {
    let n_max = a.len().saturating_sub(1);
    let mut e = vec![Complex64::new(0.0, 0.0); n_max + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            acc += a[k] * e[n - k] * (k as f64);
        }
        e[n] = acc / (n as f64);
    }
    e
}
