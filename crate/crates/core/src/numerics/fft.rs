//! Circular convolution of real arrays (up to three axes) against a fixed kernel.
//!
//! The last axis is contiguous and goes through a real-to-complex transform;
//! earlier axes use complex transforms on gathered lines.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest n' >= n of the form 2^a 3^b 5^c.
pub fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub struct ConvPlan {
    shape: Vec<usize>,
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    axes: Vec<Arc<dyn Fft<f64>>>,
    axes_inv: Vec<Arc<dyn Fft<f64>>>,
    kernel_hat: Vec<Complex64>,
}

impl ConvPlan {
    /// `kernel` maps an integer offset to its weight; offsets are wrapped modulo `shape`.
    pub fn new(shape: &[usize], kernel: &[(Vec<i64>, f64)]) -> Self {
        assert!(!shape.is_empty() && shape.len() <= 3);
        let d = shape.len();
        let last = shape[d - 1];
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let r2c = rp.plan_fft_forward(last);
        let c2r = rp.plan_fft_inverse(last);
        let axes = shape[..d - 1].iter().map(|&n| cp.plan_fft_forward(n)).collect();
        let axes_inv = shape[..d - 1].iter().map(|&n| cp.plan_fft_inverse(n)).collect();
        let mut plan = ConvPlan {
            shape: shape.to_vec(),
            half: last / 2 + 1,
            r2c,
            c2r,
            axes,
            axes_inv,
            kernel_hat: Vec::new(),
        };
        let mut dense = vec![0.0; plan.len()];
        for (z, w) in kernel {
            let mut idx = 0usize;
            for (k, &zk) in z.iter().enumerate() {
                let n = shape[k] as i64;
                idx = idx * shape[k] + zk.rem_euclid(n) as usize;
            }
            dense[idx] += *w;
        }
        plan.kernel_hat = plan.forward(&mut dense);
        plan
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn forward(&self, data: &mut [f64]) -> Vec<Complex64> {
        let last = *self.shape.last().unwrap();
        let rows = data.len() / last;
        let mut spec = vec![Complex64::new(0.0, 0.0); rows * self.half];
        for (r, row) in data.chunks_mut(last).enumerate() {
            self.r2c
                .process(row, &mut spec[r * self.half..(r + 1) * self.half])
                .expect("r2c lengths match");
        }
        self.transform_axes(&mut spec, false);
        spec
    }

    fn transform_axes(&self, spec: &mut [Complex64], inverse: bool) {
        let d = self.shape.len();
        // spectrum shape is shape[..d-1] x half
        let mut sshape = self.shape.clone();
        sshape[d - 1] = self.half;
        for ax in 0..d - 1 {
            let n = sshape[ax];
            let stride: usize = sshape[ax + 1..].iter().product();
            let outer: usize = sshape[..ax].iter().product();
            let fft = if inverse { &self.axes_inv[ax] } else { &self.axes[ax] };
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for o in 0..outer {
                let base = o * n * stride;
                for s in 0..stride {
                    for i in 0..n {
                        line[i] = spec[base + i * stride + s];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for i in 0..n {
                        spec[base + i * stride + s] = line[i];
                    }
                }
            }
        }
    }

    /// Circular convolution of `data` (row-major, `shape`) with the kernel, in place.
    pub fn convolve(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.len());
        let mut spec = self.forward(data);
        for (s, k) in spec.iter_mut().zip(&self.kernel_hat) {
            *s *= k;
        }
        self.transform_axes(&mut spec, true);
        let last = *self.shape.last().unwrap();
        let norm = 1.0 / self.len() as f64;
        for (r, row) in data.chunks_mut(last).enumerate() {
            let sp = &mut spec[r * self.half..(r + 1) * self.half];
            // the inverse real transform requires real DC and Nyquist bins
            sp[0].im = 0.0;
            if last % 2 == 0 {
                sp[self.half - 1].im = 0.0;
            }
            self.c2r.process(sp, row).expect("c2r lengths match");
            for v in row.iter_mut() {
                *v *= norm;
            }
        }
    }
}
