//! Orthonormal real Fourier basis on a periodic grid and FFT multipliers.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Rows of an orthogonal n x n matrix: constant, (cos k, sin k) pairs, and the
/// alternating Nyquist row when n is even.
#[derive(Debug, Clone)]
pub struct RealFourier {
    pub n: usize,
    basis: Vec<f64>,
    freq: Vec<usize>,
}

impl RealFourier {
    pub fn new(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n * n);
        let mut freq = Vec::with_capacity(n);
        let nf = n as f64;
        basis.extend(std::iter::repeat(1.0 / nf.sqrt()).take(n));
        freq.push(0);
        let s = (2.0 / nf).sqrt();
        for k in 1..(n + 1) / 2 {
            for trig in [f64::cos, f64::sin] {
                basis.extend((0..n).map(|j| s * trig(2.0 * PI * (k * j) as f64 / nf)));
                freq.push(k);
            }
        }
        if n % 2 == 0 && n > 1 {
            basis.extend((0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / nf.sqrt()));
            freq.push(n / 2);
        }
        RealFourier { n, basis, freq }
    }

    /// Integer frequency of coefficient r.
    pub fn freq(&self, r: usize) -> usize {
        self.freq[r]
    }

    pub fn forward(&self, x: &[f64], b: &mut [f64]) {
        for r in 0..self.n {
            let row = &self.basis[r * self.n..(r + 1) * self.n];
            b[r] = row.iter().zip(x).map(|(p, q)| p * q).sum();
        }
    }

    pub fn inverse(&self, b: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n {
            let row = &self.basis[r * self.n..(r + 1) * self.n];
            for (v, p) in x.iter_mut().zip(row) {
                *v += b[r] * p;
            }
        }
    }

    /// Field value at node j from coefficients.
    pub fn eval(&self, b: &[f64], j: usize) -> f64 {
        (0..self.n).map(|r| b[r] * self.basis[r * self.n + j]).sum()
    }
}

/// Multiply a real field along one axis by a real even Fourier multiplier m(k),
/// k the signed integer frequency. `shape` is row-major (last axis fastest).
pub fn axis_multiplier(data: &mut [f64], shape: &[usize], axis: usize, m: impl Fn(i64) -> f64) {
    let n = shape[axis];
    if n == 1 {
        let v = m(0);
        data.iter_mut().for_each(|x| *x *= v);
        return;
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mult: Vec<f64> = (0..n)
        .map(|q| {
            let k = if q <= n / 2 { q as i64 } else { q as i64 - n as i64 };
            m(k) / n as f64
        })
        .collect();
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(data[base + j * stride], 0.0);
            }
            fwd.process(&mut buf);
            for (b, &w) in buf.iter_mut().zip(&mult) {
                *b *= w;
            }
            inv.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                data[base + j * stride] = b.re;
            }
        }
    }
}
