//! Local barycentric interpolation on uniform grids and Chebyshev interpolants.

use std::f64::consts::PI;

/// Barycentric Lagrange interpolation through `order + 1` consecutive samples
/// of a uniform grid (x0, h), centred on x as far as the data allow.
pub fn uniform_local(values: &[f64], x0: f64, h: f64, x: f64, order: usize) -> f64 {
    let n = values.len();
    let m = order.min(n - 1);
    let pos = (x - x0) / h;
    let start = (pos.floor() as isize - (m as isize) / 2).clamp(0, (n - 1 - m) as isize) as usize;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut w = 1.0f64;
    // binomial weights (-1)^j C(m, j)
    for j in 0..=m {
        if j > 0 {
            w *= -((m - j + 1) as f64) / j as f64;
        }
        let d = pos - (start + j) as f64;
        if d == 0.0 {
            return values[start + j];
        }
        let t = w / d;
        num += t * values[start + j];
        den += t;
    }
    num / den
}

/// Polynomial interpolant at Chebyshev-Lobatto points on [a, b].
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Chebyshev {
    pub fn nodes(a: f64, b: f64, m: usize) -> Vec<f64> {
        (0..=m)
            .map(|j| 0.5 * (a + b) - 0.5 * (b - a) * (PI * j as f64 / m as f64).cos())
            .collect()
    }

    pub fn new(a: f64, b: f64, y: Vec<f64>) -> Self {
        let m = y.len() - 1;
        Chebyshev { a, b, x: Self::nodes(a, b, m), y }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.y.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=m {
            let d = x - self.x[j];
            if d == 0.0 {
                return self.y[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m {
                w *= 0.5;
            }
            let t = w / d;
            num += t * self.y[j];
            den += t;
        }
        num / den
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_interp_is_accurate_for_smooth_data() {
        let h = 0.05;
        let v: Vec<f64> = (0..200).map(|i| (i as f64 * h).sin()).collect();
        for &x in &[0.013, 3.3337, 9.9] {
            assert!((uniform_local(&v, 0.0, h, x, 9) - x.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn chebyshev_reproduces_polynomials() {
        let xs = Chebyshev::nodes(-1.0, 2.0, 6);
        let y = xs.iter().map(|x| x * x * x - x).collect();
        let c = Chebyshev::new(-1.0, 2.0, y);
        assert!((c.eval(0.77) - (0.77f64.powi(3) - 0.77)).abs() < 1e-13);
    }
}
