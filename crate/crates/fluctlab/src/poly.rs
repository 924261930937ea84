//! Dense real polynomials in the monomial basis.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    /// c[k] multiplies x^k.
    pub c: Vec<f64>,
}

impl Poly {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Poly { c }
    }

    /// Monic-free product form `lead * prod (x - r_i)`.
    pub fn from_roots(lead: f64, roots: &[f64]) -> Self {
        let mut p = Poly::new(vec![lead]);
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, 1.0]));
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn deriv(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &a)| a * k as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn integ(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.c.iter().enumerate().map(|(k, &a)| a / (k + 1) as f64));
        Poly::new(c)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new(
            (0..n)
                .map(|k| self.c.get(k).copied().unwrap_or(0.0) + o.c.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.c.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    /// Coefficients of s -> p(a + s).
    pub fn shift(&self, a: f64) -> Poly {
        let mut c = self.c.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += a * c[j + 1];
            }
        }
        Poly::new(c)
    }

    /// All real roots in [lo, hi], ascending, isolated through the roots of p'.
    pub fn real_roots(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.degree() == 0 {
            return vec![];
        }
        let mut knots = vec![lo];
        knots.extend(self.deriv().real_roots(lo, hi));
        knots.push(hi);
        let mut out: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            let r = if fa == 0.0 {
                Some(a)
            } else if fb == 0.0 {
                Some(b)
            } else if fa.signum() != fb.signum() {
                Some(bisect_monotone(|x| self.eval(x), a, b, fa))
            } else {
                None
            };
            if let Some(r) = r {
                if out.last().map_or(true, |&l| (r - l).abs() > 1e-14 * (1.0 + r.abs())) {
                    out.push(r);
                }
            }
        }
        out
    }
}

fn bisect_monotone(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_matches_eval() {
        let p = Poly::new(vec![0.3, -1.0, 2.0, 0.5, -0.25]);
        let q = p.shift(0.7);
        for &s in &[-1.0, -0.2, 0.0, 0.4, 1.3] {
            assert!((q.eval(s) - p.eval(0.7 + s)).abs() < 1e-13);
        }
    }

    #[test]
    fn roots_of_cubic() {
        let p = Poly::new(vec![0.0, 1.0, 0.0, -1.0]);
        let r = p.real_roots(-2.0, 2.0);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 1.0).abs() < 1e-15 && r[1].abs() < 1e-15 && (r[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn integ_deriv_roundtrip() {
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.integ().deriv(), p);
    }
}
