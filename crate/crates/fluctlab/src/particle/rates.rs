//! Finite-range flip rates and their Bernoulli ensemble averages.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::reaction::BistableReaction;
use serde::{Deserialize, Serialize};

/// Largest window enumerated exactly.
pub const MAX_WINDOW_BITS: usize = 20;

/// Translation-invariant flip rates c_p(eta) given as a table over the
/// configurations of the sup-norm window of radius `radius` around p.
///
/// Window sites are ordered lexicographically by offset; bit i of the table
/// index is the occupation of window site i. The centre is bit `centre()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipRates {
    pub id: String,
    pub d: usize,
    pub radius: usize,
    table: Vec<f64>,
}

impl FlipRates {
    pub fn window_size(d: usize, radius: usize) -> usize {
        (2 * radius + 1).pow(d as u32)
    }

    pub fn from_table(id: &str, d: usize, radius: usize, table: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::Dimension(d));
        }
        let w = Self::window_size(d, radius);
        if w > MAX_WINDOW_BITS {
            return Err(Error::WindowTooLarge(w));
        }
        if table.len() != 1 << w {
            return Err(Error::InvalidInput(format!("rate table needs {} entries", 1usize << w)));
        }
        if let Some(bad) = table.iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidInput(format!("flip rates must be positive, found {bad}")));
        }
        Ok(FlipRates { id: id.into(), d, radius, table })
    }

    /// Rate `c` for every configuration.
    pub fn constant(d: usize, c: f64) -> Result<Self> {
        Self::from_table(&format!("constant({c})"), d, 0, vec![c; 2])
    }

    /// Rate depends on the centre occupation and the number k of occupied
    /// nearest neighbours: creation[k] for an empty centre, annihilation[k] for an occupied one.
    pub fn neighbour_sum(id: &str, d: usize, creation: &[f64], annihilation: &[f64]) -> Result<Self> {
        let nn = 2 * d;
        if creation.len() != nn + 1 || annihilation.len() != nn + 1 {
            return Err(Error::InvalidInput(format!("need {} rates per branch", nn + 1)));
        }
        let w = Self::window_size(d, 1);
        let offsets = window_offsets(d, 1);
        let centre = offsets.iter().position(|o| o.iter().all(|&x| x == 0)).unwrap();
        let nbrs: Vec<usize> = offsets
            .iter()
            .enumerate()
            .filter(|(_, o)| o.iter().map(|x| x.abs()).sum::<i64>() == 1)
            .map(|(i, _)| i)
            .collect();
        let table = (0..1usize << w)
            .map(|cfg| {
                let k = nbrs.iter().filter(|&&i| cfg >> i & 1 == 1).count();
                if cfg >> centre & 1 == 1 {
                    annihilation[k]
                } else {
                    creation[k]
                }
            })
            .collect();
        Self::from_table(id, d, 1, table)
    }

    /// c_p = 1 + a (eta_{p-1} + eta_{p+1}) in d = 1.
    pub fn linear_d1(a: f64) -> Result<Self> {
        let r = [1.0, 1.0 + a, 1.0 + 2.0 * a];
        Self::neighbour_sum(&format!("linear({a})"), 1, &r, &r)
    }

    /// Default bistable family in d = 1: creation rates (0.2, 0.5, 3.0) by
    /// occupied-neighbour count and the particle-hole mirrored annihilation rates.
    /// The mirror symmetry makes the ensemble reaction balanced about 1/2.
    pub fn default_bistable() -> Self {
        let a = [0.2, 0.5, 3.0];
        let b = [a[2], a[1], a[0]];
        Self::neighbour_sum("bistable", 1, &a, &b).expect("static rates are valid")
    }

    pub fn window_bits(&self) -> usize {
        Self::window_size(self.d, self.radius)
    }

    pub fn centre(&self) -> usize {
        self.window_bits() / 2
    }

    pub fn offsets(&self) -> Vec<Vec<i64>> {
        window_offsets(self.d, self.radius)
    }

    /// Rate for a window configuration index.
    pub fn rate(&self, cfg: usize) -> f64 {
        self.table[cfg]
    }

    pub fn max_rate(&self) -> f64 {
        self.table.iter().cloned().fold(0.0, f64::max)
    }

    fn bernoulli_poly(&self, g: impl Fn(usize) -> f64) -> Poly {
        let w = self.window_bits();
        let up = Poly::new(vec![0.0, 1.0]);
        let down = Poly::new(vec![1.0, -1.0]);
        // accumulate per number of occupied sites: prod u^j (1-u)^(w-j)
        let mut by_count = vec![0.0; w + 1];
        for cfg in 0..1usize << w {
            by_count[cfg.count_ones() as usize] += g(cfg);
        }
        let mut acc = Poly::new(vec![0.0]);
        for (j, &s) in by_count.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let mut p = Poly::new(vec![s]);
            for _ in 0..j {
                p = p.mul(&up);
            }
            for _ in j..w {
                p = p.mul(&down);
            }
            acc = acc.add(&p);
        }
        acc
    }

    /// f(u) = E^{nu_u}[c_0 (1 - 2 eta_0)] as a polynomial in u.
    pub fn ensemble_f_poly(&self) -> Poly {
        let c = self.centre();
        self.bernoulli_poly(|cfg| {
            let eta = (cfg >> c & 1) as f64;
            self.table[cfg] * (1.0 - 2.0 * eta)
        })
    }

    /// <c_0>(u) = E^{nu_u}[c_0] as a polynomial in u.
    pub fn ensemble_c0_poly(&self) -> Poly {
        self.bernoulli_poly(|cfg| self.table[cfg])
    }

    /// Direct enumeration of E^{nu_u}[g(eta)] over window configurations.
    fn enumerate(&self, u: f64, g: impl Fn(usize) -> f64) -> f64 {
        let w = self.window_bits();
        (0..1usize << w)
            .map(|cfg| {
                let k = cfg.count_ones() as i32;
                u.powi(k) * (1.0 - u).powi(w as i32 - k) * g(cfg)
            })
            .sum()
    }

    pub fn ensemble_f(&self, u: f64) -> f64 {
        let c = self.centre();
        self.enumerate(u, |cfg| self.table[cfg] * (1.0 - 2.0 * (cfg >> c & 1) as f64))
    }

    pub fn ensemble_c0(&self, u: f64) -> f64 {
        self.enumerate(u, |cfg| self.table[cfg])
    }

    /// Bistable reaction f(u) = E[c_bar]; roots are searched in [0, 1].
    pub fn reaction(&self) -> Result<BistableReaction> {
        BistableReaction::from_poly(&format!("particle:{}", self.id), self.ensemble_f_poly(), 0.0, 1.0)
    }
}

/// Offsets of the sup-norm window, lexicographic in (x_1, ..., x_d).
pub fn window_offsets(d: usize, radius: usize) -> Vec<Vec<i64>> {
    let r = radius as i64;
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|o: Vec<i64>| {
                (-r..=r).map(move |x| {
                    let mut v = o.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// chi(u) = u (1 - u).
pub fn chi(u: f64) -> f64 {
    u * (1.0 - u)
}

/// g_1(u) = sqrt(2 chi(u)).
pub fn g1(u: f64) -> f64 {
    (2.0 * chi(u).max(0.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rates() {
        let r = FlipRates::constant(1, 1.0).unwrap();
        for &u in &[0.0, 0.3, 1.0] {
            assert!((r.ensemble_f(u) - (1.0 - 2.0 * u)).abs() < 1e-15);
            assert!((r.ensemble_c0(u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn default_family_is_balanced() {
        let r = FlipRates::default_bistable().reaction().unwrap();
        assert!(r.is_balanced());
        assert!((r.rho_star() - 0.5).abs() < 1e-14);
        assert!((r.df(0.5) - 0.7).abs() < 1e-12);
    }
}
