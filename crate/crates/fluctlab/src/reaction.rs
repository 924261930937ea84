//! Bistable polynomial reactions, their potentials and the Taylor drift family.
//!
//! Every reaction is a polynomial. Besides the monomial form we keep the
//! Taylor expansion of `f` and of the potential `V` at each of the three roots,
//! so that `f(root + s)` and `V(root + s)` keep full relative accuracy for tiny `s`.
//! The layer constructions rely on that.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::quad::GaussRule;
use serde::{Deserialize, Serialize};

/// Index of a root: 0 = rho_minus, 1 = rho_star, 2 = rho_plus.
pub const MINUS: usize = 0;
pub const STAR: usize = 1;
pub const PLUS: usize = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BistableReaction {
    pub id: String,
    f: Poly,
    df: [Poly; 3],
    roots: [f64; 3],
    /// f(root_i + s) as a polynomial in s.
    local_f: [Poly; 3],
    /// -int_0^s f(root_i + t) dt.
    local_v: [Poly; 3],
    /// int_{rho_-}^{rho_+} f.
    imbalance: f64,
    balanced: bool,
}

/// Absolute tolerance on the balance integral.
pub const BALANCE_TOL: f64 = 1e-10;

impl BistableReaction {
    /// Build from monomial coefficients; the three roots are located in [lo, hi].
    pub fn from_poly(id: &str, f: Poly, lo: f64, hi: f64) -> Result<Self> {
        let r = f.real_roots(lo, hi);
        if r.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "expected exactly three zeros in [{lo}, {hi}], found {}",
                r.len()
            )));
        }
        Self::with_roots(id, f, [r[0], r[1], r[2]])
    }

    /// Build from coefficients and user-supplied roots; sign conditions are verified.
    pub fn with_roots(id: &str, f: Poly, roots: [f64; 3]) -> Result<Self> {
        if !(roots[0] < roots[1] && roots[1] < roots[2]) {
            return Err(Error::InvalidInput("roots must be strictly increasing".into()));
        }
        let scale = f.c.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1.0);
        let mut roots = roots;
        for r in roots.iter_mut() {
            // polish with Newton; a wrong root will not converge to a zero
            let d = f.deriv();
            for _ in 0..50 {
                let step = f.eval(*r) / d.eval(*r);
                *r -= step;
                if step.abs() < 1e-17 * (1.0 + r.abs()) {
                    break;
                }
            }
            if f.eval(*r).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput(format!("f({r}) = {} is not a zero", f.eval(*r))));
            }
        }
        let d1 = f.deriv();
        let d2 = d1.deriv();
        let d3 = d2.deriv();
        if !(d1.eval(roots[0]) < 0.0 && d1.eval(roots[2]) < 0.0 && d1.eval(roots[1]) > 0.0) {
            return Err(Error::InvalidInput(
                "need f'(rho_-) < 0, f'(rho_*) > 0, f'(rho_+) < 0".into(),
            ));
        }
        let local_f = roots.map(|r| {
            let mut p = f.shift(r);
            p.c[0] = 0.0;
            p
        });
        let local_v = local_f.clone().map(|p| p.integ().scale(-1.0));
        let imbalance = GaussRule::new(f.degree() / 2 + 2).integrate(|u| f.eval(u), roots[0], roots[2]);
        let balanced = imbalance.abs() <= BALANCE_TOL;
        Ok(BistableReaction {
            id: id.to_string(),
            f,
            df: [d1, d2, d3],
            roots,
            local_f,
            local_v,
            imbalance,
            balanced,
        })
    }

    /// f(u) = u - u^3.
    pub fn cubic() -> Self {
        Self::with_roots("cubic", Poly::new(vec![0.0, 1.0, 0.0, -1.0]), [-1.0, 0.0, 1.0]).unwrap()
    }

    /// f(u) = (1 - u^2)(u + delta); unbalanced for delta != 0.
    pub fn perturbed_cubic(delta: f64) -> Result<Self> {
        let f = Poly::new(vec![1.0, 0.0, -1.0]).mul(&Poly::new(vec![delta, 1.0]));
        Self::with_roots(&format!("perturbed_cubic({delta})"), f, [-1.0, -delta, 1.0])
    }

    /// f(u) = u - u^3 + a(1 - u^2); the three roots are found numerically.
    pub fn tilted_cubic(a: f64) -> Result<Self> {
        let f = Poly::new(vec![a, 1.0, -a, -1.0]);
        Self::from_poly(&format!("tilted_cubic({a})"), f, -3.0, 3.0)
    }

    /// f(u) = (1 - u^2)(u - b/5)(1 + b u), balanced for |b| < 1 and not odd for b != 0.
    pub fn balanced_quartic(b: f64) -> Result<Self> {
        if b.abs() >= 1.0 {
            return Err(Error::InvalidInput("need |b| < 1".into()));
        }
        let f = Poly::new(vec![1.0, 0.0, -1.0])
            .mul(&Poly::new(vec![-b / 5.0, 1.0]))
            .mul(&Poly::new(vec![1.0, b]));
        Self::with_roots(&format!("balanced_quartic({b})"), f, [-1.0, b / 5.0, 1.0])
    }

    pub fn f(&self, u: f64) -> f64 {
        let i = self.nearest_root(u);
        self.local_f[i].eval(u - self.roots[i])
    }

    pub fn df(&self, u: f64) -> f64 {
        self.df[0].eval(u)
    }

    pub fn d2f(&self, u: f64) -> f64 {
        self.df[1].eval(u)
    }

    pub fn d3f(&self, u: f64) -> f64 {
        self.df[2].eval(u)
    }

    /// k-th derivative, k in 0..=3.
    pub fn deriv(&self, k: usize, u: f64) -> f64 {
        match k {
            0 => self.f(u),
            1..=3 => self.df[k - 1].eval(u),
            _ => self.f.deriv_n(k).eval(u),
        }
    }

    pub fn poly(&self) -> &Poly {
        &self.f
    }

    pub fn roots(&self) -> [f64; 3] {
        self.roots
    }

    pub fn rho_minus(&self) -> f64 {
        self.roots[MINUS]
    }

    pub fn rho_star(&self) -> f64 {
        self.roots[STAR]
    }

    pub fn rho_plus(&self) -> f64 {
        self.roots[PLUS]
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    fn nearest_root(&self, u: f64) -> usize {
        let r = &self.roots;
        if u < 0.5 * (r[0] + r[1]) {
            MINUS
        } else if u < 0.5 * (r[1] + r[2]) {
            STAR
        } else {
            PLUS
        }
    }

    /// f(root_i + s) with full relative accuracy in s.
    pub fn f_local(&self, i: usize, s: f64) -> f64 {
        self.local_f[i].eval(s)
    }

    pub fn local_f_poly(&self, i: usize) -> &Poly {
        &self.local_f[i]
    }

    /// -int_{root_i}^{root_i + s} f.
    pub fn v_local(&self, i: usize, s: f64) -> f64 {
        self.local_v[i].eval(s)
    }

    pub fn local_v_poly(&self, i: usize) -> &Poly {
        &self.local_v[i]
    }

    /// Potential with V' = -f, anchored at V(rho_+) = 0.
    ///
    /// Below rho_* the expansion at rho_- is used (exact under balance,
    /// shifted by the imbalance otherwise), so V keeps relative accuracy near both wells.
    pub fn potential(&self, u: f64) -> f64 {
        if u >= self.roots[STAR] {
            self.local_v[PLUS].eval(u - self.roots[PLUS])
        } else {
            self.imbalance + self.local_v[MINUS].eval(u - self.roots[MINUS])
        }
    }

    /// Potential computed by the anchor at rho_- only (V(rho_-) = 0 convention).
    pub fn potential_from_minus(&self, u: f64) -> f64 {
        self.local_v[MINUS].eval(u - self.roots[MINUS])
    }

    /// Potential computed by the anchor at rho_+ only.
    pub fn potential_from_plus(&self, u: f64) -> f64 {
        self.local_v[PLUS].eval(u - self.roots[PLUS])
    }

    /// F_n^N(u, phi) = sum_{k=1}^n N^{-(k-1)d/2} / k! f^{(k)}(u) phi^k.
    pub fn taylor_drift(&self, order: usize, n_half_d: f64, u: f64, phi: f64) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        let mut s = 0.0;
        let mut fact = 1.0;
        let mut scale = 1.0;
        let mut pk = 1.0;
        for k in 1..=order {
            fact *= k as f64;
            pk *= phi;
            s += scale / fact * self.deriv(k, u) * pk;
            scale /= n_half_d;
        }
        Ok(s)
    }

    /// Quadrature value of int_{rho_-}^{rho_+} f.
    pub fn check_balance(&self) -> f64 {
        self.imbalance
    }

    /// Decay rate sqrt(-f'(rho)) of the standing wave tails; the slower side.
    pub fn tail_rate(&self) -> f64 {
        (-self.df(self.roots[MINUS])).min(-self.df(self.roots[PLUS])).sqrt()
    }

    /// Smallest K for which a two-layer periodic profile exists on the unit torus.
    pub fn k_threshold(&self) -> f64 {
        4.0 * std::f64::consts::PI.powi(2) / self.df(self.roots[STAR])
    }
}

impl Poly {
    pub fn deriv_n(&self, k: usize) -> Poly {
        (0..k).fold(self.clone(), |p, _| p.deriv())
    }
}

/// Reactions addressable from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReactionId {
    Named(String),
    Coefficients(Vec<f64>),
}

impl ReactionId {
    pub fn build(&self) -> Result<BistableReaction> {
        match self {
            ReactionId::Named(s) => named(s),
            ReactionId::Coefficients(c) => {
                BistableReaction::from_poly("polynomial", Poly::new(c.clone()), -1e3, 1e3)
            }
        }
    }
}

fn named(s: &str) -> Result<BistableReaction> {
    let s = s.trim();
    if s == "cubic" {
        return Ok(BistableReaction::cubic());
    }
    if s == "particle" {
        return crate::particle::FlipRates::default_bistable().reaction();
    }
    if let Some(rest) = s.strip_prefix("perturbed_cubic:") {
        let d: f64 = rest.parse().map_err(|_| Error::InvalidInput(s.into()))?;
        return BistableReaction::perturbed_cubic(d);
    }
    if let Some(rest) = s.strip_prefix("balanced_quartic:") {
        let b: f64 = rest.parse().map_err(|_| Error::InvalidInput(s.into()))?;
        return BistableReaction::balanced_quartic(b);
    }
    if let Some(rest) = s.strip_prefix("tilted_cubic:") {
        let a: f64 = rest.parse().map_err(|_| Error::InvalidInput(s.into()))?;
        return BistableReaction::tilted_cubic(a);
    }
    Err(Error::InvalidInput(format!("unknown reaction id {s}")))
}
