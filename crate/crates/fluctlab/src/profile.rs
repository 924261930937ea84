//! Standing and traveling waves, the two-layer periodic profile v^K and its
//! piecewise approximation built from the standing wave.

use crate::error::{Error, Result};
use crate::interp::{uniform_local, Chebyshev};
use crate::ode::dopri5;
use crate::quad::{integrate, GaussRule};
use crate::reaction::{BistableReaction, MINUS, PLUS, STAR};
use crate::roots::brent;
use serde::{Deserialize, Serialize};

const INTERP_ORDER: usize = 9;

/// Monotone wave U on a uniform grid z_j = z0 + j dz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveProfile {
    pub z0: f64,
    pub dz: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub speed: f64,
    /// ||U'||^2 over the whole line.
    pub norm_sq: f64,
    pub rho: [f64; 3],
    /// Exponential rates of approach to rho_- (z -> -inf) and rho_+ (z -> +inf).
    pub rates: [f64; 2],
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z0 + i as f64 * self.dz
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.len() - 1)
    }

    /// U(z); beyond the grid the tails continue exponentially.
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.len();
        let (zl, zr) = (self.z0, self.z(n - 1));
        if z < zl {
            self.rho[MINUS] + (self.u[0] - self.rho[MINUS]) * (self.rates[0] * (z - zl)).exp()
        } else if z > zr {
            self.rho[PLUS] - (self.rho[PLUS] - self.u[n - 1]) * (-self.rates[1] * (z - zr)).exp()
        } else {
            uniform_local(&self.u, self.z0, self.dz, z, INTERP_ORDER)
        }
    }

    pub fn eval_deriv(&self, z: f64) -> f64 {
        let n = self.len();
        let (zl, zr) = (self.z0, self.z(n - 1));
        if z < zl {
            self.du[0] * (self.rates[0] * (z - zl)).exp()
        } else if z > zr {
            self.du[n - 1] * (-self.rates[1] * (z - zr)).exp()
        } else {
            uniform_local(&self.du, self.z0, self.dz, z, INTERP_ORDER)
        }
    }

    /// e(w) = U'(-w) / ||U'||.
    pub fn e(&self, w: f64) -> f64 {
        self.eval_deriv(-w) / self.norm_sq.sqrt()
    }

    /// sup over interior nodes of |U'' + c U' + f(U)| with a fourth-order stencil for U''.
    pub fn ode_residual(&self, r: &BistableReaction) -> f64 {
        let h2 = self.dz * self.dz;
        let u = &self.u;
        (2..self.len() - 2)
            .map(|i| {
                let upp = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) / (12.0 * h2);
                (upp + self.speed * self.du[i] + r.f(u[i])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of ln|rho_+ - U(z)| over z in [z_lo, z_max].
    pub fn tail_fit(&self, z_lo: f64) -> (f64, f64) {
        let pts: Vec<(f64, f64)> = (0..self.len())
            .filter(|&i| self.z(i) >= z_lo)
            .filter_map(|i| {
                let d = self.rho[PLUS] - self.u[i];
                (d > 0.0).then(|| (self.z(i), d.ln()))
            })
            .collect();
        linear_fit(&pts)
    }
}

/// Returns (slope, intercept).
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// ||U_0'||^2 = int sqrt(2V(v)) dv over [rho_-, rho_+] for a balanced reaction.
pub fn surface_tension(r: &BistableReaction) -> Result<f64> {
    let [a, s, b] = r.roots();
    let lo = integrate(|t| (2.0 * r.v_local(MINUS, t)).max(0.0).sqrt(), 0.0, s - a, 1e-15, 1e-14)?;
    let hi = integrate(|t| (2.0 * r.v_local(PLUS, -t)).max(0.0).sqrt(), 0.0, b - s, 1e-15, 1e-14)?;
    Ok(lo.value + hi.value)
}

/// Standing wave by inverting z(v) = int_{rho_*}^v dw / sqrt(2V(w)).
///
/// The inversion runs in the log of the distance to the nearest stable root,
/// so tails keep relative accuracy.
pub fn solve_standing_wave(r: &BistableReaction, z_max: f64, n: usize) -> Result<WaveProfile> {
    if !r.is_balanced() {
        return Err(Error::Unbalanced(r.check_balance()));
    }
    if n < 16 || z_max <= 0.0 {
        return Err(Error::InvalidInput("need n >= 16 and z_max > 0".into()));
    }
    let [rm, rs, rp] = r.roots();
    let dz = 2.0 * z_max / (n - 1) as f64;
    let z0 = -z_max;
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    let gl = GaussRule::new(16);

    // side: +1 marches to rho_+ with offset s = rho_+ - U, -1 to rho_- with s = U - rho_-
    for side in [1.0f64, -1.0] {
        let w = |s: f64| -> f64 {
            if side > 0.0 {
                r.v_local(PLUS, -s)
            } else {
                r.v_local(MINUS, s)
            }
        };
        // dz per unit ln s is s / sqrt(2W(s))
        let dzds = |sig: f64| -> f64 {
            let s = sig.exp();
            s / (2.0 * w(s)).sqrt()
        };
        let s_start = if side > 0.0 { rp - rs } else { rs - rm };
        let mut sig_prev = s_start.ln();
        let mut z_prev = 0.0;
        let idx: Vec<usize> = if side > 0.0 {
            (0..n).filter(|&i| z0 + i as f64 * dz >= 0.0).collect()
        } else {
            (0..n).rev().filter(|&i| z0 + (i as f64) * dz < 0.0).collect()
        };
        for i in idx {
            let zi = z0 + i as f64 * dz;
            let delta = (zi - z_prev).abs();
            let mut sig = sig_prev - delta / dzds(sig_prev);
            if delta > 0.0 {
                let mut ok = false;
                for _ in 0..60 {
                    let g = gl.integrate(&dzds, sig, sig_prev) - delta;
                    let step = g / dzds(sig);
                    sig += step;
                    if step.abs() < 1e-15 * (1.0 + sig.abs()) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::NonConvergence(format!("standing wave inversion at z = {zi}")));
                }
            } else {
                sig = sig_prev;
            }
            let s = sig.exp();
            if side > 0.0 {
                u[i] = rp - s;
            } else {
                u[i] = rm + s;
            }
            du[i] = (2.0 * w(s)).sqrt();
            sig_prev = sig;
            z_prev = zi;
        }
    }
    Ok(WaveProfile {
        z0,
        dz,
        u,
        du,
        speed: 0.0,
        norm_sq: surface_tension(r)?,
        rho: [rm, rs, rp],
        rates: [(-r.df(rm)).sqrt(), (-r.df(rp)).sqrt()],
    })
}

/// Phase-plane data of a heteroclinic orbit P(U) = U'(z(U)).
struct Orbit {
    lower: Chebyshev,
    upper: Chebyshev,
    rho: [f64; 3],
}

impl Orbit {
    fn p(&self, u: f64) -> f64 {
        if u <= self.rho[STAR] {
            self.lower.eval(u.max(self.rho[MINUS])).max(0.0)
        } else {
            self.upper.eval(u.min(self.rho[PLUS])).max(0.0)
        }
    }
}

/// Saddle rates: unstable at rho_- (positive), stable at rho_+ (negative).
fn saddle_rates(r: &BistableReaction, c: f64) -> (f64, f64) {
    let f1m = r.df(r.rho_minus());
    let f1p = r.df(r.rho_plus());
    ((-c + (c * c - 4.0 * f1m).sqrt()) / 2.0, (-c - (c * c - 4.0 * f1p).sqrt()) / 2.0)
}

/// P along one branch at the requested U values (ordered from the saddle toward rho_*).
fn branch(r: &BistableReaction, c: f64, root: usize, targets: &[f64]) -> Result<Vec<f64>> {
    let (mu_m, mu_p) = saddle_rates(r, c);
    let mu = if root == MINUS { mu_m } else { mu_p };
    let u_root = r.roots()[root];
    let f1 = r.df(u_root);
    let f2 = 0.5 * r.d2f(u_root);
    let p2 = -f2 / (mu * (2.0 - f1 / (mu * mu)));
    let span = (r.rho_star() - u_root).abs();
    let s0 = 1e-6 * span * if root == MINUS { 1.0 } else { -1.0 };
    let local = |s: f64| mu * s + p2 * s * s;
    let mut u_cur = u_root + s0;
    let mut p_cur = local(s0);
    let rhs = |u: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = -c - r.f(u) / y[0];
    };
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        if (t - u_root).abs() <= s0.abs() {
            out.push(local(t - u_root));
            continue;
        }
        let y = dopri5(rhs, u_cur, &[p_cur], t, 1e-13, 1e-15)?;
        u_cur = t;
        p_cur = y[0];
        out.push(p_cur);
    }
    Ok(out)
}

fn mismatch(r: &BistableReaction, c: f64) -> Result<f64> {
    let s = r.rho_star();
    Ok(branch(r, c, MINUS, &[s])?[0] - branch(r, c, PLUS, &[s])?[0])
}

const CHEB_M: usize = 48;

/// Speed c and orbit by two-sided phase-plane shooting.
fn shoot(r: &BistableReaction) -> Result<(f64, Orbit)> {
    let scale = (r.df(r.rho_star()).abs() + r.df(r.rho_plus()).abs() + r.df(r.rho_minus()).abs()).sqrt();
    let mut cm = 0.25 * scale;
    let mut found = None;
    for _ in 0..12 {
        let (a, b) = (mismatch(r, -cm)?, mismatch(r, cm)?);
        if a.signum() != b.signum() || a == 0.0 || b == 0.0 {
            found = Some(cm);
            break;
        }
        cm *= 2.0;
    }
    let cm = found.ok_or(Error::Bracket { lo: -cm, hi: cm })?;
    let c = brent(|c| mismatch(r, c).unwrap_or(f64::NAN), -cm, cm, 1e-15)?;
    let [rm, rs, rp] = r.roots();
    let lower_nodes = Chebyshev::nodes(rm, rs, CHEB_M);
    let mut upper_nodes = Chebyshev::nodes(rs, rp, CHEB_M);
    upper_nodes.reverse();
    let pl = branch(r, c, MINUS, &lower_nodes)?;
    let mut pu = branch(r, c, PLUS, &upper_nodes)?;
    pu.reverse();
    // the two branches agree at rho_* to shooting accuracy; use their mean
    let joint = 0.5 * (pl[CHEB_M] + pu[0]);
    let mut pl = pl;
    pl[CHEB_M] = joint;
    pu[0] = joint;
    Ok((
        c,
        Orbit {
            lower: Chebyshev::new(rm, rs, pl),
            upper: Chebyshev::new(rs, rp, pu),
            rho: [rm, rs, rp],
        },
    ))
}

/// Traveling wave U'' + c U' + f(U) = 0, U(0) = rho_*, with c found by shooting.
pub fn solve_traveling_wave(r: &BistableReaction, z_max: f64, n: usize) -> Result<WaveProfile> {
    let (c, orbit) = shoot(r)?;
    let dz = 2.0 * z_max / (n - 1) as f64;
    let z0 = -z_max;
    let mut u = vec![0.0; n];
    let [rm, rs, rp] = r.roots();
    let sub = 8;
    let rk4 = |mut x: f64, h: f64| -> f64 {
        for _ in 0..sub {
            let hh = h / sub as f64;
            let k1 = orbit.p(x);
            let k2 = orbit.p(x + 0.5 * hh * k1);
            let k3 = orbit.p(x + 0.5 * hh * k2);
            let k4 = orbit.p(x + hh * k3);
            x += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    };
    // first node at or right of 0, reached from U(0) = rho_* by a partial step
    let i0 = ((0.0 - z0) / dz).ceil() as usize;
    let off = z0 + i0 as f64 * dz;
    u[i0] = if off > 0.0 { rk4(rs, off) } else { rs };
    for i in i0 + 1..n {
        u[i] = rk4(u[i - 1], dz);
    }
    if i0 > 0 {
        u[i0 - 1] = rk4(rs, off - dz);
        for i in (0..i0 - 1).rev() {
            u[i] = rk4(u[i + 1], -dz);
        }
    }
    let du: Vec<f64> = u.iter().map(|&x| orbit.p(x)).collect();
    let norm_sq = integrate(|x| orbit.p(x), rm, rs, 1e-15, 1e-14)?.value
        + integrate(|x| orbit.p(x), rs, rp, 1e-15, 1e-14)?.value;
    let (mu_m, mu_p) = saddle_rates(r, c);
    Ok(WaveProfile {
        z0,
        dz,
        u,
        du,
        speed: c,
        norm_sq,
        rho: [rm, rs, rp],
        rates: [mu_m, -mu_p],
    })
}

/// Half of a periodic excursion below (lower) or above (upper) rho_*.
///
/// v = root + sgn * delta * cosh(t); the integrand of the length integral in t
/// is cosh(t/2)/sqrt(S(t)) with S free of cancellation, so the turning point is regular.
#[derive(Debug, Clone)]
pub(crate) struct Excursion {
    lower: bool,
    root: f64,
    delta: f64,
    eps: f64,
    /// local potential coefficients b_k (k >= 2) of V(root + s)
    b: Vec<f64>,
    pub tau_star: f64,
    dtau: f64,
    table: Vec<f64>,
    pub half_len: f64,
}

impl Excursion {
    fn new(r: &BistableReaction, lower: bool, delta: f64, eps: f64) -> Self {
        let (root_i, span) = if lower {
            (MINUS, r.rho_star() - r.rho_minus())
        } else {
            (PLUS, r.rho_plus() - r.rho_star())
        };
        let b = r.local_v_poly(root_i).c.clone();
        let tau_star = (span / delta).max(1.0).acosh();
        let panels = ((tau_star / 0.05).ceil() as usize).max(32);
        let mut ex = Excursion {
            lower,
            root: r.roots()[root_i],
            delta,
            eps,
            b,
            tau_star,
            dtau: tau_star / panels as f64,
            table: Vec::with_capacity(panels + 1),
            half_len: 0.0,
        };
        let gl = GaussRule::new(10);
        let mut acc = 0.0;
        ex.table.push(0.0);
        for p in 0..panels {
            let (a, bnd) = (p as f64 * ex.dtau, (p + 1) as f64 * ex.dtau);
            acc += eps * gl.integrate(|t| ex.g(t), a, bnd);
            ex.table.push(acc);
        }
        ex.half_len = acc;
        ex
    }

    fn signed_delta(&self) -> f64 {
        if self.lower {
            self.delta
        } else {
            -self.delta
        }
    }

    /// (V(v(t)) + e) / ((cosh t - 1) delta^2).
    ///
    /// Each term ds^{k-2} (1 + c + ... + c^{k-1}) is summed in powers of
    /// x = ds cosh t, which stays bounded by the excursion span even when
    /// delta underflows towards 1e-300 and cosh t is huge.
    fn s(&self, t: f64) -> f64 {
        let ds = self.signed_delta();
        let x = ds * t.cosh();
        let mut acc = 0.0;
        for k in 2..self.b.len() {
            let e = k as i32 - 2;
            let mut term = 0.0;
            let mut xj = 1.0;
            for j in 0..k as i32 {
                term += xj * ds.powi(e - j);
                xj *= x;
            }
            acc += self.b[k] * term;
        }
        acc
    }

    fn g(&self, t: f64) -> f64 {
        (0.5 * t).cosh() / self.s(t).sqrt()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.root + self.signed_delta() * t.cosh()
    }

    /// |v_x| at parameter t.
    pub fn abs_slope(&self, t: f64) -> f64 {
        2.0 * (0.5 * t).sinh() * self.delta * self.s(t).sqrt() / self.eps
    }

    /// Parameter t at distance d from the turning point.
    pub fn tau_of(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        if d >= self.half_len {
            return self.tau_star;
        }
        let i = match self.table.binary_search_by(|x| x.partial_cmp(&d).unwrap()) {
            Ok(i) => i.min(self.table.len() - 2),
            Err(i) => i - 1,
        };
        let ti = i as f64 * self.dtau;
        let gl = GaussRule::new(10);
        let mut t = ti + (d - self.table[i]) / (self.eps * self.g(ti));
        for _ in 0..30 {
            let val = self.table[i] + self.eps * gl.integrate(|s| self.g(s), ti, t);
            let step = (val - d) / (self.eps * self.g(t));
            t -= step;
            if step.abs() < 1e-15 * (1.0 + t) {
                break;
            }
        }
        t.clamp(0.0, self.tau_star)
    }
}

/// Knobs for the periodic construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Refuse K below this value even if two layers would fit.
    pub k_min: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { k_min: 50.0 }
    }
}

/// Two-layer stationary solution of v'' + K f(v) = 0 on the unit torus.
#[derive(Debug, Clone)]
pub struct PeriodicProfile {
    pub k: f64,
    pub eps: f64,
    pub n: usize,
    /// Grid x_j = -1/2 + j/n.
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub vx: Vec<f64>,
    pub h2: f64,
    pub m1: f64,
    pub m2: f64,
    pub e_star: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub rho: [f64; 3],
    lower: Excursion,
    upper: Excursion,
    pub reaction: BistableReaction,
}

fn upper_delta(r: &BistableReaction, target: f64) -> Result<f64> {
    let span = r.rho_plus() - r.rho_star();
    let lt = target.ln();
    let sig = brent(
        |s| r.v_local(PLUS, -s.exp()).ln() - lt,
        -345.0,
        span.ln(),
        1e-15,
    )?;
    Ok(sig.exp().min(span))
}

fn excursion_pair(r: &BistableReaction, eps: f64, delta_m: f64) -> Result<(Excursion, Excursion)> {
    let target = r.v_local(MINUS, delta_m);
    let delta_p = upper_delta(r, target)?;
    Ok((Excursion::new(r, true, delta_m, eps), Excursion::new(r, false, delta_p, eps)))
}

pub fn solve_periodic_profile(r: &BistableReaction, k: f64, n: usize) -> Result<PeriodicProfile> {
    solve_periodic_profile_with(r, k, n, ProfileOptions::default())
}

pub fn solve_periodic_profile_with(
    r: &BistableReaction,
    k: f64,
    n: usize,
    opts: ProfileOptions,
) -> Result<PeriodicProfile> {
    if !r.is_balanced() {
        return Err(Error::Unbalanced(r.check_balance()));
    }
    let k_thr = r.k_threshold();
    if k < opts.k_min || k <= k_thr {
        return Err(Error::KTooSmall { k, k_min: opts.k_min.max(k_thr) });
    }
    if n < 8 {
        return Err(Error::InvalidInput("need n >= 8".into()));
    }
    let eps = 1.0 / k.sqrt();
    let span = r.rho_star() - r.rho_minus();
    let total = |ld: f64| -> f64 {
        match excursion_pair(r, eps, ld.exp()) {
            Ok((lo, up)) => 2.0 * (lo.half_len + up.half_len) - 1.0,
            Err(_) => f64::NAN,
        }
    };
    let hi = (span * (1.0 - 1e-6)).ln();
    if total(hi) >= 0.0 {
        return Err(Error::KTooSmall { k, k_min: k_thr });
    }
    let ld = brent(total, -330.0, hi, 1e-15)?;
    let delta_m = ld.exp();
    let (lower, upper) = excursion_pair(r, eps, delta_m)?;
    let h2 = 2.0 * lower.half_len;
    let m1 = 0.5 * h2;
    let m2 = 0.5 * (h2 + 1.0);
    let e_star = -r.v_local(MINUS, delta_m);
    let mut p = PeriodicProfile {
        k,
        eps,
        n,
        x: (0..n).map(|j| -0.5 + j as f64 / n as f64).collect(),
        v: vec![0.0; n],
        vx: vec![0.0; n],
        h2,
        m1,
        m2,
        e_star,
        delta_minus: delta_m,
        delta_plus: upper.delta,
        rho: r.roots(),
        lower,
        upper,
        reaction: r.clone(),
    };
    for j in 0..n {
        let (v, vx) = p.eval(p.x[j]);
        p.v[j] = v;
        p.vx[j] = vx;
    }
    Ok(p)
}

impl PeriodicProfile {
    /// (v, v_x) at any x on the torus from the excursion parametrisation.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let y = x.rem_euclid(1.0);
        if y <= self.h2 {
            let t = self.lower.tau_of((y - self.m1).abs());
            let sl = self.lower.abs_slope(t);
            (self.lower.value(t), if y < self.m1 { -sl } else { sl })
        } else {
            let t = self.upper.tau_of((y - self.m2).abs());
            let sl = self.upper.abs_slope(t);
            (self.upper.value(t), if y < self.m2 { sl } else { -sl })
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// (eps^2/2) v_x^2 - V(v) at each node.
    pub fn energy(&self) -> Vec<f64> {
        let e2 = self.eps * self.eps;
        self.v
            .iter()
            .zip(&self.vx)
            .map(|(&v, &vx)| 0.5 * e2 * vx * vx - self.reaction.potential(v))
            .collect()
    }

    /// Number of sign changes of v - rho_* around the torus.
    pub fn crossings(&self) -> usize {
        let s = self.rho[STAR];
        (0..self.n)
            .filter(|&j| {
                let a = self.v[j] - s;
                let b = self.v[(j + 1) % self.n] - s;
                (a <= 0.0 && b > 0.0) || (a > 0.0 && b <= 0.0)
            })
            .count()
    }

    /// sup |eps^2 D^2 v + f(v)| with the centred three-point difference.
    pub fn discrete_residual(&self) -> f64 {
        let n = self.n;
        let c = self.eps * self.eps / (self.dx() * self.dx());
        (0..n)
            .map(|j| {
                let d2 = self.v[(j + 1) % n] - 2.0 * self.v[j] + self.v[(j + n - 1) % n];
                (c * d2 + self.reaction.f(self.v[j])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Relative mismatch of the one-sided slopes at the two layers, measured
    /// from the lower and upper excursions separately, plus the value gap.
    pub fn junction_residual(&self) -> f64 {
        let sl = self.lower.abs_slope(self.lower.tau_star);
        let su = self.upper.abs_slope(self.upper.tau_star);
        let vl = self.lower.value(self.lower.tau_star);
        let vu = self.upper.value(self.upper.tau_star);
        ((sl - su) / sl.max(su)).abs() + (vl - vu).abs()
    }

    /// Lower and upper excursion lengths.
    pub fn excursion_lengths(&self) -> (f64, f64) {
        (2.0 * self.lower.half_len, 2.0 * self.upper.half_len)
    }

    /// Slope magnitude at the rho_* crossings as seen from each side.
    pub fn junction_slopes(&self) -> (f64, f64) {
        (
            self.lower.abs_slope(self.lower.tau_star),
            self.upper.abs_slope(self.upper.tau_star),
        )
    }
}

/// Piecewise profile built from the standing wave.
#[derive(Debug, Clone)]
pub struct HatProfile {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub vx: Vec<f64>,
}

/// U_0(-sqrt K x) on [0, m1], U_0(sqrt K (x - h2)) on [m1, m2], U_0(sqrt K (1 - x)) on [m2, 1).
pub fn hat_value(sw: &WaveProfile, k: f64, h2: f64, x: f64) -> (f64, f64) {
    let sk = k.sqrt();
    let y = x.rem_euclid(1.0);
    let (m1, m2) = (0.5 * h2, 0.5 * (h2 + 1.0));
    if y <= m1 {
        (sw.eval(-sk * y), -sk * sw.eval_deriv(-sk * y))
    } else if y <= m2 {
        (sw.eval(sk * (y - h2)), sk * sw.eval_deriv(sk * (y - h2)))
    } else {
        (sw.eval(sk * (1.0 - y)), -sk * sw.eval_deriv(sk * (1.0 - y)))
    }
}

pub fn hat_profile(sw: &WaveProfile, k: f64, h2: f64, n: usize) -> HatProfile {
    let x: Vec<f64> = (0..n).map(|j| -0.5 + j as f64 / n as f64).collect();
    let (v, vx) = x.iter().map(|&xi| hat_value(sw, k, h2, xi)).unzip();
    HatProfile { x, v, vx }
}

/// sup-norm differences (values, derivatives) between v^K and its hat approximation.
pub fn hat_distance(p: &PeriodicProfile, sw: &WaveProfile) -> (f64, f64) {
    let h = hat_profile(sw, p.k, p.h2, p.n);
    let dv = p.v.iter().zip(&h.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dvx = p.vx.iter().zip(&h.vx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (dv, dvx)
}
