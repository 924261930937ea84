//! Fluctuation constants of the sharp-interface limit.
//!
//! Integrals over the line are taken in the phase plane: along the standing
//! wave dz = dv / sqrt(2V(v)) and U' = sqrt(2V), so every line integral becomes
//! a regular integral over [rho_-, rho_+] without truncation. The grid
//! versions in `grid` cross-check them on a WaveProfile.

use crate::error::{Error, Result};
use crate::profile::WaveProfile;
use crate::quad::integrate;
use crate::reaction::{BistableReaction, MINUS, PLUS};
use serde::{Deserialize, Serialize};

/// A value with a quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const ABS: f64 = 1e-15;
const REL: f64 = 1e-14;

/// int_{rho_-}^{rho_+} h(v, f(v), sqrt(2 V(v))) dv, split at rho_* and
/// evaluated in offsets from the nearer stable root.
fn phase_integral(r: &BistableReaction, h: impl Fn(f64, f64, f64) -> f64) -> Result<Estimate> {
    let [a, s, b] = r.roots();
    let lo = integrate(
        |t| {
            let v = a + t;
            h(v, r.f_local(MINUS, t), (2.0 * r.v_local(MINUS, t)).max(0.0).sqrt())
        },
        0.0,
        s - a,
        ABS,
        REL,
    )?;
    let hi = integrate(
        |t| {
            let v = b - t;
            h(v, r.f_local(PLUS, -t), (2.0 * r.v_local(PLUS, -t)).max(0.0).sqrt())
        },
        0.0,
        b - s,
        ABS,
        REL,
    )?;
    Ok(Estimate { value: lo.value + hi.value, error: lo.error + hi.error })
}

fn require_balanced(r: &BistableReaction) -> Result<()> {
    if r.is_balanced() {
        Ok(())
    } else {
        Err(Error::Unbalanced(r.check_balance()))
    }
}

/// ||U_0'||^2.
pub fn surface_tension(r: &BistableReaction) -> Result<Estimate> {
    require_balanced(r)?;
    phase_integral(r, |_, _, w| w)
}

/// Squared pieces of c_*: (||d_w e g_1(U)||^2, ||e g_2(U)||^2).
pub fn c_star_parts(r: &BistableReaction, g1: &dyn Fn(f64) -> f64, g2: &dyn Fn(f64) -> f64) -> Result<(Estimate, Estimate)> {
    let st = surface_tension(r)?;
    let a = phase_integral(r, |v, f, w| if w > 0.0 { f * f * g1(v).powi(2) / w } else { 0.0 })?;
    let b = phase_integral(r, |v, _, w| w * g2(v).powi(2))?;
    let scale = |e: Estimate| Estimate {
        value: e.value / st.value,
        error: e.error / st.value + e.value * st.error / (st.value * st.value),
    };
    Ok((scale(a), scale(b)))
}

/// c_* = sqrt(||d_w e g_1||^2 + ||e g_2||^2).
pub fn c_star(r: &BistableReaction, g1: &dyn Fn(f64) -> f64, g2: &dyn Fn(f64) -> f64) -> Result<Estimate> {
    let (a, b) = c_star_parts(r, g1, g2)?;
    let v = (a.value + b.value).sqrt();
    Ok(Estimate { value: v, error: (a.error + b.error) / (2.0 * v.max(f64::MIN_POSITIVE)) })
}

/// c_2 = (1/2) int f''(U) e^3 dw.
pub fn c2(r: &BistableReaction) -> Result<Estimate> {
    let st = surface_tension(r)?;
    let i = phase_integral(r, |v, _, w| r.d2f(v) * w * w)?;
    let s3 = st.value.powf(1.5);
    Ok(Estimate { value: 0.5 * i.value / s3, error: 0.5 * i.error / s3 + 1.5 * i.value.abs() * st.error / (s3 * st.value) })
}

/// c_3 = (1/6) int f'''(U) e^4 dw.
pub fn c3(r: &BistableReaction) -> Result<Estimate> {
    let st = surface_tension(r)?;
    let i = phase_integral(r, |v, _, w| r.d3f(v) * w * w * w)?;
    let s4 = st.value * st.value;
    Ok(Estimate { value: i.value / (6.0 * s4), error: i.error / (6.0 * s4) + 2.0 * i.value.abs() * st.error / (6.0 * s4 * st.value) })
}

/// Integration-by-parts form of c_3: (1/(2||U'||^4)) int f''(U) f(U) U'^2 dz.
pub fn c3_by_parts(r: &BistableReaction) -> Result<Estimate> {
    let st = surface_tension(r)?;
    let i = phase_integral(r, |v, f, w| r.d2f(v) * f * w)?;
    let s4 = st.value * st.value;
    Ok(Estimate { value: i.value / (2.0 * s4), error: i.error / (2.0 * s4) })
}

/// Stationary variance amp^2 / (4 sqrt c) of the off-interface field, with
/// the defining integral amp^2/sqrt(8 pi) int_0^inf e^{-2cu} u^{-1/2} du by quadrature.
pub fn sigma_sq(c: f64, amplitude: f64) -> Result<(f64, Estimate)> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("decay rate must be positive, got {c}")));
    }
    let closed = amplitude * amplitude / (4.0 * c.sqrt());
    // u = t^2 removes the endpoint singularity
    let tmax = (40.0 / c).sqrt();
    let q = integrate(|t| 2.0 * (-2.0 * c * t * t).exp(), 0.0, tmax, 1e-16, 1e-15)?;
    let pre = amplitude * amplitude / (8.0 * std::f64::consts::PI).sqrt();
    Ok((closed, Estimate { value: pre * q.value, error: pre * q.error }))
}

/// Every constant for one reaction and one choice of noise coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantReport {
    pub reaction: String,
    pub g1: String,
    pub g2: String,
    pub surface_tension: Estimate,
    pub c_star: Estimate,
    pub c_star_sq_grad: Estimate,
    pub c_star_sq_flip: Estimate,
    pub c2: Estimate,
    pub c3: Estimate,
    pub c3_by_parts: Estimate,
    /// (decay rate -f'(rho), amplitude g_2(rho), sigma^2) for rho_- and rho_+.
    pub sigma_sq: [(f64, f64, f64); 2],
}

pub fn report(
    r: &BistableReaction,
    g1_name: &str,
    g1: &dyn Fn(f64) -> f64,
    g2_name: &str,
    g2: &dyn Fn(f64) -> f64,
) -> Result<ConstantReport> {
    let (a, b) = c_star_parts(r, g1, g2)?;
    let sig = |rho: f64| -> Result<(f64, f64, f64)> {
        let c = -r.df(rho);
        let amp = g2(rho);
        Ok((c, amp, sigma_sq(c, amp)?.0))
    };
    Ok(ConstantReport {
        reaction: r.id.clone(),
        g1: g1_name.into(),
        g2: g2_name.into(),
        surface_tension: surface_tension(r)?,
        c_star: c_star(r, g1, g2)?,
        c_star_sq_grad: a,
        c_star_sq_flip: b,
        c2: c2(r)?,
        c3: c3(r)?,
        c3_by_parts: c3_by_parts(r)?,
        sigma_sq: [sig(r.rho_minus())?, sig(r.rho_plus())?],
    })
}

/// Line integrals on the wave grid with an exponential tail closure.
pub mod grid {
    use super::*;

    /// Trapezoid sum of h(U, U') over the grid plus tail estimates, where
    /// `tail_power` is the power of (U - rho) the integrand decays like.
    fn line(sw: &WaveProfile, h: impl Fn(f64, f64) -> f64, tail_power: f64) -> Estimate {
        let n = sw.len();
        let vals: Vec<f64> = (0..n).map(|i| h(sw.u[i], sw.du[i])).collect();
        let mut s = 0.5 * (vals[0] + vals[n - 1]);
        s += vals[1..n - 1].iter().sum::<f64>();
        s *= sw.dz;
        // integrand ~ A e^{-p lambda |z|} beyond the ends
        let tail = vals[0].abs() / (tail_power * sw.rates[0]) + vals[n - 1].abs() / (tail_power * sw.rates[1]);
        Estimate { value: s + vals[0] / (tail_power * sw.rates[0]) + vals[n - 1] / (tail_power * sw.rates[1]), error: tail }
    }

    pub fn surface_tension(sw: &WaveProfile) -> Estimate {
        line(sw, |_, d| d * d, 2.0)
    }

    pub fn c_star(sw: &WaveProfile, r: &BistableReaction, g1: &dyn Fn(f64) -> f64, g2: &dyn Fn(f64) -> f64) -> f64 {
        let st = surface_tension(sw).value;
        let a = line(sw, |u, _| (r.f(u) * g1(u)).powi(2), 2.0).value;
        let b = line(sw, |u, d| (d * g2(u)).powi(2), 2.0).value;
        ((a + b) / st).sqrt()
    }

    pub fn c2(sw: &WaveProfile, r: &BistableReaction) -> f64 {
        let st = surface_tension(sw).value;
        0.5 * line(sw, |u, d| r.d2f(u) * d * d * d, 3.0).value / st.powf(1.5)
    }

    pub fn c3(sw: &WaveProfile, r: &BistableReaction) -> f64 {
        let st = surface_tension(sw).value;
        line(sw, |u, d| r.d3f(u) * d.powi(4), 4.0).value / (6.0 * st * st)
    }
}
