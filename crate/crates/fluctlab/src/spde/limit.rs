//! Limit interface equation d_t psi = Delta psi + c_3 psi^3 + c_* W on T^{d-1}.

use super::fourier::RealFourier;
use super::{sup_norm, FieldSeries, Grid, Scaling, BLOWUP_CAP};
use crate::error::{Error, Result};
use crate::rng::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitParams {
    pub c_star: f64,
    /// Cubic coefficient; 0 for the linear equation.
    pub c3: f64,
    pub d: usize,
    /// Grid points on the circle when d = 2.
    pub nu: usize,
    pub dt: f64,
    pub blowup_cap: f64,
}

impl LimitParams {
    pub fn new(c_star: f64, c3: f64, d: usize, nu: usize, dt: f64) -> Self {
        LimitParams { c_star, c3, d, nu, dt, blowup_cap: BLOWUP_CAP }
    }
}

/// Integrate from psi(0) = init. For d = 1 this is the SDE
/// d psi = c_3 psi^3 dt + c_* dB; for d = 2 the stochastic heat equation on the
/// circle, Crank-Nicolson per Fourier mode with the spectral Laplacian.
pub fn integrate_limit_interface(
    p: &LimitParams,
    init: &[f64],
    t_end: f64,
    sample_every: usize,
    rng: &mut Rng,
) -> Result<FieldSeries> {
    let nu = match p.d {
        1 => 1,
        2 => p.nu,
        d => return Err(Error::Dimension(d)),
    };
    if init.len() != nu {
        return Err(Error::InvalidInput("initial field size".into()));
    }
    let grid = Grid::new(vec![nu], vec![1.0]);
    let mut out = FieldSeries::new(grid, Scaling::Interface, 0.0, None);
    out.push(0.0, init);
    let steps = (t_end / p.dt).round() as usize;
    let dt = p.dt;
    let fourier = RealFourier::new(nu);
    let lam: Vec<f64> = (0..nu).map(|r| (2.0 * PI * fourier.freq(r) as f64).powi(2)).collect();
    let sd = p.c_star * (dt * nu as f64).sqrt();
    let mut b = vec![0.0; nu];
    fourier.forward(init, &mut b);
    let mut psi = init.to_vec();
    let mut nl = vec![0.0; nu];
    let mut nlb = vec![0.0; nu];
    for s in 1..=steps {
        if p.c3 != 0.0 {
            fourier.inverse(&b, &mut psi);
            for (o, &x) in nl.iter_mut().zip(&psi) {
                *o = dt * p.c3 * x * x * x;
            }
            fourier.forward(&nl, &mut nlb);
        }
        for r in 0..nu {
            let xi: f64 = StandardNormal.sample(rng);
            let a = 0.5 * dt * lam[r];
            let extra = if p.c3 != 0.0 { nlb[r] } else { 0.0 };
            b[r] = ((1.0 - a) * b[r] + extra + sd * xi) / (1.0 + a);
        }
        let store = s % sample_every.max(1) == 0 || s == steps;
        if store || p.c3 != 0.0 {
            fourier.inverse(&b, &mut psi);
            let sup = sup_norm(&psi);
            if !sup.is_finite() || sup > p.blowup_cap {
                out.aborted = Some(format!("sup norm {sup:e} above cap at t = {}", s as f64 * dt));
                return Ok(out);
            }
            if store {
                out.push(s as f64 * dt, &psi);
            }
        }
    }
    Ok(out)
}

/// |a_k|^2 with a_k = int psi(u) e^{-2 pi i k u} du on the uniform grid.
pub fn mode_power(psi: &[f64], k: usize) -> f64 {
    let n = psi.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (j, &x) in psi.iter().enumerate() {
        let a = 2.0 * PI * (k * j) as f64 / n;
        re += x * a.cos();
        im -= x * a.sin();
    }
    (re * re + im * im) / (n * n)
}

/// Stationary E|a_k|^2 = c_*^2 / (2 (2 pi k)^2) of the linear equation.
pub fn mode_variance_oracle(c_star: f64, k: usize) -> f64 {
    c_star * c_star / (2.0 * (2.0 * PI * k as f64).powi(2))
}
