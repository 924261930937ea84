//! Massive off-interface equation on T (d = 1):
//! d_t Psi = Delta Psi - c K Psi + a_grad K^{-1/4} div W + a_flip K^{1/4} W.

use super::fourier::RealFourier;
use super::{FieldSeries, Grid, Scaling};
use crate::error::{Error, Result};
use crate::rng::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffsiteParams {
    pub k: f64,
    /// Decay rate c = -f'(rho), positive.
    pub c: f64,
    pub amp_grad: f64,
    pub amp_flip: f64,
    pub n: usize,
    pub dt: f64,
}

/// The equation is linear, so the gradient-noise and flip-noise responses are
/// carried as separate fields; Psi is their sum.
#[derive(Debug, Clone)]
pub struct OffsiteSpde {
    pub params: OffsiteParams,
    fourier: RealFourier,
    /// Crank-Nicolson factors (1 - a)/(1 + a) and 1/(1 + a) per mode.
    amp: Vec<f64>,
    inv: Vec<f64>,
    sd_grad: Vec<f64>,
    sd_flip: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsiteState {
    pub grad: Vec<f64>,
    pub flip: Vec<f64>,
}

impl OffsiteSpde {
    pub fn new(params: OffsiteParams) -> Result<Self> {
        if !(params.c > 0.0) {
            return Err(Error::InvalidInput(format!("decay rate must be positive, got {}", params.c)));
        }
        let n = params.n;
        let dx = 1.0 / n as f64;
        let fourier = RealFourier::new(n);
        let base = (params.dt / dx).sqrt();
        let mut amp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut sd_grad = vec![0.0; n];
        let mut sd_flip = vec![0.0; n];
        for r in 0..n {
            let mu = 4.0 * (PI * fourier.freq(r) as f64 / n as f64).sin().powi(2) / (dx * dx);
            let a = 0.5 * params.dt * (params.c * params.k + mu);
            amp[r] = (1.0 - a) / (1.0 + a);
            inv[r] = 1.0 / (1.0 + a);
            // the divergence of edge noise has covariance mu_k per real mode
            sd_grad[r] = params.amp_grad * params.k.powf(-0.25) * base * mu.sqrt();
            sd_flip[r] = params.amp_flip * params.k.powf(0.25) * base;
        }
        Ok(OffsiteSpde { params, fourier, amp, inv, sd_grad, sd_flip })
    }

    pub fn zero_state(&self) -> OffsiteState {
        OffsiteState { grad: vec![0.0; self.params.n], flip: vec![0.0; self.params.n] }
    }

    pub fn step(&self, s: &mut OffsiteState, rng: &mut Rng) {
        for r in 0..self.params.n {
            let x1: f64 = StandardNormal.sample(rng);
            let x2: f64 = StandardNormal.sample(rng);
            s.grad[r] = self.amp[r] * s.grad[r] + self.inv[r] * self.sd_grad[r] * x1;
            s.flip[r] = self.amp[r] * s.flip[r] + self.inv[r] * self.sd_flip[r] * x2;
        }
    }

    /// Advance from zero to t_end.
    pub fn run_to(&self, t_end: f64, rng: &mut Rng) -> OffsiteState {
        let mut s = self.zero_state();
        for _ in 0..(t_end / self.params.dt).round() as usize {
            self.step(&mut s, rng);
        }
        s
    }

    /// (gradient-channel, flip-channel) values at node j.
    pub fn value(&self, s: &OffsiteState, j: usize) -> (f64, f64) {
        (self.fourier.eval(&s.grad, j), self.fourier.eval(&s.flip, j))
    }

    pub fn field(&self, s: &OffsiteState) -> Vec<f64> {
        let n = self.params.n;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        self.fourier.inverse(&s.grad, &mut a);
        self.fourier.inverse(&s.flip, &mut b);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    /// Exact stationary pointwise variances (grad, flip) of the discrete scheme.
    pub fn stationary_variance(&self) -> (f64, f64) {
        let n = self.params.n;
        let (mut g, mut f) = (0.0, 0.0);
        for r in 0..n {
            let denom = 1.0 - self.amp[r] * self.amp[r];
            g += (self.inv[r] * self.sd_grad[r]).powi(2) / denom;
            f += (self.inv[r] * self.sd_flip[r]).powi(2) / denom;
        }
        // orthonormal basis: pointwise variance is the mean over nodes of the mode sum
        (g / n as f64, f / n as f64)
    }
}

/// Psi = Psi_grad + Psi_flip from zero initial data, sampled every `sample_every` steps.
pub fn integrate_offsite(params: OffsiteParams, t_end: f64, sample_every: usize, rng: &mut Rng) -> Result<FieldSeries> {
    let spde = OffsiteSpde::new(params)?;
    let n = spde.params.n;
    let mut out = FieldSeries::new(Grid::new(vec![n], vec![1.0]), Scaling::Offsite, spde.params.k, None);
    let mut s = spde.zero_state();
    out.push(0.0, &vec![0.0; n]);
    let steps = (t_end / spde.params.dt).round() as usize;
    for k in 1..=steps {
        spde.step(&mut s, rng);
        if k % sample_every.max(1) == 0 || k == steps {
            out.push(k as f64 * spde.params.dt, &spde.field(&s));
        }
    }
    Ok(out)
}
