//! Fluctuation field Phi of the density around u^K on T^d.

use super::fourier::axis_multiplier;
use super::noise::{NoiseSampler, NoiseSpec};
use super::{add_divergence, next_index, sup_norm, FieldSeries, Grid, Scaling, BLOWUP_CAP};
use crate::error::{Error, Result};
use crate::reaction::BistableReaction;
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityParams {
    /// Lattice size N.
    pub n_lattice: f64,
    pub k: f64,
    /// Taylor order of the drift, 1..=3.
    pub order: usize,
    pub t_end: f64,
    pub dt: f64,
    /// Store a snapshot every this many steps.
    pub sample_every: usize,
    pub blowup_cap: f64,
    /// Optional co-moving drift c sqrt(K) d_{x_1} Phi (speed c), upwinded.
    pub advection: Option<f64>,
}

impl DensityParams {
    pub fn new(n_lattice: f64, k: f64, order: usize, t_end: f64, dt: f64) -> Self {
        DensityParams { n_lattice, k, order, t_end, dt, sample_every: 1, blowup_cap: BLOWUP_CAP, advection: None }
    }
}

/// d_t Phi = Delta Phi + K F_n^N(u, Phi) + div(g_1(u) W_grad) + sqrt(K) g_2(u) W_flip.
///
/// The Laplacian is implicit (Fourier), drift and noises explicit. The
/// conservative noise lives on edges with g_1 at edge midpoints, so its
/// discrete divergence has zero spatial sum. `u` holds u^K on the grid.
#[allow(clippy::too_many_arguments)]
pub fn integrate_density_spde(
    r: &BistableReaction,
    u: &[f64],
    grid: &Grid,
    params: &DensityParams,
    noise: &NoiseSpec,
    g1: &dyn Fn(f64) -> f64,
    g2: &dyn Fn(f64) -> f64,
    init: &[f64],
    rng: &mut Rng,
) -> Result<FieldSeries> {
    let d = grid.dim();
    if !(1..=2).contains(&d) {
        return Err(Error::Dimension(d));
    }
    if !(1..=3).contains(&params.order) {
        return Err(Error::InvalidOrder(params.order));
    }
    let m = grid.cells();
    if u.len() != m || init.len() != m {
        return Err(Error::InvalidInput("field sizes do not match the grid".into()));
    }
    if noise.channels != d + 1 {
        return Err(Error::InvalidInput(format!("need {} noise channels", d + 1)));
    }
    let dfmax = u.iter().map(|&x| r.df(x).abs()).fold(0.0, f64::max);
    if params.dt * params.k * dfmax > 1.0 {
        return Err(Error::InvalidInput(format!(
            "explicit drift unstable: dt K max|f'| = {}",
            params.dt * params.k * dfmax
        )));
    }
    let sampler = NoiseSampler::new(noise, grid)?;
    let nhd = params.n_lattice.powf(d as f64 / 2.0);
    let g1e: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..m).map(|i| g1(0.5 * (u[i] + u[next_index(i, &grid.shape, a)]))).collect())
        .collect();
    let g2c: Vec<f64> = u.iter().map(|&x| params.k.sqrt() * g2(x)).collect();
    let steps = (params.t_end / params.dt).round() as usize;
    let mut phi = init.to_vec();
    let mut out = FieldSeries::new(grid.clone(), Scaling::Phi, params.k, Some(params.n_lattice));
    out.push(0.0, &phi);
    let h: Vec<f64> = (0..d).map(|a| grid.spacing(a)).collect();
    let mut incr = vec![0.0; m];
    for step in 1..=steps {
        let w = sampler.sample(params.dt, rng);
        incr.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..d {
            let edges: Vec<f64> = w[a].iter().zip(&g1e[a]).map(|(x, g)| x * g).collect();
            add_divergence(&mut incr, &edges, &grid.shape, a, h[a]);
        }
        for i in 0..m {
            let drift = params.k * r.taylor_drift(params.order, nhd, u[i], phi[i])?;
            incr[i] += params.dt * drift + g2c[i] * w[d][i];
        }
        if let Some(c) = params.advection {
            let a = c * params.k.sqrt();
            for i in 0..m {
                let dphi = if a >= 0.0 {
                    phi[next_index(i, &grid.shape, 0)] - phi[i]
                } else {
                    let n0 = grid.shape[0];
                    let stride: usize = grid.shape[1..].iter().product();
                    let j = (i / stride) % n0;
                    let prev = if j == 0 { i + (n0 - 1) * stride } else { i - stride };
                    phi[i] - phi[prev]
                };
                incr[i] += params.dt * a * dphi / h[0];
            }
        }
        for i in 0..m {
            phi[i] += incr[i];
        }
        implicit_laplacian(&mut phi, grid, params.dt);
        let sup = sup_norm(&phi);
        if !sup.is_finite() || sup > params.blowup_cap {
            out.aborted = Some(format!("sup norm {sup:e} above cap at t = {}", step as f64 * params.dt));
            return Ok(out);
        }
        if step % params.sample_every.max(1) == 0 || step == steps {
            out.push(step as f64 * params.dt, &phi);
        }
    }
    Ok(out)
}

/// phi <- (I - dt Delta_h)^{-1} phi with the discrete periodic Laplacian.
pub fn implicit_laplacian(phi: &mut [f64], grid: &Grid, dt: f64) {
    let d = grid.dim();
    let mu = |a: usize, k: i64| {
        let h = grid.spacing(a);
        4.0 * (PI * k as f64 / grid.shape[a] as f64).sin().powi(2) / (h * h)
    };
    if d == 1 {
        axis_multiplier(phi, &grid.shape, 0, |k| 1.0 / (1.0 + dt * mu(0, k)));
        return;
    }
    // the symbol is not a product over axes; apply it on the 2-d spectrum
    let (n0, n1) = (grid.shape[0], grid.shape[1]);
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let f0 = planner.plan_fft_forward(n0);
    let i0 = planner.plan_fft_inverse(n0);
    let f1 = planner.plan_fft_forward(n1);
    let i1 = planner.plan_fft_inverse(n1);
    use rustfft::num_complex::Complex;
    let mut z: Vec<Complex<f64>> = phi.iter().map(|&x| Complex::new(x, 0.0)).collect();
    for row in z.chunks_mut(n1) {
        f1.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n0];
    let sk = |q: usize, n: usize| if q <= n / 2 { q as i64 } else { q as i64 - n as i64 };
    for c in 0..n1 {
        for r in 0..n0 {
            col[r] = z[r * n1 + c];
        }
        f0.process(&mut col);
        for (r, v) in col.iter_mut().enumerate() {
            *v /= (1.0 + dt * (mu(0, sk(r, n0)) + mu(1, sk(c, n1)))) * (n0 * n1) as f64;
        }
        i0.process(&mut col);
        for r in 0..n0 {
            z[r * n1 + c] = col[r];
        }
    }
    for row in z.chunks_mut(n1) {
        i1.process(row);
    }
    for (p, v) in phi.iter_mut().zip(&z) {
        *p = v.re;
    }
}
