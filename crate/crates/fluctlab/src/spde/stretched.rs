//! Fluctuation field Psi on the stretched torus sqrt(K) T x T^{d-1}.

use super::fourier::RealFourier;
use super::noise::white;
use super::{add_divergence, sup_norm, FieldSeries, Grid, Scaling, BLOWUP_CAP};
use crate::error::{Error, Result};
use crate::reaction::BistableReaction;
use crate::rng::Rng;
use crate::spectral::{CyclicSolver, PeriodicOperator};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StretchedParams {
    pub k: f64,
    pub d: usize,
    /// Points in each transverse direction (1 when d = 1).
    pub nu: usize,
    pub dt: f64,
    /// Implicitness of the linear part: 0.5 Crank-Nicolson, 1 backward Euler.
    pub theta: f64,
    /// Lattice size N; needed by the nonlinear terms.
    pub n_lattice: Option<f64>,
    pub quadratic: bool,
    pub cubic: bool,
    /// Include the K^{-1/2} g_1 div_ux W noise.
    pub grad_ux_channel: bool,
    pub blowup_cap: f64,
}

impl StretchedParams {
    pub fn linear(k: f64, d: usize, nu: usize, dt: f64) -> Self {
        StretchedParams {
            k,
            d,
            nu: if d == 1 { 1 } else { nu },
            dt,
            theta: 0.5,
            n_lattice: None,
            quadratic: false,
            cubic: false,
            grad_ux_channel: true,
            blowup_cap: BLOWUP_CAP,
        }
    }
}

/// d_t Psi = (-K A + Delta_ux) Psi + [K^{7/4} N^{-d/2} f''/2 Psi^2 + K^{5/2} N^{-d} f'''/6 Psi^3]
///           + d_z(g_1 W^1) + K^{-1/2} g_1 div_ux W^2 + g_2 W,
/// with A = -d_z^2 - f'(vbar(z)) discretised as in `spectral`.
pub struct StretchedSpde {
    pub params: StretchedParams,
    pub grid: Grid,
    nz: usize,
    dz: f64,
    du: f64,
    op: PeriodicOperator,
    fourier: RealFourier,
    omega: Vec<f64>,
    solvers: Vec<CyclicSolver>,
    g1_edge: Vec<f64>,
    g1_cell: Vec<f64>,
    g2_cell: Vec<f64>,
    quad: Vec<f64>,
    cub: Vec<f64>,
}

impl StretchedSpde {
    /// `vbar` is the profile on the nz-point stretched grid z_j = sqrt(K)(-1/2 + j/nz).
    pub fn new(
        r: &BistableReaction,
        vbar: &[f64],
        params: StretchedParams,
        g1: &dyn Fn(f64) -> f64,
        g2: &dyn Fn(f64) -> f64,
    ) -> Result<Self> {
        let d = params.d;
        if !(1..=2).contains(&d) {
            return Err(Error::Dimension(d));
        }
        if (params.quadratic || params.cubic) && params.n_lattice.is_none() {
            return Err(Error::InvalidInput("nonlinear terms need the lattice size N".into()));
        }
        if !(params.theta >= 0.5 && params.theta <= 1.0) {
            return Err(Error::InvalidInput("theta must lie in [1/2, 1]".into()));
        }
        let nz = vbar.len();
        let nu = if d == 1 { 1 } else { params.nu };
        let grid = Grid::stretched(params.k, nz, d, nu);
        let dz = grid.spacing(0);
        let du = if d == 1 { 1.0 } else { grid.spacing(1) };
        let op = PeriodicOperator::new(1.0 / (dz * dz), vbar.iter().map(|&v| r.df(v)).collect());
        let fourier = RealFourier::new(nu);
        let omega: Vec<f64> = (0..nu).map(|q| (2.0 * PI * fourier.freq(q) as f64).powi(2)).collect();
        let a = params.theta * params.dt;
        let solvers = omega.iter().map(|&w| op.shifted(1.0 + a * w, a * params.k)).collect();
        let nl = params.n_lattice.unwrap_or(1.0);
        let a2 = if params.quadratic { params.k.powf(1.75) * nl.powf(-(d as f64) / 2.0) / 2.0 } else { 0.0 };
        let a3 = if params.cubic { params.k.powf(2.5) * nl.powf(-(d as f64)) / 6.0 } else { 0.0 };
        let mid = |j: usize| 0.5 * (vbar[j] + vbar[(j + 1) % nz]);
        Ok(StretchedSpde {
            grid,
            nz,
            dz,
            du,
            fourier,
            omega,
            solvers,
            g1_edge: (0..nz).map(|j| g1(mid(j))).collect(),
            g1_cell: vbar.iter().map(|&v| g1(v)).collect(),
            g2_cell: vbar.iter().map(|&v| g2(v)).collect(),
            quad: vbar.iter().map(|&v| a2 * r.d2f(v)).collect(),
            cub: vbar.iter().map(|&v| a3 * r.d3f(v)).collect(),
            op,
            params,
        })
    }

    pub fn nu(&self) -> usize {
        self.fourier.n
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Explicit part of one step: nonlinearity times dt plus the noise increments.
    fn forcing(&self, psi: &[f64], rng: &mut Rng) -> Vec<f64> {
        let (nz, nu) = (self.nz, self.nu());
        let m = nz * nu;
        let dt = self.params.dt;
        let sd = (dt / (self.dz * self.du)).sqrt();
        let mut out = vec![0.0; m];
        if self.params.quadratic || self.params.cubic {
            for iz in 0..nz {
                for iu in 0..nu {
                    let p = psi[iz * nu + iu];
                    out[iz * nu + iu] += dt * p * p * (self.quad[iz] + self.cub[iz] * p);
                }
            }
        }
        let mut edges = white(m, sd, rng);
        for iz in 0..nz {
            for iu in 0..nu {
                edges[iz * nu + iu] *= self.g1_edge[iz];
            }
        }
        add_divergence(&mut out, &edges, &self.grid.shape, 0, self.dz);
        if self.params.d == 2 {
            // the transverse edge noise is drawn even when switched off, so both
            // settings see the same remaining noise
            let mut e2 = white(m, sd, rng);
            if self.params.grad_ux_channel {
                let s = self.params.k.powf(-0.5);
                for iz in 0..nz {
                    for iu in 0..nu {
                        e2[iz * nu + iu] *= s * self.g1_cell[iz];
                    }
                }
                add_divergence(&mut out, &e2, &self.grid.shape, 1, self.du);
            }
        }
        let flip = white(m, sd, rng);
        for iz in 0..nz {
            for iu in 0..nu {
                out[iz * nu + iu] += self.g2_cell[iz] * flip[iz * nu + iu];
            }
        }
        out
    }

    /// Split a z-major field into transverse Fourier coefficient columns.
    fn to_modes(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let (nz, nu) = (self.nz, self.nu());
        let mut cols = vec![vec![0.0; nz]; nu];
        let mut b = vec![0.0; nu];
        for iz in 0..nz {
            self.fourier.forward(&x[iz * nu..(iz + 1) * nu], &mut b);
            for q in 0..nu {
                cols[q][iz] = b[q];
            }
        }
        cols
    }

    fn from_modes(&self, cols: &[Vec<f64>], x: &mut [f64]) {
        let (nz, nu) = (self.nz, self.nu());
        let mut b = vec![0.0; nu];
        for iz in 0..nz {
            for q in 0..nu {
                b[q] = cols[q][iz];
            }
            self.fourier.inverse(&b, &mut x[iz * nu..(iz + 1) * nu]);
        }
    }

    pub fn step(&self, psi: &mut [f64], rng: &mut Rng) {
        let force = self.forcing(psi, rng);
        let a = (1.0 - self.params.theta) * self.params.dt;
        let k = self.params.k;
        let mut cols = self.to_modes(psi);
        let fcols = self.to_modes(&force);
        let mut ax = vec![0.0; self.nz];
        for q in 0..self.nu() {
            self.op.apply(&cols[q], &mut ax);
            let w = self.omega[q];
            let rhs: Vec<f64> = (0..self.nz)
                .map(|i| (1.0 - a * w) * cols[q][i] - a * k * ax[i] + fcols[q][i])
                .collect();
            cols[q] = self.solvers[q].solve(&rhs);
        }
        self.from_modes(&cols, psi);
    }

    /// Integrate to t_end, storing every `sample_every`-th step.
    pub fn run(&self, init: &[f64], t_end: f64, sample_every: usize, rng: &mut Rng) -> Result<FieldSeries> {
        if init.len() != self.grid.cells() {
            return Err(Error::InvalidInput("initial field size".into()));
        }
        let steps = (t_end / self.params.dt).round() as usize;
        let mut psi = init.to_vec();
        let mut out = FieldSeries::new(self.grid.clone(), Scaling::Psi, self.params.k, self.params.n_lattice);
        out.push(0.0, &psi);
        for s in 1..=steps {
            self.step(&mut psi, rng);
            let sup = sup_norm(&psi);
            if !sup.is_finite() || sup > self.params.blowup_cap {
                out.aborted = Some(format!("sup norm {sup:e} above cap at t = {}", s as f64 * self.params.dt));
                return Ok(out);
            }
            if s % sample_every.max(1) == 0 || s == steps {
                out.push(s as f64 * self.params.dt, &psi);
            }
        }
        Ok(out)
    }

    /// <Psi, e(z) phi(ux)> over the grid.
    pub fn pair(&self, psi: &[f64], e: &[f64], phi: &[f64]) -> f64 {
        let nu = self.nu();
        let mut s = 0.0;
        for iz in 0..self.nz {
            for iu in 0..nu {
                s += psi[iz * nu + iu] * e[iz] * phi[iu];
            }
        }
        s * self.dz * self.du
    }
}
