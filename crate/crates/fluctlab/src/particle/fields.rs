//! Block-averaged densities and fluctuation fields of lattice configurations.

use super::rates::FlipRates;
use super::sim::{window_index, Lattice, LatticeTrajectory};
use crate::spde::{FieldSeries, Grid, Scaling};
use crate::error::{Error, Result};
use crate::reaction::BistableReaction;

/// Default block side: the largest divisor of N not above sqrt(N).
pub fn default_block(n: usize) -> usize {
    let s = (n as f64).sqrt().floor() as usize;
    (1..=s.max(1)).rev().find(|b| n % b == 0).unwrap_or(1)
}

fn check_block(n: usize, block: usize) -> Result<usize> {
    if block == 0 || n % block != 0 {
        return Err(Error::InvalidInput(format!("block {block} must divide N = {n}")));
    }
    Ok(n / block)
}

/// Block averages of a site field; the result has (N/block)^d entries.
pub fn block_average(n: usize, d: usize, values: &[f64], block: usize) -> Result<Vec<f64>> {
    let nb = check_block(n, block)?;
    let mut out = vec![0.0; nb.pow(d as u32)];
    let w = 1.0 / (block.pow(d as u32)) as f64;
    for (p, &v) in values.iter().enumerate() {
        let b = match d {
            1 => p / block,
            _ => (p / n / block) * nb + (p % n) / block,
        };
        out[b] += v * w;
    }
    Ok(out)
}

pub fn empirical_density(lat: &Lattice, block: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = lat.eta.iter().map(|&e| e as f64).collect();
    block_average(lat.n, lat.d, &v, block)
}

/// Block densities of every snapshot on the block-centre grid of T^d = [0,1)^d.
pub fn density_series(traj: &LatticeTrajectory, block: usize) -> Result<FieldSeries> {
    let nb = check_block(traj.n, block)?;
    let mut grid = Grid::torus(traj.d, nb);
    grid.origin = vec![0.5 / nb as f64; traj.d];
    let mut fs = FieldSeries::new(grid, Scaling::Density, traj.k, Some(traj.n as f64));
    for (t, s) in traj.times.iter().zip(&traj.snapshots) {
        let lat = Lattice { n: traj.n, d: traj.d, eta: s.clone() };
        fs.push(*t, &empirical_density(&lat, block)?);
    }
    Ok(fs)
}

/// Block field N^{d/2} (rho_B - u_B) where `u` holds u(p/N) at every site.
pub fn fluctuation_field(lat: &Lattice, u: &[f64], block: usize) -> Result<Vec<f64>> {
    if u.len() != lat.sites() {
        return Err(Error::InvalidInput("reference density needs N^d values".into()));
    }
    let scale = (lat.sites() as f64).sqrt();
    let rho = empirical_density(lat, block)?;
    let ub = block_average(lat.n, lat.d, u, block)?;
    Ok(rho.iter().zip(&ub).map(|(r, m)| scale * (r - m)).collect())
}

/// <Phi^N, phi> = N^{-d/2} sum_p (eta_p - u_p) phi_p.
pub fn pairing(lat: &Lattice, u: &[f64], phi: &[f64]) -> f64 {
    let s: f64 = lat.eta.iter().zip(u).zip(phi).map(|((&e, m), f)| (e as f64 - m) * f).sum();
    s / (lat.sites() as f64).sqrt()
}

/// Values of a macroscopic function at the lattice points p/N.
pub fn sample_sites(n: usize, d: usize, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let m = n.pow(d as u32);
    let probe = Lattice { n, d, eta: vec![0; m] };
    (0..m).map(|p| f(&probe.position(p))).collect()
}

/// Boltzmann-Gibbs diagnostic: per block, the measured Glauber drift of the
/// fluctuation field N^{d/2} (avg_B cbar - f(u_B)) against the Taylor drift
/// F_n(u_B, Phi_B). Returns the root mean square of the difference and of the measured drift.
pub fn boltzmann_gibbs_residual(
    lat: &Lattice,
    rates: &FlipRates,
    r: &BistableReaction,
    u: &[f64],
    block: usize,
    order: usize,
) -> Result<(f64, f64)> {
    let offs = rates.offsets();
    let ctr = rates.centre();
    let cbar: Vec<f64> = (0..lat.sites())
        .map(|p| {
            let cfg = window_index(lat, &offs, p);
            rates.rate(cfg) * (1.0 - 2.0 * ((cfg >> ctr) & 1) as f64)
        })
        .collect();
    let cb = block_average(lat.n, lat.d, &cbar, block)?;
    let ub = block_average(lat.n, lat.d, u, block)?;
    let phi = fluctuation_field(lat, u, block)?;
    let half = (lat.sites() as f64).sqrt();
    let (mut res, mut mag) = (0.0, 0.0);
    for i in 0..cb.len() {
        let measured = half * (cb[i] - r.f(ub[i]));
        let model = r.taylor_drift(order, half, ub[i], phi[i])?;
        res += (measured - model).powi(2);
        mag += measured * measured;
    }
    let m = cb.len() as f64;
    Ok(((res / m).sqrt(), (mag / m).sqrt()))
}

/// Preset stiffness scalings K = N^{2d/7} and N^{2d/5}.
pub fn k_preset(n: usize, d: usize, which: KPreset) -> f64 {
    let e = match which {
        KPreset::TwoSevenths => 2.0 * d as f64 / 7.0,
        KPreset::TwoFifths => 2.0 * d as f64 / 5.0,
    };
    (n as f64).powf(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPreset {
    TwoSevenths,
    TwoFifths,
}
