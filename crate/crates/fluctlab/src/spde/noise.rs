//! Discrete space-time Gaussian noises on periodic grids.

use super::fourier::axis_multiplier;
use super::Grid;
use crate::error::{Error, Result};
use crate::rng::Rng;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    /// White noise projected onto Fourier modes |k_i| <= cutoff on every axis.
    Regularized { cutoff: usize },
    /// Covariance kernel tabulated on the grid (cells x cells, row-major),
    /// shared by all channels.
    Kernel { table: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub channels: usize,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(channels: usize, seed: u64) -> Self {
        NoiseSpec { kind: NoiseKind::White, channels, seed }
    }
}

/// Prepared sampler; kernel factorisations are done once.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    kind: NoiseKind,
    grid: Grid,
    channels: usize,
    chol: Option<DMatrix<f64>>,
}

impl NoiseSampler {
    pub fn new(spec: &NoiseSpec, grid: &Grid) -> Result<Self> {
        let chol = match &spec.kind {
            NoiseKind::Kernel { table } => Some(kernel_factor(table, grid.cells())?),
            _ => None,
        };
        Ok(NoiseSampler { kind: spec.kind.clone(), grid: grid.clone(), channels: spec.channels, chol })
    }

    /// One increment field per channel over a step dt. White cells have variance
    /// dt / cell volume; kernel channels have covariance dt Q.
    pub fn sample(&self, dt: f64, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..self.channels).map(|_| self.sample_channel(dt, rng)).collect()
    }

    pub fn sample_channel(&self, dt: f64, rng: &mut Rng) -> Vec<f64> {
        let m = self.grid.cells();
        match &self.kind {
            NoiseKind::White => white(m, (dt / self.grid.cell_volume()).sqrt(), rng),
            NoiseKind::Regularized { cutoff } => {
                let mut x = white(m, (dt / self.grid.cell_volume()).sqrt(), rng);
                let c = *cutoff as i64;
                for axis in 0..self.grid.shape.len() {
                    axis_multiplier(&mut x, &self.grid.shape, axis, |k| if k.abs() <= c { 1.0 } else { 0.0 });
                }
                x
            }
            NoiseKind::Kernel { .. } => {
                let l = self.chol.as_ref().unwrap();
                let xi = white(m, dt.sqrt(), rng);
                (0..m).map(|i| (0..=i).map(|j| l[(i, j)] * xi[j]).sum()).collect()
            }
        }
    }
}

pub fn white(m: usize, sd: f64, rng: &mut Rng) -> Vec<f64> {
    (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

/// Lower factor L with L L^T = Q, allowing semidefinite tables (zero pivots).
fn kernel_factor(table: &[f64], m: usize) -> Result<DMatrix<f64>> {
    if table.len() != m * m {
        return Err(Error::InvalidInput(format!("kernel table needs {} entries", m * m)));
    }
    let q = DMatrix::from_row_slice(m, m, table);
    let scale = (0..m).map(|i| q[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in 0..i {
            if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput("kernel table is not symmetric".into()));
            }
        }
    }
    let tol = 1e-10 * scale;
    let mut l = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let mut d = q[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return Err(Error::NotPsd(d));
        }
        if d <= tol {
            // semidefinite direction: the rest of the column must vanish
            for i in j + 1..m {
                let mut s = q[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > 1e-6 * scale {
                    return Err(Error::NotPsd(d));
                }
            }
            continue;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in j + 1..m {
            let mut s = q[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Tabulate a kernel on a grid (cell centres taken as the grid nodes).
pub fn kernel_table(grid: &Grid, q: impl Fn(&[f64], &[f64]) -> f64) -> Vec<f64> {
    let pts: Vec<Vec<f64>> = (0..grid.cells()).map(|i| grid.point(i)).collect();
    let mut t = Vec::with_capacity(pts.len() * pts.len());
    for a in &pts {
        for b in &pts {
            t.push(q(a, b));
        }
    }
    t
}

/// Pullback of a kernel on the unit torus to the stretched torus:
/// Q^K(w, y) = Q(S_K w, S_K y) with S_K(w_1, ux) = (w_1 / sqrt K, ux).
pub fn rescale_kernel<Q>(q: Q, k: f64) -> impl Fn(&[f64], &[f64]) -> f64
where
    Q: Fn(&[f64], &[f64]) -> f64,
{
    let s = k.sqrt();
    move |a: &[f64], b: &[f64]| {
        let mut aa = a.to_vec();
        let mut bb = b.to_vec();
        aa[0] /= s;
        bb[0] /= s;
        q(&aa, &bb)
    }
}
