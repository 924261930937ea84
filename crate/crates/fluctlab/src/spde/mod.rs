//! Noises and integrators for the fluctuation SPDEs.
//!
//! Linear stiff parts are treated implicitly with the stochastic
//! Crank-Nicolson (theta = 1/2) scheme, noise entering through the implicit
//! solve. For a linear equation this reproduces the exact stationary
//! covariance at any step size. Nonlinear drifts are explicit.

mod density;
pub mod fourier;
mod limit;
mod noise;
mod offsite;
mod stretched;

pub use density::*;
pub use limit::*;
pub use noise::*;
pub use offsite::*;
pub use stretched::*;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Runs abort once the sup norm exceeds this.
pub const BLOWUP_CAP: f64 = 1e6;

/// Periodic box grid; row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub lengths: Vec<f64>,
    /// Coordinate of node 0 on each axis.
    pub origin: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, lengths: Vec<f64>) -> Self {
        let origin = lengths.iter().map(|l| -0.5 * l).collect();
        Grid { shape, lengths, origin }
    }

    /// Unit torus T^d with n points per axis.
    pub fn torus(d: usize, n: usize) -> Self {
        Grid::new(vec![n; d], vec![1.0; d])
    }

    /// sqrt(K) T x T^{d-1}: nz points in the stretched direction, nu in the others.
    pub fn stretched(k: f64, nz: usize, d: usize, nu: usize) -> Self {
        let mut shape = vec![nz];
        let mut lengths = vec![k.sqrt()];
        for _ in 1..d {
            shape.push(nu);
            lengths.push(1.0);
        }
        Grid::new(shape, lengths)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.shape[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Coordinates of flat index i.
    pub fn point(&self, mut i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        for a in (0..self.dim()).rev() {
            let j = i % self.shape[a];
            i /= self.shape[a];
            p[a] = self.origin[a] + j as f64 * self.spacing(a);
        }
        p
    }
}

/// Which scaling of the fluctuation a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    /// Phi on T^d.
    Phi,
    /// Phi(t, z / sqrt K, ux) on the stretched torus.
    PsiTilde,
    /// K^{-3/4} PsiTilde.
    Psi,
    /// Interface field psi on T^{d-1}.
    Interface,
    /// Off-interface field.
    Offsite,
    /// Block-averaged particle density.
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSeries {
    pub grid: Grid,
    pub scaling: Scaling,
    pub n_lattice: Option<f64>,
    /// Stiffness K; 0 for interface series, which carry no K.
    pub k: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// Set when a guard stopped the run; the series holds what was computed.
    pub aborted: Option<String>,
}

impl FieldSeries {
    pub fn new(grid: Grid, scaling: Scaling, k: f64, n_lattice: Option<f64>) -> Self {
        FieldSeries { grid, scaling, n_lattice, k, times: vec![], snapshots: vec![], aborted: None }
    }

    pub fn push(&mut self, t: f64, field: &[f64]) {
        self.times.push(t);
        self.snapshots.push(field.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Times strictly increasing and every value finite.
    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times not strictly increasing".into()));
        }
        if self.snapshots.iter().any(|s| s.len() != self.grid.cells() || s.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("bad snapshot".into()));
        }
        Ok(())
    }

    /// PsiTilde -> Psi.
    pub fn to_psi(&self) -> Result<FieldSeries> {
        if self.scaling != Scaling::PsiTilde {
            return Err(Error::InvalidInput(format!("cannot rescale {:?} to Psi", self.scaling)));
        }
        let s = self.k.powf(-0.75);
        let mut out = self.clone();
        out.scaling = Scaling::Psi;
        out.snapshots.iter_mut().for_each(|f| f.iter_mut().for_each(|x| *x *= s));
        Ok(out)
    }

    /// Psi -> PsiTilde.
    pub fn to_psi_tilde(&self) -> Result<FieldSeries> {
        if self.scaling != Scaling::Psi {
            return Err(Error::InvalidInput(format!("cannot rescale {:?} to PsiTilde", self.scaling)));
        }
        let s = self.k.powf(0.75);
        let mut out = self.clone();
        out.scaling = Scaling::PsiTilde;
        out.snapshots.iter_mut().for_each(|f| f.iter_mut().for_each(|x| *x *= s));
        Ok(out)
    }
}

pub(crate) fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Periodic discrete divergence along `axis` of edge values (edge j sits
/// between nodes j and j+1): out_j += (e_j - e_{j-1}) / h.
pub(crate) fn add_divergence(out: &mut [f64], edges: &[f64], shape: &[usize], axis: usize, h: f64) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for j in 0..n {
                let jm = (j + n - 1) % n;
                out[base + j * stride] += (edges[base + j * stride] - edges[base + jm * stride]) / h;
            }
        }
    }
}

/// Node index of the neighbour j+1 along `axis`.
pub(crate) fn next_index(i: usize, shape: &[usize], axis: usize) -> usize {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let j = (i / stride) % n;
    if j + 1 == n {
        i + stride - n * stride
    } else {
        i + stride
    }
}
