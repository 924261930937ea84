//! Periodic Schroedinger-type operators -c D^2 - q, their lowest eigenpairs,
//! the semigroup e^{-sA}, and the projections onto the layer modes.
//!
//! The torus operator L^eps = -eps^2 d^2 - f'(v) on n points and the stretched
//! operator -d_z^2 - f'(v(z / sqrt K)) on the same n points are the same matrix
//! (c = eps^2 / dx^2 = 1 / dz^2); only the quadrature weight differs.

use crate::error::{Error, Result};
use crate::profile::{PeriodicProfile, WaveProfile};
use crate::reaction::BistableReaction;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Unit torus, weight dx = 1/n.
    Torus,
    /// Stretched torus of length sqrt K, weight dz = sqrt(K)/n.
    Stretched,
}

/// A = -c D^2 - diag(q) with the periodic three-point second difference D^2.
#[derive(Debug, Clone)]
pub struct PeriodicOperator {
    pub c: f64,
    pub q: Vec<f64>,
}

impl PeriodicOperator {
    pub fn new(c: f64, q: Vec<f64>) -> Self {
        PeriodicOperator { c, q }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let l = x[(i + n - 1) % n];
            let r = x[(i + 1) % n];
            y[i] = self.c * (2.0 * x[i] - l - r) - self.q[i] * x[i];
        }
    }

    /// x^T A y written with forward differences, which keeps tiny Rayleigh
    /// quotients accurate.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n();
        let mut grad = 0.0;
        let mut pot = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            grad += (x[j] - x[i]) * (y[j] - y[i]);
            pot += self.q[i] * x[i] * y[i];
        }
        self.c * grad - pot
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn lower_bound(&self) -> f64 {
        -self.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 * self.c - self.q[i];
            m[(i, (i + 1) % n)] -= self.c;
            m[(i, (i + n - 1) % n)] -= self.c;
        }
        m
    }

    /// Factorisation of alpha I + beta A.
    pub fn shifted(&self, alpha: f64, beta: f64) -> CyclicSolver {
        let d = self.q.iter().map(|&q| alpha + beta * (2.0 * self.c - q)).collect();
        CyclicSolver::new(d, -beta * self.c)
    }
}

/// Solver for symmetric periodic tridiagonal systems with constant
/// off-diagonal e (Thomas elimination plus a Sherman-Morrison correction).
#[derive(Debug, Clone)]
pub struct CyclicSolver {
    e: f64,
    gamma: f64,
    l: Vec<f64>,
    w: Vec<f64>,
    z: Vec<f64>,
    z_den: f64,
}

impl CyclicSolver {
    pub fn new(d: Vec<f64>, e: f64) -> Self {
        let n = d.len();
        assert!(n >= 3, "cyclic solver needs n >= 3");
        let gamma = -d[0];
        let mut b = d;
        b[0] -= gamma;
        b[n - 1] -= e * e / gamma;
        let mut l = vec![0.0; n];
        let mut w = vec![0.0; n];
        w[0] = b[0];
        for i in 1..n {
            l[i] = e / w[i - 1];
            w[i] = b[i] - l[i] * e;
        }
        let mut s = CyclicSolver { e, gamma, l, w, z: vec![], z_den: 0.0 };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = e;
        s.z = s.tri(&u);
        s.z_den = 1.0 + s.z[0] + e * s.z[n - 1] / gamma;
        s
    }

    fn tri(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut y = r.to_vec();
        for i in 1..n {
            y[i] -= self.l[i] * y[i - 1];
        }
        y[n - 1] /= self.w[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (y[i] - self.e * y[i + 1]) / self.w[i];
        }
        y
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut x = self.tri(r);
        let fact = (x[0] + self.e * x[n - 1] / self.gamma) / self.z_den;
        for i in 0..n {
            x[i] -= fact * self.z[i];
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthonormalize(v: &mut [Vec<f64>]) {
    for i in 0..v.len() {
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = v.split_at_mut(i);
                let p = dot(&head[j], &tail[0]);
                axpy(-p, &head[j], &mut tail[0]);
            }
        }
        let nrm = dot(&v[i], &v[i]).sqrt();
        v[i].iter_mut().for_each(|x| *x /= nrm);
    }
}

/// Dense eigensolve is used up to this size; block shift-invert iteration above.
pub const DENSE_MAX: usize = 512;

/// Lowest k eigenpairs with Euclidean-normalised vectors, ascending.
pub fn lowest_eigenpairs(op: &PeriodicOperator, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if op.n() <= DENSE_MAX {
        dense_eigenpairs(op, k)
    } else {
        subspace_eigenpairs(op, k)
    }
}

pub fn dense_eigenpairs(op: &PeriodicOperator, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.n();
    let k = k.min(n);
    let eig = SymmetricEigen::new(op.dense());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vecs: Vec<Vec<f64>> = idx[..k]
        .iter()
        .map(|&j| eig.eigenvectors.column(j).iter().cloned().collect())
        .collect();
    let vals = vecs.iter().map(|v| op.form(v, v) / dot(v, v)).collect();
    Ok((vals, vecs))
}

pub fn subspace_eigenpairs(op: &PeriodicOperator, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.n();
    let p = (k + 10).min(n);
    let sigma = op.lower_bound() - 0.1 * (1.0 + op.lower_bound().abs());
    let solver = op.shifted(-sigma, 1.0);
    let mut rng = crate::rng::stream(0x5eed_5eed, n as u64);
    let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
    orthonormalize(&mut x);
    let tol_floor = 64.0 * f64::EPSILON * 4.0 * op.c.max(1.0);
    let mut ax = vec![0.0; n];
    for _ in 0..5000 {
        let mut y: Vec<Vec<f64>> = x.iter().map(|v| solver.solve(v)).collect();
        orthonormalize(&mut y);
        let h = DMatrix::from_fn(p, p, |i, j| op.form(&y[i], &y[j]));
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let theta: Vec<f64> = idx.iter().map(|&j| eig.eigenvalues[j]).collect();
        x = idx
            .iter()
            .map(|&j| {
                let mut v = vec![0.0; n];
                for (i, yi) in y.iter().enumerate() {
                    axpy(eig.eigenvectors[(i, j)], yi, &mut v);
                }
                v
            })
            .collect();
        let converged = (0..k).all(|j| {
            op.apply(&x[j], &mut ax);
            let res: f64 = ax.iter().zip(&x[j]).map(|(a, b)| (a - theta[j] * b).powi(2)).sum::<f64>().sqrt();
            res <= 1e-10 * theta[j].abs().max(1.0) + tol_floor
        });
        if converged {
            let vals = x[..k].iter().map(|v| op.form(v, v) / dot(v, v)).collect();
            x.truncate(k);
            return Ok((vals, x));
        }
    }
    Err(Error::NonConvergence("block shift-invert iteration".into()))
}

/// Solve A y = b for b orthogonal to the (Euclidean-orthonormal) columns of
/// `low`, with y in the same complement, by preconditioned conjugate gradients.
fn solve_complement(op: &PeriodicOperator, low: &[Vec<f64>], b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = op.n();
    let sigma = op.lower_bound() - 0.1 * (1.0 + op.lower_bound().abs());
    let pre = op.shifted(-sigma, 1.0);
    let proj = |v: &mut Vec<f64>| {
        for u in low {
            let p = dot(u, v);
            axpy(-p, u, v);
        }
    };
    let mut y = vec![0.0; n];
    let mut r = b.to_vec();
    proj(&mut r);
    let bn = dot(&r, &r).sqrt();
    if bn == 0.0 {
        return Ok(y);
    }
    let mut z = pre.solve(&r);
    proj(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..500 {
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut y);
        axpy(-alpha, &ap, &mut r);
        proj(&mut r);
        if dot(&r, &r).sqrt() <= tol * bn {
            proj(&mut y);
            return Ok(y);
        }
        z = pre.solve(&r);
        proj(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence("projected conjugate gradients".into()))
}

/// Grid values of the two-layer profile, refined by Newton to an exact zero
/// of the discrete equation eps^2 D^2 v + f(v) = 0. Newton steps are taken
/// in the complement of the two lowest modes, where the Jacobian is
/// well conditioned. Returns the values and the final sup residual.
pub fn discrete_equilibrium(p: &PeriodicProfile) -> Result<(Vec<f64>, f64)> {
    let n = p.n;
    let r = &p.reaction;
    let c = p.eps * p.eps * (n * n) as f64;
    let resid = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| c * (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) + r.f(v[i]))
            .collect()
    };
    let mut v = p.v.clone();
    let mut f = resid(&v);
    let mut sup = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..8 {
        if sup < 1e-13 {
            break;
        }
        let op = PeriodicOperator::new(c, v.iter().map(|&x| r.df(x)).collect());
        let (_, low) = lowest_eigenpairs(&op, 2)?;
        let step = solve_complement(&op, &low, &f, 1e-14)?;
        let trial: Vec<f64> = v.iter().zip(&step).map(|(a, b)| a + b).collect();
        let ft = resid(&trial);
        let st = ft.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if st >= sup {
            break;
        }
        v = trial;
        f = ft;
        sup = st;
    }
    Ok((v, sup))
}

/// Lowest eigenpairs of L^eps (torus) or of the stretched operator at a
/// two-layer profile. Vectors are normalised in the weighted discrete L^2.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub domain: Domain,
    pub k_stiff: f64,
    /// Grid spacing, which is also the inner-product weight.
    pub h: f64,
    pub op: PeriodicOperator,
    /// Profile values the operator was built from.
    pub v: Vec<f64>,
    /// Profile derivative in the domain's coordinate.
    pub vx: Vec<f64>,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Sup residual of the discrete stationary equation at `v`.
    pub equilibrium_residual: f64,
}

/// Which of the two lowest modes is the translation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeRoles {
    pub translation: usize,
    pub partner: usize,
}

impl SpectralDecomposition {
    pub fn new(p: &PeriodicProfile, k: usize, domain: Domain) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidInput("need at least three eigenpairs".into()));
        }
        let (v, res) = discrete_equilibrium(p)?;
        Self::from_values(p.k, &p.reaction, v, p.vx.clone(), k, domain, res)
    }

    /// Build without polishing the profile values.
    pub fn from_values(
        k_stiff: f64,
        r: &BistableReaction,
        v: Vec<f64>,
        vx_torus: Vec<f64>,
        k: usize,
        domain: Domain,
        equilibrium_residual: f64,
    ) -> Result<Self> {
        let n = v.len();
        let c = (n * n) as f64 / k_stiff;
        let h = match domain {
            Domain::Torus => 1.0 / n as f64,
            Domain::Stretched => k_stiff.sqrt() / n as f64,
        };
        let vx = match domain {
            Domain::Torus => vx_torus,
            Domain::Stretched => vx_torus.iter().map(|x| x / k_stiff.sqrt()).collect(),
        };
        let op = PeriodicOperator::new(c, v.iter().map(|&x| r.df(x)).collect());
        let (values, mut vectors) = lowest_eigenpairs(&op, k)?;
        let s = h.sqrt();
        for (j, x) in vectors.iter_mut().enumerate() {
            // translation-like vectors follow v_x, others are made positive-sum
            let anchor = if j < 2 { dot(x, &vx) } else { 0.0 };
            let sign = if anchor != 0.0 {
                anchor.signum()
            } else {
                let imax = (0..n).max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap()).unwrap();
                x[imax].signum()
            };
            x.iter_mut().for_each(|y| *y *= sign / s);
        }
        Ok(SpectralDecomposition { domain, k_stiff, h, op, v, vx, values, vectors, equilibrium_residual })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h * dot(a, b)
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Grid coordinate of node i (x in [-1/2, 1/2) or z = sqrt K x).
    pub fn coord(&self, i: usize) -> f64 {
        let x = -0.5 + i as f64 / self.n() as f64;
        match self.domain {
            Domain::Torus => x,
            Domain::Stretched => x * self.k_stiff.sqrt(),
        }
    }

    /// |<psi_j, t>| / ||t||.
    pub fn alignment(&self, j: usize, t: &[f64]) -> f64 {
        self.inner(&self.vectors[j], t).abs() / self.norm(t)
    }

    pub fn roles(&self) -> ModeRoles {
        if self.alignment(0, &self.vx) >= self.alignment(1, &self.vx) {
            ModeRoles { translation: 0, partner: 1 }
        } else {
            ModeRoles { translation: 1, partner: 0 }
        }
    }

    /// (lambda_1, lambda_2, lambda_3): translation, its exponentially close partner, next.
    pub fn labelled(&self) -> (f64, f64, f64) {
        let r = self.roles();
        (self.values[r.translation], self.values[r.partner], self.values[2])
    }

    pub fn rayleigh(&self, j: usize) -> f64 {
        let x = &self.vectors[j];
        self.op.form(x, x) / dot(x, x)
    }

    /// max |<psi_i, psi_j> - delta_ij|.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.vectors.len();
        let mut e = 0.0f64;
        for i in 0..k {
            for j in 0..=i {
                let d = self.inner(&self.vectors[i], &self.vectors[j]) - if i == j { 1.0 } else { 0.0 };
                e = e.max(d.abs());
            }
        }
        e
    }

    /// Euclidean residual ||A psi - lambda psi|| / ||psi|| of pair j.
    pub fn residual(&self, j: usize) -> f64 {
        let x = &self.vectors[j];
        let mut ax = vec![0.0; x.len()];
        self.op.apply(x, &mut ax);
        let r: f64 = ax.iter().zip(x).map(|(a, b)| (a - self.values[j] * b).powi(2)).sum();
        (r / dot(x, x)).sqrt()
    }

    /// Upper bound e^{s max(0, -lambda_min)} of the growth of e^{-sA}.
    pub fn growth_bound(&self, s: f64) -> f64 {
        (s * (-self.values[0]).max(0.0)).exp()
    }

    /// e^{-sA} g: exact on the stored modes, TR-BDF2 on the rest.
    pub fn semigroup(&self, s: f64, g: &[f64]) -> Result<Vec<f64>> {
        if s < 0.0 {
            return Err(Error::InvalidInput("negative time".into()));
        }
        if s == 0.0 {
            return Ok(g.to_vec());
        }
        let m = self.vectors.len();
        let mut rem = g.to_vec();
        let mut out = vec![0.0; g.len()];
        for j in 0..m {
            let a = self.inner(&self.vectors[j], g);
            axpy(-a, &self.vectors[j], &mut rem);
            axpy(a * (-s * self.values[j]).exp(), &self.vectors[j], &mut out);
        }
        let lam_next = self.values[m - 1].max(1e-3);
        if s * lam_next > 40.0 {
            return Ok(out);
        }
        let steps = ((s * lam_next / 0.5).ceil() as usize).max(4);
        let dt = s / steps as f64;
        let gam = 2.0 - 2f64.sqrt();
        if 1.0 + 0.5 * gam * dt * self.values[0] <= 0.0 {
            return Err(Error::InvalidInput("implicit step loses positivity".into()));
        }
        let a1 = 0.5 * gam * dt;
        let a2 = (1.0 - gam) / (2.0 - gam) * dt;
        let s1 = self.op.shifted(1.0, a1);
        let s2 = self.op.shifted(1.0, a2);
        let c1 = 1.0 / (gam * (2.0 - gam));
        let c0 = (1.0 - gam).powi(2) / (gam * (2.0 - gam));
        let n = g.len();
        let mut au = vec![0.0; n];
        for _ in 0..steps {
            self.op.apply(&rem, &mut au);
            let rhs: Vec<f64> = rem.iter().zip(&au).map(|(u, a)| u - a1 * a).collect();
            let ug = s1.solve(&rhs);
            let rhs2: Vec<f64> = ug.iter().zip(&rem).map(|(a, b)| c1 * a - c0 * b).collect();
            rem = s2.solve(&rhs2);
            for v in &self.vectors {
                let a = self.inner(v, &rem);
                axpy(-a, v, &mut rem);
            }
        }
        for (o, r) in out.iter_mut().zip(&rem) {
            *o += r;
        }
        Ok(out)
    }

    /// e^{t(-K A + Delta_ux)} on a field stored z-major, `nu` points in ux.
    pub fn semigroup_field(&self, t: f64, g: &[f64], nu: usize) -> Result<Vec<f64>> {
        let nz = self.n();
        if g.len() != nz * nu {
            return Err(Error::InvalidInput("field shape".into()));
        }
        let mut data = g.to_vec();
        if nu > 1 {
            heat_multiplier_rows(&mut data, nz, nu, t);
        }
        let mut col = vec![0.0; nz];
        for iu in 0..nu {
            for iz in 0..nz {
                col[iz] = data[iz * nu + iu];
            }
            let r = self.semigroup(t * self.k_stiff, &col)?;
            for iz in 0..nz {
                data[iz * nu + iu] = r[iz];
            }
        }
        Ok(data)
    }
}

/// Apply e^{t Delta} along each contiguous row of length nu (unit circle).
pub fn heat_multiplier_rows(data: &mut [f64], rows: usize, nu: usize, t: f64) {
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nu);
    let inv = planner.plan_fft_inverse(nu);
    let mut buf = vec![Complex::new(0.0, 0.0); nu];
    for r in 0..rows {
        let row = &mut data[r * nu..(r + 1) * nu];
        for (b, &x) in buf.iter_mut().zip(row.iter()) {
            *b = Complex::new(x, 0.0);
        }
        fwd.process(&mut buf);
        for (q, b) in buf.iter_mut().enumerate() {
            let k = if q <= nu / 2 { q as f64 } else { q as f64 - nu as f64 };
            *b *= (-t * (2.0 * PI * k).powi(2)).exp() / nu as f64;
        }
        inv.process(&mut buf);
        for (x, b) in row.iter_mut().zip(&buf) {
            *x = b.re;
        }
    }
}

/// <G, e> on a line grid with spacing h and the rank-one field <G, e> e.
pub fn projection_limit(sw: &WaveProfile, z: &[f64], g: &[f64], h: f64) -> (f64, Vec<f64>) {
    let e: Vec<f64> = z.iter().map(|&w| sw.e(w)).collect();
    let a = h * dot(g, &e);
    (a, e.iter().map(|x| a * x).collect())
}

/// exp(-1/t) / (exp(-1/t) + exp(-1/(1-t))), a C-infinity step from 0 to 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Cutoff supported on the periodic arc [a, b], equal to 1 on [a + 2 eps, b - 2 eps].
pub fn cutoff(x: f64, a: f64, b: f64, eps: f64) -> f64 {
    let len = b - a;
    let y = (x - a).rem_euclid(1.0);
    if y > len {
        return 0.0;
    }
    smooth_step(y / (2.0 * eps)) * smooth_step((len - y) / (2.0 * eps))
}

/// tau_j = -gamma^j v_x for the layers at 0 (j = 1) and h2 (j = 2).
pub fn tau_functions(p: &PeriodicProfile) -> [Vec<f64>; 2] {
    let arcs = [(p.m2 - 1.0, p.m1), (p.m1, p.m2)];
    arcs.map(|(a, b)| (0..p.n).map(|i| -cutoff(p.x[i], a, b, p.eps) * p.vx[i]).collect())
}

/// Orthogonal projection of w onto span{tau_1, tau_2} (the taus have disjoint supports).
pub fn projection_tau(p: &PeriodicProfile, w: &[f64]) -> Vec<f64> {
    let taus = tau_functions(p);
    let mut out = vec![0.0; w.len()];
    for t in &taus {
        let a = dot(w, t) / dot(t, t);
        axpy(a, t, &mut out);
    }
    out
}

/// Periodic heat kernel on the unit circle for d_t - d_x^2.
pub fn heat_kernel_torus(t: f64, x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    if t < 0.05 {
        let mut s = 0.0;
        for l in -12i32..=12 {
            let r = d - l as f64;
            let term = (-r * r / (4.0 * t)).exp();
            s += term;
        }
        s / (4.0 * PI * t).sqrt()
    } else {
        let mut s = 1.0;
        for k in 1..200 {
            let a = (-4.0 * PI * PI * (k * k) as f64 * t).exp();
            if a < 1e-17 {
                break;
            }
            s += 2.0 * a * (2.0 * PI * k as f64 * d).cos();
        }
        s
    }
}

/// Operator -(d^2 + c d + f'(U)) in the weight e^{cz}, written conservatively
/// so that it is exactly symmetric in the weighted inner product. Fields vanish
/// outside the grid.
pub struct WeightedOperator {
    pub h: f64,
    pub z: Vec<f64>,
    rho: Vec<f64>,
    rho_half: Vec<f64>,
    q: Vec<f64>,
}

impl WeightedOperator {
    pub fn new(sw: &WaveProfile, r: &BistableReaction) -> Result<Self> {
        let c = sw.speed;
        let zmax = sw.z0.abs().max(sw.z_max().abs());
        if c.abs() * zmax > 600.0 {
            return Err(Error::WeightOverflow(c.abs() * zmax));
        }
        let n = sw.len();
        let z: Vec<f64> = (0..n).map(|i| sw.z(i)).collect();
        Ok(WeightedOperator {
            h: sw.dz,
            rho: z.iter().map(|&x| (c * x).exp()).collect(),
            rho_half: (0..=n).map(|i| (c * (sw.z0 + (i as f64 - 0.5) * sw.dz)).exp()).collect(),
            q: sw.u.iter().map(|&u| r.df(u)).collect(),
            z,
        })
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h2 = self.h * self.h;
        (0..n)
            .map(|i| {
                let ul = if i > 0 { u[i - 1] } else { 0.0 };
                let ur = if i + 1 < n { u[i + 1] } else { 0.0 };
                let (fl, fr) = (self.rho_half[i], self.rho_half[i + 1]);
                -(fr * (ur - u[i]) - fl * (u[i] - ul)) / (h2 * self.rho[i]) - self.q[i] * u[i]
            })
            .collect()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.h * a.iter().zip(b).zip(&self.rho).map(|((x, y), w)| x * y * w).sum::<f64>()
    }

    /// |<Au, w> - <u, Aw>| in the weighted inner product.
    pub fn symmetry_residual(&self, u: &[f64], w: &[f64]) -> f64 {
        (self.inner(&self.apply(u), w) - self.inner(u, &self.apply(w))).abs()
    }
}

/// Weighted L^2 norm of (d^2 + c d + f'(U)) U' with fourth-order differences
/// on the interior grid.
pub fn generator_residual(sw: &WaveProfile, r: &BistableReaction) -> f64 {
    let n = sw.len();
    let h = sw.dz;
    let d = &sw.du;
    let mut acc = 0.0;
    for i in 2..n - 2 {
        let d1 = (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * h);
        let d2 = (-d[i + 2] + 16.0 * d[i + 1] - 30.0 * d[i] + 16.0 * d[i - 1] - d[i - 2]) / (12.0 * h * h);
        let val = d2 + sw.speed * d1 + r.df(sw.u[i]) * d[i];
        acc += (sw.speed * sw.z(i)).exp() * val * val * h;
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_solver_inverts() {
        let op = PeriodicOperator::new(3.0, (0..17).map(|i| (i as f64).sin()).collect());
        let s = op.shifted(5.0, 1.0);
        let b: Vec<f64> = (0..17).map(|i| (i * i) as f64 % 7.0).collect();
        let x = s.solve(&b);
        let mut ax = vec![0.0; 17];
        op.apply(&x, &mut ax);
        for i in 0..17 {
            assert!((5.0 * x[i] + ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn subspace_matches_dense() {
        let n = 200;
        let op = PeriodicOperator::new(
            (n * n) as f64 / 100.0,
            (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos() * 1.5).collect(),
        );
        let (a, _) = dense_eigenpairs(&op, 5).unwrap();
        let (b, _) = subspace_eigenpairs(&op, 5).unwrap();
        for j in 0..5 {
            assert!((a[j] - b[j]).abs() < 1e-9, "{j}: {} {}", a[j], b[j]);
        }
    }
}
