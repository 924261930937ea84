//! Interface tracking, decay fits and the statistical tests used to judge runs.

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::spde::FieldSeries;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Interface positions over time. `positions[t][j]` is the tracked crossing
/// along x_1 in transverse column j (one column in d = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTrack {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    /// All crossings found in the window for column 0.
    pub crossings: Vec<Vec<f64>>,
    /// Snapshots where some column had no crossing; their positions repeat the previous ones.
    pub lost: Vec<usize>,
    /// Factor applied to displacements by `rescaled` (1 without metadata).
    pub scale: f64,
}

impl InterfaceTrack {
    /// Displacements from the first position, multiplied by `scale`.
    pub fn rescaled(&self) -> Vec<Vec<f64>> {
        let Some(first) = self.positions.first() else { return vec![] };
        self.positions
            .iter()
            .map(|p| p.iter().zip(first).map(|(x, x0)| self.scale * (x - x0)).collect())
            .collect()
    }

    /// Column-0 rescaled increments over `lag` snapshots.
    pub fn increments(&self, lag: usize) -> Vec<f64> {
        let r = self.rescaled();
        (lag..r.len()).map(|i| r[i][0] - r[i - lag][0]).collect()
    }

    /// Largest jump between consecutive snapshots in unscaled units.
    pub fn max_jump(&self) -> f64 {
        self.positions
            .windows(2)
            .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Linear-interpolated crossings of `level` by the samples (x_i, f_i).
pub fn crossings(x: &[f64], f: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        let (a, b) = (f[i] - level, f[i + 1] - level);
        if a == 0.0 {
            out.push(x[i]);
        } else if a * b < 0.0 {
            out.push(x[i] + (x[i + 1] - x[i]) * a / (a - b));
        }
    }
    if let (Some(&xl), Some(&fl)) = (x.last(), f.last()) {
        if fl == level {
            out.push(xl);
        }
    }
    out
}

/// Track where the field crosses `rho_star` for x_1 in `window`.
///
/// In every column the crossing nearest to the previous one is followed
/// (the first snapshot takes the one nearest the window centre). With
/// `rescale`, displacements are scaled by N^{d/2} K^{-1/4} using the series metadata.
pub fn track_interface(series: &FieldSeries, rho_star: f64, window: (f64, f64), rescale: bool) -> Result<InterfaceTrack> {
    series.validate()?;
    let g = &series.grid;
    let d = g.dim();
    if d > 2 {
        return Err(Error::Dimension(d));
    }
    let n1 = g.shape[0];
    let cols = if d == 2 { g.shape[1] } else { 1 };
    let x: Vec<f64> = (0..n1).map(|i| g.point(i * cols)[0]).collect();
    let idx: Vec<usize> = (0..n1).filter(|&i| x[i] >= window.0 && x[i] <= window.1).collect();
    if idx.len() < 2 {
        return Err(Error::InvalidInput("window holds fewer than two grid points".into()));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let centre = 0.5 * (window.0 + window.1);
    let mut prev = vec![centre; cols];
    let mut track = InterfaceTrack {
        times: series.times.clone(),
        positions: Vec::with_capacity(series.len()),
        crossings: Vec::with_capacity(series.len()),
        lost: vec![],
        scale: 1.0,
    };
    for (s, snap) in series.snapshots.iter().enumerate() {
        let mut pos = prev.clone();
        let mut lost = false;
        for (j, slot) in pos.iter_mut().enumerate() {
            let f: Vec<f64> = idx.iter().map(|&i| snap[i * cols + j]).collect();
            let c = crossings(&xs, &f, rho_star);
            if j == 0 {
                track.crossings.push(c.clone());
            }
            match c.iter().min_by(|a, b| (*a - prev[j]).abs().total_cmp(&(*b - prev[j]).abs())) {
                Some(&best) => *slot = best,
                None => lost = true,
            }
        }
        if lost {
            track.lost.push(s);
        }
        prev = pos.clone();
        track.positions.push(pos);
    }
    if track.lost.len() == series.len() {
        return Err(Error::NoCrossing(0));
    }
    if rescale {
        let n = series
            .n_lattice
            .ok_or_else(|| Error::InvalidInput("rescaling needs the lattice size N".into()))?;
        track.scale = n.powf(d as f64 / 2.0) * series.k.powf(-0.25);
    }
    Ok(track)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// y = A x^slope
    Powerlaw,
    /// y = A exp(rate sqrt(x))
    ExpSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Root mean square residual.
    pub residual: f64,
    pub slope_stderr: f64,
}

pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidInput("regression needs two or more paired points".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, r2, residual: (sse / nf).sqrt(), slope_stderr })
}

/// Least squares in log coordinates; `slope` holds the exponent or rate.
pub fn fit_decay(xs: &[f64], ys: &[f64], model: DecayModel) -> Result<LinearFit> {
    if xs.len() < 3 || ys.len() != xs.len() {
        return Err(Error::InvalidInput("decay fit needs three or more points".into()));
    }
    if let Some(i) = ys.iter().position(|&y| !(y > 0.0)) {
        return Err(Error::NonPositive(i));
    }
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let lx: Vec<f64> = match model {
        DecayModel::Powerlaw => {
            if let Some(i) = xs.iter().position(|&x| !(x > 0.0)) {
                return Err(Error::NonPositive(i));
            }
            xs.iter().map(|x| x.ln()).collect()
        }
        DecayModel::ExpSqrt => {
            if let Some(i) = xs.iter().position(|&x| x < 0.0) {
                return Err(Error::NonPositive(i));
            }
            xs.iter().map(|x| x.sqrt()).collect()
        }
    };
    linear_regression(&lx, &ly)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov distance between the sample and the normal law with the sample's mean and deviation.
pub fn normal_ks_distance(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    let nf = n as f64;
    let m = samples.iter().sum::<f64>() / nf;
    let sd = (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("sample is constant".into()));
    }
    let mut z: Vec<f64> = samples.iter().map(|x| (x - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let mut dmax: f64 = 0.0;
    for (i, &v) in z.iter().enumerate() {
        let c = normal_cdf(v);
        dmax = dmax.max((i as f64 + 1.0) / nf - c).max(c - i as f64 / nf);
    }
    Ok(dmax)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianityTest {
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// Normality test with estimated parameters: the Kolmogorov distance to the
/// fitted normal, with the critical value from `resamples` normal samples of the same size.
pub fn gaussianity(samples: &[f64], alpha: f64, resamples: usize, seed: u64) -> Result<GaussianityTest> {
    if samples.len() < 100 {
        return Err(Error::InvalidInput("normality test needs at least 100 samples".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) || resamples < 10 {
        return Err(Error::InvalidInput("need 0 < alpha < 1 and at least 10 resamples".into()));
    }
    let statistic = normal_ks_distance(samples)?;
    let n = samples.len();
    let mut null: Vec<f64> = ensemble(resamples, seed, |_, rng| {
        let draw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        normal_ks_distance(&draw).unwrap_or(0.0)
    });
    null.sort_by(f64::total_cmp);
    let critical = quantile_sorted(&null, 1.0 - alpha);
    Ok(GaussianityTest { statistic, critical, alpha, pass: statistic <= critical })
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Percentile bootstrap interval of `stat` over resampled rows.
pub fn bootstrap_ci<T: Sync>(
    rows: &[T],
    stat: impl Fn(&[&T]) -> f64 + Sync,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<Interval> {
    if rows.is_empty() || resamples < 10 {
        return Err(Error::InvalidInput("bootstrap needs data and at least 10 resamples".into()));
    }
    let all: Vec<&T> = rows.iter().collect();
    let estimate = stat(&all);
    let n = rows.len();
    let mut reps = ensemble(resamples, seed, |_, rng| {
        let pick: Vec<&T> = (0..n).map(|_| &rows[rng.gen_range(0..n)]).collect();
        stat(&pick)
    });
    reps.sort_by(f64::total_cmp);
    let a = 0.5 * (1.0 - level);
    Ok(Interval { estimate, lo: quantile_sorted(&reps, a), hi: quantile_sorted(&reps, 1.0 - a) })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Run `f(path, rng)` for every path on its own stream of `seed`; results are in path order
/// and do not depend on the thread count.
pub fn ensemble<T: Send>(paths: usize, seed: u64, f: impl Fn(u64, &mut Rng) -> T + Sync) -> Vec<T> {
    (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i);
            f(i, &mut g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let x = [0.0, 1.0, 2.0];
        let f = [-1.0, 1.0, 3.0];
        assert_eq!(crossings(&x, &f, 0.0), vec![0.5]);
        assert_eq!(crossings(&x, &f, 2.0), vec![1.5]);
    }

    #[test]
    fn quantile_endpoints() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 0.5), 2.0);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
    }
}
