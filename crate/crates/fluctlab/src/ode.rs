//! Adaptive Dormand-Prince 5(4) for small systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate y' = f(t, y) from t0 to t1 (either direction), landing exactly on t1.
pub fn dopri5<F>(f: F, t0: f64, y0: &[f64], t1: f64, rtol: f64, atol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let dir = (t1 - t0).signum();
    if t1 == t0 {
        return Ok(y);
    }
    let mut h = 0.01 * (t1 - t0).abs();
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::NonConvergence("dopri5 step limit".into()));
        }
        if h > (t1 - t).abs() {
            h = (t1 - t).abs();
        }
        let hs = h * dir;
        f(t, &y, &mut k[0]);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += hs * A[s][j] * k[j][i];
                }
                ytmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + C[s] * hs, &ytmp, &mut tail[0]);
        }
        let mut err = 0.0f64;
        let mut y5 = vec![0.0; n];
        for i in 0..n {
            let mut a5 = y[i];
            let mut a4 = y[i];
            for s in 0..7 {
                a5 += hs * B5[s] * k[s][i];
                a4 += hs * B4[s] * k[s][i];
            }
            y5[i] = a5;
            let sc = atol + rtol * y[i].abs().max(a5.abs());
            err = err.max(((a5 - a4) / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            if h < 1e-300 {
                return Err(Error::NonConvergence("dopri5 non-finite".into()));
            }
            continue;
        }
        if err <= 1.0 {
            t += hs;
            if (t1 - t) * dir <= 1e-15 * t1.abs().max(1.0) {
                t = t1;
            }
            y = y5;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 * t1.abs().max(t0.abs()).max(1e-300) {
            return Err(Error::NonConvergence("dopri5 step underflow".into()));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential() {
        let y = dopri5(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 3.0, 1e-12, 1e-14).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
    }
}
