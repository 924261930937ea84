use fluctlab::analysis::*;
use fluctlab::rng::stream;
use fluctlab::spde::{FieldSeries, Grid, Scaling};
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};

fn front_series(grid: Grid, centres: &[Vec<f64>], width: f64) -> FieldSeries {
    let cols = if grid.dim() == 2 { grid.shape[1] } else { 1 };
    let mut s = FieldSeries::new(grid.clone(), Scaling::Phi, 16.0, Some(64.0));
    for (t, c) in centres.iter().enumerate() {
        let f: Vec<f64> = (0..grid.cells()).map(|i| (-(grid.point(i)[0] - c[i % cols]) / width).tanh()).collect();
        s.push(t as f64 * 0.01, &f);
    }
    s
}

#[test]
fn powerlaw_and_exp_sqrt_rates_are_recovered() {
    let ks = [100.0, 200.0, 400.0, 800.0, 1600.0];
    let y: Vec<f64> = ks.iter().map(|k: &f64| 3.0 * k.powf(-0.25)).collect();
    let f = fit_decay(&ks, &y, DecayModel::Powerlaw).unwrap();
    assert!((f.slope + 0.25).abs() < 1e-12);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    assert!((f.r2 - 1.0).abs() < 1e-12);
    let y: Vec<f64> = ks.iter().map(|k: &f64| 0.5 * (-2.0 * k.sqrt()).exp()).collect();
    let f = fit_decay(&ks, &y, DecayModel::ExpSqrt).unwrap();
    assert!((f.slope + 2.0).abs() < 1e-10);
}

#[test]
fn noisy_powerlaw_fit() {
    let mut g = stream(11, 0);
    let ks: Vec<f64> = (0..20).map(|i| 50.0 * 1.3f64.powi(i)).collect();
    let y: Vec<f64> = ks.iter().map(|k| k.powf(-0.25) * (0.02 * g.sample::<f64, _>(StandardNormal)).exp()).collect();
    let f = fit_decay(&ks, &y, DecayModel::Powerlaw).unwrap();
    assert!((f.slope + 0.25).abs() < 0.02, "{}", f.slope);
    assert!((f.slope + 0.25).abs() < 4.0 * f.slope_stderr);
}

#[test]
fn fits_reject_bad_input() {
    assert!(fit_decay(&[1.0, 2.0], &[1.0, 0.5], DecayModel::Powerlaw).is_err());
    assert!(fit_decay(&[1.0, 2.0, 3.0], &[1.0, 0.0, 0.5], DecayModel::Powerlaw).is_err());
    assert!(fit_decay(&[0.0, 2.0, 3.0], &[1.0, 0.7, 0.5], DecayModel::Powerlaw).is_err());
    assert!(fit_decay(&[0.0, 2.0, 3.0], &[1.0, 0.7, 0.5], DecayModel::ExpSqrt).is_ok());
    assert!(linear_regression(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn regression_matches_hand_computation() {
    // points (0,1), (1,2), (2,2): slope 1/2, intercept 7/6
    let f = linear_regression(&[0.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).unwrap();
    assert!((f.slope - 0.5).abs() < 1e-15);
    assert!((f.intercept - 7.0 / 6.0).abs() < 1e-15);
    // sse = 1/6, syy = 2/3
    assert!((f.r2 - 0.75).abs() < 1e-14);
    assert!((f.slope_stderr - (1.0f64 / 6.0 / 2.0).sqrt()).abs() < 1e-14);
}

#[test]
fn normal_cdf_values() {
    assert_eq!(normal_cdf(0.0), 0.5);
    assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-15);
    assert!((normal_cdf(-1.959963984540054) - 0.025).abs() < 1e-15);
    assert!(normal_cdf(-40.0) >= 0.0);
}

#[test]
fn gaussianity_separates_laws() {
    let mut g = stream(5, 0);
    let normal: Vec<f64> = (0..1000).map(|_| 2.0 + 3.0 * g.sample::<f64, _>(StandardNormal)).collect();
    let uniform: Vec<f64> = (0..1000).map(|_| g.gen::<f64>()).collect();
    let expo: Vec<f64> = (0..1000).map(|_| g.sample::<f64, _>(Exp1)).collect();
    assert!(gaussianity(&normal, 0.01, 200, 1).unwrap().pass);
    assert!(!gaussianity(&uniform, 0.01, 200, 1).unwrap().pass);
    assert!(!gaussianity(&expo, 0.01, 200, 1).unwrap().pass);
    assert!(gaussianity(&normal[..50], 0.01, 200, 1).is_err());
    assert!(gaussianity(&normal, 1.5, 200, 1).is_err());
}

#[test]
fn bootstrap_interval_covers_the_mean() {
    let mut hits = 0;
    for rep in 0..40 {
        let mut g = stream(100 + rep, 0);
        let xs: Vec<f64> = (0..200).map(|_| 1.0 + g.sample::<f64, _>(StandardNormal)).collect();
        let ci = bootstrap_ci(&xs, |r| r.iter().map(|x| **x).sum::<f64>() / r.len() as f64, 400, 0.95, rep).unwrap();
        assert!(ci.lo <= ci.estimate && ci.estimate <= ci.hi);
        hits += ci.contains(1.0) as usize;
    }
    assert!(hits >= 34, "{hits}");
}

#[test]
fn tracks_a_moving_front() {
    let grid = Grid::torus(1, 512);
    let centres: Vec<Vec<f64>> = (0..20).map(|t| vec![0.01 * t as f64 - 0.05]).collect();
    let s = front_series(grid, &centres, 0.04);
    let tr = track_interface(&s, 0.0, (-0.3, 0.3), false).unwrap();
    assert!(tr.lost.is_empty());
    for (p, c) in tr.positions.iter().zip(&centres) {
        assert!((p[0] - c[0]).abs() < 1e-4, "{} {}", p[0], c[0]);
    }
    assert!((tr.max_jump() - 0.01).abs() < 1e-4);
    let inc = tr.increments(2);
    assert!(inc.iter().all(|d| (d - 0.02).abs() < 1e-4));
}

#[test]
fn rescaling_uses_lattice_size_and_stiffness() {
    let centres: Vec<Vec<f64>> = (0..3).map(|t| vec![0.01 * t as f64]).collect();
    let s = front_series(Grid::torus(1, 256), &centres, 0.04);
    let tr = track_interface(&s, 0.0, (-0.3, 0.3), true).unwrap();
    // 64^{1/2} 16^{-1/4} = 4
    assert!((tr.scale - 4.0).abs() < 1e-12);
    assert!((tr.rescaled()[2][0] - 0.08).abs() < 1e-3);
    let mut bare = s.clone();
    bare.n_lattice = None;
    assert!(track_interface(&bare, 0.0, (-0.3, 0.3), true).is_err());
}

#[test]
fn tracks_each_column_in_two_dimensions() {
    let grid = Grid::torus(2, 64);
    let centres: Vec<Vec<f64>> = (0..4)
        .map(|t| (0..64).map(|j| 0.05 * (j as f64 / 64.0 * std::f64::consts::TAU).sin() + 0.01 * t as f64).collect())
        .collect();
    let s = front_series(grid, &centres, 0.08);
    let tr = track_interface(&s, 0.0, (-0.4, 0.4), false).unwrap();
    for (p, c) in tr.positions.iter().zip(&centres) {
        for j in 0..64 {
            assert!((p[j] - c[j]).abs() < 2e-3, "{} {}", p[j], c[j]);
        }
    }
}

#[test]
fn lost_interface_is_reported() {
    let grid = Grid::torus(1, 64);
    let mut s = FieldSeries::new(grid, Scaling::Phi, 1.0, None);
    s.push(0.0, &[1.0; 64]);
    assert!(track_interface(&s, 0.0, (-0.3, 0.3), false).is_err());
    let centres = vec![vec![0.0]];
    let mut s = front_series(Grid::torus(1, 64), &centres, 0.05);
    s.push(0.01, &[1.0; 64]);
    let tr = track_interface(&s, 0.0, (-0.3, 0.3), false).unwrap();
    assert_eq!(tr.lost, vec![1]);
    assert_eq!(tr.positions[1], tr.positions[0]);
}

#[test]
fn ensemble_ignores_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            ensemble(64, 9, |i, g| (i, g.gen::<u64>(), g.sample::<f64, _>(StandardNormal)))
        })
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert!(a.iter().enumerate().all(|(i, r)| r.0 == i as u64));
    assert_ne!(a[0].1, a[1].1);
}

#[test]
fn summary_statistics() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(mean(&xs), 2.5);
    assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
    assert!((correlation(&xs, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-15);
    assert!((correlation(&xs, &[-1.0, -2.0, -3.0, -4.0]) + 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_is_scale_invariant(a in 0.01f64..100.0, p in -2.0f64..2.0, c in 0.1f64..10.0) {
        let xs = [1.0, 2.0, 5.0, 9.0, 30.0];
        let y: Vec<f64> = xs.iter().map(|x: &f64| a * x.powf(p) * (1.0 + 0.1 * x.sin())).collect();
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let f = fit_decay(&xs, &y, DecayModel::Powerlaw).unwrap();
        let g = fit_decay(&xs, &yc, DecayModel::Powerlaw).unwrap();
        prop_assert!((f.slope - g.slope).abs() < 1e-10);
        prop_assert!((g.intercept - f.intercept - c.ln()).abs() < 1e-10);
    }

    #[test]
    fn tracking_is_translation_equivariant(m in -40i64..40, c0 in -0.1f64..0.1) {
        let n = 512;
        let h = 1.0 / n as f64;
        let grid = Grid::torus(1, n);
        let base = front_series(grid.clone(), &[vec![c0], vec![c0 + 0.013]], 0.05);
        let mut shifted = base.clone();
        for snap in shifted.snapshots.iter_mut() {
            snap.rotate_right(m.rem_euclid(n as i64) as usize);
        }
        let window = (-0.35, 0.35);
        let a = track_interface(&base, 0.0, window, false).unwrap();
        let b = track_interface(&shifted, 0.0, window, false).unwrap();
        for (p, q) in a.positions.iter().zip(&b.positions) {
            prop_assert!((q[0] - p[0] - m as f64 * h).abs() < 1e-12);
        }
    }
}
