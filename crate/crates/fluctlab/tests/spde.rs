use fluctlab::analysis::{ensemble, mean, variance};
use fluctlab::profile::{solve_periodic_profile, solve_traveling_wave};
use fluctlab::reaction::BistableReaction;
use fluctlab::rng::stream;
use fluctlab::spde::fourier::RealFourier;
use fluctlab::spde::*;
use fluctlab::spectral::{discrete_equilibrium, lowest_eigenpairs, PeriodicOperator};
use rand::Rng as _;

fn zero(_: f64) -> f64 {
    0.0
}

fn one(_: f64) -> f64 {
    1.0
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_field(m: usize, seed: u64) -> Vec<f64> {
    let mut g = stream(seed, 99);
    (0..m).map(|_| g.gen_range(-1.0..1.0)).collect()
}

fn stretched(k: f64, nz: usize, d: usize, nu: usize, g: fn(f64) -> f64) -> (StretchedSpde, Vec<f64>) {
    let r = BistableReaction::cubic();
    let p = solve_periodic_profile(&r, k, nz).unwrap();
    let (v, _) = discrete_equilibrium(&p).unwrap();
    let sp = StretchedSpde::new(&r, &v, StretchedParams::linear(k, d, nu, 1e-3), &g, &g).unwrap();
    (sp, v)
}

#[test]
fn integrators_are_deterministic() {
    let (sp, _) = stretched(400.0, 128, 2, 8, one);
    let a = sp.run(&vec![0.0; 128 * 8], 0.05, 10, &mut stream(5, 1)).unwrap();
    let b = sp.run(&vec![0.0; 128 * 8], 0.05, 10, &mut stream(5, 1)).unwrap();
    assert_eq!(a, b);
    let c = sp.run(&vec![0.0; 128 * 8], 0.05, 10, &mut stream(6, 1)).unwrap();
    assert_ne!(a, c);

    let lp = LimitParams::new(1.2, -0.3, 2, 32, 1e-3);
    let a = integrate_limit_interface(&lp, &vec![0.0; 32], 0.5, 50, &mut stream(1, 0)).unwrap();
    let b = integrate_limit_interface(&lp, &vec![0.0; 32], 0.5, 50, &mut stream(1, 0)).unwrap();
    assert_eq!(a, b);

    let op = OffsiteParams { k: 100.0, c: 2.0, amp_grad: 1.0, amp_flip: 0.5, n: 64, dt: 1e-4 };
    let a = integrate_offsite(op.clone(), 0.01, 10, &mut stream(2, 0)).unwrap();
    let b = integrate_offsite(op, 0.01, 10, &mut stream(2, 0)).unwrap();
    assert_eq!(a, b);
    a.validate().unwrap();
}

#[test]
fn noise_free_limit_and_offsite_are_non_expanding() {
    let lp = LimitParams::new(0.0, 0.0, 2, 64, 1e-3);
    let init = random_field(64, 3);
    let s = integrate_limit_interface(&lp, &init, 1.0, 10, &mut stream(0, 0)).unwrap();
    let norms: Vec<f64> = s.snapshots.iter().map(|f| l2(f)).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{norms:?}");

    let sp = OffsiteSpde::new(OffsiteParams { k: 400.0, c: 2.0, amp_grad: 0.0, amp_flip: 0.0, n: 64, dt: 1e-3 }).unwrap();
    let mut st = OffsiteState { grad: random_field(64, 4), flip: random_field(64, 5) };
    let mut last = l2(&sp.field(&st));
    let mut g = stream(0, 0);
    for _ in 0..100 {
        sp.step(&mut st, &mut g);
        let now = l2(&sp.field(&st));
        assert!(now <= last * (1.0 + 1e-12));
        last = now;
    }
}

#[test]
fn noise_free_stretched_growth_is_bounded_by_lowest_eigenvalue() {
    for &(d, nu) in &[(1usize, 1usize), (2, 8)] {
        let k = 100.0;
        let nz = 256;
        let (sp, v) = stretched(k, nz, d, nu, zero);
        let op = PeriodicOperator::new((nz * nz) as f64 / k, v.iter().map(|&x| BistableReaction::cubic().df(x)).collect());
        let (lam, _) = lowest_eigenpairs(&op, 1).unwrap();
        let init = random_field(nz * nu, 7);
        let s = sp.run(&init, 1.0, 100, &mut stream(0, 0)).unwrap();
        for (t, f) in s.times.iter().zip(&s.snapshots) {
            let bound = (t * k * (-lam[0]).max(0.0)).exp();
            assert!(l2(f) <= bound * l2(&init) * (1.0 + 1e-3), "d = {d}, t = {t}");
        }
    }
}

#[test]
fn linear_sde_variance_is_exact() {
    // d psi = c dB in d = 1: Var psi(1) = c^2
    let c = 1.4f64.sqrt();
    let lp = LimitParams::new(c, 0.0, 1, 1, 0.01);
    let finals = ensemble(10_000, 17, |_, g| {
        let s = integrate_limit_interface(&lp, &[0.0], 1.0, 100, g).unwrap();
        s.snapshots.last().unwrap()[0]
    });
    let v = variance(&finals);
    let se = v * (2.0 / (finals.len() - 1) as f64).sqrt();
    assert!((v - c * c).abs() < 4.0 * se, "{v} vs {}", c * c);
    assert!(mean(&finals).abs() < 4.0 * (v / finals.len() as f64).sqrt());
}

#[test]
fn cubic_sde_weak_order() {
    let c = 1.4f64.sqrt();
    let c3 = -9.0 * 2f64.sqrt() / 35.0;
    let var_at = |dt: f64, seed: u64| {
        let lp = LimitParams::new(c, c3, 1, 1, dt);
        let finals = ensemble(10_000, seed, |_, g| {
            let s = integrate_limit_interface(&lp, &[0.0], 1.0, 1000, g).unwrap();
            s.snapshots.last().unwrap()[0]
        });
        let v = variance(&finals);
        (v, v * (2.0 / (finals.len() - 1) as f64).sqrt())
    };
    let (v1, s1) = var_at(0.02, 21);
    let (v2, s2) = var_at(0.01, 22);
    assert!((v1 - v2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt(), "{v1} {v2}");
    // the restoring cubic lowers the variance below the linear value
    assert!(v2 < c * c);
}

#[test]
fn white_noise_cell_variance() {
    let grid = Grid::torus(2, 8);
    let sampler = NoiseSampler::new(&NoiseSpec::white(1, 0), &grid).unwrap();
    let mut g = stream(3, 0);
    let mut xs = vec![];
    for _ in 0..2000 {
        xs.extend(sampler.sample_channel(0.01, &mut g));
    }
    let expect = 0.01 / grid.cell_volume();
    assert!((variance(&xs) / expect - 1.0).abs() < 0.03);
}

#[test]
fn regularised_noise_has_no_high_modes() {
    let grid = Grid::torus(1, 32);
    let spec = NoiseSpec { kind: NoiseKind::Regularized { cutoff: 3 }, channels: 1, seed: 0 };
    let sampler = NoiseSampler::new(&spec, &grid).unwrap();
    let x = sampler.sample_channel(1e-3, &mut stream(1, 0));
    let f = RealFourier::new(32);
    let mut b = vec![0.0; 32];
    f.forward(&x, &mut b);
    for r in 0..32 {
        if f.freq(r) > 3 {
            assert!(b[r].abs() < 1e-12);
        }
    }
    assert!(b.iter().any(|v| v.abs() > 1e-6));
}

#[test]
fn kernel_noise_covariance() {
    let grid = Grid::torus(1, 4);
    let q = |a: &[f64], b: &[f64]| (-(a[0] - b[0]).powi(2) * 4.0).exp();
    let table = kernel_table(&grid, q);
    let spec = NoiseSpec { kind: NoiseKind::Kernel { table: table.clone() }, channels: 1, seed: 0 };
    let sampler = NoiseSampler::new(&spec, &grid).unwrap();
    let mut g = stream(4, 0);
    let n = 40_000;
    let mut cov = vec![0.0; 16];
    for _ in 0..n {
        let x = sampler.sample_channel(0.5, &mut g);
        for i in 0..4 {
            for j in 0..4 {
                cov[i * 4 + j] += x[i] * x[j] / n as f64;
            }
        }
    }
    for (c, t) in cov.iter().zip(&table) {
        assert!((c - 0.5 * t).abs() < 0.02, "{c} vs {}", 0.5 * t);
    }
}

#[test]
fn kernel_tables_are_validated() {
    let grid = Grid::torus(1, 2);
    let bad = NoiseSpec { kind: NoiseKind::Kernel { table: vec![1.0, 2.0, 2.0, 1.0] }, channels: 1, seed: 0 };
    assert!(matches!(NoiseSampler::new(&bad, &grid), Err(fluctlab::error::Error::NotPsd(_))));
    let asym = NoiseSpec { kind: NoiseKind::Kernel { table: vec![1.0, 0.5, 0.0, 1.0] }, channels: 1, seed: 0 };
    assert!(NoiseSampler::new(&asym, &grid).is_err());
    // rank one is allowed
    let rank1 = NoiseSpec { kind: NoiseKind::Kernel { table: vec![1.0, 1.0, 1.0, 1.0] }, channels: 1, seed: 0 };
    let s = NoiseSampler::new(&rank1, &grid).unwrap();
    let x = s.sample_channel(1.0, &mut stream(0, 0));
    assert!((x[0] - x[1]).abs() < 1e-12);
}

#[test]
fn rescaled_kernel_pulls_back_first_axis() {
    let q = |a: &[f64], b: &[f64]| (a[0] - b[0]).abs() + 10.0 * (a[1] - b[1]).abs();
    let qk = rescale_kernel(q, 100.0);
    assert!((qk(&[5.0, 0.2], &[-5.0, 0.1]) - (1.0 + 1.0)).abs() < 1e-12);
}

#[test]
fn psi_scalings_round_trip() {
    let (sp, _) = stretched(400.0, 64, 1, 1, one);
    let s = sp.run(&vec![0.0; 64], 0.01, 5, &mut stream(8, 0)).unwrap();
    let back = s.to_psi_tilde().unwrap().to_psi().unwrap();
    for (a, b) in s.snapshots.iter().flatten().zip(back.snapshots.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
    assert!(s.to_psi().is_err());
    let mut bad = s.clone();
    bad.snapshots[1][3] = f64::NAN;
    assert!(bad.validate().is_err());
}

#[test]
fn explicit_drift_guard() {
    let r = BistableReaction::cubic();
    let grid = Grid::torus(1, 16);
    let u = vec![0.0; 16];
    let p = DensityParams::new(1e4, 1e4, 1, 0.1, 1e-2);
    let res = integrate_density_spde(&r, &u, &grid, &p, &NoiseSpec::white(2, 0), &one, &one, &vec![0.0; 16], &mut stream(0, 0));
    assert!(res.is_err());
    let p = DensityParams::new(1e4, 1.0, 4, 0.1, 1e-3);
    let res = integrate_density_spde(&r, &u, &grid, &p, &NoiseSpec::white(2, 0), &one, &one, &vec![0.0; 16], &mut stream(0, 0));
    assert!(res.is_err());
}

#[test]
fn conservative_noise_keeps_the_mean() {
    // with f = 0 around u = rho and no flip noise the spatial sum of Phi is conserved
    let r = BistableReaction::cubic();
    let grid = Grid::torus(1, 64);
    let u = vec![1.0 / 3f64.sqrt(); 64]; // f'(u) = 0
    let p = DensityParams::new(1e4, 10.0, 1, 0.05, 1e-4);
    let init = random_field(64, 9);
    let s = integrate_density_spde(&r, &u, &grid, &p, &NoiseSpec::white(2, 1), &one, &zero, &init, &mut stream(9, 0)).unwrap();
    let m0: f64 = init.iter().sum();
    for f in &s.snapshots {
        assert!((f.iter().sum::<f64>() - m0).abs() < 1e-9);
    }
}

#[test]
fn advected_translation_mode_is_stationary() {
    // u(x) = U(sqrt K x) with U'' + c U' + f(U) = 0; the translation mode u_x
    // solves Delta phi + c sqrt K d_x phi + K f'(u) phi = 0
    let r = BistableReaction::perturbed_cubic(0.1).unwrap();
    let sw = solve_traveling_wave(&r, 20.0, 4001).unwrap();
    let k = 100.0f64;
    let n = 1024;
    let grid = Grid::torus(1, n);
    let xs: Vec<f64> = (0..n).map(|i| grid.point(i)[0]).collect();
    let u: Vec<f64> = xs.iter().map(|&x| sw.eval(k.sqrt() * x)).collect();
    let init: Vec<f64> = xs.iter().map(|&x| k.sqrt() * sw.eval_deriv(k.sqrt() * x)).collect();
    let run = |adv: Option<f64>| {
        let mut p = DensityParams::new(1e6, k, 1, 0.05, 2e-5);
        p.sample_every = 2500;
        p.advection = adv;
        let s = integrate_density_spde(&r, &u, &grid, &p, &NoiseSpec::white(2, 0), &zero, &zero, &init, &mut stream(0, 0))
            .unwrap();
        let last = s.snapshots.last().unwrap();
        let d: Vec<f64> = last.iter().zip(&init).map(|(a, b)| a - b).collect();
        l2(&d) / l2(&init)
    };
    let with = run(Some(sw.speed));
    let without = run(None);
    assert!(with < 0.05, "{with}");
    assert!(without > 5.0 * with, "{without} vs {with}");
}
