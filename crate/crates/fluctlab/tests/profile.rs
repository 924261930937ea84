use fluctlab::profile::*;
use fluctlab::reaction::BistableReaction;
use proptest::prelude::*;

fn tanh_wave(z: f64) -> (f64, f64) {
    let t = (z / 2f64.sqrt()).tanh();
    (t, (1.0 - t * t) / 2f64.sqrt())
}

#[test]
fn standing_wave_interpolates_off_grid() {
    let r = BistableReaction::cubic();
    let w = solve_standing_wave(&r, 20.0, 4001).unwrap();
    assert_eq!(w.speed, 0.0);
    for i in 0..200 {
        let z = -25.0 + 0.2537 * i as f64;
        let (u, du) = tanh_wave(z);
        assert!((w.eval(z) - u).abs() < 1e-9, "z = {z}");
        assert!((w.eval_deriv(z) - du).abs() < 1e-8, "z = {z}");
    }
    assert!(w.ode_residual(&r) < 1e-8);
}

#[test]
fn standing_wave_rejects_unbalanced() {
    let r = BistableReaction::perturbed_cubic(0.1).unwrap();
    assert!(solve_standing_wave(&r, 20.0, 1001).is_err());
}

#[test]
fn tail_is_exponential() {
    let r = BistableReaction::cubic();
    let w = solve_standing_wave(&r, 15.0, 3001).unwrap();
    let (slope, _) = w.tail_fit(3.0);
    assert!(slope < 0.0);
    // 1 - tanh(z / sqrt 2) ~ 2 e^{-sqrt 2 z}
    assert!((slope + 2f64.sqrt()).abs() < 1e-2, "{slope}");
}

#[test]
fn quartic_wave_solves_ode() {
    let r = BistableReaction::balanced_quartic(0.5).unwrap();
    let w = solve_standing_wave(&r, 20.0, 4001).unwrap();
    assert!(w.ode_residual(&r) < 1e-6);
    assert!(w.u.windows(2).all(|p| p[1] >= p[0]));
    assert!((w.norm_sq - surface_tension(&r).unwrap()).abs() < 1e-10);
}

#[test]
fn traveling_wave_of_perturbed_cubic() {
    // U = tanh(z / sqrt 2) with speed c = sqrt 2 delta for f = (1 - u^2)(u + delta)
    let delta = 0.1;
    let r = BistableReaction::perturbed_cubic(delta).unwrap();
    let w = solve_traveling_wave(&r, 20.0, 4001).unwrap();
    assert!((w.speed.abs() - 2f64.sqrt() * delta).abs() < 1e-6, "{}", w.speed);
    assert!(w.ode_residual(&r) < 1e-6);
}

#[test]
fn periodic_profile_conserves_energy() {
    let r = BistableReaction::cubic();
    let p = solve_periodic_profile(&r, 400.0, 2048).unwrap();
    let e = p.energy();
    for x in &e {
        assert!((x - p.e_star).abs() < 1e-9, "{x} vs {}", p.e_star);
    }
    let (a, b) = p.excursion_lengths();
    assert!((a + b - 1.0).abs() < 1e-12);
    assert_eq!(p.crossings(), 2);
    assert!(p.junction_residual() < 1e-10);
}

#[test]
fn periodic_profile_below_threshold_fails() {
    let r = BistableReaction::cubic();
    assert!(solve_periodic_profile(&r, 30.0, 256).is_err());
    assert!(solve_periodic_profile(&r, 100.0, 4).is_err());
}

#[test]
fn derivative_gap_scales_like_k_quarter() {
    let r = BistableReaction::cubic();
    let sw = solve_standing_wave(&r, 30.0, 6001).unwrap();
    let mut scaled = vec![];
    let mut dv = vec![];
    for &k in &[100.0, 400.0, 1600.0, 6400.0] {
        let p = solve_periodic_profile(&r, k, 4096).unwrap();
        let (a, b) = hat_distance(&p, &sw);
        dv.push(a);
        scaled.push(b * k.powf(-0.25));
    }
    assert!(dv.windows(2).all(|w| w[1] < w[0]), "{dv:?}");
    let max = scaled.iter().cloned().fold(0.0, f64::max);
    assert!(max < 1.0, "{scaled:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn periodic_profile_is_reflection_symmetric(k in 60.0f64..3000.0, s in 0.0f64..0.5) {
        let r = BistableReaction::cubic();
        let p = solve_periodic_profile(&r, k, 64).unwrap();
        let (a, _) = p.eval(p.m1 + s);
        let (b, _) = p.eval(p.m1 - s);
        prop_assert!((a - b).abs() < 1e-9);
        let (c, _) = p.eval(p.m2 + s);
        let (d, _) = p.eval(p.m2 - s);
        prop_assert!((c - d).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_reaction_profile_is_reflection_symmetric(b in -0.6f64..0.6, s in 0.0f64..0.5) {
        let r = BistableReaction::balanced_quartic(b).unwrap();
        let k = 2.0 * r.k_threshold().max(50.0);
        let p = solve_periodic_profile(&r, k, 64).unwrap();
        let (u, du) = p.eval(p.m1 + s);
        let (v, dv) = p.eval(p.m1 - s);
        prop_assert!((u - v).abs() < 1e-9);
        prop_assert!((du + dv).abs() < 1e-6 * (1.0 + du.abs()));
    }

    #[test]
    fn mirrored_reactions_have_complementary_layers(b in 0.05f64..0.7, k in 100.0f64..1000.0) {
        // u -> -u maps balanced_quartic(b) to balanced_quartic(-b) and swaps the excursions
        let p = solve_periodic_profile(&BistableReaction::balanced_quartic(b).unwrap(), k, 16).unwrap();
        let q = solve_periodic_profile(&BistableReaction::balanced_quartic(-b).unwrap(), k, 16).unwrap();
        prop_assert!((p.h2 + q.h2 - 1.0).abs() < 1e-10);
        prop_assert!((p.delta_minus - q.delta_plus).abs() < 1e-10 * p.delta_minus.max(1e-300));
    }
}
