use fluctlab::analysis::{ensemble, mean, variance};
use fluctlab::particle::*;
use fluctlab::rng::stream;
use proptest::prelude::*;
use rand::Rng as _;
use std::f64::consts::PI;

fn random_lattice(n: usize, d: usize, seed: u64) -> Lattice {
    Init::Bernoulli(0.5).sample(n, d, &mut stream(seed, 7)).unwrap()
}

fn rates_2d() -> FlipRates {
    FlipRates::neighbour_sum("nn2", 2, &[0.1, 0.3, 1.0, 2.0, 4.0], &[4.0, 2.0, 1.0, 0.3, 0.1]).unwrap()
}

#[test]
fn ensemble_reaction_closed_form() {
    // nearest-neighbour rates in d = 1: binomial average over the two neighbours
    let a = [0.2, 0.5, 3.0];
    let b = [3.0, 0.5, 0.2];
    let r = FlipRates::default_bistable();
    for i in 0..=10 {
        let u = i as f64 / 10.0;
        let w = [(1.0 - u) * (1.0 - u), 2.0 * u * (1.0 - u), u * u];
        let create: f64 = (0..3).map(|k| w[k] * a[k]).sum();
        let annihilate: f64 = (0..3).map(|k| w[k] * b[k]).sum();
        let f = (1.0 - u) * create - u * annihilate;
        assert!((r.ensemble_f(u) - f).abs() < 1e-14);
        assert!((r.ensemble_f_poly().eval(u) - f).abs() < 1e-13);
        assert!((r.ensemble_c0(u) - ((1.0 - u) * create + u * annihilate)).abs() < 1e-14);
    }
}

#[test]
fn rate_tables_are_validated() {
    assert!(FlipRates::from_table("x", 1, 1, vec![1.0; 7]).is_err());
    assert!(FlipRates::from_table("x", 1, 0, vec![1.0, -1.0]).is_err());
    assert!(matches!(FlipRates::from_table("x", 2, 3, vec![]), Err(fluctlab::Error::WindowTooLarge(49))));
    assert!(FlipRates::constant(3, 1.0).is_err());
    assert_eq!(window_offsets(2, 1).len(), 9);
    assert_eq!(rates_2d().centre(), 4);
}

#[test]
fn lattice_geometry_is_periodic() {
    let l = random_lattice(8, 2, 1);
    assert_eq!(l.forward(7, 1), 0);
    assert_eq!(l.forward(56, 0), 0);
    assert_eq!(l.shift(0, &[-1, -1]), 63);
    assert_eq!(l.position(9), vec![0.125, 0.125]);
    assert!(Lattice::new(4, 1, vec![0, 1, 2, 0]).is_err());
    assert!(Lattice::new(4, 3, vec![0; 64]).is_err());
}

#[test]
fn no_reaction_conserves_mass() {
    let rates = FlipRates::default_bistable();
    let mut o = SimOptions::new(0.02);
    o.snapshot_dt = Some(0.002);
    let tr = simulate_gk(&rates, 128, 0.0, 1, &Init::Bernoulli(0.3), 5, &o).unwrap();
    let m0 = tr.initial.mass();
    assert!(tr.exchanges > 0);
    assert_eq!(tr.flips, 0);
    for s in &tr.snapshots {
        assert_eq!(s.iter().map(|&x| x as u64).sum::<u64>(), m0);
    }
    assert_eq!(tr.final_state.mass(), m0);
}

#[test]
fn no_exchange_means_only_flips() {
    let rates = FlipRates::default_bistable();
    let mut o = SimOptions::new(0.05);
    o.exchange_rate = Some(0.0);
    o.record_events = true;
    let tr = simulate_gk(&rates, 64, 50.0, 1, &Init::Bernoulli(0.5), 6, &o).unwrap();
    assert_eq!(tr.exchanges, 0);
    assert!(tr.flips > 0);
    let ev = tr.events.as_ref().unwrap();
    assert!(ev.iter().all(|e| e.kind == EventKind::Flip && e.p == e.q));
    assert!(ev.windows(2).all(|w| w[1].t >= w[0].t));
}

#[test]
fn simulation_is_reproducible() {
    let rates = FlipRates::default_bistable();
    let mut o = SimOptions::new(0.01);
    o.snapshot_dt = Some(0.005);
    let a = simulate_gk(&rates, 64, 10.0, 1, &Init::Bernoulli(0.5), 9, &o).unwrap();
    let b = simulate_gk(&rates, 64, 10.0, 1, &Init::Bernoulli(0.5), 9, &o).unwrap();
    assert_eq!(a.snapshots, b.snapshots);
    assert_eq!((a.proposals, a.exchanges, a.flips), (b.proposals, b.exchanges, b.flips));
    let c = simulate_gk(&rates, 64, 10.0, 1, &Init::Bernoulli(0.5), 10, &o).unwrap();
    assert_ne!(a.snapshots, c.snapshots);
}

#[test]
fn online_and_replayed_dynkin_agree() {
    let rates = FlipRates::default_bistable();
    let phi = sample_sites(128, 1, |x| (2.0 * PI * x[0]).sin());
    let mut o = SimOptions::new(0.01);
    o.record_events = true;
    o.test_function = Some(phi.clone());
    o.snapshot_dt = Some(0.0025);
    let tr = simulate_gk(&rates, 128, 20.0, 1, &Init::Bernoulli(0.5), 3, &o).unwrap();
    let online = tr.dynkin.as_ref().unwrap();
    let replay = martingale_qv(&tr, &phi).unwrap();
    assert_eq!(online.times.len(), replay.times.len());
    for (a, b) in online.qv_kawasaki.iter().zip(&replay.qv_kawasaki) {
        assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }
    for (a, b) in online.drift_integral.iter().zip(&replay.drift_integral) {
        assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }
    for (a, b) in online.pairing.iter().zip(&replay.pairing) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn martingale_variance_matches_carre_du_champ() {
    let n = 64;
    let rates = FlipRates::default_bistable();
    let phi = sample_sites(n, 1, |x| (2.0 * PI * x[0]).sin());
    let rows = ensemble(400, 31, |s, _| {
        let mut o = SimOptions::new(0.01);
        o.test_function = Some(phi.clone());
        let tr = simulate_gk(&rates, n, 10.0, 1, &Init::Bernoulli(0.5), s, &o).unwrap();
        let dy = tr.dynkin.unwrap();
        let m = *dy.martingale().last().unwrap() * (n as f64).sqrt();
        (m, dy.qv_kawasaki.last().unwrap() + dy.qv_glauber.last().unwrap())
    });
    let ms: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let qv = mean(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let v = variance(&ms);
    let se = v * (2.0 / (ms.len() - 1) as f64).sqrt();
    assert!((v - qv).abs() < 4.0 * se, "{v} vs {qv}");
    assert!(mean(&ms).abs() < 4.0 * (v / ms.len() as f64).sqrt());
}

#[test]
fn kawasaki_is_time_reversible() {
    // E[f(eta_0) g(eta_t)] = E[g(eta_0) f(eta_t)] under the Bernoulli measure
    let n = 32;
    let rates = FlipRates::default_bistable();
    let diffs = ensemble(4000, 41, |s, _| {
        let mut o = SimOptions::new(0.002);
        o.exchange_rate = Some((n * n) as f64);
        let tr = simulate_gk(&rates, n, 0.0, 1, &Init::Bernoulli(0.4), s, &o).unwrap();
        let (a, b) = (&tr.initial.eta, &tr.final_state.eta);
        let f = |e: &[u8]| e[0] as f64;
        let g = |e: &[u8]| (e[1] * e[2]) as f64;
        f(a) * g(b) - g(a) * f(b)
    });
    let m = mean(&diffs);
    let se = (variance(&diffs) / diffs.len() as f64).sqrt();
    assert!(m.abs() < 4.0 * se, "{m} +- {se}");
}

#[test]
fn run_file_round_trip() {
    let rates = FlipRates::default_bistable();
    let mut o = SimOptions::new(0.004);
    o.snapshot_dt = Some(0.001);
    let tr = simulate_gk(&rates, 100, 5.0, 1, &Init::Bernoulli(0.5), 2, &o).unwrap();
    let rf = RunFile::from(&tr);
    let mut buf = Vec::new();
    rf.write_to(&mut buf).unwrap();
    let back = RunFile::read_from(buf.as_slice()).unwrap();
    assert_eq!(rf, back);
    assert!(RunFile::read_from(&buf[..buf.len() - 3]).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(RunFile::read_from(bad.as_slice()).is_err());
}

#[test]
fn block_averages_preserve_the_mean() {
    let l = random_lattice(12, 2, 3);
    assert_eq!(default_block(12), 3);
    assert_eq!(default_block(64), 8);
    assert_eq!(default_block(7), 1);
    let b = empirical_density(&l, 3).unwrap();
    assert_eq!(b.len(), 16);
    let total: f64 = l.eta.iter().map(|&x| x as f64).sum::<f64>() / 144.0;
    assert!((mean(&b) - total).abs() < 1e-14);
    assert!(empirical_density(&l, 5).is_err());
}

#[test]
fn fluctuation_field_of_the_reference_vanishes() {
    let l = random_lattice(16, 1, 4);
    let u: Vec<f64> = l.eta.iter().map(|&x| x as f64).collect();
    assert!(fluctuation_field(&l, &u, 4).unwrap().iter().all(|&x| x == 0.0));
    let phi = vec![1.0; 16];
    assert_eq!(pairing(&l, &u, &phi), 0.0);
}

#[test]
fn k_presets() {
    assert!((k_preset(128, 1, KPreset::TwoSevenths) - 4.0).abs() < 1e-12);
    assert!((k_preset(32, 1, KPreset::TwoFifths) - 4.0).abs() < 1e-12);
    assert!((k_preset(32, 2, KPreset::TwoFifths) - 16.0).abs() < 1e-12);
}

#[test]
fn boltzmann_gibbs_residual_drops_with_order() {
    let rates = FlipRates::default_bistable();
    let r = rates.reaction().unwrap();
    let n = 4096;
    let u = vec![0.5; n];
    let l = Init::Bernoulli(0.5).sample(n, 1, &mut stream(3, 3)).unwrap();
    let (res1, mag) = boltzmann_gibbs_residual(&l, &rates, &r, &u, 64, 1).unwrap();
    let (res3, _) = boltzmann_gibbs_residual(&l, &rates, &r, &u, 64, 3).unwrap();
    assert!(mag > 0.0);
    assert!(res3 <= res1 * (1.0 + 1e-12), "{res3} {res1}");
}

fn tracker_matches_rebuild(n: usize, d: usize, rates: &FlipRates, seed: u64, moves: usize) -> Result<(), TestCaseError> {
    let mut lat = random_lattice(n, d, seed);
    let phi = sample_sites(n, d, |x| (2.0 * PI * x[0]).cos() + x.iter().sum::<f64>());
    let exch = (n * n) as f64;
    let mut tr = Tracker::new(&lat, rates, 3.0, exch, phi.clone());
    let mut g = stream(seed, 8);
    for _ in 0..moves {
        let p = g.gen_range(0..lat.sites());
        if g.gen_bool(0.5) {
            let old = [lat.eta[p]];
            lat.eta[p] ^= 1;
            tr.update(&lat, &[p], &old, EventKind::Flip);
        } else {
            let q = lat.forward(p, g.gen_range(0..d));
            if lat.eta[p] == lat.eta[q] {
                continue;
            }
            let old = [lat.eta[p], lat.eta[q]];
            lat.eta.swap(p, q);
            tr.update(&lat, &[p, q], &old, EventKind::Exchange);
        }
    }
    let fresh = Tracker::new(&lat, rates, 3.0, exch, phi.clone());
    let (a, b) = (tr.drifts(), fresh.drifts());
    prop_assert!((a.0 - b.0).abs() < 1e-8 * (1.0 + b.0.abs()));
    prop_assert!((a.1 - b.1).abs() < 1e-9 * (1.0 + b.1.abs()));
    let (qa, qb) = (tr.integrands(), fresh.integrands());
    prop_assert!((qa.0 - qb.0).abs() < 1e-8 * (1.0 + qb.0.abs()));
    prop_assert!((qa.1 - qb.1).abs() < 1e-9 * (1.0 + qb.1.abs()));
    prop_assert!((tr.pairing() - fresh.pairing()).abs() < 1e-12);
    // and the rebuilt drifts equal the closed-form expressions
    prop_assert!((b.0 - drift_kawasaki_laplacian(&lat, &phi)).abs() < 1e-9 * (1.0 + b.0.abs()));
    prop_assert!((b.1 - drift_glauber_cbar(&lat, rates, 3.0, &phi)).abs() < 1e-12 * (1.0 + b.1.abs()));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pack_unpack_round_trip(bits in proptest::collection::vec(0u8..2, 0..300)) {
        let w = pack(&bits);
        prop_assert_eq!(w.len(), bits.len().div_ceil(64));
        prop_assert_eq!(unpack(&w, bits.len()), bits);
    }

    #[test]
    fn kawasaki_drift_identity(seed in any::<u64>(), d in 1usize..3) {
        let n = if d == 1 { 50 } else { 9 };
        let lat = random_lattice(n, d, seed);
        let phi = sample_sites(n, d, |x| (2.0 * PI * x[0]).sin() * (1.0 + x[x.len() - 1]));
        let a = drift_kawasaki_bonds(&lat, &phi);
        let b = drift_kawasaki_laplacian(&lat, &phi);
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn glauber_drift_identity(seed in any::<u64>(), d in 1usize..3, k in 0.1f64..100.0) {
        let (n, rates) = if d == 1 { (40, FlipRates::default_bistable()) } else { (7, rates_2d()) };
        let lat = random_lattice(n, d, seed);
        let phi = sample_sites(n, d, |x| x.iter().map(|v| (2.0 * PI * v).cos()).sum());
        let a = drift_glauber_cbar(&lat, &rates, k, &phi);
        let b = drift_glauber_generator(&lat, &rates, k, &phi);
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn tracker_updates_match_rebuild(seed in any::<u64>(), d in 1usize..3) {
        if d == 1 {
            tracker_matches_rebuild(30, 1, &FlipRates::default_bistable(), seed, 200)?;
        } else {
            tracker_matches_rebuild(6, 2, &rates_2d(), seed, 200)?;
        }
    }
}
