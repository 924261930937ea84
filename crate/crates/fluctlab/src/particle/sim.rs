//! Continuous-time simulation of the Glauber-Kawasaki process
//! L_N = N^2 L_K + K L_G on the discrete torus (simple exclusion for L_K).

use super::rates::FlipRates;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

/// Occupation field on T_N^d, flat row-major index (x_1 slowest).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub n: usize,
    pub d: usize,
    pub eta: Vec<u8>,
}

impl Lattice {
    pub fn new(n: usize, d: usize, eta: Vec<u8>) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::Dimension(d));
        }
        if eta.len() != n.pow(d as u32) || eta.iter().any(|&x| x > 1) {
            return Err(Error::InvalidInput("occupations must be 0/1 with N^d sites".into()));
        }
        Ok(Lattice { n, d, eta })
    }

    pub fn sites(&self) -> usize {
        self.eta.len()
    }

    pub fn mass(&self) -> u64 {
        self.eta.iter().map(|&x| x as u64).sum()
    }

    /// Site shifted by `off` (one entry per axis), periodic.
    pub fn shift(&self, p: usize, off: &[i64]) -> usize {
        let n = self.n as i64;
        match self.d {
            1 => (p as i64 + off[0]).rem_euclid(n) as usize,
            _ => {
                let (a, b) = ((p / self.n) as i64, (p % self.n) as i64);
                ((a + off[0]).rem_euclid(n) * n + (b + off[1]).rem_euclid(n)) as usize
            }
        }
    }

    /// Neighbour of p in the positive direction of `axis`.
    pub fn forward(&self, p: usize, axis: usize) -> usize {
        let mut off = vec![0i64; self.d];
        off[axis] = 1;
        self.shift(p, &off)
    }

    /// Macroscopic position p / N per axis.
    pub fn position(&self, p: usize) -> Vec<f64> {
        match self.d {
            1 => vec![p as f64 / self.n as f64],
            _ => vec![(p / self.n) as f64 / self.n as f64, (p % self.n) as f64 / self.n as f64],
        }
    }
}

/// Initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// Product Bernoulli with constant mean.
    Bernoulli(f64),
    /// Product Bernoulli with the given mean at every site.
    Profile(Vec<f64>),
    Config(Vec<u8>),
}

impl Init {
    pub fn sample(&self, n: usize, d: usize, rng: &mut Rng) -> Result<Lattice> {
        let m = n.pow(d as u32);
        let eta = match self {
            Init::Bernoulli(u) => (0..m).map(|_| (rng.gen::<f64>() < *u) as u8).collect(),
            Init::Profile(p) => {
                if p.len() != m {
                    return Err(Error::InvalidInput("profile length must be N^d".into()));
                }
                p.iter().map(|&u| (rng.gen::<f64>() < u) as u8).collect()
            }
            Init::Config(c) => c.clone(),
        };
        Lattice::new(n, d, eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Exchange,
    Flip,
}

/// An effective event (configuration changed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub p: u32,
    /// Partner site for exchanges; equal to p for flips.
    pub q: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOptions {
    pub t_end: f64,
    /// Exchange rate per bond; defaults to N^2. Zero switches Kawasaki off.
    pub exchange_rate: Option<f64>,
    /// Store a snapshot at multiples of this time.
    pub snapshot_dt: Option<f64>,
    /// Keep the log of effective events (needed for replayed estimators).
    pub record_events: bool,
    /// Values phi(p/N) of a test function for online Dynkin diagnostics.
    pub test_function: Option<Vec<f64>>,
    /// Refuse runs whose expected number of proposals exceeds this.
    pub max_events: f64,
}

impl SimOptions {
    pub fn new(t_end: f64) -> Self {
        SimOptions {
            t_end,
            exchange_rate: None,
            snapshot_dt: None,
            record_events: false,
            test_function: None,
            max_events: 2e9,
        }
    }
}

/// Time series of the Dynkin decomposition of <rho^N, phi>.
///
/// `qv_*` are predictable quadratic variations of the fluctuation martingale
/// N^{d/2} M^N(phi), i.e. N^d times the time integral of the carre du champ.
/// `jumps_*` are the corresponding sums of squared jumps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DynkinSeries {
    pub times: Vec<f64>,
    pub pairing: Vec<f64>,
    pub drift_integral: Vec<f64>,
    pub qv_kawasaki: Vec<f64>,
    pub qv_glauber: Vec<f64>,
    pub jumps_kawasaki: Vec<f64>,
    pub jumps_glauber: Vec<f64>,
}

impl DynkinSeries {
    /// M_t = <rho(t), phi> - <rho(0), phi> - int_0^t b ds at each record.
    pub fn martingale(&self) -> Vec<f64> {
        let p0 = self.pairing.first().copied().unwrap_or(0.0);
        self.pairing.iter().zip(&self.drift_integral).map(|(p, b)| p - p0 - b).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeTrajectory {
    pub n: usize,
    pub d: usize,
    pub k: f64,
    pub exchange_rate: f64,
    pub seed: u64,
    pub rates: FlipRates,
    pub initial: Lattice,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<u8>>,
    pub proposals: u64,
    pub exchanges: u64,
    pub flips: u64,
    pub events: Option<Vec<Event>>,
    pub dynkin: Option<DynkinSeries>,
    pub final_state: Lattice,
}

/// Incrementally maintained observables for a test function phi.
pub struct Tracker<'a> {
    rates: &'a FlipRates,
    offsets: Vec<Vec<i64>>,
    k: f64,
    nd: f64,
    exch: f64,
    phi: Vec<f64>,
    lap_phi: Vec<f64>,
    c: Vec<f64>,
    pair: f64,
    b_k: f64,
    b_g: f64,
    q_k: f64,
    q_g: f64,
    bond_terms: Vec<f64>,
    pub drift_int: f64,
    pub qvk_int: f64,
    pub qvg_int: f64,
    pub jumps_k: f64,
    pub jumps_g: f64,
}

/// Window configuration index of site p.
pub fn window_index(lat: &Lattice, offsets: &[Vec<i64>], p: usize) -> usize {
    let mut idx = 0usize;
    for (i, off) in offsets.iter().enumerate() {
        if lat.eta[lat.shift(p, off)] == 1 {
            idx |= 1 << i;
        }
    }
    idx
}

/// Discrete Laplacian N^2 sum_{|q-p|=1} (phi_q - phi_p).
pub fn discrete_laplacian(lat_n: usize, d: usize, phi: &[f64]) -> Vec<f64> {
    let probe = Lattice { n: lat_n, d, eta: vec![0; phi.len()] };
    let n2 = (lat_n * lat_n) as f64;
    (0..phi.len())
        .map(|p| {
            let mut s = 0.0;
            for a in 0..d {
                let mut off = vec![0i64; d];
                off[a] = 1;
                s += phi[probe.shift(p, &off)] - phi[p];
                off[a] = -1;
                s += phi[probe.shift(p, &off)] - phi[p];
            }
            n2 * s
        })
        .collect()
}

impl<'a> Tracker<'a> {
    pub fn new(lat: &Lattice, rates: &'a FlipRates, k: f64, exch: f64, phi: Vec<f64>) -> Self {
        let nd = lat.sites() as f64;
        let lap_phi = discrete_laplacian(lat.n, lat.d, &phi);
        let offsets = rates.offsets();
        let mut t = Tracker {
            rates,
            offsets,
            k,
            nd,
            exch,
            phi,
            lap_phi,
            c: vec![0.0; lat.sites()],
            pair: 0.0,
            b_k: 0.0,
            b_g: 0.0,
            q_k: 0.0,
            q_g: 0.0,
            bond_terms: vec![0.0; lat.sites() * lat.d],
            drift_int: 0.0,
            qvk_int: 0.0,
            qvg_int: 0.0,
            jumps_k: 0.0,
            jumps_g: 0.0,
        };
        t.recompute(lat);
        t
    }

    fn bond_term(&self, lat: &Lattice, p: usize, axis: usize) -> f64 {
        let q = lat.forward(p, axis);
        let de = lat.eta[p] as f64 - lat.eta[q] as f64;
        let dphi = self.phi[q] - self.phi[p];
        de * de * self.exch * dphi * dphi
    }

    /// Rebuild every sum from the configuration.
    pub fn recompute(&mut self, lat: &Lattice) {
        let m = lat.sites();
        let ctr = self.rates.centre();
        let (mut pair, mut bk, mut bg, mut qg) = (0.0, 0.0, 0.0, 0.0);
        for p in 0..m {
            let cfg = window_index(lat, &self.offsets, p);
            let c = self.rates.rate(cfg);
            self.c[p] = c;
            let eta = lat.eta[p] as f64;
            pair += eta * self.phi[p];
            bk += eta * self.lap_phi[p];
            bg += c * (1.0 - 2.0 * ((cfg >> ctr) & 1) as f64) * self.phi[p];
            qg += c * self.phi[p] * self.phi[p];
        }
        let mut qk = 0.0;
        for p in 0..m {
            for a in 0..lat.d {
                let v = self.bond_term(lat, p, a);
                self.bond_terms[p * lat.d + a] = v;
                qk += v;
            }
        }
        self.pair = pair / self.nd;
        // with exchange rate r per bond the Kawasaki drift is (r / N^2) <rho, Delta^N phi>
        self.b_k = self.exch / (lat.n * lat.n) as f64 * bk / self.nd;
        self.b_g = self.k * bg / self.nd;
        self.q_k = qk / self.nd;
        self.q_g = self.k * qg / self.nd;
    }

    pub fn pairing(&self) -> f64 {
        self.pair
    }

    pub fn drift(&self) -> f64 {
        self.b_k + self.b_g
    }

    pub fn drifts(&self) -> (f64, f64) {
        (self.b_k, self.b_g)
    }

    /// Current integrands (Q_K, Q_G) of the fluctuation quadratic variation.
    pub fn integrands(&self) -> (f64, f64) {
        (self.q_k, self.q_g)
    }

    /// Accumulate time integrals over an interval with frozen configuration.
    pub fn advance(&mut self, dt: f64) {
        self.drift_int += dt * self.drift();
        self.qvk_int += dt * self.q_k;
        self.qvg_int += dt * self.q_g;
    }

    /// Update after the sites in `changed` (already modified in `lat`) changed.
    pub fn update(&mut self, lat: &Lattice, changed: &[usize], old: &[u8], kind: EventKind) {
        let d = lat.d;
        let ctr = self.rates.centre();
        let mut dpair = 0.0;
        for (&s, &o) in changed.iter().zip(old) {
            let de = lat.eta[s] as f64 - o as f64;
            dpair += de * self.phi[s] / self.nd;
            self.b_k += self.exch / (lat.n * lat.n) as f64 * de * self.lap_phi[s] / self.nd;
        }
        self.pair += dpair;
        let jump = self.nd * dpair * dpair;
        match kind {
            EventKind::Exchange => self.jumps_k += jump,
            EventKind::Flip => self.jumps_g += jump,
        }
        // flip rates of every site whose window contains a changed site
        let mut touched: Vec<usize> = Vec::new();
        for &s in changed {
            for off in &self.offsets {
                let neg: Vec<i64> = off.iter().map(|x| -x).collect();
                touched.push(lat.shift(s, &neg));
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for &p in &touched {
            let cfg = window_index(lat, &self.offsets, p);
            let c = self.rates.rate(cfg);
            let cbar = c * (1.0 - 2.0 * ((cfg >> ctr) & 1) as f64);
            let old_eta = match changed.iter().position(|&s| s == p) {
                Some(i) => old[i],
                None => lat.eta[p],
            };
            let old_cbar = self.c[p] * (1.0 - 2.0 * old_eta as f64);
            self.b_g += self.k * (cbar - old_cbar) * self.phi[p] / self.nd;
            self.q_g += self.k * (c - self.c[p]) * self.phi[p] * self.phi[p] / self.nd;
            self.c[p] = c;
        }
        // bonds adjacent to changed sites
        let mut bonds: Vec<(usize, usize)> = Vec::new();
        for &s in changed {
            for a in 0..d {
                bonds.push((s, a));
                let mut off = vec![0i64; d];
                off[a] = -1;
                bonds.push((lat.shift(s, &off), a));
            }
        }
        bonds.sort_unstable();
        bonds.dedup();
        for (p, a) in bonds {
            let v = self.bond_term(lat, p, a);
            self.q_k += (v - self.bond_terms[p * d + a]) / self.nd;
            self.bond_terms[p * d + a] = v;
        }
    }
}

/// Drift b_K by the bond formula, (N^2 / (2 N^d)) sum over ordered neighbour pairs.
pub fn drift_kawasaki_bonds(lat: &Lattice, phi: &[f64]) -> f64 {
    let n2 = (lat.n * lat.n) as f64;
    let mut s = 0.0;
    for p in 0..lat.sites() {
        for a in 0..lat.d {
            let q = lat.forward(p, a);
            // ordered pairs (p, q) and (q, p) contribute equally
            s += 2.0 * (lat.eta[p] as f64 - lat.eta[q] as f64) * (phi[q] - phi[p]);
        }
    }
    n2 * s / (2.0 * lat.sites() as f64)
}

/// Drift b_K as <rho^N, Delta^N phi>.
pub fn drift_kawasaki_laplacian(lat: &Lattice, phi: &[f64]) -> f64 {
    let lap = discrete_laplacian(lat.n, lat.d, phi);
    lat.eta.iter().zip(&lap).map(|(&e, l)| e as f64 * l).sum::<f64>() / lat.sites() as f64
}

/// Drift b_G by the c-bar formula (K / N^d) sum cbar_p phi_p.
pub fn drift_glauber_cbar(lat: &Lattice, rates: &FlipRates, k: f64, phi: &[f64]) -> f64 {
    let offs = rates.offsets();
    let ctr = rates.centre();
    let mut s = 0.0;
    for p in 0..lat.sites() {
        let cfg = window_index(lat, &offs, p);
        s += rates.rate(cfg) * (1.0 - 2.0 * ((cfg >> ctr) & 1) as f64) * phi[p];
    }
    k * s / lat.sites() as f64
}

/// Drift b_G = K L_G <rho, phi> by applying the generator to the observable.
pub fn drift_glauber_generator(lat: &Lattice, rates: &FlipRates, k: f64, phi: &[f64]) -> f64 {
    let offs = rates.offsets();
    let pairing = |l: &Lattice| l.eta.iter().zip(phi).map(|(&e, f)| e as f64 * f).sum::<f64>() / l.sites() as f64;
    let base = pairing(lat);
    let mut work = lat.clone();
    let mut s = 0.0;
    for p in 0..lat.sites() {
        let c = rates.rate(window_index(lat, &offs, p));
        work.eta[p] ^= 1;
        s += c * (pairing(&work) - base);
        work.eta[p] ^= 1;
    }
    k * s
}

/// Exact-in-law simulation by uniformisation with thinning of the flip rates.
pub fn simulate_gk(
    rates: &FlipRates,
    n: usize,
    k: f64,
    d: usize,
    init: &Init,
    seed: u64,
    opts: &SimOptions,
) -> Result<LatticeTrajectory> {
    if rates.d != d {
        return Err(Error::InvalidInput("rate family dimension differs from d".into()));
    }
    if n < 3 || k < 0.0 {
        return Err(Error::InvalidInput("need N >= 3 and K >= 0".into()));
    }
    let mut rng = rng::stream(seed, 0);
    let mut lat = init.sample(n, d, &mut rng)?;
    let initial = lat.clone();
    let m = lat.sites();
    let exch = opts.exchange_rate.unwrap_or((n * n) as f64);
    let cmax = rates.max_rate();
    let r_ex = exch * (m * d) as f64;
    let r_fl = k * cmax * m as f64;
    let total = r_ex + r_fl;
    if total * opts.t_end > opts.max_events {
        return Err(Error::InvalidInput(format!(
            "expected {:.3e} proposals exceed the cap {:.3e}",
            total * opts.t_end,
            opts.max_events
        )));
    }
    let offsets = rates.offsets();
    let mut tracker = match &opts.test_function {
        Some(phi) => {
            if phi.len() != m {
                return Err(Error::InvalidInput("test function length must be N^d".into()));
            }
            Some(Tracker::new(&lat, rates, k, exch, phi.clone()))
        }
        None => None,
    };
    let mut dyn_series = tracker.as_ref().map(|_| DynkinSeries::default());
    let record = |tr: &Tracker, ds: &mut DynkinSeries, t: f64| {
        ds.times.push(t);
        ds.pairing.push(tr.pairing());
        ds.drift_integral.push(tr.drift_int);
        ds.qv_kawasaki.push(tr.qvk_int);
        ds.qv_glauber.push(tr.qvg_int);
        ds.jumps_kawasaki.push(tr.jumps_k);
        ds.jumps_glauber.push(tr.jumps_g);
    };
    let mut traj = LatticeTrajectory {
        n,
        d,
        k,
        exchange_rate: exch,
        seed,
        rates: rates.clone(),
        initial,
        times: vec![],
        snapshots: vec![],
        proposals: 0,
        exchanges: 0,
        flips: 0,
        events: if opts.record_events { Some(Vec::new()) } else { None },
        dynkin: None,
        final_state: lat.clone(),
    };
    let snap_dt = opts.snapshot_dt.unwrap_or(f64::INFINITY);
    let mut next_snap = 0.0;
    let mut t = 0.0;
    let mut since_rebuild = 0u64;
    loop {
        let dt_ev: f64 = if total > 0.0 {
            let e: f64 = Exp1.sample(&mut rng);
            e / total
        } else {
            f64::INFINITY
        };
        let t_next = t + dt_ev;
        // snapshots inside (t, t_next] see the current configuration
        while next_snap <= opts.t_end && next_snap <= t_next {
            if let (Some(tr), Some(ds)) = (tracker.as_mut(), dyn_series.as_mut()) {
                tr.advance(next_snap - t);
                t = next_snap;
                record(tr, ds, t);
            } else {
                t = next_snap;
            }
            traj.times.push(next_snap);
            traj.snapshots.push(lat.eta.clone());
            next_snap += snap_dt;
        }
        if t_next > opts.t_end {
            if let Some(tr) = tracker.as_mut() {
                tr.advance(opts.t_end - t);
            }
            t = opts.t_end;
            break;
        }
        if let Some(tr) = tracker.as_mut() {
            tr.advance(t_next - t);
        }
        t = t_next;
        traj.proposals += 1;
        let pick: f64 = rng.gen::<f64>() * total;
        let (kind, p, q) = if pick < r_ex {
            let b = rng.gen_range(0..m * d);
            let p = b / d;
            let q = lat.forward(p, b % d);
            if lat.eta[p] == lat.eta[q] {
                continue;
            }
            (EventKind::Exchange, p, q)
        } else {
            let p = rng.gen_range(0..m);
            let c = rates.rate(window_index(&lat, &offsets, p));
            if rng.gen::<f64>() * cmax >= c {
                continue;
            }
            (EventKind::Flip, p, p)
        };
        let (changed, old): (Vec<usize>, Vec<u8>) = match kind {
            EventKind::Exchange => {
                let old = vec![lat.eta[p], lat.eta[q]];
                lat.eta.swap(p, q);
                traj.exchanges += 1;
                (vec![p, q], old)
            }
            EventKind::Flip => {
                let old = vec![lat.eta[p]];
                lat.eta[p] ^= 1;
                traj.flips += 1;
                (vec![p], old)
            }
        };
        if let Some(tr) = tracker.as_mut() {
            tr.update(&lat, &changed, &old, kind);
            since_rebuild += 1;
            if since_rebuild >= 1 << 20 {
                let saved = (tr.drift_int, tr.qvk_int, tr.qvg_int, tr.jumps_k, tr.jumps_g);
                tr.recompute(&lat);
                (tr.drift_int, tr.qvk_int, tr.qvg_int, tr.jumps_k, tr.jumps_g) = saved;
                since_rebuild = 0;
            }
        }
        if let Some(ev) = traj.events.as_mut() {
            ev.push(Event { t, kind, p: p as u32, q: q as u32 });
        }
    }
    if let (Some(tr), Some(ds)) = (tracker.as_ref(), dyn_series.as_mut()) {
        if ds.times.last().map_or(true, |&x| x < t) {
            record(tr, ds, t);
        }
    }
    traj.dynkin = dyn_series;
    traj.final_state = lat;
    Ok(traj)
}

/// Replay the event log of `traj` and return the Dynkin series for phi,
/// recorded at every snapshot time and at the end.
pub fn martingale_qv(traj: &LatticeTrajectory, phi: &[f64]) -> Result<DynkinSeries> {
    let events = traj
        .events
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("trajectory has no event log".into()))?;
    let mut lat = traj.initial.clone();
    if phi.len() != lat.sites() {
        return Err(Error::InvalidInput("test function length must be N^d".into()));
    }
    let mut tr = Tracker::new(&lat, &traj.rates, traj.k, traj.exchange_rate, phi.to_vec());
    let mut ds = DynkinSeries::default();
    let mut marks: Vec<f64> = traj.times.clone();
    let t_end = traj.times.last().copied().unwrap_or(0.0).max(events.last().map_or(0.0, |e| e.t));
    if marks.last().map_or(true, |&x| x < t_end) {
        marks.push(t_end);
    }
    let mut t = 0.0;
    let mut mi = 0;
    let push = |tr: &Tracker, ds: &mut DynkinSeries, t: f64| {
        ds.times.push(t);
        ds.pairing.push(tr.pairing());
        ds.drift_integral.push(tr.drift_int);
        ds.qv_kawasaki.push(tr.qvk_int);
        ds.qv_glauber.push(tr.qvg_int);
        ds.jumps_kawasaki.push(tr.jumps_k);
        ds.jumps_glauber.push(tr.jumps_g);
    };
    for ev in events {
        while mi < marks.len() && marks[mi] < ev.t {
            tr.advance(marks[mi] - t);
            t = marks[mi];
            push(&tr, &mut ds, t);
            mi += 1;
        }
        tr.advance(ev.t - t);
        t = ev.t;
        let (p, q) = (ev.p as usize, ev.q as usize);
        let (changed, old) = match ev.kind {
            EventKind::Exchange => {
                let old = vec![lat.eta[p], lat.eta[q]];
                lat.eta.swap(p, q);
                (vec![p, q], old)
            }
            EventKind::Flip => {
                let old = vec![lat.eta[p]];
                lat.eta[p] ^= 1;
                (vec![p], old)
            }
        };
        tr.update(&lat, &changed, &old, ev.kind);
    }
    while mi < marks.len() {
        tr.advance(marks[mi] - t);
        t = marks[mi];
        push(&tr, &mut ds, t);
        mi += 1;
    }
    Ok(ds)
}
