//! Exact continuous-time simulation of the PushTASEP from step initial
//! data on the window `{1, …, N_max}`.
//!
//! Only occupied sites carry clocks. The next event is drawn from the total
//! rate and the ringing site is located through a Fenwick tree of the
//! occupied-site rates. A ring at `x` moves the particle at `x` and the
//! densely packed cluster to its right one step right, which amounts to
//! emptying `x` and filling the first empty site after the cluster
//! (nothing is filled when the cluster reaches the window edge).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::profile::DiscreteRates;

/// Points `(t_i, N_i)` with times weakly increasing and levels weakly
/// decreasing, pairwise distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct DownRightPath {
    points: Vec<(f64, usize)>,
}

impl DownRightPath {
    pub fn new(points: Vec<(f64, usize)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invariant("down-right path needs at least one point".into()));
        }
        for &(t, _) in &points {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Invariant(format!("path time {t} must be finite and >= 0")));
            }
        }
        for w in points.windows(2) {
            let ((t0, n0), (t1, n1)) = (w[0], w[1]);
            if t1 < t0 || n1 > n0 {
                return Err(Error::Invariant(format!(
                    "({t0}, {n0}) -> ({t1}, {n1}) is not a down-right step"
                )));
            }
            if t1 == t0 && n1 == n0 {
                return Err(Error::Invariant(format!("repeated path point ({t0}, {n0})")));
            }
        }
        Ok(DownRightPath { points })
    }

    pub fn single(t: f64, n: usize) -> Result<Self> {
        Self::new(vec![(t, n)])
    }

    pub fn points(&self) -> &[(f64, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_level(&self) -> usize {
        self.points[0].1
    }
}

/// Simulation state on a finite window.
#[derive(Debug, Clone)]
pub struct SimState {
    window: usize,
    occupied: Vec<u64>,
    rates: Vec<f64>,
    clocks: Fenwick,
    time: f64,
    events: u64,
    rng: ChaCha8Rng,
}

impl SimState {
    /// Step initial data: every site of the window occupied at time 0.
    pub fn new(rates: &DiscreteRates, window: usize, seed: u64) -> Result<Self> {
        Self::with_rng(rates, window, ChaCha8Rng::seed_from_u64(seed))
    }

    /// Same as [`SimState::new`] but on the independent stream `stream`
    /// of the generator seeded by `seed`.
    pub fn with_stream(rates: &DiscreteRates, window: usize, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::with_rng(rates, window, rng)
    }

    fn with_rng(rates: &DiscreteRates, window: usize, rng: ChaCha8Rng) -> Result<Self> {
        if window == 0 {
            return Err(Error::Range("window must be at least 1".into()));
        }
        let rates = rates.first(window)?.to_vec();
        let words = window.div_ceil(64);
        let mut occupied = vec![u64::MAX; words];
        let spare = words * 64 - window;
        if spare > 0 {
            occupied[words - 1] = u64::MAX >> spare;
        }
        Ok(SimState {
            window,
            occupied,
            clocks: Fenwick::from_values(rates.clone()),
            rates,
            time: 0.0,
            events: 0,
            rng,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Number of rings applied so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn is_occupied(&self, x: usize) -> bool {
        x >= 1 && x <= self.window && (self.occupied[(x - 1) / 64] >> ((x - 1) % 64)) & 1 == 1
    }

    /// Occupied sites in increasing order.
    pub fn positions(&self) -> Vec<usize> {
        (1..=self.window).filter(|&x| self.is_occupied(x)).collect()
    }

    /// Sum of the rates of occupied sites, recomputed from scratch.
    pub fn active_rate_exact(&self) -> f64 {
        self.positions().iter().map(|&x| self.rates[x - 1]).sum()
    }

    /// Incrementally maintained total active rate.
    pub fn active_rate(&self) -> f64 {
        self.clocks.total()
    }

    /// `h(t, N)`: number of particles in `{1, …, N}`.
    pub fn height(&self, n: usize) -> Result<usize> {
        if n > self.window {
            return Err(Error::Range(format!(
                "height at N = {n} beyond window {}",
                self.window
            )));
        }
        let full = n / 64;
        let mut count: usize = self.occupied[..full]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum();
        let rem = n % 64;
        if rem > 0 {
            count += (self.occupied[full] & ((1u64 << rem) - 1)).count_ones() as usize;
        }
        Ok(count)
    }

    fn set_bit(&mut self, x: usize, on: bool) {
        let (w, b) = ((x - 1) / 64, (x - 1) % 64);
        if on {
            self.occupied[w] |= 1 << b;
        } else {
            self.occupied[w] &= !(1 << b);
        }
    }

    /// First empty site strictly after `x`, or `None` when the run of
    /// occupied sites reaches the window edge.
    fn first_empty_after(&self, x: usize) -> Option<usize> {
        let mut idx = x; // 0-based bit index of site x + 1
        while idx < self.window {
            let (w, b) = (idx / 64, idx % 64);
            let free = !self.occupied[w] >> b;
            if free != 0 {
                let y = idx + free.trailing_zeros() as usize;
                return (y < self.window).then_some(y + 1);
            }
            idx = (w + 1) * 64;
        }
        None
    }

    /// Apply the ring of the clock at site `x`: no-op at an empty site,
    /// otherwise the particle and the packed cluster ahead of it shift
    /// right by one, dropping a particle that leaves the window.
    pub fn ring(&mut self, x: usize) {
        if !self.is_occupied(x) {
            return;
        }
        self.set_bit(x, false);
        self.clocks.set(x, 0.0);
        if let Some(y) = self.first_empty_after(x) {
            self.set_bit(y, true);
            self.clocks.set(y, self.rates[y - 1]);
        }
        self.events += 1;
    }

    fn pick_site(&mut self, total: f64) -> usize {
        loop {
            let u = self.rng.random::<f64>() * total;
            let x = self.clocks.find(u);
            if self.is_occupied(x) {
                return x;
            }
            // rounding drift put us on an empty site
            self.clocks.rebuild();
        }
    }

    /// Run the dynamics up to time `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(Error::Monotonicity {
                requested: t,
                current: self.time,
            });
        }
        loop {
            let total = self.clocks.total();
            if total <= 0.0 || self.height(self.window)? == 0 {
                break;
            }
            let u: f64 = self.rng.random();
            let dt = -(1.0 - u).ln() / total;
            if self.time + dt > t {
                break;
            }
            self.time += dt;
            let x = self.pick_site(total);
            self.ring(x);
        }
        self.time = t;
        Ok(())
    }
}

/// Heights along a down-right path, one row per replica.
///
/// Each replica runs one trajectory through the path times in order, on
/// stream `replica` of the generator seeded by `seed`.
pub fn sample_path_heights(
    rates: &DiscreteRates,
    window: usize,
    path: &DownRightPath,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if path.max_level() > window {
        return Err(Error::Range(format!(
            "path reaches N = {} beyond window {window}",
            path.max_level()
        )));
    }
    rates.first(window)?;
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut sim = SimState::with_stream(rates, window, seed, r as u64)?;
            path.points()
                .iter()
                .map(|&(t, n)| {
                    sim.advance_to(t)?;
                    sim.height(n)
                })
                .collect()
        })
        .collect()
}

/// Heights `h(t, N)` at a single point for many replicas.
pub fn sample_heights(
    rates: &DiscreteRates,
    window: usize,
    t: f64,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let path = DownRightPath::single(t, n)?;
    Ok(sample_path_heights(rates, window, &path, replicas, seed)?
        .into_iter()
        .map(|row| row[0])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> DiscreteRates {
        DiscreteRates::explicit(vec![1.0; n]).unwrap()
    }

    /// Push-chain semantics written out literally: the ringing particle
    /// moves, then each particle it lands on is pushed in turn.
    fn push_chain(occ: &mut [bool], x: usize) {
        if !occ[x - 1] {
            return;
        }
        let mut carried = x;
        occ[x - 1] = false;
        loop {
            let dest = carried + 1;
            if dest > occ.len() {
                break;
            }
            if occ[dest - 1] {
                carried = dest;
                continue;
            }
            occ[dest - 1] = true;
            break;
        }
    }

    #[test]
    fn step_initial_heights() {
        let s = SimState::new(&ones(5), 5, 1).unwrap();
        for n in 0..=5 {
            assert_eq!(s.height(n).unwrap(), n);
        }
        assert!(matches!(s.height(6), Err(Error::Range(_))));
        let single = SimState::new(&ones(1), 1, 1).unwrap();
        assert_eq!(single.positions(), vec![1]);
        assert!(SimState::new(&ones(3), 4, 0).is_err());
    }

    #[test]
    fn ring_matches_push_chain() {
        use rand::Rng;
        let window = 150;
        let rates = ones(window);
        let mut s = SimState::new(&rates, window, 0).unwrap();
        let mut occ = vec![true; window];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20_000 {
            let x = rng.random_range(1..=window);
            s.ring(x);
            push_chain(&mut occ, x);
            assert!(s.is_occupied(x) == occ[x - 1]);
        }
        let expected: Vec<usize> = (1..=window).filter(|&x| occ[x - 1]).collect();
        assert_eq!(s.positions(), expected);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let rates = DiscreteRates::explicit((1..=40).map(|i| 0.5 + (i % 3) as f64).collect()).unwrap();
        let mut a = SimState::new(&rates, 40, 7).unwrap();
        let mut b = SimState::new(&rates, 40, 7).unwrap();
        a.advance_to(3.0).unwrap();
        b.advance_to(3.0).unwrap();
        assert_eq!(a.positions(), b.positions());
        assert_eq!(a.events(), b.events());
        let mut c = SimState::new(&rates, 40, 8).unwrap();
        c.advance_to(3.0).unwrap();
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn advance_to_same_time_is_noop() {
        let mut s = SimState::new(&ones(10), 10, 3).unwrap();
        s.advance_to(0.0).unwrap();
        assert_eq!(s.events(), 0);
        s.advance_to(1.0).unwrap();
        let before = s.positions();
        s.advance_to(1.0).unwrap();
        assert_eq!(s.positions(), before);
        assert!(matches!(s.advance_to(0.5), Err(Error::Monotonicity { .. })));
    }

    #[test]
    fn incremental_rate_matches_exact() {
        let rates = DiscreteRates::explicit((1..=200).map(|i| 1.0 + (i as f64).sin().abs()).collect()).unwrap();
        let mut s = SimState::new(&rates, 200, 11).unwrap();
        for k in 1..=20 {
            s.advance_to(k as f64 * 0.5).unwrap();
            assert!((s.active_rate() - s.active_rate_exact()).abs() < 1e-9);
        }
    }

    #[test]
    fn heights_monotone_along_trajectory() {
        let mut s = SimState::new(&ones(60), 60, 5).unwrap();
        let mut prev: Vec<usize> = (0..=60).map(|n| s.height(n).unwrap()).collect();
        for k in 1..=40 {
            s.advance_to(k as f64 * 0.25).unwrap();
            let cur: Vec<usize> = (0..=60).map(|n| s.height(n).unwrap()).collect();
            for n in 1..=60 {
                assert!(cur[n] <= prev[n], "h(t, N) increased in t");
                assert!(cur[n] - cur[n - 1] <= 1);
            }
            prev = cur;
        }
    }

    #[test]
    fn single_site_survival_probability() {
        // P(site 1 still occupied at t) = exp(-ξ₁ t)
        let (xi, t, reps) = (1.3, 0.6, 100_000usize);
        let rates = DiscreteRates::explicit(vec![xi]).unwrap();
        let h = sample_heights(&rates, 1, t, 1, reps, 2024).unwrap();
        let p = (-xi * t).exp();
        let phat = h.iter().filter(|&&v| v == 1).count() as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((phat - p).abs() < 3.0 * se, "phat {phat} vs {p}");
    }

    #[test]
    fn two_site_full_probability() {
        // any ring ejects one particle from {1, 2}
        let (x1, x2, t, reps) = (0.7, 1.9, 0.4, 100_000usize);
        let rates = DiscreteRates::explicit(vec![x1, x2]).unwrap();
        let h = sample_heights(&rates, 2, t, 2, reps, 77).unwrap();
        let p = (-(x1 + x2) * t).exp();
        let phat = h.iter().filter(|&&v| v == 2).count() as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((phat - p).abs() < 3.0 * se, "phat {phat} vs {p}");
    }

    #[test]
    fn path_rows_respect_counting() {
        let rates = ones(8);
        let path = DownRightPath::new(vec![(0.0, 3), (0.8, 2), (0.8, 1)]).unwrap();
        let rows = sample_path_heights(&rates, 8, &path, 500, 1).unwrap();
        for row in rows {
            assert_eq!(row[0], 3);
            assert!(row[1] >= row[2]);
        }
    }

    #[test]
    fn path_validation() {
        assert!(DownRightPath::new(vec![(1.0, 2), (0.5, 1)]).is_err());
        assert!(DownRightPath::new(vec![(0.5, 1), (1.0, 2)]).is_err());
        assert!(DownRightPath::new(vec![(0.5, 1), (0.5, 1)]).is_err());
        assert!(DownRightPath::new(vec![]).is_err());
        assert!(DownRightPath::new(vec![(0.1, 3), (0.1, 2), (0.4, 2)]).is_ok());
    }
}
