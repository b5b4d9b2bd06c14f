//! Two-dimensional blocking/pushing dynamics on interlacing arrays.
//!
//! Level `N` holds `λ^{(N)}_1 ≥ … ≥ λ^{(N)}_N`, and consecutive levels
//! interlace: `λ^{(N)}_{j+1} ≤ λ^{(N−1)}_j ≤ λ^{(N)}_j`. Every entry at level
//! `N` tries to grow at rate `ξ_N`. A growth of `λ^{(N)}_j` is suppressed
//! when `λ^{(N)}_j = λ^{(N−1)}_{j−1}`; otherwise it happens and pushes the
//! entries `λ^{(N+1)}_j, λ^{(N+2)}_j, …` that were equal to its old value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::profile::DiscreteRates;

#[inline]
fn slot(level: usize, j: usize) -> usize {
    level * (level - 1) / 2 + (j - 1)
}

/// Interlacing array on levels `1..=K`.
#[derive(Debug, Clone)]
pub struct InterlacingArray {
    depth: usize,
    values: Vec<u32>,
    rates: Vec<f64>,
    clocks: Fenwick,
    slots: Vec<(usize, usize)>,
    time: f64,
    rng: ChaCha8Rng,
}

/// The three one-dimensional projections of a field snapshot, indexed by
/// level `N = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    /// PushTASEP heights `N − λ'^{(N)}_1`.
    pub heights: Vec<i64>,
    /// Particle-dependent PushTASEP positions `λ^{(N)}_1 + N`.
    pub push_positions: Vec<i64>,
    /// Particle-dependent TASEP positions `λ^{(N)}_N − N`.
    pub tasep_positions: Vec<i64>,
}

impl InterlacingArray {
    /// All-zero array of depth `K`, entries at level `N` ringing at `ξ_N`.
    pub fn new(rates: &DiscreteRates, depth: usize, seed: u64) -> Result<Self> {
        Self::with_rng(rates, depth, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_stream(rates: &DiscreteRates, depth: usize, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::with_rng(rates, depth, rng)
    }

    fn with_rng(rates: &DiscreteRates, depth: usize, rng: ChaCha8Rng) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Range("field depth must be at least 1".into()));
        }
        let rates = rates.first(depth)?.to_vec();
        let size = depth * (depth + 1) / 2;
        let mut slots = Vec::with_capacity(size);
        for level in 1..=depth {
            for j in 1..=level {
                slots.push((level, j));
            }
        }
        let mut arr = InterlacingArray {
            depth,
            values: vec![0; size],
            rates,
            clocks: Fenwick::from_values(vec![0.0; size]),
            slots,
            time: 0.0,
            rng,
        };
        arr.reset_clocks();
        Ok(arr)
    }

    /// Array with prescribed levels (checked for interlacing), for
    /// inspecting single transitions.
    pub fn from_levels(rates: &DiscreteRates, levels: &[Vec<u32>], seed: u64) -> Result<Self> {
        let mut arr = Self::new(rates, levels.len(), seed)?;
        for (i, row) in levels.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::Invariant(format!(
                    "level {} has {} entries",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                arr.values[slot(i + 1, j + 1)] = v;
            }
        }
        arr.check_interlacing()?;
        arr.reset_clocks();
        Ok(arr)
    }

    fn reset_clocks(&mut self) {
        let weights = (0..self.values.len())
            .map(|k| {
                let (level, j) = self.slots[k];
                if self.is_blocked(level, j) {
                    0.0
                } else {
                    self.rates[level - 1]
                }
            })
            .collect();
        self.clocks = Fenwick::from_values(weights);
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `λ^{(level)}_j`, 1-based.
    pub fn get(&self, level: usize, j: usize) -> u32 {
        self.values[slot(level, j)]
    }

    pub fn level(&self, level: usize) -> &[u32] {
        let s = slot(level, 1);
        &self.values[s..s + level]
    }

    pub fn is_blocked(&self, level: usize, j: usize) -> bool {
        j >= 2 && self.get(level, j) == self.get(level - 1, j - 1)
    }

    pub fn check_interlacing(&self) -> Result<()> {
        for level in 1..=self.depth {
            let row = self.level(level);
            if row.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::Invariant(format!("level {level} not weakly decreasing")));
            }
            if level >= 2 {
                for j in 1..level {
                    let up = self.get(level - 1, j);
                    if !(self.get(level, j + 1) <= up && up <= self.get(level, j)) {
                        return Err(Error::Invariant(format!(
                            "levels {} and {level} fail to interlace at j = {j}",
                            level - 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn refresh_clock(&mut self, level: usize, j: usize) {
        if level > self.depth || j > level {
            return;
        }
        let w = if self.is_blocked(level, j) {
            0.0
        } else {
            self.rates[level - 1]
        };
        self.clocks.set(slot(level, j) + 1, w);
    }

    /// Apply a ring of the clock of `λ^{(level)}_j`.
    pub fn ring(&mut self, level: usize, j: usize) {
        if self.is_blocked(level, j) {
            return;
        }
        let old = self.get(level, j);
        let mut n = level;
        while n <= self.depth && self.get(n, j) == old {
            self.values[slot(n, j)] = old + 1;
            self.refresh_clock(n, j);
            self.refresh_clock(n + 1, j + 1);
            n += 1;
        }
        debug_assert!(self.check_interlacing().is_ok());
    }

    pub fn evolve_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(Error::Monotonicity {
                requested: t,
                current: self.time,
            });
        }
        loop {
            let total = self.clocks.total();
            if total <= 0.0 {
                break;
            }
            let dt = -(1.0 - self.rng.random::<f64>()).ln() / total;
            if self.time + dt > t {
                break;
            }
            self.time += dt;
            let k = loop {
                let u = self.rng.random::<f64>() * total;
                let k = self.clocks.find(u);
                if self.clocks.value(k) > 0.0 {
                    break k;
                }
                self.clocks.rebuild();
            };
            let (level, j) = self.slots[k - 1];
            self.ring(level, j);
        }
        self.time = t;
        Ok(())
    }

    pub fn project(&self) -> Projections {
        let mut p = Projections {
            heights: Vec::with_capacity(self.depth),
            push_positions: Vec::with_capacity(self.depth),
            tasep_positions: Vec::with_capacity(self.depth),
        };
        for n in 1..=self.depth {
            let row = self.level(n);
            let nonzero = row.iter().filter(|&&v| v >= 1).count();
            p.heights.push(n as i64 - nonzero as i64);
            p.push_positions.push(row[0] as i64 + n as i64);
            p.tasep_positions.push(row[n - 1] as i64 - n as i64);
        }
        p
    }

    /// Rows `(level, index, value, time)` of the current snapshot.
    pub fn snapshot(&self) -> Vec<(usize, usize, u32, f64)> {
        self.slots
            .iter()
            .zip(&self.values)
            .map(|(&(l, j), &v)| (l, j, v, self.time))
            .collect()
    }
}

/// Independent field replicas evolved to time `t`, on streams `0..replicas`
/// of the generator seeded by `seed`.
pub fn sample_fields(
    rates: &DiscreteRates,
    depth: usize,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<InterlacingArray>> {
    rates.first(depth)?;
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut a = InterlacingArray::with_stream(rates, depth, seed, r as u64)?;
            a.evolve_to(t)?;
            Ok(a)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(v: &[f64]) -> DiscreteRates {
        DiscreteRates::explicit(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_array_projections() {
        let a = InterlacingArray::new(&rates(&[1.0; 4]), 4, 0).unwrap();
        let p = a.project();
        assert_eq!(p.heights, vec![1, 2, 3, 4]);
        assert_eq!(p.push_positions, vec![1, 2, 3, 4]);
        assert_eq!(p.tasep_positions, vec![-1, -2, -3, -4]);
    }

    #[test]
    fn single_level_projection_formulas() {
        let a = InterlacingArray::from_levels(&rates(&[1.0]), &[vec![3]], 0).unwrap();
        let p = a.project();
        assert_eq!((p.heights[0], p.push_positions[0], p.tasep_positions[0]), (0, 4, 2));
    }

    #[test]
    fn blocked_ring_is_noop() {
        let mut a = InterlacingArray::new(&rates(&[1.0, 1.0]), 2, 0).unwrap();
        assert!(a.is_blocked(2, 2));
        a.ring(2, 2);
        assert_eq!(a.level(2), &[0, 0]);
    }

    #[test]
    fn ring_pushes_equal_entries_above() {
        let mut a = InterlacingArray::new(&rates(&[1.0; 3]), 3, 0).unwrap();
        a.ring(1, 1);
        assert_eq!(a.level(1), &[1]);
        assert_eq!(a.level(2), &[1, 0]);
        assert_eq!(a.level(3), &[1, 0, 0]);
        // λ^{(2)}_2 now free; ringing it pushes λ^{(3)}_2
        assert!(!a.is_blocked(2, 2));
        a.ring(2, 2);
        assert_eq!(a.level(2), &[1, 1]);
        assert_eq!(a.level(3), &[1, 1, 0]);
        // λ^{(3)}_1 equals the old λ^{(2)}_1, so it moves too
        a.ring(2, 1);
        assert_eq!(a.level(2), &[2, 1]);
        assert_eq!(a.level(3), &[2, 1, 0]);
        a.check_interlacing().unwrap();
    }

    #[test]
    fn rejects_non_interlacing_input() {
        let r = rates(&[1.0, 1.0]);
        assert!(InterlacingArray::from_levels(&r, &[vec![0], vec![2, 1]], 0).is_err());
        assert!(InterlacingArray::from_levels(&r, &[vec![1], vec![0, 0]], 0).is_err());
    }

    #[test]
    fn random_rings_keep_interlacing() {
        let mut a = InterlacingArray::new(&rates(&[1.0; 9]), 9, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5000 {
            let level = rng.random_range(1..=9);
            let j = rng.random_range(1..=level);
            a.ring(level, j);
            a.check_interlacing().unwrap();
        }
        let mut b = a.clone();
        b.reset_clocks();
        assert!((a.clocks.total() - b.clocks.total()).abs() < 1e-9);
    }

    #[test]
    fn evolved_field_interlaces_and_heights_valid() {
        let r = rates(&[1.0, 2.0, 0.5, 1.5, 1.0, 3.0]);
        for a in sample_fields(&r, 6, 2.0, 50, 1).unwrap() {
            a.check_interlacing().unwrap();
            for (n, h) in a.project().heights.iter().enumerate() {
                assert!(*h >= 0 && *h <= n as i64 + 1);
            }
        }
    }

    #[test]
    fn top_entry_is_poisson() {
        let (xi, t, reps) = (1.4, 1.5, 40_000usize);
        let fields = sample_fields(&rates(&[xi]), 1, t, reps, 9).unwrap();
        let mean = fields.iter().map(|a| a.get(1, 1) as f64).sum::<f64>() / reps as f64;
        let lam = xi * t;
        assert!((mean - lam).abs() < 4.0 * (lam / reps as f64).sqrt());
        let p0 = fields.iter().filter(|a| a.get(1, 1) == 0).count() as f64 / reps as f64;
        let e0 = (-lam).exp();
        assert!((p0 - e0).abs() < 4.0 * (e0 * (1.0 - e0) / reps as f64).sqrt());
    }
}
