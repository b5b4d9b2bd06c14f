//! Finite Markov chain of the PushTASEP restricted to `{1, …, N}`, solved
//! by uniformization.
//!
//! States are occupancy bitmasks (bit `x − 1` for site `x`). The uniformized
//! chain `P = I + Q/Λ` with `Λ = Σ ξ` has nonnegative entries, so the
//! Poisson-weighted power series never cancels.

use std::collections::HashMap;

use super::table::DistributionTable;
use crate::error::{Error, Result};
use crate::profile::DiscreteRates;
use crate::quad::Sum;
use crate::sim::DownRightPath;

pub const CTMC_MAX_SITES: usize = 12;

/// Per-step Poisson mean; longer times are split into steps.
const MAX_STEP_MEAN: f64 = 50.0;
const POISSON_CUTOFF: f64 = 1e-16;

/// Image of `state` after the clock at site `x` rings.
fn ring(state: u32, x: usize, n: usize) -> u32 {
    let bit = 1u32 << (x - 1);
    if state & bit == 0 {
        return state;
    }
    let mut s = state & !bit;
    for y in x + 1..=n {
        let b = 1u32 << (y - 1);
        if s & b == 0 {
            s |= b;
            return s;
        }
    }
    s
}

struct Chain {
    n: usize,
    total: f64,
    /// `moves[s]`: `(target, rate)` pairs out of `s`.
    moves: Vec<Vec<(u32, f64)>>,
}

impl Chain {
    fn new(rates: &[f64]) -> Result<Self> {
        let n = rates.len();
        if n > CTMC_MAX_SITES {
            return Err(Error::Size(format!(
                "{n} sites exceed the chain cap {CTMC_MAX_SITES}"
            )));
        }
        let moves = (0..1u32 << n)
            .map(|s| {
                (1..=n)
                    .filter(|&x| s & (1 << (x - 1)) != 0)
                    .map(|x| (ring(s, x, n), rates[x - 1]))
                    .collect()
            })
            .collect();
        Ok(Chain {
            n,
            total: rates.iter().sum(),
            moves,
        })
    }

    fn apply_p(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (s, &mass) in p.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut stay = 1.0;
            for &(to, r) in &self.moves[s] {
                let q = r / self.total;
                out[to as usize] += mass * q;
                stay -= q;
            }
            out[s] += mass * stay.max(0.0);
        }
    }

    /// `p ↦ p e^{tQ}`.
    fn evolve(&self, p: &[f64], t: f64) -> Vec<f64> {
        if t == 0.0 || self.total == 0.0 {
            return p.to_vec();
        }
        let steps = ((self.total * t) / MAX_STEP_MEAN).ceil().max(1.0) as usize;
        let a = self.total * t / steps as f64;
        let mut cur = p.to_vec();
        let mut buf = vec![0.0; p.len()];
        for _ in 0..steps {
            let mut acc: Vec<Sum> = vec![Sum::default(); p.len()];
            let mut term = cur.clone();
            let mut weight = (-a).exp();
            let mut cumulative = 0.0;
            let mut k = 0usize;
            loop {
                for (s, v) in term.iter().enumerate() {
                    acc[s].add(weight * v);
                }
                cumulative += weight;
                if 1.0 - cumulative < POISSON_CUTOFF && k as f64 > a {
                    break;
                }
                if k as f64 > a && weight < POISSON_CUTOFF * 1e-3 {
                    break;
                }
                self.apply_p(&term, &mut buf);
                std::mem::swap(&mut term, &mut buf);
                k += 1;
                weight *= a / k as f64;
            }
            cur = acc.iter().map(Sum::value).collect();
        }
        cur
    }

    fn full_state(&self) -> u32 {
        ((1u64 << self.n) - 1) as u32
    }

    fn count(&self, s: u32, upto: usize) -> usize {
        (s & (((1u64 << upto) - 1) as u32)).count_ones() as usize
    }
}

/// Law of `h(t, N)` for rates `ξ_1..ξ_N`.
pub fn ctmc_height_dist(rates: &[f64], t: f64) -> Result<DistributionTable> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time {t} < 0")));
    }
    let chain = Chain::new(rates)?;
    let n = chain.n;
    let mut p0 = vec![0.0; 1 << n];
    p0[chain.full_state() as usize] = 1.0;
    let p = chain.evolve(&p0, t);
    let mut probs = vec![0.0; n + 1];
    for (s, v) in p.iter().enumerate() {
        probs[(s as u32).count_ones() as usize] += v;
    }
    DistributionTable::new((0..=n as i64).collect(), probs, 0.0)
}

/// Joint law of `(h(t_1, N_1), …, h(t_r, N_r))` along a down-right path,
/// on the window `{1, …, N_1}`.
pub fn ctmc_path_dist(rates: &DiscreteRates, path: &DownRightPath) -> Result<Vec<(Vec<usize>, f64)>> {
    let n = path.max_level();
    let chain = Chain::new(rates.first(n)?)?;
    let mut dist: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    let mut p0 = vec![0.0; 1 << n];
    p0[chain.full_state() as usize] = 1.0;
    dist.insert(Vec::new(), p0);
    let mut now = 0.0;
    for &(t, level) in path.points() {
        let mut next: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
        for (record, p) in dist {
            let p = chain.evolve(&p, t - now);
            for (s, &v) in p.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let mut key = record.clone();
                key.push(chain.count(s as u32, level));
                next.entry(key).or_insert_with(|| vec![0.0; 1 << n])[s] += v;
            }
        }
        dist = next;
        now = t;
    }
    let mut out: Vec<(Vec<usize>, f64)> = dist
        .into_iter()
        .map(|(k, p)| (k, p.iter().sum()))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
