//! Schur polynomials, their Plancherel specializations, Schur measures and
//! Schur processes, all summed directly.
//!
//! Polynomials in finitely many variables are built by the branching rule
//! `s_{λ/μ}(u_1, …, u_n) = Σ_ν s_{ν/μ}(u_1, …, u_{n−1}) u_n^{|λ/ν|}` over
//! horizontal strips `λ/ν`. Every term is nonnegative for nonnegative
//! variables, so there is no cancellation.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::table::DistributionTable;
use super::young::{skew_plancherel, YoungDiagram};
use crate::error::{Error, Result};
use crate::profile::DiscreteRates;
use crate::sim::DownRightPath;

/// Values indexed by diagram.
pub type SchurTable = HashMap<YoungDiagram, f64>;

/// Enumerate horizontal strips `λ/μ` with `ℓ(λ) ≤ max_len`, `λ ⊂ outer`
/// when given, and `|λ| ≤ max_size`. Calls `f(λ, |λ/μ|)`.
fn for_each_strip<F: FnMut(&[u32], u32)>(
    mu: &[u32],
    max_len: usize,
    outer: Option<&YoungDiagram>,
    max_size: u32,
    f: &mut F,
) {
    let rows = max_len.min(mu.len() + 1);
    let mu_size: u32 = mu.iter().sum();
    if mu.len() > max_len || mu_size > max_size {
        return;
    }
    let mut lam = vec![0u32; rows];
    #[allow(clippy::too_many_arguments)]
    fn rec<F: FnMut(&[u32], u32)>(
        i: usize,
        mu: &[u32],
        outer: Option<&YoungDiagram>,
        budget: u32,
        added: u32,
        lam: &mut Vec<u32>,
        f: &mut F,
    ) {
        if i == lam.len() {
            f(lam, added);
            return;
        }
        let lo = mu.get(i).copied().unwrap_or(0);
        let mut hi = if i == 0 { lo + budget } else { mu[i - 1].min(lo + budget) };
        if let Some(o) = outer {
            hi = hi.min(o.part(i + 1));
        }
        if hi < lo {
            return;
        }
        for v in lo..=hi {
            lam[i] = v;
            rec(i + 1, mu, outer, budget - (v - lo), added + (v - lo), lam, f);
        }
    }
    rec(0, mu, outer, max_size - mu_size, 0, &mut lam, f);
}

fn branch(table: &SchurTable, u: f64, max_len: usize, outer: Option<&YoungDiagram>, max_size: u32) -> SchurTable {
    let mut next = SchurTable::new();
    for (mu, &val) in table {
        for_each_strip(mu.parts(), max_len, outer, max_size, &mut |lam, added| {
            let key = YoungDiagram::from_trusted(lam.to_vec());
            *next.entry(key).or_insert(0.0) += val * u.powi(added as i32);
        });
    }
    next
}

/// `s_λ(u_1, …, u_N)`; zero when `N < ℓ(λ)`.
pub fn schur_poly(lambda: &YoungDiagram, u: &[f64]) -> f64 {
    skew_schur_vars(lambda, &YoungDiagram::empty(), u)
}

/// `s_{λ/μ}(u_1, …, u_n)`; zero unless `λ ⊃ μ`.
pub fn skew_schur_vars(lambda: &YoungDiagram, mu: &YoungDiagram, u: &[f64]) -> f64 {
    if !lambda.contains(mu) {
        return 0.0;
    }
    let mut table = SchurTable::from([(mu.clone(), 1.0)]);
    for &x in u {
        table = branch(&table, x, lambda.len(), Some(lambda), lambda.size());
    }
    table.get(lambda).copied().unwrap_or(0.0)
}

/// Specialization of a skew Schur function.
#[derive(Debug, Clone, PartialEq)]
pub enum Specialization {
    Variables(Vec<f64>),
    Plancherel(f64),
}

pub fn skew_schur(lambda: &YoungDiagram, mu: &YoungDiagram, spec: &Specialization) -> Result<f64> {
    match spec {
        Specialization::Variables(u) => Ok(skew_schur_vars(lambda, mu, u)),
        Specialization::Plancherel(t) => skew_plancherel(lambda, mu, *t),
    }
}

/// `s_λ(u)` for every `λ` with at most `u.len()` parts and `|λ| ≤ max_size`.
pub fn schur_table(u: &[f64], max_size: u32) -> SchurTable {
    let mut table = SchurTable::from([(YoungDiagram::empty(), 1.0)]);
    for (k, &x) in u.iter().enumerate() {
        table = branch(&table, x, k + 1, None, max_size);
    }
    table
}

/// Bialternant `det[u_i^{λ_j+N−j}] / det[u_i^{N−j}]`. Needs distinct
/// variables; meant as a cross-check of [`schur_poly`].
pub fn schur_bialternant(lambda: &YoungDiagram, u: &[f64]) -> Result<f64> {
    let n = u.len();
    if lambda.len() > n {
        return Ok(0.0);
    }
    for i in 0..n {
        for j in 0..i {
            if u[i] == u[j] {
                return Err(Error::Domain("bialternant needs distinct variables".into()));
            }
        }
    }
    let num = DMatrix::from_fn(n, n, |i, j| u[i].powi((lambda.part(j + 1) as usize + n - 1 - j) as i32));
    let den = DMatrix::from_fn(n, n, |i, j| u[i].powi((n - 1 - j) as i32));
    Ok(num.determinant() / den.determinant())
}

/// `e^{−tΣξ} s_λ(ξ_1, …, ξ_N) s_λ(Pl_t)`.
pub fn schur_measure_prob(rates: &[f64], t: f64, lambda: &YoungDiagram) -> f64 {
    let mass: f64 = rates.iter().sum();
    (-t * mass).exp() * schur_poly(lambda, rates) * lambda.plancherel(t)
}

/// `e^{tΣu} − Σ_{|λ| ≤ W} s_λ(u) s_λ(Pl_t)`.
pub fn cauchy_residual(u: &[f64], t: f64, max_size: u32) -> f64 {
    let partial: f64 = schur_table(u, max_size)
        .iter()
        .map(|(lam, s)| s * lam.plancherel(t))
        .sum();
    (t * u.iter().sum::<f64>()).exp() - partial
}

/// `P(Poisson(mean) > w)`, summed from the tail side.
pub fn poisson_tail(mean: f64, w: u32) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let k0 = w as f64 + 1.0;
    let log_p = -mean + k0 * mean.ln() - ln_factorial(w + 1);
    let mut term = log_p.exp();
    let mut total = 0.0;
    let mut k = k0;
    while term > 1e-300 {
        total += term;
        k += 1.0;
        term *= mean / k;
        if k > k0 + 10.0 * mean + 200.0 {
            break;
        }
    }
    total
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest weight cap `W` whose Schur-measure tail is at most `tol`.
///
/// Under the Schur measure `|λ|` is Poisson with mean `tΣξ`.
pub fn weight_cap_for(rates: &[f64], t: f64, tol: f64) -> u32 {
    let mean = t * rates.iter().sum::<f64>();
    let mut w = 0;
    while poisson_tail(mean, w) > tol {
        w += 1;
    }
    w
}

/// Law of `λ'_1 = ℓ(λ)` under the Schur measure with rates `ξ_1..ξ_N` and
/// Plancherel time `t`, summed over `|λ| ≤ W`. By the Schur-field coupling
/// this is the law of `N − h(t, N)`.
pub fn height_dist_truncated(rates: &DiscreteRates, t: f64, n: usize, max_size: u32, tol: f64) -> Result<DistributionTable> {
    if t < 0.0 {
        return Err(Error::Domain(format!("time {t} < 0")));
    }
    let xi = rates.first(n)?;
    let norm = (-t * xi.iter().sum::<f64>()).exp();
    let mut probs = vec![0.0; n + 1];
    for (lam, s) in schur_table(xi, max_size) {
        probs[lam.len()] += norm * s * lam.plancherel(t);
    }
    let total: f64 = probs.iter().sum();
    let tail = (1.0 - total).max(0.0);
    if tail > tol {
        return Err(Error::TailTooHeavy {
            achieved: tail,
            requested: tol,
        });
    }
    DistributionTable::new((0..=n as i64).collect(), probs, tail)
}

/// Largest path length and diagram size accepted by the Schur-process sums.
pub const SP_MAX_POINTS: usize = 4;
pub const SP_MAX_SIZE: u32 = 16;

fn sum_range(xi: &[f64], lo: usize, hi: usize) -> f64 {
    xi[lo..hi].iter().sum()
}

/// Weight of `(λ; μ)` under the Schur process attached to the path
/// `(t_1, N_1), …, (t_r, N_r)`: `λ^{(1..r−1)}` and `μ^{(1..r)}` with
/// `μ^{(1)} = μ^{(r)} = ∅`.
pub fn schur_process_prob(
    path: &DownRightPath,
    rates: &DiscreteRates,
    lambdas: &[YoungDiagram],
    mus: &[YoungDiagram],
) -> Result<f64> {
    let pts = path.points();
    let r = pts.len();
    if !(2..=SP_MAX_POINTS).contains(&r) {
        return Err(Error::Size(format!("path of {r} points outside 2..={SP_MAX_POINTS}")));
    }
    if lambdas.len() != r - 1 || mus.len() != r {
        return Err(Error::Invariant(format!(
            "need {} diagrams λ and {r} diagrams μ",
            r - 1
        )));
    }
    if !mus[0].is_empty() || !mus[r - 1].is_empty() {
        return Err(Error::Invariant("μ at both ends must be empty".into()));
    }
    if lambdas.iter().chain(mus).any(|d| d.size() > SP_MAX_SIZE) {
        return Err(Error::Size(format!("diagram larger than {SP_MAX_SIZE} boxes")));
    }
    let xi = rates.first(pts[0].1)?;
    let mut w = 1.0;
    for i in 0..r - 1 {
        let (ti, ni) = pts[i];
        let (tn, nn) = pts[i + 1];
        w *= skew_plancherel(&lambdas[i], &mus[i], tn - ti)?;
        if w == 0.0 {
            return Ok(0.0);
        }
        w *= skew_schur_vars(&lambdas[i], &mus[i + 1], &xi[nn..ni]);
    }
    let log_z: f64 = (1..r)
        .map(|i| pts[i].0 * sum_range(xi, pts[i].1, pts[i - 1].1))
        .sum();
    Ok(w * (-log_z).exp())
}

/// Schur-process path `(0, N_1), (t_1, N_2), …, (t_{m−1}, N_m), (t_m, 0)`
/// whose `λ^{(i)}` has the law of the field at `(t_i, N_i)`.
pub fn schur_path_for(path: &DownRightPath) -> Result<DownRightPath> {
    let pts = path.points();
    let mut out = Vec::with_capacity(pts.len() + 1);
    out.push((0.0, pts[0].1));
    for i in 0..pts.len() {
        let level = pts.get(i + 1).map_or(0, |p| p.1);
        out.push((pts[i].0, level));
    }
    DownRightPath::new(out)
}

/// Diagrams `ν ⊂ λ` with at most `max_len` parts.
fn subdiagrams(lambda: &YoungDiagram, max_len: usize) -> Vec<YoungDiagram> {
    let rows = lambda.len().min(max_len);
    let mut out = Vec::new();
    let mut cur = vec![0u32; rows];
    fn rec(i: usize, lambda: &YoungDiagram, cur: &mut Vec<u32>, out: &mut Vec<YoungDiagram>) {
        if i == cur.len() {
            out.push(YoungDiagram::from_trusted(cur.clone()));
            return;
        }
        let hi = if i == 0 { lambda.part(1) } else { lambda.part(i + 1).min(cur[i - 1]) };
        for v in 0..=hi {
            cur[i] = v;
            rec(i + 1, lambda, cur, out);
        }
    }
    rec(0, lambda, &mut cur, &mut out);
    out
}

/// Diagrams `λ ⊃ μ` with at most `max_len` parts and `|λ| ≤ max_size`.
fn superdiagrams(mu: &YoungDiagram, max_len: usize, max_size: u32) -> Vec<YoungDiagram> {
    let mut layer = vec![mu.clone()];
    let mut seen: HashMap<YoungDiagram, ()> = HashMap::from([(mu.clone(), ())]);
    let mut out = vec![mu.clone()];
    while !layer.is_empty() {
        let mut next = Vec::new();
        for d in &layer {
            if d.size() >= max_size {
                continue;
            }
            let p = d.parts();
            for i in 0..=p.len().min(max_len - 1) {
                let cur = p.get(i).copied().unwrap_or(0);
                if i == 0 || p[i - 1] > cur {
                    let mut q = p.to_vec();
                    if i == q.len() {
                        q.push(0);
                    }
                    q[i] += 1;
                    let nd = YoungDiagram::from_trusted(q);
                    if seen.insert(nd.clone(), ()).is_none() {
                        next.push(nd.clone());
                        out.push(nd);
                    }
                }
            }
        }
        layer = next;
    }
    out
}

/// Height tuples with their probabilities.
pub type JointTable = Vec<(Vec<usize>, f64)>;

/// Joint law of `(h(t_1, N_1), …, h(t_m, N_m))` along a PushTASEP path,
/// obtained by summing Schur-process weights over all diagram sequences with
/// `|λ^{(i)}| ≤ W`. Returns the table and the unenumerated mass.
pub fn schur_process_joint_heights(
    rates: &DiscreteRates,
    path: &DownRightPath,
    max_size: u32,
) -> Result<(JointTable, f64)> {
    let sp = schur_path_for(path)?;
    if sp.len() > SP_MAX_POINTS || max_size > SP_MAX_SIZE {
        return Err(Error::Size("Schur-process enumeration too large".into()));
    }
    let pts = sp.points().to_vec();
    let mut joint: HashMap<Vec<usize>, f64> = HashMap::new();
    let levels: Vec<usize> = path.points().iter().map(|p| p.1).collect();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        lambdas: &mut Vec<YoungDiagram>,
        mus: &mut Vec<YoungDiagram>,
        pts: &[(f64, usize)],
        max_size: u32,
        sp: &DownRightPath,
        rates: &DiscreteRates,
        levels: &[usize],
        joint: &mut HashMap<Vec<usize>, f64>,
    ) -> Result<()> {
        let r = pts.len();
        if i == r - 1 {
            mus.push(YoungDiagram::empty());
            let w = schur_process_prob(sp, rates, lambdas, mus)?;
            mus.pop();
            if w > 0.0 {
                let key = lambdas.iter().zip(levels).map(|(l, &n)| n - l.len()).collect();
                *joint.entry(key).or_insert(0.0) += w;
            }
            return Ok(());
        }
        // choose λ^{(i)} ⊃ μ^{(i)} at level N_i, then μ^{(i+1)} ⊂ λ^{(i)} at level N_{i+1}
        let level = pts[i].1;
        for lam in superdiagrams(&mus[i], level, max_size) {
            let next_level = pts[i + 1].1;
            let next_mus = if i + 1 == r - 1 {
                vec![YoungDiagram::empty()]
            } else {
                subdiagrams(&lam, next_level)
            };
            lambdas.push(lam.clone());
            for mu in next_mus {
                if i + 1 == r - 1 {
                    rec(i + 1, lambdas, mus, pts, max_size, sp, rates, levels, joint)?;
                } else {
                    mus.push(mu);
                    rec(i + 1, lambdas, mus, pts, max_size, sp, rates, levels, joint)?;
                    mus.pop();
                }
            }
            lambdas.pop();
        }
        Ok(())
    }

    let mut lambdas = Vec::new();
    let mut mus = vec![YoungDiagram::empty()];
    rec(0, &mut lambdas, &mut mus, &pts, max_size, &sp, rates, &levels, &mut joint)?;
    let mut out: Vec<(Vec<usize>, f64)> = joint.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    let total: f64 = out.iter().map(|p| p.1).sum();
    Ok((out, (1.0 - total).max(0.0)))
}
