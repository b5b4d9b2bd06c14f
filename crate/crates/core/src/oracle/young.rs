use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Partition stored as its positive parts in weakly decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct YoungDiagram {
    parts: Vec<u32>,
}

impl YoungDiagram {
    /// Trailing zeros are dropped.
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Invariant(format!("parts {parts:?} not weakly decreasing")));
        }
        Ok(YoungDiagram { parts })
    }

    pub(crate) fn from_trusted(mut parts: Vec<u32>) -> Self {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        debug_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        YoungDiagram { parts }
    }

    pub fn empty() -> Self {
        YoungDiagram::default()
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// `λ_i`, 1-based, zero past the length.
    pub fn part(&self, i: usize) -> u32 {
        self.parts.get(i.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Number of nonzero parts `ℓ(λ)`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `|λ|`.
    pub fn size(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let cols = self.part(1) as usize;
        let parts = (1..=cols)
            .map(|c| self.parts.iter().filter(|&&p| p as usize >= c).count() as u32)
            .collect();
        YoungDiagram { parts }
    }

    /// `λ ⊃ μ` as sets of boxes.
    pub fn contains(&self, mu: &YoungDiagram) -> bool {
        mu.len() <= self.len() && mu.parts.iter().zip(&self.parts).all(|(m, l)| m <= l)
    }

    /// Hook lengths row by row.
    pub fn hooks(&self) -> Vec<u32> {
        let t = self.transpose();
        let mut out = Vec::with_capacity(self.size() as usize);
        for (i, &row) in self.parts.iter().enumerate() {
            for j in 0..row as usize {
                let arm = row - 1 - j as u32;
                let leg = t.parts[j] - 1 - i as u32;
                out.push(arm + leg + 1);
            }
        }
        out
    }

    /// Number of standard Young tableaux, `|λ|! / Π hooks`.
    pub fn syt_count(&self) -> BigUint {
        let n = self.size();
        let mut num = BigUint::from(1u32);
        for k in 2..=n {
            num *= k;
        }
        let den = self
            .hooks()
            .into_iter()
            .fold(BigUint::from(1u32), |acc, h| acc * h);
        num / den
    }

    /// `t^{|λ|} / Π hooks`, the Plancherel specialization of `s_λ`.
    pub fn plancherel(&self, t: f64) -> f64 {
        self.hooks().into_iter().map(|h| t / h as f64).product()
    }

    fn remove_corner(&self, row: usize) -> Self {
        let mut p = self.parts.clone();
        p[row] -= 1;
        YoungDiagram::from_trusted(p)
    }

    /// Rows `i` (0-based) whose last box is a removable corner.
    fn corners(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.parts.len()).filter(|&i| i + 1 == self.parts.len() || self.parts[i + 1] < self.parts[i])
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Largest skew shape for which standard tableaux are counted exactly.
pub const SKEW_CELL_CAP: u32 = 30;

/// Standard tableaux of the skew shape `λ/μ`, counted by removing corners
/// one at a time with memoisation. Zero unless `λ ⊃ μ`.
pub fn skew_syt_count(lambda: &YoungDiagram, mu: &YoungDiagram) -> Result<u128> {
    if !lambda.contains(mu) {
        return Ok(0);
    }
    let n = lambda.size() - mu.size();
    if n > SKEW_CELL_CAP {
        return Err(Error::Size(format!(
            "skew shape with {n} cells exceeds cap {SKEW_CELL_CAP}"
        )));
    }
    fn go(nu: &YoungDiagram, mu: &YoungDiagram, memo: &mut HashMap<YoungDiagram, u128>) -> u128 {
        if nu == mu {
            return 1;
        }
        if let Some(&v) = memo.get(nu) {
            return v;
        }
        let mut total = 0u128;
        for row in nu.corners() {
            if nu.parts[row] > mu.part(row + 1) {
                total += go(&nu.remove_corner(row), mu, memo);
            }
        }
        memo.insert(nu.clone(), total);
        total
    }
    Ok(go(lambda, mu, &mut HashMap::new()))
}

/// Plancherel specialization of a skew Schur function,
/// `t^{n} f^{λ/μ} / n!` with `n = |λ/μ|`.
pub fn skew_plancherel(lambda: &YoungDiagram, mu: &YoungDiagram, t: f64) -> Result<f64> {
    let f = skew_syt_count(lambda, mu)?;
    if f == 0 {
        return Ok(0.0);
    }
    let n = lambda.size() - mu.size();
    let scale: f64 = (1..=n).map(|k| t / k as f64).product();
    Ok(f as f64 * scale)
}

/// All partitions with at most `max_len` parts and at most `max_size` boxes,
/// in graded reverse-lexicographic order.
pub fn partitions_up_to(max_size: u32, max_len: usize) -> Vec<YoungDiagram> {
    let mut out = Vec::new();
    for n in 0..=max_size {
        let mut cur = Vec::new();
        gen_exact(n, n, max_len, &mut cur, &mut out);
    }
    out
}

fn gen_exact(rem: u32, cap: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<YoungDiagram>) {
    if rem == 0 {
        out.push(YoungDiagram { parts: cur.clone() });
        return;
    }
    if slots == 0 {
        return;
    }
    for p in (1..=cap.min(rem)).rev() {
        cur.push(p);
        gen_exact(rem - p, p, slots - 1, cur, out);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yd(p: &[u32]) -> YoungDiagram {
        YoungDiagram::new(p.to_vec()).unwrap()
    }

    #[test]
    fn basic_shapes() {
        let l = yd(&[4, 2, 2, 1]);
        assert_eq!(l.size(), 9);
        assert_eq!(l.len(), 4);
        assert_eq!(l.transpose(), yd(&[4, 3, 1, 1]));
        assert_eq!(l.transpose().transpose(), l);
        assert!(YoungDiagram::new(vec![1, 2]).is_err());
        assert_eq!(yd(&[2, 0, 0]), yd(&[2]));
        assert_eq!(yd(&[3, 1]).to_string(), "(3,1)");
    }

    #[test]
    fn hook_formula_counts() {
        assert_eq!(yd(&[2, 1]).syt_count(), BigUint::from(2u32));
        assert_eq!(yd(&[3, 2]).syt_count(), BigUint::from(5u32));
        assert_eq!(yd(&[5]).syt_count(), BigUint::from(1u32));
        assert_eq!(yd(&[3, 3, 3]).syt_count(), BigUint::from(42u32));
        // large shapes stay exact
        let big = yd(&[6, 5, 4, 3, 2, 1]);
        let f = big.syt_count();
        assert_eq!(BigUint::from(skew_syt_count(&big, &YoungDiagram::empty()).unwrap()), f);
    }

    #[test]
    fn plancherel_values() {
        assert_eq!(YoungDiagram::empty().plancherel(0.0), 1.0);
        assert_eq!(yd(&[1]).plancherel(0.0), 0.0);
        let t: f64 = 1.7;
        assert!((yd(&[2, 1]).plancherel(t) - t.powi(3) / 3.0).abs() < 1e-14);
        assert!((yd(&[4]).plancherel(t) - t.powi(4) / 24.0).abs() < 1e-14);
    }

    #[test]
    fn skew_counts() {
        let l = yd(&[2, 1]);
        assert_eq!(skew_syt_count(&l, &l).unwrap(), 1);
        assert_eq!(skew_syt_count(&yd(&[2]), &yd(&[1, 1])).unwrap(), 0);
        assert_eq!(skew_syt_count(&yd(&[2, 1]), &yd(&[1])).unwrap(), 2);
        // in (2,2)/(1) the box (2,2) must come last
        assert_eq!(skew_syt_count(&yd(&[2, 2]), &yd(&[1])).unwrap(), 2);
        assert_eq!(skew_syt_count(&yd(&[3, 1]), &yd(&[2])).unwrap(), 2);
        assert!(skew_plancherel(&yd(&[31]), &YoungDiagram::empty(), 1.0).is_err());
        assert_eq!(skew_plancherel(&l, &l, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn partition_enumeration() {
        // partitions of 0..=6 with unrestricted length: 1+1+2+3+5+7+11
        assert_eq!(partitions_up_to(6, 6).len(), 30);
        assert_eq!(partitions_up_to(6, 2).iter().filter(|p| p.size() == 6).count(), 4);
        assert!(partitions_up_to(8, 3).iter().all(|p| p.len() <= 3));
    }
}
