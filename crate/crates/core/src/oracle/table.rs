use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Finite distribution on consecutive integers together with a bound on
/// the mass that was not enumerated.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub support: Vec<i64>,
    pub probabilities: Vec<f64>,
    pub tail_bound: f64,
}

impl DistributionTable {
    pub fn new(support: Vec<i64>, probabilities: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if support.len() != probabilities.len() {
            return Err(Error::Invariant("support and probabilities differ in length".into()));
        }
        if probabilities.iter().any(|p| !(*p >= -1e-15)) || !(tail_bound >= 0.0) {
            return Err(Error::Invariant("negative or NaN probability".into()));
        }
        Ok(DistributionTable {
            support,
            probabilities,
            tail_bound,
        })
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn prob(&self, value: i64) -> f64 {
        self.support
            .iter()
            .position(|&v| v == value)
            .map_or(0.0, |i| self.probabilities[i])
    }

    /// `P(X > y)` over the enumerated support.
    pub fn tail_gt(&self, y: i64) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .filter(|(v, _)| **v > y)
            .map(|(_, p)| p)
            .sum()
    }

    /// Law of `n − X`.
    pub fn reflect(&self, n: i64) -> Self {
        let mut pairs: Vec<(i64, f64)> = self
            .support
            .iter()
            .zip(&self.probabilities)
            .map(|(&v, &p)| (n - v, p))
            .collect();
        pairs.sort_by_key(|&(v, _)| v);
        DistributionTable {
            support: pairs.iter().map(|p| p.0).collect(),
            probabilities: pairs.iter().map(|p| p.1).collect(),
            tail_bound: self.tail_bound,
        }
    }

    /// CSV with the tail bound recorded in a leading comment line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# tail_bound={:e}\nvalue,probability\n", self.tail_bound);
        for (v, p) in self.support.iter().zip(&self.probabilities) {
            let _ = writeln!(out, "{v},{p:e}");
        }
        out
    }
}
