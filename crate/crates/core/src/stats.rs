//! Goodness-of-fit helpers for comparing samples with each other and with
//! reference laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// a continuous distribution function. Ties are handled by comparing `cdf`
/// with both one-sided limits of the empirical function.
pub fn ks_distance<F: FnMut(f64) -> Result<f64>>(samples: &[f64], mut cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("KS distance of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    if sorted.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("NaN in sample".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let f = cdf(v)?;
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    Ok(d)
}

/// Result of a two-sample chi-square homogeneity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample chi-square test on integer-valued samples. Adjacent values
/// are pooled until every cell holds at least `min_cell` observations in
/// the two samples together.
pub fn chi_square_two_sample(a: &[i64], b: &[i64], min_cell: usize) -> Result<ChiSquare> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("chi-square test needs two non-empty samples".into()));
    }
    let lo = a.iter().chain(b).copied().min().unwrap_or(0);
    let hi = a.iter().chain(b).copied().max().unwrap_or(0);
    let width = (hi - lo + 1) as usize;
    let mut ca = vec![0usize; width];
    let mut cb = vec![0usize; width];
    for &v in a {
        ca[(v - lo) as usize] += 1;
    }
    for &v in b {
        cb[(v - lo) as usize] += 1;
    }
    let mut cells: Vec<(usize, usize)> = Vec::new();
    let (mut pa, mut pb) = (0, 0);
    for k in 0..width {
        pa += ca[k];
        pb += cb[k];
        if pa + pb >= min_cell {
            cells.push((pa, pb));
            pa = 0;
            pb = 0;
        }
    }
    if pa + pb > 0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += pa;
                last.1 += pb;
            }
            None => cells.push((pa, pb)),
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ra, rb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = cells
        .iter()
        .map(|&(x, y)| {
            let (x, y) = (x as f64, y as f64);
            (ra * x - rb * y).powi(2) / (x + y)
        })
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// Binomial proportion with its standard error.
pub fn proportion(hits: usize, total: usize) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}
