//! Height distributions as Fredholm determinants of the kernel `K`.
//!
//! `P(h(t_i, N_i) > y_i for all i) = det(𝟏 − K)` on the disjoint union of
//! the blocks `{floor, …, y_i − N_i}`. In the rewritten form the row of a
//! point with `x < −N` is exactly zero, so its coordinate can be removed
//! together with its column without changing the determinant. Each block is
//! therefore cut at `max(floor, −N_i)`, which also keeps away from columns
//! whose entries are small differences of large contour contributions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{rewritten_matrix, QuadratureSpec};
use crate::profile::DiscreteRates;
use crate::sim::DownRightPath;

const IMAG_TOL: f64 = 1e-10;

/// Joint lower tail event along a down-right path.
#[derive(Debug, Clone, PartialEq)]
pub struct GapQuery {
    pub path: DownRightPath,
    /// Thresholds `y_i`; the event is `h(t_i, N_i) > y_i` for all `i`.
    pub heights: Vec<i64>,
    /// Lowest coordinate of every block; `None` means `−N_1`.
    pub floor: Option<i64>,
}

impl GapQuery {
    pub fn new(path: DownRightPath, heights: Vec<i64>) -> Result<Self> {
        if heights.len() != path.len() {
            return Err(Error::Invariant(format!(
                "{} thresholds for {} path points",
                heights.len(),
                path.len()
            )));
        }
        Ok(GapQuery {
            path,
            heights,
            floor: None,
        })
    }

    pub fn with_floor(mut self, floor: i64) -> Result<Self> {
        let need = self
            .path
            .points()
            .iter()
            .map(|&(_, n)| -(n as i64))
            .min()
            .unwrap_or(0);
        if floor > need {
            return Err(Error::Invariant(format!(
                "floor {floor} lies above −N_1 = {need}"
            )));
        }
        self.floor = Some(floor);
        Ok(self)
    }
}

/// Outcome of a determinant evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FredholmValue {
    pub probability: f64,
    /// Size of the matrix at the final floor.
    pub size: usize,
    /// Final `(z nodes, nodes per panel)` of the kernel quadrature.
    pub nodes: (usize, usize),
}

type Blocks = Vec<(f64, usize, Vec<i64>)>;

fn blocks(query: &GapQuery, floor: i64) -> Blocks {
    query
        .path
        .points()
        .iter()
        .zip(&query.heights)
        .filter(|(&(t, _), _)| t > 0.0)
        .map(|(&(t, n), &y)| (t, n, (floor.max(-(n as i64))..=y - n as i64).collect::<Vec<_>>()))
        .filter(|b| !b.2.is_empty())
        .collect()
}

/// `det(𝟏 − K)` with the imaginary parts checked and dropped.
fn determinant(blocks: &Blocks, rates: &DiscreteRates, quad: &QuadratureSpec) -> Result<(f64, usize, (usize, usize))> {
    let size: usize = blocks.iter().map(|b| b.2.len()).sum();
    if size == 0 {
        return Ok((1.0, 0, (0, 0)));
    }
    let (k, nodes) = rewritten_matrix(blocks, blocks, rates, quad)?;
    let worst = k
        .iter()
        .map(|v| v.im.abs() / v.re.abs().max(1.0))
        .fold(0.0, f64::max);
    if worst > IMAG_TOL {
        return Err(Error::Consistency(format!(
            "kernel has imaginary part {worst:e} relative to its real part"
        )));
    }
    let m = DMatrix::<f64>::from_fn(size, size, |i, j| if i == j { 1.0 } else { 0.0 } - k[(i, j)].re);
    Ok((m.determinant(), size, nodes))
}

/// `P(h(t_i, N_i) > y_i for all i)`.
pub fn gap_probability(query: &GapQuery, rates: &DiscreteRates, quad: &QuadratureSpec) -> Result<FredholmValue> {
    let pts = query.path.points();
    if query.heights.len() != pts.len() {
        return Err(Error::Invariant("thresholds and path differ in length".into()));
    }
    rates.first(query.path.max_level())?;
    // h(t, N) ≤ N always, and h(0, N) = N
    if pts.iter().zip(&query.heights).any(|(&(_, n), &y)| y >= n as i64) {
        return Ok(FredholmValue {
            probability: 0.0,
            size: 0,
            nodes: (0, 0),
        });
    }
    let floor = query.floor.unwrap_or(-(query.path.max_level() as i64));
    let (p, size, nodes) = determinant(&blocks(query, floor), rates, quad)?;
    let slack = 1e-8;
    if !(p > -slack && p < 1.0 + slack) {
        return Err(Error::Consistency(format!("determinant {p} is not a probability")));
    }
    Ok(FredholmValue {
        probability: p.clamp(0.0, 1.0),
        size,
        nodes,
    })
}

/// `P(h(t, N) > y)`.
pub fn height_tail(rates: &DiscreteRates, t: f64, n: usize, y: i64, quad: &QuadratureSpec) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time {t} must be finite and >= 0")));
    }
    let query = GapQuery::new(DownRightPath::single(t, n)?, vec![y])?;
    Ok(gap_probability(&query, rates, quad)?.probability)
}

/// `P(h(t, N) > y)` for `y = 0, …, N − 1` (the event at `y = N` is empty).
pub fn height_tails(rates: &DiscreteRates, t: f64, n: usize, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    (0..n as i64).map(|y| height_tail(rates, t, n, y, quad)).collect()
}
