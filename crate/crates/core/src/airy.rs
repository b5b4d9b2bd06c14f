//! Airy function, Airy kernel and the GUE Tracy–Widom distribution.
//!
//! `Ai` uses the Maclaurin series on `[−3, 3]` and the standard asymptotic
//! expansions on `|x| ≥ 12`. In between, the Airy equation is integrated by
//! Taylor steps started from `±12` and moving towards the origin, which is
//! the stable direction for the decaying solution on the positive side.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

const SERIES_LEFT: f64 = -3.0;
/// Cancellation in the series grows like `e^{(2/3)|x|^{3/2}}`.
const SERIES_RIGHT: f64 = 3.0;
const ASYMPTOTIC_LIMIT: f64 = 12.0;
const STEP: f64 = 0.25;

/// `Ai(0)` and `Ai′(0)`.
const AI0: f64 = 0.355_028_053_887_817_2;
const AI0_PRIME: f64 = -0.258_819_403_792_806_8;

fn maclaurin(x: f64) -> (f64, f64) {
    // f = Σ 3^k (1/3)_k x^{3k}/(3k)!, g = Σ 3^k (2/3)_k x^{3k+1}/(3k+1)!
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut df, mut dg) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
        df += k3 * tf / x;
        dg += (k3 + 1.0) * tg / x;
        if tf.abs() + tg.abs() < 1e-18 * (f.abs() + g.abs()) {
            break;
        }
    }
    if x == 0.0 {
        df = 0.0;
        dg = 1.0;
    }
    (AI0 * f + AI0_PRIME * g, AI0 * df + AI0_PRIME * dg)
}

/// `u_k` coefficients of the asymptotic expansions.
fn u_coefficients(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..n {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
    }
    (u, v)
}

/// Sum of `Σ_k s_k c_k / ζ^k` over `k ≡ parity (mod step)` with alternating
/// signs, stopped at the smallest term.
fn asym_sum(c: &[f64], zeta: f64, start: usize, step: usize) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = start;
    while k < c.len() {
        let term = c[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        sum += sign * term;
        last = term.abs();
        if last < 1e-18 * sum.abs() {
            break;
        }
        sign = -sign;
        k += step;
    }
    sum
}

fn asymptotic(x: f64) -> (f64, f64) {
    let (u, v) = u_coefficients(40);
    let sqrt_pi = PI.sqrt();
    if x > 0.0 {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let e = (-zeta).exp();
        let q = x.powf(0.25);
        (
            e / (2.0 * sqrt_pi * q) * asym_sum(&u, zeta, 0, 1),
            -q * e / (2.0 * sqrt_pi) * asym_sum(&v, zeta, 0, 1),
        )
    } else {
        let y = -x;
        let zeta = 2.0 / 3.0 * y.powf(1.5);
        let q = y.powf(0.25);
        let (s, c) = (zeta - PI / 4.0).sin_cos();
        let ai = (c * asym_sum(&u, zeta, 0, 2) + s * asym_sum(&u, zeta, 1, 2)) / (sqrt_pi * q);
        let aip = q / sqrt_pi * (s * asym_sum(&v, zeta, 0, 2) - c * asym_sum(&v, zeta, 1, 2));
        (ai, aip)
    }
}

/// One Taylor step of `y″ = x y` from `x0` by `h`:
/// `a_m = (x0 a_{m−2} + a_{m−3}) / (m(m−1))`.
fn taylor_step(x0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    let mut a = vec![y, yp, x0 * y / 2.0];
    let (mut val, mut der) = (y + yp * h + a[2] * h * h, yp + 2.0 * a[2] * h);
    let mut hm1 = h * h;
    for m in 3..200 {
        let next = (x0 * a[m - 2] + a[m - 3]) / (m * (m - 1)) as f64;
        a.push(next);
        let dterm = m as f64 * next * hm1;
        hm1 *= h;
        let term = next * hm1;
        val += term;
        der += dterm;
        if m > 10 && term.abs() <= 1e-19 * val.abs() && dterm.abs() <= 1e-19 * der.abs() {
            break;
        }
    }
    (val, der)
}

fn stepped(x: f64) -> (f64, f64) {
    let start = ASYMPTOTIC_LIMIT.copysign(x);
    let (mut y, mut yp) = asymptotic(start);
    let steps = ((start - x).abs() / STEP).ceil().max(1.0) as usize;
    let h = (x - start) / steps as f64;
    let mut cur = start;
    for _ in 0..steps {
        (y, yp) = taylor_step(cur, y, yp, h);
        cur += h;
    }
    (y, yp)
}

/// `(Ai(x), Ai′(x))`.
pub fn airy_ai(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::Range(format!("Airy function at non-finite x = {x}")));
    }
    let a = x.abs();
    Ok(if (SERIES_LEFT..=SERIES_RIGHT).contains(&x) {
        maclaurin(x)
    } else if a >= ASYMPTOTIC_LIMIT {
        asymptotic(x)
    } else {
        stepped(x)
    })
}

fn kernel_from_values(x: f64, ax: (f64, f64), y: f64, ay: (f64, f64)) -> f64 {
    if (x - y).abs() < 1e-6 {
        // symmetric in (x, y): the diagonal value at the midpoint is off by
        // O((x − y)²)
        let m = 0.5 * (x + y);
        let (a, ap) = if x == y { ax } else { airy_ai(m).unwrap_or(ax) };
        return ap * ap - m * a * a;
    }
    (ax.0 * ay.1 - ax.1 * ay.0) / (x - y)
}

/// `𝖠(x, y) = (Ai(x)Ai′(y) − Ai′(x)Ai(y))/(x − y)`, with
/// `Ai′(x)² − x Ai(x)²` on the diagonal.
pub fn airy_kernel(x: f64, y: f64) -> Result<f64> {
    Ok(kernel_from_values(x, airy_ai(x)?, y, airy_ai(y)?))
}

/// Nodes `1 + s e^{±iπ/3}` (for `u`) or `−1 + s e^{±2iπ/3}` (for `v`) with
/// weights `d·/(2πi)`, both traversed from the lower ray to the upper one.
fn airy_contour(centre: f64, angle: f64, panels: usize, per_panel: usize, length: f64) -> Vec<(Complex64, Complex64)> {
    let rule = GaussLegendre::cached(per_panel);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut out = Vec::new();
    for sign in [-1.0, 1.0] {
        let dir = Complex64::from_polar(1.0, sign * angle);
        for p in 0..panels {
            let (lo, hi) = (length * p as f64 / panels as f64, length * (p + 1) as f64 / panels as f64);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (g, w) in rule.nodes.iter().zip(&rule.weights) {
                let s = mid + half * g;
                // the lower ray runs inwards
                out.push((centre + dir * s, sign * dir * (half * w) / two_pi_i));
            }
        }
    }
    out
}

/// `𝖠(x, y)` from the double contour integral.
pub fn airy_kernel_contour(x: f64, y: f64) -> f64 {
    let us = airy_contour(1.0, PI / 3.0, 12, 24, 9.0);
    let vs = airy_contour(-1.0, 2.0 * PI / 3.0, 12, 24, 9.0);
    let a: Vec<Complex64> = us.iter().map(|&(u, w)| (u * u * u / 3.0 - x * u).exp() * w).collect();
    let b: Vec<Complex64> = vs.iter().map(|&(v, w)| (-v * v * v / 3.0 + y * v).exp() * w).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (ai, &(u, _)) in a.iter().zip(&us) {
        for (bj, &(v, _)) in b.iter().zip(&vs) {
            total += ai * bj / (u - v);
        }
    }
    total.re
}

/// `Ai` from the single contour integral `(2πi)^{-1} ∫ e^{u³/3 − xu} du`.
pub fn airy_ai_contour(x: f64) -> f64 {
    airy_contour(1.0, PI / 3.0, 12, 24, 9.0)
        .iter()
        .map(|&(u, w)| (u * u * u / 3.0 - x * u).exp() * w)
        .sum::<Complex64>()
        .re
}

/// Gauss–Legendre rule on `(r, ∞)` through `x = r + L₀(1+u)/(1−u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NystromGrid {
    pub r: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Scale of the map onto `(r, ∞)`.
pub const MAP_SCALE: f64 = 10.0;
pub const DEFAULT_NODES: usize = 64;

impl NystromGrid {
    pub fn new(r: f64, count: usize) -> Result<Self> {
        if count == 0 || !r.is_finite() {
            return Err(Error::Domain(format!("Nyström grid needs count >= 1 and finite r, got {count}, {r}")));
        }
        let rule: Arc<GaussLegendre> = GaussLegendre::cached(count);
        let nodes = rule.nodes.iter().map(|u| r + MAP_SCALE * (1.0 + u) / (1.0 - u)).collect();
        let weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(u, w)| w * 2.0 * MAP_SCALE / ((1.0 - u) * (1.0 - u)))
            .collect();
        Ok(NystromGrid { r, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `W^{1/2} 𝖠 W^{1/2}` on the grid.
    pub fn kernel_matrix(&self) -> Result<DMatrix<f64>> {
        let vals = self.nodes.iter().map(|&x| airy_ai(x)).collect::<Result<Vec<_>>>()?;
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let n = self.len();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            sw[i] * kernel_from_values(self.nodes[i], vals[i], self.nodes[j], vals[j]) * sw[j]
        }))
    }
}

/// `F_GUE(r) = det(𝟏 − 𝖠)` on `(r, ∞)` at the given grid.
pub fn tw_gue_cdf(grid: &NystromGrid) -> Result<f64> {
    let k = grid.kernel_matrix()?;
    let m = DMatrix::<f64>::identity(grid.len(), grid.len()) - k;
    Ok(m.determinant().clamp(0.0, 1.0))
}

/// `F_GUE(r)` with `count` nodes, checked against `2·count` nodes.
pub fn tw_gue_cdf_checked(r: f64, count: usize, tol: f64) -> Result<f64> {
    let coarse = tw_gue_cdf(&NystromGrid::new(r, count)?)?;
    let fine = tw_gue_cdf(&NystromGrid::new(r, 2 * count)?)?;
    if (fine - coarse).abs() > tol {
        return Err(Error::Resolution(format!(
            "F_GUE({r}) moved by {:e} when nodes doubled from {count}",
            (fine - coarse).abs()
        )));
    }
    Ok(fine)
}

/// `F_GUE(r)` at the default grid.
pub fn tw_cdf(r: f64) -> Result<f64> {
    tw_gue_cdf(&NystromGrid::new(r, DEFAULT_NODES)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        let (a, ap) = airy_ai(0.0).unwrap();
        assert!((a - 3f64.powf(-2.0 / 3.0) / 1.354_117_939_426_400_4).abs() < 1e-15);
        assert!((ap + 3f64.powf(-1.0 / 3.0) / 2.678_938_534_707_747_6).abs() < 1e-15);
    }

    #[test]
    fn methods_agree_on_overlaps() {
        for x in [-6.0, -5.0, -4.0, 2.0, 3.0, 4.0] {
            let (a, b) = (maclaurin(x), stepped(x));
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12, "{x}");
        }
        for x in [-11.0, 11.0] {
            let (a, b) = (asymptotic(x), stepped(x));
            assert!((a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn reference_values() {
        // classical tabulated values
        let (a, _) = airy_ai(1.0).unwrap();
        assert!((a - 0.135_292_416_312_881_4).abs() < 1e-15);
        let (a, _) = airy_ai(-2.0).unwrap();
        assert!((a - 0.227_407_428_201_685_6).abs() < 1e-14);
        let (a, _) = airy_ai(10.0).unwrap();
        assert!((a - 1.104_753_255_289_869_4e-10).abs() < 1e-22);
    }

    #[test]
    fn tw_tails() {
        assert!(tw_cdf(6.0).unwrap() > 1.0 - 1e-8);
        assert!(tw_cdf(-8.0).unwrap() < 1e-6);
    }
}
