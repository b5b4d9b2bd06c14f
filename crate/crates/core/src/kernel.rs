//! Correlation kernels of the column-length process by contour quadrature.
//!
//! `K_F(t,N,x; s,M,y) = (2πi)^{-2} ∮∮ dz dw/(z−w) · w^{y+M}/z^{x+N+1}
//!   · e^{tz−sw} · Π_{a≤N}(z−ξ_a) / Π_{b≤M}(w−ξ_b)` and `K = 𝟏 − K_F`.
//!
//! Two evaluations are provided. The nested-circles form integrates both
//! variables over concentric circles with the trapezoidal rule. The
//! rewritten form moves `z` to a small circle of radius `δ` and `w` to the
//! line `Re w = −2δ` traversed downwards, at the price of an explicit
//! residue term; it is the one used for Fredholm determinants.
//!
//! On the line the integrand decays only like `|w|^{y−1}`, so the line is
//! not truncated. Instead it is closed at `±iT` by horizontal rays running
//! to `+∞`, on which `e^{−sw}` decays exponentially. Nothing singular lies
//! between the line and the closed contour, so the value is unchanged.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::DiscreteRates;
use crate::quad::GaussLegendre;

type C = Complex64;

/// Argument `(t, N, x)` of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub n: usize,
    pub x: i64,
}

impl SpaceTimePoint {
    pub fn new(t: f64, n: usize, x: i64) -> Self {
        SpaceTimePoint { t, n, x }
    }

    /// `x + N`, the exponent that enters the integrand.
    fn h(&self) -> i64 {
        self.x + self.n as i64
    }
}

/// Discretization of the contours.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Trapezoid nodes on the `z` circle (both forms).
    pub z_nodes: usize,
    /// Trapezoid nodes on the `w` circle (nested form) or Gauss–Legendre
    /// nodes per panel on the `w` contour (rewritten form).
    pub w_nodes: usize,
    /// Nested form radii; `None` picks `R_w = 1.25 max ξ` and
    /// `R_z = 1.25 R_w` (or `R_w / 1.25` when `q` precedes `p`).
    pub z_radius: Option<f64>,
    pub w_radius: Option<f64>,
    /// Rewritten form circle radius; `None` picks `min ξ / 4`.
    pub delta: Option<f64>,
    /// Height at which the line is closed; `None` picks `max(2 max ξ, 8δ)`.
    pub line_halflength: Option<f64>,
    pub target_tol: f64,
    /// Node counts are doubled up to this cap.
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            z_nodes: 64,
            w_nodes: 64,
            z_radius: None,
            w_radius: None,
            delta: None,
            line_halflength: None,
            target_tol: 1e-10,
            max_nodes: 8192,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.z_nodes < 8 || self.w_nodes < 8 {
            return Err(Error::Domain("quadrature node counts must be at least 8".into()));
        }
        for (name, v) in [
            ("z_radius", self.z_radius),
            ("w_radius", self.w_radius),
            ("delta", self.delta),
            ("line_halflength", self.line_halflength),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.target_tol > 0.0) {
            return Err(Error::Domain("target_tol must be positive".into()));
        }
        Ok(())
    }
}

/// `p` comes no later than `q` along a down-right path through both. This
/// is when `|z| > |w|`; at equal times the ordering is by decreasing level.
pub fn precedes(p: &SpaceTimePoint, q: &SpaceTimePoint) -> bool {
    p.t <= q.t && p.n >= q.n
}

/// `(p, q)` lie on one down-right path in some order.
pub fn check_order(p: &SpaceTimePoint, q: &SpaceTimePoint) -> Result<()> {
    if precedes(p, q) || precedes(q, p) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "({}, {}) and ({}, {}) do not lie on a common down-right path",
            p.t, p.n, q.t, q.n
        )))
    }
}

fn rates_for<'a>(rates: &'a DiscreteRates, p: &SpaceTimePoint, q: &SpaceTimePoint) -> Result<&'a [f64]> {
    rates.first(p.n.max(q.n))
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `ln(e^{tz} Π_{a≤N}(z−ξ_a))`; only its exponential is used, so branches
/// do not matter.
fn log_z_factor(z: C, t: f64, xi: &[f64]) -> C {
    xi.iter().fold(z * t, |acc, &a| acc + (z - a).ln())
}

/// `ln(e^{−sw} / Π_{b≤M}(w−ξ_b))`.
fn log_w_factor(w: C, s: f64, xi: &[f64]) -> C {
    xi.iter().fold(-w * s, |acc, &b| acc - (w - b).ln())
}

fn circle(radius: f64, n: usize) -> Vec<C> {
    (0..n)
        .map(|k| C::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / n as f64))
        .collect()
}

/// Nested circles, trapezoidal rule with `n` nodes on each circle.
fn nested_sum(p: &SpaceTimePoint, q: &SpaceTimePoint, xi: &[f64], rz: f64, rw: f64, n: usize) -> C {
    let (h, hp) = (p.h(), q.h());
    let a: Vec<C> = circle(rz, n)
        .into_iter()
        .map(|z| (log_z_factor(z, p.t, &xi[..p.n]) - z.ln() * (h + 1) as f64).exp() * z / n as f64)
        .collect();
    let zs = circle(rz, n);
    let ws = circle(rw, n);
    let b: Vec<C> = ws
        .iter()
        .map(|&w| (log_w_factor(w, q.t, &xi[..q.n]) + w.ln() * hp as f64).exp() * w / n as f64)
        .collect();
    let mut total = C::new(0.0, 0.0);
    for (ai, &z) in a.iter().zip(&zs) {
        let mut row = C::new(0.0, 0.0);
        for (bj, &w) in b.iter().zip(&ws) {
            row += bj / (z - w);
        }
        total += ai * row;
    }
    total
}

/// Radii of the nested form for the pair `(p, q)`.
pub fn nested_radii(p: &SpaceTimePoint, q: &SpaceTimePoint, xi: &[f64], quad: &QuadratureSpec) -> Result<(f64, f64)> {
    let rw = quad.w_radius.unwrap_or(1.25 * max_of(xi).max(f64::MIN_POSITIVE));
    if rw <= max_of(&xi[..q.n]) {
        return Err(Error::Domain(format!("w radius {rw} does not enclose all rates")));
    }
    let outer = precedes(p, q);
    let rz = quad.z_radius.unwrap_or(if outer { 1.25 * rw } else { rw / 1.25 });
    if outer != (rz > rw) {
        return Err(Error::Domain(format!(
            "radii |z| = {rz}, |w| = {rw} violate the ordering for ({}, {}) and ({}, {})",
            p.t, p.n, q.t, q.n
        )));
    }
    Ok((rz, rw))
}

/// `K_F(p, q)` on nested circles, doubling nodes until two successive
/// values agree to `target_tol` (relative to `max(1, |value|)`).
pub fn eval_kf(p: &SpaceTimePoint, q: &SpaceTimePoint, rates: &DiscreteRates, quad: &QuadratureSpec) -> Result<C> {
    quad.validate()?;
    check_order(p, q)?;
    let xi = rates_for(rates, p, q)?;
    let (rz, rw) = nested_radii(p, q, xi, quad)?;
    let mut n = quad.z_nodes.max(quad.w_nodes);
    let mut prev = nested_sum(p, q, xi, rz, rw, n);
    let mut delta = f64::INFINITY;
    while 2 * n <= quad.max_nodes {
        n *= 2;
        let cur = nested_sum(p, q, xi, rz, rw, n);
        delta = (cur - prev).norm();
        if delta < quad.target_tol * cur.norm().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        what: format!("nested circles for K_F at {n} nodes"),
        delta,
    })
}

/// `K(p, q) = 𝟏_{p=q} − K_F(p, q)` via nested circles.
pub fn eval_k(p: &SpaceTimePoint, q: &SpaceTimePoint, rates: &DiscreteRates, quad: &QuadratureSpec) -> Result<C> {
    let kf = eval_kf(p, q, rates, quad)?;
    Ok(C::new(if p == q { 1.0 } else { 0.0 }, 0.0) - kf)
}

/// Residue term of the rewritten form, present when `p` precedes `q`:
/// `(2πi)^{-1} ∮ e^{(t−s)w} w^{h'−h−1} Π_{a≤N}(w−ξ_a)/Π_{b≤M}(w−ξ_b) dw`
/// around `0` and the `ξ`'s, summed exactly.
pub fn residue_term(p: &SpaceTimePoint, q: &SpaceTimePoint, xi: &[f64]) -> f64 {
    debug_assert!(precedes(p, q));
    // [z^m] e^{(t−s)z} Π_{b=M+1}^{N}(z−ξ_b); every term has the same sign
    let m = p.h() - q.h();
    if m < 0 {
        return 0.0;
    }
    let mut poly = vec![1.0];
    for &b in &xi[q.n..p.n] {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, &c) in poly.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= b * c;
        }
        poly = next;
    }
    let d = p.t - q.t;
    let mut term = 1.0;
    let mut sum = 0.0;
    for i in 0..=m as usize {
        if i > 0 {
            term *= d / i as f64;
        }
        let k = m as usize - i;
        if k < poly.len() {
            sum += term * poly[k];
        }
    }
    sum
}

/// Nodes `w` and weights `dw / (2πi)` of the closed line contour.
#[derive(Debug, Clone)]
struct LineContour {
    nodes: Vec<C>,
    weights: Vec<C>,
}

impl LineContour {
    fn new(delta: f64, halflength: f64, s: f64, per_panel: usize) -> Self {
        let rule = GaussLegendre::cached(per_panel);
        let a = -2.0 * delta;
        let max_panel = 10.0 / s;
        let mut bounds = vec![0.0];
        let mut r = 2.0 * delta;
        while r < halflength {
            bounds.push(r);
            r *= 2.0;
        }
        bounds.push(halflength);
        let bounds = refine(&bounds, max_panel);
        let two_pi_i = C::new(0.0, 2.0 * PI);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        // downward segment: Im w from +T to −T
        for sign in [1.0, -1.0] {
            for win in bounds.windows(2) {
                let (lo, hi) = (win[0], win[1]);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (g, wg) in rule.nodes.iter().zip(&rule.weights) {
                    let y = sign * (mid + half * g);
                    nodes.push(C::new(a, y));
                    // dw = −i dy for a downward path
                    weights.push(C::new(0.0, -1.0) * (half * wg) / two_pi_i);
                }
            }
        }
        // rays: leftwards at +iT, rightwards at −iT
        let ray_len = 42.0 / s;
        let ray_bounds = refine(&[0.0, ray_len], max_panel);
        for (im, dir) in [(halflength, -1.0), (-halflength, 1.0)] {
            for win in ray_bounds.windows(2) {
                let (lo, hi) = (win[0], win[1]);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (g, wg) in rule.nodes.iter().zip(&rule.weights) {
                    nodes.push(C::new(a + mid + half * g, im));
                    weights.push(C::new(dir * half * wg, 0.0) / two_pi_i);
                }
            }
        }
        LineContour { nodes, weights }
    }
}

/// Split intervals longer than `max_len`.
fn refine(bounds: &[f64], max_len: f64) -> Vec<f64> {
    let mut out = vec![bounds[0]];
    for w in bounds.windows(2) {
        let pieces = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
        }
    }
    out
}

/// Geometry of the rewritten form for a set of kernel arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewrittenGeometry {
    pub delta: f64,
    pub halflength: f64,
}

impl RewrittenGeometry {
    pub fn for_rates(xi: &[f64], quad: &QuadratureSpec) -> Result<Self> {
        let delta = quad.delta.unwrap_or(min_of(xi) / 4.0);
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("circle radius δ = {delta} invalid")));
        }
        let halflength = quad
            .line_halflength
            .unwrap_or((2.0 * max_of(xi)).max(8.0 * delta));
        if halflength <= delta {
            return Err(Error::Domain(format!(
                "line closed at height {halflength} must exceed δ = {delta}"
            )));
        }
        Ok(RewrittenGeometry { delta, halflength })
    }
}

/// Kernel `K` on blocks of points by the rewritten form at fixed node
/// counts. `rows[i]` and `cols[j]` are `(t, N, xs)` blocks.
fn rewritten_matrix_at(
    rows: &[(f64, usize, Vec<i64>)],
    cols: &[(f64, usize, Vec<i64>)],
    xi: &[f64],
    geo: RewrittenGeometry,
    nz: usize,
    per_panel: usize,
) -> DMatrix<C> {
    let nr: usize = rows.iter().map(|b| b.2.len()).sum();
    let nc: usize = cols.iter().map(|b| b.2.len()).sum();
    let mut out = DMatrix::<C>::zeros(nr, nc);
    let zs = circle(geo.delta, nz);
    let log_zs: Vec<C> = zs.iter().map(|z| z.ln()).collect();

    let mut col_off = 0;
    for &(s, m, ref ys) in cols {
        let line = LineContour::new(geo.delta, geo.halflength, s, per_panel);
        let nw = line.nodes.len();
        let inv = DMatrix::<C>::from_fn(nz, nw, |i, j| C::new(1.0, 0.0) / (zs[i] - line.nodes[j]));
        let base_w: Vec<C> = line.nodes.iter().map(|&w| log_w_factor(w, s, &xi[..m])).collect();
        let log_ws: Vec<C> = line.nodes.iter().map(|w| w.ln()).collect();
        let bmat = DMatrix::<C>::from_fn(nw, ys.len(), |j, c| {
            let hp = ys[c] + m as i64;
            (base_w[j] + log_ws[j] * hp as f64).exp() * line.weights[j]
        });
        let ib = &inv * &bmat;

        let mut row_off = 0;
        for &(t, n, ref xs) in rows {
            let base_z: Vec<C> = zs.iter().map(|&z| log_z_factor(z, t, &xi[..n])).collect();
            let amat = DMatrix::<C>::from_fn(xs.len(), nz, |r, i| {
                let h = xs[r] + n as i64;
                if h < 0 {
                    C::new(0.0, 0.0)
                } else {
                    (base_z[i] - log_zs[i] * (h + 1) as f64).exp() * zs[i] / nz as f64
                }
            });
            let d = &amat * &ib;
            for (r, &x) in xs.iter().enumerate() {
                for (c, &y) in ys.iter().enumerate() {
                    let p = SpaceTimePoint::new(t, n, x);
                    let q = SpaceTimePoint::new(s, m, y);
                    let mut v = -d[(r, c)];
                    if precedes(&p, &q) {
                        v -= residue_term(&p, &q, xi);
                    }
                    if p == q {
                        v += 1.0;
                    }
                    out[(row_off + r, col_off + c)] = v;
                }
            }
            row_off += xs.len();
        }
        col_off += ys.len();
    }
    out
}

/// `K` on blocks by the rewritten form, doubling node counts until every
/// entry is stable to `target_tol · max(1, |entry|)`. Returns the matrix and
/// the final `(z nodes, nodes per panel)`.
pub fn rewritten_matrix(
    rows: &[(f64, usize, Vec<i64>)],
    cols: &[(f64, usize, Vec<i64>)],
    rates: &DiscreteRates,
    quad: &QuadratureSpec,
) -> Result<(DMatrix<C>, (usize, usize))> {
    quad.validate()?;
    let nmax = rows.iter().chain(cols).map(|b| b.1).max().unwrap_or(0);
    let xi_all = rates.first(nmax.max(1))?;
    for &(s, m, ref ys) in cols {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("rewritten form needs s > 0, got {s}")));
        }
        if let Some(&y) = ys.iter().find(|&&y| y >= 0) {
            return Err(Error::Domain(format!("rewritten form needs y < 0, got {y} at level {m}")));
        }
    }
    for &(t, n, _) in rows {
        for &(s, m, _) in cols {
            check_order(&SpaceTimePoint::new(t, n, 0), &SpaceTimePoint::new(s, m, 0))?;
        }
    }
    let geo = RewrittenGeometry::for_rates(xi_all, quad)?;
    let mut nz = quad.z_nodes;
    let mut per_panel = quad.w_nodes.min(128);
    let mut prev = rewritten_matrix_at(rows, cols, xi_all, geo, nz, per_panel);
    let mut delta = f64::INFINITY;
    while 2 * nz <= quad.max_nodes {
        nz *= 2;
        per_panel = (per_panel * 2).min(256);
        let cur = rewritten_matrix_at(rows, cols, xi_all, geo, nz, per_panel);
        delta = cur
            .iter()
            .zip(prev.iter())
            .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
            .fold(0.0, f64::max);
        if delta < quad.target_tol {
            return Ok((cur, (nz, per_panel)));
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        what: format!("rewritten contours at {nz} z nodes"),
        delta,
    })
}

/// `K(p, q)` by the rewritten form. Requires `y < 0` and `s > 0`.
pub fn eval_k_rewritten(p: &SpaceTimePoint, q: &SpaceTimePoint, rates: &DiscreteRates, quad: &QuadratureSpec) -> Result<C> {
    let (m, _) = rewritten_matrix(&[(p.t, p.n, vec![p.x])], &[(q.t, q.n, vec![q.x])], rates, quad)?;
    Ok(m[(0, 0)])
}
