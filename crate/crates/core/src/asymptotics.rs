//! Limit shape and fluctuation coefficients.
//!
//! For `z < 0` and a profile `ξ` on `[0, η]` the integrals
//! `∫ ξ/(z−ξ)²`, `∫ z²/(z−ξ)²`, `∫ z²ξ/(ξ−z)³` and `∫ z/(ξ−z)` are rational in
//! `ξ`, so on constant and affine pieces they have closed forms. With
//! `u = ξ − z` running from `u₀` to `u₁` over a piece of length `Δ`:
//! `∫ ξ/u² = ℓ + zΔ/(u₀u₁)`, `∫ z²/u² = z²Δ/(u₀u₁)`,
//! `∫ z²ξ/u³ = z²Δ/(u₀u₁) + z³Δ(u₀+u₁)/(2u₀²u₁²)`, `∫ z/u = zℓ`,
//! where `ℓ = ∫ dy/u = ln(u₁/u₀)/slope` (or `Δ/u₀` on a constant piece).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::{DiscreteRates, PieceKind, SpeedProfile};
use crate::quad::{brent_root, golden_max, Sum};

/// `τ` within this distance of `τ_e(η)` is treated as the edge.
pub const EDGE_TOL: f64 = 1e-9;
const Z_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Continuum { tau: f64, eta: f64 },
    /// `l` is the scale used in `c_L` and `d_L`.
    Discrete { t: f64, n: usize, l: f64 },
}

/// Critical point and the quantities built from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalData {
    /// Negative root of the critical equation; `0` on the edge branch.
    pub z: f64,
    pub h: f64,
    pub rho: f64,
    /// Fluctuation scale; `None` outside the rarefaction region.
    pub d: Option<f64>,
    /// Discrete regime only, `d = −z c`.
    pub c: Option<f64>,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    /// `∫ ξ/(z−ξ)²`
    tau: f64,
    /// `∫ z²/(z−ξ)²`
    h: f64,
    /// `∫ z²ξ/(ξ−z)³`
    d3: f64,
    /// `∫ z/(ξ−z)`
    f: f64,
}

fn moments(profile: &SpeedProfile, z: f64, eta: f64) -> Moments {
    let (mut tau, mut h, mut d3, mut f) = (Sum::default(), Sum::default(), Sum::default(), Sum::default());
    for (lo, hi, kind) in profile.segments(0.0, eta) {
        let delta = hi - lo;
        let (u0, u1) = (kind.at(lo) - z, kind.at(hi) - z);
        let slope = match kind {
            PieceKind::Constant { .. } => 0.0,
            PieceKind::Affine { slope, .. } => slope,
        };
        let ell = if slope == 0.0 {
            delta / u0
        } else {
            (slope * delta / u0).ln_1p() / slope
        };
        let inv = delta / (u0 * u1);
        tau.add(ell + z * inv);
        h.add(z * z * inv);
        d3.add(z * z * inv + z * z * z * delta * (u0 + u1) / (2.0 * u0 * u0 * u1 * u1));
        f.add(z * ell);
    }
    Moments {
        tau: tau.value(),
        h: h.value(),
        d3: d3.value(),
        f: f.value(),
    }
}

fn check_point(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    let (_, upper) = profile.range_on(0.0, eta);
    if !upper.is_finite() {
        return Err(Error::Domain("profile unbounded on [0, eta]".into()));
    }
    Ok((profile.tau_e(eta)?, upper))
}

/// Lower bracket at which the right-hand side of the critical equation is
/// below `tau`.
fn lower_bracket(upper: f64, mass: f64, tau: f64) -> f64 {
    -(upper + (mass * upper / tau).sqrt())
}

/// The unique `z < 0` with `τ = ∫₀^η ξ(y)/(z−ξ(y))² dy`.
pub fn solve_frak_z(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<f64> {
    let (tau_e, upper) = check_point(profile, tau, eta)?;
    if tau >= tau_e {
        return Err(Error::Regime(format!(
            "tau = {tau} is not below tau_e({eta}) = {tau_e}"
        )));
    }
    let lo = lower_bracket(upper, eta, tau);
    brent_root(|z| moments(profile, z, eta).tau - tau, lo, 0.0, Z_TOL)
}

/// `𝔷`, `𝔥`, `ρ` and `𝔡` at `(τ, η)`. On and beyond the edge the height and
/// density vanish and `d` is `None`.
pub fn limit_quantities(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<CriticalData> {
    let (tau_e, _) = check_point(profile, tau, eta)?;
    let regime = Regime::Continuum { tau, eta };
    if tau >= tau_e - EDGE_TOL {
        return Ok(CriticalData {
            z: 0.0,
            h: 0.0,
            rho: 0.0,
            d: None,
            c: None,
            regime,
        });
    }
    let z = solve_frak_z(profile, tau, eta)?;
    let m = moments(profile, z, eta);
    let xi = profile.eval(eta)?;
    Ok(CriticalData {
        z,
        h: m.h,
        rho: z / (z - xi),
        d: Some(m.d3.cbrt()),
        c: None,
        regime,
    })
}

/// `ρ` with the left limit of `ξ` at `η`.
pub fn rho_left(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<f64> {
    let q = limit_quantities(profile, tau, eta)?;
    if q.d.is_none() {
        return Ok(0.0);
    }
    Ok(q.z / (q.z - profile.eval_left(eta)?))
}

/// `𝔥 = max_{z<0} (τz − ∫₀^η z/(ξ−z) dy)` by golden-section search.
pub fn legendre_height(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<f64> {
    let (_, upper) = check_point(profile, tau, eta)?;
    let lo = lower_bracket(upper, eta, tau);
    let (_, value) = golden_max(|z| tau * z - moments(profile, z, eta).f, lo, 0.0, 1e-12);
    Ok(value.max(0.0))
}

/// Discrete critical point for rates `ξ_1..ξ_N` at time `t`, with scale
/// `L` (default `N`) in `c_L` and `d_L`.
pub fn discrete_crit(rates: &DiscreteRates, t: f64, n: usize, l: Option<f64>) -> Result<CriticalData> {
    if n == 0 {
        return Err(Error::Domain("discrete_crit needs N >= 1".into()));
    }
    let xi = rates.first(n)?;
    let l = l.unwrap_or(n as f64);
    if !(l > 0.0) {
        return Err(Error::Domain(format!("scale L must be positive, got {l}")));
    }
    let t_e = rates.t_e(n)?;
    if !(t > 0.0 && t < t_e) {
        return Err(Error::Regime(format!("t = {t} outside (0, t_e(N) = {t_e})")));
    }
    let upper = xi.iter().copied().fold(0.0, f64::max);
    let rhs = |z: f64| xi.iter().map(|&a| a / ((z - a) * (z - a))).collect::<Sum>().value();
    let z = brent_root(|z| rhs(z) - t, lower_bracket(upper, n as f64, t), 0.0, Z_TOL)?;
    let h = xi.iter().map(|&a| z * z / ((z - a) * (z - a))).collect::<Sum>().value();
    let s3 = xi.iter().map(|&a| a / ((-z) * (a - z).powi(3))).collect::<Sum>().value();
    let c = (s3 / l).cbrt();
    Ok(CriticalData {
        z,
        h,
        rho: z / (z - xi[n - 1]),
        d: Some(-z * c),
        c: Some(c),
        regime: Regime::Discrete { t, n, l },
    })
}

/// `S_L(z) = tz − h log(−z) + Σ_{a≤N} log(ξ_a − z)` with principal logs.
pub fn s_l_eval(z: Complex64, t: f64, n: usize, h: f64, rates: &DiscreteRates) -> Result<Complex64> {
    let xi = rates.first(n)?;
    if z.im.abs() < 1e-14 && z.re >= -1e-14 {
        return Err(Error::Domain(format!("z = {z} on the branch cut [0, ∞)")));
    }
    Ok(xi.iter().fold(z * t - (-z).ln() * h, |acc, &a| acc + (a - z).ln()))
}

/// Residuals of the density field at `(τ, η)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroResidual {
    /// Central-difference value of `∂_τ ρ + ∂_η (ξρ/(1−ρ))`.
    pub pde: f64,
    /// `|ξ(η)ρ/(1−ρ) + 𝔷|`.
    pub identity: f64,
}

fn density(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<f64> {
    Ok(limit_quantities(profile, tau, eta)?.rho)
}

fn flux(profile: &SpeedProfile, tau: f64, eta: f64) -> Result<f64> {
    let rho = density(profile, tau, eta)?;
    Ok(profile.eval(eta)? * rho / (1.0 - rho))
}

/// Hydrodynamic residual by central differences with step `step`.
pub fn hydro_residual(profile: &SpeedProfile, tau: f64, eta: f64, step: f64) -> Result<HydroResidual> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {step}")));
    }
    if eta - 2.0 * step <= 0.0 || tau - step <= 0.0 {
        return Err(Error::Placement(format!("stencil of step {step} leaves the quadrant at ({tau}, {eta})")));
    }
    if let Some(b) = profile.breakpoints().find(|b| (b - eta).abs() < 2.0 * step) {
        return Err(Error::Placement(format!("stencil at eta = {eta} crosses the breakpoint {b}")));
    }
    let inside = |ta: f64, e: f64| -> Result<bool> { Ok(ta < profile.tau_e(e)? - EDGE_TOL) };
    let corners = [(tau + step, eta), (tau - step, eta), (tau, eta + step), (tau, eta - step)];
    let inside_all = corners
        .iter()
        .map(|&(a, b)| inside(a, b))
        .collect::<Result<Vec<_>>>()?;
    let vacuum_all = corners
        .iter()
        .map(|&(a, b)| Ok(a > profile.tau_e(b)? + EDGE_TOL))
        .collect::<Result<Vec<_>>>()?;
    if vacuum_all.iter().all(|&v| v) {
        return Ok(HydroResidual { pde: 0.0, identity: 0.0 });
    }
    if !inside_all.iter().all(|&v| v) {
        return Err(Error::Placement(format!(
            "stencil of step {step} at ({tau}, {eta}) crosses the edge tau_e"
        )));
    }
    let d_tau = (density(profile, tau + step, eta)? - density(profile, tau - step, eta)?) / (2.0 * step);
    let d_eta = (flux(profile, tau, eta + step)? - flux(profile, tau, eta - step)?) / (2.0 * step);
    let q = limit_quantities(profile, tau, eta)?;
    let identity = (profile.eval(eta)? * q.rho / (1.0 - q.rho) + q.z).abs();
    Ok(HydroResidual {
        pde: d_tau + d_eta,
        identity,
    })
}
