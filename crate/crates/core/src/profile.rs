//! Speed profiles: the macroscopic speed function, its per-site
//! discretisation, and the edge-time functions built from them.
//!
//! A profile is a finite list of pieces on `[0, ∞)`, each constant or
//! affine in the absolute coordinate `y`. Profiles are right-continuous at
//! breakpoints: the value at a breakpoint is the value of the piece that
//! starts there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Sum;

/// Shape of one piece. Affine pieces evaluate to `slope * y + intercept`
/// with `y` the absolute coordinate, not the offset from the piece start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PieceKind {
    Constant { value: f64 },
    Affine { slope: f64, intercept: f64 },
}

impl PieceKind {
    #[inline]
    pub fn at(&self, y: f64) -> f64 {
        match *self {
            PieceKind::Constant { value } => value,
            PieceKind::Affine { slope, intercept } => slope * y + intercept,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    #[serde(flatten)]
    pub kind: PieceKind,
}

/// Serialized form of a profile: the ordered piece records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub pieces: Vec<Piece>,
}

impl ProfileSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("profile: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("profile: {e}")))
    }
}

/// Global bounds `m ≤ ξ ≤ M` over `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounds {
    Declared { lower: f64, upper: f64 },
    /// The profile grows without bound. Simulation is fine; the asymptotic
    /// theory does not apply.
    Unverified { lower: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pieces: Vec<Piece>,
    bounds: Bounds,
}

impl SpeedProfile {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Config("profile needs at least one piece".into()));
        }
        if pieces[0].start != 0.0 {
            return Err(Error::Config(format!(
                "first piece must start at 0, got {}",
                pieces[0].start
            )));
        }
        for w in pieces.windows(2) {
            if !(w[1].start > w[0].start) || !w[1].start.is_finite() {
                return Err(Error::Config(format!(
                    "piece starts must be strictly increasing and finite: {} then {}",
                    w[0].start, w[1].start
                )));
            }
        }
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        let mut bounded = true;
        for (i, p) in pieces.iter().enumerate() {
            let lo_end = p.kind.at(p.start);
            let (a, b) = match pieces.get(i + 1) {
                Some(next) => (lo_end, p.kind.at(next.start)),
                None => match p.kind {
                    PieceKind::Constant { value } => (value, value),
                    PieceKind::Affine { slope, intercept } => {
                        if slope < 0.0 {
                            return Err(Error::Domain(
                                "last affine piece with negative slope eventually vanishes".into(),
                            ));
                        }
                        if slope > 0.0 {
                            bounded = false;
                        }
                        (lo_end, slope * p.start + intercept)
                    }
                },
            };
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Config("non-finite profile coefficients".into()));
            }
            lower = lower.min(a.min(b));
            upper = upper.max(a.max(b));
        }
        if !(lower > 0.0) {
            return Err(Error::Domain(format!(
                "speed profile must be positive, infimum is {lower}"
            )));
        }
        let bounds = if bounded {
            Bounds::Declared { lower, upper }
        } else {
            Bounds::Unverified { lower }
        };
        Ok(SpeedProfile { pieces, bounds })
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        Self::new(spec.pieces.clone())
    }

    pub fn to_spec(&self) -> ProfileSpec {
        ProfileSpec {
            pieces: self.pieces.clone(),
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![Piece {
            start: 0.0,
            kind: PieceKind::Constant { value },
        }])
    }

    /// `first` on `[0, breakpoint)`, `second` on `[breakpoint, ∞)`.
    pub fn two_piece(first: f64, breakpoint: f64, second: f64) -> Result<Self> {
        Self::new(vec![
            Piece {
                start: 0.0,
                kind: PieceKind::Constant { value: first },
            },
            Piece {
                start: breakpoint,
                kind: PieceKind::Constant { value: second },
            },
        ])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.bounds, Bounds::Declared { .. })
    }

    fn piece_index(&self, y: f64) -> usize {
        self.pieces.partition_point(|p| p.start <= y) - 1
    }

    /// Profile value at `y ≥ 0` (right-continuous).
    pub fn eval(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(format!("profile evaluated at y = {y} < 0")));
        }
        Ok(self.pieces[self.piece_index(y)].kind.at(y))
    }

    /// Left limit at `y > 0`; equals `eval` away from breakpoints.
    pub fn eval_left(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("left limit needs y > 0, got {y}")));
        }
        let i = self.pieces.partition_point(|p| p.start < y) - 1;
        Ok(self.pieces[i].kind.at(y))
    }

    /// Breakpoints (piece starts other than 0).
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.start)
    }

    /// The pieces restricted to `[a, b]`, as `(lo, hi, kind)` triples with
    /// `lo < hi`.
    pub fn segments(&self, a: f64, b: f64) -> Vec<(f64, f64, PieceKind)> {
        let mut out = Vec::new();
        if !(b > a) {
            return out;
        }
        for (i, p) in self.pieces.iter().enumerate() {
            let end = self.pieces.get(i + 1).map_or(f64::INFINITY, |n| n.start);
            let lo = p.start.max(a);
            let hi = end.min(b);
            if hi > lo {
                out.push((lo, hi, p.kind));
            }
        }
        out
    }

    /// `(min, max)` of the profile over `[a, b]`.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (l, r, k) in self.segments(a, b) {
            for v in [k.at(l), k.at(r)] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Per-site rates `ξ_x = profile(x / scale)` for `x = 1..=n_max`.
    pub fn discretize(&self, scale: f64, n_max: usize) -> Result<DiscreteRates> {
        if !(scale > 0.0) || n_max == 0 {
            return Err(Error::Domain(format!(
                "discretize needs scale > 0 and n_max >= 1, got {scale}, {n_max}"
            )));
        }
        let rates = (1..=n_max)
            .map(|x| self.eval(x as f64 / scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteRates {
            rates,
            provenance: Provenance::Sampled { scale },
        })
    }

    /// `τ_e(η) = ∫₀^η dy / ξ(y)`, piece-exact.
    pub fn tau_e(&self, eta: f64) -> Result<f64> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("tau_e needs eta > 0, got {eta}")));
        }
        let mut total = Sum::default();
        for (lo, hi, kind) in self.segments(0.0, eta) {
            let (vl, vr) = (kind.at(lo), kind.at(hi));
            if !(vl > 0.0 && vr > 0.0) {
                return Err(Error::Singular(format!(
                    "profile vanishes on [{lo}, {hi}]"
                )));
            }
            total.add(match kind {
                PieceKind::Constant { value } => (hi - lo) / value,
                PieceKind::Affine { slope, .. } => {
                    if slope == 0.0 {
                        (hi - lo) / vl
                    } else {
                        // ∫ dy/(s y + c) = ln(v_r / v_l) / s, written to keep
                        // precision when the relative change is small
                        ((vr - vl) / vl).ln_1p() / slope
                    }
                }
            });
        }
        Ok(total.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Sampled { scale: f64 },
    Explicit,
}

/// Positive per-site rates `ξ_1, ξ_2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRates {
    rates: Vec<f64>,
    provenance: Provenance,
}

impl DiscreteRates {
    pub fn explicit(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Domain("empty rate vector".into()));
        }
        if let Some(bad) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Domain(format!("rates must be positive, got {bad}")));
        }
        Ok(DiscreteRates {
            rates,
            provenance: Provenance::Explicit,
        })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rates
    }

    /// The first `n` rates.
    pub fn first(&self, n: usize) -> Result<&[f64]> {
        self.rates.get(..n).ok_or_else(|| {
            Error::Range(format!("requested {n} rates, only {} available", self.len()))
        })
    }

    /// Rate at site `x` (1-based).
    pub fn at(&self, x: usize) -> f64 {
        self.rates[x - 1]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `t_e(N) = Σ_{a ≤ N} 1/ξ_a`.
    pub fn t_e(&self, n: usize) -> Result<f64> {
        Ok(self.first(n)?.iter().map(|r| 1.0 / r).collect::<Sum>().value())
    }
}
