//! Coordinate changes between radial profiles on ℝ^N (or a half-space) and
//! profiles on balls, with their Jacobians, induced weights and a two-sided
//! check of the integral identities they carry.
//!
//! Every map sends r ∈ (0,∞) to s ∈ (0,R) increasingly:
//!
//! * interior, exterior, trace: r^k = s^k − R^k with k = (p−n)/(p−1), n the
//!   transplant dimension (N, or N−1 for trace);
//! * planar: r^{2−N} = log(R/s).
//!
//! Interior and trace put the Finsler norm on the ball side, exterior and
//! planar on the line side. Points on the ball side are [`Coord`]s that
//! carry the distance to the boundary, so weights that blow up or vanish at
//! s = R are evaluated without cancellation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Error, Result};
use crate::norms::{AmbientConstants, NormSpec};
use crate::quadrature::{self, sum_pieces, QuadResult};
use crate::report::{Tolerances, VerificationReport};
use crate::specfun::sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Interior,
    Exterior,
    Trace,
    Planar,
}

impl MapKind {
    pub fn name(self) -> &'static str {
        match self {
            MapKind::Interior => "interior",
            MapKind::Exterior => "exterior",
            MapKind::Trace => "trace",
            MapKind::Planar => "planar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    InteriorWeight,
    ExteriorWeight,
    TraceAR,
    PlanarW,
}

/// A radial coordinate together with its distance to the ball boundary.
/// On the line side `gap` is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coord {
    pub x: f64,
    pub gap: f64,
}

impl Coord {
    pub fn ball(s: f64, radius: f64) -> Self {
        Coord { x: s, gap: radius - s }
    }

    pub fn line(r: f64) -> Self {
        Coord { x: r, gap: f64::INFINITY }
    }
}

/// ln(1 + e^y) without overflow.
fn log1p_exp(y: f64) -> f64 {
    if y > 35.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// ln(s/R) from a ball coordinate, accurate at both ends.
fn log_ratio(c: Coord, radius: f64) -> f64 {
    if c.gap <= 0.5 * radius {
        (-c.gap / radius).ln_1p()
    } else {
        (c.x / radius).ln()
    }
}

/// Values that leave the floating-point range this close to the wall are
/// products of an underflowed profile and an overflowed weight.
const WALL_ZONE: f64 = 1e-100;

pub(crate) fn wall_safe(v: f64, c: Coord, radius: f64) -> f64 {
    if !v.is_finite() && c.gap < WALL_ZONE * radius {
        0.0
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransplantMap {
    kind: MapKind,
    ambient: usize,
    dim: usize,
    p: f64,
    radius: f64,
}

impl TransplantMap {
    pub fn new(kind: MapKind, ambient: usize, p: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(domain(format!("R must be positive and finite, got {radius}")));
        }
        let nf = ambient as f64;
        let dim = match kind {
            MapKind::Interior | MapKind::Exterior => {
                if ambient < 2 {
                    return Err(domain(format!("{} map needs N >= 2, got {ambient}", kind.name())));
                }
                if !(p > 1.0 && p < nf) {
                    return Err(domain(format!("{} map needs 1 < p < N, got p = {p}, N = {ambient}", kind.name())));
                }
                ambient
            }
            MapKind::Trace => {
                if ambient < 3 {
                    return Err(domain(format!("trace map needs N >= 3, got {ambient}")));
                }
                if !(p > 1.0 && p < nf - 1.0) {
                    return Err(domain(format!("trace map needs 1 < p < N-1, got p = {p}, N = {ambient}")));
                }
                ambient - 1
            }
            MapKind::Planar => {
                if ambient < 3 {
                    return Err(domain(format!("planar map needs N >= 3, got {ambient}")));
                }
                if p != 2.0 {
                    return Err(domain(format!("planar map has p = 2, got {p}")));
                }
                ambient
            }
        };
        Ok(TransplantMap { kind, ambient, dim, p, radius })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// N.
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// The dimension the radial variables live in: N, or N−1 for trace.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The same map on another ball.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.kind, self.ambient, self.p, radius)
    }

    /// (n−p)/(p−1) = −k.
    pub fn decay(&self) -> f64 {
        (self.dim as f64 - self.p) / (self.p - 1.0)
    }

    /// Dimension of the profile on the ball side (2 for planar).
    pub fn ball_dim(&self) -> usize {
        if self.kind == MapKind::Planar {
            2
        } else {
            self.dim
        }
    }

    /// Dimension of the profile on the line side.
    pub fn line_dim(&self) -> usize {
        self.dim
    }

    /// Whether the Finsler norm acts on the ball side.
    pub fn finsler_on_ball(&self) -> bool {
        matches!(self.kind, MapKind::Interior | MapKind::Trace)
    }

    pub fn natural_weight(&self) -> WeightKind {
        match self.kind {
            MapKind::Interior => WeightKind::InteriorWeight,
            MapKind::Exterior => WeightKind::ExteriorWeight,
            MapKind::Trace => WeightKind::TraceAR,
            MapKind::Planar => WeightKind::PlanarW,
        }
    }

    pub fn label(&self) -> String {
        format!("{}(N={},p={},R={})", self.kind.name(), self.ambient, self.p, self.radius)
    }

    /// r ↦ s as a ball coordinate; no argument checks.
    pub fn forward_coord(&self, r: f64) -> Coord {
        let big_r = self.radius;
        match self.kind {
            MapKind::Planar => {
                let e = r.powf(2.0 - self.ambient as f64);
                Coord { x: big_r * (-e).exp(), gap: -big_r * (-e).exp_m1() }
            }
            _ => {
                let a = self.decay();
                // s = R (1 + (R/r)^a)^{-1/a}
                let l = log1p_exp(a * (big_r / r).ln()) / a;
                Coord { x: big_r * (-l).exp(), gap: -big_r * (-l).exp_m1() }
            }
        }
    }

    /// s ↦ r from a ball coordinate; no argument checks. Overflows to ∞
    /// near the wall when the decay is small; see `inverse_coord_ln`.
    pub fn inverse_coord(&self, c: Coord) -> f64 {
        self.inverse_coord_ln(c).exp()
    }

    /// s ↦ ln r from a ball coordinate; finite for every gap > 0.
    pub fn inverse_coord_ln(&self, c: Coord) -> f64 {
        let lr = -log_ratio(c, self.radius); // ln(R/s) > 0
        match self.kind {
            MapKind::Planar => lr.ln() / (2.0 - self.ambient as f64),
            _ => {
                let a = self.decay();
                // r = R ((R/s)^a − 1)^{-1/a}
                self.radius.ln() - (a * lr).exp_m1().ln() / a
            }
        }
    }

    pub fn map_forward(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(domain(format!("map_forward needs r > 0, got {r}")));
        }
        Ok(self.forward_coord(r).x)
    }

    pub fn map_inverse(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < self.radius) {
            return Err(domain(format!("map_inverse needs 0 < s < R = {}, got {s}", self.radius)));
        }
        Ok(self.inverse_coord(Coord::ball(s, self.radius)))
    }

    /// ds/dr at r, given s = s(r).
    pub fn jacobian_at(&self, r: f64, s: f64) -> f64 {
        match self.kind {
            MapKind::Planar => {
                let n = self.ambient as f64;
                ((n - 2.0).ln() + s.ln() + (1.0 - n) * r.ln()).exp()
            }
            _ => ((self.dim as f64 - 1.0) / (self.p - 1.0) * (s / r).ln()).exp(),
        }
    }

    /// ln(ds/dr) at r, given s = s(r); finite where ds/dr underflows.
    pub fn log_jacobian_at(&self, r: f64, s: f64) -> f64 {
        self.log_jacobian_ln(r.ln(), s)
    }

    /// ln(ds/dr) from ln r and s = s(r).
    pub fn log_jacobian_ln(&self, lr: f64, s: f64) -> f64 {
        match self.kind {
            MapKind::Planar => {
                let n = self.ambient as f64;
                (n - 2.0).ln() + s.ln() + (1.0 - n) * lr
            }
            _ => (self.dim as f64 - 1.0) / (self.p - 1.0) * (s.ln() - lr),
        }
    }

    pub fn map_jacobian(&self, r: f64) -> Result<f64> {
        let s = self.map_forward(r)?;
        Ok(self.jacobian_at(r, s))
    }

    /// The weight of `kind` at a point: a ball coordinate for interior and
    /// trace weights, a line coordinate r for exterior and planar ones.
    /// `kappa` is κ_N of the norm and only enters the planar weight.
    pub fn weight_at(&self, kind: WeightKind, at: Coord, kappa: f64) -> Result<f64> {
        if kind != self.natural_weight() {
            return Err(input(format!("weight {kind:?} does not belong to the {} map", self.kind.name())));
        }
        match kind {
            WeightKind::InteriorWeight | WeightKind::TraceAR => {
                if !(at.x > 0.0 && at.gap > 0.0) || at.gap.is_infinite() {
                    return Err(domain(format!("weight needs 0 < s < R, got s = {} (gap {})", at.x, at.gap)));
                }
            }
            WeightKind::ExteriorWeight | WeightKind::PlanarW => {
                if !(at.x > 0.0) || !at.x.is_finite() {
                    return Err(domain(format!("weight needs r > 0, got {}", at.x)));
                }
                if kind == WeightKind::PlanarW && !(kappa > 0.0) {
                    return Err(domain("planar weight needs kappa > 0"));
                }
            }
        }
        Ok(self.weight_unchecked(at, kappa))
    }

    /// [`TransplantMap::weight_at`] for the map's own weight, without checks.
    pub fn weight_unchecked(&self, at: Coord, kappa: f64) -> f64 {
        self.log_weight(at, kappa).exp()
    }

    /// Natural logarithm of the map's own weight; finite wherever the
    /// coordinate is, even when the weight itself is not representable.
    pub fn log_weight(&self, at: Coord, kappa: f64) -> f64 {
        let n = self.dim as f64;
        let p = self.p;
        let a = self.decay();
        match self.kind {
            MapKind::Interior => {
                // (1 − (s/R)^a)^{−p(n−1)/(n−p)}
                let base = -(a * log_ratio(at, self.radius)).exp_m1();
                -(p * (n - 1.0) / (n - p)) * base.ln()
            }
            MapKind::Trace => {
                // (1 − (s/R)^a)^{2(n−1)/(n−p)}
                let base = -(a * log_ratio(at, self.radius)).exp_m1();
                (2.0 * (n - 1.0) / (n - p)) * base.ln()
            }
            MapKind::Exterior => {
                // (1 + (r/R)^a)^{−p(n−1)/(n−p)}
                -(p * (n - 1.0) / (n - p)) * log1p_exp(a * (at.x / self.radius).ln())
            }
            MapKind::Planar => {
                let nn = self.ambient as f64;
                let r = at.x;
                (2.0 * PI * (nn - 2.0) / (nn * kappa)).ln() + 2.0 * self.radius.ln()
                    - 2.0 * (nn - 1.0) * r.ln()
                    - 2.0 * r.powf(2.0 - nn)
            }
        }
    }
}

/// v·e^{lw} without forming e^{lw}; 0 stays 0.
pub(crate) fn scale_by_exp(v: f64, lw: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * (v.abs().ln() + lw).exp()
    }
}

/// v·e^{lw}·r^k, formed in log space only when a factor leaves the normal range.
pub(crate) fn radial_density(v: f64, lw: f64, r: f64, k: i32) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let rk = r.powi(k);
    if rk.is_finite() && rk >= f64::MIN_POSITIVE {
        let base = if lw == 0.0 { v } else { scale_by_exp(v, lw) };
        if base.is_finite() && base.abs() >= f64::MIN_POSITIVE {
            return base * rk;
        }
    }
    scale_by_exp(v, lw + k as f64 * r.ln())
}

/// (g|U'(r)|)^p r^k for a line profile; r^{k/p} is folded into U' when
/// either factor leaves the normal range.
pub(crate) fn line_energy_density(u: &RadialProfile, g: f64, p: f64, r: f64, k: i32) -> f64 {
    let direct = (g * u.deriv_at(r).abs()).powf(p);
    let rk = r.powi(k);
    if direct.is_finite() && direct >= f64::MIN_POSITIVE && rk.is_finite() && rk >= f64::MIN_POSITIVE {
        return direct * rk;
    }
    (g * u.deriv_scaled(Coord::line(r), k as f64 / p * r.ln()).abs()).powf(p)
}

impl fmt::Display for TransplantMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRepr {
    kind: MapKind,
    #[serde(rename = "N")]
    n: usize,
    #[serde(default = "two")]
    p: f64,
    #[serde(rename = "R")]
    r: f64,
}

fn two() -> f64 {
    2.0
}

impl Serialize for TransplantMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapRepr { kind: self.kind, n: self.ambient, p: self.p, r: self.radius }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransplantMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MapRepr::deserialize(d)?;
        TransplantMap::new(m.kind, m.n, m.p, m.r).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Profiles

pub type ProfileFn = Arc<dyn Fn(Coord) -> f64 + Send + Sync>;
pub type SlabFn = Arc<dyn Fn(Coord, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { radius: f64 },
    HalfLine,
}

impl Domain {
    pub fn coord(&self, x: f64) -> Coord {
        match self {
            Domain::Ball { radius } => Coord::ball(x, *radius),
            Domain::HalfLine => Coord::line(x),
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Domain::Ball { radius } => Some(*radius),
            Domain::HalfLine => None,
        }
    }
}

/// Central-difference step that stays inside the domain.
fn fd_step(c: Coord) -> f64 {
    let h = f64::EPSILON.cbrt() * c.x.abs().max(1.0);
    h.min(0.5 * c.x).min(0.5 * c.gap)
}

/// A one-variable profile U(r) or V(s) generating a symmetric function in
/// `dim` dimensions. Kinks are listed in `breakpoints` so quadrature can
/// split there.
#[derive(Clone)]
pub struct RadialProfile {
    pub label: String,
    pub domain: Domain,
    pub dim: usize,
    pub breakpoints: Vec<f64>,
    value: ProfileFn,
    deriv: Option<ProfileFn>,
    scaled_deriv: Option<ScaledDerivFn>,
}

/// (c, ln λ) ↦ λ·V'(c), for derivatives that overflow before scaling.
pub type ScaledDerivFn = Arc<dyn Fn(Coord, f64) -> f64 + Send + Sync>;

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("dim", &self.dim)
            .field("breakpoints", &self.breakpoints)
            .field("analytic_derivative", &self.deriv.is_some())
            .finish()
    }
}

impl RadialProfile {
    pub fn new(label: impl Into<String>, domain: Domain, dim: usize, value: ProfileFn, deriv: Option<ProfileFn>) -> Self {
        RadialProfile { label: label.into(), domain, dim, breakpoints: Vec::new(), value, deriv, scaled_deriv: None }
    }

    /// Profile on the half-line from plain closures in r.
    pub fn on_line(
        label: impl Into<String>,
        dim: usize,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        let value: ProfileFn = Arc::new(move |c: Coord| value(c.x));
        let deriv = deriv.map(|d| -> ProfileFn { Arc::new(move |c: Coord| d(c.x)) });
        Self::new(label, Domain::HalfLine, dim, value, deriv)
    }

    pub fn with_breakpoints(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breakpoints = breaks;
        self
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn eval(&self, c: Coord) -> f64 {
        (self.value)(c)
    }

    pub fn eval_at(&self, x: f64) -> f64 {
        self.eval(self.domain.coord(x))
    }

    /// Derivative in the profile's own variable: closed form if supplied,
    /// central differences otherwise.
    pub fn deriv(&self, c: Coord) -> f64 {
        match &self.deriv {
            Some(d) => d(c),
            None => {
                let h = fd_step(c);
                let plus = Coord { x: c.x + h, gap: c.gap - h };
                let minus = Coord { x: c.x - h, gap: c.gap + h };
                ((self.value)(plus) - (self.value)(minus)) / (2.0 * h)
            }
        }
    }

    pub fn deriv_at(&self, x: f64) -> f64 {
        self.deriv(self.domain.coord(x))
    }

    /// e^{ln_scale}·V'(c), finite whenever the product is.
    pub fn deriv_scaled(&self, c: Coord, ln_scale: f64) -> f64 {
        match &self.scaled_deriv {
            Some(d) => d(c, ln_scale),
            None => scale_by_exp(self.deriv(c), ln_scale),
        }
    }

    /// |V| just inside the boundary, at s = R(1 − 10⁻⁶).
    pub fn boundary_value(&self) -> Option<f64> {
        self.domain.radius().map(|r| self.eval(Coord { x: r * (1.0 - 1e-6), gap: r * 1e-6 }).abs())
    }

    /// c·V.
    pub fn scaled(&self, c: f64) -> RadialProfile {
        let v = self.value.clone();
        let d = self.deriv.clone();
        let sd = self.scaled_deriv.clone();
        let mut out = self.clone();
        out.label = format!("{c}*{}", self.label);
        out.value = Arc::new(move |x| c * v(x));
        out.deriv = d.map(|d| -> ProfileFn { Arc::new(move |x| c * d(x)) });
        out.scaled_deriv = sd.map(|d| -> ScaledDerivFn { Arc::new(move |x, l| c * d(x, l)) });
        out
    }

    /// V + δ·η on the same domain.
    pub fn perturbed(&self, eta: &RadialProfile, delta: f64) -> Result<RadialProfile> {
        if eta.domain != self.domain || eta.dim != self.dim {
            return Err(input("perturbation must live on the same domain and dimension"));
        }
        let (v, e) = (self.value.clone(), eta.value.clone());
        let (dv, de) = (self.clone(), eta.clone());
        let mut breaks = self.breakpoints.clone();
        breaks.extend(eta.breakpoints.iter().copied());
        Ok(RadialProfile::new(
            format!("{} + {delta}*{}", self.label, eta.label),
            self.domain,
            self.dim,
            Arc::new(move |c| v(c) + delta * e(c)),
            Some(Arc::new(move |c| dv.deriv(c) + delta * de.deriv(c))),
        )
        .with_breakpoints(breaks))
    }
}

/// A two-variable profile U(r,t) or V(s,t) on a half-space or a
/// ball × half-line.
#[derive(Clone)]
pub struct SlabProfile {
    pub label: String,
    pub domain: Domain,
    pub dim: usize,
    value: SlabFn,
    d_radial: Option<SlabFn>,
    d_t: Option<SlabFn>,
}

impl fmt::Debug for SlabProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlabProfile").field("label", &self.label).field("domain", &self.domain).field("dim", &self.dim).finish()
    }
}

impl SlabProfile {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        dim: usize,
        value: SlabFn,
        d_radial: Option<SlabFn>,
        d_t: Option<SlabFn>,
    ) -> Self {
        SlabProfile { label: label.into(), domain, dim, value, d_radial, d_t }
    }

    pub fn eval(&self, c: Coord, t: f64) -> f64 {
        (self.value)(c, t)
    }

    pub fn d_radial(&self, c: Coord, t: f64) -> f64 {
        match &self.d_radial {
            Some(d) => d(c, t),
            None => {
                let h = fd_step(c);
                ((self.value)(Coord { x: c.x + h, gap: c.gap - h }, t)
                    - (self.value)(Coord { x: c.x - h, gap: c.gap + h }, t))
                    / (2.0 * h)
            }
        }
    }

    pub fn d_t(&self, c: Coord, t: f64) -> f64 {
        match &self.d_t {
            Some(d) => d(c, t),
            None => {
                let h = f64::EPSILON.cbrt() * t.abs().max(1.0);
                if t >= h {
                    ((self.value)(c, t + h) - (self.value)(c, t - h)) / (2.0 * h)
                } else {
                    (-3.0 * (self.value)(c, t) + 4.0 * (self.value)(c, t + h) - (self.value)(c, t + 2.0 * h)) / (2.0 * h)
                }
            }
        }
    }

    /// c·V.
    pub fn scaled(&self, c: f64) -> SlabProfile {
        let v = self.value.clone();
        let this = self.clone();
        let this2 = self.clone();
        SlabProfile {
            label: format!("{c}*{}", self.label),
            domain: self.domain,
            dim: self.dim,
            value: Arc::new(move |x, t| c * v(x, t)),
            d_radial: Some(Arc::new(move |x, t| c * this.d_radial(x, t))),
            d_t: Some(Arc::new(move |x, t| c * this2.d_t(x, t))),
        }
    }
}

fn check_side(map: &TransplantMap, domain: Domain, dim: usize) -> Result<()> {
    match domain {
        Domain::Ball { radius } => {
            if radius != map.radius() {
                return Err(input(format!("profile lives on a ball of radius {radius}, the map on radius {}", map.radius())));
            }
            if dim != map.ball_dim() {
                return Err(input(format!("ball-side profile must be {}-dimensional, got {dim}", map.ball_dim())));
            }
        }
        Domain::HalfLine => {
            if dim != map.line_dim() {
                return Err(input(format!("line-side profile must be {}-dimensional, got {dim}", map.line_dim())));
            }
        }
    }
    Ok(())
}

/// Moves a profile to the other side of the map: values by composition,
/// the derivative by the chain rule with ds/dr.
pub fn transplant_profile(map: &TransplantMap, profile: &RadialProfile) -> Result<RadialProfile> {
    check_side(map, profile.domain, profile.dim)?;
    let m = *map;
    let src = profile.clone();
    let src_d = profile.clone();
    match profile.domain {
        Domain::HalfLine => {
            let breaks = profile.breakpoints.iter().map(|&r| m.forward_coord(r).x).collect();
            let src_s = profile.clone();
            let mut out = RadialProfile::new(
                format!("{} transplanted to the {} ball", profile.label, m.kind().name()),
                Domain::Ball { radius: m.radius() },
                m.ball_dim(),
                Arc::new(move |c| src.eval(Coord::line(m.inverse_coord(c)))),
                Some(Arc::new(move |c| {
                    let lr = m.inverse_coord_ln(c);
                    scale_by_exp(src_d.deriv(Coord::line(lr.exp())), -m.log_jacobian_ln(lr, c.x))
                })),
            )
            .with_breakpoints(breaks);
            out.scaled_deriv = Some(Arc::new(move |c, l| {
                let lr = m.inverse_coord_ln(c);
                scale_by_exp(src_s.deriv(Coord::line(lr.exp())), l - m.log_jacobian_ln(lr, c.x))
            }));
            Ok(out)
        }
        Domain::Ball { .. } => {
            let breaks = profile.breakpoints.iter().map(|&s| m.inverse_coord(Coord::ball(s, m.radius()))).collect();
            let src_s = profile.clone();
            let mut out = RadialProfile::new(
                format!("{} transplanted to the {} line", profile.label, m.kind().name()),
                Domain::HalfLine,
                m.line_dim(),
                Arc::new(move |c| src.eval(m.forward_coord(c.x))),
                Some(Arc::new(move |c| {
                    let s = m.forward_coord(c.x);
                    src_d.deriv(s) * m.jacobian_at(c.x, s.x)
                })),
            )
            .with_breakpoints(breaks);
            out.scaled_deriv = Some(Arc::new(move |c, l| {
                let s = m.forward_coord(c.x);
                src_s.deriv_scaled(s, l + m.log_jacobian_ln(c.x.ln(), s.x))
            }));
            Ok(out)
        }
    }
}

/// [`transplant_profile`] for two-variable profiles; `t` is untouched.
pub fn transplant_slab(map: &TransplantMap, profile: &SlabProfile) -> Result<SlabProfile> {
    check_side(map, profile.domain, profile.dim)?;
    let m = *map;
    let (a, b, c) = (profile.clone(), profile.clone(), profile.clone());
    match profile.domain {
        Domain::HalfLine => Ok(SlabProfile::new(
            format!("{} transplanted to the {} ball", profile.label, m.kind().name()),
            Domain::Ball { radius: m.radius() },
            m.ball_dim(),
            Arc::new(move |x, t| a.eval(Coord::line(m.inverse_coord(x)), t)),
            Some(Arc::new(move |x, t| {
                let lr = m.inverse_coord_ln(x);
                scale_by_exp(b.d_radial(Coord::line(lr.exp()), t), -m.log_jacobian_ln(lr, x.x))
            })),
            Some(Arc::new(move |x, t| c.d_t(Coord::line(m.inverse_coord(x)), t))),
        )),
        Domain::Ball { .. } => Ok(SlabProfile::new(
            format!("{} transplanted to the {} line", profile.label, m.kind().name()),
            Domain::HalfLine,
            m.line_dim(),
            Arc::new(move |x, t| a.eval(m.forward_coord(x.x), t)),
            Some(Arc::new(move |x, t| {
                let s = m.forward_coord(x.x);
                b.d_radial(s, t) * m.jacobian_at(x.x, s.x)
            })),
            Some(Arc::new(move |x, t| c.d_t(m.forward_coord(x.x), t))),
        )),
    }
}

// ---------------------------------------------------------------------------
// Radial quadrature

/// ∫_0^R f over a ball coordinate, split at `breaks`. The last piece is
/// edge-aware at s = R.
pub fn integrate_ball(f: impl Fn(Coord) -> f64, radius: f64, breaks: &[f64], tol: f64) -> Result<QuadResult> {
    let mut cuts = vec![0.0];
    cuts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < radius));
    cuts.push(radius);
    let mut parts = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let last = b == radius;
        let q = quadrature::integrate_singular_edges(
            |p| {
                let c = Coord { x: p.x, gap: if last { p.to_hi } else { radius - p.x } };
                wall_safe(f(c), c, radius)
            },
            a,
            b,
            tol,
        )?;
        parts.push(q);
    }
    Ok(sum_pieces(&parts, tol))
}

/// ∫_0^R g over a ball coordinate after s = R e^{−u}, for integrands with
/// logarithmic singularities at the centre. `f(c, ln s)` returns g(s)·s.
/// Below s = f64::MIN_POSITIVE the coordinate is not representable; that
/// disc is left out and f(u_max)·u_max is added to the error estimate.
pub fn integrate_ball_log(f: impl Fn(Coord, f64) -> f64, radius: f64, breaks: &[f64], tol: f64) -> Result<QuadResult> {
    let ubreaks: Vec<f64> = breaks.iter().filter(|b| **b > 0.0 && **b < radius).map(|b| (radius / b).ln()).collect();
    let u_max = (radius / f64::MIN_POSITIVE).ln();
    let g = |u: f64| {
        if u > u_max {
            return 0.0;
        }
        let c = Coord { x: radius * (-u).exp(), gap: -radius * (-u).exp_m1() };
        wall_safe(f(c, radius.ln() - u), c, radius)
    };
    let mut q = integrate_line(g, &ubreaks, tol)?;
    q.error_estimate += (g(u_max) * u_max).abs();
    Ok(q)
}

/// ∫_0^∞ f(r) dr, split at `breaks`.
pub fn integrate_line(f: impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> Result<QuadResult> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && b.is_finite()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() {
        return quadrature::integrate_halfline(&f, tol);
    }
    let mut parts = Vec::new();
    let mut a = 0.0;
    for &b in &cuts {
        parts.push(quadrature::integrate_singular(&f, a, b, tol)?);
        a = b;
    }
    parts.push(quadrature::integrate_tail(&f, a, tol)?);
    Ok(sum_pieces(&parts, tol))
}

fn side(q: QuadResult, what: &str) -> Result<QuadResult> {
    q.require(what)
}

fn named<T>(r: Result<T>, what: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::Precision { what: w, estimate, error } => Error::Precision { what: format!("{what}: {w}"), estimate, error },
        Error::Divergence(m) => Error::Divergence(format!("{what}: {m}")),
        other => other,
    })
}

/// The quantity compared by an identity.
#[derive(Clone)]
pub enum Observable {
    /// ∫|∇u|^p against ∫H(∇v)^p.
    Energy,
    /// ∫F(u) against the weighted ∫F(v).
    Functional { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Observable {
    pub fn functional(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Observable::Functional { label: label.into(), f: Arc::new(f) }
    }

    /// F(u) = |u|^q.
    pub fn power(q: f64) -> Self {
        Self::functional(format!("|u|^{q}"), move |u| u.abs().powf(q))
    }

    pub fn label(&self) -> String {
        match self {
            Observable::Energy => "gradient energy".to_string(),
            Observable::Functional { label, .. } => format!("F(u) = {label}"),
        }
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// H(∇H⁰(y)) at a fixed direction; 1 for every norm, evaluated numerically
/// so the identities exercise the norm rather than assume it.
pub fn dual_gradient_factor(spec: &NormSpec) -> Result<f64> {
    let y: Vec<f64> = (0..spec.dim()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    spec.eval(&spec.dual_grad(&y)?)
}

fn check_norm(map: &TransplantMap, spec: &NormSpec) -> Result<()> {
    if spec.dim() != map.dim() {
        return Err(input(format!(
            "the {} map needs a norm on R^{}, got dimension {}",
            map.kind().name(),
            map.dim(),
            spec.dim()
        )));
    }
    Ok(())
}

/// Both sides of the identity carried by `map` for `profile`, each by its
/// own quadrature in its native coordinate. The profile may be given on
/// either side; the other side is obtained by [`transplant_profile`].
pub fn equivalence_check(
    map: &TransplantMap,
    spec: &NormSpec,
    profile: &RadialProfile,
    obs: &Observable,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if map.kind() == MapKind::Trace {
        return Err(input("the trace map relates two-variable profiles; use trace_equivalence_check"));
    }
    check_norm(map, spec)?;
    let amb = AmbientConstants::new(spec)?;
    let g = dual_gradient_factor(spec)?;
    equivalence_with(map, spec, &amb, g, profile, obs, tol)
}

/// [`equivalence_check`] with precomputed ambient constants and H(∇H⁰).
pub fn equivalence_with(
    map: &TransplantMap,
    spec: &NormSpec,
    amb: &AmbientConstants,
    g: f64,
    profile: &RadialProfile,
    obs: &Observable,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if map.kind() == MapKind::Trace {
        return Err(input("the trace map relates two-variable profiles; use trace_equivalence_check"));
    }
    check_norm(map, spec)?;
    check_side(map, profile.domain, profile.dim)?;
    let (line, ball) = match profile.domain {
        Domain::HalfLine => (profile.clone(), transplant_profile(map, profile)?),
        Domain::Ball { .. } => (transplant_profile(map, profile)?, profile.clone()),
    };
    let n = map.dim() as i32;
    let p = map.p();
    let big_r = map.radius();
    let nk = amb.dimension as f64 * amb.kappa;
    let omega = amb.sphere_area;
    let kappa = amb.kappa;
    let m = *map;

    let (lhs, rhs, lhs_err, rhs_err) = match (map.kind(), obs) {
        (MapKind::Interior, Observable::Energy) => {
            let l = named(integrate_line(|r| line_energy_density(&line, 1.0, p, r, n - 1), &line.breakpoints, tol.smooth), "euclidean side")?;
            let l = side(l, "euclidean side")?;
            let b = named(
                integrate_ball(|c| (g * ball.deriv(c).abs()).powf(p) * c.x.powi(n - 1), big_r, &ball.breakpoints, tol.singular),
                "finsler side",
            )?;
            let b = side(b, "finsler side")?;
            (omega * l.value, amb.ratio * nk * b.value, omega * l.error_estimate, amb.ratio * nk * b.error_estimate)
        }
        (MapKind::Interior, Observable::Functional { f, .. }) => {
            let l = side(named(integrate_line(|r| radial_density(f(line.eval_at(r)), 0.0, r, n - 1), &line.breakpoints, tol.smooth), "euclidean side")?, "euclidean side")?;
            let b = side(
                named(
                    integrate_ball(|c| scale_by_exp(f(ball.eval(c)), m.log_weight(c, kappa)) * c.x.powi(n - 1), big_r, &ball.breakpoints, tol.singular),
                    "finsler side",
                )?,
                "finsler side",
            )?;
            (omega * l.value, amb.ratio * nk * b.value, omega * l.error_estimate, amb.ratio * nk * b.error_estimate)
        }
        (MapKind::Exterior, Observable::Energy) => {
            let b = side(
                named(integrate_ball(|c| ball.deriv(c).abs().powf(p) * c.x.powi(n - 1), big_r, &ball.breakpoints, tol.singular), "euclidean side")?,
                "euclidean side",
            )?;
            let l = side(
                named(integrate_line(|r| line_energy_density(&line, g, p, r, n - 1), &line.breakpoints, tol.smooth), "finsler side")?,
                "finsler side",
            )?;
            (omega * b.value, amb.ratio * nk * l.value, omega * b.error_estimate, amb.ratio * nk * l.error_estimate)
        }
        (MapKind::Exterior, Observable::Functional { f, .. }) => {
            let b = side(
                named(integrate_ball(|c| f(ball.eval(c)) * c.x.powi(n - 1), big_r, &ball.breakpoints, tol.singular), "euclidean side")?,
                "euclidean side",
            )?;
            let l = side(
                named(
                    integrate_line(
                        |r| radial_density(f(line.eval_at(r)), m.log_weight(Coord::line(r), kappa), r, n - 1),
                        &line.breakpoints,
                        tol.smooth,
                    ),
                    "finsler side",
                )?,
                "finsler side",
            )?;
            (omega * b.value, amb.ratio * nk * l.value, omega * b.error_estimate, amb.ratio * nk * l.error_estimate)
        }
        (MapKind::Planar, Observable::Energy) => {
            let b = side(
                named(integrate_ball_log(|c, ls| ball.deriv_scaled(c, ls).powi(2), big_r, &ball.breakpoints, tol.singular), "euclidean side")?,
                "euclidean side",
            )?;
            let l = side(
                named(integrate_line(|r| line_energy_density(&line, g, 2.0, r, n - 1), &line.breakpoints, tol.smooth), "finsler side")?,
                "finsler side",
            )?;
            let pref = 2.0 * PI / ((n as f64 - 2.0) * nk);
            (2.0 * PI * b.value, pref * nk * l.value, 2.0 * PI * b.error_estimate, pref * nk * l.error_estimate)
        }
        (MapKind::Planar, Observable::Functional { f, .. }) => {
            let b = side(
                named(integrate_ball_log(|c, ls| scale_by_exp(f(ball.eval(c)), 2.0 * ls), big_r, &ball.breakpoints, tol.singular), "euclidean side")?,
                "euclidean side",
            )?;
            let l = side(
                named(
                    integrate_line(
                        |r| radial_density(f(line.eval_at(r)), m.log_weight(Coord::line(r), kappa), r, n - 1),
                        &line.breakpoints,
                        tol.smooth,
                    ),
                    "finsler side",
                )?,
                "finsler side",
            )?;
            (2.0 * PI * b.value, nk * l.value, 2.0 * PI * b.error_estimate, nk * l.error_estimate)
        }
        (MapKind::Trace, _) => unreachable!("rejected above"),
    };
    Ok(identity_report(map, spec, &profile.label, obs, lhs, rhs, lhs_err + rhs_err, tol))
}

fn identity_report(
    map: &TransplantMap,
    spec: &NormSpec,
    profile: &str,
    obs: &Observable,
    lhs: f64,
    rhs: f64,
    err: f64,
    tol: &Tolerances,
) -> VerificationReport {
    VerificationReport::new(
        &format!("transplant-{}", map.kind().name()),
        &format!("{} identity under the {} map", obs.label(), map.kind().name()),
        spec.label(),
        profile.to_string(),
        lhs,
        rhs,
        err,
        tol.identity,
        true,
    )
    .with_param("N", map.ambient_dim() as f64)
    .with_param("p", map.p())
    .with_param("R", map.radius())
}

/// ∫_0^∞∫_0^R (g²V_s²A + V_t²)^{p/2} A^{−p/2} s^{n−1} ds dt for a
/// ball-side profile of the trace map.
pub fn trace_ball_energy(map: &TransplantMap, ball: &SlabProfile, g: f64, tol: f64) -> Result<QuadResult> {
    let (n, p, big_r) = (map.dim() as i32, map.p(), map.radius());
    let f = |c: Coord, t: f64| {
        let la = map.log_weight(c, 0.0);
        let (vs, vt) = (ball.d_radial(c, t), ball.d_t(c, t));
        // (g²V_s²A + V_t²)^{p/2} A^{−p/2} = (g²V_s² + V_t²/A)^{p/2}
        let vt = scale_by_exp(vt, -0.5 * la);
        let v = (g * g * vs * vs + vt * vt).powf(0.5 * p) * c.x.powi(n - 1);
        wall_safe(v, c, big_r)
    };
    quadrature::integrate_outer_halfline(
        |t| {
            // for large t the mass sits near the gap of r = t; split there,
            // in the gap variable so the cut survives s rounding to R
            let cut = map.forward_coord(t).gap;
            if !(cut < 0.5 * big_r) {
                return quadrature::integrate_singular_edges(|pt| f(Coord { x: pt.x, gap: pt.to_hi }, t), 0.0, big_r, tol / 10.0);
            }
            let inner = quadrature::integrate_singular_edges(|pt| f(Coord { x: pt.to_hi, gap: pt.x }, t), cut, big_r, tol / 10.0)?;
            if cut == 0.0 {
                return Ok(inner);
            }
            let outer = quadrature::integrate_singular_edges(|pt| f(Coord { x: big_r - pt.x, gap: pt.x }, t), 0.0, cut, tol / 10.0)?;
            Ok(sum_pieces(&[inner, outer], tol / 10.0))
        },
        tol,
    )
}

/// ∫_0^R F(V(s,0)) A^{−p/2} s^{n−1} ds for a ball-side profile of the trace map.
pub fn trace_ball_boundary(map: &TransplantMap, ball: &SlabProfile, f: impl Fn(f64) -> f64, tol: f64) -> Result<QuadResult> {
    let (n, p) = (map.dim() as i32, map.p());
    integrate_ball(
        |c| scale_by_exp(f(ball.eval(c, 0.0)), -0.5 * p * map.log_weight(c, 0.0)) * c.x.powi(n - 1),
        map.radius(),
        &[],
        tol,
    )
}

/// The trace-map identity: the half-space energy against the weighted
/// ball × half-line energy, or the boundary functional ∫F(u(x,0)).
pub fn trace_equivalence_check(
    map: &TransplantMap,
    spec: &NormSpec,
    profile: &SlabProfile,
    obs: &Observable,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if map.kind() != MapKind::Trace {
        return Err(input("trace_equivalence_check needs a trace map"));
    }
    check_norm(map, spec)?;
    let amb = AmbientConstants::new(spec)?;
    let g = dual_gradient_factor(spec)?;
    trace_equivalence_with(map, spec, &amb, g, profile, obs, tol)
}

/// [`trace_equivalence_check`] with precomputed ambient constants and H(∇H⁰).
pub fn trace_equivalence_with(
    map: &TransplantMap,
    spec: &NormSpec,
    amb: &AmbientConstants,
    g: f64,
    profile: &SlabProfile,
    obs: &Observable,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if map.kind() != MapKind::Trace {
        return Err(input("trace_equivalence_with needs a trace map"));
    }
    check_norm(map, spec)?;
    check_side(map, profile.domain, profile.dim)?;
    let (line, ball) = match profile.domain {
        Domain::HalfLine => (profile.clone(), transplant_slab(map, profile)?),
        Domain::Ball { .. } => (transplant_slab(map, profile)?, profile.clone()),
    };
    let n = map.dim() as i32;
    let p = map.p();
    let nk = amb.dimension as f64 * amb.kappa;
    let omega = sphere_area(map.dim());
    let m = *map;
    let (lhs, rhs, err) = match obs {
        Observable::Energy => {
            let l = named(
                quadrature::integrate_outer_halfline(
                    |t| {
                        quadrature::integrate_halfline(
                            |r| {
                                let c = Coord::line(r);
                                let (ur, ut) = (line.d_radial(c, t), line.d_t(c, t));
                                radial_density((ur * ur + ut * ut).powf(0.5 * p), 0.0, r, n - 1)
                            },
                            tol.two_d / 10.0,
                        )
                    },
                    tol.two_d,
                ),
                "euclidean side",
            )?;
            let l = side(l, "euclidean side")?;
            let b = named(trace_ball_energy(&m, &ball, g, tol.two_d), "finsler side")?;
            let b = side(b, "finsler side")?;
            (omega * l.value, amb.ratio * nk * b.value, omega * l.error_estimate + amb.ratio * nk * b.error_estimate)
        }
        Observable::Functional { f, .. } => {
            let l = side(
                named(quadrature::integrate_halfline(|r| radial_density(f(line.eval(Coord::line(r), 0.0)), 0.0, r, n - 1), tol.smooth), "euclidean side")?,
                "euclidean side",
            )?;
            let b = side(named(trace_ball_boundary(&m, &ball, |v| f(v), tol.singular), "finsler side")?, "finsler side")?;
            (omega * l.value, amb.ratio * nk * b.value, omega * l.error_estimate + amb.ratio * nk * b.error_estimate)
        }
    };
    Ok(identity_report(map, spec, &profile.label, obs, lhs, rhs, err, tol))
}
