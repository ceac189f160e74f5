//! Extremal profiles of each family, written in the coordinates where the
//! Finsler statement lives, plus the non-extremal test profiles.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::constants::{logsob_normalizer, Family};
use super::eigen::Eigenfunction;
use crate::error::{domain, input, Result};
use crate::specfun::{bessel_first_zero, bessel_j_over_power};
use crate::transplant::{transplant_profile, Coord, Domain, MapKind, RadialProfile, SlabProfile, TransplantMap};

/// A profile handed to the verification engine.
#[derive(Debug, Clone)]
pub enum CaseProfile {
    Radial(RadialProfile),
    Slab(SlabProfile),
}

impl CaseProfile {
    pub fn label(&self) -> &str {
        match self {
            CaseProfile::Radial(p) => &p.label,
            CaseProfile::Slab(p) => &p.label,
        }
    }

    pub fn scaled(&self, c: f64) -> CaseProfile {
        match self {
            CaseProfile::Radial(p) => CaseProfile::Radial(p.scaled(c)),
            CaseProfile::Slab(p) => CaseProfile::Slab(p.scaled(c)),
        }
    }

    pub fn radial(&self) -> Option<&RadialProfile> {
        match self {
            CaseProfile::Radial(p) => Some(p),
            CaseProfile::Slab(_) => None,
        }
    }
}

/// Free parameters of an extremal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtremalSpec {
    Sobolev { a: f64, b: f64 },
    Gn { sigma: f64, c: f64 },
    Nash { lambda: f64, c: f64 },
    Logsob { sigma: f64 },
    Poincare,
    Trace { eps: f64, c: f64 },
}

impl ExtremalSpec {
    pub fn family(&self) -> Family {
        match self {
            ExtremalSpec::Sobolev { .. } => Family::Sobolev,
            ExtremalSpec::Gn { .. } => Family::Gn,
            ExtremalSpec::Nash { .. } => Family::Nash,
            ExtremalSpec::Logsob { .. } => Family::Logsob,
            ExtremalSpec::Poincare => Family::Poincare,
            ExtremalSpec::Trace { .. } => Family::Trace,
        }
    }

    /// The family's extremal with unit parameters.
    pub fn default_for(family: Family) -> Result<Self> {
        Ok(match family {
            Family::Sobolev => ExtremalSpec::Sobolev { a: 1.0, b: 1.0 },
            Family::Gn => ExtremalSpec::Gn { sigma: 1.0, c: 1.0 },
            Family::Nash => ExtremalSpec::Nash { lambda: 1.0, c: 1.0 },
            Family::Logsob => ExtremalSpec::Logsob { sigma: 1.0 },
            Family::Poincare => ExtremalSpec::Poincare,
            Family::Trace => ExtremalSpec::Trace { eps: 1.0, c: 1.0 },
            Family::TrudingerMoser => return Err(input("the Trudinger-Moser family has no computed extremal")),
        })
    }

    /// Parses `key=value` pairs such as `a=1,b=2`; missing keys take the
    /// defaults of [`ExtremalSpec::default_for`].
    pub fn parse(family: Family, text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| input(format!("extremal parameter `{part}` is not key=value")))?;
            let v: f64 = v.trim().parse().map_err(|_| input(format!("extremal parameter `{part}` has a non-numeric value")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let mut take = |k: &str, default: f64| kv.remove(k).unwrap_or(default);
        let spec = match family {
            Family::Sobolev => ExtremalSpec::Sobolev { a: take("a", 1.0), b: take("b", 1.0) },
            Family::Gn => ExtremalSpec::Gn { sigma: take("sigma", 1.0), c: take("c", 1.0) },
            Family::Nash => ExtremalSpec::Nash { lambda: take("lambda", 1.0), c: take("c", 1.0) },
            Family::Logsob => ExtremalSpec::Logsob { sigma: take("sigma", 1.0) },
            Family::Poincare => ExtremalSpec::Poincare,
            Family::Trace => ExtremalSpec::Trace { eps: take("eps", 1.0), c: take("c", 1.0) },
            Family::TrudingerMoser => return Err(input("the Trudinger-Moser family has no computed extremal")),
        };
        if let Some(k) = kv.keys().next() {
            return Err(input(format!("unknown extremal parameter `{k}` for {family}")));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(domain(format!("{name} must be positive, got {v}"))) };
        let nonzero = |v: f64| if v != 0.0 && v.is_finite() { Ok(()) } else { Err(domain("C must be nonzero and finite")) };
        match *self {
            ExtremalSpec::Sobolev { a, b } => {
                pos("a", a)?;
                pos("b", b)
            }
            ExtremalSpec::Gn { sigma, c } => {
                pos("sigma", sigma)?;
                nonzero(c)
            }
            ExtremalSpec::Nash { lambda, c } => {
                pos("lambda", lambda)?;
                nonzero(c)
            }
            ExtremalSpec::Logsob { sigma } => pos("sigma", sigma),
            ExtremalSpec::Poincare => Ok(()),
            ExtremalSpec::Trace { eps, c } => {
                pos("eps", eps)?;
                nonzero(c)
            }
        }
    }
}

impl fmt::Display for ExtremalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtremalSpec::Sobolev { a, b } => write!(f, "sobolev extremal a={a}, b={b}"),
            ExtremalSpec::Gn { sigma, c } => write!(f, "gn extremal sigma={sigma}, C={c}"),
            ExtremalSpec::Nash { lambda, c } => write!(f, "nash extremal lambda={lambda}, C={c}"),
            ExtremalSpec::Logsob { sigma } => write!(f, "logsob extremal sigma={sigma}"),
            ExtremalSpec::Poincare => write!(f, "poincare extremal"),
            ExtremalSpec::Trace { eps, c } => write!(f, "trace extremal eps={eps}, C={c}"),
        }
    }
}

/// ln(e^a + e^b).
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Sign and natural log of |x|; (0, −∞) for x = 0.
type SignedLog = (f64, f64);

fn from_signed_log((sign, l): SignedLog) -> f64 {
    if sign == 0.0 {
        0.0
    } else {
        sign * l.exp()
    }
}

/// V(s) = U(r(s)) on the ball of `map`; `u` and `du` take ln r, and U' comes
/// in signed-log form so that V' = U'(r)/(ds/dr) is formed without overflow.
fn pulled_back(
    map: &TransplantMap,
    label: String,
    u: impl Fn(f64) -> f64 + Send + Sync + 'static,
    du: impl Fn(f64) -> SignedLog + Send + Sync + 'static,
    breaks_r: &[f64],
) -> RadialProfile {
    let (m1, m2) = (*map, *map);
    let breaks = breaks_r.iter().map(|&r| map.forward_coord(r).x).collect();
    RadialProfile::new(
        label,
        Domain::Ball { radius: map.radius() },
        map.ball_dim(),
        Arc::new(move |c: Coord| u(m1.inverse_coord_ln(c))),
        Some(Arc::new(move |c: Coord| {
            let lr = m2.inverse_coord_ln(c);
            let (sign, l) = du(lr);
            from_signed_log((sign, l - m2.log_jacobian_ln(lr, c.x)))
        })),
    )
    .with_breakpoints(breaks)
}

fn require_map(map: &TransplantMap, kind: MapKind, p: Option<f64>, family: Family) -> Result<()> {
    if map.kind() != kind {
        return Err(input(format!("{family} lives on the {} map, got the {} map", kind.name(), map.kind().name())));
    }
    if let Some(p) = p {
        if map.p() != p {
            return Err(input(format!("{family} needs a map with p = {p}, got {}", map.p())));
        }
    }
    Ok(())
}

/// The Sobolev extremal (a + b r^{p'})^{−(N−p)/p} on the ball, r = r(s).
pub fn sobolev_extremal(map: &TransplantMap, a: f64, b: f64) -> Result<RadialProfile> {
    require_map(map, MapKind::Interior, None, Family::Sobolev)?;
    ExtremalSpec::Sobolev { a, b }.validate()?;
    let (n, p) = (map.dim() as f64, map.p());
    let pp = p / (p - 1.0);
    let e = (n - p) / p;
    let l = move |lr: f64| ln_add(a.ln(), b.ln() + pp * lr);
    Ok(pulled_back(
        map,
        format!("sobolev extremal a={a}, b={b}"),
        move |lr| (-e * l(lr)).exp(),
        move |lr| (-1.0, e.ln() + b.ln() + pp.ln() + (pp - 1.0) * lr - (e + 1.0) * l(lr)),
        &[],
    ))
}

/// The Gagliardo-Nirenberg extremal C(σ² + r²)^{−1/(q−1)} on the ball.
pub fn gn_extremal(map: &TransplantMap, q: f64, sigma: f64, c: f64) -> Result<RadialProfile> {
    require_map(map, MapKind::Interior, Some(2.0), Family::Gn)?;
    ExtremalSpec::Gn { sigma, c }.validate()?;
    if !(q > 1.0) {
        return Err(domain(format!("gn needs q > 1, got {q}")));
    }
    let e = 1.0 / (q - 1.0);
    let l = move |lr: f64| ln_add(2.0 * sigma.ln(), 2.0 * lr);
    Ok(pulled_back(
        map,
        format!("gn extremal q={q}, sigma={sigma}, C={c}"),
        move |lr| c * (-e * l(lr)).exp(),
        move |lr| (-c.signum(), c.abs().ln() + (2.0 * e).ln() + lr - (e + 1.0) * l(lr)),
        &[],
    ))
}

/// The radial Neumann mode Ψ(ρ) = U(ρ) − U(1) on [0,1], 0 beyond, with
/// U(ρ) = ρ^{−ν}J_ν(μρ), ν = (N−2)/2 and μ the first zero of J_{N/2}.
#[derive(Debug, Clone, Copy)]
pub struct NashMode {
    pub n: usize,
    pub nu: f64,
    pub mu: f64,
    u_at_one: f64,
}

impl NashMode {
    pub fn new(n: usize) -> Result<Self> {
        let nu = 0.5 * (n as f64 - 2.0);
        let mu = bessel_first_zero(0.5 * n as f64)?.value;
        let u_at_one = mu.powf(nu) * bessel_j_over_power(nu, mu)?;
        Ok(NashMode { n, nu, mu, u_at_one })
    }

    pub fn value(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            return 0.0;
        }
        self.mu.powf(self.nu) * bessel_j_over_power(self.nu, self.mu * rho).expect("argument in range") - self.u_at_one
    }

    /// Ψ'(ρ) = −μ ρ^{−ν} J_{ν+1}(μρ) on [0,1).
    pub fn deriv(&self, rho: f64) -> f64 {
        if rho >= 1.0 {
            return 0.0;
        }
        -self.mu * rho * self.mu.powf(self.nu + 1.0) * bessel_j_over_power(self.nu + 1.0, self.mu * rho).expect("argument in range")
    }
}

/// The Nash extremal CΨ(λ r(s)) on the ball; supported in r ≤ 1/λ.
pub fn nash_extremal(map: &TransplantMap, lambda: f64, c: f64) -> Result<RadialProfile> {
    require_map(map, MapKind::Interior, Some(2.0), Family::Nash)?;
    ExtremalSpec::Nash { lambda, c }.validate()?;
    let mode = NashMode::new(map.dim())?;
    let (m1, m2) = (mode, mode);
    Ok(pulled_back(
        map,
        format!("nash extremal lambda={lambda}, C={c}"),
        move |lr| c * m1.value(lambda * lr.exp()),
        move |lr| {
            let d = c * lambda * m2.deriv(lambda * lr.exp());
            if d == 0.0 {
                (0.0, f64::NEG_INFINITY)
            } else {
                (d.signum(), d.abs().ln())
            }
        },
        &[1.0 / lambda],
    ))
}

/// The log-Sobolev extremal C(N,p) exp(−r^{p'}/σ) on the ball.
pub fn logsob_extremal(map: &TransplantMap, sigma: f64) -> Result<RadialProfile> {
    require_map(map, MapKind::Interior, None, Family::Logsob)?;
    ExtremalSpec::Logsob { sigma }.validate()?;
    let (n, p) = (map.dim() as f64, map.p());
    let pp = p / (p - 1.0);
    let c = logsob_normalizer(n, p, sigma);
    Ok(pulled_back(
        map,
        format!("logsob extremal sigma={sigma}"),
        move |lr| c * (-(pp * lr).exp() / sigma).exp(),
        move |lr| (-1.0, c.ln() + (pp / sigma).ln() + (pp - 1.0) * lr - (pp * lr).exp() / sigma),
        &[],
    ))
}

/// The first eigenfunction of the ball moved to ℝ^N by the exterior map.
pub fn poincare_extremal(map: &TransplantMap) -> Result<RadialProfile> {
    require_map(map, MapKind::Exterior, None, Family::Poincare)?;
    let eig = Eigenfunction::new(map.dim(), map.p())?;
    transplant_profile(map, &eig.profile(map.radius()))
}

/// The trace extremal C(ε^{2/p}/((ε+t)² + r(s)²))^{(N−p)/(2(p−1))} on the
/// (N−1)-dimensional ball × half-line.
pub fn trace_extremal(map: &TransplantMap, eps: f64, c: f64) -> Result<SlabProfile> {
    require_map(map, MapKind::Trace, None, Family::Trace)?;
    ExtremalSpec::Trace { eps, c }.validate()?;
    let (nn, p) = (map.ambient_dim() as f64, map.p());
    let e = (nn - p) / (2.0 * (p - 1.0));
    let ln_d = move |lr: f64, t: f64| ln_add(2.0 * (eps + t).ln(), 2.0 * lr);
    let ln_u = move |lr: f64, t: f64| c.abs().ln() + e * ((2.0 / p) * eps.ln() - ln_d(lr, t));
    let (m0, m1) = (*map, *map);
    let m2 = *map;
    Ok(SlabProfile::new(
        format!("trace extremal eps={eps}, C={c}"),
        Domain::Ball { radius: map.radius() },
        map.dim(),
        Arc::new(move |x: Coord, t: f64| c.signum() * ln_u(m0.inverse_coord_ln(x), t).exp()),
        Some(Arc::new(move |x: Coord, t: f64| {
            let lr = m1.inverse_coord_ln(x);
            // ∂U/∂r = −2e r U/D, then divide by ds/dr
            -c.signum() * ((2.0 * e).ln() + lr + ln_u(lr, t) - ln_d(lr, t) - m1.log_jacobian_ln(lr, x.x)).exp()
        })),
        Some(Arc::new(move |x: Coord, t: f64| {
            let lr = m2.inverse_coord_ln(x);
            -c.signum() * ((2.0 * e).ln() + (eps + t).ln() + ln_u(lr, t) - ln_d(lr, t)).exp()
        })),
    ))
}

/// The extremal of `spec` on `map`.
pub fn extremal_profile(spec: &ExtremalSpec, map: &TransplantMap) -> Result<CaseProfile> {
    spec.validate()?;
    Ok(match *spec {
        ExtremalSpec::Sobolev { a, b } => CaseProfile::Radial(sobolev_extremal(map, a, b)?),
        ExtremalSpec::Gn { sigma, c } => {
            return Err(input(format!(
                "the gn extremal depends on q; use gn_extremal (sigma={sigma}, C={c}) or extremal_profile_q"
            )))
        }
        ExtremalSpec::Nash { lambda, c } => CaseProfile::Radial(nash_extremal(map, lambda, c)?),
        ExtremalSpec::Logsob { sigma } => CaseProfile::Radial(logsob_extremal(map, sigma)?),
        ExtremalSpec::Poincare => CaseProfile::Radial(poincare_extremal(map)?),
        ExtremalSpec::Trace { eps, c } => CaseProfile::Slab(trace_extremal(map, eps, c)?),
    })
}

/// [`extremal_profile`] with the family exponent supplied (q for gn).
pub fn extremal_profile_q(spec: &ExtremalSpec, map: &TransplantMap, exponent: f64) -> Result<CaseProfile> {
    match *spec {
        ExtremalSpec::Gn { sigma, c } => Ok(CaseProfile::Radial(gn_extremal(map, exponent, sigma, c)?)),
        _ => extremal_profile(spec, map),
    }
}

/// V(s) = 1 − s/R on the ball of `map`.
pub fn linear_cutoff(map: &TransplantMap) -> RadialProfile {
    let r = map.radius();
    RadialProfile::new(
        "linear cutoff 1 - s/R",
        Domain::Ball { radius: r },
        map.ball_dim(),
        Arc::new(move |c: Coord| c.gap / r),
        Some(Arc::new(move |_| -1.0 / r)),
    )
}

/// Bumps η_j(s) = s^j (R − s)/R^{j−1}, j = 1..=count, vanishing at s = R.
pub fn bump_profiles(radius: f64, dim: usize, count: usize) -> Vec<RadialProfile> {
    (1..=count)
        .map(|j| {
            let jf = j as i32;
            RadialProfile::new(
                format!("bump s^{j}(R-s)"),
                Domain::Ball { radius },
                dim,
                Arc::new(move |c: Coord| c.x.powi(jf) * c.gap / radius.powi(jf - 1)),
                Some(Arc::new(move |c: Coord| (jf as f64 * c.x.powi(jf - 1) * c.gap - c.x.powi(jf)) / radius.powi(jf - 1))),
            )
        })
        .collect()
}

/// The truncated logarithm U_k(r) = (2π)^{−1/2} min(√k, r^{2−N}/√k) on ℝ^N,
/// the image of the Moser function of index k under the planar map.
pub fn truncated_log_profile(map: &TransplantMap, k: f64) -> Result<RadialProfile> {
    require_map(map, MapKind::Planar, None, Family::TrudingerMoser)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(domain(format!("truncation index must be positive, got {k}")));
    }
    let n = map.dim() as f64;
    let kink = k.powf(-1.0 / (n - 2.0));
    let a = (2.0 * PI).sqrt().recip();
    Ok(RadialProfile::on_line(
        format!("truncated logarithm k={k}"),
        map.dim(),
        move |r| a * k.sqrt().min(r.powf(2.0 - n) / k.sqrt()),
        Some(Arc::new(move |r: f64| if r <= kink { 0.0 } else { a * (2.0 - n) * r.powf(1.0 - n) / k.sqrt() })),
    )
    .with_breakpoints(vec![kink]))
}
