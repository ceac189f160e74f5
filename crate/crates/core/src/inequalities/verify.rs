//! Both sides of each inequality by quadrature in the profile's native
//! coordinate, and the strictness probe around an extremal.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::constants::{Family, SharpConstants};
use super::extremal::CaseProfile;
use crate::error::{input, Error, Result};
use crate::norms::NormSpec;
use crate::quadrature::QuadResult;
use crate::report::{Tolerances, VerificationReport};
use crate::transplant::{
    dual_gradient_factor, integrate_ball, integrate_line, line_energy_density, radial_density, scale_by_exp, trace_ball_boundary, trace_ball_energy, transplant_profile,
    transplant_slab, Coord, Domain, MapKind, RadialProfile, SlabProfile, TransplantMap,
};

/// A quadrature value with its absolute error.
#[derive(Debug, Clone, Copy)]
struct Q {
    v: f64,
    e: f64,
}

impl Q {
    fn from(q: QuadResult, what: &str) -> Result<Q> {
        let q = q.require(what)?;
        Ok(Q { v: q.value, e: q.error_estimate })
    }

    fn times(self, c: f64) -> Q {
        Q { v: c * self.v, e: c.abs() * self.e }
    }

    /// Relative error of x^a.
    fn rel_pow(self, a: f64) -> f64 {
        if self.v == 0.0 {
            0.0
        } else {
            a.abs() * self.e / self.v.abs()
        }
    }
}

/// The map each family is stated on, and the map exponent it needs.
pub fn family_map(family: Family) -> (MapKind, Option<f64>) {
    match family {
        Family::Sobolev | Family::Logsob => (MapKind::Interior, None),
        Family::Gn | Family::Nash => (MapKind::Interior, Some(2.0)),
        Family::Poincare => (MapKind::Exterior, None),
        Family::Trace => (MapKind::Trace, None),
        Family::TrudingerMoser => (MapKind::Planar, Some(2.0)),
    }
}

/// The transplant map of `family` at the given parameters.
pub fn map_for(family: Family, n: usize, exponent: f64, radius: f64) -> Result<TransplantMap> {
    let (kind, p) = family_map(family);
    TransplantMap::new(kind, n, p.unwrap_or(exponent), radius)
}

fn check_case(family: Family, spec: &NormSpec, map: &TransplantMap, k: &SharpConstants) -> Result<()> {
    let (kind, p) = family_map(family);
    if map.kind() != kind {
        return Err(input(format!("{family} is stated on the {} map, got the {} map", kind.name(), map.kind().name())));
    }
    let want_p = p.unwrap_or(k.exponent);
    if map.p() != want_p {
        return Err(input(format!("{family} needs a map with p = {want_p}, got {}", map.p())));
    }
    if k.family != family || k.n != map.ambient_dim() || k.radius != map.radius() {
        return Err(input(format!(
            "constants for {} N = {} R = {} do not match the case {family} N = {} R = {}",
            k.family,
            k.n,
            k.radius,
            map.ambient_dim(),
            map.radius()
        )));
    }
    if spec.dim() != map.dim() {
        return Err(input(format!("{family} needs a norm on R^{}, got dimension {}", map.dim(), spec.dim())));
    }
    Ok(())
}

fn ball_side(map: &TransplantMap, p: &RadialProfile) -> Result<RadialProfile> {
    match p.domain {
        Domain::Ball { .. } => Ok(p.clone()),
        Domain::HalfLine => transplant_profile(map, p),
    }
}

fn line_side(map: &TransplantMap, p: &RadialProfile) -> Result<RadialProfile> {
    match p.domain {
        Domain::HalfLine => Ok(p.clone()),
        Domain::Ball { .. } => transplant_profile(map, p),
    }
}

fn radial<'a>(family: Family, profile: &'a CaseProfile) -> Result<&'a RadialProfile> {
    profile.radial().ok_or_else(|| input(format!("{family} needs a one-variable profile")))
}

/// Shared integrals of a ball-side profile on the interior map.
struct Ball<'a> {
    map: &'a TransplantMap,
    v: &'a RadialProfile,
    nk: f64,
    kappa: f64,
    tol: f64,
}

impl Ball<'_> {
    /// Nκ∫(g|V'|)^p s^{N−1} ds.
    fn energy(&self, g: f64) -> Result<Q> {
        let (n, p) = (self.map.dim() as i32, self.map.p());
        let q = integrate_ball(|c| (g * self.v.deriv(c).abs()).powf(p) * c.x.powi(n - 1), self.map.radius(), &self.v.breakpoints, self.tol)?;
        Ok(Q::from(q, "gradient term")?.times(self.nk))
    }

    /// Nκ∫F(V) w s^{N−1} ds with the interior weight w.
    fn weighted(&self, f: impl Fn(f64) -> f64, what: &str) -> Result<Q> {
        let n = self.map.dim() as i32;
        let m = self.map;
        let q = integrate_ball(
            |c| scale_by_exp(f(self.v.eval(c)), m.log_weight(c, self.kappa)) * c.x.powi(n - 1),
            m.radius(),
            &self.v.breakpoints,
            self.tol,
        )?;
        Ok(Q::from(q, what)?.times(self.nk))
    }
}

fn constants_map(k: &SharpConstants) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = k.values.clone();
    for (name, v) in &k.tilde_values {
        out.insert(format!("tilde_{name}"), *v);
    }
    out.insert("omega_over_N_kappa".into(), k.ambient.ratio);
    out.insert("kappa".into(), k.ambient.kappa);
    out
}

/// One inequality checked on one profile.
///
/// The profile may be given on either side of the family's map; ball-side
/// families (sobolev, gn, nash, logsob, trace) integrate over the Wulff
/// ball coordinate, poincare and trudinger_moser over the half-line.
pub fn evaluate_case(
    family: Family,
    spec: &NormSpec,
    map: &TransplantMap,
    profile: &CaseProfile,
    constants: &SharpConstants,
    extremal: bool,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    check_case(family, spec, map, constants)?;
    let g = dual_gradient_factor(spec)?;
    let amb = &constants.ambient;
    let nk = amb.dimension as f64 * amb.kappa;
    let c = amb.ratio;
    let nf = map.ambient_dim() as f64;
    let p = map.p();
    let mut params: Vec<(&str, f64)> = vec![("N", nf), (family.exponent_name(), constants.exponent), ("R", map.radius())];
    let mut notes = Vec::new();
    let mut extremal = extremal;

    let (lhs, rhs, err) = match family {
        Family::Sobolev | Family::Gn | Family::Nash | Family::Logsob => {
            let v = ball_side(map, radial(family, profile)?)?;
            let b = Ball { map, v: &v, nk, kappa: amb.kappa, tol: tol.singular };
            let e = b.energy(g)?;
            match family {
                Family::Sobolev => {
                    let ps = constants.get("p_star")?;
                    let i = b.weighted(|u| u.abs().powf(ps), "L^{p*} term")?;
                    let st = constants.tilde("S")?;
                    let lhs = st * i.v.powf(p / ps);
                    (lhs, e.v, lhs * i.rel_pow(p / ps) + e.e)
                }
                Family::Gn => {
                    let q = constants.exponent;
                    let theta = constants.get("theta")?;
                    let i2q = b.weighted(|u| u.abs().powf(2.0 * q), "L^{2q} term")?;
                    let iq1 = b.weighted(|u| u.abs().powf(q + 1.0), "L^{q+1} term")?;
                    let lhs = i2q.v.powf(1.0 / (2.0 * q));
                    let a1 = (1.0 - theta) / (q + 1.0);
                    let rhs = constants.tilde("A")? * e.v.powf(0.5 * theta) * iq1.v.powf(a1);
                    (lhs, rhs, lhs * i2q.rel_pow(1.0 / (2.0 * q)) + rhs * (e.rel_pow(0.5 * theta) + iq1.rel_pow(a1)))
                }
                Family::Nash => {
                    params.push(("mu", constants.get("mu")?));
                    let i2 = b.weighted(|u| u * u, "L^2 term")?;
                    let i1 = b.weighted(f64::abs, "L^1 term")?;
                    let lhs = i2.v.powf(1.0 + 2.0 / nf);
                    let rhs = constants.tilde("B")? * e.v * i1.v.powf(4.0 / nf);
                    notes.push("squared form: (int v^2)^{1+2/N} <= B (int H(grad v)^2)(int |v|)^{4/N}".to_string());
                    (lhs, rhs, lhs * i2.rel_pow(1.0 + 2.0 / nf) + rhs * (e.rel_pow(1.0) + i1.rel_pow(4.0 / nf)))
                }
                _ => {
                    // unit mass is imposed by v ↦ v m^{−1/p}, which turns both sides
                    // into closed expressions of the unscaled integrals
                    let ip = b.weighted(|u| u.abs().powf(p), "L^p term")?;
                    let jl = b.weighted(
                        |u| {
                            let a = u.abs().powf(p);
                            if a == 0.0 {
                                0.0
                            } else {
                                a * a.ln()
                            }
                        },
                        "entropy term",
                    )?;
                    let m = c * ip.v;
                    if !(m > 0.0 && m.is_finite()) {
                        return Err(Error::Admissibility(format!("log-Sobolev mass must be positive and finite, got {m}")));
                    }
                    let scale = m.powf(-1.0 / p);
                    params.push(("mass", m));
                    params.push(("mass_scale", scale));
                    if (m - 1.0).abs() > 1e-10 {
                        notes.push(format!("profile rescaled by {scale:.15e} to unit weighted L^p mass"));
                    }
                    let lhs = (c / m) * jl.v - m.ln();
                    let lt = constants.tilde("L")?;
                    let rhs = (nf / p) * (lt * e.v / m).ln();
                    let lerr = (c / m) * jl.e + ((c / m) * jl.v.abs() + 1.0) * ip.rel_pow(1.0);
                    let rerr = (nf / p) * (e.rel_pow(1.0) + ip.rel_pow(1.0));
                    (lhs, rhs, lerr + rerr)
                }
            }
        }
        Family::Trace => {
            let slab = match profile {
                CaseProfile::Slab(s) => s.clone(),
                CaseProfile::Radial(_) => return Err(input("trace needs a two-variable profile")),
            };
            let ball: SlabProfile = match slab.domain {
                Domain::Ball { .. } => slab,
                Domain::HalfLine => transplant_slab(map, &slab)?,
            };
            let ps = constants.get("p_lower_star")?;
            let bnd = Q::from(trace_ball_boundary(map, &ball, |u| u.abs().powf(ps), tol.singular)?, "boundary term")?.times(nk);
            let en = Q::from(trace_ball_energy(map, &ball, g, tol.two_d)?, "gradient term")?.times(nk);
            let lhs = constants.tilde("S_T")? * bnd.v.powf(p / ps);
            (lhs, en.v, lhs * bnd.rel_pow(p / ps) + en.e)
        }
        Family::Poincare => {
            let u = line_side(map, radial(family, profile)?)?;
            let n = map.dim() as i32;
            let m = *map;
            let kappa = amb.kappa;
            let mass = integrate_line(
                |r| radial_density(u.eval_at(r).abs().powf(p), m.log_weight(Coord::line(r), kappa), r, n - 1),
                &u.breakpoints,
                tol.singular,
            )?;
            let mass = Q::from(mass, "L^p term")?.times(nk);
            let en = integrate_line(|r| line_energy_density(&u, g, p, r, n - 1), &u.breakpoints, tol.singular)?;
            let en = Q::from(en, "gradient term")?.times(nk * map.radius().powf(p));
            let lam = constants.get("lambda1")?;
            (lam * mass.v, en.v, lam * mass.e + en.e)
        }
        Family::TrudingerMoser => {
            let u = line_side(map, radial(family, profile)?)?;
            let n = map.dim() as i32;
            let m = *map;
            let kappa = amb.kappa;
            let en = integrate_line(|r| line_energy_density(&u, g, 2.0, r, n - 1), &u.breakpoints, tol.smooth)?;
            let en = Q::from(en, "energy")?.times(nk);
            let budget = constants.get("energy_budget")?;
            params.push(("energy", en.v));
            params.push(("energy_budget", budget));
            if en.v > budget * (1.0 + tol.rel_floor) + en.e {
                return Err(Error::Admissibility(format!("energy {:.15e} exceeds the budget {budget:.15e}", en.v)));
            }
            let f = integrate_line(
                |r| {
                    let v = u.eval_at(r);
                    radial_density(1.0, 4.0 * PI * v * v + m.log_weight(Coord::line(r), kappa), r, n - 1)
                },
                &u.breakpoints,
                tol.smooth,
            )?;
            let f = Q::from(f, "exponential functional")?.times(nk);
            extremal = false;
            (f.v, constants.get("witness_bound")?, f.e)
        }
    };

    let mut report = VerificationReport::new(
        family.name(),
        family.statement(),
        spec.label(),
        profile.label().to_string(),
        lhs,
        rhs,
        err,
        tol.rel_floor,
        extremal,
    );
    for (k, v) in params {
        report = report.with_param(k, v);
    }
    for n in notes.into_iter().chain(constants.notes.iter().cloned()) {
        report = report.with_note(n);
    }
    report.constants = Some(constants_map(constants));
    Ok(report)
}

/// Result of probing an extremal with transverse bumps.
#[derive(Debug, Clone)]
pub struct PerturbationOutcome {
    pub min_deficit: f64,
    /// Smallest deficit over error budget among the perturbed profiles.
    pub min_margin: f64,
    pub reports: Vec<VerificationReport>,
}

/// `evaluate_case` on v + δη for each direction η, in input order.
#[allow(clippy::too_many_arguments)]
pub fn perturbation_check(
    family: Family,
    spec: &NormSpec,
    map: &TransplantMap,
    base: &RadialProfile,
    delta: f64,
    directions: &[RadialProfile],
    constants: &SharpConstants,
    tol: &Tolerances,
) -> Result<PerturbationOutcome> {
    if directions.is_empty() {
        return Err(input("perturbation_check needs at least one direction"));
    }
    let base = ball_side(map, base)?;
    let reports = directions
        .par_iter()
        .map(|eta| {
            let v = if delta == 0.0 { base.clone() } else { base.perturbed(eta, delta)? };
            let r = evaluate_case(family, spec, map, &CaseProfile::Radial(v), constants, false, tol)?;
            Ok(r.with_param("delta", delta))
        })
        .collect::<Result<Vec<_>>>()?;
    let min_deficit = reports.iter().map(|r| r.deficit).fold(f64::INFINITY, f64::min);
    let min_margin = reports.iter().map(|r| r.deficit / r.error_budget).fold(f64::INFINITY, f64::min);
    Ok(PerturbationOutcome { min_deficit, min_margin, reports })
}
