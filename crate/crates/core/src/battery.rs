//! The acceptance battery behind `finsler suite`: ten criteria, each a list
//! of named checks. Reports carry no timings, so a fixed configuration
//! always produces the same bytes.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::inequalities::extremal::{
    bump_profiles, gn_extremal, logsob_extremal, nash_extremal, poincare_extremal, sobolev_extremal, trace_extremal, truncated_log_profile,
};
use crate::inequalities::{evaluate_case, map_for, perturbation_check, plap_first_eigenvalue, sharp_constants, CaseProfile, Family};
use crate::norms::{identity_residuals, polar_integral, AmbientConstants, NormSpec};
use crate::quadrature::mc_wulff_integral;
use crate::report::{Tolerances, VerificationReport, SCHEMA_VERSION};
use crate::specfun::{bessel_first_zero, sphere_area};
use crate::transplant::{
    dual_gradient_factor, equivalence_check, equivalence_with, trace_equivalence_with, Coord, Domain, MapKind, Observable, RadialProfile, SlabProfile, TransplantMap,
};

/// λ₁(B₁) for N = 3, p = 2.5 from a 10⁴-point finite-difference
/// discretization of the radial Rayleigh quotient, solved by Newton's
/// method with continuation in p from 2.
pub const FD_LAMBDA_N3_P2_5: f64 = 14.111227359248;

/// Wall-clock limit of each criterion, in seconds.
pub const TIME_LIMITS: [u64; 10] = [1, 1, 10, 60, 120, 600, 60, 60, 60, 120];

pub const TITLES: [&str; 10] = [
    "constants anchor",
    "euclidean reduction",
    "gradient identities of the norm",
    "polar formula against Monte Carlo",
    "transplant identities",
    "equality at extremals",
    "strictness under perturbation",
    "p-Laplacian eigenvalues",
    "Nash constant chain",
    "Trudinger-Moser boundedness witness",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `relative`, `at_most` or `greater_than`.
    pub rule: &'static str,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    /// The quantity compared with `tolerance`.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn relative(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        let dev = (value - reference).abs() / reference.abs();
        Check { name: name.into(), rule: "relative", value, reference: Some(reference), deviation: dev, tolerance: tol, pass: dev <= tol, error: None }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), rule: "at_most", value, reference: None, deviation: value, tolerance: limit, pass: value <= limit, error: None }
    }

    pub fn greater_than(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), rule: "greater_than", value, reference: None, deviation: value, tolerance: limit, pass: value > limit, error: None }
    }

    fn failed(name: impl Into<String>, err: impl ToString) -> Self {
        Check {
            name: name.into(),
            rule: "at_most",
            value: f64::NAN,
            reference: None,
            deviation: f64::NAN,
            tolerance: 0.0,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub reports: Vec<VerificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub norm: String,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

#[derive(Debug, Clone, Copy)]
pub struct Timing {
    pub id: usize,
    pub elapsed: Duration,
    pub limit: Duration,
}

/// Collects checks; a failed computation becomes a failed check.
#[derive(Default)]
struct Sink {
    checks: Vec<Check>,
    reports: Vec<VerificationReport>,
}

impl Sink {
    fn put(&mut self, name: &str, r: Result<Check>) {
        self.checks.push(r.unwrap_or_else(|e| Check::failed(name, e)));
    }

    fn puts(&mut self, name: &str, r: Result<Vec<Check>>) {
        match r {
            Ok(cs) => self.checks.extend(cs),
            Err(e) => self.checks.push(Check::failed(name, e)),
        }
    }

    fn finish(self, id: usize) -> CriterionResult {
        let pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        CriterionResult { id, title: TITLES[id - 1].to_string(), pass, checks: self.checks, reports: self.reports }
    }
}

/// The norms shared by criteria 3 and 5 on R^3.
pub fn battery_norms(cfg: &RunConfig) -> Result<Vec<NormSpec>> {
    Ok(vec![cfg.norm_for(3)?, NormSpec::weighted_lq(4.0, vec![1.0, 2.0, 0.5])?, NormSpec::named_gauge("skew_l3", 3)?])
}

fn eval_rel(k: &crate::inequalities::SharpConstants, name: &str) -> Result<f64> {
    let (v, t) = (k.get(name)?, k.tilde(name)?);
    Ok((v - t).abs() / v.abs())
}

fn c1() -> CriterionResult {
    let mut s = Sink::default();
    let run = || -> Result<Vec<Check>> {
        let mut out = Vec::new();
        let k = sharp_constants(Family::Sobolev, 3, 2.0, &NormSpec::euclidean(3)?, 1.0)?;
        out.push(Check::relative("S_{3,2} = 3(pi/2)^{4/3}", k.get("S")?, 3.0 * (PI / 2.0).powf(4.0 / 3.0), 1e-12));
        for n in [3, 4, 5] {
            let k = sharp_constants(Family::Logsob, n, 2.0, &NormSpec::euclidean(n)?, 1.0)?;
            out.push(Check::relative(format!("L_2 = 2/(N pi e), N = {n}"), k.get("L")?, 2.0 / (n as f64 * PI * E), 1e-12));
        }
        Ok(out)
    };
    s.puts("constants", run());
    s.finish(1)
}

fn c2() -> CriterionResult {
    let mut s = Sink::default();
    let cases: [(Family, usize, f64); 13] = [
        (Family::Sobolev, 3, 2.0),
        (Family::Sobolev, 4, 2.5),
        (Family::Sobolev, 5, 3.0),
        (Family::Gn, 3, 2.0),
        (Family::Gn, 3, 3.0),
        (Family::Gn, 4, 1.5),
        (Family::Nash, 3, 2.0),
        (Family::Nash, 4, 2.0),
        (Family::Nash, 5, 2.0),
        (Family::Logsob, 3, 2.0),
        (Family::Logsob, 4, 2.5),
        (Family::Trace, 4, 2.0),
        (Family::Trace, 5, 2.5),
    ];
    for (f, n, e) in cases {
        let name = format!("{f} N={n} {}={e}", f.exponent_name());
        let r = (|| {
            let k = sharp_constants(f, n, e, &NormSpec::euclidean(f.norm_dim(n))?, 1.0)?;
            let mut worst = (k.ratio() - 1.0).abs();
            for key in k.values.keys() {
                worst = worst.max(eval_rel(&k, key)?);
            }
            Ok(Check::at_most(format!("{name}: max relative gap between tilde and classical"), worst, 1e-12))
        })();
        s.put(&name, r);
    }
    s.finish(2)
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-4 {
            return v;
        }
    }
}

fn c3(cfg: &RunConfig) -> CriterionResult {
    let mut s = Sink::default();
    match battery_norms(cfg) {
        Err(e) => s.put("norms", Err(e)),
        Ok(norms) => {
            for spec in norms {
                let name = format!("{}: max residual at 200 points", spec.label());
                let r = (|| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    let mut worst = 0.0f64;
                    for _ in 0..200 {
                        let (xi, x) = (random_vector(&mut rng, 3), random_vector(&mut rng, 3));
                        worst = worst.max(identity_residuals(&spec, &xi, &x)?.max());
                    }
                    Ok(Check::at_most(name.clone(), worst, 1e-6))
                })();
                s.put(&name, r);
            }
        }
    }
    s.finish(3)
}

type Radial = fn(f64) -> f64;

/// Radial integrands h(H⁰(x)) of the polar-formula criterion.
pub const POLAR_INTEGRANDS: [(&str, Radial); 5] = [
    ("1", |_| 1.0),
    ("s", |s| s),
    ("s^2", |s| s * s),
    ("exp(-s)", |s| (-s).exp()),
    ("1/(1+s^2)", |s| 1.0 / (1.0 + s * s)),
];

/// The norms of the polar-formula criterion.
pub fn polar_norms(cfg: &RunConfig) -> Result<Vec<NormSpec>> {
    let base = cfg.norm_for(3)?;
    let base = if base.is_generic() { NormSpec::euclidean(3)? } else { base };
    Ok(vec![base, NormSpec::weighted_lq(4.0, vec![1.0, 2.0, 0.5])?, NormSpec::weighted_lq(1.5, vec![1.5, 1.0, 0.75])?])
}

fn c4(cfg: &RunConfig) -> CriterionResult {
    let mut s = Sink::default();
    match polar_norms(cfg) {
        Err(e) => s.put("norms", Err(e)),
        Ok(norms) => {
            for spec in &norms {
                for (label, h) in POLAR_INTEGRANDS {
                    let name = format!("{}: h = {label}, |polar - MC| / SE", spec.label());
                    let r = (|| {
                        let q = polar_integral(spec, h, 1.0)?;
                        let mc = mc_wulff_integral(spec, 1.0, |x| spec.dual(x).map(h).unwrap_or(f64::NAN), cfg.mc_samples, cfg.seed)?;
                        let z = (q.value - mc.estimate).abs() / (mc.standard_error + q.error_estimate);
                        Ok(Check::at_most(name.clone(), z, 3.0))
                    })();
                    s.put(&name, r);
                }
            }
        }
    }
    s.finish(4)
}

fn line(label: &str, u: Radial, du: Radial) -> RadialProfile {
    RadialProfile::on_line(label, 3, u, Some(Arc::new(du)))
}

/// The radial profiles of the transplant criterion, on the half-line in R^3.
pub fn identity_profiles() -> Vec<RadialProfile> {
    vec![
        line("1/(1+r^2)", |r| 1.0 / (1.0 + r * r), |r| -2.0 * r / (1.0 + r * r).powi(2)),
        line("exp(-r)", |r| (-r).exp(), |r| -(-r).exp()),
        line("(1+r)^-3", |r| (1.0 + r).powi(-3), |r| -3.0 * (1.0 + r).powi(-4)),
        line("exp(-r^2)", |r| (-r * r).exp(), |r| -2.0 * r * (-r * r).exp()),
        line("1/(1+r^4)", |r| 1.0 / (1.0 + r.powi(4)), |r| -4.0 * r.powi(3) / (1.0 + r.powi(4)).powi(2)),
    ]
}

type Slab = fn(f64, f64) -> f64;

/// The two-variable profiles of the trace identities, on R^3 × (0, ∞).
pub fn identity_slabs() -> Vec<SlabProfile> {
    let mk = |label: &str, f: Slab| SlabProfile::new(label, Domain::HalfLine, 3, Arc::new(move |c: Coord, t| f(c.x, t)), None, None);
    vec![
        mk("((1+t)^2+r^2)^-1", |r, t| 1.0 / ((1.0 + t).powi(2) + r * r)),
        mk("((1+t)^2+r^2)^-3/2", |r, t| ((1.0 + t).powi(2) + r * r).powf(-1.5)),
        mk("exp(-t)/(1+r^2)", |r, t| (-t).exp() / (1.0 + r * r)),
        mk("exp(-t-r^2)", |r, t| (-t - r * r).exp()),
        mk("(1+t+r^2)^-2", |r, t| (1.0 + t + r * r).powi(-2)),
    ]
}

/// The maps of the transplant criterion; each acts on a norm on R^3.
pub fn identity_maps() -> Result<Vec<TransplantMap>> {
    Ok(vec![
        TransplantMap::new(MapKind::Interior, 3, 2.0, 1.0)?,
        TransplantMap::new(MapKind::Exterior, 3, 1.5, 2.0)?,
        TransplantMap::new(MapKind::Trace, 4, 2.0, 1.5)?,
        TransplantMap::new(MapKind::Planar, 3, 2.0, 1.0)?,
    ])
}

fn identity_check(r: Result<VerificationReport>, tol: &Tolerances, sink: &mut Sink, name: String) {
    match r {
        Ok(rep) => {
            let mut c = Check::at_most(name, rep.relative_deficit, tol.identity);
            c.pass &= rep.pass;
            sink.checks.push(c);
            sink.reports.push(rep);
        }
        Err(e) => sink.checks.push(Check::failed(name, e)),
    }
}

fn c5(cfg: &RunConfig) -> CriterionResult {
    let tol = cfg.tolerances;
    let mut s = Sink::default();
    let (maps, norms) = match identity_maps().and_then(|m| Ok((m, battery_norms(cfg)?))) {
        Ok(v) => v,
        Err(e) => {
            s.put("setup", Err(e));
            return s.finish(5);
        }
    };
    let ambient: Vec<Result<(AmbientConstants, f64)>> =
        norms.par_iter().map(|spec| Ok((AmbientConstants::new(spec)?, dual_gradient_factor(spec)?))).collect();
    let obs = [Observable::Energy, Observable::power(3.0)];
    let mut jobs = Vec::new();
    for m in &maps {
        for (spec, amb) in norms.iter().zip(&ambient) {
            for i in 0..5 {
                for o in &obs {
                    jobs.push((m, spec, amb, i, o));
                }
            }
        }
    }
    let (radial, slabs) = (identity_profiles(), identity_slabs());
    let results: Vec<(String, Result<VerificationReport>)> = jobs
        .par_iter()
        .map(|&(m, spec, amb, i, o)| {
            let amb = amb.as_ref().map_err(Clone::clone);
            let (label, r) = if m.kind() == MapKind::Trace {
                (slabs[i].label.clone(), amb.and_then(|(a, g)| trace_equivalence_with(m, spec, a, *g, &slabs[i], o, &tol)))
            } else {
                (radial[i].label.clone(), amb.and_then(|(a, g)| equivalence_with(m, spec, a, *g, &radial[i], o, &tol)))
            };
            (format!("{} map, {}, {label}, {}", m.kind().name(), spec.label(), o.label()), r)
        })
        .collect();
    for (name, r) in results {
        identity_check(r, &tol, &mut s, name);
    }
    s.finish(5)
}

/// The extremal cases of the equality criterion as (family, N, exponent).
pub const EQUALITY_CASES: [(Family, usize, f64); 10] = [
    (Family::Sobolev, 3, 2.0),
    (Family::Sobolev, 3, 2.5),
    (Family::Sobolev, 4, 2.0),
    (Family::Sobolev, 4, 2.5),
    (Family::Gn, 3, 2.0),
    (Family::Gn, 3, 3.0),
    (Family::Nash, 3, 2.0),
    (Family::Nash, 4, 2.0),
    (Family::Logsob, 3, 2.0),
    (Family::Poincare, 3, 2.0),
];

/// The extremal profile used by the battery for `family` on `map`.
pub fn standard_extremal(family: Family, map: &TransplantMap, exponent: f64) -> Result<CaseProfile> {
    Ok(match family {
        Family::Sobolev => CaseProfile::Radial(sobolev_extremal(map, 1.0, 1.0)?),
        Family::Gn => CaseProfile::Radial(gn_extremal(map, exponent, 1.0, 1.0)?),
        Family::Nash => CaseProfile::Radial(nash_extremal(map, 1.0, 1.0)?),
        Family::Logsob => CaseProfile::Radial(logsob_extremal(map, 1.0)?),
        Family::Poincare => CaseProfile::Radial(poincare_extremal(map)?),
        Family::Trace => CaseProfile::Slab(trace_extremal(map, 1.0, 1.0)?),
        Family::TrudingerMoser => CaseProfile::Radial(truncated_log_profile(map, 1.0)?),
    })
}

/// The equality check of one extremal case.
pub fn extremal_report(cfg: &RunConfig, family: Family, n: usize, e: f64) -> Result<VerificationReport> {
    let spec = cfg.norm_for(family.norm_dim(n))?;
    let map = map_for(family, n, e, cfg.radius)?;
    let k = sharp_constants(family, n, e, &spec, cfg.radius)?;
    evaluate_case(family, &spec, &map, &standard_extremal(family, &map, e)?, &k, true, &cfg.tolerances)
}

fn c6(cfg: &RunConfig) -> CriterionResult {
    let mut s = Sink::default();
    let mut cases: Vec<(Family, usize, f64)> = EQUALITY_CASES.to_vec();
    cases.push((Family::Trace, 4, 2.0));
    cases.retain(|c| cfg.families.contains(&c.0));
    let results: Vec<_> = cases.par_iter().map(|&(f, n, e)| (format!("{f} N={n} {}={e}", f.exponent_name()), extremal_report(cfg, f, n, e))).collect();
    for (name, r) in results {
        match r {
            Ok(rep) => {
                let mut c = Check::at_most(format!("{name}: relative deficit"), rep.relative_deficit, 1e-5);
                c.pass &= rep.pass;
                s.checks.push(c);
                s.reports.push(rep);
            }
            Err(e) => s.checks.push(Check::failed(name, e)),
        }
    }
    s.finish(6)
}

fn c7(cfg: &RunConfig) -> CriterionResult {
    let mut s = Sink::default();
    let run = || -> Result<(Vec<Check>, Vec<VerificationReport>)> {
        let spec = cfg.norm_for(3)?;
        let map = map_for(Family::Sobolev, 3, 2.0, cfg.radius)?;
        let k = sharp_constants(Family::Sobolev, 3, 2.0, &spec, cfg.radius)?;
        let base = sobolev_extremal(&map, 1.0, 1.0)?;
        let out = perturbation_check(Family::Sobolev, &spec, &map, &base, 0.1, &bump_profiles(cfg.radius, 3, 3), &k, &cfg.tolerances)?;
        let mut checks = vec![Check::greater_than("bump perturbations, min deficit / error budget", out.min_margin, 10.0)];
        let along = CaseProfile::Radial(sobolev_extremal(&map, 1.1, 1.0)?);
        let rep = evaluate_case(Family::Sobolev, &spec, &map, &along, &k, true, &cfg.tolerances)?;
        checks.push(Check::at_most("in-family a -> a + 0.1, |deficit| / error budget", rep.deficit.abs() / rep.error_budget, 1.0));
        let mut reports = out.reports;
        reports.push(rep);
        Ok((checks, reports))
    };
    match run() {
        Ok((c, r)) => {
            s.checks = c;
            s.reports = r;
        }
        Err(e) => s.put("perturbation", Err(e)),
    }
    s.finish(7)
}

fn c8() -> CriterionResult {
    let mut s = Sink::default();
    let tol = crate::inequalities::eigen::EIGEN_TOL;
    s.put("lambda_1(3, 2)", plap_first_eigenvalue(3, 2.0, tol).map(|e| Check::relative("lambda_1(3, 2) = pi^2", e.lambda, PI * PI, 1e-8)));
    s.put(
        "lambda_1(2, 2)",
        (|| {
            let j = bessel_first_zero(0.0)?.value;
            Ok(Check::relative("lambda_1(2, 2) = j_{0,1}^2", plap_first_eigenvalue(2, 2.0, tol)?.lambda, j * j, 1e-8))
        })(),
    );
    s.put(
        "lambda_1(3, 2.5)",
        plap_first_eigenvalue(3, 2.5, tol).map(|e| Check::relative("lambda_1(3, 2.5) against finite differences", e.lambda, FD_LAMBDA_N3_P2_5, 1e-4)),
    );
    s.finish(8)
}

/// The first positive root of tan x = x, by bisection on (π, 3π/2).
pub fn tan_root() -> f64 {
    let (mut lo, mut hi) = (PI + 1e-3, 1.5 * PI - 1e-9);
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid.tan() - mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c9(cfg: &RunConfig) -> CriterionResult {
    let mut s = Sink::default();
    let oracle = tan_root();
    s.checks.push(Check::relative("tan x = x root against 4.493409457909064", oracle, 4.493409457909064, 1e-10));
    let run = || -> Result<(Vec<Check>, VerificationReport)> {
        let mu = bessel_first_zero(1.5)?.value;
        let spec = cfg.norm_for(3)?;
        let k = sharp_constants(Family::Nash, 3, 2.0, &spec, cfg.radius)?;
        let nf = 3.0f64;
        let b = 2.0 * (1.0 + nf / 2.0).powf(1.0 + 2.0 / nf) * nf.powf(-1.0 + 2.0 / nf) / (mu * mu * sphere_area(3).powf(2.0 / nf));
        let rep = extremal_report(cfg, Family::Nash, 3, 2.0)?;
        let mut checks = vec![
            Check::relative("first zero of J_{3/2}", mu, oracle, 1e-10),
            Check::relative("mu carried by the Nash constants", k.get("mu")?, mu, 0.0),
            Check::relative("B from mu", k.get("B")?, b, 1e-12),
            Check::relative("mu carried by the Nash report", rep.params.get("mu").copied().unwrap_or(f64::NAN), mu, 0.0),
        ];
        let mut eq = Check::at_most("Nash equality, relative deficit", rep.relative_deficit, 1e-5);
        eq.pass &= rep.pass;
        checks.push(eq);
        Ok((checks, rep))
    };
    match run() {
        Ok((c, r)) => {
            s.checks.extend(c);
            s.reports.push(r);
        }
        Err(e) => s.put("nash chain", Err(e)),
    }
    s.finish(9)
}

fn c10(cfg: &RunConfig) -> CriterionResult {
    let mut s = Sink::default();
    let setup = || -> Result<(NormSpec, TransplantMap, crate::inequalities::SharpConstants)> {
        let spec = cfg.norm_for(3)?;
        let map = map_for(Family::TrudingerMoser, 3, 2.0, cfg.radius)?;
        let k = sharp_constants(Family::TrudingerMoser, 3, 2.0, &spec, cfg.radius)?;
        Ok((spec, map, k))
    };
    let (spec, map, k) = match setup() {
        Ok(v) => v,
        Err(e) => {
            s.put("setup", Err(e));
            return s.finish(10);
        }
    };
    let obs = Observable::functional("exp(4 pi u^2)", |u| (4.0 * PI * u * u).exp());
    let results: Vec<_> = (1..=10)
        .into_par_iter()
        .map(|i| {
            let k_idx = i as f64;
            let prof = truncated_log_profile(&map, k_idx);
            let rep = prof.clone().and_then(|u| evaluate_case(Family::TrudingerMoser, &spec, &map, &CaseProfile::Radial(u), &k, false, &cfg.tolerances));
            let id = prof.and_then(|u| equivalence_check(&map, &spec, &u, &obs, &cfg.tolerances));
            (i, rep, id)
        })
        .collect();
    for (i, rep, id) in results {
        match rep {
            Ok(r) => {
                let mut c = Check::at_most(format!("k={i}: functional below the witness bound"), r.lhs, r.rhs);
                c.pass &= r.pass && r.lhs.is_finite();
                s.checks.push(c);
                s.reports.push(r);
            }
            Err(e) => s.checks.push(Check::failed(format!("k={i}: functional"), e)),
        }
        identity_check(id, &cfg.tolerances, &mut s, format!("k={i}: planar identity for exp(4 pi u^2)"));
    }
    s.finish(10)
}

/// Runs one criterion by number.
pub fn run_criterion(cfg: &RunConfig, id: usize) -> CriterionResult {
    match id {
        1 => c1(),
        2 => c2(),
        3 => c3(cfg),
        4 => c4(cfg),
        5 => c5(cfg),
        6 => c6(cfg),
        7 => c7(cfg),
        8 => c8(),
        9 => c9(cfg),
        10 => c10(cfg),
        _ => panic!("criteria are numbered 1 to 10"),
    }
}

/// Runs all ten criteria in parallel; results are in criterion order.
pub fn run_battery(cfg: &RunConfig) -> (SuiteReport, Vec<Timing>) {
    let out: Vec<(CriterionResult, Timing)> = (1..=10)
        .into_par_iter()
        .map(|id| {
            let t0 = Instant::now();
            let r = run_criterion(cfg, id);
            (r, Timing { id, elapsed: t0.elapsed(), limit: Duration::from_secs(TIME_LIMITS[id - 1]) })
        })
        .collect();
    let (criteria, timings): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    let norm = cfg.norm_for(cfg.n.max(1)).map(|n| n.label()).unwrap_or_else(|_| cfg.norm.to_string());
    let pass = criteria.iter().all(|c| c.pass);
    (SuiteReport { schema_version: SCHEMA_VERSION, seed: cfg.seed, norm, pass, criteria }, timings)
}

/// One line per criterion.
pub fn summary_lines(report: &SuiteReport) -> Vec<String> {
    report
        .criteria
        .iter()
        .map(|c| {
            let failed = c.checks.iter().filter(|k| !k.pass).count();
            format!("criterion {:>2} {:<36} {} ({} checks, {} failed)", c.id, c.title, if c.pass { "PASS" } else { "FAIL" }, c.checks.len(), failed)
        })
        .collect()
}

pub const SUITE_CSV_HEADER: &str = "criterion,title,check,rule,value,reference,deviation,tolerance,pass,error";

/// One CSV row per check.
pub fn suite_to_csv(report: &SuiteReport) -> String {
    let field = |s: &str| if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() };
    let mut out = String::from(SUITE_CSV_HEADER);
    out.push('\n');
    for c in &report.criteria {
        for k in &c.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e},{},{:e},{:e},{},{}",
                c.id,
                field(&c.title),
                field(&k.name),
                k.rule,
                k.value,
                k.reference.map(|r| format!("{r:e}")).unwrap_or_default(),
                k.deviation,
                k.tolerance,
                k.pass,
                field(k.error.as_deref().unwrap_or("")),
            );
        }
    }
    out
}
