//! Sharp constants of the classical inequalities and their Wulff-ball
//! counterparts, assembled in log space.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::eigen::plap_first_eigenvalue;
use crate::error::{domain, input, Error, Result};
use crate::norms::{AmbientConstants, NormSpec};
use crate::specfun::{bessel_first_zero, log_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sobolev,
    Gn,
    Nash,
    Logsob,
    Poincare,
    Trace,
    TrudingerMoser,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Sobolev,
        Family::Gn,
        Family::Nash,
        Family::Logsob,
        Family::Poincare,
        Family::Trace,
        Family::TrudingerMoser,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sobolev => "sobolev",
            Family::Gn => "gn",
            Family::Nash => "nash",
            Family::Logsob => "logsob",
            Family::Poincare => "poincare",
            Family::Trace => "trace",
            Family::TrudingerMoser => "trudinger_moser",
        }
    }

    /// The statement a report of this family checks.
    pub fn statement(self) -> &'static str {
        match self {
            Family::Sobolev => "sharp Lp-Sobolev inequality on Wulff balls",
            Family::Gn => "sharp Gagliardo-Nirenberg inequality on Wulff balls",
            Family::Nash => "sharp Nash inequality on Wulff balls",
            Family::Logsob => "sharp Lp-logarithmic Sobolev inequality on Wulff balls",
            Family::Poincare => "weighted Poincare inequality on R^N",
            Family::Trace => "sharp Lp-Sobolev trace inequality on Wulff cylinders",
            Family::TrudingerMoser => "weighted Trudinger-Moser bound on R^N",
        }
    }

    /// Name of the exponent passed as `p_or_q`.
    pub fn exponent_name(self) -> &'static str {
        if self == Family::Gn {
            "q"
        } else {
            "p"
        }
    }

    /// Dimension of the norm the family works with: N, or N−1 for trace.
    pub fn norm_dim(self, n: usize) -> usize {
        if self == Family::Trace {
            n.saturating_sub(1)
        } else {
            n
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s || (s == "tm" && *f == Family::TrudingerMoser))
            .ok_or_else(|| input(format!("unknown family `{s}`; expected one of sobolev, gn, nash, logsob, poincare, trace, trudinger_moser")))
    }
}

/// Closed-form constants of one family at fixed parameters.
///
/// `values` holds the classical constants, `tilde_values` the same names
/// rescaled for the Wulff-ball statements; families without a rescaled
/// constant repeat their values there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpConstants {
    pub family: Family,
    #[serde(rename = "N")]
    pub n: usize,
    /// p, or q for the Gagliardo-Nirenberg family.
    pub exponent: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub norm: String,
    pub ambient: AmbientConstants,
    pub values: BTreeMap<String, f64>,
    pub tilde_values: BTreeMap<String, f64>,
    pub formulas: BTreeMap<String, String>,
    /// Values shown for information only and never used in a check.
    pub display_only: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl SharpConstants {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.values.get(name).copied().ok_or_else(|| input(format!("no constant `{name}` for {}", self.family)))
    }

    pub fn tilde(&self, name: &str) -> Result<f64> {
        self.tilde_values.get(name).copied().ok_or_else(|| input(format!("no constant `{name}` for {}", self.family)))
    }

    /// ω_{n−1}/(nκ_n) of the norm in use.
    pub fn ratio(&self) -> f64 {
        self.ambient.ratio
    }
}

fn lg(x: f64) -> f64 {
    log_gamma(x).expect("positive argument")
}

/// ln S_{N,p}, 1 < p < N.
pub fn log_sobolev_constant(n: f64, p: f64) -> f64 {
    let pp = p / (p - 1.0);
    0.5 * p * PI.ln() + n.ln() + (p - 1.0) * ((n - p) / (p - 1.0)).ln()
        + (p / n) * (lg(n / p) + lg(1.0 + n / pp) - lg(n) - lg(1.0 + 0.5 * n))
}

/// S_{N,1} with p = 1 substituted into the printed expression.
pub fn sobolev_constant_p1(n: f64) -> f64 {
    (0.5 * PI.ln() + n.ln() - lg(1.0 + 0.5 * n) / n).exp()
}

/// θ of the Gagliardo-Nirenberg inequality.
pub fn gn_theta(n: f64, q: f64) -> f64 {
    n * (q - 1.0) / (q * (n + 2.0 - (n - 2.0) * q))
}

/// ln A of the Gagliardo-Nirenberg inequality.
pub fn log_gn_constant(n: f64, q: f64) -> f64 {
    let theta = gn_theta(n, q);
    let m = (q + 1.0) / (q - 1.0);
    0.5 * theta * ((q - 1.0) * (q + 1.0) / (2.0 * PI * n)).ln()
        + ((2.0 * (q + 1.0) - n * (q - 1.0)) / (2.0 * (q + 1.0))).ln() / (2.0 * q)
        + (theta / n) * (lg(m) - lg(m - 0.5 * n))
}

/// ln B of the Nash inequality in the squared form
/// ‖u‖₂^{2+4/N} ≤ B ‖∇u‖₂² ‖u‖₁^{4/N}.
pub fn log_nash_constant(n: f64, mu: f64, omega: f64) -> f64 {
    2f64.ln() + (1.0 + 2.0 / n) * (1.0 + 0.5 * n).ln() + (-1.0 + 2.0 / n) * n.ln() - 2.0 * mu.ln() - (2.0 / n) * omega.ln()
}

/// ln 𝓛_p, p > 1.
pub fn log_logsob_constant(n: f64, p: f64) -> f64 {
    let pp = p / (p - 1.0);
    p.ln() - n.ln() + (p - 1.0) * ((p - 1.0).ln() - 1.0) - 0.5 * p * PI.ln() + (p / n) * (lg(0.5 * n + 1.0) - lg(n / pp + 1.0))
}

/// 𝓛_1 as printed.
pub fn logsob_constant_p1(n: f64) -> f64 {
    (-n.ln() - 0.5 * PI.ln() + lg(0.5 * n + 1.0) / n).exp()
}

/// C(N,p) normalizing C exp(−|x|^{p'}/σ) to unit L^p mass.
pub fn logsob_normalizer(n: f64, p: f64, sigma: f64) -> f64 {
    let pp = p / (p - 1.0);
    let l = 0.5 * n * PI.ln() + (n / pp) * (sigma / p).ln() + lg(n / pp + 1.0) - lg(0.5 * n + 1.0);
    (-l / p).exp()
}

/// ln S_{T,N,p} of the trace inequality.
pub fn log_trace_constant(n: f64, p: f64) -> f64 {
    0.5 * (p - 1.0) * PI.ln()
        + (p - 1.0) * ((n - p) / (p - 1.0)).ln()
        + ((p - 1.0) / (n - 1.0)) * (lg((n - 1.0) / (2.0 * (p - 1.0))) - lg((n - 1.0) * p / (2.0 * (p - 1.0))))
}

/// Trace exponent (N−1)p/(N−p).
pub fn trace_exponent(n: f64, p: f64) -> f64 {
    (n - 1.0) * p / (n - p)
}

/// Checks the parameter range of `family`.
pub fn check_range(family: Family, n: usize, e: f64) -> Result<()> {
    let nf = n as f64;
    let ok = |cond: bool, msg: String| if cond { Ok(()) } else { Err(domain(msg)) };
    if !e.is_finite() {
        return Err(domain(format!("{} must be finite, got {e}", family.exponent_name())));
    }
    match family {
        Family::Sobolev | Family::Poincare | Family::Logsob => {
            ok(n >= 2, format!("{family} needs N >= 2, got N = {n}"))?;
            ok(e > 1.0 && e < nf, format!("{family} needs 1 < p < N, got p = {e}, N = {n}"))
        }
        Family::Gn => {
            ok(n >= 3, format!("gn needs N >= 3, got N = {n}"))?;
            let top = nf / (nf - 2.0);
            ok(e > 1.0 && e <= top * (1.0 + 1e-15), format!("gn needs 1 < q <= N/(N-2) = {top}, got q = {e}"))
        }
        Family::Nash | Family::TrudingerMoser => {
            ok(n >= 3, format!("{family} needs N >= 3, got N = {n}"))?;
            ok(e == 2.0, format!("{family} has p = 2, got {e}"))
        }
        Family::Trace => {
            ok(n >= 3, format!("trace needs N >= 3, got N = {n}"))?;
            ok(e > 1.0 && e < nf - 1.0, format!("trace needs 1 < p < N-1 = {}, got p = {e}", nf - 1.0))
        }
    }
}

/// Sharp constants of `family` at (N, p or q, R) for the norm `spec`.
/// For trace, `spec` lives on ℝ^{N−1}.
pub fn sharp_constants(family: Family, n: usize, p_or_q: f64, spec: &NormSpec, radius: f64) -> Result<SharpConstants> {
    check_range(family, n, p_or_q)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!("R must be positive and finite, got {radius}")));
    }
    if spec.dim() != family.norm_dim(n) {
        return Err(input(format!("{family} with N = {n} needs a norm on R^{}, got dimension {}", family.norm_dim(n), spec.dim())));
    }
    let amb = AmbientConstants::new(spec)?;
    sharp_constants_with(family, n, p_or_q, spec.label(), amb, radius)
}

/// [`sharp_constants`] with the ambient constants supplied.
pub fn sharp_constants_with(
    family: Family,
    n: usize,
    e: f64,
    norm: String,
    amb: AmbientConstants,
    radius: f64,
) -> Result<SharpConstants> {
    check_range(family, n, e)?;
    let nf = n as f64;
    let c = amb.ratio;
    let mut values = BTreeMap::new();
    let mut tilde = BTreeMap::new();
    let mut formulas = BTreeMap::new();
    let mut display = BTreeMap::new();
    let mut notes = Vec::new();
    let mut put = |name: &str, v: f64, t: f64, formula: &str| {
        values.insert(name.to_string(), v);
        tilde.insert(name.to_string(), t);
        formulas.insert(name.to_string(), formula.to_string());
    };
    match family {
        Family::Sobolev => {
            let p = e;
            let ps = nf * p / (nf - p);
            let s = log_sobolev_constant(nf, p).exp();
            put("S", s, s * c.powf(p / ps - 1.0), "pi^{p/2} N ((N-p)/(p-1))^{p-1} (Gamma(N/p) Gamma(1+N/p') / (Gamma(N) Gamma(1+N/2)))^{p/N}; tilde: times (omega/(N kappa))^{p/p*-1}");
            put("p_star", ps, ps, "Np/(N-p)");
            put("p_prime", p / (p - 1.0), p / (p - 1.0), "p/(p-1)");
            display.insert("S_p1".to_string(), sobolev_constant_p1(nf));
            notes.push("S_p1 is the p = 1 expression with p = 1 substituted, as printed, possibly typographical; display only".to_string());
        }
        Family::Gn => {
            let q = e;
            let theta = gn_theta(nf, q);
            let a = log_gn_constant(nf, q).exp();
            put("theta", theta, theta, "N(q-1)/(q(N+2-(N-2)q))");
            put(
                "A",
                a,
                a * c.powf(theta / nf),
                "((q-1)(q+1)/(2 pi N))^{theta/2} ((2(q+1)-N(q-1))/(2(q+1)))^{1/(2q)} (Gamma((q+1)/(q-1)) / Gamma((q+1)/(q-1)-N/2))^{theta/N}; tilde: times (omega/(N kappa))^{theta/N}",
            );
        }
        Family::Nash => {
            let mu = bessel_first_zero(0.5 * nf)?.value;
            let omega = amb.sphere_area;
            let b = log_nash_constant(nf, mu, omega).exp();
            put("mu", mu, mu, "first positive zero of J_{N/2}");
            put("lambda_neumann", mu * mu, mu * mu, "mu^2");
            put("B", b, b * c.powf(2.0 / nf), "2 (1+N/2)^{1+2/N} N^{-1+2/N} / (mu^2 omega^{2/N}); tilde: times (omega/(N kappa))^{2/N}");
        }
        Family::Logsob => {
            let p = e;
            let l = log_logsob_constant(nf, p).exp();
            put("L", l, c * l, "(p/N) ((p-1)/e)^{p-1} pi^{-p/2} (Gamma(N/2+1)/Gamma(N/p'+1))^{p/N}; tilde: times omega/(N kappa)");
            let c1 = logsob_normalizer(nf, p, 1.0);
            put("C_sigma1", c1, c1, "(pi^{N/2} (sigma/p)^{N/p'} Gamma(N/p'+1)/Gamma(N/2+1))^{-1/p} at sigma = 1");
            put("p_prime", p / (p - 1.0), p / (p - 1.0), "p/(p-1)");
            display.insert("L_p1".to_string(), logsob_constant_p1(nf));
        }
        Family::Poincare => {
            let lam = plap_first_eigenvalue(n, e, super::eigen::EIGEN_TOL)?.lambda;
            put("lambda1", lam, lam, "first Dirichlet eigenvalue of the p-Laplacian on the unit ball, by shooting");
            put("R_pow_p", radius.powf(e), radius.powf(e), "R^p");
        }
        Family::Trace => {
            let p = e;
            let ps = trace_exponent(nf, p);
            let st = log_trace_constant(nf, p).exp();
            put(
                "S_T",
                st,
                st * c.powf((p - ps) / ps),
                "pi^{(p-1)/2} ((N-p)/(p-1))^{p-1} (Gamma((N-1)/(2(p-1))) / Gamma((N-1)p/(2(p-1))))^{(p-1)/(N-1)}; tilde: times (omega_{N-2}/((N-1) kappa_{N-1}))^{(p-p_*)/p_*}",
            );
            put("p_lower_star", ps, ps, "(N-1)p/(N-p)");
            notes.push("the boundary integral uses the exponent p_* = (N-1)p/(N-p) on both sides".to_string());
        }
        Family::TrudingerMoser => {
            let budget = nf * (nf - 2.0) * amb.kappa / (2.0 * PI);
            put("energy_budget", budget, budget, "N(N-2) kappa / (2 pi)");
            put("witness_bound", 5.0 * PI * radius * radius, 5.0 * PI * radius * radius, "5 pi R^2, an upper bound for the truncated-logarithm family");
            notes.push("no value of the supremum is claimed; the bound is a boundedness witness for the truncated-logarithm family".to_string());
        }
    }
    Ok(SharpConstants {
        family,
        n,
        exponent: e,
        radius,
        norm,
        ambient: amb,
        values,
        tilde_values: tilde,
        formulas,
        display_only: display,
        notes,
    })
}
