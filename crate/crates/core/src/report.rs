//! Verification reports and the tolerances that decide them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::quadrature::{TOL_2D, TOL_SINGULAR, TOL_SMOOTH};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance of smooth 1-D integrals.
    pub smooth: f64,
    /// Relative tolerance of 1-D integrals with endpoint singularities.
    pub singular: f64,
    /// Relative tolerance of 2-D integrals.
    pub two_d: f64,
    /// Smallest relative error budget of an inequality report.
    pub rel_floor: f64,
    /// Relative mismatch allowed in a transplant identity.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { smooth: TOL_SMOOTH, singular: TOL_SINGULAR, two_d: TOL_2D, rel_floor: 1e-8, identity: 1e-6 }
    }
}

/// One side-by-side comparison. `deficit = rhs − lhs` is expected to be
/// nonnegative; at an extremal it is expected to vanish within the budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub family: String,
    /// The statement being checked.
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub norm: String,
    pub profile: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub deficit: f64,
    pub relative_deficit: f64,
    /// Quadrature error propagated to the deficit.
    pub quadrature_error: f64,
    pub error_budget: f64,
    pub extremal: bool,
    pub pass: bool,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<BTreeMap<String, f64>>,
}

impl VerificationReport {
    /// Builds a report; the budget is the larger of the propagated
    /// quadrature error and `rel_floor` times the larger side.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        family: &str,
        label: &str,
        norm: String,
        profile: String,
        lhs: f64,
        rhs: f64,
        quadrature_error: f64,
        rel_floor: f64,
        extremal: bool,
    ) -> Self {
        let deficit = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs());
        let relative_deficit = if scale > 0.0 { deficit.abs() / scale } else { 0.0 };
        let error_budget = quadrature_error.max(rel_floor * scale);
        let finite = lhs.is_finite() && rhs.is_finite();
        let pass = finite && deficit >= -error_budget && (!extremal || deficit.abs() <= error_budget);
        VerificationReport {
            family: family.to_string(),
            label: label.to_string(),
            params: BTreeMap::new(),
            norm,
            profile,
            lhs,
            rhs,
            ratio: rhs / lhs,
            deficit,
            relative_deficit,
            quadrature_error,
            error_budget,
            extremal,
            pass,
            notes: Vec::new(),
            constants: None,
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Column order of [`reports_to_csv`].
pub const CSV_HEADER: &str =
    "family,label,norm,profile,params,lhs,rhs,ratio,deficit,relative_deficit,quadrature_error,error_budget,extremal,pass,notes";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Flattens reports to CSV; parameters become `name=value` pairs joined by `;`.
pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{}",
            csv_field(&r.family),
            csv_field(&r.label),
            csv_field(&r.norm),
            csv_field(&r.profile),
            csv_field(&params.join(";")),
            r.lhs,
            r.rhs,
            r.ratio,
            r.deficit,
            r.relative_deficit,
            r.quadrature_error,
            r.error_budget,
            r.extremal,
            r.pass,
            csv_field(&r.notes.join("; ")),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(lhs: f64, rhs: f64, extremal: bool) -> VerificationReport {
        VerificationReport::new("f", "l", "n".into(), "p".into(), lhs, rhs, 1e-12, 1e-8, extremal)
    }

    #[test]
    fn pass_rule() {
        assert!(report(1.0, 1.5, false).pass);
        assert!(!report(1.0, 1.5, true).pass);
        assert!(report(1.0, 1.0 + 1e-9, true).pass);
        assert!(report(1.0, 1.0 - 1e-9, false).pass);
        assert!(!report(1.0, 0.9, false).pass);
        assert!(!report(f64::NAN, 1.0, false).pass);
    }

    #[test]
    fn budget_is_floor_or_quadrature() {
        let r = report(2.0, 2.0, true);
        assert_eq!(r.error_budget, 2e-8);
        let q = VerificationReport::new("f", "l", "n".into(), "p".into(), 2.0, 2.0, 1e-3, 1e-8, true);
        assert_eq!(q.error_budget, 1e-3);
        assert_eq!(r.relative_deficit, 0.0);
    }

    #[test]
    fn csv_quotes_fields() {
        let r = report(1.0, 2.0, false).with_param("N", 3.0).with_note("a, b");
        let csv = reports_to_csv(&[r]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("f,l,n,p,N=3,"));
        assert!(line.ends_with("\"a, b\""));
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn tolerances_reject_unknown_keys() {
        let t: Tolerances = serde_json::from_str(r#"{"singular":1e-9}"#).unwrap();
        assert_eq!(t.singular, 1e-9);
        assert_eq!(t.smooth, TOL_SMOOTH);
        assert!(serde_json::from_str::<Tolerances>(r#"{"singulr":1e-9}"#).is_err());
    }
}
