//! `finsler`: sharp constants, single verifications, the acceptance suite
//! and plot tables.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or input error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_core::battery::{run_battery, suite_to_csv, summary_lines};
use finsler_core::config::{Format, RunConfig};
use finsler_core::inequalities::extremal::{extremal_profile_q, linear_cutoff, truncated_log_profile, CaseProfile, ExtremalSpec};
use finsler_core::inequalities::{evaluate_case, map_for, sharp_constants, Family, SharpConstants};
use finsler_core::norms::parse_norm;
use finsler_core::report::{reports_to_csv, SCHEMA_VERSION};
use finsler_core::transplant::{Coord, Domain, MapKind};
use finsler_core::Error;

#[derive(Parser)]
#[command(name = "finsler", version, about = "Sharp functional inequalities on Wulff balls, checked by quadrature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sharp constants of a family with their Wulff-ball variants.
    Constants(CaseArgs),
    /// Check one inequality on one profile.
    Verify(VerifyArgs),
    /// Run the acceptance battery.
    Suite(SuiteArgs),
    /// Tabulate a profile and the map weight on a grid refined near s = R.
    Plotdata(PlotArgs),
}

#[derive(Args, Clone)]
struct CaseArgs {
    #[arg(long)]
    family: Family,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Gagliardo-Nirenberg exponent.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "R")]
    radius: Option<f64>,
    /// `euclidean`, `lq:<q>`, `lq:<q>:<w1>,<w2>,...`, `gauge:<name>` or a JSON object.
    #[arg(long)]
    norm: Option<String>,
    /// JSON run configuration; defaults to the file named by FINSLER_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Extremal parameters, e.g. `a=1,b=1`.
    #[arg(long, conflicts_with = "profile")]
    extremal: Option<String>,
    /// `extremal`, `linear-cutoff` or `truncated-log`.
    #[arg(long)]
    profile: Option<String>,
    /// Index of the truncated-logarithm profile.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
}

#[derive(Args)]
struct SuiteArgs {
    /// JSON run configuration; defaults to FINSLER_CONFIG, then built-in defaults.
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    case: CaseArgs,
    #[arg(long)]
    extremal: Option<String>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Uniform points on (0, R/2).
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Octaves of the geometric refinement toward s = R, four points each.
    #[arg(long, default_value_t = 40)]
    octaves: usize,
}

/// A failure with its exit code.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Input(_) | Error::Domain(_) | Error::Config { .. } | Error::Admissibility(_) => 2,
            _ => 1,
        };
        Fail(code, e.to_string())
    }
}

type Outcome = std::result::Result<u8, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(2, msg.into())
}

fn load_config(path: Option<&Path>) -> std::result::Result<RunConfig, Fail> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::from_env()?),
    }
}

/// Command-line values over the configuration.
struct Case {
    family: Family,
    n: usize,
    exponent: f64,
    radius: f64,
    cfg: RunConfig,
}

impl Case {
    fn resolve(a: &CaseArgs) -> std::result::Result<Self, Fail> {
        let mut cfg = load_config(a.config.as_deref())?;
        if let Some(n) = &a.norm {
            cfg.norm = serde_json::Value::String(n.clone());
        }
        let n = a.n.unwrap_or(cfg.n);
        let exponent = match (a.family, a.q, a.p) {
            (Family::Gn, Some(q), _) => q,
            (Family::Gn, None, _) => cfg.q.unwrap_or(2.0),
            (_, Some(_), _) => return Err(usage(format!("--q applies to gn only, not {}", a.family))),
            (_, None, p) => p.unwrap_or(cfg.p),
        };
        if a.family == Family::Gn && a.p.is_some_and(|p| p != 2.0) {
            return Err(usage("gn is stated for p = 2; give its exponent with --q"));
        }
        Ok(Case { family: a.family, n, exponent, radius: a.radius.unwrap_or(cfg.radius), cfg })
    }

    fn constants(&self) -> std::result::Result<SharpConstants, Fail> {
        let spec = parse_norm(&norm_text(&self.cfg), self.family.norm_dim(self.n))?;
        Ok(sharp_constants(self.family, self.n, self.exponent, &spec, self.radius)?)
    }
}

fn norm_text(cfg: &RunConfig) -> String {
    match &cfg.norm {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::result::Result<(), Fail> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail(2, format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| Fail(2, e.to_string()))
        }
    }
}

fn cmd_constants(a: &CaseArgs) -> Outcome {
    let case = Case::resolve(a)?;
    let k = case.constants()?;
    let text = match a.format {
        Some(Format::Json) => serde_json::to_string_pretty(&k).expect("constants serialize") + "\n",
        Some(Format::Csv) => {
            let mut s = String::from("name,value,tilde,formula\n");
            for (name, v) in &k.values {
                let _ = writeln!(s, "{name},{v:.15e},{:.15e},\"{}\"", k.tilde_values[name], k.formulas[name].replace('"', "\"\""));
            }
            for (name, v) in &k.display_only {
                let _ = writeln!(s, "{name},{v:.15e},,\"display only\"");
            }
            s
        }
        None => {
            let mut s = format!("{} N={} {}={} R={} norm={}\n", k.family, k.n, k.family.exponent_name(), k.exponent, k.radius, k.norm);
            let _ = writeln!(s, "  omega/(N kappa) = {:.15}", k.ratio());
            for (name, v) in &k.values {
                let _ = writeln!(s, "  {name:<16} = {v:<22.15e} tilde = {:<22.15e} [{}]", k.tilde_values[name], k.formulas[name]);
            }
            for (name, v) in &k.display_only {
                let _ = writeln!(s, "  {name:<16} = {v:<22.15e} (display only)");
            }
            for n in &k.notes {
                let _ = writeln!(s, "  note: {n}");
            }
            s
        }
    };
    emit(&text, a.out.as_deref())?;
    Ok(0)
}

/// The profile named on the command line, on the family's map.
fn chosen_profile(
    case: &Case,
    map: &finsler_core::transplant::TransplantMap,
    extremal: Option<&str>,
    profile: Option<&str>,
    k: f64,
) -> std::result::Result<(CaseProfile, bool), Fail> {
    let default = if case.family == Family::TrudingerMoser { "truncated-log" } else { "extremal" };
    match profile.unwrap_or(default) {
        "extremal" => {
            let spec = ExtremalSpec::parse(case.family, extremal.unwrap_or(""))?;
            Ok((extremal_profile_q(&spec, map, case.exponent)?, true))
        }
        "linear-cutoff" => {
            if map.kind() == MapKind::Trace {
                return Err(usage("linear-cutoff is a one-variable profile; trace needs two variables"));
            }
            Ok((CaseProfile::Radial(linear_cutoff(map)), false))
        }
        "truncated-log" => Ok((CaseProfile::Radial(truncated_log_profile(map, k)?), false)),
        other => Err(usage(format!("unknown profile `{other}`; expected extremal, linear-cutoff or truncated-log"))),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let case = Case::resolve(&a.case)?;
    let k = case.constants()?;
    let spec = parse_norm(&norm_text(&case.cfg), case.family.norm_dim(case.n))?;
    let map = map_for(case.family, case.n, case.exponent, case.radius)?;
    let (profile, extremal) = chosen_profile(&case, &map, a.extremal.as_deref(), a.profile.as_deref(), a.k)?;
    let report = evaluate_case(case.family, &spec, &map, &profile, &k, extremal, &case.cfg.tolerances)?;
    let text = match a.case.format.unwrap_or(case.cfg.format) {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["schema_version"] = SCHEMA_VERSION.into();
            v["sharp_constants"] = serde_json::to_value(&k).expect("constants serialize");
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Format::Csv => reports_to_csv(std::slice::from_ref(&report)),
    };
    emit(&text, a.case.out.as_deref().or(case.cfg.out.as_deref()))?;
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_suite(a: &SuiteArgs) -> Outcome {
    let cfg = load_config(a.config.as_deref())?;
    let (report, timings) = run_battery(&cfg);
    for line in summary_lines(&report) {
        eprintln!("{line}");
    }
    for t in &timings {
        let flag = if t.elapsed > t.limit { " over the limit" } else { "" };
        eprintln!("criterion {:>2} took {:.2?} (limit {:?}){flag}", t.id, t.elapsed, t.limit);
    }
    let text = match a.format.unwrap_or(cfg.format) {
        Format::Json => serde_json::to_string_pretty(&report).expect("suite report serializes") + "\n",
        Format::Csv => suite_to_csv(&report),
    };
    emit(&text, a.out.as_deref().or(cfg.out.as_deref()))?;
    Ok(if report.pass { 0 } else { 1 })
}

/// Uniform points on (0, R/2) followed by gaps R·2^{−j/4}, j = 4, 5, ….
fn plot_grid(radius: f64, points: usize, octaves: usize) -> Vec<Coord> {
    let mut grid: Vec<Coord> = (1..points.max(1)).map(|i| Coord::ball(0.5 * radius * i as f64 / points as f64, radius)).collect();
    for j in 4..=(4 + 4 * octaves) {
        let gap = radius * 2f64.powf(-(j as f64) / 4.0);
        grid.push(Coord { x: radius - gap, gap });
    }
    grid
}

fn cmd_plotdata(a: &PlotArgs) -> Outcome {
    let case = Case::resolve(&a.case)?;
    let k = case.constants()?;
    let map = map_for(case.family, case.n, case.exponent, case.radius)?;
    let (profile, _) = chosen_profile(&case, &map, a.extremal.as_deref(), a.profile.as_deref(), a.k)?;
    let kappa = k.ambient.kappa;
    let mut s = String::from("s,r,profile,weight\n");
    for c in plot_grid(case.radius, a.points, a.octaves) {
        let r = map.inverse_coord(c);
        let value = match &profile {
            CaseProfile::Radial(p) => match p.domain {
                Domain::Ball { .. } => p.eval(c),
                Domain::HalfLine => p.eval(Coord::line(r)),
            },
            CaseProfile::Slab(p) => p.eval(c, 0.0),
        };
        let at = if map.finsler_on_ball() || map.kind() == MapKind::Trace { c } else { Coord::line(r) };
        let w = map.weight_at(map.natural_weight(), at, kappa)?;
        let _ = writeln!(s, "{:.17e},{:.17e},{:.17e},{:.17e}", c.x, r, value, w);
    }
    emit(&s, a.case.out.as_deref())?;
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Constants(a) => cmd_constants(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
