//! The ten acceptance criteria, one PASS/FAIL line each.
//!
//! Each criterion runs the library battery and, where one exists, an
//! oracle written here without the library's special functions or solvers.
//! Tolerances and time limits are pinned below, not read from the crate.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use finsler_core::battery::{run_criterion, CriterionResult};
use finsler_core::config::RunConfig;
use finsler_core::inequalities::{plap_first_eigenvalue, sharp_constants, Family};
use finsler_core::norms::NormSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

const LIMITS_S: [u64; 10] = [1, 1, 10, 60, 120, 600, 60, 60, 60, 120];

/// Oracle-side failures of one criterion.
#[derive(Default)]
struct Oracle {
    checked: usize,
    failures: Vec<String>,
}

impl Oracle {
    fn close(&mut self, what: &str, got: f64, want: f64, rel: f64) {
        let dev = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
        self.claim(dev <= rel, || format!("{what}: got {got:.17e}, oracle {want:.17e}, relative deviation {dev:.3e} > {rel:e}"));
    }

    fn at_most(&mut self, what: &str, value: f64, bound: f64) {
        self.claim(value <= bound, || format!("{what}: {value:.6e} exceeds {bound:e}"));
    }

    fn claim(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(msg());
        }
    }

    fn fail(&mut self, msg: impl std::fmt::Display) {
        self.checked += 1;
        self.failures.push(msg.to_string());
    }
}

fn sobolev_classical(n: f64, p: f64) -> f64 {
    let pp = p / (p - 1.0);
    let lg = ln_gamma(n / p) + ln_gamma(1.0 + n / pp) - ln_gamma(n) - ln_gamma(1.0 + n / 2.0);
    PI.powf(p / 2.0) * n * ((n - p) / (p - 1.0)).powf(p - 1.0) * (lg * p / n).exp()
}

fn oracle_1(o: &mut Oracle) {
    let e3 = NormSpec::euclidean(3).unwrap();
    match sharp_constants(Family::Sobolev, 3, 2.0, &e3, 1.0).and_then(|k| k.get("S")) {
        Ok(s) => {
            o.close("S_{3,2} against statrs log-gamma", s, sobolev_classical(3.0, 2.0), 1e-12);
            o.close("S_{3,2} against 3(pi/2)^{4/3}", s, 3.0 * (PI / 2.0).powf(4.0 / 3.0), 1e-12);
        }
        Err(e) => o.fail(e),
    }
    for n in [3usize, 4, 5] {
        let k = NormSpec::euclidean(n).and_then(|e| sharp_constants(Family::Logsob, n, 2.0, &e, 1.0)).and_then(|k| k.get("L"));
        match k {
            Ok(l) => o.close(&format!("L_2 for N = {n}"), l, 2.0 / (n as f64 * PI * E), 1e-12),
            Err(e) => o.fail(e),
        }
    }
}

fn oracle_2(o: &mut Oracle) {
    for n in [3usize, 4, 5, 6] {
        let nf = n as f64;
        let kappa = (nf / 2.0 * PI.ln() - ln_gamma(1.0 + nf / 2.0)).exp();
        let omega = (2f64.ln() + nf / 2.0 * PI.ln() - ln_gamma(nf / 2.0)).exp();
        let k = NormSpec::euclidean(n).and_then(|e| sharp_constants(Family::Nash, n, 2.0, &e, 1.0));
        match k {
            Ok(k) => {
                o.close(&format!("kappa_{n} of the euclidean ball"), k.ambient.kappa, kappa, 1e-12);
                o.close(&format!("omega/(N kappa) for N = {n}"), k.ratio(), omega / (nf * kappa), 1e-12);
            }
            Err(e) => o.fail(e),
        }
    }
    for (n, p) in [(3usize, 2.0), (4, 2.5), (5, 3.0)] {
        match NormSpec::euclidean(n).and_then(|e| sharp_constants(Family::Sobolev, n, p, &e, 1.0)).and_then(|k| k.tilde("S")) {
            Ok(t) => o.close(&format!("tilde S_{{{n},{p}}} against the classical constant"), t, sobolev_classical(n as f64, p), 1e-12),
            Err(e) => o.fail(e),
        }
    }
}

fn fd_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let h = 1e-5 * scale;
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

fn nonzero(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|t| t * t).sum::<f64>() > 1e-2 {
            return v;
        }
    }
}

/// H(grad H0(x)) = 1, H0(grad H(xi)) = 1 and grad H(grad H0(x)) = x / H0(x)
/// with every gradient taken by central differences, at 50 points per norm.
fn oracle_3(o: &mut Oracle) {
    let norms = [
        NormSpec::euclidean(3),
        NormSpec::weighted_lq(4.0, vec![1.0, 2.0, 0.5]),
        NormSpec::named_gauge("skew_l3", 3),
    ];
    for spec in norms {
        let spec = match spec {
            Ok(s) => s,
            Err(e) => {
                o.fail(e);
                continue;
            }
        };
        let h = |v: &[f64]| spec.eval(v).unwrap();
        let h0 = |v: &[f64]| spec.dual(v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let (x, xi) = (nonzero(&mut rng), nonzero(&mut rng));
            let g0 = fd_grad(&h0, &x);
            let g = fd_grad(&h, &xi);
            let back = fd_grad(&h, &g0);
            let d = h0(&x);
            worst = worst.max((h(&g0) - 1.0).abs()).max((h0(&g) - 1.0).abs());
            for i in 0..3 {
                worst = worst.max((back[i] - x[i] / d).abs());
            }
        }
        o.at_most(&format!("{}: finite-difference identity residual", spec.label()), worst, 1e-6);
    }
}

/// J_0 by its power series.
fn j0(x: f64) -> f64 {
    let (mut term, mut sum, q) = (1.0, 1.0, -x * x / 4.0);
    for k in 1..80 {
        term *= q / (k * k) as f64;
        sum += term;
    }
    sum
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn phi(t: f64, p: f64) -> f64 {
    t.abs().powf(p - 2.0) * t
}

fn dphi(t: f64, p: f64) -> f64 {
    (p - 1.0) * t.abs().powf(p - 2.0)
}

/// First Dirichlet eigenvalue of the radial p-Laplacian on the unit ball by
/// finite volumes, Newton on (u, lambda) with unit mass, continued from p = 2.
fn fd_eigenvalue(n: usize, p_end: f64, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    let nf = n as f64;
    let r = |i: f64| i * h;
    let w: Vec<f64> = (0..m).map(|j| r(j as f64 + 0.5).powi(n as i32 - 1)).collect();
    let c: Vec<f64> = (0..m)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { r(i as f64 - 0.5) };
            (r(i as f64 + 0.5).powf(nf) - lo.powf(nf)) / nf
        })
        .collect();
    let z0 = bisect(|x| j0_like(n, x), 2.0, 4.6);
    let mut u: Vec<f64> = (0..m).map(|i| j0_like(n, z0 * r(i as f64)).max(1e-300)).collect();
    let mut lambda = z0 * z0;
    let steps = 10;
    for step in 0..=steps {
        let p = 2.0 + (p_end - 2.0) * step as f64 / steps as f64;
        let mass: f64 = u.iter().zip(&c).map(|(v, ci)| ci * v.abs().powf(p)).sum();
        u.iter_mut().for_each(|v| *v /= mass.powf(1.0 / p));
        for _ in 0..60 {
            let d: Vec<f64> = (0..m).map(|j| (if j + 1 < m { u[j + 1] } else { 0.0 } - u[j]) / h).collect();
            let mut f = vec![0.0; m];
            let (mut lo, mut di, mut up) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
            for i in 0..m {
                let left = if i == 0 { 0.0 } else { w[i - 1] * phi(d[i - 1], p) };
                f[i] = left - w[i] * phi(d[i], p) - lambda * c[i] * phi(u[i], p);
                let a = w[i] * dphi(d[i], p) / h;
                let b = if i == 0 { 0.0 } else { w[i - 1] * dphi(d[i - 1], p) / h };
                di[i] = a + b - lambda * c[i] * dphi(u[i], p);
                if i > 0 {
                    lo[i] = -b;
                }
                if i + 1 < m {
                    up[i] = -a;
                }
            }
            let dl: Vec<f64> = (0..m).map(|i| c[i] * phi(u[i], p)).collect();
            let y = thomas(&lo, &di, &up, &f.iter().map(|v| -v).collect::<Vec<_>>());
            let z = thomas(&lo, &di, &up, &dl);
            let g: Vec<f64> = (0..m).map(|i| p * c[i] * u[i].abs().powf(p - 1.0)).collect();
            let mass: f64 = u.iter().zip(&c).map(|(v, ci)| ci * v.abs().powf(p)).sum();
            let gy: f64 = g.iter().zip(&y).map(|(a, b)| a * b).sum();
            let gz: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
            let dlam = (gy + mass - 1.0) / gz;
            let mut change = dlam.abs() / lambda;
            for i in 0..m {
                let du = y[i] - dlam * z[i];
                u[i] += du;
                change = change.max(du.abs());
            }
            lambda -= dlam;
            if change < 1e-13 {
                break;
            }
        }
    }
    lambda
}

/// The p = 2 eigenfunction profile: J_0 for N = 2, sin(x)/x for N = 3.
fn j0_like(n: usize, x: f64) -> f64 {
    match n {
        2 => j0(x),
        _ if x == 0.0 => 1.0,
        _ => x.sin() / x,
    }
}

fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = di.len();
    let (mut cp, mut dp) = (vec![0.0; m], vec![0.0; m]);
    cp[0] = up[0] / di[0];
    dp[0] = rhs[0] / di[0];
    for i in 1..m {
        let den = di[i] - lo[i] * cp[i - 1];
        cp[i] = up[i] / den;
        dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

fn oracle_8(o: &mut Oracle) {
    let j01 = bisect(j0, 2.0, 3.0);
    match plap_first_eigenvalue(2, 2.0, 1e-13) {
        Ok(e) => o.close("lambda_1(2, 2) against the series J_0 zero squared", e.lambda, j01 * j01, 1e-8),
        Err(e) => o.fail(e),
    }
    match plap_first_eigenvalue(3, 2.0, 1e-13) {
        Ok(e) => o.close("lambda_1(3, 2) against pi^2", e.lambda, PI * PI, 1e-8),
        Err(e) => o.fail(e),
    }
    let fd = fd_eigenvalue(3, 2.5, 4000);
    match plap_first_eigenvalue(3, 2.5, 1e-13) {
        Ok(e) => o.close("lambda_1(3, 2.5) against finite volumes, m = 4000", e.lambda, fd, 1e-4),
        Err(e) => o.fail(e),
    }
}

fn oracle_9(o: &mut Oracle, battery6: Option<&CriterionResult>) {
    let mu = bisect(|x| x.tan() - x, PI + 1e-3, 1.5 * PI - 1e-9);
    o.close("tan x = x root", mu, 4.493409457909064, 1e-10);
    let k = NormSpec::euclidean(3).and_then(|e| sharp_constants(Family::Nash, 3, 2.0, &e, 1.0));
    match k.and_then(|k| k.get("mu")) {
        Ok(m) => o.close("mu of the Nash constants", m, mu, 1e-10),
        Err(e) => o.fail(e),
    }
    let nash3 = battery6.and_then(|c| c.reports.iter().find(|r| r.family == "nash" && r.params.get("N") == Some(&3.0)));
    match nash3 {
        Some(r) => o.close("mu consumed by the N = 3 Nash equality check", r.params.get("mu").copied().unwrap_or(f64::NAN), mu, 1e-10),
        None => o.fail("the equality criterion has no N = 3 Nash report"),
    }
}

/// Re-reads the reports of a criterion: |rhs - lhs| / max side.
fn recheck_reports(o: &mut Oracle, c: &CriterionResult, expected: usize, rel: f64) {
    o.claim(c.reports.len() == expected, || format!("expected {expected} reports, found {}", c.reports.len()));
    for r in &c.reports {
        let dev = (r.rhs - r.lhs).abs() / r.lhs.abs().max(r.rhs.abs());
        o.at_most(&format!("{} N={}: relative deficit", r.family, r.params.get("N").copied().unwrap_or(0.0)), dev, rel);
    }
}

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let mut all = true;
    let mut battery6: Option<CriterionResult> = None;
    for id in 1..=10 {
        let t0 = Instant::now();
        let lib = run_criterion(&cfg, id);
        let mut o = Oracle::default();
        match id {
            1 => oracle_1(&mut o),
            2 => oracle_2(&mut o),
            3 => oracle_3(&mut o),
            4 => o.claim(lib.checks.len() == 15, || format!("expected 5 integrands x 3 norms, found {} checks", lib.checks.len())),
            5 => o.claim(lib.checks.len() >= 5 * 3 * 4, || format!("expected at least 60 identity checks, found {}", lib.checks.len())),
            6 => recheck_reports(&mut o, &lib, 11, 1e-5),
            7 => {
                for k in &lib.checks {
                    o.claim(k.pass, || format!("{}: {:e} against {:e}", k.name, k.value, k.tolerance));
                }
            }
            8 => oracle_8(&mut o),
            9 => oracle_9(&mut o, battery6.as_ref()),
            10 => {
                let tm: Vec<_> = lib.reports.iter().filter(|r| r.family == "trudinger_moser").collect();
                o.claim(tm.len() == 10, || format!("expected 10 truncated-log reports, found {}", tm.len()));
                for r in tm {
                    o.claim(r.lhs.is_finite() && r.lhs <= r.rhs, || format!("{}: functional {} against bound {}", r.profile, r.lhs, r.rhs));
                }
            }
            _ => unreachable!(),
        }
        let elapsed = t0.elapsed();
        let limit = Duration::from_secs(LIMITS_S[id - 1]);
        let in_time = elapsed < limit;
        let pass = lib.pass && o.failures.is_empty() && in_time;
        all &= pass;
        let lib_failed = lib.checks.iter().filter(|k| !k.pass).count();
        println!(
            "criterion {id:>2} {:<36} {}  battery {}/{} oracle {}/{} time {:.2?} < {}s",
            lib.title,
            if pass { "PASS" } else { "FAIL" },
            lib.checks.len() - lib_failed,
            lib.checks.len(),
            o.checked - o.failures.len(),
            o.checked,
            elapsed,
            LIMITS_S[id - 1],
        );
        for k in lib.checks.iter().filter(|k| !k.pass) {
            println!("    battery: {} value {:e} tolerance {:e} {}", k.name, k.value, k.tolerance, k.error.as_deref().unwrap_or(""));
        }
        for f in &o.failures {
            println!("    oracle: {f}");
        }
        if !in_time {
            println!("    runtime {elapsed:.2?} over the {limit:?} limit");
        }
        if id == 6 {
            battery6 = Some(lib);
        }
    }
    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
