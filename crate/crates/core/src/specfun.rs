//! Special functions behind the sharp constants: log-Gamma, Bessel functions
//! of the first kind and their first positive zero.
//!
//! Everything here is a pure function of `f64` arguments.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};

const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Natural logarithm of Γ(x) for x > 0.
///
/// Lanczos approximation with g = 671/128 on x ≥ 1/2, reflection below.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("log_gamma requires a finite x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx), both factors positive on (0, 1/2)
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let mut y = x;
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = LANCZOS_C0;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (SQRT_2PI * ser / x).ln()
}

/// Γ(x) for x > 0, via [`log_gamma`].
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// Surface measure ω_{N-1} = 2π^{N/2}/Γ(N/2) of the unit sphere in ℝ^N.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (2f64.ln() + h * PI.ln() - ln_gamma_pos(h)).exp()
}

/// Volume π^{N/2}/Γ(N/2 + 1) of the Euclidean unit ball in ℝ^N.
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (h * PI.ln() - ln_gamma_pos(h + 1.0)).exp()
}

pub const BESSEL_MAX_ORDER: f64 = 30.0;
pub const BESSEL_MAX_ARG: f64 = 100.0;
const SERIES_LIMIT: f64 = 8.0;

fn check_bessel_args(nu: f64, x: f64) -> Result<()> {
    if !(0.0..=BESSEL_MAX_ORDER).contains(&nu) || !(0.0..=BESSEL_MAX_ARG).contains(&x) {
        return Err(domain(format!(
            "bessel_j supports order in [0, {BESSEL_MAX_ORDER}] and argument in [0, {BESSEL_MAX_ARG}], got ({nu}, {x})"
        )));
    }
    Ok(())
}

/// Bessel function of the first kind J_ν(x) for ν ∈ [0, 30], x ∈ [0, 100].
///
/// Power series below x = 8, Miller's backward recurrence normalized by the
/// Neumann sum (x/2)^α = Σ_k (α+2k) Γ(α+k)/k! J_{α+2k}(x) above.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check_bessel_args(nu, x)?;
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    if x < SERIES_LIMIT {
        Ok(bessel_j_series(nu, x))
    } else {
        Ok(bessel_j_miller(nu, x))
    }
}

/// x^{-ν} J_ν(x), finite at x = 0 where it equals 2^{-ν}/Γ(ν+1).
pub fn bessel_j_over_power(nu: f64, x: f64) -> Result<f64> {
    check_bessel_args(nu, x)?;
    if x < SERIES_LIMIT {
        Ok(series_sum(nu, x) * (-nu * 2f64.ln() - ln_gamma_pos(nu + 1.0)).exp())
    } else {
        Ok(bessel_j_miller(nu, x) * x.powf(-nu))
    }
}

fn series_sum(nu: f64, x: f64) -> f64 {
    // Σ_m (-1)^m (x/2)^{2m} Γ(ν+1) / (m! Γ(m+ν+1))
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        let m = m as f64;
        term *= -q / (m * (m + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

pub(crate) fn bessel_j_series(nu: f64, x: f64) -> f64 {
    let log_pref = nu * (0.5 * x).ln() - ln_gamma_pos(nu + 1.0);
    series_sum(nu, x) * log_pref.exp()
}

pub(crate) fn bessel_j_miller(nu: f64, x: f64) -> f64 {
    let base = nu.floor();
    let alpha = nu - base;
    let target = base as usize;
    let span = x.max(nu) + 20.0 + 10.0 * x.cbrt();
    let mut top = span.ceil() as usize;
    if top % 2 == 1 {
        top += 1;
    }
    // c_k = (α+2k) Γ(α+k)/k!, with c_0 = Γ(α+1)
    let coef = |k: usize| -> f64 {
        if k == 0 {
            ln_gamma_pos(alpha + 1.0).exp()
        } else {
            let kf = k as f64;
            (alpha + 2.0 * kf) * (ln_gamma_pos(alpha + kf) - ln_gamma_pos(kf + 1.0)).exp()
        }
    };
    let mut above = 0.0; // order α + m + 1
    let mut current = 1e-30; // order α + m
    let mut norm = coef(top / 2) * current;
    let mut saved = if target == top { current } else { 0.0 };
    for m in (1..=top).rev() {
        let below = 2.0 * (alpha + m as f64) / x * current - above;
        above = current;
        current = below;
        let order = m - 1;
        if order == target {
            saved = current;
        }
        if order % 2 == 0 {
            norm += coef(order / 2) * current;
        }
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            saved *= 1e-250;
        }
    }
    saved * (0.5 * x).powf(alpha) / norm
}

/// J_ν(x) for half-integer ν = k + 1/2 from the closed trigonometric forms
/// and upward recurrence. Intended for cross-checking [`bessel_j`] where
/// x is not small compared with ν.
pub fn bessel_j_half_integer(nu: f64, x: f64) -> Result<f64> {
    let k = nu - 0.5;
    if k < 0.0 || k.fract() != 0.0 {
        return Err(domain(format!("order {nu} is not a nonnegative half-integer")));
    }
    if !(x > 0.0) {
        return Err(domain("half-integer closed forms need x > 0"));
    }
    let pref = (2.0 / (PI * x)).sqrt();
    let mut prev = pref * x.cos(); // J_{-1/2}
    let mut cur = pref * x.sin(); // J_{1/2}
    let mut order = 0.5;
    for _ in 0..k as usize {
        let next = 2.0 * order / x * cur - prev;
        prev = cur;
        cur = next;
        order += 1.0;
    }
    Ok(cur)
}

/// First positive zero of J_ν together with its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselZero {
    pub order: f64,
    pub index: u32,
    pub value: f64,
    pub residual: f64,
}

/// First positive zero of J_ν, ν ∈ [0, 30].
///
/// Brackets by scanning from ν + 1 in steps of 0.1, then refines with a
/// safeguarded secant/bisection iteration to a bracket width of 1e-13.
pub fn bessel_first_zero(nu: f64) -> Result<BesselZero> {
    if !(0.0..=BESSEL_MAX_ORDER).contains(&nu) {
        return Err(domain(format!("bessel_first_zero needs order in [0, 30], got {nu}")));
    }
    let f = |x: f64| bessel_j(nu, x).expect("argument inside supported box");
    let mut a = nu + 1.0;
    let mut fa = f(a);
    let limit = nu + 20.0;
    let mut b = a;
    let mut fb = fa;
    let mut found = false;
    while b < limit {
        b = (b + 0.1).min(limit);
        fb = f(b);
        if fa.signum() != fb.signum() || fb == 0.0 {
            found = true;
            break;
        }
        a = b;
        fa = fb;
    }
    if !found {
        return Err(Error::Search(format!(
            "no sign change of J_{nu} on [{}, {limit}]",
            nu + 1.0
        )));
    }
    let value = refine_root(f, a, b, fa, fb, 1e-13);
    Ok(BesselZero {
        order: nu,
        index: 1,
        value,
        residual: f(value).abs(),
    })
}

/// Safeguarded secant iteration on a sign-changing bracket.
pub(crate) fn refine_root(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    width: f64,
) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut last_width = b - a;
    for _ in 0..200 {
        if (b - a).abs() <= width {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        // fall back to bisection when the secant point leaves the bracket or
        // the bracket stopped shrinking fast enough
        let use_mid = !(secant > a && secant < b) || (b - a) > 0.5 * last_width;
        last_width = b - a;
        let c = if use_mid { mid } else { secant };
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn log_gamma_anchors() {
        assert!((log_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-15);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        // ln Γ(100) = ln 99!
        let ln_fact: f64 = (1..100).map(|k| (k as f64).ln()).sum();
        assert!(rel(log_gamma(100.0).unwrap(), ln_fact) < 1e-14);
        assert!(rel(log_gamma(200.0).unwrap(), 857.933_669_825_857_4) < 1e-14);
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(log_gamma(-1.5), Err(Error::Domain(_))));
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_reflection_and_recurrence() {
        for i in 1..=50 {
            let x = i as f64 / 51.0;
            let lhs = log_gamma(x).unwrap().exp() * log_gamma(1.0 - x).unwrap().exp();
            let rhs = PI / (PI * x).sin();
            assert!(rel(lhs, rhs) < 1e-10, "reflection at {x}");
        }
        for i in 0..50 {
            let x = 0.5 + 49.5 * i as f64 / 50.0;
            let lhs = log_gamma(x + 1.0).unwrap().exp();
            let rhs = x * log_gamma(x).unwrap().exp();
            assert!(rel(lhs, rhs) < 1e-12, "recurrence at {x}");
        }
    }

    #[test]
    fn sphere_and_ball_measures() {
        assert!(rel(sphere_area(2), 2.0 * PI) < 1e-15);
        assert!(rel(sphere_area(3), 4.0 * PI) < 1e-15);
        assert!(rel(sphere_area(4), 2.0 * PI * PI) < 1e-15);
        assert!(rel(unit_ball_volume(3), 4.0 * PI / 3.0) < 1e-15);
        for n in 2..40 {
            assert!(rel(sphere_area(n), n as f64 * unit_ball_volume(n)) < 1e-13);
        }
    }

    #[test]
    fn bessel_examples() {
        assert!(bessel_j(0.5, PI).unwrap().abs() < 1e-15);
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(2.5, 0.0).unwrap(), 0.0);
        assert!(bessel_j(1.5, 4.493_409_457_909_064).unwrap().abs() < 1e-10);
        assert!(bessel_j(31.0, 1.0).is_err());
        assert!(bessel_j(1.0, 100.5).is_err());
    }

    #[test]
    fn bessel_matches_trig_forms_and_branches_agree() {
        for k in 0..8 {
            let nu = k as f64 + 0.5;
            for i in 1..=200 {
                let x = 0.5 * i as f64;
                if x < nu + 1.0 {
                    continue;
                }
                let a = bessel_j(nu, x).unwrap();
                let b = bessel_j_half_integer(nu, x).unwrap();
                assert!((a - b).abs() < 1e-12, "nu={nu} x={x} {a} {b}");
            }
        }
        for &nu in &[0.0, 0.3, 1.0, 2.5, 7.25, 15.0, 30.0] {
            for i in 0..=50 {
                let x = 5.0 + 5.0 * i as f64 / 50.0;
                let s = bessel_j_series(nu, x);
                let m = bessel_j_miller(nu, x);
                assert!((s - m).abs() < 1e-12, "nu={nu} x={x}: {s} vs {m}");
            }
        }
    }

    #[test]
    fn bessel_known_values() {
        // J0(10), J1(10), J0(100) reference values
        assert!((bessel_j(0.0, 10.0).unwrap() - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        assert!((bessel_j(1.0, 10.0).unwrap() - 0.043_472_746_168_861_44).abs() < 1e-14);
        assert!((bessel_j(0.0, 100.0).unwrap() - 0.019_985_850_304_223_122).abs() < 1e-13);
    }

    #[test]
    fn over_power_is_continuous_at_zero() {
        for &nu in &[0.5, 1.0, 1.5] {
            let at0 = bessel_j_over_power(nu, 0.0).unwrap();
            let expect = (-nu * 2f64.ln() - ln_gamma_pos(nu + 1.0)).exp();
            assert!(rel(at0, expect) < 1e-15);
            let x = 9.0;
            let a = bessel_j_over_power(nu, x).unwrap();
            assert!(rel(a, bessel_j(nu, x).unwrap() / x.powf(nu)) < 1e-14);
        }
    }

    /// Bisection of tan x - x on (π, 3π/2), independent of the Bessel code.
    fn tan_root_oracle() -> f64 {
        let (mut lo, mut hi) = (PI + 1e-9, 1.5 * PI - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.tan() - mid < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Bisection of the J0 power series on (2, 3).
    fn j0_root_oracle() -> f64 {
        let j0 = |x: f64| {
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..60 {
                term *= -(x * x / 4.0) / (m as f64 * m as f64);
                sum += term;
            }
            sum
        };
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn first_zero_examples() {
        let z = bessel_first_zero(0.5).unwrap();
        assert!((z.value - PI).abs() < 1e-13);
        let oracle = tan_root_oracle();
        assert!((oracle - 4.493_409_457_909_064).abs() < 1e-13);
        let z = bessel_first_zero(1.5).unwrap();
        assert!((z.value - oracle).abs() < 1e-12);
        let oracle0 = j0_root_oracle();
        assert!((oracle0 - 2.404_825_557_695_773).abs() < 1e-13);
        let z = bessel_first_zero(0.0).unwrap();
        assert!((z.value - oracle0).abs() < 1e-12);
    }

    #[test]
    fn first_zero_invariants() {
        for i in 0..=20 {
            let nu = 0.5 * i as f64;
            let z = bessel_first_zero(nu).unwrap();
            assert!(z.residual <= 1e-12, "nu={nu} residual {}", z.residual);
            let lo = bessel_j(nu, z.value / 2.0).unwrap();
            let hi = bessel_j(nu, (z.value * 1.2).min(BESSEL_MAX_ARG)).unwrap();
            assert!(lo.signum() != hi.signum(), "nu={nu}");
        }
        assert!(bessel_first_zero(-1.0).is_err());
    }
}
