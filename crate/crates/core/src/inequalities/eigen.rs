//! First Dirichlet eigenvalue of the radial p-Laplacian on the unit ball.
//!
//! With ψ = r^{N−1}|Φ'|^{p−2}Φ' the equation
//! (r^{N−1}|Φ'|^{p−2}Φ')' + λ r^{N−1}|Φ|^{p−2}Φ = 0 becomes the first-order
//! system Φ' = sgn ψ |ψ/r^{N−1}|^{1/(p−1)}, ψ' = −λ r^{N−1}|Φ|^{p−2}Φ,
//! which is integrated from r = δ with Φ(δ) = 1 − c δ^{p'},
//! c = (λ/N)^{1/(p−1)}/p'.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::specfun::bessel_first_zero;
use crate::transplant::{Coord, Domain, RadialProfile};

/// Start of the shooting interval.
pub const SHOOT_START: f64 = 1e-6;
/// Relative bracket width at which the bisection on λ stops.
pub const EIGEN_TOL: f64 = 1e-13;
/// Local error tolerance of the Dormand–Prince stepper.
const ODE_TOL: f64 = 1e-13;
const MAX_STEPS: usize = 200_000;
/// Below this distance to r = 1 the eigenfunction is expanded about r = 1.
const WALL_EXPANSION: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Plap {
    n: f64,
    p: f64,
    lambda: f64,
}

impl Plap {
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        let rn = r.powf(self.n - 1.0);
        [self.dphi(r, y[1]), -self.lambda * rn * y[0].abs().powf(self.p - 2.0) * y[0]]
    }

    fn dphi(&self, r: f64, psi: f64) -> f64 {
        let q = psi / r.powf(self.n - 1.0);
        q.signum() * q.abs().powf(1.0 / (self.p - 1.0))
    }

    /// Series data at r: (Φ, ψ).
    fn series(&self, r: f64) -> [f64; 2] {
        let pp = self.p / (self.p - 1.0);
        let c = (self.lambda / self.n).powf(1.0 / (self.p - 1.0)) / pp;
        [1.0 - c * r.powf(pp), -(self.lambda / self.n) * r.powf(self.n)]
    }

    fn series_dphi(&self, r: f64) -> f64 {
        let pp = self.p / (self.p - 1.0);
        let c = (self.lambda / self.n).powf(1.0 / (self.p - 1.0)) / pp;
        -c * pp * r.powf(pp - 1.0)
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand–Prince step; returns the 5th-order state and the error norm.
fn dp_step(sys: &Plap, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    let mut k = [[0.0; 2]; 7];
    for i in 0..7 {
        let mut yi = y;
        for (j, kj) in k.iter().enumerate().take(i) {
            yi[0] += h * A[i][j] * kj[0];
            yi[1] += h * A[i][j] * kj[1];
        }
        k[i] = sys.rhs(r + C[i] * h, yi);
    }
    let mut y5 = y;
    let mut y4 = y;
    for i in 0..7 {
        y5[0] += h * B5[i] * k[i][0];
        y5[1] += h * B5[i] * k[i][1];
        y4[0] += h * B4[i] * k[i][0];
        y4[1] += h * B4[i] * k[i][1];
    }
    let err = (0..2)
        .map(|c| (y5[c] - y4[c]).abs() / (ODE_TOL * (1.0 + y[c].abs().max(y5[c].abs()))))
        .fold(0.0, f64::max);
    (y5, err)
}

#[derive(Debug, Clone, Copy)]
struct Shot {
    /// State at the end point (or at the last accepted point before Φ ≤ 0).
    y: [f64; 2],
    /// Φ became nonpositive before the end point.
    crossed: bool,
}

/// Integrates from the series start to `end`; with `stop_at_zero` the
/// integration ends at the first step on which Φ ≤ 0.
fn shoot(sys: &Plap, end: f64, stop_at_zero: bool) -> Result<Shot> {
    let mut r = SHOOT_START;
    let mut y = sys.series(r);
    if end <= r {
        return Ok(Shot { y: sys.series(end), crossed: false });
    }
    let mut h: f64 = 1e-3;
    let mut steps = 0;
    while r < end {
        if steps >= MAX_STEPS {
            return Err(Error::Integration(format!("p-Laplacian shooting exceeded {MAX_STEPS} steps at r = {r}")));
        }
        let h_try = h.min(end - r);
        let (y_new, err) = dp_step(sys, r, y, h_try);
        steps += 1;
        if !y_new[0].is_finite() || !y_new[1].is_finite() {
            h = 0.25 * h_try;
        } else if err <= 1.0 {
            if stop_at_zero && y_new[0] <= 0.0 {
                return Ok(Shot { y: y_new, crossed: true });
            }
            r = if h_try == end - r { end } else { r + h_try };
            y = y_new;
            h = h_try * (0.9 * err.max(1e-10).powf(-0.2)).min(5.0);
        } else {
            h = h_try * (0.9 * err.powf(-0.2)).max(0.1);
        }
        if h < 1e-14 * r.max(1e-6) {
            return Err(Error::Integration(format!("p-Laplacian shooting step underflow at r = {r}")));
        }
    }
    Ok(Shot { y, crossed: false })
}

/// Result of the eigenvalue search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenSolution {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub lambda: f64,
    /// Φ(1) at the returned λ.
    pub boundary_value: f64,
    /// Φ'(1) at the returned λ.
    pub boundary_slope: f64,
    pub bisections: usize,
}

/// λ₁(B₁) of −Δ_p with Dirichlet data on the unit ball of ℝ^N, p > 1.
///
/// Bisects λ on whether Φ reaches zero before r = 1, starting from the
/// bracket [λ₂/2, 2λ₂] around the p = 2 value λ₂ = j²_{N/2−1,1} and widening
/// it geometrically when it does not straddle the eigenvalue.
pub fn plap_first_eigenvalue(n: usize, p: f64, tol: f64) -> Result<EigenSolution> {
    if n < 1 {
        return Err(domain("plap_first_eigenvalue needs N >= 1"));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(domain(format!("plap_first_eigenvalue needs p > 1, got {p}")));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let nf = n as f64;
    let anchor = bessel_first_zero(0.5 * nf - 1.0).map(|z| z.value * z.value).unwrap_or(nf * nf);
    let crosses = |lambda: f64| -> Result<bool> { Ok(shoot(&Plap { n: nf, p, lambda }, 1.0, true)?.crossed) };
    let (mut lo, mut hi) = (0.5 * anchor, 2.0 * anchor);
    let mut widen = 0;
    while crosses(lo)? {
        lo *= 0.5;
        widen += 1;
        if widen > 60 {
            return Err(Error::Search(format!("no lower bracket for lambda_1 (N = {n}, p = {p})")));
        }
    }
    while !crosses(hi)? {
        hi *= 2.0;
        widen += 1;
        if widen > 60 {
            return Err(Error::Search(format!("no upper bracket for lambda_1 (N = {n}, p = {p})")));
        }
    }
    let mut bisections = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        bisections += 1;
    }
    let lambda = 0.5 * (lo + hi);
    let sys = Plap { n: nf, p, lambda };
    let end = shoot(&sys, 1.0, false)?;
    Ok(EigenSolution {
        n,
        p,
        lambda,
        boundary_value: end.y[0],
        boundary_slope: sys.dphi(1.0, end.y[1]),
        bisections,
    })
}

/// The first eigenfunction Φ on [0,1], Φ(0) = 1, evaluated on demand.
#[derive(Debug, Clone, Copy)]
pub struct Eigenfunction {
    sys: Plap,
    slope_at_one: f64,
    pub solution: EigenSolution,
}

impl Eigenfunction {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        let solution = plap_first_eigenvalue(n, p, EIGEN_TOL)?;
        Ok(Eigenfunction {
            sys: Plap { n: n as f64, p, lambda: solution.lambda },
            slope_at_one: solution.boundary_slope,
            solution,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.sys.lambda
    }

    /// (Φ, Φ') at r = 1 − gap.
    pub fn eval(&self, r: f64, gap: f64) -> (f64, f64) {
        if r <= SHOOT_START {
            return (self.sys.series(r)[0], self.sys.series_dphi(r));
        }
        if gap < WALL_EXPANSION {
            // Φ(1) = 0 and Φ''(1) = −(N−1)Φ'(1)/(p−1)
            let d1 = self.slope_at_one;
            let d2 = -(self.sys.n - 1.0) * d1 / (self.sys.p - 1.0);
            return (-d1 * gap + 0.5 * d2 * gap * gap, d1 - d2 * gap);
        }
        let shot = shoot(&self.sys, r, false).expect("shooting succeeded at the eigenvalue");
        (shot.y[0], self.sys.dphi(r, shot.y[1]))
    }

    /// Φ_R(s) = Φ(s/R) as a profile on the Euclidean ball of radius R.
    pub fn profile(&self, radius: f64) -> RadialProfile {
        let (f, d) = (*self, *self);
        RadialProfile::new(
            format!("first p-Laplacian eigenfunction (N={}, p={}, R={radius})", self.solution.n, self.solution.p),
            Domain::Ball { radius },
            self.solution.n,
            Arc::new(move |c: Coord| f.eval(c.x / radius, c.gap / radius).0),
            Some(Arc::new(move |c: Coord| d.eval(c.x / radius, c.gap / radius).1 / radius)),
        )
    }
}

/// The first eigenfunction rescaled to the ball of radius R.
pub fn plap_eigenfunction(n: usize, p: f64, radius: f64) -> Result<RadialProfile> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(domain(format!("R must be positive and finite, got {radius}")));
    }
    Ok(Eigenfunction::new(n, p)?.profile(radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_singular;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn p2_closed_forms() {
        let l3 = plap_first_eigenvalue(3, 2.0, EIGEN_TOL).unwrap();
        assert!(rel(l3.lambda, PI * PI) < 1e-10, "{}", l3.lambda);
        let j0 = bessel_first_zero(0.0).unwrap().value;
        let l2 = plap_first_eigenvalue(2, 2.0, EIGEN_TOL).unwrap();
        assert!(rel(l2.lambda, j0 * j0) < 1e-10, "{}", l2.lambda);
        assert!(rel(j0 * j0, 5.783185962946785) < 1e-14);
        // N = 1: Φ = cos(πr/2)
        let l1 = plap_first_eigenvalue(1, 2.0, EIGEN_TOL).unwrap();
        assert!(rel(l1.lambda, PI * PI / 4.0) < 1e-10);
    }

    #[test]
    fn eigenfunction_p2_is_sinc() {
        let f = Eigenfunction::new(3, 2.0).unwrap();
        for s in [0.1, 0.25, 0.5, 0.9, 0.999] {
            let (v, d) = f.eval(s, 1.0 - s);
            let x = PI * s;
            assert!((v - x.sin() / x).abs() < 1e-9, "s = {s}");
            assert!((d - PI * (x * x.cos() - x.sin()) / (x * x)).abs() < 1e-8);
        }
        let prof = f.profile(2.0);
        assert!(prof.boundary_value().unwrap() <= 1e-5);
        assert!((prof.eval_at(1.0) - 2.0 / PI).abs() < 1e-9);
        let near = prof.eval(Coord { x: 2.0 * (1.0 - 1e-8), gap: 2e-8 });
        assert!(near.abs() <= 1e-6);
    }

    #[test]
    fn scaling_of_the_first_zero() {
        // Φ_λ(r) = Φ_1(λ^{1/p} r): the zero of the λ = 1 solution is λ₁^{1/p}
        for (n, p) in [(3usize, 2.5f64), (4, 1.5), (2, 3.0)] {
            let lam = plap_first_eigenvalue(n, p, EIGEN_TOL).unwrap().lambda;
            let z = lam.powf(1.0 / p);
            let unit = Plap { n: n as f64, p, lambda: 1.0 };
            let before = shoot(&unit, z * (1.0 - 1e-7), true).unwrap();
            let after = shoot(&unit, z * (1.0 + 1e-7), true).unwrap();
            assert!(!before.crossed && after.crossed, "N = {n}, p = {p}");
        }
    }

    #[test]
    fn rayleigh_quotient() {
        for (n, p) in [(3usize, 2.0f64), (3, 2.5), (4, 1.8)] {
            let f = Eigenfunction::new(n, p).unwrap();
            let num = integrate_singular(|r| f.eval(r, 1.0 - r).1.abs().powf(p) * r.powi(n as i32 - 1), 0.0, 1.0, 1e-11).unwrap();
            let den = integrate_singular(|r| f.eval(r, 1.0 - r).0.abs().powf(p) * r.powi(n as i32 - 1), 0.0, 1.0, 1e-11).unwrap();
            assert!(rel(num.value / den.value, f.lambda()) < 1e-8, "N = {n}, p = {p}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(plap_first_eigenvalue(3, 1.0, 1e-10).is_err());
        assert!(plap_first_eigenvalue(0, 2.0, 1e-10).is_err());
        assert!(plap_eigenfunction(3, 2.0, 0.0).is_err());
    }
}
