//! Numerical integration: adaptive Gauss–Kronrod on finite intervals,
//! double-exponential rules for endpoint singularities and the half-line,
//! a tensor 2-D rule, and Monte Carlo integration over Wulff balls.
//!
//! The double-exponential rules hand the integrand an [`Abscissa`], which
//! carries the distance to each endpoint computed without cancellation.
//! Integrands with weights like `(1 - s/R)^(-a)` should use those distances
//! rather than `x` itself.

use std::cell::RefCell;
use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::norms::NormSpec;

/// Default relative tolerance for smooth 1-D integrals.
pub const TOL_SMOOTH: f64 = 1e-10;
/// Default relative tolerance for 1-D integrals with endpoint singularities.
pub const TOL_SINGULAR: f64 = 1e-8;
/// Default relative tolerance for 2-D integrals.
pub const TOL_2D: f64 = 1e-6;

/// Level differences below this are treated as roundoff in underflowing terms.
const UNDERFLOW_FLOOR: f64 = 1e-250;

const MAX_SUBDIVISIONS: usize = 10_000;
const MAX_DE_LEVEL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Turns a non-converged result into a precision error naming `what`.
    pub fn require(self, what: &str) -> Result<QuadResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Precision {
                what: what.to_string(),
                estimate: self.value,
                error: self.error_estimate,
            })
        }
    }
}

/// A quadrature node with its distances to both interval ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abscissa {
    pub x: f64,
    /// `x - a`, accurate when small.
    pub from_lo: f64,
    /// `b - x`, accurate when small.
    pub to_hi: f64,
}

/// Pairwise summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod 7/15

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = kronrod.abs();
    let mut fv = [0.0; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let result = kronrod * half;
    let resasc = asc * half.abs();
    let resabs = abs_k * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]` to relative
/// tolerance `tol`. Endpoints are never evaluated.
pub fn integrate_finite(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("integrate_finite needs finite a < b, got [{a}, {b}]")));
    }
    let (value, error) = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut subdivisions = 1;
    while total_err > tol * total.abs() && total_err > f64::MIN_POSITIVE {
        if subdivisions >= MAX_SUBDIVISIONS {
            break;
        }
        let worst = heap.pop().expect("heap holds every segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval below floating resolution; keep it and stop refining
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        subdivisions += 1;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // recompute totals from scratch every so often to limit drift
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        if subdivisions % 64 == 0 {
            let mut segs: Vec<Segment> = heap.iter().copied().collect();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            total = pairwise_sum(&segs.iter().map(|s| s.value).collect::<Vec<_>>());
            total_err = segs.iter().map(|s| s.error).sum();
        }
    }
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pairwise_sum(&segs.iter().map(|s| s.value).collect::<Vec<_>>());
    let error_estimate: f64 = segs.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(Error::Divergence(format!("non-finite integral on [{a}, {b}]")));
    }
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations,
        converged: error_estimate <= tol * value.abs() || error_estimate == 0.0,
    })
}

// ---------------------------------------------------------------------------
// Double-exponential rules

/// Largest |t| used by tanh-sinh; the node distance to an endpoint is then
/// about 1e-290 of the interval.
const TANH_SINH_TMAX: f64 = 6.0;

struct DeLevels {
    value: f64,
    error: f64,
    evaluations: usize,
    converged: bool,
}

/// Runs trapezoid levels h = h0·2^-L over nodes `k h` with |k h| in the
/// supplied extent, adding only the new odd nodes at each level.
fn de_levels(
    term: &mut dyn FnMut(f64) -> f64,
    t_lo: f64,
    t_hi: f64,
    h0: f64,
    tol: f64,
    what: &str,
) -> Result<DeLevels> {
    let mut evaluations = 0usize;
    let mut terms = Vec::new();
    let k_lo = (t_lo / h0).ceil() as i64;
    let k_hi = (t_hi / h0).floor() as i64;
    for k in k_lo..=k_hi {
        terms.push(term(k as f64 * h0));
        evaluations += 1;
    }
    let mut sum = pairwise_sum(&terms);
    let mut h = h0;
    let mut prev = sum * h;
    let mut diffs: Vec<f64> = Vec::new();
    for level in 1..=MAX_DE_LEVEL {
        h *= 0.5;
        terms.clear();
        let k_lo = (t_lo / h).ceil() as i64;
        let k_hi = (t_hi / h).floor() as i64;
        let mut k = if k_lo.rem_euclid(2) == 1 { k_lo } else { k_lo + 1 };
        while k <= k_hi {
            terms.push(term(k as f64 * h));
            evaluations += 1;
            k += 2;
        }
        sum += pairwise_sum(&terms);
        let current = sum * h;
        if !current.is_finite() {
            return Err(Error::Divergence(format!("{what}: non-finite partial sum at level {level}")));
        }
        let diff = (current - prev).abs();
        diffs.push(diff);
        if level >= 3 && (diff <= tol * current.abs() || diff <= UNDERFLOW_FLOOR) {
            return Ok(DeLevels { value: current, error: diff, evaluations, converged: true });
        }
        // successive differences growing past the initial levels means the
        // sums are chasing a non-integrable endpoint
        if level >= 6 {
            let n = diffs.len();
            if diffs[n - 1] > diffs[n - 2] && diffs[n - 2] > diffs[n - 3] && diffs[n - 1] > 1e-3 * current.abs() && diffs[n - 1] > UNDERFLOW_FLOOR {
                return Err(Error::Divergence(format!("{what}: successive levels diverge")));
            }
        }
        prev = current;
    }
    let error = diffs.last().copied().unwrap_or(f64::INFINITY);
    Ok(DeLevels { value: prev, error, evaluations, converged: false })
}

/// Tanh-sinh integration with endpoint-distance-aware nodes.
pub fn integrate_singular_edges(
    f: impl Fn(Abscissa) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadResult> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(domain(format!("integrate_singular needs finite a < b, got [{a}, {b}]")));
    }
    let len = b - a;
    let half = 0.5 * len;
    let center = a + half;
    let node = |t: f64| -> (Abscissa, f64) {
        if t == 0.0 {
            return (Abscissa { x: center, from_lo: half, to_hi: half }, half * FRAC_PI_2);
        }
        let u = FRAC_PI_2 * t.abs().sinh();
        let e = (-2.0 * u).exp();
        let gap = half * 2.0 * e / (1.0 + e);
        let weight = half * FRAC_PI_2 * t.abs().cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        let p = if t > 0.0 {
            Abscissa { x: b - gap, from_lo: len - gap, to_hi: gap }
        } else {
            Abscissa { x: a + gap, from_lo: gap, to_hi: len - gap }
        };
        (p, weight)
    };
    let mut term = |t: f64| -> f64 {
        let (p, w) = node(t);
        if w == 0.0 || p.from_lo <= 0.0 || p.to_hi <= 0.0 {
            return 0.0;
        }
        let v = f(p);
        if v == 0.0 {
            0.0
        } else {
            v * w
        }
    };
    let tmax = TANH_SINH_TMAX;
    let out = de_levels(&mut term, -tmax, tmax, 1.0, tol, "tanh-sinh")?;
    // a non-negligible contribution at the truncation nodes means the
    // integrand is not integrable at that end
    let edge = term(tmax).abs().max(term(-tmax).abs());
    if edge > 1e-3 * out.value.abs().max(f64::MIN_POSITIVE) && edge > 1e-200 {
        return Err(Error::Divergence(format!(
            "tanh-sinh: integrand not decaying at the endpoints of [{a}, {b}]"
        )));
    }
    Ok(QuadResult {
        value: out.value,
        error_estimate: out.error,
        evaluations: out.evaluations + 2,
        converged: out.converged && edge <= tol * out.value.abs().max(f64::MIN_POSITIVE),
    })
}

/// Tanh-sinh integration for integrands with integrable endpoint
/// singularities. Nodes that round onto an endpoint are skipped.
pub fn integrate_singular(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    integrate_singular_edges(
        |p| {
            if p.x <= a || p.x >= b {
                0.0
            } else {
                f(p.x)
            }
        },
        a,
        b,
        tol,
    )
}

/// Largest |t| for exp-sinh: keeps exp(π/2 sinh t) inside the normal range.
const EXP_SINH_TMAX: f64 = 6.7;
const EXP_SINH_H0: f64 = 0.5;

/// ∫_0^∞ f(r) dr by the exp-sinh rule r = exp(π/2 sinh t).
///
/// The extent in t is fixed on the coarsest level: each side stops after
/// three consecutive nodes whose contribution is below `tol` times the
/// running sum.
pub fn integrate_halfline(f: impl Fn(f64) -> f64, tol: f64) -> Result<QuadResult> {
    integrate_tail(f, 0.0, tol)
}

/// ∫_a^∞ f(r) dr, the exp-sinh rule shifted to start at `a`.
pub fn integrate_tail(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> Result<QuadResult> {
    if !a.is_finite() {
        return Err(domain("integrate_tail needs a finite lower limit"));
    }
    let term = |t: f64| -> f64 {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        let w = x * FRAC_PI_2 * t.cosh();
        if w == 0.0 || x == 0.0 || !x.is_finite() {
            return 0.0;
        }
        let v = f(a + x);
        if v == 0.0 {
            0.0
        } else {
            v * w
        }
    };
    let center = term(0.0);
    let mut running = center.abs();
    let mut evaluations = 1;
    let mut extent = [0.0f64; 2];
    let mut tail = [0.0f64; 2];
    for (side, sign) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut quiet = 0;
        let mut k = 1;
        loop {
            let t = sign * k as f64 * EXP_SINH_H0;
            if t.abs() > EXP_SINH_TMAX {
                let t_last = sign * (k - 1) as f64 * EXP_SINH_H0;
                let last = term(t_last).abs();
                if quiet == 0 && last > 1e-3 * running {
                    return Err(Error::Divergence(format!(
                        "half-line integrand does not decay ({} end)",
                        if sign > 0.0 { "infinite" } else { "lower" }
                    )));
                }
                // geometric bound on the cut-off part from the last two nodes
                let ratio = last / term(t_last - sign * EXP_SINH_H0).abs();
                tail[side] = if last == 0.0 {
                    0.0
                } else if ratio < 1.0 {
                    last * EXP_SINH_H0 / (1.0 - ratio)
                } else {
                    f64::INFINITY
                };
                extent[side] = t_last;
                break;
            }
            let v = term(t);
            evaluations += 1;
            if !v.is_finite() {
                return Err(Error::Divergence(format!("half-line integrand non-finite at r = {}", a + (FRAC_PI_2 * t.sinh()).exp())));
            }
            running += v.abs();
            if v.abs() <= tol * 1e-2 * running {
                quiet += 1;
                if quiet == 3 {
                    extent[side] = t;
                    break;
                }
            } else {
                quiet = 0;
            }
            k += 1;
        }
    }
    let mut term_mut = term;
    let out = de_levels(&mut term_mut, extent[0], extent[1], EXP_SINH_H0, tol, "exp-sinh")?;
    let cut = tail[0] + tail[1];
    Ok(QuadResult {
        value: out.value,
        error_estimate: out.error + cut,
        evaluations: out.evaluations + evaluations,
        converged: out.converged && cut <= tol * out.value.abs(),
    })
}

/// ∫_0^∞ I(t) dt where `inner(t)` computes I(t) by any rule. Inner errors
/// abort the outer integral; the worst inner relative error is added to
/// the outer estimate.
pub fn integrate_outer_halfline(inner: impl Fn(f64) -> Result<QuadResult>, tol: f64) -> Result<QuadResult> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let worst_inner = RefCell::new(0.0f64);
    let inner_evals = RefCell::new(0usize);
    let outer = integrate_halfline(
        |t| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            match inner(t) {
                Ok(q) => {
                    *inner_evals.borrow_mut() += q.evaluations;
                    if !q.converged {
                        *failure.borrow_mut() = Some(Error::Precision {
                            what: format!("inner integral at t = {t}"),
                            estimate: q.value,
                            error: q.error_estimate,
                        });
                    }
                    let rel = if q.value != 0.0 { q.error_estimate / q.value.abs() } else { 0.0 };
                    let mut w = worst_inner.borrow_mut();
                    *w = w.max(rel);
                    q.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    let inner_rel = worst_inner.into_inner();
    Ok(QuadResult {
        value: outer.value,
        error_estimate: outer.error_estimate + inner_rel * outer.value.abs(),
        evaluations: outer.evaluations + inner_evals.into_inner(),
        converged: outer.converged,
    })
}

/// ∫_0^∞ ∫_0^R f(s, t) ds dt with a tanh-sinh inner rule in `s` (tolerance
/// `tol/10`) and an exp-sinh outer rule in `t`.
pub fn integrate_2d(f: impl Fn(Abscissa, f64) -> f64, r: f64, tol: f64) -> Result<QuadResult> {
    if !(r > 0.0) {
        return Err(domain("integrate_2d needs R > 0"));
    }
    integrate_outer_halfline(|t| integrate_singular_edges(|p| f(p, t), 0.0, r, tol / 10.0), tol)
}

/// Sums results over adjacent pieces of one integral.
pub fn sum_results(parts: &[QuadResult]) -> QuadResult {
    QuadResult {
        value: pairwise_sum(&parts.iter().map(|q| q.value).collect::<Vec<_>>()),
        error_estimate: parts.iter().map(|q| q.error_estimate).sum(),
        evaluations: parts.iter().map(|q| q.evaluations).sum(),
        converged: parts.iter().all(|q| q.converged),
    }
}

/// [`sum_results`] for pieces of one integral: converged when every piece
/// is, or when the summed error is within `tol` of the total.
pub fn sum_pieces(parts: &[QuadResult], tol: f64) -> QuadResult {
    let mut q = sum_results(parts);
    q.converged |= q.error_estimate <= tol * q.value.abs();
    q
}

// ---------------------------------------------------------------------------
// Monte Carlo over Wulff balls

/// Samples per deterministic chunk of the Monte Carlo stream.
pub const MC_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub hits: usize,
}

impl McEstimate {
    pub fn acceptance(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }
}

#[derive(Default, Clone, Copy)]
struct ChunkStats {
    sum: f64,
    sum_sq: f64,
    hits: usize,
}

/// Monte Carlo estimate of ∫_{W_R} g(x) dx where W_R = {H⁰(x) < R}.
///
/// Uniform samples in the bounding box Π[-R·H(e_i), R·H(e_i)]; membership
/// is decided by the dual norm. Chunk `c` of the stream is driven by a
/// ChaCha8 generator on stream `c`, and chunk statistics are reduced in
/// chunk order, so the result does not depend on the worker count.
pub fn mc_wulff_integral(
    spec: &NormSpec,
    radius: f64,
    g: impl Fn(&[f64]) -> f64 + Sync,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(radius > 0.0) {
        return Err(domain("Monte Carlo radius must be positive"));
    }
    if samples < 2 {
        return Err(domain("Monte Carlo needs at least two samples"));
    }
    let dim = spec.dim();
    let half_widths: Vec<f64> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            spec.eval(&e).map(|h| radius * h)
        })
        .collect::<Result<_>>()?;
    let box_volume: f64 = half_widths.iter().map(|w| 2.0 * w).product();
    let chunks = samples.div_ceil(MC_CHUNK);
    let stats: Vec<Result<ChunkStats>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut st = ChunkStats::default();
            let mut x = vec![0.0; dim];
            for _ in 0..count {
                for (xi, w) in x.iter_mut().zip(&half_widths) {
                    *xi = w * (2.0 * rng.gen::<f64>() - 1.0);
                }
                if spec.in_wulff_ball(&x, radius)? {
                    let v = g(&x);
                    st.sum += v;
                    st.sum_sq += v * v;
                    st.hits += 1;
                }
            }
            Ok(st)
        })
        .collect();
    let mut total = ChunkStats::default();
    for st in stats {
        let st = st?;
        total.sum += st.sum;
        total.sum_sq += st.sum_sq;
        total.hits += st.hits;
    }
    let n = samples as f64;
    let acceptance = total.hits as f64 / n;
    if acceptance < 1e-4 {
        return Err(Error::Efficiency(format!(
            "acceptance rate {acceptance:.3e} below 1e-4 in the bounding box"
        )));
    }
    let mean = total.sum / n;
    let var = ((total.sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: box_volume * mean,
        standard_error: box_volume * (var / n).sqrt(),
        samples,
        hits: total.hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::log_gamma;
    use std::f64::consts::PI;

    fn close(q: &QuadResult, expect: f64, tol: f64) {
        assert!(q.converged, "not converged: {q:?}");
        let rel = (q.value - expect).abs() / expect.abs();
        assert!(rel <= tol, "got {} expected {expect} (rel {rel:e})", q.value);
    }

    #[test]
    fn finite_examples() {
        close(&integrate_finite(|s| s * s, 0.0, 1.0, 1e-10).unwrap(), 1.0 / 3.0, 1e-10);
        close(&integrate_finite(f64::sin, 0.0, PI, 1e-10).unwrap(), 2.0, 1e-10);
        close(&integrate_finite(|s| s.powf(-0.5), 0.0, 1.0, 1e-10).unwrap(), 2.0, 1e-10);
        assert!(integrate_finite(|s| s, 1.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn finite_reports_nonconvergence() {
        let q = integrate_finite(|s| (1.0 / s).sin() / s, 1e-6, 1.0, 1e-14).unwrap();
        assert!(!q.converged);
        assert!(q.require("oscillatory").is_err());
    }

    #[test]
    fn singular_examples() {
        close(&integrate_singular(|s| (1.0 - s).powf(-0.5), 0.0, 1.0, 1e-8).unwrap(), 2.0, 1e-8);
        close(&integrate_singular(|s| (1.0 / s).ln(), 0.0, 1.0, 1e-8).unwrap(), 1.0, 1e-8);
        let beta = (2.0 * log_gamma(0.1).unwrap() - log_gamma(0.2).unwrap()).exp();
        let q = integrate_singular_edges(
            |p| p.from_lo.powf(-0.9) * p.to_hi.powf(-0.9),
            0.0,
            1.0,
            1e-8,
        )
        .unwrap();
        close(&q, beta, 1e-8);
    }

    #[test]
    fn singular_detects_non_integrable_endpoint() {
        let r = integrate_singular_edges(|p| 1.0 / p.from_lo, 0.0, 1.0, 1e-8);
        assert!(matches!(r, Err(Error::Divergence(_))), "{r:?}");
    }

    #[test]
    fn halfline_examples() {
        close(&integrate_halfline(|r| (-r).exp(), 1e-10).unwrap(), 1.0, 1e-10);
        close(&integrate_halfline(|r| (-r * r).exp() * r * r, 1e-10).unwrap(), PI.sqrt() / 4.0, 1e-10);
        // ∫ r²(1+r²)^-3 dr = B(3/2, 3/2)/2
        let oracle = 0.5 * (2.0 * log_gamma(1.5).unwrap() - log_gamma(3.0).unwrap()).exp();
        assert!((oracle - PI / 16.0).abs() < 1e-15);
        close(&integrate_halfline(|r| r * r * (1.0 + r * r).powi(-3), 1e-10).unwrap(), PI / 16.0, 1e-10);
        close(&integrate_tail(|r| (-r).exp(), 2.0, 1e-10).unwrap(), (-2.0f64).exp(), 1e-10);
    }

    #[test]
    fn halfline_detects_non_decaying_tail() {
        assert!(matches!(integrate_halfline(|_| 1.0, 1e-10), Err(Error::Divergence(_))));
    }

    #[test]
    fn two_dimensional_examples() {
        close(&integrate_2d(|s, t| (-t).exp() * s.x, 1.0, 1e-6).unwrap(), 0.5, 1e-6);
        close(&integrate_2d(|s, t| (-t).exp() * s.to_hi.powf(-0.5), 1.0, 1e-6).unwrap(), 2.0, 1e-6);
        close(&integrate_2d(|s, t| t * (-t * t).exp() * s.x * s.x, 1.0, 1e-6).unwrap(), 1.0 / 6.0, 1e-6);
    }

    #[test]
    fn singular_and_finite_agree_on_smooth_integrands() {
        let fs: [fn(f64) -> f64; 3] = [|x| x.exp(), |x| 1.0 / (1.0 + x * x), |x| (3.0 * x).cos() + 2.0];
        for f in fs {
            let a = integrate_finite(f, 0.0, 2.0, 1e-10).unwrap();
            let b = integrate_singular(f, 0.0, 2.0, 1e-8).unwrap();
            assert!((a.value - b.value).abs() <= a.error_estimate + b.error_estimate + 1e-14);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }
}
