//! Adaptive Gauss-Kronrod quadrature and the CCDF-weighted integral shared by
//! every rate computation.

use std::cell::Cell;
use std::collections::BinaryHeap;
use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, QuadratureFailure, Result};

/// Tolerances and limits for every numerical integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Semi-infinite ranges are split where the CCDF drops below this value.
    pub tail_cutoff_prob: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 4000,
            tail_cutoff_prob: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::domain("quadrature tolerances must be positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        if !(self.tail_cutoff_prob > 0.0 && self.tail_cutoff_prob < 1.0) {
            return Err(Error::domain("tail_cutoff_prob must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Sorted, pairwise disjoint union of half-open intervals `[a, b)` on the
/// nonnegative half-line; `b` may be `+inf`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if a.is_nan() || b.is_nan() || a < 0.0 || a.is_infinite() || a >= b {
                return Err(Error::domain(format!("invalid interval [{a}, {b})")));
            }
        }
        for w in intervals.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::domain(format!(
                    "intervals [{}, {}) and [{}, {}) overlap or are unsorted",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(IntervalSet { intervals })
    }

    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// `[0, inf)`
    pub fn half_line() -> Self {
        IntervalSet {
            intervals: vec![(0.0, f64::INFINITY)],
        }
    }

    pub fn single(a: f64, b: f64) -> Result<Self> {
        IntervalSet::new(vec![(a, b)])
    }

    /// Appends `[a, b)` after the current last interval, merging when they abut.
    /// Degenerate pieces are ignored.
    pub(crate) fn push(&mut self, a: f64, b: f64) {
        if !(a < b) {
            return;
        }
        match self.intervals.last_mut() {
            Some(last) if last.1 >= a => last.1 = last.1.max(b),
            _ => self.intervals.push((a, b)),
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, s: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= s && s < b)
    }

    /// Lebesgue measure (possibly infinite).
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }

    /// Complement within `[0, inf)`.
    pub fn complement(&self) -> Self {
        let mut out = IntervalSet::empty();
        let mut cursor = 0.0;
        for &(a, b) in &self.intervals {
            out.push(cursor, a);
            cursor = b;
        }
        out.push(cursor, f64::INFINITY);
        out
    }

    /// Splits every interval at the given interior points.
    pub fn split_at(&self, points: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
        cuts.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            let mut lo = a;
            for &c in cuts.iter().filter(|&&c| c > a && c < b) {
                if c > lo {
                    out.push((lo, c));
                    lo = c;
                }
            }
            out.push((lo, b));
        }
        out
    }
}

impl TryFrom<Vec<(f64, f64)>> for IntervalSet {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        IntervalSet::new(v)
    }
}

impl From<IntervalSet> for Vec<(f64, f64)> {
    fn from(s: IntervalSet) -> Self {
        s.intervals
    }
}

/// Anything that can report `P(S >= s)` for `s >= 0`.
pub trait CcdfEvaluator {
    fn ccdf(&self, s: f64) -> f64;

    /// Locations where the CCDF jumps.
    fn atoms(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Beyond this point the CCDF is identically zero.
    fn support_max(&self) -> f64 {
        f64::INFINITY
    }
}

/// Adapter turning a closure into a [`CcdfEvaluator`] without atoms.
pub struct FnCcdf<F>(pub F);

impl<F: Fn(f64) -> f64> CcdfEvaluator for FnCcdf<F> {
    fn ccdf(&self, s: f64) -> f64 {
        (self.0)(s)
    }
}

// 15-point Kronrod nodes on [0, 1] with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

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
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over the finite
/// interval `[a, b]`, pre-split at `breaks`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut heap = BinaryHeap::new();
    let mut prev = lo;
    for p in pts.into_iter().chain(std::iter::once(hi)) {
        heap.push(gauss_kronrod(f, prev, p));
        prev = p;
    }
    let mut splits = heap.len();
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(QuadratureFailure {
                lower: lo,
                upper: hi,
                estimate: total,
                error_estimate: err,
                subdivisions: splits,
            }));
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= tol {
            return Ok(sign * total);
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        // Segment cannot be split further in floating point: accept it.
        if mid <= worst.a || mid >= worst.b || splits >= cfg.max_subdivisions {
            let roundoff = worst.value.abs() * 1e-13 + f64::MIN_POSITIVE;
            if worst.error <= roundoff {
                heap.push(Segment {
                    error: 0.0,
                    ..worst
                });
                continue;
            }
            heap.push(worst);
            let total: f64 = heap.iter().map(|s| s.value).sum();
            let err: f64 = heap.iter().map(|s| s.error).sum();
            return Err(Error::Quadrature(QuadratureFailure {
                lower: lo,
                upper: hi,
                estimate: total,
                error_estimate: err,
                subdivisions: splits,
            }));
        }
        heap.push(gauss_kronrod(f, worst.a, mid));
        heap.push(gauss_kronrod(f, mid, worst.b));
        splits += 1;
    }
}

/// Dyadic break points inside `(a, b)`: keeps each piece within a factor of
/// two in scale so `1/(1+s)`-type integrands stay well resolved.
fn dyadic_breaks(a: f64, b: f64) -> Vec<f64> {
    (-12..=100)
        .map(|k| 2f64.powi(k))
        .filter(|&p| p > a && p < b)
        .collect()
}

/// Integrates `f` over `[t, inf)` via `s = t + u/(1-u)`.
fn integrate_tail<F: Fn(f64) -> f64>(f: &F, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        let s = t + u / one_minus;
        let v = f(s) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_finite(&g, 0.0, 1.0, &[0.5, 0.9, 0.99, 0.999], cfg)
}

/// First `T >= start` (found by doubling) with `ccdf(T) <= cutoff`, or `None`
/// if the CCDF never drops that far before overflow.
fn tail_split<C: CcdfEvaluator + ?Sized>(ccdf: &C, start: f64, cutoff: f64) -> Option<f64> {
    let mut t = start.max(1.0);
    while t < 1e300 {
        if ccdf.ccdf(t) <= cutoff {
            return Some(t);
        }
        t *= 2.0;
    }
    None
}

/// `int_set ccdf(s) * weight(s) ds`, splitting at the CCDF's atoms and
/// handling unbounded intervals by a tail split plus a compactifying
/// substitution.
pub fn integrate_ccdf_against<C, W>(
    ccdf: &C,
    set: &IntervalSet,
    weight: W,
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    C: CcdfEvaluator + ?Sized,
    W: Fn(f64) -> f64,
{
    cfg.validate()?;
    let violation = Cell::new(None::<f64>);
    let integrand = |s: f64| {
        let p = ccdf.ccdf(s);
        if !(0.0..=1.0).contains(&p) {
            violation.set(Some(s));
            return 0.0;
        }
        if p == 0.0 {
            0.0
        } else {
            p * weight(s)
        }
    };
    let support = ccdf.support_max();
    let atoms = ccdf.atoms();
    let mut total = 0.0;
    for (a, b) in set.split_at(&atoms) {
        let b = b.min(support);
        if a >= b {
            continue;
        }
        if b.is_finite() {
            total += integrate_finite(&integrand, a, b, &dyadic_breaks(a, b), cfg)?;
        } else {
            match tail_split(ccdf, a, cfg.tail_cutoff_prob) {
                Some(t) => {
                    if t > a {
                        total += integrate_finite(&integrand, a, t, &dyadic_breaks(a, t), cfg)?;
                    }
                    total += integrate_tail(&integrand, t.max(a), cfg)?;
                }
                None => total += integrate_tail(&integrand, a, cfg)?,
            }
        }
        if let Some(s) = violation.get() {
            return Err(Error::Contract(format!(
                "ccdf evaluated to {} at s = {s}, outside [0, 1]",
                ccdf.ccdf(s)
            )));
        }
    }
    Ok(total)
}

/// `log2(e) * int_set ccdf(s) / (1 + s) ds` in bits.
pub fn integrate_ccdf_weighted<C: CcdfEvaluator + ?Sized>(
    ccdf: &C,
    set: &IntervalSet,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let v = integrate_ccdf_against(ccdf, set, |s| 1.0 / (1.0 + s), cfg)?;
    Ok(LOG2_E * v)
}

/// `mu_gamma(a, b) = log2(e) * int_a^b exp(-s/gamma) / (1 + s) ds`.
pub fn mu_gamma(gamma: f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "mu_gamma needs gamma > 0, got {gamma}"
        )));
    }
    if !(a >= 0.0 && a.is_finite() && b >= a) {
        return Err(Error::domain(format!(
            "mu_gamma needs 0 <= a <= b, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let set = IntervalSet::single(a, b)?;
    integrate_ccdf_weighted(&FnCcdf(|s: f64| (-s / gamma).exp()), &set, cfg)
}
