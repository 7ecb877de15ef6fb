//! Binary expansion superposition: antipodal layers, the per-layer hard
//! detector and the rates it achieves over a fading channel.
//!
//! The transmitted symbol is `sqrt(3) * sum_n X_n 2^-n` with `X_n = +-1`.
//! Layer `n` in state `s` sees the per-layer SNR `a_n(s) = 3 s 4^-n`; with
//! the `d` layers below it stripped, its crossover probability is `eps_d(a)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::FadingDist;
use crate::quad::{integrate_ccdf_against, CcdfEvaluator, IntervalSet, QuadratureConfig};
use crate::region::{upper_concave_envelope, RatePair, RateRegionBoundary};
use crate::special::{entropy_bits, entropy_slope, g, normal_pdf, q};

/// Finite depths beyond this are numerically indistinguishable from infinity.
pub const MAX_FINITE_DEPTH: u32 = 30;
/// Below this per-layer SNR the detector is treated as a coin flip.
const TINY_SNR: f64 = 1e-8;
/// Above this depth the G-difference loses too many digits; average Q directly.
const G_DIFF_MAX_DEPTH: u32 = 8;
/// Level sums stop after this many consecutive negligible terms.
const NEGLIGIBLE_RATE: f64 = 1e-9;
const NEGLIGIBLE_RUN: usize = 3;

/// A word of antipodal digits `b_j = +-1` with value `sum_j b_j 2^-j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AntipodalWord {
    pub bits: Vec<i8>,
}

impl AntipodalWord {
    pub fn value(&self) -> f64 {
        self.bits
            .iter()
            .enumerate()
            .map(|(j, &b)| b as f64 * 0.5f64.powi(j as i32 + 1))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// All `2^m` words of length `m`, in lexicographic order with -1 first.
    pub fn all(m: usize) -> impl Iterator<Item = AntipodalWord> {
        (0..1u64 << m).map(move |code| AntipodalWord {
            bits: (0..m)
                .map(|j| if code >> (m - 1 - j) & 1 == 1 { 1 } else { -1 })
                .collect(),
        })
    }
}

#[inline]
fn sgn(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// First `m` digits of the greedy antipodal expansion of `a in [-1, 1]`.
pub fn antipodal_expand(a: f64, m: usize) -> Result<AntipodalWord> {
    if !(a.abs() <= 1.0) {
        return Err(Error::domain(format!(
            "antipodal expansion needs |a| <= 1, got {a}"
        )));
    }
    if m == 0 {
        return Err(Error::domain("expansion length must be at least 1"));
    }
    let mut bits = Vec::with_capacity(m);
    let mut partial = 0.0;
    let mut scale = 0.5;
    for _ in 0..m {
        let b = sgn(a - partial);
        partial += b as f64 * scale;
        scale *= 0.5;
        bits.push(b);
    }
    Ok(AntipodalWord { bits })
}

/// Nearest `m`-digit word to `y` (after clipping to `[-1, 1]`).
pub fn nearest_constellation(y: f64, m: usize) -> AntipodalWord {
    let m = m.max(1);
    let clipped = if y.is_nan() { 0.0 } else { y.clamp(-1.0, 1.0) };
    antipodal_expand(clipped, m).expect("clipped input is in range")
}

/// Number of interfering layers already removed below the detected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Option<u32>", from = "Option<u32>")]
pub enum Depth {
    Finite(u32),
    Infinite,
}

impl Depth {
    pub fn new(d: u32) -> Self {
        if d > MAX_FINITE_DEPTH {
            Depth::Infinite
        } else {
            Depth::Finite(d)
        }
    }
}

impl From<Depth> for Option<u32> {
    fn from(d: Depth) -> Self {
        match d {
            Depth::Finite(k) => Some(k),
            Depth::Infinite => None,
        }
    }
}

impl From<Option<u32>> for Depth {
    fn from(d: Option<u32>) -> Self {
        d.map_or(Depth::Infinite, Depth::new)
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(d) => write!(f, "{d}"),
            Depth::Infinite => write!(f, "inf"),
        }
    }
}

/// 20-point Gauss-Legendre rule on `[-1, 1]`.
fn legendre_rule() -> &'static [(f64, f64); 20] {
    static RULE: OnceLock<[(f64, f64); 20]> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 20;
        let mut rule = [(0.0, 0.0); N];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// `int_{-1}^{1} f(t) dt` by the 20-point rule.
fn legendre<F: Fn(f64) -> f64>(f: F) -> f64 {
    legendre_rule().iter().map(|&(x, w)| w * f(x)).sum()
}

/// Crossover probability as a function of `u = sqrt(a)`, unchecked.
fn eps_of_root(u: f64, d: Depth) -> f64 {
    if u * u < TINY_SNR {
        return 1.0;
    }
    match d {
        Depth::Infinite => 2.0 * q(u),
        Depth::Finite(k) if k <= G_DIFF_MAX_DEPTH => {
            let h = 0.5f64.powi(k as i32);
            (g(u * (1.0 + h)) - g(u * (1.0 - h))) / (u * h)
        }
        Depth::Finite(k) => {
            let h = 0.5f64.powi(k as i32);
            legendre(|t| q(u * (1.0 + h * t)))
        }
    }
}

/// `d eps / d u` at `u = sqrt(a)`.
fn eps_slope_of_root(u: f64, d: Depth) -> f64 {
    if u * u < TINY_SNR {
        return 0.0;
    }
    match d {
        Depth::Infinite => -2.0 * normal_pdf(u),
        Depth::Finite(k) if k <= G_DIFF_MAX_DEPTH => {
            let h = 0.5f64.powi(k as i32);
            let hi = (1.0 + h) * q(u * (1.0 + h));
            let lo = (1.0 - h) * q(u * (1.0 - h));
            (hi - lo) / (u * h) - eps_of_root(u, d) / u
        }
        Depth::Finite(k) => {
            let h = 0.5f64.powi(k as i32);
            -legendre(|t| (1.0 + h * t) * normal_pdf(u * (1.0 + h * t)))
        }
    }
}

/// Crossover probability of the layer detector at per-layer SNR `a` with
/// `d` stripped interfering layers. Clamp at 1/2 with [`epsilon_hat`].
pub fn epsilon_d(a: f64, d: Depth) -> Result<f64> {
    if !(a > 0.0) || a.is_infinite() {
        return Err(Error::domain(format!(
            "epsilon_d needs a finite a > 0, got {a}"
        )));
    }
    Ok(eps_of_root(a.sqrt(), d))
}

/// `min(1/2, eps_d(a))`, with `a = 0` allowed (pure guessing).
pub fn epsilon_hat(a: f64, d: Depth) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.5);
    }
    Ok(epsilon_d(a, d)?.min(0.5))
}

/// `a_n(s) = 3 s 4^-n`.
#[inline]
pub fn layer_snr(s: f64, n: u32) -> f64 {
    3.0 * s * 0.25f64.powi(n as i32)
}

/// Root of `eps_d(a) = 1/2`, computed once per depth.
pub fn guess_threshold(d: Depth) -> f64 {
    #[allow(clippy::declare_interior_mutable_const)]
    const EMPTY: OnceLock<f64> = OnceLock::new();
    static ROOTS: [OnceLock<f64>; MAX_FINITE_DEPTH as usize + 2] =
        [EMPTY; MAX_FINITE_DEPTH as usize + 2];
    let slot = match d {
        Depth::Finite(k) => k as usize,
        Depth::Infinite => MAX_FINITE_DEPTH as usize + 1,
    };
    *ROOTS[slot].get_or_init(|| {
        let (mut lo, mut hi) = (1e-3f64, 10.0f64);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if eps_of_root(mid.sqrt(), d) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// Root of `eps_0(a) = 1/2`, about 0.5405.
pub fn a0() -> f64 {
    guess_threshold(Depth::Finite(0))
}

/// Largest layer whose undepthed detector beats guessing in state `s`.
pub fn nhat(s: f64) -> u32 {
    if !(s > 0.0) || s.is_infinite() {
        return 0;
    }
    let a0 = a0();
    let mut n = (0.5 * (3.0 * s / a0).log2()).floor().max(0.0) as u32;
    while n >= 1 && layer_snr(s, n) < a0 {
        n -= 1;
    }
    while layer_snr(s, n + 1) >= a0 {
        n += 1;
    }
    n
}

/// Who a level is allocated to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelUse {
    User1,
    User2,
    Unused,
}

/// Allocation of levels `1..=max_level`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAssignment")]
pub struct LevelAssignment {
    pub max_level: u32,
    pub levels: BTreeMap<u32, LevelUse>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssignment {
    max_level: u32,
    levels: BTreeMap<u32, LevelUse>,
}

impl TryFrom<RawAssignment> for LevelAssignment {
    type Error = Error;
    fn try_from(raw: RawAssignment) -> Result<Self> {
        LevelAssignment::new(raw.max_level, raw.levels)
    }
}

impl LevelAssignment {
    pub fn new(max_level: u32, levels: BTreeMap<u32, LevelUse>) -> Result<Self> {
        if max_level == 0 {
            return Err(Error::domain("max_level must be at least 1"));
        }
        if let Some(n) = (1..=max_level).find(|n| !levels.contains_key(n)) {
            return Err(Error::domain(format!("level {n} is not assigned")));
        }
        if let Some(n) = levels.keys().find(|&&n| n == 0 || n > max_level) {
            return Err(Error::domain(format!("level {n} outside 1..={max_level}")));
        }
        Ok(LevelAssignment { max_level, levels })
    }

    /// Builds an assignment from a per-level rule.
    pub fn from_fn(max_level: u32, rule: impl Fn(u32) -> LevelUse) -> Result<Self> {
        LevelAssignment::new(max_level, (1..=max_level).map(|n| (n, rule(n))).collect())
    }

    /// Levels `1..=n2` to user 2, the rest up to `max_level` to user 1.
    pub fn threshold(n2: u32, max_level: u32) -> Result<Self> {
        LevelAssignment::from_fn(max_level, |n| {
            if n <= n2 {
                LevelUse::User2
            } else {
                LevelUse::User1
            }
        })
    }

    pub fn user_of(&self, n: u32) -> LevelUse {
        self.levels.get(&n).copied().unwrap_or(LevelUse::Unused)
    }

    pub fn levels_of(&self, user: LevelUse) -> Vec<u32> {
        self.levels
            .iter()
            .filter(|(_, &u)| u == user)
            .map(|(&n, _)| n)
            .collect()
    }
}

/// Layers between `n` and the nearest higher layer used by the other user.
/// Infinite when no such layer exists.
pub fn depth_of_level(assign: &LevelAssignment, n: u32) -> Result<Depth> {
    let me = match assign.levels.get(&n) {
        Some(&u @ (LevelUse::User1 | LevelUse::User2)) => u,
        _ => {
            return Err(Error::domain(format!(
                "level {n} is not assigned to a user"
            )))
        }
    };
    let other = if me == LevelUse::User1 {
        LevelUse::User2
    } else {
        LevelUse::User1
    };
    Ok(((n + 1)..=assign.max_level)
        .find(|&m| assign.user_of(m) == other)
        .map_or(Depth::Infinite, |m| Depth::new(m - n - 1)))
}

/// Per-state layer rate `1 - H(eps_hat_d(a_n(s)))` as a function of `s`.
fn layer_gain(s: f64, n: u32, d: Depth) -> f64 {
    let a = layer_snr(s, n);
    if a <= 0.0 {
        return 0.0;
    }
    1.0 - entropy_bits(eps_of_root(a.sqrt(), d).min(0.5))
}

/// Derivative in `s` of [`layer_gain`]; zero wherever the layer is guessed.
fn layer_gain_slope(s: f64, n: u32, d: Depth) -> f64 {
    let c = layer_snr(1.0, n);
    let u = (c * s).sqrt();
    let eps = eps_of_root(u, d);
    if !(eps < 0.5) || eps <= 0.0 || u == 0.0 {
        return 0.0;
    }
    let v = -entropy_slope(eps) * eps_slope_of_root(u, d) * c / (2.0 * u);
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// `2 E[1 - H(eps_hat_d(a_n(S)))]` in bits/s/Hz.
///
/// Integrated by parts against the CCDF: the integrand vanishes at `s = 0`
/// and its slope is continuous because `H'(1/2) = 0`.
pub fn level_rate<C: CcdfEvaluator + ?Sized>(
    s: &C,
    n: u32,
    d: Depth,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("levels are numbered from 1"));
    }
    let start = guess_threshold(d) / layer_snr(1.0, n);
    if !(start < s.support_max()) {
        return Ok(0.0);
    }
    let set = IntervalSet::single(start, f64::INFINITY)?;
    let v = integrate_ccdf_against(s, &set, |x| layer_gain_slope(x, n, d), cfg)?;
    Ok(2.0 * v.max(0.0))
}

/// `E[eps_hat_d(a_n(S))]`, the average crossover probability of layer `n`.
pub fn mean_crossover<C: CcdfEvaluator + ?Sized>(
    s: &C,
    n: u32,
    d: Depth,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("levels are numbered from 1"));
    }
    let c = layer_snr(1.0, n);
    let start = guess_threshold(d) / c;
    if !(start < s.support_max()) {
        return Ok(0.5);
    }
    let slope = |x: f64| {
        let u = (c * x).sqrt();
        if eps_of_root(u, d) < 0.5 {
            eps_slope_of_root(u, d) * c / (2.0 * u)
        } else {
            0.0
        }
    };
    let set = IntervalSet::single(start, f64::INFINITY)?;
    Ok((0.5 + integrate_ccdf_against(s, &set, slope, cfg)?).clamp(0.0, 0.5))
}

/// Per-level rate for a fixed state `s` (no averaging).
pub fn level_rate_at(s: f64, n: u32, d: Depth) -> f64 {
    2.0 * layer_gain(s, n, d)
}

fn depth_for(assign: &LevelAssignment, n: u32, stripping: bool) -> Result<Depth> {
    if stripping {
        depth_of_level(assign, n)
    } else {
        Ok(Depth::Finite(0))
    }
}

/// Rates of one assignment: each user sums the rates of its levels.
pub fn assignment_rates(
    s1: &FadingDist,
    s2: &FadingDist,
    assign: &LevelAssignment,
    stripping: bool,
    cfg: &QuadratureConfig,
) -> Result<RatePair> {
    let mut r = [0.0; 2];
    for (user, dist, slot) in [(LevelUse::User1, s1, 0), (LevelUse::User2, s2, 1)] {
        for n in assign.levels_of(user) {
            r[slot] += level_rate(dist, n, depth_for(assign, n, stripping)?, cfg)?;
        }
    }
    Ok(RatePair::new(r[0], r[1]))
}

/// Rate pairs for every assignment, in input order.
pub fn achievable_points(
    s1: &FadingDist,
    s2: &FadingDist,
    assignments: &[LevelAssignment],
    stripping: bool,
    cfg: &QuadratureConfig,
) -> Result<Vec<RatePair>> {
    assignments
        .par_iter()
        .map(|a| assignment_rates(s1, s2, a, stripping, cfg))
        .collect()
}

/// Boundary of the time-sharing hull of the assignments' rate pairs.
pub fn achievable_region(
    s1: &FadingDist,
    s2: &FadingDist,
    assignments: &[LevelAssignment],
    stripping: bool,
    cfg: &QuadratureConfig,
) -> Result<RateRegionBoundary> {
    let mut pts = achievable_points(s1, s2, assignments, stripping, cfg)?;
    pts.push(RatePair::new(0.0, 0.0));
    Ok(upper_concave_envelope(&pts))
}

/// Highest level worth assigning to a receiver with law `s`: levels above it
/// carry less than 1e-9 bits each even with no interference.
pub fn useful_levels(s: &FadingDist, cfg: &QuadratureConfig) -> Result<u32> {
    let mut last_useful = 0;
    let mut run = 0;
    let mut n = 1;
    while run < NEGLIGIBLE_RUN {
        if level_rate(s, n, Depth::Infinite, cfg)? < NEGLIGIBLE_RATE {
            run += 1;
        } else {
            run = 0;
            last_useful = n;
        }
        n += 1;
        if n > 1100 {
            return Err(Error::Convergence(
                "level rates did not become negligible".into(),
            ));
        }
    }
    Ok(last_useful.max(1))
}

/// Families of level assignments swept over the user-2 threshold `n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentStyle {
    /// User 2 takes `1..=n2`, user 1 everything above.
    Threshold,
    /// User 1 takes `n2+1..=n1*` where `n1* = nhat(s1*)` of an intermittent
    /// user 1; user 2 takes the rest.
    AwgnRayleighInner1,
    /// As `AwgnRayleighInner1` but the levels above `n1*` stay unused.
    AwgnRayleighInner2,
}

/// The family of assignments of the given style.
pub fn example_assignments(
    s1: &FadingDist,
    s2: &FadingDist,
    style: AssignmentStyle,
    cfg: &QuadratureConfig,
) -> Result<Vec<LevelAssignment>> {
    let top = useful_levels(s1, cfg)?.max(useful_levels(s2, cfg)?);
    match style {
        AssignmentStyle::Threshold => (0..=top)
            .map(|n2| LevelAssignment::threshold(n2, top))
            .collect(),
        AssignmentStyle::AwgnRayleighInner1 | AssignmentStyle::AwgnRayleighInner2 => {
            let n1_star = match s1 {
                FadingDist::Intermittent { p, snr } if *p > 0.0 => nhat(*snr),
                _ => {
                    return Err(Error::domain(format!(
                        "{style:?} assignments need an intermittent user 1, got {}",
                        s1.label()
                    )))
                }
            };
            let top = top.max(n1_star).max(1);
            let above = if style == AssignmentStyle::AwgnRayleighInner1 {
                LevelUse::User2
            } else {
                LevelUse::Unused
            };
            (0..=n1_star)
                .map(|n2| {
                    LevelAssignment::from_fn(top, |n| {
                        if n <= n2 {
                            LevelUse::User2
                        } else if n <= n1_star {
                            LevelUse::User1
                        } else {
                            above
                        }
                    })
                })
                .collect()
        }
    }
}
