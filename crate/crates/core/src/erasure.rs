//! Capacity region of the two-user q-bit layered erasure broadcast channel.
//!
//! Receiver `i` observes the `N_i` most significant bits of the `q`-bit input,
//! where `N_i` is drawn iid from a PMF on `{0, ..., q}`. Level `n` is assigned
//! to user 1 exactly when `P(N_1 >= n) > omega P(N_2 >= n)`; sweeping the
//! weight `omega` through the critical ratios traces out every extreme point.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::{ExtremePoint, RatePair, RateRegionBoundary, POINT_EPS};
use crate::special::Probability;

const PMF_SUM_TOL: f64 = 1e-12;

/// Fading-state distribution of one receiver of a q-bit layered erasure channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct ErasurePmf {
    q: usize,
    pmf: Vec<f64>,
    /// `ccdf[n] = P(N >= n)` for `n = 0..=q+1`.
    ccdf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    q: usize,
    pmf: Vec<f64>,
}

impl TryFrom<RawPmf> for ErasurePmf {
    type Error = Error;
    fn try_from(raw: RawPmf) -> Result<Self> {
        if raw.pmf.len() != raw.q + 1 {
            return Err(Error::domain(format!(
                "pmf for q = {} needs {} entries, got {}",
                raw.q,
                raw.q + 1,
                raw.pmf.len()
            )));
        }
        ErasurePmf::new(raw.pmf)
    }
}

impl From<ErasurePmf> for RawPmf {
    fn from(p: ErasurePmf) -> Self {
        RawPmf { q: p.q, pmf: p.pmf }
    }
}

impl ErasurePmf {
    /// Builds the channel from `pmf[n] = P(N = n)`, `n = 0..=q`.
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() < 2 {
            return Err(Error::domain(
                "an erasure pmf needs at least q = 1 (two entries)",
            ));
        }
        if let Some(bad) = pmf.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::domain(format!(
                "pmf entry {bad} is not a nonnegative number"
            )));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::domain(format!("pmf sums to {total}, not 1")));
        }
        let q = pmf.len() - 1;
        let mut ccdf = vec![0.0; q + 2];
        for n in (1..=q).rev() {
            ccdf[n] = ccdf[n + 1] + pmf[n];
        }
        ccdf[0] = 1.0;
        Ok(ErasurePmf { q, pmf, ccdf })
    }

    /// Builds the channel from `P(N >= n)` for `n = 1..=q`.
    pub fn from_ccdf(tail: &[f64]) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::domain("ccdf needs at least one level"));
        }
        let q = tail.len();
        let mut ccdf = Vec::with_capacity(q + 2);
        ccdf.push(1.0);
        ccdf.extend_from_slice(tail);
        ccdf.push(0.0);
        for w in ccdf.windows(2) {
            if !(w[1] >= 0.0 && w[1] <= w[0]) {
                return Err(Error::domain(format!(
                    "ccdf {tail:?} is not a non-increasing sequence in [0, 1]"
                )));
            }
        }
        let pmf = ccdf.windows(2).map(|w| w[0] - w[1]).collect();
        Ok(ErasurePmf { q, pmf, ccdf })
    }

    /// A channel that always delivers exactly `n` of `q` levels.
    pub fn deterministic(q: usize, n: usize) -> Result<Self> {
        if n > q {
            return Err(Error::domain(format!("state {n} exceeds q = {q}")));
        }
        let mut pmf = vec![0.0; q + 1];
        pmf[n] = 1.0;
        ErasurePmf::new(pmf)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `P(N >= n)` for `n = 0..=q+1`.
    pub fn ccdf_values(&self) -> &[f64] {
        &self.ccdf
    }

    pub fn ccdf(&self, n: usize) -> Result<Probability> {
        self.ccdf
            .get(n)
            .map(|&p| Probability::saturating(p))
            .ok_or_else(|| Error::domain(format!("level {n} outside 0..={}", self.q + 1)))
    }

    /// `P(N >= n)`, zero past the top level.
    #[inline]
    pub(crate) fn tail(&self, n: usize) -> f64 {
        self.ccdf.get(n).copied().unwrap_or(0.0)
    }

    /// `E[N] = sum_n P(N >= n)`.
    pub fn mean(&self) -> f64 {
        self.ccdf[1..=self.q].iter().sum()
    }
}

/// Free-function form of [`ErasurePmf::ccdf`].
pub fn ccdf(pmf: &ErasurePmf, n: usize) -> Result<Probability> {
    pmf.ccdf(n)
}

/// Assignment of the levels `1..=q` to the two users.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelPartition {
    pub user1_levels: BTreeSet<usize>,
    pub user2_levels: BTreeSet<usize>,
}

impl LevelPartition {
    pub fn new(q: usize, user1_levels: BTreeSet<usize>) -> Result<Self> {
        if let Some(&n) = user1_levels.iter().find(|&&n| n == 0 || n > q) {
            return Err(Error::domain(format!("level {n} outside 1..={q}")));
        }
        let user2_levels = (1..=q).filter(|n| !user1_levels.contains(n)).collect();
        Ok(LevelPartition {
            user1_levels,
            user2_levels,
        })
    }

    pub fn all_to_user1(q: usize) -> Self {
        LevelPartition {
            user1_levels: (1..=q).collect(),
            user2_levels: BTreeSet::new(),
        }
    }

    pub fn all_to_user2(q: usize) -> Self {
        LevelPartition {
            user1_levels: BTreeSet::new(),
            user2_levels: (1..=q).collect(),
        }
    }

    /// Partition from a bit mask: bit `n-1` set means level `n` goes to user 1.
    pub fn from_mask(q: usize, mask: u64) -> Self {
        let user1 = (1..=q).filter(|n| mask >> (n - 1) & 1 == 1).collect();
        LevelPartition::new(q, user1).expect("mask levels are in range")
    }

    pub fn q(&self) -> usize {
        self.user1_levels.len() + self.user2_levels.len()
    }

    /// Disjoint and covering `1..=q`.
    pub fn is_valid(&self, q: usize) -> bool {
        self.user1_levels.is_disjoint(&self.user2_levels)
            && self.q() == q
            && self
                .user1_levels
                .iter()
                .chain(&self.user2_levels)
                .all(|&n| (1..=q).contains(&n))
    }

    pub fn swapped(&self) -> Self {
        LevelPartition {
            user1_levels: self.user2_levels.clone(),
            user2_levels: self.user1_levels.clone(),
        }
    }
}

fn check_pair(n1: &ErasurePmf, n2: &ErasurePmf) -> Result<usize> {
    if n1.q != n2.q {
        return Err(Error::domain(format!(
            "channels have different depths q = {} and q = {}",
            n1.q, n2.q
        )));
    }
    Ok(n1.q)
}

fn check_weight(omega: f64) -> Result<()> {
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::domain(format!("weight must be >= 0, got {omega}")));
    }
    Ok(())
}

/// `true` when level `n` goes to user 1 at weight `omega`; ties go to user 2.
#[inline]
fn favours_user1(f1: f64, f2: f64, omega: f64) -> bool {
    if omega.is_infinite() {
        f2 == 0.0 && f1 > 0.0
    } else {
        f1 > omega * f2
    }
}

/// Greedy level assignment at weight `omega`.
pub fn partition_levels(n1: &ErasurePmf, n2: &ErasurePmf, omega: f64) -> Result<LevelPartition> {
    let q = check_pair(n1, n2)?;
    check_weight(omega)?;
    let (user1_levels, user2_levels) =
        (1..=q).partition(|&n| favours_user1(n1.tail(n), n2.tail(n), omega));
    Ok(LevelPartition {
        user1_levels,
        user2_levels,
    })
}

/// Expected number of unerased bits delivered to each user.
pub fn achievable_rates(
    n1: &ErasurePmf,
    n2: &ErasurePmf,
    partition: &LevelPartition,
) -> Result<RatePair> {
    let q = check_pair(n1, n2)?;
    if !partition.is_valid(q) {
        return Err(Error::domain(format!(
            "partition does not cover levels 1..={q} exactly once"
        )));
    }
    let r1 = partition.user1_levels.iter().map(|&n| n1.tail(n)).sum();
    let r2 = partition.user2_levels.iter().map(|&n| n2.tail(n)).sum();
    Ok(RatePair::new(r1, r2))
}

/// Distinct ratios `P(N1 >= j) / P(N2 >= j)` over levels with `P(N2 >= j) > 0`,
/// sorted ascending.
pub fn critical_weights(n1: &ErasurePmf, n2: &ErasurePmf) -> Result<Vec<f64>> {
    let q = check_pair(n1, n2)?;
    let mut w: Vec<f64> = (1..=q)
        .filter(|&j| n2.tail(j) > 0.0)
        .map(|j| n1.tail(j) / n2.tail(j))
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup_by(|a, b| (*a - *b).abs() <= POINT_EPS * b.abs().max(1.0));
    Ok(w)
}

/// Extreme points of the capacity region with their generating partitions.
pub fn region_with_partitions(
    n1: &ErasurePmf,
    n2: &ErasurePmf,
) -> Result<Vec<(ExtremePoint, LevelPartition)>> {
    let q = check_pair(n1, n2)?;
    let weights = critical_weights(n1, n2)?;

    let first = LevelPartition::all_to_user1(q);
    let mut out = vec![(
        ExtremePoint {
            omega_low: 0.0,
            omega_high: Some(weights.first().copied().unwrap_or(f64::INFINITY))
                .filter(|w| w.is_finite()),
            r1: n1.mean(),
            r2: 0.0,
        },
        first,
    )];

    let mut breaks = vec![0.0];
    breaks.extend_from_slice(&weights);
    for (k, &lo) in breaks.iter().enumerate() {
        let hi = breaks.get(k + 1).copied();
        let probe = match hi {
            Some(hi) if hi > lo => 0.5 * (lo + hi),
            Some(_) => continue,
            None => lo + 1.0,
        };
        let part = partition_levels(n1, n2, probe)?;
        let rates = achievable_rates(n1, n2, &part)?;
        let last = out
            .last_mut()
            .expect("region starts with the omega = 0 point");
        if last.0.rates().approx_eq(&rates, POINT_EPS) {
            last.0.omega_high = hi;
            continue;
        }
        out.push((
            ExtremePoint {
                omega_low: lo,
                omega_high: hi,
                r1: rates.r1,
                r2: rates.r2,
            },
            part,
        ));
    }
    Ok(out)
}

/// Capacity region: extreme points ordered from `(E[N1], 0)` toward the
/// maximal-`R2` corner, with the critical weights between them.
pub fn capacity_region(n1: &ErasurePmf, n2: &ErasurePmf) -> Result<RateRegionBoundary> {
    let extreme_points = region_with_partitions(n1, n2)?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    Ok(RateRegionBoundary {
        extreme_points,
        critical_weights: critical_weights(n1, n2)?,
    })
}

/// Stochastically enlarged receiver-1 channel used by the converse at weight `omega >= 1`.
pub fn enhance_channel(n1: &ErasurePmf, n2: &ErasurePmf, omega: f64) -> Result<ErasurePmf> {
    let q = check_pair(n1, n2)?;
    if omega.is_nan() || omega < 1.0 {
        return Err(Error::domain(format!(
            "enhancement needs omega >= 1 (got {omega}); swap the users and use 1/omega"
        )));
    }
    let tail: Vec<f64> = (1..=q)
        .map(|n| n1.tail(n).max(omega * n2.tail(n)).min(1.0))
        .collect();
    ErasurePmf::from_ccdf(&tail)
}

/// Weighted sum rate of the degraded enhanced channel, computed from the
/// enhanced CCDF: `sum_{B~(n) > 0} B~(n) + omega sum_n P(N2 >= n)` with
/// `B~(n) = P(N~1 >= n) - omega P(N2 >= n)`.
pub fn converse_weighted_rate(n1: &ErasurePmf, n2: &ErasurePmf, omega: f64) -> Result<f64> {
    let enhanced = enhance_channel(n1, n2, omega)?;
    let q = n1.q;
    let favoured: f64 = (1..=q)
        .map(|n| enhanced.tail(n) - omega * n2.tail(n))
        .filter(|&b| b > 0.0)
        .sum();
    let user2: f64 = (1..=q).map(|n| n2.tail(n)).sum();
    Ok(favoured + omega * user2)
}

/// `N1 >=_st N2`: `P(N1 >= n) >= P(N2 >= n)` for every level.
pub fn is_degraded(n1: &ErasurePmf, n2: &ErasurePmf) -> bool {
    let top = n1.q.max(n2.q);
    (0..=top).all(|n| n1.tail(n) >= n2.tail(n))
}

/// Joint PMF of an auxiliary `V` (with `v_card` values) and the `q` input bits.
/// `probs[v * 2^q + x]` where bit `k-1` of `x` is `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    v_card: usize,
    q: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub const MAX_Q: usize = 4;
    pub const MAX_V: usize = 4;

    pub fn new(v_card: usize, q: usize, probs: Vec<f64>) -> Result<Self> {
        if q == 0 || q > Self::MAX_Q || v_card == 0 || v_card > Self::MAX_V {
            return Err(Error::domain(format!(
                "exhaustive checks support 1 <= q <= {} and 1 <= |V| <= {}, got q = {q}, |V| = {v_card}",
                Self::MAX_Q,
                Self::MAX_V
            )));
        }
        if probs.len() != v_card << q {
            return Err(Error::domain(format!(
                "joint pmf needs {} entries, got {}",
                v_card << q,
                probs.len()
            )));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(
                "joint pmf entries must be nonnegative and sum to 1",
            ));
        }
        Ok(JointPmf { v_card, q, probs })
    }

    pub fn from_fn(v_card: usize, q: usize, f: impl Fn(usize, u32) -> f64) -> Result<Self> {
        if q > Self::MAX_Q || v_card > Self::MAX_V {
            return JointPmf::new(v_card, q, Vec::new());
        }
        let probs = (0..v_card)
            .flat_map(|v| (0..1u32 << q).map(move |x| (v, x)))
            .map(|(v, x)| f(v, x))
            .collect();
        JointPmf::new(v_card, q, probs)
    }

    /// Uniform iid input bits with a constant `V`.
    pub fn uniform_bits(q: usize) -> Result<Self> {
        let p = 1.0 / (1u64 << q) as f64;
        JointPmf::from_fn(1, q, |_, _| p)
    }
}

/// Which identity of the layered-erasure entropy decomposition to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma1Identity {
    /// `I(X^q; X^N | V) = H(X^N | V, N)`
    A,
    /// `H(X^N | V, N) = sum_n P(N >= n) H(X_n | X^{n-1}, V)`
    B,
    /// `I(V; X^N) = sum_n P(N >= n) I(V; X_n | X^{n-1})`
    C,
}

type Key = [u64; 3];

/// Entropy (bits) of the variable `key(v, x, n)` under the joint law of `(V, X^q, N)`.
fn joint_entropy(joint: &JointPmf, n: &ErasurePmf, key: impl Fn(usize, u32, usize) -> Key) -> f64 {
    let mut mass: BTreeMap<Key, f64> = BTreeMap::new();
    for v in 0..joint.v_card {
        for x in 0..1u32 << joint.q {
            let pvx = joint.probs[(v << joint.q) + x as usize];
            for (state, &pn) in n.pmf.iter().enumerate() {
                let p = pvx * pn;
                if p > 0.0 {
                    *mass.entry(key(v, x, state)).or_insert(0.0) += p;
                }
            }
        }
    }
    mass.values().map(|&p| -p * p.log2()).sum()
}

fn prefix(x: u32, n: usize) -> u64 {
    (x & ((1u32 << n) - 1)) as u64
}

/// Evaluates both sides of the chosen identity by exhaustive enumeration.
pub fn lemma1_identity_check(
    n: &ErasurePmf,
    joint: &JointPmf,
    which: Lemma1Identity,
) -> Result<(f64, f64)> {
    if n.q != joint.q {
        return Err(Error::domain(format!(
            "channel q = {} but joint pmf has q = {}",
            n.q, joint.q
        )));
    }
    if n.q > JointPmf::MAX_Q {
        return Err(Error::domain("exhaustive checks support q <= 4"));
    }
    const NONE: u64 = u64::MAX;
    let h = |k: &dyn Fn(usize, u32, usize) -> Key| joint_entropy(joint, n, k);
    // Output of the channel: (N, X^N)
    let h_v = h(&|v, _, _| [v as u64, NONE, NONE]);
    let h_vn = h(&|v, _, s| [v as u64, s as u64, NONE]);
    let h_yv = h(&|v, x, s| [v as u64, s as u64, prefix(x, s)]);
    let h_y = h(&|_, x, s| [NONE, s as u64, prefix(x, s)]);
    let h_xv = h(&|v, x, _| [v as u64, x as u64, NONE]);
    let h_xyv = h(&|v, x, s| [v as u64, x as u64, s as u64]);

    let cond_out = h_yv - h_vn; // H(X^N | V, N), since (N, X^N) determines N
    let per_level = |with_v: bool| -> Vec<f64> {
        (1..=n.q)
            .map(|lvl| {
                let hn = h(&|v, x, _| [if with_v { v as u64 } else { NONE }, prefix(x, lvl), NONE]);
                let hp = h(&|v, x, _| {
                    [
                        if with_v { v as u64 } else { NONE },
                        prefix(x, lvl - 1),
                        NONE,
                    ]
                });
                hn - hp
            })
            .collect()
    };
    Ok(match which {
        Lemma1Identity::A => {
            let lhs = h_xv + h_yv - h_xyv - h_v;
            (lhs, cond_out)
        }
        Lemma1Identity::B => {
            let given_v = per_level(true);
            let rhs = (1..=n.q).map(|l| n.tail(l) * given_v[l - 1]).sum();
            (cond_out, rhs)
        }
        Lemma1Identity::C => {
            let lhs = h_v + h_y - h_yv;
            let given_v = per_level(true);
            let plain = per_level(false);
            let rhs = (1..=n.q)
                .map(|l| n.tail(l) * (plain[l - 1] - given_v[l - 1]))
                .sum();
            (lhs, rhs)
        }
    })
}

/// The two-level example whose receivers each see a different level better.
pub fn example_channels_1() -> (ErasurePmf, ErasurePmf) {
    (
        ErasurePmf::new(vec![0.25, 0.5, 0.25]).expect("valid pmf"),
        ErasurePmf::new(vec![0.5, 0.0, 0.5]).expect("valid pmf"),
    )
}

/// The two-level example where receiver 1 never sees level 2.
pub fn example_channels_2() -> (ErasurePmf, ErasurePmf) {
    (
        ErasurePmf::new(vec![0.25, 0.75, 0.0]).expect("valid pmf"),
        ErasurePmf::new(vec![0.5, 0.0, 0.5]).expect("valid pmf"),
    )
}
