//! Outer bound and ergodic capacities for the two-user fading Gaussian
//! broadcast channel with receiver-only state information.
//!
//! Rates are in bits/s/Hz for a complex channel, i.e. twice the per-real-dimension
//! values: the weighted integral `log2(e) * int ccdf(s)/(1+s) ds` already
//! equals `E[log2(1 + S)]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::FadingDist;
use crate::quad::{integrate_ccdf_weighted, IntervalSet, QuadratureConfig};
use crate::region::{upper_concave_envelope, RatePair, RateRegionBoundary};

/// One boundary point together with the weight (or threshold) that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub omega: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub fn rates(&self) -> RatePair {
        RatePair::new(self.r1, self.r2)
    }
}

/// Resolution of the sign-change search behind [`partition_states`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionGrid {
    pub points: usize,
    pub min_state: f64,
    pub rel_tol: f64,
}

impl Default for PartitionGrid {
    fn default() -> Self {
        PartitionGrid {
            points: 1 << 14,
            min_state: 1e-6,
            rel_tol: 1e-10,
        }
    }
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Weight `omega` with its logarithm carried separately, so thresholds such
/// as `p exp(s / mean)` stay representable far past `f64::MAX`.
#[derive(Debug, Clone, Copy)]
struct Weight {
    value: f64,
    ln: f64,
}

impl Weight {
    fn linear(omega: f64) -> Result<Self> {
        if omega.is_nan() || omega < 0.0 {
            return Err(Error::domain(format!("weight must be >= 0, got {omega}")));
        }
        Ok(Weight {
            value: omega,
            ln: omega.ln(),
        })
    }

    fn log(ln_omega: f64) -> Result<Self> {
        if ln_omega.is_nan() {
            return Err(Error::domain("log-weight is NaN"));
        }
        Ok(Weight {
            value: ln_omega.exp(),
            ln: ln_omega,
        })
    }
}

/// `ccdf_1(s) > omega ccdf_2(s)`, evaluated in the log domain when the
/// linear comparison would under- or overflow. Ties go to user 2.
fn favours_user1(s1: &FadingDist, s2: &FadingDist, w: Weight, s: f64) -> bool {
    let l2 = s2.ln_ccdf(s);
    let l1 = s1.ln_ccdf(s);
    if l2 == f64::NEG_INFINITY {
        return l1 > f64::NEG_INFINITY;
    }
    if w.ln == f64::INFINITY || l1 == f64::NEG_INFINITY {
        return false;
    }
    let (f1, f2) = (s1.ccdf_at(s), s2.ccdf_at(s));
    let prod = w.value * f2;
    if f1 > 1e-290 && prod > 1e-290 && prod.is_finite() {
        f1 > prod
    } else {
        l1 > w.ln + l2
    }
}

/// Linear-weight form of the favoured-state test, shared with the quantized bounds.
pub(crate) fn favours_user1_at(
    s1: &FadingDist,
    s2: &FadingDist,
    omega: f64,
    s: f64,
) -> Result<bool> {
    Ok(favours_user1(s1, s2, Weight::linear(omega)?, s))
}

fn partition_with(
    s1: &FadingDist,
    s2: &FadingDist,
    w: Weight,
    grid: &PartitionGrid,
) -> (IntervalSet, IntervalSet) {
    let bound = s1.search_bound().max(s2.search_bound()).max(1.0);
    let member = |s: f64| favours_user1(s1, s2, w, s);

    let mut jumps: Vec<f64> = s1
        .jump_points()
        .into_iter()
        .chain(s2.jump_points())
        .collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    let nudge = |x: f64| x * (1.0 + 1e-12) + 1e-300;

    let mut pts = vec![0.0];
    pts.extend(log_grid(grid.min_state, bound, grid.points));
    for &x in &jumps {
        pts.push(x);
        pts.push(nudge(x));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let flags: Vec<bool> = pts.iter().map(|&s| member(s)).collect();

    let mut edges: Vec<f64> = jumps.clone();
    for k in 0..pts.len() - 1 {
        if flags[k] == flags[k + 1] {
            continue;
        }
        let (mut lo, mut hi) = (pts[k], pts[k + 1]);
        if jumps.binary_search_by(|x| x.total_cmp(&lo)).is_ok() && hi == nudge(lo) {
            continue;
        }
        while hi - lo > grid.rel_tol * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if member(mid) == flags[k] {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edges.push(0.5 * (lo + hi));
    }
    edges.retain(|&e| e > 0.0);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut i1 = IntervalSet::empty();
    let mut i2 = IntervalSet::empty();
    let mut lo = 0.0;
    for &hi in edges.iter().chain(std::iter::once(&f64::INFINITY)) {
        let probe = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            nudge(lo.max(bound))
        };
        if member(probe) {
            i1.push(lo, hi);
        } else {
            i2.push(lo, hi);
        }
        lo = hi;
    }
    (i1, i2)
}

/// Splits the state axis into the states favouring user 1,
/// `{s : ccdf_1(s) > omega ccdf_2(s)}`, and the rest.
pub fn partition_states(
    s1: &FadingDist,
    s2: &FadingDist,
    omega: f64,
    grid: &PartitionGrid,
) -> Result<(IntervalSet, IntervalSet)> {
    Ok(partition_with(s1, s2, Weight::linear(omega)?, grid))
}

/// `E[log2(1 + S)]`.
pub fn ergodic_capacity(s: &FadingDist, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_ccdf_weighted(s, &IntervalSet::half_line(), cfg)
}

fn extreme_point(
    s1: &FadingDist,
    s2: &FadingDist,
    w: Weight,
    grid: &PartitionGrid,
    cfg: &QuadratureConfig,
) -> Result<RatePoint> {
    let (i1, i2) = partition_with(s1, s2, w, grid);
    Ok(RatePoint {
        omega: w.value,
        r1: integrate_ccdf_weighted(s1, &i1, cfg)?,
        r2: integrate_ccdf_weighted(s2, &i2, cfg)?,
    })
}

/// Outer-bound vertex maximizing `R1 + omega R2`.
pub fn outer_extreme_point(
    s1: &FadingDist,
    s2: &FadingDist,
    omega: f64,
    grid: &PartitionGrid,
    cfg: &QuadratureConfig,
) -> Result<RatePoint> {
    extreme_point(s1, s2, Weight::linear(omega)?, grid, cfg)
}

/// [`outer_extreme_point`] parameterized by `ln(omega)`.
pub fn outer_extreme_point_ln(
    s1: &FadingDist,
    s2: &FadingDist,
    ln_omega: f64,
    grid: &PartitionGrid,
    cfg: &QuadratureConfig,
) -> Result<RatePoint> {
    extreme_point(s1, s2, Weight::log(ln_omega)?, grid, cfg)
}

/// Ratios `ccdf_1 / ccdf_2` at and just above every jump of either law:
/// the weights where a jump enters or leaves the favoured set.
pub fn jump_weights(s1: &FadingDist, s2: &FadingDist) -> Vec<f64> {
    let mut at: Vec<f64> = vec![0.0];
    at.extend(s1.jump_points());
    at.extend(s2.jump_points());
    let mut out: Vec<f64> = at
        .iter()
        .flat_map(|&x| [x, x * (1.0 + 1e-12) + 1e-300])
        .filter_map(|s| {
            let (f1, f2) = (s1.ccdf_at(s), s2.ccdf_at(s));
            let r = f1 / f2;
            (f2 > 0.0 && r.is_finite() && r > 0.0).then_some(r)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Default sweep: 256 log-spaced weights on `[1e-4, 1e4]` plus [`jump_weights`].
pub fn default_weights(s1: &FadingDist, s2: &FadingDist) -> Vec<f64> {
    let mut w = log_grid(1e-4, 1e4, 256);
    w.extend(jump_weights(s1, s2));
    w.sort_by(f64::total_cmp);
    w.dedup();
    w
}

/// Outer-bound vertices for every weight, in input order.
pub fn outer_sweep(
    s1: &FadingDist,
    s2: &FadingDist,
    weights: &[f64],
    grid: &PartitionGrid,
    cfg: &QuadratureConfig,
) -> Result<Vec<RatePoint>> {
    weights
        .par_iter()
        .map(|&w| outer_extreme_point(s1, s2, w, grid, cfg))
        .collect()
}

/// Outer-bound region: the upper concave envelope of the swept vertices and
/// the single-user corners `(C1, 0)`, `(0, C2)`.
pub fn outer_region(
    s1: &FadingDist,
    s2: &FadingDist,
    weights: &[f64],
    grid: &PartitionGrid,
    cfg: &QuadratureConfig,
) -> Result<RateRegionBoundary> {
    let mut pts: Vec<RatePair> = outer_sweep(s1, s2, weights, grid, cfg)?
        .iter()
        .map(RatePoint::rates)
        .collect();
    pts.push(RatePair::new(ergodic_capacity(s1, cfg)?, 0.0));
    pts.push(RatePair::new(0.0, ergodic_capacity(s2, cfg)?));
    Ok(upper_concave_envelope(&pts))
}

/// Enlarged user-1 law `min(1, max(ccdf_1, omega ccdf_2))` for `omega >= 1`.
pub fn enhance_continuous(s1: &FadingDist, s2: &FadingDist, omega: f64) -> Result<FadingDist> {
    if omega.is_nan() || omega < 1.0 {
        return Err(Error::domain(format!(
            "enhancement needs omega >= 1 (got {omega}); swap the users and use 1/omega"
        )));
    }
    let d = FadingDist::Enhanced {
        base: Box::new(s1.clone()),
        other: Box::new(s2.clone()),
        omega,
    };
    d.validate()?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::db_to_linear;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn grid() -> PartitionGrid {
        PartitionGrid::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ergodic_capacity_examples() {
        let c = ergodic_capacity(&FadingDist::constant(100.0).unwrap(), &cfg()).unwrap();
        assert!(close(c, 101f64.log2(), 1e-9));
        let c = ergodic_capacity(&FadingDist::intermittent(0.4, 1e6).unwrap(), &cfg()).unwrap();
        assert!(close(c, 0.4 * (1.0 + 1e6f64).log2(), 1e-8));
        assert_eq!(ergodic_capacity(&FadingDist::zero(), &cfg()).unwrap(), 0.0);
    }

    /// Density form `int log2(1 + s) f(s) ds` by composite Simpson on a
    /// truncated range, independent of the CCDF integrator.
    fn rayleigh_capacity_pdf_form(mean: f64) -> f64 {
        let upper = 60.0 * mean;
        let n = 2_000_000;
        let h = upper / n as f64;
        let f = |s: f64| (1.0 + s).log2() * (-s / mean).exp() / mean;
        let mut acc = f(0.0) + f(upper);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn rayleigh_capacity_matches_pdf_form() {
        for mean in [1.0, 1000.0] {
            let c = ergodic_capacity(&FadingDist::rayleigh(mean).unwrap(), &cfg()).unwrap();
            assert!(
                close(c, rayleigh_capacity_pdf_form(mean), 1e-6),
                "mean {mean}"
            );
        }
    }

    #[test]
    fn intermittent_partitions() {
        let (p1, p2) = (0.6, 0.8);
        let s1 = FadingDist::intermittent(p1, 1000.0).unwrap();
        let s2 = FadingDist::intermittent(p2, 10.0).unwrap();
        let (i1, i2) = partition_states(&s1, &s2, 0.5, &grid()).unwrap();
        assert_eq!(i1.intervals(), &[(0.0, 1000.0)]);
        assert_eq!(i2.intervals(), &[(1000.0, f64::INFINITY)]);
        let (i1, i2) = partition_states(&s1, &s2, 0.75, &grid()).unwrap();
        assert_eq!(i1.intervals(), &[(10.0, 1000.0)]);
        assert_eq!(i2.intervals(), &[(0.0, 10.0), (1000.0, f64::INFINITY)]);
    }

    #[test]
    fn identical_laws_go_to_user2() {
        let s = FadingDist::rayleigh(10.0).unwrap();
        let (i1, i2) = partition_states(&s, &s, 1.0, &grid()).unwrap();
        assert!(i1.is_empty());
        assert_eq!(i2, IntervalSet::half_line());
    }

    #[test]
    fn intermittent_outer_closed_form() {
        let (p1, p2, a, b) = (0.4, 0.9, 1e4, 1e2);
        let s1 = FadingDist::intermittent(p1, a).unwrap();
        let s2 = FadingDist::intermittent(p2, b).unwrap();
        let c1 = p1 * (1.0 + a).log2();
        let c2 = p2 * (1.0 + b).log2();
        let rho = p1 / p2;
        let lo = outer_extreme_point(&s1, &s2, 0.1, &grid(), &cfg()).unwrap();
        assert!(close(lo.r1, c1, 1e-9) && close(lo.r2, 0.0, 1e-12));
        let hi = outer_extreme_point(&s1, &s2, 2.0, &grid(), &cfg()).unwrap();
        assert!(close(hi.r1, c1 - rho * c2, 1e-9), "{hi:?}");
        assert!(close(hi.r2, c2, 1e-9));
        let region = outer_region(&s1, &s2, &default_weights(&s1, &s2), &grid(), &cfg()).unwrap();
        assert_eq!(region.extreme_points.len(), 2);
        assert!(region.rates()[1].approx_eq(&RatePair::new(c1 - rho * c2, c2), 1e-9));
    }

    #[test]
    fn silent_user2_region() {
        let s1 = FadingDist::rayleigh(100.0).unwrap();
        let region = outer_region(
            &s1,
            &FadingDist::zero(),
            &log_grid(1e-2, 1e2, 9),
            &grid(),
            &cfg(),
        )
        .unwrap();
        assert_eq!(region.extreme_points.len(), 1);
        let c1 = ergodic_capacity(&s1, &cfg()).unwrap();
        assert!(region.rates()[0].approx_eq(&RatePair::new(c1, 0.0), 1e-9));
    }

    #[test]
    fn awgn_endpoint_is_user2_capacity() {
        let s1 = FadingDist::constant(db_to_linear(20.0)).unwrap();
        let s2 = FadingDist::constant(db_to_linear(10.0)).unwrap();
        let region = outer_region(&s1, &s2, &default_weights(&s1, &s2), &grid(), &cfg()).unwrap();
        let last = *region.rates().last().unwrap();
        // user 1 keeps the states above user 2's SNR, so (0, C2) is dominated
        assert!(last.approx_eq(&RatePair::new((101.0f64 / 11.0).log2(), 11f64.log2()), 1e-9));
    }

    #[test]
    fn huge_log_weights_stay_finite() {
        let s1 = FadingDist::intermittent(0.4, 1e6).unwrap();
        let s2 = FadingDist::rayleigh(1e3).unwrap();
        let pt = outer_extreme_point_ln(&s1, &s2, 0.4f64.ln() + 900.0, &grid(), &cfg()).unwrap();
        let s_w: f64 = 9e5;
        let expect = 0.4 * ((1.0 + 1e6) / (1.0 + s_w)).log2();
        assert!(close(pt.r1, expect, 1e-7), "{} vs {expect}", pt.r1);
    }

    #[test]
    fn enhancement_examples() {
        let s1 = FadingDist::rayleigh(10.0).unwrap();
        let e = enhance_continuous(&s1, &FadingDist::zero(), 2.0).unwrap();
        for s in [0.0, 1.0, 30.0] {
            assert_eq!(e.ccdf_at(s), s1.ccdf_at(s));
        }
        let e = enhance_continuous(&s1, &s1, 2.0).unwrap();
        for s in [0.0, 1.0, 30.0] {
            assert_eq!(e.ccdf_at(s), (2.0 * s1.ccdf_at(s)).min(1.0));
        }
        assert!(matches!(
            enhance_continuous(&s1, &s1, 0.9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn enhancement_piecewise_oracle() {
        let s1 = FadingDist::intermittent(0.4, 1e3).unwrap();
        let s2 = FadingDist::rayleigh(1e2).unwrap();
        let e = enhance_continuous(&s1, &s2, 1.0).unwrap();
        for k in 0..10_000 {
            let s = 2e3 * k as f64 / 10_000.0;
            let hand = if s <= 1e3 {
                if s < 1e2 * (1.0f64 / 0.4).ln() {
                    (-s / 1e2).exp()
                } else {
                    0.4
                }
            } else {
                (-s / 1e2).exp()
            };
            assert!(close(e.ccdf_at(s), hand, 1e-15), "s = {s}");
        }
    }

    #[test]
    fn enhanced_sets_match_original() {
        let s1 = FadingDist::intermittent(0.5, 300.0).unwrap();
        let s2 = FadingDist::rayleigh(50.0).unwrap();
        for omega in [1.0, 1.5, 3.0] {
            let e = enhance_continuous(&s1, &s2, omega).unwrap();
            let (a, _) = partition_states(&s1, &s2, omega, &grid()).unwrap();
            let (b, _) = partition_states(&e, &s2, omega, &grid()).unwrap();
            assert_eq!(a.intervals().len(), b.intervals().len());
            for (x, y) in a.intervals().iter().zip(b.intervals()) {
                assert!(
                    close(x.0, y.0, 1e-6 * x.0.max(1.0)) && close(x.1, y.1, 1e-6 * x.1.max(1.0))
                );
            }
        }
    }

    fn arb_dist() -> impl Strategy<Value = FadingDist> {
        prop_oneof![
            (0.05f64..1.0, 1.0f64..1e4).prop_map(|(p, s)| FadingDist::intermittent(p, s).unwrap()),
            (0.5f64..1e3).prop_map(|g| FadingDist::rayleigh(g).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn partition_covers_half_line(s1 in arb_dist(), s2 in arb_dist(), omega in 0.0f64..20.0) {
            let g = PartitionGrid { points: 1024, ..grid() };
            let (i1, i2) = partition_states(&s1, &s2, omega, &g).unwrap();
            prop_assert_eq!(i1.complement(), i2);
        }

        #[test]
        fn rates_monotone_in_weight(s1 in arb_dist(), s2 in arb_dist()) {
            let g = PartitionGrid { points: 1024, ..grid() };
            let pts = outer_sweep(&s1, &s2, &log_grid(0.05, 20.0, 8), &g, &cfg()).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[0].r1 >= 0.0 && w[0].r2 >= 0.0);
                prop_assert!(w[1].r1 <= w[0].r1 + 1e-7);
                prop_assert!(w[1].r2 >= w[0].r2 - 1e-7);
            }
        }

        #[test]
        fn enhancement_enlarges_region(s1 in arb_dist(), s2 in arb_dist(), omega in 1.0f64..5.0) {
            let g = PartitionGrid { points: 1024, ..grid() };
            let e = enhance_continuous(&s1, &s2, omega).unwrap();
            let ws = log_grid(0.1, 10.0, 5);
            let base = outer_region(&s1, &s2, &ws, &g, &cfg()).unwrap();
            let enh = outer_region(&e, &s2, &ws, &g, &cfg()).unwrap();
            for &w in &ws {
                prop_assert!(enh.max_weighted_sum(w) >= base.max_weighted_sum(w) - 1e-7);
            }
        }
    }
}
