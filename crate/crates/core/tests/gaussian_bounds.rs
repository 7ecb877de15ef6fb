use fbc_core::bes::{achievable_region, example_assignments, AssignmentStyle};
use fbc_core::fading::{db_to_linear, FadingDist};
use fbc_core::gaussian::{
    ergodic_capacity, log_grid, outer_extreme_point, outer_region, PartitionGrid,
};
use fbc_core::quad::QuadratureConfig;
use proptest::prelude::*;

/// `E1(x)` for `x > 0` by series below 1 and continued fraction above.
fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let (mut sum, mut term) = (0.0, 1.0);
        for k in 1..60 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -0.577_215_664_901_532_9 - x.ln() + sum
    } else {
        let mut f = 0.0;
        for k in (1..400).rev() {
            f = k as f64 / (1.0 + k as f64 / (x + f));
        }
        (-x).exp() / (x + f)
    }
}

#[test]
fn rayleigh_ergodic_capacity() {
    let cfg = QuadratureConfig::default();
    for db in [-10.0, 0.0, 10.0, 30.0] {
        let g = db_to_linear(db);
        let want = std::f64::consts::LOG2_E * (1.0 / g).exp() * e1(1.0 / g);
        let got = ergodic_capacity(&FadingDist::rayleigh(g).unwrap(), &cfg).unwrap();
        assert!((got - want).abs() < 1e-8, "{db} dB: {got} vs {want}");
    }
}

#[test]
fn outer_endpoints_are_single_user_capacities() {
    let cfg = QuadratureConfig::default();
    let grid = PartitionGrid::default();
    let s1 = FadingDist::intermittent(0.7, 30.0).unwrap();
    let s2 = FadingDist::rayleigh(10.0).unwrap();
    let low = outer_extreme_point(&s1, &s2, 1e-9, &grid, &cfg).unwrap();
    let high = outer_extreme_point(&s1, &s2, 1e9, &grid, &cfg).unwrap();
    assert!((low.r1 - ergodic_capacity(&s1, &cfg).unwrap()).abs() < 1e-8);
    assert!((high.r2 - ergodic_capacity(&s2, &cfg).unwrap()).abs() < 1e-8 && high.r1.abs() < 1e-8);
}

fn law() -> impl Strategy<Value = FadingDist> {
    prop_oneof![
        (0.1f64..1.0, 0.0f64..30.0).prop_map(|(p, db)| FadingDist::intermittent(
            p,
            db_to_linear(db)
        )
        .unwrap()),
        (0.0f64..30.0).prop_map(|db| FadingDist::rayleigh(db_to_linear(db)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inner_bound_lies_inside_outer_bound(s1 in law(), s2 in law()) {
        let cfg = QuadratureConfig::default();
        let grid = PartitionGrid::default();
        let weights = log_grid(0.05, 20.0, 24);
        let outer = outer_region(&s1, &s2, &weights, &grid, &cfg).unwrap();
        let assigns = example_assignments(&s1, &s2, AssignmentStyle::Threshold, &cfg).unwrap();
        for stripping in [false, true] {
            let inner = achievable_region(&s1, &s2, &assigns, stripping, &cfg).unwrap();
            for &w in &weights {
                prop_assert!(inner.max_weighted_sum(w) <= outer.max_weighted_sum(w) + 1e-8);
            }
        }
    }

    #[test]
    fn outer_vertices_trade_off_monotonically(s1 in law(), s2 in law()) {
        let cfg = QuadratureConfig::default();
        let grid = PartitionGrid::default();
        let mut prev: Option<(f64, f64)> = None;
        for w in log_grid(0.05, 20.0, 16) {
            let p = outer_extreme_point(&s1, &s2, w, &grid, &cfg).unwrap();
            if let Some((r1, r2)) = prev {
                prop_assert!(p.r1 <= r1 + 1e-9 && p.r2 >= r2 - 1e-9);
            }
            prev = Some((p.r1, p.r2));
        }
    }
}
