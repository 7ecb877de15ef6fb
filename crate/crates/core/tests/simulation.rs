use fbc_core::bes::{
    epsilon_d, epsilon_hat, example_assignments, guess_threshold, layer_snr, AssignmentStyle,
    Depth, LevelAssignment,
};
use fbc_core::erasure::{achievable_rates, ErasurePmf, LevelPartition};
use fbc_core::fading::FadingDist;
use fbc_core::quad::QuadratureConfig;
use fbc_core::sim::{simulate_bes_detector, simulate_bes_link, simulate_erasure_scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact error rate of the last digit of an `n`-digit word sent without
/// interference: noise must carry the word into a cell of opposite parity.
fn last_digit_error(s: f64, n: u32) -> f64 {
    let sigma = 1.0 / (3.0 * s).sqrt();
    let cells = 1usize << n;
    let h = 0.5f64.powi(n as i32);
    let mut total = 0.0;
    for k in 0..cells {
        let c = -1.0 + (2 * k + 1) as f64 * h;
        for j in (0..cells).filter(|j| (j + k) % 2 == 1) {
            let lo = if j == 0 {
                f64::NEG_INFINITY
            } else {
                -1.0 + 2.0 * j as f64 * h
            };
            let hi = if j == cells - 1 {
                f64::INFINITY
            } else {
                -1.0 + 2.0 * (j + 1) as f64 * h
            };
            total += phi((hi - c) / sigma) - phi((lo - c) / sigma);
        }
    }
    total / cells as f64
}

#[test]
fn random_erasure_pmfs_match_analytic_rates() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let draw = |rng: &mut ChaCha8Rng| {
            let w: Vec<f64> = (0..7).map(|_| rng.gen::<f64>()).collect();
            let t: f64 = w.iter().sum();
            ErasurePmf::new(w.iter().map(|x| x / t).collect()).unwrap()
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let part = LevelPartition::from_mask(6, rng.gen_range(0..64));
        let exact = achievable_rates(&a, &b, &part).unwrap();
        let (r1, r2) = simulate_erasure_scheme(&a, &b, &part, 200_000, rng.gen()).unwrap();
        assert!(r1.agrees_with(exact.r1, 3.0), "{r1:?} vs {}", exact.r1);
        assert!(r2.agrees_with(exact.r2, 3.0), "{r2:?} vs {}", exact.r2);
    }
}

#[test]
fn too_few_trials_rejected() {
    let p = ErasurePmf::deterministic(2, 1).unwrap();
    assert!(simulate_erasure_scheme(&p, &p, &LevelPartition::all_to_user1(2), 9_999, 0).is_err());
    assert!(simulate_bes_detector(1.0, 1, Depth::Infinite, 99_999, 0).is_err());
}

#[test]
fn detector_matrix() {
    let mut cells = 0;
    for a in [0.5405, 1.0, 4.0] {
        for n in 1..=3 {
            for d in [Depth::Finite(0), Depth::Finite(1), Depth::Infinite] {
                let s = a * 4f64.powi(n) / 3.0;
                assert!((layer_snr(s, n as u32) - a).abs() < 1e-12);
                let r = simulate_bes_detector(s, n as u32, d, 200_000, 100 + cells).unwrap();
                let strict = epsilon_d(a, d).unwrap();
                assert!(
                    r.strict.agrees_with(strict, 3.0),
                    "a={a} n={n} d={d}: {:?} vs {strict}",
                    r.strict
                );
                let bound = epsilon_hat(a, d).unwrap();
                assert!(
                    r.actual.estimate <= bound + 3.0 * r.actual.half_width_95,
                    "a={a} n={n} d={d}"
                );
                cells += 1;
            }
        }
    }
    assert!(cells >= 27);
}

#[test]
fn detector_without_interference() {
    let r = simulate_bes_detector(16.0 / 3.0, 1, Depth::Infinite, 1_000_000, 8).unwrap();
    assert!(r
        .strict
        .agrees_with(libm::erfc(2.0 / std::f64::consts::SQRT_2), 3.0));
}

#[test]
fn detector_is_deterministic() {
    let a = simulate_bes_detector(5.0, 2, Depth::Finite(2), 150_000, 77).unwrap();
    assert_eq!(
        a,
        simulate_bes_detector(5.0, 2, Depth::Finite(2), 150_000, 77).unwrap()
    );
    assert_ne!(
        a,
        simulate_bes_detector(5.0, 2, Depth::Finite(2), 150_000, 78).unwrap()
    );
}

#[test]
fn single_user_link_with_full_stripping() {
    let s = 200.0;
    let assign = LevelAssignment::threshold(0, 6).unwrap();
    let cfg = QuadratureConfig::default();
    let rows = simulate_bes_link(
        &FadingDist::constant(s).unwrap(),
        &assign,
        1,
        true,
        400_000,
        3,
        &cfg,
    )
    .unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert_eq!(r.depth, Depth::Infinite);
        let a = layer_snr(s, r.level);
        let want = if a < guess_threshold(Depth::Infinite) {
            0.5
        } else {
            last_digit_error(s, r.level)
        };
        let slack = 3.0 * r.report.half_width_95 + 1.0 / r.report.trials as f64;
        assert!(
            (r.report.estimate - want).abs() <= slack,
            "level {}: {:?} vs {want}",
            r.level,
            r.report
        );
        let hat = epsilon_hat(a, Depth::Infinite).unwrap();
        assert!((r.bound - hat).abs() < 1e-9);
        assert!(r.report.estimate <= r.bound + 3.0 * r.report.half_width_95);
    }
}

#[test]
fn intermittent_pair_without_stripping_stays_below_bound() {
    let cfg = QuadratureConfig::default();
    let s1 = FadingDist::intermittent(0.6, 400.0).unwrap();
    let s2 = FadingDist::intermittent(0.9, 40.0).unwrap();
    let assigns = example_assignments(&s1, &s2, AssignmentStyle::Threshold, &cfg).unwrap();
    let assign = &assigns[assigns.len() / 2];
    for user in [1, 2] {
        let s = if user == 1 { &s1 } else { &s2 };
        for r in simulate_bes_link(s, assign, user, false, 200_000, 4, &cfg).unwrap() {
            assert_eq!(r.depth, Depth::Finite(0));
            assert!(
                r.report.estimate <= r.bound + 3.0 * r.report.half_width_95,
                "user {user}: {r:?}"
            );
        }
    }
}

#[test]
fn link_rejects_bad_user() {
    let assign = LevelAssignment::threshold(1, 2).unwrap();
    let cfg = QuadratureConfig::default();
    assert!(simulate_bes_link(&FadingDist::zero(), &assign, 3, true, 100_000, 0, &cfg).is_err());
}
