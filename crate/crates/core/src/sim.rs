//! Seeded Monte Carlo checks of the erasure scheme and the layer detector.
//!
//! Trials are split into fixed-size blocks; block `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, and block results are merged in block order,
//! so reports do not depend on the number of worker threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bes::{
    depth_of_level, guess_threshold, layer_snr, mean_crossover, Depth, LevelAssignment, LevelUse,
};
use crate::erasure::{ErasurePmf, LevelPartition};
use crate::error::{Error, Result};
use crate::fading::FadingDist;
use crate::quad::QuadratureConfig;

const BLOCK: u64 = 8192;
const Z95: f64 = 1.96;
pub const MIN_ERASURE_SYMBOLS: u64 = 10_000;
pub const MIN_DETECTOR_TRIALS: u64 = 100_000;
/// Layers are carried in one 64-bit word per symbol.
pub const MAX_SIM_LEVEL: u32 = 60;

/// A Monte Carlo mean with its 95% confidence half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub label: String,
    pub trials: u64,
    pub estimate: f64,
    pub half_width_95: f64,
    pub seed: u64,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl SimReport {
    /// `|estimate - target| <= k half-widths`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.half_width_95
    }
}

/// Running sums of one per-trial quantity.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sumsq: self.sumsq + o.sumsq,
        }
    }

    fn report(
        &self,
        label: impl Into<String>,
        seed: u64,
        metadata: BTreeMap<String, String>,
    ) -> SimReport {
        let n = self.n.max(1) as f64;
        let mean = self.sum / n;
        let var = (self.sumsq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        SimReport {
            label: label.into(),
            trials: self.n,
            estimate: mean,
            half_width_95: Z95 * (var / n).sqrt(),
            seed,
            metadata,
        }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Runs `trials` trials in keyed blocks; `body` fills `K` accumulators per trial.
fn run_blocks<const K: usize, F>(trials: u64, seed: u64, body: F) -> [Moments; K]
where
    F: Fn(&mut ChaCha8Rng, &mut [Moments; K]) + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let per_block: Vec<[Moments; K]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let mut acc = [Moments::default(); K];
            let count = BLOCK.min(trials - b * BLOCK);
            for _ in 0..count {
                body(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    per_block
        .into_iter()
        .fold([Moments::default(); K], |mut total, blk| {
            for (t, b) in total.iter_mut().zip(blk) {
                *t = t.merge(b);
            }
            total
        })
}

/// `N` with `P(N >= n) = ccdf[n]`.
#[inline]
fn draw_state(ccdf: &[f64], u: f64) -> usize {
    ccdf[1..].iter().take_while(|&&f| u < f).count()
}

/// Simulates the level-partition scheme; returns per-user delivered bits per symbol.
pub fn simulate_erasure_scheme(
    n1: &ErasurePmf,
    n2: &ErasurePmf,
    partition: &LevelPartition,
    symbols: u64,
    seed: u64,
) -> Result<(SimReport, SimReport)> {
    if symbols < MIN_ERASURE_SYMBOLS {
        return Err(Error::domain(format!(
            "need at least {MIN_ERASURE_SYMBOLS} symbols, got {symbols}"
        )));
    }
    if n1.q() != n2.q() || !partition.is_valid(n1.q()) {
        return Err(Error::domain("partition does not match the channels"));
    }
    let (c1, c2) = (n1.ccdf_values().to_vec(), n2.ccdf_values().to_vec());
    let top1 = partition.user1_levels.iter().copied().collect::<Vec<_>>();
    let top2 = partition.user2_levels.iter().copied().collect::<Vec<_>>();
    let [m1, m2] = run_blocks::<2, _>(symbols, seed, |rng, acc| {
        let s1 = draw_state(&c1, rng.gen());
        let s2 = draw_state(&c2, rng.gen());
        acc[0].push(top1.iter().filter(|&&n| n <= s1).count() as f64);
        acc[1].push(top2.iter().filter(|&&n| n <= s2).count() as f64);
    });
    let meta = |user: &str| {
        BTreeMap::from([
            ("user".to_string(), user.to_string()),
            ("q".to_string(), n1.q().to_string()),
        ])
    };
    Ok((
        m1.report("erasure-rate", seed, meta("1")),
        m2.report("erasure-rate", seed, meta("2")),
    ))
}

/// Centre of the `n`-digit constellation cell containing `y` (clipped to `[-1, 1]`).
#[inline]
fn detect_prefix(y: f64, n: u32) -> f64 {
    let cells = (1u64 << n) as f64;
    let k = ((y + 1.0) * 0.5 * cells).floor().clamp(0.0, cells - 1.0);
    -1.0 + (2.0 * k + 1.0) / cells
}

/// Detector statistics for one `(s, n, d)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    /// Frequency of `|Y - x^n| >= 2^-n`, whose probability is exactly `eps_d(a_n(s))`.
    pub strict: SimReport,
    /// Frequency of a wrong `n`-digit decision, which clipping can only reduce.
    pub actual: SimReport,
    /// Frequency of `|Y| > 1`.
    pub clipped: f64,
}

/// Detects the top `n` layers at state `s` with `d` layers of interference stripped.
pub fn simulate_bes_detector(
    s: f64,
    n: u32,
    d: Depth,
    trials: u64,
    seed: u64,
) -> Result<DetectorReport> {
    if trials < MIN_DETECTOR_TRIALS {
        return Err(Error::domain(format!(
            "need at least {MIN_DETECTOR_TRIALS} trials, got {trials}"
        )));
    }
    if !(s > 0.0 && s.is_finite()) || n == 0 || n > MAX_SIM_LEVEL {
        return Err(Error::domain(format!(
            "need s > 0 and 1 <= n <= {MAX_SIM_LEVEL}"
        )));
    }
    let sigma = 1.0 / (3.0 * s).sqrt();
    let cell = 0.5f64.powi(n as i32);
    let spread = match d {
        Depth::Finite(k) => cell * 0.5f64.powi(k as i32),
        Depth::Infinite => 0.0,
    };
    let [strict, actual, clipped] = run_blocks::<3, _>(trials, seed, |rng, acc| {
        let bits: u64 = rng.gen();
        let x: f64 = (0..n)
            .map(|j| if bits >> j & 1 == 1 { 1.0 } else { -1.0 } * 0.5f64.powi(j as i32 + 1))
            .sum();
        let u = if spread > 0.0 {
            rng.gen_range(-spread..spread)
        } else {
            0.0
        };
        let z: f64 = rng.sample(StandardNormal);
        let y = x + u + sigma * z;
        acc[0].push(((y - x).abs() >= cell) as u8 as f64);
        acc[1].push((detect_prefix(y, n) != x) as u8 as f64);
        acc[2].push((y.abs() > 1.0) as u8 as f64);
    });
    let meta = BTreeMap::from([
        ("s".to_string(), s.to_string()),
        ("n".to_string(), n.to_string()),
        ("d".to_string(), d.to_string()),
        ("a".to_string(), layer_snr(s, n).to_string()),
    ]);
    Ok(DetectorReport {
        strict: strict.report("detector-strict", seed, meta.clone()),
        actual: actual.report("detector-error", seed, meta),
        clipped: clipped.sum / clipped.n as f64,
    })
}

/// Per-level outcome of a link simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkLevelReport {
    pub level: u32,
    pub depth: Depth,
    /// `E[eps_hat_d(a_n(S))]`
    pub bound: f64,
    pub report: SimReport,
}

/// Full superposition link to one user: per-level bit error rates of the
/// detector with guessing, and optional genie-aided stripping of the
/// user's own less significant layers.
pub fn simulate_bes_link(
    s: &FadingDist,
    assign: &LevelAssignment,
    user: u8,
    stripping: bool,
    symbols: u64,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Vec<LinkLevelReport>> {
    if symbols < MIN_DETECTOR_TRIALS {
        return Err(Error::domain(format!(
            "need at least {MIN_DETECTOR_TRIALS} symbols, got {symbols}"
        )));
    }
    if assign.max_level > MAX_SIM_LEVEL {
        return Err(Error::domain(format!(
            "link simulation supports up to {MAX_SIM_LEVEL} levels"
        )));
    }
    let me = match user {
        1 => LevelUse::User1,
        2 => LevelUse::User2,
        _ => return Err(Error::domain(format!("user must be 1 or 2, got {user}"))),
    };
    let top = assign.max_level;
    let used: Vec<bool> = (0..=top)
        .map(|n| n > 0 && assign.user_of(n) != LevelUse::Unused)
        .collect();
    let mine = assign.levels_of(me);
    let depths: Vec<Depth> = mine
        .iter()
        .map(|&n| {
            if stripping {
                depth_of_level(assign, n)
            } else {
                Ok(Depth::Finite(0))
            }
        })
        .collect::<Result<_>>()?;
    let thresholds: Vec<f64> = depths.iter().map(|&d| guess_threshold(d)).collect();
    let bounds: Vec<f64> = mine
        .iter()
        .zip(&depths)
        .map(|(&n, &d)| mean_crossover(s, n, d, cfg))
        .collect::<Result<_>>()?;
    let scale: Vec<f64> = (0..=top).map(|j| 0.5f64.powi(j as i32)).collect();

    let moments: Vec<Moments> = {
        let blocks = symbols.div_ceil(BLOCK);
        let per_block: Vec<Vec<Moments>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let mut acc = vec![Moments::default(); mine.len()];
                let mut layer = vec![0.0; top as usize + 1];
                for _ in 0..BLOCK.min(symbols - b * BLOCK) {
                    let state = s.sample(&mut rng);
                    let bits: u64 = rng.gen();
                    let mut y = 0.0;
                    for j in 1..=top as usize {
                        layer[j] = if !used[j] {
                            0.0
                        } else if bits >> j & 1 == 1 {
                            scale[j]
                        } else {
                            -scale[j]
                        };
                        y += layer[j];
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    let noisy = state > 0.0;
                    if noisy {
                        y += z / (3.0 * state).sqrt();
                    }
                    for (k, &n) in mine.iter().enumerate() {
                        let guess = !noisy || layer_snr(state, n) < thresholds[k];
                        let err = if guess {
                            rng.gen::<bool>()
                        } else {
                            let strip_to = match depths[k] {
                                Depth::Finite(d) => (n + d).min(top),
                                Depth::Infinite => top,
                            };
                            let yn =
                                y - ((n + 1)..=strip_to).map(|j| layer[j as usize]).sum::<f64>();
                            let mut partial = 0.0;
                            let mut decided = 0.0;
                            for j in 1..=n as usize {
                                if !used[j] {
                                    continue;
                                }
                                decided = if yn - partial >= 0.0 {
                                    scale[j]
                                } else {
                                    -scale[j]
                                };
                                partial += decided;
                            }
                            decided != layer[n as usize]
                        };
                        acc[k].push(err as u8 as f64);
                    }
                }
                acc
            })
            .collect();
        per_block
            .into_iter()
            .fold(vec![Moments::default(); mine.len()], |total, blk| {
                total
                    .into_iter()
                    .zip(blk)
                    .map(|(t, b)| t.merge(b))
                    .collect()
            })
    };

    Ok(mine
        .iter()
        .zip(depths)
        .zip(bounds)
        .zip(moments)
        .map(|(((&n, depth), bound), m)| {
            let meta = BTreeMap::from([
                ("level".to_string(), n.to_string()),
                ("depth".to_string(), depth.to_string()),
                ("user".to_string(), user.to_string()),
                ("stripping".to_string(), stripping.to_string()),
                ("channel".to_string(), s.label()),
            ]);
            LinkLevelReport {
                level: n,
                depth,
                bound,
                report: m.report("link-level-error", seed, meta),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bes::{epsilon_d, nearest_constellation};
    use crate::erasure::{achievable_rates, example_channels_1};

    #[test]
    fn prefix_detector_is_nearest_word() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20_000 {
            let y: f64 = rng.gen_range(-1.3..1.3);
            let n = rng.gen_range(1..10);
            assert_eq!(
                detect_prefix(y, n),
                nearest_constellation(y, n as usize).value()
            );
        }
    }

    #[test]
    fn deterministic_erasure_channel_has_no_variance() {
        let full = ErasurePmf::deterministic(3, 3).unwrap();
        let (r1, r2) =
            simulate_erasure_scheme(&full, &full, &LevelPartition::all_to_user1(3), 20_000, 4)
                .unwrap();
        assert_eq!(r1.estimate, 3.0);
        assert_eq!(r1.half_width_95, 0.0);
        assert_eq!(r2.estimate, 0.0);
    }

    #[test]
    fn erasure_scheme_is_reproducible_and_converges() {
        let (a, b) = example_channels_1();
        let p = LevelPartition::from_mask(2, 0b01);
        let exact = achievable_rates(&a, &b, &p).unwrap();
        let (r1, r2) = simulate_erasure_scheme(&a, &b, &p, 200_000, 9).unwrap();
        assert!(r1.agrees_with(exact.r1, 3.0) && r2.agrees_with(exact.r2, 3.0));
        assert_eq!(
            simulate_erasure_scheme(&a, &b, &p, 200_000, 9).unwrap(),
            (r1.clone(), r2)
        );
        let (big, _) = simulate_erasure_scheme(&a, &b, &p, 800_000, 9).unwrap();
        let ratio = r1.half_width_95 / big.half_width_95;
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (a, b) = example_channels_1();
        let p = LevelPartition::from_mask(2, 0b01);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = one.install(|| simulate_erasure_scheme(&a, &b, &p, 100_000, 3).unwrap());
        assert_eq!(
            serial,
            simulate_erasure_scheme(&a, &b, &p, 100_000, 3).unwrap()
        );
    }

    #[test]
    fn detector_strict_event_matches_analytic() {
        let a = 1.0;
        let s = a * 4.0 / 3.0;
        let r = simulate_bes_detector(s, 1, Depth::Finite(1), 200_000, 2).unwrap();
        assert!(r
            .strict
            .agrees_with(epsilon_d(a, Depth::Finite(1)).unwrap(), 3.0));
        assert!(r.actual.estimate <= r.strict.estimate);
    }

    #[test]
    fn silent_channel_guesses_everything() {
        let assign = LevelAssignment::threshold(0, 4).unwrap();
        let rows = simulate_bes_link(
            &FadingDist::zero(),
            &assign,
            1,
            true,
            100_000,
            5,
            &QuadratureConfig::default(),
        )
        .unwrap();
        for r in rows {
            assert_eq!(r.bound, 0.5);
            assert!(r.report.agrees_with(0.5, 3.0));
        }
    }
}
