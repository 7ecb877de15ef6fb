//! Constant-gap analysis: 6 dB state quantization, quantized inner and outer
//! bounds and the universal gap between them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bes::{epsilon_hat, level_rate, Depth};
use crate::error::{Error, Result};
use crate::fading::FadingDist;
use crate::gaussian::{favours_user1_at, RatePoint};
use crate::quad::QuadratureConfig;
use crate::special::entropy_bits;

/// Quantized terms below this are ignored.
const NEGLIGIBLE_CCDF: f64 = 1e-9;
const SERIES_TOL: f64 = 1e-12;
const MAX_SERIES_TERMS: usize = 400;
/// `gamma * 4^(n-1)` overflows past this.
const MAX_GRID_LEVEL: u32 = 500;

/// States `gamma_n = gamma 4^(n-1)`, `n = 1..=max_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationGrid {
    pub gamma: f64,
    pub max_n: u32,
}

impl QuantizationGrid {
    pub fn new(gamma: f64, max_n: u32) -> Result<Self> {
        check_gamma(gamma)?;
        if max_n == 0 || max_n > MAX_GRID_LEVEL {
            return Err(Error::domain(format!(
                "max_n must lie in 1..={MAX_GRID_LEVEL}, got {max_n}"
            )));
        }
        Ok(QuantizationGrid { gamma, max_n })
    }

    /// Grid reaching the first level where both CCDFs drop below 1e-9.
    pub fn for_pair(gamma: f64, s1: &FadingDist, s2: &FadingDist) -> Result<Self> {
        check_gamma(gamma)?;
        let mut n = 1;
        while n < MAX_GRID_LEVEL {
            let g = state(gamma, n);
            if s1.ccdf_at(g) < NEGLIGIBLE_CCDF && s2.ccdf_at(g) < NEGLIGIBLE_CCDF {
                break;
            }
            n += 1;
        }
        QuantizationGrid::new(gamma, n)
    }

    pub fn state(&self, n: u32) -> f64 {
        state(self.gamma, n)
    }

    pub fn states(&self) -> Vec<f64> {
        (1..=self.max_n).map(|n| self.state(n)).collect()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "gamma must be positive, got {gamma}"
        )))
    }
}

/// `gamma_n = gamma 4^(n-1)`; `n = 0` gives `gamma / 4`.
#[inline]
fn state(gamma: f64, n: u32) -> f64 {
    gamma * 4f64.powi(n as i32 - 1)
}

/// `log2(1 + gamma_{n+1}) - log2(1 + gamma_n)`: capacity gained per quantization step.
pub fn capacity_increment(gamma: f64, n: u32) -> f64 {
    ((1.0 + state(gamma, n + 1)) / (1.0 + state(gamma, n))).log2()
}

/// `H(eps_hat_0(3 gamma_m))`, the detector loss of a level `m` steps above the state.
fn series_term(gamma: f64, m: u32) -> f64 {
    entropy_bits(epsilon_hat(3.0 * state(gamma, m), Depth::Finite(0)).expect("positive snr"))
}

/// `log2(1 + gamma) + 2 sum_{m=0}^{terms-1} H(eps_hat_0(3 gamma_m))`.
///
/// Fails when the first omitted term is still above 1e-9.
pub fn universal_gap(gamma: f64, terms: usize) -> Result<f64> {
    check_gamma(gamma)?;
    let head: f64 = (0..terms as u32).map(|m| series_term(gamma, m)).sum();
    let next = 2.0 * series_term(gamma, terms as u32);
    if next >= 1e-9 {
        return Err(Error::Convergence(format!(
            "gap series at gamma = {gamma} not converged after {terms} terms (next term {next:.3e})"
        )));
    }
    Ok((1.0 + gamma).log2() + 2.0 * head)
}

/// [`universal_gap`] summed until the terms fall below 1e-12.
pub fn universal_gap_auto(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let mut sum = 0.0;
    for m in 0..MAX_SERIES_TERMS as u32 {
        let t = series_term(gamma, m);
        sum += t;
        if t < SERIES_TOL && m > 0 {
            return Ok((1.0 + gamma).log2() + 2.0 * sum);
        }
    }
    Err(Error::Convergence(format!(
        "gap series at gamma = {gamma} did not converge"
    )))
}

/// Golden-section minimization of the universal gap over `gamma in [lo, hi]`
/// (searched in `ln gamma`). Returns `(gamma*, gap(gamma*))`.
pub fn minimize_gap(lo: f64, hi: f64) -> Result<(f64, f64)> {
    check_gamma(lo)?;
    check_gamma(hi)?;
    if lo > hi {
        return Err(Error::domain(format!("empty interval [{lo}, {hi}]")));
    }
    let f = |x: f64| universal_gap_auto(x.exp());
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    // 1e-3 in gamma for gamma up to a few tens
    while (b - a) > 1e-5 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = (0.5 * (a + b)).exp();
    let mut best_val = universal_gap_auto(best)?;
    for end in [lo, hi] {
        let v = universal_gap_auto(end)?;
        if v < best_val {
            best = end;
            best_val = v;
        }
    }
    Ok((best, best_val))
}

/// Levels of the grid favouring user 1 (first) and user 2 (second) at weight `omega`.
pub fn quantized_partition(
    s1: &FadingDist,
    s2: &FadingDist,
    omega: f64,
    grid: &QuantizationGrid,
) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut n1 = Vec::new();
    let mut n2 = Vec::new();
    for n in 1..=grid.max_n {
        if favours_user1_at(s1, s2, omega, grid.state(n))? {
            n1.push(n);
        } else {
            n2.push(n);
        }
    }
    Ok((n1, n2))
}

/// `log2(1 + gamma) + 2 sum_{n in N_i(omega)} ccdf_i(gamma_n)` for each user.
pub fn quantized_outer(
    s1: &FadingDist,
    s2: &FadingDist,
    omega: f64,
    grid: &QuantizationGrid,
) -> Result<RatePoint> {
    let (n1, n2) = quantized_partition(s1, s2, omega, grid)?;
    let base = (1.0 + grid.gamma).log2();
    let sum = |s: &FadingDist, levels: &[u32]| -> f64 {
        levels.iter().map(|&n| s.ccdf_at(grid.state(n))).sum()
    };
    Ok(RatePoint {
        omega,
        r1: base + 2.0 * sum(s1, &n1),
        r2: base + 2.0 * sum(s2, &n2),
    })
}

/// CCDF of the quantized enhancement of `s`: 1 below `gamma`, `ccdf(gamma_n)`
/// on `[gamma_n, gamma_{n+1})`.
pub fn quantized_enhanced_ccdf(s: &FadingDist, gamma: f64, x: f64) -> f64 {
    if x <= gamma {
        return 1.0;
    }
    let mut n = ((x / gamma).log2() / 2.0).floor() as i32 + 1;
    // guard the floor against rounding at the step edges
    while n > 1 && state(gamma, n as u32) > x {
        n -= 1;
    }
    while state(gamma, n as u32 + 1) <= x {
        n += 1;
    }
    s.ccdf_at(state(gamma, n as u32))
}

/// One weight of an empirical gap measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub omega: f64,
    pub outer: [f64; 2],
    pub inner: [f64; 2],
    pub inner_floor: [f64; 2],
    pub gap: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gamma: f64,
    pub delta_universal: f64,
    pub max_n: u32,
    pub per_omega: Vec<GapRow>,
    pub max_gap: [f64; 2],
}

/// Quantized outer bound minus the no-stripping binary-expansion rate of
/// the matching level assignment, for every weight.
pub fn empirical_gap(
    s1: &FadingDist,
    s2: &FadingDist,
    weights: &[f64],
    grid: &QuantizationGrid,
    cfg: &QuadratureConfig,
) -> Result<GapReport> {
    let delta = universal_gap_auto(grid.gamma)?;
    // 2 sum_m H(eps_hat_0(3 gamma_m))
    let penalty = delta - (1.0 + grid.gamma).log2();
    let level_rates = |s: &FadingDist| -> Result<Vec<f64>> {
        (1..=grid.max_n)
            .into_par_iter()
            .map(|n| level_rate(s, n, Depth::Finite(0), cfg))
            .collect()
    };
    let rates = [level_rates(s1)?, level_rates(s2)?];
    let dists = [s1, s2];

    let per_omega: Vec<GapRow> = weights
        .par_iter()
        .map(|&omega| {
            let outer = quantized_outer(s1, s2, omega, grid)?;
            let (n1, n2) = quantized_partition(s1, s2, omega, grid)?;
            let mut inner = [0.0; 2];
            let mut floor = [0.0; 2];
            for (i, levels) in [n1, n2].iter().enumerate() {
                inner[i] = levels.iter().map(|&n| rates[i][n as usize - 1]).sum();
                let mass: f64 = levels
                    .iter()
                    .map(|&n| dists[i].ccdf_at(grid.state(n)))
                    .sum();
                floor[i] = (2.0 * mass - penalty).max(0.0);
            }
            let outer = [outer.r1, outer.r2];
            Ok(GapRow {
                omega,
                outer,
                inner,
                inner_floor: floor,
                gap: [outer[0] - inner[0], outer[1] - inner[1]],
            })
        })
        .collect::<Result<_>>()?;

    let max_gap = per_omega.iter().fold([f64::NEG_INFINITY; 2], |acc, r| {
        [acc[0].max(r.gap[0]), acc[1].max(r.gap[1])]
    });
    Ok(GapReport {
        gamma: grid.gamma,
        delta_universal: delta,
        max_n: grid.max_n,
        per_omega,
        max_gap,
    })
}
