//! Fading power-gain distributions described by their complementary CDF.
//!
//! Throughout, `ccdf(s) = P(S >= s)`. Distributions may put mass at `s = 0`
//! (so `ccdf(0+) < 1`) and may jump; every jump location is reported as an atom.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::CcdfEvaluator;

/// Channel power-gain law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "DistSpec")]
pub enum FadingDist {
    /// State `snr` with probability `p`, otherwise 0.
    Intermittent { p: f64, snr: f64 },
    /// Exponentially distributed power gain with mean `mean_snr`.
    Rayleigh { mean_snr: f64 },
    /// Piecewise-linear CCDF through `(s, ccdf)` points, zero past the last point.
    /// Repeating an `s` value encodes a jump.
    Tabulated { points: Vec<(f64, f64)> },
    /// Convex combination of other laws.
    Mixture { components: Vec<MixtureComponent> },
    /// `min(1, max(ccdf_1, omega ccdf_2))`.
    Enhanced {
        base: Box<FadingDist>,
        other: Box<FadingDist>,
        omega: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dist: FadingDist,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DistSpec {
    Intermittent {
        p: f64,
        snr: f64,
    },
    Rayleigh {
        mean_snr: f64,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
    Enhanced {
        base: Box<FadingDist>,
        other: Box<FadingDist>,
        omega: f64,
    },
}

impl TryFrom<DistSpec> for FadingDist {
    type Error = Error;
    fn try_from(spec: DistSpec) -> Result<Self> {
        let d = match spec {
            DistSpec::Intermittent { p, snr } => FadingDist::Intermittent { p, snr },
            DistSpec::Rayleigh { mean_snr } => FadingDist::Rayleigh { mean_snr },
            DistSpec::Tabulated { points } => FadingDist::Tabulated { points },
            DistSpec::Mixture { components } => FadingDist::Mixture { components },
            DistSpec::Enhanced { base, other, omega } => {
                FadingDist::Enhanced { base, other, omega }
            }
        };
        d.validate()?;
        Ok(d)
    }
}

fn finite_nonneg(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what} must be a finite nonnegative number, got {x}"
        )))
    }
}

/// `10^(db/10)`
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl FadingDist {
    pub fn intermittent(p: f64, snr: f64) -> Result<Self> {
        let d = FadingDist::Intermittent { p, snr };
        d.validate()?;
        Ok(d)
    }

    /// Non-fading AWGN channel at `snr`.
    pub fn constant(snr: f64) -> Result<Self> {
        FadingDist::intermittent(1.0, snr)
    }

    /// The channel that never delivers anything.
    pub fn zero() -> Self {
        FadingDist::Intermittent { p: 0.0, snr: 0.0 }
    }

    pub fn rayleigh(mean_snr: f64) -> Result<Self> {
        let d = FadingDist::Rayleigh { mean_snr };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let d = FadingDist::Tabulated { points };
        d.validate()?;
        Ok(d)
    }

    pub fn mixture(components: Vec<(f64, FadingDist)>) -> Result<Self> {
        let d = FadingDist::Mixture {
            components: components
                .into_iter()
                .map(|(weight, dist)| MixtureComponent { weight, dist })
                .collect(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FadingDist::Intermittent { p, snr } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::domain(format!(
                        "intermittent p must lie in [0, 1], got {p}"
                    )));
                }
                finite_nonneg(*snr, "intermittent snr")
            }
            FadingDist::Rayleigh { mean_snr } => {
                if mean_snr.is_finite() && *mean_snr > 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!(
                        "rayleigh mean_snr must be positive, got {mean_snr}"
                    )))
                }
            }
            FadingDist::Tabulated { points } => {
                if points.is_empty() {
                    return Err(Error::domain(
                        "tabulated distribution needs at least one point",
                    ));
                }
                if points[0].0 != 0.0 {
                    return Err(Error::domain("tabulated distribution must start at s = 0"));
                }
                for &(s, f) in points {
                    finite_nonneg(s, "tabulated s")?;
                    if !(0.0..=1.0).contains(&f) {
                        return Err(Error::domain(format!(
                            "tabulated ccdf value {f} outside [0, 1]"
                        )));
                    }
                }
                for w in points.windows(2) {
                    if w[1].0 < w[0].0 || w[1].1 > w[0].1 {
                        return Err(Error::domain(format!(
                            "tabulated points must have non-decreasing s and non-increasing ccdf, see {:?} -> {:?}",
                            w[0], w[1]
                        )));
                    }
                }
                Ok(())
            }
            FadingDist::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::domain("mixture needs at least one component"));
                }
                let mut total = 0.0;
                for c in components {
                    finite_nonneg(c.weight, "mixture weight")?;
                    c.dist.validate()?;
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(format!(
                        "mixture weights sum to {total}, not 1"
                    )));
                }
                Ok(())
            }
            FadingDist::Enhanced { base, other, omega } => {
                if !(omega.is_finite() && *omega >= 1.0) {
                    return Err(Error::domain(format!(
                        "enhancement weight must be >= 1, got {omega}"
                    )));
                }
                base.validate()?;
                other.validate()
            }
        }
    }

    /// `P(S >= s)`.
    pub fn ccdf_at(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 1.0;
        }
        match self {
            FadingDist::Intermittent { p, snr } => {
                if s <= *snr {
                    *p
                } else {
                    0.0
                }
            }
            FadingDist::Rayleigh { mean_snr } => (-s / mean_snr).exp(),
            FadingDist::Tabulated { points } => tabulated_ccdf(points, s),
            FadingDist::Mixture { components } => components
                .iter()
                .map(|c| c.weight * c.dist.ccdf_at(s))
                .sum(),
            FadingDist::Enhanced { base, other, omega } => {
                base.ccdf_at(s).max(omega * other.ccdf_at(s)).min(1.0)
            }
        }
    }

    /// `ln P(S >= s)`, accurate even where the CCDF itself underflows.
    pub fn ln_ccdf(&self, s: f64) -> f64 {
        match self {
            FadingDist::Rayleigh { mean_snr } if s >= 0.0 => -s / mean_snr,
            FadingDist::Mixture { components } => {
                let logs: Vec<f64> = components
                    .iter()
                    .filter(|c| c.weight > 0.0)
                    .map(|c| c.weight.ln() + c.dist.ln_ccdf(s))
                    .collect();
                log_sum_exp(&logs)
            }
            FadingDist::Enhanced { base, other, omega } => {
                base.ln_ccdf(s).max(omega.ln() + other.ln_ccdf(s)).min(0.0)
            }
            _ => self.ccdf_at(s).ln(),
        }
    }

    /// Points where the CCDF jumps, sorted.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut out = match self {
            FadingDist::Intermittent { p, snr } if *p > 0.0 => vec![*snr],
            FadingDist::Intermittent { .. } | FadingDist::Rayleigh { .. } => vec![],
            FadingDist::Tabulated { points } => {
                let mut v: Vec<f64> = points
                    .windows(2)
                    .filter(|w| w[0].0 == w[1].0)
                    .map(|w| w[0].0)
                    .collect();
                let last = points[points.len() - 1];
                if last.1 > 0.0 {
                    v.push(last.0);
                }
                v
            }
            FadingDist::Mixture { components } => components
                .iter()
                .flat_map(|c| c.dist.jump_points())
                .collect(),
            FadingDist::Enhanced { base, other, .. } => base
                .jump_points()
                .into_iter()
                .chain(other.jump_points())
                .collect(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Beyond this state the CCDF is zero.
    pub fn support_bound(&self) -> f64 {
        match self {
            FadingDist::Intermittent { p, snr } => {
                if *p > 0.0 {
                    *snr
                } else {
                    0.0
                }
            }
            FadingDist::Rayleigh { .. } => f64::INFINITY,
            FadingDist::Tabulated { points } => points[points.len() - 1].0,
            FadingDist::Mixture { components } => components
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| c.dist.support_bound())
                .fold(0.0, f64::max),
            FadingDist::Enhanced { base, other, .. } => {
                base.support_bound().max(other.support_bound())
            }
        }
    }

    /// A state beyond which the CCDF is negligible (below `exp(-1000)` for
    /// unbounded laws); used to bound searches.
    pub fn search_bound(&self) -> f64 {
        match self {
            FadingDist::Rayleigh { mean_snr } => 1000.0 * mean_snr,
            FadingDist::Mixture { components } => components
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| c.dist.search_bound())
                .fold(0.0, f64::max),
            FadingDist::Enhanced { base, other, .. } => {
                base.search_bound().max(other.search_bound())
            }
            _ => self.support_bound(),
        }
    }

    /// Draws one state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingDist::Intermittent { p, snr } => {
                if rng.gen::<f64>() < *p {
                    *snr
                } else {
                    0.0
                }
            }
            FadingDist::Rayleigh { mean_snr } => {
                Exp::new(1.0 / mean_snr).expect("positive rate").sample(rng)
            }
            FadingDist::Mixture { components } => {
                let mut u = rng.gen::<f64>();
                for c in components {
                    if u < c.weight {
                        return c.dist.sample(rng);
                    }
                    u -= c.weight;
                }
                components[components.len() - 1].dist.sample(rng)
            }
            _ => self.inverse_ccdf(rng.gen::<f64>()),
        }
    }

    /// `sup { s : ccdf(s) > u }`, or 0 if the set is empty.
    fn inverse_ccdf(&self, u: f64) -> f64 {
        if self.ccdf_at(0.0) <= u {
            return 0.0;
        }
        let mut hi = self.search_bound().max(1.0);
        while self.ccdf_at(hi) > u {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ccdf_at(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            FadingDist::Intermittent { p, snr } => format!("intermittent(p={p}, snr={snr})"),
            FadingDist::Rayleigh { mean_snr } => format!("rayleigh(mean_snr={mean_snr})"),
            FadingDist::Tabulated { points } => format!("tabulated({} points)", points.len()),
            FadingDist::Mixture { components } => {
                format!("mixture({} components)", components.len())
            }
            FadingDist::Enhanced { omega, .. } => format!("enhanced(omega={omega})"),
        }
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

fn tabulated_ccdf(points: &[(f64, f64)], s: f64) -> f64 {
    // First index with points[i].0 >= s.
    let i = points.partition_point(|p| p.0 < s);
    if i == points.len() {
        return 0.0;
    }
    if i == 0 || points[i].0 == s {
        return points[i].1;
    }
    let (s0, f0) = points[i - 1];
    let (s1, f1) = points[i];
    f0 + (f1 - f0) * (s - s0) / (s1 - s0)
}

impl CcdfEvaluator for FadingDist {
    fn ccdf(&self, s: f64) -> f64 {
        self.ccdf_at(s)
    }

    fn atoms(&self) -> Vec<f64> {
        self.jump_points()
    }

    fn support_max(&self) -> f64 {
        self.support_bound()
    }
}
