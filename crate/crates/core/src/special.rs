//! Gaussian tail function, its antiderivative and binary entropy.

use std::f64::consts::{FRAC_1_SQRT_2, LOG2_E};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1/sqrt(2 pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Beyond this magnitude the tail is evaluated from the Mills-ratio continued fraction.
const CF_SWITCH: f64 = 8.0;
const CF_TERMS: usize = 200;

/// A probability, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const HALF: Probability = Probability(0.5);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("{value} is not a probability")))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what} requires a finite argument, got {x}"
        )))
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Backward evaluation of F_j = x + (j+1)/F_{j+1}; returns (F_0, F_1).
///
/// Q(x) = phi(x)/F_0 and x Q(x) - phi(x) = -phi(x)/(F_0 F_1) for large x.
fn mills_fraction(x: f64) -> (f64, f64) {
    let mut f = x;
    for j in (1..CF_TERMS).rev() {
        f = x + (j as f64 + 1.0) / f;
    }
    let f1 = f;
    let f0 = x + 1.0 / f1;
    (f0, f1)
}

/// Unchecked Gaussian tail P(Z >= x).
#[inline]
pub(crate) fn q(x: f64) -> f64 {
    if x > CF_SWITCH {
        let (f0, _) = mills_fraction(x);
        normal_pdf(x) / f0
    } else if x < -CF_SWITCH {
        1.0 - q(-x)
    } else {
        0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// Unchecked `G(x) = x Q(x) - phi(x)`, the antiderivative of `Q`.
#[inline]
pub(crate) fn g(x: f64) -> f64 {
    if x < 0.0 {
        return g(-x) + x;
    }
    if x > CF_SWITCH {
        let (f0, f1) = mills_fraction(x);
        -normal_pdf(x) / (f0 * f1)
    } else {
        x * q(x) - normal_pdf(x)
    }
}

/// Gaussian tail probability `Q(x) = P(Z >= x)` for standard normal `Z`.
pub fn q_function(x: f64) -> Result<Probability> {
    check_finite(x, "q_function")?;
    Ok(Probability::saturating(q(x)))
}

/// `G(x) = x Q(x) - exp(-x^2/2)/sqrt(2 pi)`; note `G' = Q`.
pub fn g_function(x: f64) -> Result<f64> {
    check_finite(x, "g_function")?;
    Ok(g(x))
}

#[inline]
pub(crate) fn entropy_bits(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.ln() + (1.0 - p) * (-p).ln_1p()) * LOG2_E
}

/// Derivative of the binary entropy, `log2((1-p)/p)`.
#[inline]
pub(crate) fn entropy_slope(p: f64) -> f64 {
    ((1.0 - p) / p).log2()
}

/// Binary entropy in bits with `0 log 0 = 0`.
pub fn binary_entropy(p: Probability) -> f64 {
    entropy_bits(p.value())
}
