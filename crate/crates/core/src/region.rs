//! Rate pairs, region boundaries and their upper concave envelope.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// Points closer than this in both coordinates are treated as one.
pub const POINT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    /// Negative zeros (e.g. from empty sums) are stored as `+0`.
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePair {
            r1: r1 + 0.0,
            r2: r2 + 0.0,
        }
    }

    pub fn weighted(&self, omega: f64) -> f64 {
        if omega.is_infinite() {
            return if self.r2 > 0.0 {
                f64::INFINITY
            } else {
                self.r1
            };
        }
        self.r1 + omega * self.r2
    }

    pub fn approx_eq(&self, other: &RatePair, tol: f64) -> bool {
        (self.r1 - other.r1).abs() <= tol && (self.r2 - other.r2).abs() <= tol
    }
}

/// A vertex of a rate region together with the range of weights `omega`
/// for which it maximizes `R1 + omega R2`. `omega_high = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoint {
    pub omega_low: f64,
    pub omega_high: Option<f64>,
    pub r1: f64,
    pub r2: f64,
}

impl ExtremePoint {
    pub fn rates(&self) -> RatePair {
        RatePair::new(self.r1, self.r2)
    }
}

/// Ordered extreme points of a two-user rate region, from the `R2 = 0` end
/// to the maximal-`R2` end.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateRegionBoundary {
    pub extreme_points: Vec<ExtremePoint>,
    /// Weights at which the optimal vertex changes, strictly increasing.
    /// The implicit first weight 0 is not listed.
    pub critical_weights: Vec<f64>,
}

impl RateRegionBoundary {
    pub fn rates(&self) -> Vec<RatePair> {
        self.extreme_points
            .iter()
            .map(ExtremePoint::rates)
            .collect()
    }

    /// Support function `max (R1 + omega R2)` over the region.
    pub fn max_weighted_sum(&self, omega: f64) -> f64 {
        self.extreme_points
            .iter()
            .map(|p| p.rates().weighted(omega))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiplies every rate by `factor` (e.g. 0.5 for per-real-dimension rates).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.extreme_points {
            p.r1 *= factor;
            p.r2 *= factor;
        }
        out
    }

    /// Writes `omega_low,omega_high,R1,R2` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "omega_low,omega_high,R1,R2")?;
        for p in &self.extreme_points {
            let hi = p
                .omega_high
                .map_or_else(|| "inf".to_string(), |v| format!("{v}"));
            writeln!(
                w,
                "{},{},{},{}",
                p.omega_low + 0.0,
                hi,
                p.r1 + 0.0,
                p.r2 + 0.0
            )?;
        }
        Ok(())
    }
}

/// Vertices of the upper-right concave envelope of `points` (time sharing
/// plus free disposal), ordered by increasing `R2`, each with its supporting
/// weight range.
pub fn upper_concave_envelope(points: &[RatePair]) -> RateRegionBoundary {
    let mut pts: Vec<RatePair> = points
        .iter()
        .copied()
        .filter(|p| p.r1.is_finite() && p.r2.is_finite())
        .collect();
    if pts.is_empty() {
        return RateRegionBoundary::default();
    }
    // R2 descending, R1 descending among ties
    pts.sort_by(|a, b| b.r2.total_cmp(&a.r2).then(b.r1.total_cmp(&a.r1)));

    // Pareto filter: scanning from the highest R2 down, R1 must strictly grow.
    let mut pareto: Vec<RatePair> = Vec::new();
    let mut best_r1 = f64::NEG_INFINITY;
    for p in &pts {
        if p.r1 > best_r1 + POINT_EPS {
            pareto.push(*p);
            best_r1 = p.r1;
        }
    }
    pareto.reverse();

    let mut hull: Vec<RatePair> = Vec::with_capacity(pareto.len());
    for p in pareto {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.r2 - a.r2) * (p.r1 - a.r1) - (b.r1 - a.r1) * (p.r2 - a.r2);
            let scale = 1.0 + a.r1.abs().max(p.r1.abs()) + a.r2.abs().max(p.r2.abs());
            if cross >= -1e-12 * scale * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let slopes: Vec<f64> = hull
        .windows(2)
        .map(|w| (w[0].r1 - w[1].r1) / (w[1].r2 - w[0].r2))
        .collect();
    let extreme_points = hull
        .iter()
        .enumerate()
        .map(|(k, p)| ExtremePoint {
            omega_low: if k == 0 { 0.0 } else { slopes[k - 1] },
            omega_high: slopes.get(k).copied(),
            r1: p.r1,
            r2: p.r2,
        })
        .collect();
    RateRegionBoundary {
        extreme_points,
        critical_weights: slopes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_drops_interior_and_dominated_points() {
        let pts = [
            RatePair::new(1.0, 0.0),
            RatePair::new(0.5, 0.5), // on the chord: removed
            RatePair::new(0.0, 1.0),
            RatePair::new(0.2, 0.2), // dominated
        ];
        let b = upper_concave_envelope(&pts);
        assert_eq!(
            b.rates(),
            vec![RatePair::new(1.0, 0.0), RatePair::new(0.0, 1.0)]
        );
        assert_eq!(b.critical_weights, vec![1.0]);
        assert_eq!(b.extreme_points[1].omega_high, None);
    }

    #[test]
    fn envelope_keeps_concave_vertex() {
        let pts = [
            RatePair::new(1.0, 0.0),
            RatePair::new(0.75, 0.5),
            RatePair::new(0.0, 1.0),
        ];
        let b = upper_concave_envelope(&pts);
        assert_eq!(b.extreme_points.len(), 3);
        assert!((b.critical_weights[0] - 0.5).abs() < 1e-15);
        assert!((b.critical_weights[1] - 1.5).abs() < 1e-15);
        assert!((b.max_weighted_sum(1.0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn csv_rows() {
        let b = upper_concave_envelope(&[RatePair::new(1.0, 0.0)]);
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "omega_low,omega_high,R1,R2\n0,inf,1,0\n"
        );
    }
}
