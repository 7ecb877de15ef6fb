//! WebAssembly bindings for the browser demo in `www/`. Every export takes
//! and returns JSON strings; failures come back as a rejected string.

use fbc_core::bes::{achievable_region, epsilon_hat, example_assignments, AssignmentStyle, Depth};
use fbc_core::erasure::{capacity_region, ErasurePmf};
use fbc_core::fading::FadingDist;
use fbc_core::gaussian::{jump_weights, log_grid, outer_region, PartitionGrid};
use fbc_core::quad::QuadratureConfig;
use fbc_core::region::RatePair;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Deserialize)]
struct Pair<T> {
    user1: T,
    user2: T,
}

#[derive(Serialize)]
struct Curves {
    outer: Vec<RatePair>,
    inner: Vec<RatePair>,
}

#[derive(Serialize)]
struct EpsCurve {
    depth: Option<u32>,
    eps: Vec<f64>,
}

#[derive(Serialize)]
struct EpsTable {
    a: Vec<f64>,
    curves: Vec<EpsCurve>,
}

fn text<E: ToString>(e: E) -> String {
    e.to_string()
}

pub fn erasure_region_json(pair: &str) -> Result<String, String> {
    let p: Pair<ErasurePmf> = serde_json::from_str(pair).map_err(text)?;
    let region = capacity_region(&p.user1, &p.user2).map_err(text)?;
    serde_json::to_string(&region).map_err(text)
}

pub fn gaussian_curves_json(pair: &str, stripping: bool, points: usize) -> Result<String, String> {
    let p: Pair<FadingDist> = serde_json::from_str(pair).map_err(text)?;
    let cfg = QuadratureConfig::default();
    let mut weights = log_grid(1e-3, 1e3, points.clamp(2, 400));
    // the boundary bends between consecutive jump weights; sample there densely
    let jumps = jump_weights(&p.user1, &p.user2);
    for w in jumps.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-9)) {
        weights.extend(log_grid(w[0], w[1], 16));
    }
    weights.extend(jumps);
    let outer = outer_region(
        &p.user1,
        &p.user2,
        &weights,
        &PartitionGrid::default(),
        &cfg,
    )
    .map_err(text)?;
    let assigns =
        example_assignments(&p.user1, &p.user2, AssignmentStyle::Threshold, &cfg).map_err(text)?;
    let inner = achievable_region(&p.user1, &p.user2, &assigns, stripping, &cfg).map_err(text)?;
    serde_json::to_string(&Curves {
        outer: outer.rates(),
        inner: inner.rates(),
    })
    .map_err(text)
}

pub fn epsilon_curves_json(
    max_depth: u32,
    a_min: f64,
    a_max: f64,
    points: usize,
) -> Result<String, String> {
    if !(a_min > 0.0 && a_max > a_min) {
        return Err(format!("need 0 < a_min < a_max, got [{a_min}, {a_max}]"));
    }
    let a = log_grid(a_min, a_max, points.clamp(2, 2000));
    let depths = (0..=max_depth.min(30))
        .map(Depth::Finite)
        .chain([Depth::Infinite]);
    let curves = depths
        .map(|d| {
            let eps = a
                .iter()
                .map(|&x| epsilon_hat(x, d))
                .collect::<Result<_, _>>()?;
            Ok(EpsCurve {
                depth: d.into(),
                eps,
            })
        })
        .collect::<Result<_, fbc_core::Error>>()
        .map_err(text)?;
    serde_json::to_string(&EpsTable { a, curves }).map_err(text)
}

/// Capacity region of an erasure pair `{"user1": {"q", "pmf"}, "user2": ..}`.
#[wasm_bindgen]
pub fn erasure_region(pair: &str) -> Result<String, JsValue> {
    erasure_region_json(pair).map_err(|e| JsValue::from_str(&e))
}

/// Outer bound and threshold-assignment inner bound of a fading pair.
#[wasm_bindgen]
pub fn gaussian_curves(pair: &str, stripping: bool, points: usize) -> Result<String, JsValue> {
    gaussian_curves_json(pair, stripping, points).map_err(|e| JsValue::from_str(&e))
}

/// Detector crossover `min(1/2, eps_d(a))` for `d = 0..=max_depth` and no interference.
#[wasm_bindgen]
pub fn epsilon_curves(
    max_depth: u32,
    a_min: f64,
    a_max: f64,
    points: usize,
) -> Result<String, JsValue> {
    epsilon_curves_json(max_depth, a_min, a_max, points).map_err(|e| JsValue::from_str(&e))
}
