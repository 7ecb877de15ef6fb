use std::path::Path;

use fbc_core::bes::{
    achievable_region, example_assignments, useful_levels, AssignmentStyle, Depth, LevelAssignment,
};
use fbc_core::erasure::{capacity_region, partition_levels, ErasurePmf};
use fbc_core::fading::FadingDist;
use fbc_core::gap::{empirical_gap, minimize_gap, universal_gap_auto, GapReport, QuantizationGrid};
use fbc_core::gaussian::{log_grid, outer_sweep, PartitionGrid};
use fbc_core::region::{RatePair, RateRegionBoundary};
use fbc_core::sim::{
    simulate_bes_detector, simulate_bes_link, simulate_erasure_scheme, SimReport, MAX_SIM_LEVEL,
};
use serde::{Deserialize, Serialize};

use crate::io::{read_json, write_output, CliError};
use crate::{
    BesArgs, Command, ErasureArgs, GapArgs, GaussianArgs, OmegaGrid, Scenario, SimulateArgs, Style,
    Switch,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Pair<T> {
    user1: T,
    user2: T,
}

/// Everything `fbc gap` can print.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapOutput {
    pub gamma_star: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_universal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<GapReport>,
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::ErasureRegion(a) => erasure_region(a),
        Command::GaussianOuter(a) => gaussian_outer(a),
        Command::BesInner(a) => bes_inner(a),
        Command::Gap(a) => gap(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn weights(g: &OmegaGrid) -> Result<Vec<f64>, CliError> {
    if !(g.omega_min > 0.0 && g.omega_max >= g.omega_min && g.omega_max.is_finite())
        || g.omega_points < 2
    {
        return Err(CliError::Usage(format!(
            "need 0 < omega-min <= omega-max and at least 2 points, got [{}, {}] x {}",
            g.omega_min, g.omega_max, g.omega_points
        )));
    }
    Ok(log_grid(g.omega_min, g.omega_max, g.omega_points))
}

fn erasure_region(a: ErasureArgs) -> Result<(), CliError> {
    let pair: Pair<ErasurePmf> = read_json(&a.input)?;
    let region = capacity_region(&pair.user1, &pair.user2)?;
    log::info!("{} extreme points", region.extreme_points.len());
    let mut buf = Vec::new();
    region.write_csv(&mut buf).expect("writing to memory");
    write_output(a.output.as_deref(), &buf)
}

fn gaussian_rows(rows: &[(f64, RatePair, &str)], scale: f64) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["omega", "R1", "R2", "kind"])
        .expect("writing to memory");
    for (omega, p, kind) in rows {
        w.write_record([
            omega.to_string(),
            (p.r1 * scale + 0.0).to_string(),
            (p.r2 * scale + 0.0).to_string(),
            kind.to_string(),
        ])
        .expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn scale_for(real: bool) -> f64 {
    if real {
        0.5
    } else {
        1.0
    }
}

fn gaussian_outer(a: GaussianArgs) -> Result<(), CliError> {
    let pair: Pair<FadingDist> = read_json(&a.input)?;
    let cfg = a.quad.config()?;
    let ws = weights(&a.grid)?;
    let pts = outer_sweep(
        &pair.user1,
        &pair.user2,
        &ws,
        &PartitionGrid::default(),
        &cfg,
    )?;
    let rows: Vec<_> = pts.iter().map(|p| (p.omega, p.rates(), "outer")).collect();
    write_output(
        a.output.as_deref(),
        &gaussian_rows(&rows, scale_for(a.real_channel)),
    )
}

/// Region vertex maximizing `R1 + omega R2`.
fn support_point(region: &RateRegionBoundary, omega: f64) -> RatePair {
    region
        .rates()
        .into_iter()
        .max_by(|x, y| x.weighted(omega).total_cmp(&y.weighted(omega)))
        .unwrap_or_default()
}

fn bes_inner(a: BesArgs) -> Result<(), CliError> {
    let pair: Pair<FadingDist> = read_json(&a.input)?;
    let cfg = a.quad.config()?;
    let ws = weights(&a.grid)?;
    let assigns: Vec<LevelAssignment> = match &a.assignment {
        Some(path) => read_json(path)?,
        None => {
            let style = match a.style {
                Style::Threshold => AssignmentStyle::Threshold,
                Style::AwgnRayleigh1 => AssignmentStyle::AwgnRayleighInner1,
                Style::AwgnRayleigh2 => AssignmentStyle::AwgnRayleighInner2,
            };
            example_assignments(&pair.user1, &pair.user2, style, &cfg)?
        }
    };
    if assigns.is_empty() {
        return Err(CliError::Usage("no level assignments given".into()));
    }
    let stripping = a.stripping == Switch::On;
    log::info!("{} assignments, stripping {stripping}", assigns.len());
    let region = achievable_region(&pair.user1, &pair.user2, &assigns, stripping, &cfg)?;
    let kind = if stripping { "inner-rs" } else { "inner-nors" };
    let mut rows: Vec<_> = ws
        .iter()
        .map(|&w| (w, support_point(&region, w), kind))
        .collect();
    if a.with_outer {
        let pts = outer_sweep(
            &pair.user1,
            &pair.user2,
            &ws,
            &PartitionGrid::default(),
            &cfg,
        )?;
        rows.extend(pts.iter().map(|p| (p.omega, p.rates(), "outer")));
    }
    write_output(
        a.output.as_deref(),
        &gaussian_rows(&rows, scale_for(a.real_channel)),
    )
}

fn halve(r: &mut GapReport) {
    r.delta_universal *= 0.5;
    for g in r.max_gap.iter_mut() {
        *g *= 0.5;
    }
    for row in &mut r.per_omega {
        for v in [
            &mut row.outer,
            &mut row.inner,
            &mut row.inner_floor,
            &mut row.gap,
        ] {
            v[0] *= 0.5;
            v[1] *= 0.5;
        }
    }
}

fn gap(a: GapArgs) -> Result<(), CliError> {
    let (gamma_star, delta) = minimize_gap(0.5, 50.0)?;
    let mut out = GapOutput {
        gamma_star,
        delta,
        gamma: None,
        delta_universal: None,
        report: None,
    };
    if let Some(g) = a.gamma {
        out.gamma = Some(g);
        out.delta_universal = Some(universal_gap_auto(g)?);
    }
    if let Some(path) = &a.input {
        let pair: Pair<FadingDist> = read_json(path)?;
        let cfg = a.quad.config()?;
        let gamma = a.gamma.unwrap_or(gamma_star);
        let grid = QuantizationGrid::for_pair(gamma, &pair.user1, &pair.user2)?;
        let mut report = empirical_gap(&pair.user1, &pair.user2, &weights(&a.grid)?, &grid, &cfg)?;
        if a.real_channel {
            halve(&mut report);
        }
        out.report = Some(report);
    }
    if a.real_channel {
        out.delta *= 0.5;
        out.delta_universal = out.delta_universal.map(|d| d * 0.5);
    }
    let mut body = serde_json::to_vec_pretty(&out).expect("serializable");
    body.push(b'\n');
    write_output(a.output.as_deref(), &body)
}

fn parse_depth(s: &str) -> Result<Depth, CliError> {
    match s {
        "inf" | "infinite" => Ok(Depth::Infinite),
        _ => s
            .parse::<u32>()
            .map(Depth::new)
            .map_err(|_| CliError::Usage(format!("bad depth {s:?}"))),
    }
}

fn need_input(p: &Option<std::path::PathBuf>) -> Result<&Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage("this scenario needs --input".into()))
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let reports: Vec<SimReport> = match a.scenario {
        Scenario::Erasure => {
            let pair: Pair<ErasurePmf> = read_json(need_input(&a.input)?)?;
            let part = partition_levels(&pair.user1, &pair.user2, a.omega)?;
            let (r1, r2) =
                simulate_erasure_scheme(&pair.user1, &pair.user2, &part, a.trials, a.seed)?;
            vec![r1, r2]
        }
        Scenario::Detector => {
            let snr = a
                .snr
                .ok_or_else(|| CliError::Usage("the detector scenario needs --snr".into()))?;
            let r = simulate_bes_detector(snr, a.level, parse_depth(&a.depth)?, a.trials, a.seed)?;
            vec![r.strict, r.actual]
        }
        Scenario::Link => {
            let pair: Pair<FadingDist> = read_json(need_input(&a.input)?)?;
            let cfg = a.quad.config()?;
            let assign = match &a.assignment {
                Some(path) => read_json(path)?,
                None => {
                    let top =
                        useful_levels(&pair.user1, &cfg)?.max(useful_levels(&pair.user2, &cfg)?);
                    LevelAssignment::threshold(a.n2, top.min(MAX_SIM_LEVEL).max(a.n2))?
                }
            };
            let s = if a.user == 2 {
                &pair.user2
            } else {
                &pair.user1
            };
            simulate_bes_link(
                s,
                &assign,
                a.user,
                a.stripping == Switch::On,
                a.trials,
                a.seed,
                &cfg,
            )?
            .into_iter()
            .map(|row| {
                let mut r = row.report;
                r.metadata.insert("bound".into(), row.bound.to_string());
                r
            })
            .collect()
        }
    };
    let mut body = Vec::new();
    for r in &reports {
        serde_json::to_writer(&mut body, r).expect("serializable");
        body.push(b'\n');
    }
    write_output(a.output.as_deref(), &body)
}
