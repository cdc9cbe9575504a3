//! End-to-end experiments on generated models.

use std::time::Instant;

use tiler_core::averages::SetSummary;
use tiler_core::tiling::{Tiler, TilingConfig};
use tiler_core::{Cocycle, EquivRel, Error, RhoMeasure, WeightedGraph};

use crate::config::Config;
use crate::error::{LabError, LabResult};
use crate::models::{generate_model, Model};
use crate::report::{RunReport, StageRecord, StallRecord};

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// Steps a tiler to the end, calling `observe` after each stage.
fn drive(
    tiler: &mut Tiler<'_>,
    mut observe: impl FnMut(&Tiler<'_>, &mut StageRecord) -> LabResult<()>,
) -> LabResult<(Vec<StageRecord>, Option<StallRecord>)> {
    let mut records = Vec::new();
    let mut clock = Instant::now();
    loop {
        match tiler.step() {
            Ok(Some(stats)) => {
                let mut rec = StageRecord::new(&stats, elapsed_ms(clock));
                observe(tiler, &mut rec)?;
                records.push(rec);
                clock = Instant::now();
            }
            Ok(None) => return Ok((records, None)),
            Err(Error::Stalled(diag)) => return Ok((records, Some(StallRecord::from(&*diag)))),
            Err(e) => return Err(e.into()),
        }
    }
}

/// Tiles `f` on an arbitrary graph.
pub fn tile_graph(
    graph: &WeightedGraph,
    rho: &Cocycle,
    mu: &RhoMeasure,
    f: &[f64],
    frontier: Option<&[bool]>,
    config: &Config,
    command: &str,
) -> LabResult<RunReport> {
    let start = Instant::now();
    let tiling = config.tiling();
    let mut tiler = Tiler::new(graph, rho, mu, f, frontier, tiling)?;
    let (stages, stall) = drive(&mut tiler, |_, _| Ok(()))?;
    let reached = stages.last().is_some_and(|s| reached(s, tiling.eps));
    Ok(RunReport {
        command: command.into(),
        config: config.clone(),
        seed: config.model.seed,
        vertices: graph.vertex_count(),
        eps: tiling.eps,
        integral: mu.integral(f),
        exact_integral: None,
        stages,
        reached,
        stall,
        max_ratio_error: None,
        wall_ms: elapsed_ms(start),
        tiles: tiler.relation().classes().to_vec(),
    })
}

fn reached(s: &StageRecord, eps: f64) -> bool {
    s.ratio_mass.unwrap_or(s.mass_within_eps) + 1e-12 >= (1.0 - eps) * (1.0 - s.frontier_mass)
}

/// Generates the configured model and tiles its function.
pub fn ergodic_run(config: &Config) -> LabResult<RunReport> {
    let model = generate_model(&config.model)?;
    ergodic_run_on(&model, config)
}

pub fn ergodic_run_on(model: &Model, config: &Config) -> LabResult<RunReport> {
    let mut report = tile_graph(
        &model.graph,
        &model.cocycle,
        &model.mu,
        &model.f,
        model.frontier.as_deref(),
        config,
        "ergodic-run",
    )?;
    report.exact_integral = model.exact_integral;
    Ok(report)
}

/// Inputs of a ratio experiment in the rescaled picture.
#[derive(Debug, Clone)]
pub struct RatioSetup {
    /// `σ(x, y) = g(x)ρ(x, y)g(y)⁻¹`.
    pub sigma: Cocycle,
    /// `g·μ / ∫g dμ`, which is σ-invariant.
    pub nu: RhoMeasure,
    /// `f / g`.
    pub h: Vec<f64>,
    /// `∫f dμ / ∫g dμ`.
    pub target: f64,
}

/// Builds the rescaled cocycle, measure and quotient function. When `g` is
/// constant the cocycle and measure are left untouched, since rescaling by
/// a constant changes neither tile averages nor ν.
pub fn ratio_setup(
    graph: &WeightedGraph,
    rho: &Cocycle,
    mu: &RhoMeasure,
    f: &[f64],
    g: &[f64],
) -> LabResult<RatioSetup> {
    if g.len() != f.len() || f.len() != graph.vertex_count() {
        return Err(LabError::Config("f and g must have one value per vertex".into()));
    }
    if let Some(v) = g.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::BadDenominator { vertex: v, value: g[v] }.into());
    }
    let target = mu.integral(f) / mu.integral(g);
    let h: Vec<f64> = f.iter().zip(g).map(|(a, b)| a / b).collect();
    if g.iter().all(|&x| x == g[0]) {
        return Ok(RatioSetup {
            sigma: rho.clone(),
            nu: mu.clone(),
            h,
            target,
        });
    }
    let log_g: Vec<f64> = g.iter().map(|x| x.ln()).collect();
    let sigma = rho.rescaled(graph, &log_g)?;
    let total = mu.integral(g);
    let atoms = mu.atoms().iter().zip(g).map(|(m, x)| m * x / total).collect();
    Ok(RatioSetup {
        sigma,
        nu: RhoMeasure::from_atoms_unchecked(atoms),
        h,
        target,
    })
}

/// `Σ f(y)ρ(y, x) / Σ g(y)ρ(y, x)` over one tile.
pub fn tile_ratio(rho: &Cocycle, f: &[f64], g: &[f64], tile: &[usize]) -> LabResult<f64> {
    let num = SetSummary::of(f, rho, tile)?;
    let den = SetSummary::of(g, rho, tile)?;
    // Both sums are scaled by the same heaviest vertex of the tile.
    Ok(num.weighted_sum / den.weighted_sum)
}

/// μ-mass of interior tiles whose ratio is within `tol` of `target`, and
/// the largest ratio error over interior tiles.
pub fn ratio_statistics(
    rho: &Cocycle,
    mu: &RhoMeasure,
    f: &[f64],
    g: &[f64],
    relation: &EquivRel,
    frontier: Option<&[bool]>,
    target: f64,
    tol: f64,
) -> LabResult<(f64, f64)> {
    let mut within = 0.0;
    let mut worst = 0.0f64;
    for class in relation.classes() {
        if frontier.is_some_and(|fr| class.iter().any(|&v| fr[v])) {
            continue;
        }
        let err = (tile_ratio(rho, f, g, class)? - target).abs();
        worst = worst.max(err);
        if err <= tol {
            within += mu.mass(class);
        }
    }
    Ok((within.min(1.0), worst))
}

/// Tiles `f/g` under the rescaled cocycle and reports, per stage, the
/// μ-mass of tiles whose ratio `Σfρ / Σgρ` is within ε of `∫f / ∫g`.
pub fn ratio_experiment(model: &Model, f: &[f64], g: &[f64], config: &Config) -> LabResult<RunReport> {
    let start = Instant::now();
    let setup = ratio_setup(&model.graph, &model.cocycle, &model.mu, f, g)?;
    let tiling: TilingConfig = config.tiling();
    let frontier = model.frontier.as_deref();
    let mut tiler = Tiler::new(&model.graph, &setup.sigma, &setup.nu, &setup.h, frontier, tiling)?;
    let mut worst = 0.0;
    let (stages, stall) = drive(&mut tiler, |t, rec| {
        let (mass, err) = ratio_statistics(
            &model.cocycle,
            &model.mu,
            f,
            g,
            t.relation(),
            frontier,
            setup.target,
            tiling.eps,
        )?;
        rec.ratio_mass = Some(mass);
        worst = err;
        Ok(())
    })?;
    let reached = stages.last().is_some_and(|s| reached(s, tiling.eps));
    Ok(RunReport {
        command: "ratio-run".into(),
        config: config.clone(),
        seed: config.model.seed,
        vertices: model.graph.vertex_count(),
        eps: tiling.eps,
        integral: setup.target,
        exact_integral: None,
        stages,
        reached,
        stall,
        max_ratio_error: Some(worst),
        wall_ms: elapsed_ms(start),
        tiles: tiler.relation().classes().to_vec(),
    })
}
