//! The iterative tiling loop.
//!
//! Stage `n` contracts the current relation `Fₙ₋₁`, builds a prepartition
//! of the quotient that is saturated and `pₙ`-packed within the λₙ-central
//! sets of ρ-ratio at least `Lₙ`, and joins its cells into `Fₙ`. The ratio
//! is measured in the quotient, where each class weighs its total. Tiles are
//! connected by construction and audited after every stage.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::averages::SetSummary;
use crate::graph_core::{quotient, Cocycle, EquivRel, Prepartition, RhoMeasure, WeightedGraph};
use crate::math::{abs, powi};
use crate::prepartitions::{packed_and_saturated, CentralFamily, Landscape, SearchBudget};
use crate::visibility::block;
use crate::{Error, Result};

/// `δ = ε² / (‖f‖∞ + 1)`: if averages land in `I_δ` or on one side of it
/// on all but δ of the mass, they land in `I_ε` on all but ε.
pub fn cutting_one_side_delta(eps: f64, sup_norm: f64) -> f64 {
    eps * eps / (sup_norm + 1.0)
}

/// `g` clipped from `f` with `‖f − g‖₁` below `(ε/2)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinfReduction {
    pub values: Vec<f64>,
    pub level: f64,
    /// `‖f − g‖₁`.
    pub tail: f64,
    pub budget: f64,
}

/// Clips `f` at the smallest attained level `|f(v)|` whose L¹ tail is below
/// `(ε/2)²`. Finite models are bounded, so such a level always exists.
pub fn linf_reduction(f: &[f64], mu: &RhoMeasure, eps: f64) -> LinfReduction {
    let budget = (eps / 2.0) * (eps / 2.0);
    let tail_at = |level: f64| -> f64 {
        f.iter()
            .enumerate()
            .map(|(v, &x)| mu.atom(v) * (abs(x) - level).max(0.0))
            .sum()
    };
    let mut levels: Vec<f64> = f.iter().map(|&x| abs(x)).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let top = levels.last().copied().unwrap_or(0.0);
    // The tail is nonincreasing in the level, so binary search works.
    let idx = levels.partition_point(|&l| tail_at(l) >= budget);
    let level = levels.get(idx).copied().unwrap_or(top);
    let values: Vec<f64> = f.iter().map(|&x| x.clamp(-level, level)).collect();
    LinfReduction {
        tail: tail_at(level),
        values,
        level,
        budget,
    }
}

/// `λₙ = 3⁻ⁿδ`, `Lₙ = 4ⁿ`, `pₙ = λₙ₊₂ / (‖f‖∞ + λₙ₊₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub delta: f64,
    pub sup_norm: f64,
}

impl Schedule {
    pub fn new(eps: f64, sup_norm: f64) -> Self {
        Schedule {
            delta: cutting_one_side_delta(eps, sup_norm),
            sup_norm,
        }
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.delta / powi(3.0, n as i32)
    }

    pub fn min_ratio(&self, n: usize) -> f64 {
        powi(4.0, n as i32)
    }

    pub fn pack_ratio(&self, n: usize) -> f64 {
        self.lambda(n + 2) / (self.sup_norm + self.lambda(n + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TilingConfig {
    pub eps: f64,
    pub max_stages: usize,
    pub budget: SearchBudget,
    /// Cap on pack/saturate alternations inside one stage.
    pub max_rounds: usize,
}

impl Default for TilingConfig {
    fn default() -> Self {
        TilingConfig {
            eps: 0.05,
            max_stages: 12,
            budget: SearchBudget::default(),
            max_rounds: 64,
        }
    }
}

/// Per-stage convergence statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub stage: usize,
    pub lambda: f64,
    pub min_ratio: f64,
    pub pack_ratio: f64,
    /// μ-mass of interior vertices whose tile average is within ε of `∫f dμ`.
    pub mass_within_eps: f64,
    /// μ-mass of tiles touching the truncation frontier, left out above.
    pub frontier_mass: f64,
    /// μ-mass of the union of all cells so far.
    pub covered_mass: f64,
    pub new_cells: usize,
    /// Tiles are the classes inside the covered region.
    pub tiles: usize,
    pub max_tile: usize,
    pub mean_tile: f64,
    /// `histogram[i]` counts tiles with `2^i ≤ size < 2^(i+1)`.
    pub histogram: Vec<usize>,
    /// Every component was searched exhaustively.
    pub exhaustive: bool,
}

impl StageStats {
    /// Whether `1 − ε` of the interior mass has its tile average in `I_ε`.
    /// Masses are float sums, so a rounding slack of `1e-12` is allowed.
    pub fn reached(&self, eps: f64) -> bool {
        self.mass_within_eps + 1e-12 >= (1.0 - eps) * (1.0 - self.frontier_mass)
    }
}

/// A component of a stalled stage, with the finite analogue of the
/// flow-away bound `ρ(P ∖ S) ≥ (2/13)·ρ(S ∩ P)`, where `P` is the tiled
/// region and `S` the vertices whose tile average misses `I_ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAwayCheck {
    pub component: usize,
    pub good_mass: f64,
    pub bad_mass: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StallDiagnostic {
    pub stage: usize,
    /// Components still carrying mass outside `I_ε`.
    pub components: Vec<usize>,
    pub flow_checks: Vec<FlowAwayCheck>,
}

/// Runs the loop one stage at a time.
pub struct Tiler<'a> {
    graph: &'a WeightedGraph,
    rho: &'a Cocycle,
    mu: &'a RhoMeasure,
    frontier: Option<&'a [bool]>,
    config: TilingConfig,
    target: f64,
    centered: Vec<f64>,
    reduction: LinfReduction,
    prepared: Vec<f64>,
    schedule: Schedule,
    relation: EquivRel,
    covered: Vec<bool>,
    prepartitions: Vec<Prepartition>,
    stage: usize,
    finished: bool,
}

impl<'a> Tiler<'a> {
    /// `frontier` marks truncation-boundary vertices; tiles touching it are
    /// reported separately.
    pub fn new(
        graph: &'a WeightedGraph,
        rho: &'a Cocycle,
        mu: &'a RhoMeasure,
        f: &[f64],
        frontier: Option<&'a [bool]>,
        config: TilingConfig,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if f.len() != n || rho.len() != n || mu.atoms().len() != n {
            return Err(Error::MalformedGraph(
                "function, cocycle and measure sizes differ".into(),
            ));
        }
        if let Some(v) = f.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { vertex: v });
        }
        let target = mu.integral(f);
        let centered: Vec<f64> = f.iter().map(|x| x - target).collect();
        let reduction = linf_reduction(&centered, mu, config.eps);
        let mut prepared = reduction.values.clone();
        if reduction.tail > 0.0 {
            let shift = mu.integral(&prepared);
            prepared.iter_mut().for_each(|x| *x -= shift);
        }
        let sup = prepared.iter().fold(0.0f64, |m, &x| m.max(abs(x)));
        Ok(Tiler {
            graph,
            rho,
            mu,
            frontier,
            schedule: Schedule::new(config.eps, sup),
            config,
            target,
            centered,
            reduction,
            prepared,
            relation: EquivRel::identity(n),
            covered: vec![false; n],
            prepartitions: Vec::new(),
            stage: 0,
            finished: false,
        })
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn reduction(&self) -> &LinfReduction {
        &self.reduction
    }

    /// `∫f dμ` of the input.
    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn relation(&self) -> &EquivRel {
        &self.relation
    }

    pub fn prepartitions(&self) -> &[Prepartition] {
        &self.prepartitions
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Runs the next stage. `None` once the target was reached or the stage
    /// budget is spent.
    pub fn step(&mut self) -> Result<Option<StageStats>> {
        if self.finished || self.stage >= self.config.max_stages {
            self.finished = true;
            return Ok(None);
        }
        self.stage += 1;
        let n = self.stage;
        let lambda = self.schedule.lambda(n);
        let min_ratio = self.schedule.min_ratio(n);
        let pack_ratio = self.schedule.pack_ratio(n);

        let q = quotient(self.graph, self.rho, &self.prepared, &self.relation)?;
        let family = CentralFamily { lambda, min_ratio };
        let land = Landscape {
            graph: &q.graph,
            cocycle: &q.cocycle,
            values: &q.values,
        };
        let report = packed_and_saturated(&family, pack_ratio, &land, self.config.budget, self.config.max_rounds)?;

        let total = self.graph.vertex_count();
        let cells: Vec<Vec<usize>> = report
            .prepartition
            .cells()
            .iter()
            .map(|cell| {
                let mut out: Vec<usize> = cell
                    .iter()
                    .flat_map(|&c| self.relation.class(c).iter().copied())
                    .collect();
                out.sort_unstable();
                out
            })
            .collect();
        let prep = Prepartition::from_cells(total, cells)?;
        let before = self.relation.class_count();
        let covered_before = self.covered.iter().filter(|&&c| c).count();
        for v in prep.domain() {
            self.covered[v] = true;
        }
        self.relation = self.relation.join(&prep.relation());
        self.relation.check_g_connected(self.graph)?;
        let new_cells = prep.len();
        self.prepartitions.push(prep);

        let mut stats = self.statistics()?;
        stats.stage = n;
        stats.lambda = lambda;
        stats.min_ratio = min_ratio;
        stats.pack_ratio = pack_ratio;
        stats.new_cells = new_cells;
        stats.exhaustive = report.exhaustive;

        if stats.reached(self.config.eps) {
            self.finished = true;
        } else if self.relation.class_count() == before && self.covered.iter().filter(|&&c| c).count() == covered_before
        {
            self.finished = true;
            return Err(Error::Stalled(Box::new(self.stall_diagnostic(n)?)));
        }
        Ok(Some(stats))
    }

    fn is_frontier_class(&self, class: &[usize]) -> bool {
        self.frontier.is_some_and(|fr| class.iter().any(|&v| fr[v]))
    }

    /// Statistics of the current relation; stage fields are left zero.
    pub fn statistics(&self) -> Result<StageStats> {
        let eps = self.config.eps;
        let mut within = 0.0;
        let mut frontier_mass = 0.0;
        let mut covered_mass = 0.0;
        let mut sizes = Vec::new();
        for class in self.relation.classes() {
            let mass = self.mu.mass(class);
            if self.covered[class[0]] {
                covered_mass += mass;
                sizes.push(class.len());
            }
            if self.is_frontier_class(class) {
                frontier_mass += mass;
                continue;
            }
            let a = SetSummary::of(&self.centered, self.rho, class)?.average();
            if abs(a) <= eps {
                within += mass;
            }
        }
        let mut histogram = Vec::new();
        for &s in &sizes {
            let bucket = (usize::BITS - 1 - s.leading_zeros()) as usize;
            if histogram.len() <= bucket {
                histogram.resize(bucket + 1, 0);
            }
            histogram[bucket] += 1;
        }
        Ok(StageStats {
            stage: self.stage,
            lambda: 0.0,
            min_ratio: 0.0,
            pack_ratio: 0.0,
            mass_within_eps: within.min(1.0),
            frontier_mass,
            covered_mass: covered_mass.min(1.0),
            new_cells: 0,
            tiles: sizes.len(),
            max_tile: sizes.iter().copied().max().unwrap_or(0),
            mean_tile: if sizes.is_empty() {
                0.0
            } else {
                sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
            },
            histogram,
            exhaustive: true,
        })
    }

    fn stall_diagnostic(&self, stage: usize) -> Result<StallDiagnostic> {
        let eps = self.config.eps;
        let comps = self.graph.component_count();
        let mut good = vec![0.0; comps];
        let mut bad = vec![0.0; comps];
        let mut missing = vec![false; comps];
        for class in self.relation.classes() {
            if self.is_frontier_class(class) {
                continue;
            }
            let c = self.graph.component_of(class[0]);
            let miss = abs(SetSummary::of(&self.centered, self.rho, class)?.average()) > eps;
            missing[c] |= miss;
            if self.covered[class[0]] {
                let m = self.mu.mass(class);
                if miss {
                    bad[c] += m;
                } else {
                    good[c] += m;
                }
            }
        }
        let components: Vec<usize> = (0..comps).filter(|&c| missing[c]).collect();
        let flow_checks = components
            .iter()
            .map(|&c| FlowAwayCheck {
                component: c,
                good_mass: good[c],
                bad_mass: bad[c],
                holds: good[c] >= 2.0 / 13.0 * bad[c],
            })
            .collect();
        Ok(StallDiagnostic {
            stage,
            components,
            flow_checks,
        })
    }
}

/// Everything a full run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct TilingOutcome {
    pub stats: Vec<StageStats>,
    pub relation: EquivRel,
    pub prepartitions: Vec<Prepartition>,
    pub reached: bool,
    pub stall: Option<StallDiagnostic>,
}

/// Steps a [`Tiler`] to completion. A stall ends the run and is recorded in
/// the outcome rather than returned as an error.
pub fn run_tiling(
    graph: &WeightedGraph,
    rho: &Cocycle,
    mu: &RhoMeasure,
    f: &[f64],
    frontier: Option<&[bool]>,
    config: TilingConfig,
) -> Result<TilingOutcome> {
    let eps = config.eps;
    let mut tiler = Tiler::new(graph, rho, mu, f, frontier, config)?;
    let mut stats = Vec::new();
    let mut stall = None;
    loop {
        match tiler.step() {
            Ok(Some(s)) => stats.push(s),
            Ok(None) => break,
            Err(Error::Stalled(diag)) => {
                stall = Some(*diag);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let reached = stats.last().is_some_and(|s| s.reached(eps));
    Ok(TilingOutcome {
        stats,
        relation: tiler.relation.clone(),
        prepartitions: tiler.prepartitions.clone(),
        reached,
        stall,
    })
}

/// Off-domain visibility of a prepartition.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityReport {
    /// Largest ρ-ratio of a 1-block of `G` restricted to the complement of
    /// the domain, per component (0 when the component is fully covered).
    pub max_block_ratio: Vec<f64>,
    /// Components whose values exceed `λ` on both sides somewhere.
    pub spills: Vec<bool>,
    /// Components with an off-domain block of ratio at least `L` although
    /// they spill over both sides.
    pub flagged: Vec<usize>,
}

/// Measures how visible the complement of `dom(𝒫)` is. A packed
/// prepartition within the λ-central sets of ratio `L` should leave only
/// off-domain blocks of ratio below `L` in components where `f` exceeds
/// `λ` on both sides.
pub fn finitizing_visibility_check(
    graph: &WeightedGraph,
    rho: &Cocycle,
    f: &[f64],
    prep: &Prepartition,
    lambda: f64,
    min_ratio: f64,
) -> Result<VisibilityReport> {
    let n = graph.vertex_count();
    let off: Vec<usize> = (0..n).filter(|&v| !prep.in_domain(v)).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in off.iter().enumerate() {
        local[v] = i;
    }
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .into_iter()
        .filter(|&(u, v)| local[u] != usize::MAX && local[v] != usize::MAX)
        .map(|(u, v)| (local[u], local[v]))
        .collect();
    let sub = WeightedGraph::from_edges(off.len(), &edges)?;
    let weights: Vec<f64> = off.iter().map(|&v| rho.log_weight(v)).collect();
    let sub_rho = Cocycle::new(&sub, &weights)?;
    let comps = graph.component_count();
    let mut max_block_ratio = vec![0.0f64; comps];
    for i in 0..off.len() {
        let b = block(&sub, &sub_rho, i, 1.0)?;
        let ratio = sub_rho.rho_max_ratio(&b.vertices)?;
        let c = graph.component_of(off[i]);
        max_block_ratio[c] = max_block_ratio[c].max(ratio);
    }
    let mut high = vec![false; comps];
    let mut low = vec![false; comps];
    for v in 0..n {
        let c = graph.component_of(v);
        high[c] |= f[v] > lambda;
        low[c] |= f[v] < -lambda;
    }
    let spills: Vec<bool> = (0..comps).map(|c| high[c] && low[c]).collect();
    let flagged = (0..comps)
        .filter(|&c| spills[c] && max_block_ratio[c] >= min_ratio)
        .collect();
    Ok(VisibilityReport {
        max_block_ratio,
        spills,
        flagged,
    })
}
