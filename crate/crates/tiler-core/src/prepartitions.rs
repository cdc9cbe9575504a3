//! p-packs, packed and saturated prepartitions, coherent limits.
//!
//! Components with at most [`SearchBudget::exhaustive_limit`] vertices are
//! searched exhaustively, so results there are exact. Larger components use
//! best-first growth from every free vertex, capped at
//! [`SearchBudget::max_units`] added units; those results are heuristic and
//! reports say so.

use alloc::vec;
use alloc::vec::Vec;

use crate::averages::{classify_value, LambdaSign, SetSummary};
use crate::graph_core::{quotient, Cocycle, DisjointSets, EquivRel, Prepartition, RhoMeasure, WeightedGraph};
use crate::math::{abs, ln};
use crate::{Error, Result};

/// A graph with its cocycle and a vertex function.
#[derive(Debug, Clone, Copy)]
pub struct Landscape<'a> {
    pub graph: &'a WeightedGraph,
    pub cocycle: &'a Cocycle,
    pub values: &'a [f64],
}

/// Structural properties a caller asserts about a family. They are
/// recorded, not checked.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FamilyFlags {
    pub finitely_based: bool,
    pub upward_continuous: bool,
    /// One ε for the whole family, where the definition allows one per set.
    pub rho_approximable: Option<f64>,
}

/// A family of connected vertex sets, given by a membership oracle.
pub trait CellFamily {
    /// Membership of a nonempty connected set inside one component, given
    /// its summary. `set` is in no particular order.
    fn admits(&self, land: &Landscape<'_>, set: &[usize], summary: &SetSummary) -> bool;

    /// Preference used when growing candidates; smaller is tried first.
    fn growth_score(&self, _summary: &SetSummary) -> f64 {
        0.0
    }

    fn flags(&self) -> FamilyFlags {
        FamilyFlags::default()
    }

    /// True when [`CellFamily::admits`] reads only the summary. The search
    /// then skips materializing candidates and passes an empty `set`.
    fn summary_only(&self) -> bool {
        false
    }
}

impl<T: CellFamily + ?Sized> CellFamily for &T {
    fn admits(&self, land: &Landscape<'_>, set: &[usize], summary: &SetSummary) -> bool {
        (**self).admits(land, set, summary)
    }

    fn growth_score(&self, summary: &SetSummary) -> f64 {
        (**self).growth_score(summary)
    }

    fn flags(&self) -> FamilyFlags {
        (**self).flags()
    }

    fn summary_only(&self) -> bool {
        (**self).summary_only()
    }
}

/// Every connected set.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllConnected;

impl CellFamily for AllConnected {
    fn admits(&self, _: &Landscape<'_>, _: &[usize], _: &SetSummary) -> bool {
        true
    }

    fn summary_only(&self) -> bool {
        true
    }
}

/// Single vertices.
#[derive(Debug, Clone, Copy, Default)]
pub struct Singletons;

impl CellFamily for Singletons {
    fn admits(&self, _: &Landscape<'_>, _: &[usize], summary: &SetSummary) -> bool {
        summary.len == 1
    }

    fn summary_only(&self) -> bool {
        true
    }
}

/// Connected sets with exactly `k` vertices.
#[derive(Debug, Clone, Copy)]
pub struct ExactSize(pub usize);

impl CellFamily for ExactSize {
    fn admits(&self, _: &Landscape<'_>, _: &[usize], summary: &SetSummary) -> bool {
        summary.len == self.0
    }

    fn summary_only(&self) -> bool {
        true
    }
}

/// λ-central connected sets with ρ-ratio at least `min_ratio`: the family
/// `𝒮(f, λ, L)` of the landscape it is evaluated on.
#[derive(Debug, Clone, Copy)]
pub struct CentralFamily {
    pub lambda: f64,
    pub min_ratio: f64,
}

impl CellFamily for CentralFamily {
    fn admits(&self, _: &Landscape<'_>, _: &[usize], summary: &SetSummary) -> bool {
        summary.rho_max() >= self.min_ratio && classify_value(summary.average(), self.lambda) == LambdaSign::Central
    }

    fn growth_score(&self, summary: &SetSummary) -> f64 {
        abs(summary.average())
    }

    fn summary_only(&self) -> bool {
        true
    }
}

/// A family given by a closure over the landscape and the vertex set.
pub struct PredicateFamily<F>(pub F);

impl<F: Fn(&Landscape<'_>, &[usize]) -> bool> CellFamily for PredicateFamily<F> {
    fn admits(&self, land: &Landscape<'_>, set: &[usize], _: &SetSummary) -> bool {
        (self.0)(land, set)
    }
}

/// Full membership test: nonempty, one component, connected, admitted.
pub fn family_contains<F: CellFamily + ?Sized>(family: &F, land: &Landscape<'_>, set: &[usize]) -> bool {
    if set.is_empty() || land.graph.common_component(set).is_err() {
        return false;
    }
    if !land.graph.is_connected_set(set) {
        return false;
    }
    match SetSummary::of(land.values, land.cocycle, set) {
        Ok(summary) => family.admits(land, set, &summary),
        Err(_) => false,
    }
}

/// Witness that a set is a p-pack over a prepartition.
#[derive(Debug, Clone, PartialEq)]
pub struct PackCertificate {
    /// Sorted vertices of the pack.
    pub set: Vec<usize>,
    /// Cells of the prepartition inside the pack, by smallest vertex.
    pub cells: Vec<Vec<usize>>,
    /// `ρ(A ∖ dom)` relative to the heaviest vertex of `A`.
    pub fresh_mass: f64,
    /// `ρ(A ∩ dom)` in the same reference.
    pub covered_mass: f64,
}

/// Certificate iff `set` is `E(𝒫)`-invariant and `ρ(A∖dom) ≥ p·ρ(A∩dom)`.
pub fn is_p_pack(set: &[usize], prep: &Prepartition, p: f64, rho: &Cocycle) -> Option<PackCertificate> {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mass = rho.mass(&sorted).ok()?;
    if !prep.is_invariant(&sorted) {
        return None;
    }
    let mut fresh = 0.0;
    let mut covered = 0.0;
    for &v in &sorted {
        let m = crate::math::exp(rho.log_weight(v) - mass.log_max);
        if prep.in_domain(v) {
            covered += m;
        } else {
            fresh += m;
        }
    }
    if fresh == 0.0 || fresh < p * covered {
        return None;
    }
    let mut cells: Vec<Vec<usize>> = prep
        .cells_meeting(&sorted)
        .into_iter()
        .map(|c| prep.cell(c).to_vec())
        .collect();
    cells.sort_unstable_by_key(|c| c[0]);
    Some(PackCertificate {
        set: sorted,
        cells,
        fresh_mass: fresh,
        covered_mass: covered,
    })
}

/// Limits for the pack and extension searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Components up to this many vertices are searched exhaustively.
    pub exhaustive_limit: usize,
    /// Units (free vertices or whole cells) a heuristic candidate may add.
    pub max_units: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            exhaustive_limit: 12,
            max_units: 64,
        }
    }
}

/// A prepartition and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepartitionReport {
    pub prepartition: Prepartition,
    /// True when every component was searched exhaustively.
    pub exhaustive: bool,
    /// Number of accepted packs or extensions.
    pub replacements: usize,
}

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Vertex(usize),
    Cell(usize),
}

#[derive(Debug, Clone)]
struct CellData {
    /// Unsorted members.
    vertices: Vec<usize>,
    /// Members with a neighbor outside the cell.
    boundary: Vec<usize>,
    min_vertex: usize,
    summary: SetSummary,
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    /// First prefix that is a p-pack in the family; `ln p`.
    Pack(f64),
    /// Largest prefix in the family, adding free vertices only.
    Extend,
}

/// Candidate grown by [`Workspace::grow`].
struct Candidate {
    units: Vec<Unit>,
}

/// Mutable prepartition tuned for repeated merging: cells merge small into
/// large, and only cell boundaries are scanned for neighbors.
struct Workspace<'a, F: CellFamily + ?Sized> {
    land: Landscape<'a>,
    family: &'a F,
    budget: SearchBudget,
    cell_of: Vec<usize>,
    cells: Vec<Option<CellData>>,
    vertex_mark: Vec<u32>,
    cell_mark: Vec<u32>,
    vertex_seen: Vec<u32>,
    cell_seen: Vec<u32>,
    epoch: u32,
    replacements: usize,
}

impl<'a, F: CellFamily + ?Sized> Workspace<'a, F> {
    fn new(land: Landscape<'a>, family: &'a F, budget: SearchBudget, prep: &Prepartition) -> Self {
        let n = land.graph.vertex_count();
        let mut ws = Workspace {
            land,
            family,
            budget,
            cell_of: vec![NONE; n],
            cells: Vec::new(),
            vertex_mark: vec![0; n],
            cell_mark: Vec::new(),
            vertex_seen: vec![0; n],
            cell_seen: Vec::new(),
            epoch: 0,
            replacements: 0,
        };
        for cell in prep.cells() {
            let units: Vec<Unit> = cell.iter().map(|&v| Unit::Vertex(v)).collect();
            ws.merge_units(&units);
        }
        ws.replacements = 0;
        ws
    }

    fn cell(&self, c: usize) -> &CellData {
        self.cells[c].as_ref().expect("live cell")
    }

    fn unit_of(&self, v: usize) -> Unit {
        match self.cell_of[v] {
            NONE => Unit::Vertex(v),
            c => Unit::Cell(c),
        }
    }

    fn unit_summary(&self, unit: Unit) -> SetSummary {
        match unit {
            Unit::Vertex(v) => {
                let mut s = SetSummary::EMPTY;
                s.push(self.land.cocycle.log_weight(v), self.land.values[v]);
                s
            }
            Unit::Cell(c) => self.cell(c).summary,
        }
    }

    fn representative(&self, unit: Unit) -> usize {
        match unit {
            Unit::Vertex(v) => v,
            Unit::Cell(c) => self.cell(c).min_vertex,
        }
    }

    fn push_vertices(&self, unit: Unit, out: &mut Vec<usize>) {
        match unit {
            Unit::Vertex(v) => out.push(v),
            Unit::Cell(c) => out.extend_from_slice(&self.cell(c).vertices),
        }
    }

    fn materialize(&self, units: &[Unit]) -> Vec<usize> {
        let mut out = Vec::new();
        for &u in units {
            self.push_vertices(u, &mut out);
        }
        out.sort_unstable();
        out
    }

    /// Replaces the cells among `units` and the free vertices among them by
    /// one cell. The largest old cell keeps its id and absorbs the rest.
    fn merge_units(&mut self, units: &[Unit]) {
        let base = units
            .iter()
            .filter_map(|&u| match u {
                Unit::Cell(c) => Some(c),
                Unit::Vertex(_) => None,
            })
            .max_by_key(|&c| (self.cell(c).vertices.len(), core::cmp::Reverse(c)));
        let id = match base {
            Some(c) => c,
            None => {
                self.cells.push(Some(CellData {
                    vertices: Vec::new(),
                    boundary: Vec::new(),
                    min_vertex: usize::MAX,
                    summary: SetSummary::EMPTY,
                }));
                self.cell_mark.push(0);
                self.cell_seen.push(0);
                self.cells.len() - 1
            }
        };
        let mut data = self.cells[id].take().expect("live cell");
        let mut candidates = core::mem::take(&mut data.boundary);
        for &u in units {
            match u {
                Unit::Cell(c) if c == id => {}
                Unit::Cell(c) => {
                    let other = self.cells[c].take().expect("live cell");
                    for &v in &other.vertices {
                        self.cell_of[v] = id;
                    }
                    data.vertices.extend_from_slice(&other.vertices);
                    candidates.extend_from_slice(&other.boundary);
                    data.summary.merge(&other.summary);
                    data.min_vertex = data.min_vertex.min(other.min_vertex);
                }
                Unit::Vertex(v) => {
                    self.cell_of[v] = id;
                    data.vertices.push(v);
                    candidates.push(v);
                    data.summary.push(self.land.cocycle.log_weight(v), self.land.values[v]);
                    data.min_vertex = data.min_vertex.min(v);
                }
            }
        }
        let graph = self.land.graph;
        data.boundary = candidates
            .into_iter()
            .filter(|&v| graph.neighbors(v).iter().any(|&w| self.cell_of[w] != id))
            .collect();
        self.cells[id] = Some(data);
        self.replacements += 1;
    }

    fn into_prepartition(self) -> Prepartition {
        let mut cells: Vec<Vec<usize>> = self
            .cells
            .into_iter()
            .flatten()
            .map(|c| {
                let mut v = c.vertices;
                v.sort_unstable();
                v
            })
            .collect();
        cells.sort_unstable_by_key(|c| c[0]);
        Prepartition::from_cells(self.cell_of.len(), cells).expect("workspace cells are disjoint")
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.vertex_mark.iter_mut().for_each(|m| *m = 0);
            self.cell_mark.iter_mut().for_each(|m| *m = 0);
            self.vertex_seen.iter_mut().for_each(|m| *m = 0);
            self.cell_seen.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    fn mark(&mut self, unit: Unit, epoch: u32) {
        match unit {
            Unit::Vertex(v) => self.vertex_mark[v] = epoch,
            Unit::Cell(c) => self.cell_mark[c] = epoch,
        }
    }

    fn is_marked(&self, unit: Unit, epoch: u32) -> bool {
        match unit {
            Unit::Vertex(v) => self.vertex_mark[v] == epoch,
            Unit::Cell(c) => self.cell_mark[c] == epoch,
        }
    }

    fn see(&mut self, unit: Unit, epoch: u32) -> bool {
        let slot = match unit {
            Unit::Vertex(v) => &mut self.vertex_seen[v],
            Unit::Cell(c) => &mut self.cell_seen[c],
        };
        if *slot == epoch {
            false
        } else {
            *slot = epoch;
            true
        }
    }

    /// Best-first growth from `start`, adding at most `max_units` units.
    fn grow(&mut self, start: Unit, goal: Goal) -> Option<Candidate> {
        let epoch = self.next_epoch();
        let start_is_cell = matches!(start, Unit::Cell(_));
        let mut units = vec![start];
        let mut total = self.unit_summary(start);
        let mut fresh = SetSummary::EMPTY;
        let mut covered = SetSummary::EMPTY;
        if start_is_cell {
            covered = total;
        } else {
            fresh = total;
        }
        self.mark(start, epoch);
        self.see(start, epoch);
        let mut frontier: Vec<(Unit, SetSummary, usize)> = Vec::new();
        self.extend_frontier(start, epoch, goal, &mut frontier);

        let mut best: Option<usize> = None;
        if !start_is_cell && self.accepts(goal, &units, &total, &fresh, &covered) {
            match goal {
                Goal::Pack(_) => return Some(Candidate { units }),
                Goal::Extend => best = Some(1),
            }
        }
        for _ in 0..self.budget.max_units {
            // Free vertices before whole cells keeps candidates small; the
            // family's score orders each kind, ids break ties.
            let mut pick: Option<(usize, (bool, f64, usize))> = None;
            for (i, (u, s, rep)) in frontier.iter().enumerate() {
                let key = (
                    matches!(u, Unit::Cell(_)),
                    self.family.growth_score(&total.merged(s)),
                    *rep,
                );
                let better = match &pick {
                    None => true,
                    Some((_, b)) => key.partial_cmp(b) == Some(core::cmp::Ordering::Less),
                };
                if better {
                    pick = Some((i, key));
                }
            }
            let Some((i, _)) = pick else { break };
            let (unit, s, _) = frontier.swap_remove(i);
            self.mark(unit, epoch);
            units.push(unit);
            total.merge(&s);
            match unit {
                Unit::Vertex(_) => fresh.merge(&s),
                Unit::Cell(_) => covered.merge(&s),
            }
            self.extend_frontier(unit, epoch, goal, &mut frontier);
            if self.accepts(goal, &units, &total, &fresh, &covered) {
                match goal {
                    Goal::Pack(_) => return Some(Candidate { units }),
                    Goal::Extend => best = Some(units.len()),
                }
            }
        }
        units.truncate(best?);
        Some(Candidate { units })
    }

    fn extend_frontier(&mut self, unit: Unit, epoch: u32, goal: Goal, frontier: &mut Vec<(Unit, SetSummary, usize)>) {
        let graph = self.land.graph;
        let members: Vec<usize> = match unit {
            Unit::Vertex(v) => vec![v],
            Unit::Cell(c) => self.cell(c).boundary.clone(),
        };
        for v in members {
            for &w in graph.neighbors(v) {
                let next = self.unit_of(w);
                if self.is_marked(next, epoch) {
                    continue;
                }
                if matches!(goal, Goal::Extend) && matches!(next, Unit::Cell(_)) {
                    continue;
                }
                if self.see(next, epoch) {
                    frontier.push((next, self.unit_summary(next), self.representative(next)));
                }
            }
        }
    }

    fn accepts(
        &self,
        goal: Goal,
        units: &[Unit],
        total: &SetSummary,
        fresh: &SetSummary,
        covered: &SetSummary,
    ) -> bool {
        if let Goal::Pack(log_p) = goal {
            if fresh.len == 0 {
                return false;
            }
            if covered.len > 0 && fresh.log_total() < log_p + covered.log_total() {
                return false;
            }
        }
        if self.family.summary_only() {
            self.family.admits(&self.land, &[], total)
        } else {
            self.family.admits(&self.land, &self.materialize(units), total)
        }
    }

    /// Exhaustive search inside one small component.
    fn exhaustive(&self, component: &[usize], goal: Goal) -> Option<Candidate> {
        let mut units: Vec<Unit> = Vec::new();
        for &v in component {
            let u = self.unit_of(v);
            if !units.contains(&u) {
                units.push(u);
            }
        }
        let k = units.len();
        let index_of = |v: usize| units.iter().position(|&u| u == self.unit_of(v)).unwrap();
        let mut adjacency = vec![0u32; k];
        for (i, &u) in units.iter().enumerate() {
            let mut members = Vec::new();
            self.push_vertices(u, &mut members);
            for v in members {
                for &w in self.land.graph.neighbors(v) {
                    let j = index_of(w);
                    if j != i {
                        adjacency[i] |= 1 << j;
                    }
                }
            }
        }
        let is_cell: Vec<bool> = units.iter().map(|u| matches!(u, Unit::Cell(_))).collect();
        let summaries: Vec<SetSummary> = units.iter().map(|&u| self.unit_summary(u)).collect();

        let mut best: Option<(f64, Vec<usize>, u32)> = None;
        for mask in 1u32..(1u32 << k) {
            let cells_in = (0..k).filter(|&i| mask >> i & 1 == 1 && is_cell[i]).count();
            if cells_in == mask.count_ones() as usize {
                continue;
            }
            if matches!(goal, Goal::Extend) && cells_in > 1 {
                continue;
            }
            if !mask_connected(mask, &adjacency) {
                continue;
            }
            let mut total = SetSummary::EMPTY;
            let mut fresh = SetSummary::EMPTY;
            let mut covered = SetSummary::EMPTY;
            let mut chosen = Vec::new();
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    total.merge(&summaries[i]);
                    if is_cell[i] {
                        covered.merge(&summaries[i]);
                    } else {
                        fresh.merge(&summaries[i]);
                    }
                    chosen.push(units[i]);
                }
            }
            if !self.accepts(goal, &chosen, &total, &fresh, &covered) {
                continue;
            }
            // Packs: smallest anchor, then fewest vertices, then lexicographic.
            // Extensions: largest fresh mass first, then the same order.
            let gain = match goal {
                Goal::Pack(_) => 0.0,
                Goal::Extend => -fresh.log_total(),
            };
            let vertices = self.materialize(&chosen);
            let better = match &best {
                None => true,
                Some((g, old, _)) => (gain, vertices[0], vertices.len())
                    .partial_cmp(&(*g, old[0], old.len()))
                    .is_some_and(|o| o.then_with(|| vertices.cmp(old)).is_lt()),
            };
            if better {
                best = Some((gain, vertices, mask));
            }
        }
        best.map(|(_, _, mask)| Candidate {
            units: (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| units[i]).collect(),
        })
    }

    fn is_exhaustive(&self, component: &[usize]) -> bool {
        component.len() <= self.budget.exhaustive_limit.min(31)
    }

    fn pack_pass(&mut self, log_p: f64) -> bool {
        let graph = self.land.graph;
        let mut changed = false;
        for c in 0..graph.component_count() {
            let component = graph.component(c);
            if self.is_exhaustive(component) {
                while let Some(found) = self.exhaustive(component, Goal::Pack(log_p)) {
                    self.merge_units(&found.units);
                    changed = true;
                }
            } else {
                for &v in component {
                    if self.cell_of[v] == NONE {
                        if let Some(found) = self.grow(Unit::Vertex(v), Goal::Pack(log_p)) {
                            self.merge_units(&found.units);
                            changed = true;
                        }
                    }
                }
            }
        }
        changed
    }

    fn extend_pass(&mut self) -> bool {
        let graph = self.land.graph;
        let mut changed = false;
        for c in 0..graph.component_count() {
            let component = graph.component(c);
            if self.is_exhaustive(component) {
                while let Some(found) = self.exhaustive(component, Goal::Extend) {
                    self.merge_units(&found.units);
                    changed = true;
                }
                continue;
            }
            let mut starts: Vec<usize> = Vec::new();
            for &v in component {
                let cell = self.cell_of[v];
                if cell != NONE && self.cell(cell).min_vertex == v {
                    starts.push(cell);
                }
            }
            for cell in starts {
                if self.cells[cell].is_none() {
                    continue;
                }
                if let Some(found) = self.grow(Unit::Cell(cell), Goal::Extend) {
                    if found.units.len() > 1 {
                        self.merge_units(&found.units);
                        changed = true;
                    }
                }
            }
            for &v in component {
                if self.cell_of[v] == NONE {
                    if let Some(found) = self.grow(Unit::Vertex(v), Goal::Extend) {
                        self.merge_units(&found.units);
                        changed = true;
                    }
                }
            }
        }
        changed
    }

    fn all_exhaustive(&self) -> bool {
        let graph = self.land.graph;
        (0..graph.component_count()).all(|c| self.is_exhaustive(graph.component(c)))
    }

    fn report(self) -> PrepartitionReport {
        let exhaustive = self.all_exhaustive();
        let replacements = self.replacements;
        PrepartitionReport {
            prepartition: self.into_prepartition(),
            exhaustive,
            replacements,
        }
    }
}

fn mask_connected(mask: u32, adjacency: &[u32]) -> bool {
    let start = mask.trailing_zeros() as usize;
    let mut reached = 1u32 << start;
    let mut todo = reached;
    while todo != 0 {
        let i = todo.trailing_zeros() as usize;
        todo &= todo - 1;
        let fresh = adjacency[i] & mask & !reached;
        reached |= fresh;
        todo |= fresh;
    }
    reached == mask
}

fn log_of(p: f64) -> f64 {
    if p > 0.0 {
        ln(p)
    } else {
        f64::NEG_INFINITY
    }
}

/// First p-pack over `prep` in the family: exhaustive per small component,
/// growth from free vertices in id order otherwise.
pub fn find_pack<F: CellFamily + ?Sized>(
    family: &F,
    prep: &Prepartition,
    p: f64,
    land: &Landscape<'_>,
    budget: SearchBudget,
) -> Option<PackCertificate> {
    let mut ws = Workspace::new(*land, family, budget, prep);
    let log_p = log_of(p);
    let graph = land.graph;
    for c in 0..graph.component_count() {
        let component = graph.component(c);
        let found = if ws.is_exhaustive(component) {
            ws.exhaustive(component, Goal::Pack(log_p))
        } else {
            component
                .iter()
                .filter(|&&v| !prep.in_domain(v))
                .find_map(|&v| ws.grow(Unit::Vertex(v), Goal::Pack(log_p)))
        };
        if let Some(found) = found {
            return is_p_pack(&ws.materialize(&found.units), prep, p, land.cocycle);
        }
    }
    None
}

/// A family set over `prep` that is invariant, contains at most one cell
/// and is not itself a cell: a witness that `prep` is not saturated.
pub fn find_injective_extension<F: CellFamily + ?Sized>(
    family: &F,
    prep: &Prepartition,
    land: &Landscape<'_>,
    budget: SearchBudget,
) -> Option<Vec<usize>> {
    let mut ws = Workspace::new(*land, family, budget, prep);
    let graph = land.graph;
    for c in 0..graph.component_count() {
        let component = graph.component(c);
        if ws.is_exhaustive(component) {
            if let Some(found) = ws.exhaustive(component, Goal::Extend) {
                return Some(ws.materialize(&found.units));
            }
            continue;
        }
        for &v in component {
            let unit = ws.unit_of(v);
            if let Unit::Cell(cell) = unit {
                if ws.cell(cell).min_vertex != v {
                    continue;
                }
            }
            if let Some(found) = ws.grow(unit, Goal::Extend) {
                return Some(ws.materialize(&found.units));
            }
        }
    }
    None
}

/// Keeps absorbing p-packs into `prep` until none is found.
pub fn pack_from<F: CellFamily + ?Sized>(
    family: &F,
    prep: &Prepartition,
    p: f64,
    land: &Landscape<'_>,
    budget: SearchBudget,
) -> PrepartitionReport {
    let mut ws = Workspace::new(*land, family, budget, prep);
    let log_p = log_of(p);
    while ws.pack_pass(log_p) {}
    ws.report()
}

/// A prepartition with no p-pack left at the given budget, built from the
/// empty one. Each accepted pack strictly increases the covered mass.
pub fn packed<F: CellFamily + ?Sized>(
    family: &F,
    p: f64,
    land: &Landscape<'_>,
    budget: SearchBudget,
) -> PrepartitionReport {
    pack_from(family, &Prepartition::empty(land.graph.vertex_count()), p, land, budget)
}

/// Grows cells by free vertices and adds new cells in free space until no
/// family set containing at most one cell strictly extends the domain.
/// Among exhaustive candidates the largest mass gain wins.
pub fn saturate<F: CellFamily + ?Sized>(
    family: &F,
    prep: &Prepartition,
    land: &Landscape<'_>,
    budget: SearchBudget,
) -> PrepartitionReport {
    let mut ws = Workspace::new(*land, family, budget, prep);
    while ws.extend_pass() {}
    ws.report()
}

/// Alternates packing at `p/2` with saturation until neither changes the
/// prepartition. Both only extend the domain, and an extension of a
/// `p/2`-packed prepartition stays `p/2`-packed, so the fixpoint is
/// `p`-packed and saturated at the budget.
pub fn packed_and_saturated<F: CellFamily + ?Sized>(
    family: &F,
    p: f64,
    land: &Landscape<'_>,
    budget: SearchBudget,
    max_rounds: usize,
) -> Result<PrepartitionReport> {
    let mut ws = Workspace::new(*land, family, budget, &Prepartition::empty(land.graph.vertex_count()));
    let log_p = log_of(p / 2.0);
    for _ in 0..max_rounds {
        let mut changed = false;
        while ws.pack_pass(log_p) {
            changed = true;
        }
        while ws.extend_pass() {
            changed = true;
        }
        if !changed {
            return Ok(ws.report());
        }
    }
    Err(Error::IterationCap { rounds: max_rounds })
}

/// The limit of a coherent sequence of prepartitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentLimit {
    pub prepartition: Prepartition,
    /// Every limit cell is a cell of some member of the sequence.
    pub stabilized: bool,
}

/// Joins `E(𝒫₀), E(𝒫₁), …` and keeps the classes inside the union of the
/// domains. Each later cell must be invariant under every earlier
/// prepartition.
pub fn coherent_limit(sequence: &[Prepartition]) -> Result<CoherentLimit> {
    let Some(first) = sequence.first() else {
        return Ok(CoherentLimit {
            prepartition: Prepartition::empty(0),
            stabilized: true,
        });
    };
    let n = first.vertex_count();
    if let Some(bad) = sequence.iter().position(|p| p.vertex_count() != n) {
        return Err(Error::MalformedGraph(alloc::format!(
            "prepartition {bad} has a different vertex count"
        )));
    }
    for (j, later) in sequence.iter().enumerate() {
        for cell in later.cells() {
            for (i, earlier) in sequence[..j].iter().enumerate() {
                if !earlier.is_invariant(cell) {
                    return Err(Error::NotCoherent {
                        earlier: i,
                        later: j,
                        cell: cell.clone(),
                    });
                }
            }
        }
    }
    let mut sets = DisjointSets::new(n);
    let mut covered = vec![false; n];
    for prep in sequence {
        for cell in prep.cells() {
            for &v in cell {
                covered[v] = true;
                sets.union(cell[0], v);
            }
        }
    }
    let mut groups: alloc::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..n {
        if covered[v] {
            groups.entry(sets.find(v)).or_default().push(v);
        }
    }
    let cells: Vec<Vec<usize>> = groups.into_values().collect();
    let stabilized = cells.iter().all(|cell| {
        sequence.iter().any(|prep| {
            prep.cell_of(cell[0])
                .map(|c| prep.cell(c) == cell.as_slice())
                .unwrap_or(false)
        })
    });
    let mut cells = cells;
    cells.sort_unstable_by_key(|c| c[0]);
    Ok(CoherentLimit {
        prepartition: Prepartition::from_cells(n, cells)?,
        stabilized,
    })
}

/// A family on a quotient landscape that lifts each candidate to the
/// original vertices and asks `inner`, after requiring quotient ratio at
/// least `min_ratio`.
struct Lifted<'a, F: ?Sized> {
    inner: &'a F,
    original: Landscape<'a>,
    relation: &'a EquivRel,
    min_ratio: f64,
}

impl<F: CellFamily + ?Sized> CellFamily for Lifted<'_, F> {
    fn admits(&self, _: &Landscape<'_>, set: &[usize], summary: &SetSummary) -> bool {
        if summary.rho_max() < self.min_ratio {
            return false;
        }
        let mut lifted = Vec::new();
        for &q in set {
            lifted.extend_from_slice(self.relation.class(q));
        }
        match SetSummary::of(self.original.values, self.original.cocycle, &lifted) {
            Ok(s) => self.inner.admits(&self.original, &lifted, &s),
            Err(_) => false,
        }
    }

    fn growth_score(&self, summary: &SetSummary) -> f64 {
        self.inner.growth_score(summary)
    }
}

/// Outcome of [`large_ratio_prepartition`].
#[derive(Debug, Clone, PartialEq)]
pub struct LargeRatioReport {
    pub prepartition: Prepartition,
    pub covered_mass: f64,
    pub stages: usize,
    /// Stage at which nothing new could be formed, if the target was missed.
    pub stalled_at: Option<usize>,
    /// Components whose whole ρ-ratio is below the required ratio.
    pub uncoverable: Vec<usize>,
    pub exhaustive: bool,
}

/// Saturated prepartitions of the successive quotients with required
/// ratios `L, 2L, 4L, …`, joined into one prepartition whose cells have
/// ρ-ratio at least `L`. Stops once the domain carries `1 − ε` of `μ`.
pub fn large_ratio_prepartition<F: CellFamily + ?Sized>(
    family: &F,
    land: &Landscape<'_>,
    mu: &RhoMeasure,
    eps: f64,
    min_ratio: f64,
    budget: SearchBudget,
    max_stages: usize,
) -> Result<LargeRatioReport> {
    let graph = land.graph;
    let n = graph.vertex_count();
    let uncoverable: Vec<usize> = (0..graph.component_count())
        .filter(|&c| {
            land.cocycle
                .rho_max_ratio(graph.component(c))
                .map_or(true, |r| r < min_ratio)
        })
        .collect();
    let mut relation = EquivRel::identity(n);
    let mut stages = Vec::new();
    let mut covered = vec![false; n];
    let mut exhaustive = true;
    let mut stalled_at = None;
    let mut ratio = min_ratio;
    for stage in 0..max_stages {
        let q = quotient(graph, land.cocycle, land.values, &relation)?;
        let q_land = Landscape {
            graph: &q.graph,
            cocycle: &q.cocycle,
            values: &q.values,
        };
        let lifted = Lifted {
            inner: family,
            original: *land,
            relation: &relation,
            min_ratio: ratio,
        };
        let report = saturate(&lifted, &Prepartition::empty(q.graph.vertex_count()), &q_land, budget);
        exhaustive &= report.exhaustive;
        let cells: Vec<Vec<usize>> = report
            .prepartition
            .cells()
            .iter()
            .map(|cell| {
                let mut out: Vec<usize> = cell.iter().flat_map(|&c| relation.class(c).iter().copied()).collect();
                out.sort_unstable();
                out
            })
            .collect();
        if cells.is_empty() {
            stalled_at = Some(stage);
            break;
        }
        let prep = Prepartition::from_cells(n, cells)?;
        for v in prep.domain() {
            covered[v] = true;
        }
        relation = relation.join(&prep.relation());
        stages.push(prep);
        let mass: f64 = (0..n).filter(|&v| covered[v]).map(|v| mu.atom(v)).sum();
        if mass >= 1.0 - eps {
            break;
        }
        ratio *= 2.0;
    }
    let limit = coherent_limit(&stages)?;
    let covered_mass = mu.mass(&limit.prepartition.domain());
    Ok(LargeRatioReport {
        prepartition: limit.prepartition,
        covered_mass,
        stages: stages.len(),
        stalled_at: if covered_mass >= 1.0 - eps {
            None
        } else {
            stalled_at.or(Some(max_stages))
        },
        uncoverable,
        exhaustive,
    })
}
