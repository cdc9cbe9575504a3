//! Graphs, cocycles, ρ-invariant measures, prepartitions and quotients.
//!
//! Weights are kept as natural logarithms. Every log-weight is snapped to a
//! dyadic grid of step `2^-42` and bounded by [`MAX_LOG_WEIGHT`], so sums and
//! differences of log-weights are exact in `f64` and the cocycle identity
//! `ρ(x,y)ρ(y,z) = ρ(x,z)` holds bit-for-bit in the log domain.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::math::{abs, exp, ln, round};
use crate::{Error, Result};

const LOG_GRID: f64 = 4_398_046_511_104.0; // 2^42

/// Largest accepted magnitude of a log-weight.
pub const MAX_LOG_WEIGHT: f64 = 1024.0;

/// Snap a log-weight to the dyadic grid used by [`Cocycle`].
pub fn quantize_log(x: f64) -> f64 {
    round(x * LOG_GRID) / LOG_GRID
}

/// Finite simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<usize>>,
    component_id: Vec<usize>,
    components: Vec<Vec<usize>>,
    edge_count: usize,
}

impl WeightedGraph {
    /// Builds a graph on `n` vertices. Repeated edges collapse to one;
    /// self-loops and out-of-range endpoints are errors.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::MalformedGraph(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::MalformedGraph(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut degree_sum = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }

        let mut component_id = vec![usize::MAX; n];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if component_id[start] != usize::MAX {
                continue;
            }
            let label = components.len();
            let mut members = vec![start];
            component_id[start] = label;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &w in &adjacency[v] {
                    if component_id[w] == usize::MAX {
                        component_id[w] = label;
                        members.push(w);
                        queue.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }

        Ok(WeightedGraph {
            adjacency,
            component_id,
            components,
            edge_count: degree_sum / 2,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_id[v]
    }

    pub fn component_ids(&self) -> &[usize] {
        &self.component_id
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Vertices of component `c` in increasing order.
    pub fn component(&self, c: usize) -> &[usize] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Component shared by every vertex of `set`.
    pub fn common_component(&self, set: &[usize]) -> Result<usize> {
        let first = *set.first().ok_or(Error::EmptySet)?;
        let c = self.component_id[first];
        for &v in set {
            if self.component_id[v] != c {
                return Err(Error::CrossComponent { a: first, b: v });
            }
        }
        Ok(c)
    }

    /// Vertices outside `set` adjacent to some vertex of `set`, sorted.
    pub fn outer_boundary(&self, set: &[usize]) -> Vec<usize> {
        let members = SortedSet::new(set);
        let mut out = Vec::new();
        for &a in members.as_slice() {
            for &x in &self.adjacency[a] {
                if !members.contains(x) {
                    out.push(x);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether `set` induces a connected subgraph. Empty sets and
    /// singletons count as connected.
    pub fn is_connected_set(&self, set: &[usize]) -> bool {
        let members = SortedSet::new(set);
        let items = members.as_slice();
        if items.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; items.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(i) = stack.pop() {
            for &w in &self.adjacency[items[i]] {
                if let Some(j) = members.position(w) {
                    if !seen[j] {
                        seen[j] = true;
                        reached += 1;
                        stack.push(j);
                    }
                }
            }
        }
        reached == items.len()
    }

    /// Connected components of the subgraph induced on vertices with
    /// `keep(v)`, each sorted, ordered by smallest vertex.
    pub fn induced_components<F: Fn(usize) -> bool>(&self, keep: F) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || !keep(start) {
                continue;
            }
            seen[start] = true;
            let mut members = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &self.adjacency[v] {
                    if !seen[w] && keep(w) {
                        seen[w] = true;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Sorted, deduplicated copy of a vertex list with binary-search lookup.
#[derive(Debug, Clone)]
pub(crate) struct SortedSet(Vec<usize>);

impl SortedSet {
    pub(crate) fn new(items: &[usize]) -> Self {
        let mut v = items.to_vec();
        v.sort_unstable();
        v.dedup();
        SortedSet(v)
    }

    pub(crate) fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub(crate) fn position(&self, x: usize) -> Option<usize> {
        self.0.binary_search(&x).ok()
    }

    pub(crate) fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub(crate) fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

/// Relative mass of a set, normalized by its heaviest vertex.
///
/// `relative` is `Σ w(v) / max w` over the set, which is exactly the ρ-ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetMass {
    pub log_max: f64,
    pub relative: f64,
}

impl SetMass {
    /// Log of the total weight in the common reference of the component.
    pub fn log_total(&self) -> f64 {
        self.log_max + ln(self.relative)
    }
}

/// Key realizing the order `<ρ`: heavier vertices are larger; among equal
/// weights the smaller id is larger, so a decreasing sort lists ties by id.
#[derive(Debug, Clone, Copy)]
pub struct RhoKey {
    pub log_weight: f64,
    pub vertex: usize,
}

impl PartialEq for RhoKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RhoKey {}

impl PartialOrd for RhoKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RhoKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_weight
            .total_cmp(&other.log_weight)
            .then(other.vertex.cmp(&self.vertex))
    }
}

/// Vertex weights defining `ρ(x, y) = w(x) / w(y)` inside components.
#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    log_weight: Vec<f64>,
    component_id: Vec<usize>,
}

impl Cocycle {
    pub fn new(graph: &WeightedGraph, log_weights: &[f64]) -> Result<Self> {
        if log_weights.len() != graph.vertex_count() {
            return Err(Error::MalformedGraph(format!(
                "{} log-weights for {} vertices",
                log_weights.len(),
                graph.vertex_count()
            )));
        }
        let mut log_weight = Vec::with_capacity(log_weights.len());
        for (v, &l) in log_weights.iter().enumerate() {
            if !l.is_finite() || abs(l) >= MAX_LOG_WEIGHT {
                return Err(Error::MalformedGraph(format!(
                    "log-weight {l} at vertex {v} is not finite or too large"
                )));
            }
            log_weight.push(quantize_log(l));
        }
        Ok(Cocycle {
            log_weight,
            component_id: graph.component_ids().to_vec(),
        })
    }

    /// All weights equal.
    pub fn trivial(graph: &WeightedGraph) -> Self {
        Cocycle {
            log_weight: vec![0.0; graph.vertex_count()],
            component_id: graph.component_ids().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.log_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weight.is_empty()
    }

    pub fn log_weight(&self, x: usize) -> f64 {
        self.log_weight[x]
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weight
    }

    fn check_pair(&self, x: usize, y: usize) -> Result<()> {
        if self.component_id[x] != self.component_id[y] {
            return Err(Error::CrossComponent { a: x, b: y });
        }
        Ok(())
    }

    /// `ln ρ(x, y)`.
    pub fn log_rho(&self, x: usize, y: usize) -> Result<f64> {
        self.check_pair(x, y)?;
        Ok(self.log_weight[x] - self.log_weight[y])
    }

    /// `ρ(x, y) = w(x) / w(y)`: the mass of `x` relative to `y`.
    pub fn rho(&self, x: usize, y: usize) -> Result<f64> {
        Ok(exp(self.log_rho(x, y)?))
    }

    /// Mass of a nonempty single-component set, normalized by its maximum.
    pub fn mass(&self, set: &[usize]) -> Result<SetMass> {
        let first = *set.first().ok_or(Error::EmptySet)?;
        let c = self.component_id[first];
        let mut log_max = f64::NEG_INFINITY;
        for &v in set {
            if self.component_id[v] != c {
                return Err(Error::CrossComponent { a: first, b: v });
            }
            log_max = log_max.max(self.log_weight[v]);
        }
        let relative = set.iter().map(|&v| exp(self.log_weight[v] - log_max)).sum();
        Ok(SetMass { log_max, relative })
    }

    /// `ρ^max(U) = ρ(U) / max_{u∈U} ρ(u)`, which lies in `[1, |U|]`.
    pub fn rho_max_ratio(&self, set: &[usize]) -> Result<f64> {
        Ok(self.mass(set)?.relative)
    }

    pub fn order_key(&self, x: usize) -> RhoKey {
        RhoKey {
            log_weight: self.log_weight[x],
            vertex: x,
        }
    }

    /// Sorts `set` ρ-decreasingly, ties by increasing id.
    pub fn sort_decreasing(&self, set: &mut [usize]) {
        set.sort_unstable_by_key(|&x| core::cmp::Reverse(self.order_key(x)));
    }

    /// Heaviest vertex of a nonempty set, smallest id among ties.
    pub fn argmax(&self, set: &[usize]) -> Option<usize> {
        set.iter().copied().max_by_key(|&v| self.order_key(v))
    }

    /// Lightest vertex of a nonempty set, smallest id among ties.
    pub fn argmin(&self, set: &[usize]) -> Option<usize> {
        set.iter()
            .copied()
            .min_by(|&a, &b| self.log_weight[a].total_cmp(&self.log_weight[b]).then(a.cmp(&b)))
    }

    /// The cocycle `σ(x, y) = g(x) ρ(x, y) / g(y)` given `ln g`.
    pub fn rescaled(&self, graph: &WeightedGraph, log_factor: &[f64]) -> Result<Cocycle> {
        let shifted: Vec<f64> = self.log_weight.iter().zip(log_factor).map(|(a, b)| a + b).collect();
        Cocycle::new(graph, &shifted)
    }
}

/// The `<ρ` order key of `x`; see [`RhoKey`].
pub fn rho_order_key(rho: &Cocycle, x: usize) -> RhoKey {
    rho.order_key(x)
}

/// Builds a graph on `log_weights.len()` vertices together with its cocycle.
pub fn build_graph(edges: &[(usize, usize)], log_weights: &[f64]) -> Result<(WeightedGraph, Cocycle)> {
    let graph = WeightedGraph::from_edges(log_weights.len(), edges)?;
    let cocycle = Cocycle::new(&graph, log_weights)?;
    Ok((graph, cocycle))
}

/// A ρ-invariant probability measure: on each component the atoms are
/// proportional to the vertex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoMeasure {
    component_mass: Vec<f64>,
    atoms: Vec<f64>,
}

impl RhoMeasure {
    /// Component masses proportional to vertex counts.
    pub fn by_component_size(graph: &WeightedGraph, rho: &Cocycle) -> Self {
        let n = graph.vertex_count().max(1) as f64;
        let masses: Vec<f64> = graph.components().iter().map(|c| c.len() as f64 / n).collect();
        Self::build(graph, rho, masses)
    }

    /// Explicit positive component masses summing to 1.
    pub fn with_component_masses(graph: &WeightedGraph, rho: &Cocycle, masses: &[f64]) -> Result<Self> {
        if masses.len() != graph.component_count() {
            return Err(Error::MalformedGraph(format!(
                "{} component masses for {} components",
                masses.len(),
                graph.component_count()
            )));
        }
        let total: f64 = masses.iter().sum();
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) || abs(total - 1.0) > 1e-12 {
            return Err(Error::MalformedGraph(
                "component masses must be positive and sum to 1".into(),
            ));
        }
        Ok(Self::build(graph, rho, masses.to_vec()))
    }

    fn build(graph: &WeightedGraph, rho: &Cocycle, component_mass: Vec<f64>) -> Self {
        let mut atoms = vec![0.0; graph.vertex_count()];
        for (c, members) in graph.components().iter().enumerate() {
            let m = rho.mass(members).expect("component is nonempty and connected");
            for &v in members {
                atoms[v] = component_mass[c] * exp(rho.log_weight(v) - m.log_max) / m.relative;
            }
        }
        RhoMeasure { component_mass, atoms }
    }

    /// Arbitrary atoms, not checked for ρ-invariance. Useful to probe
    /// diagnostics that should detect a non-invariant measure.
    pub fn from_atoms_unchecked(atoms: Vec<f64>) -> Self {
        RhoMeasure {
            component_mass: Vec::new(),
            atoms,
        }
    }

    pub fn atom(&self, x: usize) -> f64 {
        self.atoms[x]
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn component_mass(&self, c: usize) -> f64 {
        self.component_mass[c]
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&v| self.atoms[v]).sum()
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().sum()
    }

    /// `∫ f dμ`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.atoms.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// `‖f‖₁ = ∫ |f| dμ`.
    pub fn l1_norm(&self, f: &[f64]) -> f64 {
        self.atoms.iter().zip(f).map(|(m, v)| m * abs(*v)).sum()
    }
}

/// Pairwise disjoint nonempty cells; vertices outside all cells are off
/// the domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prepartition {
    cells: Vec<Vec<usize>>,
    cell_of: Vec<Option<usize>>,
}

impl Prepartition {
    pub fn empty(vertex_count: usize) -> Self {
        Prepartition {
            cells: Vec::new(),
            cell_of: vec![None; vertex_count],
        }
    }

    pub fn from_cells(vertex_count: usize, cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut p = Prepartition::empty(vertex_count);
        for mut cell in cells {
            if cell.is_empty() {
                return Err(Error::EmptySet);
            }
            cell.sort_unstable();
            let index = p.cells.len();
            for (i, &v) in cell.iter().enumerate() {
                if v >= vertex_count {
                    return Err(Error::MalformedGraph(format!(
                        "cell vertex {v} out of range for {vertex_count} vertices"
                    )));
                }
                if p.cell_of[v].is_some() || (i > 0 && cell[i - 1] == v) {
                    return Err(Error::NotDisjoint { vertex: v });
                }
                p.cell_of[v] = Some(index);
            }
            p.cells.push(cell);
        }
        Ok(p)
    }

    pub fn vertex_count(&self) -> usize {
        self.cell_of.len()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &[usize] {
        &self.cells[i]
    }

    pub fn cell_of(&self, v: usize) -> Option<usize> {
        self.cell_of[v]
    }

    pub fn in_domain(&self, v: usize) -> bool {
        self.cell_of[v].is_some()
    }

    /// Union of the cells, sorted.
    pub fn domain(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| self.cell_of[v].is_some())
            .collect()
    }

    /// Whether `set` is a union of `E(𝒫)`-classes: every cell it meets lies
    /// inside it.
    pub fn is_invariant(&self, set: &[usize]) -> bool {
        let members = SortedSet::new(set);
        members.as_slice().iter().all(|&v| match self.cell_of[v] {
            Some(c) => self.cells[c].iter().all(|&u| members.contains(u)),
            None => true,
        })
    }

    /// Indices of cells meeting `set`, increasing.
    pub fn cells_meeting(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set.iter().filter_map(|&v| self.cell_of[v]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Removes every cell meeting `set` and inserts `set` as a cell.
    /// Returns the index of the new cell. `set` should be invariant.
    pub fn absorb(&mut self, mut set: Vec<usize>) -> usize {
        set.sort_unstable();
        set.dedup();
        let mut doomed = self.cells_meeting(&set);
        doomed.sort_unstable_by(|a, b| b.cmp(a));
        for i in doomed {
            for &v in &self.cells[i] {
                self.cell_of[v] = None;
            }
            self.cells.swap_remove(i);
            if i < self.cells.len() {
                for &v in &self.cells[i] {
                    self.cell_of[v] = Some(i);
                }
            }
        }
        let index = self.cells.len();
        for &v in &set {
            self.cell_of[v] = Some(index);
        }
        self.cells.push(set);
        index
    }

    /// Same cells ordered by smallest vertex.
    pub fn canonical(&self) -> Prepartition {
        let mut cells = self.cells.clone();
        cells.sort_unstable_by_key(|c| c[0]);
        Prepartition::from_cells(self.vertex_count(), cells).expect("cells already valid")
    }

    /// `E(𝒫)`: cells plus singletons off the domain.
    pub fn relation(&self) -> EquivRel {
        let n = self.vertex_count();
        let mut labels = vec![0usize; n];
        for v in 0..n {
            labels[v] = match self.cell_of[v] {
                Some(c) => self.cells[c][0],
                None => v,
            };
        }
        EquivRel::from_labels(&labels)
    }

    /// Whether every cell induces a connected subgraph.
    pub fn is_g_connected(&self, graph: &WeightedGraph) -> bool {
        self.cells.iter().all(|c| graph.is_connected_set(c))
    }
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// A partition of the vertex set. Classes are ordered by smallest vertex
/// and each class is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivRel {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl EquivRel {
    pub fn identity(n: usize) -> Self {
        EquivRel {
            class_of: (0..n).collect(),
            classes: (0..n).map(|v| vec![v]).collect(),
        }
    }

    /// Classes are the level sets of `labels`.
    pub fn from_labels(labels: &[usize]) -> Self {
        let n = labels.len();
        let mut slot: alloc::collections::BTreeMap<usize, usize> = Default::default();
        let mut class_of = vec![0; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for v in 0..n {
            let next = classes.len();
            let c = *slot.entry(labels[v]).or_insert(next);
            if c == next {
                classes.push(Vec::new());
            }
            classes[c].push(v);
            class_of[v] = c;
        }
        EquivRel { class_of, classes }
    }

    /// Classes given explicitly; they must partition `0..n`.
    pub fn from_classes(n: usize, classes: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (i, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::EmptySet);
            }
            for &v in class {
                if v >= n {
                    return Err(Error::MalformedGraph(format!("class vertex {v} out of range")));
                }
                if labels[v] != usize::MAX {
                    return Err(Error::NotDisjoint { vertex: v });
                }
                labels[v] = i;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::MalformedGraph(format!("vertex {v} is in no class")));
        }
        Ok(EquivRel::from_labels(&labels))
    }

    /// One class per connected component.
    pub fn components(graph: &WeightedGraph) -> Self {
        EquivRel::from_labels(graph.component_ids())
    }

    pub fn vertex_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &[usize] {
        &self.classes[i]
    }

    /// Whether `set` is a union of classes.
    pub fn is_invariant(&self, set: &[usize]) -> bool {
        let members = SortedSet::new(set);
        members
            .as_slice()
            .iter()
            .all(|&v| self.classes[self.class_of[v]].iter().all(|&u| members.contains(u)))
    }

    /// Whether each class of `self` sits inside a class of `coarser`.
    pub fn refines(&self, coarser: &EquivRel) -> bool {
        self.classes.iter().all(|c| {
            let target = coarser.class_of(c[0]);
            c.iter().all(|&v| coarser.class_of(v) == target)
        })
    }

    /// The smallest equivalence relation containing both.
    pub fn join(&self, other: &EquivRel) -> EquivRel {
        let mut sets = DisjointSets::new(self.vertex_count());
        for rel in [self, other] {
            for class in &rel.classes {
                for &v in &class[1..] {
                    sets.union(class[0], v);
                }
            }
        }
        let labels: Vec<usize> = (0..self.vertex_count()).map(|v| sets.find(v)).collect();
        EquivRel::from_labels(&labels)
    }

    /// Errors on the first class that does not induce a connected subgraph.
    pub fn check_g_connected(&self, graph: &WeightedGraph) -> Result<()> {
        for (i, class) in self.classes.iter().enumerate() {
            if !graph.is_connected_set(class) {
                return Err(Error::DisconnectedClass { class: i });
            }
        }
        Ok(())
    }
}

/// The contraction `G/F` with its quotient cocycle and averaged function.
/// Vertex `i` of the quotient is class `i` of the relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Quotient {
    pub graph: WeightedGraph,
    pub cocycle: Cocycle,
    pub values: Vec<f64>,
}

/// Contracts every class of `relation` to one vertex. A class weighs the sum
/// of its weights and carries the ρ-weighted mean of `f`.
pub fn quotient(graph: &WeightedGraph, rho: &Cocycle, f: &[f64], relation: &EquivRel) -> Result<Quotient> {
    relation.check_g_connected(graph)?;
    let mut edges = Vec::new();
    for (u, v) in graph.edges() {
        let (a, b) = (relation.class_of(u), relation.class_of(v));
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut log_weights = Vec::with_capacity(relation.class_count());
    let mut values = Vec::with_capacity(relation.class_count());
    for class in relation.classes() {
        let m = rho.mass(class)?;
        let weighted: f64 = class.iter().map(|&v| exp(rho.log_weight(v) - m.log_max) * f[v]).sum();
        log_weights.push(m.log_total());
        values.push(weighted / m.relative);
    }
    let q_graph = WeightedGraph::from_edges(relation.class_count(), &edges)?;
    let cocycle = Cocycle::new(&q_graph, &log_weights)?;
    Ok(Quotient {
        graph: q_graph,
        cocycle,
        values,
    })
}
