//! Finitizing vertex and edge cuts, their prices, vanishing sequences and
//! the measure-compactness inequality.
//!
//! On finite graphs "finite" and "hyperfinite" coincide, so everything here
//! is parameterized by a component-size threshold `K`: a cut is
//! K-finitizing when every remaining component has at most `K` vertices.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph_core::{Cocycle, RhoMeasure, WeightedGraph};
use crate::math::powi;
use crate::{Error, Result};

/// Largest component the exact solver accepts.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Cut {
    Vertices(Vec<usize>),
    Edges(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMethod {
    /// Branch and bound; the true minimum.
    Exact,
    /// Constructive upper bound.
    Greedy,
    /// Greedy followed by removal of redundant pieces and single swaps.
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutReport {
    pub cut: Cut,
    pub k: usize,
    pub method: PriceMethod,
    /// Measure of the cut.
    pub price: f64,
    pub largest_component: usize,
    /// Largest ρ-ratio among remaining components.
    pub largest_rho_max: f64,
}

/// Components left after removing `removed` vertices and `cut_edges`.
fn remaining_components(
    graph: &WeightedGraph,
    removed: &[bool],
    cut_edges: &BTreeSet<(usize, usize)>,
) -> Vec<Vec<usize>> {
    let n = graph.vertex_count();
    let mut seen = removed.to_vec();
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in graph.neighbors(v) {
                if !seen[w] && !cut_edges.contains(&edge_key(v, w)) {
                    seen[w] = true;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

pub fn is_k_finitizing_vertex_cut(graph: &WeightedGraph, cut: &[usize], k: usize) -> bool {
    let mut removed = vec![false; graph.vertex_count()];
    for &v in cut {
        removed[v] = true;
    }
    remaining_components(graph, &removed, &BTreeSet::new())
        .iter()
        .all(|c| c.len() <= k)
}

pub fn is_k_finitizing_edge_cut(graph: &WeightedGraph, cut: &[(usize, usize)], k: usize) -> bool {
    let edges: BTreeSet<_> = cut.iter().map(|&(u, v)| edge_key(u, v)).collect();
    remaining_components(graph, &vec![false; graph.vertex_count()], &edges)
        .iter()
        .all(|c| c.len() <= k)
}

/// Builds the report for a cut from scratch.
pub fn cut_report(
    graph: &WeightedGraph,
    rho: &Cocycle,
    cost: &dyn Fn(&Cut) -> f64,
    cut: Cut,
    k: usize,
    method: PriceMethod,
) -> CutReport {
    let mut removed = vec![false; graph.vertex_count()];
    let mut edges = BTreeSet::new();
    match &cut {
        Cut::Vertices(vs) => vs.iter().for_each(|&v| removed[v] = true),
        Cut::Edges(es) => es.iter().for_each(|&(u, v)| {
            edges.insert(edge_key(u, v));
        }),
    }
    let comps = remaining_components(graph, &removed, &edges);
    let largest_component = comps.iter().map(Vec::len).max().unwrap_or(0);
    let largest_rho_max = comps
        .iter()
        .map(|c| rho.rho_max_ratio(c).unwrap_or(0.0))
        .fold(0.0, f64::max);
    CutReport {
        price: cost(&cut),
        cut,
        k,
        method,
        largest_component,
        largest_rho_max,
    }
}

/// Local indexing of one component.
struct Local {
    vertices: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

impl Local {
    fn new(graph: &WeightedGraph, component: &[usize]) -> Self {
        let index = |v: usize| component.binary_search(&v).unwrap();
        let adjacency = component
            .iter()
            .map(|&v| graph.neighbors(v).iter().map(|&w| index(w)).collect())
            .collect();
        Local {
            vertices: component.to_vec(),
            adjacency,
        }
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }

    /// A connected set of `k + 1` live vertices reached by BFS, with the
    /// BFS tree edges, if some live component exceeds `k`.
    fn violation(
        &self,
        dead: &[bool],
        cut: &dyn Fn(usize, usize) -> bool,
        k: usize,
    ) -> Option<(Vec<usize>, Vec<(usize, usize)>)> {
        let n = self.len();
        let mut seen = dead.to_vec();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut order = vec![s];
            let mut tree = Vec::new();
            let mut head = 0;
            let mut size = 1;
            let mut members = vec![s];
            while head < order.len() {
                let v = order[head];
                head += 1;
                for &w in &self.adjacency[v] {
                    if !seen[w] && !cut(v, w) {
                        seen[w] = true;
                        order.push(w);
                        size += 1;
                        if members.len() <= k {
                            members.push(w);
                            tree.push((v, w));
                        }
                    }
                }
            }
            if size > k {
                return Some((members, tree));
            }
        }
        None
    }
}

struct VertexSearch<'a> {
    local: &'a Local,
    cost: Vec<f64>,
    k: usize,
    best: f64,
    best_cut: Vec<bool>,
}

impl VertexSearch<'_> {
    fn run(&mut self, dead: &mut Vec<bool>, fixed: &mut Vec<bool>, spent: f64) {
        if spent >= self.best {
            return;
        }
        let Some((members, _)) = self.local.violation(dead, &|_, _| false, self.k) else {
            self.best = spent;
            self.best_cut = dead.clone();
            return;
        };
        let mut options: Vec<usize> = members.into_iter().filter(|&v| !fixed[v]).collect();
        options.sort_by(|&a, &b| {
            self.local.adjacency[b]
                .len()
                .cmp(&self.local.adjacency[a].len())
                .then(a.cmp(&b))
        });
        let mut newly_fixed = Vec::new();
        for v in options {
            dead[v] = true;
            self.run(dead, fixed, spent + self.cost[v]);
            dead[v] = false;
            fixed[v] = true;
            newly_fixed.push(v);
        }
        for v in newly_fixed {
            fixed[v] = false;
        }
    }
}

struct EdgeSearch<'a> {
    local: &'a Local,
    cost: alloc::collections::BTreeMap<(usize, usize), f64>,
    k: usize,
    best: f64,
    best_cut: BTreeSet<(usize, usize)>,
}

impl EdgeSearch<'_> {
    fn run(&mut self, cut: &mut BTreeSet<(usize, usize)>, fixed: &mut BTreeSet<(usize, usize)>, spent: f64) {
        if spent >= self.best {
            return;
        }
        let dead = vec![false; self.local.len()];
        let found = {
            let cut_ref = &*cut;
            self.local
                .violation(&dead, &|a, b| cut_ref.contains(&edge_key(a, b)), self.k)
        };
        let Some((_, tree)) = found else {
            self.best = spent;
            self.best_cut = cut.clone();
            return;
        };
        let options: Vec<(usize, usize)> = tree
            .into_iter()
            .map(|(a, b)| edge_key(a, b))
            .filter(|e| !fixed.contains(e))
            .collect();
        let mut newly_fixed = Vec::new();
        for e in options {
            let c = self.cost[&e];
            cut.insert(e);
            self.run(cut, fixed, spent + c);
            cut.remove(&e);
            fixed.insert(e);
            newly_fixed.push(e);
        }
        for e in newly_fixed {
            fixed.remove(&e);
        }
    }
}

fn check_exact(graph: &WeightedGraph) -> Result<()> {
    for comp in graph.components() {
        if comp.len() > EXACT_LIMIT {
            return Err(Error::TooLargeForExact {
                component_size: comp.len(),
                limit: EXACT_LIMIT,
            });
        }
    }
    Ok(())
}

/// Cheapest (or heuristic) K-finitizing vertex cut under `mu`.
pub fn vertex_price(
    graph: &WeightedGraph,
    rho: &Cocycle,
    mu: &RhoMeasure,
    k: usize,
    method: PriceMethod,
) -> Result<CutReport> {
    let k = k.max(1);
    let mut cut = Vec::new();
    match method {
        PriceMethod::Exact => {
            check_exact(graph)?;
            for comp in graph.components() {
                if comp.len() <= k {
                    continue;
                }
                let local = Local::new(graph, comp);
                let mut search = VertexSearch {
                    local: &local,
                    cost: comp.iter().map(|&v| mu.atom(v)).collect(),
                    k,
                    best: f64::INFINITY,
                    best_cut: vec![true; comp.len()],
                };
                search.run(&mut vec![false; comp.len()], &mut vec![false; comp.len()], 0.0);
                cut.extend((0..comp.len()).filter(|&i| search.best_cut[i]).map(|i| comp[i]));
            }
        }
        PriceMethod::Greedy | PriceMethod::Local => {
            cut = greedy_vertex_cut(graph, mu, k);
            if method == PriceMethod::Local {
                improve_vertex_cut(graph, mu, k, &mut cut);
            }
        }
    }
    cut.sort_unstable();
    let cost = |c: &Cut| match c {
        Cut::Vertices(vs) => vs.iter().map(|&v| mu.atom(v)).sum(),
        Cut::Edges(_) => unreachable!(),
    };
    Ok(cut_report(graph, rho, &cost, Cut::Vertices(cut), k, method))
}

/// Removes, inside the first oversized component, the vertex with the most
/// live neighbors per unit of measure, until every component is small.
fn greedy_vertex_cut(graph: &WeightedGraph, mu: &RhoMeasure, k: usize) -> Vec<usize> {
    let n = graph.vertex_count();
    let mut removed = vec![false; n];
    let mut cut = Vec::new();
    loop {
        let comps = remaining_components(graph, &removed, &BTreeSet::new());
        let Some(big) = comps.into_iter().find(|c| c.len() > k) else {
            break;
        };
        let score = |v: usize| {
            let live = graph.neighbors(v).iter().filter(|&&w| !removed[w]).count() as f64;
            live / mu.atom(v).max(f64::MIN_POSITIVE)
        };
        let v = big
            .iter()
            .copied()
            .max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a)))
            .unwrap();
        removed[v] = true;
        cut.push(v);
    }
    cut
}

fn improve_vertex_cut(graph: &WeightedGraph, mu: &RhoMeasure, k: usize, cut: &mut Vec<usize>) {
    cut.sort_by(|&a, &b| mu.atom(b).total_cmp(&mu.atom(a)).then(a.cmp(&b)));
    let mut i = 0;
    while i < cut.len() {
        let v = cut.remove(i);
        if !is_k_finitizing_vertex_cut(graph, cut, k) {
            cut.insert(i, v);
            i += 1;
        }
    }
    // Single swaps with a strictly cheaper outside vertex.
    let mut improved = true;
    while improved {
        improved = false;
        'outer: for i in 0..cut.len() {
            let v = cut[i];
            for u in 0..graph.vertex_count() {
                if mu.atom(u) < mu.atom(v) && !cut.contains(&u) {
                    cut[i] = u;
                    if is_k_finitizing_vertex_cut(graph, cut, k) {
                        improved = true;
                        break 'outer;
                    }
                    cut[i] = v;
                }
            }
        }
    }
}

/// Cheapest (or heuristic) K-finitizing edge cut. `nu` gives the mass of
/// each edge in the order of [`WeightedGraph::edges`]; `None` means uniform
/// mass `1/|E|`.
pub fn edge_price(
    graph: &WeightedGraph,
    rho: &Cocycle,
    nu: Option<&[f64]>,
    k: usize,
    method: PriceMethod,
) -> Result<CutReport> {
    let k = k.max(1);
    let edges = graph.edges();
    let masses: Vec<f64> = match nu {
        Some(m) if m.len() == edges.len() => m.to_vec(),
        Some(m) => {
            return Err(Error::MalformedGraph(alloc::format!(
                "{} edge masses for {} edges",
                m.len(),
                edges.len()
            )))
        }
        None => vec![1.0 / edges.len().max(1) as f64; edges.len()],
    };
    let mass_of: alloc::collections::BTreeMap<(usize, usize), f64> =
        edges.iter().copied().zip(masses.iter().copied()).collect();
    let mut cut: Vec<(usize, usize)> = Vec::new();
    match method {
        PriceMethod::Exact => {
            check_exact(graph)?;
            for comp in graph.components() {
                if comp.len() <= k {
                    continue;
                }
                let local = Local::new(graph, comp);
                let mut cost = alloc::collections::BTreeMap::new();
                for (a, nbrs) in local.adjacency.iter().enumerate() {
                    for &b in nbrs {
                        cost.insert(edge_key(a, b), mass_of[&edge_key(comp[a], comp[b])]);
                    }
                }
                let all: BTreeSet<_> = cost.keys().copied().collect();
                let mut search = EdgeSearch {
                    local: &local,
                    cost,
                    k,
                    best: f64::INFINITY,
                    best_cut: all,
                };
                search.run(&mut BTreeSet::new(), &mut BTreeSet::new(), 0.0);
                cut.extend(search.best_cut.iter().map(|&(a, b)| edge_key(comp[a], comp[b])));
            }
        }
        PriceMethod::Greedy | PriceMethod::Local => {
            cut = greedy_edge_cut(graph, k);
            if method == PriceMethod::Local {
                cut.sort_by(|a, b| mass_of[b].total_cmp(&mass_of[a]).then(a.cmp(b)));
                let mut i = 0;
                while i < cut.len() {
                    let e = cut.remove(i);
                    if !is_k_finitizing_edge_cut(graph, &cut, k) {
                        cut.insert(i, e);
                        i += 1;
                    }
                }
            }
        }
    }
    cut.sort_unstable();
    let cost = |c: &Cut| match c {
        Cut::Edges(es) => es.iter().map(|e| mass_of[e]).sum(),
        Cut::Vertices(_) => unreachable!(),
    };
    Ok(cut_report(graph, rho, &cost, Cut::Edges(cut), k, method))
}

/// Carves BFS regions of `k` vertices out of oversized components and cuts
/// the edges leaving each region.
fn greedy_edge_cut(graph: &WeightedGraph, k: usize) -> Vec<(usize, usize)> {
    let n = graph.vertex_count();
    let mut cut = BTreeSet::new();
    loop {
        let comps = remaining_components(graph, &vec![false; n], &cut);
        let Some(big) = comps.into_iter().find(|c| c.len() > k) else {
            break;
        };
        let mut region = vec![*big.iter().min().unwrap()];
        let mut inside = BTreeSet::from([region[0]]);
        let mut head = 0;
        while head < region.len() && region.len() < k {
            let v = region[head];
            head += 1;
            for &w in graph.neighbors(v) {
                if region.len() < k && !inside.contains(&w) && !cut.contains(&edge_key(v, w)) {
                    inside.insert(w);
                    region.push(w);
                }
            }
        }
        for &v in &region {
            for &w in graph.neighbors(v) {
                if !inside.contains(&w) {
                    cut.insert(edge_key(v, w));
                }
            }
        }
    }
    cut.into_iter().collect()
}

/// Prices at each threshold in `ks`.
pub fn price_curve(
    graph: &WeightedGraph,
    rho: &Cocycle,
    mu: &RhoMeasure,
    ks: &[usize],
    method: PriceMethod,
) -> Result<Vec<CutReport>> {
    ks.iter().map(|&k| vertex_price(graph, rho, mu, k, method)).collect()
}

/// How a finite list of sets continues past its end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Empty sets forever.
    Empty,
    /// The last set forever.
    Constant,
    /// The last `period` sets repeat forever.
    Periodic(usize),
}

impl Tail {
    fn recurring<'a>(&self, sets: &'a [Vec<usize>]) -> &'a [Vec<usize>] {
        let len = sets.len();
        match *self {
            Tail::Empty => &[],
            Tail::Constant => &sets[len.saturating_sub(1)..],
            Tail::Periodic(p) => &sets[len.saturating_sub(p)..],
        }
    }
}

/// `Bₙ = ⋃_{k>n} Aₖ` for each index of the list.
#[derive(Debug, Clone, PartialEq)]
pub struct Vanishing {
    pub sets: Vec<Vec<usize>>,
    /// Indices `k` with `μ(Aₖ) ≥ 2⁻ᵏ`, violating the input requirement.
    pub violations: Vec<usize>,
    /// Whether `⋂ Bₙ` is null.
    pub vanishes: bool,
}

pub fn vanishing_sequence(sets: &[Vec<usize>], mu: &RhoMeasure, tail: Tail) -> Vanishing {
    let recurring: BTreeSet<usize> = tail.recurring(sets).iter().flatten().copied().collect();
    let mut out = vec![Vec::new(); sets.len()];
    let mut acc = recurring.clone();
    for n in (0..sets.len()).rev() {
        out[n] = acc.iter().copied().collect();
        acc.extend(sets[n].iter().copied());
    }
    let violations = sets
        .iter()
        .enumerate()
        .filter(|(k, a)| mu.mass(a) >= powi(0.5, *k as i32))
        .map(|(k, _)| k)
        .collect();
    let rest: Vec<usize> = recurring.into_iter().collect();
    Vanishing {
        sets: out,
        violations,
        vanishes: mu.mass(&rest) == 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Limsup {
    pub set: Vec<usize>,
    /// `μ(limsup Dₙ)`.
    pub set_mass: f64,
    /// `limsup μ(Dₙ)`.
    pub mass_limsup: f64,
}

impl Limsup {
    pub fn holds(&self) -> bool {
        self.set_mass >= self.mass_limsup - 1e-12
    }
}

/// Both sides of `μ(limsup Dₙ) ≥ limsup μ(Dₙ)`; only the tail matters.
pub fn limsup_mass(sets: &[Vec<usize>], mu: &RhoMeasure, tail: Tail) -> Limsup {
    let recurring = tail.recurring(sets);
    let set: Vec<usize> = recurring
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mass_limsup = recurring.iter().map(|d| mu.mass(d)).fold(0.0, f64::max);
    Limsup {
        set_mass: mu.mass(&set),
        set,
        mass_limsup,
    }
}
