//! Test-side generators and brute-force oracles. Nothing here calls into
//! the crate's search code; the oracles only use plain graph data.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use tiler_core::{build_graph, Cocycle, WeightedGraph};

/// A random instance: edges of a graph on `n` vertices plus log-weights
/// and function values.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub log_w: Vec<f64>,
    pub f: Vec<f64>,
}

impl Instance {
    pub fn build(&self) -> (WeightedGraph, Cocycle) {
        build_graph(&self.edges, &self.log_w).expect("generated instances are valid")
    }
}

/// Random spanning tree plus `extra` random edges: always connected.
pub fn random_connected_edges<R: Rng>(rng: &mut R, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.insert((u, v));
    }
    if n >= 2 {
        for _ in 0..extra {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    edges.into_iter().collect()
}

/// Random graph with edge probability `p`; may be disconnected.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                out.push((a, b));
            }
        }
    }
    out
}

pub fn random_instance<R: Rng>(rng: &mut R, n: usize, extra: usize, spread: f64) -> Instance {
    Instance {
        n,
        edges: random_connected_edges(rng, n, extra),
        log_w: (0..n).map(|_| rng.gen_range(-spread..=spread)).collect(),
        f: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

prop_compose! {
    /// Connected instance with up to `max_n` vertices.
    pub fn instance(max_n: usize)(n in 1..=max_n)(
        n in Just(n),
        parents in proptest::collection::vec(any::<prop::sample::Index>(), n),
        extra in proptest::collection::vec((0..n, 0..n), 0..=n),
        log_w in proptest::collection::vec(-3.0f64..3.0, n),
        f in proptest::collection::vec(-1.0f64..1.0, n),
    ) -> Instance {
        let mut edges = BTreeSet::new();
        for v in 1..n {
            edges.insert((parents[v].index(v), v));
        }
        for (a, b) in extra {
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        Instance { n, edges: edges.into_iter().collect(), log_w, f }
    }
}

/// Adjacency as bitmasks, for graphs with at most 64 vertices.
pub fn adjacency_masks(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    let mut adj = vec![0u64; n];
    for &(a, b) in edges {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    adj
}

/// Whether the vertices of `mask` induce a connected subgraph.
pub fn mask_connected(adj: &[u64], mask: u64) -> bool {
    if mask == 0 {
        return false;
    }
    let mut reached = mask & mask.wrapping_neg();
    loop {
        let mut next = reached;
        let mut rest = reached;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            next |= adj[v] & mask;
        }
        if next == reached {
            return reached == mask;
        }
        reached = next;
    }
}

pub fn mask_vertices(mask: u64) -> Vec<usize> {
    (0..64).filter(|&v| mask >> v & 1 == 1).collect()
}

/// Every nonempty connected vertex set, as bitmasks. `n ≤ 20`.
pub fn connected_subsets(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    assert!(n <= 20);
    let adj = adjacency_masks(n, edges);
    (1u64..1 << n).filter(|&m| mask_connected(&adj, m)).collect()
}

/// Connected components by plain DFS.
pub fn components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let adj = adjacency_masks(n, edges);
    let mut seen = 0u64;
    let mut out = Vec::new();
    for s in 0..n {
        if seen >> s & 1 == 1 {
            continue;
        }
        let mut comp = 1u64 << s;
        loop {
            let grown = mask_vertices(comp).iter().fold(comp, |m, &v| m | adj[v]);
            if grown == comp {
                break;
            }
            comp = grown;
        }
        seen |= comp;
        out.push(mask_vertices(comp));
    }
    out
}

fn canonical(n: usize, adj: &[u64]) -> Vec<u64> {
    // Only orderings sorted by degree are tried; isomorphisms preserve
    // degrees, so the minimum over them is still a canonical form.
    let deg: Vec<u32> = adj.iter().map(|m| m.count_ones()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(deg[v]));
    let mut best: Option<Vec<u64>> = None;
    let mut perm = order.clone();
    permute_within_degrees(&deg, &mut perm, 0, &mut |perm| {
        let mut pos = vec![0usize; n];
        for (i, &v) in perm.iter().enumerate() {
            pos[v] = i;
        }
        let mut code = vec![0u64; n];
        for (i, &v) in perm.iter().enumerate() {
            code[i] = mask_vertices(adj[v]).iter().fold(0u64, |m, &w| m | 1 << pos[w]);
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    });
    best.unwrap_or_default()
}

fn permute_within_degrees(deg: &[u32], perm: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == perm.len() {
        visit(perm);
        return;
    }
    for i in start..perm.len() {
        if deg[perm[i]] != deg[perm[start]] {
            break;
        }
        perm.swap(start, i);
        permute_within_degrees(deg, perm, start + 1, visit);
        perm.swap(start, i);
    }
}

/// All graphs on `n` vertices up to isomorphism, as edge lists.
pub fn graphs_up_to_iso(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for base in graphs_up_to_iso(n - 1) {
        for nbrs in 0u64..1 << (n - 1) {
            let mut edges = base.clone();
            edges.extend(mask_vertices(nbrs).into_iter().map(|u| (u, n - 1)));
            let adj = adjacency_masks(n, &edges);
            if seen.insert(canonical(n, &adj)) {
                out.push(edges);
            }
        }
    }
    out
}

/// Connected graphs on `n` vertices up to isomorphism.
pub fn connected_graphs_up_to_iso(n: usize) -> Vec<Vec<(usize, usize)>> {
    graphs_up_to_iso(n)
        .into_iter()
        .filter(|e| n == 0 || components(n, e).len() == 1)
        .collect()
}

/// Membership in the λ-central family of ρ-ratio at least `min_ratio`,
/// from raw weights.
pub fn central(inst: &Instance, set: &[usize], lambda: f64, min_ratio: f64) -> bool {
    let w: Vec<f64> = set.iter().map(|&v| inst.log_w[v].exp()).collect();
    let total: f64 = w.iter().sum();
    let top = w.iter().copied().fold(0.0, f64::max);
    let avg = set.iter().zip(&w).map(|(&v, x)| x * inst.f[v]).sum::<f64>() / total;
    avg.abs() < lambda && total / top >= min_ratio
}

/// Connected, invariant family sets over `cells`, as (set, mask).
fn invariant_family_sets<'a>(
    inst: &'a Instance,
    cells: &'a [u64],
    family: &'a dyn Fn(&[usize]) -> bool,
) -> impl Iterator<Item = (Vec<usize>, u64)> + 'a {
    connected_subsets(inst.n, &inst.edges)
        .into_iter()
        .filter_map(move |mask| {
            let whole = cells.iter().all(|&c| c & mask == 0 || c & mask == c);
            let set = mask_vertices(mask);
            (whole && family(&set)).then_some((set, mask))
        })
}

fn cell_masks(cells: &[Vec<usize>]) -> Vec<u64> {
    cells.iter().map(|c| c.iter().fold(0, |m, &v| m | 1 << v)).collect()
}

/// A p-pack over `cells` in the family, by enumeration.
pub fn brute_pack(
    inst: &Instance,
    cells: &[Vec<usize>],
    p: f64,
    family: &dyn Fn(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    let masks = cell_masks(cells);
    let dom = masks.iter().fold(0u64, |a, &b| a | b);
    let found = invariant_family_sets(inst, &masks, family).find_map(|(set, _)| {
        let top = set.iter().map(|&v| inst.log_w[v]).fold(f64::NEG_INFINITY, f64::max);
        let (mut fresh, mut covered) = (0.0, 0.0);
        for &v in &set {
            let m = (inst.log_w[v] - top).exp();
            if dom >> v & 1 == 1 {
                covered += m;
            } else {
                fresh += m;
            }
        }
        (fresh > 0.0 && fresh >= p * covered).then_some(set)
    });
    found
}

/// A family set containing at most one cell that is not itself a cell.
pub fn brute_extension(inst: &Instance, cells: &[Vec<usize>], family: &dyn Fn(&[usize]) -> bool) -> Option<Vec<usize>> {
    let masks = cell_masks(cells);
    let found = invariant_family_sets(inst, &masks, family).find_map(|(set, mask)| {
        let inside = masks.iter().filter(|&&c| c & mask == c).count();
        (inside <= 1 && !masks.contains(&mask)).then_some(set)
    });
    found
}
