//! Blocks, cones and the dominus map.
//!
//! `Blk(x, α)` is the component of `x` in the subgraph induced on vertices
//! of weight at most `α·w(x)`. Blocks at `α = 1` form a laminar family, and
//! iterating [`dominus_step`] walks up that family until it reaches the
//! heaviest vertex of the component.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph_core::{quantize_log, Cocycle, WeightedGraph};
use crate::math::ln;
use crate::{Error, Result};

/// A visible neighborhood together with the magnification that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Sorted vertices.
    pub vertices: Vec<usize>,
    pub dominus: usize,
    pub alpha: f64,
}

impl Block {
    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_subset_of(&self, other: &Block) -> bool {
        self.vertices.iter().all(|&v| other.contains(v))
    }

    /// Whether the block meets a truncation frontier. Such blocks are cut
    /// short by the truncation and are flagged rather than interpreted.
    pub fn touches(&self, frontier: &[bool]) -> bool {
        self.vertices.iter().any(|&v| frontier[v])
    }
}

/// `Blk(x, α)`.
pub fn block(graph: &WeightedGraph, rho: &Cocycle, x: usize, alpha: f64) -> Result<Block> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::BadMagnification { alpha });
    }
    // Snapped like the weights themselves, so α = w(y)/w(x) admits y.
    let limit = quantize_log(rho.log_weight(x) + ln(alpha));
    let mut seen = vec![false; graph.vertex_count()];
    let mut queue = VecDeque::from([x]);
    seen[x] = true;
    let mut vertices = vec![x];
    while let Some(v) = queue.pop_front() {
        for &w in graph.neighbors(v) {
            if !seen[w] && rho.log_weight(w) <= limit {
                seen[w] = true;
                vertices.push(w);
                queue.push_back(w);
            }
        }
    }
    vertices.sort_unstable();
    Ok(Block {
        vertices,
        dominus: x,
        alpha,
    })
}

/// How two blocks sit relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nesting {
    Equal,
    FirstInside,
    SecondInside,
    Disjoint,
}

/// Classifies a pair of blocks; overlapping but incomparable blocks are an
/// [`Error::InvariantBreach`].
pub fn nested_or_disjoint(a: &Block, b: &Block) -> Result<Nesting> {
    let a_in_b = a.is_subset_of(b);
    let b_in_a = b.is_subset_of(a);
    match (a_in_b, b_in_a) {
        (true, true) => Ok(Nesting::Equal),
        (true, false) => Ok(Nesting::FirstInside),
        (false, true) => Ok(Nesting::SecondInside),
        (false, false) => {
            if a.vertices.iter().any(|&v| b.contains(v)) {
                Err(Error::InvariantBreach(alloc::format!(
                    "blocks of {} and {} cross",
                    a.dominus,
                    b.dominus
                )))
            } else {
                Ok(Nesting::Disjoint)
            }
        }
    }
}

/// Lightest outer-boundary vertices of `set`, in id order. Empty when the
/// set is a union of components.
pub fn min_boundary(graph: &WeightedGraph, rho: &Cocycle, set: &[usize]) -> Vec<usize> {
    let boundary = graph.outer_boundary(set);
    let Some(low) = boundary.iter().map(|&v| rho.log_weight(v)).min_by(f64::total_cmp) else {
        return Vec::new();
    };
    boundary.into_iter().filter(|&v| rho.log_weight(v) == low).collect()
}

/// The smallest 1-block strictly containing `b`: `Blk(y, 1)` for the
/// lightest boundary vertex `y`, smallest id among ties.
pub fn next_block(graph: &WeightedGraph, rho: &Cocycle, b: &Block) -> Result<Block> {
    let Some(&y) = min_boundary(graph, rho, &b.vertices).first() else {
        return Err(Error::NoNextBlock {
            component: graph.component_of(b.dominus),
        });
    };
    let next = block(graph, rho, y, 1.0)?;
    if !b.is_subset_of(&next) {
        return Err(Error::InvariantBreach(alloc::format!(
            "block of {y} does not contain the block of {}",
            b.dominus
        )));
    }
    Ok(next)
}

/// Heaviest vertex of the block above `Blk(x, 1)`, smallest id among ties.
/// On a block that is a whole component this is the block's own maximum.
pub fn dominus_step(graph: &WeightedGraph, rho: &Cocycle, x: usize) -> usize {
    let own = block(graph, rho, x, 1.0).expect("α = 1 is valid");
    let target = match next_block(graph, rho, &own) {
        Ok(next) => next,
        Err(_) => own,
    };
    rho.argmax(&target.vertices).expect("blocks are nonempty")
}

/// The dominus map on every vertex.
pub fn dominus_map(graph: &WeightedGraph, rho: &Cocycle) -> Vec<usize> {
    (0..graph.vertex_count()).map(|x| dominus_step(graph, rho, x)).collect()
}

/// Whether, in every component, the forward orbits of the dominus map all
/// end in the same cycle.
pub fn orbit_merge_test(graph: &WeightedGraph, rho: &Cocycle) -> bool {
    let f = dominus_map(graph, rho);
    let n = f.len();
    // Iterating n times from any start lands on the terminal cycle.
    let mut terminal = vec![usize::MAX; n];
    for x in 0..n {
        let mut y = x;
        for _ in 0..n {
            y = f[y];
        }
        let mut cycle = vec![y];
        let mut z = f[y];
        while z != y {
            cycle.push(z);
            z = f[z];
        }
        terminal[x] = cycle.into_iter().min().unwrap();
    }
    (0..graph.component_count()).all(|c| {
        let comp = graph.component(c);
        comp.iter().all(|&x| terminal[x] == terminal[comp[0]])
    })
}

/// `Cone(x) = {y : x ∈ Blk(y, 1)}`, sorted.
pub fn cone(graph: &WeightedGraph, rho: &Cocycle, x: usize) -> Vec<usize> {
    graph
        .component(graph.component_of(x))
        .iter()
        .copied()
        .filter(|&y| block(graph, rho, y, 1.0).is_ok_and(|b| b.contains(x)))
        .collect()
}

/// Every cone at once, from one pass over the 1-blocks.
pub fn cones(graph: &WeightedGraph, rho: &Cocycle) -> Vec<Vec<usize>> {
    let n = graph.vertex_count();
    let mut out = vec![Vec::new(); n];
    for y in 0..n {
        for x in block(graph, rho, y, 1.0).expect("α = 1 is valid").vertices {
            out[x].push(y);
        }
    }
    out
}

/// A shortest path from `x` to `y` (lowest ids first on ties), if any.
pub fn connecting_path(graph: &WeightedGraph, x: usize, y: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; graph.vertex_count()];
    parent[x] = x;
    let mut queue = VecDeque::from([x]);
    while let Some(v) = queue.pop_front() {
        if v == y {
            let mut path = vec![y];
            let mut z = y;
            while z != x {
                z = parent[z];
                path.push(z);
            }
            path.reverse();
            return Some(path);
        }
        for &w in graph.neighbors(v) {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// The block at `max(α, β)` of the heaviest vertex on a connecting path,
/// which must contain both `Blk(x, α)` and `Blk(y, β)`.
pub fn amalgamate(graph: &WeightedGraph, rho: &Cocycle, a: &Block, b: &Block) -> Result<Block> {
    let path = connecting_path(graph, a.dominus, b.dominus).ok_or(Error::CrossComponent {
        a: a.dominus,
        b: b.dominus,
    })?;
    let z = rho.argmax(&path).expect("paths are nonempty");
    let joint = block(graph, rho, z, a.alpha.max(b.alpha))?;
    if !a.is_subset_of(&joint) || !b.is_subset_of(&joint) {
        return Err(Error::InvariantBreach(alloc::format!(
            "amalgam at {z} misses a block of {} or {}",
            a.dominus,
            b.dominus
        )));
    }
    Ok(joint)
}

/// Distinct blocks at magnification `alpha`, largest first, then by
/// smallest vertex. Each entry records the first vertex generating it.
pub fn distinct_blocks(graph: &WeightedGraph, rho: &Cocycle, alpha: f64) -> Result<Vec<Block>> {
    let mut out: Vec<Block> = Vec::new();
    for x in 0..graph.vertex_count() {
        let b = block(graph, rho, x, alpha)?;
        if !out.iter().any(|o| o.vertices == b.vertices) {
            out.push(b);
        }
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.vertices[0].cmp(&b.vertices[0])));
    Ok(out)
}
