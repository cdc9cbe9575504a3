//! Finite models: Schreier-type graphs of concrete actions with their
//! cocycles, invariant measures and test functions.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tiler_core::{build_graph, Cocycle, Error, RhoMeasure, WeightedGraph};

use crate::error::LabResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Rotation,
    Odometer,
    Bernoulli,
    FreeTree,
    RandomRegular,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rotation" => Ok(ModelKind::Rotation),
            "odometer" => Ok(ModelKind::Odometer),
            "bernoulli" => Ok(ModelKind::Bernoulli),
            "free_tree" => Ok(ModelKind::FreeTree),
            "random_regular" => Ok(ModelKind::RandomRegular),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::Rotation => "rotation",
            ModelKind::Odometer => "odometer",
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::FreeTree => "free_tree",
            ModelKind::RandomRegular => "random_regular",
        };
        f.write_str(s)
    }
}

/// What to generate. `n` is the orbit length for rotations, the string
/// length for odometers and Bernoulli shifts, the depth for trees and the
/// vertex count for random regular graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    /// Rotation only: a path instead of a cycle, with both ends as frontier.
    pub path: bool,
    /// Random regular only; must be even.
    pub degree: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::Rotation,
            n: 1 << 12,
            p: 0.6,
            q: 0.4,
            seed: 0,
            path: false,
            degree: 4,
        }
    }
}

/// A generated instance.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub graph: WeightedGraph,
    pub cocycle: Cocycle,
    pub mu: RhoMeasure,
    pub f: Vec<f64>,
    /// A positive companion function for ratio experiments.
    pub g: Vec<f64>,
    pub frontier: Option<Vec<bool>>,
    /// `∫f dμ` from a closed form, where one is known.
    pub exact_integral: Option<f64>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn bad(why: impl Into<String>) -> Error {
    Error::BadModel(why.into())
}

pub fn generate_model(spec: &ModelSpec) -> LabResult<Model> {
    if spec.n == 0 {
        return Err(bad("size must be positive").into());
    }
    match spec.kind {
        ModelKind::Rotation => rotation(spec),
        ModelKind::Odometer => odometer(spec),
        ModelKind::Bernoulli => bernoulli(spec),
        ModelKind::FreeTree => free_tree(spec),
        ModelKind::RandomRegular => random_regular(spec),
    }
}

fn centered(mut f: Vec<f64>, mu: &RhoMeasure) -> Vec<f64> {
    let m = mu.integral(&f);
    f.iter_mut().for_each(|x| *x -= m);
    f
}

/// `n` consecutive points of the golden-ratio rotation orbit of 0, joined
/// along the orbit. `f` is the indicator of `[0, 1/2)` minus its mean.
fn rotation(spec: &ModelSpec) -> LabResult<Model> {
    let n = spec.n;
    if n < 3 && !spec.path {
        return Err(bad("a rotation cycle needs at least 3 points").into());
    }
    let points: Vec<f64> = (0..n).map(|i| (i as f64 * GOLDEN).fract()).collect();
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    if !spec.path {
        edges.push((n - 1, 0));
    }
    let (graph, cocycle) = build_graph(&edges, &vec![0.0; n])?;
    let mu = RhoMeasure::by_component_size(&graph, &cocycle);
    let indicator: Vec<f64> = points.iter().map(|&x| if x < 0.5 { 1.0 } else { 0.0 }).collect();
    let f = centered(indicator, &mu);
    let g = points.iter().map(|&x| 1.5 + (2.0 * PI * x).cos()).collect();
    let frontier = spec.path.then(|| {
        let mut fr = vec![false; n];
        fr[0] = true;
        fr[n - 1] = true;
        fr
    });
    Ok(Model {
        spec: spec.clone(),
        graph,
        cocycle,
        mu,
        f,
        g,
        frontier,
        exact_integral: Some(0.0),
    })
}

fn check_probability(p: f64, name: &str) -> Result<(), Error> {
    if !(p > 0.0 && p < 1.0) {
        return Err(bad(format!("{name} = {p} must lie strictly between 0 and 1")));
    }
    Ok(())
}

fn check_bits(d: usize) -> Result<(), Error> {
    if d > 24 {
        return Err(bad(format!("{d} binary digits exceed the memory budget")));
    }
    Ok(())
}

/// Binary strings of length `d` (least significant digit first) under
/// adding one with carry, so the graph is a single cycle. The cocycle is
/// the product-Bernoulli(p) weight, making `μ` the product measure.
fn odometer(spec: &ModelSpec) -> LabResult<Model> {
    let d = spec.n;
    check_bits(d)?;
    check_probability(spec.p, "p")?;
    let size = 1usize << d;
    let edges: Vec<(usize, usize)> = if size >= 3 {
        (0..size).map(|x| (x, (x + 1) % size)).collect()
    } else {
        vec![(0, 1)]
    };
    let (lp, lq) = (spec.p.ln(), (1.0 - spec.p).ln());
    let log_w: Vec<f64> = (0..size)
        .map(|x| {
            let ones = (x as u64).count_ones() as f64;
            ones * lp + (d as f64 - ones) * lq
        })
        .collect();
    let (graph, cocycle) = build_graph(&edges, &log_w)?;
    let mu = RhoMeasure::by_component_size(&graph, &cocycle);
    let first: Vec<f64> = (0..size).map(|x| (x & 1) as f64).collect();
    let f = centered(first, &mu);
    let g = (0..size).map(|x| 1.0 + (x >> 1 & 1) as f64).collect();
    Ok(Model {
        spec: spec.clone(),
        graph,
        cocycle,
        mu,
        f,
        g,
        frontier: None,
        exact_integral: Some(0.0),
    })
}

/// Success probability of the invariant measure: normalizing
/// `(p/q)^x ((1−p)/(1−q))^(1−x)` over `x ∈ {0, 1}`.
pub fn bernoulli_tilt(p: f64, q: f64) -> f64 {
    let a = p / q;
    let b = (1.0 - p) / (1.0 - q);
    a / (a + b)
}

/// `ln w(x)` for the string with `ones` ones among `d` digits, where
/// `w(x) = Π (p/q)^{xᵢ} ((1−p)/(1−q))^{1−xᵢ}`.
pub fn bernoulli_log_weight(ones: u32, d: usize, p: f64, q: f64) -> f64 {
    ones as f64 * (p / q).ln() + (d as f64 - ones as f64) * ((1.0 - p) / (1.0 - q)).ln()
}

/// The exact weight as a rational, with `p` and `q` read as the nearest
/// small fractions.
pub fn bernoulli_exact_weight(x: usize, d: usize, p: f64, q: f64) -> Option<BigRational> {
    let to_big = |r: Ratio<i64>| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
    let p = to_big(Ratio::<i64>::approximate_float(p)?);
    let q = to_big(Ratio::<i64>::approximate_float(q)?);
    let one = BigRational::from_integer(BigInt::from(1));
    let up = &p / &q;
    let down = (&one - &p) / (&one - &q);
    let mut w = one;
    for i in 0..d {
        if x >> i & 1 == 1 {
            w *= &up;
        } else {
            w *= &down;
        }
    }
    Some(w)
}

/// The depth-`d` truncation of the shift: strings of length `d` joined to
/// their shifts `x ↦ (x₁ … x_{d−1} b)`, undirected, without loops. The
/// cocycle is `w(x) = Π (p/q)^{xᵢ} ((1−p)/(1−q))^{1−xᵢ}`, so `μ ∝ w` is the
/// product measure with success probability [`bernoulli_tilt`]. `f` is the
/// first-digit indicator minus that probability.
fn bernoulli(spec: &ModelSpec) -> LabResult<Model> {
    let d = spec.n;
    check_bits(d)?;
    check_probability(spec.p, "p")?;
    check_probability(spec.q, "q")?;
    if d < 2 {
        return Err(bad("the shift needs at least 2 digits").into());
    }
    let size = 1usize << d;
    let mut edges = Vec::with_capacity(2 * size);
    for x in 0..size {
        for b in 0..2 {
            let y = (x >> 1) | (b << (d - 1));
            if y != x {
                edges.push((x.min(y), x.max(y)));
            }
        }
    }
    let log_w: Vec<f64> = (0..size)
        .map(|x| bernoulli_log_weight((x as u64).count_ones(), d, spec.p, spec.q))
        .collect();
    let (graph, cocycle) = build_graph(&edges, &log_w)?;
    let mu = RhoMeasure::by_component_size(&graph, &cocycle);
    let tilt = bernoulli_tilt(spec.p, spec.q);
    let f: Vec<f64> = (0..size).map(|x| (x & 1) as f64 - tilt).collect();
    let g = (0..size).map(|x| 1.0 + (x >> 1 & 1) as f64).collect();
    Ok(Model {
        spec: spec.clone(),
        graph,
        cocycle,
        mu,
        f,
        g,
        frontier: None,
        exact_integral: Some(0.0),
    })
}

/// The 4-regular tree truncated at depth `n`. Leaves form the frontier.
fn free_tree(spec: &ModelSpec) -> LabResult<Model> {
    let depth = spec.n;
    if depth > 10 {
        return Err(bad(format!("tree depth {depth} exceeds the memory budget")).into());
    }
    let mut edges = Vec::new();
    let mut level = vec![0usize];
    let mut count = 1;
    for r in 0..depth {
        let mut next = Vec::new();
        for &v in &level {
            let children = if r == 0 { 4 } else { 3 };
            for _ in 0..children {
                edges.push((v, count));
                next.push(count);
                count += 1;
            }
        }
        level = next;
    }
    let (graph, cocycle) = build_graph(&edges, &vec![0.0; count])?;
    let mu = RhoMeasure::by_component_size(&graph, &cocycle);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = centered(raw, &mu);
    let g = (0..count).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut frontier = vec![false; count];
    if depth > 0 {
        for &v in &level {
            frontier[v] = true;
        }
    }
    Ok(Model {
        spec: spec.clone(),
        graph,
        cocycle,
        mu,
        f,
        g,
        frontier: Some(frontier),
        exact_integral: Some(0.0),
    })
}

/// Union of `degree/2` seeded random permutations, loops and repeats
/// dropped, with seeded log-weights in `[−1, 1]`.
fn random_regular(spec: &ModelSpec) -> LabResult<Model> {
    let n = spec.n;
    if spec.degree == 0 || spec.degree % 2 == 1 {
        return Err(bad(format!("degree {} must be positive and even", spec.degree)).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges = Vec::new();
    for _ in 0..spec.degree / 2 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (x, &y) in perm.iter().enumerate() {
            if x != y {
                edges.push((x, y));
            }
        }
    }
    let log_w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (graph, cocycle) = build_graph(&edges, &log_w)?;
    let mu = RhoMeasure::by_component_size(&graph, &cocycle);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = centered(raw, &mu);
    let g = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    Ok(Model {
        spec: spec.clone(),
        graph,
        cocycle,
        mu,
        f,
        g,
        frontier: None,
        exact_integral: Some(0.0),
    })
}
