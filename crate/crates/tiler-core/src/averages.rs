//! ρ-weighted averages over sets and equivalence relations.
//!
//! `A_f^ρ[U] = Σ_{y∈U} f(y) ρ(y, x) / Σ_{y∈U} ρ(y, x)` does not depend on the
//! reference point `x`; every computation here normalizes by the heaviest
//! vertex of the set instead of picking one.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::graph_core::{Cocycle, EquivRel, RhoMeasure, SortedSet, WeightedGraph};
use crate::math::{abs, exp, ln};
use crate::{Error, Result};

/// Vertex values with a cached sup-norm and, when a measure was supplied,
/// a cached mean.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
    sup_norm: f64,
    mean: Option<f64>,
}

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(vertex) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { vertex });
        }
        let sup_norm = values.iter().fold(0.0f64, |m, &v| m.max(abs(v)));
        Ok(VertexFunction {
            values,
            sup_norm,
            mean: None,
        })
    }

    pub fn with_measure(values: Vec<f64>, mu: &RhoMeasure) -> Result<Self> {
        let mut f = VertexFunction::new(values)?;
        f.mean = Some(mu.integral(&f.values));
        Ok(f)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `‖f‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `∫ f dμ` for the measure given at construction.
    pub fn mean(&self) -> Option<f64> {
        self.mean
    }
}

impl Deref for VertexFunction {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Running totals of a vertex set: size, heaviest log-weight, mass relative
/// to the heaviest vertex and the matching weighted sum of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetSummary {
    pub len: usize,
    pub log_max: f64,
    pub mass: f64,
    pub weighted_sum: f64,
}

impl Default for SetSummary {
    fn default() -> Self {
        SetSummary::EMPTY
    }
}

impl SetSummary {
    pub const EMPTY: SetSummary = SetSummary {
        len: 0,
        log_max: f64::NEG_INFINITY,
        mass: 0.0,
        weighted_sum: 0.0,
    };

    /// Summary of a nonempty single-component set.
    pub fn of(f: &[f64], rho: &Cocycle, set: &[usize]) -> Result<SetSummary> {
        let m = rho.mass(set)?;
        let weighted_sum = set.iter().map(|&v| exp(rho.log_weight(v) - m.log_max) * f[v]).sum();
        Ok(SetSummary {
            len: set.len(),
            log_max: m.log_max,
            mass: m.relative,
            weighted_sum,
        })
    }

    /// Adds one vertex with the given log-weight and value.
    pub fn push(&mut self, log_weight: f64, value: f64) {
        self.merge(&SetSummary {
            len: 1,
            log_max: log_weight,
            mass: 1.0,
            weighted_sum: value,
        });
    }

    /// Adds a disjoint set.
    pub fn merge(&mut self, other: &SetSummary) {
        if other.len == 0 {
            return;
        }
        if self.len == 0 {
            *self = *other;
            return;
        }
        if other.log_max > self.log_max {
            let s = exp(self.log_max - other.log_max);
            self.mass = self.mass * s + other.mass;
            self.weighted_sum = self.weighted_sum * s + other.weighted_sum;
            self.log_max = other.log_max;
        } else {
            let s = exp(other.log_max - self.log_max);
            self.mass += other.mass * s;
            self.weighted_sum += other.weighted_sum * s;
        }
        self.len += other.len;
    }

    pub fn merged(mut self, other: &SetSummary) -> SetSummary {
        self.merge(other);
        self
    }

    pub fn average(&self) -> f64 {
        self.weighted_sum / self.mass
    }

    /// `ρ^max` of the set.
    pub fn rho_max(&self) -> f64 {
        self.mass
    }

    /// Log of the total weight in the component's common reference.
    pub fn log_total(&self) -> f64 {
        if self.len == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_max + ln(self.mass)
        }
    }
}

/// `A_f^ρ[U]`.
pub fn weighted_average(f: &[f64], rho: &Cocycle, set: &[usize]) -> Result<f64> {
    Ok(SetSummary::of(f, rho, set)?.average())
}

/// Both sides of the convexity identity for disjoint `U`, `V`, plus the
/// increment `|A[U∪V] − A[U]|` and its bound `2‖f‖∞ ρ(V)/(ρ(U)+ρ(V))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionIdentity {
    /// `A[U∪V]` evaluated directly.
    pub lhs: f64,
    /// `(ρ(U)A[U] + ρ(V)A[V]) / (ρ(U)+ρ(V))`.
    pub rhs: f64,
    pub gap: f64,
    pub increment: f64,
    pub increment_bound: f64,
}

pub fn union_identity_check(f: &[f64], rho: &Cocycle, u: &[usize], v: &[usize]) -> Result<UnionIdentity> {
    let u_set = SortedSet::new(u);
    if let Some(&x) = v.iter().find(|&&x| u_set.contains(x)) {
        return Err(Error::NotDisjoint { vertex: x });
    }
    let su = SetSummary::of(f, rho, u)?;
    let sv = SetSummary::of(f, rho, v)?;
    let mut both = u.to_vec();
    both.extend_from_slice(v);
    let lhs = weighted_average(f, rho, &both)?;

    // Masses in a shared reference: the heavier of the two maxima.
    let top = su.log_max.max(sv.log_max);
    let mu = su.mass * exp(su.log_max - top);
    let mv = sv.mass * exp(sv.log_max - top);
    let rhs = (mu * su.average() + mv * sv.average()) / (mu + mv);

    let sup = both.iter().fold(0.0f64, |m, &x| m.max(abs(f[x])));
    Ok(UnionIdentity {
        lhs,
        rhs,
        gap: abs(lhs - rhs),
        increment: abs(lhs - su.average()),
        increment_bound: 2.0 * sup * mv / (mu + mv),
    })
}

/// `A_f^ρ[F]`: each vertex gets the weighted average of its class.
pub fn mean_over(f: &[f64], rho: &Cocycle, relation: &EquivRel) -> Result<VertexFunction> {
    let mut out = vec![0.0; f.len()];
    for class in relation.classes() {
        let a = weighted_average(f, rho, class)?;
        for &v in class {
            out[v] = a;
        }
    }
    VertexFunction::new(out)
}

/// The union of `F`-classes on which `|A_f^ρ[F]| ≤ ‖f‖₁/ε`. By Chebyshev
/// and the L¹ contraction it carries at least `1 − ε` of the mass.
pub fn chebyshev_restriction(
    f: &[f64],
    rho: &Cocycle,
    relation: &EquivRel,
    mu: &RhoMeasure,
    eps: f64,
) -> Result<Vec<usize>> {
    let averaged = mean_over(f, rho, relation)?;
    let bound = mu.l1_norm(f) / eps;
    Ok((0..f.len()).filter(|&v| abs(averaged[v]) <= bound).collect())
}

/// Result of [`intermediate_value_grow`].
#[derive(Debug, Clone, PartialEq)]
pub struct Growth {
    /// Sorted vertex set `W` with `U ⊆ W ⊆ V`.
    pub set: Vec<usize>,
    pub average: f64,
    /// `‖f↾(V∖U)‖∞ · maxρ(V∖U) / ρ(U)`.
    pub delta: f64,
    /// `‖f↾V‖∞ · maxρ(V∖U) / ρ(U)`: half of the largest possible single-step
    /// jump, which bounds the miss unconditionally.
    pub delta_sound: f64,
}

/// Grows `U` inside `V` one boundary vertex at a time, keeping the set
/// connected, until the average reaches or crosses `r`. Each step takes the
/// vertex bringing the average closest to `r`, smallest id on ties. Of the
/// two sets straddling `r` the closer one is returned.
pub fn intermediate_value_grow(
    f: &[f64],
    rho: &Cocycle,
    graph: &WeightedGraph,
    u: &[usize],
    v: &[usize],
    r: f64,
) -> Result<Growth> {
    let u_set = SortedSet::new(u);
    let v_set = SortedSet::new(v);
    if u_set.as_slice().iter().any(|&x| !v_set.contains(x)) {
        return Err(Error::InvariantBreach("U must be a subset of V".into()));
    }
    if !graph.is_connected_set(u_set.as_slice()) || !graph.is_connected_set(v_set.as_slice()) {
        return Err(Error::InvariantBreach("U and V must be connected".into()));
    }
    let su = SetSummary::of(f, rho, u_set.as_slice())?;
    let sv = SetSummary::of(f, rho, v_set.as_slice())?;
    let (low, high) = if su.average() <= sv.average() {
        (su.average(), sv.average())
    } else {
        (sv.average(), su.average())
    };
    if !(low <= r && r <= high) {
        return Err(Error::TargetOutOfRange { target: r, low, high });
    }

    let outside: Vec<usize> = v_set
        .as_slice()
        .iter()
        .copied()
        .filter(|&x| !u_set.contains(x))
        .collect();
    let (delta, delta_sound) = if outside.is_empty() {
        (0.0, 0.0)
    } else {
        let sup_out = outside.iter().fold(0.0f64, |m, &x| m.max(abs(f[x])));
        let sup_all = v_set.as_slice().iter().fold(0.0f64, |m, &x| m.max(abs(f[x])));
        let heaviest = outside.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(rho.log_weight(x)));
        let ratio = exp(heaviest - su.log_total());
        (sup_out * ratio, sup_all * ratio)
    };

    let mut inside = vec![false; v_set.as_slice().len()];
    for &x in u_set.as_slice() {
        inside[v_set.position(x).unwrap()] = true;
    }
    let mut members = u_set.into_vec();
    let mut summary = su;
    while summary.average() != r && members.len() < inside.len() {
        let mut best: Option<(f64, usize, SetSummary)> = None;
        for &x in &members {
            for &y in graph.neighbors(x) {
                let Some(j) = v_set.position(y) else { continue };
                if inside[j] {
                    continue;
                }
                let mut next = summary;
                next.push(rho.log_weight(y), f[y]);
                let miss = abs(next.average() - r);
                let better = match best {
                    None => true,
                    Some((m, id, _)) => miss < m || (miss == m && y < id),
                };
                if better {
                    best = Some((miss, y, next));
                }
            }
        }
        let (_, y, next) = best.expect("V is connected, so some vertex is addable");
        let before = summary.average() - r;
        let after = next.average() - r;
        if after == 0.0 || (before < 0.0) != (after < 0.0) {
            if abs(after) < abs(before) {
                members.push(y);
            }
            break;
        }
        inside[v_set.position(y).unwrap()] = true;
        members.push(y);
        summary = next;
    }
    members.sort_unstable();
    Ok(Growth {
        average: weighted_average(f, rho, &members)?,
        set: members,
        delta,
        delta_sound,
    })
}

/// Position of an average relative to `I_λ = (−λ, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSign {
    /// Average in the open interval `(−λ, λ)`.
    Central,
    /// Average `≥ λ`.
    Positive,
    /// Average `≤ −λ`.
    Negative,
}

pub fn classify_value(a: f64, lambda: f64) -> LambdaSign {
    if a >= lambda {
        LambdaSign::Positive
    } else if a <= -lambda {
        LambdaSign::Negative
    } else {
        LambdaSign::Central
    }
}

pub fn lambda_classify(f: &[f64], rho: &Cocycle, set: &[usize], lambda: f64) -> Result<LambdaSign> {
    Ok(classify_value(weighted_average(f, rho, set)?, lambda))
}

/// Membership in `𝒮(f, λ, L, F)`: `U` is `F`-invariant, connected,
/// λ-central, and its ratio in the quotient by `F` is at least `L`.
pub fn family_s_membership(
    graph: &WeightedGraph,
    f: &[f64],
    rho: &Cocycle,
    set: &[usize],
    lambda: f64,
    min_ratio: f64,
    relation: &EquivRel,
) -> bool {
    if set.is_empty() || !relation.is_invariant(set) || !graph.is_connected_set(set) {
        return false;
    }
    let Ok(summary) = SetSummary::of(f, rho, set) else {
        return false;
    };
    if classify_value(summary.average(), lambda) != LambdaSign::Central {
        return false;
    }
    let mut classes: Vec<usize> = set.iter().map(|&v| relation.class_of(v)).collect();
    classes.sort_unstable();
    classes.dedup();
    let heaviest = classes
        .iter()
        .map(|&c| rho.mass(relation.class(c)).map(|m| m.log_total()))
        .fold(f64::NEG_INFINITY, |m, l| m.max(l.unwrap_or(f64::NEG_INFINITY)));
    exp(summary.log_total() - heaviest) >= min_ratio
}
