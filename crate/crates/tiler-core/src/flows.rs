//! ρ-flows: sparse nonnegative functions on ordered pairs of vertices in a
//! common component, with out-flow `Σ_y φ(x,y)` and weighted in-flow
//! `Σ_x φ(x,y) ρ(x,y)` both bounded by 1.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph_core::{Cocycle, EquivRel, RhoMeasure, SortedSet, WeightedGraph};
use crate::math::exp;
use crate::{Error, Result};

/// Slack used for the flow bounds and for telling sources and sinks apart
/// from balanced vertices.
pub const FLOW_TOLERANCE: f64 = 1e-12;

/// Absent pairs carry zero flow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RhoFlow {
    entries: BTreeMap<(usize, usize), f64>,
}

impl RhoFlow {
    pub fn new() -> Self {
        RhoFlow::default()
    }

    /// Sets `φ(x, y)`; a zero value removes the pair. Nothing is checked
    /// here, see [`validate_flow`].
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        if value == 0.0 {
            self.entries.remove(&(x, y));
        } else {
            self.entries.insert((x, y), value);
        }
    }

    pub fn add(&mut self, x: usize, y: usize, value: f64) {
        let current = self.get(x, y);
        self.set(x, y, current + value);
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries.get(&(x, y)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nonzero entries in `(x, y)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(x, y), &v)| (x, y, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowBound {
    Out,
    In,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundViolation {
    pub vertex: usize,
    pub bound: FlowBound,
    pub value: f64,
}

/// Per-vertex flow accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub out_flow: Vec<f64>,
    pub in_flow: Vec<f64>,
    /// `∂φ = in − out`.
    pub net: Vec<f64>,
    /// Vertices with negative net flow.
    pub sources: Vec<usize>,
    /// Vertices with positive net flow.
    pub sinks: Vec<usize>,
    pub violations: Vec<BoundViolation>,
    /// Every source has zero in-flow and every sink zero out-flow.
    pub pure: bool,
    /// `∫ ∂φ dμ` when a measure was supplied.
    pub global_integral: Option<f64>,
}

/// Checks the entries and computes in-, out- and net flow. Bound breaches
/// are reported, not raised; negative, non-finite, diagonal or
/// cross-component entries are errors.
pub fn validate_flow(phi: &RhoFlow, rho: &Cocycle, mu: Option<&RhoMeasure>) -> Result<BalanceReport> {
    let n = rho.len();
    let mut out_flow = vec![0.0; n];
    let mut in_flow = vec![0.0; n];
    for (x, y, value) in phi.entries() {
        if x >= n || y >= n {
            return Err(Error::MalformedFlow(format!("pair ({x}, {y}) out of range")));
        }
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::MalformedFlow(format!("entry ({x}, {y}) has value {value}")));
        }
        if x == y {
            return Err(Error::MalformedFlow(format!("diagonal entry at {x}")));
        }
        let log_ratio = rho
            .log_rho(x, y)
            .map_err(|_| Error::MalformedFlow(format!("pair ({x}, {y}) crosses components")))?;
        out_flow[x] += value;
        in_flow[y] += value * exp(log_ratio);
    }

    let mut report = BalanceReport {
        net: in_flow.iter().zip(&out_flow).map(|(i, o)| i - o).collect(),
        out_flow,
        in_flow,
        sources: Vec::new(),
        sinks: Vec::new(),
        violations: Vec::new(),
        pure: true,
        global_integral: None,
    };
    for v in 0..n {
        if report.out_flow[v] > 1.0 + FLOW_TOLERANCE {
            report.violations.push(BoundViolation {
                vertex: v,
                bound: FlowBound::Out,
                value: report.out_flow[v],
            });
        }
        if report.in_flow[v] > 1.0 + FLOW_TOLERANCE {
            report.violations.push(BoundViolation {
                vertex: v,
                bound: FlowBound::In,
                value: report.in_flow[v],
            });
        }
        if report.net[v] < -FLOW_TOLERANCE {
            report.sources.push(v);
            report.pure &= report.in_flow[v] == 0.0;
        } else if report.net[v] > FLOW_TOLERANCE {
            report.sinks.push(v);
            report.pure &= report.out_flow[v] == 0.0;
        }
    }
    report.global_integral = mu.map(|m| m.integral(&report.net));
    Ok(report)
}

/// Greedy flow-definer. Inside each class `Y` of `relation`, sends `w(u)`
/// out of every `u ∈ U∩Y` into `V∩Y`. Both sides are visited ρ-decreasingly
/// (smallest id first on ties) and each transfer is
/// `min(remaining supply, (1 − in(v)) ρ(v, u))`.
///
/// `w` is indexed like `u`.
pub fn define_flow(relation: &EquivRel, rho: &Cocycle, u: &[usize], v: &[usize], w: &[f64]) -> Result<RhoFlow> {
    if w.len() != u.len() {
        return Err(Error::MalformedFlow(format!(
            "{} supplies for {} sources",
            w.len(),
            u.len()
        )));
    }
    if let Some(i) = w.iter().position(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::MalformedFlow(format!(
            "supply {} at vertex {} is outside [0, 1]",
            w[i], u[i]
        )));
    }
    let v_set = SortedSet::new(v);
    if let Some(&x) = u.iter().find(|&&x| v_set.contains(x)) {
        return Err(Error::NotDisjoint { vertex: x });
    }

    let mut supply_of: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &amount) in u.iter().zip(w) {
        *supply_of.entry(x).or_insert(0.0) += amount;
    }
    let mut by_class: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for &x in supply_of.keys() {
        by_class.entry(relation.class_of(x)).or_default().0.push(x);
    }
    for &y in v_set.as_slice() {
        by_class.entry(relation.class_of(y)).or_default().1.push(y);
    }

    let mut phi = RhoFlow::new();
    for (class, (mut sources, mut targets)) in by_class {
        if sources.is_empty() {
            continue;
        }
        let reference = sources
            .iter()
            .chain(&targets)
            .fold(f64::NEG_INFINITY, |m, &x| m.max(rho.log_weight(x)));
        let supply: f64 = sources
            .iter()
            .map(|&x| supply_of[&x] * exp(rho.log_weight(x) - reference))
            .sum();
        let capacity: f64 = targets.iter().map(|&y| exp(rho.log_weight(y) - reference)).sum();
        if supply > capacity * (1.0 + FLOW_TOLERANCE) {
            return Err(Error::InsufficientCapacity {
                class,
                supply,
                capacity,
            });
        }
        rho.sort_decreasing(&mut sources);
        rho.sort_decreasing(&mut targets);
        let mut filled = vec![0.0f64; targets.len()];
        let mut next_target = 0;
        for &x in &sources {
            let mut remaining = supply_of[&x];
            while remaining > 0.0 && next_target < targets.len() {
                let y = targets[next_target];
                let back = exp(rho.log_weight(y) - rho.log_weight(x));
                let cap = (1.0 - filled[next_target]) * back;
                if cap <= remaining {
                    if cap > 0.0 {
                        phi.add(x, y, cap);
                    }
                    remaining -= cap;
                    filled[next_target] = 1.0;
                    next_target += 1;
                } else {
                    phi.add(x, y, remaining);
                    filled[next_target] += remaining / back;
                    remaining = 0.0;
                }
            }
        }
    }
    Ok(phi)
}

/// `(∫_U out dρ, ∫_V in dρ)` for a flow whose domain avoids
/// `(U × Vᶜ) ∪ (Uᶜ × V)`. Both integrals use the heaviest vertex of `U ∪ V`
/// as reference.
pub fn balance_check(phi: &RhoFlow, rho: &Cocycle, u: &[usize], v: &[usize]) -> Result<(f64, f64)> {
    let u_set = SortedSet::new(u);
    let v_set = SortedSet::new(v);
    for (x, y, _) in phi.entries() {
        if u_set.contains(x) != v_set.contains(y) {
            return Err(Error::NotClosed { from: x, to: y });
        }
    }
    let reference = u_set
        .as_slice()
        .iter()
        .chain(v_set.as_slice())
        .fold(f64::NEG_INFINITY, |m, &x| m.max(rho.log_weight(x)));
    let mut out_total = 0.0;
    let mut in_total = 0.0;
    for (x, y, value) in phi.entries() {
        if u_set.contains(x) {
            out_total += value * exp(rho.log_weight(x) - reference);
        }
        if v_set.contains(y) {
            in_total += value * exp(rho.log_weight(x) - rho.log_weight(y)) * exp(rho.log_weight(y) - reference);
        }
    }
    Ok((out_total, in_total))
}

/// `∫ ∂φ dμ`. Zero up to rounding whenever `μ` is ρ-invariant.
pub fn global_balance(phi: &RhoFlow, rho: &Cocycle, mu: &RhoMeasure) -> Result<f64> {
    let report = validate_flow(phi, rho, Some(mu))?;
    Ok(report.global_integral.unwrap_or(0.0))
}

/// Entrywise sum; errors if the sum breaks a bound.
pub fn sum_flows(flows: &[RhoFlow], rho: &Cocycle) -> Result<RhoFlow> {
    let mut total = RhoFlow::new();
    for phi in flows {
        for (x, y, value) in phi.entries() {
            total.add(x, y, value);
        }
    }
    let report = validate_flow(&total, rho, None)?;
    if let Some(bad) = report.violations.first() {
        return Err(Error::MalformedFlow(format!(
            "sum breaks the {:?} bound at vertex {}: {}",
            bad.bound, bad.vertex, bad.value
        )));
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disbalance {
    None,
    SourcesOnly,
    SinksOnly,
    Mixed,
}

/// One tag per component of `graph`.
pub fn disbalance_report(phi: &RhoFlow, rho: &Cocycle, graph: &WeightedGraph) -> Result<Vec<Disbalance>> {
    let report = validate_flow(phi, rho, None)?;
    let mut has = vec![(false, false); graph.component_count()];
    for &s in &report.sources {
        has[graph.component_of(s)].0 = true;
    }
    for &s in &report.sinks {
        has[graph.component_of(s)].1 = true;
    }
    Ok(has
        .into_iter()
        .map(|pair| match pair {
            (false, false) => Disbalance::None,
            (true, false) => Disbalance::SourcesOnly,
            (false, true) => Disbalance::SinksOnly,
            (true, true) => Disbalance::Mixed,
        })
        .collect())
}
