//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits nonzero if any criterion fails, except for the intermediate value
//! bound, which is known to be unattainable on some instances. That one
//! prints FAIL and only aborts the run if a miss could have been avoided.

#[path = "../../tiler-core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{
    brute_extension, brute_pack, central, connected_graphs_up_to_iso, connected_subsets, mask_vertices,
    random_connected_edges, random_instance, Instance,
};
use ergodic_tiler::experiments::{ergodic_run_on, ratio_experiment, tile_ratio};
use ergodic_tiler::models::{bernoulli_exact_weight, bernoulli_tilt, generate_model, ModelKind, ModelSpec};
use ergodic_tiler::report::{emit_report, RunReport};
use ergodic_tiler::Config;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiler_core::averages::{intermediate_value_grow, mean_over, union_identity_check, weighted_average};
use tiler_core::cuts::{limsup_mass, vertex_price, PriceMethod, Tail};
use tiler_core::flows::{define_flow, validate_flow};
use tiler_core::prepartitions::{packed, saturate, CentralFamily, Landscape, SearchBudget};
use tiler_core::visibility::{amalgamate, block, nested_or_disjoint, orbit_merge_test, Block, Nesting};
use tiler_core::{build_graph, EquivRel, RhoMeasure};

const TRIALS: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
    /// A failure that the run tolerates.
    known: bool,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            detail,
            known: false,
        }
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn zero() -> BigRational {
    BigRational::from_integer(BigInt::from(0))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn to_f64(x: &BigRational) -> f64 {
    let scale = BigRational::from_integer(BigInt::from(1u64 << 60));
    let n: i128 = (x * scale).round().to_integer().try_into().expect("bounded");
    n as f64 / (1u64 << 60) as f64
}

fn flow_conservation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut violations) = (0.0f64, 0usize);
    for _ in 0..TRIALS {
        let n = rng.gen_range(2..=100);
        let extra = rng.gen_range(0..=n / 2);
        let inst = random_instance(&mut rng, n, extra, 3.0);
        let (_, rho) = inst.build();
        let classes = rng.gen_range(1..=4);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let rel = EquivRel::from_labels(&labels);
        let side: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let u: Vec<usize> = (0..n).filter(|&x| side[x] == 0).collect();
        let v: Vec<usize> = (0..n).filter(|&x| side[x] == 1).collect();
        let mut w: Vec<f64> = u.iter().map(|_| rng.gen_range(0.0..=1.0)).collect();
        // Scale supplies down to fit the capacity of each class.
        for class in rel.classes() {
            let supply: f64 = u
                .iter()
                .zip(&w)
                .filter(|(x, _)| class.contains(x))
                .map(|(&x, s)| s * inst.log_w[x].exp())
                .sum();
            let cap: f64 = v
                .iter()
                .filter(|y| class.contains(y))
                .map(|&y| inst.log_w[y].exp())
                .sum();
            if supply > cap {
                for (x, s) in u.iter().zip(w.iter_mut()) {
                    if class.contains(x) {
                        *s *= 0.999 * cap / supply;
                    }
                }
            }
        }
        let phi = define_flow(&rel, &rho, &u, &v, &w).expect("feasible");
        violations += validate_flow(&phi, &rho, None).expect("valid input").violations.len();
        for class in rel.classes() {
            let top = class.iter().map(|&x| inst.log_w[x]).fold(f64::NEG_INFINITY, f64::max);
            let inflow: f64 = phi
                .entries()
                .filter(|&(_, y, _)| class.contains(&y))
                .map(|(x, _, value)| value * (inst.log_w[x] - top).exp())
                .sum();
            let supply: f64 = u
                .iter()
                .zip(&w)
                .filter(|(x, _)| class.contains(x))
                .map(|(&x, s)| s * (inst.log_w[x] - top).exp())
                .sum();
            if supply > 0.0 {
                worst = worst.max((inflow - supply).abs() / supply);
            } else {
                worst = worst.max(inflow.abs());
            }
        }
    }
    let t = start.elapsed();
    Outcome::new(
        worst <= 1e-9 && violations == 0 && within(t, Duration::from_secs(10)),
        format!("worst relative gap {worst:.2e}, {violations} bound violations, {t:.2?}"),
    )
}

/// Every finite f64 is `m / 2^k` with `k ≤ 1074`, so scaling by `2^SHIFT`
/// gives an exact integer.
const SHIFT: usize = 1100;

fn fixed(x: f64) -> BigInt {
    let r = exact(x);
    let k = r.denom().bits() as usize - 1;
    r.numer() << (SHIFT - k)
}

/// Exact `Σ w f` (scaled by `2^2·SHIFT`) and `Σ w` (scaled by `2^SHIFT`).
fn exact_sums(w: &[BigInt], f: &[BigInt], set: &[usize]) -> (BigInt, BigInt) {
    let mut num = BigInt::from(0);
    let mut den = BigInt::from(0);
    for &v in set {
        num += &w[v] * &f[v];
        den += &w[v];
    }
    (num, den)
}

fn ratio_of((num, den): &(BigInt, BigInt)) -> BigRational {
    BigRational::new(num.clone(), den << SHIFT)
}

fn average_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut worst, mut inexact) = (0.0f64, 0usize);
    for _ in 0..TRIALS {
        let n = rng.gen_range(2..=20);
        let inst = random_instance(&mut rng, n, n / 2, 3.0);
        let (g, rho) = inst.build();
        let w: Vec<BigInt> = (0..n).map(|v| fixed(rho.log_weight(v).exp())).collect();
        let f: Vec<BigInt> = inst.f.iter().map(|&x| fixed(x)).collect();

        let split: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let u: Vec<usize> = (0..n).filter(|&x| split[x] == 0).collect();
        let v: Vec<usize> = (0..n).filter(|&x| split[x] == 1).collect();
        if !u.is_empty() && !v.is_empty() {
            let id = union_identity_check(&inst.f, &rho, &u, &v).expect("disjoint");
            let both: Vec<usize> = u.iter().chain(&v).copied().collect();
            let (su, sv, suv) = (
                exact_sums(&w, &f, &u),
                exact_sums(&w, &f, &v),
                exact_sums(&w, &f, &both),
            );
            let (au, av, auv) = (ratio_of(&su), ratio_of(&sv), ratio_of(&suv));
            let (mu_, mv_) = (BigRational::from_integer(su.1), BigRational::from_integer(sv.1));
            if (&mu_ * &au + &mv_ * &av) / (&mu_ + &mv_) != auv {
                inexact += 1;
            }
            worst = worst
                .max(id.gap)
                .max((id.lhs - to_f64(&auv)).abs())
                .max((id.rhs - to_f64(&auv)).abs());
            if id.increment > id.increment_bound + 1e-12 {
                worst = f64::INFINITY;
            }
        }

        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let rel = EquivRel::from_labels(&labels);
        let mu = RhoMeasure::by_component_size(&g, &rho);
        let a = mean_over(&inst.f, &rho, &rel).expect("classes");
        // ∫A dμ against ∫f dμ, with μ ∝ w on the single component.
        let (mut lhs, mut num, mut den) = (zero(), BigInt::from(0), BigInt::from(0));
        for class in rel.classes() {
            let sums = exact_sums(&w, &f, class);
            let avg = ratio_of(&sums);
            worst = worst.max((a.values()[class[0]] - to_f64(&avg)).abs());
            lhs += BigRational::from_integer(sums.1.clone()) * avg;
            num += sums.0;
            den += sums.1;
        }
        let integral = ratio_of(&(num, den.clone()));
        if lhs / BigRational::from_integer(den) != integral {
            inexact += 1;
        }
        worst = worst
            .max((mu.integral(a.values()) - to_f64(&integral)).abs())
            .max((mu.integral(&inst.f) - to_f64(&integral)).abs());
        if mu.l1_norm(a.values()) > mu.l1_norm(&inst.f) + 1e-12 {
            worst = f64::INFINITY;
        }
    }
    let t = start.elapsed();
    Outcome::new(
        worst <= 1e-12 && inexact == 0 && within(t, Duration::from_secs(10)),
        format!("worst gap {worst:.2e}, {inexact} inexact rational identities, {t:.2?}"),
    )
}

const BRUTE_BUDGET: SearchBudget = SearchBudget {
    exhaustive_limit: 12,
    max_units: 64,
};

/// Returns whether the packed and the saturated prepartitions survive the
/// brute-force search.
fn packedness_on(edges: Vec<(usize, usize)>, n: usize, rng: &mut ChaCha8Rng) -> bool {
    let inst = Instance {
        n,
        edges,
        log_w: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        f: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let (g, rho) = inst.build();
    let land = Landscape {
        graph: &g,
        cocycle: &rho,
        values: &inst.f,
    };
    let lambda = rng.gen_range(0.05..0.6);
    let min_ratio = [1.0, 1.5, 2.5][rng.gen_range(0..3)];
    let p = rng.gen_range(0.05..1.5);
    let family = CentralFamily { lambda, min_ratio };
    let member = |s: &[usize]| central(&inst, s, lambda, min_ratio);
    let packed_out = packed(&family, p, &land, BRUTE_BUDGET).prepartition;
    let saturated = saturate(&family, &packed_out, &land, BRUTE_BUDGET).prepartition;
    brute_pack(&inst, packed_out.cells(), p, &member).is_none()
        && brute_extension(&inst, saturated.cells(), &member).is_none()
}

fn packedness_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut graphs, mut failures) = (0, 0);
    for n in 1..=7 {
        for edges in connected_graphs_up_to_iso(n) {
            graphs += 1;
            failures += usize::from(!packedness_on(edges, n, &mut rng));
        }
    }
    for _ in 0..300 {
        let n = rng.gen_range(8..=10);
        let extra = rng.gen_range(0..n);
        let edges = random_connected_edges(&mut rng, n, extra);
        graphs += 1;
        failures += usize::from(!packedness_on(edges, n, &mut rng));
    }
    let t = start.elapsed();
    Outcome::new(
        failures == 0 && within(t, Duration::from_secs(300)),
        format!("{graphs} graphs, {failures} with a pack or extension left, {t:.2?}"),
    )
}

/// A random connected set grown from `seed` inside `allowed`, in growth
/// order, so every prefix is connected too.
fn grow_order(g: &tiler_core::WeightedGraph, seed: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order = vec![seed];
    let mut inside = BTreeSet::from([seed]);
    while order.len() < size {
        let frontier: Vec<usize> = order
            .iter()
            .flat_map(|&x| g.neighbors(x).iter().copied())
            .filter(|y| !inside.contains(y))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if frontier.is_empty() {
            break;
        }
        let y = frontier[rng.gen_range(0..frontier.len())];
        inside.insert(y);
        order.push(y);
    }
    order
}

fn intermediate_value() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut misses, mut avoidable) = (0, 0);
    for _ in 0..TRIALS {
        let n = rng.gen_range(2..=12);
        let inst = random_instance(&mut rng, n, 2, 2.0);
        let (g, rho) = inst.build();
        let seed = rng.gen_range(0..n);
        let size_v = rng.gen_range(2..=n);
        let v_order = grow_order(&g, seed, size_v, &mut rng);
        let size_u = rng.gen_range(1..v_order.len());
        let mut u = v_order[..size_u].to_vec();
        let mut v = v_order.clone();
        u.sort_unstable();
        v.sort_unstable();
        let a = weighted_average(&inst.f, &rho, &u).expect("nonempty");
        let b = weighted_average(&inst.f, &rho, &v).expect("nonempty");
        let r = a + rng.gen_range(0.0..=1.0) * (b - a);
        let grown = intermediate_value_grow(&inst.f, &rho, &g, &u, &v, r).expect("valid input");

        // The bound, computed here from raw weights.
        let outside: Vec<usize> = v.iter().copied().filter(|x| !u.contains(x)).collect();
        let sup = outside.iter().map(|&x| inst.f[x].abs()).fold(0.0, f64::max);
        let heaviest = outside.iter().map(|&x| inst.log_w[x].exp()).fold(0.0, f64::max);
        let mass_u: f64 = u.iter().map(|&x| inst.log_w[x].exp()).sum();
        let delta = sup * heaviest / mass_u;
        let ok = g.is_connected_set(&grown.set)
            && u.iter().all(|x| grown.set.contains(x))
            && grown.set.iter().all(|x| v.contains(x))
            && (grown.average - r).abs() <= delta + 1e-12;
        if ok {
            continue;
        }
        misses += 1;
        // Could any connected W between U and V have met the bound?
        let v_mask: u64 = v.iter().fold(0, |m, &x| m | 1 << x);
        let u_mask: u64 = u.iter().fold(0, |m, &x| m | 1 << x);
        let attainable = connected_subsets(n, &inst.edges).into_iter().any(|mask| {
            mask & u_mask == u_mask
                && mask & !v_mask == 0
                && (weighted_average(&inst.f, &rho, &mask_vertices(mask)).unwrap() - r).abs() <= delta + 1e-12
        });
        avoidable += usize::from(attainable);
    }
    let mut out = Outcome::new(
        misses == 0,
        format!("{misses} misses in {TRIALS}, {avoidable} of them attainable by some connected W"),
    );
    out.known = avoidable == 0;
    out
}

fn block_laws() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (mut pairs, mut failures) = (0usize, 0usize);
    for _ in 0..500 {
        let n = rng.gen_range(1..=50);
        let extra = rng.gen_range(0..n);
        let mut inst = random_instance(&mut rng, n, extra, 2.0);
        // Coarse weights make ties common.
        if rng.gen_bool(0.5) {
            for w in inst.log_w.iter_mut() {
                *w = (*w * 2.0).round() / 2.0;
            }
        }
        let (g, rho) = inst.build();
        let blocks: Vec<Block> = (0..n).map(|x| block(&g, &rho, x, 1.0).expect("vertex")).collect();
        for a in &blocks {
            for b in &blocks {
                pairs += 1;
                let laminar = match nested_or_disjoint(a, b) {
                    Ok(Nesting::Disjoint) => a.vertices.iter().all(|v| !b.contains(*v)),
                    Ok(_) => a.is_subset_of(b) || b.is_subset_of(a),
                    Err(_) => false,
                };
                let joint = amalgamate(&g, &rho, a, b);
                let amalgamated =
                    joint.is_ok_and(|j| a.is_subset_of(&j) && b.is_subset_of(&j) && g.is_connected_set(&j.vertices));
                failures += usize::from(!(laminar && amalgamated));
            }
        }
        failures += usize::from(!orbit_merge_test(&g, &rho));
    }
    let t = start.elapsed();
    Outcome::new(
        failures == 0 && within(t, Duration::from_secs(60)),
        format!("{pairs} block pairs on 500 graphs, {failures} failures, {t:.2?}"),
    )
}

fn cut_prices() -> Outcome {
    let price = |edges: &[(usize, usize)], n: usize, method: PriceMethod| {
        let (g, rho) = build_graph(edges, &vec![0.0; n]).expect("graph");
        let mu = RhoMeasure::by_component_size(&g, &rho);
        vertex_price(&g, &rho, &mu, 3, method).expect("price").price
    };
    let path: Vec<(usize, usize)> = (1..7).map(|i| (i - 1, i)).collect();
    let cycle: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
    let (p7, c8) = (
        price(&path, 7, PriceMethod::Exact),
        price(&cycle, 8, PriceMethod::Exact),
    );
    let fixtures = (p7 - 1.0 / 7.0).abs() <= 1e-12 && (c8 - 2.0 / 8.0).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut below = 0;
    let mut instances = 0;
    for _ in 0..300 {
        let n = rng.gen_range(2..=12);
        let extra = rng.gen_range(0..n);
        let edges = random_connected_edges(&mut rng, n, extra);
        let log_w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g, rho) = build_graph(&edges, &log_w).expect("graph");
        let mu = RhoMeasure::by_component_size(&g, &rho);
        let k = rng.gen_range(1..=n);
        let exact = vertex_price(&g, &rho, &mu, k, PriceMethod::Exact).expect("price").price;
        for method in [PriceMethod::Greedy, PriceMethod::Local] {
            instances += 1;
            let heuristic = vertex_price(&g, &rho, &mu, k, method).expect("price").price;
            below += usize::from(heuristic < exact - 1e-12);
        }
    }
    for (edges, n) in [(&path, 7), (&cycle, 8)] {
        instances += 1;
        below += usize::from(price(edges, n, PriceMethod::Greedy) < price(edges, n, PriceMethod::Exact) - 1e-12);
    }
    Outcome::new(
        fixtures && below == 0,
        format!("path-7 {p7:.6}, cycle-8 {c8:.6}, heuristic below exact on {below} of {instances}"),
    )
}

fn measure_compactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut violations = 0;
    for _ in 0..TRIALS {
        let n = rng.gen_range(1..=16);
        let log_w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g, rho) = build_graph(&[], &log_w).expect("graph");
        let mu = RhoMeasure::by_component_size(&g, &rho);
        let len = rng.gen_range(1..10);
        let density = rng.gen_range(0.1..0.7);
        let sets: Vec<Vec<usize>> = (0..len)
            .map(|_| (0..n).filter(|_| rng.gen_bool(density)).collect())
            .collect();
        let (tail, period) = match rng.gen_range(0..3) {
            0 => (Tail::Empty, 0),
            1 => (Tail::Constant, 1),
            _ => {
                let p = rng.gen_range(1..=len);
                (Tail::Periodic(p), p)
            }
        };
        // Oracle: unroll far past the end; a point is in the limsup when it
        // shows up in the last full period.
        let unrolled: Vec<&Vec<usize>> = (0..len + 8 * period.max(1))
            .filter_map(|i| {
                if i < len {
                    Some(&sets[i])
                } else if period == 0 {
                    None
                } else {
                    Some(&sets[len - period + (i - len) % period])
                }
            })
            .collect();
        let window = &unrolled[unrolled.len() - period.min(unrolled.len())..];
        let window = if period == 0 { &[][..] } else { window };
        let set: BTreeSet<usize> = window.iter().flat_map(|s| s.iter().copied()).collect();
        let set_mass: f64 = set.iter().map(|&x| mu.atom(x)).sum();
        let mass_limsup = window
            .iter()
            .map(|s| s.iter().map(|&x| mu.atom(x)).sum::<f64>())
            .fold(0.0, f64::max);
        let got = limsup_mass(&sets, &mu, tail);
        let agrees = (got.set_mass - set_mass).abs() <= 1e-12 && (got.mass_limsup - mass_limsup).abs() <= 1e-12;
        if !(agrees && got.holds() && set_mass >= mass_limsup - 1e-12) {
            violations += 1;
        }
    }
    Outcome::new(
        violations == 0,
        format!("{violations} violations in {TRIALS} sequences"),
    )
}

fn rotation_config() -> Config {
    Config {
        model: ModelSpec {
            kind: ModelKind::Rotation,
            n: 1 << 16,
            ..ModelSpec::default()
        },
        eps: 0.05,
        max_stages: 8,
        ..Config::default()
    }
}

fn rotation_convergence() -> (Outcome, Option<RunReport>) {
    let start = Instant::now();
    let config = rotation_config();
    let model = generate_model(&config.model).expect("model");
    let report = ergodic_run_on(&model, &config).expect("run");
    let t = start.elapsed();
    let last = report.stages.last().map_or(0.0, |s| s.mass_within_eps);
    let connected = report.tiles.iter().all(|tile| model.graph.is_connected_set(tile));
    let integral = model.mu.integral(&model.f);
    let pass = report.reached
        && last >= 0.95
        && report.stages.len() <= 8
        && connected
        && integral.abs() <= 1e-12
        && within(t, Duration::from_secs(60));
    let out = Outcome::new(
        pass,
        format!(
            "{:.4} of mass within eps after {} stages, tiles connected: {connected}, integral {integral:.1e}, {t:.2?}",
            last,
            report.stages.len()
        ),
    );
    (out, Some(report))
}

fn bernoulli_convergence() -> Outcome {
    let (d, p, q) = (14, 0.6, 0.4);
    let config = Config {
        model: ModelSpec {
            kind: ModelKind::Bernoulli,
            n: d,
            p,
            q,
            ..ModelSpec::default()
        },
        eps: 0.1,
        ..Config::default()
    };
    let model = generate_model(&config.model).expect("model");
    let report = ergodic_run_on(&model, &config).expect("run");
    let last = report.stages.last().map_or(0.0, |s| s.mass_within_eps);

    // Closed form: digits are independent with success probability
    // (p/q) / (p/q + (1−p)/(1−q)) = 9/13, so ∫f dμ = 0.
    let size = 1usize << d;
    let w: Vec<BigRational> = (0..size)
        .map(|x| bernoulli_exact_weight(x, d, p, q).expect("rational"))
        .collect();
    let total = w.iter().fold(zero(), |a, b| a + b);
    let ones = (0..size).filter(|x| x & 1 == 1).fold(zero(), |a, x| a + &w[x]);
    let nine_thirteenths = BigRational::new(BigInt::from(9), BigInt::from(13));
    let closed_form = ones / total == nine_thirteenths && (bernoulli_tilt(p, q) - 9.0 / 13.0).abs() <= 1e-15;
    let first: Vec<f64> = (0..size).map(|x| (x & 1) as f64).collect();
    let atom_sum = model.mu.integral(&first);
    let integral = model.mu.integral(&model.f);

    // ρ(x, y)ρ(y, z) = ρ(x, z) on rational weights, and the float cocycle
    // agrees with them.
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut cocycle_ok = true;
    for _ in 0..2000 {
        let (x, y, z) = (rng.gen_range(0..size), rng.gen_range(0..size), rng.gen_range(0..size));
        let lhs = (&w[x] / &w[y]) * (&w[y] / &w[z]);
        cocycle_ok &= lhs == &w[x] / &w[z];
        let float = model.cocycle.rho(x, z).expect("one component");
        cocycle_ok &= (float / to_f64(&(&w[x] / &w[z])) - 1.0).abs() <= 1e-9;
    }
    let pass =
        last >= 0.90 && closed_form && (atom_sum - 9.0 / 13.0).abs() <= 1e-12 && integral.abs() <= 1e-12 && cocycle_ok;
    Outcome::new(
        pass,
        format!(
            "{last:.4} of mass within eps after {} stages, first-digit mass {atom_sum:.12} vs 9/13, exact cocycle: {cocycle_ok}",
            report.stages.len()
        ),
    )
}

fn ratio_sanity(reference: Option<&RunReport>) -> Outcome {
    let config = rotation_config();
    let model = generate_model(&config.model).expect("model");
    let ones = vec![1.0; model.f.len()];
    let ratio = ratio_experiment(&model, &model.f, &ones, &config).expect("run");
    let same = reference.is_some_and(|base| {
        base.stages.len() == ratio.stages.len()
            && base.stages.iter().zip(&ratio.stages).all(|(a, b)| {
                a.mass_within_eps == b.mass_within_eps
                    && b.ratio_mass == Some(a.mass_within_eps)
                    && a.tiles == b.tiles
                    && a.max_tile == b.max_tile
                    && a.mean_tile == b.mean_tile
                    && a.histogram == b.histogram
            })
            && base.tiles == ratio.tiles
    });

    let c = 2.5;
    let scaled: Vec<f64> = model.g.iter().map(|x| c * x).collect();
    let one_stage = Config {
        max_stages: 1,
        ..config
    };
    let constant = ratio_experiment(&model, &scaled, &model.g, &one_stage).expect("run");
    let worst = constant
        .tiles
        .iter()
        .map(|t| (tile_ratio(&model.cocycle, &scaled, &model.g, t).expect("tile") - c).abs())
        .fold(0.0, f64::max);
    let reported = constant.max_ratio_error.unwrap_or(f64::INFINITY);
    Outcome::new(
        same && worst <= 1e-12 && reported <= 1e-12 && constant.stages.len() == 1,
        format!("g = 1 matches the plain run: {same}, f = {c}g worst tile error {worst:.1e} at stage 1"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut bytes = Vec::new();
    let mut all_equal = true;
    for kind in [ModelKind::Rotation, ModelKind::Bernoulli] {
        let config = Config {
            model: ModelSpec {
                kind,
                n: if kind == ModelKind::Rotation { 1 << 12 } else { 10 },
                seed: 7,
                ..ModelSpec::default()
            },
            ..Config::default()
        };
        for run in 0..2 {
            let model = generate_model(&config.model).expect("model");
            let report = ergodic_run_on(&model, &config).expect("run");
            let out = dir.path().join(format!("{kind}-{run}"));
            let emitted = emit_report(&report, &out).expect("emit");
            bytes.push(std::fs::read(emitted.csv).expect("csv"));
        }
        all_equal &= bytes[bytes.len() - 1] == bytes[bytes.len() - 2];
    }
    Outcome::new(all_equal, format!("{} CSV files compared pairwise", bytes.len()))
}

fn main() {
    let (rotation, reference) = rotation_convergence();
    let results = [
        ("flow conservation", flow_conservation()),
        ("average identities", average_identities()),
        ("packedness oracle", packedness_oracle()),
        ("intermediate value bound", intermediate_value()),
        ("block laws", block_laws()),
        ("cut prices", cut_prices()),
        ("measure compactness", measure_compactness()),
        ("rotation convergence", rotation),
        ("bernoulli convergence", bernoulli_convergence()),
        ("ratio sanity", ratio_sanity(reference.as_ref())),
        ("determinism", determinism()),
    ];
    let mut unexpected = 0;
    for (i, (name, out)) in results.iter().enumerate() {
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        let note = if !out.pass && out.known {
            " [known, every miss unattainable]"
        } else {
            ""
        };
        println!("criterion {} {name}: {verdict} ({}){note}", i + 1, out.detail);
        if !out.pass && !out.known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
