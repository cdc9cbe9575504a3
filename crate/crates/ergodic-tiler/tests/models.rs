use ergodic_tiler::models::{
    bernoulli_exact_weight, bernoulli_log_weight, bernoulli_tilt, generate_model, ModelKind, ModelSpec,
};
use ergodic_tiler::LabError;
use num_bigint::BigInt;
use num_rational::BigRational;
use tiler_core::Error;

fn spec(kind: ModelKind, n: usize) -> ModelSpec {
    ModelSpec {
        kind,
        n,
        ..ModelSpec::default()
    }
}

#[test]
fn alternating_function_on_a_rotation_cycle_integrates_to_zero() {
    let model = generate_model(&spec(ModelKind::Rotation, 8)).unwrap();
    assert_eq!(model.graph.component_count(), 1);
    assert!(model.cocycle.log_weights().iter().all(|&w| w == 0.0));
    let alternating: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    assert_eq!(model.mu.integral(&alternating), 0.0);
    assert!(model.mu.integral(&model.f).abs() <= 1e-15);
}

#[test]
fn rotation_path_has_two_frontier_ends() {
    let model = generate_model(&ModelSpec {
        path: true,
        ..spec(ModelKind::Rotation, 10)
    })
    .unwrap();
    let fr = model.frontier.unwrap();
    let ends: Vec<usize> = (0..10).filter(|&v| fr[v]).collect();
    assert_eq!(ends, vec![0, 9]);
    assert_eq!(model.graph.edge_count(), 9);
}

#[test]
fn equal_measures_give_a_trivial_cocycle() {
    let model = generate_model(&ModelSpec {
        p: 0.3,
        q: 0.3,
        ..spec(ModelKind::Bernoulli, 6)
    })
    .unwrap();
    assert!(model.cocycle.log_weights().iter().all(|&w| w == 0.0));
    let atoms = model.mu.atoms();
    assert!(atoms.iter().all(|&a| (a - atoms[0]).abs() <= 1e-15));
}

#[test]
fn two_digit_weight_ratio_follows_the_product_formula() {
    // w(11)/w(00) = ((p/q) / ((1−p)/(1−q)))² = (2 / (1/2))² = 16.
    let (p, q) = (2.0 / 3.0, 1.0 / 3.0);
    let w11 = bernoulli_exact_weight(0b11, 2, p, q).unwrap();
    let w00 = bernoulli_exact_weight(0b00, 2, p, q).unwrap();
    assert_eq!(w11 / w00, BigRational::from_integer(BigInt::from(16)));
    let ratio = (bernoulli_log_weight(2, 2, p, q) - bernoulli_log_weight(0, 2, p, q)).exp();
    assert!((ratio - 16.0).abs() <= 1e-12);
}

#[test]
fn bernoulli_measure_is_the_tilted_product() {
    let (d, p, q) = (8, 0.6, 0.4);
    let model = generate_model(&ModelSpec {
        p,
        q,
        ..spec(ModelKind::Bernoulli, d)
    })
    .unwrap();
    let tilt = bernoulli_tilt(p, q);
    for x in 0..1usize << d {
        let ones = x.count_ones() as i32;
        let expected = tilt.powi(ones) * (1.0 - tilt).powi(d as i32 - ones);
        assert!((model.mu.atom(x) - expected).abs() <= 1e-12, "{x}");
    }
    assert!(model.mu.integral(&model.f).abs() <= 1e-12);
}

#[test]
fn odometer_is_one_cycle_with_product_weights() {
    let model = generate_model(&ModelSpec {
        p: 0.25,
        ..spec(ModelKind::Odometer, 5)
    })
    .unwrap();
    assert_eq!(model.graph.component_count(), 1);
    assert_eq!(model.graph.edge_count(), 32);
    let first: Vec<f64> = (0..32).map(|x| (x & 1) as f64).collect();
    assert!((model.mu.integral(&first) - 0.25).abs() <= 1e-12);
}

#[test]
fn free_tree_and_regular_graph_shapes() {
    let tree = generate_model(&spec(ModelKind::FreeTree, 3)).unwrap();
    // 1 + 4 + 12 + 36 vertices, leaves on the frontier.
    assert_eq!(tree.graph.vertex_count(), 53);
    assert_eq!(tree.frontier.as_ref().unwrap().iter().filter(|&&b| b).count(), 36);
    assert!((0..53).all(|v| tree.graph.degree(v) == 4 || tree.graph.degree(v) == 1));

    let a = generate_model(&ModelSpec {
        degree: 4,
        seed: 3,
        ..spec(ModelKind::RandomRegular, 40)
    })
    .unwrap();
    let b = generate_model(&ModelSpec {
        degree: 4,
        seed: 3,
        ..spec(ModelKind::RandomRegular, 40)
    })
    .unwrap();
    assert_eq!(a.graph.edges(), b.graph.edges());
    assert!((0..40).all(|v| a.graph.degree(v) <= 4));
}

#[test]
fn degenerate_parameters_are_rejected() {
    for p in [0.0, 1.0] {
        let err = generate_model(&ModelSpec {
            p,
            ..spec(ModelKind::Bernoulli, 4)
        })
        .unwrap_err();
        assert!(matches!(err, LabError::Core(Error::BadModel(_))), "{err:?}");
    }
    assert!(generate_model(&spec(ModelKind::Rotation, 0)).is_err());
    assert!(generate_model(&spec(ModelKind::Bernoulli, 30)).is_err());
}
