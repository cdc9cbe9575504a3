mod common;

use common::{components, instance, random_instance};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiler_core::visibility::{
    amalgamate, block, cone, min_boundary, nested_or_disjoint, next_block, orbit_merge_test, Block, Nesting,
};

/// `Blk(x, 1)` from its definition: the component of `x` among vertices
/// no heavier than `x`.
fn block_oracle(inst: &common::Instance, lw: &[f64], x: usize) -> Vec<usize> {
    let kept: Vec<(usize, usize)> = inst
        .edges
        .iter()
        .copied()
        .filter(|&(a, b)| lw[a] <= lw[x] && lw[b] <= lw[x])
        .collect();
    components(inst.n, &kept).into_iter().find(|c| c.contains(&x)).unwrap()
}

proptest! {
    #[test]
    fn blocks_match_definition(inst in instance(30)) {
        let (g, rho) = inst.build();
        for x in 0..inst.n {
            let b = block(&g, &rho, x, 1.0).unwrap();
            prop_assert_eq!(&b.vertices, &block_oracle(&inst, rho.log_weights(), x));
        }
    }

    #[test]
    fn cones_are_nested_and_cofinal(inst in instance(20)) {
        let (g, rho) = inst.build();
        let top = rho.argmax(&(0..inst.n).collect::<Vec<_>>()).unwrap();
        for x in 0..inst.n {
            let c = cone(&g, &rho, x);
            prop_assert!(c.contains(&top));
            for &y in &c {
                let inner = cone(&g, &rho, y);
                prop_assert!(inner.iter().all(|z| c.contains(z)));
            }
        }
    }
}

#[test]
fn laminar_amalgamation_and_orbit_merge() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(1..=50);
        // Coarse weights make ties common, which is where laminarity is
        // easiest to break.
        let extra = rng.gen_range(0..n);
        let mut inst = random_instance(&mut rng, n, extra, 2.0);
        for w in inst.log_w.iter_mut() {
            *w = (*w * 2.0).round() / 2.0;
        }
        let (g, rho) = inst.build();
        let blocks: Vec<Block> = (0..n).map(|x| block(&g, &rho, x, 1.0).unwrap()).collect();
        for a in &blocks {
            for b in &blocks {
                let nesting = nested_or_disjoint(a, b).unwrap();
                if nesting == Nesting::Disjoint {
                    assert!(a.vertices.iter().all(|v| !b.contains(*v)));
                }
                let joint = amalgamate(&g, &rho, a, b).unwrap();
                assert!(a.is_subset_of(&joint) && b.is_subset_of(&joint));
            }
            if a.len() < n {
                // Any minimal boundary vertex gives the same next block.
                let next = next_block(&g, &rho, a).unwrap();
                assert!(a.is_subset_of(&next) && next.len() > a.len());
                for y in min_boundary(&g, &rho, &a.vertices) {
                    assert_eq!(block(&g, &rho, y, 1.0).unwrap().vertices, next.vertices);
                }
            }
        }
        assert!(orbit_merge_test(&g, &rho));
    }
}

#[test]
fn magnified_blocks_contain_smaller_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let n = rng.gen_range(1..=25);
        let inst = random_instance(&mut rng, n, 3, 2.0);
        let (g, rho) = inst.build();
        let x = rng.gen_range(0..n);
        let alpha = rng.gen_range(1.0..5.0);
        let small = block(&g, &rho, x, 1.0).unwrap();
        let big = block(&g, &rho, x, alpha).unwrap();
        assert!(small.is_subset_of(&big));
        // Idempotence: any member y, magnified to reach x's limit, sees
        // the whole block.
        for &y in &big.vertices {
            let lift = alpha * (rho.log_weight(x) - rho.log_weight(y)).exp();
            let again = block(&g, &rho, y, lift.max(1.0)).unwrap();
            assert!(big.is_subset_of(&again), "x={x} y={y} α={alpha}");
        }
    }
}
