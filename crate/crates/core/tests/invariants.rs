mod common;

use std::collections::{BTreeSet, HashMap};

use netcoh::completion::{v_complete, CompletionParams};
use netcoh::concepts::{epsilon_concepts, set_cohesion};
use netcoh::dynamics::{backward, forward, DanglingPolicy};
use netcoh::graph::{
    adhesion, capacity_distribution, capacity_matrix, cohesion, traffic_bias, BiasMatrix,
};
use netcoh::ranking::{bi_rank, fo_rank, RankOptions};
use netcoh::{CapacityMatrix, Matrix};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn traffic_bias_sums_to_zero_and_adhesion_is_symmetric(seed in any::<u64>(), n in 1usize..12, mask in any::<u16>()) {
        let mut r = rng(seed);
        let net = random_digraph(&mut r, n, 0.4, -1.0, 3.0, true);
        let alpha = capacity_distribution(&capacity_matrix(&net)).unwrap().joint;
        let y = traffic_bias(&alpha);
        prop_assert!(y.sum().abs() <= 1e-12);
        let all: Vec<usize> = (0..n).collect();
        prop_assert!(cohesion(&y, &all).abs() <= 1e-12);
        let u: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let rest: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        prop_assert!((adhesion(&y, &u) - adhesion(&y, &rest)).abs() <= 1e-12);
    }

    #[test]
    fn backward_is_transposed_forward(seed in any::<u64>(), n in 1usize..15) {
        let mut r = rng(seed);
        let net = random_digraph(&mut r, n, 0.3, -1.0, 3.0, false);
        let a = capacity_matrix(&net);
        let at = CapacityMatrix::from_matrix(a.matrix().transpose()).unwrap();
        let policy = DanglingPolicy::default();
        let b = backward(&a, policy).unwrap();
        let f = forward(&at, policy).unwrap();
        prop_assert!(b.matrix().max_abs_diff(&f.matrix().transpose()) <= 1e-15);
    }

    #[test]
    fn forward_out_and_backward_in_are_dual(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let net = random_digraph(&mut r, n, 0.5, -1.0, 3.0, true);
        let a = capacity_matrix(&net);
        let at = CapacityMatrix::from_matrix(a.matrix().transpose()).unwrap();
        let opts = RankOptions::default();
        let fo = fo_rank(&at, &opts).unwrap();
        let bi = bi_rank(&a, &opts).unwrap();
        prop_assert!(netcoh::matrix::linf_distance(&fo.values, &bi.values) <= 1e-10);
    }

    #[test]
    fn completion_is_idempotent(seed in any::<u64>(), n in 1usize..6, d in 0.0f64..1.0, v in 1.0f64..4.0) {
        let mut r = rng(seed);
        let net = random_digraph(&mut r, n, 0.4, 1.0, 2.5, false);
        let once = v_complete(&net, CompletionParams::new(v, d)).unwrap();
        let twice = v_complete(once.network(), once.params()).unwrap();
        prop_assert_eq!(once.network().edge_count(), twice.network().edge_count());
        for (x, y) in once.network().edges().iter().zip(twice.network().edges()) {
            prop_assert_eq!(&x.provenance, &y.provenance);
            prop_assert!((x.cost - y.cost).abs() <= 1e-12);
        }
    }

    #[test]
    fn completion_matches_matrix_of_sets(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let net = random_dag(&mut r, n, 0.6, 0.0, 1.0);
        let done = v_complete(&net, CompletionParams::new(100.0, 0.0)).unwrap();
        let mut got: HashMap<(usize, usize, usize), BTreeSet<String>> = HashMap::new();
        for e in done.network().edges() {
            got.entry((e.hops(), e.source, e.target)).or_default().insert(e.provenance.join(","));
        }
        // S¹ is the base adjacency as sets of ids; Sⁿ = Sⁿ⁻¹ · S¹ with concatenation.
        let mut one = vec![vec![BTreeSet::new(); n]; n];
        for e in net.edges() {
            one[e.source][e.target].insert(e.id.clone());
        }
        let mut power = one.clone();
        for hops in 1..=4 {
            for (i, row) in power.iter().enumerate() {
                for (j, want) in row.iter().enumerate() {
                    let have = got.get(&(hops, i, j)).cloned().unwrap_or_default();
                    prop_assert_eq!(&have, want, "hops {} pair {}->{}", hops, i, j);
                }
            }
            let mut next = vec![vec![BTreeSet::new(); n]; n];
            for i in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        for p in &power[i][k] {
                            for q in &one[k][j] {
                                next[i][j].insert(format!("{p},{q}"));
                            }
                        }
                    }
                }
            }
            power = next;
        }
    }

    #[test]
    fn cohesion_is_antitone_in_the_set(seed in any::<u64>(), n in 2usize..10, mask in any::<u16>(), extra in any::<u16>()) {
        let mut r = rng(seed);
        let y = BiasMatrix(Matrix::from_fn(n, n, |_, _| r.random_range(-0.1..0.1)));
        let u: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let v: Vec<usize> = (0..n).filter(|i| (mask | extra) & (1 << i) != 0).collect();
        prop_assume!(!u.is_empty());
        prop_assert!(set_cohesion(&y, &u).unwrap() >= set_cohesion(&y, &v).unwrap());
    }

    #[test]
    fn concepts_cover_every_node_and_are_maximal(seed in any::<u64>(), n in 1usize..12, eps in 0.0f64..0.1) {
        let mut r = rng(seed);
        let y = BiasMatrix(Matrix::from_fn(n, n, |_, _| r.random_range(-0.1..0.1)));
        let cs = epsilon_concepts(&y, eps, 100_000).unwrap();
        for i in 0..n {
            prop_assert!(cs.iter().any(|c| c.contains(i)));
        }
        for (p, c) in cs.iter().enumerate() {
            prop_assert!(c.members.len() == 1 || c.cohesion >= eps);
            for (q, d) in cs.iter().enumerate() {
                prop_assert!(p == q || !c.is_subset(d));
            }
        }
    }
}

#[test]
fn stationary_matches_dense_solve() {
    use netcoh::dynamics::{teleport, TeleportParams};
    use netcoh::ranking::{stationary, StationaryConfig};
    let mut r = rng(11);
    for n in 1..=20 {
        let net = random_digraph(&mut r, n, 0.2, -1.0, 3.0, false);
        let a = capacity_matrix(&net);
        let chain = teleport(
            &forward(&a, DanglingPolicy::default()).unwrap(),
            &TeleportParams::new(0.85),
        )
        .unwrap();
        let pi = stationary(&chain, StationaryConfig::default()).unwrap();
        let oracle = solve_stationary(&operator_matrix(n, |x| chain.step(x)));
        assert!(
            netcoh::matrix::linf_distance(&pi.values, &oracle) <= 1e-10,
            "n = {n}"
        );
    }
}

#[test]
fn capacity_matrix_matches_dense_sum() {
    let mut r = rng(12);
    let net = random_digraph(&mut r, 8, 0.5, -2.0, 2.0, false);
    let a = to_dense(capacity_matrix(&net).matrix());
    let mut want = nalgebra::DMatrix::<f64>::zeros(8, 8);
    for e in net.edges() {
        want[(e.source, e.target)] += (-e.cost).exp2();
    }
    assert!((a - want).abs().max() <= 1e-15);
}
