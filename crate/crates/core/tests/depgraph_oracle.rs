mod common;

use common::{check_pair, endpoint_pairs, for_each_tree, prufer_edges, random_tree, Tree};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn prufer_decoding_matches_known_tree() {
    // Sequence [4, 4, 4, 5] on six nodes: a star on 4 joined to 5, then 6.
    let mut edges = prufer_edges(&[4, 4, 4, 5], 6);
    edges.sort_unstable();
    assert_eq!(edges, vec![(1, 4), (2, 4), (3, 4), (4, 5), (5, 6)]);
}

#[test]
fn tree_counts_follow_cayley() {
    for n in 2..=6 {
        let mut count = 0;
        for_each_tree(n, |t| {
            assert_eq!(t.heads.iter().filter(|&&h| h == 0).count(), 1);
            count += 1;
        });
        assert_eq!(count, n.pow(n as u32 - 2));
    }
}

#[test]
fn oracles_agree_on_small_trees() {
    for_each_tree(6, |t| {
        for a in 1..=6 {
            for b in 1..=6 {
                if a != b {
                    assert_eq!(t.exhaustive_shortest(a, b), t.lca_path(a, b));
                    assert_eq!(t.all_simple_paths(a, b).len(), 1);
                }
            }
        }
    });
}

#[test]
fn every_pair_of_every_tree_up_to_six_nodes() {
    for n in 2..=6 {
        for_each_tree(n, |t| {
            let g = t.graph();
            for a in 1..=n {
                for b in 1..=n {
                    if a != b {
                        check_pair(t, &g, a, b).unwrap();
                    }
                }
            }
        });
    }
}

#[test]
fn path_reversal_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let t = random_tree(30, &mut rng);
        let g = t.graph();
        for (a, b) in endpoint_pairs(30, 10, &mut rng) {
            let forward = sdprel::depgraph::shortest_dependency_path(&g, a, b).unwrap();
            let backward = sdprel::depgraph::shortest_dependency_path(&g, b, a).unwrap();
            assert_eq!(forward.reversed(), backward);
        }
    }
}

proptest! {
    #[test]
    fn random_trees_match_lca_oracle(seed in any::<u64>(), n in 2usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Tree = random_tree(n, &mut rng);
        let g = t.graph();
        for (a, b) in endpoint_pairs(n, 20, &mut rng) {
            prop_assert_eq!(check_pair(&t, &g, a, b), Ok(()));
        }
    }
}
