use lmt_core::{
    induced_matrix, interleaving_distance, merge_tree_of_matrix, Embedding, Error, Label, SymMatrix,
};
use lmt_testkit as kit;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lca_matches_ancestor_sets(seed: u64, leaves in 1usize..16, lattice: bool) {
        let mut rng = kit::rng(seed);
        let t = kit::random_tree(&mut rng, leaves, lattice);
        let tree = t.tree();
        for u in 0..tree.len() {
            for v in 0..tree.len() {
                let a = tree.lca(u, v).unwrap();
                prop_assert_eq!(a, kit::lca_by_ancestor_sets(tree, u, v));
                prop_assert_eq!(a, tree.lca(v, u).unwrap());
            }
            prop_assert_eq!(tree.lca(u, u).unwrap(), u);
        }
    }

    #[test]
    fn tree_distance_is_shortest_path(seed: u64, leaves in 1usize..16, lattice: bool) {
        let mut rng = kit::rng(seed);
        let t = kit::random_tree(&mut rng, leaves, lattice);
        let d = kit::shortest_paths(t.tree());
        let root = t.root();
        let n = t.vertex_count();
        for x in (0..n).filter(|&v| v != root) {
            for y in (0..n).filter(|&v| v != root) {
                let dt = t.tree_distance(x, y).unwrap();
                prop_assert!((dt - d[x][y]).abs() <= 1e-12 * (1.0 + dt));
                prop_assert_eq!(dt, t.tree_distance(y, x).unwrap());
                prop_assert_eq!(dt == 0.0, x == y);
                for z in (0..n).filter(|&v| v != root) {
                    let via = t.tree_distance(x, z).unwrap() + t.tree_distance(z, y).unwrap();
                    prop_assert!(dt <= via + 1e-12);
                }
            }
        }
    }

    #[test]
    fn values_increase_toward_root(seed: u64, leaves in 1usize..16) {
        let mut rng = kit::rng(seed);
        let t = kit::random_tree(&mut rng, leaves, true);
        for (c, p) in t.tree().edges() {
            prop_assert!(t.tree().value(c) < t.tree().value(p));
        }
    }

    #[test]
    fn blend_is_monotone_toward_the_larger_distance(seed: u64, leaves in 2usize..10) {
        let mut rng = kit::rng(seed);
        let t = kit::random_embedded_tree(&mut rng, leaves, false);
        let root = t.root();
        let verts: Vec<usize> = (0..t.vertex_count()).filter(|&v| v != root).collect();
        for &x in &verts {
            for &y in &verts {
                let dt = t.tree_distance(x, y).unwrap();
                let de = t.euclidean_distance(x, y).unwrap();
                let a = t.blended_distance(x, y, 0.3).unwrap();
                let b = t.blended_distance(x, y, 0.7).unwrap();
                if dt >= de {
                    prop_assert!(a <= b + 1e-12);
                } else {
                    prop_assert!(a + 1e-12 >= b);
                }
                let direct = 0.3 * dt + 0.7 * de;
                prop_assert!((a - direct).abs() <= 1e-12 * (1.0 + a));
            }
        }
    }

    #[test]
    fn euclidean_matches_direct_arithmetic(seed: u64) {
        let mut rng = kit::rng(seed);
        let t = kit::random_embedded_tree(&mut rng, 4, false);
        let e = t.embedding().unwrap();
        for x in 0..t.vertex_count() {
            for y in 0..t.vertex_count() {
                let (p, q) = (e.point(x), e.point(y));
                let direct = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                prop_assert!((t.euclidean_distance(x, y).unwrap() - direct).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn induced_matrix_matches_oracle_and_is_ultra(seed: u64, leaves in 1usize..=16, extra in 0usize..4, lattice: bool) {
        let mut rng = kit::rng(seed);
        let base = kit::random_tree(&mut rng, leaves, lattice);
        let t = kit::with_extra_labels(&mut rng, &base, extra);
        let m = induced_matrix(&t).unwrap();
        prop_assert_eq!(m.rows(), kit::induced_by_ancestor_sets(&t));
        prop_assert!(m.is_ultra());
    }

    #[test]
    fn ultra_round_trip(seed: u64, leaves in 1usize..=16, extra in 0usize..4, lattice: bool) {
        let mut rng = kit::rng(seed);
        let base = kit::random_tree(&mut rng, leaves, lattice);
        let t = kit::with_extra_labels(&mut rng, &base, extra);
        let m = induced_matrix(&t).unwrap();
        let back = merge_tree_of_matrix(&m).unwrap();
        prop_assert!(back.tree().validate().is_empty());
        prop_assert_eq!(induced_matrix(&back).unwrap(), m);
    }

    #[test]
    fn minimax_closure_of_valid_matrices(seed: u64, n in 1usize..=8, lattice: bool) {
        let mut rng = kit::rng(seed);
        let m = kit::random_valid_matrix(&mut rng, n, lattice);
        let t = merge_tree_of_matrix(&m).unwrap();
        prop_assert!(t.tree().validate().is_empty());
        prop_assert_eq!(induced_matrix(&t).unwrap().rows(), kit::minimax_closure(&m));
    }

    #[test]
    fn merge_tree_is_deterministic(seed: u64, n in 1usize..=8) {
        let mut rng = kit::rng(seed);
        let m = kit::random_valid_matrix(&mut rng, n, true);
        prop_assert_eq!(merge_tree_of_matrix(&m).unwrap(), merge_tree_of_matrix(&m).unwrap());
    }

    #[test]
    fn interleaving_is_a_pseudometric(seed: u64, leaves in 1usize..10, lattice: bool) {
        let mut rng = kit::rng(seed);
        let ts = kit::random_ensemble(&mut rng, 3, leaves, lattice);
        let d = |i: usize, j: usize| interleaving_distance(&ts[i], &ts[j]).unwrap();
        for i in 0..3 {
            prop_assert_eq!(d(i, i), 0.0);
            for j in 0..3 {
                prop_assert!(d(i, j) >= 0.0);
                prop_assert_eq!(d(i, j), d(j, i));
                let (mi, mj) = (induced_matrix(&ts[i]).unwrap(), induced_matrix(&ts[j]).unwrap());
                prop_assert_eq!(d(i, j), kit::linf(&mi.rows(), &mj.rows()));
                if d(i, j) == 0.0 {
                    prop_assert_eq!(&mi, &mj);
                }
                for k in 0..3 {
                    prop_assert!(d(i, k) + d(k, j) - d(i, j) >= -1e-12);
                }
            }
        }
    }
}

#[test]
fn two_leaf_examples() {
    let m = SymMatrix::with_default_labels(&[vec![0.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(m.is_valid() && m.is_ultra());
    let t = merge_tree_of_matrix(&m).unwrap();
    assert_eq!(t.leaf_count(), 2);
    assert_eq!(t.vertex_count(), 4);
    let other = merge_tree_of_matrix(
        &SymMatrix::with_default_labels(&[vec![0.0, 3.0], vec![3.0, 1.0]]).unwrap(),
    )
    .unwrap();
    assert_eq!(interleaving_distance(&t, &other).unwrap(), 1.0);
    assert_eq!(interleaving_distance(&t, &t).unwrap(), 0.0);
}

#[test]
fn valid_but_not_ultra() {
    let m = SymMatrix::with_default_labels(&[
        vec![0.0, 2.0, 3.0],
        vec![2.0, 1.0, 5.0],
        vec![3.0, 5.0, 1.0],
    ])
    .unwrap();
    assert!(m.is_valid());
    assert!(!m.is_ultra());
    let bad = SymMatrix::with_default_labels(&[vec![3.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(!bad.is_valid());
    assert!(matches!(merge_tree_of_matrix(&bad), Err(Error::Input(_))));
}

#[test]
fn domain_mismatch_is_an_agreement_error() {
    let mut rng = kit::rng(7);
    let a = kit::random_tree(&mut rng, 3, false);
    let b = kit::random_tree(&mut rng, 4, false);
    assert!(matches!(interleaving_distance(&a, &b), Err(Error::Agreement(_))));
}

#[test]
fn missing_embedding_is_a_configuration_error() {
    let mut rng = kit::rng(3);
    let t = kit::random_tree(&mut rng, 3, false);
    assert!(matches!(t.euclidean_distance(0, 1), Err(Error::Configuration(_))));
    assert!(matches!(t.blended_distance(0, 1, 0.5), Err(Error::Configuration(_))));
    assert!(t.blended_distance(0, 1, 1.0).is_ok());
    assert!(matches!(t.blended_distance(0, 1, 1.5), Err(Error::Input(_))));
    let pts: Vec<Vec<f64>> = (0..t.vertex_count()).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
    let t3 = t.with_embedding(Some(Embedding::new(3, &pts).unwrap())).unwrap();
    assert!(t3.blended_distance(0, 1, 0.0).is_ok());
    assert!(t3.vertex_of(Label(99)).is_err());
}
