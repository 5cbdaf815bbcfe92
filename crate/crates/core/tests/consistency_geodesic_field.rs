use std::collections::BTreeMap;

use lmt_core::consistency::{distance_vector, quantile, statistical_from, variational_from};
use lmt_core::{
    center_embedding, complete_internal_labels, consistency_report, edge_consistency, extract_merge_tree,
    five_number, gaussian_mixture_grid, geodesic_frames, induced_matrix, interleaving_distance,
    linear_embedding_frames, one_center_tree, run_pipeline, vertex_consistency, weighted_cosine,
    AgreementMode, Connectivity, Ensemble, GaussianBump, Label, PipelineConfig, ScalarGrid,
};
use lmt_testkit as kit;
use proptest::prelude::*;
use rand::Rng;

fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..2.0) })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weighted_cosine_matches_direct_sum(seed: u64, n in 1usize..12) {
        let mut rng = kit::rng(seed);
        let a = random_vector(&mut rng, n);
        let b = random_vector(&mut rng, n);
        for delta in [0.1, 0.5, 1.0, f64::INFINITY] {
            let got = weighted_cosine(&a, &b, delta).unwrap();
            let want = kit::weighted_cosine_direct(&a, &b, delta);
            prop_assert!((0.0..=1.0).contains(&got));
            prop_assert_eq!(got, weighted_cosine(&b, &a, delta).unwrap());
            if want.is_finite() && want > 1e-200 {
                prop_assert!((got - want).abs() <= 1e-9, "delta {} got {} want {}", delta, got, want);
            }
            if a.iter().any(|&x| x > 0.0) {
                prop_assert_eq!(weighted_cosine(&a, &a, delta).unwrap(), 1.0);
            }
        }
        let big = 1e6 * a.iter().chain(&b).copied().fold(1e-300, f64::max);
        let plain = weighted_cosine(&a, &b, f64::INFINITY).unwrap();
        prop_assert!((weighted_cosine(&a, &b, big).unwrap() - plain).abs() < 1e-6);
    }

    #[test]
    fn five_numbers_match_sorting(seed: u64, n in 1usize..=12) {
        let mut rng = kit::rng(seed);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s = five_number(&v).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(s.min, sorted[0]);
        prop_assert_eq!(s.max, sorted[n - 1]);
        for (p, q) in [(0.25, s.q1), (0.5, s.median), (0.75, s.q3)] {
            prop_assert!((q - kit::quantile_by_position(&v, p)).abs() <= 1e-15);
            prop_assert_eq!(q, quantile(&sorted, p));
        }
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }

    #[test]
    fn variational_radii_follow_the_formula(seed: u64, k in 1usize..6, labels in 1usize..6, g in 0.1f64..4.0) {
        let mut rng = kit::rng(seed);
        let alphas: Vec<BTreeMap<Label, f64>> = (0..k)
            .map(|_| (1..=labels as u32).map(|l| (Label(l), rng.gen_range(0.0..1.0))).collect())
            .collect();
        let v = variational_from(&alphas, g).unwrap();
        let mut max_dev = 0.0f64;
        for l in 1..=labels as u32 {
            let vals: Vec<f64> = alphas.iter().map(|a| a[&Label(l)]).collect();
            let mean = vals.iter().sum::<f64>() / k as f64;
            prop_assert!((v.mean[&Label(l)] - mean).abs() <= 1e-15);
            for x in vals {
                max_dev = max_dev.max((x - mean).abs());
            }
        }
        prop_assert!((v.max_deviation - max_dev).abs() <= 1e-15);
        for (l, devs) in &v.deviations {
            for (i, d) in devs.iter().enumerate() {
                prop_assert!(*d >= 0.0);
                let r = v.radii[l][i];
                if v.max_deviation > 0.0 {
                    prop_assert!((r - g * d / (2.0 * v.max_deviation)).abs() <= 1e-15);
                    prop_assert!(r <= g / 2.0 + 1e-15);
                } else {
                    prop_assert_eq!(r, 0.0);
                }
            }
        }
        let stats = statistical_from(&alphas).unwrap();
        prop_assert_eq!(stats.len(), labels);
    }

    #[test]
    fn vertex_consistency_matches_distance_vectors(seed: u64, n in 2usize..7, lambda in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let mut rng = kit::rng(seed);
        let ts: Vec<_> = (0..2).map(|_| kit::random_embedded_tree(&mut rng, n, false)).collect();
        let e = Ensemble::new(ts);
        let r = one_center_tree(&e).unwrap();
        let center = laid_out(&e, &r.center);
        let c = complete_internal_labels(&e, &center, lambda).unwrap();
        let order: Vec<Label> = c.center.labels().keys().copied().collect();
        for m in &c.members {
            let alpha = vertex_consistency(m, &c.center, 0.5, lambda).unwrap();
            for &l in &order {
                // vectors rebuilt from raw vertex distances
                let mv = m.labels()[&l];
                let cv = c.center.labels()[&l];
                let a: Vec<f64> = order.iter().filter(|&&o| o != l)
                    .map(|o| m.blended_distance(mv, m.labels()[o], lambda).unwrap()).collect();
                let b: Vec<f64> = order.iter().filter(|&&o| o != l)
                    .map(|o| c.center.blended_distance(cv, c.center.labels()[o], lambda).unwrap()).collect();
                prop_assert_eq!(&a, &distance_vector(m, l, &order, lambda, 1.0).unwrap());
                prop_assert_eq!(alpha[&l], weighted_cosine(&a, &b, 0.5).unwrap());
                prop_assert!((0.0..=1.0).contains(&alpha[&l]));
            }
            let edges = edge_consistency(m, &alpha).unwrap();
            let by_vertex = m.labels_by_vertex();
            for e in edges {
                let (a, b) = (alpha[&by_vertex[e.child][0]], alpha[&by_vertex[e.parent][0]]);
                prop_assert_eq!(e.pc, a.min(b));
                prop_assert_eq!(e.pl, (a, b));
            }
        }
        let self_alpha = vertex_consistency(&c.center, &c.center, 0.05, lambda).unwrap();
        prop_assert!(self_alpha.values().all(|&v| v == 1.0));
    }

    #[test]
    fn geodesic_frames_are_additive(seed: u64, n in 1usize..10, lattice: bool) {
        let mut rng = kit::rng(seed);
        let ts = kit::random_ensemble(&mut rng, 2, n, lattice);
        let path = geodesic_frames(&ts[0], &ts[1], 10, false, 0.05, 1.0).unwrap();
        let total = interleaving_distance(&ts[0], &ts[1]).unwrap();
        let first = &path.frames[0].tree;
        let last = &path.frames[9].tree;
        prop_assert_eq!(induced_matrix(first).unwrap(), induced_matrix(&ts[0]).unwrap());
        prop_assert_eq!(induced_matrix(last).unwrap(), induced_matrix(&ts[1]).unwrap());
        for (k, f) in path.frames.iter().enumerate() {
            prop_assert!(f.tree.tree().validate().is_empty());
            prop_assert_eq!(f.lambda, k as f64 / 9.0);
            let a = interleaving_distance(first, &f.tree).unwrap();
            let b = interleaving_distance(&f.tree, last).unwrap();
            prop_assert!(a + b - total <= 1e-9);
            prop_assert!((a - f.lambda * total).abs() <= 1e-9);
        }
        prop_assert_eq!(path.clone(), geodesic_frames(&ts[0], &ts[1], 10, false, 0.05, 1.0).unwrap());
    }

    #[test]
    fn linear_frames_interpolate_componentwise(seed: u64, n in 2usize..6) {
        let mut rng = kit::rng(seed);
        let t = kit::random_embedded_tree(&mut rng, n, false);
        let e = Ensemble::new(vec![t.clone()]);
        let c = complete_internal_labels(&e, &t, 1.0).unwrap();
        let source = &c.members[0];
        let target = kit::with_random_embedding(&mut rng, &c.center);
        let steps = rng.gen_range(2..7);
        let frames = linear_embedding_frames(source, &target, steps).unwrap();
        prop_assert_eq!(frames.len(), steps);
        let (se, te) = (source.embedding().unwrap(), target.embedding().unwrap());
        for (k, f) in frames.iter().enumerate() {
            let s = k as f64 / (steps - 1) as f64;
            for v in 0..target.vertex_count() {
                let sv = match target.labels_at(v).first() {
                    Some(l) => source.labels()[l],
                    None => source.root(),
                };
                for d in 0..2 {
                    let want = (1.0 - s) * se.point(sv)[d] + s * te.point(v)[d];
                    prop_assert!((f.embedding().unwrap().point(v)[d] - want).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn center_x_is_the_midrange(seed: u64, n in 2usize..6, k in 1usize..5) {
        let mut rng = kit::rng(seed);
        let ts: Vec<_> = (0..k).map(|_| kit::random_embedded_tree(&mut rng, n, false)).collect();
        let e = Ensemble::new(ts);
        let r = one_center_tree(&e).unwrap();
        let c = complete_internal_labels(&e, &r.center, 1.0).unwrap();
        let emb = center_embedding(&c.center, &c.members).unwrap();
        for (v, labels) in c.center.labels_by_vertex().iter().enumerate() {
            if labels.is_empty() {
                continue;
            }
            let xs: Vec<f64> = c.members.iter().flat_map(|m| {
                labels.iter().map(|l| m.embedding().unwrap().point(m.labels()[l])[0]).collect::<Vec<_>>()
            }).collect();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(emb.point(v)[0], (lo + hi) / 2.0);
            prop_assert_eq!(emb.point(v)[1], c.center.tree().value(v));
        }
    }

    #[test]
    fn extraction_matches_threshold_components(seed: u64, eight: bool) {
        let mut rng = kit::rng(seed);
        let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
        let g = kit::random_grid(&mut rng, 8, false).with_connectivity(conn);
        let e = extract_merge_tree(&g, false).unwrap();
        prop_assert!(e.tree.tree().validate().is_empty());
        prop_assert_eq!(induced_matrix(&e.tree).unwrap().rows(), kit::grid_merge_oracle(&g));
        prop_assert_eq!(e.tree.leaf_count(), kit::strict_local_minima(&g).len());
        let aug = extract_merge_tree(&g, true).unwrap();
        prop_assert!(aug.tree.tree().validate().is_empty());
        prop_assert_eq!(induced_matrix(&aug.tree).unwrap(), induced_matrix(&e.tree).unwrap());
        prop_assert_eq!(aug.tree.vertex_count(), g.values().len() + 1);
    }

    #[test]
    fn extraction_with_ties_stays_valid(seed: u64) {
        let mut rng = kit::rng(seed);
        let g = kit::random_grid(&mut rng, 8, true);
        for augmented in [false, true] {
            let e = extract_merge_tree(&g, augmented).unwrap();
            prop_assert!(e.tree.tree().validate().is_empty());
            prop_assert_eq!(e.tree.leaf_count(), kit::strict_local_minima(&g).len());
        }
    }

    #[test]
    fn extraction_shifts_with_the_field(seed: u64, shift in -100.0f64..100.0) {
        let mut rng = kit::rng(seed);
        let g = kit::random_grid(&mut rng, 8, false);
        let shifted = ScalarGrid::new(g.width(), g.height(), g.values().iter().map(|v| v + shift).collect()).unwrap();
        let a = extract_merge_tree(&g, false).unwrap();
        let b = extract_merge_tree(&shifted, false).unwrap();
        prop_assert_eq!(a.tree.leaf_count(), b.tree.leaf_count());
        prop_assert_eq!(a.tree.labels(), b.tree.labels());
        for v in 0..a.tree.vertex_count() {
            let (x, y) = (a.tree.tree().value(v), b.tree.tree().value(v));
            if x.is_finite() {
                prop_assert!((x + shift - y).abs() <= 1e-9);
            }
        }
    }
}

/// `center` with the layout computed from a tree-distance correspondence.
fn laid_out(e: &Ensemble, center: &lmt_core::LabeledMergeTree) -> lmt_core::LabeledMergeTree {
    let c = complete_internal_labels(e, center, 1.0).unwrap();
    let pts: Vec<Vec<f64>> = center_embedding(&c.center, &c.members)
        .unwrap()
        .points()
        .take(center.vertex_count())
        .map(<[f64]>::to_vec)
        .collect();
    center.with_embedding(Some(lmt_core::Embedding::new(2, &pts).unwrap())).unwrap()
}

#[test]
fn two_labels_are_always_consistent() {
    let mut rng = kit::rng(1);
    for _ in 0..20 {
        let a = kit::random_tree(&mut rng, 2, false);
        let b = kit::random_tree(&mut rng, 2, false);
        let e = Ensemble::new(vec![a.clone(), b.clone()]);
        let r = one_center_tree(&e).unwrap();
        let alpha = lmt_core::label_consistency(&a, &r.center, 0.05, 1.0, 1.0).unwrap();
        assert!(alpha.values().all(|&v| v == 1.0));
    }
}

#[test]
fn separated_wells_give_one_leaf_each() {
    let wells = |centers: &[(f64, f64)], depths: &[f64]| -> Vec<GaussianBump> {
        centers
            .iter()
            .zip(depths)
            .map(|(&c, &a)| GaussianBump { center: c, amplitude: a, sigma: 2.0 })
            .collect()
    };
    let g = gaussian_mixture_grid(&wells(&[(6.0, 6.0), (20.0, 6.0), (13.0, 20.0)], &[1.0, 0.8, 0.6]), 27, 27, -1.0)
        .unwrap();
    let e = extract_merge_tree(&g, false).unwrap();
    assert_eq!(e.tree.leaf_count(), 3);
    assert_eq!(kit::strict_local_minima(&g).len(), 3);
}

#[test]
fn identical_ensemble_pipeline_is_flat() {
    let mut rng = kit::rng(2);
    let t = kit::random_embedded_tree(&mut rng, 5, false);
    let e = Ensemble::new(vec![t.clone(), t.clone(), t]);
    for lambda in [1.0, 0.5] {
        let out = run_pipeline(&e, &PipelineConfig { lambda, mode: AgreementMode::Full, ..Default::default() }).unwrap();
        assert_eq!(out.center.radius, 0.0);
        assert_eq!(out.consistency.variational.max_deviation, 0.0, "lambda {lambda} {:?}", out.consistency.variational.deviations);
        assert!(out.consistency.variational.radii.values().flatten().all(|&r| r == 0.0));
        for s in out.consistency.statistical.values() {
            assert_eq!(s.min, s.max);
        }
        if lambda == 1.0 {
            assert!(out.consistency.vertex.iter().flat_map(|a| a.values()).all(|&v| v == 1.0));
        }
        assert!(out.center_embedding.is_some());
    }
}

#[test]
fn report_edges_skip_the_root() {
    let mut rng = kit::rng(9);
    let ts = kit::random_ensemble(&mut rng, 3, 4, false);
    let e = Ensemble::new(ts);
    let r = one_center_tree(&e).unwrap();
    let c = complete_internal_labels(&e, &r.center, 1.0).unwrap();
    let rep = consistency_report(&c.center, &c.members, 0.05, 1.0, 1.0, true).unwrap();
    assert_eq!(rep.center_edges.len(), c.center.vertex_count() - 2);
    assert!(rep.scale > 0.0);
    for edges in &rep.member_edges {
        for e in edges {
            assert!(e.pc <= e.pl.0 && e.pc <= e.pl.1);
        }
    }
}

