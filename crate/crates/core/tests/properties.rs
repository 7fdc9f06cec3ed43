use std::collections::HashMap;

use proptest::prelude::*;

use appr_core::appr::{appr_solve_with, ApprParams, PushView, SolveOptions};
use appr_core::cluster::{assign_clusters, cluster, purity_score, DEFAULT_BETA_L, DEFAULT_SHIFT};
use appr_core::fixtures::{barbell_k3, barbell_k3_labels};
use appr_core::graph::{transition_column, Graph, LabelSet};
use appr_core::kernel::KernelSolver;
use appr_core::onl::{argmax, onl_run, waterfill, OnlConfig, OnlMethod};
use appr_core::oracle::sampling::{bernoulli_subgauss_constant, enumerate_sampler_outcomes, enumeration_bias};
use appr_core::sampler::{SamplerConfig, Weighting};
use appr_core::sparsify::{edge_probabilities, sparsify_with_probabilities};
use appr_core::SparseVector;

fn edges_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2usize..25).prop_flat_map(|n| {
        let e = prop::collection::vec((0..n, 0..n, 0.1f64..5.0), 0..80);
        (Just(n), e)
    })
}

fn weighting() -> impl Strategy<Value = Weighting> {
    prop_oneof![
        Just(Weighting::Uniform),
        Just(Weighting::EdgeWeighted),
        Just(Weighting::DegreeWeighted)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_is_symmetric_with_sorted_neighbors((n, edges) in edges_strategy()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let mut last: HashMap<(usize, usize), f64> = HashMap::new();
        for &(u, v, w) in &edges {
            if u != v {
                last.insert((u.min(v), u.max(v)), w);
            }
        }
        prop_assert_eq!(g.edge_count(), last.len());
        for u in 0..n {
            let ids = g.neighbor_ids(u);
            prop_assert!(ids.windows(2).all(|p| p[0] < p[1]));
            prop_assert!(!ids.contains(&u));
            let d: f64 = g.neighbor_weights(u).iter().sum();
            prop_assert!((d - g.degree(u)).abs() < 1e-12);
            for (v, w) in g.neighbors(u) {
                prop_assert_eq!(g.weight(v, u), w);
                prop_assert_eq!(last[&(u.min(v), u.max(v))], w);
            }
        }
        let total: f64 = last.values().sum();
        prop_assert!((g.volume(0..n) - 2.0 * total).abs() < 1e-9);
    }

    #[test]
    fn transition_columns_sum_to_one((n, edges) in edges_strategy()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        for u in 0..n {
            match transition_column(&g, u) {
                Ok(c) => prop_assert!((c.iter().map(|(_, v)| v).sum::<f64>() - 1.0).abs() < 1e-12),
                Err(_) => prop_assert_eq!(g.degree(u), 0.0),
            }
        }
    }

    #[test]
    fn push_invariants_hold(
        (n, edges) in edges_strategy(),
        alpha in 0.05f64..0.9,
        log_eps in -6.0f64..-2.0,
        seed in 0usize..25,
    ) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let s = seed % n;
        prop_assume!(g.degree(s) > 0.0);
        let p = ApprParams::new(alpha, 10f64.powf(log_eps)).unwrap();
        let mut prev = 1.0f64;
        let mut ok = true;
        let mut obs = |v: &PushView<'_>| {
            let z1 = v.z.l1_norm();
            let mass: f64 = v.x.iter().map(|(u, xu)| g.degree(u).sqrt() * xu).sum();
            ok &= v.x.iter().all(|(_, xu)| xu >= 0.0)
                && v.z.iter().all(|(_, zu)| zu >= 0.0)
                && z1 <= prev
                && (z1 + mass - 1.0).abs() <= 1e-9 * v.push_count as f64;
            prev = z1;
        };
        let out = appr_solve_with(&g, s, &p, SolveOptions::default(), &mut obs).unwrap();
        prop_assert!(ok);
        for (u, zu) in out.z.iter() {
            prop_assert!(zu < g.degree(u) * p.epsilon || g.degree(u) == 0.0);
        }
    }

    #[test]
    fn waterfill_is_a_distribution(z in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        let (p, _) = waterfill(&z).unwrap();
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(p[argmax(&z)], p.iter().cloned().fold(0.0, f64::max));
        prop_assert!(p[argmax(&z)] > 0.0 && z[argmax(&z)] == top);
    }

    #[test]
    fn sampler_enumeration_is_unbiased(
        vals in prop::collection::vec(prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], 1..9),
        q in 1usize..9,
        w in weighting(),
    ) {
        let g = appr_core::fixtures::power_law(40, 2.3, 4.0, 5);
        let nodes: Vec<usize> = (0..40).filter(|&u| g.degree(u) > 0.0).collect();
        let v = SparseVector::from_pairs(vals.iter().enumerate().map(|(i, &x)| (nodes[i], x)));
        let cfg = SamplerConfig::new(q, w, 0).unwrap();
        let out = enumerate_sampler_outcomes(&v, &cfg, &g).unwrap();
        prop_assert!(enumeration_bias(&v, &out) <= 1e-12);
        for (o, _) in &out {
            prop_assert_eq!(o.support_size(), q.min(vals.len()));
        }
    }

    #[test]
    fn subgauss_constant_is_capped(p in 1e-9f64..1.0) {
        let s = bernoulli_subgauss_constant(p).unwrap();
        prop_assert!(s > 0.0 && s <= 0.25);
    }

    #[test]
    fn sparsified_edges_are_reweighted((n, edges) in edges_strategy(), q in 1.0f64..6.0, seed in 0u64..1000) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let scheme = appr_core::sparsify::EdgeProbabilityScheme::Influencer { q_bar: q };
        let p = edge_probabilities(&g, &scheme).unwrap();
        let s = sparsify_with_probabilities(&g, &p, seed).unwrap();
        for ((u, v, w), pe) in g.edges().zip(&p) {
            let ws = s.weight(u, v);
            if *pe >= 1.0 {
                prop_assert_eq!(ws, w);
            } else {
                prop_assert!(ws == 0.0 || (ws - w / pe).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn purity_ignores_seed_order(labels in prop::collection::vec(0usize..3, 4..30), rot in 0usize..3) {
        let n = labels.len();
        let labels = LabelSet::new(labels, 3).unwrap();
        let cols: Vec<SparseVector> = (0..3)
            .map(|j| SparseVector::from_pairs((0..n).filter(|u| u % 3 == j).map(|u| (u, 1.0 + u as f64))))
            .collect();
        let seeds = [0usize, 1, 2];
        let a = assign_clusters(&cols, &seeds, n).unwrap();
        let mut perm_cols = cols.clone();
        perm_cols.rotate_left(rot);
        let mut perm_seeds = seeds;
        perm_seeds.rotate_left(rot);
        let b = assign_clusters(&perm_cols, &perm_seeds, n).unwrap();
        let sa = purity_score(&a, &labels).unwrap();
        prop_assert_eq!(sa, purity_score(&b, &labels).unwrap());
        prop_assert!(sa > 0.0 && sa <= 1.0);
    }

    #[test]
    fn online_losses_accumulate(seed in 0u64..50, method in prop_oneof![
        Just(OnlMethod::Relaxation),
        Just(OnlMethod::Regularize),
        Just(OnlMethod::Wma),
        Just(OnlMethod::WmaStar { beta: 0.5, k_hops: 2 }),
    ]) {
        let (g, labels) = appr_core::fixtures::planted_partition(40, 2, 4.0, 0.9, 0.1, seed);
        let mut cfg = OnlConfig::new(method, KernelSolver::Exact);
        cfg.seed = seed;
        let order: Vec<usize> = (0..40).rev().collect();
        let tr = onl_run(&g, &labels, &cfg, &order).unwrap();
        prop_assert_eq!(tr.losses.len(), 40);
        let mut acc = 0;
        for (l, c) in tr.losses.iter().zip(&tr.cumulative_loss) {
            acc += *l as usize;
            prop_assert_eq!(acc, *c);
        }
    }
}

fn disjoint_union(a: &Graph, b: &Graph) -> Graph {
    let off = a.node_count();
    let mut e: Vec<(usize, usize, f64)> = a.edges().collect();
    e.extend(b.edges().map(|(u, v, w)| (u + off, v + off, w)));
    Graph::from_edges(off + b.node_count(), &e).unwrap()
}

#[test]
fn clustering_decomposes_over_components() {
    let a = barbell_k3();
    let la = barbell_k3_labels();
    let b = appr_core::fixtures::k3_chain(3);
    let lb = LabelSet::new(vec![0, 0, 0, 1, 1, 1, 1, 1, 1], 2).unwrap();
    let g = disjoint_union(&a, &b);
    let mut all = la.as_slice().to_vec();
    all.extend(lb.as_slice());
    let labels = LabelSet::new(all, 2).unwrap();
    let solver = KernelSolver::Exact;
    let ra = cluster(&a, &[0, 5], DEFAULT_SHIFT, DEFAULT_BETA_L, &solver, Some(&la)).unwrap();
    let rb = cluster(&b, &[0, 8], DEFAULT_SHIFT, DEFAULT_BETA_L, &solver, Some(&lb)).unwrap();
    let r = cluster(&g, &[0, 5, 6, 14], DEFAULT_SHIFT, DEFAULT_BETA_L, &solver, Some(&labels)).unwrap();
    let want = (ra.score.unwrap() * 6.0 + rb.score.unwrap() * 9.0) / 15.0;
    assert!((r.score.unwrap() - want).abs() < 1e-12);
}
