//! Property tests over the public API: structural invariants that must hold
//! for arbitrary graphs, fanouts and seeds.

use proptest::prelude::*;

use sage_core::graph::{save_dataset, Graph, LabelMode, Split};
use sage_core::ndmath::{l2_normalize_rows, relu, Matrix, Real};
use sage_core::{
    build_tree, generate_synthetic, load_dataset, RngStream, SamplerKind, SyntheticSpec,
};

fn arb_graph() -> impl Strategy<Value = Graph> {
    (
        4usize..40,
        proptest::collection::vec((0usize..40, 0usize..40), 0..120),
        any::<u64>(),
    )
        .prop_map(|(n, raw_edges, seed)| {
            let edges: Vec<(usize, usize)> =
                raw_edges.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let mut rng = RngStream::new(seed).rng();
            use rand::Rng;
            let features =
                Matrix::from_vec(n, 3, (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let mut labels = Matrix::zeros(n, 2);
            for i in 0..n {
                labels.set(i, i % 2, 1.0);
            }
            let split = (0..n)
                .map(|_| match rng.gen_range(0..3) {
                    0 => Split::Train,
                    1 => Split::Val,
                    _ => Split::Test,
                })
                .collect();
            Graph::from_parts(features, labels, LabelMode::Single, split, &edges).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_size_law_and_membership(
        graph in arb_graph(),
        fanouts in proptest::collection::vec(1usize..5, 1..4),
        seed in any::<u64>(),
    ) {
        let roots: Vec<usize> = (0..graph.num_nodes().min(6)).collect();
        let tree = build_tree(&graph, &roots, SamplerKind::Uniform, &fanouts, RngStream::new(seed));
        let mut expected = roots.len();
        for (k, &n_k) in fanouts.iter().enumerate() {
            expected *= n_k;
            prop_assert_eq!(tree.level(k + 1).len(), expected);
            for (i, &parent) in tree.level(k).iter().enumerate() {
                for &child in tree.children(k + 1, i) {
                    if graph.degree(parent) == 0 {
                        prop_assert_eq!(child, parent);
                    } else {
                        prop_assert!(graph.neighbors(parent).contains(&child));
                    }
                }
            }
        }
    }

    #[test]
    fn restricting_twice_equals_restricting_once(graph in arb_graph()) {
        let once = graph.restrict_to_train();
        let twice = once.restrict_to_train();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn synthetic_datasets_round_trip_through_disk(
        nodes in 20usize..80,
        communities in 2usize..5,
        dim in 2usize..6,
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let spec = SyntheticSpec {
            num_nodes: nodes,
            num_communities: communities,
            feature_dim: dim,
            informative_fraction: fraction,
            mean_degree: 4,
            noise_std: 0.7,
            seed,
        };
        let graph = generate_synthetic(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&graph, dir.path()).unwrap();
        let (reloaded, meta) = load_dataset(dir.path()).unwrap();
        prop_assert_eq!(&graph, &reloaded);
        prop_assert_eq!(meta, graph.meta());
    }

    #[test]
    fn normalization_and_relu_invariants(
        rows in 1usize..8,
        cols in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed).rng();
        use rand::Rng;
        let m = Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        );
        let r = relu(&m);
        let rr = relu(&r);
        prop_assert_eq!(rr.data(), r.data());
        let (normalized, _) = l2_normalize_rows(&m);
        for i in 0..rows {
            let norm = normalized.row(i).iter().map(|v| v * v).sum::<Real>().sqrt();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
        }
    }
}
