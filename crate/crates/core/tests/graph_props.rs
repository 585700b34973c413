use fdgm::graph::{
    generate_sequence, io, laplacian_weights, metropolis_weights, verify_b_connectivity, GraphSnapshot,
    SequenceKind,
};
use proptest::prelude::*;

fn snapshot() -> impl Strategy<Value = GraphSnapshot> {
    (2usize..=25).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        prop::collection::vec(any::<bool>(), m).prop_map(move |keep| {
            let mut edges: Vec<_> = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| *e).collect();
            if edges.is_empty() {
                edges.push((0, n - 1));
            }
            GraphSnapshot::new(n, edges).unwrap()
        })
    })
}

fn with_lipschitz() -> impl Strategy<Value = (GraphSnapshot, Vec<f64>)> {
    snapshot().prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), prop::collection::vec(0.05..20.0f64, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn laplacian_is_a_valid_weight_matrix(g in snapshot()) {
        let h = laplacian_weights(&g);
        let c = h.check(&g);
        prop_assert!(c.passes(), "{c:?}");
        // λ_max(L_G) ≤ n for any simple graph
        let top = h.to_dense().symmetric_eigenvalues().max();
        prop_assert!(top <= g.node_count() as f64 + 1e-9);
    }

    #[test]
    fn metropolis_is_valid_and_dominated((g, lip) in with_lipschitz()) {
        let h = metropolis_weights(&g, &lip).unwrap();
        let c = h.check(&g);
        prop_assert!(c.passes(), "{c:?}");
        let scale: Vec<f64> = lip.iter().map(|l| 2.0 / l).collect();
        prop_assert!(h.dominated_by(&scale));
        prop_assert!(h.min_eig_below(&scale) >= -1e-10);
    }

    #[test]
    fn quadratic_form_matches_dense((g, lip) in with_lipschitz(), seed in any::<u64>()) {
        let h = metropolis_weights(&g, &lip).unwrap();
        let n = g.node_count();
        let x: Vec<f64> = (0..2 * n).map(|i| ((seed.wrapping_add(i as u64) % 97) as f64 - 48.0) / 7.0).collect();
        let dense = h.to_dense();
        let mut expect = 0.0;
        for t in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    expect += x[i * 2 + t] * dense[(i, j)] * x[j * 2 + t];
                }
            }
        }
        prop_assert!((h.quadratic_form(&x, 2) - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
    }

    #[test]
    fn generators_are_b_connected(n in 2usize..20, extra in 0usize..6, seed in any::<u64>(), gossip in any::<bool>()) {
        let (kind, window) = if gossip {
            (SequenceKind::Gossip, n - 1 + extra)
        } else {
            (SequenceKind::WindowedTree, 1 + extra)
        };
        let horizon = 8 * window;
        let seq = generate_sequence(kind, n, window, horizon, seed).unwrap();
        prop_assert_eq!(seq.len(), horizon);
        prop_assert!(verify_b_connectivity(&seq, window, horizon).unwrap());
        for t in 0..8 {
            let tree = seq.window_spanning_tree(t).unwrap();
            prop_assert_eq!(tree.edges().len(), n - 1);
            prop_assert!(tree.is_connected());
        }
    }

    #[test]
    fn text_format_round_trips(n in 2usize..12, seed in any::<u64>()) {
        let seq = generate_sequence(SequenceKind::WindowedTree, n, 3, 30, seed).unwrap();
        let back = io::read_sequence(io::to_text(&seq).as_bytes()).unwrap();
        prop_assert_eq!(back.window(), 3);
        prop_assert_eq!(back.snapshots(), seq.snapshots());
    }
}

#[test]
fn disconnected_windows_are_detected() {
    let g = GraphSnapshot::new(4, [(0, 1)]).unwrap();
    let h = GraphSnapshot::new(4, [(2, 3)]).unwrap();
    let seq = fdgm::graph::GraphSequence::new(2, vec![g, h.clone(), h.clone(), h]).unwrap();
    assert!(!verify_b_connectivity(&seq, 2, 4).unwrap());
}

#[test]
fn malformed_graph_files_are_rejected() {
    for text in ["", "3 1\n", "3 1 1\n1-4\n", "3 1 2\n1-2\n", "3 1 1\n1-1\n", "x 1 1\n1-2\n"] {
        assert!(io::read_sequence(text.as_bytes()).is_err(), "{text:?}");
    }
}
