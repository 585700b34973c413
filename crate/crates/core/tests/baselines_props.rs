use fdgm::baselines::{
    diging_step, mixing_matrix, run_baseline, subgrad_step, BaselineConfig, BaselineKind, BaselineStep, DigingState,
};
use fdgm::certify::{solve_centralized, CENTRALIZED_TOL};
use fdgm::graph::{generate_sequence, SequenceKind};
use fdgm::oracle::{generate_instance, InstanceSpec};
use fdgm::{Execution, NodeBlock};
use proptest::prelude::*;

fn smooth(n: usize, seed: u64) -> fdgm::oracle::ProblemInstance {
    generate_instance(&InstanceSpec { n, d: 3, seed, box_range: None, l1_weight: 0.0, ..Default::default() }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn mixing_matrix_is_doubly_stochastic(n in 2usize..15, seed in any::<u64>()) {
        let seq = generate_sequence(SequenceKind::WindowedTree, n, 2, 4, seed).unwrap();
        for g in seq.snapshots() {
            let w = mixing_matrix(g).to_dense();
            prop_assert_eq!(&w, &w.transpose());
            for i in 0..n {
                prop_assert!((w.row(i).sum() - 1.0).abs() <= 1e-12);
                for j in 0..n {
                    prop_assert!(w[(i, j)] >= 0.0);
                    if i != j && !g.contains_edge(i, j) {
                        prop_assert_eq!(w[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn diging_tracks_the_average_gradient(n in 2usize..10, seed in any::<u64>(), alpha in 0.001..0.05f64) {
        let inst = smooth(n, seed);
        let seq = generate_sequence(SequenceKind::WindowedTree, n, 3, 30, seed ^ 3).unwrap();
        let x0 = NodeBlock::from_rows((0..n).map(|i| vec![i as f64 * 0.1, -0.2, 0.3]).collect());
        let mut s = DigingState::new(&inst, x0).unwrap();
        for k in 0..30 {
            s = diging_step(&inst, &s, seq.snapshot(k), alpha, Execution::Sequential).unwrap();
            let (ys, gs) = (s.y.sum_rows(), s.grad.sum_rows());
            for t in 0..3 {
                prop_assert!((ys[t] - gs[t]).abs() <= 1e-9 * (1.0 + gs[t].abs()), "k {k}");
            }
        }
    }

    #[test]
    fn subgradient_iterates_stay_in_their_boxes(n in 2usize..10, seed in any::<u64>(), alpha in 0.01..5.0f64) {
        let inst = generate_instance(&InstanceSpec { n, d: 2, seed, ..Default::default() }).unwrap();
        let seq = generate_sequence(SequenceKind::WindowedTree, n, 2, 10, seed).unwrap();
        let mut x = NodeBlock::zeros(n, 2);
        for k in 0..10 {
            x = subgrad_step(&inst, &x, seq.snapshot(k), alpha, Execution::Sequential);
            for i in 0..n {
                prop_assert!(inst.local(i).contains(x.row(i)));
            }
        }
    }
}

#[test]
fn diging_reaches_the_optimum_on_a_static_ring() {
    let inst = smooth(6, 11);
    let seq = generate_sequence(SequenceKind::FullStatic, 6, 1, 3000, 0).unwrap();
    let reference = solve_centralized(&inst, CENTRALIZED_TOL).unwrap();
    let mut cfg = BaselineConfig::new(BaselineKind::Diging, BaselineStep::Constant(0.02), 3000);
    cfg.record_every = 1000;
    let t = run_baseline(&inst, &seq, &cfg, Some(&reference.optimum())).unwrap();
    assert!(t.records.last().unwrap().primal_error < 1e-8, "{}", t.records.last().unwrap().primal_error);
}

#[test]
fn diging_refuses_constrained_instances() {
    let inst = generate_instance(&InstanceSpec { n: 3, d: 2, seed: 0, ..Default::default() }).unwrap();
    assert!(DigingState::new(&inst, NodeBlock::zeros(3, 2)).is_err());
}

#[test]
fn baseline_csv_has_nan_duals() {
    let inst = generate_instance(&InstanceSpec { n: 4, d: 2, seed: 0, ..Default::default() }).unwrap();
    let seq = generate_sequence(SequenceKind::WindowedTree, 4, 2, 10, 0).unwrap();
    let cfg = BaselineConfig::new(BaselineKind::SubgradProjection, BaselineStep::Diminishing(1.0), 10);
    let csv = run_baseline(&inst, &seq, &cfg, None).unwrap().to_csv();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[1], cols[2]), ("nan", "nan"));
    }
}
