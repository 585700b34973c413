use fdgm::certify::{
    certify_run, clearance, dual_norm_bound, estimate_dual_optimum, solve_centralized, solve_centralized_with_target,
    CENTRALIZED_TOL,
};
use fdgm::graph::{generate_sequence, SequenceKind, WeightKind};
use fdgm::oracle::{generate_instance, InstanceSpec, ProblemInstance};
use fdgm::solver::{dual_value, DeltaRule, Init, RunConfig, StepSizePolicy};

/// Cyclic coordinate descent on `Σ_i f_i` over the common box, written
/// independently of the library's accelerated solver.
fn coordinate_descent(inst: &ProblemInstance, target: &[f64]) -> Vec<f64> {
    let d = inst.dim();
    let mut q = vec![0.0; d * d];
    let mut c: Vec<f64> = target.iter().map(|t| -t).collect();
    let mut gamma = 0.0;
    for p in inst.locals() {
        for (a, b) in q.iter_mut().zip(p.quad()) {
            *a += b;
        }
        for (a, b) in c.iter_mut().zip(p.linear()) {
            *a += b;
        }
        gamma += p.l1_weight();
    }
    let (lo, hi) = inst.common_box();
    let mut x = vec![0.0; d];
    for _ in 0..20_000 {
        for j in 0..d {
            let off: f64 = (0..d).filter(|&k| k != j).map(|k| q[j * d + k] * x[k]).sum();
            let v = -(2.0 * off + c[j]);
            let soft = v.signum() * (v.abs() - gamma).max(0.0);
            x[j] = (soft / (2.0 * q[j * d + j])).clamp(lo[j], hi[j]);
        }
    }
    x
}

#[test]
fn centralized_solution_matches_coordinate_descent() {
    for seed in 0..5 {
        for (box_range, l1) in [(Some((0.5, 1.5)), 0.02), (Some((0.05, 0.2)), 0.5), (None, 0.0)] {
            let inst = generate_instance(&InstanceSpec { n: 10, d: 3, seed, box_range, l1_weight: l1, ..Default::default() })
                .unwrap();
            let reference = solve_centralized(&inst, CENTRALIZED_TOL).unwrap();
            let cd = coordinate_descent(&inst, &[0.0; 3]);
            for t in 0..3 {
                assert!((reference.x_star[t] - cd[t]).abs() <= 1e-6, "seed {seed}: {:?} vs {cd:?}", reference.x_star);
            }
            let f: f64 = inst.locals().iter().map(|p| p.objective_value(&cd)).sum();
            assert!((reference.f_star - f).abs() <= 1e-9 * (1.0 + f.abs()));
            assert_eq!(reference.d_star, -reference.f_star);
        }
    }
}

#[test]
fn resource_target_shifts_the_optimum() {
    let inst = generate_instance(&InstanceSpec { n: 10, d: 3, seed: 8, ..Default::default() }).unwrap();
    let c = [1.0, 0.0, -0.5];
    let reference = solve_centralized_with_target(&inst, &c, CENTRALIZED_TOL).unwrap();
    let cd = coordinate_descent(&inst, &c);
    for t in 0..3 {
        assert!((reference.x_star[t] - cd[t]).abs() <= 1e-6);
    }
}

#[test]
fn strong_duality_at_the_estimated_dual_optimum() {
    let inst = generate_instance(&InstanceSpec { n: 8, d: 3, seed: 2, ..Default::default() }).unwrap();
    let seq = generate_sequence(SequenceKind::WindowedTree, 8, 3, 300, 2).unwrap();
    let reference = solve_centralized(&inst, CENTRALIZED_TOL).unwrap();
    let w = estimate_dual_optimum(&inst, &seq, &Init::Zeros, 3000, 1e-12).unwrap();
    let dv = dual_value(&inst, &w, 1e-12).unwrap();
    assert!(dv >= reference.d_star - 1e-9);
    assert!(dv - reference.d_star <= 1e-8, "gap {}", dv - reference.d_star);
    assert!(w.norm() <= dual_norm_bound(&inst, &reference));
}

#[test]
fn clearance_is_the_smallest_box_margin() {
    let inst = generate_instance(&InstanceSpec { n: 6, d: 2, seed: 5, ..Default::default() }).unwrap();
    let expect = inst
        .locals()
        .iter()
        .flat_map(|p| p.box_lower().iter().map(|v| -v).chain(p.box_upper().iter().copied()).collect::<Vec<_>>())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(clearance(&inst), expect);
    let free = generate_instance(&InstanceSpec { n: 3, d: 2, seed: 5, box_range: None, ..Default::default() }).unwrap();
    assert_eq!(clearance(&free), 1.0);
}

#[test]
fn certification_passes_for_laplacian_and_random_steps() {
    let inst = generate_instance(&InstanceSpec { n: 10, d: 3, seed: 6, ..Default::default() }).unwrap();
    let seq = generate_sequence(SequenceKind::WindowedTree, 10, 4, 400, 7).unwrap();
    let delta = inst.lipschitz() * 10.0;
    let lap = StepSizePolicy::constant(1.0 / delta, delta, DeltaRule::ConservativeLhn).unwrap();
    let rnd = StepSizePolicy::uniform_random(0.1, 0.9, 400, 1, 2.0, DeltaRule::MetropolisTwo).unwrap();
    for (weights, policy) in [(WeightKind::Laplacian, lap), (WeightKind::Metropolis, rnd)] {
        let cfg = RunConfig::new(weights, policy, 400);
        let cert = certify_run(&inst, &seq, &cfg, 10).unwrap();
        assert!(cert.report.passed(), "{weights:?}\n{}", cert.report);
    }
}

#[test]
fn unenforced_policies_cannot_be_certified() {
    let inst = generate_instance(&InstanceSpec { n: 4, d: 2, seed: 6, ..Default::default() }).unwrap();
    let seq = generate_sequence(SequenceKind::WindowedTree, 4, 2, 20, 7).unwrap();
    let policy = StepSizePolicy::unchecked(1.7, 2.0, DeltaRule::MetropolisTwo).unwrap();
    let cfg = RunConfig::new(WeightKind::Metropolis, policy, 20);
    let err = certify_run(&inst, &seq, &cfg, 10).err().unwrap();
    assert!(matches!(err.error, fdgm::Error::CertificationUnavailable(_)));
}
