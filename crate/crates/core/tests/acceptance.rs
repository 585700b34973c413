//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use fdgm::certify::{certify_run, dual_norm_bound, solve_centralized, CENTRALIZED_TOL};
use fdgm::graph::{
    generate_sequence, laplacian_weights, metropolis_weights, GraphSnapshot, SequenceKind, WeightKind,
};
use fdgm::oracle::{generate_instance, InstanceSpec, LocalProblem, ProblemInstance};
use fdgm::scenario::{self, Prepared, ResolvedKind};
use fdgm::solver::{run, DeltaRule, RunConfig, RunTrace, StepSizePolicy};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn prepared(name: &str, seed: u64, horizon: Option<usize>) -> Prepared {
    let mut cfg = scenario::preset(name).expect("preset exists");
    cfg.seed = seed;
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    scenario::prepare(&cfg, Path::new(".")).expect("preset prepares")
}

/// Runs every dual-method variant of a prepared scenario.
fn fdgm_traces(p: &Prepared) -> Vec<(String, RunTrace)> {
    let reference = solve_centralized(&p.instance, CENTRALIZED_TOL).unwrap();
    p.algorithms
        .iter()
        .filter_map(|a| match &a.kind {
            ResolvedKind::Fdgm(cfg) => {
                let t = run(&p.instance, &p.seq, cfg, Some(&reference.optimum())).unwrap();
                Some((a.name.clone(), t))
            }
            ResolvedKind::Baseline(_) => None,
        })
        .collect()
}

fn reduced_instance() -> ProblemInstance {
    generate_instance(&InstanceSpec { n: 20, d: 5, theta_range: (2.0, 3.0), seed: 20, l1_weight: 1.0 / 20.0, ..Default::default() })
        .unwrap()
}

fn reduced_config(horizon: usize, record_every: usize) -> RunConfig {
    let policy = StepSizePolicy::constant(0.5, 2.0, DeltaRule::MetropolisTwo).unwrap();
    let mut cfg = RunConfig::new(WeightKind::Metropolis, policy, horizon);
    cfg.record_every = record_every;
    cfg
}

fn dual_feasibility(fig1a: &[(String, RunTrace)], gossip: &[(String, RunTrace)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (scen, traces) in [("fig1a", fig1a), ("gossip-demo", gossip)] {
        for (name, t) in traces {
            worst = worst.max(t.invariants.max_feasibility_ratio);
            parts.push(format!("{scen}/{name}={:.1e}", t.invariants.max_feasibility_ratio));
        }
    }
    outcome(worst <= 1e-8, format!("max |sum w|/(1+max|w_i|) = {worst:.2e} <= 1e-8 [{}]", parts.join(" ")))
}

fn monotone_descent(fig1a: &Prepared, fig1a_traces: &[(String, RunTrace)]) -> Outcome {
    let metropolis = &fig1a_traces.iter().find(|(n, _)| n == "fdgm_metropolis").unwrap().1;
    let inc_fixed = metropolis.invariants.dual_values[..=2000]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);

    let upper = 0.99;
    let policy = StepSizePolicy::uniform_random(0.1 * upper, upper, 2000, 7, 2.0, DeltaRule::MetropolisTwo).unwrap();
    let mut cfg = RunConfig::new(WeightKind::Metropolis, policy, 2000);
    cfg.record_every = 100;
    let t = run(&fig1a.instance, &fig1a.seq, &cfg, None).unwrap();
    let inc_random = t.invariants.max_dual_increase;
    let worst = inc_fixed.max(inc_random);
    outcome(
        worst <= 1e-8,
        format!(
            "max D(w^k+1)-D(w^k): alpha=1/2 {inc_fixed:.2e}, alpha~U[0.099,0.99] {inc_random:.2e} (descent-inequality excess {:.2e}) <= 1e-8",
            t.invariants.max_descent_excess
        ),
    )
}

fn rate_certificates() -> (Outcome, Outcome, f64, f64) {
    let inst = reduced_instance();
    let seq = generate_sequence(SequenceKind::WindowedTree, 20, 5, 2000, 21).unwrap();
    let cert = certify_run(&inst, &seq, &reduced_config(2000, 1), 10).unwrap();
    let r = &cert.report;
    let fam = |n: &str| r.family(n).unwrap().clone();
    let dual = fam("dual_rate");
    let t2 = outcome(
        dual.passed() && dual.checks == 2001,
        format!(
            "dual gap <= rhs(1+1e-6)+1e-8 at {} records, worst slack {:+.3e} at k={} (eta={:.3e}, rho={}, lambda={:.3e})",
            dual.checks, dual.worst_slack, dual.worst_k, cert.constants.eta, cert.constants.rho, cert.constants.lambda_lower
        ),
    );
    let fams: Vec<_> = ["projection_le_error", "primal_error", "objective_upper", "objective_lower"]
        .iter()
        .map(|n| fam(n))
        .collect();
    let t3 = outcome(
        fams.iter().all(|f| f.passed()),
        fams.iter()
            .map(|f| format!("{} {:+.2e}", f.name, f.worst_slack))
            .collect::<Vec<_>>()
            .join(", "),
    );
    let w_norm = cert.reference.w_star_estimate.as_ref().unwrap().norm();
    (t2, t3, w_norm, cert.constants.dual_norm_bound)
}

fn convergence() -> (Outcome, f64, f64) {
    let inst = reduced_instance();
    let horizon = 50_000;
    let seq = generate_sequence(SequenceKind::WindowedTree, 20, 5, horizon, 21).unwrap();
    let reference = solve_centralized(&inst, CENTRALIZED_TOL).unwrap();
    let t = run(&inst, &seq, &reduced_config(horizon, 100), Some(&reference.optimum())).unwrap();
    let e0 = t.records[0].primal_error;
    let reached = t.records.iter().find(|r| r.primal_error <= 1e-3 * e0).map(|r| r.k);
    let last = t.records.last().unwrap();
    let ok = reached.is_some() && last.edge_disagreement <= 1e-4;
    let o = outcome(
        ok,
        format!(
            "error {e0:.3e} -> 1e-3 x initial at k={}, final edge disagreement {:.2e} <= 1e-4",
            reached.map_or("never".into(), |k| k.to_string()),
            last.edge_disagreement
        ),
    );
    (o, t.final_state.w.norm(), dual_norm_bound(&inst, &reference))
}

fn random_local(rng: &mut ChaCha8Rng, d: usize) -> LocalProblem {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let eig = DVector::from_fn(d, |_, _| rng.random_range(1.0..3.0));
    let quad = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    let b = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    let gamma = if rng.random_bool(0.5) { rng.random_range(0.0..1.0) } else { 0.0 };
    let lo = (0..d).map(|_| -rng.random_range(0.3..1.5)).collect();
    let hi = (0..d).map(|_| rng.random_range(0.3..1.5)).collect();
    LocalProblem::new(quad, b, gamma, lo, hi).unwrap()
}

/// Axis grid with spacing `h` from `lo`, plus the upper end and the origin.
fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..).map(|k| lo + k as f64 * h).take_while(|x| *x <= hi).collect();
    v.push(hi);
    v.push(0.0);
    v
}

fn q_value(lp: &LocalProblem, w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let a = lp.quad();
    let mut v = 0.0;
    for i in 0..d {
        v += (w[i] - lp.linear()[i]) * x[i] - lp.l1_weight() * x[i].abs();
        for j in 0..d {
            v -= x[i] * a[i * d + j] * x[j];
        }
    }
    v
}

fn grid_argmax(lp: &LocalProblem, w: &[f64]) -> Vec<f64> {
    let h = 1e-3;
    let axes: Vec<Vec<f64>> = (0..lp.dim()).map(|c| axis(lp.box_lower()[c], lp.box_upper()[c], h)).collect();
    let mut best = (f64::NEG_INFINITY, vec![]);
    if lp.dim() == 1 {
        for &x in &axes[0] {
            let v = q_value(lp, w, &[x]);
            if v > best.0 {
                best = (v, vec![x]);
            }
        }
    } else {
        for &x in &axes[0] {
            for &y in &axes[1] {
                let v = q_value(lp, w, &[x, y]);
                if v > best.0 {
                    best = (v, vec![x, y]);
                }
            }
        }
    }
    best.1
}

fn oracle_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let problems: Vec<LocalProblem> = (0..100).map(|i| random_local(&mut rng, 1 + i % 2)).collect();

    let mut grid_err = 0.0f64;
    for lp in &problems {
        let w: Vec<f64> = (0..lp.dim()).map(|_| rng.random_range(-6.0..6.0)).collect();
        let x = lp.conjugate_argmax(&w, 1e-10).unwrap();
        let g = grid_argmax(lp, &w);
        grid_err = grid_err.max(x.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }

    let mut fd_err = 0.0f64;
    for s in 0..50 {
        let lp = &problems[s * 2 % 100];
        let w: Vec<f64> = (0..lp.dim()).map(|_| rng.random_range(-6.0..6.0)).collect();
        let x = lp.conjugate_argmax(&w, 1e-12).unwrap();
        for c in 0..lp.dim() {
            let (mut up, mut dn) = (w.clone(), w.clone());
            up[c] += 1e-5;
            dn[c] -= 1e-5;
            let fd = (lp.conjugate_value(&up, 1e-12).unwrap() - lp.conjugate_value(&dn, 1e-12).unwrap()) / 2e-5;
            fd_err = fd_err.max((fd - x[c]).abs());
        }
    }

    let tol = 1e-10;
    let mut lip_violations = 0;
    for s in 0..1000 {
        let lp = &problems[s % 100];
        let u: Vec<f64> = (0..lp.dim()).map(|_| rng.random_range(-8.0..8.0)).collect();
        let v: Vec<f64> = (0..lp.dim()).map(|_| rng.random_range(-8.0..8.0)).collect();
        let (xu, xv) = (lp.conjugate_argmax(&u, tol).unwrap(), lp.conjugate_argmax(&v, tol).unwrap());
        let dx = xu.iter().zip(&xv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dw = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dx > dw / lp.theta() * (1.0 + 1e-6) + 2.0 * tol {
            lip_violations += 1;
        }
    }
    outcome(
        grid_err <= 2e-3 && fd_err <= 1e-4 && lip_violations == 0,
        format!(
            "grid inf-err {grid_err:.2e} <= 2e-3 (100 problems), FD err {fd_err:.2e} <= 1e-4 (50 samples), Lipschitz violations {lip_violations}/1000"
        ),
    )
}

fn weight_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut failures = Vec::new();
    let mut worst_metro = f64::INFINITY;
    for s in 0..100 {
        let n = rng.random_range(2..=30);
        let p = rng.random_range(0.05..0.6);
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, n - 1));
        }
        let g = GraphSnapshot::new(n, edges).unwrap();
        let lip: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let lap = laplacian_weights(&g);
        let met = metropolis_weights(&g, &lip).unwrap();
        if !lap.check(&g).passes() || !lap.check(&g).pattern_matches || !lap.check(&g).symmetric {
            failures.push(format!("laplacian#{s}"));
        }
        let mc = met.check(&g);
        if !mc.passes() || !mc.pattern_matches || !mc.symmetric {
            failures.push(format!("metropolis#{s}"));
        }
        let scale: Vec<f64> = lip.iter().map(|l| 2.0 / l).collect();
        let m = met.min_eig_below(&scale);
        worst_metro = worst_metro.min(m);
        if m < -1e-10 {
            failures.push(format!("delta2#{s}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 snapshots, failures {:?}, min eig(2 Lambda_L^-1 - H) = {worst_metro:.2e} >= -1e-10",
            failures
        ),
    )
}

fn fig1_ordering() -> Outcome {
    let mut preserved = 0;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let p = prepared("fig1a", seed, Some(1000));
        let out = scenario::execute(&p, false).unwrap();
        let err = |name: &str| {
            out.algorithms.iter().find(|a| a.name == name).unwrap().records.last().unwrap().primal_error
        };
        let (m, l, s) = (err("fdgm_metropolis"), err("fdgm_laplacian"), err("subgrad"));
        if m < l && l < s {
            preserved += 1;
        }
        parts.push(format!("seed {seed}: {m:.1e} < {l:.1e} < {s:.1e}"));
    }
    outcome(preserved >= 2, format!("{preserved}/3 seeds ordered [{}]", parts.join("; ")))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let timed = |name: &'static str, f: &mut dyn FnMut() -> Outcome, results: &mut Vec<(&str, Outcome, f64)>| {
        let t0 = Instant::now();
        let o = f();
        let secs = t0.elapsed().as_secs_f64();
        println!("{} {name}: {} ({secs:.1}s)", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o, secs));
    };

    let t0 = Instant::now();
    let fig1a = prepared("fig1a", 0, None);
    let fig1a_traces = fdgm_traces(&fig1a);
    let gossip = prepared("gossip-demo", 0, None);
    let gossip_traces = fdgm_traces(&gossip);
    println!("(fig1a and gossip-demo runs: {:.1}s)", t0.elapsed().as_secs_f64());

    timed("dual_feasibility", &mut || dual_feasibility(&fig1a_traces, &gossip_traces), &mut results);
    timed("monotone_descent", &mut || monotone_descent(&fig1a, &fig1a_traces), &mut results);

    let t0 = Instant::now();
    let (t2, t3, reduced_w, reduced_bound) = rate_certificates();
    let secs = t0.elapsed().as_secs_f64();
    for (name, o) in [("dual_rate_certification", t2), ("primal_rate_certification", t3)] {
        println!("{} {name}: {} ({secs:.1}s)", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o, secs));
    }

    let mut long_runs: Vec<(String, f64, f64)> = vec![("reduced/long-run estimate".into(), reduced_w, reduced_bound)];
    let t0 = Instant::now();
    let (conv, conv_w, conv_bound) = convergence();
    let secs = t0.elapsed().as_secs_f64();
    println!("{} reduced_scale_convergence: {} ({secs:.1}s)", if conv.passed { "PASS" } else { "FAIL" }, conv.detail);
    results.push(("reduced_scale_convergence", conv, secs));
    long_runs.push(("reduced/k=50000".into(), conv_w, conv_bound));

    timed("oracle_correctness", &mut oracle_correctness, &mut results);
    timed("weight_matrix_suite", &mut weight_suite, &mut results);
    timed("fig1_ordering", &mut fig1_ordering, &mut results);

    timed(
        "dual_norm_bound",
        &mut || {
            let mut rows = long_runs.clone();
            for (scen, p, traces) in [("fig1a", &fig1a, &fig1a_traces), ("gossip-demo", &gossip, &gossip_traces)] {
                let reference = solve_centralized(&p.instance, CENTRALIZED_TOL).unwrap();
                let bound = dual_norm_bound(&p.instance, &reference);
                for (name, t) in traces.iter() {
                    rows.push((format!("{scen}/{name}"), t.final_state.w.norm(), bound));
                }
            }
            let ok = rows.iter().all(|(_, w, b)| w <= b);
            let detail = rows
                .iter()
                .map(|(n, w, b)| format!("{n} {w:.2e}<={b:.2e}"))
                .collect::<Vec<_>>()
                .join(", ");
            outcome(ok, detail)
        },
        &mut results,
    );

    let failed: Vec<_> = results.iter().filter(|r| !r.1.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
