//! Reference solutions and numerical certificates for the dual and primal
//! rate bounds.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::block::{norm, NodeBlock};
use crate::error::{Error, Result};
use crate::graph::{laplacian_weights, algebraic_connectivity, max_degree, GraphSequence, WeightKind};
use crate::oracle::{Composite, ProblemInstance};
use crate::solver::{
    init_state_with, run, step_with, Init, Optimum, RunConfig, RunFailure, RunTrace, StepSizePolicy,
};

pub const CENTRALIZED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    /// `min Σ_i f_i(x) − cᵀx` over the common box.
    pub f_star: f64,
    /// `−f_star`.
    pub d_star: f64,
    pub target: Vec<f64>,
    /// Gradient-map norm at `x_star`.
    pub residual: f64,
    /// Converged dual iterate from a long run, if computed.
    pub w_star_estimate: Option<NodeBlock>,
}

impl ReferenceSolution {
    pub fn optimum(&self) -> Optimum {
        Optimum { x_star: self.x_star.clone(), f_star: self.f_star }
    }
}

/// Minimizes `Σ_i f_i(x)` over `⋂_i X_i`.
pub fn solve_centralized(instance: &ProblemInstance, tol: f64) -> Result<ReferenceSolution> {
    solve_centralized_with_target(instance, &vec![0.0; instance.dim()], tol)
}

/// Minimizes `Σ_i f_i(x) − cᵀx` over `⋂_i X_i`, the primal side of the
/// resource-allocation variant with `Σ_i w_i = c`.
pub fn solve_centralized_with_target(
    instance: &ProblemInstance,
    target: &[f64],
    tol: f64,
) -> Result<ReferenceSolution> {
    let d = instance.dim();
    if target.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: target.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let (lo, hi) = instance.common_box();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Err(Error::InfeasibleInstance);
    }
    let mut quad = DMatrix::zeros(d, d);
    let mut linear: Vec<f64> = target.iter().map(|c| -c).collect();
    let mut l1 = 0.0;
    for lp in instance.locals() {
        quad += lp.quad_matrix();
        for (a, b) in linear.iter_mut().zip(lp.linear()) {
            *a += b;
        }
        l1 += lp.l1_weight();
    }
    let eig = SymmetricEigen::new(quad.clone());
    let row_major: Vec<f64> = quad.transpose().iter().copied().collect();
    let problem = Composite {
        quad: &row_major,
        linear: &linear,
        l1,
        lower: &lo,
        upper: &hi,
        lambda_min: eig.eigenvalues.min(),
        lambda_max: eig.eigenvalues.max(),
    };
    let x_star = problem.minimize(&vec![0.0; d], tol)?;
    let residual = problem.gradient_map_norm(&x_star);
    let f: f64 = instance.locals().iter().map(|lp| lp.objective_value(&x_star)).sum();
    let f_star = f - target.iter().zip(&x_star).map(|(c, x)| c * x).sum::<f64>();
    Ok(ReferenceSolution {
        x_star,
        f_star,
        d_star: -f_star,
        target: target.to_vec(),
        residual,
        w_star_estimate: None,
    })
}

/// Approximates a dual optimum by running Metropolis weights with `α = 1/2`
/// for `steps` iterations, cycling through `seq`. The dual optimal set does
/// not depend on the weights, so the fastest admissible configuration is used
/// whatever the certified run uses.
pub fn estimate_dual_optimum(
    instance: &ProblemInstance,
    seq: &GraphSequence,
    init: &Init,
    steps: usize,
    oracle_tol: f64,
) -> Result<NodeBlock> {
    if seq.is_empty() {
        return Err(Error::InvalidConfig("empty graph sequence".into()));
    }
    let exec = crate::Execution::default();
    let lip = instance.lipschitz_vec();
    let mut state = init_state_with(instance, init, oracle_tol, exec)?;
    for k in 0..steps {
        let g = seq.snapshot(k % seq.len());
        let h = WeightKind::Metropolis.build(g, &lip)?;
        state = step_with(instance, &state, g, &h, 0.5, oracle_tol, exec)?;
    }
    Ok(state.w)
}

/// Radius `r_c` of the largest origin-centred ball inside every box; 1 when
/// all boxes are unbounded.
pub fn clearance(instance: &ProblemInstance) -> f64 {
    let r = instance
        .locals()
        .iter()
        .flat_map(|lp| lp.box_lower().iter().map(|p| -p).chain(lp.box_upper().iter().copied()))
        .fold(f64::INFINITY, f64::min);
    if r.is_finite() {
        r
    } else {
        1.0
    }
}

/// `Σ_i max_{‖x‖ ≤ r} f_i(x)` bounded above by `λ_max r² + ‖b_i‖ r + γ_i √d r`.
fn ball_max_sum(instance: &ProblemInstance, r: f64) -> f64 {
    let sqrt_d = (instance.dim() as f64).sqrt();
    instance
        .locals()
        .iter()
        .map(|lp| lp.lambda_max() * r * r + norm(lp.linear()) * r + lp.l1_weight() * sqrt_d * r)
        .sum()
}

/// Upper bound on `‖w*‖`: `(Σ_i max_{B(0,r_c)} f_i − F*) / r_c`.
pub fn dual_norm_bound(instance: &ProblemInstance, reference: &ReferenceSolution) -> f64 {
    let r = clearance(instance);
    (ball_max_sum(instance, r) - reference.f_star) / r
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConstants {
    pub rho: f64,
    pub eta: f64,
    /// `λ̲`: smallest algebraic connectivity over the window spanning trees.
    pub lambda_lower: f64,
    /// `ϖ̄`: largest degree over the window spanning trees.
    pub varpi_bar: usize,
    pub window: usize,
    pub delta: f64,
    pub alpha_upper: f64,
    pub h_lower: f64,
    pub lipschitz: f64,
    /// `M̃_m` for `m = 0..=⌊horizon/B⌋`.
    pub m_tilde: Vec<f64>,
    /// Level-set bound on `‖w^k − w*‖`.
    pub m0_estimate: f64,
    pub r_c: f64,
    pub dual_norm_bound: f64,
    /// `D(w^0) − D*`.
    pub initial_gap: f64,
}

impl TheoryConstants {
    /// Right-hand side of the dual rate bound at step `k`.
    pub fn dual_rate_rhs(&self, k: usize) -> f64 {
        let m = (k / self.window).min(self.m_tilde.len() - 1);
        let em2 = self.eta * self.m_tilde[m].powi(2);
        let delta0 = self.initial_gap;
        let denom = em2 + self.rho * self.lambda_lower * delta0 * (k / self.window) as f64;
        if denom > 0.0 {
            em2 * delta0 / denom
        } else {
            delta0
        }
    }
}

/// Evaluates `ρ, η, λ̲, ϖ̄, M̃` and the dual-norm bounds for a finished run.
///
/// `w*` in `M̃` is the reference's long-run estimate, which stands in for the
/// nearest optimum.
pub fn theory_constants(
    policy: &StepSizePolicy,
    weights: WeightKind,
    seq: &GraphSequence,
    instance: &ProblemInstance,
    trace: &RunTrace,
    reference: &ReferenceSolution,
) -> Result<TheoryConstants> {
    let unavailable = |m: &str| Error::CertificationUnavailable(m.to_string());
    if !policy.is_enforced() {
        return Err(unavailable("step-size policy is not enforced"));
    }
    let w_est = reference
        .w_star_estimate
        .as_ref()
        .ok_or_else(|| unavailable("reference has no dual optimum estimate"))?;
    if trace.window_duals.is_empty() {
        return Err(unavailable("run did not keep window-start duals"));
    }
    let horizon = trace.invariants.dual_values.len() - 1;
    let window = seq.window();
    let windows = horizon / window;

    let lip = instance.lipschitz_vec();
    let mut h_lower = f64::INFINITY;
    for g in &seq.snapshots()[..horizon] {
        h_lower = h_lower.min(weights.build(g, &lip)?.h_lower());
    }
    if horizon == 0 {
        h_lower = match weights {
            WeightKind::Laplacian => 1.0,
            WeightKind::Metropolis => weights.build(seq.snapshot(0), &lip)?.h_lower(),
        };
    }

    let mut lambda_lower = f64::INFINITY;
    let mut varpi_bar = 0;
    for t in 0..windows.max(1) {
        let tree = seq
            .window_spanning_tree(t)
            .ok_or_else(|| unavailable(&format!("window {t} is not connected")))?;
        lambda_lower = lambda_lower.min(algebraic_connectivity(&laplacian_weights(&tree)));
        varpi_bar = varpi_bar.max(max_degree(&tree));
    }

    let big_l = instance.lipschitz();
    let (delta, alpha_upper) = (policy.delta(), policy.upper());
    let eta = 3.0 * window as f64 * varpi_bar as f64 * alpha_upper.powi(2) * delta * big_l + 3.0 / h_lower;

    let d0 = trace.invariants.dual_values[0];
    let dist0 = trace.window_duals[0].distance(w_est);
    let mut m_tilde = vec![if dist0 > 0.0 { dist0 } else { 1.0 }];
    let mut running = 0.0f64;
    for m in 1..=windows {
        let w = trace
            .window_duals
            .get(m - 1)
            .ok_or_else(|| unavailable("missing window-start dual"))?;
        running = running.max(w.distance(w_est));
        m_tilde.push(running);
    }

    let r_c = clearance(instance);
    let bound = dual_norm_bound(instance, reference);
    let m0_estimate = (d0 + ball_max_sum(instance, r_c)) / r_c + bound;

    Ok(TheoryConstants {
        rho: policy.rho(),
        eta,
        lambda_lower,
        varpi_bar,
        window,
        delta,
        alpha_upper,
        h_lower,
        lipschitz: big_l,
        m_tilde,
        m0_estimate,
        r_c,
        dual_norm_bound: bound,
        initial_gap: d0 - reference.d_star,
    })
}

/// One inequality family checked over all recorded steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyResult {
    pub name: &'static str,
    pub checks: usize,
    /// Smallest `rhs − lhs` seen; negative means a violation.
    pub worst_slack: f64,
    pub worst_k: usize,
}

impl FamilyResult {
    fn new(name: &'static str) -> Self {
        Self { name, checks: 0, worst_slack: f64::INFINITY, worst_k: 0 }
    }

    fn check(&mut self, k: usize, lhs: f64, rhs: f64) {
        self.checks += 1;
        let slack = rhs - lhs;
        if !(slack >= self.worst_slack) {
            self.worst_slack = slack;
            self.worst_k = k;
        }
    }

    pub fn passed(&self) -> bool {
        self.worst_slack >= 0.0
    }
}

impl fmt::Display for FamilyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<20} checks={:<6} worst_slack={:+.6e} at k={:<6} {}",
            self.name,
            self.checks,
            self.worst_slack,
            self.worst_k,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub families: Vec<FamilyResult>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(FamilyResult::passed)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyResult> {
        self.families.iter().find(|f| f.name == name)
    }
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fam in &self.families {
            writeln!(f, "{fam}")?;
        }
        Ok(())
    }
}

/// Rounding allowance for `‖P_{S⊥}x‖ ≤ ‖x − 1⊗x*‖`, which holds exactly in
/// real arithmetic.
const PROJECTION_ROUNDING: f64 = 1e-12;

/// Checks the dual rate bound, the primal error bounds and the objective
/// sandwich at every recorded step.
pub fn check_rate_bounds(
    trace: &RunTrace,
    constants: &TheoryConstants,
    reference: &ReferenceSolution,
) -> CertificationReport {
    let mut dual_rate = FamilyResult::new("dual_rate");
    let mut projection = FamilyResult::new("projection_le_error");
    let mut primal = FamilyResult::new("primal_error");
    let mut upper = FamilyResult::new("objective_upper");
    let mut lower = FamilyResult::new("objective_lower");
    let mut weak = FamilyResult::new("weak_duality");
    let mut m_tilde = FamilyResult::new("m_tilde_bounded");
    let mut norm_bound = FamilyResult::new("dual_norm_bound");

    let n = trace.final_state.w.n() as f64;
    let shift: Vec<f64> = reference.target.iter().map(|c| c / n).collect();
    let w_star_norm = reference
        .w_star_estimate
        .as_ref()
        .map_or(constants.dual_norm_bound, |w| w.distance_to_row(&shift));

    for r in &trace.records {
        let gap = r.dual_value.map_or(f64::NAN, |d| d - reference.d_star);
        dual_rate.check(r.k, gap, constants.dual_rate_rhs(r.k) * (1.0 + 1e-6) + 1e-8);
        projection.check(r.k, r.feasibility_gap, r.stacked_error + PROJECTION_ROUNDING);
        primal.check(r.k, r.stacked_error, (2.0 * constants.lipschitz * gap.max(0.0)).sqrt() + 1e-6);
        let f_gap = r.objective - reference.f_star;
        upper.check(r.k, f_gap, r.dual_norm * r.feasibility_gap + 1e-6);
        lower.check(r.k, -w_star_norm * r.feasibility_gap - 1e-6, f_gap);
    }
    for (k, d) in trace.invariants.dual_values.iter().enumerate() {
        weak.check(k, reference.d_star - 1e-6, *d);
    }
    for (m, v) in constants.m_tilde.iter().enumerate() {
        m_tilde.check(m * constants.window, *v, constants.m0_estimate);
    }
    if let Some(w) = &reference.w_star_estimate {
        norm_bound.check(trace.final_state.k, w.norm(), constants.dual_norm_bound);
    }
    norm_bound.check(trace.final_state.k, trace.final_state.w.norm(), constants.dual_norm_bound + constants.m0_estimate);

    CertificationReport {
        families: vec![dual_rate, projection, primal, upper, lower, weak, m_tilde, norm_bound],
    }
}

/// Everything produced by a certified run.
#[derive(Debug, Clone)]
pub struct Certification {
    pub trace: RunTrace,
    pub reference: ReferenceSolution,
    pub constants: TheoryConstants,
    pub report: CertificationReport,
}

/// Runs the dual method with `config`, then certifies it. The dual optimum
/// estimate comes from `estimate_factor · horizon` extra steps.
pub fn certify_run(
    instance: &ProblemInstance,
    seq: &GraphSequence,
    config: &RunConfig,
    estimate_factor: usize,
) -> Result<Certification, RunFailure> {
    let steps = estimate_factor * config.horizon.max(1);
    let w_est = estimate_dual_optimum(instance, seq, &config.init, steps, config.oracle_tol)?;
    certify_run_with_estimate(instance, seq, config, w_est)
}

/// As [`certify_run`] with a precomputed dual optimum estimate.
pub fn certify_run_with_estimate(
    instance: &ProblemInstance,
    seq: &GraphSequence,
    config: &RunConfig,
    w_est: NodeBlock,
) -> Result<Certification, RunFailure> {
    if !config.policy.is_enforced() {
        return Err(Error::CertificationUnavailable("step-size policy is not enforced".into()).into());
    }
    let target = config.init.target(instance.dim());
    let mut reference = solve_centralized_with_target(instance, &target, CENTRALIZED_TOL)?;
    let mut cfg = config.clone();
    cfg.keep_window_duals = true;
    let trace = run(instance, seq, &cfg, Some(&reference.optimum()))?;
    reference.w_star_estimate = Some(w_est);
    let constants =
        theory_constants(&config.policy, config.weights, seq, instance, &trace, &reference)?;
    let report = check_rate_bounds(&trace, &constants, &reference);
    Ok(Certification { trace, reference, constants, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sequence, SequenceKind};
    use crate::oracle::LocalProblem;
    use crate::solver::DeltaRule;

    fn scalar(a: f64, b: f64, g: f64, lo: f64, hi: f64) -> LocalProblem {
        LocalProblem::new(DMatrix::from_element(1, 1, a), vec![b], g, vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn two_node_reference() {
        let inst = ProblemInstance::new(vec![scalar(1.0, -2.0, 0.0, -10.0, 10.0), scalar(1.0, 0.0, 0.0, -10.0, 10.0)])
            .unwrap();
        let r = solve_centralized(&inst, 1e-12).unwrap();
        assert!((r.x_star[0] - 0.5).abs() < 1e-12);
        assert!((r.f_star + 0.5).abs() < 1e-12);
        assert_eq!(r.d_star, -r.f_star);
    }

    #[test]
    fn l1_reference_at_origin() {
        let inst = ProblemInstance::new(vec![scalar(0.5, 0.0, 0.5, -1.0, 1.0); 2]).unwrap();
        let r = solve_centralized(&inst, 1e-12).unwrap();
        assert_eq!(r.x_star, vec![0.0]);
    }

    #[test]
    fn clearance_and_bound_examples() {
        let inst = ProblemInstance::new(vec![scalar(1.0, 0.0, 0.0, -1.0, 2.0); 2]).unwrap();
        assert_eq!(clearance(&inst), 1.0);
        let r = solve_centralized(&inst, 1e-12).unwrap();
        assert_eq!(r.f_star, 0.0);
        assert!((dual_norm_bound(&inst, &r) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_constants() {
        let inst = ProblemInstance::new(vec![scalar(1.0, -2.0, 0.0, -10.0, 10.0), scalar(1.0, 0.0, 0.0, -10.0, 10.0)])
            .unwrap();
        let seq = generate_sequence(SequenceKind::FullStatic, 2, 1, 50, 0).unwrap();
        let policy = StepSizePolicy::constant(0.5, 2.0, DeltaRule::MetropolisTwo).unwrap();
        let cfg = RunConfig::new(WeightKind::Metropolis, policy, 50);
        let cert = certify_run(&inst, &seq, &cfg, 10).unwrap();
        let c = &cert.constants;
        assert_eq!(c.rho, 0.25);
        assert_eq!(c.lambda_lower, 2.0);
        assert_eq!(c.varpi_bar, 1);
        assert!(c.eta > 0.0);
        assert!((c.dual_rate_rhs(0) - c.initial_gap).abs() < 1e-15);
        assert!(cert.report.passed(), "{}", cert.report);
        for w in c.m_tilde.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}
