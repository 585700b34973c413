//! Distributed Fenchel dual gradient method: weighted dual gradient steps over a time-varying graph.
//!
//! Node `i` holds a dual `w_i` and its primal `x_i = x̃_i(w_i)`. At step `k`
//! every node with neighbors updates
//! `w_i ← w_i − α^k Σ_j h_ij (x_i − x_j)` and re-solves its oracle.

mod metrics;
mod policy;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::block::NodeBlock;
use crate::error::{Error, Result};
use crate::exec::{try_map_nodes, Execution};
use crate::graph::{GraphSequence, GraphSnapshot, WeightKind, WeightMatrix};
use crate::oracle::{ProblemInstance, DEFAULT_ORACLE_TOL};

pub use metrics::{
    consensus_projection, dual_value, edge_disagreement, feasibility_gap, objective, to_csv,
    write_csv, MetricsRecord, Optimum, CSV_HEADER,
};
pub(crate) use metrics::primal_metrics;
pub use policy::{
    compute_delta, laplacian_spectrum_bounded, max_degree_over, validate_policy, DeltaRule,
    PolicyCheck, Schedule, StepSizePolicy,
};

/// Initial dual iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    /// `w_i = 0`.
    Zeros,
    /// Gaussian `w_i` scaled by `scale`, shifted so that `Σ_i w_i = target`.
    RandomSum { seed: u64, scale: f64, target: Vec<f64> },
    /// `w_i = target / n`.
    Uniform { target: Vec<f64> },
}

impl Init {
    pub fn target(&self, d: usize) -> Vec<f64> {
        match self {
            Init::Zeros => vec![0.0; d],
            Init::RandomSum { target, .. } | Init::Uniform { target } => target.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub w: NodeBlock,
    pub x: NodeBlock,
    /// Resource target `c` with `Σ_i w_i = c`.
    pub target: Vec<f64>,
}

impl SolverState {
    /// `‖Σ_i w_i − c‖`.
    pub fn sum_residual(&self) -> f64 {
        let s = self.w.sum_rows();
        crate::block::dist(&s, &self.target)
    }

    /// `‖Σ_i w_i − c‖ / (1 + max_i ‖w_i‖)`.
    pub fn feasibility_ratio(&self) -> f64 {
        self.sum_residual() / (1.0 + self.w.max_row_norm())
    }

    /// `‖w − 1⊗c/n‖`.
    pub fn centered_dual_norm(&self) -> f64 {
        let n = self.w.n() as f64;
        let shift: Vec<f64> = self.target.iter().map(|c| c / n).collect();
        self.w.distance_to_row(&shift)
    }
}

pub fn init_state(instance: &ProblemInstance, init: &Init, tol: f64) -> Result<SolverState> {
    init_state_with(instance, init, tol, Execution::default())
}

pub fn init_state_with(
    instance: &ProblemInstance,
    init: &Init,
    tol: f64,
    exec: Execution,
) -> Result<SolverState> {
    let (n, d) = (instance.n(), instance.dim());
    let target = init.target(d);
    if target.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: target.len() });
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("resource target must be finite".into()));
    }
    let share: Vec<f64> = target.iter().map(|c| c / n as f64).collect();
    let w = match init {
        Init::Zeros => NodeBlock::zeros(n, d),
        Init::Uniform { .. } => NodeBlock::repeat(n, &share),
        Init::RandomSum { seed, scale, .. } => {
            if !(scale.is_finite() && *scale >= 0.0) {
                return Err(Error::InvalidConfig(format!("init scale must be nonnegative, got {scale}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let raw: Vec<f64> = (0..n * d)
                .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let mut w = NodeBlock::from_vec(n, d, raw);
            let mean = w.mean_row();
            for i in 0..n {
                for ((v, m), s) in w.row_mut(i).iter_mut().zip(&mean).zip(&share) {
                    *v = *v - m + s;
                }
            }
            w
        }
    };
    let rows = try_map_nodes(exec, n, |i| instance.local(i).conjugate_argmax(w.row(i), tol))?;
    let x = NodeBlock::from_vec(n, d, rows.concat());
    Ok(SolverState { k: 0, w, x, target })
}

/// One dual gradient step with weights `h` built from `g`.
pub fn step(
    instance: &ProblemInstance,
    state: &SolverState,
    g: &GraphSnapshot,
    h: &WeightMatrix,
    alpha: f64,
    tol: f64,
) -> Result<SolverState> {
    step_with(instance, state, g, h, alpha, tol, Execution::default())
}

pub fn step_with(
    instance: &ProblemInstance,
    state: &SolverState,
    g: &GraphSnapshot,
    h: &WeightMatrix,
    alpha: f64,
    tol: f64,
    exec: Execution,
) -> Result<SolverState> {
    let (n, d) = (instance.n(), instance.dim());
    for found in [state.w.n(), state.x.n(), g.node_count(), h.node_count()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    if state.w.d() != d || state.x.d() != d {
        return Err(Error::DimensionMismatch { expected: d, found: state.w.d().max(state.x.d()) });
    }

    // Edge-wise flows keep Σ_i w_i unchanged up to one rounding per edge.
    let mut w = state.w.clone();
    let mut flow = vec![0.0; d];
    for &(i, j, hij) in h.edge_weights() {
        let (xi, xj) = (state.x.row(i), state.x.row(j));
        for t in 0..d {
            flow[t] = alpha * hij * (xi[t] - xj[t]);
        }
        for (v, f) in w.row_mut(i).iter_mut().zip(&flow) {
            *v -= f;
        }
        for (v, f) in w.row_mut(j).iter_mut().zip(&flow) {
            *v += f;
        }
    }

    let rows = try_map_nodes(exec, n, |i| {
        if g.degree(i) == 0 {
            Ok(state.x.row(i).to_vec())
        } else {
            instance.local(i).conjugate_argmax_from(w.row(i), tol, state.x.row(i))
        }
    })?;
    Ok(SolverState {
        k: state.k + 1,
        w,
        x: NodeBlock::from_vec(n, d, rows.concat()),
        target: state.target.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub weights: WeightKind,
    pub policy: StepSizePolicy,
    pub init: Init,
    pub horizon: usize,
    pub record_every: usize,
    pub oracle_tol: f64,
    /// Absolute slack on the descent check.
    pub descent_slack: f64,
    pub execution: Execution,
    /// Keep `w^{tB}` for every window start (needed by the rate certificate).
    pub keep_window_duals: bool,
}

impl RunConfig {
    pub fn new(weights: WeightKind, policy: StepSizePolicy, horizon: usize) -> Self {
        Self {
            weights,
            policy,
            init: Init::Zeros,
            horizon,
            record_every: 1,
            oracle_tol: DEFAULT_ORACLE_TOL,
            descent_slack: 1e-8,
            execution: Execution::default(),
            keep_window_duals: false,
        }
    }
}

/// Per-step invariant monitoring.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InvariantLog {
    /// `max_k ‖Σ w_i^k − c‖ / (1 + max_i ‖w_i^k‖)`.
    pub max_feasibility_ratio: f64,
    /// `max_k D(w^{k+1}) − D(w^k)`.
    pub max_dual_increase: f64,
    /// `max_k D(w^{k+1}) − D(w^k) + ρ x^kᵀ(H⊗I)x^k`; nonpositive for exact oracles.
    pub max_descent_excess: f64,
    /// Steps where the excess exceeded the configured slack.
    pub descent_violations: usize,
    /// `D(w^k)` for `k = 0..=horizon`.
    pub dual_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<MetricsRecord>,
    pub invariants: InvariantLog,
    /// `w^{tB}` for `t = 0, 1, …` when requested.
    pub window_duals: Vec<NodeBlock>,
    pub final_state: SolverState,
    pub rho: f64,
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        to_csv(&self.records)
    }
}

/// A run aborted midway; `records` holds everything recorded before the error.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub records: Vec<MetricsRecord>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self { error, records: Vec::new() }
    }
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} records)", self.error, self.records.len())
    }
}

impl std::error::Error for RunFailure {}

pub(crate) fn check_run_shape(
    instance: &ProblemInstance,
    seq: &GraphSequence,
    horizon: usize,
    record_every: usize,
) -> Result<()> {
    if seq.node_count() != instance.n() {
        return Err(Error::DimensionMismatch { expected: instance.n(), found: seq.node_count() });
    }
    if horizon > seq.len() {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} exceeds the {} snapshots in the graph sequence",
            seq.len()
        )));
    }
    if record_every == 0 {
        return Err(Error::InvalidConfig("record_every must be at least 1".into()));
    }
    Ok(())
}

/// Snapshot whose edges define the disagreement at record `k`.
pub(crate) fn snapshot_for(seq: &GraphSequence, k: usize) -> &GraphSnapshot {
    seq.snapshot(k.min(seq.len() - 1))
}

pub(crate) fn should_record(k: usize, every: usize, horizon: usize) -> bool {
    k % every == 0 || k == horizon
}

/// Runs the dual method for `config.horizon` steps.
///
/// Gaps are measured against `optimum` when given, otherwise against the
/// running best dual value and the current network mean.
pub fn run(
    instance: &ProblemInstance,
    seq: &GraphSequence,
    config: &RunConfig,
    optimum: Option<&Optimum>,
) -> Result<RunTrace, RunFailure> {
    check_run_shape(instance, seq, config.horizon, config.record_every)?;
    if !(config.oracle_tol > 0.0) {
        return Err(Error::InvalidConfig("oracle tolerance must be positive".into()).into());
    }
    if config.policy.is_enforced() {
        validate_policy(&config.policy, instance, seq, config.weights, config.horizon)?;
    }
    let lip = instance.lipschitz_vec();
    let rho = config.policy.rho();
    let exec = config.execution;
    let tol = config.oracle_tol;

    let mut state = init_state_with(instance, &config.init, tol, exec)?;
    let mut log = InvariantLog::default();
    let mut d_cur = metrics::dual_value_at(instance, &state.w, &state.x);
    log.dual_values.push(d_cur);
    log.max_feasibility_ratio = state.feasibility_ratio();
    let mut best = d_cur;
    let mut records = Vec::new();
    let mut window_duals = Vec::new();
    let window = seq.window();

    let record = |state: &SolverState, d: f64, best: f64| -> MetricsRecord {
        let (x_star, d_star, f_star) = match optimum {
            Some(o) => (o.x_star.clone(), o.d_star(), o.f_star),
            None => (state.x.mean_row(), best, -best),
        };
        let p = primal_metrics(instance, &state.x, &x_star, &state.target, snapshot_for(seq, state.k));
        MetricsRecord {
            k: state.k,
            dual_value: Some(d),
            dual_gap: Some(d - d_star),
            primal_error: p.primal_error,
            stacked_error: p.stacked_error,
            feasibility_gap: p.feasibility_gap,
            objective: p.objective,
            objective_gap: p.objective - f_star,
            dual_norm: state.centered_dual_norm(),
            edge_disagreement: p.edge_disagreement,
        }
    };

    for k in 0..=config.horizon {
        if config.keep_window_duals && k % window == 0 {
            window_duals.push(state.w.clone());
        }
        if should_record(k, config.record_every, config.horizon) {
            records.push(record(&state, d_cur, best));
        }
        if k == config.horizon {
            break;
        }
        let g = seq.snapshot(k);
        let h = config.weights.build(g, &lip).map_err(|error| RunFailure {
            error,
            records: records.clone(),
        })?;
        let alpha = config.policy.step_at(k);
        let next = match step_with(instance, &state, g, &h, alpha, tol, exec) {
            Ok(s) => s,
            Err(error) => return Err(RunFailure { error, records }),
        };
        let d_next = metrics::dual_value_at(instance, &next.w, &next.x);
        let increase = d_next - d_cur;
        let excess = increase + rho * h.quadratic_form(state.x.as_slice(), instance.dim());
        log.max_dual_increase = if k == 0 { increase } else { log.max_dual_increase.max(increase) };
        log.max_descent_excess = if k == 0 { excess } else { log.max_descent_excess.max(excess) };
        if excess > config.descent_slack {
            log.descent_violations += 1;
        }
        log.max_feasibility_ratio = log.max_feasibility_ratio.max(next.feasibility_ratio());
        log.dual_values.push(d_next);
        best = best.min(d_next);
        d_cur = d_next;
        state = next;
    }

    Ok(RunTrace { records, invariants: log, window_duals, final_state: state, rho })
}
