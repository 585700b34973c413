//! Primal baselines sharing the graph sequence and metrics pipeline:
//! consensus subgradient projection and DIGing gradient tracking.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::block::{dist, NodeBlock};
use crate::error::{Error, Result};
use crate::exec::{map_nodes, try_map_nodes, Execution};
use crate::graph::{GraphSequence, GraphSnapshot};
use crate::oracle::{ProblemInstance, DEFAULT_ORACLE_TOL};
use crate::solver::{check_run_shape, primal_metrics, should_record, snapshot_for};
use crate::solver::{MetricsRecord, Optimum, RunFailure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    SubgradProjection,
    Diging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "a")]
pub enum BaselineStep {
    /// `α_k = a / k` with `k` counted from 1.
    Diminishing(f64),
    Constant(f64),
}

impl BaselineStep {
    pub fn at(self, k: usize) -> f64 {
        match self {
            BaselineStep::Diminishing(a) => a / (k + 1) as f64,
            BaselineStep::Constant(a) => a,
        }
    }

    fn validate(self) -> Result<()> {
        let a = match self {
            BaselineStep::Diminishing(a) | BaselineStep::Constant(a) => a,
        };
        if a > 0.0 && a.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("baseline step must be positive, got {a}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub step: BaselineStep,
    pub horizon: usize,
    pub record_every: usize,
    pub execution: Execution,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind, step: BaselineStep, horizon: usize) -> Self {
        Self { kind, step, horizon, record_every: 1, execution: Execution::default() }
    }
}

/// Symmetric doubly stochastic matrix with Metropolis–Hastings weights
/// `1 / (1 + max(|N_i|, |N_j|))` on edges.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    diag: Vec<f64>,
    /// Per node: `(neighbor, weight)`.
    adj: Vec<Vec<(usize, f64)>>,
}

pub fn mixing_matrix(g: &GraphSnapshot) -> MixingMatrix {
    let n = g.node_count();
    let mut diag = vec![1.0; n];
    let mut adj = vec![Vec::new(); n];
    let edges: Vec<_> = g
        .edges()
        .iter()
        .map(|&(i, j)| {
            let m = 1.0 / (1 + g.degree(i).max(g.degree(j))) as f64;
            diag[i] -= m;
            diag[j] -= m;
            adj[i].push((j, m));
            adj[j].push((i, m));
            (i, j, m)
        })
        .collect();
    MixingMatrix { n, edges, diag, adj }
}

impl MixingMatrix {
    pub fn edge_weights(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for &(i, j, w) in &self.edges {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        m
    }

    /// `(W ⊗ I_d) x`.
    pub fn apply(&self, x: &NodeBlock, exec: Execution) -> NodeBlock {
        let d = x.d();
        let rows = map_nodes(exec, self.n, |i| {
            let mut r: Vec<f64> = x.row(i).iter().map(|v| self.diag[i] * v).collect();
            for &(j, w) in &self.adj[i] {
                for (a, b) in r.iter_mut().zip(x.row(j)) {
                    *a += w * b;
                }
            }
            r
        });
        NodeBlock::from_vec(self.n, d, rows.concat())
    }
}

/// Subgradient of `f_i` at `x`, taking `sign(0) = 0` for the ℓ1 term.
fn subgradient(instance: &ProblemInstance, i: usize, x: &[f64]) -> Vec<f64> {
    let lp = instance.local(i);
    let mut g = vec![0.0; x.len()];
    lp.smooth_gradient(x, &mut g);
    let gamma = lp.l1_weight();
    if gamma > 0.0 {
        for (gi, xi) in g.iter_mut().zip(x) {
            if *xi != 0.0 {
                *gi += gamma * xi.signum();
            }
        }
    }
    g
}

/// One subgradient-projection step: local unweighted averaging over
/// `N_i ∪ {i}`, then a projected subgradient step at the average.
pub fn subgrad_step(
    instance: &ProblemInstance,
    x: &NodeBlock,
    g: &GraphSnapshot,
    alpha: f64,
    exec: Execution,
) -> NodeBlock {
    let (n, d) = (x.n(), x.d());
    let rows = map_nodes(exec, n, |i| {
        let nb = g.neighbors(i);
        let mut v = x.row(i).to_vec();
        for &j in nb {
            for (a, b) in v.iter_mut().zip(x.row(j)) {
                *a += b;
            }
        }
        let m = (nb.len() + 1) as f64;
        for a in &mut v {
            *a /= m;
        }
        let sg = subgradient(instance, i, &v);
        for (a, s) in v.iter_mut().zip(&sg) {
            *a -= alpha * s;
        }
        instance.local(i).project(&mut v);
        v
    });
    NodeBlock::from_vec(n, d, rows.concat())
}

/// DIGing iterate: positions `x`, gradient tracker `y`, and `∇f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigingState {
    pub x: NodeBlock,
    pub y: NodeBlock,
    pub grad: NodeBlock,
}

fn gradients(instance: &ProblemInstance, x: &NodeBlock, exec: Execution) -> NodeBlock {
    let rows = map_nodes(exec, x.n(), |i| {
        let mut g = vec![0.0; x.d()];
        instance.local(i).smooth_gradient(x.row(i), &mut g);
        g
    });
    NodeBlock::from_vec(x.n(), x.d(), rows.concat())
}

fn require_smooth(instance: &ProblemInstance) -> Result<()> {
    if instance.has_l1() || !instance.is_unconstrained() {
        return Err(Error::InvalidConfig(
            "DIGing needs an unconstrained smooth instance (l1 weight 0, infinite boxes)".into(),
        ));
    }
    Ok(())
}

impl DigingState {
    /// `y^0 = ∇f(x^0)`.
    pub fn new(instance: &ProblemInstance, x: NodeBlock) -> Result<Self> {
        require_smooth(instance)?;
        let grad = gradients(instance, &x, Execution::Sequential);
        Ok(Self { y: grad.clone(), x, grad })
    }
}

/// `x' = Wx − αy`, `y' = Wy + ∇f(x') − ∇f(x)`.
pub fn diging_step(
    instance: &ProblemInstance,
    state: &DigingState,
    g: &GraphSnapshot,
    alpha: f64,
    exec: Execution,
) -> Result<DigingState> {
    require_smooth(instance)?;
    let w = mixing_matrix(g);
    let mut x = w.apply(&state.x, exec);
    for i in 0..x.n() {
        for (a, b) in x.row_mut(i).iter_mut().zip(state.y.row(i)) {
            *a -= alpha * b;
        }
    }
    let grad = gradients(instance, &x, exec);
    let mut y = w.apply(&state.y, exec);
    for i in 0..y.n() {
        let (gn, go) = (grad.row(i), state.grad.row(i));
        for (t, a) in y.row_mut(i).iter_mut().enumerate() {
            *a += gn[t] - go[t];
        }
    }
    Ok(DigingState { x, y, grad })
}

#[derive(Debug, Clone)]
pub struct BaselineTrace {
    pub records: Vec<MetricsRecord>,
    pub final_x: NodeBlock,
    /// DIGing only: `max_k ‖Σ_i y_i^k − Σ_i ∇f_i(x_i^k)‖`.
    pub max_tracking_residual: f64,
}

impl BaselineTrace {
    pub fn to_csv(&self) -> String {
        crate::solver::to_csv(&self.records)
    }
}

/// Runs a baseline from `x_i^0 = x̃_i(0)`, the same start as the dual method
/// with zero duals.
pub fn run_baseline(
    instance: &ProblemInstance,
    seq: &GraphSequence,
    config: &BaselineConfig,
    optimum: Option<&Optimum>,
) -> Result<BaselineTrace, RunFailure> {
    check_run_shape(instance, seq, config.horizon, config.record_every)?;
    config.step.validate()?;
    if config.kind == BaselineKind::Diging {
        require_smooth(instance)?;
    }
    let (n, d) = (instance.n(), instance.dim());
    let exec = config.execution;
    let zero = vec![0.0; d];
    let rows = try_map_nodes(exec, n, |i| instance.local(i).conjugate_argmax(&zero, DEFAULT_ORACLE_TOL))?;
    let x0 = NodeBlock::from_vec(n, d, rows.concat());
    let mut diging = match config.kind {
        BaselineKind::Diging => Some(DigingState::new(instance, x0.clone())?),
        BaselineKind::SubgradProjection => None,
    };
    let mut x = x0;
    let mut records = Vec::new();
    let mut tracking = 0.0f64;
    for k in 0..=config.horizon {
        if should_record(k, config.record_every, config.horizon) {
            let x_star = optimum.map_or_else(|| x.mean_row(), |o| o.x_star.clone());
            let p = primal_metrics(instance, &x, &x_star, &zero, snapshot_for(seq, k));
            if !p.primal_error.is_finite() {
                return Err(RunFailure {
                    error: Error::InvalidConfig(format!("baseline diverged at step {k}")),
                    records,
                });
            }
            let f_star = optimum.map_or(p.objective, |o| o.f_star);
            records.push(MetricsRecord {
                k,
                dual_value: None,
                dual_gap: None,
                primal_error: p.primal_error,
                stacked_error: p.stacked_error,
                feasibility_gap: p.feasibility_gap,
                objective: p.objective,
                objective_gap: p.objective - f_star,
                dual_norm: 0.0,
                edge_disagreement: p.edge_disagreement,
            });
        }
        if k == config.horizon {
            break;
        }
        let g = seq.snapshot(k);
        let alpha = config.step.at(k);
        match &mut diging {
            Some(s) => {
                *s = diging_step(instance, s, g, alpha, exec).map_err(|error| RunFailure {
                    error,
                    records: records.clone(),
                })?;
                tracking = tracking.max(dist(&s.y.sum_rows(), &s.grad.sum_rows()));
                x = s.x.clone();
            }
            None => x = subgrad_step(instance, &x, g, alpha, exec),
        }
    }
    Ok(BaselineTrace { records, final_x: x, max_tracking_residual: tracking })
}
