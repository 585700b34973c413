use std::io::Write;

use crate::block::{dist, NodeBlock};
use crate::error::Result;
use crate::exec::{try_map_nodes, Execution};
use crate::graph::GraphSnapshot;
use crate::oracle::ProblemInstance;

pub const CSV_HEADER: &str = "k,D,dual_gap,primal_err,feas_gap,F_gap";

/// One row of a run's metric series.
///
/// `dual_value` and `dual_gap` are `None` for primal-only baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub k: usize,
    pub dual_value: Option<f64>,
    pub dual_gap: Option<f64>,
    /// Network average of `‖x_i − x*‖`.
    pub primal_error: f64,
    /// `‖x − 1⊗x*‖` of the stacked iterate.
    pub stacked_error: f64,
    /// `‖P_{S⊥}(x)‖`.
    pub feasibility_gap: f64,
    /// Objective `F(x)` of the stacked iterate.
    pub objective: f64,
    pub objective_gap: f64,
    /// `‖w − 1⊗c/n‖`, zero for baselines.
    pub dual_norm: f64,
    /// `max_{ij ∈ E^k} ‖x_i − x_j‖`.
    pub edge_disagreement: f64,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt);
        format!(
            "{},{},{},{},{},{}",
            self.k,
            opt(self.dual_value),
            opt(self.dual_gap),
            fmt(self.primal_error),
            fmt(self.feasibility_gap),
            fmt(self.objective_gap)
        )
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn to_csv(records: &[MetricsRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// `D(w) = Σ_i d_i(w_i)`, solving every conjugate subproblem.
pub fn dual_value(instance: &ProblemInstance, w: &NodeBlock, tol: f64) -> Result<f64> {
    let parts = try_map_nodes(Execution::Sequential, instance.n(), |i| {
        instance.local(i).conjugate_value(w.row(i), tol)
    })?;
    Ok(parts.iter().sum())
}

/// `D(w)` given the already computed maximizers `x_i = x̃_i(w_i)`.
pub(crate) fn dual_value_at(instance: &ProblemInstance, w: &NodeBlock, x: &NodeBlock) -> f64 {
    (0..instance.n())
        .map(|i| instance.local(i).conjugate_value_at(w.row(i), x.row(i)))
        .sum()
}

/// `‖P_{S⊥}(x)‖ = sqrt(Σ_i ‖x_i − x̄‖²)`.
pub fn feasibility_gap(x: &NodeBlock) -> f64 {
    x.distance_to_row(&x.mean_row())
}

/// Stacked `x_i − x̄`.
pub fn consensus_projection(x: &NodeBlock) -> NodeBlock {
    let mean = x.mean_row();
    let mut out = x.clone();
    for i in 0..out.n() {
        for (v, m) in out.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    out
}

/// `F_c(x) = Σ_i f_i(x_i) − cᵀ x̄`, which is `F` when `c = 0`.
pub fn objective(instance: &ProblemInstance, x: &NodeBlock, target: &[f64]) -> f64 {
    let f: f64 = (0..instance.n()).map(|i| instance.local(i).objective_value(x.row(i))).sum();
    let mean = x.mean_row();
    f - target.iter().zip(&mean).map(|(c, m)| c * m).sum::<f64>()
}

pub fn edge_disagreement(x: &NodeBlock, g: &GraphSnapshot) -> f64 {
    g.edges()
        .iter()
        .map(|&(i, j)| dist(x.row(i), x.row(j)))
        .fold(0.0, f64::max)
}

/// Optimal values the gaps are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x_star: Vec<f64>,
    pub f_star: f64,
}

impl Optimum {
    pub fn d_star(&self) -> f64 {
        -self.f_star
    }
}

pub(crate) struct PrimalMetrics {
    pub primal_error: f64,
    pub stacked_error: f64,
    pub feasibility_gap: f64,
    pub objective: f64,
    pub edge_disagreement: f64,
}

pub(crate) fn primal_metrics(
    instance: &ProblemInstance,
    x: &NodeBlock,
    x_star: &[f64],
    target: &[f64],
    g: &GraphSnapshot,
) -> PrimalMetrics {
    let errs: Vec<f64> = x.rows().map(|r| dist(r, x_star)).collect();
    PrimalMetrics {
        primal_error: errs.iter().sum::<f64>() / x.n() as f64,
        stacked_error: errs.iter().map(|e| e * e).sum::<f64>().sqrt(),
        feasibility_gap: feasibility_gap(x),
        objective: objective(instance, x, target),
        edge_disagreement: edge_disagreement(x, g),
    }
}
