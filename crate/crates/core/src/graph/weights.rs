//! Weight matrices `H` supported on a snapshot's edge set: symmetric, zero row
//! sums, off-diagonal `-h_ij` on edges with `h_ij` in `[h_lower, h_upper]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spectral::smallest_eigenvalue;
use super::GraphSnapshot;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Laplacian,
    Metropolis,
}

/// Sparse symmetric weight matrix of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    /// `(i, j, h_ij)` with `i < j`, in the snapshot's edge order.
    edges: Vec<(usize, usize, f64)>,
    diag: Vec<f64>,
    h_lower: f64,
    h_upper: f64,
}

/// Outcome of the structural checks on a weight matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightCheck {
    pub symmetric: bool,
    pub max_abs_row_sum: f64,
    pub min_eigenvalue: f64,
    pub pattern_matches: bool,
}

impl WeightCheck {
    pub fn passes(&self) -> bool {
        self.symmetric
            && self.pattern_matches
            && self.max_abs_row_sum <= 1e-12
            && self.min_eigenvalue >= -1e-10
    }
}

impl WeightMatrix {
    fn from_edges(g: &GraphSnapshot, weight: impl Fn(usize, usize) -> f64) -> Self {
        let n = g.node_count();
        let mut diag = vec![0.0; n];
        let mut edges = Vec::with_capacity(g.edges().len());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &(i, j) in g.edges() {
            let h = weight(i, j);
            diag[i] += h;
            diag[j] += h;
            lo = lo.min(h);
            hi = hi.max(h);
            edges.push((i, j, h));
        }
        Self { n, edges, diag, h_lower: lo, h_upper: hi }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_weights(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Smallest edge weight used.
    pub fn h_lower(&self) -> f64 {
        self.h_lower
    }

    /// Largest edge weight used.
    pub fn h_upper(&self) -> f64 {
        self.h_upper
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, &v) in self.diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        for &(i, j, h) in &self.edges {
            m[(i, j)] = -h;
            m[(j, i)] = -h;
        }
        m
    }

    /// `x^T (H ⊗ I_d) x = Σ_{ij ∈ E} h_ij ‖x_i − x_j‖²` for a row-major `n × d` block.
    pub fn quadratic_form(&self, x: &[f64], d: usize) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, h)| {
                let (xi, xj) = (&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
                h * xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum()
    }

    /// Structural checks against the snapshot the matrix was built from.
    pub fn check(&self, g: &GraphSnapshot) -> WeightCheck {
        let dense = self.to_dense();
        let symmetric = dense == dense.transpose();
        let max_abs_row_sum = dense
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max);
        let mut pattern_matches = g.node_count() == self.n;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let on_edge = g.contains_edge(i, j);
                    let v = dense[(i, j)];
                    pattern_matches &= if on_edge { v < 0.0 } else { v == 0.0 };
                }
            }
        }
        WeightCheck {
            symmetric,
            max_abs_row_sum,
            min_eigenvalue: smallest_eigenvalue(&dense),
            pattern_matches,
        }
    }

    /// Whether `diag(scale) − H` is weakly diagonally dominant, which
    /// certifies `H ⪯ diag(scale)` up to rounding (min eigenvalue above
    /// `-1e-12 · max scale`).
    pub fn dominated_by(&self, scale: &[f64]) -> bool {
        // off-diagonal row sums of H equal its diagonal
        self.diag
            .iter()
            .zip(scale)
            .all(|(&h, &s)| s - 2.0 * h >= -1e-12 * s.abs())
    }

    /// Smallest eigenvalue of `diag(scale) − H`.
    pub fn min_eig_below(&self, scale: &[f64]) -> f64 {
        let mut m = -self.to_dense();
        for (i, &s) in scale.iter().enumerate() {
            m[(i, i)] += s;
        }
        smallest_eigenvalue(&m)
    }
}

/// Graph Laplacian: unit weights on every edge.
pub fn laplacian_weights(g: &GraphSnapshot) -> WeightMatrix {
    WeightMatrix::from_edges(g, |_, _| 1.0)
}

/// Metropolis-type weights `h_ij = 1 / max(|N_i| L_i, |N_j| L_j)`.
pub fn metropolis_weights(g: &GraphSnapshot, lipschitz: &[f64]) -> Result<WeightMatrix> {
    if lipschitz.len() != g.node_count() {
        return Err(invalid(format!(
            "expected {} Lipschitz constants, got {}",
            g.node_count(),
            lipschitz.len()
        )));
    }
    if let Some(i) = lipschitz.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(invalid(format!(
            "Lipschitz constant of node {} must be positive, got {}",
            i + 1,
            lipschitz[i]
        )));
    }
    Ok(WeightMatrix::from_edges(g, |i, j| {
        let a = g.degree(i) as f64 * lipschitz[i];
        let b = g.degree(j) as f64 * lipschitz[j];
        1.0 / a.max(b)
    }))
}

impl WeightKind {
    pub fn build(self, g: &GraphSnapshot, lipschitz: &[f64]) -> Result<WeightMatrix> {
        match self {
            WeightKind::Laplacian => Ok(laplacian_weights(g)),
            WeightKind::Metropolis => metropolis_weights(g, lipschitz),
        }
    }
}
