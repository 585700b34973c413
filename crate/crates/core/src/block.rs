use serde::{Deserialize, Serialize};

/// Stacked per-node vectors: `n` rows of length `d`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeBlock {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl NodeBlock {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self { n, d, data: vec![0.0; n * d] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == d), "ragged rows");
        Self { n, d, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_vec(n: usize, d: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * d, "block size mismatch");
        Self { n, d, data }
    }

    /// Every row equal to `row`.
    pub fn repeat(n: usize, row: &[f64]) -> Self {
        Self { n, d: row.len(), data: row.repeat(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column sums `Σ_i x_i`.
    pub fn sum_rows(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.d];
        for r in self.rows() {
            for (a, b) in s.iter_mut().zip(r) {
                *a += b;
            }
        }
        s
    }

    pub fn mean_row(&self) -> Vec<f64> {
        let mut s = self.sum_rows();
        for v in &mut s {
            *v /= self.n as f64;
        }
        s
    }

    /// Euclidean norm of the stacked vector.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    /// Norm of the stacked difference `self − (row, …, row)`.
    pub fn distance_to_row(&self, row: &[f64]) -> f64 {
        self.rows()
            .map(|r| r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, other: &NodeBlock) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
