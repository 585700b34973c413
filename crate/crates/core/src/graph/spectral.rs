//! Dense symmetric eigenvalue helpers. Networks here are desk-scale (n ≤ 500),
//! so a full O(n³) decomposition is fine.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{GraphSnapshot, WeightMatrix};

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::try_new(m.clone(), 1e-14, 0)
        .expect("symmetric eigensolver with unbounded iterations always converges");
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sorted_eigenvalues(m)[0]
}

/// Largest eigenvalue `λ_1↓(H)`; for PSD weight matrices this is the spectral radius.
pub fn spectral_radius(h: &WeightMatrix) -> f64 {
    *sorted_eigenvalues(&h.to_dense()).last().expect("n >= 2")
}

/// Second-smallest Laplacian eigenvalue `λ_{n-1}↓(L_G)`.
pub fn algebraic_connectivity(laplacian: &WeightMatrix) -> f64 {
    sorted_eigenvalues(&laplacian.to_dense())[1]
}

pub fn max_degree(g: &GraphSnapshot) -> usize {
    (0..g.node_count()).map(|i| g.degree(i)).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::laplacian_weights;

    #[test]
    fn single_edge_spectrum() {
        let l = laplacian_weights(&GraphSnapshot::new(2, [(0, 1)]).unwrap());
        assert!((spectral_radius(&l) - 2.0).abs() < 1e-10);
        assert!((algebraic_connectivity(&l) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn complete_graph_spectrum() {
        for n in [3usize, 5, 8] {
            let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
            let g = GraphSnapshot::new(n, edges).unwrap();
            let l = laplacian_weights(&g);
            assert!((spectral_radius(&l) - n as f64).abs() < 1e-10);
            assert_eq!(max_degree(&g), n - 1);
        }
    }

    #[test]
    fn path_spectrum() {
        // det(L - λI) = -λ(λ-1)(λ-3) for the 3-node path
        let g = GraphSnapshot::new(3, [(0, 1), (1, 2)]).unwrap();
        let l = laplacian_weights(&g);
        assert!((spectral_radius(&l) - 3.0).abs() < 1e-10);
        assert!((algebraic_connectivity(&l) - 1.0).abs() < 1e-10);
        assert_eq!(max_degree(&g), 2);
    }

    #[test]
    fn disconnected_graph_has_zero_connectivity() {
        let g = GraphSnapshot::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(algebraic_connectivity(&laplacian_weights(&g)).abs() < 1e-10);
    }
}
