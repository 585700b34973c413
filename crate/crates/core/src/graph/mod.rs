//! Time-varying undirected networks.
//!
//! A [`GraphSequence`] is an ordered list of [`GraphSnapshot`]s over a fixed node
//! set together with the window length `B` for which every block of `B`
//! consecutive edge sets is claimed to have a connected union. Nodes are indexed
//! `0..n` internally; the text format in [`io`] uses 1-based labels.

mod generate;
pub mod io;
mod spectral;
mod weights;

use std::collections::VecDeque;

pub use generate::{generate_sequence, SequenceDescriptor, SequenceKind};
pub use spectral::{algebraic_connectivity, max_degree, smallest_eigenvalue, spectral_radius};
pub use weights::{
    laplacian_weights, metropolis_weights, WeightCheck, WeightKind, WeightMatrix,
};

use crate::error::{invalid, Result};

/// One edge set `E^k` over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphSnapshot {
    n: usize,
    /// Sorted, deduplicated pairs with `i < j`.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl GraphSnapshot {
    /// Builds a snapshot; pairs are unordered and duplicates are merged.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let g = Self::build(n, edges)?;
        if g.edges.is_empty() {
            return Err(invalid("snapshot edge set must be nonempty"));
        }
        Ok(g)
    }

    /// Same as [`GraphSnapshot::new`] but permits an empty edge set (window unions, trees).
    pub(crate) fn build(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("graph needs at least 2 nodes, got {n}")));
        }
        let mut list = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(invalid(format!("self-loop at node {}", i + 1)));
            }
            if i >= n || j >= n {
                return Err(invalid(format!(
                    "edge {}-{} out of range for n = {n}",
                    i + 1,
                    j + 1
                )));
            }
            list.push((i.min(j), i.max(j)));
        }
        list.sort_unstable();
        list.dedup();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &list {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Self { n, edges: list, neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_tree().len() + 1 == self.n
    }

    /// Breadth-first spanning tree of the component of node 0, children visited
    /// in ascending order. Returns the tree edges as `(parent, child)`.
    pub fn bfs_tree(&self) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut tree = Vec::with_capacity(self.n - 1);
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    tree.push((u, v));
                    queue.push_back(v);
                }
            }
        }
        tree
    }
}

/// An ordered, materialized sequence of snapshots with its connectivity window.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSequence {
    n: usize,
    window: usize,
    snapshots: Vec<GraphSnapshot>,
    descriptor: Option<SequenceDescriptor>,
}

impl GraphSequence {
    pub fn new(window: usize, snapshots: Vec<GraphSnapshot>) -> Result<Self> {
        if window == 0 {
            return Err(invalid("window B must be at least 1"));
        }
        let first = snapshots
            .first()
            .ok_or_else(|| invalid("graph sequence is empty"))?;
        let n = first.node_count();
        if let Some(k) = snapshots.iter().position(|g| g.node_count() != n) {
            return Err(invalid(format!(
                "snapshot {k} has {} nodes, expected {n}",
                snapshots[k].node_count()
            )));
        }
        Ok(Self { n, window, snapshots, descriptor: None })
    }

    pub(crate) fn with_descriptor(mut self, d: SequenceDescriptor) -> Self {
        self.descriptor = Some(d);
        self
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, k: usize) -> &GraphSnapshot {
        &self.snapshots[k]
    }

    pub fn snapshots(&self) -> &[GraphSnapshot] {
        &self.snapshots
    }

    pub fn descriptor(&self) -> Option<&SequenceDescriptor> {
        self.descriptor.as_ref()
    }

    /// Union of `E^start, ..., E^{start+len-1}` (clamped to the sequence end).
    pub fn window_union(&self, start: usize, len: usize) -> GraphSnapshot {
        let end = (start + len).min(self.snapshots.len());
        let edges = self.snapshots[start.min(end)..end]
            .iter()
            .flat_map(|g| g.edges().iter().copied());
        GraphSnapshot::build(self.n, edges).expect("snapshot edges are already validated")
    }

    /// BFS spanning tree (root node 0, ascending children) of the union over
    /// window `t`, i.e. steps `tB..(t+1)B-1`. `None` if that union is disconnected.
    pub fn window_spanning_tree(&self, t: usize) -> Option<GraphSnapshot> {
        let union = self.window_union(t * self.window, self.window);
        let tree = union.bfs_tree();
        if tree.len() + 1 != self.n {
            return None;
        }
        Some(GraphSnapshot::build(self.n, tree).expect("tree edges come from a valid graph"))
    }
}

/// True iff every window `[kB, (k+1)B-1]` inside `0..horizon` has a connected
/// union graph.
pub fn verify_b_connectivity(seq: &GraphSequence, window: usize, horizon: usize) -> Result<bool> {
    if window == 0 {
        return Err(invalid("window B must be at least 1"));
    }
    if horizon % window != 0 {
        return Err(invalid(format!(
            "horizon {horizon} is not a multiple of the window {window}"
        )));
    }
    if horizon > seq.len() {
        return Err(invalid(format!(
            "horizon {horizon} exceeds the {} materialized snapshots",
            seq.len()
        )));
    }
    Ok((0..horizon / window).all(|t| seq.window_union(t * window, window).is_connected()))
}
