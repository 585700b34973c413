//! Seeded generators for B-connected sequences.
//!
//! All generators draw from one ChaCha stream step by step, so a longer horizon
//! with the same seed extends a shorter one without changing its prefix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphSequence, GraphSnapshot};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// One edge per step; every window walks through a spanning tree.
    Gossip,
    /// Random subsets of a connected base graph plus a scheduled slice of its
    /// spanning tree each step.
    WindowedTree,
    /// A ring (a single edge for `n = 2`) at every step.
    FullStatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDescriptor {
    pub kind: SequenceKind,
    pub n: usize,
    pub window: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Builds `horizon` snapshots of the requested kind. The result is
/// B-connected over any prefix that is a multiple of `window`.
pub fn generate_sequence(
    kind: SequenceKind,
    n: usize,
    window: usize,
    horizon: usize,
    seed: u64,
) -> Result<GraphSequence> {
    if n < 2 {
        return Err(invalid(format!("graph needs at least 2 nodes, got {n}")));
    }
    if window == 0 {
        return Err(invalid("window B must be at least 1"));
    }
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    if kind == SequenceKind::Gossip && window < n - 1 {
        return Err(Error::InfeasibleWindow { window, required: n - 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let snapshots = match kind {
        SequenceKind::FullStatic => {
            let g = GraphSnapshot::new(n, ring_edges(n))?;
            vec![g; horizon]
        }
        SequenceKind::Gossip => gossip(n, window, horizon, &mut rng)?,
        SequenceKind::WindowedTree => windowed_tree(n, window, horizon, &mut rng)?,
    };
    let seq = GraphSequence::new(window, snapshots)?;
    Ok(seq.with_descriptor(SequenceDescriptor { kind, n, window, horizon, seed }))
}

fn ring_edges(n: usize) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Random recursive tree: the i-th node of a random permutation attaches to a
/// uniformly chosen earlier one.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    (1..n)
        .map(|i| {
            let parent = order[rng.random_range(0..i)];
            let child = order[i];
            (parent.min(child), parent.max(child))
        })
        .collect()
}

/// Spanning tree plus up to `4n` extra chords, all distinct, so that a window
/// union has average degree around 10.
fn base_graph(n: usize, rng: &mut ChaCha8Rng) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let tree = random_tree(n, rng);
    let mut edges = tree.clone();
    let max_edges = n * (n - 1) / 2;
    let target = (tree.len() + 4 * n).min(max_edges);
    let mut attempts = 0;
    while edges.len() < target && attempts < 100 * n * n {
        attempts += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let e = (i.min(j), i.max(j));
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    (tree, edges)
}

fn gossip(
    n: usize,
    window: usize,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<GraphSnapshot>> {
    let (tree, base) = base_graph(n, rng);
    let mut order = tree.clone();
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let slot = k % window;
        if slot == 0 {
            order.shuffle(rng);
        }
        let e = if slot < order.len() {
            order[slot]
        } else {
            base[rng.random_range(0..base.len())]
        };
        out.push(GraphSnapshot::new(n, [e])?);
    }
    Ok(out)
}

fn windowed_tree(
    n: usize,
    window: usize,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<GraphSnapshot>> {
    let (tree, base) = base_graph(n, rng);
    let p = 1.0 / window as f64;
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let slot = k % window;
        let mut edges: Vec<(usize, usize)> = tree
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx % window == slot)
            .map(|(_, &e)| e)
            .collect();
        for &e in &base {
            if rng.random::<f64>() < p {
                edges.push(e);
            }
        }
        if edges.is_empty() {
            edges.push(base[rng.random_range(0..base.len())]);
        }
        out.push(GraphSnapshot::new(n, edges)?);
    }
    Ok(out)
}
