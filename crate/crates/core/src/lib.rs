//! Distributed Fenchel dual gradient methods over time-varying networks.
//!
//! The crate simulates a network of agents that jointly minimize
//! `Σ_i f_i(x)` over the intersection of local boxes, where each `f_i` is a
//! strongly convex quadratic plus an ℓ1 term. Agents run a weighted gradient
//! method on the Fenchel dual, exchanging only primal estimates with their
//! current neighbors:
//!
//! * [`graph`] builds B-connected sequences and the Laplacian / Metropolis
//!   weight matrices.
//! * [`oracle`] holds the local problems and the conjugate argmax oracle.
//! * [`solver`] runs the dual iteration with admissible step sizes.
//! * [`baselines`] provides consensus subgradient projection and DIGing.
//! * [`certify`] computes reference solutions and checks the convergence
//!   bounds numerically along a run.
//! * [`scenario`] wires everything into reproducible, file-configured
//!   experiments.

pub mod baselines;
mod block;
pub mod certify;
mod error;
pub mod exec;
pub mod graph;
pub mod oracle;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use block::NodeBlock;
pub use exec::Execution;
