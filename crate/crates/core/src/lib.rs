//! Sequence-level optimal transport.
//!
//! The crate is organised bottom-up:
//!
//! * [`transport`] holds the shared domain types (distributions, cost
//!   matrices, transport plans, solver configuration and reports).
//! * [`cost`] evaluates pointwise costs and assembles cost matrices.
//! * [`solvers`] computes transport plans: the inexact proximal point
//!   solver (IPOT), log-domain Sinkhorn, and an exhaustive oracle for small
//!   uniform instances.
//! * [`matching`] covers hard token matching and the Hungarian assignment.
//! * [`embed`] turns model beliefs and token sequences into embedded
//!   sequences, computes the OT losses and their gradients.
//! * [`wgf`] is a small discretized Wasserstein gradient flow on a fixed
//!   support.

pub mod cost;
pub mod embed;
pub mod error;
pub mod matching;
pub mod solvers;
pub mod transport;
pub mod wgf;

pub use cost::{build_cost_matrix, cosine_cost, euclidean_cost, squared_euclidean_cost, CostKind};
pub use error::{OtError, Result};
pub use solvers::{exact_solve_uniform, ipot_solve, plan_residual, sinkhorn_solve};
pub use transport::{
    uniform_weights, validate_distribution, CostMatrix, DiscreteDistribution, Solution,
    SolverConfig, SolverReport, SolverStatus, TransportPlan,
};
