//! Transport solvers.
//!
//! [`ipot_solve`] is the primary solver; [`sinkhorn_solve`] is kept for
//! comparison and [`exact_solve_uniform`] serves as a brute-force oracle on
//! small uniform square instances.

mod exact;
mod ipot;
mod sinkhorn;

pub use exact::{exact_solve_uniform, next_permutation, ORACLE_MAX_N};
pub use ipot::{ipot_solve, ipot_solve_with_potentials, DualPotentials};
pub use sinkhorn::sinkhorn_solve;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{OtError, Result};
use crate::transport::{normalize_simplex, CostMatrix, SolverConfig, TransportPlan};

/// Denominators of scaling updates below this are treated as underflow.
pub(crate) const DIVISION_GUARD: f64 = 1e-300;

/// Infinity norm of the marginal violation of a plan.
pub fn plan_residual(plan: &TransportPlan) -> f64 {
    marginal_residual(plan.matrix(), plan.row_marginal(), plan.col_marginal())
}

pub(crate) fn marginal_residual(t: ArrayView2<'_, f64>, u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
    let rows = t
        .outer_iter()
        .zip(u.iter())
        .map(|(row, ui)| (row.sum() - ui).abs());
    let cols = t
        .columns()
        .into_iter()
        .zip(v.iter())
        .map(|(col, vj)| (col.sum() - vj).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Validates a solver call and returns renormalized marginals.
pub(crate) fn check_problem(
    cost: &CostMatrix,
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
) -> Result<(Array1<f64>, Array1<f64>)> {
    cfg.validate()?;
    if cost.nrows() != u.len() || cost.ncols() != v.len() {
        return Err(OtError::ShapeMismatch {
            rows: cost.nrows(),
            cols: cost.ncols(),
            u_len: u.len(),
            v_len: v.len(),
        });
    }
    let u = normalize_simplex(u, "row marginal")?;
    let v = normalize_simplex(v, "column marginal")?;
    Ok((u, v))
}
