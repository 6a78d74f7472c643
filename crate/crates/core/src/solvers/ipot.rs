use ndarray::{Array1, Array2, ArrayView1, Zip};

use super::{check_problem, marginal_residual, DIVISION_GUARD};
use crate::error::Result;
use crate::transport::{
    CostMatrix, Solution, SolverConfig, SolverReport, SolverStatus, TransportPlan, FEASIBILITY_TOLERANCE,
};

/// Inexact proximal point OT solver (IPOT).
///
/// Each outer step solves `argmin_T <T, C> + beta * KL(T || T_t)` over the
/// coupling polytope approximately with `inner_k` Sinkhorn-style sweeps on
/// the kernel `Q = exp(-C / beta) * T_t`:
///
/// ```text
/// delta = u / (Q sigma),  sigma = v / (Q^T delta),  T_{t+1} = diag(delta) Q diag(sigma)
/// ```
///
/// `T_1` is the all-ones matrix and `sigma` starts at `1/m`. Iteration stops
/// once `|T_{t+1} - T_t|_F <= tolerance` and the marginals are feasible to
/// within [`FEASIBILITY_TOLERANCE`], or after `outer_iters` steps.
///
/// Shape and parameter errors are returned as `Err`; over/underflow during the
/// iteration is reported through [`SolverStatus::NumericalFailure`].
pub fn ipot_solve(
    cost: &CostMatrix,
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    ipot_solve_with_potentials(cost, u, v, cfg).map(|(report, _)| report)
}

/// Approximate dual potentials recovered from the last IPOT scalings:
/// `f = beta * ln(delta)`, `g = beta * ln(sigma)`.
///
/// At a fixed point `delta_i * exp(-C_ij / beta) * sigma_j = 1` on the support
/// of the plan, so `f_i + g_j = C_ij` there. Entries with zero marginal mass
/// are `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub row: Array1<f64>,
    pub col: Array1<f64>,
}

/// [`ipot_solve`] that also returns the dual potentials of the final step
/// (`None` on numerical failure).
pub fn ipot_solve_with_potentials(
    cost: &CostMatrix,
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
) -> Result<(SolverReport, Option<DualPotentials>)> {
    let (u, v) = check_problem(cost, u, v, cfg)?;
    let (n, m) = (cost.nrows(), cost.ncols());
    let c = cost.values();

    let kernel = c.mapv(|x| (-x / cfg.beta).exp());
    let mut plan = Array2::<f64>::ones((n, m));
    let mut q = Array2::<f64>::zeros((n, m));
    let mut delta = Array1::<f64>::zeros(n);
    let mut sigma = Array1::from_elem(m, 1.0 / m as f64);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.outer_iters {
        iterations += 1;
        Zip::from(&mut q).and(&kernel).and(&plan).for_each(|q, &a, &t| *q = a * t);

        for _ in 0..cfg.inner_k {
            if !scale(&mut delta, &q.dot(&sigma), &u) {
                return Ok((SolverReport::failure(iterations), None));
            }
            if !scale(&mut sigma, &q.t().dot(&delta), &v) {
                return Ok((SolverReport::failure(iterations), None));
            }
        }

        let mut change = 0.0;
        let mut finite = true;
        Zip::indexed(&mut plan).and(&q).for_each(|(i, j), t, &qij| {
            let next = delta[i] * qij * sigma[j];
            finite &= next.is_finite();
            change += (next - *t) * (next - *t);
            *t = next;
        });
        if !finite {
            return Ok((SolverReport::failure(iterations), None));
        }
        if change.sqrt() <= cfg.tolerance
            && marginal_residual(plan.view(), u.view(), v.view()) <= FEASIBILITY_TOLERANCE
        {
            converged = true;
            break;
        }
    }

    let report = finish(cost, plan, u, v, iterations, converged)?;
    if report.solution.is_none() {
        return Ok((report, None));
    }
    let potentials = DualPotentials {
        row: delta.mapv(|d| cfg.beta * d.ln()),
        col: sigma.mapv(|s| cfg.beta * s.ln()),
    };
    Ok((report, Some(potentials)))
}

/// `out = target / denom`, with zero target mass giving a zero scaling.
/// Returns `false` if a denominator for positive mass underflowed or the
/// result is not finite.
pub(super) fn scale(out: &mut Array1<f64>, denom: &Array1<f64>, target: &Array1<f64>) -> bool {
    for ((o, &d), &t) in out.iter_mut().zip(denom.iter()).zip(target.iter()) {
        if t == 0.0 {
            *o = 0.0;
            continue;
        }
        if !(d.is_finite() && d >= DIVISION_GUARD) {
            return false;
        }
        *o = t / d;
        if !o.is_finite() {
            return false;
        }
    }
    true
}

pub(super) fn finish(
    cost: &CostMatrix,
    plan: Array2<f64>,
    u: Array1<f64>,
    v: Array1<f64>,
    iterations: usize,
    converged: bool,
) -> Result<SolverReport> {
    let Ok(plan) = TransportPlan::new(plan, u, v) else {
        return Ok(SolverReport::failure(iterations));
    };
    let distance = cost.frobenius_dot(plan.matrix());
    if !distance.is_finite() {
        return Ok(SolverReport::failure(iterations));
    }
    let marginal_residual = super::plan_residual(&plan);
    Ok(SolverReport {
        status: if converged { SolverStatus::Ok } else { SolverStatus::MaxIters },
        iterations_used: iterations,
        converged,
        solution: Some(Solution {
            distance,
            plan,
            marginal_residual,
        }),
    })
}
