use ndarray::{Array1, Array2, ArrayView1};

use super::ipot::finish;
use super::{check_problem, marginal_residual};
use crate::error::Result;
use crate::transport::{CostMatrix, SolverConfig, SolverReport, FEASIBILITY_TOLERANCE};

/// Entropy-regularized OT by Sinkhorn scaling, computed in the log domain.
///
/// Minimizes `<T, C> - (1/epsilon) H(T)` with `H(T) = -sum T (log T - 1)`,
/// so the Gibbs kernel is `exp(-epsilon * C)` and a larger `epsilon` gives a
/// plan closer to unregularized OT. The reported distance is the transport
/// cost `<T, C>` of the returned plan, without the entropy term.
///
/// Potentials `f`, `g` replace the scalings (`T = exp(f + g - epsilon C)`),
/// so the kernel itself never under/overflows; a non-finite potential or
/// plan still ends in [`crate::SolverStatus::NumericalFailure`].
pub fn sinkhorn_solve(
    cost: &CostMatrix,
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let (u, v) = check_problem(cost, u, v, cfg)?;
    let (n, m) = (cost.nrows(), cost.ncols());
    let log_kernel = cost.values().mapv(|c| -cfg.epsilon * c);
    if log_kernel.iter().any(|x| !x.is_finite()) {
        return Ok(SolverReport::failure(0));
    }
    let log_u = u.mapv(f64::ln);
    let log_v = v.mapv(f64::ln);

    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    let mut plan = Array2::<f64>::zeros((n, m));
    let mut converged = false;
    let mut iterations = 0;
    let mut scratch = Vec::with_capacity(n.max(m));

    for _ in 0..cfg.outer_iters {
        iterations += 1;
        for i in 0..n {
            if u[i] == 0.0 {
                f[i] = f64::NEG_INFINITY;
                continue;
            }
            scratch.clear();
            scratch.extend((0..m).map(|j| log_kernel[[i, j]] + g[j]));
            f[i] = log_u[i] - log_sum_exp(&scratch);
        }
        for j in 0..m {
            if v[j] == 0.0 {
                g[j] = f64::NEG_INFINITY;
                continue;
            }
            scratch.clear();
            scratch.extend((0..n).map(|i| log_kernel[[i, j]] + f[i]));
            g[j] = log_v[j] - log_sum_exp(&scratch);
        }
        let positive = |w: f64, p: f64| w == 0.0 || p.is_finite();
        if !(u.iter().zip(f.iter()).all(|(&w, &p)| positive(w, p))
            && v.iter().zip(g.iter()).all(|(&w, &p)| positive(w, p)))
        {
            return Ok(SolverReport::failure(iterations));
        }

        let mut change = 0.0;
        for ((i, j), t) in plan.indexed_iter_mut() {
            let next = (log_kernel[[i, j]] + f[i] + g[j]).exp();
            change += (next - *t) * (next - *t);
            *t = next;
        }
        if !change.is_finite() {
            return Ok(SolverReport::failure(iterations));
        }
        if change.sqrt() <= cfg.tolerance
            && marginal_residual(plan.view(), u.view(), v.view()) <= FEASIBILITY_TOLERANCE
        {
            converged = true;
            break;
        }
    }

    finish(cost, plan, u, v, iterations, converged)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
