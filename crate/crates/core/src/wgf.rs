//! Discretized Wasserstein gradient flow on a fixed discrete support.
//!
//! A model distribution `nu = softmax(theta)` and a target `p_d` share the
//! same `k` support points. Each JKO step takes a gradient-descent step on the
//! surrogate
//!
//! ```text
//! L(theta) = KL(nu || p_d) + 1/(2h) * W2^2(p_d, nu)
//! ```
//!
//! where `W2^2` is the squared-euclidean transport cost between the two
//! weight vectors, computed by IPOT. Its gradient with respect to `nu` is the
//! column dual potential of the optimal plan; both terms are chained through
//! the softmax Jacobian `diag(nu) - nu nu^T`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::cost::{build_cost_matrix, CostKind};
use crate::embed::soft_argmax;
use crate::error::{OtError, Result};
use crate::solvers::ipot_solve_with_potentials;
use crate::transport::{normalize_simplex, CostMatrix, SolverConfig};

/// Maximum number of step-size halvings in one JKO step.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    support: Array2<f64>,
    theta: Array1<f64>,
    target: Array1<f64>,
    /// JKO step scale; the proximity weight is `1 / (2h)`.
    pub h: f64,
    /// Gradient step size.
    pub eta: f64,
}

impl FlowState {
    /// `target` must be strictly positive: `KL(nu || p_d)` is infinite
    /// wherever `p_d` vanishes and `nu = softmax(theta)` never does.
    pub fn new(support: Array2<f64>, theta: Array1<f64>, target: Array1<f64>, h: f64, eta: f64) -> Result<Self> {
        let k = support.nrows();
        if k == 0 || support.ncols() == 0 {
            return Err(OtError::Empty("flow support"));
        }
        if support.iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite("flow support"));
        }
        for (len, context) in [(theta.len(), "theta length"), (target.len(), "target length")] {
            if len != k {
                return Err(OtError::DimensionMismatch {
                    expected: k,
                    found: len,
                    context,
                });
            }
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite("theta"));
        }
        let target = normalize_simplex(target.view(), "flow target")?;
        if let Some(index) = target.iter().position(|&p| p == 0.0) {
            return Err(OtError::SupportViolation {
                index,
                q: soft_argmax(theta.view(), 1.0)?.probs()[index],
            });
        }
        for (name, value) in [("h", h), ("eta", eta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(OtError::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(Self {
            support,
            theta,
            target,
            h,
            eta,
        })
    }

    /// Uniform model distribution (`theta = 0`).
    pub fn uniform(support: Array2<f64>, target: Array1<f64>, h: f64, eta: f64) -> Result<Self> {
        let k = support.nrows();
        Self::new(support, Array1::zeros(k), target, h, eta)
    }

    pub fn support(&self) -> ArrayView2<'_, f64> {
        self.support.view()
    }

    pub fn theta(&self) -> ArrayView1<'_, f64> {
        self.theta.view()
    }

    pub fn target(&self) -> ArrayView1<'_, f64> {
        self.target.view()
    }

    /// The model distribution `softmax(theta)`.
    pub fn nu(&self) -> Array1<f64> {
        softmax(self.theta.view())
    }

    fn with_theta(&self, theta: Array1<f64>) -> Self {
        Self { theta, ..self.clone() }
    }

    fn cost(&self) -> Result<CostMatrix> {
        build_cost_matrix(self.support.view(), self.support.view(), CostKind::SquaredEuclidean)
    }
}

fn softmax(theta: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = theta.mapv(|x| (x - max).exp());
    let total = e.sum();
    e / total
}

/// `J a` for the softmax Jacobian `J = diag(nu) - nu nu^T`.
fn softmax_pullback(nu: &Array1<f64>, a: &Array1<f64>) -> Array1<f64> {
    let mean = nu.dot(a);
    nu * &(a - mean)
}

/// `KL(q || p) = sum_i q_i (ln q_i - ln p_i)` with `0 ln 0 = 0`.
pub fn kl_divergence(q: ArrayView1<'_, f64>, p: ArrayView1<'_, f64>) -> Result<f64> {
    if q.len() != p.len() {
        return Err(OtError::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
            context: "kl divergence arguments",
        });
    }
    let q = normalize_simplex(q, "kl first argument")?;
    let p = normalize_simplex(p, "kl second argument")?;
    let mut total = 0.0;
    for (index, (&qi, &pi)) in q.iter().zip(p.iter()).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(OtError::SupportViolation { index, q: qi });
        }
        total += qi * (qi.ln() - pi.ln());
    }
    Ok(total.max(0.0))
}

/// Squared 2-Wasserstein distance between two weight vectors on a shared
/// support, with `pd` on the rows and `nu` on the columns.
pub fn w2_squared(nu: ArrayView1<'_, f64>, pd: ArrayView1<'_, f64>, support: ArrayView2<'_, f64>, cfg: &SolverConfig) -> Result<f64> {
    let cost = build_cost_matrix(support, support, CostKind::SquaredEuclidean)?;
    w2_with_gradient(&cost, nu, pd, cfg).map(|(w, _)| w)
}

/// `W2^2(pd, nu)` and its gradient with respect to `nu` (column potentials).
fn w2_with_gradient(cost: &CostMatrix, nu: ArrayView1<'_, f64>, pd: ArrayView1<'_, f64>, cfg: &SolverConfig) -> Result<(f64, Array1<f64>)> {
    let (report, potentials) = ipot_solve_with_potentials(cost, pd, nu, cfg)?;
    let status = report.status;
    match (report.solution, potentials) {
        (Some(solution), Some(potentials)) => Ok((solution.distance.max(0.0), potentials.col)),
        _ => Err(OtError::SolverFailure(format!("W2 solve ended with status {status}"))),
    }
}

/// Value of the surrogate loss, split into `(kl, w2)`.
pub fn surrogate_terms(state: &FlowState, cfg: &SolverConfig) -> Result<(f64, f64)> {
    evaluate(state, cfg).map(|e| (e.kl, e.w2))
}

/// `KL(nu || p_d) + W2^2(p_d, nu) / (2h)`.
pub fn surrogate_loss(state: &FlowState, cfg: &SolverConfig) -> Result<f64> {
    evaluate(state, cfg).map(|e| e.loss(state.h))
}

/// Gradient of [`surrogate_loss`] with respect to `theta`.
pub fn surrogate_gradient(state: &FlowState, cfg: &SolverConfig) -> Result<Array1<f64>> {
    let eval = evaluate(state, cfg)?;
    let nu = state.nu();
    // d KL / d nu = ln nu - ln p + 1; the constant vanishes under the pullback.
    let kl_grad = &nu.mapv(f64::ln) - &state.target.mapv(f64::ln);
    let grad_nu = kl_grad + eval.w2_grad / (2.0 * state.h);
    let grad = softmax_pullback(&nu, &grad_nu);
    if grad.iter().any(|x| !x.is_finite()) {
        return Err(OtError::NonFinite("surrogate gradient"));
    }
    Ok(grad)
}

struct Evaluation {
    kl: f64,
    w2: f64,
    w2_grad: Array1<f64>,
}

impl Evaluation {
    fn loss(&self, h: f64) -> f64 {
        self.kl + self.w2 / (2.0 * h)
    }
}

fn evaluate(state: &FlowState, cfg: &SolverConfig) -> Result<Evaluation> {
    let nu = state.nu();
    let kl = kl_divergence(nu.view(), state.target.view())?;
    let (w2, w2_grad) = w2_with_gradient(&state.cost()?, nu.view(), state.target.view(), cfg)?;
    Ok(Evaluation { kl, w2, w2_grad })
}

/// One descent step `theta <- theta - eta * grad L`, halving `eta` (at most
/// [`MAX_HALVINGS`] times) until the surrogate does not increase. If no
/// halving helps, `theta` is left unchanged.
pub fn jko_step(state: &FlowState, cfg: &SolverConfig) -> Result<FlowState> {
    descend(state, cfg).map(|(next, _)| next)
}

fn descend(state: &FlowState, cfg: &SolverConfig) -> Result<(FlowState, Evaluation)> {
    let grad = surrogate_gradient(state, cfg)?;
    let current = evaluate(state, cfg)?;
    let before = current.loss(state.h);
    let mut step = state.eta;
    for _ in 0..=MAX_HALVINGS {
        let candidate = state.with_theta(&state.theta - &(&grad * step));
        let eval = evaluate(&candidate, cfg)?;
        if eval.loss(state.h) <= before {
            return Ok((candidate, eval));
        }
        step *= 0.5;
    }
    Ok((state.clone(), current))
}

/// Total variation distance `|p - q|_1 / 2`.
pub fn tv_distance(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> f64 {
    0.5 * p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub step: usize,
    pub kl: f64,
    pub w2: f64,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub records: Vec<FlowRecord>,
    /// The TV threshold was reached.
    pub converged: bool,
    pub final_state: FlowState,
}

/// Iterates [`jko_step`] until `TV(nu, p_d) <= stop_tv` or `max_steps`
/// steps, logging one record after every step.
pub fn run_flow(state: FlowState, max_steps: usize, stop_tv: f64, cfg: &SolverConfig) -> Result<FlowTrajectory> {
    if max_steps == 0 {
        return Err(OtError::InvalidParameter {
            name: "max_steps",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let mut state = state;
    let mut records = Vec::new();
    let mut converged = false;
    for step in 1..=max_steps {
        let (next, eval) = descend(&state, cfg)?;
        state = next;
        let (kl, w2) = (eval.kl, eval.w2);
        let tv = tv_distance(state.nu().view(), state.target.view());
        records.push(FlowRecord { step, kl, w2, tv });
        if tv <= stop_tv {
            converged = true;
            break;
        }
    }
    Ok(FlowTrajectory {
        records,
        converged,
        final_state: state,
    })
}
