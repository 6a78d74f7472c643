//! Domain types shared by the solvers, matchers and losses.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::cost::CostKind;
use crate::error::{OtError, Result};

/// Accepted deviation of a weight vector's sum from 1 before renormalization.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Marginal residual (infinity norm) an `Ok` plan is guaranteed to satisfy.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Plan entries below zero but above this are treated as rounding noise.
pub const NEGATIVE_CLAMP: f64 = -1e-12;

/// A weighted point cloud: `sum_i w_i * delta(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    points: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from an `n x d` point matrix and `n` weights.
    pub fn new(points: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || weights.is_empty() {
            return Err(OtError::Empty("distribution support"));
        }
        if d == 0 {
            return Err(OtError::Empty("point dimension"));
        }
        if weights.len() != n {
            return Err(OtError::DimensionMismatch {
                expected: n,
                found: weights.len(),
                context: "weight count vs point count",
            });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite("distribution points"));
        }
        let weights = normalize_simplex(weights.view(), "distribution weights")?;
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Validates row-major points and weights into a [`DiscreteDistribution`].
///
/// Weights whose sum is within [`WEIGHT_SUM_TOLERANCE`] of 1 are renormalized;
/// anything further off is rejected.
pub fn validate_distribution(points: &[Vec<f64>], weights: &[f64]) -> Result<DiscreteDistribution> {
    let first = points.first().ok_or(OtError::Empty("distribution support"))?;
    let d = first.len();
    for p in points {
        if p.len() != d {
            return Err(OtError::DimensionMismatch {
                expected: d,
                found: p.len(),
                context: "point dimension",
            });
        }
    }
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let points = Array2::from_shape_vec((points.len(), d), flat)
        .map_err(|_| OtError::Empty("point dimension"))?;
    DiscreteDistribution::new(points, Array1::from(weights.to_vec()))
}

/// `n` equal weights `1/n`.
pub fn uniform_weights(n: usize) -> Result<Array1<f64>> {
    if n == 0 {
        return Err(OtError::Empty("uniform weight vector"));
    }
    Ok(Array1::from_elem(n, 1.0 / n as f64))
}

/// Checks simplex membership (within tolerance) and renormalizes.
pub(crate) fn normalize_simplex(w: ArrayView1<'_, f64>, context: &'static str) -> Result<Array1<f64>> {
    if w.is_empty() {
        return Err(OtError::Empty(context));
    }
    for (index, &value) in w.iter().enumerate() {
        if !value.is_finite() {
            return Err(OtError::NonFinite(context));
        }
        if value < 0.0 {
            return Err(OtError::Negative { value, index, context });
        }
    }
    let sum = w.sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(OtError::WeightSum {
            sum,
            tolerance: WEIGHT_SUM_TOLERANCE,
        });
    }
    Ok(w.mapv(|x| x / sum))
}

/// Pairwise transport costs together with the cost function that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
    kind: CostKind,
    zero_norm_pairs: usize,
}

impl CostMatrix {
    pub fn new(values: Array2<f64>, kind: CostKind) -> Result<Self> {
        if values.is_empty() {
            return Err(OtError::Empty("cost matrix"));
        }
        for ((row, col), &value) in values.indexed_iter() {
            if !value.is_finite() {
                return Err(OtError::NonFinite("cost matrix"));
            }
            if value < 0.0 {
                return Err(OtError::Negative {
                    value,
                    index: row * values.ncols() + col,
                    context: "cost matrix",
                });
            }
            if kind == CostKind::Cosine && value > 2.0 {
                return Err(OtError::CosineRange { value, row, col });
            }
        }
        Ok(Self {
            values,
            kind,
            zero_norm_pairs: 0,
        })
    }

    pub(crate) fn set_zero_norm_pairs(&mut self, count: usize) {
        self.zero_norm_pairs = count;
    }

    /// Number of cosine pairs that used the zero-norm fallback cost.
    pub fn zero_norm_pairs(&self) -> usize {
        self.zero_norm_pairs
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.t().to_owned(),
            kind: self.kind,
            zero_norm_pairs: self.zero_norm_pairs,
        }
    }

    /// `<T, C> = Tr(T^T C)`.
    pub fn frobenius_dot(&self, plan: ArrayView2<'_, f64>) -> f64 {
        self.values
            .iter()
            .zip(plan.iter())
            .map(|(c, t)| c * t)
            .sum()
    }
}

/// A coupling together with the marginals it is meant to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    matrix: Array2<f64>,
    row_marginal: Array1<f64>,
    col_marginal: Array1<f64>,
}

impl TransportPlan {
    /// Wraps a plan matrix. Entries in `[-1e-12, 0)` are clamped to zero;
    /// anything more negative or non-finite is rejected.
    pub fn new(mut matrix: Array2<f64>, row_marginal: Array1<f64>, col_marginal: Array1<f64>) -> Result<Self> {
        let (n, m) = matrix.dim();
        if row_marginal.len() != n || col_marginal.len() != m {
            return Err(OtError::ShapeMismatch {
                rows: n,
                cols: m,
                u_len: row_marginal.len(),
                v_len: col_marginal.len(),
            });
        }
        for (index, x) in matrix.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(OtError::NonFinite("transport plan"));
            }
            if *x < 0.0 {
                if *x < NEGATIVE_CLAMP {
                    return Err(OtError::Negative {
                        value: *x,
                        index,
                        context: "transport plan",
                    });
                }
                *x = 0.0;
            }
        }
        Ok(Self {
            matrix,
            row_marginal,
            col_marginal,
        })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn row_marginal(&self) -> ArrayView1<'_, f64> {
        self.row_marginal.view()
    }

    pub fn col_marginal(&self) -> ArrayView1<'_, f64> {
        self.col_marginal.view()
    }

    pub fn row_sums(&self) -> Array1<f64> {
        self.matrix.sum_axis(Axis(1))
    }

    pub fn col_sums(&self) -> Array1<f64> {
        self.matrix.sum_axis(Axis(0))
    }

    pub fn dim(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }
}

/// Solver hyperparameters.
///
/// `beta` is the IPOT proximal weight (`1/beta` is the step size),
/// `inner_k` the number of inner scaling sweeps per proximal step, and
/// `epsilon` the Sinkhorn regularization strength in the `-(1/epsilon) H(T)`
/// convention: larger `epsilon` means weaker regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub beta: f64,
    pub outer_iters: usize,
    pub inner_k: usize,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            outer_iters: 2000,
            inner_k: 1,
            epsilon: 10.0,
            tolerance: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(OtError::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                })
            }
        };
        positive("beta", self.beta)?;
        positive("epsilon", self.epsilon)?;
        positive("tolerance", self.tolerance)?;
        if self.outer_iters == 0 {
            return Err(OtError::InvalidParameter {
                name: "outer_iters",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.inner_k == 0 {
            return Err(OtError::InvalidParameter {
                name: "inner_k",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    /// Plan change fell below tolerance with feasible marginals.
    Ok,
    /// Iteration budget exhausted; the last iterate is returned.
    MaxIters,
    /// An intermediate quantity over/underflowed; no plan or distance is exposed.
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Ok => "ok",
            SolverStatus::MaxIters => "max_iters",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The part of a report that only exists when the solver produced finite output.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// `<T, C>` for the returned plan.
    pub distance: f64,
    pub plan: TransportPlan,
    /// Infinity norm of the marginal violation of `plan`.
    pub marginal_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub status: SolverStatus,
    pub iterations_used: usize,
    pub converged: bool,
    /// `None` exactly when `status` is [`SolverStatus::NumericalFailure`].
    pub solution: Option<Solution>,
}

impl SolverReport {
    pub(crate) fn failure(iterations_used: usize) -> Self {
        Self {
            status: SolverStatus::NumericalFailure,
            iterations_used,
            converged: false,
            solution: None,
        }
    }

    pub fn distance(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.distance)
    }

    pub fn plan(&self) -> Option<&TransportPlan> {
        self.solution.as_ref().map(|s| &s.plan)
    }

    pub fn marginal_residual(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.marginal_residual)
    }

    /// Turns a numerical failure into an error, keeping any finite solution.
    pub fn into_solution(self) -> Result<Solution> {
        let status = self.status;
        let iterations = self.iterations_used;
        self.solution.ok_or_else(|| {
            OtError::SolverFailure(format!("{status} after {iterations} iterations"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn singleton_distribution() {
        let d = validate_distribution(&[vec![1.0, 0.0]], &[1.0]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn uniform_pair_distribution() {
        let d = validate_distribution(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.5, 0.5]).unwrap();
        assert_eq!(d.weights(), array![0.5, 0.5].view());
    }

    #[test]
    fn rejects_bad_weight_sum() {
        let err = validate_distribution(&[vec![1.0, 0.0]], &[0.5]).unwrap_err();
        assert!(matches!(err, OtError::WeightSum { .. }));
    }

    #[test]
    fn renormalizes_small_deviation() {
        let d = validate_distribution(&[vec![0.0], vec![1.0]], &[0.5, 0.5 + 5e-7]).unwrap();
        assert!((d.weights().sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_distributions() {
        assert!(matches!(
            validate_distribution(&[], &[]),
            Err(OtError::Empty(_))
        ));
        assert!(matches!(
            validate_distribution(&[vec![1.0], vec![1.0, 2.0]], &[0.5, 0.5]),
            Err(OtError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            validate_distribution(&[vec![1.0], vec![2.0]], &[1.5, -0.5]),
            Err(OtError::Negative { .. })
        ));
        assert!(matches!(
            validate_distribution(&[vec![f64::NAN]], &[1.0]),
            Err(OtError::NonFinite(_))
        ));
        assert!(matches!(
            validate_distribution(&[vec![1.0]], &[0.5, 0.5]),
            Err(OtError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_weight_vectors() {
        assert_eq!(uniform_weights(1).unwrap(), array![1.0]);
        assert_eq!(uniform_weights(4).unwrap(), array![0.25, 0.25, 0.25, 0.25]);
        let third = uniform_weights(3).unwrap();
        assert!((third.sum() - 1.0).abs() <= 1e-12);
        assert!(uniform_weights(0).is_err());
    }

    #[test]
    fn cost_matrix_invariants() {
        assert!(CostMatrix::new(array![[0.0, 1.0]], CostKind::Cosine).is_ok());
        assert!(CostMatrix::new(array![[2.5]], CostKind::Cosine).is_err());
        assert!(CostMatrix::new(array![[2.5]], CostKind::SquaredEuclidean).is_ok());
        assert!(CostMatrix::new(array![[-0.1]], CostKind::Euclidean).is_err());
        assert!(CostMatrix::new(array![[f64::INFINITY]], CostKind::Euclidean).is_err());
    }

    #[test]
    fn plan_clamps_rounding_noise() {
        let plan = TransportPlan::new(array![[1.0, -1e-13]], array![1.0], array![1.0, 0.0]).unwrap();
        assert_eq!(plan.matrix()[[0, 1]], 0.0);
        assert!(TransportPlan::new(array![[1.0, -1e-6]], array![1.0], array![1.0, 0.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            beta: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            inner_k: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
