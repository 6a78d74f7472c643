use super::EmbeddedSequence;
use crate::cost::{build_cost_matrix, CostKind};
use crate::error::{OtError, Result};
use crate::solvers::ipot_solve;
use crate::transport::{uniform_weights, SolverConfig, SolverReport, TransportPlan};

/// Weights of the OT terms in the training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weight of the generated-vs-reference term.
    pub gamma_seq: f64,
    /// Weight of the generated-vs-source term.
    pub gamma_copy: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            gamma_seq: 0.1,
            gamma_copy: 0.1,
        }
    }
}

impl LossWeights {
    pub fn new(gamma_seq: f64, gamma_copy: f64) -> Result<Self> {
        for (name, value) in [("gamma_seq", gamma_seq), ("gamma_copy", gamma_copy)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(OtError::InvalidParameter {
                    name,
                    value,
                    reason: "loss weights must be finite and non-negative",
                });
            }
        }
        Ok(Self { gamma_seq, gamma_copy })
    }
}

/// Runs IPOT between two embedded sequences with uniform marginals and
/// returns the full report (including non-converged or failed runs).
pub fn seq_ot_report(
    generated: &EmbeddedSequence,
    reference: &EmbeddedSequence,
    kind: CostKind,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let cost = build_cost_matrix(generated.matrix(), reference.matrix(), kind)?;
    let u = uniform_weights(generated.len())?;
    let v = uniform_weights(reference.len())?;
    ipot_solve(&cost, u.view(), v.view(), cfg)
}

/// Sequence-level OT loss between generated and reference embeddings.
pub fn seq_ot_loss(
    generated: &EmbeddedSequence,
    reference: &EmbeddedSequence,
    kind: CostKind,
    cfg: &SolverConfig,
) -> Result<(f64, TransportPlan)> {
    let solution = seq_ot_report(generated, reference, kind, cfg)?.into_solution()?;
    Ok((solution.distance, solution.plan))
}

/// OT copy loss: the same transport loss taken against the source sequence,
/// which must live in the same embedding space.
pub fn copy_ot_loss(
    generated: &EmbeddedSequence,
    source: &EmbeddedSequence,
    kind: CostKind,
    cfg: &SolverConfig,
) -> Result<(f64, TransportPlan)> {
    seq_ot_loss(generated, source, kind, cfg)
}

/// `mle + gamma_copy * copy + gamma_seq * seq`.
pub fn combined_loss(mle: f64, seq: f64, copy: f64, weights: &LossWeights) -> Result<f64> {
    if !(mle.is_finite() && seq.is_finite() && copy.is_finite()) {
        return Err(OtError::NonFinite("loss terms"));
    }
    Ok(mle + weights.gamma_copy * copy + weights.gamma_seq * seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn seq(m: Array2<f64>) -> EmbeddedSequence {
        EmbeddedSequence::new(m).unwrap()
    }

    #[test]
    fn identical_sequences_have_zero_loss() {
        let s = seq(array![[1.0, 0.2, 0.0], [0.0, 1.0, 0.5], [0.3, -0.4, 1.0]]);
        for kind in [CostKind::Cosine, CostKind::SquaredEuclidean] {
            let (loss, _) = seq_ot_loss(&s, &s, kind, &SolverConfig::default()).unwrap();
            assert!(loss <= 1e-6, "{kind}: {loss}");
            let (copy, _) = copy_ot_loss(&s, &s, kind, &SolverConfig::default()).unwrap();
            assert!(copy <= 1e-6);
        }
    }

    #[test]
    fn single_tokens_are_forced() {
        let x = seq(array![[1.0, 2.0]]);
        let y = seq(array![[-0.5, 3.0]]);
        let (loss, plan) = seq_ot_loss(&x, &y, CostKind::SquaredEuclidean, &SolverConfig::default()).unwrap();
        assert_eq!(loss, 1.5 * 1.5 + 1.0);
        assert_eq!(plan.matrix(), array![[1.0]].view());
    }

    #[test]
    fn copy_loss_is_seq_loss() {
        let g = seq(array![[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]);
        let s = seq(array![[0.2, 0.9], [1.0, 0.1]]);
        let cfg = SolverConfig::default();
        let a = seq_ot_loss(&g, &s, CostKind::Cosine, &cfg).unwrap();
        let b = copy_ot_loss(&g, &s, CostKind::Cosine, &cfg).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn copy_loss_requires_shared_space() {
        let g = seq(array![[1.0, 0.0]]);
        let s = seq(array![[1.0, 0.0, 0.0]]);
        assert!(matches!(
            copy_ot_loss(&g, &s, CostKind::Cosine, &SolverConfig::default()),
            Err(OtError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn combined_loss_arithmetic() {
        let zero = LossWeights::new(0.0, 0.0).unwrap();
        assert_eq!(combined_loss(2.5, 7.0, 3.0, &zero).unwrap(), 2.5);
        let ones = LossWeights::new(1.0, 1.0).unwrap();
        assert!((combined_loss(1.0, 0.5, 0.2, &ones).unwrap() - 1.7).abs() < 1e-15);
        assert_eq!(LossWeights::default().gamma_seq, 0.1);
        assert!(combined_loss(f64::NAN, 0.0, 0.0, &ones).is_err());
        assert!(LossWeights::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn combined_loss_is_linear() {
        let w = LossWeights::new(0.3, 0.7).unwrap();
        let f = |a: f64, b: f64, c: f64| combined_loss(a, b, c, &w).unwrap();
        let (x, y) = ((1.0, 2.0, 3.0), (0.5, -1.0, 4.0));
        let sum = f(x.0 + y.0, x.1 + y.1, x.2 + y.2);
        assert!((sum - (f(x.0, x.1, x.2) + f(y.0, y.1, y.2))).abs() < 1e-12);
        assert!((f(3.0 * x.0, 3.0 * x.1, 3.0 * x.2) - 3.0 * f(x.0, x.1, x.2)).abs() < 1e-12);
    }
}
