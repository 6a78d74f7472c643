use ndarray::{Array1, Array2, ArrayView2};

use super::encode::soft_argmax;
use super::loss::seq_ot_loss;
use super::{EmbeddedSequence, EmbeddingTable};
use crate::cost::{pair_cost_gradient, CostKind};
use crate::error::{OtError, Result};
use crate::transport::SolverConfig;

/// Where a consumer lets the OT gradient flow.
///
/// The gradient matrix is the same in both cases; the tag tells a training
/// loop whether to push it past the embedding table into the sequence model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientPath {
    /// Back through the embeddings into the model parameters.
    #[default]
    Full,
    /// Stop at the embedding table.
    EmbeddingOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGradient {
    /// `L_g x d` gradient of the loss with respect to the generated rows.
    pub matrix: Array2<f64>,
    pub path: GradientPath,
    /// Rows that touched a non-differentiable point (zero-norm cosine input or
    /// coincident euclidean pair); their offending terms contribute zero.
    pub flagged_rows: Vec<usize>,
}

/// Gradient of the sequence OT loss with respect to the generated embeddings.
///
/// Uses the envelope form: with the optimal plan `T*` held fixed,
/// `grad_i = sum_j T*_ij * d c(g_i, r_j) / d g_i`. The coupling polytope does
/// not depend on the embeddings, so this is the derivative of the optimal
/// value wherever the optimum is unique.
pub fn ot_grad_embeddings(
    generated: &EmbeddedSequence,
    reference: &EmbeddedSequence,
    kind: CostKind,
    cfg: &SolverConfig,
    path: GradientPath,
) -> Result<EmbeddingGradient> {
    let (_, plan) = seq_ot_loss(generated, reference, kind, cfg)?;
    let plan = plan.matrix();
    let (rows, d) = (generated.len(), generated.dim());
    let mut matrix = Array2::zeros((rows, d));
    let mut flagged_rows = Vec::new();
    for (i, g) in generated.matrix().outer_iter().enumerate() {
        let mut flagged = false;
        let mut acc = Array1::<f64>::zeros(d);
        for (j, r) in reference.matrix().outer_iter().enumerate() {
            let weight = plan[[i, j]];
            if weight == 0.0 {
                continue;
            }
            let (grad, nondiff) = pair_cost_gradient(kind, g, r)?;
            flagged |= nondiff;
            acc.scaled_add(weight, &grad);
        }
        if flagged {
            flagged_rows.push(i);
        }
        matrix.row_mut(i).assign(&acc);
    }
    Ok(EmbeddingGradient {
        matrix,
        path,
        flagged_rows,
    })
}

/// Gradient of the sequence OT loss with respect to per-step logits, when the
/// generated sequence is `S_g = {E^T softmax(v_t / tau)}`.
///
/// Chains [`ot_grad_embeddings`] through `dz/dw = E^T` and the softmax
/// Jacobian `(diag(w) - w w^T) / tau`. Returns an `L_g x V` matrix.
pub fn ot_grad_logits(
    logits: ArrayView2<'_, f64>,
    tau: f64,
    table: &EmbeddingTable,
    reference: &EmbeddedSequence,
    kind: CostKind,
    cfg: &SolverConfig,
) -> Result<Array2<f64>> {
    let (steps, vocab) = logits.dim();
    if vocab != table.vocab_size() {
        return Err(OtError::DimensionMismatch {
            expected: table.vocab_size(),
            found: vocab,
            context: "logit width vs vocabulary size",
        });
    }
    let beliefs = logits
        .outer_iter()
        .map(|row| soft_argmax(row, tau))
        .collect::<Result<Vec<_>>>()?;
    let mut generated = Array2::zeros((steps, table.dim()));
    for (t, belief) in beliefs.iter().enumerate() {
        generated.row_mut(t).assign(&table.vectors().t().dot(&belief.probs()));
    }
    let generated = EmbeddedSequence::new(generated)?;
    let grad_z = ot_grad_embeddings(&generated, reference, kind, cfg, GradientPath::Full)?;

    let mut out = Array2::zeros((steps, vocab));
    for (t, belief) in beliefs.iter().enumerate() {
        let w = belief.probs();
        let grad_w = table.vectors().dot(&grad_z.matrix.row(t));
        let mean = w.dot(&grad_w);
        let grad_v = (&grad_w - mean) * w / tau;
        out.row_mut(t).assign(&grad_v);
    }
    Ok(out)
}
