use ndarray::{Array1, ArrayView1};
use rand::Rng;

use super::EmbeddingTable;
use crate::error::{OtError, Result};

/// Default soft-argmax temperature: a mild sharpening of the plain softmax.
pub const DEFAULT_TAU: f64 = 0.9;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A probability vector over the vocabulary (the model belief at one step).
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    probs: Array1<f64>,
}

impl BeliefVector {
    pub fn new(probs: Array1<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(OtError::Empty("belief vector"));
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(OtError::NonFinite("belief vector"));
            }
            if value < 0.0 {
                return Err(OtError::Negative {
                    value,
                    index,
                    context: "belief vector",
                });
            }
        }
        let sum = probs.sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(OtError::WeightSum {
                sum,
                tolerance: SIMPLEX_TOLERANCE,
            });
        }
        Ok(Self { probs })
    }

    /// One-hot belief on `index`.
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(OtError::DimensionMismatch {
                expected: len,
                found: index,
                context: "one-hot index",
            });
        }
        let mut probs = Array1::zeros(len);
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> ArrayView1<'_, f64> {
        self.probs.view()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(OtError::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "temperature must be positive and finite",
        })
    }
}

/// `softmax(logits / tau)`, max-subtracted.
pub fn soft_argmax(logits: ArrayView1<'_, f64>, tau: f64) -> Result<BeliefVector> {
    check_tau(tau)?;
    if logits.is_empty() {
        return Err(OtError::Empty("logits"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(OtError::NonFinite("logits"));
    }
    let scaled = logits.mapv(|x| x / tau);
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = scaled.mapv(|x| (x - max).exp());
    let total = exp.sum();
    Ok(BeliefVector { probs: exp / total })
}

/// Standard Gumbel draws `-log(-log U)`, `U ~ Uniform(0, 1)`.
pub fn gumbel_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Array1<f64> {
    Array1::from_shape_fn(len, |_| {
        let mut u: f64 = rng.random();
        while u <= 0.0 {
            u = rng.random();
        }
        -(-u.ln()).ln()
    })
}

/// `softmax((logits + noise) / tau)` with caller-supplied noise.
pub fn gumbel_softmax_with_noise(logits: ArrayView1<'_, f64>, tau: f64, noise: ArrayView1<'_, f64>) -> Result<BeliefVector> {
    if noise.len() != logits.len() {
        return Err(OtError::DimensionMismatch {
            expected: logits.len(),
            found: noise.len(),
            context: "gumbel noise length",
        });
    }
    soft_argmax((&logits + &noise).view(), tau)
}

/// Gumbel-softmax (Concrete) relaxation with noise drawn from `rng`.
pub fn gumbel_softmax<R: Rng + ?Sized>(logits: ArrayView1<'_, f64>, tau: f64, rng: &mut R) -> Result<BeliefVector> {
    check_tau(tau)?;
    let noise = gumbel_noise(logits.len(), rng);
    gumbel_softmax_with_noise(logits, tau, noise.view())
}

/// Mean embedding under a belief: `E^T w`.
pub fn embed_belief(belief: &BeliefVector, table: &EmbeddingTable) -> Result<Array1<f64>> {
    if belief.len() != table.vocab_size() {
        return Err(OtError::DimensionMismatch {
            expected: table.vocab_size(),
            found: belief.len(),
            context: "belief length vs vocabulary size",
        });
    }
    Ok(table.vectors().t().dot(&belief.probs))
}
