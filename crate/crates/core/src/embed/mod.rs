//! Embedding tables, belief encodings, OT losses and their gradients.

mod encode;
mod grad;
mod loss;

pub use encode::{
    embed_belief, gumbel_noise, gumbel_softmax, gumbel_softmax_with_noise, soft_argmax, BeliefVector, DEFAULT_TAU,
};
pub use grad::{ot_grad_embeddings, ot_grad_logits, EmbeddingGradient, GradientPath};
pub use loss::{combined_loss, copy_ot_loss, seq_ot_loss, seq_ot_report, LossWeights};

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{OtError, Result};

/// Conventional name of the unknown-token row.
pub const UNK_TOKEN: &str = "UNK";

/// A vocabulary with one `d`-dimensional vector per token (the `V x d` matrix `E`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
}

impl EmbeddingTable {
    pub fn new(tokens: Vec<String>, vectors: Array2<f64>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(OtError::Empty("embedding vocabulary"));
        }
        if vectors.ncols() == 0 {
            return Err(OtError::Empty("embedding dimension"));
        }
        if tokens.len() != vectors.nrows() {
            return Err(OtError::DimensionMismatch {
                expected: tokens.len(),
                found: vectors.nrows(),
                context: "embedding rows vs vocabulary size",
            });
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite("embedding table"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), i).is_some() {
                return Err(OtError::DuplicateToken(token.clone()));
            }
        }
        Ok(Self { tokens, index, vectors })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn get(&self, token: &str) -> Option<ArrayView1<'_, f64>> {
        self.index_of(token).map(|i| self.vectors.row(i))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

/// What to do with tokens missing from the embedding table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OovPolicy {
    /// Drop the token.
    Skip,
    /// Substitute the row of the named token.
    Unk(String),
    /// Fail.
    Error,
}

impl OovPolicy {
    /// `Unk("UNK")` if the table has an `UNK` row, otherwise `Skip`.
    pub fn default_for(table: &EmbeddingTable) -> Self {
        if table.contains(UNK_TOKEN) {
            OovPolicy::Unk(UNK_TOKEN.to_string())
        } else {
            OovPolicy::Skip
        }
    }
}

/// An `L x d` matrix of token embeddings, `L >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSequence {
    matrix: Array2<f64>,
}

impl EmbeddedSequence {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() == 0 {
            return Err(OtError::Empty("embedded sequence"));
        }
        if matrix.ncols() == 0 {
            return Err(OtError::Empty("embedding dimension"));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(OtError::NonFinite("embedded sequence"));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Looks up every token (rows of `S_r = {E^T w_t}`), resolving unknown tokens
/// per `policy`.
pub fn embed_tokens<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable, policy: &OovPolicy) -> Result<EmbeddedSequence> {
    if tokens.is_empty() {
        return Err(OtError::Empty("token sequence"));
    }
    let mut rows = Vec::with_capacity(tokens.len());
    for token in tokens {
        let token = token.as_ref();
        match (table.index_of(token), policy) {
            (Some(i), _) => rows.push(i),
            (None, OovPolicy::Skip) => {}
            (None, OovPolicy::Unk(unk)) => {
                rows.push(table.index_of(unk).ok_or_else(|| OtError::MissingUnk(unk.clone()))?)
            }
            (None, OovPolicy::Error) => return Err(OtError::OutOfVocabulary(token.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(OtError::Empty("token sequence after out-of-vocabulary handling"));
    }
    let matrix = Array2::from_shape_fn((rows.len(), table.dim()), |(t, k)| table.vectors[[rows[t], k]]);
    EmbeddedSequence::new(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn table() -> EmbeddingTable {
        EmbeddingTable::new(
            vec!["a".into(), "b".into(), "UNK".into()],
            array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
        )
        .unwrap()
    }

    #[test]
    fn in_vocabulary_lookup() {
        let s = embed_tokens(&["b", "a"], &table(), &OovPolicy::Error).unwrap();
        assert_eq!(s.matrix(), array![[0.0, 1.0], [1.0, 0.0]].view());
    }

    #[test]
    fn oov_policies() {
        let t = table();
        let skipped = embed_tokens(&["a", "zzz", "b"], &t, &OovPolicy::Skip).unwrap();
        assert_eq!(skipped.len(), 2);
        let unk = embed_tokens(&["a", "zzz"], &t, &OovPolicy::Unk("UNK".into())).unwrap();
        assert_eq!(unk.matrix().row(1), array![0.5, 0.5].view());
        assert!(matches!(
            embed_tokens(&["zzz"], &t, &OovPolicy::Error),
            Err(OtError::OutOfVocabulary(_))
        ));
        assert!(matches!(
            embed_tokens(&["zzz"], &t, &OovPolicy::Unk("<unk>".into())),
            Err(OtError::MissingUnk(_))
        ));
        assert!(embed_tokens::<&str>(&[], &t, &OovPolicy::Skip).is_err());
        assert!(embed_tokens(&["zzz"], &t, &OovPolicy::Skip).is_err());
    }

    #[test]
    fn default_policy_depends_on_unk_row() {
        assert_eq!(OovPolicy::default_for(&table()), OovPolicy::Unk("UNK".into()));
        let plain = EmbeddingTable::new(vec!["a".into()], array![[1.0]]).unwrap();
        assert_eq!(OovPolicy::default_for(&plain), OovPolicy::Skip);
    }

    #[test]
    fn table_rejects_duplicates_and_bad_shapes() {
        assert!(matches!(
            EmbeddingTable::new(vec!["a".into(), "a".into()], array![[1.0], [2.0]]),
            Err(OtError::DuplicateToken(_))
        ));
        assert!(EmbeddingTable::new(vec!["a".into()], array![[1.0], [2.0]]).is_err());
        assert!(EmbeddingTable::new(vec!["a".into()], array![[f64::NAN]]).is_err());
    }
}
