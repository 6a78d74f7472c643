//! Library behind the `seqot` command: embedding and corpus readers, BLEU,
//! corpus scoring with OT distances, the loss-weight sweep, and the flow and
//! matching demonstrations.

pub mod bleu;
pub mod config;
pub mod demo;
pub mod error;
pub mod input;
pub mod score;
pub mod sweep;

pub use bleu::{bleu_n, corpus_bleu};
pub use config::{Overrides, Settings, SolverKind};
pub use error::{CliError, Result};
pub use input::{load_embeddings, tokenize};
pub use score::{score_corpus, score_files, score_pair, Corpus, CorpusScores, RecordStatus, ScoreRecord, Summary};
pub use sweep::gamma_sweep;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT_ERROR: i32 = 1;
    pub const SOLVER_FAILURES: i32 = 2;
}
