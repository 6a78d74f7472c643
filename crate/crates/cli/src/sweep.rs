//! Loss-weight sweep over precomputed per-example losses.

use std::fmt::Write as _;

use seqot::embed::{combined_loss, LossWeights};

use crate::error::{CliError, Result};

pub const SWEEP_HEADER: &str = "seqot-sweep v1";

/// Default grid of sequence-loss weights.
pub const DEFAULT_GAMMAS: [f64; 6] = [0.0, 0.01, 0.05, 0.1, 0.5, 1.0];

/// For each `gamma`, the mean over examples of `mle_i + gamma * seq_i`.
pub fn gamma_sweep(seq_losses: &[f64], mle_losses: &[f64], gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if seq_losses.is_empty() || mle_losses.is_empty() || gammas.is_empty() {
        return Err(CliError::Input("gamma sweep needs non-empty loss and gamma lists".into()));
    }
    if seq_losses.len() != mle_losses.len() {
        return Err(CliError::Input(format!(
            "gamma sweep: {} sequence losses but {} MLE losses",
            seq_losses.len(),
            mle_losses.len()
        )));
    }
    gammas
        .iter()
        .map(|&gamma| {
            let weights = LossWeights::new(gamma, 0.0)?;
            let total = seq_losses
                .iter()
                .zip(mle_losses)
                .map(|(&seq, &mle)| combined_loss(mle, seq, 0.0, &weights))
                .sum::<seqot::Result<f64>>()?;
            Ok((gamma, total / seq_losses.len() as f64))
        })
        .collect()
}

pub fn render_sweep(rows: &[(f64, f64)]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for (gamma, loss) in rows {
        writeln!(out, "{gamma}\t{loss:.8}").unwrap();
    }
    out
}

/// One number per non-blank line.
pub fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{what} line {}: cannot parse {:?}", i + 1, l.trim())))
        })
        .collect()
}
