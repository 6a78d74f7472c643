//! Sentence and corpus BLEU.
//!
//! Sentence BLEU is the geometric mean of clipped n-gram precisions times the
//! brevity penalty `exp(min(0, 1 - r/c))`, where `r` is the reference length
//! closest to the hypothesis length. Orders longer than the hypothesis are
//! left out of the mean, and zero precisions at other orders are smoothed by
//! adding [`SMOOTHING`] to the match count. With no unigram match at all the
//! score is exactly 0.
//!
//! Corpus BLEU sums clipped counts over all segments and applies no smoothing;
//! an order with a zero corpus-level match count gives 0.

use std::collections::HashMap;

pub const SMOOTHING: f64 = 1e-9;

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// `(clipped matches, hypothesis n-grams)` for order `n`.
fn clipped<S: AsRef<str>>(hypothesis: &[S], references: &[Vec<S>], n: usize) -> (usize, usize) {
    let hyp = ngram_counts(hypothesis, n);
    let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
    for reference in references {
        for (gram, count) in ngram_counts(reference, n) {
            let slot = max_ref.entry(gram).or_insert(0);
            *slot = (*slot).max(count);
        }
    }
    let matches = hyp.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
    (matches, hypothesis.len().saturating_sub(n - 1))
}

fn closest_ref_len<S>(hyp_len: usize, references: &[Vec<S>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        return 0.0;
    }
    (1.0 - r as f64 / c as f64).min(0.0).exp()
}

/// Sentence-level BLEU-`max_n` against one or more references.
///
/// # Panics
///
/// If `max_n == 0` or `references` is empty.
pub fn bleu_n<S: AsRef<str>>(hypothesis: &[S], references: &[Vec<S>], max_n: usize) -> f64 {
    assert!(max_n >= 1, "BLEU order must be at least 1");
    assert!(!references.is_empty(), "BLEU needs at least one reference");
    let c = hypothesis.len();
    if c == 0 {
        return 0.0;
    }
    let orders = max_n.min(c);
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let (matches, total) = clipped(hypothesis, references, n);
        if matches == 0 {
            if n == 1 {
                return 0.0;
            }
            log_sum += (SMOOTHING / total as f64).ln();
        } else {
            log_sum += (matches as f64 / total as f64).ln();
        }
    }
    let score = brevity_penalty(c, closest_ref_len(c, references)) * (log_sum / orders as f64).exp();
    score.clamp(0.0, 1.0)
}

/// Corpus-level BLEU-`max_n` over aligned `(hypothesis, references)` segments.
pub fn corpus_bleu<S: AsRef<str>>(segments: &[(Vec<S>, Vec<Vec<S>>)], max_n: usize) -> f64 {
    assert!(max_n >= 1, "BLEU order must be at least 1");
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut c, mut r) = (0, 0);
    for (hypothesis, references) in segments {
        c += hypothesis.len();
        r += closest_ref_len(hypothesis.len(), references);
        for n in 1..=max_n {
            let (m, t) = clipped(hypothesis, references, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    // Orders with no hypothesis n-gram anywhere in the corpus are left out,
    // as at sentence level.
    let orders: Vec<(usize, usize)> = matches.into_iter().zip(totals).filter(|&(_, t)| t > 0).collect();
    if orders.is_empty() || orders.iter().any(|&(m, _)| m == 0) {
        return 0.0;
    }
    let log_mean = orders.iter().map(|&(m, t)| (m as f64 / t as f64).ln()).sum::<f64>() / orders.len() as f64;
    (brevity_penalty(c, r) * log_mean.exp()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_sentence_scores_one() {
        let s = toks("the quick brown fox jumps");
        for n in 1..=4 {
            assert_eq!(bleu_n(&s, std::slice::from_ref(&s), n), 1.0);
        }
        // Shorter than the order: the missing orders are left out.
        let short = toks("hello there");
        assert_eq!(bleu_n(&short, std::slice::from_ref(&short), 4), 1.0);
    }

    #[test]
    fn brevity_fixture() {
        let hyp = toks("the cat sat");
        let reference = toks("the cat sat down");
        let expected = (1.0f64 - 4.0 / 3.0).exp();
        let got = bleu_n(&hyp, &[reference], 2);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.7165).abs() < 1e-4);
    }

    #[test]
    fn degenerate_cases() {
        let empty: Vec<&str> = vec![];
        assert_eq!(bleu_n(&empty, &[toks("a b")], 4), 0.0);
        assert_eq!(bleu_n(&toks("x y z"), &[toks("a b c")], 4), 0.0);
    }

    #[test]
    fn clipping_limits_repeats() {
        // "the the the" vs "the cat": one clipped unigram out of three.
        let got = bleu_n(&toks("the the the"), &[toks("the cat")], 1);
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_higher_order_is_smoothed() {
        let got = bleu_n(&toks("a b c d"), &[toks("d c b a")], 2);
        assert!(got > 0.0 && got < 1e-4);
    }

    #[test]
    fn multiple_references_take_the_best_counts() {
        let hyp = toks("a b");
        let single = bleu_n(&hyp, &[toks("a c")], 1);
        let both = bleu_n(&hyp, &[toks("a c"), toks("c b")], 1);
        assert!(both > single);
        assert_eq!(both, 1.0);
    }

    #[test]
    fn corpus_level() {
        let seg = |h: &'static str, r: &'static str| (toks(h), vec![toks(r)]);
        let same = vec![seg("a b c d", "a b c d"), seg("e f g", "e f g")];
        assert_eq!(corpus_bleu(&same, 4), 1.0);
        let short = vec![seg("a b c", "a b c"), seg("d e", "d e")];
        assert_eq!(corpus_bleu(&short, 4), 1.0);
        let disjoint = vec![seg("a b", "c d")];
        assert_eq!(corpus_bleu(&disjoint, 2), 0.0);
        let brief = vec![seg("the cat sat", "the cat sat down")];
        assert!((corpus_bleu(&brief, 2) - (1.0f64 - 4.0 / 3.0).exp()).abs() < 1e-12);
    }
}
