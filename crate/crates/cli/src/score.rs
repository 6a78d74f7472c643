//! Per-pair and corpus scoring.

use std::fmt::{self, Write as _};
use std::path::Path;

use rayon::prelude::*;
use seqot::embed::{combined_loss, embed_tokens, EmbeddedSequence, EmbeddingTable, OovPolicy};
use seqot::matching::hard_match;
use seqot::{build_cost_matrix, ipot_solve, sinkhorn_solve, uniform_weights, OtError, SolverReport, SolverStatus, TransportPlan};

use crate::bleu::{bleu_n, corpus_bleu};
use crate::config::{Settings, SolverKind};
use crate::error::{CliError, Result};
use crate::input::{load_embeddings, read_lines, tokenize};

pub const RECORDS_HEADER: &str = "seqot-records v1";
pub const PLANS_HEADER: &str = "seqot-plans v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecordStatus {
    Ok,
    MaxIters,
    /// A sequence had no embeddable tokens; no OT value was computed.
    Degenerate,
    NumericalFailure,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::MaxIters => "max_iters",
            RecordStatus::Degenerate => "degenerate",
            RecordStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl From<SolverStatus> for RecordStatus {
    fn from(s: SolverStatus) -> Self {
        match s {
            SolverStatus::Ok => RecordStatus::Ok,
            SolverStatus::MaxIters => RecordStatus::MaxIters,
            SolverStatus::NumericalFailure => RecordStatus::NumericalFailure,
        }
    }
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub pair_id: usize,
    pub ot_seq: Option<f64>,
    pub ot_copy: Option<f64>,
    /// BLEU-1 through BLEU-4.
    pub bleu: [f64; 4],
    pub hard_match: usize,
    pub len_hyp: usize,
    pub len_ref: usize,
    pub len_src: Option<usize>,
    pub status: RecordStatus,
}

impl ScoreRecord {
    /// One tab-separated line, without the newline.
    pub fn to_line(&self) -> String {
        fn opt<T: fmt::Display>(x: Option<T>) -> String {
            x.map_or_else(|| "-".to_owned(), |v| v.to_string())
        }
        let real = |x: Option<f64>| opt(x.map(|v| format!("{v:.8}")));
        let mut line = format!("{}\t{}\t{}", self.pair_id, real(self.ot_seq), real(self.ot_copy));
        for b in self.bleu {
            write!(line, "\t{b:.8}").unwrap();
        }
        write!(
            line,
            "\t{}\t{}\t{}\t{}\t{}",
            self.hard_match,
            self.len_hyp,
            self.len_ref,
            opt(self.len_src),
            self.status
        )
        .unwrap();
        line
    }
}

/// Transport plans behind a record, kept only when plan dumping is on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairPlans {
    pub seq: Option<TransportPlan>,
    pub copy: Option<TransportPlan>,
}

fn embed(tokens: &[String], table: &EmbeddingTable, policy: &OovPolicy) -> Result<Option<EmbeddedSequence>> {
    match embed_tokens(tokens, table, policy) {
        Ok(seq) => Ok(Some(seq)),
        Err(OtError::Empty(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn solve(a: &EmbeddedSequence, b: &EmbeddedSequence, settings: &Settings) -> Result<SolverReport> {
    let cost = build_cost_matrix(a.matrix(), b.matrix(), settings.cost)?;
    let u = uniform_weights(a.len())?;
    let v = uniform_weights(b.len())?;
    let cfg = &settings.solver_config;
    Ok(match settings.solver {
        SolverKind::Ipot => ipot_solve(&cost, u.view(), v.view(), cfg)?,
        SolverKind::Sinkhorn => sinkhorn_solve(&cost, u.view(), v.view(), cfg)?,
    })
}

/// Scores one hypothesis against its reference (and optionally its source).
///
/// BLEU, hard matching and lengths use the raw tokens; the OT legs use the
/// embedded tokens after out-of-vocabulary handling. If any sequence has no
/// embeddable token the record is `degenerate` and carries no OT values. A
/// leg whose solver fails is omitted and the failure becomes the status.
pub fn score_pair(
    pair_id: usize,
    hyp: &[String],
    reference: &[String],
    src: Option<&[String]>,
    table: &EmbeddingTable,
    settings: &Settings,
) -> Result<(ScoreRecord, PairPlans)> {
    let mut bleu = [0.0; 4];
    for (n, b) in bleu.iter_mut().enumerate() {
        *b = bleu_n(hyp, &[reference.to_vec()], n + 1);
    }
    let mut record = ScoreRecord {
        pair_id,
        ot_seq: None,
        ot_copy: None,
        bleu,
        hard_match: hard_match(hyp, reference),
        len_hyp: hyp.len(),
        len_ref: reference.len(),
        len_src: src.map(<[String]>::len),
        status: RecordStatus::Ok,
    };
    let mut plans = PairPlans::default();

    let policy = settings.oov.policy(table);
    let g = embed(hyp, table, &policy)?;
    let r = embed(reference, table, &policy)?;
    let s = src.map(|s| embed(s, table, &policy)).transpose()?;
    let (Some(g), Some(r)) = (g, r) else {
        record.status = RecordStatus::Degenerate;
        return Ok((record, plans));
    };
    if matches!(s, Some(None)) {
        record.status = RecordStatus::Degenerate;
        return Ok((record, plans));
    }

    let keep = settings.dump_plans.is_some();
    let seq = solve(&g, &r, settings)?;
    record.status = seq.status.into();
    if let Some(solution) = seq.solution {
        record.ot_seq = Some(solution.distance);
        plans.seq = keep.then_some(solution.plan);
    }
    if let Some(Some(s)) = s {
        let copy = solve(&g, &s, settings)?;
        record.status = record.status.max(copy.status.into());
        if let Some(solution) = copy.solution {
            record.ot_copy = Some(solution.distance);
            plans.copy = keep.then_some(solution.plan);
        }
    }
    Ok((record, plans))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub pairs: usize,
    pub mean_ot_seq: Option<f64>,
    pub mean_ot_copy: Option<f64>,
    /// Mean of `gamma_seq * ot_seq + gamma_copy * ot_copy` over pairs with an
    /// `ot_seq` value (a missing copy term counts as 0).
    pub mean_ot_objective: Option<f64>,
    pub corpus_bleu: f64,
    pub failures: usize,
    pub max_iters: usize,
    pub degenerate: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl Summary {
    pub fn new(records: &[ScoreRecord], corpus_bleu: f64, settings: &Settings) -> Result<Self> {
        let count = |status| records.iter().filter(|r| r.status == status).count();
        let objective = records
            .iter()
            .filter_map(|r| {
                r.ot_seq
                    .map(|seq| combined_loss(0.0, seq, r.ot_copy.unwrap_or(0.0), &settings.weights))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            pairs: records.len(),
            mean_ot_seq: mean(records.iter().filter_map(|r| r.ot_seq)),
            mean_ot_copy: mean(records.iter().filter_map(|r| r.ot_copy)),
            mean_ot_objective: mean(objective.into_iter()),
            corpus_bleu,
            failures: count(RecordStatus::NumericalFailure),
            max_iters: count(RecordStatus::MaxIters),
            degenerate: count(RecordStatus::Degenerate),
        })
    }

    pub fn to_line(&self) -> String {
        let real = |x: Option<f64>| x.map_or_else(|| "-".to_owned(), |v| format!("{v:.8}"));
        format!(
            "summary pairs={} mean_ot_seq={} mean_ot_copy={} mean_ot_objective={} corpus_bleu4={:.8} failures={} max_iters={} degenerate={}",
            self.pairs,
            real(self.mean_ot_seq),
            real(self.mean_ot_copy),
            real(self.mean_ot_objective),
            self.corpus_bleu,
            self.failures,
            self.max_iters,
            self.degenerate
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScores {
    pub records: Vec<ScoreRecord>,
    pub plans: Vec<PairPlans>,
    pub summary: Summary,
}

impl CorpusScores {
    /// Header line followed by one line per record, newline-terminated.
    pub fn render_records(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(RECORDS_HEADER);
        out.push('\n');
        for record in &self.records {
            out.push_str(&record.to_line());
            out.push('\n');
        }
        out
    }

    pub fn render_plans(&self) -> String {
        let mut out = format!("{PLANS_HEADER}\n");
        for (record, plans) in self.records.iter().zip(&self.plans) {
            for (leg, plan) in [("seq", &plans.seq), ("copy", &plans.copy)] {
                let Some(plan) = plan else { continue };
                let (rows, cols) = plan.dim();
                writeln!(out, "# pair {} {leg} {rows}x{cols}", record.pair_id).unwrap();
                for row in plan.matrix().outer_iter() {
                    let cells: Vec<String> = row.iter().map(|x| format!("{x:.8}")).collect();
                    out.push_str(&cells.join("\t"));
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Tokenized, line-aligned corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub hyp: Vec<Vec<String>>,
    pub reference: Vec<Vec<String>>,
    pub src: Option<Vec<Vec<String>>>,
}

impl Corpus {
    pub fn new(hyp: Vec<String>, reference: Vec<String>, src: Option<Vec<String>>) -> Result<Self> {
        let check = |name: &str, lines: &[String]| {
            if lines.len() != hyp.len() {
                return Err(CliError::LineCount {
                    left_name: "hypothesis file".into(),
                    left: hyp.len(),
                    right_name: name.into(),
                    right: lines.len(),
                });
            }
            Ok(())
        };
        check("reference file", &reference)?;
        if let Some(src) = &src {
            check("source file", src)?;
        }
        let tok = |lines: Vec<String>| lines.iter().map(|l| tokenize(l)).collect::<Vec<_>>();
        Ok(Self {
            hyp: tok(hyp),
            reference: tok(reference),
            src: src.map(tok),
        })
    }

    pub fn read(hyp: &Path, reference: &Path, src: Option<&Path>) -> Result<Self> {
        Self::new(read_lines(hyp)?, read_lines(reference)?, src.map(read_lines).transpose()?)
    }

    pub fn len(&self) -> usize {
        self.hyp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyp.is_empty()
    }
}

/// Scores every pair, in parallel on `settings.threads` workers, returning
/// records in input order. Pair ids start at 1.
pub fn score_corpus(corpus: &Corpus, table: &EmbeddingTable, settings: &Settings) -> Result<CorpusScores> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = settings.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let scored: Vec<(ScoreRecord, PairPlans)> = pool.install(|| {
        (0..corpus.len())
            .into_par_iter()
            .map(|i| {
                let src = corpus.src.as_ref().map(|s| s[i].as_slice());
                score_pair(i + 1, &corpus.hyp[i], &corpus.reference[i], src, table, settings)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (records, plans): (Vec<_>, Vec<_>) = scored.into_iter().unzip();

    let segments: Vec<(Vec<String>, Vec<Vec<String>>)> = corpus
        .hyp
        .iter()
        .zip(&corpus.reference)
        .map(|(h, r)| (h.clone(), vec![r.clone()]))
        .collect();
    let bleu = corpus_bleu(&segments, 4);
    let summary = Summary::new(&records, bleu, settings)?;
    Ok(CorpusScores { records, plans, summary })
}

/// Reads the files named in the arguments and scores them.
pub fn score_files(
    hyp: &Path,
    reference: &Path,
    src: Option<&Path>,
    embeddings: &Path,
    settings: &Settings,
) -> Result<CorpusScores> {
    let table = load_embeddings(embeddings)?;
    let corpus = Corpus::read(hyp, reference, src)?;
    score_corpus(&corpus, &table, settings)
}
