//! The flow demonstration and the matching taxonomy report.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqot::embed::{embed_tokens, EmbeddingTable};
use seqot::matching::{hard_match, hungarian, pad_square, MatchResult};
use seqot::wgf::{run_flow, FlowState, FlowTrajectory};
use seqot::{build_cost_matrix, ipot_solve, uniform_weights, SolverReport};

use crate::config::Settings;
use crate::error::{CliError, Result};

pub const FLOW_HEADER: &str = "seqot-flow v1";
pub const MATCH_HEADER: &str = "seqot-match v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub atoms: usize,
    pub dim: usize,
    pub h: f64,
    pub eta: f64,
    pub max_steps: usize,
    pub stop_tv: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            atoms: 10,
            dim: 2,
            h: 0.5,
            eta: 0.1,
            max_steps: 500,
            stop_tv: 0.05,
        }
    }
}

/// Support points in the unit cube and a target with weights bounded away
/// from zero, both drawn from `seed`.
pub fn random_flow_problem(seed: u64, atoms: usize, dim: usize) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = Array2::from_shape_fn((atoms, dim), |_| rng.random::<f64>());
    let raw = Array1::from_shape_fn(atoms, |_| rng.random::<f64>() + 0.1);
    let target = &raw / raw.sum();
    (support, target)
}

/// Runs the flow from the uniform distribution toward a seeded random target.
pub fn flow_demo(options: &FlowOptions, settings: &Settings) -> Result<FlowTrajectory> {
    if options.max_steps == 0 {
        return Err(CliError::Input("max steps must be at least 1".into()));
    }
    let (support, target) = random_flow_problem(settings.seed, options.atoms, options.dim);
    let state = FlowState::uniform(support, target, options.h, options.eta)?;
    Ok(run_flow(state, options.max_steps, options.stop_tv, &settings.solver_config)?)
}

pub fn render_flow(trajectory: &FlowTrajectory) -> String {
    let mut out = format!("{FLOW_HEADER}\n");
    for r in &trajectory.records {
        writeln!(out, "{}\t{:.10}\t{:.10}\t{:.10}", r.step, r.kl, r.w2, r.tv).unwrap();
    }
    out
}

/// The three matching schemes on one sentence pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    pub hard_match: usize,
    /// Full assignment on the (padded) embedding cost matrix.
    pub assignment: MatchResult,
    /// Assignment cost per token on the square instance before padding, or
    /// `None` when the sequences have different embedded lengths.
    pub assignment_mean: Option<f64>,
    pub ot: SolverReport,
}

pub fn taxonomy(hyp: &[String], reference: &[String], table: &EmbeddingTable, settings: &Settings) -> Result<Taxonomy> {
    let policy = settings.oov.policy(table);
    let g = embed_tokens(hyp, table, &policy)?;
    let r = embed_tokens(reference, table, &policy)?;
    let cost = build_cost_matrix(g.matrix(), r.matrix(), settings.cost)?;
    let assignment = hungarian(pad_square(cost.values()).view())?;
    let assignment_mean = cost.is_square().then(|| assignment.total_cost / cost.nrows() as f64);
    let u = uniform_weights(g.len())?;
    let v = uniform_weights(r.len())?;
    let ot = ipot_solve(&cost, u.view(), v.view(), &settings.solver_config)?;
    Ok(Taxonomy {
        hard_match: hard_match(hyp, reference),
        assignment,
        assignment_mean,
        ot,
    })
}

pub fn render_taxonomy(t: &Taxonomy) -> String {
    let mut out = format!("{MATCH_HEADER}\n");
    writeln!(out, "hard_match\t{}", t.hard_match).unwrap();
    let pairs: Vec<String> = t.assignment.assignment.iter().map(|(i, j)| format!("{i}-{j}")).collect();
    writeln!(out, "assignment\t{}", pairs.join(" ")).unwrap();
    writeln!(out, "assignment_cost\t{:.8}", t.assignment.total_cost).unwrap();
    match t.assignment_mean {
        Some(m) => writeln!(out, "assignment_mean\t{m:.8}").unwrap(),
        None => out.push_str("assignment_mean\t-\n"),
    }
    writeln!(out, "ot_status\t{}", t.ot.status).unwrap();
    match &t.ot.solution {
        Some(solution) => {
            writeln!(out, "ot_distance\t{:.8}", solution.distance).unwrap();
            for row in solution.plan.matrix().outer_iter() {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.8}")).collect();
                writeln!(out, "ot_plan\t{}", cells.join("\t")).unwrap();
            }
        }
        None => out.push_str("ot_distance\t-\n"),
    }
    out
}
