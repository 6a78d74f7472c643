use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seqot_cli::config::{Overrides, Settings};
use seqot_cli::demo::{flow_demo, render_flow, render_taxonomy, taxonomy, FlowOptions};
use seqot_cli::input::{load_embeddings, read_to_string, tokenize};
use seqot_cli::sweep::{gamma_sweep, parse_numbers, render_sweep, DEFAULT_GAMMAS};
use seqot_cli::{exit, score_files, CliError, Result};

/// Sequence-level optimal transport scoring.
#[derive(Debug, Parser)]
#[command(name = "seqot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file (default: $SEQOT_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        Settings::resolve(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score aligned hypothesis/reference (and source) files.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        src: Option<PathBuf>,
        #[arg(long)]
        embeddings: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Mean combined loss for a grid of sequence-loss weights.
    Sweep {
        /// One sequence OT loss per line.
        #[arg(long)]
        seq_losses: PathBuf,
        /// One MLE loss per line.
        #[arg(long)]
        mle_losses: PathBuf,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Wasserstein gradient flow toward a seeded random target.
    Flow {
        #[arg(long, default_value_t = 10)]
        atoms: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 500)]
        max_steps: usize,
        #[arg(long, default_value_t = 0.05)]
        stop_tv: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Hard matching, assignment and OT plan for one sentence pair.
    Match {
        #[arg(long)]
        hyp: String,
        #[arg(long = "ref")]
        reference: String,
        #[arg(long)]
        embeddings: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn write_stdout(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .map_err(|e| CliError::io("<stdout>", e))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Score {
            hyp,
            reference,
            src,
            embeddings,
            common,
        } => {
            let settings = common.settings()?;
            let scores = score_files(&hyp, &reference, src.as_deref(), &embeddings, &settings)?;
            write_stdout(&scores.render_records())?;
            if let Some(path) = &settings.dump_plans {
                fs::write(path, scores.render_plans()).map_err(|e| CliError::io(path, e))?;
            }
            eprintln!("{}", scores.summary.to_line());
            Ok(if scores.summary.failures > 0 {
                exit::SOLVER_FAILURES
            } else {
                exit::SUCCESS
            })
        }
        Command::Sweep {
            seq_losses,
            mle_losses,
            gammas,
        } => {
            let numbers = |p: &Path| parse_numbers(&read_to_string(p)?, &p.display().to_string());
            let gammas = gammas.unwrap_or_else(|| DEFAULT_GAMMAS.to_vec());
            let rows = gamma_sweep(&numbers(&seq_losses)?, &numbers(&mle_losses)?, &gammas)?;
            write_stdout(&render_sweep(&rows))?;
            Ok(exit::SUCCESS)
        }
        Command::Flow {
            atoms,
            dim,
            h,
            eta,
            max_steps,
            stop_tv,
            common,
        } => {
            let settings = common.settings()?;
            let options = FlowOptions {
                atoms,
                dim,
                h,
                eta,
                max_steps,
                stop_tv,
            };
            let trajectory = flow_demo(&options, &settings)?;
            write_stdout(&render_flow(&trajectory))?;
            let last = trajectory.records.last().map_or(f64::NAN, |r| r.tv);
            eprintln!("flow converged={} steps={} tv={last:.8}", trajectory.converged, trajectory.records.len());
            Ok(exit::SUCCESS)
        }
        Command::Match {
            hyp,
            reference,
            embeddings,
            common,
        } => {
            let settings = common.settings()?;
            let table = load_embeddings(&embeddings)?;
            let report = taxonomy(&tokenize(&hyp), &tokenize(&reference), &table, &settings)?;
            write_stdout(&render_taxonomy(&report))?;
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("seqot: {first}");
            return ExitCode::from(exit::INPUT_ERROR as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("seqot: error: {e}");
            ExitCode::from(exit::INPUT_ERROR as u8)
        }
    }
}
