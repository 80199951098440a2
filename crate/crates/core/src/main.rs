use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use nsqp::corpus;
use nsqp::harness::{emit_outputs, run_experiment, run_row, ExperimentPlan, DEFAULT_EPS1_LEVELS, DEFAULT_SEEDS};
use nsqp::{derive_eps, solve, SolverConfig, SolverStatus};

/// Noise-tolerant SQP with relaxations.
#[derive(Parser)]
#[command(name = "nsqp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one corpus problem.
    Solve {
        problem: String,
        /// Function noise level; derivative noise is its square root.
        #[arg(long, default_value_t = 0.0)]
        eps1: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Print the full solver report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a problems × noise levels × seeds grid and write CSV and SVG output.
    Experiment {
        /// Comma-separated problem names (default: the whole corpus).
        #[arg(long, value_delimiter = ',')]
        problems: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        eps1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Run the grid on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Inspect the built-in problems.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    List,
}

fn config(max_iter: Option<usize>) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }
    cfg
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { problem, eps1, seed, max_iter, json } => {
            if !(eps1 >= 0.0 && eps1.is_finite()) {
                return Err(anyhow!(BadArgs(format!("--eps1 must be finite and nonnegative, got {eps1}"))));
            }
            let p = corpus::find(&problem).ok_or_else(|| anyhow!(BadArgs(format!("unknown problem `{problem}`"))))?;
            let report = solve(&p, &derive_eps(eps1).with_seed(seed), &config(max_iter));
            if json {
                let mut out = std::io::stdout().lock();
                let written = serde_json::to_writer_pretty(&mut out, &report).map_err(std::io::Error::from);
                match written.and_then(|_| writeln!(out)) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                    _ => {}
                }
            } else {
                let row = run_row(&p, eps1, seed, &report);
                println!("problem    {}", row.problem);
                println!("status     {}", row.status);
                println!("iters      {}", row.iters);
                println!("x_final    {:?}", report.x_final);
                println!("f(x_final) {:.16e}", p.objective(&report.x_final));
                println!("v_final    {:.16e}", row.v_final);
                if let Some(e) = row.f_err {
                    println!("f_err      {e:.16e}");
                }
                println!("final_pi   {:.16e}", row.final_pi);
                println!("qn_skips   {}", row.qn_skips);
                if let Some(msg) = &report.failure {
                    println!("failure    {msg}");
                }
            }
            Ok(report.status != SolverStatus::SubproblemFailure)
        }
        Command::Experiment { problems, eps1, seeds, out, max_iter, sequential } => {
            let plan = ExperimentPlan {
                problem_names: problems
                    .unwrap_or_else(|| corpus::corpus().iter().map(|p| p.name().to_string()).collect()),
                eps1_levels: eps1.unwrap_or_else(|| DEFAULT_EPS1_LEVELS.to_vec()),
                seeds: seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
                config: config(max_iter),
                parallel: !sequential,
            };
            plan.validate().map_err(|e| anyhow!(BadArgs(e.to_string())))?;
            let rows = run_experiment(&plan)?;
            let written = emit_outputs(&rows, &out).context("writing experiment output")?;
            let failed = rows.iter().filter(|r| r.failed()).count();
            for path in &written {
                println!("wrote {}", path.display());
            }
            println!("{} runs, {} failed", rows.len(), failed);
            Ok(failed == 0)
        }
        Command::Corpus { action: CorpusAction::List } => {
            println!("{:<16} {:>3} {:>3}  {:<24} source", "name", "n", "m", "f*");
            for p in corpus::corpus() {
                let (f, tag) = p.reference().map_or(("-".to_string(), "-"), |r| (format!("{:.16e}", r.f), r.provenance.tag()));
                println!("{:<16} {:>3} {:>3}  {:<24} {}", p.name(), p.n(), p.m(), f, tag);
            }
            Ok(true)
        }
    }
}

#[derive(Debug)]
struct BadArgs(String);

impl std::fmt::Display for BadArgs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for BadArgs {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<BadArgs>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
