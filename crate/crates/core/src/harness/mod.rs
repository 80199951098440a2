//! Experiment grid: runs the solver over problems × noise levels × seeds,
//! scores each run with the exact oracle and writes `results.csv` plus three
//! log-log SVG charts.

mod svg;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus;
use crate::noise::derive_eps;
use crate::problem::{violation, Problem};
use crate::sqp::{solve, IterRecord, SolverConfig, SolverReport};

pub use svg::{line_chart, Series};

pub const CSV_HEADER: [&str; 10] =
    ["problem", "eps1", "seed", "v_final", "f_err", "final_pi", "qn_skips", "first_hit", "iters", "status"];

pub const DEFAULT_EPS1_LEVELS: [f64; 5] = [0.0, 1e-8, 1e-6, 1e-4, 1e-2];
pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];

/// Status recorded for a run that panicked.
pub const STATUS_PANIC: &str = "panic";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid experiment: {0}")]
    InvalidPlan(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub problem_names: Vec<String>,
    pub eps1_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub config: SolverConfig,
    pub parallel: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            problem_names: corpus::corpus().iter().map(|p| p.name().to_string()).collect(),
            eps1_levels: DEFAULT_EPS1_LEVELS.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            config: SolverConfig::default(),
            parallel: true,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<Vec<Problem>, HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::InvalidPlan("at least one seed is required".into()));
        }
        if self.eps1_levels.is_empty() {
            return Err(HarnessError::InvalidPlan("at least one noise level is required".into()));
        }
        if self.eps1_levels.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(HarnessError::InvalidPlan("noise levels must be finite and nonnegative".into()));
        }
        if self.eps1_levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(HarnessError::InvalidPlan("noise levels must be sorted ascending".into()));
        }
        self.config.validate().map_err(HarnessError::InvalidPlan)?;
        self.problem_names
            .iter()
            .map(|name| corpus::find(name).ok_or_else(|| HarnessError::UnknownProblem(name.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub problem: String,
    pub eps1: f64,
    pub seed: u64,
    /// Exact violation at the returned point.
    pub v_final: f64,
    /// `|f(x_f) − f*|` with the exact objective, when a reference exists.
    pub f_err: Option<f64>,
    pub final_pi: f64,
    pub qn_skips: usize,
    pub first_hit: usize,
    pub iters: usize,
    pub status: String,
}

impl RunRow {
    pub fn failed(&self) -> bool {
        self.status == "subproblem-failure" || self.status == STATUS_PANIC
    }
}

/// First iteration whose noisy violation and objective are within `2 eps_f`
/// of those of the selected record.
pub fn first_hit_iteration(trace: &[IterRecord], selected: &IterRecord, eps_f: f64) -> usize {
    let v_cap = selected.v_tilde + 2.0 * eps_f;
    let f_cap = selected.f_tilde + 2.0 * eps_f;
    trace.iter().find(|r| r.v_tilde <= v_cap && r.f_tilde <= f_cap).map_or(selected.k, |r| r.k)
}

/// Scores a finished run with the exact oracle.
pub fn run_row(problem: &Problem, eps1: f64, seed: u64, report: &SolverReport) -> RunRow {
    let exact = problem.eval_true(&report.x_final);
    let first_hit = report
        .final_k
        .and_then(|k| report.trace.get(k))
        .map_or(0, |sel| first_hit_iteration(&report.trace, sel, derive_eps(eps1).eps_f));
    RunRow {
        problem: problem.name().to_string(),
        eps1,
        seed,
        v_final: violation(&exact.c),
        f_err: problem.reference().map(|r| (exact.f - r.f).abs()),
        final_pi: report.final_pi,
        qn_skips: report.qn_skip_count,
        first_hit,
        iters: report.trace.len(),
        status: report.status.as_str().to_string(),
    }
}

fn run_one(problem: &Problem, eps1: f64, seed: u64, cfg: &SolverConfig) -> RunRow {
    let model = derive_eps(eps1).with_seed(seed);
    match catch_unwind(AssertUnwindSafe(|| solve(problem, &model, cfg))) {
        Ok(report) => run_row(problem, eps1, seed, &report),
        Err(_) => RunRow {
            problem: problem.name().to_string(),
            eps1,
            seed,
            v_final: f64::NAN,
            f_err: None,
            final_pi: f64::NAN,
            qn_skips: 0,
            first_hit: 0,
            iters: 0,
            status: STATUS_PANIC.to_string(),
        },
    }
}

/// Runs every `(problem, eps1, seed)` combination. Rows come back ordered by
/// problem (as listed), then `eps1`, then seed, whether or not the grid runs in
/// parallel.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<RunRow>, HarnessError> {
    let problems = plan.validate()?;
    let jobs: Vec<(&Problem, f64, u64)> = problems
        .iter()
        .flat_map(|p| plan.eps1_levels.iter().flat_map(move |&e| plan.seeds.iter().map(move |&s| (p, e, s))))
        .collect();
    let run = |&(p, e, s): &(&Problem, f64, u64)| run_one(p, e, s, &plan.config);
    Ok(if plan.parallel { jobs.par_iter().map(run).collect() } else { jobs.iter().map(run).collect() })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders rows as `results.csv` content.
pub fn csv_string(rows: &[RunRow]) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            num(r.eps1),
            r.seed.to_string(),
            num(r.v_final),
            r.f_err.map(num).unwrap_or_default(),
            num(r.final_pi),
            r.qn_skips.to_string(),
            r.first_hit.to_string(),
            r.iters.to_string(),
            r.status.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

/// Per-problem medians over seeds of `metric`, one `(eps1, median)` point per
/// positive noise level, in first-appearance order of the problems.
pub fn median_series(rows: &[RunRow], metric: impl Fn(&RunRow) -> Option<f64>) -> Vec<Series> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.problem.as_str()) {
            names.push(&r.problem);
        }
    }
    let mut out = Vec::new();
    for name in names {
        let mut levels: Vec<f64> = rows.iter().filter(|r| r.problem == name && r.eps1 > 0.0).map(|r| r.eps1).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let points: Vec<(f64, f64)> = levels
            .iter()
            .filter_map(|&e| {
                let vals: Vec<f64> =
                    rows.iter().filter(|r| r.problem == name && r.eps1 == e).filter_map(&metric).collect();
                median(&vals).map(|m| (e, m))
            })
            .collect();
        if !points.is_empty() {
            out.push(Series { label: name.to_string(), points });
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Writes `results.csv`, `v_final.svg`, `f_err.svg` and `final_pi.svg` into
/// `out_dir`, creating it if needed. Returns the written paths.
pub fn emit_outputs(rows: &[RunRow], out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::InvalidPlan("no rows to write".into()));
    }
    fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io { path: out_dir.to_path_buf(), source })?;
    let csv_path = out_dir.join("results.csv");
    let csv = csv_string(rows).map_err(|source| HarnessError::Csv { path: csv_path.clone(), source })?;
    write_file(&csv_path, &csv)?;
    let mut written = vec![csv_path];

    let charts: [(&str, &str, Box<dyn Fn(&RunRow) -> Option<f64>>); 3] = [
        ("v_final", "median exact violation v(x_f)", Box::new(|r: &RunRow| Some(r.v_final))),
        ("f_err", "median |f(x_f) - f*|", Box::new(|r: &RunRow| r.f_err)),
        ("final_pi", "median final penalty parameter", Box::new(|r: &RunRow| Some(r.final_pi))),
    ];
    for (stem, title, metric) in charts {
        let series = median_series(rows, metric);
        let path = out_dir.join(format!("{stem}.svg"));
        write_file(&path, &line_chart(title, "eps1", stem, &series))?;
        written.push(path);
    }
    Ok(written)
}
