//! Noise-tolerant SQP with relaxations.
//!
//! Each iteration solves the relaxation LP for the attainable constraint level
//! `ρ`, the direction QP relaxed to that level, updates the penalty parameter,
//! backtracks on the ℓ∞ merit function with a noise-relaxed decrease test and
//! finally performs a BFGS update that is skipped when the measured curvature
//! is not trustworthy.

mod merit;
mod quasi_newton;

use serde::{Deserialize, Serialize};

use crate::linalg::{norm2, norm_inf, Mat};
use crate::noise::{noisy_eval, NoiseModel, NoisyEvaluation};
use crate::problem::{violation, Problem};
use crate::subproblems::{
    linear_violation, solve_direction_qp_warm, solve_relaxation_lp, tight_at, QpSolution, RelaxationSolution,
};

pub use merit::{
    line_search, merit_value, model_reduction, penalty_condition_holds, sufficient_decrease, update_penalty,
    LineSearchOutcome, ModelReduction,
};
pub use quasi_newton::{bfgs_update, default_active_tol, estimate_multipliers, BfgsOutcome, SkipReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub theta1: f64,
    pub theta2: f64,
    /// Trust-region radius of the relaxation LP.
    pub delta: f64,
    pub pi0: f64,
    pub max_iter: usize,
    pub ls_max_backtracks: usize,
    /// Records searched by [`select_final`].
    pub window: usize,
    pub qn_damping: f64,
    /// Near-active threshold for multiplier estimation; `None` uses
    /// [`default_active_tol`].
    pub active_tol: Option<f64>,
    /// Stop once `‖d_qp‖₂` falls to this value (`0` disables); `None` means
    /// `1e-8` for an exact oracle and `0` otherwise.
    pub dqp_stop_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta1: 0.1,
            theta2: 0.01,
            delta: 1e3,
            pi0: 1.0,
            max_iter: 1000,
            ls_max_backtracks: 30,
            window: 100,
            qn_damping: 1e-3,
            active_tol: None,
            dqp_stop_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn stop_tol(&self, model: &NoiseModel) -> f64 {
        self.dqp_stop_tol.unwrap_or(if model.is_zero() { 1e-8 } else { 0.0 })
    }

    pub fn validate(&self) -> Result<(), String> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.theta1) || !open_unit(self.theta2) {
            return Err("theta1 and theta2 must lie in (0, 1)".into());
        }
        if !(self.delta > 0.0) {
            return Err("delta must be positive".into());
        }
        if !(self.pi0 >= 1.0) {
            return Err("pi0 must be at least 1".into());
        }
        if self.dqp_stop_tol.is_some_and(|t| !(t >= 0.0)) {
            return Err("dqp_stop_tol must be nonnegative".into());
        }
        Ok(())
    }
}

/// One iteration. Values with a tilde are noisy; `x`, `f_tilde` and `v_tilde`
/// describe the iterate at the start of the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f_tilde: f64,
    pub v_tilde: f64,
    /// Penalty parameter after this iteration's update.
    pub pi: f64,
    pub alpha: f64,
    pub rho: f64,
    pub psi_v_tilde: f64,
    pub psi_o_tilde: f64,
    pub qn_skipped: bool,
    pub ls_backtracks: usize,
    pub d_norm: f64,
    /// `‖max(c̃ + J̃ᵀd_qp, 0)‖∞`
    pub lin_viol_qp: f64,
    pub quad_red: f64,
    pub eps_r: f64,
    /// Merit at `x` and at the accepted trial point, both at `pi`.
    pub merit: f64,
    pub trial_merit: f64,
    /// True when backtracking ran out and the smallest step was forced.
    pub ls_failed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    BudgetExhausted,
    DqpTolerance,
    SubproblemFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BudgetExhausted => "budget-exhausted",
            Self::DqpTolerance => "dqp-tolerance",
            Self::SubproblemFailure => "subproblem-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub problem: String,
    pub status: SolverStatus,
    pub x_final: Vec<f64>,
    /// Iteration index of the record `x_final` was taken from.
    pub final_k: Option<usize>,
    pub final_pi: f64,
    pub qn_skip_count: usize,
    pub evaluations: u64,
    pub failure: Option<String>,
    pub trace: Vec<IterRecord>,
}

/// Everything computed in one iteration, handed to an [`Observer`].
pub struct IterationView<'a> {
    pub record: &'a IterRecord,
    pub eval: &'a NoisyEvaluation,
    pub relaxation: &'a RelaxationSolution,
    pub qp: &'a QpSolution,
    pub hess_before: &'a Mat,
    pub hess_after: &'a Mat,
    /// Multipliers at the new iterate used in the curvature pair; empty when
    /// the run stopped before the line search.
    pub lambda_next: &'a [f64],
    pub bfgs_skip: Option<SkipReason>,
}

pub trait Observer {
    fn iteration(&mut self, view: &IterationView<'_>);
}

impl<F: FnMut(&IterationView<'_>)> Observer for F {
    fn iteration(&mut self, view: &IterationView<'_>) {
        self(view)
    }
}

/// `(ψ̃_v, ψ̃_o) = (ṽ − ρ, −(g̃ᵀd_qp + ½d_qpᵀHd_qp))`
pub fn stationarity_measures(v_tilde: f64, rho: f64, qp: &QpSolution) -> (f64, f64) {
    (v_tilde - rho, -qp.model_obj)
}

/// Among the last `window` records, the one with least noisy violation, then
/// least noisy objective, then the latest.
pub fn select_final(trace: &[IterRecord], window: usize) -> &IterRecord {
    assert!(!trace.is_empty(), "select_final needs a nonempty trace");
    let start = trace.len() - window.clamp(1, trace.len());
    let mut best = &trace[start];
    for r in &trace[start + 1..] {
        let better = r.v_tilde < best.v_tilde
            || (r.v_tilde == best.v_tilde && (r.f_tilde < best.f_tilde || (r.f_tilde == best.f_tilde && r.k > best.k)));
        if better {
            best = r;
        }
    }
    best
}

pub fn solve(problem: &Problem, model: &NoiseModel, cfg: &SolverConfig) -> SolverReport {
    solve_observed(problem, model, cfg, &mut |_: &IterationView<'_>| {})
}

pub fn solve_observed(
    problem: &Problem,
    model: &NoiseModel,
    cfg: &SolverConfig,
    observer: &mut dyn Observer,
) -> SolverReport {
    let n = problem.n();
    let stop_tol = cfg.stop_tol(model);
    let mut evaluations = 0u64;
    let mut oracle = |x: &[f64]| {
        let e = noisy_eval(model, problem, x, evaluations);
        evaluations += 1;
        e
    };

    let mut x = problem.x0().to_vec();
    let mut hess = Mat::identity(n);
    let mut pi = cfg.pi0;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut status = SolverStatus::BudgetExhausted;
    let mut failure = None;
    let mut skips = 0;

    if cfg.max_iter > 0 {
        let mut eval = oracle(&x);
        for k in 0..cfg.max_iter {
            let v_tilde = violation(&eval.c);
            let relax = match solve_relaxation_lp(&eval.c, &eval.jac, cfg.delta) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(format!("iteration {k}: {e}"));
                    break;
                }
            };
            let hint = tight_at(&eval.c, &eval.jac, &relax);
            let qp = match solve_direction_qp_warm(&eval.g, &hess, &eval.c, &eval.jac, relax.rho, &hint) {
                Ok(q) => q,
                Err(e) => {
                    failure = Some(format!("iteration {k}: {e}"));
                    break;
                }
            };
            let d = &qp.d_qp;
            let (psi_v, psi_o) = stationarity_measures(v_tilde, relax.rho, &qp);
            let red = model_reduction(&eval.g, &hess, d, pi, &eval.c, &eval.jac);
            if v_tilde - relax.rho > 1e-12 * (1.0 + v_tilde) && red.lin_viol_red > 0.0 {
                pi = update_penalty(pi, qp.model_obj, red.lin_viol_red, cfg.theta1);
            }
            let quad_red = -qp.model_obj + pi * red.lin_viol_red;
            let eps_r = model.eps_r(pi);
            let merit = merit_value(eval.f, &eval.c, pi);
            let d_norm = norm2(d);
            let mut record = IterRecord {
                k,
                x: x.clone(),
                f_tilde: eval.f,
                v_tilde,
                pi,
                alpha: 0.0,
                rho: relax.rho,
                psi_v_tilde: psi_v,
                psi_o_tilde: psi_o,
                qn_skipped: false,
                ls_backtracks: 0,
                d_norm,
                lin_viol_qp: linear_violation(&eval.c, &eval.jac, d),
                quad_red,
                eps_r,
                merit,
                trial_merit: merit,
                ls_failed: false,
            };

            if stop_tol > 0.0 && d_norm <= stop_tol {
                observer.iteration(&IterationView {
                    record: &record,
                    eval: &eval,
                    relaxation: &relax,
                    qp: &qp,
                    hess_before: &hess,
                    hess_after: &hess,
                    lambda_next: &[],
                    bfgs_skip: None,
                });
                trace.push(record);
                status = SolverStatus::DqpTolerance;
                break;
            }

            let ls =
                line_search(&mut oracle, &x, d, merit, pi, quad_red, eps_r, cfg.theta2, cfg.ls_max_backtracks);
            let s: Vec<f64> = d.iter().map(|v| ls.alpha * v).collect();
            let x_next: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
            let next = ls.eval;

            let tol = cfg.active_tol.unwrap_or_else(|| default_active_tol(model.eps_c, &next.c));
            let lambda =
                estimate_multipliers(&next.g, &next.c, &next.jac, tol).unwrap_or_else(|_| qp.lambda.clone());
            let jl_next = next.jac.mul_vec(&lambda);
            let jl_prev = eval.jac.mul_vec(&lambda);
            let y: Vec<f64> = (0..n).map(|i| (next.g[i] + jl_next[i]) - (eval.g[i] + jl_prev[i])).collect();
            let upd = bfgs_update(&hess, &s, &y, model.eps_g, model.eps_j, norm_inf(&lambda), cfg.qn_damping);

            record.alpha = ls.alpha;
            record.ls_backtracks = ls.backtracks;
            record.trial_merit = ls.trial_merit;
            record.ls_failed = !ls.accepted;
            record.qn_skipped = upd.is_skipped();
            if record.qn_skipped {
                skips += 1;
            }
            observer.iteration(&IterationView {
                record: &record,
                eval: &eval,
                relaxation: &relax,
                qp: &qp,
                hess_before: &hess,
                hess_after: &upd.hess,
                lambda_next: &lambda,
                bfgs_skip: upd.skipped,
            });
            trace.push(record);
            hess = upd.hess;
            x = x_next;
            eval = next;
        }
    }

    if failure.is_some() {
        status = SolverStatus::SubproblemFailure;
    }
    let chosen = match (status, trace.last()) {
        (_, None) => None,
        (SolverStatus::DqpTolerance, Some(last)) => Some(last),
        _ => Some(select_final(&trace, cfg.window)),
    };
    let (x_final, final_k) = match chosen {
        Some(r) => (r.x.clone(), Some(r.k)),
        None => (x, None),
    };
    SolverReport {
        problem: problem.name().to_string(),
        status,
        x_final,
        final_k,
        final_pi: pi,
        qn_skip_count: skips,
        evaluations,
        failure,
        trace,
    }
}
