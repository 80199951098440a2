//! The two per-iteration subproblems: the ℓ∞ relaxation LP and the strictly
//! convex direction QP.

mod qp;
pub mod simplex;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{dot, LinalgError, Mat};
use crate::problem::violation;

pub use qp::DEPENDENCE_TOL;
use simplex::LpOutcome;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("relaxation LP exceeded {limit} simplex pivots")]
    PivotLimit { limit: usize },
    #[error("relaxation LP ended without an optimum ({0})")]
    LpFailure(String),
    #[error("direction QP exceeded {limit} active-set changes")]
    MaxActiveSetChanges { limit: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Optimal relaxation level `ρ` (the relaxation vector is `ρ·1`) and the
/// step `d_v` attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationSolution {
    pub rho: f64,
    pub d_v: Vec<f64>,
    pub simplex_pivots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpSolution {
    pub d_qp: Vec<f64>,
    pub lambda: Vec<f64>,
    pub active: Vec<usize>,
    /// `g̃ᵀd + ½dᵀHd` at `d_qp`.
    pub model_obj: f64,
}

/// `c + Jᵀ d`, the linearized constraints.
pub fn linearized(c: &[f64], jac: &Mat, d: &[f64]) -> Vec<f64> {
    let mut out = jac.tr_mul_vec(d);
    for (o, ci) in out.iter_mut().zip(c) {
        *o += ci;
    }
    out
}

/// Linear model of the constraint violation, `‖max(c + Jᵀd, 0)‖∞`.
pub fn linear_violation(c: &[f64], jac: &Mat, d: &[f64]) -> f64 {
    violation(&linearized(c, jac, d))
}

/// Solves `min ρ s.t. c + Jᵀd ≤ ρ·1, ρ ≥ 0, ‖d‖∞ ≤ Δ`.
///
/// `d` is split as `d⁺ − d⁻` with both parts in `[0, Δ]`, which keeps the
/// right-hand sides at the scale of `c` rather than `Δ`.
pub fn solve_relaxation_lp(c: &[f64], jac: &Mat, delta: f64) -> Result<RelaxationSolution, SubproblemError> {
    assert!(delta > 0.0, "trust-region radius must be positive");
    let (n, m) = (jac.rows(), jac.cols());
    debug_assert_eq!(c.len(), m);
    if m == 0 {
        return Ok(RelaxationSolution { rho: 0.0, d_v: vec![0.0; n], simplex_pivots: 0 });
    }
    let nx = 2 * n + 1;
    let nr = m + 2 * n;
    let mut a = Mat::zeros(nr, nx);
    let mut b = vec![0.0; nr];
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = jac[(j, i)];
            a[(i, n + j)] = -jac[(j, i)];
        }
        a[(i, 2 * n)] = -1.0;
        b[i] = -c[i];
    }
    for j in 0..2 * n {
        a[(m + j, j)] = 1.0;
        b[m + j] = delta;
    }
    let mut cost = vec![0.0; nx];
    cost[2 * n] = 1.0;

    let limit = 50 * (n + m + 1);
    match simplex::minimize(&cost, &a, &b, limit) {
        LpOutcome::Optimal { x, pivots, .. } => {
            let d_v: Vec<f64> = (0..n).map(|j| (x[j] - x[n + j]).clamp(-delta, delta)).collect();
            // the attained level, which the QP must be able to reach exactly
            let rho = linear_violation(c, jac, &d_v);
            Ok(RelaxationSolution { rho, d_v, simplex_pivots: pivots })
        }
        LpOutcome::PivotLimit { .. } => Err(SubproblemError::PivotLimit { limit }),
        other => Err(SubproblemError::LpFailure(format!("{other:?}"))),
    }
}

/// Solves `min g̃ᵀd + ½dᵀHd s.t. c̃ + J̃ᵀd ≤ ρ·1` for positive definite `H`.
pub fn solve_direction_qp(
    g: &[f64],
    hess: &Mat,
    c: &[f64],
    jac: &Mat,
    rho: f64,
) -> Result<QpSolution, SubproblemError> {
    solve_direction_qp_warm(g, hess, c, jac, rho, &[])
}

/// Like [`solve_direction_qp`], seeding the active set from `hint` (for
/// instance the constraints active at `d_v`) when that start is dual feasible.
pub fn solve_direction_qp_warm(
    g: &[f64],
    hess: &Mat,
    c: &[f64],
    jac: &Mat,
    rho: f64,
    hint: &[usize],
) -> Result<QpSolution, SubproblemError> {
    let m = jac.cols();
    let b: Vec<f64> = c.iter().map(|ci| rho - ci).collect();
    let mut solver = qp::DualActiveSet::new(g, hess, jac, b)?;
    if !hint.is_empty() {
        solver.warm_start(hint);
    }
    solver.solve()?;
    let mut lambda = vec![0.0; m];
    for (&i, &l) in solver.active.iter().zip(&solver.lambda) {
        lambda[i] = l;
    }
    let mut active = solver.active.clone();
    active.sort_unstable();
    let d = solver.d;
    let model_obj = dot(g, &d) + 0.5 * hess.quad_form(&d);
    Ok(QpSolution { d_qp: d, lambda, active, model_obj })
}

/// Constraints of the relaxation LP that are tight at `d_v`.
pub fn tight_at(c: &[f64], jac: &Mat, relax: &RelaxationSolution) -> Vec<usize> {
    let lin = linearized(c, jac, &relax.d_v);
    let tol = 1e-9 * (1.0 + relax.rho.abs());
    lin.iter().enumerate().filter(|(_, &v)| v >= relax.rho - tol).map(|(i, _)| i).collect()
}
