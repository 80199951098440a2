//! ℓ∞ exact-penalty merit function, its models, the penalty update and the
//! relaxed backtracking line search.

use crate::linalg::{dot, Mat};
use crate::noise::NoisyEvaluation;
use crate::problem::violation;
use crate::subproblems::linear_violation;

/// `f̃ + π ‖max(c̃, 0)‖∞`
pub fn merit_value(f: f64, c: &[f64], pi: f64) -> f64 {
    f + pi * violation(c)
}

/// Model reductions for a step `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelReduction {
    /// `q̃_π(0) − q̃_π(d)`
    pub quad_red: f64,
    /// `‖max(c̃,0)‖∞ − ‖max(c̃ + J̃ᵀd, 0)‖∞`
    pub lin_viol_red: f64,
}

pub fn model_reduction(g: &[f64], hess: &Mat, d: &[f64], pi: f64, c: &[f64], jac: &Mat) -> ModelReduction {
    let lin_viol_red = violation(c) - linear_violation(c, jac, d);
    let quad_term = dot(g, d) + 0.5 * hess.quad_form(d);
    ModelReduction { quad_red: -quad_term + pi * lin_viol_red, lin_viol_red }
}

/// Whether `π` satisfies `q̃_π(0) − q̃_π(d) ≥ θ₁ π [l̃_v(0) − l̃_v(d)]`, where
/// `quad_term = g̃ᵀd + ½dᵀHd`, tested in the rearranged form
/// `π (1 − θ₁) lin_viol_red ≥ quad_term`.
pub fn penalty_condition_holds(pi: f64, quad_term: f64, lin_viol_red: f64, theta1: f64) -> bool {
    pi * ((1.0 - theta1) * lin_viol_red) >= quad_term
}

/// Returns `pi_k` when it already satisfies the penalty condition, otherwise
/// the smallest `π ≥ 1.1 pi_k` that does. Callers invoke this only when the
/// step reduces the linearized violation (`lin_viol_red > 0`).
pub fn update_penalty(pi_k: f64, quad_term: f64, lin_viol_red: f64, theta1: f64) -> f64 {
    debug_assert!(lin_viol_red > 0.0);
    if penalty_condition_holds(pi_k, quad_term, lin_viol_red, theta1) {
        return pi_k;
    }
    let required = quad_term / ((1.0 - theta1) * lin_viol_red);
    let mut pi = (1.1 * pi_k).max(required);
    while !penalty_condition_holds(pi, quad_term, lin_viol_red, theta1) {
        pi = pi.next_up();
    }
    pi
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    /// Noisy evaluation at `x + α d`, reused as the next iterate's evaluation.
    pub eval: NoisyEvaluation,
    pub backtracks: usize,
    /// Merit at the accepted trial point.
    pub trial_merit: f64,
    /// False when no trial passed and the smallest step was taken anyway.
    pub accepted: bool,
}

/// Right-hand side of the relaxed sufficient-decrease test.
pub fn sufficient_decrease(alpha: f64, quad_red: f64, eps_r: f64, theta2: f64) -> f64 {
    theta2 * alpha * quad_red - 2.0 * eps_r
}

/// Backtracks `α = 2⁻ʲ`, `j = 0, 1, …, max_backtracks`, accepting the first
/// trial with `φ̃_π(x) − φ̃_π(x + αd) ≥ θ₂ α quad_red − 2ε_R`. Every trial
/// point gets a fresh noisy evaluation from `oracle`.
#[allow(clippy::too_many_arguments)]
pub fn line_search<F>(
    oracle: &mut F,
    x: &[f64],
    d: &[f64],
    merit_at_x: f64,
    pi: f64,
    quad_red: f64,
    eps_r: f64,
    theta2: f64,
    max_backtracks: usize,
) -> LineSearchOutcome
where
    F: FnMut(&[f64]) -> NoisyEvaluation,
{
    let mut alpha = 1.0;
    let mut j = 0;
    loop {
        let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let eval = oracle(&trial);
        let trial_merit = merit_value(eval.f, &eval.c, pi);
        let accepted = merit_at_x - trial_merit >= sufficient_decrease(alpha, quad_red, eps_r, theta2);
        if accepted || j == max_backtracks {
            return LineSearchOutcome { alpha, eval, backtracks: j, trial_merit, accepted };
        }
        j += 1;
        alpha *= 0.5;
    }
}
