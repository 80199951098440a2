//! Bounded uniform noise on every function and derivative evaluation.
//!
//! Draws come from ChaCha8 keyed by the model seed with the evaluation index as
//! the stream id, so evaluation `k` can be replayed without generating `0..k`.
//! Within an evaluation, components are drawn in a fixed order: `f`, then
//! `c₁…c_m`, then `g₁…g_n`, then the Jacobian in row-major `n × m` order.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Mat;
use crate::problem::{Evaluation, Problem};

/// Noise bounds: `|f̃ − f| ≤ ε_f`, `‖c̃ − c‖∞ ≤ ε_c`, `‖g̃ − g‖₂ ≤ ε_g`,
/// `‖J̃ᵀ − Jᵀ‖∞ ≤ ε_J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eps_f: f64,
    pub eps_c: f64,
    pub eps_g: f64,
    pub eps_j: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self { eps_f: 0.0, eps_c: 0.0, eps_g: 0.0, eps_j: 0.0, seed: 0 }
    }

    /// Function noise `eps1`, derivative noise `√eps1`.
    pub fn derive_eps(eps1: f64) -> Self {
        assert!(eps1 >= 0.0, "noise level must be nonnegative");
        let eps2 = eps1.sqrt();
        Self { eps_f: eps1, eps_c: eps1, eps_g: eps2, eps_j: eps2, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.eps_f == 0.0 && self.eps_c == 0.0 && self.eps_g == 0.0 && self.eps_j == 0.0
    }

    /// Relaxation `ε_R = ε_f + π ε_c` of the line-search condition.
    pub fn eps_r(&self, pi: f64) -> f64 {
        self.eps_f + pi * self.eps_c
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::zero()
    }
}

/// Convenience alias for [`NoiseModel::derive_eps`].
pub fn derive_eps(eps1: f64) -> NoiseModel {
    NoiseModel::derive_eps(eps1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyEvaluation {
    pub f: f64,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    /// `n × m`, column `i` is the noisy `∇cᵢ`.
    pub jac: Mat,
    pub eval_index: u64,
}

struct Perturber {
    rng: ChaCha8Rng,
}

impl Perturber {
    fn new(seed: u64, eval_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(eval_index);
        Self { rng }
    }

    /// Uniform on `[-half, half)`. Always consumes one draw so later
    /// components keep their positions when a bound is zero.
    fn perturb(&mut self, value: f64, half: f64) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if half == 0.0 {
            return value;
        }
        let mut out = value + half * (2.0 * u - 1.0);
        // rounding of the sum may overshoot the bound by an ulp
        while (out - value).abs() > half {
            out = if out > value { out.next_down() } else { out.next_up() };
        }
        out
    }
}

/// Adds noise to an exact evaluation.
pub fn perturb(model: &NoiseModel, exact: &Evaluation, eval_index: u64) -> NoisyEvaluation {
    let n = exact.g.len();
    // per-component half-widths; the shrink absorbs rounding in the norms
    let shrink = 1.0 - 1e-12;
    let half_g = if n > 0 { shrink * model.eps_g / (n as f64).sqrt() } else { 0.0 };
    let half_j = if n > 0 { shrink * model.eps_j / n as f64 } else { 0.0 };
    let mut p = Perturber::new(model.seed, eval_index);

    let f = p.perturb(exact.f, model.eps_f);
    let c = exact.c.iter().map(|&ci| p.perturb(ci, model.eps_c)).collect();
    let g = exact.g.iter().map(|&gi| p.perturb(gi, half_g)).collect();
    let mut jac = exact.jac.clone();
    for v in jac.as_mut_slice() {
        *v = p.perturb(*v, half_j);
    }
    NoisyEvaluation { f, g, c, jac, eval_index }
}

/// Noisy evaluation of `problem` at `x`; a pure function of
/// `(model, problem, x, eval_index)`.
pub fn noisy_eval(model: &NoiseModel, problem: &Problem, x: &[f64], eval_index: u64) -> NoisyEvaluation {
    perturb(model, &problem.eval_true(x), eval_index)
}
