//! Independent oracles and random instance generators shared by the
//! integration tests.
#![allow(dead_code)]

use nsqp::linalg::{dot, norm_inf, spd_solve, Mat};
use nsqp::subproblems::{linearized, QpSolution};
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.0.next_u64() % (hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn vec(&mut self, len: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..len).map(|_| self.uniform(lo, hi)).collect()
    }

    pub fn mat(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Mat {
        Mat::from_row_major(rows, cols, self.vec(rows * cols, lo, hi)).unwrap()
    }

    /// `MᵀM + shift·I` for a random square `M`.
    pub fn spd(&mut self, n: usize, shift: f64) -> Mat {
        let m = self.mat(n, n, -1.0, 1.0);
        let mut a = m.transpose().mul(&m);
        for i in 0..n {
            a[(i, i)] += shift;
        }
        a
    }
}

pub struct LpInstance {
    pub c: Vec<f64>,
    /// `n × m`
    pub jac: Mat,
    pub delta: f64,
}

pub fn random_lp(g: &mut Gen) -> LpInstance {
    let n = g.range(1, 3);
    let m = g.range(1, 3);
    LpInstance { c: g.vec(m, -1.0, 1.0), jac: g.mat(n, m, -1.0, 1.0), delta: g.uniform(0.1, 2.0) }
}

fn lin_violation(inst: &LpInstance, d: &[f64]) -> f64 {
    linearized(&inst.c, &inst.jac, d).iter().fold(0.0_f64, |m, v| m.max(*v))
}

/// Minimum of `‖max(c + Jᵀd, 0)‖∞` over the box `‖d‖∞ ≤ Δ` by grid search,
/// refined coarse to fine around the best few points down to a step of 1e-3.
pub fn lp_grid_oracle(inst: &LpInstance) -> f64 {
    let n = inst.jac.rows();
    let delta = inst.delta;
    let mut centers: Vec<Vec<f64>> = vec![vec![0.0; n]];
    let mut half_width = delta;
    let mut step = delta / 20.0;
    let mut best = f64::INFINITY;
    loop {
        let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
        let k = (half_width / step).round() as i64;
        for center in &centers {
            let total = (2 * k + 1).pow(n as u32);
            for idx in 0..total {
                let mut rem = idx;
                let mut d = vec![0.0; n];
                for dj in d.iter_mut().zip(center) {
                    let off = (rem % (2 * k + 1)) - k;
                    rem /= 2 * k + 1;
                    *dj.0 = (dj.1 + off as f64 * step).clamp(-delta, delta);
                }
                let v = lin_violation(inst, &d);
                scored.push((v, d));
            }
        }
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        best = best.min(scored[0].0);
        if step <= 1e-3 {
            return best;
        }
        centers = scored.into_iter().take(4).map(|s| s.1).collect();
        half_width = 2.0 * step;
        step = (step / 5.0).max(1e-3);
    }
}

pub struct QpInstance {
    pub g: Vec<f64>,
    pub h: Mat,
    pub c: Vec<f64>,
    pub jac: Mat,
    pub rho: f64,
}

/// Strictly convex QP whose relaxed feasible set has nonempty interior
/// (`c + Jᵀd < ρ` holds at `d = d_int`).
pub fn random_qp(gen: &mut Gen) -> QpInstance {
    let n = gen.range(1, 3);
    let m = gen.range(1, 4);
    let h = gen.spd(n, 0.5);
    let g = gen.vec(n, -2.0, 2.0);
    let jac = gen.mat(n, m, -1.0, 1.0);
    let rho = if gen.unit() < 0.5 { 0.0 } else { gen.uniform(0.0, 1.0) };
    let d_int = gen.vec(n, -1.0, 1.0);
    let lin = jac.tr_mul_vec(&d_int);
    let c = lin.iter().map(|l| rho - l - gen.uniform(0.05, 1.0)).collect();
    QpInstance { g, h, c, jac, rho }
}

pub fn qp_objective(inst: &QpInstance, d: &[f64]) -> f64 {
    dot(&inst.g, d) + 0.5 * inst.h.quad_form(d)
}

/// Projected gradient ascent (with Nesterov momentum) on the dual
/// `max_{λ ≥ 0} min_d gᵀd + ½dᵀHd + λᵀ(c + Jᵀd − ρ)`; the projection onto
/// the nonnegative orthant is a clamp. Returns the primal objective at the
/// recovered `d(λ)`, the dual value and the primal infeasibility.
pub fn qp_dual_oracle(inst: &QpInstance) -> (f64, f64, f64) {
    let m = inst.c.len();
    let hinv_j: Vec<Vec<f64>> = (0..m).map(|i| spd_solve(&inst.h, &inst.jac.column(i)).unwrap()).collect();
    let mut lip = 0.0;
    for i in 0..m {
        for j in 0..m {
            lip += dot(&inst.jac.column(i), &hinv_j[j]).powi(2);
        }
    }
    let step = 1.0 / lip.sqrt().max(1e-12);
    let hinv_g = spd_solve(&inst.h, &inst.g).unwrap();
    let primal = |lambda: &[f64]| -> Vec<f64> {
        let mut d: Vec<f64> = hinv_g.iter().map(|v| -v).collect();
        for (l, hj) in lambda.iter().zip(&hinv_j) {
            for (dv, hv) in d.iter_mut().zip(hj) {
                *dv -= l * hv;
            }
        }
        d
    };
    let mut lambda = vec![0.0; m];
    let mut prev = lambda.clone();
    for it in 0..200_000 {
        let beta = it as f64 / (it as f64 + 3.0);
        let y: Vec<f64> = lambda.iter().zip(&prev).map(|(l, p)| l + beta * (l - p)).collect();
        let d = primal(&y);
        let grad: Vec<f64> = linearized(&inst.c, &inst.jac, &d).iter().map(|v| v - inst.rho).collect();
        prev = lambda;
        lambda = y.iter().zip(&grad).map(|(yi, gi)| (yi + step * gi).max(0.0)).collect();
        if it % 1000 == 999 {
            let d = primal(&lambda);
            let infeas = linearized(&inst.c, &inst.jac, &d).iter().fold(0.0_f64, |a, v| a.max(v - inst.rho));
            let slack = linearized(&inst.c, &inst.jac, &d);
            let comp = lambda.iter().zip(&slack).map(|(l, s)| (l * (s - inst.rho)).abs()).fold(0.0, f64::max);
            if infeas < 1e-11 && comp < 1e-11 {
                break;
            }
        }
    }
    let d = primal(&lambda);
    let lin = linearized(&inst.c, &inst.jac, &d);
    let dual = qp_objective(inst, &d) + lambda.iter().zip(&lin).map(|(l, v)| l * (v - inst.rho)).sum::<f64>();
    let infeas = lin.iter().fold(0.0_f64, |a, v| a.max(v - inst.rho));
    (qp_objective(inst, &d), dual, infeas)
}

/// Largest of the stationarity, primal feasibility, dual feasibility and
/// complementarity residuals of a QP solution.
pub fn qp_kkt_residual(inst: &QpInstance, sol: &QpSolution) -> f64 {
    let hd = inst.h.mul_vec(&sol.d_qp);
    let jl = inst.jac.mul_vec(&sol.lambda);
    let stat: Vec<f64> = (0..inst.g.len()).map(|i| inst.g[i] + hd[i] + jl[i]).collect();
    let lin = linearized(&inst.c, &inst.jac, &sol.d_qp);
    let primal = lin.iter().fold(0.0_f64, |a, v| a.max(v - inst.rho));
    let dual = sol.lambda.iter().fold(0.0_f64, |a, l| a.max(-l));
    let comp = sol.lambda.iter().zip(&lin).map(|(l, v)| (l * (v - inst.rho)).abs()).fold(0.0, f64::max);
    norm_inf(&stat).max(primal).max(dual).max(comp)
}

/// NNLS by enumerating every passive set: the unconstrained least-squares
/// solution on each subset, kept when nonnegative, best residual wins.
pub fn nnls_brute_force(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = a.cols();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let mut x = vec![0.0; n];
        if !idx.is_empty() {
            let sub = a.select_columns(&idx);
            let normal = sub.transpose().mul(&sub);
            let rhs = sub.tr_mul_vec(b);
            let Ok(z) = spd_solve(&normal, &rhs) else { continue };
            if z.iter().any(|&v| v < 0.0) {
                continue;
            }
            for (&j, v) in idx.iter().zip(z) {
                x[j] = v;
            }
        }
        let ax = a.mul_vec(&x);
        let res: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        if res < best.0 {
            best = (res, x);
        }
    }
    best.1
}
