//! Dual active-set method (Goldfarb–Idnani) for strictly convex QPs
//! `min gᵀd + ½dᵀHd s.t. aᵢᵀd ≤ bᵢ`.
//!
//! The active-constraint system is refactorized from scratch on every change;
//! at the problem sizes handled here that is cheaper than maintaining updates.

use crate::linalg::{dot, norm_inf, Cholesky, LinalgError, Mat};

use super::SubproblemError;

/// Relative size of `z` below which a new constraint is taken to be linearly
/// dependent on the active set.
pub const DEPENDENCE_TOL: f64 = 1e-10;

pub(crate) struct DualActiveSet<'a> {
    g: &'a [f64],
    h: Cholesky,
    /// `n × m`, column `i` is `aᵢ`
    a: &'a Mat,
    b: Vec<f64>,
    pub(crate) d: Vec<f64>,
    pub(crate) active: Vec<usize>,
    pub(crate) lambda: Vec<f64>,
    changes: usize,
    max_changes: usize,
    excluded: Vec<bool>,
}

impl<'a> DualActiveSet<'a> {
    pub(crate) fn new(g: &'a [f64], hess: &Mat, a: &'a Mat, b: Vec<f64>) -> Result<Self, SubproblemError> {
        let h = Cholesky::factor(hess)?;
        let mut d = h.solve(g);
        d.iter_mut().for_each(|v| *v = -*v);
        let m = a.cols();
        Ok(Self {
            g,
            h,
            a,
            b,
            d,
            active: Vec::new(),
            lambda: Vec::new(),
            changes: 0,
            max_changes: 10 * (m + 1),
            excluded: vec![false; m],
        })
    }

    fn column(&self, i: usize) -> Vec<f64> {
        self.a.column(i)
    }

    fn slack_violation(&self, i: usize) -> f64 {
        let ad = (0..self.a.rows()).map(|r| self.a[(r, i)] * self.d[r]).sum::<f64>();
        ad - self.b[i]
    }

    fn tolerance(&self, i: usize) -> f64 {
        let col = self.column(i);
        let scale = 1.0 + self.b[i].abs() + norm_inf(&col) * norm_inf(&self.d);
        1e-12 * scale
    }

    /// `Nᵀ H⁻¹ N` for the given columns, factorized.
    fn schur(&self, cols: &[Vec<f64>], hinv_cols: &[Vec<f64>]) -> Result<Cholesky, LinalgError> {
        let k = cols.len();
        let mut s = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = dot(&cols[i], &hinv_cols[j]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Cholesky::factor(&s)
    }

    /// Starts from the equality-constrained optimum on `hint` when its
    /// multipliers are nonnegative; otherwise keeps the unconstrained start.
    pub(crate) fn warm_start(&mut self, hint: &[usize]) {
        let mut chosen: Vec<usize> = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut hinv: Vec<Vec<f64>> = Vec::new();
        for &i in hint {
            let c = self.column(i);
            let hc = self.h.solve(&c);
            cols.push(c);
            hinv.push(hc);
            chosen.push(i);
            let ok = self.schur(&cols, &hinv).map(|s| {
                let l = s.factor_l();
                let k = cols.len() - 1;
                l[(k, k)] * l[(k, k)] > DEPENDENCE_TOL * dot(&cols[k], &hinv[k])
            });
            if !matches!(ok, Ok(true)) {
                cols.pop();
                hinv.pop();
                chosen.pop();
            }
        }
        if chosen.is_empty() {
            return;
        }
        let Ok(s) = self.schur(&cols, &hinv) else { return };
        let hinv_g = self.h.solve(self.g);
        let rhs: Vec<f64> = chosen.iter().zip(&cols).map(|(&i, c)| -self.b[i] - dot(c, &hinv_g)).collect();
        let lambda = s.solve(&rhs);
        if lambda.iter().any(|&l| l < 0.0) {
            return;
        }
        let mut d: Vec<f64> = hinv_g.iter().map(|v| -v).collect();
        for (l, hc) in lambda.iter().zip(&hinv) {
            for (dv, hv) in d.iter_mut().zip(hc) {
                *dv -= l * hv;
            }
        }
        self.d = d;
        self.active = chosen;
        self.lambda = lambda;
    }

    fn drop_active(&mut self, pos: usize) -> Result<(), SubproblemError> {
        self.active.remove(pos);
        self.lambda.remove(pos);
        self.bump()
    }

    fn bump(&mut self) -> Result<(), SubproblemError> {
        self.changes += 1;
        if self.changes > self.max_changes {
            return Err(SubproblemError::MaxActiveSetChanges { limit: self.max_changes });
        }
        Ok(())
    }

    pub(crate) fn solve(&mut self) -> Result<(), SubproblemError> {
        let m = self.a.cols();
        loop {
            // most violated inactive constraint
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                if self.excluded[i] || self.active.contains(&i) {
                    continue;
                }
                let s = self.slack_violation(i);
                if s > self.tolerance(i) && best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((i, s));
                }
            }
            let Some((p, _)) = best else { break };
            self.add_constraint(p)?;
        }
        self.polish();
        Ok(())
    }

    fn add_constraint(&mut self, p: usize) -> Result<(), SubproblemError> {
        let ap = self.column(p);
        let hinv_ap = self.h.solve(&ap);
        let mut t_p = 0.0;
        loop {
            let cols: Vec<Vec<f64>> = self.active.iter().map(|&i| self.column(i)).collect();
            let hinv: Vec<Vec<f64>> = cols.iter().map(|c| self.h.solve(c)).collect();
            // r = −(NᵀH⁻¹N)⁻¹ NᵀH⁻¹ a_p ; z = −H⁻¹(a_p + N r)
            let r: Vec<f64> = if cols.is_empty() {
                Vec::new()
            } else {
                let s = self.schur(&cols, &hinv)?;
                let rhs: Vec<f64> = cols.iter().map(|c| -dot(c, &hinv_ap)).collect();
                s.solve(&rhs)
            };
            let mut z: Vec<f64> = hinv_ap.iter().map(|v| -v).collect();
            for (ri, hc) in r.iter().zip(&hinv) {
                for (zv, hv) in z.iter_mut().zip(hc) {
                    *zv -= ri * hv;
                }
            }
            let dependent = norm_inf(&z) <= DEPENDENCE_TOL * norm_inf(&hinv_ap);

            let violation = self.slack_violation(p);
            let t2 = if dependent {
                f64::INFINITY
            } else {
                let az = dot(&ap, &z);
                if az < 0.0 {
                    -violation / az
                } else {
                    f64::INFINITY
                }
            };
            let mut t1 = f64::INFINITY;
            let mut block = None;
            for (k, (&lk, &rk)) in self.lambda.iter().zip(&r).enumerate() {
                if rk < 0.0 {
                    let t = lk / -rk;
                    if t < t1 {
                        t1 = t;
                        block = Some(k);
                    }
                }
            }
            let t = t1.min(t2);
            if !t.is_finite() {
                // dependent and no multiplier can absorb it: the residual is rounding
                self.excluded[p] = true;
                return Ok(());
            }
            if !dependent {
                for (dv, zv) in self.d.iter_mut().zip(&z) {
                    *dv += t * zv;
                }
            }
            for (l, rk) in self.lambda.iter_mut().zip(&r) {
                *l = (*l + t * rk).max(0.0);
            }
            t_p += t;
            if t2 <= t1 {
                self.active.push(p);
                self.lambda.push(t_p);
                return self.bump();
            }
            let k = block.expect("finite partial step has a blocking constraint");
            self.drop_active(k)?;
        }
    }

    /// Recomputes `(d, λ)` from the final active set; kept only when it does
    /// not break dual feasibility or primal feasibility.
    fn polish(&mut self) {
        if self.active.is_empty() {
            return;
        }
        let cols: Vec<Vec<f64>> = self.active.iter().map(|&i| self.column(i)).collect();
        let hinv: Vec<Vec<f64>> = cols.iter().map(|c| self.h.solve(c)).collect();
        let Ok(s) = self.schur(&cols, &hinv) else { return };
        let hinv_g = self.h.solve(self.g);
        let rhs: Vec<f64> =
            self.active.iter().zip(&cols).map(|(&i, c)| -self.b[i] - dot(c, &hinv_g)).collect();
        let lambda = s.solve(&rhs);
        let lscale = 1e-12 * (1.0 + norm_inf(&self.lambda));
        if lambda.iter().any(|&l| l < -lscale) {
            return;
        }
        let mut d: Vec<f64> = hinv_g.iter().map(|v| -v).collect();
        for (l, hc) in lambda.iter().zip(&hinv) {
            for (dv, hv) in d.iter_mut().zip(hc) {
                *dv -= l * hv;
            }
        }
        let old_d = std::mem::replace(&mut self.d, d);
        let m = self.a.cols();
        let feasible = (0..m).all(|i| self.excluded[i] || self.slack_violation(i) <= self.tolerance(i));
        if feasible {
            self.lambda = lambda.into_iter().map(|l| l.max(0.0)).collect();
        } else {
            self.d = old_d;
        }
    }
}
