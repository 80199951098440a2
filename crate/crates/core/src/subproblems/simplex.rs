//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `min cᵀx s.t. A x ≤ b, x ≥ 0` for `b` of any sign.

use crate::linalg::Mat;

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64, pivots: usize },
    Infeasible { pivots: usize },
    Unbounded { pivots: usize },
    PivotLimit { pivots: usize },
}

struct Tableau {
    /// constraint rows followed by the objective row; last column is the rhs
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// columns that may enter the basis
    allowed: Vec<bool>,
    pivots: usize,
    limit: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.t[0].len() - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.t[r][col];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[col];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Runs primal simplex on the current objective row with Bland's rule.
    fn run(&mut self) -> Step {
        let obj = self.rows();
        let rhs = self.rhs_col();
        loop {
            // Bland: lowest-index improving column
            let entering = (0..rhs).find(|&j| self.allowed[j] && self.t[obj][j] < -COST_TOL);
            let Some(col) = entering else { return Step::Optimal };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let a = self.t[r][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][rhs] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-14 * lratio.abs().max(1.0)
                                || (ratio <= lratio + 1e-14 * lratio.abs().max(1.0)
                                    && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Step::Unbounded };
            if self.pivots >= self.limit {
                return Step::Limit;
            }
            self.pivot(r, col);
        }
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let obj = self.rows();
        let width = self.t[0].len();
        let mut row = vec![0.0; width];
        row[..cost.len()].copy_from_slice(cost);
        // price out basic columns
        for r in 0..self.rows() {
            let b = self.basis[r];
            let cb = row[b];
            if cb != 0.0 {
                for (v, tv) in row.iter_mut().zip(&self.t[r]) {
                    *v -= cb * tv;
                }
            }
        }
        self.t[obj] = row;
    }
}

/// Minimizes `cᵀx` over `{x ≥ 0 : A x ≤ b}`, stopping after `pivot_limit`
/// pivots in total.
pub fn minimize(cost: &[f64], a: &Mat, b: &[f64], pivot_limit: usize) -> LpOutcome {
    let (nr, nx) = (a.rows(), a.cols());
    assert_eq!(cost.len(), nx);
    assert_eq!(b.len(), nr);

    let artificial_rows: Vec<usize> = (0..nr).filter(|&r| b[r] < 0.0).collect();
    let na = artificial_rows.len();
    let width = nx + nr + na + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; nr + 1];
    let mut basis = vec![0; nr];
    let mut art = 0;
    for r in 0..nr {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nx {
            t[r][j] = sign * a[(r, j)];
        }
        t[r][nx + r] = sign;
        t[r][rhs] = sign * b[r];
        if b[r] < 0.0 {
            t[r][nx + nr + art] = 1.0;
            basis[r] = nx + nr + art;
            art += 1;
        } else {
            basis[r] = nx + r;
        }
    }
    let mut tab = Tableau { t, basis, allowed: vec![true; width - 1], pivots: 0, limit: pivot_limit };

    if na > 0 {
        let mut phase1 = vec![0.0; width - 1];
        phase1[nx + nr..].iter_mut().for_each(|v| *v = 1.0);
        tab.set_objective(&phase1);
        match tab.run() {
            Step::Optimal => {}
            Step::Limit => return LpOutcome::PivotLimit { pivots: tab.pivots },
            // phase 1 is bounded below by zero
            Step::Unbounded => return LpOutcome::Infeasible { pivots: tab.pivots },
        }
        let infeas = -tab.t[nr][rhs];
        let scale = 1.0 + b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if infeas > 1e-9 * scale {
            return LpOutcome::Infeasible { pivots: tab.pivots };
        }
        // drive zero-level artificials out of the basis
        for r in 0..nr {
            if tab.basis[r] >= nx + nr {
                if let Some(col) = (0..nx + nr).find(|&j| tab.t[r][j].abs() > 1e-9) {
                    tab.pivot(r, col);
                }
            }
        }
        for j in nx + nr..width - 1 {
            tab.allowed[j] = false;
        }
    }

    let mut phase2 = vec![0.0; width - 1];
    phase2[..nx].copy_from_slice(cost);
    tab.set_objective(&phase2);
    match tab.run() {
        Step::Optimal => {}
        Step::Limit => return LpOutcome::PivotLimit { pivots: tab.pivots },
        Step::Unbounded => return LpOutcome::Unbounded { pivots: tab.pivots },
    }
    let mut x = vec![0.0; nx];
    for r in 0..nr {
        if tab.basis[r] < nx {
            x[tab.basis[r]] = tab.t[r][rhs].max(0.0);
        }
    }
    let objective = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { x, objective, pivots: tab.pivots }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: LpOutcome) -> (Vec<f64>, f64) {
        match o {
            LpOutcome::Optimal { x, objective, .. } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let a = Mat::from_rows(&[[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]]);
        let (x, obj) = optimal(minimize(&[-3.0, -5.0], &a, &[4.0, 12.0, 18.0], 100));
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        assert!((obj + 36.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // min x + y s.t. x + y ≥ 2 (−x − y ≤ −2), x ≤ 3
        let a = Mat::from_rows(&[[-1.0, -1.0], [1.0, 0.0]]);
        let (x, obj) = optimal(minimize(&[1.0, 1.0], &a, &[-2.0, 3.0], 100));
        assert!((obj - 2.0).abs() < 1e-12);
        assert!((x[0] + x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        // x ≤ −1 with x ≥ 0
        let a = Mat::from_rows(&[[1.0]]);
        assert!(matches!(minimize(&[1.0], &a, &[-1.0], 100), LpOutcome::Infeasible { .. }));
        // min −x s.t. −x ≤ 1
        let a = Mat::from_rows(&[[-1.0]]);
        assert!(matches!(minimize(&[-1.0], &a, &[1.0], 100), LpOutcome::Unbounded { .. }));
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example under the textbook rule; Bland's rule terminates.
        let a = Mat::from_rows(&[
            [0.25, -60.0, -1.0 / 25.0, 9.0],
            [0.5, -90.0, -1.0 / 50.0, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ]);
        let (_, obj) = optimal(minimize(&[-0.75, 150.0, -1.0 / 50.0, 6.0], &a, &[0.0, 0.0, 1.0], 1000));
        assert!((obj + 0.05).abs() < 1e-12);
    }
}
