//! Inequality-constrained NLPs `min f(x) s.t. c(x) ≤ 0` with exact oracles.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::linalg::Mat;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64], &mut Mat) + Send + Sync>;

/// Where a reference solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// Published value for the problem.
    Published,
    /// Computed for this corpus and certified by a KKT residual check.
    Derived,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Published => "published",
            Provenance::Derived => "derived",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub x: Vec<f64>,
    pub f: f64,
    pub provenance: Provenance,
}

/// Exact first-order information at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub f: f64,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    /// `n × m`; column `i` is `∇cᵢ`.
    pub jac: Mat,
}

/// An NLP with analytic objective, constraints and derivatives.
///
/// Constraints are always stored as `c(x) ≤ 0`; the Jacobian is `n × m` with
/// one column per constraint gradient.
#[derive(Clone)]
pub struct Problem {
    name: String,
    n: usize,
    m: usize,
    x0: Vec<f64>,
    reference: Option<Reference>,
    objective: ScalarFn,
    gradient: VectorFn,
    constraints: VectorFn,
    jacobian: MatrixFn,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("x0", &self.x0)
            .field("reference", &self.reference)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Builds a problem from its oracles. `gradient` writes `n` entries,
    /// `constraints` writes `m` entries and `jacobian` fills an `n × m` matrix.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        x0: Vec<f64>,
        objective: ScalarFn,
        gradient: VectorFn,
        constraints: VectorFn,
        jacobian: MatrixFn,
    ) -> Self {
        assert_eq!(x0.len(), n, "start point dimension");
        Self {
            name: name.into(),
            n,
            m,
            x0,
            reference: None,
            objective,
            gradient,
            constraints,
            jacobian,
        }
    }

    pub fn with_reference(mut self, x: Vec<f64>, f: f64, provenance: Provenance) -> Self {
        assert_eq!(x.len(), self.n, "reference dimension");
        self.reference = Some(Reference { x, f, provenance });
        self
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), self.n, "start point dimension");
        self.x0 = x0;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        (self.gradient)(x, &mut g);
        g
    }

    pub fn constraints(&self, x: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.m];
        (self.constraints)(x, &mut c);
        c
    }

    pub fn jacobian(&self, x: &[f64]) -> Mat {
        let mut j = Mat::zeros(self.n, self.m);
        (self.jacobian)(x, &mut j);
        j
    }

    /// Exact `f`, `∇f`, `c` and `∇c` at `x`.
    pub fn eval_true(&self, x: &[f64]) -> Evaluation {
        debug_assert_eq!(x.len(), self.n);
        Evaluation {
            f: self.objective(x),
            g: self.gradient(x),
            c: self.constraints(x),
            jac: self.jacobian(x),
        }
    }
}

/// Constraint violation `‖max(c, 0)‖∞`.
pub fn violation(c: &[f64]) -> f64 {
    c.iter().fold(0.0, |v, &ci| v.max(ci))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violation_of_feasible_point_is_zero() {
        assert_eq!(violation(&[-1.0, -2.0]), 0.0);
        assert_eq!(violation(&[0.0, 0.0]), 0.0);
        assert_eq!(violation(&[]), 0.0);
    }

    #[test]
    fn violation_takes_largest_positive_part() {
        assert_eq!(violation(&[0.3, -5.0, 0.7]), 0.7);
    }
}
