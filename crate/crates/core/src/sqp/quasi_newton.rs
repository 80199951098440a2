//! Least-squares multiplier estimates and the noise-aware BFGS update.

use crate::linalg::{dot, is_positive_definite, nnls, norm2, norm_inf, LinalgError, Mat};

/// Near-active threshold `ε_c + 1e-8 (1 + ‖c̃‖∞)`.
pub fn default_active_tol(eps_c: f64, c: &[f64]) -> f64 {
    eps_c + 1e-8 * (1.0 + norm_inf(c))
}

/// Nonnegative least-squares multipliers over the constraints with
/// `c̃ᵢ ≥ −active_tol`, minimizing `‖g̃ + Σ λᵢ ∇̃cᵢ‖₂`.
pub fn estimate_multipliers(g: &[f64], c: &[f64], jac: &Mat, active_tol: f64) -> Result<Vec<f64>, LinalgError> {
    let m = c.len();
    let near: Vec<usize> = (0..m).filter(|&i| c[i] >= -active_tol).collect();
    let mut lambda = vec![0.0; m];
    if near.is_empty() {
        return Ok(lambda);
    }
    let a = jac.select_columns(&near);
    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    let sol = nnls(&a, &rhs)?;
    for (&i, l) in near.iter().zip(sol) {
        lambda[i] = l;
    }
    Ok(lambda)
}

/// Why an update was declined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    ZeroStep,
    Curvature,
    NoiseFloor,
    NotPositiveDefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub hess: Mat,
    pub skipped: Option<SkipReason>,
}

impl BfgsOutcome {
    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

/// BFGS update of `hess`, performed only if `yᵀs ≥ qn_damping · sᵀHs` and
/// `yᵀs ≥ (eps_g + lambda_inf · eps_j) ‖s‖₂`. A skipped update returns `hess`
/// unchanged.
pub fn bfgs_update(
    hess: &Mat,
    s: &[f64],
    y: &[f64],
    eps_g: f64,
    eps_j: f64,
    lambda_inf: f64,
    qn_damping: f64,
) -> BfgsOutcome {
    let skip = |reason| BfgsOutcome { hess: hess.clone(), skipped: Some(reason) };
    if s.iter().all(|&v| v == 0.0) {
        return skip(SkipReason::ZeroStep);
    }
    let ys = dot(y, s);
    let hs = hess.mul_vec(s);
    let shs = dot(s, &hs);
    if !(ys >= qn_damping * shs) {
        return skip(SkipReason::Curvature);
    }
    if !(ys >= (eps_g + lambda_inf * eps_j) * norm2(s)) {
        return skip(SkipReason::NoiseFloor);
    }
    let n = s.len();
    let mut out = hess.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] += y[i] * y[j] / ys - hs[i] * hs[j] / shs;
        }
    }
    if !is_positive_definite(&out) {
        return skip(SkipReason::NotPositiveDefinite);
    }
    BfgsOutcome { hess: out, skipped: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_near_active_constraints() {
        let jac = Mat::from_rows(&[[1.0], [0.0]]);
        assert_eq!(estimate_multipliers(&[1.0, 0.0], &[-1.0], &jac, 1e-6).unwrap(), vec![0.0]);
    }

    #[test]
    fn exact_cancellation_and_clamp() {
        let jac = Mat::from_rows(&[[-1.0], [0.0]]);
        let l = estimate_multipliers(&[1.0, 0.0], &[0.0], &jac, 1e-8).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-15);
        let l = estimate_multipliers(&[-1.0, 0.0], &[0.0], &jac, 1e-8).unwrap();
        assert_eq!(l, vec![0.0]);
    }

    #[test]
    fn active_tol_admits_slightly_negative_constraints() {
        let jac = Mat::from_rows(&[[-1.0, 1.0], [0.0, 0.0]]);
        let l = estimate_multipliers(&[1.0, 0.0], &[-1e-9, -0.5], &jac, default_active_tol(0.0, &[-1e-9, -0.5]))
            .unwrap();
        assert!((l[0] - 1.0).abs() < 1e-15);
        assert_eq!(l[1], 0.0);
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let s = [0.3, -1.2, 0.5];
        let out = bfgs_update(&Mat::identity(3), &s, &s, 0.0, 0.0, 0.0, 1e-3);
        assert!(!out.is_skipped());
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((out.hess[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn negative_curvature_is_skipped() {
        let h = Mat::identity(2);
        let out = bfgs_update(&h, &[1.0, 0.0], &[-1.0, 0.0], 0.0, 0.0, 0.0, 1e-3);
        assert_eq!(out.skipped, Some(SkipReason::Curvature));
        assert_eq!(out.hess, h);
    }

    #[test]
    fn curvature_below_noise_floor_is_skipped() {
        // yᵀs = 1e-6 ‖s‖ against a floor of 1e-2 ‖s‖; H scaled so the damping test passes
        let h = Mat::diag(&[1e-8, 1e-8]);
        let s = [3.0, 4.0];
        let y = [1e-6 * 3.0 / 5.0, 1e-6 * 4.0 / 5.0];
        assert!((dot(&y, &s) - 1e-6 * norm2(&s)).abs() < 1e-18);
        let out = bfgs_update(&h, &s, &y, 5e-3, 5e-3, 1.0, 1e-3);
        assert_eq!(out.skipped, Some(SkipReason::NoiseFloor));
        assert_eq!(out.hess, h);
    }

    #[test]
    fn update_satisfies_secant_equation() {
        let h = Mat::from_rows(&[[2.0, 0.3], [0.3, 1.0]]);
        let s = [0.5, -0.25];
        let y = [1.2, -0.1];
        let out = bfgs_update(&h, &s, &y, 0.0, 0.0, 0.0, 1e-3);
        assert!(!out.is_skipped());
        let hs = out.hess.mul_vec(&s);
        assert!((hs[0] - y[0]).abs() < 1e-14 && (hs[1] - y[1]).abs() < 1e-14);
        assert!(out.hess.is_symmetric());
    }

    #[test]
    fn zero_step_is_skipped() {
        let out = bfgs_update(&Mat::identity(2), &[0.0, 0.0], &[1.0, 0.0], 0.0, 0.0, 0.0, 1e-3);
        assert_eq!(out.skipped, Some(SkipReason::ZeroStep));
    }
}
