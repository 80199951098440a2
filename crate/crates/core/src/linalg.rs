//! Small dense linear algebra: a row-major matrix, a Cholesky kernel and a
//! Lawson–Hanson NNLS solver. Problems handled here have n, m < 100.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cholesky pivots at or below this fraction of the largest diagonal entry
/// are treated as a failure of positive definiteness.
pub const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("nnls did not converge within {limit} passes")]
    IterationLimit { limit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    /// Diagonal matrix with the given entries.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `xᵀ A x` for square `A`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Columns `idx` as a new `rows × idx.len()` matrix.
    pub fn select_columns(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (k, &j) in idx.iter().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                let a = self[(i, j)];
                if (a - self[(j, i)]).abs() > 1e-12 * a.abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].abs()).fold(0.0, f64::max)
    }

    /// Matrix infinity norm: largest row ℓ₁ norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    /// Factorizes a symmetric matrix, reading only its lower triangle.
    pub fn factor(a: &Mat) -> Result<Self, LinalgError> {
        if a.rows() != a.cols() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cholesky of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let floor = PIVOT_FLOOR * a.max_abs_diag();
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor_l(&self) -> &Mat {
        &self.l
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        // L y = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn spd_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs of length {} for a {}x{} system",
            b.len(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(Cholesky::factor(a)?.solve(b))
}

/// Positive-definiteness predicate used by the quasi-Newton safeguards.
pub fn is_positive_definite(a: &Mat) -> bool {
    a.is_symmetric() && Cholesky::factor(a).is_ok()
}

/// Non-negative least squares: `min ‖A λ − b‖₂` subject to `λ ≥ 0`.
///
/// Lawson–Hanson active-set method. Columns that are numerically dependent on
/// the current passive set are never admitted, so the inner least-squares
/// problems stay full rank even when `A` is not.
pub fn nnls(a: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let (rows, cols) = (a.rows(), a.cols());
    if b.len() != rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "nnls rhs of length {} for {} rows",
            b.len(),
            rows
        )));
    }
    let mut x = vec![0.0; cols];
    if cols == 0 {
        return Ok(x);
    }
    let limit = 3 * cols;
    let scale = 1.0 + norm_inf(&a.tr_mul_vec(b));
    let dual_tol = 1e-12 * scale;
    let mut passive = vec![false; cols];
    let mut rejected = vec![false; cols];
    let mut passes = 0;

    loop {
        // dual vector w = Aᵀ(b − A x)
        let mut resid = b.to_vec();
        axpy(-1.0, &a.mul_vec(&x), &mut resid);
        let w = a.tr_mul_vec(&resid);

        let candidate = (0..cols)
            .filter(|&j| !passive[j] && !rejected[j] && w[j] > dual_tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(t) = candidate else { break };

        let mut set: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        set.push(t);
        set.sort_unstable();
        if !columns_independent(a, &set) {
            rejected[t] = true;
            continue;
        }
        passive[t] = true;
        rejected.iter_mut().for_each(|r| *r = false);

        // inner loop: keep the passive solution strictly positive
        loop {
            passes += 1;
            if passes > limit {
                return Err(LinalgError::IterationLimit { limit });
            }
            let set: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let z_set = least_squares(&a.select_columns(&set), b)?;
            if z_set.iter().all(|&z| z > 0.0) {
                for (&j, &z) in set.iter().zip(&z_set) {
                    x[j] = z;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &z) in set.iter().zip(&z_set) {
                if z <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z));
                }
            }
            for (&j, &z) in set.iter().zip(&z_set) {
                x[j] += alpha * (z - x[j]);
            }
            for &j in &set {
                if x[j] <= 1e-15 * scale {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(x)
}

/// Checks numerical independence of the chosen columns via Gram–Schmidt.
fn columns_independent(a: &Mat, idx: &[usize]) -> bool {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(idx.len());
    for &j in idx {
        let col = a.column(j);
        let norm = norm2(&col);
        if norm == 0.0 {
            return false;
        }
        let mut v = col;
        for _ in 0..2 {
            for q in &basis {
                let p = dot(q, &v);
                axpy(-p, q, &mut v);
            }
        }
        let r = norm2(&v);
        if r <= 1e-10 * norm {
            return false;
        }
        v.iter_mut().for_each(|e| *e /= r);
        basis.push(v);
    }
    true
}

/// Full-column-rank least squares via Householder QR.
fn least_squares(a: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if n > m {
        return Err(LinalgError::DimensionMismatch(format!("underdetermined {m}x{n} least squares")));
    }
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LinalgError::NotPositiveDefinite { row: k, pivot: 0.0 });
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > 0.0 {
            for j in k..n {
                let s = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    r[(i, j)] -= s * v[i - k];
                }
            }
            let s = (k..m).map(|i| v[i - k] * qtb[i]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                qtb[i] -= s * v[i - k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qtb[i];
        for j in i + 1..n {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    Ok(x)
}
