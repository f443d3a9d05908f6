//! Small dense square matrices, induced norms and an LU kernel.
//!
//! Everything in this crate works on desk-scale systems (n rarely above a
//! handful), so matrices are stored row-major in a flat `Vec<f64>` and the
//! hot loops reuse an [`LuWorkspace`] instead of allocating.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot size below which a factorization is reported singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

/// Condition estimate above which inverse evaluations are logged.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Induced matrix norm (and the matching vector norm).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Max absolute row sum.
    #[default]
    Inf,
    /// Max absolute column sum.
    One,
}

impl Norm {
    pub fn vector(self, v: &[f64]) -> f64 {
        match self {
            Norm::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Norm::One => v.iter().map(|x| x.abs()).sum(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Norm::Inf => "inf",
            Norm::One => "one",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "linf" => Ok(Norm::Inf),
            "one" | "1" | "l1" => Ok(Norm::One),
            other => Err(Error::Input(format!("unknown norm '{other}' (expected inf or one)"))),
        }
    }
}

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a flat row-major slice of length `n * n`.
    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Input(format!("expected {} entries for a {n}x{n} matrix, got {}", n * n, data.len())));
        }
        Ok(Matrix { n, data: data.to_vec() })
    }

    /// Builds a matrix from nested rows; every row must have the same
    /// length as the number of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::Input(format!("row {i} has {} entries, matrix must be square ({n}x{n})", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n.max(1)).take(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        self.rows().map(|r| dot(r, x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "dimension mismatch in matmul");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn abs(&self) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|x| x.abs()).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|x| s * x).collect() }
    }

    /// Entrywise maximum.
    pub fn max_entrywise(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a.max(*b)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm(&self, which: Norm) -> f64 {
        induced_norm(self.n, &self.data, which)
    }

    /// Absolute row sums `|A| e`.
    pub fn abs_row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().map(|x| x.abs()).sum()).collect()
    }

    pub fn determinant(&self) -> f64 {
        let mut ws = LuWorkspace::new(self.n);
        ws.determinant(&self.data)
    }

    /// Inverse by LU with partial pivoting, `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let mut ws = LuWorkspace::new(self.n);
        if !ws.factor(&self.data) {
            return None;
        }
        let mut inv = Matrix::zeros(self.n);
        ws.inverse_into(&mut inv.data);
        Some(inv)
    }

    /// Solves `A x = b`, `None` when singular.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let mut ws = LuWorkspace::new(self.n);
        if !ws.factor(&self.data) {
            return None;
        }
        let mut x = b.to_vec();
        ws.solve_in_place(&mut x);
        Some(x)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Induced norm of a flat row-major `n x n` matrix.
pub(crate) fn induced_norm(n: usize, data: &[f64], which: Norm) -> f64 {
    match which {
        Norm::Inf => data.chunks_exact(n.max(1)).map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
        Norm::One => (0..n).map(|j| (0..n).map(|i| data[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max),
    }
}

/// Reusable LU factorization buffers for repeated small solves.
#[derive(Clone, Debug)]
pub struct LuWorkspace {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    sign: f64,
    col: Vec<f64>,
    rhs: Vec<f64>,
    inv: Vec<f64>,
}

impl LuWorkspace {
    pub fn new(n: usize) -> Self {
        LuWorkspace {
            n,
            lu: vec![0.0; n * n],
            piv: (0..n).collect(),
            sign: 1.0,
            col: vec![0.0; n],
            rhs: vec![0.0; n],
            inv: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Factors `a` in place of the workspace. Returns `false` when a pivot
    /// falls below `SINGULAR_PIVOT_RTOL` relative to the matrix magnitude;
    /// the partial factorization is then left in an unspecified state.
    pub fn factor(&mut self, a: &[f64]) -> bool {
        let n = self.n;
        self.lu.copy_from_slice(a);
        for (i, p) in self.piv.iter_mut().enumerate() {
            *p = i;
        }
        self.sign = 1.0;
        let scale = induced_norm(n, a, Norm::Inf);
        if !scale.is_finite() {
            return false;
        }
        let tol = SINGULAR_PIVOT_RTOL * scale;
        let lu = &mut self.lu;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let v = lu[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tol || best == 0.0 {
                return false;
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                self.piv.swap(k, p);
                self.sign = -self.sign;
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let m = lu[r * n + k] / pivot;
                lu[r * n + k] = m;
                if m != 0.0 {
                    for c in (k + 1)..n {
                        lu[r * n + c] -= m * lu[k * n + c];
                    }
                }
            }
        }
        true
    }

    /// Determinant by elimination. Unlike [`LuWorkspace::factor`] this never
    /// applies a singularity cutoff: an exactly zero pivot column yields 0.
    pub fn determinant(&mut self, a: &[f64]) -> f64 {
        let n = self.n;
        self.lu.copy_from_slice(a);
        let lu = &mut self.lu;
        let mut det = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let v = lu[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                det = -det;
            }
            let pivot = lu[k * n + k];
            det *= pivot;
            for r in (k + 1)..n {
                let m = lu[r * n + k] / pivot;
                if m != 0.0 {
                    for c in (k + 1)..n {
                        lu[r * n + c] -= m * lu[k * n + c];
                    }
                }
            }
        }
        det
    }

    /// Solves with the current factorization, overwriting `b` with `x`.
    pub fn solve_in_place(&mut self, b: &mut [f64]) {
        let n = self.n;
        let lu = &self.lu;
        for (i, &p) in self.piv.iter().enumerate() {
            self.col[i] = b[p];
        }
        let x = &mut self.col;
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= lu[i * n + j] * x[j];
            }
            x[i] = s / lu[i * n + i];
        }
        b.copy_from_slice(x);
    }

    /// Writes the inverse of the factored matrix (row-major) into `out`.
    pub fn inverse_into(&mut self, out: &mut [f64]) {
        let n = self.n;
        let mut e = std::mem::take(&mut self.rhs);
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.solve_in_place(&mut e);
            for i in 0..n {
                out[i * n + j] = e[i];
            }
        }
        self.rhs = e;
    }

    /// Determinant of the matrix last accepted by [`LuWorkspace::factor`].
    pub fn factored_determinant(&self) -> f64 {
        let n = self.n;
        (0..n).fold(self.sign, |d, k| d * self.lu[k * n + k])
    }

    /// `‖a⁻¹‖` in the requested norm, `None` when `a` is singular.
    pub fn inverse_norm(&mut self, a: &[f64], which: Norm) -> Option<f64> {
        if !self.factor(a) {
            return None;
        }
        let mut inv = std::mem::take(&mut self.inv);
        self.inverse_into(&mut inv);
        let value = induced_norm(self.n, &inv, which);
        self.inv = inv;
        if log::log_enabled!(log::Level::Debug) {
            let cond = value * induced_norm(self.n, a, which);
            if cond > ILL_CONDITIONED {
                log::debug!("ill-conditioned evaluation: condition estimate {cond:.3e}");
            }
        }
        Some(value)
    }
}

/// Spectral radius of an entrywise nonnegative matrix.
///
/// Power iteration is run on `I + M`, which shares the Perron vector of `M`
/// and is primitive whenever `M` is irreducible, so periodic matrices such
/// as `[[0,1],[2,0]]` do not oscillate. Convergence is judged on the
/// Collatz–Wielandt bracket `min (Mv)_i/v_i <= rho <= max (Mv)_i/v_i`.
/// Reducible matrices can stall the bracket; those fall back to repeated
/// normalized squaring, `rho = lim ‖M^p‖^(1/p)`.
pub fn spectral_radius_nonnegative(m: &Matrix, max_iter: usize, tol: f64) -> f64 {
    let n = m.dim();
    debug_assert!(m.as_slice().iter().all(|&x| x >= 0.0));
    if n == 0 || m.max_abs() == 0.0 {
        return 0.0;
    }
    let mut v = vec![1.0; n];
    for _ in 0..max_iter {
        let mv = m.mul_vec(&v);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = mv[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= tol * hi.max(1.0) {
            return 0.5 * (lo + hi);
        }
        // (I + M) v, renormalized
        let mut next: Vec<f64> = v.iter().zip(&mv).map(|(a, b)| a + b).collect();
        let s = next.iter().fold(0.0f64, |a, &b| a.max(b));
        next.iter_mut().for_each(|x| *x /= s);
        if next.iter().any(|&x| x <= f64::MIN_POSITIVE) {
            break;
        }
        v = next;
    }
    spectral_radius_by_squaring(m)
}

fn spectral_radius_by_squaring(m: &Matrix) -> f64 {
    // After t squarings s holds M^(2^t) / exp(log_scale).
    let mut s = m.clone();
    let mut log_scale = 0.0f64;
    let mut estimate = 0.0;
    for t in 0..60 {
        let norm = s.norm(Norm::Inf);
        if norm == 0.0 {
            return 0.0;
        }
        let p = 2f64.powi(t);
        estimate = ((log_scale + norm.ln()) / p).exp();
        s = s.scale(1.0 / norm);
        log_scale = 2.0 * (log_scale + norm.ln());
        s = s.matmul(&s);
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn norms() {
        assert_eq!(Matrix::identity(3).norm(Norm::Inf), 1.0);
        assert_eq!(m(&[[1.0, 1.0], [-1.0, 1.0]]).norm(Norm::Inf), 2.0);
        assert_eq!(m(&[[1.0, 0.0], [-2.0, 1.0]]).norm(Norm::One), 3.0);
        assert_eq!(Norm::One.vector(&[1.0, -2.0]), 3.0);
        assert_eq!(Norm::Inf.vector(&[1.0, -2.0]), 2.0);
    }

    #[test]
    fn non_square_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Matrix::from_row_slice(2, &[1.0; 3]).is_err());
    }

    #[test]
    fn inverse_and_determinant() {
        let a = m(&[[4.0, 1.0], [0.0, 1.0]]);
        assert_abs_diff_eq!(a.determinant(), 4.0, epsilon = 1e-15);
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(prod[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        // pivoting needed
        let p = m(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_abs_diff_eq!(p.determinant(), -1.0);
        assert_eq!(p.solve(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let s = m(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(s.inverse().is_none());
        assert_eq!(s.determinant(), 0.0);
        let mut ws = LuWorkspace::new(2);
        assert!(ws.inverse_norm(s.as_slice(), Norm::Inf).is_none());
    }

    #[test]
    fn spectral_radius_periodic_and_nilpotent() {
        assert_abs_diff_eq!(
            spectral_radius_nonnegative(&m(&[[0.0, 1.0], [2.0, 0.0]]), 500, 1e-10),
            2f64.sqrt(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            spectral_radius_nonnegative(&m(&[[0.0, 0.5], [0.0, 0.0]]), 500, 1e-10),
            0.0,
            epsilon = 1e-9
        );
        // reducible with a Jordan block: eigenvalue 1 twice
        assert_abs_diff_eq!(
            spectral_radius_nonnegative(&m(&[[1.0, 1.0], [0.0, 1.0]]), 500, 1e-10),
            1.0,
            epsilon = 1e-9
        );
        let a = Matrix::from_rows(&[[0.5, 0.2, 0.0], [0.1, 0.3, 0.4], [0.0, 0.6, 0.2]]).unwrap();
        // characteristic polynomial root found independently by bisection
        let charpoly = |l: f64| {
            let b = a.sub(&Matrix::identity(3).scale(l));
            b.determinant()
        };
        let (mut lo, mut hi) = (0.6, 1.2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if charpoly(lo).signum() == charpoly(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_abs_diff_eq!(spectral_radius_nonnegative(&a, 500, 1e-12), lo, epsilon = 1e-9);
    }
}
