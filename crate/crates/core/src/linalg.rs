//! Dense linear algebra for small real matrices.
//!
//! Everything here is sized for the problems this crate deals with: group
//! elements of `SL(d, R)` with `d <= 6` and their exterior powers, whose
//! dimension stays around 20. The routines favour robustness and
//! determinism over asymptotic speed.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal threshold for one-sided Jacobi: a column pair is considered
/// orthogonal once `|a_p . a_q| <= JACOBI_TOL * |a_p| |a_q|`.
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>14.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.iter().flatten().copied().collect())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|col| col.len() != r) {
            return Err(Error::Shape("ragged columns".into()));
        }
        let mut m = Self::zeros(r.max(1), c.max(1));
        if r == 0 || c == 0 {
            return Err(Error::Shape("empty column set".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// The first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        let mut m = Matrix::zeros(self.rows, k);
        for i in 0..self.rows {
            for j in 0..k {
                m[(i, j)] = self[(i, j)];
            }
        }
        m
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[l * other.cols..(l + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        match n {
            1 => return self.data[0],
            2 => return self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {}
        }
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            let p = a[piv * n + col];
            if p == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f != 0.0 {
                    for j in col..n {
                        a[r * n + j] -= f * a[col * n + j];
                    }
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Shape("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 2 {
            let det = self.det();
            if det == 0.0 || !det.is_finite() {
                return Err(Error::Singular);
            }
            let (a, b, c, d) = (self.data[0], self.data[1], self.data[2], self.data[3]);
            return Ok(Matrix {
                rows: 2,
                cols: 2,
                data: vec![d / det, -b / det, -c / det, a / det],
            });
        }
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[(r, col)].abs() > a[(piv, col)].abs() {
                    piv = r;
                }
            }
            let p = a[(piv, col)];
            if p == 0.0 || !p.is_finite() {
                return Err(Error::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f != 0.0 {
                    for j in 0..n {
                        a[(r, j)] -= f * a[(col, j)];
                        inv[(r, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
        Ok(inv)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        if self.rows == 2 && self.cols == 2 {
            return operator_norm_2x2(&self.data);
        }
        singular_values(self).first().copied().unwrap_or(0.0)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

/// Closed-form largest singular value of a 2x2 matrix.
fn operator_norm_2x2(m: &[f64]) -> f64 {
    let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
    // sigma_1 = (sqrt((a+d)^2 + (c-b)^2) + sqrt((a-d)^2 + (b+c)^2)) / 2
    let s = ((a + d).powi(2) + (c - b).powi(2)).sqrt();
    let t = ((a - d).powi(2) + (b + c).powi(2)).sqrt();
    0.5 * (s + t)
}

/// Result of a singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub left_factor: Matrix,
    pub singular_values: Vec<f64>,
    pub right_factor: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let s = Matrix::from_diag(&self.singular_values);
        self.left_factor
            .matmul(&s)
            .matmul(&self.right_factor.transpose())
    }
}

fn check_square_finite(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Singular values come out non-increasing; ties keep their column order.
/// Columns of `U` belonging to zero singular values are completed to an
/// orthonormal basis.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    check_square_finite(m)?;
    let n = m.rows;
    // Work on columns: a holds the columns of M * V.
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps index order on ties.
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &j in &order {
        let sigma = norms[j];
        singular_values.push(sigma);
        v_cols.push(v[j].clone());
        if sigma > 0.0 {
            u_cols.push(a[j].iter().map(|x| x / sigma).collect());
        } else {
            u_cols.push(vec![0.0; n]);
        }
    }
    // Complete U where singular values vanish.
    for j in 0..n {
        if singular_values[j] == 0.0 {
            u_cols[j] = complement_vector(&u_cols[..j], &u_cols[j + 1..], n);
        }
    }
    Ok(SvdResult {
        left_factor: Matrix::from_columns(&u_cols)?,
        singular_values,
        right_factor: Matrix::from_columns(&v_cols)?,
    })
}

/// Singular values only (non-increasing).
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    match svd(m) {
        Ok(s) => s.singular_values,
        Err(_) => vec![f64::NAN; m.rows.min(m.cols)],
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// A unit vector orthogonal to all (nonzero) vectors given, chosen by
/// Gram-Schmidt over the standard basis.
fn complement_vector(before: &[Vec<f64>], after: &[Vec<f64>], n: usize) -> Vec<f64> {
    let existing: Vec<&Vec<f64>> = before
        .iter()
        .chain(after)
        .filter(|c| c.iter().any(|&x| x != 0.0))
        .collect();
    let mut best = vec![0.0; n];
    let mut best_norm = -1.0;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        for _ in 0..2 {
            for c in &existing {
                let d: f64 = e.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
                for (x, y) in e.iter_mut().zip(c.iter()) {
                    *x -= d * y;
                }
            }
        }
        let nrm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > best_norm {
            best_norm = nrm;
            best = e;
        }
        if nrm > 0.5 {
            break;
        }
    }
    best.iter().map(|x| x / best_norm).collect()
}

/// Householder QR of an `m x n` matrix (`m >= n`): returns the full
/// orthogonal `Q` (`m x m`) and upper-triangular `R` (`m x n`).
fn householder_qr(a: &Matrix) -> (Matrix, Matrix) {
    let m = a.rows;
    let n = a.cols;
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    for k in 0..n.min(m.saturating_sub(1)) {
        let norm_x: f64 = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // R <- (I - 2 v v^T / v^T v) R
        for j in 0..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                r[(i, j)] -= f * v[i - k];
            }
        }
        // Q <- Q (I - 2 v v^T / v^T v)
        for i in 0..m {
            let dot: f64 = (k..m).map(|l| q[(i, l)] * v[l - k]).sum();
            let f = 2.0 * dot / vnorm2;
            for l in k..m {
                q[(i, l)] -= f * v[l - k];
            }
        }
        for i in k + 1..m {
            r[(i, k)] = 0.0;
        }
    }
    (q, r)
}

/// QR factorization with positive diagonal in `R`.
///
/// Householder reflections followed by a sign fix of `R`'s diagonal; for an
/// invertible input the result is the unique `K A N` style factorization.
pub fn qr_positive(m: &Matrix) -> Result<(Matrix, Matrix)> {
    check_square_finite(m)?;
    let (mut q, mut r) = householder_qr(m);
    let n = m.rows;
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in 0..n {
                r[(i, j)] = -r[(i, j)];
                q[(j, i)] = -q[(j, i)];
            }
        }
    }
    for j in 0..n {
        let col_norm = (0..n).map(|i| m[(i, j)].powi(2)).sum::<f64>().sqrt();
        if !(r[(j, j)] > 8.0 * f64::EPSILON * col_norm) {
            return Err(Error::Singular);
        }
    }
    Ok((q, r))
}

/// Orthonormal basis of the column span of an `m x n` matrix (`n <= m`),
/// oriented so that the triangular factor has positive diagonal: the first
/// `k` output columns span the same space as the first `k` input columns.
pub fn orthonormalize_columns(a: &Matrix) -> Result<Matrix> {
    if a.cols > a.rows {
        return Err(Error::Shape("more columns than rows".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (mut q, r) = householder_qr(a);
    for i in 0..a.cols {
        if r[(i, i)] < 0.0 {
            for j in 0..a.rows {
                q[(j, i)] = -q[(j, i)];
            }
        }
        if r[(i, i)].abs() <= f64::EPSILON * a.max_abs() * 16.0 {
            return Err(Error::Singular);
        }
    }
    Ok(q.leading_columns(a.cols))
}

/// Extends the orthonormal columns of `a` (`d x k`) to an orthonormal `d x d`
/// frame by Gram-Schmidt over the standard basis, in index order. The result
/// has determinant `+1`; for `k < d` this is arranged by the sign of the
/// last added column, which leaves every partial span intact.
pub fn complete_orthonormal(a: &Matrix) -> Matrix {
    let d = a.rows;
    let mut cols: Vec<Vec<f64>> = (0..a.cols).map(|j| a.column(j)).collect();
    for i in 0..d {
        if cols.len() == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = e.iter().zip(c).map(|(x, y)| x * y).sum();
                for (x, y) in e.iter_mut().zip(c) {
                    *x -= dot * y;
                }
            }
        }
        let nrm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            cols.push(e.iter().map(|x| x / nrm).collect());
        }
    }
    let mut frame = Matrix::from_columns(&cols).expect("frame columns");
    if a.cols < d && frame.det() < 0.0 {
        for i in 0..d {
            frame[(i, d - 1)] = -frame[(i, d - 1)];
        }
    }
    frame
}

/// Binomial coefficient.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order, smallest index first.
pub fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return out;
            }
        }
    }
}

fn minor(m: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    match k {
        1 => m[(rows[0], cols[0])],
        2 => {
            m[(rows[0], cols[0])] * m[(rows[1], cols[1])]
                - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
        }
        _ => {
            let mut sub = Matrix::zeros(k, k);
            for (a, &r) in rows.iter().enumerate() {
                for (b, &c) in cols.iter().enumerate() {
                    sub[(a, b)] = m[(r, c)];
                }
            }
            sub.det()
        }
    }
}

/// The `k`-th exterior power: the `C(d,k) x C(d,k)` matrix of `k x k` minors
/// in the lexicographic basis `e_I = e_{i_1} ^ ... ^ e_{i_k}`.
pub fn exterior_power(m: &Matrix, k: usize) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Shape("exterior power of non-square matrix".into()));
    }
    let d = m.rows;
    if k == 0 || k > d {
        return Err(Error::IndexOutOfRange {
            what: "exterior power degree",
            index: k,
            bound: d,
        });
    }
    if k == 1 {
        return Ok(m.clone());
    }
    let subsets = index_subsets(d, k);
    let n = subsets.len();
    let mut out = Matrix::zeros(n, n);
    for (a, rows) in subsets.iter().enumerate() {
        for (b, cols) in subsets.iter().enumerate() {
            out[(a, b)] = minor(m, rows, cols);
        }
    }
    Ok(out)
}

/// `exterior_power(g, k)` using a known inverse for `k = d - 1`.
///
/// For `det g = 1` the top-but-one exterior power is a signed permutation
/// of `g^{-T}`; reading it off the inverse avoids the cancellation that
/// `(d-1) x (d-1)` minors suffer when `g` is far from orthogonal.
pub fn exterior_power_with_inverse(g: &Matrix, g_inv: &Matrix, k: usize) -> Result<Matrix> {
    let d = g.rows;
    if k + 1 != d || d < 2 {
        return exterior_power(g, k);
    }
    if g_inv.rows != d || g_inv.cols != d {
        return Err(Error::Shape("inverse has the wrong shape".into()));
    }
    let mut out = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            out[(a, b)] = sign * g_inv[(d - 1 - b, d - 1 - a)];
        }
    }
    Ok(out)
}

/// Plücker vector of the span of the columns of a `d x k` matrix: the
/// coordinates of `c_1 ^ ... ^ c_k` in the lexicographic basis.
pub fn wedge_columns(b: &Matrix) -> Vec<f64> {
    let d = b.rows;
    let k = b.cols;
    let cols: Vec<usize> = (0..k).collect();
    index_subsets(d, k)
        .iter()
        .map(|rows| minor(b, rows, &cols))
        .collect()
}

/// Smallest singular value of `[A | B]` for orthonormal bases `A`, `B` with
/// complementary dimensions; zero exactly when the spans intersect.
pub fn subspace_gap(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows != b.rows || a.cols + b.cols != a.rows {
        return Err(Error::Shape(format!(
            "subspace dimensions {} + {} do not fill ambient dimension {}",
            a.cols, b.cols, a.rows
        )));
    }
    let d = a.rows;
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..a.cols {
            m[(i, j)] = a[(i, j)];
        }
        for j in 0..b.cols {
            m[(i, a.cols + j)] = b[(i, j)];
        }
    }
    let sv = svd(&m)?.singular_values;
    Ok(sv[d - 1])
}

/// `|| P_A - P_B ||_2` for the orthogonal projections onto two subspaces of
/// equal dimension: the sine of the largest principal angle.
pub fn subspace_distance(a: &Matrix, b: &Matrix) -> f64 {
    let pa = a.matmul(&a.transpose());
    let pb = b.matmul(&b.transpose());
    pa.sub(&pb).operator_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..n * n).map(|_| rng.random_range(-10.0..10.0)).collect();
        Matrix::from_row_major(n, n, data).unwrap()
    }

    fn orthogonality_residual(q: &Matrix) -> f64 {
        q.transpose()
            .matmul(q)
            .sub(&Matrix::identity(q.cols()))
            .max_abs()
    }

    /// Classical Gram-Schmidt on columns: the reference for `qr_positive`.
    fn gram_schmidt_oracle(m: &Matrix) -> (Matrix, Matrix) {
        let n = m.rows();
        let mut q = Matrix::zeros(n, n);
        let mut r = Matrix::zeros(n, n);
        for j in 0..n {
            let mut v = m.column(j);
            for i in 0..j {
                let qi = q.column(i);
                let dot: f64 = qi.iter().zip(m.column(j)).map(|(a, b)| a * b).sum();
                r[(i, j)] = dot;
                for (x, y) in v.iter_mut().zip(&qi) {
                    *x -= dot * y;
                }
            }
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            r[(j, j)] = nrm;
            q.set_column(j, &v.iter().map(|x| x / nrm).collect::<Vec<_>>());
        }
        (q, r)
    }

    #[test]
    fn svd_of_positive_diagonal() {
        let m = Matrix::from_diag(&[4.0, 1.0, 0.25]);
        let s = svd(&m).unwrap();
        assert_eq!(s.singular_values, vec![4.0, 1.0, 0.25]);
    }

    #[test]
    fn svd_of_identity() {
        let s = svd(&Matrix::identity(4)).unwrap();
        assert!(s.singular_values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(orthogonality_residual(&s.left_factor) < 1e-15);
    }

    #[test]
    fn svd_of_shear() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let s = svd(&m).unwrap();
        // M^T M = [[1,1],[1,2]] has eigenvalues (3 +- sqrt 5)/2.
        let expected = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((s.singular_values[0].powi(2) - expected).abs() < 1e-14);
        assert!((operator_norm_2x2(m.as_slice()).powi(2) - expected).abs() < 1e-14);
    }

    #[test]
    fn svd_rejects_bad_input() {
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(svd(&rect), Err(Error::Shape(_))));
        let mut m = Matrix::identity(2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn svd_random_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10_000 {
            let n = 2 + trial % 5;
            let m = random_matrix(n, &mut rng);
            let s = svd(&m).unwrap();
            let scale = m.frobenius_norm();
            assert!(s.reconstruct().sub(&m).max_abs() <= 1e-9 * scale);
            assert!(orthogonality_residual(&s.left_factor) <= 1e-9);
            assert!(orthogonality_residual(&s.right_factor) <= 1e-9);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_of_singular_matrix_completes_u() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 0.0, 0.0]])
            .unwrap();
        let s = svd(&m).unwrap();
        assert!(orthogonality_residual(&s.left_factor) < 1e-12);
        assert!(s.reconstruct().sub(&m).max_abs() < 1e-12);
    }

    #[test]
    fn qr_positive_trivial_cases() {
        let t = Matrix::from_rows(&[
            vec![2.0, 1.0, -3.0],
            vec![0.0, 0.5, 4.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let (q, r) = qr_positive(&t).unwrap();
        assert!(q.sub(&Matrix::identity(3)).max_abs() < 1e-14);
        assert!(r.sub(&t).max_abs() < 1e-14);

        let c = 0.6f64;
        let s = 0.8f64;
        let q0 = Matrix::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let (q, r) = qr_positive(&q0).unwrap();
        assert!(q.sub(&q0).max_abs() < 1e-14);
        assert!(r.sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn qr_positive_matches_gram_schmidt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = random_matrix(3, &mut rng);
            let (q, r) = qr_positive(&m).unwrap();
            let (q0, r0) = gram_schmidt_oracle(&m);
            assert!(q.sub(&q0).max_abs() < 1e-9, "{q:?} vs {q0:?}");
            assert!(r.sub(&r0).max_abs() < 1e-9 * m.frobenius_norm());
            assert!(q.matmul(&r).sub(&m).max_abs() < 1e-9 * m.frobenius_norm());
            assert!((0..3).all(|i| r[(i, i)] > 0.0));
            let (q2, r2) = qr_positive(&m).unwrap();
            assert_eq!(q.as_slice(), q2.as_slice());
            assert_eq!(r.as_slice(), r2.as_slice());
        }
    }

    #[test]
    fn qr_positive_rejects_singular() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(qr_positive(&m), Err(Error::Singular)));
    }

    #[test]
    fn exterior_power_of_diagonal() {
        let m = Matrix::from_diag(&[2.0, 3.0, 5.0]);
        let l2 = exterior_power(&m, 2).unwrap();
        assert_eq!(l2, Matrix::from_diag(&[6.0, 10.0, 15.0]));
        assert_eq!(exterior_power(&m, 1).unwrap(), m);
        assert!(exterior_power(&m, 0).is_err());
        assert!(exterior_power(&m, 4).is_err());
    }

    #[test]
    fn exterior_power_entries_are_cofactor_minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(3, &mut rng);
        let l2 = exterior_power(&m, 2).unwrap();
        let pairs = [(0, 1), (0, 2), (1, 2)];
        for (a, &(i1, i2)) in pairs.iter().enumerate() {
            for (b, &(j1, j2)) in pairs.iter().enumerate() {
                let direct = m[(i1, j1)] * m[(i2, j2)] - m[(i1, j2)] * m[(i2, j1)];
                assert_eq!(l2[(a, b)], direct);
            }
        }
        // top degree is the determinant
        let l3 = exterior_power(&m, 3).unwrap();
        assert!((l3[(0, 0)] - m.det()).abs() < 1e-9 * m.det().abs().max(1.0));
    }

    #[test]
    fn hodge_shortcut_matches_minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for d in 2..=5 {
            let mut m = random_matrix(d, &mut rng);
            let det = m.det();
            if det < 0.0 {
                for j in 0..d {
                    m[(0, j)] = -m[(0, j)];
                }
            }
            let m = m.scale(det.abs().powf(-1.0 / d as f64));
            let inv = m.inverse().unwrap();
            let direct = exterior_power(&m, d - 1).unwrap();
            let dual = exterior_power_with_inverse(&m, &inv, d - 1).unwrap();
            assert!(direct.sub(&dual).max_abs() < 1e-9 * direct.max_abs().max(1.0));
        }
    }

    #[test]
    fn lex_subsets() {
        assert_eq!(
            index_subsets(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(index_subsets(5, 3).len(), 10);
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn subspace_gap_examples() {
        let e = Matrix::identity(3);
        let a = e.leading_columns(1);
        let b = Matrix::from_columns(&[e.column(1), e.column(2)]).unwrap();
        assert!((subspace_gap(&a, &b).unwrap() - 1.0).abs() < 1e-15);

        let too_big = Matrix::identity(3);
        assert!(subspace_gap(&a, &too_big).is_err());
    }

    #[test]
    fn subspace_gap_against_gram_eigenvalues() {
        // span((e1+e2)/sqrt2) against span(e2, e3).
        let r = 1.0 / 2f64.sqrt();
        let a = Matrix::from_columns(&[vec![r, r, 0.0]]).unwrap();
        let b = Matrix::from_columns(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let gap = subspace_gap(&a, &b).unwrap();
        // [a|b]^T [a|b] = [[1, r, 0], [r, 1, 0], [0, 0, 1]]: eigenvalues 1 +- r and 1.
        let oracle = (1.0 - r).sqrt();
        assert!((gap - oracle).abs() < 1e-14);
        let m = Matrix::from_rows(&[vec![r, 0.0, 0.0], vec![r, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        // product of singular values = |det|
        let sv = svd(&m).unwrap().singular_values;
        assert!((sv.iter().product::<f64>() - m.det().abs()).abs() < 1e-14);
    }

    #[test]
    fn subspace_gap_detects_intersection() {
        // span(e1) and span(e1, e2) share e1; dims 1 + 2 = 3.
        let a = Matrix::from_columns(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let b = Matrix::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(subspace_gap(&a, &b).unwrap() < 1e-15);
        let c = Matrix::from_columns(&[vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(subspace_gap(&a, &c).is_err());
    }

    #[test]
    fn complete_orthonormal_keeps_spans() {
        let r = 1.0 / 2f64.sqrt();
        let a = Matrix::from_columns(&[vec![r, r, 0.0]]).unwrap();
        let f = complete_orthonormal(&a);
        assert!(orthogonality_residual(&f) < 1e-14);
        assert_eq!(f.column(0), a.column(0));
        assert!((f.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_and_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..6 {
            let m = random_matrix(n, &mut rng);
            let inv = m.inverse().unwrap();
            assert!(m.matmul(&inv).sub(&Matrix::identity(n)).max_abs() < 1e-9);
            let lu = m.det();
            let via_svd: f64 = svd(&m).unwrap().singular_values.iter().product();
            assert!((lu.abs() - via_svd).abs() < 1e-9 * via_svd.max(1.0));
        }
    }
}
