//! Dense linear-algebra kernel.
//!
//! Row-major `f64` matrices, LU factorization with partial pivoting, linear
//! solves, inversion, and l_q distances between matrix rows. Matrices in this
//! crate are small and dense (the fundamental matrix of a chain is dense even
//! when the transition matrix is sparse), so nothing here tries to be clever
//! about sparsity.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{DsdError, Result};

/// Relative singularity tolerance used by [`default_tolerance`].
pub const SINGULARITY_RTOL: f64 = 1e-12;

/// Dense row-major matrix of finite reals.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(DsdError::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(DsdError::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(DsdError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(DsdError::Dimension(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(nrows, ncols, data)
    }

    /// # Panics
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        DenseMatrix {
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

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        Self::from_vec(n, n, data)
    }

    /// Rank-one matrix `column * row`.
    pub fn outer(column: &[f64], row: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(column.len() * row.len());
        for &c in column {
            data.extend(row.iter().map(|&r| c * r));
        }
        Self::from_vec(column.len(), row.len(), data)
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

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, factor: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self + factor * other`.
    ///
    /// # Panics
    /// Panics on shape mismatch.
    pub fn add_scaled(&self, other: &DenseMatrix, factor: f64) -> Self {
        self.assert_same_shape(other);
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    /// In-place `self += other`.
    pub fn add_assign(&mut self, other: &DenseMatrix) {
        self.assert_same_shape(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn try_mul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(DsdError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix, `x A`.
    pub fn left_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "vector length must match row count");
        let mut out = vec![0.0; self.cols];
        for (&xi, row) in x.iter().zip(self.row_iter()) {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
        out
    }

    /// Matrix times column vector, `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        self.row_iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.row_iter().map(|r| r.iter().sum()).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute row sum (the induced infinity norm).
    pub fn max_row_norm(&self) -> f64 {
        self.row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max |self - other|` over all entries.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.assert_same_shape(other);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn assert_same_shape(&self, other: &DenseMatrix) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.try_mul(rhs)
            .expect("matrix product dimension mismatch")
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.add_scaled(rhs, 1.0)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.add_scaled(rhs, -1.0)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.row_iter() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// Order `q` of an l_q norm: a real `q >= 1` or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum LqOrder {
    Finite(f64),
    Infinity,
}

impl LqOrder {
    pub const L1: LqOrder = LqOrder::Finite(1.0);
    pub const L2: LqOrder = LqOrder::Finite(2.0);

    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(LqOrder::Infinity)
        } else if q.is_finite() && q >= 1.0 {
            Ok(LqOrder::Finite(q))
        } else {
            Err(DsdError::Parameter(format!(
                "q must be >= 1 or infinity, got {q}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LqOrder::Finite(q) => q,
            LqOrder::Infinity => f64::INFINITY,
        }
    }

    /// l_q norm of a finite sequence of differences.
    pub fn norm<I: IntoIterator<Item = f64>>(self, diffs: I) -> f64 {
        let abs = diffs.into_iter().map(f64::abs);
        match self {
            LqOrder::Infinity => abs.fold(0.0, f64::max),
            LqOrder::Finite(1.0) => abs.sum(),
            LqOrder::Finite(2.0) => abs.map(|d| d * d).sum::<f64>().sqrt(),
            LqOrder::Finite(q) => {
                // Scale by the max to keep powf in range.
                let v: Vec<f64> = abs.collect();
                let m = v.iter().copied().fold(0.0, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                m * v.iter().map(|d| (d / m).powf(q)).sum::<f64>().powf(1.0 / q)
            }
        }
    }
}

impl std::str::FromStr for LqOrder {
    type Err = DsdError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(LqOrder::Infinity);
        }
        let q: f64 = t
            .parse()
            .map_err(|_| DsdError::Parameter(format!("cannot parse q from '{s}'")))?;
        LqOrder::new(q)
    }
}

impl fmt::Display for LqOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LqOrder::Finite(q) => write!(f, "{q}"),
            LqOrder::Infinity => write!(f, "inf"),
        }
    }
}

impl From<LqOrder> for serde_json::Value {
    fn from(q: LqOrder) -> Self {
        match q {
            LqOrder::Finite(v) => serde_json::json!(v),
            LqOrder::Infinity => serde_json::json!("inf"),
        }
    }
}

impl TryFrom<serde_json::Value> for LqOrder {
    type Error = DsdError;

    fn try_from(v: serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Number(n) => LqOrder::new(n.as_f64().unwrap_or(f64::NAN)),
            serde_json::Value::String(s) => s.parse(),
            other => Err(DsdError::Parameter(format!("invalid q value {other}"))),
        }
    }
}

/// l_q distance between rows `u` and `v` of `a`. Exactly zero when `u == v`.
///
/// # Panics
/// Panics if `u` or `v` is not a valid row index.
pub fn row_lq_distance(a: &DenseMatrix, u: usize, v: usize, q: LqOrder) -> f64 {
    assert!(u < a.rows() && v < a.rows(), "row index out of range");
    if u == v {
        return 0.0;
    }
    q.norm(a.row(u).iter().zip(a.row(v)).map(|(x, y)| x - y))
}

/// LU factorization `PA = LU` with partial pivoting, packed in one matrix.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
    swaps: usize,
    tolerance: f64,
    singular_pivot: Option<(usize, f64)>,
}

/// `SINGULARITY_RTOL` times the largest absolute row sum of `a`.
pub fn default_tolerance(a: &DenseMatrix) -> f64 {
    SINGULARITY_RTOL * a.max_row_norm()
}

pub fn lu_factor(a: &DenseMatrix, tol: f64) -> Result<LuFactorization> {
    if !a.is_square() {
        return Err(DsdError::Dimension(format!(
            "LU needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut swaps = 0;
    let mut singular_pivot = None;

    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            swaps += 1;
        }
        if mag <= tol {
            singular_pivot.get_or_insert((k, mag));
            continue;
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor == 0.0 {
                continue;
            }
            for j in k + 1..n {
                lu.data[i * n + j] -= factor * lu.data[k * n + j];
            }
        }
    }

    Ok(LuFactorization {
        lu,
        perm,
        swaps,
        tolerance: tol,
        singular_pivot,
    })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn is_singular(&self) -> bool {
        self.singular_pivot.is_some()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Row permutation: row `i` of `PA` is row `permutation()[i]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn pivots(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lu[(i, i)]).collect()
    }

    pub fn determinant(&self) -> f64 {
        let sign = if self.swaps % 2 == 0 { 1.0 } else { -1.0 };
        sign * self.pivots().iter().product::<f64>()
    }

    fn check_nonsingular(&self) -> Result<()> {
        match self.singular_pivot {
            Some((pivot, magnitude)) => Err(DsdError::Singular { pivot, magnitude }),
            None => Ok(()),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_nonsingular()?;
        let n = self.dim();
        if b.len() != n {
            return Err(DsdError::Dimension(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        self.check_nonsingular()?;
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        Ok(inv)
    }
}

pub fn solve(f: &LuFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

pub fn invert(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    lu_factor(a, tol)?.inverse()
}
