//! Dense square real matrices and the two norms everything else is built on:
//! the operator norm (largest singular value) and the Schatten p-norms.
//!
//! Storage is row-major `Vec<f64>`. Vectors are plain `&[f64]` slices; the few
//! vector helpers live at the bottom of this module.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from row-major data. Rejects wrong lengths and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for {}x{}, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {x}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix with no rows".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.data[i * self.cols + i]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self += factor * other`, shapes must match.
    pub fn add_scaled(&mut self, other: &Matrix, factor: f64) {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "add_scaled shape mismatch"
        );
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += factor * b;
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow.iter()) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Gram matrix `Aᵀ A` (symmetric, PSD).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                for j in i..n {
                    out.data[i * n + j] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i];
            }
        }
        out
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "apply: dimension mismatch");
        (0..self.rows)
            .map(|r| dot(self.row(r), x))
            .collect()
    }

    /// `Aᵀ x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "apply_transpose: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r).iter()) {
                *o += xr * a;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> Result<f64> {
        self.require_square()?;
        Ok((0..self.rows).map(|i| self.data[i * self.cols + i]).sum())
    }

    /// Largest singular value, computed by cyclic Jacobi (the iteration on
    /// `AᵀA`, applied one-sidedly to the columns of `A`). This is the
    /// ground-truth path; see [`eigen::operator_norm_power`] for the fast
    /// iterative alternative.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?[0])
    }

    /// All singular values, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        eigen::singular_values_one_sided(self)
    }

    /// Schatten p-norm: the ℓ_p norm of the singular values. Requires `p >= 1`.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "schatten norm needs p >= 1, got {p}"
            )));
        }
        let sv = self.singular_values()?;
        let top = sv[0];
        if top == 0.0 {
            return Ok(0.0);
        }
        // scale by the largest singular value so s^p cannot overflow
        let sum: f64 = sv.iter().map(|s| (s / top).powf(p)).sum();
        Ok(top * sum.powf(1.0 / p))
    }

    /// Symmetric within `tol * (1 + max entry)` and all eigenvalues at least
    /// `-tol * (1 + operator norm)`. Non-square input is simply not PSD.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = 1.0 + self.max_abs();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        let sym = Matrix::from_fn(self.rows, self.cols, |r, c| {
            0.5 * (self[(r, c)] + self[(c, r)])
        });
        let evs = match eigen::symmetric_eigenvalues(&sym) {
            Ok(e) => e,
            Err(_) => return false,
        };
        let norm = evs.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        evs.iter().all(|&l| l >= -tol * (1.0 + norm))
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

impl std::ops::Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl std::ops::Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

// JSON form is an array of rows, e.g. [[1,0],[0,1]].
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            seq.serialize_element(self.row(r))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RowsVisitor;
        impl<'de> Visitor<'de> for RowsVisitor {
            type Value = Matrix;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an array of equal-length rows of numbers")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Matrix, A::Error> {
                let mut rows: Vec<Vec<f64>> = Vec::new();
                while let Some(row) = seq.next_element::<Vec<f64>>()? {
                    rows.push(row);
                }
                Matrix::from_rows(&rows).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_seq(RowsVisitor)
    }
}

/// The Schatten exponent used where an analysis sets `p = ln d`, clamped to
/// `max(2, ln d)`: the moment inequalities require `p ≥ 2`, and the clamp
/// keeps the `‖A‖ ≤ ‖A‖_p ≤ e‖A‖` sandwich valid in small dimensions too.
pub fn schatten_p_for_dim(dim: usize) -> f64 {
    (dim as f64).ln().max(2.0)
}

/// Tensor (diadic) product `u ⊗ v`: the operator `x ↦ ⟨u,x⟩ v`, whose matrix
/// is `v uᵀ` (entry `(r,c)` equals `v[r] * u[c]`).
pub fn outer(u: &[f64], v: &[f64]) -> Result<Matrix> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "outer product of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    if u.is_empty() {
        return Err(Error::EmptyInput("outer product of empty vectors".into()));
    }
    let d = u.len();
    Ok(Matrix::from_fn(d, d, |r, c| v[r] * u[c]))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Standard basis vector `e_i` in dimension `d`.
pub fn basis_vector(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}
