//! Dense row-major matrices and the generalized Jacobian norm.
//!
//! `|A|` is the square root of the sum of squared maximal minors. For a tall
//! or square matrix this is `sqrt(det(AᵀA))`, evaluated here as the product of
//! the diagonal of a Householder `R` factor so the condition number is never
//! squared. Wide matrices are handled through their transpose.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Range};

use crate::error::{Error, Result};

/// Reciprocal condition numbers below this are treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix shape {rows}x{cols} has an empty side"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix sides must be positive");
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

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        Ok(Self::from_rows(columns)?.transpose())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
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

    /// Sub-matrix made of the given column range.
    pub fn columns(&self, range: Range<usize>) -> Self {
        assert!(range.start < range.end && range.end <= self.cols);
        let mut out = Self::zeros(self.rows, range.len());
        for i in 0..self.rows {
            for (k, j) in range.clone().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        out
    }

    /// Sub-matrix made of the given row range.
    pub fn row_block(&self, range: Range<usize>) -> Self {
        assert!(range.start < range.end && range.end <= self.rows);
        Self {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.lu()?.inverse()
    }

    /// `1 / (‖A‖₁ ‖A⁻¹‖₁)`; zero for exactly singular input.
    pub fn reciprocal_condition(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "condition of a non-square matrix".into(),
            ));
        }
        let lu = match self.lu() {
            Ok(lu) => lu,
            Err(Error::SingularMatrix { .. }) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        let inv = lu.inverse()?;
        let denom = self.norm_one() * inv.norm_one();
        Ok(if denom.is_finite() && denom > 0.0 {
            1.0 / denom
        } else {
            0.0
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("incompatible matrix shapes")
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// LU factorization with partial pivoting, `PA = LU`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (pivot_row, pivot) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularMatrix { rcond: 0.0 });
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
                sign = -sign;
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / d;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, sign })
    }

    pub fn determinant(&self) -> f64 {
        (0..self.n)
            .map(|i| self.lu[i * self.n + i])
            .product::<f64>()
            * self.sign
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        if !inv.is_finite() {
            return Err(Error::SingularMatrix { rcond: 0.0 });
        }
        Ok(inv)
    }
}

/// Generalized Jacobian norm: `|det A|` for square `A`, `sqrt(det(AᵀA))` for
/// tall `A` and `sqrt(det(AAᵀ))` for wide `A`. Rank-deficient input gives 0.
pub fn generalized_norm(a: &Matrix) -> f64 {
    if a.rows >= a.cols {
        householder_r_diagonal_product(a.rows, a.cols, a.data.clone())
    } else {
        let t = a.transpose();
        householder_r_diagonal_product(t.rows, t.cols, t.data)
    }
}

/// Product of `|R_kk|` for the QR factorization of a tall row-major matrix.
fn householder_r_diagonal_product(rows: usize, cols: usize, mut a: Vec<f64>) -> f64 {
    let mut product = 1.0;
    let mut v = vec![0.0; rows];
    for k in 0..cols {
        let scale = (k..rows).map(|i| a[i * cols + k].abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let norm = scale
            * (k..rows)
                .map(|i| (a[i * cols + k] / scale).powi(2))
                .sum::<f64>()
                .sqrt();
        product *= norm;
        if k + 1 == cols {
            break;
        }
        let x0 = a[k * cols + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in k..rows {
            v[i] = a[i * cols + k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..rows).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k + 1..cols {
            let dot: f64 = (k..rows).map(|i| v[i] * a[i * cols + j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                a[i * cols + j] -= f * v[i];
            }
        }
    }
    product
}

/// The unique `B` with `B·A = (I_{n−m} 0)`: the first `n − m` rows of `A⁻¹`.
pub fn companion_block(a: &Matrix, m: usize) -> Result<Matrix> {
    let n = check_split(a, m)?;
    let rcond = a.reciprocal_condition()?;
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::SingularMatrix { rcond });
    }
    Ok(a.inverse()?.row_block(0..n - m))
}

/// Returns `(|A′|, |A|·|B|)` where `A′` holds the last `m` columns of `A` and
/// `B = companion_block(A, m)`. The two agree for every invertible `A`.
pub fn verify_factorization(a: &Matrix, m: usize) -> Result<(f64, f64)> {
    let n = check_split(a, m)?;
    let b = companion_block(a, m)?;
    let lhs = generalized_norm(&a.columns(n - m..n));
    let rhs = generalized_norm(a) * generalized_norm(&b);
    Ok((lhs, rhs))
}

fn check_split(a: &Matrix, m: usize) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if m == 0 || m >= n {
        return Err(Error::DimensionMismatch(format!(
            "split m = {m} must satisfy 1 <= m <= {}",
            n.saturating_sub(1)
        )));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norm_of_identity_and_diagonal() {
        assert_relative_eq!(generalized_norm(&Matrix::identity(3)), 1.0);
        assert_relative_eq!(generalized_norm(&Matrix::from_diagonal(&[2.0, 3.0])), 6.0);
        assert_relative_eq!(generalized_norm(&Matrix::from_diagonal(&[-2.0, 3.0])), 6.0);
    }

    #[test]
    fn norm_of_tall_and_wide() {
        let a = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_relative_eq!(generalized_norm(&a), 1.0);
        let col = Matrix::from_columns(&[&[3.0, 4.0]]).unwrap();
        assert_relative_eq!(generalized_norm(&col), 5.0, max_relative = 1e-15);
        assert_relative_eq!(
            generalized_norm(&col.transpose()),
            5.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn rank_deficient_is_zero() {
        assert_eq!(generalized_norm(&Matrix::zeros(3, 2)), 0.0);
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
        assert!(generalized_norm(&a) < 1e-14);
    }

    #[test]
    fn companion_of_diagonal() {
        let a = Matrix::from_diagonal(&[2.0, 3.0, 5.0]);
        let b = companion_block(&a, 1).unwrap();
        let expected = Matrix::from_rows(&[&[0.5, 0.0, 0.0], &[0.0, 1.0 / 3.0, 0.0]]).unwrap();
        for (x, y) in b.as_slice().iter().zip(expected.as_slice()) {
            assert_relative_eq!(x, y, max_relative = 1e-15);
        }
        let (lhs, rhs) = verify_factorization(&a, 1).unwrap();
        assert_relative_eq!(lhs, 5.0);
        assert_relative_eq!(rhs, 5.0, max_relative = 1e-14);
    }

    #[test]
    fn companion_of_identity_and_rotation() {
        let b = companion_block(&Matrix::identity(4), 2).unwrap();
        assert_eq!(b, Matrix::identity(4).row_block(0..2));

        let theta: f64 = 0.7;
        let (s, c) = theta.sin_cos();
        let rot = Matrix::from_rows(&[&[c, -s], &[s, c]]).unwrap();
        let b = companion_block(&rot, 1).unwrap();
        assert_relative_eq!(b[(0, 0)], c, max_relative = 1e-14);
        assert_relative_eq!(b[(0, 1)], s, max_relative = 1e-14);
    }

    #[test]
    fn companion_rejects_singular_and_bad_split() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(
            companion_block(&a, 1),
            Err(Error::SingularMatrix { .. })
        ));
        let nearly = Matrix::from_diagonal(&[1.0, 1e-14]);
        assert!(matches!(
            companion_block(&nearly, 1),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            companion_block(&Matrix::identity(3), 3),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            companion_block(&Matrix::identity(3), 0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn two_by_two_column_relation() {
        // |w| = |det A| |v| with v the first row of A⁻¹ and w the second column.
        let a = Matrix::from_rows(&[&[2.0, -1.0], &[0.5, 3.0]]).unwrap();
        let v = companion_block(&a, 1).unwrap();
        let w = a.column(1);
        let w_norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let det = a.lu().unwrap().determinant();
        assert_relative_eq!(
            w_norm,
            det.abs() * generalized_norm(&v),
            max_relative = 1e-14
        );
    }

    #[test]
    fn lu_solves_and_inverts() {
        let a = Matrix::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]).unwrap();
        let lu = a.lu().unwrap();
        assert_relative_eq!(lu.determinant(), -5.0, max_relative = 1e-14);
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip([3.0, 2.0, 4.0]) {
            assert_relative_eq!(*u, v, max_relative = 1e-14);
        }
        let prod = &a * &a.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constructors_validate_shape() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::from_rows(&[&[1.0], &[1.0, 2.0]]).is_err());
    }
}
