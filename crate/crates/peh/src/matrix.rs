//! Dense matrices over an exact integer scalar.
//!
//! The scalar is generic over the num-traits/num-integer interfaces so the
//! same elimination code serves machine integers in small oracles and
//! arbitrary-precision integers in every production path. No floating-point
//! instantiation exists: all arithmetic here must be exact.
//!
//! Matrices are row-major. The zero-row and zero-column cases are first-class
//! citizens: empty boundary maps and empty kernels occur naturally in chain
//! complexes and must round-trip through every operation.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_integer::Integer;
use num_traits::Signed;

/// Scalar bound for exact matrix arithmetic: an ordered integer ring with
/// exact division and gcd, e.g. `BigInt` or `i64`.
pub trait Scalar: Integer + Signed + Clone + fmt::Debug + fmt::Display {}
impl<T: Integer + Signed + Clone + fmt::Debug + fmt::Display> Scalar for T {}

/// A dense `rows x cols` matrix with entries of type `T`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    /// The zero matrix of the given shape. Either dimension may be zero.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// The `n x n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    /// `cols` disambiguates the width when `rows` is empty.
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Self {
        for r in &rows {
            assert_eq!(r.len(), cols, "ragged rows in matrix constructor");
        }
        let nrows = rows.len();
        Mat { rows: nrows, cols, data: rows.into_iter().flatten().collect() }
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// A single-column matrix holding `v`.
    pub fn column(v: Vec<T>) -> Self {
        let rows = v.len();
        Mat { rows, cols: 1, data: v }
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

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Row `i` as a vector.
    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self[(i, j)].clone()).collect()
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    /// The submatrix of the listed columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Mat::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn neg(&self) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| -self[(i, j)].clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() + other[(i, j)].clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() - other[(i, j)].clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() * c.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Self::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..self.cols {
                    acc = acc + self[(i, j)].clone() * v[j].clone();
                }
                acc
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row mismatch in hcat");
        Mat::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols { self[(i, j)].clone() } else { other[(i, j - self.cols)].clone() }
        })
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Row operation `row[a] += c * row[b]`.
    pub fn add_row_multiple(&mut self, a: usize, b: usize, c: &T) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let t = self[(b, j)].clone() * c.clone();
            self[(a, j)] = self[(a, j)].clone() + t;
        }
    }

    /// Column operation `col[a] += c * col[b]`.
    pub fn add_col_multiple(&mut self, a: usize, b: usize, c: &T) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let t = self[(i, b)].clone() * c.clone();
            self[(i, a)] = self[(i, a)].clone() + t;
        }
    }

    pub fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            self[(a, j)] = -self[(a, j)].clone();
        }
    }

    pub fn negate_col(&mut self, a: usize) {
        for i in 0..self.rows {
            self[(i, a)] = -self[(i, a)].clone();
        }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    /// Panics on non-square input.
    pub fn det(&self) -> T {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return T::one();
        }
        let mut a = self.clone();
        let mut sign = T::one();
        let mut prev = T::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return T::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = a[(k, k)].clone() * a[(i, j)].clone()
                        - a[(i, k)].clone() * a[(k, j)].clone();
                    // Bareiss guarantees exact divisibility by the previous pivot.
                    a[(i, j)] = num / prev.clone();
                }
                a[(i, k)] = T::zero();
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat::from_fn(self.rows, self.cols, |i, j| f(&self[(i, j)]))
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn big(rows: &[&[i64]]) -> Mat<BigInt> {
        Mat::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
            rows.first().map_or(0, |r| r.len()),
        )
    }

    #[test]
    fn mul_identity() {
        let a = big(&[&[1, 2], &[3, 4], &[5, 6]]);
        assert_eq!(a.mul(&Mat::identity(2)), a);
        assert_eq!(Mat::identity(3).mul(&a), a);
    }

    #[test]
    fn empty_shapes_compose() {
        let a: Mat<BigInt> = Mat::zero(3, 0);
        let b: Mat<BigInt> = Mat::zero(0, 2);
        let ab = a.mul(&b);
        assert_eq!((ab.rows(), ab.cols()), (3, 2));
        assert!(ab.is_zero());
        assert_eq!(a.transpose().rows(), 0);
    }

    #[test]
    fn det_small() {
        assert_eq!(big(&[&[1, 2], &[3, 4]]).det(), BigInt::from(-2));
        assert_eq!(big(&[&[2, 0], &[0, 3]]).det(), BigInt::from(6));
        assert_eq!(big(&[&[1, 2], &[2, 4]]).det(), BigInt::from(0));
        let id: Mat<BigInt> = Mat::identity(0);
        assert_eq!(id.det(), BigInt::from(1));
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        // 4x4 with a zero leading pivot to exercise the row swap. Reference
        // value from cofactor expansion along the first row:
        // -2*17 + 1*(-4) - 3*5 = -53.
        let m = big(&[&[0, 2, 1, 3], &[1, 0, 4, 1], &[2, 1, 0, 5], &[1, 1, 1, 0]]);
        assert_eq!(m.det(), BigInt::from(-53));
    }
}
