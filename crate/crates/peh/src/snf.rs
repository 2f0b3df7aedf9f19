//! Smith normal form over the integers, with full transform bookkeeping.
//!
//! For an integer matrix `A` we compute unimodular `U`, `V` with
//! `U * A * V = D`, where `D` is diagonal, non-negative, and satisfies the
//! divisibility chain `d1 | d2 | ... | dr`. The inverses of `U` and `V` are
//! maintained alongside, since most consumers (kernels, cokernel generators,
//! lattice saturation) need them and recovering them after the fact costs
//! another elimination.
//!
//! The algorithm is deliberately the classical elimination with a
//! smallest-magnitude pivot rule and minimal-remainder division. That keeps
//! intermediate entries small in practice and, more importantly, makes the
//! whole decomposition a deterministic function of the input: no randomized
//! pivoting, no hash-order iteration.

use crate::matrix::{Mat, Scalar};

/// The decomposition `U * A * V = D` together with the transform inverses,
/// so `A = U_inv * D * V_inv`.
#[derive(Clone, Debug)]
pub struct SmithDecomposition<T: Scalar> {
    pub u: Mat<T>,
    pub u_inv: Mat<T>,
    pub v: Mat<T>,
    pub v_inv: Mat<T>,
    pub d: Mat<T>,
    pub rank: usize,
    /// The positive diagonal entries `d1 | d2 | ... | dr`.
    pub invariant_factors: Vec<T>,
}

/// Quotient of `a / b` with minimal-magnitude remainder (|r| <= |b|/2).
/// Ties keep the truncated quotient, which fixes a deterministic choice.
fn round_div<T: Scalar>(a: &T, b: &T) -> T {
    let (mut q, r) = a.div_rem(b);
    let two_r = r.abs() + r.abs();
    if two_r > b.abs() {
        if (r >= T::zero()) == (*b >= T::zero()) {
            q = q + T::one();
        } else {
            q = q - T::one();
        }
    }
    q
}

/// Computes the Smith normal form of `a`. Total: any shape, including empty
/// matrices, is accepted.
pub fn smith_normal_form<T: Scalar>(a: &Mat<T>) -> SmithDecomposition<T> {
    let m = a.rows();
    let n = a.cols();
    let mut d = a.clone();
    let mut u = Mat::identity(m);
    let mut u_inv = Mat::identity(m);
    let mut v = Mat::identity(n);
    let mut v_inv = Mat::identity(n);

    // Elementary operations, applied in lockstep to the transforms.
    // Row ops: D <- E*D, U <- E*U, U_inv <- U_inv*E^{-1}.
    // Col ops: D <- D*F, V <- V*F, V_inv <- F^{-1}*V_inv.
    macro_rules! row_add {
        ($i:expr, $j:expr, $c:expr) => {{
            let c = $c;
            d.add_row_multiple($i, $j, &c);
            u.add_row_multiple($i, $j, &c);
            u_inv.add_col_multiple($j, $i, &(-c));
        }};
    }
    macro_rules! col_add {
        ($i:expr, $j:expr, $c:expr) => {{
            let c = $c;
            d.add_col_multiple($i, $j, &c);
            v.add_col_multiple($i, $j, &c);
            v_inv.add_row_multiple($j, $i, &(-c));
        }};
    }

    let mut t = 0usize;
    while t < m.min(n) {
        // Smallest-magnitude nonzero entry of the trailing submatrix, with
        // (row, col) as the deterministic tie-break.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if d[(i, j)].is_zero() {
                    continue;
                }
                let better = match pivot {
                    None => true,
                    Some(p) => d[(i, j)].abs() < d[p].abs(),
                };
                if better {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != t {
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            u_inv.swap_cols(t, pi);
        }
        if pj != t {
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            v_inv.swap_rows(t, pj);
        }

        // Clear row and column t. Reducing by the minimal-remainder quotient
        // shrinks the pivot whenever a remainder survives, so this loop
        // terminates.
        'clear: loop {
            for i in t + 1..m {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = round_div(&d[(i, t)], &d[(t, t)]);
                row_add!(i, t, -q);
                if !d[(i, t)].is_zero() {
                    d.swap_rows(t, i);
                    u.swap_rows(t, i);
                    u_inv.swap_cols(t, i);
                    continue 'clear;
                }
            }
            for j in t + 1..n {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = round_div(&d[(t, j)], &d[(t, t)]);
                col_add!(j, t, -q);
                if !d[(t, j)].is_zero() {
                    d.swap_cols(t, j);
                    v.swap_cols(t, j);
                    v_inv.swap_rows(t, j);
                    continue 'clear;
                }
            }
            // Row and column are clear; make the pivot divide the whole
            // trailing submatrix before moving on. Folding an offending row
            // into row t re-enters the clearing loop with a smaller gcd.
            for i in t + 1..m {
                for j in t + 1..n {
                    if !d[(i, j)].mod_floor(&d[(t, t)]).is_zero() {
                        row_add!(t, i, T::one());
                        continue 'clear;
                    }
                }
            }
            break;
        }

        if d[(t, t)] < T::zero() {
            d.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
        t += 1;
    }

    let rank = t;
    let invariant_factors: Vec<T> = (0..rank).map(|i| d[(i, i)].clone()).collect();
    SmithDecomposition { u, u_inv, v, v_inv, d, rank, invariant_factors }
}

impl<T: Scalar> SmithDecomposition<T> {
    /// Saturated basis of the kernel lattice `{x : A x = 0}`: the columns of
    /// `V` past the rank. The result is `n x (n - rank)`.
    pub fn kernel_basis(&self) -> Mat<T> {
        let n = self.v.rows();
        let idx: Vec<usize> = (self.rank..n).collect();
        self.v.select_cols(&idx)
    }

    /// Saturated basis of the column-space lattice (the primitive lattice of
    /// the same rank containing all columns of `A`): the first `rank` columns
    /// of `U^{-1}`. The result is `m x rank`.
    pub fn saturation_basis(&self) -> Mat<T> {
        let idx: Vec<usize> = (0..self.rank).collect();
        self.u_inv.select_cols(&idx)
    }

    /// Solves `A x = b` exactly, if an integer solution exists.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let m = self.u.rows();
        let n = self.v.rows();
        assert_eq!(b.len(), m, "rhs length mismatch in solve");
        let ub = self.u.mul_vec(b);
        let mut y = vec![T::zero(); n];
        for (i, ub_i) in ub.iter().enumerate() {
            if i < self.rank {
                let (q, r) = ub_i.div_rem(&self.d[(i, i)]);
                if !r.is_zero() {
                    return None;
                }
                y[i] = q;
            } else if !ub_i.is_zero() {
                return None;
            }
        }
        Some(self.v.mul_vec(&y))
    }

    /// Solves `A X = B` columnwise.
    pub fn solve_mat(&self, b: &Mat<T>) -> Option<Mat<T>> {
        assert_eq!(b.rows(), self.u.rows(), "rhs row mismatch in solve_mat");
        let mut cols: Vec<Vec<T>> = Vec::with_capacity(b.cols());
        for j in 0..b.cols() {
            cols.push(self.solve(&b.col(j))?);
        }
        let n = self.v.rows();
        Some(Mat::from_fn(n, b.cols(), |i, j| cols[j][i].clone()))
    }
}

/// Convenience wrapper: saturated kernel basis of `a`.
pub fn kernel_basis<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    smith_normal_form(a).kernel_basis()
}

/// Inverse of a unimodular square matrix, or `None` if `a` is not unimodular.
pub fn inverse_unimodular<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    if !a.is_square() {
        return None;
    }
    let snf = smith_normal_form(a);
    if snf.rank != a.rows() || snf.invariant_factors.iter().any(|f| !f.is_one()) {
        return None;
    }
    // U A V = I  =>  A^{-1} = V U.
    Some(snf.v.mul(&snf.u))
}

/// Whether every column of `b` lies in the column lattice of `a`.
pub fn lattice_contains<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> bool {
    smith_normal_form(a).solve_mat(b).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    fn big(rows: &[&[i64]]) -> Mat<BigInt> {
        Mat::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
            rows.first().map_or(0, |r| r.len()),
        )
    }

    fn check_decomposition(a: &Mat<BigInt>) -> SmithDecomposition<BigInt> {
        let snf = smith_normal_form(a);
        assert_eq!(snf.u.mul(a).mul(&snf.v), snf.d, "U*A*V != D");
        assert_eq!(snf.u.mul(&snf.u_inv), Mat::identity(a.rows()), "U*U_inv != I");
        assert_eq!(snf.v.mul(&snf.v_inv), Mat::identity(a.cols()), "V*V_inv != I");
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if i != j {
                    assert!(snf.d[(i, j)].is_zero(), "off-diagonal entry in D");
                }
            }
        }
        for i in 0..snf.rank {
            assert!(snf.d[(i, i)] > BigInt::from(0), "non-positive invariant factor");
            if i + 1 < snf.rank {
                assert!(
                    snf.d[(i + 1, i + 1)].clone() % snf.d[(i, i)].clone() == BigInt::from(0),
                    "divisibility chain violated"
                );
            }
        }
        snf
    }

    #[test]
    fn snf_2468() {
        // Determinant-divisor oracle: gcd of entries = 2, |det| = 8,
        // so the invariant factors are 2 and 8/2 = 4.
        let snf = check_decomposition(&big(&[&[2, 4], &[6, 8]]));
        assert_eq!(snf.invariant_factors, vec![BigInt::from(2), BigInt::from(4)]);
    }

    #[test]
    fn snf_empty_and_zero() {
        let z = big(&[&[0, 0], &[0, 0]]);
        let snf = check_decomposition(&z);
        assert_eq!(snf.rank, 0);
        assert!(snf.invariant_factors.is_empty());

        let e: Mat<BigInt> = Mat::zero(0, 3);
        let snf = smith_normal_form(&e);
        assert_eq!(snf.rank, 0);
        assert_eq!(snf.kernel_basis().cols(), 3);
    }

    #[test]
    fn snf_divisibility_fix() {
        // diag(6, 4) is diagonal but violates the chain; SNF is diag(2, 12).
        let snf = check_decomposition(&big(&[&[6, 0], &[0, 4]]));
        assert_eq!(snf.invariant_factors, vec![BigInt::from(2), BigInt::from(12)]);
    }

    #[test]
    fn kernel_is_saturated() {
        let a = big(&[&[2, 4, 6], &[1, 2, 3]]);
        let snf = smith_normal_form(&a);
        let k = snf.kernel_basis();
        assert_eq!(k.cols(), 2);
        assert!(a.mul(&k).is_zero());
        // Saturation: the kernel basis has unit invariant factors.
        let ksnf = smith_normal_form(&k);
        assert!(ksnf.invariant_factors.iter().all(|f| f.is_one()));
    }

    #[test]
    fn solve_exact() {
        let a = big(&[&[2, 0], &[0, 3]]);
        let snf = smith_normal_form(&a);
        assert_eq!(
            snf.solve(&[BigInt::from(4), BigInt::from(9)]),
            Some(vec![BigInt::from(2), BigInt::from(3)])
        );
        assert_eq!(snf.solve(&[BigInt::from(1), BigInt::from(3)]), None);
    }

    #[test]
    fn unimodular_inverse_round_trip() {
        let a = big(&[&[1, 1], &[1, 0]]);
        let inv = inverse_unimodular(&a).expect("unimodular");
        assert_eq!(a.mul(&inv), Mat::identity(2));
        assert!(inverse_unimodular(&big(&[&[2, 0], &[0, 1]])).is_none());
    }
}
