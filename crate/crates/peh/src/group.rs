//! Finitely generated abelian groups in invariant-factor normal form.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::matrix::Mat;
use crate::snf::smith_normal_form;

/// `Z^free_rank + Z/d1 + ... + Z/dk` with `d1 | d2 | ... | dk` and every
/// `di >= 2`. Equality of values is isomorphism of groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbelianGroup {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianGroup {
    /// Normalizes an arbitrary list of cyclic orders into invariant factors.
    /// Accepts orders in any order and with repetitions; drops factors of 1.
    /// E.g. `[2, 3]` becomes `[6]` and `[4, 6]` becomes `[2, 12]`.
    pub fn new(free_rank: usize, torsion_orders: &[BigInt]) -> Self {
        assert!(
            torsion_orders.iter().all(|d| d.is_positive()),
            "torsion orders must be positive"
        );
        let n = torsion_orders.len();
        let diag = Mat::from_fn(n, n, |i, j| {
            if i == j { torsion_orders[i].clone() } else { BigInt::zero() }
        });
        let snf = smith_normal_form(&diag);
        let torsion = snf.invariant_factors.into_iter().filter(|d| !d.is_one()).collect();
        AbelianGroup { free_rank, torsion }
    }

    pub fn free(rank: usize) -> Self {
        AbelianGroup { free_rank: rank, torsion: Vec::new() }
    }

    pub fn trivial() -> Self {
        Self::free(0)
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    /// Number of generator coordinates (free then torsion) used by maps
    /// between groups in normal form.
    pub fn coords(&self) -> usize {
        self.free_rank + self.torsion.len()
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for d in &self.torsion {
            parts.push(format!("Z/{d}"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// The cokernel `Z^m / col-lattice(A)` of an `m x n` integer matrix.
pub fn cokernel(a: &Mat<BigInt>) -> AbelianGroup {
    let snf = smith_normal_form(a);
    let torsion =
        snf.invariant_factors.iter().filter(|d| !d.is_one()).cloned().collect::<Vec<_>>();
    AbelianGroup { free_rank: a.rows() - snf.rank, torsion }
}
