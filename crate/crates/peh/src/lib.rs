//! Exact pattern-equivariant homology of hierarchical tilings.
//!
//! A repetitive tiling built by repeated substitution or inflation is
//! approximated by a sequence of finite CW complexes, one per hierarchy
//! level, whose cells are the local patterns seen at that level. Each
//! complex carries an integer cellular chain complex, and passing from one
//! level to the next induces a map on homology. The homology of the tiling
//! itself is the direct limit of this sequence of finitely generated
//! abelian groups.
//!
//! Everything here is computed in exact integer (or rational) arithmetic:
//!
//! * [`matrix`]: dense matrices over a generic integer scalar with a
//!   fraction-free determinant.
//! * [`snf`]: Smith normal form with unimodular transforms and their
//!   inverses, kernels, saturations, and exact linear solving.
//! * [`group`], [`homology`]: finitely generated abelian groups in
//!   invariant-factor form, homology of finite free chain complexes with
//!   deterministic generators, and induced maps.
//! * [`limits`]: direct limits of sequences of abelian groups, including
//!   classification of stationary systems into normal forms built from
//!   `Z`, localizations `Z[1/m]`, and finite cyclic groups.
//! * [`subst`]: one-dimensional substitution systems; their approximant
//!   complexes and connecting maps are generated from the substitution
//!   rules alone.
//! * [`dataset`]: declarative descriptions of higher-dimensional
//!   approximant sequences (boundary matrices, connecting maps, cell
//!   weights) with validation, weighted transforms, and comparison reports.
//! * [`report`]: serializable results for the command-line tool.

pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod group;
pub mod homology;
pub mod limits;
pub mod matrix;
pub mod report;
pub mod snf;
pub mod subst;

pub use error::PehError;
pub use group::AbelianGroup;

use num_bigint::BigInt;

/// Matrix over arbitrary-precision integers, the workhorse scalar type.
pub type IntMatrix = matrix::Mat<BigInt>;

/// Integer vector in the same scalar type.
pub type IntVector = Vec<BigInt>;

/// Convenience constructor for [`IntMatrix`] from machine integers.
pub fn int_matrix(rows: &[&[i64]]) -> IntMatrix {
    let cols = rows.first().map_or(0, |r| r.len());
    matrix::Mat::from_rows(
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        cols,
    )
}

/// Convenience constructor for [`IntVector`] from machine integers.
pub fn int_vec(v: &[i64]) -> IntVector {
    v.iter().map(|&x| BigInt::from(x)).collect()
}
