//! Homology of finite free chain complexes over the integers.
//!
//! A complex is a list of free abelian groups `C_0, ..., C_top` with
//! boundary maps `d_k : C_k -> C_{k-1}` satisfying `d_{k} . d_{k+1} = 0`.
//! For each degree we compute `H_k = ker d_k / im d_{k+1}` exactly,
//! together with:
//!
//! * the group in invariant-factor normal form,
//! * explicit cycle vectors generating it (free generators first, then
//!   torsion generators in increasing order of their invariant factor),
//! * a coordinate map [`HomologyData::class_of`] sending any cycle to its
//!   coordinates in those generators.
//!
//! All choices are made through Smith normal form, so the generators are a
//! deterministic function of the boundary matrices. Chain maps between
//! complexes induce matrices between the homology coordinate systems via
//! [`induced_map`].

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::PehError;
use crate::group::AbelianGroup;
use crate::matrix::Mat;
use crate::snf::{smith_normal_form, SmithDecomposition};
use crate::{IntMatrix, IntVector};

/// A finite free chain complex of integer lattices.
#[derive(Clone, Debug)]
pub struct FinChainComplex {
    ranks: Vec<usize>,
    /// `boundaries[k]` is `d_{k+1} : C_{k+1} -> C_k`, an
    /// `ranks[k] x ranks[k+1]` matrix.
    boundaries: Vec<IntMatrix>,
}

impl FinChainComplex {
    /// Builds a complex from the ranks of `C_0..C_top` and the boundary
    /// maps `d_1..d_top`. Rejects shape mismatches and any failure of
    /// `d . d = 0`.
    pub fn new(ranks: Vec<usize>, boundaries: Vec<IntMatrix>) -> Result<Self, PehError> {
        if ranks.is_empty() {
            return Err(PehError::ComplexInvalid("a complex needs at least degree 0".into()));
        }
        if boundaries.len() + 1 != ranks.len() {
            return Err(PehError::ComplexInvalid(format!(
                "{} degrees require {} boundary maps, got {}",
                ranks.len(),
                ranks.len() - 1,
                boundaries.len()
            )));
        }
        for (k, b) in boundaries.iter().enumerate() {
            if b.rows() != ranks[k] || b.cols() != ranks[k + 1] {
                return Err(PehError::ComplexInvalid(format!(
                    "boundary d_{} must be {} x {}, got {} x {}",
                    k + 1,
                    ranks[k],
                    ranks[k + 1],
                    b.rows(),
                    b.cols()
                )));
            }
        }
        for k in 0..boundaries.len().saturating_sub(1) {
            let prod = boundaries[k].mul(&boundaries[k + 1]);
            if !prod.is_zero() {
                return Err(PehError::ComplexInvalid(format!(
                    "d_{} . d_{} is nonzero",
                    k + 1,
                    k + 2
                )));
            }
        }
        Ok(FinChainComplex { ranks, boundaries })
    }

    /// Highest degree carried by the complex.
    pub fn top(&self) -> usize {
        self.ranks.len() - 1
    }

    /// Rank of the chain group in the given degree (0 above `top`).
    pub fn rank(&self, degree: usize) -> usize {
        self.ranks.get(degree).copied().unwrap_or(0)
    }

    /// The boundary map out of degree `k`, `d_k : C_k -> C_{k-1}`.
    /// For `k = 0` or `k > top` this is the appropriate zero map.
    pub fn boundary_out(&self, k: usize) -> IntMatrix {
        if k == 0 {
            Mat::zero(0, self.rank(0))
        } else if k > self.top() {
            Mat::zero(self.rank(k - 1), 0)
        } else {
            self.boundaries[k - 1].clone()
        }
    }

    /// The boundary map into degree `k`, `d_{k+1} : C_{k+1} -> C_k`.
    pub fn boundary_in(&self, k: usize) -> IntMatrix {
        if k >= self.top() {
            Mat::zero(self.rank(k), 0)
        } else {
            self.boundaries[k].clone()
        }
    }

    /// Alternating sum of the chain ranks.
    pub fn euler_characteristic(&self) -> BigInt {
        let mut chi = BigInt::zero();
        for (k, r) in self.ranks.iter().enumerate() {
            let term = BigInt::from(*r);
            if k % 2 == 0 {
                chi += term;
            } else {
                chi -= term;
            }
        }
        chi
    }
}

/// Homology of one degree: the group, its generators as ambient cycle
/// vectors, and enough of the eliminations to convert cycles to
/// coordinates.
#[derive(Clone, Debug)]
pub struct HomologyData {
    /// `H_k` in invariant-factor form.
    pub group: AbelianGroup,
    /// Generating cycles in ambient chain coordinates, free generators
    /// first, then torsion generators ordered by increasing invariant
    /// factor. `generators.len() == group.coords()`.
    pub generators: Vec<IntVector>,
    /// Saturated basis of the cycle lattice `ker d_k`, one column per
    /// basis vector.
    kernel: IntMatrix,
    kernel_snf: SmithDecomposition<BigInt>,
    /// Smith data of the image of `d_{k+1}` written in kernel coordinates.
    quotient_snf: SmithDecomposition<BigInt>,
    /// Indices (into the adapted basis) of the surviving torsion
    /// generators, aligned with `group.torsion`.
    torsion_rows: Vec<usize>,
}

impl HomologyData {
    /// Saturated basis of the cycle lattice, one column per basis vector.
    pub fn cycle_basis(&self) -> &IntMatrix {
        &self.kernel
    }

    /// Coordinates of a cycle's homology class in the normal-form
    /// generators: free coordinates first (integers), then torsion
    /// coordinates reduced into `[0, d_i)`.
    ///
    /// Fails with [`PehError::NotACycle`] when the vector is not in the
    /// kernel of the boundary map. The caller supplies the boundary
    /// because `HomologyData` stores only the kernel.
    pub fn class_of(&self, cycle: &[BigInt]) -> Result<IntVector, PehError> {
        let in_kernel = self
            .kernel_snf
            .solve(cycle)
            .ok_or_else(|| PehError::NotACycle("vector is outside the cycle lattice".into()))?;
        let z = self.kernel.cols();
        let adapted = self.quotient_snf.u.mul_vec(&in_kernel);
        debug_assert_eq!(adapted.len(), z);
        let r = self.quotient_snf.rank;
        let mut coords = Vec::with_capacity(self.group.coords());
        for item in adapted.iter().take(z).skip(r) {
            coords.push(item.clone());
        }
        for (&row, d) in self.torsion_rows.iter().zip(&self.group.torsion) {
            let rem = num_integer::Integer::mod_floor(&adapted[row], d);
            coords.push(rem);
        }
        Ok(coords)
    }
}

/// Homology in every degree of a complex, with the complex kept alongside
/// so cycle checks and induced maps have the boundary data they need.
#[derive(Clone, Debug)]
pub struct HomologyResult {
    pub complex: FinChainComplex,
    /// `data[k]` describes `H_k`, for `k = 0..=top`.
    pub data: Vec<HomologyData>,
}

impl HomologyResult {
    pub fn group(&self, degree: usize) -> &AbelianGroup {
        &self.data[degree].group
    }

    /// Coordinates of a chain's homology class; checks the chain is a
    /// cycle against the stored boundary map first.
    pub fn homology_class(&self, degree: usize, chain: &[BigInt]) -> Result<IntVector, PehError> {
        let d_out = self.complex.boundary_out(degree);
        if chain.len() != self.complex.rank(degree) {
            return Err(PehError::NotACycle(format!(
                "chain has {} coordinates, degree {} has rank {}",
                chain.len(),
                degree,
                self.complex.rank(degree)
            )));
        }
        let image = d_out.mul_vec(chain);
        if image.iter().any(|x| !x.is_zero()) {
            return Err(PehError::NotACycle(format!(
                "boundary of the chain in degree {degree} is nonzero"
            )));
        }
        self.data[degree].class_of(chain)
    }
}

/// Computes homology in all degrees.
pub fn homology(complex: &FinChainComplex) -> HomologyResult {
    let mut data = Vec::with_capacity(complex.top() + 1);
    for k in 0..=complex.top() {
        data.push(homology_degree(complex, k));
    }
    HomologyResult { complex: complex.clone(), data }
}

fn homology_degree(complex: &FinChainComplex, k: usize) -> HomologyData {
    let n = complex.rank(k);
    // Saturated kernel basis of d_k. In degree 0 the kernel is everything.
    let kernel = if k == 0 {
        Mat::identity(n)
    } else {
        smith_normal_form(&complex.boundary_out(k)).kernel_basis()
    };
    let kernel_snf = smith_normal_form(&kernel);
    let z = kernel.cols();

    // Express the image of d_{k+1} in kernel coordinates. Every column
    // lies in the kernel because the complex was validated, and the
    // kernel basis is saturated, so the solve is exact.
    let d_in = complex.boundary_in(k);
    let image_in_kernel = kernel_snf
        .solve_mat(&d_in)
        .expect("boundary image must lie in the cycle lattice of a valid complex");
    let quotient_snf = smith_normal_form(&image_in_kernel);
    let r = quotient_snf.rank;

    let mut torsion = Vec::new();
    let mut torsion_rows = Vec::new();
    for (i, f) in quotient_snf.invariant_factors.iter().enumerate() {
        if !f.is_one() {
            torsion.push(f.clone());
            torsion_rows.push(i);
        }
    }
    let group = AbelianGroup { free_rank: z - r, torsion };

    // The columns of U^{-1} form a basis of the kernel lattice adapted to
    // the image: column i maps to a generator of order d_i (infinite past
    // the rank). Convert back to ambient chain coordinates.
    let adapted = kernel.mul(&quotient_snf.u_inv);
    let mut generators = Vec::with_capacity(group.coords());
    for i in r..z {
        generators.push(adapted.col(i));
    }
    for &i in &torsion_rows {
        generators.push(adapted.col(i));
    }

    HomologyData { group, generators, kernel, kernel_snf, quotient_snf, torsion_rows }
}

/// A degreewise map of chain complexes. Construction checks the shapes
/// and full commutation with the boundary maps.
#[derive(Clone, Debug)]
pub struct ChainMap {
    /// `maps[k] : C_k(from) -> C_k(to)`.
    pub maps: Vec<IntMatrix>,
}

impl ChainMap {
    pub fn new(
        from: &FinChainComplex,
        to: &FinChainComplex,
        maps: Vec<IntMatrix>,
    ) -> Result<Self, PehError> {
        if from.top() != to.top() || maps.len() != from.top() + 1 {
            return Err(PehError::NotAChainMap(format!(
                "need one matrix per degree 0..={}, got {}",
                from.top(),
                maps.len()
            )));
        }
        for (k, f) in maps.iter().enumerate() {
            if f.rows() != to.rank(k) || f.cols() != from.rank(k) {
                return Err(PehError::NotAChainMap(format!(
                    "degree {} map must be {} x {}, got {} x {}",
                    k,
                    to.rank(k),
                    from.rank(k),
                    f.rows(),
                    f.cols()
                )));
            }
        }
        for k in 1..=from.top() {
            let lhs = maps[k - 1].mul(&from.boundary_out(k));
            let rhs = to.boundary_out(k).mul(&maps[k]);
            if lhs != rhs {
                return Err(PehError::NotAChainMap(format!(
                    "square at degree {k} does not commute with the boundaries"
                )));
            }
        }
        Ok(ChainMap { maps })
    }
}

/// Matrix of the map induced on `H_degree` by a chain map, written from
/// the normal-form coordinates of `from` to those of `to` (free rows
/// first, then torsion rows reduced into `[0, d_i)`).
pub fn induced_map(
    map: &ChainMap,
    from: &HomologyResult,
    to: &HomologyResult,
    degree: usize,
) -> Result<IntMatrix, PehError> {
    let src = &from.data[degree];
    let dst = &to.data[degree];
    let cols = src.group.coords();
    let rows = dst.group.coords();
    let mut out = Mat::zero(rows, cols);
    for (j, g) in src.generators.iter().enumerate() {
        let image = map.maps[degree].mul_vec(g);
        let class = to.homology_class(degree, &image)?;
        for (i, value) in class.into_iter().enumerate() {
            out[(i, j)] = value;
        }
    }
    Ok(out)
}

/// Applies an induced-map matrix to class coordinates, reducing torsion
/// rows of the target modulo their invariant factors.
pub fn apply_class_map(matrix: &IntMatrix, target: &AbelianGroup, coords: &[BigInt]) -> IntVector {
    let mut image = matrix.mul_vec(coords);
    let free = target.free_rank;
    for (i, d) in target.torsion.iter().enumerate() {
        let v = num_integer::Integer::mod_floor(&image[free + i], d);
        image[free + i] = v;
    }
    image
}
