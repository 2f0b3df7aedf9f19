//! Direct limits of sequences of finitely generated abelian groups.
//!
//! A direct system `G_0 -> G_1 -> G_2 -> ...` of finitely generated
//! abelian groups has a colimit that is usually not finitely generated:
//! iterating multiplication by 2 on `Z` yields the dyadic rationals
//! `Z[1/2]`. This module classifies such colimits into normal forms
//! assembled from `Z`, localizations `Z[1/m]`, and finite cyclic groups,
//! and falls back to an explicit stable presentation when no normal form
//! is certified.
//!
//! The stationary case (one group `G`, one endomorphism `M`, repeated
//! forever) is the workhorse. The classification runs in three stages:
//!
//! 1. Restrict to the eventual image: the saturation of `im M^k` for
//!    large `k`, on which `M` acts injectively ([`eventual_image`]).
//! 2. If the restricted map is unimodular the free part is `Z^r`
//!    exactly. Otherwise, if the restricted map is diagonalizable over
//!    `Q` with integer eigenvalues, the candidate `(+) Z[1/|lambda|]` is
//!    checked against a divisibility oracle ([`membership_test`]): each
//!    claimed localized generator must actually become divisible, and
//!    each claimed plain `Z` generator must not. Eigenvector lattices can
//!    sit at finite index in the stable lattice, so the oracle, not the
//!    eigendecomposition alone, is what justifies the answer.
//! 3. Otherwise the result is a presentation: the stable rank and the
//!    restricted integer matrix.
//!
//! Torsion is carried through separately. The torsion subgroups map into
//! each other and stabilize after finitely many steps; the limit torsion
//! is attached to the free normal form whenever the extension provably
//! splits (free part plain `Z`s, or localized bases coprime to every
//! torsion order), and reported as unresolved otherwise.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::PehError;
use crate::group::{cokernel, AbelianGroup};
use crate::matrix::Mat;
use crate::snf::smith_normal_form;
use crate::IntMatrix;

/// Tuning for the limit classifier.
#[derive(Clone, Debug)]
pub struct LimitOptions {
    /// Iteration cap inside [`membership_test`].
    pub membership_horizon: usize,
    /// Depth of divisibility checked by the oracle: a summand `Z[1/m]`
    /// is accepted only after its generator is verified divisible by
    /// `p^depth` for every prime `p | m`.
    pub verified_depth: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { membership_horizon: 64, verified_depth: 12 }
    }
}

/// Primes used to probe claimed plain `Z` summands for hidden
/// divisibility.
const PROBE_PRIMES: [u32; 4] = [2, 3, 5, 7];

/// Whether the torsion of a presented limit is pinned down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TorsionStatus {
    /// Invariant factors of the limit's torsion subgroup.
    Resolved(Vec<BigInt>),
    /// The torsion interacts with localized free summands; the
    /// extension may not split, so only the stable torsion subgroup is
    /// known, not its embedding.
    Unresolved,
}

/// A classified direct limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitGroup {
    /// `Z^free_rank (+) (+)_i Z[1/m_i] (+) (+)_j Z/d_j` with each `m_i`
    /// squarefree (radical-reduced) and sorted, and torsion in
    /// invariant-factor form.
    NormalForm {
        free_rank: usize,
        localized: Vec<BigInt>,
        torsion: Vec<BigInt>,
        /// Divisibility depth certified by the oracle; 0 when the answer
        /// is exact and needed no oracle.
        verified_depth: usize,
    },
    /// Stable but uncertified: the limit is `colim(Z^rank --matrix-->
    /// Z^rank --matrix--> ...)`, possibly extended by torsion.
    Presentation {
        rank: usize,
        matrix: IntMatrix,
        torsion: TorsionStatus,
        verified_depth: usize,
    },
}

impl LimitGroup {
    /// Builds a normal form, radical-reducing the localization bases
    /// (`Z[1/4] = Z[1/2]`), turning any `Z[1/1]` into a plain `Z`, and
    /// normalizing torsion to invariant factors.
    pub fn normal_form(
        free_rank: usize,
        localized: Vec<BigInt>,
        torsion: Vec<BigInt>,
        verified_depth: usize,
    ) -> LimitGroup {
        let mut free = free_rank;
        let mut loc = Vec::new();
        for m in localized {
            let m = m.abs();
            assert!(m.is_positive(), "localization base must be nonzero");
            let reduced = radical(&m).unwrap_or(m);
            if reduced.is_one() {
                free += 1;
            } else {
                loc.push(reduced);
            }
        }
        loc.sort();
        let torsion = AbelianGroup::new(0, &torsion).torsion;
        LimitGroup::NormalForm { free_rank: free, localized: loc, torsion, verified_depth }
    }

    /// The finitely generated case embedded as a limit.
    pub fn from_group(group: &AbelianGroup) -> LimitGroup {
        LimitGroup::NormalForm {
            free_rank: group.free_rank,
            localized: Vec::new(),
            torsion: group.torsion.clone(),
            verified_depth: 0,
        }
    }

    pub fn verified_depth(&self) -> usize {
        match self {
            LimitGroup::NormalForm { verified_depth, .. }
            | LimitGroup::Presentation { verified_depth, .. } => *verified_depth,
        }
    }
}

impl fmt::Display for LimitGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitGroup::NormalForm { free_rank, localized, torsion, .. } => {
                let mut parts = Vec::new();
                match free_rank {
                    0 => {}
                    1 => parts.push("Z".to_string()),
                    r => parts.push(format!("Z^{r}")),
                }
                for m in localized {
                    parts.push(format!("Z[1/{m}]"));
                }
                for d in torsion {
                    parts.push(format!("Z/{d}"));
                }
                if parts.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", parts.join(" + "))
                }
            }
            LimitGroup::Presentation { rank, torsion, .. } => {
                write!(f, "presentation(rank {rank}")?;
                match torsion {
                    TorsionStatus::Resolved(t) if t.is_empty() => write!(f, ")"),
                    TorsionStatus::Resolved(t) => {
                        let list =
                            t.iter().map(|d| format!("Z/{d}")).collect::<Vec<_>>().join(" + ");
                        write!(f, ", torsion {list})")
                    }
                    TorsionStatus::Unresolved => write!(f, ", torsion unresolved)"),
                }
            }
        }
    }
}

/// Outcome of a limit classification, kept as data so one failed degree
/// does not discard the rest of a report.
#[derive(Clone, Debug, PartialEq)]
pub enum LimitOutcome {
    Classified(LimitGroup),
    Failed(String),
}

impl LimitOutcome {
    pub fn from_result(result: Result<LimitGroup, PehError>) -> LimitOutcome {
        match result {
            Ok(limit) => LimitOutcome::Classified(limit),
            Err(e) => LimitOutcome::Failed(e.to_string()),
        }
    }
}

/// Decides isomorphism of two classified limits. Both must be in normal
/// form; comparing against a presentation is refused rather than guessed.
pub fn iso_check(a: &LimitGroup, b: &LimitGroup) -> Result<bool, PehError> {
    match (a, b) {
        (
            LimitGroup::NormalForm { free_rank: fa, localized: la, torsion: ta, .. },
            LimitGroup::NormalForm { free_rank: fb, localized: lb, torsion: tb, .. },
        ) => {
            let ra = normalize_key(*fa, la, ta);
            let rb = normalize_key(*fb, lb, tb);
            Ok(ra == rb)
        }
        _ => Err(PehError::NotClassified(
            "isomorphism testing needs both sides in normal form".into(),
        )),
    }
}

fn normalize_key(
    free: usize,
    localized: &[BigInt],
    torsion: &[BigInt],
) -> (usize, Vec<BigInt>, Vec<BigInt>) {
    let mut free = free;
    let mut loc = Vec::new();
    for m in localized {
        let reduced = radical(m).unwrap_or_else(|| m.clone());
        if reduced.is_one() {
            free += 1;
        } else {
            loc.push(reduced);
        }
    }
    loc.sort();
    let tor = AbelianGroup::new(0, torsion).torsion;
    (free, loc, tor)
}

/// The stable part of an integer endomorphism: the saturation of
/// `im M^k` once its rank stops dropping, with the restriction of `M`
/// to it.
#[derive(Clone, Debug)]
pub struct EventualImage {
    /// Stable rank.
    pub rank: usize,
    /// Saturated basis of the stable lattice, one column per basis
    /// vector (an `n x rank` matrix).
    pub basis: IntMatrix,
    /// The matrix of `M` restricted to the stable lattice in that basis:
    /// `M * basis = basis * restricted`, with nonzero determinant.
    pub restricted: IntMatrix,
    /// Power at which the rank stabilized.
    pub power: usize,
}

/// Computes the eventual image of a square integer matrix.
pub fn eventual_image(m: &IntMatrix) -> EventualImage {
    assert!(m.is_square(), "eventual image needs a square matrix");
    let n = m.rows();
    if n == 0 {
        return EventualImage {
            rank: 0,
            basis: Mat::zero(0, 0),
            restricted: Mat::zero(0, 0),
            power: 0,
        };
    }
    let mut power = 1;
    let mut mk = m.clone();
    let mut snf_k = smith_normal_form(&mk);
    // The rank of M^k is non-increasing and stabilizes within n steps;
    // once two consecutive powers agree it is stable forever.
    loop {
        let next = mk.mul(m);
        let snf_next = smith_normal_form(&next);
        if snf_next.rank == snf_k.rank || power > n {
            break;
        }
        mk = next;
        snf_k = snf_next;
        power += 1;
    }
    let rank = snf_k.rank;
    let basis = snf_k.saturation_basis();
    let mb = m.mul(&basis);
    let restricted = smith_normal_form(&basis)
        .solve_mat(&mb)
        .expect("the saturated stable lattice is invariant under the map");
    debug_assert!(rank == 0 || !restricted.det().is_zero());
    EventualImage { rank, basis, restricted, power }
}

/// Verdict of the divisibility oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// The target becomes integral after `stage` applications of the map,
    /// so it names an element of the limit.
    Realizable { stage: usize },
    /// The fractional parts entered a cycle without ever clearing; the
    /// target is provably not in the limit.
    NotRealizable,
    /// No verdict within the horizon.
    Inconclusive,
}

/// Decides whether a rational vector names an element of
/// `colim(Z^n --M--> Z^n --M--> ...)`, viewed inside `Q^n`: the limit is
/// the set of vectors some power of `M` makes integral. Iterates `M`,
/// watching the fractional parts; since those evolve deterministically, a
/// repeated state with no integral point in between is a definitive no.
pub fn membership_test(map: &IntMatrix, target: &[BigRational], horizon: usize) -> Membership {
    assert!(map.is_square() && map.rows() == target.len(), "shape mismatch");
    let mut y = target.to_vec();
    let mut seen: HashSet<Vec<BigRational>> = HashSet::new();
    for stage in 0..=horizon {
        if y.iter().all(BigRational::is_integer) {
            return Membership::Realizable { stage };
        }
        let frac: Vec<BigRational> = y.iter().map(|r| r - r.floor()).collect();
        if !seen.insert(frac) {
            return Membership::NotRealizable;
        }
        y = mul_rational(map, &y);
    }
    Membership::Inconclusive
}

/// Divisibility test for a system whose maps vary from stage to stage:
/// the target is realizable when applying the maps in order makes it
/// integral. With varying maps there is no finite certificate of
/// absence, so the answer is realizable or inconclusive, never a
/// definitive no.
pub fn tower_membership(maps: &[IntMatrix], target: &[BigRational]) -> Membership {
    let mut y = target.to_vec();
    for (stage, m) in
        std::iter::once(None).chain(maps.iter().map(Some)).enumerate()
    {
        if let Some(m) = m {
            assert!(m.is_square() && m.rows() == y.len(), "shape mismatch");
            y = mul_rational(m, &y);
        }
        if y.iter().all(BigRational::is_integer) {
            return Membership::Realizable { stage };
        }
    }
    Membership::Inconclusive
}

fn mul_rational(m: &IntMatrix, v: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); m.rows()];
    for i in 0..m.rows() {
        let mut acc = BigRational::zero();
        for j in 0..m.cols() {
            acc += BigRational::from(m[(i, j)].clone()) * &v[j];
        }
        out[i] = acc;
    }
    out
}

/// Classifies `colim(G --M--> G --M--> ...)` for one group and one
/// endomorphism, repeated forever. `map` is written in the normal-form
/// coordinates of `group`: free generators first, then torsion
/// generators; columns over torsion generators must land in the torsion
/// subgroup.
pub fn stationary_limit(
    group: &AbelianGroup,
    map: &IntMatrix,
    opts: &LimitOptions,
) -> Result<LimitGroup, PehError> {
    let f = group.free_rank;
    let t = group.torsion.len();
    if map.rows() != f + t || map.cols() != f + t {
        return Err(PehError::InvariantViolation {
            check: "group-endomorphism-shape".into(),
            detail: format!(
                "map must be {} x {} in normal-form coordinates, got {} x {}",
                f + t,
                f + t,
                map.rows(),
                map.cols()
            ),
        });
    }
    // Torsion generators must map into the torsion subgroup: their
    // columns have zero free coordinates and compatible orders.
    for j in 0..t {
        for i in 0..f {
            if !map[(i, f + j)].is_zero() {
                return Err(PehError::InvariantViolation {
                    check: "torsion-maps-to-torsion".into(),
                    detail: format!(
                        "torsion generator {} has a nonzero free coordinate in its image",
                        j
                    ),
                });
            }
        }
        for i in 0..t {
            let needed = (&group.torsion[j] * &map[(f + i, f + j)]).mod_floor(&group.torsion[i]);
            if !needed.is_zero() {
                return Err(PehError::InvariantViolation {
                    check: "torsion-order-compatibility".into(),
                    detail: format!(
                        "image of the order-{} generator {} is not killed by its order",
                        group.torsion[j], j
                    ),
                });
            }
        }
    }

    let free_block = Mat::from_fn(f, f, |i, j| map[(i, j)].clone());
    let torsion_block = Mat::from_fn(t, t, |i, j| map[(f + i, f + j)].clone());
    let limit_torsion = eventual_torsion(&torsion_block, &group.torsion);

    let free_limit = classify_free(&free_block, opts);
    Ok(match free_limit {
        FreeLimit::NormalForm { free_rank, localized, verified_depth } => {
            // The extension by torsion splits when the free part is
            // projective (no localized summands) or when every
            // localization base is coprime to every torsion order.
            let splits = localized.iter().all(|m| {
                limit_torsion.iter().all(|d| m.gcd(d).is_one())
            });
            if splits {
                LimitGroup::normal_form(free_rank, localized, limit_torsion, verified_depth)
            } else {
                let ev = eventual_image(&free_block);
                LimitGroup::Presentation {
                    rank: ev.rank,
                    matrix: ev.restricted,
                    torsion: TorsionStatus::Unresolved,
                    verified_depth: 0,
                }
            }
        }
        FreeLimit::Presentation { rank, matrix } => {
            let torsion = if limit_torsion.is_empty() {
                TorsionStatus::Resolved(Vec::new())
            } else {
                TorsionStatus::Unresolved
            };
            LimitGroup::Presentation { rank, matrix, torsion, verified_depth: 0 }
        }
    })
}

enum FreeLimit {
    NormalForm { free_rank: usize, localized: Vec<BigInt>, verified_depth: usize },
    Presentation { rank: usize, matrix: IntMatrix },
}

/// Classifies `colim(Z^f, A)` by the three-stage procedure described in
/// the module docs.
fn classify_free(a: &IntMatrix, opts: &LimitOptions) -> FreeLimit {
    let ev = eventual_image(a);
    let r = ev.rank;
    if r == 0 {
        return FreeLimit::NormalForm {
            free_rank: 0,
            localized: Vec::new(),
            verified_depth: 0,
        };
    }
    let mp = &ev.restricted;
    if mp.det().abs().is_one() {
        // Unimodular on the stable lattice: every stage is an
        // isomorphism there, so the limit is that lattice.
        return FreeLimit::NormalForm {
            free_rank: r,
            localized: Vec::new(),
            verified_depth: 0,
        };
    }
    match diagonalizable_spectrum(mp).and_then(|eigen| certify_localized(mp, &eigen, opts)) {
        Some((free_rank, localized)) => FreeLimit::NormalForm {
            free_rank,
            localized,
            verified_depth: opts.verified_depth,
        },
        None => FreeLimit::Presentation { rank: r, matrix: mp.clone() },
    }
}

struct EigenSpace {
    value: BigInt,
    /// Saturated basis of the eigenspace lattice, one column per vector.
    vectors: IntMatrix,
}

/// Integer spectrum of a matrix that is diagonalizable over `Q`, or
/// `None` when the characteristic polynomial does not split over `Z` or
/// some eigenvalue is defective.
fn diagonalizable_spectrum(m: &IntMatrix) -> Option<Vec<EigenSpace>> {
    let n = m.rows();
    let poly = char_poly(m);
    let roots = integer_roots(&poly)?;
    let total: usize = roots.iter().map(|(_, mult)| mult).sum();
    if total != n {
        return None;
    }
    let mut spaces = Vec::new();
    for (value, mult) in roots {
        let shifted = Mat::from_fn(n, n, |i, j| {
            if i == j {
                &m[(i, j)] - &value
            } else {
                m[(i, j)].clone()
            }
        });
        let vectors = smith_normal_form(&shifted).kernel_basis();
        if vectors.cols() != mult {
            return None;
        }
        spaces.push(EigenSpace { value, vectors });
    }
    Some(spaces)
}

/// The oracle gate of classification stage 2. The eigendecomposition
/// suggests the summands; every divisibility claim it makes is then
/// checked on the actual system before the normal form is accepted.
fn certify_localized(
    mp: &IntMatrix,
    eigen: &[EigenSpace],
    opts: &LimitOptions,
) -> Option<(usize, Vec<BigInt>)> {
    let mut free_rank = 0;
    let mut localized = Vec::new();
    for space in eigen {
        let m = space.value.abs();
        if m.is_zero() {
            // The restricted map has nonzero determinant, so a zero
            // eigenvalue signals an internal inconsistency; refuse to
            // certify.
            return None;
        }
        let count = space.vectors.cols();
        if m.is_one() {
            // Claimed plain Z summands: probe that their generators do
            // not secretly become divisible.
            for c in 0..count {
                let v = space.vectors.col(c);
                for p in PROBE_PRIMES {
                    let target: Vec<BigRational> = v
                        .iter()
                        .map(|x| BigRational::new(x.clone(), BigInt::from(p)))
                        .collect();
                    match membership_test(mp, &target, opts.membership_horizon) {
                        Membership::NotRealizable => {}
                        _ => return None,
                    }
                }
            }
            free_rank += count;
        } else {
            // Claimed Z[1/m] summands: their generators must be
            // divisible by p^depth for every prime p | m.
            let primes = factorize(&m)?;
            for c in 0..count {
                let v = space.vectors.col(c);
                for (p, _) in &primes {
                    let power = p.pow(opts.verified_depth as u32);
                    let target: Vec<BigRational> = v
                        .iter()
                        .map(|x| BigRational::new(x.clone(), power.clone()))
                        .collect();
                    match membership_test(mp, &target, opts.membership_horizon) {
                        Membership::Realizable { .. } => {}
                        _ => return None,
                    }
                }
            }
            for _ in 0..count {
                localized.push(m.clone());
            }
        }
    }
    Some((free_rank, localized))
}

/// Invariant factors of the stable torsion subgroup: iterate the induced
/// map on the finite torsion group until its image stops shrinking. The
/// subgroup chain strictly decreases at most `sum log2(d_i)` times, so
/// evaluating at that depth is already stable.
fn eventual_torsion(torsion_block: &IntMatrix, orders: &[BigInt]) -> Vec<BigInt> {
    let t = orders.len();
    if t == 0 {
        return Vec::new();
    }
    let depth: u64 = orders.iter().map(|d| d.bits()).sum::<u64>() + 1;
    let mut power = Mat::identity(t);
    for _ in 0..depth {
        power = torsion_block.mul(&power);
        for i in 0..t {
            for j in 0..t {
                let v = power[(i, j)].mod_floor(&orders[i]);
                power[(i, j)] = v;
            }
        }
    }
    // The image subgroup is Z^t / L where L is the lattice of integer
    // vectors x with (power)x = 0 modulo the orders.
    let stacked = Mat::from_fn(t, 2 * t, |i, j| {
        if j < t {
            power[(i, j)].clone()
        } else if j - t == i {
            orders[i].clone()
        } else {
            BigInt::zero()
        }
    });
    let kernel = smith_normal_form(&stacked).kernel_basis();
    let preimage = Mat::from_fn(t, kernel.cols(), |i, j| kernel[(i, j)].clone());
    cokernel(&preimage).torsion
}

/// A finite window of a direct system: `groups[i] --maps[i]-->
/// groups[i+1]`, the maps written in normal-form coordinates.
#[derive(Clone, Debug)]
pub struct DirectSystem {
    pub groups: Vec<AbelianGroup>,
    pub maps: Vec<IntMatrix>,
}

impl DirectSystem {
    pub fn new(groups: Vec<AbelianGroup>, maps: Vec<IntMatrix>) -> Result<Self, PehError> {
        if groups.is_empty() {
            return Err(PehError::InvariantViolation {
                check: "system-nonempty".into(),
                detail: "a direct system needs at least one group".into(),
            });
        }
        if maps.len() + 1 != groups.len() {
            return Err(PehError::InvariantViolation {
                check: "system-shape".into(),
                detail: format!(
                    "{} groups require {} maps, got {}",
                    groups.len(),
                    groups.len() - 1,
                    maps.len()
                ),
            });
        }
        for (i, m) in maps.iter().enumerate() {
            if m.rows() != groups[i + 1].coords() || m.cols() != groups[i].coords() {
                return Err(PehError::InvariantViolation {
                    check: "system-map-shape".into(),
                    detail: format!(
                        "map {} must be {} x {}, got {} x {}",
                        i,
                        groups[i + 1].coords(),
                        groups[i].coords(),
                        m.rows(),
                        m.cols()
                    ),
                });
            }
        }
        Ok(DirectSystem { groups, maps })
    }
}

/// Whether a matrix in normal-form coordinates is an isomorphism between
/// two groups of the same isomorphism type: it must be surjective, and a
/// surjection between isomorphic finitely generated groups is an
/// isomorphism.
pub fn is_isomorphism(map: &IntMatrix, from: &AbelianGroup, to: &AbelianGroup) -> bool {
    if from != to {
        return false;
    }
    if map.rows() != to.coords() || map.cols() != from.coords() {
        return false;
    }
    // Surjectivity: the columns of the map, together with the torsion
    // relations of the target, must generate the target's coordinate
    // lattice.
    let t = to.torsion.len();
    let relations = Mat::from_fn(to.coords(), t, |i, j| {
        if i == to.free_rank + j {
            to.torsion[j].clone()
        } else {
            BigInt::zero()
        }
    });
    cokernel(&map.hcat(&relations)).is_trivial()
}

/// Classifies the limit of a finite window of a direct system, reading
/// the window as the visible part of an infinite system that continues
/// its trailing pattern.
///
/// * If the trailing maps repeat one (group, matrix) pair, the limit is
///   [`stationary_limit`] of that pair.
/// * Otherwise, if the trailing maps are all isomorphisms, the limit is
///   the last group.
/// * Otherwise the window shows no stable pattern and the call fails
///   with [`PehError::HorizonExceeded`].
///
/// A trailing pattern must cover at least two maps (or the whole window
/// if it is shorter) before it is trusted.
pub fn limit_of_system(system: &DirectSystem, opts: &LimitOptions) -> Result<LimitGroup, PehError> {
    let n = system.maps.len();
    if n == 0 {
        return Ok(LimitGroup::from_group(&system.groups[0]));
    }

    let mut stationary_run = 0;
    let last_group = system.groups.last().expect("validated nonempty");
    let last_map = system.maps.last().expect("checked nonempty");
    for i in (0..n).rev() {
        if system.groups[i] == *last_group
            && system.groups[i + 1] == *last_group
            && system.maps[i] == *last_map
        {
            stationary_run += 1;
        } else {
            break;
        }
    }
    // A pattern is trusted once it covers two maps, or the whole window
    // when the window itself is that short.
    if stationary_run >= 2 || stationary_run == n {
        return stationary_limit(last_group, last_map, opts);
    }

    let mut iso_run = 0;
    for i in (0..n).rev() {
        if is_isomorphism(&system.maps[i], &system.groups[i], &system.groups[i + 1]) {
            iso_run += 1;
        } else {
            break;
        }
    }
    if iso_run >= 2 || iso_run == n {
        return Ok(LimitGroup::from_group(last_group));
    }

    Err(PehError::HorizonExceeded {
        horizon: system.groups.len(),
        detail: format!(
            "trailing maps neither repeat nor become isomorphisms \
             (stationary run {stationary_run}, isomorphism run {iso_run})"
        ),
    })
}

/// Characteristic polynomial `det(xI - M)`, coefficients from the
/// constant term up, always monic. Computed from sums of principal
/// minors, which stays exact and is cheap at the sizes that arise here.
pub fn char_poly(m: &IntMatrix) -> Vec<BigInt> {
    assert!(m.is_square(), "characteristic polynomial needs a square matrix");
    let n = m.rows();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut subset: Vec<usize> = Vec::new();
    for k in 1..=n {
        let mut sum = BigInt::zero();
        subset.clear();
        principal_minor_sum(m, k, 0, &mut subset, &mut sum);
        coeffs[n - k] = if k % 2 == 0 { sum } else { -sum };
    }
    coeffs
}

fn principal_minor_sum(
    m: &IntMatrix,
    k: usize,
    start: usize,
    subset: &mut Vec<usize>,
    sum: &mut BigInt,
) {
    if subset.len() == k {
        let sub = Mat::from_fn(k, k, |i, j| m[(subset[i], subset[j])].clone());
        *sum += sub.det();
        return;
    }
    let remaining = k - subset.len();
    for next in start..=(m.rows() - remaining) {
        subset.push(next);
        principal_minor_sum(m, k, next + 1, subset, sum);
        subset.pop();
    }
}

/// All integer roots with multiplicity of a monic integer polynomial
/// (coefficients from the constant term up), or `None` when the
/// polynomial does not split completely over `Z` or the constant term
/// resists factoring. Roots are found among the divisors of the constant
/// term and removed by exact deflation.
pub fn integer_roots(poly: &[BigInt]) -> Option<Vec<(BigInt, usize)>> {
    let mut p: Vec<BigInt> = poly.to_vec();
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    assert!(
        p.last().is_some_and(One::is_one),
        "integer root finding expects a monic polynomial"
    );
    let mut roots: BTreeMap<BigInt, usize> = BTreeMap::new();
    // Factor out x^t first.
    let zero_mult = p.iter().take_while(|c| c.is_zero()).count();
    if zero_mult > 0 {
        roots.insert(BigInt::zero(), zero_mult);
        p.drain(0..zero_mult);
    }
    if p.len() == 1 {
        return Some(roots.into_iter().collect());
    }
    // Any integer root of any deflation divides the original constant
    // term, so one candidate list serves throughout.
    let constant = p[0].abs();
    let factors = factorize(&constant)?;
    let mut divisors = divisors_from(&factors)?;
    divisors.sort();
    for d in divisors {
        for candidate in [d.clone(), -d] {
            loop {
                if p.len() == 1 {
                    break;
                }
                if !eval_poly(&p, &candidate).is_zero() {
                    break;
                }
                p = deflate(&p, &candidate);
                *roots.entry(candidate.clone()).or_insert(0) += 1;
            }
        }
    }
    if p.len() == 1 {
        Some(roots.into_iter().collect())
    } else {
        None
    }
}

fn eval_poly(p: &[BigInt], x: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Exact division of `p` by `(x - r)`; caller guarantees `r` is a root.
fn deflate(p: &[BigInt], r: &BigInt) -> Vec<BigInt> {
    let d = p.len() - 1;
    let mut q = vec![BigInt::zero(); d];
    let mut carry = BigInt::zero();
    for i in (0..d).rev() {
        carry = &p[i + 1] + r * &carry;
        q[i] = carry.clone();
    }
    debug_assert!((&p[0] + r * &q[0]).is_zero(), "deflation had a nonzero remainder");
    q
}

/// Prime factorization of a positive integer, `None` if the effort cap
/// is hit. Trial division handles everything small; larger survivors go
/// through a strong probable-prime test and Pollard's rho.
pub fn factorize(n: &BigInt) -> Option<Vec<(BigInt, u32)>> {
    if !n.is_positive() {
        return None;
    }
    let mut out: BTreeMap<BigInt, u32> = BTreeMap::new();
    let mut n = n.clone();
    let mut p = BigInt::from(2u32);
    while &p * &p <= n && p < BigInt::from(100_000u32) {
        while (&n % &p).is_zero() {
            *out.entry(p.clone()).or_insert(0) += 1;
            n /= &p;
        }
        p += if p == BigInt::from(2u32) { 1u32 } else { 2u32 };
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            *out.entry(m).or_insert(0) += 1;
            continue;
        }
        let d = pollard_rho(&m)?;
        stack.push(&m / &d);
        stack.push(d);
    }
    Some(out.into_iter().collect())
}

/// Radical (product of the distinct primes) of a positive integer.
pub fn radical(n: &BigInt) -> Option<BigInt> {
    let factors = factorize(n)?;
    Some(factors.iter().fold(BigInt::one(), |acc, (p, _)| acc * p))
}

/// Miller-Rabin with the standard deterministic witness set, which is
/// exact for inputs below 3.3e24 and a strong probable-prime test above.
fn is_probable_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2u32);
    if *n < two {
        return false;
    }
    for small in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let s = BigInt::from(small);
        if *n == s {
            return true;
        }
        if (n % &s).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = BigInt::from(a).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// One nontrivial factor of an odd composite, or `None` at the effort
/// cap. Brent's cycle variant of Pollard's rho.
fn pollard_rho(n: &BigInt) -> Option<BigInt> {
    if n.is_even() {
        return Some(BigInt::from(2u32));
    }
    for seed in 1u32..16 {
        let c = BigInt::from(seed);
        let mut x = BigInt::from(2u32);
        let mut y = x.clone();
        for _ in 0..200_000 {
            x = (&x * &x + &c) % n;
            y = (&y * &y + &c) % n;
            y = (&y * &y + &c) % n;
            let diff = (&x - &y).abs();
            if diff.is_zero() {
                break;
            }
            let g = diff.gcd(n);
            if !g.is_one() {
                if &g < n {
                    return Some(g);
                }
                break;
            }
        }
    }
    None
}

fn divisors_from(factors: &[(BigInt, u32)]) -> Option<Vec<BigInt>> {
    let mut divisors = vec![BigInt::one()];
    for (p, e) in factors {
        let mut next = Vec::new();
        for d in &divisors {
            let mut pk = BigInt::one();
            for _ in 0..=*e {
                next.push(d * &pk);
                pk *= p;
            }
        }
        if next.len() > 10_000 {
            return None;
        }
        divisors = next;
    }
    Some(divisors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int_matrix;

    fn rational(v: &[(i64, i64)]) -> Vec<BigRational> {
        v.iter().map(|&(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d))).collect()
    }

    #[test]
    fn char_poly_and_roots() {
        let m = int_matrix(&[&[1, 1, 1], &[1, 0, 0], &[1, 0, 0]]);
        // det(xI - M) = x^3 - x^2 - 2x.
        let poly = char_poly(&m);
        assert_eq!(
            poly,
            vec![BigInt::zero(), BigInt::from(-2), BigInt::from(-1), BigInt::one()]
        );
        let roots = integer_roots(&poly).expect("splits over Z");
        assert_eq!(
            roots,
            vec![
                (BigInt::from(-1), 1),
                (BigInt::zero(), 1),
                (BigInt::from(2), 1)
            ]
        );
    }

    #[test]
    fn integer_roots_rejects_irreducible() {
        // x^2 + 1 has no integer roots.
        let poly = vec![BigInt::one(), BigInt::zero(), BigInt::one()];
        assert_eq!(integer_roots(&poly), None);
        // x^2 - 2 has none either, despite a fine constant term.
        let poly = vec![BigInt::from(-2), BigInt::zero(), BigInt::one()];
        assert_eq!(integer_roots(&poly), None);
        // (x - 2)^2 (x + 3) splits with multiplicity.
        let poly = vec![BigInt::from(12), BigInt::from(-8), BigInt::from(-1), BigInt::one()];
        assert_eq!(
            integer_roots(&poly),
            Some(vec![(BigInt::from(-3), 1), (BigInt::from(2), 2)])
        );
    }

    #[test]
    fn eventual_image_drops_nilpotent_directions() {
        // M sends e1 -> 0 and acts as 2 on e2.
        let m = int_matrix(&[&[0, 0], &[0, 2]]);
        let ev = eventual_image(&m);
        assert_eq!(ev.rank, 1);
        assert_eq!(ev.restricted, int_matrix(&[&[2]]));
        // Full-rank input keeps everything.
        let m = int_matrix(&[&[1, 1], &[1, 0]]);
        let ev = eventual_image(&m);
        assert_eq!(ev.rank, 2);
    }

    #[test]
    fn membership_cycle_detection() {
        let m = int_matrix(&[&[1, 1], &[2, 0]]);
        // (1,1)/2 is an eigenvector over 2: realizable after one step.
        assert_eq!(
            membership_test(&m, &rational(&[(1, 2), (1, 2)]), 16),
            Membership::Realizable { stage: 1 }
        );
        // (1,-2)/2 cycles without clearing.
        assert_eq!(
            membership_test(&m, &rational(&[(1, 2), (-2, 2)]), 16),
            Membership::NotRealizable
        );
    }

    #[test]
    fn tower_membership_factorials() {
        let maps: Vec<_> = (2..=12i64).map(|k| int_matrix(&[&[k]])).collect();
        for n in 1..=10i64 {
            let verdict = tower_membership(&maps, &rational(&[(1, n)]));
            assert!(matches!(verdict, Membership::Realizable { .. }), "1/{n} must clear");
        }
        // 1/1024 needs more 2s than 12!/1 provides... 12! has 2^10, so
        // it clears; 1/2048 does not.
        assert!(matches!(
            tower_membership(&maps, &rational(&[(1, 2048)])),
            Membership::Inconclusive
        ));
    }

    #[test]
    fn stationary_doubling_gives_dyadic() {
        let g = AbelianGroup::free(1);
        let m = int_matrix(&[&[2]]);
        let limit = stationary_limit(&g, &m, &LimitOptions::default()).unwrap();
        assert_eq!(
            limit,
            LimitGroup::normal_form(0, vec![BigInt::from(2)], vec![], 12)
        );
        assert_eq!(limit.to_string(), "Z[1/2]");
    }

    #[test]
    fn stationary_radical_reduction() {
        let g = AbelianGroup::free(1);
        let limit =
            stationary_limit(&g, &int_matrix(&[&[4]]), &LimitOptions::default()).unwrap();
        let expected = LimitGroup::normal_form(0, vec![BigInt::from(2)], vec![], 12);
        assert!(iso_check(&limit, &expected).unwrap());
        let limit =
            stationary_limit(&g, &int_matrix(&[&[12]]), &LimitOptions::default()).unwrap();
        let expected = LimitGroup::normal_form(0, vec![BigInt::from(6)], vec![], 12);
        assert!(iso_check(&limit, &expected).unwrap());
    }

    #[test]
    fn stationary_unimodular_is_free() {
        let g = AbelianGroup::free(2);
        let m = int_matrix(&[&[1, 1], &[1, 0]]);
        let limit = stationary_limit(&g, &m, &LimitOptions::default()).unwrap();
        assert_eq!(limit, LimitGroup::normal_form(2, vec![], vec![], 0));
    }

    #[test]
    fn stationary_mixed_spectrum_passes_oracle() {
        // Eigenvalues 2 and -1; eigenvector lattice has index 3, but the
        // oracle still certifies Z + Z[1/2].
        let g = AbelianGroup::free(3);
        let m = int_matrix(&[&[1, 1, 1], &[1, 0, 0], &[1, 0, 0]]);
        let limit = stationary_limit(&g, &m, &LimitOptions::default()).unwrap();
        let expected = LimitGroup::normal_form(1, vec![BigInt::from(2)], vec![], 12);
        assert!(iso_check(&limit, &expected).unwrap());
    }

    #[test]
    fn stationary_presentation_fallback() {
        // Rotation by 90 degrees scaled by 2: char poly x^2 + 4, no
        // integer eigenvalues, not unimodular.
        let g = AbelianGroup::free(2);
        let m = int_matrix(&[&[0, -2], &[2, 0]]);
        let limit = stationary_limit(&g, &m, &LimitOptions::default()).unwrap();
        match limit {
            LimitGroup::Presentation { rank, torsion, .. } => {
                assert_eq!(rank, 2);
                assert_eq!(torsion, TorsionStatus::Resolved(vec![]));
            }
            other => panic!("expected a presentation, got {other}"),
        }
    }

    #[test]
    fn stationary_carries_torsion() {
        // Z^2 + Z/5 with a unimodular free block and identity on torsion.
        let g = AbelianGroup::new(2, &[BigInt::from(5)]);
        let m = int_matrix(&[&[3, 1, 0], &[-1, 0, 0], &[2, 0, 1]]);
        let limit = stationary_limit(&g, &m, &LimitOptions::default()).unwrap();
        assert_eq!(
            limit,
            LimitGroup::normal_form(2, vec![], vec![BigInt::from(5)], 0)
        );
    }

    #[test]
    fn stationary_kills_torsion_with_nilpotent_action() {
        // Z/4, generator mapped to twice itself: images shrink to zero.
        let g = AbelianGroup::new(0, &[BigInt::from(4)]);
        let m = int_matrix(&[&[2]]);
        let limit = stationary_limit(&g, &m, &LimitOptions::default()).unwrap();
        assert_eq!(limit, LimitGroup::normal_form(0, vec![], vec![], 0));
    }

    #[test]
    fn stationary_rejects_bad_torsion_column() {
        let g = AbelianGroup::new(1, &[BigInt::from(2)]);
        // Torsion generator sent to a free generator: not a homomorphism.
        let m = int_matrix(&[&[1, 1], &[0, 1]]);
        let err = stationary_limit(&g, &m, &LimitOptions::default()).unwrap_err();
        assert!(matches!(err, PehError::InvariantViolation { .. }));
    }

    #[test]
    fn iso_check_needs_normal_forms() {
        let p = LimitGroup::Presentation {
            rank: 1,
            matrix: int_matrix(&[&[2]]),
            torsion: TorsionStatus::Resolved(vec![]),
            verified_depth: 0,
        };
        let z = LimitGroup::normal_form(1, vec![], vec![], 0);
        assert!(matches!(iso_check(&p, &z), Err(PehError::NotClassified(_))));
        assert!(iso_check(&z, &z.clone()).unwrap());
    }

    #[test]
    fn limit_of_system_stationary_window() {
        let g = AbelianGroup::free(1);
        let m = int_matrix(&[&[2]]);
        let sys = DirectSystem::new(
            vec![g.clone(), g.clone(), g.clone(), g.clone()],
            vec![m.clone(), m.clone(), m.clone()],
        )
        .unwrap();
        let limit = limit_of_system(&sys, &LimitOptions::default()).unwrap();
        assert_eq!(limit.to_string(), "Z[1/2]");
    }

    #[test]
    fn limit_of_system_trailing_isomorphisms() {
        let g = AbelianGroup::free(2);
        // Different unimodular matrices at each stage.
        let maps = vec![
            int_matrix(&[&[1, 1], &[0, 1]]),
            int_matrix(&[&[1, 0], &[1, 1]]),
            int_matrix(&[&[2, 1], &[1, 1]]),
        ];
        let sys = DirectSystem::new(vec![g.clone(); 4], maps).unwrap();
        let limit = limit_of_system(&sys, &LimitOptions::default()).unwrap();
        assert_eq!(limit, LimitGroup::normal_form(2, vec![], vec![], 0));
    }

    #[test]
    fn limit_of_system_reports_horizon() {
        let g = AbelianGroup::free(1);
        // Maps [2], [3], [4]: neither stationary nor isomorphisms.
        let maps = vec![int_matrix(&[&[2]]), int_matrix(&[&[3]]), int_matrix(&[&[4]])];
        let sys = DirectSystem::new(vec![g.clone(); 4], maps).unwrap();
        let err = limit_of_system(&sys, &LimitOptions::default()).unwrap_err();
        assert!(matches!(err, PehError::HorizonExceeded { .. }));
    }

    #[test]
    fn factorization_helpers() {
        assert_eq!(
            factorize(&BigInt::from(360)),
            Some(vec![
                (BigInt::from(2), 3),
                (BigInt::from(3), 2),
                (BigInt::from(5), 1)
            ])
        );
        assert_eq!(radical(&BigInt::from(360)), Some(BigInt::from(30)));
        assert_eq!(radical(&BigInt::from(1)), Some(BigInt::from(1)));
        // A semiprime beyond the trial-division range.
        let p = BigInt::from(1_000_003u64);
        let q = BigInt::from(1_000_033u64);
        let f = factorize(&(&p * &q)).expect("rho finds the split");
        assert_eq!(f, vec![(p, 1), (q, 1)]);
    }
}
