//! Randomized property checks for the exact linear algebra kernel, the
//! homology solver, the limit classifier, and the dataset validator.
//!
//! Each suite pins an algebraic contract rather than a worked example:
//! Smith normal form axioms, kernel saturation, the Euler characteristic
//! identity on randomly built valid complexes, eventual-image exactness,
//! invariance of limit classification under basis change, rejection of
//! corrupted connecting maps, and a brute-force oracle for legal junction
//! pairs.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use peh::dataset::{parse_document, validate_document};
use peh::fixtures;
use peh::group::AbelianGroup;
use peh::homology::{homology, FinChainComplex};
use peh::limits::{
    eventual_image, iso_check, limit_of_system, stationary_limit, DirectSystem, LimitGroup,
    LimitOptions,
};
use peh::matrix::Mat;
use peh::snf::{inverse_unimodular, kernel_basis, smith_normal_form};
use peh::subst::SubstitutionSystem1D;
use peh::IntMatrix;
use proptest::prelude::*;

/// Builds a `rows x cols` matrix from a flat entry pool (row major).
fn build(rows: usize, cols: usize, flat: &[i64]) -> IntMatrix {
    Mat::from_fn(rows, cols, |i, j| BigInt::from(flat[i * cols + j]))
}

fn entries(n: usize, bound: i64) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-bound..=bound, n)
}

fn mat_pow(m: &IntMatrix, k: usize) -> IntMatrix {
    let mut out = Mat::identity(m.rows());
    for _ in 0..k {
        out = out.mul(m);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// U A V = D with exact unimodular inverses, D diagonal, and the
    /// diagonal forming a positive divisibility chain.
    #[test]
    fn smith_normal_form_satisfies_its_contract(
        rows in 1usize..=5,
        cols in 1usize..=5,
        flat in entries(25, 9),
    ) {
        let a = build(rows, cols, &flat);
        let snf = smith_normal_form(&a);
        prop_assert_eq!(&snf.u.mul(&a).mul(&snf.v), &snf.d);
        prop_assert_eq!(&snf.u.mul(&snf.u_inv), &Mat::identity(rows));
        prop_assert_eq!(&snf.v.mul(&snf.v_inv), &Mat::identity(cols));
        prop_assert_eq!(snf.u.det().abs(), BigInt::one());
        prop_assert_eq!(snf.v.det().abs(), BigInt::one());
        for i in 0..rows {
            for j in 0..cols {
                if i != j {
                    prop_assert!(snf.d[(i, j)].is_zero());
                }
            }
        }
        prop_assert_eq!(snf.invariant_factors.len(), snf.rank);
        for (i, d) in snf.invariant_factors.iter().enumerate() {
            prop_assert!(d.is_positive());
            prop_assert_eq!(d, &snf.d[(i, i)]);
        }
        for i in snf.rank..rows.min(cols) {
            prop_assert!(snf.d[(i, i)].is_zero());
        }
        for w in snf.invariant_factors.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// The kernel basis annihilates the matrix, has the full kernel
    /// dimension, and is saturated, so it spans every integer kernel
    /// vector with integer coefficients.
    #[test]
    fn kernel_basis_is_complete_and_saturated(
        rows in 1usize..=5,
        cols in 1usize..=5,
        flat in entries(25, 7),
    ) {
        let a = build(rows, cols, &flat);
        let k = kernel_basis(&a);
        prop_assert!(a.mul(&k).is_zero());
        prop_assert_eq!(k.cols(), cols - smith_normal_form(&a).rank);
        let snf_k = smith_normal_form(&k);
        prop_assert_eq!(snf_k.rank, k.cols());
        for d in &snf_k.invariant_factors {
            prop_assert!(d.is_one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// On a valid three-term complex the alternating sum of cell counts
    /// equals the alternating sum of homology free ranks. The second
    /// boundary is built through the kernel of the first, so the
    /// composite vanishes by construction for any choice of entries.
    #[test]
    fn euler_characteristic_matches_alternating_free_ranks(
        n0 in 1usize..=4,
        n1 in 1usize..=4,
        n2 in 1usize..=3,
        d1_flat in entries(16, 4),
        r_flat in entries(12, 3),
    ) {
        let d1 = build(n0, n1, &d1_flat);
        let k = kernel_basis(&d1);
        let r = build(k.cols(), n2, &r_flat);
        let d2 = k.mul(&r);
        let complex = FinChainComplex::new(vec![n0, n1, n2], vec![d1, d2]).unwrap();
        let result = homology(&complex);
        let chi = n0 as i64 - n1 as i64 + n2 as i64;
        let chi_hom = result.group(0).free_rank as i64 - result.group(1).free_rank as i64
            + result.group(2).free_rank as i64;
        prop_assert_eq!(chi_hom, chi);
        prop_assert_eq!(complex.euler_characteristic(), BigInt::from(chi));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    /// The eventual image intertwines exactly (M B = B M'), stabilizes
    /// the rank at the reported power, and its basis is saturated.
    #[test]
    fn eventual_image_is_exact_and_saturated(
        n in 1usize..=4,
        flat in entries(16, 4),
    ) {
        let m = build(n, n, &flat);
        let ev = eventual_image(&m);
        prop_assert_eq!(ev.basis.cols(), ev.rank);
        prop_assert_eq!(&m.mul(&ev.basis), &ev.basis.mul(&ev.restricted));
        let pk = mat_pow(&m, ev.power);
        prop_assert_eq!(smith_normal_form(&pk).rank, ev.rank);
        prop_assert_eq!(smith_normal_form(&pk.mul(&m)).rank, ev.rank);
        let snf_b = smith_normal_form(&ev.basis);
        prop_assert_eq!(snf_b.rank, ev.rank);
        for d in &snf_b.invariant_factors {
            prop_assert!(d.is_one());
        }
        if ev.rank > 0 {
            prop_assert!(!ev.restricted.det().is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A tower whose maps are all identities has the stage-0 group as
    /// its limit, for any free rank and torsion.
    #[test]
    fn identity_tower_returns_the_stage_zero_group(
        free in 0usize..=3,
        picks in proptest::collection::vec(prop::sample::select(vec![2i64, 3, 4, 6]), 0..=2),
        len in 2usize..=5,
    ) {
        let torsion: Vec<BigInt> = picks.iter().map(|d| BigInt::from(*d)).collect();
        let g = AbelianGroup::new(free, &torsion);
        let maps = vec![Mat::identity(g.coords()); len - 1];
        let system = DirectSystem::new(vec![g.clone(); len], maps).unwrap();
        let limit = limit_of_system(&system, &LimitOptions::default()).unwrap();
        prop_assert!(iso_check(&limit, &LimitGroup::from_group(&g)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Conjugating the stationary map by a unimodular basis change
    /// never changes the classification: the same outcome kind, and
    /// isomorphic normal forms when both classify.
    #[test]
    fn stationary_classification_is_basis_independent(
        n in 1usize..=3,
        flat in entries(9, 3),
        ops in proptest::collection::vec((0u8..3, 0usize..3, 0usize..3, -2i64..=2), 0..=6),
    ) {
        let m = build(n, n, &flat);
        let mut p = Mat::identity(n);
        for (sel, a, b, c) in ops {
            let (a, b) = (a % n, b % n);
            match sel {
                0 if a != b => p.add_row_multiple(a, b, &BigInt::from(c)),
                1 => p.swap_rows(a, b),
                _ => p.negate_row(a),
            }
        }
        let p_inv = inverse_unimodular(&p).expect("built from elementary operations");
        let conj = p_inv.mul(&m).mul(&p);
        let group = AbelianGroup::free(n);
        let opts = LimitOptions::default();
        let r1 = stationary_limit(&group, &m, &opts);
        let r2 = stationary_limit(&group, &conj, &opts);
        match (r1, r2) {
            (Ok(l1), Ok(l2)) => {
                let nf1 = matches!(&l1, LimitGroup::NormalForm { .. });
                let nf2 = matches!(&l2, LimitGroup::NormalForm { .. });
                prop_assert_eq!(nf1, nf2, "kinds differ: {:?} vs {:?}", l1, l2);
                if nf1 {
                    prop_assert!(iso_check(&l1, &l2).unwrap(), "{:?} vs {:?}", l1, l2);
                }
            }
            (Err(_), Err(_)) => {}
            (r1, r2) => prop_assert!(false, "outcomes differ: {:?} vs {:?}", r1, r2),
        }
    }
}

/// Minimal deterministic generator so the corruption samples are stable
/// across runs and platforms.
struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
}

/// One hundred random single-entry corruptions of the triangle
/// fixture's connecting maps, each rejected by the commutation check.
/// Every row of the first boundary and every column of the second is
/// nonzero, so any additive corruption of any connecting entry breaks
/// one of the two commutation squares.
#[test]
fn corrupted_connecting_maps_are_rejected() {
    let text = fixtures::find("periodic-triangle").unwrap().text;
    let base: serde_json::Value = serde_json::from_str(text).unwrap();
    let shapes = [(3usize, 3usize), (3, 3), (2, 2)];
    let mut rng = XorShift(0x9e37_79b9_7f4a_7c15);
    let mut rejected = 0usize;
    for case in 0..100 {
        let which = (rng.next() % 3) as usize;
        let (rows, cols) = shapes[which];
        let i = (rng.next() as usize) % rows;
        let j = (rng.next() as usize) % cols;
        let mut delta = 1 + (rng.next() % 3) as i64;
        if rng.next().is_multiple_of(2) {
            delta = -delta;
        }
        let mut doc = base.clone();
        let key = which.to_string();
        let entry = &mut doc["connecting"]["matrices"][key.as_str()][i][j];
        let old = entry.as_i64().unwrap();
        *entry = serde_json::json!(old + delta);
        let parsed = parse_document(&doc.to_string()).unwrap();
        let violations = match validate_document(&parsed, None) {
            Err(violations) => violations,
            Ok(_) => panic!(
                "case {case}: corrupting map {which} at ({i},{j}) by {delta} passed validation"
            ),
        };
        assert!(
            violations.iter().any(|v| v.check == "chain-commutation"),
            "case {case}: map {which} at ({i},{j}) by {delta}: {violations:?}"
        );
        rejected += 1;
    }
    assert_eq!(rejected, 100);
}

/// Every single-entry corruption of either boundary matrix breaks the
/// composition check, exhaustively over entries and offsets up to 3.
#[test]
fn corrupted_boundaries_are_rejected_exhaustively() {
    let text = fixtures::find("periodic-triangle").unwrap().text;
    let base: serde_json::Value = serde_json::from_str(text).unwrap();
    for (degree, rows, cols) in [("1", 3usize, 3usize), ("2", 3, 2)] {
        for i in 0..rows {
            for j in 0..cols {
                for delta in [-3i64, -2, -1, 1, 2, 3] {
                    let mut doc = base.clone();
                    let entry = &mut doc["boundaries"][degree][i][j];
                    let old = entry.as_i64().unwrap();
                    *entry = serde_json::json!(old + delta);
                    let parsed = parse_document(&doc.to_string()).unwrap();
                    let violations = validate_document(&parsed, None).unwrap_err();
                    assert!(
                        violations.iter().any(|v| v.check == "boundary-composition"),
                        "boundary {degree} at ({i},{j}) by {delta}: {violations:?}"
                    );
                }
            }
        }
    }
}

/// Two-letter factor set of the depth-`depth` expansions of all
/// letters, the brute-force counterpart of the censused enumeration.
fn expansion_pairs(
    sys: &SubstitutionSystem1D,
    level: usize,
    depth: usize,
) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for letter in 0..sys.letters().len() {
        let word = sys.expand_letter(level, depth, letter);
        for pair in word.windows(2) {
            set.insert((pair[0], pair[1]));
        }
    }
    set
}

/// The censused legal-pair enumeration agrees with brute-force word
/// expansion on every bundled substitution system, at several levels.
#[test]
fn legal_pairs_match_brute_force_expansion() {
    for name in ["fibonacci", "thue-morse", "arnoux-rauzy-3", "dyadic"] {
        let fixture = fixtures::find(name).unwrap();
        let sys = SubstitutionSystem1D::from_toml_str(fixture.text, name).unwrap();
        for level in 0..4 {
            let deep = expansion_pairs(&sys, level, 12);
            assert_eq!(expansion_pairs(&sys, level, 11), deep, "{name} level {level} unstable");
            assert_eq!(expansion_pairs(&sys, level, 10), deep, "{name} level {level} unstable");
            let expected: Vec<(usize, usize)> = deep.into_iter().collect();
            let got = sys.legal_pairs(level, 32).unwrap();
            assert_eq!(got, expected, "{name} level {level}");
        }
    }
}
