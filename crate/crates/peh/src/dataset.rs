//! Declaratively specified approximant complexes of dimension two and
//! beyond.
//!
//! Two-dimensional hierarchies are described by JSON datasets instead of
//! substitution rules: ordered cell-class lists per degree (with
//! isotropy orders and orientation data), boundary matrices, and a
//! connecting map given either at chain level (validated against the
//! boundaries) or directly on declared homology generators (accepted as
//! trusted input and flagged as such). A dataset with `stationary: true`
//! describes every level of its hierarchy with one approximant and one
//! self-connecting map.
//!
//! Three operations are built on top of a validated dataset: `compute`
//! runs homology, induced maps, and limits; `dagger_transform` restricts
//! degree-0 chains at each vertex class to multiples of its isotropy
//! order, which restores integral Poincare duality; `duality_gap` reports
//! the kernel and cokernel of the inclusion of the restricted complex
//! into the plain one, measuring how far duality fails integrally.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::PehError;
use crate::group::{cokernel, AbelianGroup};
use crate::homology::{homology, induced_map, ChainMap, FinChainComplex, HomologyResult};
use crate::limits::{
    eventual_image, is_isomorphism, stationary_limit, LimitGroup, LimitOptions, LimitOutcome,
};
use crate::matrix::Mat;
use crate::snf::{kernel_basis, smith_normal_form};
use crate::{IntMatrix, IntVector};

/// An integer that deserializes from a JSON number or a decimal string,
/// so large entries survive without precision loss.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlexInt(pub BigInt);

impl<'de> Deserialize<'de> for FlexInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = FlexInt;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "an integer or a decimal string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<FlexInt, E> {
                Ok(FlexInt(BigInt::from(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<FlexInt, E> {
                Ok(FlexInt(BigInt::from(v)))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<FlexInt, E> {
                v.parse::<BigInt>()
                    .map(FlexInt)
                    .map_err(|_| E::custom(format!("not a decimal integer: {v:?}")))
            }
        }
        deserializer.deserialize_any(V)
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct DatasetDoc {
    name: String,
    dimension: usize,
    classes: BTreeMap<String, Vec<ClassDoc>>,
    #[serde(default)]
    boundaries: BTreeMap<String, Vec<Vec<FlexInt>>>,
    connecting: ConnectingDoc,
    #[serde(default)]
    dagger: Option<DaggerDoc>,
    stationary: bool,
    orientable: bool,
    mode: String,
    #[serde(default)]
    expected: Option<ExpectedDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct ClassDoc {
    name: String,
    #[serde(default)]
    isotropy: Option<u64>,
    #[serde(default)]
    rev_sym: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct ConnectingDoc {
    mode: String,
    #[serde(default)]
    matrices: BTreeMap<String, Vec<Vec<FlexInt>>>,
    #[serde(default)]
    generators: Option<BTreeMap<String, GeneratorsDoc>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct GeneratorsDoc {
    #[serde(default)]
    free: Vec<Vec<FlexInt>>,
    #[serde(default)]
    torsion: Vec<TorsionGenDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct TorsionGenDoc {
    vector: Vec<FlexInt>,
    order: FlexInt,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct DaggerDoc {
    #[serde(default)]
    connecting: BTreeMap<String, Vec<Vec<FlexInt>>>,
    #[serde(default)]
    generators: Option<BTreeMap<String, GeneratorsDoc>>,
    #[serde(default)]
    expected: Option<ExpectedDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct ExpectedDoc {
    #[serde(default)]
    approximant: BTreeMap<String, GroupSpecDoc>,
    #[serde(default)]
    limit: BTreeMap<String, GroupSpecDoc>,
    #[serde(default)]
    duality_cokernel: Option<Vec<FlexInt>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Debug)]
struct GroupSpecDoc {
    #[serde(default)]
    free_rank: usize,
    #[serde(default)]
    torsion: Vec<FlexInt>,
    #[serde(default)]
    localized: Vec<FlexInt>,
}

/// A single named validation failure, with enough coordinates to find
/// the offending entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub check: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.check, self.detail)
    }
}

/// Coefficient ring for the computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientMode {
    Integers,
    Rationals,
}

impl CoefficientMode {
    pub fn label(self) -> &'static str {
        match self {
            CoefficientMode::Integers => "Z",
            CoefficientMode::Rationals => "Q",
        }
    }
}

/// One cell class: a star-patch equivalence class of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CellClass {
    pub name: String,
    /// Order of the group of local self-symmetries fixing the cell.
    pub isotropy: BigInt,
    /// The class has a self-symmetry reversing orientation, so its
    /// equivariant chain group vanishes over the integers.
    pub rev_sym: bool,
}

/// Declared homology generators for one degree: explicit cycle vectors,
/// free generators first.
#[derive(Clone, Debug, PartialEq)]
pub struct DeclaredGenerators {
    pub free: Vec<IntVector>,
    pub torsion: Vec<(IntVector, BigInt)>,
}

impl DeclaredGenerators {
    pub fn group(&self) -> AbelianGroup {
        let orders: Vec<BigInt> = self.torsion.iter().map(|(_, d)| d.clone()).collect();
        AbelianGroup { free_rank: self.free.len(), torsion: orders }
    }

    pub fn count(&self) -> usize {
        self.free.len() + self.torsion.len()
    }

    fn vectors(&self) -> impl Iterator<Item = &IntVector> {
        self.free.iter().chain(self.torsion.iter().map(|(v, _)| v))
    }
}

/// How the connecting self-map is given.
#[derive(Clone, Debug)]
pub enum Connecting {
    /// One chain-level matrix per degree, validated to commute with the
    /// boundaries.
    Chain(Vec<IntMatrix>),
    /// One matrix per degree written in the coordinates of declared
    /// homology generators; taken as trusted input.
    Homology { matrices: Vec<IntMatrix>, generators: Vec<DeclaredGenerators> },
}

/// Optional declared data for the dagger pipeline when the plain
/// connecting maps are given at homology level and cannot be rescaled
/// mechanically.
#[derive(Clone, Debug)]
pub struct DaggerSection {
    pub connecting: BTreeMap<usize, IntMatrix>,
    pub generators: BTreeMap<usize, DeclaredGenerators>,
    pub expected: Option<Expected>,
}

/// A per-degree group expectation used for golden testing.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
    pub localized: Vec<BigInt>,
}

#[derive(Clone, Debug, Default)]
pub struct Expected {
    /// Indexed by degree; `None` where the dataset states nothing.
    pub approximant: Vec<Option<GroupSpec>>,
    pub limit: Vec<Option<GroupSpec>>,
    pub duality_cokernel: Option<Vec<BigInt>>,
}

impl Expected {
    pub fn is_empty(&self) -> bool {
        self.approximant.iter().all(Option::is_none)
            && self.limit.iter().all(Option::is_none)
            && self.duality_cokernel.is_none()
    }
}

/// A fully validated dataset.
#[derive(Clone, Debug)]
pub struct ApproximantDataset {
    pub name: String,
    pub dimension: usize,
    /// `classes[k]` lists the degree-`k` cell classes in declared order.
    pub classes: Vec<Vec<CellClass>>,
    /// `boundaries[k-1]` is the full boundary matrix from degree `k` to
    /// `k-1`, over the declared class lists.
    pub boundaries: Vec<IntMatrix>,
    pub connecting: Connecting,
    pub stationary: bool,
    pub orientable: bool,
    pub mode: CoefficientMode,
    pub expected: Option<Expected>,
    pub dagger: Option<DaggerSection>,
    /// Set when this dataset was produced by `dagger_transform`; records
    /// the diagonal degree-0 rescaling that was applied.
    pub dagger_rescaling: Option<Vec<BigInt>>,
}

impl ApproximantDataset {
    /// Indices of the classes that survive in the current mode: over the
    /// rationals, classes with an orientation-reversing self-symmetry
    /// contribute a zero chain group and are dropped.
    pub fn kept_classes(&self) -> Vec<Vec<usize>> {
        self.classes
            .iter()
            .map(|degree| {
                degree
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| self.mode == CoefficientMode::Integers || !c.rev_sym)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }

    /// The chain complex actually computed with, after dropping classes
    /// excluded by the coefficient mode.
    pub fn effective_complex(&self) -> Result<FinChainComplex, PehError> {
        let kept = self.kept_classes();
        let ranks: Vec<usize> = kept.iter().map(Vec::len).collect();
        let boundaries: Vec<IntMatrix> = (1..=self.dimension)
            .map(|k| select_submatrix(&self.boundaries[k - 1], &kept[k - 1], &kept[k]))
            .collect();
        FinChainComplex::new(ranks, boundaries)
    }

    /// Chain-level connecting matrices restricted to the kept classes;
    /// `None` for homology-level datasets.
    pub fn effective_chain_connecting(&self) -> Option<Vec<IntMatrix>> {
        match &self.connecting {
            Connecting::Chain(ms) => {
                let kept = self.kept_classes();
                Some(
                    ms.iter()
                        .enumerate()
                        .map(|(k, m)| select_submatrix(m, &kept[k], &kept[k]))
                        .collect(),
                )
            }
            Connecting::Homology { .. } => None,
        }
    }

    /// True when every class has trivial isotropy.
    pub fn trivial_isotropy(&self) -> bool {
        self.classes.iter().flatten().all(|c| c.isotropy.is_one())
    }
}

fn select_submatrix(m: &IntMatrix, rows: &[usize], cols: &[usize]) -> IntMatrix {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])].clone())
}

/// Parses the JSON document without semantic validation.
pub fn parse_document(text: &str) -> Result<DatasetDoc, PehError> {
    serde_json::from_str(text).map_err(|e| PehError::ParseError(e.to_string()))
}

/// Parses and validates, collecting every violation instead of stopping
/// at the first.
pub fn validate_document(
    doc: &DatasetDoc,
    mode_override: Option<CoefficientMode>,
) -> Result<ApproximantDataset, Vec<Violation>> {
    let mut violations = Vec::new();
    let fail = |check: &str, detail: String, v: &mut Vec<Violation>| {
        v.push(Violation { check: check.into(), detail });
    };

    let mode = match mode_override {
        Some(m) => m,
        None => match doc.mode.as_str() {
            "Z" => CoefficientMode::Integers,
            "Q" => CoefficientMode::Rationals,
            other => {
                fail("mode", format!("mode must be \"Z\" or \"Q\", got {other:?}"), &mut violations);
                CoefficientMode::Integers
            }
        },
    };
    let d = doc.dimension;

    // Class lists: exactly degrees 0..=d, distinct names, positive
    // isotropy, orientation flags only over the rationals.
    let mut classes: Vec<Vec<CellClass>> = Vec::new();
    for k in 0..=d {
        match doc.classes.get(&k.to_string()) {
            Some(list) => {
                let mut seen = BTreeMap::new();
                let mut out = Vec::new();
                for (i, c) in list.iter().enumerate() {
                    if seen.insert(c.name.as_str(), ()).is_some() {
                        fail(
                            "class-names-distinct",
                            format!("degree {k} repeats class name {:?}", c.name),
                            &mut violations,
                        );
                    }
                    let isotropy = c.isotropy.unwrap_or(1);
                    if isotropy == 0 {
                        fail(
                            "isotropy-positive",
                            format!("degree {k} class {:?} has isotropy 0", c.name),
                            &mut violations,
                        );
                    }
                    let rev = c.rev_sym.unwrap_or(false);
                    if rev && mode == CoefficientMode::Integers {
                        fail(
                            "rev-sym-mode",
                            format!(
                                "degree {k} class {:?} (entry {i}) reverses orientation; \
                                 such classes are only representable over the rationals",
                                c.name
                            ),
                            &mut violations,
                        );
                    }
                    out.push(CellClass {
                        name: c.name.clone(),
                        isotropy: BigInt::from(isotropy.max(1)),
                        rev_sym: rev,
                    });
                }
                classes.push(out);
            }
            None => {
                fail("dimension-classes", format!("no class list for degree {k}"), &mut violations);
                classes.push(Vec::new());
            }
        }
    }
    for key in doc.classes.keys() {
        if key.parse::<usize>().map(|k| k > d).unwrap_or(true) {
            fail(
                "dimension-classes",
                format!("class list {key:?} is outside degrees 0..={d}"),
                &mut violations,
            );
        }
    }

    // Boundary matrices: degrees 1..=d, correct shapes.
    let mut boundaries: Vec<IntMatrix> = Vec::new();
    let mut shapes_ok = true;
    for k in 1..=d {
        let rows = classes[k - 1].len();
        let cols = classes[k].len();
        match doc.boundaries.get(&k.to_string()) {
            Some(raw) => match matrix_from_doc(raw, rows, cols) {
                Ok(m) => boundaries.push(m),
                Err(detail) => {
                    fail("boundary-shape", format!("boundary {k}: {detail}"), &mut violations);
                    shapes_ok = false;
                    boundaries.push(Mat::zero(rows, cols));
                }
            },
            None => {
                fail("boundary-shape", format!("no boundary matrix for degree {k}"), &mut violations);
                shapes_ok = false;
                boundaries.push(Mat::zero(rows, cols));
            }
        }
    }
    for key in doc.boundaries.keys() {
        let k = key.parse::<usize>().ok();
        if k.map(|k| k == 0 || k > d).unwrap_or(true) {
            fail(
                "boundary-shape",
                format!("boundary key {key:?} is outside degrees 1..={d}"),
                &mut violations,
            );
        }
    }

    if shapes_ok {
        for k in 2..=d {
            let prod = boundaries[k - 2].mul(&boundaries[k - 1]);
            if !prod.is_zero() {
                let bad = first_nonzero(&prod).expect("nonzero matrix has a nonzero entry");
                fail(
                    "boundary-composition",
                    format!(
                        "boundary({}) . boundary({k}) is nonzero at row {} ({:?}), column {} ({:?})",
                        k - 1,
                        bad.0,
                        classes[k - 2][bad.0].name,
                        bad.1,
                        classes[k][bad.1].name
                    ),
                    &mut violations,
                );
            }
        }
        if mode == CoefficientMode::Rationals {
            check_rev_sym_zero(&classes, &boundaries, &mut violations);
        }
    }

    // Connecting maps.
    let connecting = build_connecting(doc, d, &classes, &boundaries, mode, shapes_ok, &mut violations);

    // Dagger section: shallow shape checks only; deep validation happens
    // when the transform is applied.
    let dagger = doc.dagger.as_ref().map(|dg| {
        let mut connecting_out = BTreeMap::new();
        for (key, raw) in &dg.connecting {
            match key.parse::<usize>() {
                Ok(k) if k <= d => {
                    match matrix_from_doc(raw, usize::MAX, usize::MAX) {
                        Ok(m) if m.is_square() => {
                            connecting_out.insert(k, m);
                        }
                        Ok(_) => fail(
                            "dagger-connecting-shape",
                            format!("dagger connecting matrix for degree {k} is not square"),
                            &mut violations,
                        ),
                        Err(detail) => fail(
                            "dagger-connecting-shape",
                            format!("dagger connecting {k}: {detail}"),
                            &mut violations,
                        ),
                    }
                }
                _ => fail(
                    "dagger-connecting-shape",
                    format!("dagger connecting key {key:?} is outside degrees 0..={d}"),
                    &mut violations,
                ),
            }
        }
        let mut generators_out = BTreeMap::new();
        if let Some(gens) = &dg.generators {
            for (key, g) in gens {
                match key.parse::<usize>() {
                    Ok(k) if k <= d => match generators_from_doc(g, classes[k].len()) {
                        Ok(decl) => {
                            generators_out.insert(k, decl);
                        }
                        Err(detail) => fail(
                            "dagger-generator-shape",
                            format!("dagger generators degree {k}: {detail}"),
                            &mut violations,
                        ),
                    },
                    _ => fail(
                        "dagger-generator-shape",
                        format!("dagger generator key {key:?} is outside degrees 0..={d}"),
                        &mut violations,
                    ),
                }
            }
        }
        DaggerSection {
            connecting: connecting_out,
            generators: generators_out,
            expected: dg.expected.as_ref().and_then(|e| expected_from_doc(e, d, &mut violations)),
        }
    });

    let expected = doc.expected.as_ref().and_then(|e| expected_from_doc(e, d, &mut violations));

    if !violations.is_empty() {
        return Err(violations);
    }
    let ds = ApproximantDataset {
        name: doc.name.clone(),
        dimension: d,
        classes,
        boundaries,
        connecting: connecting.expect("connecting present when no violations"),
        stationary: doc.stationary,
        orientable: doc.orientable,
        mode,
        expected,
        dagger,
        dagger_rescaling: None,
    };
    // Semantic checks that need the effective complex.
    let mut late = Vec::new();
    validate_semantics(&ds, &mut late);
    if late.is_empty() {
        Ok(ds)
    } else {
        Err(late)
    }
}

/// Parses and validates in one step, folding all violations into one
/// error for callers that do not need the itemized list.
pub fn load_and_validate(
    text: &str,
    mode_override: Option<CoefficientMode>,
) -> Result<ApproximantDataset, PehError> {
    let doc = parse_document(text)?;
    validate_document(&doc, mode_override).map_err(|violations| {
        let detail =
            violations.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ");
        PehError::InvariantViolation { check: violations[0].check.clone(), detail }
    })
}

fn first_nonzero(m: &IntMatrix) -> Option<(usize, usize)> {
    (0..m.rows()).find_map(|i| (0..m.cols()).find(|&j| !m[(i, j)].is_zero()).map(|j| (i, j)))
}

fn matrix_from_doc(
    raw: &[Vec<FlexInt>],
    expect_rows: usize,
    expect_cols: usize,
) -> Result<IntMatrix, String> {
    let rows = raw.len();
    let cols = raw.first().map(Vec::len).unwrap_or(0);
    if raw.iter().any(|r| r.len() != cols) {
        return Err("rows have unequal lengths".into());
    }
    if expect_rows != usize::MAX && (rows != expect_rows || cols != expect_cols) {
        return Err(format!("expected {expect_rows} x {expect_cols}, got {rows} x {cols}"));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| raw[i][j].0.clone()))
}

fn vector_from_doc(raw: &[FlexInt], expect_len: usize) -> Result<IntVector, String> {
    if raw.len() != expect_len {
        return Err(format!("expected length {expect_len}, got {}", raw.len()));
    }
    Ok(raw.iter().map(|x| x.0.clone()).collect())
}

fn generators_from_doc(g: &GeneratorsDoc, len: usize) -> Result<DeclaredGenerators, String> {
    let mut free = Vec::new();
    for (i, v) in g.free.iter().enumerate() {
        free.push(vector_from_doc(v, len).map_err(|e| format!("free generator {i}: {e}"))?);
    }
    let mut torsion = Vec::new();
    for (i, t) in g.torsion.iter().enumerate() {
        let v = vector_from_doc(&t.vector, len).map_err(|e| format!("torsion generator {i}: {e}"))?;
        if !t.order.0.is_positive() || t.order.0.is_one() {
            return Err(format!("torsion generator {i} must declare an order of at least 2"));
        }
        torsion.push((v, t.order.0.clone()));
    }
    Ok(DeclaredGenerators { free, torsion })
}

fn expected_from_doc(
    e: &ExpectedDoc,
    d: usize,
    violations: &mut Vec<Violation>,
) -> Option<Expected> {
    let mut out = Expected {
        approximant: vec![None; d + 1],
        limit: vec![None; d + 1],
        duality_cokernel: e
            .duality_cokernel
            .as_ref()
            .map(|v| v.iter().map(|x| x.0.clone()).collect()),
    };
    let mut read = |table: &BTreeMap<String, GroupSpecDoc>, slot: &mut Vec<Option<GroupSpec>>, what: &str| {
        for (key, spec) in table {
            match key.parse::<usize>() {
                Ok(k) if k <= d => {
                    slot[k] = Some(GroupSpec {
                        free_rank: spec.free_rank,
                        torsion: spec.torsion.iter().map(|x| x.0.clone()).collect(),
                        localized: spec.localized.iter().map(|x| x.0.clone()).collect(),
                    });
                }
                _ => violations.push(Violation {
                    check: "expected-shape".into(),
                    detail: format!("{what} expectation key {key:?} is outside degrees 0..={d}"),
                }),
            }
        }
    };
    read(&e.approximant, &mut out.approximant, "approximant");
    read(&e.limit, &mut out.limit, "limit");
    Some(out)
}

fn check_rev_sym_zero(
    classes: &[Vec<CellClass>],
    boundaries: &[IntMatrix],
    violations: &mut Vec<Violation>,
) {
    for (k, b) in boundaries.iter().enumerate() {
        // b maps degree k+1 to degree k.
        for (i, c) in classes[k].iter().enumerate() {
            if c.rev_sym && (0..b.cols()).any(|j| !b[(i, j)].is_zero()) {
                violations.push(Violation {
                    check: "rev-sym-boundary-zero".into(),
                    detail: format!(
                        "boundary {} has nonzero entries in the row of orientation-reversing \
                         class {:?}",
                        k + 1,
                        c.name
                    ),
                });
            }
        }
        for (j, c) in classes[k + 1].iter().enumerate() {
            if c.rev_sym && (0..b.rows()).any(|i| !b[(i, j)].is_zero()) {
                violations.push(Violation {
                    check: "rev-sym-boundary-zero".into(),
                    detail: format!(
                        "boundary {} has nonzero entries in the column of orientation-reversing \
                         class {:?}",
                        k + 1,
                        c.name
                    ),
                });
            }
        }
    }
}

fn build_connecting(
    doc: &DatasetDoc,
    d: usize,
    classes: &[Vec<CellClass>],
    _boundaries: &[IntMatrix],
    mode: CoefficientMode,
    shapes_ok: bool,
    violations: &mut Vec<Violation>,
) -> Option<Connecting> {
    match doc.connecting.mode.as_str() {
        "chain" => {
            let mut ms = Vec::new();
            let mut ok = shapes_ok;
            for (k, degree_classes) in classes.iter().enumerate().take(d + 1) {
                let n = degree_classes.len();
                match doc.connecting.matrices.get(&k.to_string()) {
                    Some(raw) => match matrix_from_doc(raw, n, n) {
                        Ok(m) => ms.push(m),
                        Err(detail) => {
                            violations.push(Violation {
                                check: "connecting-shape".into(),
                                detail: format!("chain connecting {k}: {detail}"),
                            });
                            ok = false;
                            ms.push(Mat::zero(n, n));
                        }
                    },
                    None => {
                        violations.push(Violation {
                            check: "connecting-shape".into(),
                            detail: format!("no chain connecting matrix for degree {k}"),
                        });
                        ok = false;
                        ms.push(Mat::zero(n, n));
                    }
                }
            }
            if mode == CoefficientMode::Rationals && ok {
                for (k, m) in ms.iter().enumerate() {
                    for (i, c) in classes[k].iter().enumerate() {
                        if !c.rev_sym {
                            continue;
                        }
                        let touched = (0..m.cols()).any(|j| !m[(i, j)].is_zero())
                            || (0..m.rows()).any(|r| !m[(r, i)].is_zero());
                        if touched {
                            violations.push(Violation {
                                check: "rev-sym-connecting-zero".into(),
                                detail: format!(
                                    "chain connecting {k} touches orientation-reversing class {:?}",
                                    c.name
                                ),
                            });
                        }
                    }
                }
            }
            Some(Connecting::Chain(ms))
        }
        "homology" => {
            if mode == CoefficientMode::Rationals {
                violations.push(Violation {
                    check: "connecting-mode".into(),
                    detail: "rationals mode requires chain-level connecting maps".into(),
                });
                return None;
            }
            let Some(gens) = &doc.connecting.generators else {
                violations.push(Violation {
                    check: "generator-shape".into(),
                    detail: "homology-level connecting maps need declared generators".into(),
                });
                return None;
            };
            let mut generators = Vec::new();
            let mut matrices = Vec::new();
            let mut ok = true;
            for (k, degree_classes) in classes.iter().enumerate().take(d + 1) {
                let decl = match gens.get(&k.to_string()) {
                    Some(g) => match generators_from_doc(g, degree_classes.len()) {
                        Ok(decl) => decl,
                        Err(detail) => {
                            violations.push(Violation {
                                check: "generator-shape".into(),
                                detail: format!("generators degree {k}: {detail}"),
                            });
                            ok = false;
                            DeclaredGenerators { free: Vec::new(), torsion: Vec::new() }
                        }
                    },
                    None => {
                        violations.push(Violation {
                            check: "generator-shape".into(),
                            detail: format!("no declared generators for degree {k}"),
                        });
                        ok = false;
                        DeclaredGenerators { free: Vec::new(), torsion: Vec::new() }
                    }
                };
                let n = decl.count();
                match doc.connecting.matrices.get(&k.to_string()) {
                    Some(raw) => match matrix_from_doc(raw, n, n) {
                        Ok(m) => matrices.push(m),
                        Err(detail) => {
                            violations.push(Violation {
                                check: "homology-matrix-shape".into(),
                                detail: format!("homology connecting {k}: {detail}"),
                            });
                            ok = false;
                            matrices.push(Mat::zero(n, n));
                        }
                    },
                    None => {
                        violations.push(Violation {
                            check: "homology-matrix-shape".into(),
                            detail: format!("no homology connecting matrix for degree {k}"),
                        });
                        ok = false;
                        matrices.push(Mat::zero(n, n));
                    }
                }
                generators.push(decl);
            }
            if ok {
                Some(Connecting::Homology { matrices, generators })
            } else {
                None
            }
        }
        other => {
            violations.push(Violation {
                check: "connecting-mode".into(),
                detail: format!("connecting mode must be \"chain\" or \"homology\", got {other:?}"),
            });
            None
        }
    }
}

/// Checks that depend on the effective complex: chain commutation,
/// declared generators being honest descriptions of the homology.
fn validate_semantics(ds: &ApproximantDataset, violations: &mut Vec<Violation>) {
    let complex = match ds.effective_complex() {
        Ok(c) => c,
        Err(e) => {
            violations.push(Violation {
                check: "boundary-composition".into(),
                detail: e.to_string(),
            });
            return;
        }
    };
    match &ds.connecting {
        Connecting::Chain(_) => {
            let maps = ds.effective_chain_connecting().expect("chain mode");
            if let Err(e) = ChainMap::new(&complex, &complex, maps) {
                violations.push(Violation { check: "chain-commutation".into(), detail: e.to_string() });
            }
        }
        Connecting::Homology { matrices: _, generators } => {
            let hom = homology(&complex);
            for (k, decl) in generators.iter().enumerate() {
                verify_declared(decl, &hom, k, violations);
            }
        }
    }
}

/// Validates declared generators against the computed homology of one
/// degree: cycles, declared orders, and that they span.
fn verify_declared(
    decl: &DeclaredGenerators,
    hom: &HomologyResult,
    degree: usize,
    violations: &mut Vec<Violation>,
) {
    let mut push = |check: &str, detail: String| {
        violations.push(Violation { check: check.into(), detail });
    };
    let boundary = hom.complex.boundary_out(degree);
    for (i, v) in decl.vectors().enumerate() {
        let image = boundary.mul_vec(v);
        if image.iter().any(|x| !x.is_zero()) {
            push("generator-cycle", format!("degree {degree} generator {i} is not a cycle"));
            return;
        }
    }
    let orders: Vec<BigInt> = decl.torsion.iter().map(|(_, d)| d.clone()).collect();
    for w in orders.windows(2) {
        if !(&w[1] % &w[0]).is_zero() {
            push(
                "declared-torsion-normalized",
                format!("degree {degree} torsion orders must form a divisibility chain"),
            );
            return;
        }
    }
    let declared_group = AbelianGroup { free_rank: decl.free.len(), torsion: orders };
    let computed = hom.group(degree);
    if declared_group != *computed {
        push(
            "declared-group-structure",
            format!(
                "degree {degree}: declared generators present {declared_group}, computed \
                 homology is {computed}"
            ),
        );
        return;
    }
    // Classes of the declared generators in computed coordinates.
    let mut columns = Vec::new();
    for v in decl.vectors() {
        match hom.homology_class(degree, v) {
            Ok(c) => columns.push(c),
            Err(e) => {
                push("generator-cycle", format!("degree {degree}: {e}"));
                return;
            }
        }
    }
    let n = computed.coords();
    let c = Mat::from_fn(n, columns.len(), |i, j| columns[j][i].clone());
    for (j, (_, declared_order)) in decl.torsion.iter().enumerate() {
        let col = c.col(decl.free.len() + j);
        match element_order(computed, &col) {
            Some(order) if order == *declared_order => {}
            Some(order) => push(
                "declared-generator-order",
                format!(
                    "degree {degree} torsion generator {j} has order {order}, declared \
                     {declared_order}"
                ),
            ),
            None => push(
                "declared-generator-order",
                format!("degree {degree} torsion generator {j} has infinite order"),
            ),
        }
    }
    let rel = relation_columns(computed);
    let span = cokernel(&c.hcat(&rel));
    if !span.is_trivial() {
        push(
            "declared-generators-span",
            format!("degree {degree}: declared generators span a proper subgroup ({span} missing)"),
        );
    }
}

/// Columns presenting the relations of a group in its own coordinates.
fn relation_columns(g: &AbelianGroup) -> IntMatrix {
    let n = g.coords();
    Mat::from_fn(n, g.torsion.len(), |i, j| {
        if i == g.free_rank + j {
            g.torsion[j].clone()
        } else {
            BigInt::zero()
        }
    })
}

/// Order of an element given in normal-form coordinates; `None` means
/// infinite.
fn element_order(g: &AbelianGroup, coords: &[BigInt]) -> Option<BigInt> {
    if coords[..g.free_rank].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut order = BigInt::one();
    for (j, d) in g.torsion.iter().enumerate() {
        let c = coords[g.free_rank + j].mod_floor(d);
        if !c.is_zero() {
            order = order.lcm(&(d / d.gcd(&c)));
        }
    }
    Some(order)
}

/// How one degree came out of `compute`.
#[derive(Clone, Debug)]
pub struct DegreeComputation {
    pub degree: usize,
    /// Computed approximant homology (integer mode).
    pub group: AbelianGroup,
    /// Rational dimension (free rank over Q) in rationals mode.
    pub rational_dimension: Option<usize>,
    /// Generators of the computed homology in effective-complex
    /// coordinates, free first; empty in rationals mode reporting.
    pub generators: Vec<IntVector>,
    /// The induced self-map used for the limit: in computed normal-form
    /// coordinates for chain-level data, in declared coordinates for
    /// homology-level data.
    pub induced: IntMatrix,
    /// The induced map was taken from the dataset rather than derived.
    pub declared: bool,
    /// Change of basis from declared generator coordinates to computed
    /// normal-form coordinates, when generators were declared.
    pub basis_change: Option<IntMatrix>,
    pub limit: LimitOutcome,
    /// Rational limit dimension in rationals mode.
    pub rational_limit: Option<usize>,
    pub annotation: Option<String>,
}

/// Result of running the pipeline on a dataset.
#[derive(Clone, Debug)]
pub struct DatasetComputation {
    pub name: String,
    pub mode: CoefficientMode,
    pub dagger: bool,
    pub complex: FinChainComplex,
    pub kept: Vec<Vec<usize>>,
    pub homology: HomologyResult,
    pub degrees: Vec<DegreeComputation>,
    /// Mismatches against the dataset's `expected` block; empty when
    /// everything matched or nothing was expected.
    pub expected_mismatches: Vec<String>,
    pub has_expectations: bool,
}

/// Runs homology, induced maps, and limits on a validated dataset.
pub fn compute(ds: &ApproximantDataset, opts: &LimitOptions) -> Result<DatasetComputation, PehError> {
    let complex = ds.effective_complex()?;
    let kept = ds.kept_classes();
    let hom = homology(&complex);
    let d = ds.dimension;

    // Induced self-maps per degree, plus bookkeeping about their origin.
    let mut induced_maps = Vec::new();
    let mut declared_flags = Vec::new();
    let mut basis_changes: Vec<Option<IntMatrix>> = Vec::new();
    let mut limit_groups: Vec<AbelianGroup> = Vec::new();
    match &ds.connecting {
        Connecting::Chain(_) => {
            let maps = ds.effective_chain_connecting().expect("chain mode");
            let chain_map = ChainMap::new(&complex, &complex, maps)?;
            for k in 0..=d {
                induced_maps.push(induced_map(&chain_map, &hom, &hom, k)?);
                declared_flags.push(false);
                basis_changes.push(None);
                limit_groups.push(hom.group(k).clone());
            }
        }
        Connecting::Homology { matrices, generators } => {
            for k in 0..=d {
                let decl = &generators[k];
                let mut cols = Vec::new();
                for v in decl.vectors() {
                    cols.push(hom.homology_class(k, v)?);
                }
                let n = hom.group(k).coords();
                let c = Mat::from_fn(n, cols.len(), |i, j| cols[j][i].clone());
                induced_maps.push(matrices[k].clone());
                declared_flags.push(true);
                basis_changes.push(Some(c));
                // Limits run in declared coordinates; the declared group
                // is isomorphic to the computed one by validation.
                limit_groups.push(decl.group());
            }
        }
    }

    let annotate = ds.orientable
        && (ds.trivial_isotropy() || ds.dagger_rescaling.is_some())
        && ds.mode == CoefficientMode::Integers;
    let mut degrees = Vec::new();
    for k in 0..=d {
        let group = hom.group(k).clone();
        let induced = induced_maps[k].clone();
        let limit = if ds.stationary {
            LimitOutcome::from_result(stationary_limit(&limit_groups[k], &induced, opts))
        } else if is_isomorphism(&induced, &limit_groups[k], &limit_groups[k]) {
            LimitOutcome::Classified(LimitGroup::from_group(&limit_groups[k]))
        } else {
            LimitOutcome::Failed(
                "dataset is not stationary and its connecting map is not an isomorphism"
                    .to_string(),
            )
        };
        let (rational_dimension, rational_limit) = if ds.mode == CoefficientMode::Rationals {
            let f = group.free_rank;
            let free_block = Mat::from_fn(f, f, |i, j| induced[(i, j)].clone());
            (Some(f), Some(eventual_image(&free_block).rank))
        } else {
            (None, None)
        };
        let annotation = if annotate {
            let dual = d - k;
            if ds.dagger_rescaling.is_some() {
                Some(format!(
                    "restricted degree-0 coefficients restore duality: this group matches \
                     Cech cohomology in degree {dual}"
                ))
            } else {
                Some(format!(
                    "orientable with trivial isotropy: this group matches Cech cohomology \
                     in degree {dual}"
                ))
            }
        } else {
            None
        };
        degrees.push(DegreeComputation {
            degree: k,
            group,
            rational_dimension,
            generators: hom.data[k].generators.clone(),
            induced,
            declared: declared_flags[k],
            basis_change: basis_changes[k].clone(),
            limit,
            rational_limit,
            annotation,
        });
    }

    let (expected_mismatches, has_expectations) = match &ds.expected {
        Some(e) if !e.is_empty() => (check_expectations(ds, e, &degrees), true),
        _ => (Vec::new(), false),
    };
    Ok(DatasetComputation {
        name: ds.name.clone(),
        mode: ds.mode,
        dagger: ds.dagger_rescaling.is_some(),
        complex,
        kept,
        homology: hom,
        degrees,
        expected_mismatches,
        has_expectations,
    })
}

fn check_expectations(
    ds: &ApproximantDataset,
    e: &Expected,
    degrees: &[DegreeComputation],
) -> Vec<String> {
    let mut mismatches = Vec::new();
    for (k, spec) in e.approximant.iter().enumerate() {
        let Some(spec) = spec else { continue };
        let got = &degrees[k];
        match ds.mode {
            CoefficientMode::Integers => {
                if !spec.localized.is_empty() {
                    mismatches
                        .push(format!("degree {k}: approximant expectations cannot be localized"));
                    continue;
                }
                let want = AbelianGroup::new(spec.free_rank, &spec.torsion);
                if got.group != want {
                    mismatches.push(format!(
                        "degree {k} approximant homology is {}, expected {want}",
                        got.group
                    ));
                }
            }
            CoefficientMode::Rationals => {
                let dim = got.rational_dimension.unwrap_or(0);
                if dim != spec.free_rank || !spec.torsion.is_empty() || !spec.localized.is_empty() {
                    mismatches.push(format!(
                        "degree {k} rational homology has dimension {dim}, expected Q^{}",
                        spec.free_rank
                    ));
                }
            }
        }
    }
    for (k, spec) in e.limit.iter().enumerate() {
        let Some(spec) = spec else { continue };
        let got = &degrees[k];
        match ds.mode {
            CoefficientMode::Integers => {
                let want = LimitGroup::normal_form(
                    spec.free_rank,
                    spec.localized.clone(),
                    spec.torsion.clone(),
                    0,
                );
                match &got.limit {
                    LimitOutcome::Classified(g) => match crate::limits::iso_check(g, &want) {
                        Ok(true) => {}
                        Ok(false) => mismatches
                            .push(format!("degree {k} limit is {g}, expected {want}")),
                        Err(_) => mismatches.push(format!(
                            "degree {k} limit stayed a presentation, expected {want}"
                        )),
                    },
                    LimitOutcome::Failed(msg) => {
                        mismatches.push(format!("degree {k} limit failed: {msg}"))
                    }
                }
            }
            CoefficientMode::Rationals => {
                let dim = got.rational_limit.unwrap_or(0);
                let want = spec.free_rank + spec.localized.len();
                if dim != want || !spec.torsion.is_empty() {
                    mismatches
                        .push(format!("degree {k} rational limit has dimension {dim}, expected {want}"));
                }
            }
        }
    }
    mismatches
}

/// Restricts degree-0 chains at each vertex class to multiples of its
/// isotropy order. The basis vector at class `v` of the new complex
/// stands for `n_v` times the old one, the first boundary becomes
/// `D^-1 . boundary`, and chain-level connecting maps conjugate by `D`.
pub fn dagger_transform(ds: &ApproximantDataset) -> Result<ApproximantDataset, PehError> {
    if ds.mode != CoefficientMode::Integers {
        return Err(PehError::InvariantViolation {
            check: "dagger-mode".into(),
            detail: "the restricted complex is an integral construction; run it in integer mode"
                .into(),
        });
    }
    if ds.dagger_rescaling.is_some() {
        return Err(PehError::InvariantViolation {
            check: "dagger-mode".into(),
            detail: "dataset already carries the degree-0 restriction".into(),
        });
    }
    let orders: Vec<BigInt> = ds.classes[0].iter().map(|c| c.isotropy.clone()).collect();
    let mut boundaries = ds.boundaries.clone();
    if ds.dimension >= 1 {
        let b1 = &ds.boundaries[0];
        let mut scaled = b1.clone();
        for (i, n_v) in orders.iter().enumerate() {
            for j in 0..b1.cols() {
                let (q, r) = b1[(i, j)].div_rem(n_v);
                if !r.is_zero() {
                    return Err(PehError::DivisibilityError(format!(
                        "boundary entry at vertex class {:?}, column {} ({:?}) is {} which \
                         is not divisible by the isotropy order {}; the declared isotropy \
                         is inconsistent with the boundary",
                        ds.classes[0][i].name,
                        j,
                        ds.classes[1][j].name,
                        b1[(i, j)],
                        n_v
                    )));
                }
                scaled[(i, j)] = q;
            }
        }
        boundaries[0] = scaled;
    }
    let connecting = match &ds.connecting {
        Connecting::Chain(ms) => {
            let mut out = ms.clone();
            if !ms.is_empty() {
                let s0 = &ms[0];
                let mut scaled = s0.clone();
                for i in 0..s0.rows() {
                    for j in 0..s0.cols() {
                        // Entry becomes n_j * s / n_i.
                        let num = &s0[(i, j)] * &orders[j];
                        let (q, r) = num.div_rem(&orders[i]);
                        if !r.is_zero() {
                            return Err(PehError::DivisibilityError(format!(
                                "degree-0 connecting entry from class {:?} to class {:?} does \
                                 not stay integral after restricting to isotropy multiples",
                                ds.classes[0][j].name, ds.classes[0][i].name
                            )));
                        }
                        scaled[(i, j)] = q;
                    }
                }
                out[0] = scaled;
            }
            Connecting::Chain(out)
        }
        Connecting::Homology { .. } => {
            let Some(section) = &ds.dagger else {
                return Err(PehError::InvariantViolation {
                    check: "dagger-declared-maps-required".into(),
                    detail: "homology-level connecting maps cannot be rescaled mechanically; \
                             the dataset must declare the restricted maps and generators"
                        .into(),
                });
            };
            let mut matrices = Vec::new();
            let mut generators = Vec::new();
            for k in 0..=ds.dimension {
                let Some(decl) = section.generators.get(&k) else {
                    return Err(PehError::InvariantViolation {
                        check: "dagger-generator-shape".into(),
                        detail: format!("no restricted generators declared for degree {k}"),
                    });
                };
                let Some(m) = section.connecting.get(&k) else {
                    return Err(PehError::InvariantViolation {
                        check: "dagger-connecting-shape".into(),
                        detail: format!("no restricted connecting matrix declared for degree {k}"),
                    });
                };
                if m.rows() != decl.count() {
                    return Err(PehError::InvariantViolation {
                        check: "dagger-connecting-shape".into(),
                        detail: format!(
                            "restricted connecting matrix for degree {k} is {} x {}, but {} \
                             generators are declared",
                            m.rows(),
                            m.cols(),
                            decl.count()
                        ),
                    });
                }
                matrices.push(m.clone());
                generators.push(decl.clone());
            }
            Connecting::Homology { matrices, generators }
        }
    };
    // Classes of the restricted complex: the symmetry defect is absorbed
    // into the coefficients, so isotropy becomes trivial.
    let mut classes = ds.classes.clone();
    for c in &mut classes[0] {
        c.isotropy = BigInt::one();
    }
    let out = ApproximantDataset {
        name: ds.name.clone(),
        dimension: ds.dimension,
        classes,
        boundaries,
        connecting,
        stationary: ds.stationary,
        orientable: ds.orientable,
        mode: ds.mode,
        expected: ds.dagger.as_ref().and_then(|s| s.expected.clone()),
        dagger: None,
        dagger_rescaling: Some(orders),
    };
    // Declared restricted generators must describe the restricted
    // homology honestly.
    if let Connecting::Homology { generators, .. } = &out.connecting {
        let complex = out.effective_complex()?;
        let hom = homology(&complex);
        let mut violations = Vec::new();
        for (k, decl) in generators.iter().enumerate() {
            verify_declared(decl, &hom, k, &mut violations);
        }
        if let Some(first) = violations.first() {
            return Err(PehError::InvariantViolation {
                check: first.check.clone(),
                detail: violations.iter().map(Violation::to_string).collect::<Vec<_>>().join("; "),
            });
        }
    }
    Ok(out)
}

/// The short exact sequence measuring the failure of integral duality:
/// kernel, image, and cokernel of the map induced on degree-0 homology
/// by including isotropy-multiple chains into all chains.
#[derive(Clone, Debug)]
pub struct GapReport {
    pub kernel: AbelianGroup,
    pub image: AbelianGroup,
    pub cokernel: AbelianGroup,
    pub restricted_group: AbelianGroup,
    pub plain_group: AbelianGroup,
    /// The induced matrix from restricted to plain normal-form
    /// coordinates.
    pub induced: IntMatrix,
}

impl GapReport {
    /// Renders `0 -> A -> B -> C -> 0` when the kernel vanishes.
    pub fn exact_sequence(&self) -> Option<String> {
        if self.kernel.is_trivial() {
            Some(format!(
                "0 -> {} -> {} -> {} -> 0",
                self.restricted_group, self.plain_group, self.cokernel
            ))
        } else {
            None
        }
    }
}

/// Computes the duality gap of an integer-mode dataset with isotropy
/// data.
pub fn duality_gap(ds: &ApproximantDataset, _opts: &LimitOptions) -> Result<GapReport, PehError> {
    let restricted = dagger_transform(ds)?;
    let plain_complex = ds.effective_complex()?;
    let plain_hom = homology(&plain_complex);
    let restricted_complex = restricted.effective_complex()?;
    let restricted_hom = homology(&restricted_complex);
    let orders = restricted.dagger_rescaling.as_ref().expect("transform records rescaling");

    // Images of the restricted degree-0 generators inside the plain
    // chain group: the basis vector at class v stands for n_v * v.
    let source = restricted_hom.group(0).clone();
    let target = plain_hom.group(0).clone();
    let mut cols = Vec::new();
    for g in &restricted_hom.data[0].generators {
        let chain: IntVector = g.iter().zip(orders).map(|(x, n)| x * n).collect();
        cols.push(plain_hom.homology_class(0, &chain)?);
    }
    let m = Mat::from_fn(target.coords(), cols.len(), |i, j| cols[j][i].clone());

    // Kernel: the preimage of the target relations modulo the source
    // relations.
    let rt = relation_columns(&target);
    let stacked = m.hcat(&rt);
    let kb = kernel_basis(&stacked);
    let p = Mat::from_fn(source.coords(), kb.cols(), |i, j| kb[(i, j)].clone());
    let rs = relation_columns(&source);
    let kernel = lattice_quotient(&p, &rs);
    // Image: quotient of the source coordinates by the full preimage
    // lattice.
    let image = cokernel(&p);
    // Cokernel: target coordinates modulo image plus target relations.
    let coker = cokernel(&m.hcat(&rt));
    Ok(GapReport {
        kernel,
        image,
        cokernel: coker,
        restricted_group: source,
        plain_group: target,
        induced: m,
    })
}

/// The quotient of the lattice spanned by the columns of `big` by the
/// sublattice spanned by the columns of `small` (which must lie inside
/// it).
fn lattice_quotient(big: &IntMatrix, small: &IntMatrix) -> AbelianGroup {
    let sp = smith_normal_form(big);
    let r = sp.rank;
    // Coordinates of a vector w in the exact image basis
    // { d_i * (U^-1 column i) } are (U w)_i / d_i.
    let uw = sp.u.mul(small);
    let mut c = Mat::zero(r, small.cols());
    for j in 0..small.cols() {
        for i in 0..r {
            let (q, rem) = uw[(i, j)].div_rem(&sp.d[(i, i)]);
            debug_assert!(rem.is_zero(), "sublattice must lie inside the lattice");
            c[(i, j)] = q;
        }
        debug_assert!(
            (r..uw.rows()).all(|i| uw[(i, j)].is_zero()),
            "sublattice must lie inside the lattice"
        );
    }
    cokernel(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::int_matrix;

    /// Equilateral-triangle periodic tiling up to rigid motions, in its
    /// barycentric subdivision: one vertex class each for the original
    /// vertices, edge midpoints, and face centers; three edge classes;
    /// two triangle classes.
    const TRIANGLE: &str = r#"{
  "name": "periodic-triangle",
  "dimension": 2,
  "classes": {
    "0": [
      {"name": "v", "isotropy": 6},
      {"name": "e", "isotropy": 2},
      {"name": "f", "isotropy": 3}
    ],
    "1": [{"name": "ve"}, {"name": "vf"}, {"name": "ef"}],
    "2": [{"name": "t+"}, {"name": "t-"}]
  },
  "boundaries": {
    "1": [[-6, -6, 0], [2, 0, -2], [0, 3, 3]],
    "2": [[1, -1], [-1, 1], [1, -1]]
  },
  "connecting": {
    "mode": "chain",
    "matrices": {
      "0": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
      "1": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
      "2": [[1, 0], [0, 1]]
    }
  },
  "stationary": true,
  "orientable": true,
  "mode": "Z",
  "expected": {
    "approximant": {"0": {"free_rank": 1, "torsion": [6]}},
    "limit": {"0": {"free_rank": 1, "torsion": [6]}, "1": {}, "2": {"free_rank": 1}},
    "duality_cokernel": [6, 6]
  }
}"#;

    fn triangle() -> ApproximantDataset {
        load_and_validate(TRIANGLE, None).unwrap()
    }

    #[test]
    fn loads_and_computes_triangle() {
        let ds = triangle();
        let out = compute(&ds, &LimitOptions::default()).unwrap();
        assert_eq!(out.degrees[0].group, AbelianGroup::new(1, &[BigInt::from(6)]));
        assert!(out.degrees[1].group.is_trivial());
        assert_eq!(out.degrees[2].group, AbelianGroup::free(1));
        assert!(out.expected_mismatches.is_empty(), "{:?}", out.expected_mismatches);
        assert!(out.has_expectations);
        // Identity connecting maps: the limits are the groups themselves.
        let LimitOutcome::Classified(l0) = &out.degrees[0].limit else { panic!() };
        assert_eq!(
            *l0,
            LimitGroup::normal_form(1, vec![], vec![BigInt::from(6)], 0)
        );
        // Isotropy is nontrivial, so the plain groups carry no duality
        // annotation.
        assert!(out.degrees.iter().all(|d| d.annotation.is_none()));
    }

    #[test]
    fn corrupted_boundary_is_caught_by_name() {
        let mut doc: serde_json::Value = serde_json::from_str(TRIANGLE).unwrap();
        doc["boundaries"]["2"][0][0] = serde_json::json!(2);
        let text = doc.to_string();
        let parsed = parse_document(&text).unwrap();
        let violations = validate_document(&parsed, None).unwrap_err();
        assert!(violations.iter().any(|v| v.check == "boundary-composition"), "{violations:?}");
    }

    #[test]
    fn corrupted_connecting_is_caught() {
        let mut doc: serde_json::Value = serde_json::from_str(TRIANGLE).unwrap();
        doc["connecting"]["matrices"]["1"][0][1] = serde_json::json!(1);
        let text = doc.to_string();
        let parsed = parse_document(&text).unwrap();
        let violations = validate_document(&parsed, None).unwrap_err();
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert_eq!(violations[0].check, "chain-commutation");
    }

    #[test]
    fn rev_sym_needs_rationals() {
        let mut doc: serde_json::Value = serde_json::from_str(TRIANGLE).unwrap();
        doc["classes"]["1"][0]["rev_sym"] = serde_json::json!(true);
        let text = doc.to_string();
        let parsed = parse_document(&text).unwrap();
        let violations = validate_document(&parsed, None).unwrap_err();
        assert!(violations.iter().any(|v| v.check == "rev-sym-mode"), "{violations:?}");
    }

    #[test]
    fn dagger_restores_free_degree_zero() {
        let ds = triangle();
        let restricted = dagger_transform(&ds).unwrap();
        assert_eq!(
            restricted.boundaries[0],
            int_matrix(&[&[-1, -1, 0], &[1, 0, -1], &[0, 1, 1]])
        );
        let out = compute(&restricted, &LimitOptions::default()).unwrap();
        assert_eq!(out.degrees[0].group, AbelianGroup::free(1));
        // The restricted dataset is orientable with the symmetry defect
        // absorbed, so every degree carries the duality annotation.
        assert!(out.degrees.iter().all(|d| d.annotation.is_some()));
    }

    #[test]
    fn dagger_divisibility_failure_names_the_class() {
        let mut doc: serde_json::Value = serde_json::from_str(TRIANGLE).unwrap();
        doc["classes"]["0"][0]["isotropy"] = serde_json::json!(4);
        let text = doc.to_string();
        let ds = load_and_validate(&text, None).unwrap();
        let err = dagger_transform(&ds).unwrap_err();
        match err {
            PehError::DivisibilityError(msg) => assert!(msg.contains("\"v\""), "{msg}"),
            other => panic!("expected a divisibility error, got {other:?}"),
        }
    }

    #[test]
    fn trivial_isotropy_gap_is_zero() {
        let mut doc: serde_json::Value = serde_json::from_str(TRIANGLE).unwrap();
        doc["classes"]["0"][0]["isotropy"] = serde_json::json!(1);
        doc["classes"]["0"][1]["isotropy"] = serde_json::json!(1);
        doc["classes"]["0"][2]["isotropy"] = serde_json::json!(1);
        doc["boundaries"]["1"] = serde_json::json!([[-1, -1, 0], [1, 0, -1], [0, 1, 1]]);
        doc["expected"] = serde_json::json!(null);
        let text = doc.to_string();
        let ds = load_and_validate(&text, None).unwrap();
        let gap = duality_gap(&ds, &LimitOptions::default()).unwrap();
        assert!(gap.kernel.is_trivial());
        assert!(gap.cokernel.is_trivial());
        assert_eq!(gap.image, gap.plain_group);
    }

    #[test]
    fn triangle_gap_matches_hand_computation() {
        let ds = triangle();
        let gap = duality_gap(&ds, &LimitOptions::default()).unwrap();
        assert!(gap.kernel.is_trivial());
        assert_eq!(gap.restricted_group, AbelianGroup::free(1));
        assert_eq!(gap.plain_group, AbelianGroup::new(1, &[BigInt::from(6)]));
        assert_eq!(gap.cokernel, AbelianGroup::new(0, &[BigInt::from(6), BigInt::from(6)]));
        assert_eq!(
            gap.exact_sequence().unwrap(),
            "0 -> Z -> Z + Z/6 -> Z/6 + Z/6 -> 0"
        );
    }

    #[test]
    fn rational_mode_drops_rev_sym_classes() {
        let text = r#"{
  "name": "pentagon-plain",
  "dimension": 2,
  "classes": {
    "0": [{"name": "v3", "isotropy": 3}, {"name": "v4", "isotropy": 4}],
    "1": [{"name": "edge", "isotropy": 2, "rev_sym": true}],
    "2": [{"name": "pent", "isotropy": 5}]
  },
  "boundaries": {
    "1": [[0], [0]],
    "2": [[0]]
  },
  "connecting": {
    "mode": "chain",
    "matrices": {"0": [[1, 0], [0, 1]], "1": [[0]], "2": [[1]]}
  },
  "stationary": true,
  "orientable": true,
  "mode": "Q",
  "expected": {
    "approximant": {"0": {"free_rank": 2}, "1": {}, "2": {"free_rank": 1}},
    "limit": {"0": {"free_rank": 2}, "1": {}, "2": {"free_rank": 1}}
  }
}"#;
        let ds = load_and_validate(text, None).unwrap();
        let out = compute(&ds, &LimitOptions::default()).unwrap();
        assert_eq!(out.complex.rank(0), 2);
        assert_eq!(out.complex.rank(1), 0, "rev-sym class contributes nothing");
        assert_eq!(out.complex.rank(2), 1);
        assert_eq!(out.degrees[0].rational_dimension, Some(2));
        assert_eq!(out.degrees[1].rational_dimension, Some(0));
        assert_eq!(out.degrees[2].rational_dimension, Some(1));
        assert_eq!(out.degrees[0].rational_limit, Some(2));
        assert!(out.expected_mismatches.is_empty(), "{:?}", out.expected_mismatches);
        // The same dataset forced into integer mode must be rejected.
        let err = load_and_validate(text, Some(CoefficientMode::Integers)).unwrap_err();
        assert!(matches!(err, PehError::InvariantViolation { .. }));
    }

    #[test]
    fn homology_level_dataset_validates_generators() {
        // Z/3 presented on one declared torsion generator, self-map
        // negation.
        let text = r#"{
  "name": "tiny-homology-level",
  "dimension": 1,
  "classes": {
    "0": [{"name": "p"}],
    "1": [{"name": "a"}]
  },
  "boundaries": {"1": [[3]]},
  "connecting": {
    "mode": "homology",
    "matrices": {"0": [[-1]], "1": []},
    "generators": {
      "0": {"torsion": [{"vector": [1], "order": 3}]},
      "1": {}
    }
  },
  "stationary": true,
  "orientable": false,
  "mode": "Z"
}"#;
        let ds = load_and_validate(text, None).unwrap();
        let out = compute(&ds, &LimitOptions::default()).unwrap();
        assert_eq!(out.degrees[0].group, AbelianGroup::new(0, &[BigInt::from(3)]));
        assert!(out.degrees[0].declared);
        let LimitOutcome::Classified(l0) = &out.degrees[0].limit else { panic!() };
        assert_eq!(*l0, LimitGroup::normal_form(0, vec![], vec![BigInt::from(3)], 0));

        // Wrong declared order is caught by name.
        let mut doc: serde_json::Value = serde_json::from_str(text).unwrap();
        doc["connecting"]["generators"]["0"]["torsion"][0]["order"] = serde_json::json!(6);
        let parsed = parse_document(&doc.to_string()).unwrap();
        let violations = validate_document(&parsed, None).unwrap_err();
        assert!(
            violations.iter().any(|v| v.check == "declared-group-structure"
                || v.check == "declared-generator-order"),
            "{violations:?}"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(TRIANGLE).unwrap();
        doc["unexpected"] = serde_json::json!(1);
        let err = parse_document(&doc.to_string()).unwrap_err();
        assert!(matches!(err, PehError::ParseError(_)));
    }
}
