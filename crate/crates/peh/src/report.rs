//! Serializable reports of a pipeline run.
//!
//! A report is one flat document covering the input, the per-level
//! complexes and their homology, the connecting maps, the limit of each
//! degree, and optional duality data. Matrix entries and torsion orders
//! are decimal strings so arbitrarily large integers survive the JSON
//! round trip, and every struct serializes its fields in declaration
//! order, so the same run always produces the same bytes.
//!
//! A small schema checker covering the subset of JSON Schema used by the
//! shipped report schema lives here too, so tests can hold the emitted
//! documents against it.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    ApproximantDataset, CoefficientMode, Connecting, DatasetComputation, GapReport,
};
use crate::group::AbelianGroup;
use crate::limits::{LimitGroup, LimitOutcome, TorsionStatus};
use crate::matrix::Mat;
use crate::subst::{Pipeline1D, SubstitutionSystem1D};
use crate::IntMatrix;

/// Option values a run was configured with.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct OptionsSummary {
    pub levels: usize,
    pub horizon: usize,
    pub limit_horizon: usize,
    pub verified_depth: usize,
}

/// What was computed and under which settings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InputSummary {
    pub name: String,
    /// `substitution-1d` or `approximant-dataset`.
    pub kind: String,
    /// `Z` or `Q`.
    pub mode: String,
    /// True when degree-0 chains were restricted to isotropy multiples.
    pub dagger: bool,
    pub options: OptionsSummary,
}

/// One named validation check and its outcome.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ValidationEntry {
    pub check: String,
    pub status: String,
    pub detail: Option<String>,
}

/// An integer matrix with decimal-string entries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<String>>,
}

impl MatrixData {
    pub fn from_matrix(m: &IntMatrix) -> MatrixData {
        MatrixData {
            rows: m.rows(),
            cols: m.cols(),
            entries: (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m[(i, j)].to_string()).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<IntMatrix, String> {
        if self.entries.len() != self.rows
            || self.entries.iter().any(|r| r.len() != self.cols)
        {
            return Err("matrix entries do not match the declared shape".into());
        }
        let mut out = Mat::zero(self.rows, self.cols);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                out[(i, j)] =
                    s.parse::<BigInt>().map_err(|_| format!("bad integer {s:?}"))?;
            }
        }
        Ok(out)
    }
}

/// A finitely generated abelian group in invariant-factor form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GroupData {
    pub free_rank: usize,
    pub torsion: Vec<String>,
    pub display: String,
}

impl GroupData {
    pub fn from_group(g: &AbelianGroup) -> GroupData {
        GroupData {
            free_rank: g.free_rank,
            torsion: g.torsion.iter().map(BigInt::to_string).collect(),
            display: g.to_string(),
        }
    }

    fn rational(dimension: usize) -> GroupData {
        GroupData {
            free_rank: dimension,
            torsion: Vec::new(),
            display: match dimension {
                0 => "0".to_string(),
                1 => "Q".to_string(),
                n => format!("Q^{n}"),
            },
        }
    }
}

/// A classified limit group, tagged by how much was certified.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitGroupData {
    /// Exact normal form, possibly gated by the divisibility oracle.
    NormalForm {
        free_rank: usize,
        localized: Vec<String>,
        torsion: Vec<String>,
        verified_depth: usize,
        display: String,
    },
    /// Stable presentation whose normal form was not certified.
    Presentation {
        rank: usize,
        matrix: MatrixData,
        torsion: Option<Vec<String>>,
        display: String,
    },
    /// Dimension of a rational limit.
    Rational { dimension: usize, display: String },
}

impl LimitGroupData {
    pub fn from_limit(g: &LimitGroup) -> LimitGroupData {
        match g {
            LimitGroup::NormalForm { free_rank, localized, torsion, verified_depth } => {
                LimitGroupData::NormalForm {
                    free_rank: *free_rank,
                    localized: localized.iter().map(BigInt::to_string).collect(),
                    torsion: torsion.iter().map(BigInt::to_string).collect(),
                    verified_depth: *verified_depth,
                    display: g.to_string(),
                }
            }
            LimitGroup::Presentation { rank, matrix, torsion, .. } => {
                LimitGroupData::Presentation {
                    rank: *rank,
                    matrix: MatrixData::from_matrix(matrix),
                    torsion: match torsion {
                        TorsionStatus::Resolved(t) => {
                            Some(t.iter().map(BigInt::to_string).collect())
                        }
                        TorsionStatus::Unresolved => None,
                    },
                    display: g.to_string(),
                }
            }
        }
    }

    fn rational(dimension: usize) -> LimitGroupData {
        let GroupData { display, .. } = GroupData::rational(dimension);
        LimitGroupData::Rational { dimension, display }
    }
}

/// Homology of one degree of one level.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DegreeHomology {
    pub degree: usize,
    pub group: GroupData,
    /// Generating cycles in the level's chain coordinates, free
    /// generators first; decimal strings.
    pub generators: Vec<Vec<String>>,
}

/// One approximant level.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    /// Cell labels per degree, lowest degree first.
    pub cells: Vec<Vec<String>>,
    /// Boundary matrices, degree 1 first.
    pub boundaries: Vec<MatrixData>,
    pub homology: Vec<DegreeHomology>,
}

/// The connecting maps between two adjacent levels.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConnectingReport {
    pub from_level: usize,
    pub to_level: usize,
    /// True when the homology-level maps were taken from the input
    /// rather than derived from chain data.
    pub declared: bool,
    /// Chain-level matrices per degree, when the input provided them.
    pub chain_matrices: Option<Vec<MatrixData>>,
    /// Induced maps on homology per degree.
    pub homology_matrices: Vec<MatrixData>,
    /// For declared maps: the declared generators' classes in computed
    /// normal-form coordinates, per degree.
    pub basis_change: Option<Vec<MatrixData>>,
}

/// The limit of one degree.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LimitReport {
    pub degree: usize,
    /// `classified` or `failed`.
    pub status: String,
    pub group: Option<LimitGroupData>,
    pub error: Option<String>,
    /// Duality annotation, when the input supports one.
    pub duality: Option<String>,
}

/// Kernel, image, and cokernel of the restricted-into-plain embedding
/// on degree-0 homology.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GapData {
    pub restricted: GroupData,
    pub plain: GroupData,
    pub induced: MatrixData,
    pub kernel: GroupData,
    pub image: GroupData,
    pub cokernel: GroupData,
    pub exact_sequence: Option<String>,
}

impl GapData {
    pub fn from_gap(gap: &GapReport) -> GapData {
        GapData {
            restricted: GroupData::from_group(&gap.restricted_group),
            plain: GroupData::from_group(&gap.plain_group),
            induced: MatrixData::from_matrix(&gap.induced),
            kernel: GroupData::from_group(&gap.kernel),
            image: GroupData::from_group(&gap.image),
            cokernel: GroupData::from_group(&gap.cokernel),
            exact_sequence: gap.exact_sequence(),
        }
    }
}

/// Outcome of comparing the run against bundled expectations.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExpectedData {
    pub matched: bool,
    pub mismatches: Vec<String>,
}

/// The full document a run produces.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PipelineReport {
    pub input: InputSummary,
    pub validation: Vec<ValidationEntry>,
    pub levels: Vec<LevelReport>,
    pub connecting: Vec<ConnectingReport>,
    pub limits: Vec<LimitReport>,
    pub duality_gap: Option<GapData>,
    pub expected: Option<ExpectedData>,
}

fn vector_strings(v: &[BigInt]) -> Vec<String> {
    v.iter().map(BigInt::to_string).collect()
}

fn passed(check: &str) -> ValidationEntry {
    ValidationEntry { check: check.into(), status: "pass".into(), detail: None }
}

/// Builds the report for a one-dimensional substitution run.
pub fn report_for_substitution(
    sys: &SubstitutionSystem1D,
    pipeline: &Pipeline1D,
    options: OptionsSummary,
) -> PipelineReport {
    let letters = sys.letters();
    let input = InputSummary {
        name: sys.name().to_string(),
        kind: "substitution-1d".into(),
        mode: "Z".into(),
        dagger: false,
        options,
    };
    let validation = vec![
        passed("legal-pair-closure"),
        passed("chain-commutation"),
        passed("deg1-connecting-consistency"),
    ];
    let levels = pipeline
        .levels
        .iter()
        .map(|l| {
            let pair_labels: Vec<String> = l
                .complex
                .vertex_classes
                .iter()
                .map(|&(u, v)| format!("{}.{}", letters[u], letters[v]))
                .collect();
            LevelReport {
                level: l.complex.level,
                cells: vec![pair_labels, letters.to_vec()],
                boundaries: vec![MatrixData::from_matrix(&l.complex.d1)],
                homology: (0..=1)
                    .map(|k| DegreeHomology {
                        degree: k,
                        group: GroupData::from_group(l.homology.group(k)),
                        generators: l.homology.data[k]
                            .generators
                            .iter()
                            .map(|g| vector_strings(g))
                            .collect(),
                    })
                    .collect(),
            }
        })
        .collect();
    let connecting = (0..pipeline.deg0_maps.len())
        .map(|i| ConnectingReport {
            from_level: i,
            to_level: i + 1,
            declared: false,
            chain_matrices: Some(vec![
                MatrixData::from_matrix(&pipeline.deg0_maps[i]),
                MatrixData::from_matrix(&pipeline.deg1_maps[i]),
            ]),
            homology_matrices: vec![
                MatrixData::from_matrix(&pipeline.h0_maps[i]),
                MatrixData::from_matrix(&pipeline.h1_maps[i]),
            ],
            basis_change: None,
        })
        .collect();
    let limits = [&pipeline.h0_limit, &pipeline.h1_limit]
        .into_iter()
        .enumerate()
        .map(|(degree, outcome)| limit_report(degree, outcome, None))
        .collect();
    let expected = sys.expected().map(|e| {
        let mismatches = pipeline.check_expectations(e);
        ExpectedData { matched: mismatches.is_empty(), mismatches }
    });
    PipelineReport {
        input,
        validation,
        levels,
        connecting,
        limits,
        duality_gap: None,
        expected,
    }
}

fn limit_report(degree: usize, outcome: &LimitOutcome, duality: Option<String>) -> LimitReport {
    match outcome {
        LimitOutcome::Classified(g) => LimitReport {
            degree,
            status: "classified".into(),
            group: Some(LimitGroupData::from_limit(g)),
            error: None,
            duality,
        },
        LimitOutcome::Failed(msg) => LimitReport {
            degree,
            status: "failed".into(),
            group: None,
            error: Some(msg.clone()),
            duality,
        },
    }
}

/// Builds the report for a dataset run, with an optional duality-gap
/// section.
pub fn report_for_dataset(
    ds: &ApproximantDataset,
    out: &DatasetComputation,
    gap: Option<&GapReport>,
    options: OptionsSummary,
) -> PipelineReport {
    let input = InputSummary {
        name: out.name.clone(),
        kind: "approximant-dataset".into(),
        mode: out.mode.label().into(),
        dagger: out.dagger,
        options,
    };
    let mut validation = vec![
        passed("class-names-distinct"),
        passed("isotropy-positive"),
        passed("boundary-shape"),
        passed("boundary-composition"),
    ];
    match &ds.connecting {
        Connecting::Chain(_) => validation.push(passed("chain-commutation")),
        Connecting::Homology { .. } => {
            validation.push(passed("generator-cycle"));
            validation.push(passed("declared-generator-order"));
            validation.push(passed("declared-generators-span"));
            validation.push(passed("declared-group-structure"));
        }
    }
    if out.mode == CoefficientMode::Rationals {
        validation.push(passed("rev-sym-boundary-zero"));
        validation.push(passed("rev-sym-connecting-zero"));
    }

    let cells: Vec<Vec<String>> = out
        .kept
        .iter()
        .enumerate()
        .map(|(k, kept)| kept.iter().map(|&i| ds.classes[k][i].name.clone()).collect())
        .collect();
    let boundaries = (1..=ds.dimension)
        .map(|k| MatrixData::from_matrix(&out.complex.boundary_out(k)))
        .collect();
    let homology = out
        .degrees
        .iter()
        .map(|dc| DegreeHomology {
            degree: dc.degree,
            group: match out.mode {
                CoefficientMode::Integers => GroupData::from_group(&dc.group),
                CoefficientMode::Rationals => {
                    GroupData::rational(dc.rational_dimension.unwrap_or(0))
                }
            },
            generators: dc.generators.iter().map(|g| vector_strings(g)).collect(),
        })
        .collect();
    let levels = vec![LevelReport { level: 0, cells, boundaries, homology }];

    let declared = out.degrees.iter().any(|d| d.declared);
    let chain_matrices = ds
        .effective_chain_connecting()
        .map(|ms| ms.iter().map(MatrixData::from_matrix).collect());
    let basis_change: Option<Vec<MatrixData>> = if declared {
        Some(
            out.degrees
                .iter()
                .map(|d| {
                    d.basis_change
                        .as_ref()
                        .map(MatrixData::from_matrix)
                        .unwrap_or(MatrixData { rows: 0, cols: 0, entries: Vec::new() })
                })
                .collect(),
        )
    } else {
        None
    };
    let connecting = vec![ConnectingReport {
        from_level: 0,
        to_level: 1,
        declared,
        chain_matrices,
        homology_matrices: out
            .degrees
            .iter()
            .map(|d| MatrixData::from_matrix(&d.induced))
            .collect(),
        basis_change,
    }];

    let limits = out
        .degrees
        .iter()
        .map(|dc| match out.mode {
            CoefficientMode::Integers => {
                limit_report(dc.degree, &dc.limit, dc.annotation.clone())
            }
            CoefficientMode::Rationals => LimitReport {
                degree: dc.degree,
                status: "classified".into(),
                group: Some(LimitGroupData::rational(dc.rational_limit.unwrap_or(0))),
                error: None,
                duality: dc.annotation.clone(),
            },
        })
        .collect();

    let expected = if out.has_expectations {
        Some(ExpectedData {
            matched: out.expected_mismatches.is_empty(),
            mismatches: out.expected_mismatches.clone(),
        })
    } else {
        None
    };
    PipelineReport {
        input,
        validation,
        levels,
        connecting,
        limits,
        duality_gap: gap.map(GapData::from_gap),
        expected,
    }
}

impl PipelineReport {
    /// Deterministic pretty JSON: struct fields serialize in declaration
    /// order and all data is owned, so equal reports give equal bytes.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Renders the same data as readable text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let i = &self.input;
        let restricted = if i.dagger { ", restricted coefficients" } else { "" };
        push_line(
            &mut s,
            &format!("== {} ({}, mode {}{restricted}) ==", i.name, i.kind, i.mode),
        );
        push_line(
            &mut s,
            &format!(
                "options: levels={} horizon={} limit-horizon={} verified-depth={}",
                i.options.levels, i.options.horizon, i.options.limit_horizon,
                i.options.verified_depth
            ),
        );
        s.push('\n');
        push_line(&mut s, "validation:");
        for v in &self.validation {
            match &v.detail {
                Some(d) => push_line(&mut s, &format!("  [{}] {}: {d}", v.status, v.check)),
                None => push_line(&mut s, &format!("  [{}] {}", v.status, v.check)),
            }
        }
        for level in &self.levels {
            s.push('\n');
            let counts: Vec<String> =
                level.cells.iter().map(|c| c.len().to_string()).collect();
            push_line(
                &mut s,
                &format!("level {}: cells per degree [{}]", level.level, counts.join(", ")),
            );
            for (k, cells) in level.cells.iter().enumerate() {
                push_line(&mut s, &format!("  degree {k} cells: {}", cells.join(" ")));
            }
            for (k, b) in level.boundaries.iter().enumerate() {
                push_line(&mut s, &format!("  boundary {}:", k + 1));
                push_matrix(&mut s, b, "    ");
            }
            for h in &level.homology {
                push_line(&mut s, &format!("  H_{} = {}", h.degree, h.group.display));
                for g in &h.generators {
                    push_line(&mut s, &format!("    generator ({})", g.join(", ")));
                }
            }
        }
        for c in &self.connecting {
            s.push('\n');
            let origin = if c.declared { " (declared)" } else { "" };
            push_line(
                &mut s,
                &format!("connecting level {} -> {}{origin}:", c.from_level, c.to_level),
            );
            if let Some(ms) = &c.chain_matrices {
                for (k, m) in ms.iter().enumerate() {
                    push_line(&mut s, &format!("  chain degree {k}:"));
                    push_matrix(&mut s, m, "    ");
                }
            }
            for (k, m) in c.homology_matrices.iter().enumerate() {
                push_line(&mut s, &format!("  induced H_{k}:"));
                push_matrix(&mut s, m, "    ");
            }
        }
        s.push('\n');
        push_line(&mut s, "limits:");
        for l in &self.limits {
            let text = match (&l.group, &l.error) {
                (Some(g), _) => format!("  H_{} -> {}", l.degree, display_of(g)),
                (None, Some(e)) => format!("  H_{} failed: {e}", l.degree),
                (None, None) => format!("  H_{} unreported", l.degree),
            };
            push_line(&mut s, &text);
            if let Some(d) = &l.duality {
                push_line(&mut s, &format!("    note: {d}"));
            }
        }
        if let Some(g) = &self.duality_gap {
            s.push('\n');
            push_line(&mut s, "duality gap on H_0:");
            push_line(
                &mut s,
                &format!(
                    "  restricted {} -> plain {}",
                    g.restricted.display, g.plain.display
                ),
            );
            push_line(
                &mut s,
                &format!(
                    "  kernel {}, image {}, cokernel {}",
                    g.kernel.display, g.image.display, g.cokernel.display
                ),
            );
            if let Some(seq) = &g.exact_sequence {
                push_line(&mut s, &format!("  {seq}"));
            }
        }
        if let Some(e) = &self.expected {
            s.push('\n');
            if e.matched {
                push_line(&mut s, "expected: all matched");
            } else {
                push_line(&mut s, "expected: MISMATCH");
                for m in &e.mismatches {
                    push_line(&mut s, &format!("  {m}"));
                }
            }
        }
        s
    }
}

fn display_of(g: &LimitGroupData) -> &str {
    match g {
        LimitGroupData::NormalForm { display, .. } => display,
        LimitGroupData::Presentation { display, .. } => display,
        LimitGroupData::Rational { display, .. } => display,
    }
}

fn push_line(s: &mut String, line: &str) {
    s.push_str(line);
    s.push('\n');
}

fn push_matrix(s: &mut String, m: &MatrixData, indent: &str) {
    if m.rows == 0 || m.cols == 0 {
        push_line(s, &format!("{indent}[empty {} x {}]", m.rows, m.cols));
        return;
    }
    let width = m.entries.iter().flatten().map(String::len).max().unwrap_or(1);
    for row in &m.entries {
        let cells: Vec<String> = row.iter().map(|e| format!("{e:>width$}")).collect();
        push_line(s, &format!("{indent}[ {} ]", cells.join(" ")));
    }
}

/// Checks a JSON value against the subset of JSON Schema the shipped
/// report schema uses: `type` (string or list), `properties`,
/// `required`, `items`, `enum`, and boolean `additionalProperties`.
pub fn validate_schema(
    value: &serde_json::Value,
    schema: &serde_json::Value,
) -> Result<(), String> {
    fn type_name(v: &serde_json::Value) -> &'static str {
        match v {
            serde_json::Value::Null => "null",
            serde_json::Value::Bool(_) => "boolean",
            serde_json::Value::Number(n) => {
                if n.is_u64() || n.is_i64() {
                    "integer"
                } else {
                    "number"
                }
            }
            serde_json::Value::String(_) => "string",
            serde_json::Value::Array(_) => "array",
            serde_json::Value::Object(_) => "object",
        }
    }
    fn matches_type(v: &serde_json::Value, t: &str) -> bool {
        match t {
            "number" => matches!(v, serde_json::Value::Number(_)),
            other => type_name(v) == other,
        }
    }
    fn walk(
        value: &serde_json::Value,
        schema: &serde_json::Value,
        path: &str,
    ) -> Result<(), String> {
        let obj = schema
            .as_object()
            .ok_or_else(|| format!("{path}: schema node is not an object"))?;
        if let Some(t) = obj.get("type") {
            let allowed: Vec<&str> = match t {
                serde_json::Value::String(s) => vec![s.as_str()],
                serde_json::Value::Array(a) => {
                    a.iter().filter_map(serde_json::Value::as_str).collect()
                }
                _ => return Err(format!("{path}: malformed type in schema")),
            };
            if !allowed.iter().any(|t| matches_type(value, t)) {
                return Err(format!(
                    "{path}: expected {}, found {}",
                    allowed.join(" or "),
                    type_name(value)
                ));
            }
        }
        if let Some(options) = obj.get("enum").and_then(serde_json::Value::as_array) {
            if !options.contains(value) {
                return Err(format!("{path}: value is not one of the allowed constants"));
            }
        }
        if let Some(serde_json::Value::Object(props)) = obj.get("properties") {
            if let Some(map) = value.as_object() {
                if let Some(required) = obj.get("required").and_then(serde_json::Value::as_array)
                {
                    for r in required.iter().filter_map(serde_json::Value::as_str) {
                        if !map.contains_key(r) {
                            return Err(format!("{path}: missing required property {r:?}"));
                        }
                    }
                }
                if obj.get("additionalProperties") == Some(&serde_json::Value::Bool(false)) {
                    for key in map.keys() {
                        if !props.contains_key(key) {
                            return Err(format!("{path}: unexpected property {key:?}"));
                        }
                    }
                }
                for (key, sub) in props {
                    if let Some(v) = map.get(key) {
                        walk(v, sub, &format!("{path}/{key}"))?;
                    }
                }
            }
        }
        if let Some(items) = obj.get("items") {
            if let Some(arr) = value.as_array() {
                for (i, v) in arr.iter().enumerate() {
                    walk(v, items, &format!("{path}[{i}]"))?;
                }
            }
        }
        Ok(())
    }
    walk(value, schema, "$")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{compute, duality_gap, load_and_validate};
    use crate::fixtures;
    use crate::limits::LimitOptions;
    use crate::subst::PipelineOptions;

    fn options() -> OptionsSummary {
        OptionsSummary { levels: 8, horizon: 32, limit_horizon: 64, verified_depth: 12 }
    }

    fn fibonacci_report() -> PipelineReport {
        let f = fixtures::find("fibonacci").unwrap();
        let sys = SubstitutionSystem1D::from_toml_str(f.text, f.name).unwrap();
        let pipeline = sys.pe_homology_1d(&PipelineOptions::default()).unwrap();
        report_for_substitution(&sys, &pipeline, options())
    }

    fn triangle_report() -> PipelineReport {
        let f = fixtures::find("periodic-triangle").unwrap();
        let ds = load_and_validate(f.text, None).unwrap();
        let out = compute(&ds, &LimitOptions::default()).unwrap();
        let gap = duality_gap(&ds, &LimitOptions::default()).unwrap();
        report_for_dataset(&ds, &out, Some(&gap), options())
    }

    #[test]
    fn json_round_trips_losslessly() {
        for report in [fibonacci_report(), triangle_report()] {
            let json = report.to_json();
            let back: PipelineReport = serde_json::from_str(&json).unwrap();
            assert_eq!(back, report);
            assert_eq!(back.to_json(), json);
        }
    }

    #[test]
    fn repeated_runs_serialize_identically() {
        let a = fibonacci_report().to_json();
        let b = fibonacci_report().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn text_carries_the_same_group_data_as_json() {
        let report = triangle_report();
        let text = report.to_text();
        for level in &report.levels {
            for h in &level.homology {
                assert!(text.contains(&h.group.display), "missing {}", h.group.display);
            }
        }
        for l in &report.limits {
            if let Some(g) = &l.group {
                assert!(text.contains(display_of(g)));
            }
        }
        let gap = report.duality_gap.as_ref().unwrap();
        assert!(text.contains(&gap.cokernel.display));
    }

    #[test]
    fn reports_validate_against_the_shipped_schema() {
        let schema: serde_json::Value =
            serde_json::from_str(include_str!("../../../docs/report-schema.json")).unwrap();
        for report in [fibonacci_report(), triangle_report()] {
            let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
            validate_schema(&value, &schema).unwrap();
        }
        let f = fixtures::find("penrose-kite-dart").unwrap();
        let ds = load_and_validate(f.text, None).unwrap();
        let out = compute(&ds, &LimitOptions::default()).unwrap();
        let report = report_for_dataset(&ds, &out, None, options());
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        validate_schema(&value, &schema).unwrap();
        let q = fixtures::find("pentagonal-plain").unwrap();
        let ds = load_and_validate(q.text, None).unwrap();
        let out = compute(&ds, &LimitOptions::default()).unwrap();
        let report = report_for_dataset(&ds, &out, None, options());
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        validate_schema(&value, &schema).unwrap();
    }

    #[test]
    fn big_integers_survive_as_decimal_strings() {
        let huge = BigInt::parse_bytes(b"123456789012345678901234567890", 10).unwrap();
        let m = Mat::from_fn(1, 1, |_, _| huge.clone());
        let data = MatrixData::from_matrix(&m);
        assert_eq!(data.entries[0][0], "123456789012345678901234567890");
        assert_eq!(data.to_matrix().unwrap(), m);
    }

    #[test]
    fn schema_checker_flags_shape_errors() {
        let schema: serde_json::Value = serde_json::from_str(
            r#"{
                "type": "object",
                "required": ["rows"],
                "additionalProperties": false,
                "properties": {
                    "rows": {"type": "integer"},
                    "label": {"type": ["string", "null"]}
                }
            }"#,
        )
        .unwrap();
        assert!(validate_schema(&serde_json::json!({"rows": 3}), &schema).is_ok());
        assert!(validate_schema(&serde_json::json!({"rows": 3, "label": null}), &schema).is_ok());
        let missing = validate_schema(&serde_json::json!({"label": "x"}), &schema).unwrap_err();
        assert!(missing.contains("rows"), "{missing}");
        let wrong = validate_schema(&serde_json::json!({"rows": "x"}), &schema).unwrap_err();
        assert!(wrong.contains("expected integer"), "{wrong}");
        let extra =
            validate_schema(&serde_json::json!({"rows": 1, "other": 2}), &schema).unwrap_err();
        assert!(extra.contains("unexpected"), "{extra}");
    }
}
