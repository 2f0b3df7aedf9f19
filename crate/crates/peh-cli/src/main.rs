//! Command-line interface for the homology pipeline.
//!
//! Inputs are resolved in three steps: an existing filesystem path wins,
//! then a directory named by the `PEH_FIXTURES` environment variable is
//! searched, then the catalog of bundled examples. TOML files describe
//! one-dimensional substitution systems, JSON files describe approximant
//! datasets.
//!
//! Exit codes: 0 on success, 1 when the input could not be parsed or
//! failed validation, 2 when a computation could not be completed or the
//! result contradicts the input's bundled expectations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;

use peh::dataset::{
    self, compute, dagger_transform, duality_gap, parse_document, validate_document,
    CoefficientMode,
};
use peh::fixtures::{self, FixtureKind};
use peh::group::AbelianGroup;
use peh::limits::{stationary_limit, LimitOptions};
use peh::matrix::Mat;
use peh::report::{
    report_for_dataset, report_for_substitution, LimitGroupData, MatrixData, OptionsSummary,
    PipelineReport,
};
use peh::snf::smith_normal_form;
use peh::subst::{PipelineOptions, SubstitutionSystem1D};
use peh::{IntMatrix, PehError};

#[derive(Parser)]
#[command(
    name = "peh",
    about = "Exact pattern-equivariant homology of hierarchical tilings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Z,
    Q,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: complexes, homology, connecting maps,
    /// limits.
    Compute {
        /// Path, bundled example name, or name under PEH_FIXTURES.
        input: String,
        /// Number of hierarchy levels to generate for substitutions.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        /// Iteration cap for the legal-pair census.
        #[arg(long, default_value_t = 32)]
        horizon: usize,
        /// Iteration cap for direct-limit stabilization and membership.
        #[arg(long, default_value_t = 64)]
        limit_horizon: usize,
        /// Divisibility depth certified before accepting a localized
        /// summand.
        #[arg(long, default_value_t = 12)]
        verified_depth: usize,
        /// Restrict degree-0 chains to isotropy multiples before
        /// computing (datasets only).
        #[arg(long)]
        dagger: bool,
        /// Override the dataset's coefficient mode.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify the limit of a stationary system of free groups given by
    /// one square integer matrix.
    Limit {
        /// Path to a matrix file: a JSON array of arrays, or whitespace
        /// rows.
        input: String,
        #[arg(long, default_value_t = 64)]
        limit_horizon: usize,
        #[arg(long, default_value_t = 12)]
        verified_depth: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the Smith normal form U A V = D of an integer matrix.
    Snf {
        /// Path to a matrix file: a JSON array of arrays, or whitespace
        /// rows.
        input: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse an input and run every validation check without computing.
    Validate {
        input: String,
        /// Override the dataset's coefficient mode.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the bundled example inputs.
    Examples {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

enum CliError {
    Input(String),
    Computation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Computation(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Computation(m) => m,
        }
    }
}

impl From<PehError> for CliError {
    fn from(e: PehError) -> CliError {
        let message = e.to_string();
        if e.is_input_error() {
            CliError::Input(message)
        } else {
            CliError::Computation(message)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // bad input.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compute {
            input,
            levels,
            horizon,
            limit_horizon,
            verified_depth,
            dagger,
            mode,
            format,
            output,
        } => {
            let options = OptionsSummary { levels, horizon, limit_horizon, verified_depth };
            cmd_compute(&input, options, dagger, mode, format, output.as_deref())
        }
        Command::Limit { input, limit_horizon, verified_depth, format, output } => {
            let opts = LimitOptions { membership_horizon: limit_horizon, verified_depth };
            cmd_limit(&input, &opts, format, output.as_deref())
        }
        Command::Snf { input, format, output } => cmd_snf(&input, format, output.as_deref()),
        Command::Validate { input, mode, format, output } => {
            cmd_validate(&input, mode, format, output.as_deref())
        }
        Command::Examples { format } => cmd_examples(format),
    }
}

/// A resolved input: where it came from and what it holds.
struct ResolvedInput {
    name: String,
    kind: FixtureKind,
    text: String,
}

fn sniff_kind(path: &Path, text: &str) -> FixtureKind {
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => FixtureKind::Substitution,
        Some("json") => FixtureKind::Dataset,
        _ => {
            if text.trim_start().starts_with('{') {
                FixtureKind::Dataset
            } else {
                FixtureKind::Substitution
            }
        }
    }
}

fn read_input_file(path: &Path) -> Result<ResolvedInput, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("input")
        .to_string();
    let kind = sniff_kind(path, &text);
    Ok(ResolvedInput { name, kind, text })
}

fn resolve_input(spec: &str) -> Result<ResolvedInput, CliError> {
    let as_path = Path::new(spec);
    if as_path.is_file() {
        return read_input_file(as_path);
    }
    if let Ok(dir) = std::env::var("PEH_FIXTURES") {
        let dir = Path::new(&dir);
        for candidate in [
            dir.join(spec),
            dir.join(format!("{spec}.toml")),
            dir.join(format!("{spec}.json")),
        ] {
            if candidate.is_file() {
                return read_input_file(&candidate);
            }
        }
    }
    if let Some(f) = fixtures::find(spec) {
        return Ok(ResolvedInput {
            name: f.name.to_string(),
            kind: f.kind,
            text: f.text.to_string(),
        });
    }
    Err(CliError::Input(format!(
        "no such input: {spec:?} is not a file, not under PEH_FIXTURES, and not a bundled \
         example (run `peh examples` for the list)"
    )))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_report(report: &PipelineReport, format: Format) -> String {
    match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    }
}

fn mode_override(mode: Option<Mode>) -> Option<CoefficientMode> {
    mode.map(|m| match m {
        Mode::Z => CoefficientMode::Integers,
        Mode::Q => CoefficientMode::Rationals,
    })
}

fn cmd_compute(
    input: &str,
    options: OptionsSummary,
    dagger: bool,
    mode: Option<Mode>,
    format: Format,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let resolved = resolve_input(input)?;
    let report = match resolved.kind {
        FixtureKind::Substitution => {
            if dagger {
                return Err(CliError::Input(
                    "the degree-0 restriction applies to datasets with isotropy data; \
                     substitution cells have no isotropy"
                        .into(),
                ));
            }
            if mode == Some(Mode::Q) {
                return Err(CliError::Input(
                    "substitution pipelines run over the integers; rational mode applies to \
                     datasets"
                        .into(),
                ));
            }
            let sys = SubstitutionSystem1D::from_toml_str(&resolved.text, &resolved.name)
                .map_err(CliError::from)?;
            let pipeline_opts = PipelineOptions {
                levels: options.levels,
                horizon: options.horizon,
                limit: LimitOptions {
                    membership_horizon: options.limit_horizon,
                    verified_depth: options.verified_depth,
                },
            };
            let pipeline = sys.pe_homology_1d(&pipeline_opts).map_err(CliError::from)?;
            report_for_substitution(&sys, &pipeline, options)
        }
        FixtureKind::Dataset => {
            let ds = dataset::load_and_validate(&resolved.text, mode_override(mode))
                .map_err(CliError::from)?;
            let limit_opts = LimitOptions {
                membership_horizon: options.limit_horizon,
                verified_depth: options.verified_depth,
            };
            if dagger {
                if ds.mode != CoefficientMode::Integers {
                    return Err(CliError::Input(
                        "the degree-0 restriction is an integral construction; run it in \
                         integer mode"
                            .into(),
                    ));
                }
                let gap = duality_gap(&ds, &limit_opts).map_err(CliError::from)?;
                let restricted = dagger_transform(&ds).map_err(CliError::from)?;
                let out = compute(&restricted, &limit_opts).map_err(CliError::from)?;
                report_for_dataset(&restricted, &out, Some(&gap), options)
            } else {
                let out = compute(&ds, &limit_opts).map_err(CliError::from)?;
                report_for_dataset(&ds, &out, None, options)
            }
        }
    };
    emit(&render_report(&report, format), output)?;
    if let Some(expected) = &report.expected {
        if !expected.matched {
            return Err(CliError::Computation(format!(
                "computed output contradicts the input's expectations: {}",
                expected.mismatches.join("; ")
            )));
        }
    }
    Ok(())
}

fn parse_matrix(text: &str) -> Result<IntMatrix, String> {
    let rows: Vec<Vec<BigInt>> = if text.trim_start().starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("bad JSON matrix: {e}"))?;
        let outer = value.as_array().ok_or("expected an array of arrays")?;
        let mut rows = Vec::new();
        for row in outer {
            let inner = row.as_array().ok_or("expected an array of arrays")?;
            let mut out = Vec::new();
            for entry in inner {
                let n = match entry {
                    serde_json::Value::Number(n) => n
                        .as_i64()
                        .map(BigInt::from)
                        .ok_or_else(|| format!("entry {n} is not an integer"))?,
                    serde_json::Value::String(s) => {
                        s.parse::<BigInt>().map_err(|_| format!("bad integer {s:?}"))?
                    }
                    other => return Err(format!("entry {other} is not an integer")),
                };
                out.push(n);
            }
            rows.push(out);
        }
        rows
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split_whitespace()
                    .map(|tok| tok.parse::<BigInt>().map_err(|_| format!("bad integer {tok:?}")))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if rows.is_empty() {
        return Err("matrix has no rows".into());
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err("matrix rows have unequal lengths".into());
    }
    let mat = Mat::from_fn(rows.len(), cols, |i, j| rows[i][j].clone());
    Ok(mat)
}

fn read_matrix(input: &str) -> Result<IntMatrix, CliError> {
    let path = Path::new(input);
    let text = if path.is_file() {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?
    } else if input.trim_start().starts_with('[') {
        // Allow passing the matrix inline.
        input.to_string()
    } else {
        return Err(CliError::Input(format!("no such file: {input:?}")));
    };
    parse_matrix(&text).map_err(CliError::Input)
}

fn cmd_limit(
    input: &str,
    opts: &LimitOptions,
    format: Format,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let m = read_matrix(input)?;
    if !m.is_square() || m.rows() == 0 {
        return Err(CliError::Input(format!(
            "the stationary map must be a nonempty square matrix, got {} x {}",
            m.rows(),
            m.cols()
        )));
    }
    let group = AbelianGroup::free(m.rows());
    let limit = stationary_limit(&group, &m, opts).map_err(CliError::from)?;
    let text = match format {
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "stationary system on Z^{}", m.rows());
            let _ = writeln!(s, "map:");
            for line in matrix_lines(&m) {
                let _ = writeln!(s, "  {line}");
            }
            let _ = writeln!(s, "limit: {limit}");
            s
        }
        Format::Json => {
            let value = serde_json::json!({
                "rank": m.rows(),
                "map": MatrixData::from_matrix(&m),
                "limit": LimitGroupData::from_limit(&limit),
            });
            let mut s = serde_json::to_string_pretty(&value).expect("serializes");
            s.push('\n');
            s
        }
    };
    emit(&text, output)
}

fn matrix_lines(m: &IntMatrix) -> Vec<String> {
    let width = (0..m.rows())
        .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].to_string().len())
        .max()
        .unwrap_or(1);
    (0..m.rows())
        .map(|i| {
            let cells: Vec<String> =
                (0..m.cols()).map(|j| format!("{:>width$}", m[(i, j)].to_string())).collect();
            format!("[ {} ]", cells.join(" "))
        })
        .collect()
}

fn cmd_snf(input: &str, format: Format, output: Option<&Path>) -> Result<(), CliError> {
    let m = read_matrix(input)?;
    let s = smith_normal_form(&m);
    let text = match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "U A V = D with U, V unimodular");
            for (label, mat) in [("U", &s.u), ("D", &s.d), ("V", &s.v)] {
                let _ = writeln!(out, "{label}:");
                for line in matrix_lines(mat) {
                    let _ = writeln!(out, "  {line}");
                }
            }
            let factors: Vec<String> =
                s.invariant_factors.iter().map(BigInt::to_string).collect();
            let _ = writeln!(out, "rank: {}", s.rank);
            let _ = writeln!(out, "invariant factors: [{}]", factors.join(", "));
            out
        }
        Format::Json => {
            let value = serde_json::json!({
                "u": MatrixData::from_matrix(&s.u),
                "u_inv": MatrixData::from_matrix(&s.u_inv),
                "d": MatrixData::from_matrix(&s.d),
                "v": MatrixData::from_matrix(&s.v),
                "v_inv": MatrixData::from_matrix(&s.v_inv),
                "rank": s.rank,
                "invariant_factors": s.invariant_factors.iter().map(BigInt::to_string).collect::<Vec<_>>(),
            });
            let mut out = serde_json::to_string_pretty(&value).expect("serializes");
            out.push('\n');
            out
        }
    };
    emit(&text, output)
}

fn validation_outcome(
    name: &str,
    violations: &[dataset::Violation],
    format: Format,
) -> String {
    match format {
        Format::Text => {
            let mut s = String::new();
            if violations.is_empty() {
                let _ = writeln!(s, "{name}: valid");
            } else {
                let _ = writeln!(s, "{name}: INVALID ({} problem(s))", violations.len());
                for v in violations {
                    let _ = writeln!(s, "  [{}] {}", v.check, v.detail);
                }
            }
            s
        }
        Format::Json => {
            let value = serde_json::json!({
                "name": name,
                "valid": violations.is_empty(),
                "violations": violations
                    .iter()
                    .map(|v| serde_json::json!({"check": v.check, "detail": v.detail}))
                    .collect::<Vec<_>>(),
            });
            let mut s = serde_json::to_string_pretty(&value).expect("serializes");
            s.push('\n');
            s
        }
    }
}

fn cmd_validate(
    input: &str,
    mode: Option<Mode>,
    format: Format,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let resolved = resolve_input(input)?;
    let violations: Vec<dataset::Violation> = match resolved.kind {
        FixtureKind::Substitution => {
            let sys = SubstitutionSystem1D::from_toml_str(&resolved.text, &resolved.name)
                .map_err(CliError::from)?;
            // A short pipeline run exercises the structural checks: pair
            // closure, chain commutation, connecting consistency.
            let opts = PipelineOptions { levels: 2, ..PipelineOptions::default() };
            match sys.pe_homology_1d(&opts) {
                Ok(_) => Vec::new(),
                Err(e) if e.is_input_error() => vec![violation_of(e)],
                Err(e) => return Err(CliError::from(e)),
            }
        }
        FixtureKind::Dataset => {
            let doc = parse_document(&resolved.text).map_err(CliError::from)?;
            match validate_document(&doc, mode_override(mode)) {
                Ok(_) => Vec::new(),
                Err(violations) => violations,
            }
        }
    };
    let valid = violations.is_empty();
    emit(&validation_outcome(&resolved.name, &violations, format), output)?;
    if valid {
        Ok(())
    } else {
        Err(CliError::Input("validation failed".into()))
    }
}

fn violation_of(e: PehError) -> dataset::Violation {
    match e {
        PehError::InvariantViolation { check, detail } => dataset::Violation { check, detail },
        other => dataset::Violation { check: "structure".into(), detail: other.to_string() },
    }
}

fn cmd_examples(format: Format) -> Result<(), CliError> {
    let text = match format {
        Format::Text => {
            let name_width =
                fixtures::FIXTURES.iter().map(|f| f.name.len()).max().unwrap_or(4).max(4);
            let kind_width = fixtures::FIXTURES
                .iter()
                .map(|f| f.kind.label().len())
                .max()
                .unwrap_or(4)
                .max(4);
            let mut s = String::new();
            let _ = writeln!(s, "{:name_width$}  {:kind_width$}  summary", "name", "kind");
            for f in fixtures::FIXTURES {
                let _ = writeln!(
                    s,
                    "{:name_width$}  {:kind_width$}  {}",
                    f.name,
                    f.kind.label(),
                    f.summary
                );
            }
            s
        }
        Format::Json => {
            let value: Vec<serde_json::Value> = fixtures::FIXTURES
                .iter()
                .map(|f| {
                    serde_json::json!({
                        "name": f.name,
                        "file": f.file_name,
                        "kind": f.kind.label(),
                        "summary": f.summary,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&value).expect("serializes");
            s.push('\n');
            s
        }
    };
    emit(&text, None)
}
