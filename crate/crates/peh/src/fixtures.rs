//! Bundled example systems and datasets.
//!
//! Each fixture is embedded in the library so the command-line tool and
//! the tests work without any files on disk; a directory of replacement
//! fixtures can still be pointed at by name. One-dimensional systems are
//! TOML substitution descriptions, higher-dimensional hierarchies are
//! JSON approximant datasets. Every fixture carries golden expectations
//! that the test suite checks against the computed output.

/// What kind of input a fixture holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    /// A one-dimensional substitution system in TOML.
    Substitution,
    /// An approximant dataset in JSON.
    Dataset,
}

impl FixtureKind {
    pub fn label(self) -> &'static str {
        match self {
            FixtureKind::Substitution => "substitution-1d",
            FixtureKind::Dataset => "approximant-dataset",
        }
    }
}

/// One bundled input with a short description for listings.
pub struct Fixture {
    pub name: &'static str,
    pub file_name: &'static str,
    pub kind: FixtureKind,
    pub summary: &'static str,
    pub text: &'static str,
}

/// All bundled fixtures, in listing order.
pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "fibonacci",
        file_name: "fibonacci.toml",
        kind: FixtureKind::Substitution,
        summary: "golden-mean substitution 0 -> 01, 1 -> 0",
        text: include_str!("../fixtures/fibonacci.toml"),
    },
    Fixture {
        name: "thue-morse",
        file_name: "thue-morse.toml",
        kind: FixtureKind::Substitution,
        summary: "Thue-Morse substitution 0 -> 01, 1 -> 10",
        text: include_str!("../fixtures/thue-morse.toml"),
    },
    Fixture {
        name: "arnoux-rauzy-3",
        file_name: "arnoux-rauzy-3.toml",
        kind: FixtureKind::Substitution,
        summary: "three-letter Arnoux-Rauzy tower, rules cycling 1, 2, 3",
        text: include_str!("../fixtures/arnoux-rauzy-3.toml"),
    },
    Fixture {
        name: "dyadic",
        file_name: "dyadic.toml",
        kind: FixtureKind::Substitution,
        summary: "period-doubling solenoid base a -> aa",
        text: include_str!("../fixtures/dyadic.toml"),
    },
    Fixture {
        name: "penrose-kite-dart",
        file_name: "penrose-kite-dart.json",
        kind: FixtureKind::Dataset,
        summary: "Penrose kite-and-dart tiling up to rigid motions",
        text: include_str!("../fixtures/penrose-kite-dart.json"),
    },
    Fixture {
        name: "pentagonal-bs",
        file_name: "pentagonal-bs.json",
        kind: FixtureKind::Dataset,
        summary: "barycentric pentagonal hierarchy with isotropy 2, 3, 4, 5",
        text: include_str!("../fixtures/pentagonal-bs.json"),
    },
    Fixture {
        name: "pentagonal-plain",
        file_name: "pentagonal-plain.json",
        kind: FixtureKind::Dataset,
        summary: "pentagonal hierarchy over the rationals, one reversible edge class",
        text: include_str!("../fixtures/pentagonal-plain.json"),
    },
    Fixture {
        name: "periodic-triangle",
        file_name: "periodic-triangle.json",
        kind: FixtureKind::Dataset,
        summary: "periodic triangle tiling up to rigid motions",
        text: include_str!("../fixtures/periodic-triangle.json"),
    },
    Fixture {
        name: "periodic-square",
        file_name: "periodic-square.json",
        kind: FixtureKind::Dataset,
        summary: "periodic square tiling up to rigid motions",
        text: include_str!("../fixtures/periodic-square.json"),
    },
    Fixture {
        name: "periodic-square-translation",
        file_name: "periodic-square-translation.json",
        kind: FixtureKind::Dataset,
        summary: "periodic square tiling up to translations only",
        text: include_str!("../fixtures/periodic-square-translation.json"),
    },
];

/// Looks a fixture up by its listing name or its file name.
pub fn find(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name || f.file_name == name)
}
