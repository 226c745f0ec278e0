//! JSON model files.
//!
//! ```json
//! {
//!   "variables": [
//!     {"name": "x", "domain": [1, 2, 3]},
//!     {"name": "y", "domain": {"min": 0, "max": 51}}
//!   ],
//!   "constraints": [
//!     {"kind": "less_than", "scope": ["x", "y"]},
//!     {"kind": "adjacency", "scope": ["x", "y"], "modulus": 13, "allowed": [1, 12]},
//!     {"kind": "table", "scope": ["x", "y"], "tuples": [[1, 2], [2, 3]]},
//!     {"kind": "regular", "scope": ["x", "y"], "dfa": {
//!         "states": 3, "start": 0, "finals": [2], "word_length": 2,
//!         "transitions": [[0, 1, 1], [1, 2, 2]]}},
//!     {"kind": "not_equal", "scope": ["x", "y"]},
//!     {"kind": "fixed", "scope": ["x"], "value": 1},
//!     {"kind": "inverse_channeling", "scope": ["x", "y"]}
//!   ]
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Dfa, DfaData};
use crate::csp::{Constraint, ConstraintKind, Csp, Domain};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model: {0}")]
    Semantic(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    variables: Vec<VarEntry>,
    #[serde(default)]
    constraints: Vec<ConstraintEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarEntry {
    name: String,
    domain: DomainEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum DomainEntry {
    Values(Vec<i64>),
    Range { min: i64, max: i64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ConstraintEntry {
    Table {
        scope: Vec<String>,
        tuples: Vec<Vec<i64>>,
    },
    Regular {
        scope: Vec<String>,
        dfa: DfaData,
    },
    Adjacency {
        scope: Vec<String>,
        modulus: i64,
        allowed: Vec<i64>,
    },
    LessThan {
        scope: Vec<String>,
    },
    NotEqual {
        scope: Vec<String>,
    },
    Fixed {
        scope: Vec<String>,
        value: i64,
    },
    InverseChanneling {
        scope: Vec<String>,
    },
}

fn semantic(e: impl std::fmt::Display) -> ModelError {
    ModelError::Semantic(e.to_string())
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<Csp, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut names = Vec::with_capacity(doc.variables.len());
    let mut domains = Vec::with_capacity(doc.variables.len());
    for v in doc.variables {
        let domain = match v.domain {
            DomainEntry::Values(values) => Domain::new(values),
            DomainEntry::Range { min, max } => Domain::range(min, max),
        }
        .map_err(|e| semantic(format!("variable `{}`: {e}", v.name)))?;
        names.push(v.name);
        domains.push(domain);
    }
    let lookup = |scope: &[String]| -> Result<Vec<usize>, ModelError> {
        scope
            .iter()
            .map(|n| {
                names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| semantic(format!("unknown variable `{n}`")))
            })
            .collect()
    };
    let mut constraints = Vec::with_capacity(doc.constraints.len());
    for (i, entry) in doc.constraints.into_iter().enumerate() {
        let (kind, scope) = match entry {
            ConstraintEntry::Table { scope, tuples } => (ConstraintKind::Table { tuples }, scope),
            ConstraintEntry::Regular { scope, dfa } => {
                let dfa =
                    Dfa::try_from(dfa).map_err(|e| semantic(format!("constraint {i}: {e}")))?;
                (ConstraintKind::Regular { dfa: Arc::new(dfa) }, scope)
            }
            ConstraintEntry::Adjacency {
                scope,
                modulus,
                allowed,
            } => (ConstraintKind::BinaryAdjacency { modulus, allowed }, scope),
            ConstraintEntry::LessThan { scope } => (ConstraintKind::LessThan, scope),
            ConstraintEntry::NotEqual { scope } => (ConstraintKind::NotEqual, scope),
            ConstraintEntry::Fixed { scope, value } => {
                (ConstraintKind::FixedAssignment { value }, scope)
            }
            ConstraintEntry::InverseChanneling { scope } => {
                (ConstraintKind::InverseChanneling, scope)
            }
        };
        let scope = lookup(&scope)?;
        constraints.push(
            Constraint::from_parts(kind, scope)
                .map_err(|e| semantic(format!("constraint {i}: {e}")))?,
        );
    }
    Csp::new(names, domains, constraints).map_err(semantic)
}

/// Renders `csp` as a model document.
pub fn model_to_string(csp: &Csp) -> String {
    let name = |v: usize| csp.variables()[v].name.clone();
    let doc = ModelDoc {
        variables: csp
            .variables()
            .iter()
            .zip(csp.domains())
            .map(|(v, d)| VarEntry {
                name: v.name.clone(),
                domain: if d.max() - d.min() + 1 == d.len() as i64 && d.len() > 2 {
                    DomainEntry::Range {
                        min: d.min(),
                        max: d.max(),
                    }
                } else {
                    DomainEntry::Values(d.values().to_vec())
                },
            })
            .collect(),
        constraints: csp
            .constraints()
            .iter()
            .map(|c| {
                let scope: Vec<String> = c.scope().iter().map(|&v| name(v)).collect();
                match c.kind() {
                    ConstraintKind::Table { tuples } => ConstraintEntry::Table {
                        scope,
                        tuples: tuples.clone(),
                    },
                    ConstraintKind::Regular { dfa } => ConstraintEntry::Regular {
                        scope,
                        dfa: DfaData::from(dfa.as_ref().clone()),
                    },
                    ConstraintKind::BinaryAdjacency { modulus, allowed } => {
                        ConstraintEntry::Adjacency {
                            scope,
                            modulus: *modulus,
                            allowed: allowed.clone(),
                        }
                    }
                    ConstraintKind::LessThan => ConstraintEntry::LessThan { scope },
                    ConstraintKind::NotEqual => ConstraintEntry::NotEqual { scope },
                    ConstraintKind::FixedAssignment { value } => ConstraintEntry::Fixed {
                        scope,
                        value: *value,
                    },
                    ConstraintKind::InverseChanneling => {
                        ConstraintEntry::InverseChanneling { scope }
                    }
                }
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
    text.push('\n');
    text
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Csp, ModelError> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn save_model(csp: &Csp, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, model_to_string(csp))?;
    Ok(())
}
