//! Problem representation: variables, integer domains, constraints, and the
//! sub-problem extraction / constraint replacement used by the rewriting
//! pipeline.
//!
//! Every value here is immutable once built. Transformations return new
//! [`Csp`] values and never touch their input.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::automaton::Dfa;

/// Dense index of a variable inside its owning [`Csp`].
pub type VarId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CspError {
    #[error("domain is empty")]
    EmptyDomain,
    #[error("domain values must be strictly increasing")]
    UnsortedDomain,
    #[error("constraint references unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("{kind} constraint expects {expected} variables, got {found}")]
    ArityMismatch {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("table tuple has arity {found}, scope has {expected} variables")]
    TupleArity { expected: usize, found: usize },
    #[error("automaton word length {found} does not match scope length {expected}")]
    WordLength { expected: usize, found: usize },
    #[error("adjacency modulus must be positive, got {0}")]
    InvalidModulus(i64),
    #[error("channeling scope must have even length, got {0}")]
    OddChannelingScope(usize),
    #[error("constraint selection is empty")]
    EmptySelection,
    #[error("constraint index {index} out of range ({len} constraints)")]
    BadIndex { index: usize, len: usize },
    #[error("replacement scope {found:?} does not match covered variables {expected:?}")]
    ScopeMismatch {
        expected: Vec<VarId>,
        found: Vec<VarId>,
    },
}

/// A variable: its dense id and a display name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
}

/// Finite, strictly increasing set of integer values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Domain {
    values: Vec<i64>,
}

impl Domain {
    pub fn new(values: Vec<i64>) -> Result<Self, CspError> {
        if values.is_empty() {
            return Err(CspError::EmptyDomain);
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CspError::UnsortedDomain);
        }
        Ok(Domain { values })
    }

    /// Sorts and deduplicates `values` before building the domain.
    pub fn from_unsorted(mut values: Vec<i64>) -> Result<Self, CspError> {
        values.sort_unstable();
        values.dedup();
        Domain::new(values)
    }

    /// Inclusive range `lo..=hi`.
    pub fn range(lo: i64, hi: i64) -> Result<Self, CspError> {
        Domain::new((lo..=hi).collect())
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, value: i64) -> bool {
        self.values.binary_search(&value).is_ok()
    }

    pub fn min(&self) -> i64 {
        self.values[0]
    }

    pub fn max(&self) -> i64 {
        self.values[self.values.len() - 1]
    }
}

/// The relation a constraint enforces over its scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Extensional relation: the allowed tuples, one value per scope position.
    Table { tuples: Vec<Vec<i64>> },
    /// The scope, read in order, must spell a word of the automaton.
    Regular { dfa: Arc<Dfa> },
    /// `(rank(a) - rank(b)) mod modulus ∈ allowed` where `rank(v) = v mod modulus`.
    BinaryAdjacency { modulus: i64, allowed: Vec<i64> },
    /// `x < y`.
    LessThan,
    /// `x != y`.
    NotEqual,
    /// `x = value`.
    FixedAssignment { value: i64 },
    /// Scope `x_0..x_{m-1}, y_0..y_{m-1}` with `x_i = j <=> y_j = i`.
    InverseChanneling,
}

impl ConstraintKind {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintKind::Table { .. } => "table",
            ConstraintKind::Regular { .. } => "regular",
            ConstraintKind::BinaryAdjacency { .. } => "adjacency",
            ConstraintKind::LessThan => "less_than",
            ConstraintKind::NotEqual => "not_equal",
            ConstraintKind::FixedAssignment { .. } => "fixed",
            ConstraintKind::InverseChanneling => "inverse_channeling",
        }
    }
}

/// A constraint kind bound to an ordered scope of variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    kind: ConstraintKind,
    scope: Vec<VarId>,
}

impl Constraint {
    pub fn table(scope: Vec<VarId>, tuples: Vec<Vec<i64>>) -> Result<Self, CspError> {
        if let Some(t) = tuples.iter().find(|t| t.len() != scope.len()) {
            return Err(CspError::TupleArity {
                expected: scope.len(),
                found: t.len(),
            });
        }
        Ok(Constraint {
            kind: ConstraintKind::Table { tuples },
            scope,
        })
    }

    pub fn regular(scope: Vec<VarId>, dfa: Arc<Dfa>) -> Result<Self, CspError> {
        if dfa.word_len() != scope.len() {
            return Err(CspError::WordLength {
                expected: scope.len(),
                found: dfa.word_len(),
            });
        }
        Ok(Constraint {
            kind: ConstraintKind::Regular { dfa },
            scope,
        })
    }

    pub fn adjacency(x: VarId, y: VarId, modulus: i64, allowed: &[i64]) -> Result<Self, CspError> {
        if modulus <= 0 {
            return Err(CspError::InvalidModulus(modulus));
        }
        let mut allowed: Vec<i64> = allowed.iter().map(|d| d.rem_euclid(modulus)).collect();
        allowed.sort_unstable();
        allowed.dedup();
        Ok(Constraint {
            kind: ConstraintKind::BinaryAdjacency { modulus, allowed },
            scope: vec![x, y],
        })
    }

    pub fn less_than(x: VarId, y: VarId) -> Self {
        Constraint {
            kind: ConstraintKind::LessThan,
            scope: vec![x, y],
        }
    }

    pub fn not_equal(x: VarId, y: VarId) -> Self {
        Constraint {
            kind: ConstraintKind::NotEqual,
            scope: vec![x, y],
        }
    }

    pub fn fixed(x: VarId, value: i64) -> Self {
        Constraint {
            kind: ConstraintKind::FixedAssignment { value },
            scope: vec![x],
        }
    }

    pub fn inverse_channeling(xs: &[VarId], ys: &[VarId]) -> Result<Self, CspError> {
        if xs.len() != ys.len() {
            return Err(CspError::ArityMismatch {
                kind: "inverse_channeling",
                expected: 2 * xs.len(),
                found: xs.len() + ys.len(),
            });
        }
        Ok(Constraint {
            kind: ConstraintKind::InverseChanneling,
            scope: xs.iter().chain(ys).copied().collect(),
        })
    }

    /// Builds a constraint from a kind and scope, checking arity rules.
    pub fn from_parts(kind: ConstraintKind, scope: Vec<VarId>) -> Result<Self, CspError> {
        let binary = |kind: &'static str, scope: &[VarId]| {
            if scope.len() == 2 {
                Ok(())
            } else {
                Err(CspError::ArityMismatch {
                    kind,
                    expected: 2,
                    found: scope.len(),
                })
            }
        };
        match kind {
            ConstraintKind::Table { tuples } => Constraint::table(scope, tuples),
            ConstraintKind::Regular { dfa } => Constraint::regular(scope, dfa),
            ConstraintKind::BinaryAdjacency { modulus, allowed } => {
                binary("adjacency", &scope)?;
                Constraint::adjacency(scope[0], scope[1], modulus, &allowed)
            }
            ConstraintKind::LessThan => {
                binary("less_than", &scope)?;
                Ok(Constraint::less_than(scope[0], scope[1]))
            }
            ConstraintKind::NotEqual => {
                binary("not_equal", &scope)?;
                Ok(Constraint::not_equal(scope[0], scope[1]))
            }
            ConstraintKind::FixedAssignment { value } => {
                if scope.len() != 1 {
                    return Err(CspError::ArityMismatch {
                        kind: "fixed",
                        expected: 1,
                        found: scope.len(),
                    });
                }
                Ok(Constraint::fixed(scope[0], value))
            }
            ConstraintKind::InverseChanneling => {
                if !scope.len().is_multiple_of(2) {
                    return Err(CspError::OddChannelingScope(scope.len()));
                }
                let (xs, ys) = scope.split_at(scope.len() / 2);
                Constraint::inverse_channeling(xs, ys)
            }
        }
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    /// Same constraint over a different set of variable ids.
    pub fn rescoped(&self, map: impl Fn(VarId) -> VarId) -> Constraint {
        Constraint {
            kind: self.kind.clone(),
            scope: self.scope.iter().map(|&v| map(v)).collect(),
        }
    }

    /// Evaluates the relation directly on a full assignment indexed by
    /// variable id. Independent of the propagators.
    pub fn is_satisfied_by(&self, assignment: &[i64]) -> bool {
        let at = |pos: usize| assignment[self.scope[pos]];
        match &self.kind {
            ConstraintKind::Table { tuples } => {
                let word: Vec<i64> = self.scope.iter().map(|&v| assignment[v]).collect();
                tuples.contains(&word)
            }
            ConstraintKind::Regular { dfa } => {
                let word: Vec<i64> = self.scope.iter().map(|&v| assignment[v]).collect();
                dfa.accepts(&word).unwrap_or(false)
            }
            ConstraintKind::BinaryAdjacency { modulus, allowed } => {
                let diff =
                    (at(0).rem_euclid(*modulus) - at(1).rem_euclid(*modulus)).rem_euclid(*modulus);
                allowed.contains(&diff)
            }
            ConstraintKind::LessThan => at(0) < at(1),
            ConstraintKind::NotEqual => at(0) != at(1),
            ConstraintKind::FixedAssignment { value } => at(0) == *value,
            ConstraintKind::InverseChanneling => {
                let m = self.scope.len() / 2;
                let (xs, ys) = self.scope.split_at(m);
                let index = |v: i64| usize::try_from(v).ok().filter(|&i| i < m);
                xs.iter().enumerate().all(|(i, &x)| {
                    index(assignment[x]).is_some_and(|j| assignment[ys[j]] == i as i64)
                }) && ys.iter().enumerate().all(|(j, &y)| {
                    index(assignment[y]).is_some_and(|i| assignment[xs[i]] == j as i64)
                })
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.kind.name(), self.scope)
    }
}

/// Ordered, duplicate-free scope of a constraint.
pub fn scope_of(c: &Constraint) -> Vec<VarId> {
    let mut seen = HashSet::new();
    c.scope
        .iter()
        .copied()
        .filter(|v| seen.insert(*v))
        .collect()
}

/// A constraint satisfaction problem `(X, D, C)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Csp {
    variables: Vec<Variable>,
    domains: Vec<Domain>,
    constraints: Vec<Constraint>,
}

impl Csp {
    pub fn new(
        names: Vec<String>,
        domains: Vec<Domain>,
        constraints: Vec<Constraint>,
    ) -> Result<Self, CspError> {
        if names.len() != domains.len() {
            return Err(CspError::ArityMismatch {
                kind: "csp",
                expected: names.len(),
                found: domains.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(CspError::DuplicateName(name.clone()));
            }
        }
        for c in &constraints {
            if let Some(&v) = c.scope.iter().find(|&&v| v >= names.len()) {
                return Err(CspError::UnknownVariable(v));
            }
        }
        let variables = names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Variable { id, name })
            .collect();
        Ok(Csp {
            variables,
            domains,
            constraints,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn domain(&self, var: VarId) -> &Domain {
        &self.domains[var]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// True if `assignment` satisfies every constraint and every domain.
    pub fn check(&self, assignment: &[i64]) -> bool {
        assignment.len() == self.num_vars()
            && assignment
                .iter()
                .zip(&self.domains)
                .all(|(v, d)| d.contains(*v))
            && self
                .constraints
                .iter()
                .all(|c| c.is_satisfied_by(assignment))
    }

    /// Copy of this problem with different constraints over the same variables.
    pub fn with_constraints(&self, constraints: Vec<Constraint>) -> Result<Csp, CspError> {
        for c in &constraints {
            if let Some(&v) = c.scope.iter().find(|&&v| v >= self.num_vars()) {
                return Err(CspError::UnknownVariable(v));
            }
        }
        Ok(Csp {
            variables: self.variables.clone(),
            domains: self.domains.clone(),
            constraints,
        })
    }

    /// Ascending, duplicate-free union of the scopes of the selected constraints.
    pub fn covered_vars(&self, selection: &[usize]) -> Result<Vec<VarId>, CspError> {
        if selection.is_empty() {
            return Err(CspError::EmptySelection);
        }
        let mut vars = BTreeSet::new();
        for &index in selection {
            let c = self.constraints.get(index).ok_or(CspError::BadIndex {
                index,
                len: self.constraints.len(),
            })?;
            vars.extend(c.scope.iter().copied());
        }
        Ok(vars.into_iter().collect())
    }
}

/// Product of the domain cardinalities (1 for no domains).
pub fn domain_product<'a>(domains: impl IntoIterator<Item = &'a Domain>) -> BigUint {
    domains
        .into_iter()
        .fold(BigUint::from(1u8), |acc, d| acc * BigUint::from(d.len()))
}

/// Size of the search space: `∏ |D_i|`.
pub fn size_of(csp: &Csp) -> BigUint {
    domain_product(&csp.domains)
}

/// A sub-problem made of a subset of a parent's constraints over the
/// variables those constraints touch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubCsp {
    /// Local index -> parent variable id, ascending.
    parent_vars: Vec<VarId>,
    names: Vec<String>,
    domains: Vec<Domain>,
    /// Selected constraints, rescoped to local indices.
    constraints: Vec<Constraint>,
}

impl SubCsp {
    pub fn parent_vars(&self) -> &[VarId] {
        &self.parent_vars
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn size(&self) -> BigUint {
        domain_product(&self.domains)
    }

    /// Standalone problem over the local variables.
    pub fn to_csp(&self) -> Csp {
        Csp {
            variables: self
                .names
                .iter()
                .enumerate()
                .map(|(id, name)| Variable {
                    id,
                    name: name.clone(),
                })
                .collect(),
            domains: self.domains.clone(),
            constraints: self.constraints.clone(),
        }
    }
}

pub fn extract_sub_csp(csp: &Csp, selection: &[usize]) -> Result<SubCsp, CspError> {
    let parent_vars = csp.covered_vars(selection)?;
    let local = |v: VarId| parent_vars.binary_search(&v).expect("covered variable");
    let constraints = selection
        .iter()
        .map(|&i| csp.constraints[i].rescoped(local))
        .collect();
    Ok(SubCsp {
        names: parent_vars
            .iter()
            .map(|&v| csp.variables[v].name.clone())
            .collect(),
        domains: parent_vars
            .iter()
            .map(|&v| csp.domains[v].clone())
            .collect(),
        parent_vars,
        constraints,
    })
}

/// Removes the selected constraints and appends `replacement`, whose scope
/// must be exactly the ascending union of the selected scopes.
pub fn replace_constraints(
    csp: &Csp,
    selection: &[usize],
    replacement: Constraint,
) -> Result<Csp, CspError> {
    replace_many(csp, vec![(selection.to_vec(), replacement)])
}

/// Applies several disjoint replacements at once; replacements are
/// appended in the given order after the surviving constraints.
pub fn replace_many(
    csp: &Csp,
    replacements: Vec<(Vec<usize>, Constraint)>,
) -> Result<Csp, CspError> {
    let mut removed = vec![false; csp.constraints.len()];
    for (selection, replacement) in &replacements {
        let expected = csp.covered_vars(selection)?;
        if replacement.scope != expected {
            return Err(CspError::ScopeMismatch {
                expected,
                found: replacement.scope.clone(),
            });
        }
        for &i in selection {
            removed[i] = true;
        }
    }
    let constraints = csp
        .constraints
        .iter()
        .zip(&removed)
        .filter(|(_, &gone)| !gone)
        .map(|(c, _)| c.clone())
        .chain(replacements.into_iter().map(|(_, c)| c))
        .collect();
    Ok(Csp {
        variables: csp.variables.clone(),
        domains: csp.domains.clone(),
        constraints,
    })
}

/// Convenience builder that hands out dense variable ids.
#[derive(Default)]
pub struct CspBuilder {
    names: Vec<String>,
    domains: Vec<Domain>,
    constraints: Vec<Constraint>,
}

impl CspBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: impl Into<String>, domain: Domain) -> VarId {
        self.names.push(name.into());
        self.domains.push(domain);
        self.names.len() - 1
    }

    pub fn post(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn build(self) -> Result<Csp, CspError> {
        Csp::new(self.names, self.domains, self.constraints)
    }
}
