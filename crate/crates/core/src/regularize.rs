//! Model rewriting: solve small sub-problems exhaustively and replace their
//! constraints by a single regular (or table) constraint.
//!
//! Four rewriting modes are supported:
//! - `original`: no change.
//! - `table`: each selection becomes a table of its solutions.
//! - `regular`: each selection becomes a regular constraint compiled from
//!   its solutions (prefix tree, then layer-wise minimization).
//! - `regular-intersected`: as `regular`, then chains of regular
//!   constraints sharing variables are merged by automaton intersection
//!   while the product stays within a state budget.
//!
//! Emitted constraints always list their variables in ascending id order.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use thiserror::Error;

use crate::automaton::{build_dfa, intersect_bounded, lift, minimize, AutomatonError, Dfa};
use crate::csp::{
    domain_product, extract_sub_csp, replace_many, Constraint, ConstraintKind, Csp, CspError, VarId,
};
use crate::par::Execution;
use crate::search::{enumerate_all, SearchError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegularizeError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("constraint {0} appears in more than one selection")]
    OverlappingSelections(usize),
    #[error("intersection exceeded the state budget of {0}")]
    BudgetExceeded(usize),
    #[error("intersection needs at least two regular constraints")]
    TooFewRegulars,
    #[error("constraint {0} is not a regular constraint")]
    NotRegular(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Original,
    Table,
    Regular,
    RegularIntersected,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Original,
        Mode::Table,
        Mode::Regular,
        Mode::RegularIntersected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Original => "original",
            Mode::Table => "table",
            Mode::Regular => "regular",
            Mode::RegularIntersected => "regular-intersected",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// Which constraints get compiled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selection {
    /// Disjoint groups of constraint indices, used as given.
    Explicit(Vec<Vec<usize>>),
    /// Greedy grouping of overlapping constraints while the grouped
    /// sub-problem's search space stays at or below the threshold.
    Auto { threshold: BigUint },
}

#[derive(Clone, Debug)]
pub struct RegularizeConfig {
    pub mode: Mode,
    pub selection: Selection,
    /// Maximum number of sub-problem solutions to compile.
    pub solution_cap: usize,
    /// Maximum product states while intersecting automata.
    pub state_budget: usize,
    /// How independent selections are compiled.
    pub execution: Execution,
}

pub const DEFAULT_AUTO_THRESHOLD: u64 = 1_000_000;
pub const DEFAULT_SOLUTION_CAP: usize = 1_000_000;
pub const DEFAULT_STATE_BUDGET: usize = 100_000;

impl Default for RegularizeConfig {
    fn default() -> Self {
        RegularizeConfig {
            mode: Mode::Regular,
            selection: Selection::Auto {
                threshold: BigUint::from(DEFAULT_AUTO_THRESHOLD),
            },
            solution_cap: DEFAULT_SOLUTION_CAP,
            state_budget: DEFAULT_STATE_BUDGET,
            execution: Execution::default(),
        }
    }
}

impl RegularizeConfig {
    pub fn new(mode: Mode, selection: Selection) -> Self {
        RegularizeConfig {
            mode,
            selection,
            ..Default::default()
        }
    }
}

/// What happened to one selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionReport {
    pub selection: Vec<usize>,
    pub sub_csp_size: BigUint,
    /// Number of sub-problem solutions.
    pub solutions: usize,
    /// Automaton size before and after minimization (regular modes only).
    pub states_before: Option<usize>,
    pub states_after: Option<usize>,
    pub elapsed: Duration,
}

/// One merged group in `regular-intersected` mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionReport {
    /// Original constraint indices covered by the merged constraint.
    pub selection: Vec<usize>,
    /// Number of regular constraints folded together.
    pub members: usize,
    pub scope_len: usize,
    pub states: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegularizeReport {
    pub entries: Vec<SelectionReport>,
    pub intersections: Vec<IntersectionReport>,
    pub total: Duration,
}

impl RegularizeReport {
    pub fn total_ms(&self) -> f64 {
        self.total.as_secs_f64() * 1e3
    }
}

/// Kinds the automatic grouping may pick.
fn auto_candidate(c: &Constraint) -> bool {
    !matches!(
        c.kind(),
        ConstraintKind::Table { .. }
            | ConstraintKind::Regular { .. }
            | ConstraintKind::InverseChanneling
    )
}

fn size_of_vars(csp: &Csp, vars: &BTreeSet<VarId>) -> BigUint {
    domain_product(vars.iter().map(|&v| csp.domain(v)))
}

pub fn select_candidates(
    csp: &Csp,
    cfg: &RegularizeConfig,
) -> Result<Vec<Vec<usize>>, RegularizeError> {
    match &cfg.selection {
        Selection::Explicit(groups) => {
            let mut seen = BTreeSet::new();
            for group in groups {
                csp.covered_vars(group)?;
                for &i in group {
                    if !seen.insert(i) {
                        return Err(RegularizeError::OverlappingSelections(i));
                    }
                }
            }
            Ok(groups.clone())
        }
        Selection::Auto { threshold } => {
            let constraints = csp.constraints();
            let mut used = vec![false; constraints.len()];
            let mut groups = Vec::new();
            for i in 0..constraints.len() {
                if used[i] || !auto_candidate(&constraints[i]) {
                    continue;
                }
                let mut vars: BTreeSet<VarId> = constraints[i].scope().iter().copied().collect();
                if size_of_vars(csp, &vars) > *threshold {
                    continue;
                }
                used[i] = true;
                let mut group = vec![i];
                loop {
                    let mut grew = false;
                    for j in i + 1..constraints.len() {
                        let c = &constraints[j];
                        if used[j]
                            || !auto_candidate(c)
                            || !c.scope().iter().any(|v| vars.contains(v))
                        {
                            continue;
                        }
                        let mut union = vars.clone();
                        union.extend(c.scope().iter().copied());
                        if size_of_vars(csp, &union) <= *threshold {
                            vars = union;
                            used[j] = true;
                            group.push(j);
                            grew = true;
                        }
                    }
                    if !grew {
                        break;
                    }
                }
                group.sort_unstable();
                groups.push(group);
            }
            Ok(groups)
        }
    }
}

struct Compiled {
    scope: Vec<VarId>,
    tuples: Vec<Vec<i64>>,
    report: SelectionReport,
    started: Instant,
}

fn solve_selection(
    csp: &Csp,
    selection: &[usize],
    cap: usize,
) -> Result<Compiled, RegularizeError> {
    let started = Instant::now();
    let sub = extract_sub_csp(csp, selection)?;
    let (solutions, _) = enumerate_all(&sub.to_csp(), Some(cap), None)?;
    let report = SelectionReport {
        selection: selection.to_vec(),
        sub_csp_size: sub.size(),
        solutions: solutions.len(),
        states_before: None,
        states_after: None,
        elapsed: Duration::ZERO,
    };
    Ok(Compiled {
        scope: sub.parent_vars().to_vec(),
        tuples: solutions.into_tuples(),
        report,
        started,
    })
}

/// Compiles the selection's sub-problem into one minimized regular
/// constraint over the covered variables. An unsatisfiable sub-problem
/// yields an empty-language constraint.
pub fn regularize_selection(
    csp: &Csp,
    selection: &[usize],
    cap: usize,
) -> Result<(Constraint, SelectionReport), RegularizeError> {
    let Compiled {
        scope,
        tuples,
        mut report,
        started,
    } = solve_selection(csp, selection, cap)?;
    let domains: Vec<_> = scope.iter().map(|&v| csp.domain(v).clone()).collect();
    let dfa = if tuples.is_empty() {
        Dfa::empty(
            scope.len(),
            domains.iter().flat_map(|d| d.values().to_vec()),
        )
    } else {
        let solutions = crate::automaton::SolutionSet::from_distinct(scope.len(), tuples);
        build_dfa(&solutions, &domains)?
    };
    report.states_before = Some(dfa.num_states());
    let dfa = minimize(&dfa);
    report.states_after = Some(dfa.num_states());
    report.elapsed = started.elapsed();
    Ok((Constraint::regular(scope, Arc::new(dfa))?, report))
}

/// Same as [`regularize_selection`] but emits the solutions as a table.
pub fn tabulate_selection(
    csp: &Csp,
    selection: &[usize],
    cap: usize,
) -> Result<(Constraint, SelectionReport), RegularizeError> {
    let Compiled {
        scope,
        tuples,
        mut report,
        started,
    } = solve_selection(csp, selection, cap)?;
    report.elapsed = started.elapsed();
    Ok((Constraint::table(scope, tuples)?, report))
}

fn regular_dfa(c: &Constraint) -> Result<&Dfa, RegularizeError> {
    match c.kind() {
        ConstraintKind::Regular { dfa } => Ok(dfa),
        _ => Err(RegularizeError::NotRegular(c.to_string())),
    }
}

/// Merges regular constraints into one over the union of their scopes:
/// each automaton is lifted onto the union (wildcard layers use the
/// current domains), then they are intersected left to right with
/// minimization after each step.
pub fn intersect_regulars(
    csp: &Csp,
    regulars: &[Constraint],
    budget: usize,
) -> Result<Constraint, RegularizeError> {
    if regulars.len() < 2 {
        return Err(RegularizeError::TooFewRegulars);
    }
    let union: Vec<VarId> = regulars
        .iter()
        .flat_map(|c| c.scope().iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let domains: Vec<_> = union.iter().map(|&v| csp.domain(v).clone()).collect();
    let lifted = |c: &Constraint| -> Result<Dfa, RegularizeError> {
        let dfa = regular_dfa(c)?;
        let positions: Vec<usize> = c
            .scope()
            .iter()
            .map(|v| union.binary_search(v).expect("scope within union"))
            .collect();
        Ok(lift(dfa, &positions, union.len(), &domains)?)
    };
    let mut acc = minimize(&lifted(&regulars[0])?);
    for c in &regulars[1..] {
        let next = lifted(c)?;
        acc = match intersect_bounded(&acc, &next, Some(budget)) {
            Ok(product) => minimize(&product),
            Err(AutomatonError::BudgetExceeded(b)) => {
                return Err(RegularizeError::BudgetExceeded(b))
            }
            Err(e) => return Err(e.into()),
        };
    }
    Ok(Constraint::regular(union, Arc::new(acc))?)
}

/// Rewrites `csp` according to `cfg.mode`.
pub fn apply_mode(
    csp: &Csp,
    cfg: &RegularizeConfig,
) -> Result<(Csp, RegularizeReport), RegularizeError> {
    let started = Instant::now();
    if cfg.mode == Mode::Original {
        return Ok((csp.clone(), RegularizeReport::default()));
    }
    let selections = select_candidates(csp, cfg)?;
    let mode = cfg.mode;
    let cap = cfg.solution_cap;
    let compiled: Vec<_> = cfg
        .execution
        .map(selections, |sel| match mode {
            Mode::Table => tabulate_selection(csp, &sel, cap),
            _ => regularize_selection(csp, &sel, cap),
        })
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut report = RegularizeReport::default();
    let mut replacements: Vec<(Vec<usize>, Constraint)> = Vec::with_capacity(compiled.len());
    for (c, entry) in compiled {
        replacements.push((entry.selection.clone(), c));
        report.entries.push(entry);
    }

    if mode == Mode::RegularIntersected {
        replacements = merge_overlapping(csp, replacements, cfg.state_budget, &mut report)?;
    }
    let rewritten = replace_many(csp, replacements)?;
    report.total = started.elapsed();
    Ok((rewritten, report))
}

/// Greedy left-to-right chaining of regular constraints that share a
/// variable with the running group; a group closes when the next member
/// is disjoint or the product would exceed the budget.
fn merge_overlapping(
    csp: &Csp,
    regulars: Vec<(Vec<usize>, Constraint)>,
    budget: usize,
    report: &mut RegularizeReport,
) -> Result<Vec<(Vec<usize>, Constraint)>, RegularizeError> {
    struct Group {
        selection: Vec<usize>,
        constraint: Constraint,
        members: usize,
    }
    let mut done: Vec<Group> = Vec::new();
    let mut current: Option<Group> = None;
    for (selection, c) in regulars {
        if let Some(group) = current.as_mut() {
            let overlaps = c
                .scope()
                .iter()
                .any(|v| group.constraint.scope().contains(v));
            if overlaps {
                match intersect_regulars(csp, &[group.constraint.clone(), c.clone()], budget) {
                    Ok(merged) => {
                        group.selection.extend(&selection);
                        group.constraint = merged;
                        group.members += 1;
                        continue;
                    }
                    Err(RegularizeError::BudgetExceeded(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        done.extend(current.take());
        current = Some(Group {
            selection,
            constraint: c,
            members: 1,
        });
    }
    done.extend(current);
    Ok(done
        .into_iter()
        .map(|mut g| {
            g.selection.sort_unstable();
            if g.members > 1 {
                let dfa = regular_dfa(&g.constraint).expect("merged constraints are regular");
                report.intersections.push(IntersectionReport {
                    selection: g.selection.clone(),
                    members: g.members,
                    scope_len: g.constraint.scope().len(),
                    states: dfa.num_states(),
                });
            }
            (g.selection, g.constraint)
        })
        .collect())
}
