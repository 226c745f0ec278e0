//! Depth-first binary-branching search with propagation to fixpoint and
//! dom/wdeg variable ordering.
//!
//! Statistics conventions:
//! - `nodes` counts the root plus every branching decision (`x = v` and
//!   `x != v` each count once).
//! - `fails` counts every propagation failure, wherever it happens.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::automaton::SolutionSet;
use crate::csp::{Constraint, ConstraintKind, Csp, VarId};
use crate::propagation::{
    propagate, propagate_channeling_from, CompiledAdjacency, CompiledLess, CompiledPair,
    CompiledRegular, CompiledTable, DomainView, PropagationOutcome,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("more than {0} solutions")]
    CapExceeded(usize),
    #[error("enumeration hit the time limit after {0} solutions")]
    TimedOut(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub fails: u64,
    pub solutions: u64,
    pub elapsed: Duration,
    pub timed_out: bool,
}

impl SearchStats {
    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e3
    }
}

/// Failure weight per constraint, starting at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTable(Vec<u64>);

impl WeightTable {
    pub fn new(num_constraints: usize) -> Self {
        WeightTable(vec![1; num_constraints])
    }

    pub fn get(&self, c: usize) -> u64 {
        self.0[c]
    }

    pub fn bump(&mut self, c: usize) {
        self.0[c] += 1;
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

/// A complete assignment, indexed by variable id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Solution(pub Vec<i64>);

impl Solution {
    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

/// Constraints to wake when a variable changes.
struct Watchers {
    /// Woken by any removal.
    any: Vec<Vec<usize>>,
    /// Woken only once the variable is fixed.
    fix: Vec<Vec<usize>>,
    /// `x != y` neighbours `(y, constraint)` of each `x`, filtered inline
    /// as soon as `x` is fixed instead of going through the queue.
    diseq: Vec<Vec<(VarId, usize)>>,
}

impl Watchers {
    /// Each constraint is listed once per variable of its scope.
    fn new(csp: &Csp) -> Self {
        let mut any = vec![Vec::new(); csp.num_vars()];
        let mut fix = vec![Vec::new(); csp.num_vars()];
        let mut diseq = vec![Vec::new(); csp.num_vars()];
        for (ci, c) in csp.constraints().iter().enumerate() {
            let w: &mut Vec<Vec<usize>> = match c.kind() {
                ConstraintKind::NotEqual => {
                    let (x, y) = (c.scope()[0], c.scope()[1]);
                    diseq[x].push((y, ci));
                    if x != y {
                        diseq[y].push((x, ci));
                    }
                    continue;
                }
                ConstraintKind::FixedAssignment { .. } => &mut fix,
                _ => &mut any,
            };
            for &v in c.scope() {
                if w[v].last() != Some(&ci) {
                    w[v].push(ci);
                }
            }
        }
        Watchers { any, fix, diseq }
    }
}

/// Cost class: binary scopes first, then channeling, then wider
/// extensional and automaton constraints.
fn priority(c: &Constraint) -> u8 {
    match c.kind() {
        _ if c.scope().len() <= 2 => 0,
        ConstraintKind::InverseChanneling => 1,
        _ => 2,
    }
}

fn has_repeats(scope: &[VarId]) -> bool {
    scope
        .iter()
        .enumerate()
        .any(|(i, v)| scope[..i].contains(v))
}

struct Propagator<'a> {
    csp: &'a Csp,
    watch: Watchers,
    /// Propagators that must rerun after pruning their own scope.
    self_wake: Vec<bool>,
    /// Cost class per constraint; a propagator runs only when every
    /// cheaper queue is empty.
    priority: Vec<u8>,
    queues: [VecDeque<usize>; 3],
    queued: Vec<bool>,
    touched: Vec<bool>,
    /// Changed variables not yet announced, with the constraint that
    /// changed them and, when known, the one value removed.
    pending: Vec<(VarId, Option<usize>, Option<i64>)>,
    compiled: Vec<Option<Compiled>>,
    /// Constraints with a `Compiled::Channel` entry.
    channels: Vec<usize>,
    /// The constraint whose weight the last failure bumped.
    culprit: Option<usize>,
}

/// Per-constraint propagator state kept across calls.
enum Compiled {
    /// Channeling over `0..k` domains, replaying only new removals.
    Channel {
        position: Vec<u32>,
        /// Trail length up to which removals are processed; `None` until
        /// the first full run.
        seen: Option<usize>,
    },
    Table(CompiledTable),
    Regular(CompiledRegular),
    Adjacency(CompiledAdjacency),
    Pair(CompiledPair),
    Less(CompiledLess),
}

fn compile(csp: &Csp, c: &Constraint, initial: &DomainView) -> Option<Compiled> {
    match c.kind() {
        ConstraintKind::Table { tuples } => Some({
            let set: HashSet<&[i64]> = tuples.iter().map(Vec::as_slice).collect();
            CompiledPair::new(c.scope(), initial, |a, b| set.contains(&[a, b][..]))
                .map(Compiled::Pair)
                .unwrap_or_else(|| Compiled::Table(CompiledTable::new(tuples, c.scope(), initial)))
        }),
        ConstraintKind::Regular { dfa } => Some(
            CompiledPair::new(c.scope(), initial, |a, b| {
                dfa.accepts(&[a, b]).unwrap_or(false)
            })
            .map(Compiled::Pair)
            .unwrap_or_else(|| Compiled::Regular(CompiledRegular::new(dfa, c.scope(), initial))),
        ),
        ConstraintKind::BinaryAdjacency { modulus, allowed } => {
            CompiledAdjacency::new(*modulus, allowed, c.scope(), initial).map(Compiled::Adjacency)
        }
        ConstraintKind::LessThan => {
            CompiledLess::new(c.scope()[0], c.scope()[1], initial).map(Compiled::Less)
        }
        ConstraintKind::InverseChanneling
            if !has_repeats(c.scope()) && c.scope().iter().all(|&v| initial.zero_based(v)) =>
        {
            let mut position = vec![u32::MAX; csp.num_vars()];
            for (p, &v) in c.scope().iter().enumerate() {
                position[v] = p as u32;
            }
            Some(Compiled::Channel {
                position,
                seen: None,
            })
        }
        _ => None,
    }
}

impl<'a> Propagator<'a> {
    fn new(csp: &'a Csp) -> Self {
        let initial = DomainView::new(csp);
        let compiled: Vec<Option<Compiled>> = csp
            .constraints()
            .iter()
            .map(|c| compile(csp, c, &initial))
            .collect();
        Propagator {
            csp,
            watch: Watchers::new(csp),
            self_wake: csp
                .constraints()
                .iter()
                .map(|c| has_repeats(c.scope()))
                .collect(),
            priority: csp.constraints().iter().map(priority).collect(),
            queues: [VecDeque::new(), VecDeque::new(), VecDeque::new()],
            queued: vec![false; csp.constraints().len()],
            touched: vec![false; csp.num_vars()],
            pending: Vec::new(),
            channels: (0..compiled.len())
                .filter(|&c| matches!(compiled[c], Some(Compiled::Channel { .. })))
                .collect(),
            compiled,
            culprit: None,
        }
    }

    fn enqueue(&mut self, c: usize) {
        if !self.queued[c] {
            self.queued[c] = true;
            self.queues[self.priority[c] as usize].push_back(c);
        }
    }

    fn enqueue_all(&mut self) {
        for c in 0..self.csp.constraints().len() {
            self.enqueue(c);
        }
    }

    /// Queues `c` unless it caused the change itself and is idempotent.
    fn wake(&mut self, c: usize, except: Option<usize>) {
        if Some(c) != except || self.self_wake[c] {
            self.enqueue(c);
        }
    }

    /// Records that `var` changed outside the propagators.
    fn notify(&mut self, var: VarId) {
        self.pending.push((var, None, None));
    }

    /// Wakes the watchers of every pending variable, filtering `x != y`
    /// inline for newly fixed ones. Returns false on a wipe-out, after
    /// bumping the responsible constraint.
    fn announce(&mut self, view: &mut DomainView, weights: &mut WeightTable) -> bool {
        while let Some((var, except, lost)) = self.pending.pop() {
            for i in 0..self.watch.any[var].len() {
                let c = self.watch.any[var][i];
                if let (Some(v), Some(Compiled::Adjacency(a))) = (lost, &self.compiled[c]) {
                    if a.has_rank_of(view, var, v) {
                        continue;
                    }
                }
                self.wake(c, except);
            }
            let Some(value) = view.value(var) else {
                continue;
            };
            for i in 0..self.watch.fix[var].len() {
                self.wake(self.watch.fix[var][i], except);
            }
            for i in 0..self.watch.diseq[var].len() {
                let (other, c) = self.watch.diseq[var][i];
                if view.remove(other, value) {
                    if view.is_empty(other) {
                        weights.bump(c);
                        self.culprit = Some(c);
                        return false;
                    }
                    self.pending.push((other, Some(c), Some(value)));
                }
            }
        }
        true
    }

    /// Forgets progress past `trail_len` after the view backtracked.
    fn backtrack(&mut self, trail_len: usize) {
        for &c in &self.channels {
            if let Some(Compiled::Channel {
                seen: Some(seen), ..
            }) = &mut self.compiled[c]
            {
                *seen = (*seen).min(trail_len);
            }
        }
    }

    fn propagate_one(&mut self, c: usize, view: &mut DomainView) -> PropagationOutcome {
        let constraint = &self.csp.constraints()[c];
        match &mut self.compiled[c] {
            None => propagate(constraint, view),
            Some(Compiled::Table(t)) => t.propagate(view),
            Some(Compiled::Regular(r)) => r.propagate(view),
            Some(Compiled::Adjacency(a)) => a.propagate(view),
            Some(Compiled::Pair(p)) => p.propagate(view),
            Some(Compiled::Less(l)) => l.propagate(view),
            Some(Compiled::Channel { position, seen }) => {
                let out = match *seen {
                    Some(from) => {
                        propagate_channeling_from(constraint.scope(), position, from, view)
                    }
                    None => propagate(constraint, view),
                };
                *seen = Some(view.trail_len());
                out
            }
        }
    }

    fn clear(&mut self) {
        self.pending.clear();
        for q in &mut self.queues {
            for c in q.drain(..) {
                self.queued[c] = false;
            }
        }
    }

    /// Runs queued propagators until nothing changes or one fails.
    fn run(&mut self, view: &mut DomainView, weights: &mut WeightTable) -> PropagationOutcome {
        let start = view.trail_len();
        let ok = self.announce(view, weights);
        let mut removed = view.trail_len() - start;
        if !ok {
            self.clear();
            return PropagationOutcome::failure(removed);
        }
        while let Some(c) = self.queues.iter_mut().find_map(|q| q.pop_front()) {
            self.queued[c] = false;
            let mark = view.trail_len();
            let out = self.propagate_one(c, view);
            removed += out.removed;
            if out.is_failure() {
                weights.bump(c);
                self.culprit = Some(c);
                self.clear();
                return PropagationOutcome::failure(removed);
            }
            if out.removed > 0 {
                let mut pending = std::mem::take(&mut self.pending);
                pending.extend(
                    view.trail_since(mark)
                        .filter(|&v| !std::mem::replace(&mut self.touched[v], true))
                        .map(|v| (v, Some(c), None)),
                );
                for &(v, _, _) in &pending {
                    self.touched[v] = false;
                }
                self.pending = pending;
                let before = view.trail_len();
                if !self.announce(view, weights) {
                    self.clear();
                    return PropagationOutcome::failure(removed + view.trail_len() - before);
                }
                removed += view.trail_len() - before;
            }
        }
        PropagationOutcome::fixpoint(removed)
    }
}

/// Propagates every constraint until no domain changes. On failure the
/// failing constraint's weight goes up by one.
pub fn propagate_to_fixpoint(
    csp: &Csp,
    view: &mut DomainView,
    weights: &mut WeightTable,
) -> PropagationOutcome {
    let mut p = Propagator::new(csp);
    p.enqueue_all();
    p.run(view, weights)
}

/// Constraint scopes laid out for the weighted-degree sweep: binary
/// scopes as flat `(a, b, constraint)` triples, the rest deduplicated.
struct DegreeIndex {
    pairs: Vec<(u32, u32, u32)>,
    wide: Vec<(usize, Vec<VarId>)>,
}

impl DegreeIndex {
    fn new(csp: &Csp) -> Self {
        let mut pairs = Vec::new();
        let mut wide = Vec::new();
        for (ci, c) in csp.constraints().iter().enumerate() {
            match *c.scope() {
                [a, b] if a != b => pairs.push((a as u32, b as u32, ci as u32)),
                _ => {
                    let mut vars = c.scope().to_vec();
                    vars.sort_unstable();
                    vars.dedup();
                    wide.push((ci, vars));
                }
            }
        }
        DegreeIndex { pairs, wide }
    }

    /// Weighted degree of each variable: the summed weights of the
    /// constraints on it that still have at least two unfixed variables.
    fn compute(&self, view: &DomainView, weights: &WeightTable, out: &mut Vec<u64>) {
        out.clear();
        out.resize(view.num_vars(), 0);
        for &(a, b, ci) in &self.pairs {
            let (a, b) = (a as usize, b as usize);
            if !view.is_fixed(a) && !view.is_fixed(b) {
                let w = weights.get(ci as usize);
                out[a] += w;
                out[b] += w;
            }
        }
        for (ci, vars) in &self.wide {
            let free = vars.iter().filter(|&&v| !view.is_fixed(v)).count();
            if free >= 2 {
                let w = weights.get(*ci);
                for &v in vars {
                    if !view.is_fixed(v) {
                        out[v] += w;
                    }
                }
            }
        }
    }
}

/// Weighted degrees kept up to date as variables get fixed and unfixed.
///
/// `wdeg[v]` sums the weights of the constraints on `v` with at least two
/// variables not yet recorded as fixed, for fixed and unfixed `v` alike.
struct Degrees {
    /// Distinct variables per constraint.
    scopes: Vec<Vec<u32>>,
    /// Constraints per variable, each listed once.
    incidence: Vec<Vec<u32>>,
    /// Variables of each constraint not recorded as fixed.
    free: Vec<u32>,
    wdeg: Vec<u64>,
    fixed: Vec<bool>,
    /// Variables in the order they were recorded as fixed.
    stack: Vec<VarId>,
}

impl Degrees {
    fn new(csp: &Csp, weights: &WeightTable) -> Self {
        let mut incidence = vec![Vec::new(); csp.num_vars()];
        let scopes: Vec<Vec<u32>> = csp
            .constraints()
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                let mut vars: Vec<u32> = c.scope().iter().map(|&v| v as u32).collect();
                vars.sort_unstable();
                vars.dedup();
                for &v in &vars {
                    incidence[v as usize].push(ci as u32);
                }
                vars
            })
            .collect();
        let mut wdeg = vec![0; csp.num_vars()];
        for (ci, vars) in scopes.iter().enumerate() {
            if vars.len() >= 2 {
                for &v in vars {
                    wdeg[v as usize] += weights.get(ci);
                }
            }
        }
        Degrees {
            free: scopes.iter().map(|s| s.len() as u32).collect(),
            scopes,
            incidence,
            wdeg,
            fixed: vec![false; csp.num_vars()],
            stack: Vec::new(),
        }
    }

    fn add(&mut self, c: usize, w: u64, sign: bool) {
        for &v in &self.scopes[c] {
            let d = &mut self.wdeg[v as usize];
            *d = if sign { *d + w } else { *d - w };
        }
    }

    /// Records every variable that became fixed since the last call.
    fn sync(&mut self, view: &DomainView, weights: &WeightTable) {
        for v in 0..self.fixed.len() {
            if self.fixed[v] || !view.is_fixed(v) {
                continue;
            }
            self.fixed[v] = true;
            self.stack.push(v);
            for i in 0..self.incidence[v].len() {
                let c = self.incidence[v][i] as usize;
                self.free[c] -= 1;
                if self.free[c] == 1 {
                    self.add(c, weights.get(c), false);
                }
            }
        }
    }

    /// Unrecords the variables fixed after the stack held `len` entries.
    fn undo(&mut self, len: usize, weights: &WeightTable) {
        while self.stack.len() > len {
            let v = self.stack.pop().expect("non-empty stack");
            self.fixed[v] = false;
            for i in 0..self.incidence[v].len() {
                let c = self.incidence[v][i] as usize;
                self.free[c] += 1;
                if self.free[c] == 2 {
                    self.add(c, weights.get(c), true);
                }
            }
        }
    }

    /// Accounts for one bump of `c`'s weight.
    fn bumped(&mut self, c: usize) {
        if self.free[c] >= 2 {
            self.add(c, 1, true);
        }
    }
}

fn pick_min_ratio(view: &DomainView, wdeg: &[u64]) -> Option<VarId> {
    let mut best: Option<(VarId, u64, u64)> = None;
    for (v, &w) in wdeg.iter().enumerate().take(view.num_vars()) {
        let size = view.size(v) as u64;
        if size <= 1 {
            continue;
        }
        let w = w.max(1);
        // size / w < best_size / best_w, ties keep the smaller id
        let better = match best {
            None => true,
            Some((_, bs, bw)) => (size as u128) * (bw as u128) < (bs as u128) * (w as u128),
        };
        if better {
            best = Some((v, size, w));
        }
    }
    best.map(|(v, _, _)| v)
}

/// dom/wdeg: the unfixed variable minimizing domain size over weighted
/// degree (zero degree counts as one), smallest id on ties.
pub fn select_variable_dom_over_wdeg(
    view: &DomainView,
    weights: &WeightTable,
    csp: &Csp,
) -> Option<VarId> {
    let mut wdeg = Vec::new();
    DegreeIndex::new(csp).compute(view, weights, &mut wdeg);
    pick_min_ratio(view, &wdeg)
}

enum Mode {
    First,
    All { cap: Option<usize> },
}

enum Flow {
    Continue,
    Stop,
}

struct Engine<'a> {
    csp: &'a Csp,
    view: DomainView,
    weights: WeightTable,
    propagator: Propagator<'a>,
    stats: SearchStats,
    started: Instant,
    deadline: Option<Instant>,
    mode: Mode,
    solutions: Vec<Vec<i64>>,
    cap_hit: bool,
    degrees: Degrees,
    /// Compare the maintained degrees with a full recount at every node.
    check_degrees: bool,
}

impl<'a> Engine<'a> {
    fn new(csp: &'a Csp, limit: Option<Duration>, mode: Mode) -> Self {
        let started = Instant::now();
        let weights = WeightTable::new(csp.constraints().len());
        Engine {
            csp,
            view: DomainView::new(csp),
            degrees: Degrees::new(csp, &weights),
            check_degrees: false,
            weights,
            propagator: Propagator::new(csp),
            stats: SearchStats::default(),
            started,
            deadline: limit.map(|l| started + l),
            mode,
            solutions: Vec::new(),
            cap_hit: false,
        }
    }

    fn propagate(&mut self) -> bool {
        let out = self.propagator.run(&mut self.view, &mut self.weights);
        if out.is_failure() {
            self.stats.fails += 1;
            if let Some(c) = self.propagator.culprit.take() {
                self.degrees.bumped(c);
            }
            false
        } else {
            true
        }
    }

    fn run(&mut self) {
        self.stats.nodes = 1;
        self.propagator.enqueue_all();
        if self.propagate() {
            self.dfs();
        }
        self.stats.elapsed = self.started.elapsed();
        self.stats.solutions = self.solutions.len() as u64;
    }

    fn record_solution(&mut self) -> Flow {
        let values: Vec<i64> = (0..self.csp.num_vars())
            .map(|v| self.view.value(v).expect("all variables fixed"))
            .collect();
        debug_assert!(
            self.csp.check(&values),
            "propagators accepted a non-solution"
        );
        match self.mode {
            Mode::First => {
                self.solutions.push(values);
                Flow::Stop
            }
            Mode::All { cap } => {
                if cap.is_some_and(|cap| self.solutions.len() >= cap) {
                    self.cap_hit = true;
                    return Flow::Stop;
                }
                self.solutions.push(values);
                Flow::Continue
            }
        }
    }

    /// Applies one branch decision in a fresh level and searches below it.
    fn branch(&mut self, var: VarId, value: i64, assign: bool) -> Flow {
        self.stats.nodes += 1;
        self.view.push_level();
        let fixed = self.degrees.stack.len();
        let mark = self.view.trail_len();
        if assign {
            self.view.assign(var, value);
        } else {
            self.view.remove(var, value);
        }
        let flow = if self.view.trail_len() > mark {
            self.propagator.notify(var);
            if self.propagate() {
                self.dfs()
            } else {
                Flow::Continue
            }
        } else {
            self.dfs()
        };
        self.view.pop_level();
        self.propagator.backtrack(self.view.trail_len());
        self.degrees.undo(fixed, &self.weights);
        flow
    }

    fn dfs(&mut self) -> Flow {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.stats.timed_out = true;
            return Flow::Stop;
        }
        self.degrees.sync(&self.view, &self.weights);
        if self.check_degrees {
            let mut full = Vec::new();
            DegreeIndex::new(self.csp).compute(&self.view, &self.weights, &mut full);
            for v in (0..full.len()).filter(|&v| !self.view.is_fixed(v)) {
                assert_eq!(self.degrees.wdeg[v], full[v], "weighted degree of {v}");
            }
        }
        let Some(var) = pick_min_ratio(&self.view, &self.degrees.wdeg) else {
            return self.record_solution();
        };
        let value = self.view.min(var).expect("unfixed variable has values");
        if let Flow::Stop = self.branch(var, value, true) {
            return Flow::Stop;
        }
        self.branch(var, value, false)
    }
}

/// First solution by depth-first search, or `None` when the problem is
/// unsatisfiable or the time limit elapsed (`stats.timed_out`).
pub fn solve_first(csp: &Csp, limit: Duration) -> (Option<Solution>, SearchStats) {
    let mut engine = Engine::new(csp, Some(limit), Mode::First);
    engine.run();
    let solution = engine.solutions.pop().map(Solution);
    (solution, engine.stats)
}

/// Every solution, in search order. Fails with `CapExceeded` when more than
/// `cap` solutions exist, and with `TimedOut` if the limit elapses first.
pub fn enumerate_all(
    csp: &Csp,
    cap: Option<usize>,
    limit: Option<Duration>,
) -> Result<(SolutionSet, SearchStats), SearchError> {
    let mut engine = Engine::new(csp, limit, Mode::All { cap });
    engine.run();
    if engine.cap_hit {
        return Err(SearchError::CapExceeded(cap.unwrap_or(usize::MAX)));
    }
    if engine.stats.timed_out {
        return Err(SearchError::TimedOut(engine.solutions.len()));
    }
    let set = SolutionSet::from_distinct(csp.num_vars(), std::mem::take(&mut engine.solutions));
    Ok((set, engine.stats))
}
