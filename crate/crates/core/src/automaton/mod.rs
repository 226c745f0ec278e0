//! Layered deterministic automata over integer alphabets.
//!
//! Every [`Dfa`] here accepts words of one fixed length. States reachable
//! from the start sit on a unique layer (their distance from the start) and
//! every accepting run ends on layer `word_len`. Transitions are partial: a
//! missing `(state, symbol)` pair is a dead end, there is no sink state.

mod construct;
mod ops;

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use construct::{build_dfa, prefix_sets, PrefixSets};
pub use ops::{enumerate_language, intersect, intersect_bounded, lift, minimize};

pub type StateId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("solution set is empty")]
    EmptySolutionSet,
    #[error("value {value} at position {position} is outside its domain")]
    ValueOutsideDomain { position: usize, value: i64 },
    #[error("expected {expected} entries, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("word has length {found}, automaton reads words of length {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("automata read words of different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("position {position} out of range for word length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("lift positions must be strictly increasing")]
    PositionsNotIncreasing,
    #[error("state {0} out of range")]
    BadState(StateId),
    #[error("symbol {0} is not in the alphabet")]
    UnknownSymbol(i64),
    #[error("state {state} has two transitions on symbol {symbol}")]
    Nondeterministic { state: StateId, symbol: i64 },
    #[error("automaton is not layered: {0}")]
    NotLayered(String),
    #[error("product exceeded the state budget of {0}")]
    BudgetExceeded(usize),
}

/// Deduplicated list of fixed-arity integer tuples, kept in first-seen order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SolutionSet {
    arity: usize,
    tuples: Vec<Vec<i64>>,
}

impl SolutionSet {
    pub fn new(arity: usize, tuples: Vec<Vec<i64>>) -> Result<Self, AutomatonError> {
        if let Some(t) = tuples.iter().find(|t| t.len() != arity) {
            return Err(AutomatonError::ArityMismatch {
                expected: arity,
                found: t.len(),
            });
        }
        let mut seen = HashSet::with_capacity(tuples.len());
        let tuples = tuples
            .into_iter()
            .filter(|t| seen.insert(t.clone()))
            .collect();
        Ok(SolutionSet { arity, tuples })
    }

    pub fn empty(arity: usize) -> Self {
        SolutionSet {
            arity,
            tuples: Vec::new(),
        }
    }

    /// Caller guarantees correct arity and no duplicates.
    pub(crate) fn from_distinct(arity: usize, tuples: Vec<Vec<i64>>) -> Self {
        debug_assert!(tuples.iter().all(|t| t.len() == arity));
        SolutionSet { arity, tuples }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Vec<i64>] {
        &self.tuples
    }

    pub fn into_tuples(self) -> Vec<Vec<i64>> {
        self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Order-insensitive view, for set comparisons.
    pub fn to_set(&self) -> BTreeSet<Vec<i64>> {
        self.tuples.iter().cloned().collect()
    }
}

/// Layered DFA `(Q, Σ, δ, q0, F)` accepting words of length `word_len`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DfaData", into = "DfaData")]
pub struct Dfa {
    alphabet: Vec<i64>,
    /// Outgoing edges per state, sorted by symbol.
    edges: Vec<Vec<(i64, StateId)>>,
    start: StateId,
    is_final: Vec<bool>,
    word_len: usize,
    /// Reachable states grouped by distance from the start.
    layers: Vec<Vec<StateId>>,
}

/// Serialized form of a [`Dfa`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaData {
    pub states: usize,
    pub start: StateId,
    pub finals: Vec<StateId>,
    pub transitions: Vec<(StateId, i64, StateId)>,
    pub word_length: usize,
    /// Defaults to the symbols used by `transitions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<i64>>,
}

impl TryFrom<DfaData> for Dfa {
    type Error = AutomatonError;

    fn try_from(data: DfaData) -> Result<Self, Self::Error> {
        let alphabet = data
            .alphabet
            .unwrap_or_else(|| data.transitions.iter().map(|t| t.1).collect());
        Dfa::new(
            data.states,
            alphabet,
            data.transitions,
            data.start,
            data.finals,
            data.word_length,
        )
    }
}

impl From<Dfa> for DfaData {
    fn from(dfa: Dfa) -> Self {
        DfaData {
            states: dfa.num_states(),
            start: dfa.start,
            finals: dfa.finals().collect(),
            transitions: dfa.transitions().collect(),
            word_length: dfa.word_len,
            alphabet: Some(dfa.alphabet),
        }
    }
}

impl Dfa {
    /// Validates determinism and layering. `alphabet` may be unsorted and
    /// is normalized; every transition symbol must belong to it.
    pub fn new(
        num_states: usize,
        alphabet: impl IntoIterator<Item = i64>,
        transitions: impl IntoIterator<Item = (StateId, i64, StateId)>,
        start: StateId,
        finals: impl IntoIterator<Item = StateId>,
        word_len: usize,
    ) -> Result<Self, AutomatonError> {
        let mut alphabet: Vec<i64> = alphabet.into_iter().collect();
        alphabet.sort_unstable();
        alphabet.dedup();
        let check = |s: StateId| {
            if (s as usize) < num_states {
                Ok(())
            } else {
                Err(AutomatonError::BadState(s))
            }
        };
        check(start)?;
        let mut edges = vec![Vec::new(); num_states];
        for (from, symbol, to) in transitions {
            check(from)?;
            check(to)?;
            if alphabet.binary_search(&symbol).is_err() {
                return Err(AutomatonError::UnknownSymbol(symbol));
            }
            edges[from as usize].push((symbol, to));
        }
        for (state, out) in edges.iter_mut().enumerate() {
            out.sort_unstable();
            out.dedup();
            if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(AutomatonError::Nondeterministic {
                    state: state as StateId,
                    symbol: w[0].0,
                });
            }
        }
        let mut is_final = vec![false; num_states];
        for f in finals {
            check(f)?;
            is_final[f as usize] = true;
        }
        Self::from_parts(alphabet, edges, start, is_final, word_len)
    }

    /// Layering check over already-normalized parts.
    pub(crate) fn from_parts(
        alphabet: Vec<i64>,
        edges: Vec<Vec<(i64, StateId)>>,
        start: StateId,
        is_final: Vec<bool>,
        word_len: usize,
    ) -> Result<Self, AutomatonError> {
        let mut depth: Vec<Option<usize>> = vec![None; edges.len()];
        let mut layers: Vec<Vec<StateId>> = vec![Vec::new(); word_len + 1];
        depth[start as usize] = Some(0);
        layers[0].push(start);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            let d = depth[s as usize].expect("queued states have a depth");
            if is_final[s as usize] && d != word_len {
                return Err(AutomatonError::NotLayered(format!(
                    "final state {s} at depth {d}, expected {word_len}"
                )));
            }
            if d == word_len && !edges[s as usize].is_empty() {
                return Err(AutomatonError::NotLayered(format!(
                    "state {s} at depth {d} has outgoing transitions"
                )));
            }
            for &(_, t) in &edges[s as usize] {
                match depth[t as usize] {
                    None => {
                        depth[t as usize] = Some(d + 1);
                        layers[d + 1].push(t);
                        queue.push_back(t);
                    }
                    Some(dt) if dt != d + 1 => {
                        return Err(AutomatonError::NotLayered(format!(
                            "state {t} reachable at depths {dt} and {}",
                            d + 1
                        )));
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Dfa {
            alphabet,
            edges,
            start,
            is_final,
            word_len,
            layers,
        })
    }

    /// Single-state automaton with an empty language.
    pub fn empty(word_len: usize, alphabet: impl IntoIterator<Item = i64>) -> Self {
        let mut alphabet: Vec<i64> = alphabet.into_iter().collect();
        alphabet.sort_unstable();
        alphabet.dedup();
        let mut layers = vec![Vec::new(); word_len + 1];
        layers[0].push(0);
        Dfa {
            alphabet,
            edges: vec![Vec::new()],
            start: 0,
            is_final: vec![false],
            word_len,
            layers,
        }
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn alphabet(&self) -> &[i64] {
        &self.alphabet
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.is_final[s as usize]
    }

    pub fn finals(&self) -> impl Iterator<Item = StateId> + '_ {
        self.is_final
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(s, _)| s as StateId)
    }

    /// Outgoing `(symbol, target)` pairs, sorted by symbol.
    pub fn edges(&self, s: StateId) -> &[(i64, StateId)] {
        &self.edges[s as usize]
    }

    pub fn next(&self, s: StateId, symbol: i64) -> Option<StateId> {
        let out = &self.edges[s as usize];
        out.binary_search_by_key(&symbol, |e| e.0)
            .ok()
            .map(|i| out[i].1)
    }

    /// All `(from, symbol, to)` triples in state order.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, i64, StateId)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(s, out)| out.iter().map(move |&(a, t)| (s as StateId, a, t)))
    }

    /// Reachable states per layer; `layers()[i]` holds states reached after
    /// reading `i` symbols.
    pub fn layers(&self) -> &[Vec<StateId>] {
        &self.layers
    }

    pub fn accepts(&self, word: &[i64]) -> Result<bool, AutomatonError> {
        if word.len() != self.word_len {
            return Err(AutomatonError::WrongLength {
                expected: self.word_len,
                found: word.len(),
            });
        }
        let mut state = self.start;
        for &symbol in word {
            match self.next(state, symbol) {
                Some(t) => state = t,
                None => return Ok(false),
            }
        }
        Ok(self.is_final(state))
    }

    /// Number of accepted words.
    pub fn count_words(&self) -> BigUint {
        let mut count = vec![BigUint::default(); self.num_states()];
        for layer in self.layers.iter().rev() {
            for &s in layer {
                let mut c = if self.is_final(s) {
                    BigUint::from(1u8)
                } else {
                    BigUint::default()
                };
                for &(_, t) in self.edges(s) {
                    c += &count[t as usize];
                }
                count[s as usize] = c;
            }
        }
        count[self.start as usize].clone()
    }

    /// Reachable states from which some final state is reachable.
    pub(crate) fn live_states(&self) -> Vec<bool> {
        let mut live = vec![false; self.num_states()];
        for layer in self.layers.iter().rev() {
            for &s in layer {
                live[s as usize] =
                    self.is_final(s) || self.edges(s).iter().any(|&(_, t)| live[t as usize]);
            }
        }
        live
    }

    pub fn is_empty_language(&self) -> bool {
        !self.live_states()[self.start as usize]
    }

    /// Renumbers reachable states in breadth-first order (edges visited by
    /// ascending symbol) and drops unreachable ones.
    pub(crate) fn canonical(&self) -> Dfa {
        let mut id: Vec<Option<StateId>> = vec![None; self.num_states()];
        let mut order = Vec::with_capacity(self.num_states());
        id[self.start as usize] = Some(0);
        order.push(self.start);
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for &(_, t) in self.edges(s) {
                if id[t as usize].is_none() {
                    id[t as usize] = Some(order.len() as StateId);
                    order.push(t);
                }
            }
        }
        let edges = order
            .iter()
            .map(|&s| {
                self.edges(s)
                    .iter()
                    .map(|&(a, t)| (a, id[t as usize].expect("reachable")))
                    .collect()
            })
            .collect();
        let is_final = order.iter().map(|&s| self.is_final(s)).collect();
        Dfa::from_parts(self.alphabet.clone(), edges, 0, is_final, self.word_len)
            .expect("renumbering preserves layering")
    }
}
