//! Compiling a solution set into a prefix-tree automaton.

use std::collections::BTreeSet;

use super::{AutomatonError, Dfa, SolutionSet, StateId};
use crate::csp::Domain;

/// Distinct prefixes of a solution set, by length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixSets {
    /// `levels[i]` holds the prefixes of length `i + 1`.
    pub levels: Vec<BTreeSet<Vec<i64>>>,
}

impl PrefixSets {
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(BTreeSet::len).collect()
    }
}

pub fn prefix_sets(s: &SolutionSet) -> Result<PrefixSets, AutomatonError> {
    if s.is_empty() {
        return Err(AutomatonError::EmptySolutionSet);
    }
    let levels = (1..=s.arity())
        .map(|len| s.tuples().iter().map(|t| t[..len].to_vec()).collect())
        .collect();
    Ok(PrefixSets { levels })
}

/// Builds the prefix-tree automaton of `s`: one start state, one state per
/// distinct proper prefix, and a single shared accepting state. States are
/// numbered layer by layer, prefixes in lexicographic order within a layer.
///
/// The alphabet is the union of `domains`.
pub fn build_dfa(s: &SolutionSet, domains: &[Domain]) -> Result<Dfa, AutomatonError> {
    if s.is_empty() {
        return Err(AutomatonError::EmptySolutionSet);
    }
    let n = s.arity();
    if domains.len() != n {
        return Err(AutomatonError::ArityMismatch {
            expected: n,
            found: domains.len(),
        });
    }
    for t in s.tuples() {
        for (position, (&value, d)) in t.iter().zip(domains).enumerate() {
            if !d.contains(value) {
                return Err(AutomatonError::ValueOutsideDomain { position, value });
            }
        }
    }

    if n == 0 {
        return Dfa::from_parts(Vec::new(), vec![Vec::new()], 0, vec![true], 0);
    }

    let mut sorted: Vec<&[i64]> = s.tuples().iter().map(Vec::as_slice).collect();
    sorted.sort_unstable();
    // First position where each tuple differs from its predecessor. Tuples
    // are distinct, so this is always < n for j > 0.
    let first_diff: Vec<usize> = (0..sorted.len())
        .map(|j| {
            if j == 0 {
                0
            } else {
                sorted[j]
                    .iter()
                    .zip(sorted[j - 1])
                    .position(|(a, b)| a != b)
                    .expect("tuples are distinct")
            }
        })
        .collect();

    let mut edges: Vec<Vec<(i64, StateId)>> = vec![Vec::new()];
    // state currently reached by each tuple
    let mut at: Vec<StateId> = vec![0; sorted.len()];
    for level in 0..n.saturating_sub(1) {
        let mut next: Vec<StateId> = Vec::with_capacity(sorted.len());
        for j in 0..sorted.len() {
            if j > 0 && first_diff[j] > level {
                next.push(next[j - 1]);
                continue;
            }
            let id = edges.len() as StateId;
            edges.push(Vec::new());
            edges[at[j] as usize].push((sorted[j][level], id));
            next.push(id);
        }
        at = next;
    }
    let end = edges.len() as StateId;
    edges.push(Vec::new());
    for (j, t) in sorted.iter().enumerate() {
        let edge = (t[n - 1], end);
        let out = &mut edges[at[j] as usize];
        if out.last() != Some(&edge) {
            out.push(edge);
        }
    }
    let mut is_final = vec![false; edges.len()];
    is_final[end as usize] = true;
    let alphabet: BTreeSet<i64> = domains
        .iter()
        .flat_map(|d| d.values().iter().copied())
        .collect();
    Dfa::from_parts(alphabet.into_iter().collect(), edges, 0, is_final, n)
}
