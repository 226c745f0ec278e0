use super::{DomainView, PropagationOutcome};
use crate::automaton::{Dfa, StateId};
use crate::csp::VarId;

/// The automaton unrolled against the current domains of its scope.
///
/// Each reachable state lives on exactly one layer, so per-state flags are
/// enough: `forward[s]` when `s` is reachable from the start using live
/// values, `backward[s]` when additionally an accepting state is reachable
/// from `s` using live values.
pub struct LayeredGraph<'a> {
    dfa: &'a Dfa,
    scope: &'a [VarId],
    forward: Vec<bool>,
    backward: Vec<bool>,
}

impl<'a> LayeredGraph<'a> {
    pub fn build(dfa: &'a Dfa, scope: &'a [VarId], view: &DomainView) -> Self {
        debug_assert_eq!(dfa.word_len(), scope.len());
        let n = scope.len();
        let layers = dfa.layers();
        let mut forward = vec![false; dfa.num_states()];
        forward[dfa.start() as usize] = true;
        for (i, &var) in scope.iter().enumerate() {
            for &s in &layers[i] {
                if !forward[s as usize] {
                    continue;
                }
                for &(a, t) in dfa.edges(s) {
                    if !forward[t as usize] && view.contains(var, a) {
                        forward[t as usize] = true;
                    }
                }
            }
        }
        let mut backward = vec![false; dfa.num_states()];
        for &s in &layers[n] {
            backward[s as usize] = forward[s as usize] && dfa.is_final(s);
        }
        for i in (0..n).rev() {
            let var = scope[i];
            for &s in &layers[i] {
                if forward[s as usize] {
                    backward[s as usize] = dfa
                        .edges(s)
                        .iter()
                        .any(|&(a, t)| backward[t as usize] && view.contains(var, a));
                }
            }
        }
        LayeredGraph {
            dfa,
            scope,
            forward,
            backward,
        }
    }

    pub fn is_forward(&self, s: StateId) -> bool {
        self.forward[s as usize]
    }

    pub fn is_backward(&self, s: StateId) -> bool {
        self.backward[s as usize]
    }

    /// Whether some accepted word uses only live values.
    pub fn is_satisfiable(&self) -> bool {
        self.backward[self.dfa.start() as usize]
    }

    /// Edges `(position, from, value, to)` lying on an accepting path of
    /// live values.
    pub fn live_edges<'v>(
        &'v self,
        view: &'v DomainView,
    ) -> impl Iterator<Item = (usize, StateId, i64, StateId)> + 'v {
        self.scope.iter().enumerate().flat_map(move |(i, &var)| {
            self.dfa.layers()[i]
                .iter()
                .filter(|&&s| self.forward[s as usize])
                .flat_map(move |&s| {
                    self.dfa.edges(s).iter().filter_map(move |&(a, t)| {
                        (self.backward[t as usize] && view.contains(var, a)).then_some((i, s, a, t))
                    })
                })
        })
    }
}

/// GAC for "the scope spells a word of `dfa`".
///
/// The layered graph is rebuilt from scratch on every call.
pub fn propagate_regular(dfa: &Dfa, scope: &[VarId], view: &mut DomainView) -> PropagationOutcome {
    let mut supported: Vec<Vec<bool>> = scope
        .iter()
        .map(|&v| vec![false; view.initial_len(v)])
        .collect();
    {
        let graph = LayeredGraph::build(dfa, scope, view);
        if !graph.is_satisfiable() {
            let removed = scope
                .iter()
                .map(|&v| view.retain_indices(v, |_| false))
                .sum();
            return PropagationOutcome::failure(removed);
        }
        for (i, _, a, _) in graph.live_edges(view) {
            let idx = view.index_of(scope[i], a).expect("live value has an index");
            supported[i][idx] = true;
        }
    }
    let removed = scope
        .iter()
        .zip(&supported)
        .map(|(&v, sup)| view.retain_indices(v, |idx| sup[idx]))
        .sum();
    PropagationOutcome::checked(view, scope, removed)
}
