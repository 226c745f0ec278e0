use super::{DomainView, PropagationOutcome};
use crate::csp::VarId;

/// GAC for an extensional constraint: one pass over the tuples, keeping
/// those whose values are all live, and marking their values as supported.
pub fn propagate_table(
    tuples: &[Vec<i64>],
    scope: &[VarId],
    view: &mut DomainView,
) -> PropagationOutcome {
    let mut supported: Vec<Vec<bool>> = scope
        .iter()
        .map(|&v| vec![false; view.initial_len(v)])
        .collect();
    let mut indices = vec![0usize; scope.len()];
    'tuples: for t in tuples {
        for (pos, (&var, &value)) in scope.iter().zip(t).enumerate() {
            match view.index_of(var, value) {
                Some(idx) if view.has_index(var, idx) => indices[pos] = idx,
                _ => continue 'tuples,
            }
        }
        for (pos, &idx) in indices.iter().enumerate() {
            supported[pos][idx] = true;
        }
    }
    let removed = scope
        .iter()
        .zip(&supported)
        .map(|(&v, sup)| view.retain_indices(v, |idx| sup[idx]))
        .sum();
    PropagationOutcome::checked(view, scope, removed)
}
