use super::{DomainView, PropagationOutcome};
use crate::csp::{Constraint, ConstraintKind, VarId};

/// Arc consistency for `(rank(a) - rank(b)) mod modulus ∈ allowed`, with
/// `rank(v) = v mod modulus`. Supports are found through the set of ranks
/// present in the other domain.
pub fn propagate_adjacency(
    modulus: i64,
    allowed: &[i64],
    scope: &[VarId],
    view: &mut DomainView,
) -> PropagationOutcome {
    let (x, y) = (scope[0], scope[1]);
    let m = modulus as usize;
    // supported[r]: some rank r' present in `other` with (r - r') mod m allowed,
    // where `sign` flips the difference for the second variable
    let supported = |view: &DomainView, other: VarId, sign: i64| {
        let mut present = vec![false; m];
        for v in view.values(other) {
            present[v.rem_euclid(modulus) as usize] = true;
        }
        let mut ok = vec![false; m];
        for (r, slot) in ok.iter_mut().enumerate() {
            *slot = allowed
                .iter()
                .any(|&d| present[(r as i64 - sign * d).rem_euclid(modulus) as usize]);
        }
        ok
    };
    let ok_x = supported(view, y, 1);
    let mut removed = view.retain(x, |a| ok_x[a.rem_euclid(modulus) as usize]);
    let ok_y = supported(view, x, -1);
    removed += view.retain(y, |b| ok_y[b.rem_euclid(modulus) as usize]);
    PropagationOutcome::checked(view, scope, removed)
}

/// Bounds rule for `x < y`.
pub fn propagate_less_than(x: VarId, y: VarId, view: &mut DomainView) -> PropagationOutcome {
    let mut removed = 0;
    if let Some(max_y) = view.max(y) {
        removed += view.remove_above(x, max_y - 1);
    }
    if let Some(min_x) = view.min(x) {
        removed += view.remove_below(y, min_x + 1);
    }
    PropagationOutcome::checked(view, &[x, y], removed)
}

/// `x != y`: prune the peer of a fixed variable.
pub fn propagate_not_equal(x: VarId, y: VarId, view: &mut DomainView) -> PropagationOutcome {
    let mut removed = 0;
    if let Some(v) = view.value(x) {
        removed += usize::from(view.remove(y, v));
    }
    if let Some(v) = view.value(y) {
        removed += usize::from(view.remove(x, v));
    }
    PropagationOutcome::checked(view, &[x, y], removed)
}

pub fn propagate_fixed(x: VarId, value: i64, view: &mut DomainView) -> PropagationOutcome {
    let removed = view.assign(x, value);
    PropagationOutcome::checked(view, &[x], removed)
}

/// `x_i = j <=> y_j = i` over a scope `x_0..x_{m-1}, y_0..y_{m-1}`.
///
/// Values outside `0..m` are pruned from both halves, then `j` leaves
/// `x_i` whenever `i` is gone from `y_j` and vice versa, and a fixed
/// `x_i = j` fixes `y_j = i` (and symmetrically). Repeats until stable.
pub fn propagate_channeling(scope: &[VarId], view: &mut DomainView) -> PropagationOutcome {
    let m = scope.len() / 2;
    let (xs, ys) = scope.split_at(m);
    let in_range = |v: i64| (0..m as i64).contains(&v);
    let mut removed = 0;
    for &var in scope {
        if !(view.zero_based(var) && view.initial_len(var) <= m) {
            removed += view.retain(var, in_range);
        }
        if view.is_empty(var) {
            return PropagationOutcome::failure(removed);
        }
    }
    let words = m.div_ceil(64);
    let indexed = scope.iter().all(|&v| view.zero_based(v));
    // supports[i] = { j : i in D(to[j]) }, as a bitset over j
    let mut supports = vec![0u64; m * words];
    loop {
        let before = removed;
        for (from, to) in [(xs, ys), (ys, xs)] {
            supports.fill(0);
            for (j, &y) in to.iter().enumerate() {
                for i in view.values(y) {
                    supports[i as usize * words + j / 64] |= 1 << (j % 64);
                }
            }
            for (i, &x) in from.iter().enumerate() {
                let row = &supports[i * words..(i + 1) * words];
                removed += if indexed {
                    view.retain_mask(x, row)
                } else {
                    view.retain(x, |j| row[j as usize / 64] >> (j % 64) & 1 == 1)
                };
                if view.is_empty(x) {
                    return PropagationOutcome::failure(removed);
                }
                if let Some(j) = view.value(x) {
                    let y = to[j as usize];
                    removed += view.assign(y, i as i64);
                    if view.is_empty(y) {
                        return PropagationOutcome::failure(removed);
                    }
                }
            }
        }
        if removed == before {
            break;
        }
    }
    PropagationOutcome::checked(view, scope, removed)
}

/// Channeling restricted to the removals at trail positions `from..`,
/// assuming the constraint was at its fixpoint before them. Every domain in
/// the scope must be `0..k` so that indices are values; `position[v]` is
/// the place of `v` in `scope`, or `u32::MAX` outside it.
pub fn propagate_channeling_from(
    scope: &[VarId],
    position: &[u32],
    from: usize,
    view: &mut DomainView,
) -> PropagationOutcome {
    let m = scope.len() / 2;
    let mut removed = 0;
    let mut k = from;
    while k < view.trail_len() {
        let (var, j) = view.removal(k);
        k += 1;
        let Some(&p) = position.get(var) else {
            continue;
        };
        if p == u32::MAX || j >= m {
            continue;
        }
        let (p, half) = (p as usize % m, p as usize / m);
        let mirror = |q: usize| scope[(1 - half) * m + q];
        // zero-based domains: index and value coincide
        if p < view.initial_len(mirror(j)) {
            removed += view.remove_index(mirror(j), p) as usize;
        }
        if view.is_empty(mirror(j)) {
            return PropagationOutcome::failure(removed);
        }
        if let Some(q) = view.value(var) {
            let partner = mirror(q as usize);
            removed += view.assign(partner, p as i64);
            if view.is_empty(partner) {
                return PropagationOutcome::failure(removed);
            }
        }
    }
    PropagationOutcome::fixpoint(removed)
}

/// Dispatch for the kinds without an extensional or automaton payload.
pub fn propagate_binary_generic(c: &Constraint, view: &mut DomainView) -> PropagationOutcome {
    let s = c.scope();
    match c.kind() {
        ConstraintKind::LessThan => propagate_less_than(s[0], s[1], view),
        ConstraintKind::NotEqual => propagate_not_equal(s[0], s[1], view),
        ConstraintKind::FixedAssignment { value } => propagate_fixed(s[0], *value, view),
        ConstraintKind::InverseChanneling => propagate_channeling(s, view),
        ConstraintKind::BinaryAdjacency { modulus, allowed } => {
            propagate_adjacency(*modulus, allowed, s, view)
        }
        ConstraintKind::Table { .. } | ConstraintKind::Regular { .. } => super::propagate(c, view),
    }
}
