//! Propagators compiled once against the initial domains, for repeated
//! calls during search. Each prunes exactly what its direct counterpart
//! ([`propagate_table`](super::propagate_table),
//! [`propagate_regular`](super::propagate_regular),
//! [`propagate_adjacency`](super::propagate_adjacency)) prunes.

use super::{DomainView, PropagationOutcome};
use crate::automaton::Dfa;
use crate::csp::VarId;

/// Word-parallel adjacency for domains `0..k` with `k <= 64`. Value `v`
/// sits at bit `v`, so rank `r` occupies bits `r, r + m, r + 2m, ...`, and
/// a value is supported iff its rank is a rotation of a present rank.
#[derive(Clone, Debug)]
pub struct CompiledAdjacency {
    x: VarId,
    y: VarId,
    m: u32,
    /// One bit at the start of each block of `m` values.
    spread: u64,
    /// The low `m` bits.
    ranks_mask: u64,
    /// The low `k` bits.
    values_mask: u64,
    /// Right shifts of the doubled rank mask taking ranks of `y` to
    /// supported ranks of `x`, and back.
    to_x: Vec<u32>,
    to_y: Vec<u32>,
}

impl CompiledAdjacency {
    /// `None` unless both domains are `0..k` with `k <= 64` and `modulus <= 64`.
    pub fn new(modulus: i64, allowed: &[i64], scope: &[VarId], view: &DomainView) -> Option<Self> {
        let (x, y) = (scope[0], scope[1]);
        let small = |v: VarId| view.zero_based(v) && view.initial_len(v) <= 64;
        if !(small(x) && small(y)) || !(1..=64).contains(&modulus) {
            return None;
        }
        let m = modulus as usize;
        let len = view.initial_len(x).max(view.initial_len(y));
        let low = |bits: usize| if bits >= 64 { !0 } else { (1u64 << bits) - 1 };
        let shifts = |sign: i64| -> Vec<u32> {
            let mut out: Vec<u32> = allowed
                .iter()
                .map(|&d| (modulus - (sign * d).rem_euclid(modulus)) as u32)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        };
        Some(CompiledAdjacency {
            x,
            y,
            m: m as u32,
            spread: (0..len.div_ceil(m)).fold(0, |acc, b| acc | 1 << (b * m)),
            ranks_mask: low(m),
            values_mask: low(len),
            to_x: shifts(1),
            to_y: shifts(-1),
        })
    }

    /// Whether `var` still holds a value with the rank of `value`. When it
    /// does, removing `value` left the rank sets, and so this constraint's
    /// pruning, unchanged.
    #[inline]
    pub fn has_rank_of(&self, view: &DomainView, var: VarId, value: i64) -> bool {
        let word = view.words(var).first().copied().unwrap_or(0);
        word & (self.spread << value.rem_euclid(self.m as i64)) != 0
    }

    #[inline]
    fn ranks(&self, mut word: u64) -> u64 {
        let mut acc = 0;
        while word != 0 {
            acc |= word;
            word = word.checked_shr(self.m).unwrap_or(0);
        }
        acc & self.ranks_mask
    }

    fn values(&self, ranks: u64) -> u64 {
        ranks.wrapping_mul(self.spread) & self.values_mask
    }

    /// Ranks reachable from `present` by one of `shifts`.
    fn rotate(&self, present: u64, shifts: &[u32]) -> u64 {
        let doubled = present as u128 | (present as u128) << self.m;
        shifts.iter().fold(0, |acc, &s| acc | (doubled >> s) as u64) & self.ranks_mask
    }

    pub fn propagate(&self, view: &mut DomainView) -> PropagationOutcome {
        let word = |view: &DomainView, v: VarId| view.words(v).first().copied().unwrap_or(0);
        let (rx, ry) = (
            self.ranks(word(view, self.x)),
            self.ranks(word(view, self.y)),
        );
        let (sx, sy) = (self.rotate(ry, &self.to_x), self.rotate(rx, &self.to_y));
        if rx & !sx == 0 && ry & !sy == 0 {
            return PropagationOutcome::fixpoint(0);
        }
        let mut removed = view.retain_mask(self.x, &[self.values(sx)]);
        if view.is_empty(self.x) {
            return PropagationOutcome::failure(removed);
        }
        let sy = self.rotate(self.ranks(word(view, self.x)), &self.to_y);
        removed += view.retain_mask(self.y, &[self.values(sy)]);
        if view.is_empty(self.y) {
            return PropagationOutcome::failure(removed);
        }
        PropagationOutcome::fixpoint(removed)
    }
}

/// `x < y` on the bitset words of two distinct variables over `0..k`,
/// `k <= 64`.
#[derive(Clone, Debug)]
pub struct CompiledLess {
    x: VarId,
    y: VarId,
}

impl CompiledLess {
    pub fn new(x: VarId, y: VarId, view: &DomainView) -> Option<Self> {
        let small = |v: VarId| view.zero_based(v) && view.initial_len(v) <= 64;
        (x != y && small(x) && small(y)).then_some(CompiledLess { x, y })
    }

    pub fn propagate(&self, view: &mut DomainView) -> PropagationOutcome {
        let word = |view: &DomainView, v: VarId| view.words(v).first().copied().unwrap_or(0);
        let wy = word(view, self.y);
        // values of x strictly below max(y)
        let below = match wy {
            0 => 0,
            _ => (1u64 << (63 - wy.leading_zeros())) - 1,
        };
        let mut removed = view.retain_mask(self.x, &[below]);
        let wx = word(view, self.x);
        if wx == 0 {
            return PropagationOutcome::failure(removed);
        }
        // values of y strictly above min(x)
        let above = (!1u64).checked_shl(wx.trailing_zeros()).unwrap_or(0);
        removed += view.retain_mask(self.y, &[above]);
        if view.is_empty(self.y) {
            return PropagationOutcome::failure(removed);
        }
        PropagationOutcome::fixpoint(removed)
    }
}

/// A binary relation over domains `0..k` with `k <= 64`, stored as one
/// support word per value on each side.
#[derive(Clone, Debug)]
pub struct CompiledPair {
    x: VarId,
    y: VarId,
    /// `to_y[i]`: indices of `y` compatible with index `i` of `x`.
    to_y: Vec<u64>,
    to_x: Vec<u64>,
}

impl CompiledPair {
    /// `None` unless the scope is two distinct variables over `0..k` with
    /// `k <= 64`.
    pub fn new(
        scope: &[VarId],
        view: &DomainView,
        allowed: impl Fn(i64, i64) -> bool,
    ) -> Option<Self> {
        let &[x, y] = scope else { return None };
        let small = |v: VarId| view.zero_based(v) && view.initial_len(v) <= 64;
        if x == y || !(small(x) && small(y)) {
            return None;
        }
        let (kx, ky) = (view.initial_len(x), view.initial_len(y));
        let to_y: Vec<u64> = (0..kx)
            .map(|i| {
                (0..ky)
                    .filter(|&j| allowed(i as i64, j as i64))
                    .fold(0, |acc, j| acc | 1 << j)
            })
            .collect();
        let to_x: Vec<u64> = (0..ky)
            .map(|j| {
                (0..kx)
                    .filter(|&i| to_y[i] >> j & 1 == 1)
                    .fold(0, |acc, i| acc | 1 << i)
            })
            .collect();
        Some(CompiledPair { x, y, to_y, to_x })
    }

    fn supports(view: &DomainView, var: VarId, rows: &[u64]) -> u64 {
        let mut live = view.words(var).first().copied().unwrap_or(0);
        let mut out = 0;
        while live != 0 {
            out |= rows[live.trailing_zeros() as usize];
            live &= live - 1;
        }
        out
    }

    pub fn propagate(&self, view: &mut DomainView) -> PropagationOutcome {
        let mut removed = view.retain_mask(self.x, &[Self::supports(view, self.y, &self.to_x)]);
        if view.is_empty(self.x) {
            return PropagationOutcome::failure(removed);
        }
        removed += view.retain_mask(self.y, &[Self::supports(view, self.x, &self.to_y)]);
        if view.is_empty(self.y) {
            return PropagationOutcome::failure(removed);
        }
        PropagationOutcome::fixpoint(removed)
    }
}

/// Tuple bitsets per `(position, value index)`: a tuple is valid when every
/// position's live values cover it, and a value is supported when its
/// bitset meets the valid tuples.
#[derive(Clone, Debug)]
pub struct CompiledTable {
    scope: Vec<VarId>,
    words: usize,
    /// `supports[pos][idx * words..(idx + 1) * words]`.
    supports: Vec<Vec<u64>>,
    valid: Vec<u64>,
    cover: Vec<u64>,
    keep: Vec<u64>,
}

impl CompiledTable {
    pub fn new(tuples: &[Vec<i64>], scope: &[VarId], view: &DomainView) -> Self {
        let words = tuples.len().div_ceil(64).max(1);
        let mut supports: Vec<Vec<u64>> = scope
            .iter()
            .map(|&v| vec![0; view.initial_len(v) * words])
            .collect();
        'tuples: for (k, t) in tuples.iter().enumerate() {
            let mut idx = Vec::with_capacity(scope.len());
            for (&var, &value) in scope.iter().zip(t) {
                match view.index_of(var, value) {
                    Some(i) => idx.push(i),
                    None => continue 'tuples,
                }
            }
            for (pos, i) in idx.into_iter().enumerate() {
                supports[pos][i * words + k / 64] |= 1 << (k % 64);
            }
        }
        CompiledTable {
            scope: scope.to_vec(),
            words,
            supports,
            valid: vec![0; words],
            cover: vec![0; words],
            keep: Vec::new(),
        }
    }

    pub fn propagate(&mut self, view: &mut DomainView) -> PropagationOutcome {
        let w = self.words;
        self.valid.fill(!0);
        for (pos, &var) in self.scope.iter().enumerate() {
            self.cover.fill(0);
            for idx in view.live_indices(var) {
                let row = &self.supports[pos][idx * w..(idx + 1) * w];
                for (c, r) in self.cover.iter_mut().zip(row) {
                    *c |= r;
                }
            }
            for (v, c) in self.valid.iter_mut().zip(&self.cover) {
                *v &= c;
            }
        }
        let mut removed = 0;
        for (pos, &var) in self.scope.iter().enumerate() {
            self.keep.clear();
            self.keep.resize(view.words(var).len(), 0);
            for idx in view.live_indices(var) {
                let row = &self.supports[pos][idx * w..(idx + 1) * w];
                if row.iter().zip(&self.valid).any(|(r, v)| r & v != 0) {
                    self.keep[idx / 64] |= 1 << (idx % 64);
                }
            }
            removed += view.retain_mask(var, &self.keep);
            if view.is_empty(var) {
                return PropagationOutcome::failure(removed);
            }
        }
        PropagationOutcome::fixpoint(removed)
    }
}

/// The automaton's transitions per layer as `(from, value index, to)`,
/// with per-state reachability buffers reused across calls.
#[derive(Clone, Debug)]
pub struct CompiledRegular {
    scope: Vec<VarId>,
    start: usize,
    finals: Vec<usize>,
    edges: Vec<Vec<(u32, u32, u32)>>,
    forward: Vec<bool>,
    backward: Vec<bool>,
    keep: Vec<Vec<u64>>,
}

impl CompiledRegular {
    pub fn new(dfa: &Dfa, scope: &[VarId], view: &DomainView) -> Self {
        let layers = dfa.layers();
        let edges = scope
            .iter()
            .enumerate()
            .map(|(i, &var)| {
                layers[i]
                    .iter()
                    .flat_map(|&s| {
                        dfa.edges(s).iter().filter_map(move |&(a, t)| {
                            view.index_of(var, a).map(|idx| (s, idx as u32, t))
                        })
                    })
                    .collect()
            })
            .collect();
        CompiledRegular {
            scope: scope.to_vec(),
            start: dfa.start() as usize,
            finals: layers[scope.len()]
                .iter()
                .filter(|&&s| dfa.is_final(s))
                .map(|&s| s as usize)
                .collect(),
            edges,
            forward: vec![false; dfa.num_states()],
            backward: vec![false; dfa.num_states()],
            keep: scope
                .iter()
                .map(|&v| vec![0; view.words(v).len()])
                .collect(),
        }
    }

    pub fn propagate(&mut self, view: &mut DomainView) -> PropagationOutcome {
        self.forward.fill(false);
        self.forward[self.start] = true;
        for (layer, &var) in self.edges.iter().zip(&self.scope) {
            for &(s, idx, t) in layer {
                if self.forward[s as usize] && view.has_index(var, idx as usize) {
                    self.forward[t as usize] = true;
                }
            }
        }
        self.backward.fill(false);
        for &s in &self.finals {
            self.backward[s] = self.forward[s];
        }
        for i in (0..self.scope.len()).rev() {
            let var = self.scope[i];
            let keep = &mut self.keep[i];
            keep.fill(0);
            for &(s, idx, t) in &self.edges[i] {
                let (s, idx) = (s as usize, idx as usize);
                if self.backward[t as usize] && self.forward[s] && view.has_index(var, idx) {
                    self.backward[s] = true;
                    keep[idx / 64] |= 1 << (idx % 64);
                }
            }
        }
        if !self.backward[self.start] {
            return PropagationOutcome::failure(0);
        }
        let mut removed = 0;
        for (&var, keep) in self.scope.iter().zip(&self.keep) {
            removed += view.retain_mask(var, keep);
            if view.is_empty(var) {
                return PropagationOutcome::failure(removed);
            }
        }
        PropagationOutcome::fixpoint(removed)
    }
}
