use crate::csp::{Csp, Domain, VarId};

/// Per-variable bitset over the initial domain plus a removal trail.
///
/// Values are addressed by their index in the variable's initial domain.
/// Every removal is recorded on the trail; [`DomainView::pop_level`]
/// restores the exact sets that were live at the matching
/// [`DomainView::push_level`].
#[derive(Clone, Debug)]
pub struct DomainView {
    /// Bitset words of every variable, laid out back to back.
    bits: Vec<u64>,
    /// `offsets[v]..offsets[v + 1]` are the words of variable `v`.
    offsets: Vec<u32>,
    sizes: Vec<u32>,
    initial: Vec<Vec<i64>>,
    /// `Some(lo)` when the initial domain is the contiguous range starting at `lo`.
    base: Vec<Option<i64>>,
    trail: Vec<(u32, u32)>,
    marks: Vec<usize>,
    /// Copies of `bits` and `sizes` per level, kept for small views where
    /// copying back is cheaper than replaying the trail.
    saved_bits: Vec<u64>,
    saved_sizes: Vec<u32>,
}

/// Views up to this many bitset words save a copy per level.
const COPY_WORDS: usize = 1024;

impl DomainView {
    pub fn new(csp: &Csp) -> Self {
        Self::from_domains(csp.domains())
    }

    pub fn from_domains(domains: &[Domain]) -> Self {
        let mut bits = Vec::new();
        let mut offsets = vec![0u32];
        for d in domains {
            let len = d.values().len();
            bits.extend(std::iter::repeat_n(u64::MAX, len.div_ceil(64)));
            if len % 64 != 0 {
                *bits.last_mut().expect("non-empty") = (1u64 << (len % 64)) - 1;
            }
            offsets.push(bits.len() as u32);
        }
        DomainView {
            bits,
            offsets,
            sizes: domains.iter().map(|d| d.values().len() as u32).collect(),
            initial: domains.iter().map(|d| d.values().to_vec()).collect(),
            base: domains
                .iter()
                .map(|d| {
                    let v = d.values();
                    let contiguous = v.last().copied() == Some(v[0] + v.len() as i64 - 1);
                    contiguous.then_some(v[0])
                })
                .collect(),
            trail: Vec::new(),
            marks: Vec::new(),
            saved_bits: Vec::new(),
            saved_sizes: Vec::new(),
        }
    }

    #[inline]
    fn range(&self, var: VarId) -> std::ops::Range<usize> {
        self.offsets[var] as usize..self.offsets[var + 1] as usize
    }

    #[inline]
    fn has(&self, var: VarId, idx: usize) -> bool {
        self.bits[self.offsets[var] as usize + idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn num_vars(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn size(&self, var: VarId) -> usize {
        self.sizes[var] as usize
    }

    #[inline]
    pub fn is_empty(&self, var: VarId) -> bool {
        self.sizes[var] == 0
    }

    #[inline]
    pub fn is_fixed(&self, var: VarId) -> bool {
        self.sizes[var] == 1
    }

    pub fn contains(&self, var: VarId, value: i64) -> bool {
        self.index_of(var, value).is_some_and(|i| self.has(var, i))
    }

    /// Live values in ascending order.
    pub fn values(&self, var: VarId) -> impl Iterator<Item = i64> + '_ {
        let initial = &self.initial[var];
        self.live_indices(var).map(move |i| initial[i])
    }

    #[inline]
    pub fn min(&self, var: VarId) -> Option<i64> {
        self.words(var)
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(w, &word)| self.initial[var][w * 64 + word.trailing_zeros() as usize])
    }

    pub fn max(&self, var: VarId) -> Option<i64> {
        self.words(var)
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(w, &word)| self.initial[var][w * 64 + 63 - word.leading_zeros() as usize])
    }

    /// The single remaining value, if fixed.
    #[inline]
    pub fn value(&self, var: VarId) -> Option<i64> {
        if self.is_fixed(var) {
            self.min(var)
        } else {
            None
        }
    }

    /// Index-space accessors for propagators that keep per-value flags.
    pub fn initial_len(&self, var: VarId) -> usize {
        self.initial[var].len()
    }

    #[inline]
    pub fn index_of(&self, var: VarId, value: i64) -> Option<usize> {
        let initial = &self.initial[var];
        match self.base[var] {
            Some(lo) => {
                let i = value.checked_sub(lo)?;
                (0..initial.len() as i64).contains(&i).then_some(i as usize)
            }
            None => initial.binary_search(&value).ok(),
        }
    }

    pub fn value_at(&self, var: VarId, idx: usize) -> i64 {
        self.initial[var][idx]
    }

    pub fn has_index(&self, var: VarId, idx: usize) -> bool {
        self.has(var, idx)
    }

    pub fn live_indices(&self, var: VarId) -> impl Iterator<Item = usize> + '_ {
        self.words(var).iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Removes the value at index `idx < initial_len(var)`; returns
    /// whether it was present.
    #[inline]
    pub fn remove_index(&mut self, var: VarId, idx: usize) -> bool {
        let w = self.offsets[var] as usize + idx / 64;
        let bit = 1u64 << (idx % 64);
        if self.bits[w] & bit == 0 {
            return false;
        }
        self.bits[w] &= !bit;
        self.sizes[var] -= 1;
        self.trail.push((var as u32, idx as u32));
        true
    }

    /// Removes `value`; returns whether it was present.
    #[inline]
    pub fn remove(&mut self, var: VarId, value: i64) -> bool {
        match self.index_of(var, value) {
            Some(i) => self.remove_index(var, i),
            None => false,
        }
    }

    /// Whether the initial domain is `0..len`, so indices equal values.
    #[inline]
    pub fn zero_based(&self, var: VarId) -> bool {
        self.base[var] == Some(0)
    }

    /// Keeps only indices set in `mask` (missing words count as empty);
    /// returns the number removed.
    pub fn retain_mask(&mut self, var: VarId, mask: &[u64]) -> usize {
        self.retain_words(var, |w| mask.get(w).copied().unwrap_or(0))
    }

    /// Keeps only indices in `lo..hi`.
    fn retain_index_range(&mut self, var: VarId, lo: usize, hi: usize) -> usize {
        self.retain_words(var, |w| {
            let (start, end) = (w * 64, w * 64 + 64);
            if hi <= start || lo >= end || lo >= hi {
                return 0;
            }
            let from = lo.saturating_sub(start);
            let to = hi.min(end) - start;
            let upper = if to == 64 { u64::MAX } else { (1u64 << to) - 1 };
            upper & !((1u64 << from) - 1)
        })
    }

    fn retain_words(&mut self, var: VarId, mask: impl Fn(usize) -> u64) -> usize {
        let range = self.range(var);
        let mut removed = 0;
        for (w, slot) in self.bits[range].iter_mut().enumerate() {
            let mut doomed = *slot & !mask(w);
            if doomed == 0 {
                continue;
            }
            *slot &= !doomed;
            removed += doomed.count_ones() as usize;
            while doomed != 0 {
                let b = doomed.trailing_zeros() as usize;
                doomed &= doomed - 1;
                self.trail.push((var as u32, (w * 64 + b) as u32));
            }
        }
        self.sizes[var] -= removed as u32;
        removed
    }

    /// Live-index bitset words, for word-parallel propagators.
    #[inline]
    pub fn words(&self, var: VarId) -> &[u64] {
        &self.bits[self.range(var)]
    }

    /// Keeps only values whose index satisfies `keep`; returns the number removed.
    pub fn retain_indices(&mut self, var: VarId, mut keep: impl FnMut(usize) -> bool) -> usize {
        let range = self.range(var);
        let mut removed = 0;
        for (w, slot) in self.bits[range].iter_mut().enumerate() {
            let mut word = *slot;
            let mut doomed = 0u64;
            while word != 0 {
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                if !keep(w * 64 + b) {
                    doomed |= 1 << b;
                    self.trail.push((var as u32, (w * 64 + b) as u32));
                }
            }
            *slot &= !doomed;
            removed += doomed.count_ones() as usize;
        }
        self.sizes[var] -= removed as u32;
        removed
    }

    /// Keeps only values satisfying `keep`; returns the number removed.
    pub fn retain(&mut self, var: VarId, mut keep: impl FnMut(i64) -> bool) -> usize {
        let initial = std::mem::take(&mut self.initial[var]);
        let removed = self.retain_indices(var, |i| keep(initial[i]));
        self.initial[var] = initial;
        removed
    }

    /// Reduces the domain to `{value}`; returns the number removed.
    pub fn assign(&mut self, var: VarId, value: i64) -> usize {
        match self.index_of(var, value) {
            Some(i) if self.has(var, i) => {
                if self.sizes[var] == 1 {
                    return 0;
                }
                self.retain_index_range(var, i, i + 1)
            }
            _ => self.retain_index_range(var, 0, 0),
        }
    }

    /// Number of initial values below `bound`.
    fn rank_of(&self, var: VarId, bound: i64) -> usize {
        let initial = &self.initial[var];
        match self.base[var] {
            Some(lo) => bound.saturating_sub(lo).clamp(0, initial.len() as i64) as usize,
            None => initial.partition_point(|&v| v < bound),
        }
    }

    pub fn remove_below(&mut self, var: VarId, bound: i64) -> usize {
        let lo = self.rank_of(var, bound);
        self.retain_index_range(var, lo, usize::MAX)
    }

    pub fn remove_above(&mut self, var: VarId, bound: i64) -> usize {
        let hi = self.rank_of(var, bound.saturating_add(1));
        self.retain_index_range(var, 0, hi)
    }

    /// The removal at trail position `k`, as `(var, index)`.
    pub fn removal(&self, k: usize) -> (VarId, usize) {
        let (v, i) = self.trail[k];
        (v as usize, i as usize)
    }

    pub fn push_level(&mut self) {
        self.marks.push(self.trail.len());
        if self.bits.len() <= COPY_WORDS {
            self.saved_bits.extend_from_slice(&self.bits);
            self.saved_sizes.extend_from_slice(&self.sizes);
        }
    }

    /// Undoes every removal since the matching `push_level`.
    pub fn pop_level(&mut self) {
        let mark = self.marks.pop().expect("pop_level without push_level");
        if self.bits.len() <= COPY_WORDS {
            let (nb, ns) = (self.bits.len(), self.sizes.len());
            let (fb, fs) = (self.saved_bits.len() - nb, self.saved_sizes.len() - ns);
            self.bits.copy_from_slice(&self.saved_bits[fb..]);
            self.sizes.copy_from_slice(&self.saved_sizes[fs..]);
            self.saved_bits.truncate(fb);
            self.saved_sizes.truncate(fs);
            self.trail.truncate(mark);
            return;
        }
        for (var, idx) in self.trail.drain(mark..) {
            let w = self.offsets[var as usize] as usize + idx as usize / 64;
            self.bits[w] |= 1u64 << (idx % 64);
            self.sizes[var as usize] += 1;
        }
    }

    pub fn depth(&self) -> usize {
        self.marks.len()
    }

    /// Current trail length; removals after this point are `trail_since(mark)`.
    pub fn trail_len(&self) -> usize {
        self.trail.len()
    }

    pub fn trail_since(&self, mark: usize) -> impl Iterator<Item = VarId> + '_ {
        self.trail[mark..].iter().map(|&(v, _)| v as usize)
    }

    /// Snapshot of all live values, for comparisons in tests and reports.
    pub fn snapshot(&self) -> Vec<Vec<i64>> {
        (0..self.num_vars())
            .map(|v| self.values(v).collect())
            .collect()
    }

    /// True if every variable's live set is a subset of `other`'s.
    pub fn is_subset_of(&self, other: &DomainView) -> bool {
        self.num_vars() == other.num_vars()
            && (0..self.num_vars()).all(|v| self.values(v).all(|x| other.contains(v, x)))
    }
}
