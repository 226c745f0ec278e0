//! Language enumeration, layer-wise minimization, positional lifting and
//! product intersection.

use std::collections::HashMap;

use super::{AutomatonError, Dfa, SolutionSet, StateId};
use crate::csp::Domain;

/// All accepted words, in lexicographic order.
pub fn enumerate_language(d: &Dfa) -> SolutionSet {
    let live = d.live_states();
    let mut words = Vec::new();
    if !live[d.start() as usize] {
        return SolutionSet::from_distinct(d.word_len(), words);
    }
    let mut word = Vec::with_capacity(d.word_len());
    // explicit stack of (state, next edge index)
    let mut stack: Vec<(StateId, usize)> = vec![(d.start(), 0)];
    while let Some(top) = stack.last_mut() {
        let (s, i) = *top;
        if word.len() == d.word_len() {
            if d.is_final(s) {
                words.push(word.clone());
            }
            stack.pop();
            word.pop();
            continue;
        }
        match d.edges(s).get(i) {
            Some(&(a, t)) => {
                top.1 += 1;
                if live[t as usize] {
                    word.push(a);
                    stack.push((t, 0));
                }
            }
            None => {
                stack.pop();
                word.pop();
            }
        }
    }
    SolutionSet::from_distinct(d.word_len(), words)
}

/// Smallest layered automaton for the same language.
///
/// Dead states are dropped, then states are merged bottom-up: two states on
/// the same layer collapse when they agree on finality and on every
/// outgoing `(symbol, merged target)` pair.
pub fn minimize(d: &Dfa) -> Dfa {
    let live = d.live_states();
    if !live[d.start() as usize] {
        return Dfa::empty(d.word_len(), d.alphabet().iter().copied());
    }
    let mut class: Vec<StateId> = vec![StateId::MAX; d.num_states()];
    let mut class_edges: Vec<Vec<(i64, StateId)>> = Vec::new();
    let mut class_final: Vec<bool> = Vec::new();
    for layer in d.layers().iter().rev() {
        let mut seen: HashMap<(bool, Vec<(i64, StateId)>), StateId> = HashMap::new();
        for &s in layer.iter().filter(|&&s| live[s as usize]) {
            let out: Vec<(i64, StateId)> = d
                .edges(s)
                .iter()
                .filter(|&&(_, t)| live[t as usize])
                .map(|&(a, t)| (a, class[t as usize]))
                .collect();
            let key = (d.is_final(s), out);
            let next_id = class_edges.len() as StateId;
            let id = *seen.entry(key.clone()).or_insert_with(|| {
                class_edges.push(key.1);
                class_final.push(key.0);
                next_id
            });
            class[s as usize] = id;
        }
    }
    Dfa::from_parts(
        d.alphabet().to_vec(),
        class_edges,
        class[d.start() as usize],
        class_final,
        d.word_len(),
    )
    .expect("merging preserves layering")
    .canonical()
}

/// Embeds `d` into words of length `full_len`: position `k` of a word of `d`
/// is read at `positions[k]`, and every other position accepts any value of
/// its domain in `full_domains`.
pub fn lift(
    d: &Dfa,
    positions: &[usize],
    full_len: usize,
    full_domains: &[Domain],
) -> Result<Dfa, AutomatonError> {
    if positions.len() != d.word_len() {
        return Err(AutomatonError::ArityMismatch {
            expected: d.word_len(),
            found: positions.len(),
        });
    }
    if full_domains.len() != full_len {
        return Err(AutomatonError::ArityMismatch {
            expected: full_len,
            found: full_domains.len(),
        });
    }
    if let Some(&p) = positions.iter().find(|&&p| p >= full_len) {
        return Err(AutomatonError::PositionOutOfRange {
            position: p,
            len: full_len,
        });
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AutomatonError::PositionsNotIncreasing);
    }

    let mut covered = vec![false; full_len];
    for &p in positions {
        covered[p] = true;
    }
    let mut alphabet: Vec<i64> = d.alphabet().to_vec();
    for (j, dom) in full_domains.iter().enumerate() {
        if !covered[j] {
            alphabet.extend_from_slice(dom.values());
        }
    }
    alphabet.sort_unstable();
    alphabet.dedup();

    // new state per (layer, original state)
    let mut ids: HashMap<(usize, StateId), StateId> = HashMap::new();
    let mut edges: Vec<Vec<(i64, StateId)>> = Vec::new();
    let mut is_final: Vec<bool> = Vec::new();
    let mut frontier = vec![d.start()];
    ids.insert((0, d.start()), 0);
    edges.push(Vec::new());
    is_final.push(full_len == 0 && d.is_final(d.start()));

    for j in 0..full_len {
        let mut next_frontier = Vec::new();
        for &s in &frontier {
            let from = ids[&(j, s)];
            let targets: Vec<(i64, StateId)> = if covered[j] {
                d.edges(s).to_vec()
            } else {
                full_domains[j].values().iter().map(|&v| (v, s)).collect()
            };
            for (a, t) in targets {
                let to = *ids.entry((j + 1, t)).or_insert_with(|| {
                    edges.push(Vec::new());
                    is_final.push(j + 1 == full_len && d.is_final(t));
                    next_frontier.push(t);
                    (edges.len() - 1) as StateId
                });
                edges[from as usize].push((a, to));
            }
        }
        frontier = next_frontier;
    }
    Ok(Dfa::from_parts(alphabet, edges, 0, is_final, full_len)?.canonical())
}

pub fn intersect(a: &Dfa, b: &Dfa) -> Result<Dfa, AutomatonError> {
    intersect_bounded(a, b, None)
}

/// Product automaton over reachable state pairs, trimmed of states that
/// cannot reach an accepting pair. Fails with `BudgetExceeded` as soon as
/// the product holds more than `budget` states.
pub fn intersect_bounded(a: &Dfa, b: &Dfa, budget: Option<usize>) -> Result<Dfa, AutomatonError> {
    if a.word_len() != b.word_len() {
        return Err(AutomatonError::LengthMismatch(a.word_len(), b.word_len()));
    }
    let alphabet: Vec<i64> = a
        .alphabet()
        .iter()
        .copied()
        .filter(|x| b.alphabet().binary_search(x).is_ok())
        .collect();
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut pairs: Vec<(StateId, StateId)> = vec![(a.start(), b.start())];
    let mut edges: Vec<Vec<(i64, StateId)>> = vec![Vec::new()];
    ids.insert((a.start(), b.start()), 0);
    let mut head = 0;
    while head < pairs.len() {
        let (p, q) = pairs[head];
        let (ea, eb) = (a.edges(p), b.edges(q));
        let (mut i, mut j) = (0, 0);
        // merge-join on sorted symbols
        while i < ea.len() && j < eb.len() {
            match ea[i].0.cmp(&eb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let key = (ea[i].1, eb[j].1);
                    let to = match ids.get(&key) {
                        Some(&id) => id,
                        None => {
                            let id = pairs.len() as StateId;
                            if budget.is_some_and(|limit| pairs.len() >= limit) {
                                return Err(AutomatonError::BudgetExceeded(budget.unwrap()));
                            }
                            ids.insert(key, id);
                            pairs.push(key);
                            edges.push(Vec::new());
                            id
                        }
                    };
                    edges[head].push((ea[i].0, to));
                    i += 1;
                    j += 1;
                }
            }
        }
        head += 1;
    }
    let is_final = pairs
        .iter()
        .map(|&(p, q)| a.is_final(p) && b.is_final(q))
        .collect();
    let product = Dfa::from_parts(alphabet, edges, 0, is_final, a.word_len())?;
    Ok(trim(&product))
}

/// Drops states that cannot reach an accepting state.
pub(crate) fn trim(d: &Dfa) -> Dfa {
    let live = d.live_states();
    if !live[d.start() as usize] {
        return Dfa::empty(d.word_len(), d.alphabet().iter().copied());
    }
    let edges = (0..d.num_states())
        .map(|s| {
            d.edges(s as StateId)
                .iter()
                .copied()
                .filter(|&(_, t)| live[t as usize])
                .collect()
        })
        .collect();
    let is_final = (0..d.num_states())
        .map(|s| d.is_final(s as StateId))
        .collect();
    Dfa::from_parts(
        d.alphabet().to_vec(),
        edges,
        d.start(),
        is_final,
        d.word_len(),
    )
    .expect("trimming preserves layering")
    .canonical()
}
