//! Random instance generators and brute-force oracles shared by the
//! integration suites. Oracles never call propagators or the search engine.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use csp_regularize::automaton::{build_dfa, Dfa, SolutionSet};
use csp_regularize::csp::{Constraint, Csp, CspBuilder, Domain};
use csp_regularize::propagation::DomainView;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Every tuple of the cartesian product, in lexicographic order.
pub fn product(domains: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                d.iter().map(move |&v| {
                    let mut t = prefix.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn values_of(domains: &[Domain]) -> Vec<Vec<i64>> {
    domains.iter().map(|d| d.values().to_vec()).collect()
}

/// Full solution set by filtering the cartesian product with the checker.
pub fn brute_force(csp: &Csp) -> BTreeSet<Vec<i64>> {
    product(&values_of(csp.domains()))
        .into_iter()
        .filter(|t| csp.check(t))
        .collect()
}

pub fn random_domain(rng: &mut StdRng, max_values: usize, universe: i64) -> Domain {
    let k = rng.gen_range(1..=max_values.min(universe as usize));
    let mut all: Vec<i64> = (0..universe).collect();
    all.shuffle(rng);
    Domain::from_unsorted(all[..k].to_vec()).unwrap()
}

/// Random relation over `domains` with between 1 and `max_tuples` tuples.
pub fn random_relation(rng: &mut StdRng, domains: &[Domain], max_tuples: usize) -> Vec<Vec<i64>> {
    let k = rng.gen_range(1..=max_tuples);
    let mut set = BTreeSet::new();
    for _ in 0..k {
        set.insert(
            domains
                .iter()
                .map(|d| *d.values().choose(rng).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    let mut tuples: Vec<Vec<i64>> = set.into_iter().collect();
    tuples.shuffle(rng);
    tuples
}

/// Random solution set with arity `1..=max_n`, alphabet `0..sigma`, at most
/// `max_k` tuples, plus per-position domains containing every used value.
pub fn random_solution_set(
    rng: &mut StdRng,
    max_n: usize,
    sigma: i64,
    max_k: usize,
) -> (SolutionSet, Vec<Domain>) {
    let n = rng.gen_range(1..=max_n);
    let domains: Vec<Domain> = (0..n)
        .map(|_| random_domain(rng, sigma as usize, sigma))
        .collect();
    let tuples = random_relation(rng, &domains, max_k);
    (SolutionSet::new(n, tuples).unwrap(), domains)
}

pub fn random_dfa(rng: &mut StdRng, domains: &[Domain], max_tuples: usize) -> (Dfa, Vec<Vec<i64>>) {
    let tuples = random_relation(rng, domains, max_tuples);
    let s = SolutionSet::new(domains.len(), tuples.clone()).unwrap();
    (build_dfa(&s, domains).unwrap(), tuples)
}

/// Random live subset of each domain (never empty).
pub fn random_view(rng: &mut StdRng, domains: &[Domain]) -> DomainView {
    let mut view = DomainView::from_domains(domains);
    for (v, d) in domains.iter().enumerate() {
        let keep = *d.values().choose(rng).unwrap();
        for &x in d.values() {
            if x != keep && rng.gen_bool(0.4) {
                view.remove(v, x);
            }
        }
    }
    view
}

/// Values with a supporting tuple inside the current domains.
pub fn gac_oracle(
    scope_len: usize,
    view: &DomainView,
    scope: &[usize],
    allowed: impl Fn(&[i64]) -> bool,
) -> Vec<BTreeSet<i64>> {
    let live: Vec<Vec<i64>> = scope.iter().map(|&v| view.values(v).collect()).collect();
    let mut supported = vec![BTreeSet::new(); scope_len];
    for t in product(&live) {
        // repeated variables must take one value
        let consistent =
            (0..scope.len()).all(|i| (0..i).all(|j| scope[i] != scope[j] || t[i] == t[j]));
        if consistent && allowed(&t) {
            for (i, &x) in t.iter().enumerate() {
                supported[i].insert(x);
            }
        }
    }
    supported
}

/// Small random CSP (size ≤ 10^6) mixing every constraint kind except
/// channeling, plus occasionally a channeling pair.
pub fn random_csp(rng: &mut StdRng) -> Csp {
    let mut b = CspBuilder::new();
    let n = rng.gen_range(2..=6);
    let mut domains = Vec::new();
    for i in 0..n {
        let d = random_domain(rng, 5, 7);
        domains.push(d.clone());
        b.var(format!("x{i}"), d);
    }
    let m = rng.gen_range(1..=6);
    for _ in 0..m {
        let x = rng.gen_range(0..n);
        let mut y = rng.gen_range(0..n);
        if y == x {
            y = (x + 1) % n;
        }
        let c = match rng.gen_range(0..6) {
            0 => Constraint::less_than(x, y),
            1 => Constraint::not_equal(x, y),
            2 => {
                let modulus = rng.gen_range(2..=5);
                let allowed: Vec<i64> = (0..modulus).filter(|_| rng.gen_bool(0.5)).collect();
                Constraint::adjacency(x, y, modulus, &allowed).unwrap()
            }
            3 => {
                let mut scope: Vec<usize> = (0..n).collect();
                scope.shuffle(rng);
                scope.truncate(rng.gen_range(1..=3.min(n)));
                let ds: Vec<Domain> = scope.iter().map(|&v| domains[v].clone()).collect();
                Constraint::table(scope, random_relation(rng, &ds, 12)).unwrap()
            }
            4 => {
                let mut scope: Vec<usize> = (0..n).collect();
                scope.shuffle(rng);
                scope.truncate(rng.gen_range(1..=3.min(n)));
                let ds: Vec<Domain> = scope.iter().map(|&v| domains[v].clone()).collect();
                let (dfa, _) = random_dfa(rng, &ds, 12);
                Constraint::regular(scope, Arc::new(dfa)).unwrap()
            }
            _ => {
                let v = *domains[x].values().choose(rng).unwrap();
                Constraint::fixed(x, v)
            }
        };
        b.post(c);
    }
    b.build().unwrap()
}

/// `x_i = j <=> y_j = i` CSP over `2m` variables with a random extra
/// constraint, used to exercise channeling.
pub fn random_channeling_csp(rng: &mut StdRng) -> Csp {
    let m = rng.gen_range(2..=4);
    let mut b = CspBuilder::new();
    let xs: Vec<usize> = (0..m)
        .map(|i| b.var(format!("x{i}"), Domain::range(0, m as i64 - 1).unwrap()))
        .collect();
    let ys: Vec<usize> = (0..m)
        .map(|i| b.var(format!("y{i}"), Domain::range(0, m as i64 - 1).unwrap()))
        .collect();
    b.post(Constraint::inverse_channeling(&xs, &ys).unwrap());
    b.post(Constraint::less_than(xs[0], ys[rng.gen_range(0..m)]));
    if rng.gen_bool(0.5) {
        b.post(Constraint::adjacency(xs[0], xs[1], m as i64, &[1]).unwrap());
    }
    b.build().unwrap()
}

/// Independent Black Hole game check on a 52-card (or smaller) play order.
pub fn valid_play(fans: &[Vec<i64>], ranks: i64, cards: usize, play: &[i64]) -> bool {
    if play.len() != cards || play[0] != 0 {
        return false;
    }
    let mut when = vec![usize::MAX; cards];
    for (t, &c) in play.iter().enumerate() {
        if c < 0 || c as usize >= cards || when[c as usize] != usize::MAX {
            return false;
        }
        when[c as usize] = t;
    }
    let adjacent = play.windows(2).all(|w| {
        let d = (w[1] % ranks - w[0] % ranks).rem_euclid(ranks);
        d == 1 || d == ranks - 1
    });
    adjacent
        && fans.iter().all(|f| {
            f.windows(2)
                .all(|w| when[w[0] as usize] < when[w[1] as usize])
        })
}
