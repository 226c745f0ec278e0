//! The Black Hole patience game as a constraint model.
//!
//! Cards are integers `0..suits*ranks` with `suit = card / ranks` and
//! `rank = card % ranks`; rank 0 is the ace and card 0 is the ace of spades,
//! which starts in the hole. Suits are ordered spades, clubs, hearts,
//! diamonds. Two cards may follow each other when their ranks differ by one,
//! with king and ace adjacent.

use thiserror::Error;

use crate::csp::{Constraint, ConstraintKind, Csp, CspBuilder, Domain};
use crate::regularize::Selection;

pub const ACE_OF_SPADES: i64 = 0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("deck needs at least one suit and two ranks")]
    BadDeck,
    #[error("fans must hold every card except the ace of spades exactly once")]
    BadPartition,
}

/// 64-bit linear congruential generator (multiplier 6364136223846793005,
/// increment 1442695040888963407), emitting the high 32 bits of the state.
#[derive(Clone, Debug)]
pub struct Lcg64(u64);

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Lcg64(seed)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 32) as u32
    }

    /// Fisher-Yates shuffle, last position first, `j = next % (i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_u32() as usize % (i + 1);
            items.swap(i, j);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deal {
    Seeded(u64),
    /// Cards in suit-major, rank-ascending order.
    Enumerated,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlackHoleInstance {
    pub suits: usize,
    pub ranks: usize,
    /// Each fan lists its cards from the top (playable first) down.
    pub fans: Vec<Vec<i64>>,
    pub seed: Option<u64>,
}

impl BlackHoleInstance {
    pub fn num_cards(&self) -> usize {
        self.suits * self.ranks
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.suits == 0 || self.ranks < 2 {
            return Err(InstanceError::BadDeck);
        }
        let mut seen = vec![false; self.num_cards()];
        seen[ACE_OF_SPADES as usize] = true;
        for &card in self.fans.iter().flatten() {
            let ok = usize::try_from(card).is_ok_and(|c| c < seen.len() && !seen[c]);
            if !ok {
                return Err(InstanceError::BadPartition);
            }
            seen[card as usize] = true;
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(InstanceError::BadPartition)
        }
    }

    pub fn id(&self) -> String {
        match self.seed {
            Some(s) => format!("seed-{s}"),
            None => "enumerated".to_string(),
        }
    }
}

/// Standard 52-card game: 17 fans of 3.
pub fn generate_black_hole(deal: Deal) -> BlackHoleInstance {
    generate_variant(4, 13, 3, deal)
}

/// Deals every card but the ace of spades into fans of `fan_size`; the last
/// fan is shorter when the count does not divide evenly.
pub fn generate_variant(
    suits: usize,
    ranks: usize,
    fan_size: usize,
    deal: Deal,
) -> BlackHoleInstance {
    let mut cards: Vec<i64> = (1..(suits * ranks) as i64).collect();
    let seed = match deal {
        Deal::Seeded(seed) => {
            Lcg64::new(seed).shuffle(&mut cards);
            Some(seed)
        }
        Deal::Enumerated => None,
    };
    BlackHoleInstance {
        suits,
        ranks,
        fans: cards.chunks(fan_size.max(1)).map(<[i64]>::to_vec).collect(),
        seed,
    }
}

/// Card label such as `AS`, `10H`, `KD` (standard deck only; other decks
/// fall back to `rank/suit`).
pub fn card_name(card: i64, ranks: usize) -> String {
    let (suit, rank) = (card as usize / ranks, card as usize % ranks);
    if ranks == 13 && suit < 4 {
        let r = match rank {
            0 => "A".to_string(),
            10 => "J".to_string(),
            11 => "Q".to_string(),
            12 => "K".to_string(),
            n => (n + 1).to_string(),
        };
        format!("{r}{}", ["S", "C", "H", "D"][suit])
    } else {
        format!("{rank}/{suit}")
    }
}

/// Sequence variables `y_t` (card played at step `t`) and position
/// variables `p_c` (step at which card `c` is played), channeled; `y_0` is
/// the ace of spades; consecutive `y` are rank-adjacent; fan order is a
/// chain of `p` precedences; the `y` are pairwise distinct.
///
/// Constraint order: fixed start, channeling, the adjacency chain, fan
/// precedences, pairwise inequalities.
pub fn build_black_hole_csp(inst: &BlackHoleInstance) -> Result<Csp, InstanceError> {
    inst.validate()?;
    let n = inst.num_cards();
    let ranks = inst.ranks as i64;
    let domain = Domain::range(0, n as i64 - 1).expect("non-empty deck");
    let mut b = CspBuilder::new();
    let y: Vec<_> = (0..n)
        .map(|t| b.var(format!("y{t}"), domain.clone()))
        .collect();
    let p: Vec<_> = (0..n)
        .map(|c| b.var(format!("p{c}"), domain.clone()))
        .collect();
    b.post(Constraint::fixed(y[0], ACE_OF_SPADES));
    b.post(Constraint::inverse_channeling(&y, &p).expect("equal halves"));
    for t in 0..n - 1 {
        b.post(
            Constraint::adjacency(y[t], y[t + 1], ranks, &[1, ranks - 1])
                .expect("positive modulus"),
        );
    }
    for fan in &inst.fans {
        for w in fan.windows(2) {
            b.post(Constraint::less_than(p[w[0] as usize], p[w[1] as usize]));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            b.post(Constraint::not_equal(y[i], y[j]));
        }
    }
    Ok(b.build().expect("well-formed model"))
}

/// Indices of the adjacency constraints, one selection each.
pub fn adjacency_selection(csp: &Csp) -> Selection {
    Selection::Explicit(
        csp.constraints()
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.kind(), ConstraintKind::BinaryAdjacency { .. }))
            .map(|(i, _)| vec![i])
            .collect(),
    )
}

/// Independent validity check of a play sequence against the game rules.
pub fn is_valid_play(inst: &BlackHoleInstance, sequence: &[i64]) -> bool {
    let n = inst.num_cards();
    if sequence.len() != n || sequence[0] != ACE_OF_SPADES {
        return false;
    }
    let mut step = vec![usize::MAX; n];
    for (t, &c) in sequence.iter().enumerate() {
        match usize::try_from(c) {
            Ok(c) if c < n && step[c] == usize::MAX => step[c] = t,
            _ => return false,
        }
    }
    let r = inst.ranks as i64;
    let adjacent = sequence.windows(2).all(|w| {
        let d = (w[0] % r - w[1] % r).abs() % r;
        d == 1 || d == r - 1
    });
    let fans_ok = inst.fans.iter().all(|fan| {
        fan.windows(2)
            .all(|w| step[w[0] as usize] < step[w[1] as usize])
    });
    adjacent && fans_ok
}
