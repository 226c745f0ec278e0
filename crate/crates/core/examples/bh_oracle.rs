//! Decides Black Hole deals without the constraint solver: depth-first
//! play with memoization on (fan positions, rank on top of the hole).
//!
//! Usage: `cargo run --release --example bh_oracle [first_seed] [last_seed]`

use std::collections::HashSet;

use csp_regularize::bench::{generate_black_hole, is_valid_play, Deal};

fn solve(
    fans: &[Vec<i64>],
    pos: &mut Vec<u8>,
    top: i64,
    left: usize,
    seen: &mut HashSet<(Vec<u8>, i64)>,
    path: &mut Vec<i64>,
) -> bool {
    if left == 0 {
        return true;
    }
    if !seen.insert((pos.clone(), top % 13)) {
        return false;
    }
    for f in 0..fans.len() {
        let p = pos[f] as usize;
        if p < fans[f].len() {
            let c = fans[f][p];
            let d = (c % 13 - top % 13).rem_euclid(13);
            if d == 1 || d == 12 {
                pos[f] += 1;
                path.push(c);
                if solve(fans, pos, c, left - 1, seen, path) {
                    return true;
                }
                pos[f] -= 1;
                path.pop();
            }
        }
    }
    false
}

fn main() {
    let arg = |i: usize, default: u64| {
        std::env::args()
            .nth(i)
            .map_or(default, |s| s.parse().expect("seed must be an integer"))
    };
    for seed in arg(1, 1)..=arg(2, 10) {
        let inst = generate_black_hole(Deal::Seeded(seed));
        let mut seen = HashSet::new();
        let mut path = vec![0];
        let ok = solve(
            &inst.fans,
            &mut vec![0; inst.fans.len()],
            0,
            51,
            &mut seen,
            &mut path,
        );
        assert!(
            !ok || is_valid_play(&inst, &path),
            "oracle produced an invalid play"
        );
        println!("seed {seed}: solvable={ok} states={}", seen.len());
    }
}
