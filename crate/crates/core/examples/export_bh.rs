//! Writes a seeded Black Hole deal as a JSON model file.
//!
//! Usage: `cargo run --release --example export_bh <seed> <out.json>`

use csp_regularize::bench::{build_black_hole_csp, generate_black_hole, save_model, Deal};

fn main() {
    let mut args = std::env::args().skip(1);
    let (Some(seed), Some(out)) = (args.next(), args.next()) else {
        eprintln!("usage: export_bh <seed> <out.json>");
        std::process::exit(3);
    };
    let seed: u64 = seed.parse().expect("seed must be an integer");
    let csp = build_black_hole_csp(&generate_black_hole(Deal::Seeded(seed))).expect("valid deal");
    save_model(&csp, out).expect("model written");
}
