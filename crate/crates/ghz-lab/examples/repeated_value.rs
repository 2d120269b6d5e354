//! Parallel repetition of the GHZ game: exact value of the two-fold
//! repetition, per-coordinate values, and the heuristic lower bound.
//!
//! The square of the single-shot value is 9/16; the exact repeated value
//! 5/8 sits strictly above it, which is exactly why parallel repetition of
//! this game is subtle.
//!
//! Run with: `cargo run --release --example repeated_value`

use ghz_lab::games::{
    coordinate_value, exact_value, ghz_game, heuristic_value_lower_bound, RepeatedGame,
    DEFAULT_SEARCH_BUDGET,
};

fn main() {
    let rg = RepeatedGame::new(ghz_game(), 2);
    let game = rg.materialize(1 << 20).expect("small");

    let best = exact_value(&game, DEFAULT_SEARCH_BUDGET, 1).expect("within budget");
    println!("value of the twice-repeated game: {}", best.value);

    for j in 0..2 {
        let cv = coordinate_value(&rg, j, None, DEFAULT_SEARCH_BUDGET, 1).expect("within budget");
        println!("value in coordinate {j} alone: {}", cv.value);
    }

    let (heuristic, _) = heuristic_value_lower_bound(&game, 32, 7);
    println!("heuristic lower bound (32 seeded restarts): {heuristic}");
    assert!(heuristic <= best.value);
}
