//! The adaptive win-process on the twice-repeated GHZ game.
//!
//! Coordinates are probed one at a time, each chosen per history to
//! minimize the conditional win probability; the win-probability sequence
//! then contracts multiplicatively as long as histories carry enough mass.
//! Everything is exact: no sampling anywhere.
//!
//! Run with: `cargo run --release --example win_process`

use ghz_lab::games::{exact_value, ghz_game, RepeatedGame, DEFAULT_SEARCH_BUDGET};
use ghz_lab::harness::{criterion_simulate, CriterionParams};
use ghz_lab::prob::rat;

fn main() {
    let game = ghz_game();
    let rg = RepeatedGame::new(game.clone(), 2);
    let repeated = rg.materialize(1 << 20).unwrap();
    let best = exact_value(&repeated, DEFAULT_SEARCH_BUDGET, 1).unwrap();
    println!("optimal repeated strategy has value {}", best.value);

    let params = CriterionParams {
        rho: rat(1, 1000),
        epsilon: rat(1, 4),
        ..Default::default()
    };
    let trace = criterion_simulate(&game, 2, &best.witness, &params).unwrap();
    println!(
        "history events all factor as products over players: {}",
        trace.product_events_ok
    );
    for r in &trace.rounds {
        println!(
            "round {}: P(win so far) = {} (mass flag {}, {} qualifying histories, decay {:?})",
            r.round, r.w, r.mass_flag, r.qualifying_histories, r.decay_ok
        );
    }
}
