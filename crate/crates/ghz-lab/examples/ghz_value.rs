//! Exact value of the GHZ game.
//!
//! Computes the optimum over all deterministic product strategies, shows a
//! maximizing witness, and contrasts it with two constant strategies.
//!
//! Run with: `cargo run --release --example ghz_value`

use ghz_lab::games::{
    exact_value, ghz_game, strategy_value, ProductStrategy, DEFAULT_SEARCH_BUDGET,
};

fn main() {
    let game = ghz_game();
    let best = exact_value(&game, DEFAULT_SEARCH_BUDGET, 1).expect("tiny search space");
    println!("value of the GHZ game: {}", best.value);
    println!("maximizing tables (answer per query bit):");
    for (player, table) in best.witness.tables.iter().enumerate() {
        println!("  player {player}: {table:?}");
    }

    for answers in [[0, 0, 0], [1, 0, 0]] {
        let s = ProductStrategy::constant(&game, &answers);
        let v = strategy_value(&game, &s).unwrap();
        println!("constant answers {answers:?} win with probability {v}");
    }
}
