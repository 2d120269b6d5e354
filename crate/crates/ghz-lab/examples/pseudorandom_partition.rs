//! Pseudorandom affine partition of a conditioned repeated distribution.
//!
//! Conditioning on a product event skews the repeated query distribution;
//! iterated kernel cuts refine the ambient space into affine power cosets
//! until, on an average part, no low-level linear compression can tell the
//! conditioned distribution from the unconditioned one. The potential
//! trace certifies the termination argument.
//!
//! Run with: `cargo run --release --example pseudorandom_partition`

use ghz_lab::f2::DEFAULT_ENUM_BUDGET;
use ghz_lab::partition::{pseudorandom_partition, ProductEvent, DEFAULT_KERNEL_BUDGET};

fn main() {
    // Three repetitions; player 1 must avoid queries whose first two
    // repetitions are both 1, player 2 is unconstrained on half its rows.
    let n = 3;
    let all: std::collections::BTreeSet<u64> = (0..8).collect();
    let p1: std::collections::BTreeSet<u64> = (0..8).filter(|q| q & 0b011 != 0b011).collect();
    let p2: std::collections::BTreeSet<u64> = (0..8).filter(|q| q & 0b100 == 0).collect();
    let event = ProductEvent::new(n, [p1, p2, all]);

    let delta = 0.4;
    let out = pseudorandom_partition(n, &event, delta, 1, DEFAULT_KERNEL_BUDGET, DEFAULT_ENUM_BUDGET)
        .unwrap();

    println!("event mass {} (log-inverse {:.6})", out.event_mass, out.delta_cap);
    println!("round  potential   expected-closeness  codim  parts");
    for r in &out.trace {
        println!(
            "{:>5}  {:>9.6}  {:>18.6}  {:>5}  {:>5}",
            r.round, r.phi, r.expected_dm, r.codim, r.part_count
        );
    }
    println!(
        "final partition: {} parts of dimension {}, expected closeness {:.6} <= {delta}",
        out.partition.parts().len(),
        out.partition.dim(),
        out.final_expected_dm
    );
    out.partition.validate(DEFAULT_ENUM_BUDGET).unwrap();
    println!("partition axioms verified (disjoint cover, equal dimensions)");
}
