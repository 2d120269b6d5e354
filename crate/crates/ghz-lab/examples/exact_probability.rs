//! The exact probability toolkit: rational-mass distributions,
//! conditioning, pushforward, entropy, divergences, and the quantitative
//! inequalities used throughout the crate.
//!
//! Run with: `cargo run --release --example exact_probability`

use ghz_lab::prob::{
    conditional_kl, kl_divergence, optimum_tau, pinsker_check, rat, tv_distance, FiniteDist,
    RandVar,
};

fn key(s: &str) -> Vec<u8> {
    s.as_bytes().to_vec()
}

fn main() {
    // The GHZ query distribution as a four-point distribution.
    let queries = FiniteDist::uniform(["000", "011", "101", "110"].map(key));

    // Conditioning keeps exact rationals.
    let first_zero = queries.condition(|o| o[0] == b'0').unwrap();
    println!(
        "P(x | x1 = 0) masses: 000 -> {}, 011 -> {}",
        first_zero.mass(&key("000")),
        first_zero.mass(&key("011"))
    );

    // Pushforward under the OR of the bits.
    let or = RandVar::from_fn(queries.universe(), |o| {
        vec![u8::from(o.contains(&b'1'))]
    });
    let or_law = queries.pushforward(&or).unwrap();
    println!(
        "law of OR: 0 -> {}, 1 -> {}",
        or_law.mass(&vec![0]),
        or_law.mass(&vec![1])
    );

    // Divergences: conditioning by an event of mass 1/4 costs ln 4 nats.
    let point = queries.condition(|o| o == &key("000")).unwrap();
    println!(
        "d_KL(P|E || P) = {:.12} (ln 4 = {:.12})",
        kl_divergence(&point, &queries),
        4.0f64.ln()
    );
    println!(
        "d_TV(P|E, P) = {}",
        tv_distance(&point, &queries).unwrap()
    );

    // Conditional KL via the chain rule.
    let bit = RandVar::from_fn(queries.universe(), |o| vec![o[1]]);
    let id = RandVar::identity(queries.universe());
    let cond = conditional_kl(&point, &queries, &id, &bit, &id, &bit).unwrap();
    let marginal = kl_divergence(
        &point.pushforward(&bit).unwrap(),
        &queries.pushforward(&bit).unwrap(),
    );
    println!(
        "chain rule: {:.12} + {:.12} = {:.12}",
        marginal,
        cond,
        kl_divergence(&point, &queries)
    );

    // Pinsker and the logarithmic trade-off bound.
    let pinsker = pinsker_check(&point, &queries).unwrap();
    println!(
        "Pinsker: {:.6} <= {:.6} : {}",
        pinsker.lhs, pinsker.rhs, pinsker.holds
    );
    let tau = optimum_tau(100.0, 1.0).unwrap();
    println!(
        "min over tau of 100/ln(1/tau) + 1/tau: {:.4} at tau = {:.6}, bounded by {:.4}",
        tau.value, tau.tau_star, tau.bound
    );
    let _ = rat(1, 1);
}
