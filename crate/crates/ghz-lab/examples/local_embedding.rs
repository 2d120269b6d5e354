//! Local embedding of the GHZ query distribution into a conditioned
//! repeated distribution over an affine power coset.
//!
//! The coset constrains both repetitions of every player to agree; the
//! embedding places a fresh query in coordinate 0 and reproduces the
//! conditioned distribution exactly, certified by full enumeration.
//!
//! Run with: `cargo run --release --example local_embedding`

use ghz_lab::embedding::{
    build_embedding, embeddable_coordinates, verify_embedding, GHZ_QUERIES,
};
use ghz_lab::f2::{decode_triple, AffinePowerCoset, F2Vector, Subspace, DEFAULT_ENUM_BUDGET};

fn main() {
    // n = 2, V = span{11}: rows live in {00, 11}.
    let space = Subspace::from_generators(2, &[F2Vector::from_low_u64(2, 0b11)]);
    let coset = AffinePowerCoset::new(
        [
            F2Vector::zeros(2),
            F2Vector::zeros(2),
            F2Vector::zeros(2),
        ],
        space,
    );

    let coords = embeddable_coordinates(&coset).unwrap();
    println!("embeddable coordinates: {coords:?}");

    let emb = build_embedding(&coset, 0, DEFAULT_ENUM_BUDGET).unwrap();
    println!("zero-sum subset backing the embedding: {:?}", emb.zero_subset());

    // Assemble one query triple per fresh query, from one shared sample.
    let (r_key, _) = emb.shared_dist().support().next().unwrap();
    let r = decode_triple(r_key, 2);
    for q in &GHZ_QUERIES {
        let x = emb.apply(q, &r);
        println!(
            "fresh query {:?} assembles rows [{}, {}, {}]",
            q, x[0], x[1], x[2]
        );
    }

    let cert = verify_embedding(&emb, DEFAULT_ENUM_BUDGET).unwrap();
    println!(
        "certificate: marginal {}, independence {}, law {}, support {}",
        cert.marginal_ok, cert.independence_ok, cert.law_ok, cert.support_size
    );
}
