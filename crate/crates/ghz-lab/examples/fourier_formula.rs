//! Fourier analysis over F2 and the product-event probability formula.
//!
//! Transforms an indicator exactly, checks Parseval, and evaluates the
//! probability of a product event under the GHZ-supported distribution
//! along all three routes: direct enumeration, the character sum, and the
//! density form.
//!
//! Run with: `cargo run --release --example fourier_formula`

use std::sync::Arc;

use ghz_lab::f2::{AffineCoset, F2Vector, Subspace};
use ghz_lab::fourier::{
    ghz_product_event_prob, parseval_check, prob_diff_bound_check, transform, DEFAULT_DIM_BUDGET,
};
use ghz_lab::prob::{rat, Rational};
use num::Zero;

fn main() {
    // Indicator of the origin inside F2^3.
    let space = Arc::new(Subspace::full(3));
    let carrier = AffineCoset::new(&F2Vector::zeros(3), Arc::clone(&space));
    let indicator = |x: &F2Vector| {
        if x.is_zero() {
            rat(1, 1)
        } else {
            Rational::zero()
        }
    };
    let table = transform(&carrier, indicator, DEFAULT_DIM_BUDGET).unwrap();
    println!("indicator of the origin in F2^3 transforms to:");
    for chi in table.characters() {
        println!("  coefficient at {}: {}", chi.gamma(), table.coeff(&chi));
    }
    let parseval = parseval_check(&carrier, indicator, DEFAULT_DIM_BUDGET).unwrap();
    println!(
        "Parseval: mean square {} equals coefficient square sum {}",
        parseval.lhs, parseval.rhs
    );

    // Product-event probability along three routes on V = F2^2.
    let v = Subspace::full(2);
    let e1: Vec<F2Vector> = vec![F2Vector::zeros(2), F2Vector::from_low_u64(2, 0b01)];
    let e2: Vec<F2Vector> = vec![F2Vector::zeros(2)];
    let e3: Vec<F2Vector> = v.iter_elements().collect();
    let probs = ghz_product_event_prob(&v, &e1, &e2, &e3, DEFAULT_DIM_BUDGET).unwrap();
    println!(
        "P(E1 x E2 x E3): direct {}, character sum {}, density form {}",
        probs.direct,
        probs.char_sum,
        probs.density_form.as_ref().unwrap()
    );
    assert!(probs.all_equal());

    let bound = prob_diff_bound_check(&v, &e1, &e2, &e3, DEFAULT_DIM_BUDGET).unwrap();
    println!(
        "|P(E) - U(E)| = {} is bounded by the nontrivial character sum {}",
        bound.diff, bound.bound
    );
    assert!(bound.holds);
}
