//! An exactly-verifying laboratory for the GHZ game and its parallel
//! repetition.
//!
//! The crate builds every object needed to certify, at small instance
//! sizes and in exact arithmetic, the chain of facts behind polynomial
//! value decay for the repeated GHZ game:
//!
//! - [`f2`]: bit-packed linear algebra over F2 (subspaces, cosets,
//!   quotients, kernels, zero-sum subset search),
//! - [`prob`]: exact rational probability with entropy/TV/KL machinery,
//! - [`fourier`]: Fourier analysis over F2 spaces and the product-event
//!   formulas specific to the GHZ query distribution,
//! - [`games`]: multi-player games, exact and heuristic values, parallel
//!   repetition, and coordinate values under modified query distributions,
//! - [`embedding`]: local embeddings of the GHZ query distribution into
//!   conditioned repeated distributions over affine power cosets,
//! - [`partition`]: pseudorandom affine partition refinement and
//!   strategy-driven subspace refinement,
//! - [`harness`]: end-to-end certification pipelines and reports,
//! - [`cli`]: the command-line front end (see the `ghz-lab` binary).
//!
//! Everything that can be exact is exact: probabilities and total
//! variation distances are arbitrary-precision rationals, and floating
//! point enters only through logarithms (entropy, KL divergence) and the
//! Lambert-W optimization bound.

pub mod cli;
pub mod embedding;
pub mod f2;
pub mod fourier;
pub mod games;
pub mod harness;
pub mod partition;
pub mod prob;
pub mod selftest;
