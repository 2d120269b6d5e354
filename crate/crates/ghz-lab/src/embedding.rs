//! Local embeddings of the GHZ query distribution into conditioned repeated
//! distributions over affine power cosets, with exact verification.
//!
//! For a coset `W = w + V^3` with positive mass under the repeated query
//! distribution, a coordinate `j` is locally embeddable when some index set
//! `S` containing `j` has constraint rows summing to zero; equivalently,
//! when the indicator vector of `S` lies in `V`. The embedding assembles a
//! fresh GHZ query into coordinate `j` and fills the remaining coordinates
//! from shared randomness drawn from the conditioned distribution itself.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;

use crate::f2::{
    encode_triple, subset_sum_zero, AffinePowerCoset, F2Error, F2Matrix, F2Vector,
};
use crate::prob::{FiniteDist, Outcome, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("the coset does not meet the repeated query support")]
    EmptyIntersection,
    #[error("coordinate {coordinate} is not covered by any zero-sum subset")]
    NotEmbeddable { coordinate: usize },
    #[error("enumeration needs {required} evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("embedding verification failed: {what}")]
    VerificationFailed { what: String },
    #[error(transparent)]
    F2(#[from] F2Error),
}

/// The four GHZ queries in canonical order 000 < 011 < 101 < 110.
pub const GHZ_QUERIES: [[u8; 3]; 4] = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]];

/// The conditioned repeated query distribution `Q^n | W`: uniform on the
/// intersection of the coset with `{x : x1 + x2 + x3 = 0}`.
pub fn ghz_conditioned_dist(
    coset: &AffinePowerCoset,
    budget: u128,
) -> Result<FiniteDist, EmbedError> {
    let support = coset
        .ghz_support(budget)?
        .ok_or(EmbedError::EmptyIntersection)?;
    Ok(FiniteDist::uniform(
        support.iter().map(encode_triple),
    ))
}

/// Constraint matrix of the coset's space: row `j` holds the `j`-th entries
/// of a basis of the orthogonal complement, so `x * A = 0` iff `x` is in
/// the space.
pub fn constraint_matrix(coset: &AffinePowerCoset) -> F2Matrix {
    let complement = coset.space().orthogonal_complement();
    let n = coset.reps();
    let m = complement.dim();
    let rows: Vec<F2Vector> = (0..n)
        .map(|j| F2Vector::from_fn(m, |l| complement.basis()[l].get(j)))
        .collect();
    F2Matrix::new(m, rows)
}

/// Zero-sum subsets extracted deterministically: scan windows of the first
/// `m + 1` not-yet-covered coordinates in increasing order and take the
/// canonical zero-sum subset of each window until none remains.
pub fn zero_subsets(coset: &AffinePowerCoset) -> Vec<Vec<usize>> {
    let a = constraint_matrix(coset);
    let n = coset.reps();
    let m = a.ncols();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let window: Vec<usize> = remaining.iter().copied().take(m + 1).collect();
        let restricted = F2Matrix::new(
            m,
            window.iter().map(|&j| a.row(j).clone()).collect(),
        );
        match subset_sum_zero(&restricted, window.len()) {
            Ok(local) => {
                let global: Vec<usize> = local.iter().map(|&l| window[l]).collect();
                remaining.retain(|j| !global.contains(j));
                out.push(global);
            }
            Err(F2Error::NoZeroSubset { .. }) => break,
            Err(_) => unreachable!("subset_sum_zero has no other failure mode"),
        }
    }
    out
}

/// Coordinates in which the GHZ query distribution embeds locally into
/// `Q^n | coset`. At least `n - m` coordinates are returned whenever the
/// coset has positive mass (`m` the codimension of the space).
pub fn embeddable_coordinates(coset: &AffinePowerCoset) -> Result<BTreeSet<usize>, EmbedError> {
    if !coset.meets_ghz_support() {
        return Err(EmbedError::EmptyIntersection);
    }
    Ok(zero_subsets(coset).into_iter().flatten().collect())
}

/// A local embedding into coordinate `j`: shared randomness is the
/// conditioned distribution itself, and the per-player maps place the fresh
/// query bit at `j`, translate by column differences inside `S`, and copy
/// the shared sample outside `S`.
#[derive(Clone, Debug)]
pub struct LocalEmbedding {
    coset: AffinePowerCoset,
    j: usize,
    s: Vec<usize>,
    shared: FiniteDist,
}

impl LocalEmbedding {
    pub fn coordinate(&self) -> usize {
        self.j
    }

    pub fn zero_subset(&self) -> &[usize] {
        &self.s
    }

    /// The shared-randomness distribution `R` (realized as the conditioned
    /// distribution itself).
    pub fn shared_dist(&self) -> &FiniteDist {
        &self.shared
    }

    pub fn coset(&self) -> &AffinePowerCoset {
        &self.coset
    }

    /// Player `i`'s map `e_i(q_i, r)`: one row of the assembled query.
    pub fn apply_player(&self, i: usize, q_bit: u8, r: &[F2Vector; 3]) -> F2Vector {
        let n = self.coset.reps();
        let rj = r[i].get(self.j);
        F2Vector::from_fn(n, |jp| {
            if jp == self.j {
                q_bit == 1
            } else if self.s.contains(&jp) {
                (q_bit == 1) ^ r[i].get(jp) ^ rj
            } else {
                r[i].get(jp)
            }
        })
    }

    /// Assembles the full query triple from a GHZ query and shared sample.
    pub fn apply(&self, q: &[u8; 3], r: &[F2Vector; 3]) -> [F2Vector; 3] {
        [
            self.apply_player(0, q[0], r),
            self.apply_player(1, q[1], r),
            self.apply_player(2, q[2], r),
        ]
    }
}

/// Builds the local embedding for coordinate `j`, choosing the canonical
/// zero-sum subset containing `j`. Fails with `NotEmbeddable` when the
/// deterministic window scan never covers `j`.
pub fn build_embedding(
    coset: &AffinePowerCoset,
    j: usize,
    budget: u128,
) -> Result<LocalEmbedding, EmbedError> {
    if !coset.meets_ghz_support() {
        return Err(EmbedError::EmptyIntersection);
    }
    let s = zero_subsets(coset)
        .into_iter()
        .find(|s| s.contains(&j))
        .ok_or(EmbedError::NotEmbeddable { coordinate: j })?;
    let shared = ghz_conditioned_dist(coset, budget)?;
    Ok(LocalEmbedding {
        coset: coset.clone(),
        j,
        s,
        shared,
    })
}

/// Verification record for a local embedding; all three claim-level flags
/// are true on emission.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EmbeddingCertificate {
    pub j: usize,
    pub s: Vec<usize>,
    pub marginal_ok: bool,
    pub independence_ok: bool,
    pub law_ok: bool,
    pub support_size: usize,
}

fn ghz_query_key(x: &[F2Vector; 3], j: usize) -> Outcome {
    vec![
        u8::from(x[0].get(j)),
        u8::from(x[1].get(j)),
        u8::from(x[2].get(j)),
    ]
}

/// The complementary data `(column differences inside S, columns outside S)`
/// that together with the `j`-th column determines the whole query triple.
fn complement_key(x: &[F2Vector; 3], j: usize, s: &[usize], n: usize) -> Outcome {
    let mut key = Vec::new();
    for jp in s.iter().copied().filter(|&jp| jp != j) {
        for row in x {
            key.push(u8::from(row.get(jp) ^ row.get(j)));
        }
    }
    for jp in (0..n).filter(|jp| !s.contains(jp)) {
        for row in x {
            key.push(u8::from(row.get(jp)));
        }
    }
    key
}

/// Exact verification of a local embedding by full enumeration of the
/// `4 * |support|` pairs of fresh query and shared sample: the coordinate
/// marginal is the GHZ query distribution, the coordinate is independent of
/// the complementary data, and the assembled law reproduces the conditioned
/// distribution exactly.
pub fn verify_embedding(
    emb: &LocalEmbedding,
    budget: u128,
) -> Result<EmbeddingCertificate, EmbedError> {
    let pt = &emb.shared;
    let n = emb.coset.reps();
    let support: Vec<(&Outcome, &Rational)> = pt.support().collect();
    let required = 4u128 * support.len() as u128;
    if required > budget {
        return Err(EmbedError::BudgetExceeded { required, budget });
    }

    // (a) coordinate marginal equals the GHZ query distribution.
    let marginal = pt.map(|key| {
        let x = crate::f2::decode_triple(key, n);
        ghz_query_key(&x, emb.j)
    });
    let ghz = FiniteDist::uniform(GHZ_QUERIES.iter().map(|q| q.to_vec()));
    let marginal_ok = marginal.eq_as_measures(&ghz);
    if !marginal_ok {
        return Err(EmbedError::VerificationFailed {
            what: format!("coordinate {} marginal is not the GHZ distribution", emb.j),
        });
    }

    // (b) independence of the coordinate from the complementary data.
    let joint = pt.map(|key| {
        let x = crate::f2::decode_triple(key, n);
        let mut k = ghz_query_key(&x, emb.j);
        k.extend(complement_key(&x, emb.j, &emb.s, n));
        k
    });
    let comp_marginal = pt.map(|key| {
        let x = crate::f2::decode_triple(key, n);
        complement_key(&x, emb.j, &emb.s, n)
    });
    let mut independence_ok = true;
    'outer: for (qk, qm) in marginal.support() {
        for (ck, cm) in comp_marginal.support() {
            let mut jk = qk.clone();
            jk.extend(ck.iter());
            if joint.mass(&jk) != qm * cm {
                independence_ok = false;
                break 'outer;
            }
        }
    }
    if !independence_ok {
        return Err(EmbedError::VerificationFailed {
            what: "coordinate is correlated with the complementary data".to_string(),
        });
    }

    // (c) assembled law equals the conditioned distribution.
    let quarter = Rational::new(1.into(), 4.into());
    let mut assembled: BTreeMap<Outcome, Rational> = BTreeMap::new();
    for (rk, rm) in &support {
        let r = crate::f2::decode_triple(rk, n);
        for q in &GHZ_QUERIES {
            let x = emb.apply(q, &r);
            let key = encode_triple(&x);
            *assembled.entry(key).or_insert_with(Rational::zero) += &quarter * *rm;
        }
    }
    let p_embed = FiniteDist::from_masses(assembled).expect("assembled masses sum to one");
    let law_ok = p_embed.eq_as_measures(pt);
    if !law_ok {
        let offending = p_embed
            .support()
            .find(|(k, m)| pt.mass(k) != **m)
            .map(|(k, _)| format!("{k:?}"))
            .unwrap_or_default();
        return Err(EmbedError::VerificationFailed {
            what: format!("assembled law differs from the conditioned law at {offending}"),
        });
    }

    Ok(EmbeddingCertificate {
        j: emb.j,
        s: emb.s.clone(),
        marginal_ok,
        independence_ok,
        law_ok,
        support_size: support.len(),
    })
}

/// Pointwise table of a support bijection: pairs of source and image
/// query triples.
pub type BijectionTable = Vec<([F2Vector; 3], [F2Vector; 3])>;

/// The support bijection that adds `q + q'` to every column in `S`: a
/// permutation of the conditioned support carrying `{x^j = q}` onto
/// `{x^j = q'}`. Returned as an explicit pointwise table after verifying
/// bijectivity and the slice property.
pub fn shift_bijection(
    coset: &AffinePowerCoset,
    s: &[usize],
    j: usize,
    q: [u8; 3],
    q_prime: [u8; 3],
    budget: u128,
) -> Result<BijectionTable, EmbedError> {
    let support = coset
        .ghz_support(budget)?
        .ok_or(EmbedError::EmptyIntersection)?;
    let keys: BTreeSet<Outcome> = support.iter().map(encode_triple).collect();
    let mut table = Vec::with_capacity(support.len());
    let mut image_keys = BTreeSet::new();
    for x in &support {
        let y: [F2Vector; 3] = std::array::from_fn(|i| {
            let delta = q[i] ^ q_prime[i] == 1;
            F2Vector::from_fn(x[i].len(), |jp| x[i].get(jp) ^ (delta && s.contains(&jp)))
        });
        let yk = encode_triple(&y);
        if !keys.contains(&yk) {
            return Err(EmbedError::VerificationFailed {
                what: "shift image escapes the support".to_string(),
            });
        }
        if !image_keys.insert(yk) {
            return Err(EmbedError::VerificationFailed {
                what: "shift is not injective on the support".to_string(),
            });
        }
        let x_at_q = ghz_query_key(x, j) == q.to_vec();
        let y_at_qp = ghz_query_key(&y, j) == q_prime.to_vec();
        if x_at_q != y_at_qp {
            return Err(EmbedError::VerificationFailed {
                what: "shift does not carry the query slice correctly".to_string(),
            });
        }
        table.push((x.clone(), y));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2::{AffinePowerCoset, Subspace, DEFAULT_ENUM_BUDGET};

    fn span(ambient: usize, rows: &[u64]) -> Subspace {
        Subspace::from_generators(
            ambient,
            &rows
                .iter()
                .map(|&r| F2Vector::from_low_u64(ambient, r))
                .collect::<Vec<_>>(),
        )
    }

    fn zero_shift(n: usize, space: Subspace) -> AffinePowerCoset {
        AffinePowerCoset::new(
            [
                F2Vector::zeros(n),
                F2Vector::zeros(n),
                F2Vector::zeros(n),
            ],
            space,
        )
    }

    #[test]
    fn full_space_embeds_everywhere() {
        let c = AffinePowerCoset::full(3);
        let coords = embeddable_coordinates(&c).unwrap();
        assert_eq!(coords, (0..3).collect());
    }

    #[test]
    fn two_reps_one_constraint() {
        // n = 2, V = span{11}: indicator (1,1) is in V, so S = {0,1} and
        // both coordinates embed.
        let c = zero_shift(2, span(2, &[0b11]));
        let coords = embeddable_coordinates(&c).unwrap();
        assert_eq!(coords, (0..2).collect());
    }

    #[test]
    fn zero_constraint_row_gives_singleton_subset() {
        // V = {x : x_0 = x_1} in F2^3 (coordinate 2 free): subsets {0,1}
        // and {2} both have zero row sums, so all three coordinates embed.
        let v = span(3, &[0b011, 0b100]);
        let c = zero_shift(3, v);
        let subsets = zero_subsets(&c);
        assert_eq!(subsets, vec![vec![0, 1], vec![2]]);
        let coords = embeddable_coordinates(&c).unwrap();
        assert_eq!(coords, (0..3).collect());
    }

    #[test]
    fn empty_intersection_is_reported() {
        let v = span(2, &[0b01]);
        let c = AffinePowerCoset::new(
            [
                F2Vector::from_low_u64(2, 0b10),
                F2Vector::zeros(2),
                F2Vector::zeros(2),
            ],
            v,
        );
        assert_eq!(
            embeddable_coordinates(&c).err(),
            Some(EmbedError::EmptyIntersection)
        );
    }

    #[test]
    fn diagonal_embedding_duplicates_the_query() {
        // n = 2, V = span{11}, w = 0, j = 0: on the support every row has
        // equal bits, so the assembled rows are (q_i, q_i).
        let c = zero_shift(2, span(2, &[0b11]));
        let emb = build_embedding(&c, 0, DEFAULT_ENUM_BUDGET).unwrap();
        assert_eq!(emb.zero_subset(), &[0, 1]);
        for (rk, _) in emb.shared_dist().support() {
            let r = crate::f2::decode_triple(rk, 2);
            for q in &GHZ_QUERIES {
                let x = emb.apply(q, &r);
                for i in 0..3 {
                    assert_eq!(u8::from(x[i].get(0)), q[i]);
                    assert_eq!(x[i].get(0), x[i].get(1));
                }
            }
        }
        let cert = verify_embedding(&emb, DEFAULT_ENUM_BUDGET).unwrap();
        assert!(cert.marginal_ok && cert.independence_ok && cert.law_ok);
        assert_eq!(cert.support_size, 4);
    }

    #[test]
    fn identity_embedding_in_one_rep() {
        let c = AffinePowerCoset::full(1);
        let emb = build_embedding(&c, 0, DEFAULT_ENUM_BUDGET).unwrap();
        let cert = verify_embedding(&emb, DEFAULT_ENUM_BUDGET).unwrap();
        assert!(cert.law_ok);
    }

    #[test]
    fn uncovered_coordinate_fails() {
        // V = span{(1,1,0)}: m = 2, windows {0,1,2} yield S = {0,1}; the
        // leftover window {2} has no zero subset, so coordinate 2 is not
        // covered.
        let v = span(3, &[0b011]);
        let c = zero_shift(3, v);
        assert_eq!(
            build_embedding(&c, 2, DEFAULT_ENUM_BUDGET).err(),
            Some(EmbedError::NotEmbeddable { coordinate: 2 })
        );
    }

    #[test]
    fn corrupted_embedding_is_rejected() {
        // Swapping the roles of two coordinates inside S breaks the law.
        let c = zero_shift(2, span(2, &[0b11]));
        let mut emb = build_embedding(&c, 0, DEFAULT_ENUM_BUDGET).unwrap();
        // Corrupt: pretend S is only {0}; the translation step is skipped
        // and the assembled law no longer matches.
        emb.s = vec![0];
        assert!(matches!(
            verify_embedding(&emb, DEFAULT_ENUM_BUDGET),
            Err(EmbedError::VerificationFailed { .. })
        ));
    }

    #[test]
    fn shift_bijection_identity_and_involution() {
        let c = zero_shift(2, span(2, &[0b11]));
        let s = vec![0usize, 1];
        let q = [0u8, 1, 1];
        let table = shift_bijection(&c, &s, 0, q, q, DEFAULT_ENUM_BUDGET).unwrap();
        for (x, y) in &table {
            assert_eq!(x, y);
        }
        // Phi composed with itself is the identity (F2 shift).
        let qp = [1u8, 0, 1];
        let fwd = shift_bijection(&c, &s, 0, q, qp, DEFAULT_ENUM_BUDGET).unwrap();
        let back = shift_bijection(&c, &s, 0, qp, q, DEFAULT_ENUM_BUDGET).unwrap();
        let back_map: BTreeMap<_, _> = back
            .iter()
            .map(|(a, b)| (encode_triple(a), encode_triple(b)))
            .collect();
        for (x, y) in &fwd {
            assert_eq!(back_map[&encode_triple(y)], encode_triple(x));
        }
    }

    #[test]
    fn shift_preserves_constraint_values() {
        let v = span(3, &[0b011, 0b100]);
        let c = zero_shift(3, v);
        let a = constraint_matrix(&c);
        let s = vec![0usize, 1];
        let table =
            shift_bijection(&c, &s, 0, [0, 0, 0], [1, 1, 0], DEFAULT_ENUM_BUDGET).unwrap();
        for (x, y) in &table {
            for i in 0..3 {
                assert_eq!(a.left_mul(&x[i]), a.left_mul(&y[i]));
            }
        }
    }

    #[test]
    fn conditioned_dist_is_uniform_on_intersection() {
        let c = zero_shift(2, span(2, &[0b11]));
        let d = ghz_conditioned_dist(&c, DEFAULT_ENUM_BUDGET).unwrap();
        assert_eq!(d.support_len(), 4);
        for (_, m) in d.support() {
            assert_eq!(*m, Rational::new(1.into(), 4.into()));
        }
    }
}
