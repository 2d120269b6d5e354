//! End-to-end certification pipelines: hardness transfer on pseudorandom
//! cosets, the adaptive win-process simulation, and the full demo that
//! chains partition, embedding, and value computations.

mod criterion;
mod demo;

pub use criterion::{criterion_simulate, CriterionParams, CriterionRound, CriterionTrace};
pub use demo::{
    constraint_diagnostic, main_theorem_demo, ConstraintDiagnostic, DemoParams, DemoPartReport,
    DemoReport,
};

use std::collections::BTreeMap;

use num::ToPrimitive;

use crate::f2::{AffinePowerCoset, F2Error, F2Vector};
use crate::games::{
    coordinate_value, ghz_game, CoordinateWitness, GameError, QueryDist, RepeatedGame,
};
use crate::partition::{
    d_m_closeness, strategy_refinement, PartitionError, ProductEvent,
};
use crate::prob::{lambert_w, ProbError, Rational};

#[derive(Clone, Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("event or coset has zero mass")]
    ZeroMass,
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Embed(#[from] crate::embedding::EmbedError),
    #[error(transparent)]
    F2(#[from] F2Error),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Encodes a repeated query row in the convention of [`RepeatedGame`]: the
/// first repetition is the most significant digit.
pub fn encode_row_query(v: &F2Vector) -> usize {
    (0..v.len()).fold(0usize, |acc, j| acc * 2 + usize::from(v.get(j)))
}

pub fn decode_row_query(n: usize, encoded: usize) -> F2Vector {
    F2Vector::from_fn(n, |j| encoded >> (n - 1 - j) & 1 == 1)
}

/// The conditioned and unconditioned query distributions carried by a
/// coset: support triples, event membership, and both distributions in the
/// repeated-game encoding.
pub struct CosetDists {
    pub support: Vec<[F2Vector; 3]>,
    pub in_event: Vec<bool>,
    pub p: QueryDist,
    pub pt: QueryDist,
    pub delta_cap: f64,
}

pub fn coset_dists(
    coset: &AffinePowerCoset,
    event: &ProductEvent,
    enum_budget: u128,
) -> Result<CosetDists, HarnessError> {
    let support = coset
        .ghz_support(enum_budget)?
        .ok_or(HarnessError::ZeroMass)?;
    let in_event: Vec<bool> = support.iter().map(|x| event.contains(x)).collect();
    let event_count = in_event.iter().filter(|&&b| b).count();
    if event_count == 0 {
        return Err(HarnessError::ZeroMass);
    }
    let total = support.len();
    let encode = |x: &[F2Vector; 3]| -> Vec<usize> {
        (0..3).map(|i| encode_row_query(&x[i])).collect()
    };
    let p: QueryDist = support
        .iter()
        .map(|x| (encode(x), Rational::new(1.into(), (total as i64).into())))
        .collect();
    let pt: QueryDist = support
        .iter()
        .zip(&in_event)
        .filter(|(_, &inside)| inside)
        .map(|(x, _)| {
            (
                encode(x),
                Rational::new(1.into(), (event_count as i64).into()),
            )
        })
        .collect();
    Ok(CosetDists {
        support,
        in_event,
        p,
        pt,
        delta_cap: (total as f64 / event_count as f64).ln(),
    })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PseudoHardnessParams {
    pub j: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub strategy_budget: u128,
    pub kernel_budget: u128,
    pub enum_budget: u128,
    pub threads: usize,
    pub with_intermediates: bool,
}

impl Default for PseudoHardnessParams {
    fn default() -> Self {
        Self {
            j: 0,
            delta: 0.05,
            epsilon: 0.2,
            strategy_budget: crate::games::DEFAULT_SEARCH_BUDGET,
            kernel_budget: crate::partition::DEFAULT_KERNEL_BUDGET,
            enum_budget: crate::f2::DEFAULT_ENUM_BUDGET,
            threads: 1,
            with_intermediates: true,
        }
    }
}

/// Measured intermediate quantities along the hardness-transfer proof
/// chain, each with the direction of its stated inequality.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Intermediates {
    /// Codimension of the refined subspace inside the coset space,
    /// including the coordinate-pinning cut.
    pub refinement_codim: usize,
    /// Final per-character divergence bound from the refinement.
    pub refinement_bound: f64,
    /// Expected TV between the joint answer law and the product of row
    /// marginals, averaged over the unconditioned distribution.
    pub product_tv_p: f64,
    /// `sqrt(2 delta)`.
    pub product_tv_p_bound: f64,
    pub product_tv_p_ok: bool,
    /// TV between conditioned and unconditioned sub-coset marginals.
    pub coset_marginal_tv: f64,
    /// Same product-form TV, averaged over the conditioned distribution.
    pub product_tv_pt: f64,
    /// `sqrt(8 delta)`.
    pub product_tv_pt_bound: f64,
    pub product_tv_pt_ok: bool,
    /// `E[-ln P(E | sub-coset)]` under the conditioned distribution; at most
    /// `-ln P(E)` by the conditioning bound on KL.
    pub mean_log_inv_cond: f64,
    pub mean_log_inv_cond_ok: bool,
    pub markov_tau: f64,
    pub markov_tail: f64,
    pub markov_bound: f64,
    pub markov_ok: bool,
    /// Expected TV between the conditioned joint answer law and the product
    /// of event-conditioned row marginals.
    pub cond_tv: f64,
    /// `4 delta_cap / ln(delta_cap / sqrt(32 delta))`.
    pub cond_tv_bound: f64,
    pub cond_tv_ok: bool,
    pub cond_tv_le_eps: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PseudoHardnessReport {
    pub n: usize,
    pub j: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// `-ln P(E)`.
    pub delta_cap: f64,
    /// Compression level `ceil(1/delta)` of the hypothesis.
    pub m: usize,
    pub d_m_measured: f64,
    pub hypothesis_met: bool,
    /// The three threshold constraints on delta, in statement order.
    pub constraint_flags: [bool; 3],
    /// Exact coordinate value under the conditioned distribution.
    pub lhs: String,
    /// Exact coordinate value under the unconditioned distribution.
    pub rhs_value: String,
    pub lhs_f: f64,
    pub rhs_f: f64,
    pub conclusion_holds: bool,
    /// Whether the conclusion is asserted (all hypothesis flags true).
    pub asserted: bool,
    pub intermediates: Option<Intermediates>,
}

/// Certifies the hardness-transfer statement on one coset and product
/// event: when the conditioned distribution is compression-close to the
/// unconditioned one and the threshold constraints hold, the coordinate
/// value can rise by at most `2 epsilon`. Both coordinate values are
/// computed exactly; the optional intermediates trace the proof chain.
pub fn pseudo_hardness_check(
    coset: &AffinePowerCoset,
    event: &ProductEvent,
    params: &PseudoHardnessParams,
) -> Result<PseudoHardnessReport, HarnessError> {
    let n = coset.reps();
    assert!(params.j < n);
    let dists = coset_dists(coset, event, params.enum_budget)?;
    let delta_cap = dists.delta_cap;
    let m = (1.0 / params.delta).ceil() as usize;

    // Hypothesis: compression closeness at level m.
    let pt_dist = crate::prob::FiniteDist::uniform(
        dists
            .support
            .iter()
            .zip(&dists.in_event)
            .filter(|(_, &e)| e)
            .map(|(x, _)| crate::f2::encode_triple(x)),
    );
    let p_dist = crate::prob::FiniteDist::uniform(
        dists.support.iter().map(crate::f2::encode_triple),
    );
    let closeness = d_m_closeness(coset, &pt_dist, &p_dist, m, params.kernel_budget)?;
    let hypothesis_met = closeness.value <= params.delta + 1e-12;

    let e = std::f64::consts::E;
    let constraint_flags = [
        params.delta
            <= delta_cap * delta_cap / 32.0 * (-4.0 * delta_cap / params.epsilon).exp(),
        params.delta <= delta_cap * delta_cap / (32.0 * e * e),
        params.delta <= 2.0 * params.epsilon * params.epsilon,
    ];

    // Exact coordinate values on both sides.
    let rg = RepeatedGame::new(ghz_game(), n);
    let lhs = coordinate_value(
        &rg,
        params.j,
        Some(&dists.pt),
        params.strategy_budget,
        params.threads,
    )?;
    let rhs = coordinate_value(
        &rg,
        params.j,
        Some(&dists.p),
        params.strategy_budget,
        params.threads,
    )?;
    let lhs_f = lhs.value.to_f64().unwrap();
    let rhs_f = rhs.value.to_f64().unwrap() + 2.0 * params.epsilon;
    let conclusion_holds = lhs_f <= rhs_f + 1e-12;

    let intermediates = if params.with_intermediates {
        Some(compute_intermediates(coset, event, &dists, &lhs.witness, params)?)
    } else {
        None
    };

    Ok(PseudoHardnessReport {
        n,
        j: params.j,
        delta: params.delta,
        epsilon: params.epsilon,
        delta_cap,
        m,
        d_m_measured: closeness.value,
        hypothesis_met,
        constraint_flags,
        lhs: lhs.value.to_string(),
        rhs_value: rhs.value.to_string(),
        lhs_f,
        rhs_f,
        conclusion_holds,
        asserted: hypothesis_met && constraint_flags.iter().all(|&f| f),
        intermediates,
    })
}

/// Walks the proof chain with the optimal conditioned strategy: refine the
/// subspace against player 1's answer map, then measure every total
/// variation and tail quantity the argument composes.
#[allow(clippy::needless_range_loop)]
fn compute_intermediates(
    coset: &AffinePowerCoset,
    event: &ProductEvent,
    dists: &CosetDists,
    witness: &CoordinateWitness,
    params: &PseudoHardnessParams,
) -> Result<Intermediates, HarnessError> {
    let n = coset.reps();
    let delta = params.delta;
    let delta_cap = dists.delta_cap;

    // Player answer maps from the witness, answer 0 off-support.
    let answer = |player: usize, row: &F2Vector| -> bool {
        witness
            .answer(player, encode_row_query(row))
            .map(|a| a == 1)
            .unwrap_or(false)
    };
    let f1 = |row: &F2Vector| answer(0, row);
    let refinement = strategy_refinement(coset, &f1, params.j, delta, params.kernel_budget)?;
    let u = &refinement.subspace;

    // Bucket support points by their sub-coset of u^3 and tally answer
    // triples; row marginals per player per row sub-coset.
    type Key = Vec<u8>;
    let mut coset_members: BTreeMap<Key, (u64, u64, [u64; 8], [u64; 8])> = BTreeMap::new();
    // (total, event, joint answer counts, event joint answer counts)
    let row_key = |x: &[F2Vector; 3]| -> Key {
        crate::f2::encode_triple(&[u.reduce(&x[0]), u.reduce(&x[1]), u.reduce(&x[2])])
    };
    let answer_index = |x: &[F2Vector; 3]| -> usize {
        usize::from(answer(0, &x[0])) << 2
            | usize::from(answer(1, &x[1])) << 1
            | usize::from(answer(2, &x[2]))
    };
    for (x, &inside) in dists.support.iter().zip(&dists.in_event) {
        let entry = coset_members.entry(row_key(x)).or_insert((0, 0, [0; 8], [0; 8]));
        entry.0 += 1;
        let a = answer_index(x);
        entry.2[a] += 1;
        if inside {
            entry.1 += 1;
            entry.3[a] += 1;
        }
    }

    // Per player: per row sub-coset representative, answer counts over the
    // row coset, plain and conditioned on the player's event set.
    let mut row_counts: [BTreeMap<Vec<u8>, [[u64; 2]; 2]>; 3] = Default::default();
    for i in 0..3 {
        let row = coset.row_coset(i);
        for x in row.iter_points() {
            let rep = u.reduce(&x).to_bytes();
            let a = usize::from(answer(i, &x));
            let entry = row_counts[i].entry(rep).or_default();
            entry[a][0] += 1;
            if event.player_sets()[i].contains(&x.as_low_u64()) {
                entry[a][1] += 1;
            }
        }
    }

    let total: u64 = dists.support.len() as u64;
    let event_total: u64 = dists.in_event.iter().filter(|&&b| b).count() as u64;

    let mut product_tv_p = 0.0;
    let mut product_tv_pt = 0.0;
    let mut coset_marginal_tv = 0.0;
    let mut mean_log_inv_cond = 0.0;
    let mut cond_tv = 0.0;
    for (key, (members, evt, joint, evt_joint)) in &coset_members {
        let x = crate::f2::decode_triple(key, n);
        let p_w = *members as f64 / total as f64;
        let pt_w = *evt as f64 / event_total as f64;
        coset_marginal_tv += (p_w - pt_w).abs();

        // Product of plain row marginals vs the joint law under P.
        let mut tv = 0.0;
        for a in 0..8usize {
            let bits = [a >> 2 & 1, a >> 1 & 1, a & 1];
            let mut prod = 1.0;
            for i in 0..3 {
                let rep = u.reduce(&x[i]).to_bytes();
                let counts = &row_counts[i][&rep];
                let row_total = (counts[0][0] + counts[1][0]) as f64;
                prod *= counts[bits[i]][0] as f64 / row_total;
            }
            tv += (joint[a] as f64 / *members as f64 - prod).abs();
        }
        tv /= 2.0;
        product_tv_p += p_w * tv;
        product_tv_pt += pt_w * tv;

        if *evt > 0 {
            mean_log_inv_cond += pt_w * ((*members as f64) / (*evt as f64)).ln();

            // Conditioned joint law vs product of event-conditioned rows.
            let mut tv = 0.0;
            for a in 0..8usize {
                let bits = [a >> 2 & 1, a >> 1 & 1, a & 1];
                let mut prod = 1.0;
                for i in 0..3 {
                    let rep = u.reduce(&x[i]).to_bytes();
                    let counts = &row_counts[i][&rep];
                    let row_evt = (counts[0][1] + counts[1][1]) as f64;
                    prod *= counts[bits[i]][1] as f64 / row_evt;
                }
                tv += (evt_joint[a] as f64 / *evt as f64 - prod).abs();
            }
            cond_tv += pt_w * tv / 2.0;
        }
    }
    coset_marginal_tv /= 2.0;

    let product_tv_p_bound = (2.0 * delta).sqrt();
    let product_tv_pt_bound = (8.0 * delta).sqrt();

    // Markov tail at the optimizing threshold.
    let b = 4.0 * (2.0 * delta).sqrt();
    let (markov_tau, markov_tail, markov_bound, markov_ok) = if delta_cap >= std::f64::consts::E * b
    {
        let tau = (-lambert_w(delta_cap / b).expect("domain checked")).exp();
        let mut tail = 0.0;
        for (members, evt, _, _) in coset_members.values() {
            if *evt == 0 {
                continue;
            }
            let cond = *evt as f64 / *members as f64;
            if cond <= tau {
                tail += *evt as f64 / event_total as f64;
            }
        }
        let bound = delta_cap / (1.0 / tau).ln();
        (tau, tail, bound, tail <= bound + 1e-12)
    } else {
        (f64::NAN, f64::NAN, f64::NAN, true)
    };

    let cond_arg = delta_cap / (32.0 * delta).sqrt();
    let cond_tv_bound = if cond_arg > 1.0 {
        4.0 * delta_cap / cond_arg.ln()
    } else {
        f64::INFINITY
    };

    Ok(Intermediates {
        refinement_codim: refinement.codim_in_space,
        refinement_bound: refinement.final_bound,
        product_tv_p,
        product_tv_p_bound,
        product_tv_p_ok: product_tv_p <= product_tv_p_bound + 1e-12,
        coset_marginal_tv,
        product_tv_pt,
        product_tv_pt_bound,
        product_tv_pt_ok: product_tv_pt <= product_tv_pt_bound + 1e-12,
        mean_log_inv_cond,
        mean_log_inv_cond_ok: mean_log_inv_cond <= delta_cap + 1e-9,
        markov_tau,
        markov_tail,
        markov_bound,
        markov_ok,
        cond_tv,
        cond_tv_bound,
        cond_tv_ok: cond_tv <= cond_tv_bound + 1e-12,
        cond_tv_le_eps: cond_tv <= params.epsilon + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2::Subspace;

    fn full_event(n: usize) -> ProductEvent {
        let all: std::collections::BTreeSet<u64> = (0..1u64 << n).collect();
        ProductEvent::new(n, [all.clone(), all.clone(), all])
    }

    fn full_coset(n: usize) -> AffinePowerCoset {
        AffinePowerCoset::new(
            [
                F2Vector::zeros(n),
                F2Vector::zeros(n),
                F2Vector::zeros(n),
            ],
            Subspace::full(n),
        )
    }

    #[test]
    fn row_query_encoding_is_big_endian() {
        let v = F2Vector::from_bits(&[true, false, true]); // coordinates 0,2
        assert_eq!(encode_row_query(&v), 0b101);
        assert_eq!(decode_row_query(3, 0b101), v);
    }

    #[test]
    fn full_event_makes_sides_equal() {
        let coset = full_coset(2);
        let params = PseudoHardnessParams {
            j: 0,
            delta: 0.3,
            epsilon: 0.1,
            ..Default::default()
        };
        let report = pseudo_hardness_check(&coset, &full_event(2), &params).unwrap();
        assert_eq!(report.lhs, report.rhs_value);
        assert!(report.conclusion_holds);
        assert!(report.hypothesis_met);
        assert_eq!(report.d_m_measured, 0.0);
        assert_eq!(report.delta_cap, 0.0);
        // Zero log-mass cannot satisfy the quadratic constraints.
        assert!(!report.asserted);
        let inter = report.intermediates.unwrap();
        assert!(inter.product_tv_p_ok);
        assert!(inter.mean_log_inv_cond_ok);
    }

    #[test]
    fn half_mass_event_keeps_conclusion() {
        // E: player 1's first query bit is 0 (half the support).
        let n = 2;
        let half: std::collections::BTreeSet<u64> =
            (0..4u64).filter(|q| q & 1 == 0).collect();
        let all: std::collections::BTreeSet<u64> = (0..4u64).collect();
        let event = ProductEvent::new(n, [half, all.clone(), all]);
        let params = PseudoHardnessParams {
            j: 1,
            delta: 0.05,
            epsilon: 0.45,
            ..Default::default()
        };
        let report = pseudo_hardness_check(&full_coset(n), &event, &params).unwrap();
        assert!(report.conclusion_holds);
        assert!(report.delta_cap > 0.0);
        let inter = report.intermediates.unwrap();
        assert!(inter.mean_log_inv_cond_ok);
        assert!(inter.product_tv_p_ok);
    }

    #[test]
    fn constraint_flags_follow_definitions() {
        let n = 1;
        let zero: std::collections::BTreeSet<u64> = [0u64].into();
        let all: std::collections::BTreeSet<u64> = [0u64, 1].into();
        let event = ProductEvent::new(n, [zero, all.clone(), all]);
        // P(E) = 1/2, delta_cap = ln 2.
        let params = PseudoHardnessParams {
            j: 0,
            delta: 0.5,
            epsilon: 0.1,
            with_intermediates: false,
            ..Default::default()
        };
        let report = pseudo_hardness_check(&full_coset(n), &event, &params).unwrap();
        let dc = (2.0f64).ln();
        assert!((report.delta_cap - dc).abs() < 1e-12);
        let e = std::f64::consts::E;
        assert_eq!(
            report.constraint_flags,
            [
                0.5 <= dc * dc / 32.0 * (-4.0 * dc / 0.1).exp(),
                0.5 <= dc * dc / (32.0 * e * e),
                0.5 <= 2.0 * 0.01f64,
            ]
        );
        assert!(!report.asserted);
    }
}
