//! Seeded property suites over randomized instances, with independent
//! oracles where a second route exists (unpruned strategy search, grid
//! search, subset enumeration). The command-line `selftest` subcommand and
//! the acceptance tests both drive these.

use num::{BigInt, FromPrimitive, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{build_embedding, embeddable_coordinates, verify_embedding};
use crate::f2::{
    encode_triple, AffinePowerCoset, F2Matrix, F2Vector, Subspace, DEFAULT_ENUM_BUDGET,
};
use crate::fourier::{
    ghz_density_coefficient, ghz_product_event_prob, prob_diff_bound_check,
    product_function_check, Character, DEFAULT_DIM_BUDGET,
};
use crate::games::{
    coordinate_value, exact_value, ghz_game, strategy_value, Game, GameError, ProductStrategy,
    QueryDist, RepeatedGame, DEFAULT_SEARCH_BUDGET,
};
use crate::harness::{
    criterion_simulate, encode_row_query, pseudo_hardness_check, CriterionParams,
    PseudoHardnessParams,
};
use crate::partition::{
    d_m_closeness, pseudorandom_partition, strategy_refinement, ProductEvent,
    DEFAULT_KERNEL_BUDGET,
};
use crate::prob::{
    conditioned_tv_bound_check, expectation_quotient_bound_check, kl_divergence, lambert_w,
    optimum_tau, pinsker_check, rat, tv_distance, FiniteDist, Outcome, RandVar, Rational,
};

/// Result of one property suite.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub notes: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn report(name: &'static str, trials: usize, failures: usize, notes: String) -> SuiteReport {
    SuiteReport {
        name,
        trials,
        failures,
        notes,
    }
}

// ---------------------------------------------------------------------------
// Randomized instance generators.
// ---------------------------------------------------------------------------

pub mod gen {
    use super::*;

    /// A random subspace of F2^ambient with the exact requested dimension.
    pub fn subspace(rng: &mut ChaCha8Rng, ambient: usize, dim: usize) -> Subspace {
        assert!(dim <= ambient);
        let mut space = Subspace::zero(ambient);
        while space.dim() < dim {
            let v = F2Vector::from_low_u64(ambient, rng.gen_range(1..1u64 << ambient));
            let mut gens = space.basis().to_vec();
            gens.push(v);
            let candidate = Subspace::from_generators(ambient, &gens);
            if candidate.dim() > space.dim() {
                space = candidate;
            }
        }
        space
    }

    /// A random affine power coset with the requested space dimension whose
    /// intersection with the repeated query support is nonempty.
    pub fn power_coset(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> AffinePowerCoset {
        let space = subspace(rng, n, dim);
        let w1 = F2Vector::from_low_u64(n, rng.gen_range(0..1u64 << n));
        let w2 = F2Vector::from_low_u64(n, rng.gen_range(0..1u64 << n));
        // Pick the third shift so the rows can sum to zero inside the coset.
        let in_space = space.element(rng.gen_range(0..space.size() as u64));
        let mut w3 = w1.xor(&w2);
        w3.xor_assign(&in_space);
        AffinePowerCoset::new([w1, w2, w3], space)
    }

    /// A random product event keeping each row with the given percentage,
    /// never empty per player.
    pub fn product_event(rng: &mut ChaCha8Rng, n: usize, keep_percent: u32) -> ProductEvent {
        let size = 1u64 << n;
        let sets: [std::collections::BTreeSet<u64>; 3] = std::array::from_fn(|_| {
            let mut s: std::collections::BTreeSet<u64> = (0..size)
                .filter(|_| rng.gen_range(0..100) < keep_percent)
                .collect();
            if s.is_empty() {
                s.insert(rng.gen_range(0..size));
            }
            s
        });
        ProductEvent::new(n, sets)
    }

    /// A random full-support distribution over the given keys.
    pub fn finite_dist(rng: &mut ChaCha8Rng, keys: &[Outcome]) -> FiniteDist {
        FiniteDist::from_weights(
            keys.iter()
                .map(|k| (k.clone(), rat(rng.gen_range(1..=16), 1))),
        )
        .expect("positive weights")
    }

    /// A random subset of the elements of a subspace.
    pub fn subspace_subset(
        rng: &mut ChaCha8Rng,
        space: &Subspace,
        keep_percent: u32,
    ) -> Vec<F2Vector> {
        space
            .iter_elements()
            .filter(|_| rng.gen_range(0..100) < keep_percent)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Independent game-value oracles.
// ---------------------------------------------------------------------------

/// Unpruned exact value: enumerates every product strategy as full tables
/// and evaluates each one directly. Exponentially slower than the pruned
/// search; kept as the independent route.
pub fn unpruned_value(game: &Game, budget: u128) -> Result<Rational, GameError> {
    let mut space: u128 = 1;
    for (&q, &a) in game.query_sizes().iter().zip(game.answer_sizes()) {
        for _ in 0..q {
            space = space.saturating_mul(a as u128);
        }
    }
    if space > budget {
        return Err(GameError::BudgetExceeded {
            required: space,
            budget,
        });
    }
    let mut tables: Vec<Vec<usize>> = game
        .query_sizes()
        .iter()
        .map(|&q| vec![0usize; q])
        .collect();
    let mut best = Rational::zero();
    for _ in 0..space {
        let v = strategy_value(game, &ProductStrategy { tables: tables.clone() })?;
        if v > best {
            best = v;
        }
        // odometer
        'bump: for i in (0..tables.len()).rev() {
            let radix = game.answer_sizes()[i];
            for slot in tables[i].iter_mut().rev() {
                *slot += 1;
                if *slot < radix {
                    break 'bump;
                }
                *slot = 0;
            }
        }
    }
    Ok(best)
}

/// Direct brute force over all `256^3` strategy triples for the twice
/// repeated GHZ game, written against the raw definition with packed
/// tables. Independent of the generic game machinery.
pub fn ghz_square_unpruned_value() -> Rational {
    let mut best: u32 = 0;
    for t1 in 0u32..256 {
        for t2 in 0u32..256 {
            for t3 in 0u32..256 {
                let mut wins = 0u32;
                for q1 in 0u32..4 {
                    let a1 = t1 >> (2 * q1) & 3;
                    for q2 in 0u32..4 {
                        let q3 = q1 ^ q2;
                        let a2 = t2 >> (2 * q2) & 3;
                        let a3 = t3 >> (2 * q3) & 3;
                        // Win in both repetitions at once: the answer XOR
                        // must equal the query OR bitwise.
                        if a1 ^ a2 ^ a3 == (q1 | q2 | q3) {
                            wins += 1;
                        }
                    }
                }
                if wins > best {
                    best = wins;
                }
            }
        }
    }
    Rational::new(BigInt::from_u32(best).unwrap(), BigInt::from(16))
}

// ---------------------------------------------------------------------------
// Property suites.
// ---------------------------------------------------------------------------

/// Three-route agreement of the product-event probability formula on random
/// subspaces and subsets.
pub fn fourier_formula_suite(seed: u64, trials: usize, max_dim: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let ambient = rng.gen_range(1..=max_dim + 1);
        let dim = rng.gen_range(1..=ambient.min(max_dim));
        let v = gen::subspace(&mut rng, ambient, dim);
        let keeps: [u32; 3] = std::array::from_fn(|_| rng.gen_range(0..=100));
        let e1 = gen::subspace_subset(&mut rng, &v, keeps[0]);
        let e2 = gen::subspace_subset(&mut rng, &v, keeps[1]);
        let e3 = gen::subspace_subset(&mut rng, &v, keeps[2]);
        let probs = ghz_product_event_prob(&v, &e1, &e2, &e3, DEFAULT_DIM_BUDGET)
            .expect("within budget");
        if !probs.all_equal() {
            failures += 1;
        }
    }
    report("fourier-formula", trials, failures, String::new())
}

/// Indicator-transform bound on the deviation from the product measure.
pub fn prob_diff_suite(seed: u64, trials: usize, max_dim: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let dim = rng.gen_range(1..=max_dim);
        let v = gen::subspace(&mut rng, dim, dim);
        let keeps: [u32; 3] = std::array::from_fn(|_| rng.gen_range(0..=100));
        let e1 = gen::subspace_subset(&mut rng, &v, keeps[0]);
        let e2 = gen::subspace_subset(&mut rng, &v, keeps[1]);
        let e3 = gen::subspace_subset(&mut rng, &v, keeps[2]);
        let check = prob_diff_bound_check(&v, &e1, &e2, &e3, DEFAULT_DIM_BUDGET)
            .expect("within budget");
        if !check.holds {
            failures += 1;
        }
    }
    report("prob-diff-bound", trials, failures, String::new())
}

fn random_eight_point_pair(rng: &mut ChaCha8Rng) -> (FiniteDist, FiniteDist) {
    let keys: Vec<Outcome> = (0u8..8).map(|b| vec![b]).collect();
    (gen::finite_dist(rng, &keys), gen::finite_dist(rng, &keys))
}

pub fn pinsker_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let (p, q) = random_eight_point_pair(&mut rng);
        if !pinsker_check(&p, &q).expect("same universe").holds {
            failures += 1;
        }
    }
    report("pinsker", trials, failures, String::new())
}

pub fn conditioned_tv_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let (p, q) = random_eight_point_pair(&mut rng);
        let mask: u8 = rng.gen_range(1..=255);
        let check = conditioned_tv_bound_check(&p, &q, |o| mask >> (o[0] % 8) & 1 == 1);
        match check {
            Ok(c) if c.holds => {}
            Ok(_) => failures += 1,
            // Full-support pairs always give positive event mass.
            Err(e) => panic!("unexpected conditioning failure: {e}"),
        }
    }
    report("conditioned-tv", trials, failures, String::new())
}

pub fn expectation_quotient_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let keys: Vec<Outcome> = (0u8..8).map(|b| vec![b]).collect();
        let p = gen::finite_dist(&mut rng, &keys);
        let xm: u8 = rng.gen_range(0..8);
        let x = RandVar::from_fn(p.universe(), |o| vec![(o[0] ^ xm) % 3]);
        // The quotient bound compares conditionals of the same conditioned
        // measure, so the event must read the same through both variables:
        // pick a value set A and make Y land in A exactly when X does.
        let amask: u8 = rng.gen_range(1..7);
        let in_a = |v: u8| amask >> v & 1 == 1;
        let pick = |inside: bool, salt: u8| -> u8 {
            (0..3u8)
                .filter(|&v| in_a(v) == inside)
                .cycle()
                .nth(salt as usize)
                .unwrap_or(0)
        };
        let y = RandVar::from_fn(p.universe(), |o| {
            let xv = (o[0] ^ xm) % 3;
            vec![pick(in_a(xv), o[0] >> 1)]
        });
        let z = RandVar::from_fn(p.universe(), |o| vec![o[0] & 1]);
        let event = |o: &Outcome| in_a((o[0] ^ xm) % 3);
        if p.prob(event).is_zero() {
            continue;
        }
        // Instantiate the precondition exactly: delta is the smallest
        // conditional event mass over z-values reached with the allowed
        // exception probability tau.
        let pz = p.pushforward(&z).expect("total");
        let mut cond_masses: Vec<(Rational, Rational)> = Vec::new();
        for (v, m) in pz.support() {
            let given = p.condition(|o| z.get(o) == Some(v)).expect("positive");
            cond_masses.push((given.prob(event), m.clone()));
        }
        cond_masses.sort_by(|a, b| a.0.cmp(&b.0));
        // Allow the lowest-mass z-value as the exception.
        let tau = if cond_masses.len() > 1 && rng.gen_bool(0.5) {
            cond_masses[0].1.clone()
        } else {
            Rational::zero()
        };
        let delta_idx = usize::from(!tau.is_zero());
        let delta = cond_masses
            .get(delta_idx)
            .map(|(d, _)| d.clone())
            .unwrap_or_else(|| cond_masses[0].0.clone());
        if delta.is_zero() {
            continue;
        }
        match expectation_quotient_bound_check(&p, event, &x, &y, &z, &delta, &tau) {
            Ok(c) if c.holds => {}
            Ok(_) => failures += 1,
            Err(crate::prob::ProbError::PreconditionFailed(_)) => {}
            Err(e) => panic!("unexpected failure: {e}"),
        }
    }
    report("expectation-quotient", trials, failures, String::new())
}

pub fn optimum_tau_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let b = rng.gen_range(0.01..10.0);
        let a = b * rng.gen_range(std::f64::consts::E..200.0);
        let r = optimum_tau(a, b).expect("domain satisfied");
        let w = lambert_w(a / b).expect("domain satisfied");
        let identity_ok = (w * w.exp() - a / b).abs() <= 1e-10 * (a / b);
        let bound_ok = r.value <= r.bound + 1e-12;
        // Coarse grid oracle: no grid point beats the reported value by
        // more than the grid resolution allows.
        let mut grid_min = f64::INFINITY;
        for i in 1..1000 {
            let tau = i as f64 / 1000.0;
            grid_min = grid_min.min(a / (1.0 / tau).ln() + b / tau);
        }
        let grid_ok = grid_min <= r.value + 1e-9;
        if !(identity_ok && bound_ok && grid_ok) {
            failures += 1;
        }
    }
    report("optimum-tau", trials, failures, String::new())
}

/// Local embeddings on random cosets: coverage count and full verification
/// of every reported coordinate.
pub fn embedding_suite(seed: u64, trials: usize, max_n: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut coordinates_checked = 0usize;
    for _ in 0..trials {
        let n = rng.gen_range(1..=max_n);
        let m = rng.gen_range(0..n.max(1));
        let coset = gen::power_coset(&mut rng, n, n - m);
        let coords = match embeddable_coordinates(&coset) {
            Ok(c) => c,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if coords.len() < n - m {
            failures += 1;
            continue;
        }
        for &j in &coords {
            coordinates_checked += 1;
            let ok = build_embedding(&coset, j, DEFAULT_ENUM_BUDGET)
                .and_then(|emb| verify_embedding(&emb, DEFAULT_ENUM_BUDGET));
            if ok.is_err() {
                failures += 1;
            }
        }
    }
    report(
        "embedding",
        trials,
        failures,
        format!("{coordinates_checked} coordinates verified"),
    )
}

/// Value preservation through embeddings: on embeddable coordinates the
/// conditioned coordinate value equals the base value 3/4 exactly.
pub fn embedding_value_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let n = rng.gen_range(1..=4usize);
        let dim = rng.gen_range(1..=n.min(3));
        let coset = gen::power_coset(&mut rng, n, dim);
        let coords = embeddable_coordinates(&coset).expect("nonempty by construction");
        let support = coset
            .ghz_support(DEFAULT_ENUM_BUDGET)
            .unwrap()
            .expect("nonempty");
        let total = support.len();
        let dist: QueryDist = support
            .iter()
            .map(|x| {
                (
                    (0..3).map(|i| encode_row_query(&x[i])).collect(),
                    Rational::new(1.into(), (total as i64).into()),
                )
            })
            .collect();
        let rg = RepeatedGame::new(ghz_game(), n);
        for &j in &coords {
            let cv = coordinate_value(&rg, j, Some(&dist), DEFAULT_SEARCH_BUDGET, 1)
                .expect("within budget");
            if cv.value != rat(3, 4) {
                failures += 1;
            }
        }
    }
    report("embedding-value", trials, failures, String::new())
}

/// Pseudorandom partition construction on random dense product events; the
/// construction itself enforces the potential decrease, round cap, and
/// codimension bound, and the suite re-checks the trace.
pub fn partition_suite(seed: u64, trials: usize, max_n: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut max_rounds_seen = 0usize;
    for _ in 0..trials {
        let n = rng.gen_range(1..=max_n);
        let delta = rng.gen_range(0.25..1.0);
        // Dense events: mass at least 2^-6 enforced by rejection.
        let event = loop {
            let keep = rng.gen_range(55..=100);
            let ev = gen::product_event(&mut rng, n, keep);
            let support = crate::partition::ghz_support_points(n, DEFAULT_ENUM_BUDGET).unwrap();
            let count = support.iter().filter(|x| ev.contains(x)).count();
            if count * 64 >= support.len() {
                break ev;
            }
        };
        match pseudorandom_partition(n, &event, delta, 1, DEFAULT_KERNEL_BUDGET, DEFAULT_ENUM_BUDGET)
        {
            Ok(out) => {
                max_rounds_seen = max_rounds_seen.max(out.trace.len() - 1);
                let rounds = out.trace.len() - 1;
                let cap = (out.delta_cap / delta).ceil() as usize;
                if rounds > cap {
                    failures += 1;
                }
                // Exhaustive partition-axiom check where the ambient fits.
                if n <= 4 && out.partition.validate(DEFAULT_ENUM_BUDGET).is_err() {
                    failures += 1;
                }
                if out.partition.codim() as f64 > 1.0 * out.delta_cap / delta + 1e-9 {
                    failures += 1;
                }
                if out.final_expected_dm > delta + 1e-9 {
                    failures += 1;
                }
                for w in out.trace.windows(2) {
                    if w[1].phi >= w[0].phi - delta + 1e-9 {
                        failures += 1;
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    report(
        "pseudorandom-partition",
        trials,
        failures,
        format!("max refinement rounds {max_rounds_seen}"),
    )
}

/// Compression-closeness is monotone in the level on random conditioned
/// distributions.
pub fn dm_monotone_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let n = rng.gen_range(1..=3usize);
        let coset = AffinePowerCoset::full(n);
        let support = crate::partition::ghz_support_points(n, DEFAULT_ENUM_BUDGET).unwrap();
        let keep = rng.gen_range(40..=100);
        let event = gen::product_event(&mut rng, n, keep);
        let inside: Vec<&[F2Vector; 3]> =
            support.iter().filter(|x| event.contains(x)).collect();
        if inside.is_empty() {
            continue;
        }
        let x = FiniteDist::uniform(support.iter().map(encode_triple));
        let xt = FiniteDist::uniform(inside.iter().map(|p| encode_triple(p)));
        let mut prev = -1.0;
        for m in 0..=2usize {
            let r = d_m_closeness(&coset, &xt, &x, m, DEFAULT_KERNEL_BUDGET)
                .expect("within budget");
            if r.value < prev - 1e-12 {
                failures += 1;
            }
            prev = r.value;
        }
    }
    report("dm-monotone", trials, failures, String::new())
}

/// The chain-rule identity behind the potential argument, evaluated
/// numerically on random events and kernels: conditioning on the refined
/// part equals conditioning on the part plus the compressed value.
pub fn partition_chain_rule_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let n = rng.gen_range(1..=3usize);
        let support = crate::partition::ghz_support_points(n, DEFAULT_ENUM_BUDGET).unwrap();
        let keep = rng.gen_range(40..=95);
        let event = gen::product_event(&mut rng, n, keep);
        let inside: Vec<bool> = support.iter().map(|x| event.contains(x)).collect();
        if !inside.iter().any(|&b| b) {
            continue;
        }
        let full = Subspace::full(n);
        let dim_cut = rng.gen_range(0..=n);
        let kernel = gen::subspace(&mut rng, n, n - dim_cut);

        // Conditional KL terms, all via direct counting.
        let keys_fine: Vec<Outcome> = support
            .iter()
            .map(|x| {
                encode_triple(&[
                    kernel.reduce(&x[0]),
                    kernel.reduce(&x[1]),
                    kernel.reduce(&x[2]),
                ])
            })
            .collect();
        let evt_total = inside.iter().filter(|&&b| b).count() as f64;
        let total = support.len() as f64;
        // Trivial partition: d_KL(Pt_X || P_X) for the fine and coarse views.
        let mut fine: std::collections::BTreeMap<&Outcome, (usize, usize)> = Default::default();
        for (key, &ins) in keys_fine.iter().zip(&inside) {
            let e = fine.entry(key).or_default();
            e.0 += 1;
            if ins {
                e.1 += 1;
            }
        }
        // d_KL(Pt_{phi(X)} || P_{phi(X)})
        let mut kl_compressed = 0.0;
        for (cnt, evt) in fine.values() {
            if *evt == 0 {
                continue;
            }
            let pt = *evt as f64 / evt_total;
            let p = *cnt as f64 / total;
            kl_compressed += pt * (pt / p).ln();
        }
        // d_KL(Pt_X || P_X) = ln(total/evt_total) for uniform conditioning.
        let kl_plain = (total / evt_total).ln();
        // d_KL(Pt_{X | phi(X)} || P_{X | phi(X)}): expectation over fine
        // parts of the conditional divergence between uniforms.
        let mut kl_conditional = 0.0;
        for (cnt, evt) in fine.values() {
            if *evt == 0 {
                continue;
            }
            let w = *evt as f64 / evt_total;
            kl_conditional += w * ((*cnt as f64) / (*evt as f64)).ln();
        }
        if (kl_plain - (kl_compressed + kl_conditional)).abs() > 1e-9 {
            failures += 1;
        }
        let _ = full;
    }
    report("partition-chain-rule", trials, failures, String::new())
}

/// Strategy refinement on random cosets and answer tables: exit bound,
/// codimension cap, and internally certified potential decrease.
pub fn strategy_refinement_suite(seed: u64, trials: usize, max_dim: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let dim = rng.gen_range(1..=max_dim);
        let n = rng.gen_range(dim..=dim + 2);
        let coset = gen::power_coset(&mut rng, n, dim);
        let j = rng.gen_range(0..n);
        let delta = rng.gen_range(0.1..0.5);
        // Random answer table over the first player's row coset.
        let row = coset.row_coset(0);
        let table: std::collections::BTreeMap<Vec<u8>, bool> = row
            .iter_points()
            .map(|x| (x.to_bytes(), rng.gen_bool(0.5)))
            .collect();
        let f1 = |x: &F2Vector| *table.get(&x.to_bytes()).expect("row point");
        match strategy_refinement(&coset, &f1, j, delta, 1 << 22) {
            Ok(r) => {
                if r.final_bound > delta + 1e-12 {
                    failures += 1;
                }
                if r.codim_in_space > (1.0 / delta).ceil() as usize + 1 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    report("strategy-refinement", trials, failures, String::new())
}

/// Product-function independence bound on random subspace pairs and binary
/// answer maps; the inequality is a theorem, so any violation fails.
pub fn product_function_suite(seed: u64, trials: usize, max_dim: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let dim = rng.gen_range(1..=max_dim);
        let v = gen::subspace(&mut rng, dim, dim);
        let sub_dim = rng.gen_range(0..=dim);
        // Random subspace of v: span of random elements.
        let w = {
            let mut gens = Vec::new();
            for _ in 0..sub_dim {
                gens.push(v.element(rng.gen_range(0..v.size() as u64)));
            }
            let mut s = Subspace::from_generators(dim, &gens);
            while s.dim() > sub_dim {
                gens.pop();
                s = Subspace::from_generators(dim, &gens);
            }
            s
        };
        let tables: Vec<std::collections::BTreeMap<Vec<u8>, usize>> = (0..3)
            .map(|_| {
                v.iter_elements()
                    .map(|x| (x.to_bytes(), rng.gen_range(0..2usize)))
                    .collect()
            })
            .collect();
        let f0 = |x: &F2Vector| tables[0][&x.to_bytes()];
        let f1 = |x: &F2Vector| tables[1][&x.to_bytes()];
        let f2 = |x: &F2Vector| tables[2][&x.to_bytes()];
        let r = product_function_check(&v, &w, [2, 2, 2], [&f0, &f1, &f2], DEFAULT_DIM_BUDGET)
            .expect("within budget");
        if !r.holds {
            failures += 1;
        }
    }
    report("product-function", trials, failures, String::new())
}

/// Hardness transfer on random dense events at two repetitions: exact
/// coordinate values on both sides, with the conclusion checked whenever
/// the closeness hypothesis is met, and the theorem direction checked
/// whenever every flag holds.
pub fn pseudo_hardness_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut hypothesis_met_count = 0usize;
    let n = 2usize;
    for _ in 0..trials {
        let coset = AffinePowerCoset::full(n);
        // Dense events keep the conditioned law near the unconditioned one.
        let keep = rng.gen_range(85..=100);
        let event = gen::product_event(&mut rng, n, keep);
        let params = PseudoHardnessParams {
            j: rng.gen_range(0..n),
            delta: 0.35,
            epsilon: 0.1,
            ..Default::default()
        };
        let rep = match pseudo_hardness_check(&coset, &event, &params) {
            Ok(r) => r,
            Err(crate::harness::HarnessError::ZeroMass) => continue,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if rep.hypothesis_met {
            hypothesis_met_count += 1;
            if !rep.conclusion_holds {
                failures += 1;
            }
        }
        if rep.asserted && !rep.conclusion_holds {
            failures += 1;
        }
        if let Some(inter) = &rep.intermediates {
            if !inter.mean_log_inv_cond_ok || !inter.product_tv_p_ok || !inter.markov_ok {
                failures += 1;
            }
        }
    }
    report(
        "pseudo-hardness",
        trials,
        failures,
        format!("{hypothesis_met_count} hypothesis-met instances"),
    )
}

/// Win-process decay on the twice-repeated game with the exact optimal
/// strategy: the win sequence matches direct enumeration and the decay
/// inequality holds on every qualifying history.
pub fn criterion_sim_suite() -> SuiteReport {
    let g = ghz_game();
    let rg = RepeatedGame::new(g.clone(), 2);
    let mat = rg.materialize(1 << 20).expect("small");
    let best = exact_value(&mat, DEFAULT_SEARCH_BUDGET, 1).expect("within budget");
    // rho small enough that the first-round mass flag fires, so the decay
    // inequality is genuinely checked rather than vacuously skipped.
    let params = CriterionParams {
        rho: rat(1, 1000),
        epsilon: rat(1, 4),
        ..Default::default()
    };
    let trace = criterion_simulate(&g, 2, &best.witness, &params).expect("small instance");
    let mut failures = 0;
    if !trace.rounds[0].mass_flag {
        failures += 1;
    }
    if trace.rounds[1].decay_ok != Some(true) {
        failures += 1;
    }

    // Direct enumeration oracle for w_1: win probability at coordinate j1
    // under the product distribution.
    let support = rg.product_query_dist();
    let mut w1_wins = 0usize;
    for (q, _) in &support {
        let qj: Vec<usize> = (0..3).map(|i| rg.query_symbol(i, q[i], params.j1)).collect();
        let aj: Vec<usize> = (0..3)
            .map(|i| rg.answer_symbol(i, best.witness.tables[i][q[i]], params.j1))
            .collect();
        if g.win(&qj, &aj) {
            w1_wins += 1;
        }
    }
    let w1 = Rational::new((w1_wins as i64).into(), (support.len() as i64).into());
    if trace.rounds[0].w != w1.to_string() {
        failures += 1;
    }
    // w_2 equals the full repeated value of the strategy.
    let v2 = strategy_value(&mat, &best.witness).expect("shapes match");
    if trace.rounds[1].w != v2.to_string() {
        failures += 1;
    }
    if v2 != ghz_square_unpruned_value() {
        failures += 1;
    }
    if !trace.product_events_ok {
        failures += 1;
    }
    for r in &trace.rounds {
        if !r.cross_check_ok || r.decay_ok == Some(false) {
            failures += 1;
        }
    }
    report("criterion-simulate", 1, failures, format!("w = [{}, {}]", w1, v2))
}

/// Pruned search equals the unpruned oracle on random small games; the
/// repeated-game invariants; shared randomness never helps.
pub fn games_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let k = rng.gen_range(2..=3usize);
        let query_sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=2usize)).collect();
        let answer_sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=3usize)).collect();
        let tuples: Vec<Vec<usize>> = {
            let mut all = vec![vec![]];
            for &s in &query_sizes {
                let mut next = Vec::new();
                for t in &all {
                    for v in 0..s {
                        let mut t2 = t.clone();
                        t2.push(v);
                        next.push(t2);
                    }
                }
                all = next;
            }
            all
        };
        let dist: QueryDist = {
            let weights: Vec<i64> = tuples.iter().map(|_| rng.gen_range(0..4)).collect();
            let total: i64 = weights.iter().sum();
            if total == 0 {
                continue;
            }
            tuples
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w > 0)
                .map(|(t, &w)| (t.clone(), rat(w, total)))
                .collect()
        };
        let win_seed: u64 = rng.gen();
        let game = Game::new(query_sizes, answer_sizes, dist, |x, y| {
            let mut h = win_seed;
            for &v in x.iter().chain(y) {
                h = h.wrapping_mul(6364136223846793005).wrapping_add(v as u64 + 1);
            }
            h >> 33 & 1 == 1
        })
        .expect("valid game");
        let pruned = exact_value(&game, DEFAULT_SEARCH_BUDGET, 1).expect("small");
        let oracle = unpruned_value(&game, 1 << 24).expect("small");
        if pruned.value != oracle {
            failures += 1;
        }
        if strategy_value(&game, &pruned.witness).expect("shape") != pruned.value {
            failures += 1;
        }
    }

    // GHZ-specific invariants.
    let g = ghz_game();
    let v1 = exact_value(&g, DEFAULT_SEARCH_BUDGET, 1).expect("small").value;
    if v1 != rat(3, 4) {
        failures += 1;
    }
    // The exact value dominates every sampled strategy.
    for _ in 0..10_000 {
        let tables: Vec<Vec<usize>> = (0..3)
            .map(|_| (0..2).map(|_| rng.gen_range(0..2)).collect())
            .collect();
        if strategy_value(&g, &ProductStrategy { tables }).expect("shape") > v1 {
            failures += 1;
        }
    }
    let rg = RepeatedGame::new(g.clone(), 2);
    let mat = rg.materialize(1 << 20).expect("small");
    let v2 = exact_value(&mat, DEFAULT_SEARCH_BUDGET, 1).expect("small").value;
    // Repetition cannot increase the value.
    if v2 > v1 {
        failures += 1;
    }
    // The full win is at most the single-coordinate win.
    for j in 0..2 {
        let cv = coordinate_value(&rg, j, None, DEFAULT_SEARCH_BUDGET, 1).expect("small");
        if v2 > cv.value {
            failures += 1;
        }
    }
    if !crate::games::randomized_vs_deterministic_check(&g, 2, 1 << 22).expect("small") {
        failures += 1;
    }
    report("games", trials, failures, String::new())
}

/// Assorted exact-arithmetic identities on random inputs: row reduction,
/// zero-sum subsets, quotient covers, TV formula agreement, divergence
/// chain rules.
pub fn core_props_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        // rref idempotence and row-space preservation.
        let rows = rng.gen_range(1..=6usize);
        let cols = rng.gen_range(1..=6usize);
        let m = F2Matrix::new(
            cols,
            (0..rows)
                .map(|_| F2Vector::from_low_u64(cols, rng.gen_range(0..1u64 << cols)))
                .collect(),
        );
        let r = m.rref();
        let r2 = r.matrix.rref();
        if r.matrix != r2.matrix {
            failures += 1;
        }
        let space = Subspace::from_generators(cols, m.rows());
        if !m.rows().iter().all(|row| space.contains(row)) {
            failures += 1;
        }

        // Zero-sum subsets really sum to zero when they exist.
        if rows > cols {
            match crate::f2::subset_sum_zero(&m, rows) {
                Ok(s) => {
                    let mut acc = F2Vector::zeros(cols);
                    for &j in &s {
                        acc.xor_assign(m.row(j));
                    }
                    if !acc.is_zero() || s.is_empty() {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1, // guaranteed by pigeonhole here
            }
        }

        // Quotient representatives cover without overlap.
        let dim = rng.gen_range(0..=4usize);
        let ambient = rng.gen_range(dim.max(1)..=6);
        let v = gen::subspace(&mut rng, ambient, dim);
        let sub_dim = rng.gen_range(0..=dim);
        let u = {
            let mut gens = Vec::new();
            let mut s = Subspace::zero(ambient);
            while s.dim() < sub_dim {
                gens.push(v.element(rng.gen_range(0..v.size() as u64)));
                s = Subspace::from_generators(ambient, &gens);
            }
            s
        };
        let reps = crate::f2::coset_reps(&v, &u).expect("subspace");
        if reps.len() != 1 << (v.dim() - u.dim()) {
            failures += 1;
        }
        let mut seen = std::collections::BTreeSet::new();
        for rep in &reps {
            for el in u.iter_elements() {
                if !seen.insert(rep.xor(&el).to_bytes()) {
                    failures += 1;
                }
            }
        }
        if seen.len() as u128 != v.size() {
            failures += 1;
        }

        // TV sum formula equals the max-event formula.
        let keys: Vec<Outcome> = (0u8..rng.gen_range(2..=6)).map(|b| vec![b]).collect();
        let p = gen::finite_dist(&mut rng, &keys);
        let q = gen::finite_dist(&mut rng, &keys);
        let tv = tv_distance(&p, &q).expect("same universe");
        let mut max_event = Rational::zero();
        for mask in 0u32..1 << keys.len() {
            let pe: Rational = keys
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, k)| p.mass(k))
                .sum();
            let qe: Rational = keys
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, k)| q.mass(k))
                .sum();
            let d = (pe - qe).abs();
            if d > max_event {
                max_event = d;
            }
        }
        if tv != max_event {
            failures += 1;
        }

        // KL is nonnegative, zero exactly on equal distributions; the
        // conditioning divergence is the log inverse mass.
        if kl_divergence(&p, &p) != 0.0 {
            failures += 1;
        }
        let kl = kl_divergence(&p, &q);
        if kl < 0.0 || (p == q) != (kl == 0.0) {
            failures += 1;
        }
        let mask: u8 = rng.gen_range(1..(1u32 << keys.len()) as u8);
        let event = |o: &Outcome| mask >> o[0] & 1 == 1;
        let pe = p.prob(event);
        if pe.is_positive() {
            let cond = p.condition(event).expect("positive");
            let expect = (1.0 / pe.to_f64().unwrap()).ln();
            if (kl_divergence(&cond, &p) - expect).abs() > 1e-12 {
                failures += 1;
            }
        }
    }
    report("core-props", trials, failures, String::new())
}

/// Diagonal structure of the repeated-query density transform, checked by
/// direct sign sums: exhaustive in low dimension, sampled above.
pub fn ghz_density_suite(seed: u64, trials: usize, max_dim: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let d = rng.gen_range(4..=max_dim);
        let v = gen::subspace(&mut rng, d, d);
        let n = 1u64 << d;
        let chars: [Character; 3] = std::array::from_fn(|_| {
            Character::from_index(d, rng.gen_range(0..n))
        });
        let coeff = ghz_density_coefficient(&v, &chars);
        let diagonal = chars[0] == chars[1] && chars[1] == chars[2];
        let expect = if diagonal { Rational::one() } else { Rational::zero() };
        if coeff != expect {
            failures += 1;
        }
    }
    report("ghz-density-diagonal", trials, failures, String::new())
}

/// Runs every suite at the given trial scale.
pub fn run_all(seed: u64, quick: bool) -> Vec<SuiteReport> {
    let t = |full: usize, fast: usize| if quick { fast } else { full };
    vec![
        core_props_suite(seed ^ 0x01, t(300, 50)),
        fourier_formula_suite(seed ^ 0x02, t(1000, 100), 8),
        prob_diff_suite(seed ^ 0x03, t(10_000, 500), 4),
        pinsker_suite(seed ^ 0x04, t(10_000, 500)),
        conditioned_tv_suite(seed ^ 0x05, t(10_000, 500)),
        expectation_quotient_suite(seed ^ 0x06, t(10_000, 500)),
        optimum_tau_suite(seed ^ 0x07, t(10_000, 500)),
        ghz_density_suite(seed ^ 0x08, t(500, 50), 8),
        games_suite(seed ^ 0x09, t(40, 10)),
        embedding_suite(seed ^ 0x0a, t(500, 50), 5),
        embedding_value_suite(seed ^ 0x0b, t(60, 10)),
        partition_suite(seed ^ 0x0c, t(100, 10), 6),
        dm_monotone_suite(seed ^ 0x0d, t(200, 30)),
        partition_chain_rule_suite(seed ^ 0x0e, t(300, 50)),
        strategy_refinement_suite(seed ^ 0x0f, t(200, 25), 10),
        product_function_suite(seed ^ 0x10, t(200, 40), 6),
        pseudo_hardness_suite(seed ^ 0x11, t(50, 8)),
        criterion_sim_suite(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for suite in run_all(7, true) {
            assert_eq!(
                suite.failures, 0,
                "suite {} failed {} of {} trials ({})",
                suite.name, suite.failures, suite.trials, suite.notes
            );
        }
    }

    #[test]
    fn unpruned_oracle_on_tiny_game_matches() {
        let g = ghz_game();
        let pruned = exact_value(&g, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        let oracle = unpruned_value(&g, 1 << 20).unwrap();
        assert_eq!(pruned.value, oracle);
    }
}
