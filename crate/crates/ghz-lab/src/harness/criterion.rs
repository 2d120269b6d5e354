//! Exact simulation of the adaptive win-process: coordinates are chosen
//! per history to minimize the conditional win probability, every history
//! event is verified to factor as a product over players, and the
//! win-probability sequence is checked for multiplicative decay whenever
//! the history mass is large enough.

use std::collections::BTreeMap;

use num::{One, ToPrimitive};

use super::HarnessError;
use crate::games::{
    coordinate_value, Game, ProductStrategy, QueryDist, RepeatedGame,
};
use crate::prob::Rational;

#[derive(Clone, Debug)]
pub struct CriterionParams {
    pub rho: Rational,
    pub epsilon: Rational,
    /// First coordinate probed (the process fixes it arbitrarily).
    pub j1: usize,
    pub strategy_budget: u128,
    pub threads: usize,
    /// Cross-check qualifying histories against the exact coordinate value.
    pub hard_coordinate_check: bool,
}

impl Default for CriterionParams {
    fn default() -> Self {
        Self {
            rho: Rational::new(1.into(), 100.into()),
            epsilon: Rational::new(1.into(), 4.into()),
            j1: 0,
            strategy_budget: crate::games::DEFAULT_SEARCH_BUDGET,
            threads: 1,
            hard_coordinate_check: true,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CriterionRound {
    /// Round index `i`, starting at 1.
    pub round: usize,
    /// `P(win rounds 1..=i)`, exact.
    pub w: String,
    pub w_f: f64,
    /// Whether `w_i >= 2 |X|^i |Y|^i rho`.
    pub mass_flag: bool,
    /// Coordinates probed at this round across histories.
    pub coordinates: Vec<usize>,
    /// Winning histories at this round with mass at least rho.
    pub qualifying_histories: usize,
    /// Largest next-round conditional win probability over qualifying
    /// histories, exact.
    pub worst_next_win: Option<String>,
    /// `w_{i} <= w_{i-1} (1 - eps/2)`, checked when the previous round had
    /// its mass flag set.
    pub decay_ok: Option<bool>,
    /// Conditional win probabilities never exceed the exact coordinate
    /// value on qualifying histories.
    pub cross_check_ok: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CriterionTrace {
    pub n: usize,
    pub rho: String,
    pub epsilon: String,
    pub rounds: Vec<CriterionRound>,
    /// Every history event factored as a product over players.
    pub product_events_ok: bool,
}

struct Bucket {
    points: Vec<usize>,
    winning: bool,
    /// History constraints: (coordinate, query symbols, answer symbols).
    history: Vec<(usize, Vec<usize>, Vec<usize>)>,
    /// Coordinate to probe next.
    next_j: usize,
}

/// Runs the win-process on the repeated game with an explicit strategy,
/// with exact conditional probabilities throughout (no sampling).
pub fn criterion_simulate(
    base: &Game,
    n: usize,
    strategy: &ProductStrategy,
    params: &CriterionParams,
) -> Result<CriterionTrace, HarnessError> {
    let rg = RepeatedGame::new(base.clone(), n);
    let k = base.k();
    assert!(params.j1 < n);
    let support: QueryDist = rg.product_query_dist();
    // Strategy answers per point, and per-coordinate win bits.
    let answers: Vec<Vec<usize>> = support
        .iter()
        .map(|(q, _)| (0..k).map(|i| strategy.tables[i][q[i]]).collect())
        .collect();
    let win_at = |pi: usize, j: usize| -> bool {
        let (q, _) = &support[pi];
        let qj: Vec<usize> = (0..k).map(|i| rg.query_symbol(i, q[i], j)).collect();
        let aj: Vec<usize> = (0..k).map(|i| rg.answer_symbol(i, answers[pi][i], j)).collect();
        base.win(&qj, &aj)
    };
    let mass_of = |points: &[usize]| -> Rational {
        points.iter().map(|&pi| support[pi].1.clone()).sum()
    };

    let x_alpha: usize = base.query_sizes().iter().product();
    let y_alpha: usize = base.answer_sizes().iter().product();

    let mut buckets = vec![Bucket {
        points: (0..support.len()).collect(),
        winning: true,
        history: Vec::new(),
        next_j: params.j1,
    }];
    let mut rounds: Vec<CriterionRound> = Vec::new();
    let mut product_events_ok = true;
    let mut prev: Option<(Rational, bool)> = None; // (w_i, mass_flag_i)

    for i in 1..=n {
        // Split every bucket on the outcome at its probe coordinate.
        let mut next_buckets: Vec<Bucket> = Vec::new();
        let mut coordinates = std::collections::BTreeSet::new();
        for bucket in &buckets {
            let j = bucket.next_j;
            coordinates.insert(j);
            let mut children: BTreeMap<(Vec<usize>, Vec<usize>), Vec<usize>> = BTreeMap::new();
            for &pi in &bucket.points {
                let (q, _) = &support[pi];
                let qj: Vec<usize> = (0..k).map(|i2| rg.query_symbol(i2, q[i2], j)).collect();
                let aj: Vec<usize> =
                    (0..k).map(|i2| rg.answer_symbol(i2, answers[pi][i2], j)).collect();
                children.entry((qj, aj)).or_default().push(pi);
            }
            for ((qj, aj), points) in children {
                let won = base.win(&qj, &aj);
                let mut history = bucket.history.clone();
                history.push((j, qj, aj));
                next_buckets.push(Bucket {
                    points,
                    winning: bucket.winning && won,
                    history,
                    next_j: 0, // chosen below
                });
            }
        }

        // Verify each history event factors as a product over players.
        for bucket in &next_buckets {
            if !verify_product_event(&rg, strategy, &support, &bucket.history, &bucket.points) {
                product_events_ok = false;
            }
        }

        // Choose the next coordinate per history: minimize the conditional
        // win probability, smallest index on ties.
        for bucket in &mut next_buckets {
            let total = mass_of(&bucket.points);
            let mut best: Option<(Rational, usize)> = None;
            for j in 0..n {
                let wins: Rational = bucket
                    .points
                    .iter()
                    .filter(|&&pi| win_at(pi, j))
                    .map(|&pi| support[pi].1.clone())
                    .sum();
                let prob = wins / total.clone();
                if best.as_ref().is_none_or(|(b, _)| prob < *b) {
                    best = Some((prob, j));
                }
            }
            bucket.next_j = best.expect("n >= 1").1;
        }

        // Round statistics.
        let w: Rational = next_buckets
            .iter()
            .filter(|b| b.winning)
            .map(|b| mass_of(&b.points))
            .sum();
        let threshold = Rational::from_integer(2.into())
            * Rational::from_integer((x_alpha as i64).pow(i as u32).into())
            * Rational::from_integer((y_alpha as i64).pow(i as u32).into())
            * params.rho.clone();
        let mass_flag = w >= threshold;
        let decay_ok = prev.as_ref().map(|(w_prev, flag_prev)| {
            if *flag_prev {
                let factor = Rational::one()
                    - params.epsilon.clone() / Rational::from_integer(2.into());
                w <= w_prev.clone() * factor
            } else {
                true
            }
        });

        let mut qualifying = 0usize;
        let mut worst_next_win: Option<Rational> = None;
        let mut cross_check_ok = true;
        for bucket in next_buckets.iter().filter(|b| b.winning) {
            let total = mass_of(&bucket.points);
            if total < params.rho {
                continue;
            }
            qualifying += 1;
            let wins: Rational = bucket
                .points
                .iter()
                .filter(|&&pi| win_at(pi, bucket.next_j))
                .map(|&pi| support[pi].1.clone())
                .sum();
            let cond = wins / total.clone();
            if params.hard_coordinate_check {
                let cond_dist: QueryDist = bucket
                    .points
                    .iter()
                    .map(|&pi| (support[pi].0.clone(), support[pi].1.clone() / total.clone()))
                    .collect();
                let cv = coordinate_value(
                    &rg,
                    bucket.next_j,
                    Some(&cond_dist),
                    params.strategy_budget,
                    params.threads,
                )?;
                if cond > cv.value {
                    cross_check_ok = false;
                }
            }
            if worst_next_win.as_ref().is_none_or(|b| cond > *b) {
                worst_next_win = Some(cond);
            }
        }

        rounds.push(CriterionRound {
            round: i,
            w: w.to_string(),
            w_f: w.to_f64().unwrap(),
            mass_flag,
            coordinates: coordinates.into_iter().collect(),
            qualifying_histories: qualifying,
            worst_next_win: worst_next_win.map(|r| r.to_string()),
            decay_ok,
            cross_check_ok,
        });
        prev = Some((w, mass_flag));
        buckets = next_buckets;
        if buckets.iter().all(|b| !b.winning || b.points.is_empty()) {
            break;
        }
    }

    Ok(CriterionTrace {
        n,
        rho: params.rho.to_string(),
        epsilon: params.epsilon.to_string(),
        rounds,
        product_events_ok,
    })
}

/// Reconstructs the history event as per-player constraint sets and checks
/// that the bucket equals the product event intersected with the support.
fn verify_product_event(
    rg: &RepeatedGame,
    strategy: &ProductStrategy,
    support: &QueryDist,
    history: &[(usize, Vec<usize>, Vec<usize>)],
    points: &[usize],
) -> bool {
    let k = rg.base().k();
    let n = rg.n();
    let sizes = rg.repeated_query_sizes();
    // Per player, the set of repeated queries consistent with the history.
    let player_sets: Vec<std::collections::BTreeSet<usize>> = (0..k)
        .map(|i| {
            (0..sizes[i])
                .filter(|&x| {
                    history.iter().all(|(j, qj, aj)| {
                        rg.query_symbol(i, x, *j) == qj[i]
                            && rg.answer_symbol(i, strategy.tables[i][x], *j) == aj[i]
                    })
                })
                .collect()
        })
        .collect();
    let member: std::collections::BTreeSet<usize> = points.iter().copied().collect();
    for (pi, (q, _)) in support.iter().enumerate() {
        let in_product = (0..k).all(|i| player_sets[i].contains(&q[i]));
        if in_product != member.contains(&pi) {
            return false;
        }
    }
    let _ = n;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{exact_value, ghz_game, DEFAULT_SEARCH_BUDGET};
    use crate::prob::rat;

    #[test]
    fn single_repetition_gives_strategy_value() {
        let g = ghz_game();
        let best = exact_value(&g, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        let trace = criterion_simulate(&g, 1, &best.witness, &CriterionParams::default()).unwrap();
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.rounds[0].w, "3/4");
        assert!(trace.product_events_ok);
        assert!(trace.rounds[0].cross_check_ok);
    }

    #[test]
    fn two_repetitions_track_the_full_win() {
        let g = ghz_game();
        let rg = RepeatedGame::new(g.clone(), 2);
        let mat = rg.materialize(1 << 20).unwrap();
        let best = exact_value(&mat, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        let trace = criterion_simulate(&g, 2, &best.witness, &CriterionParams::default()).unwrap();
        assert_eq!(trace.rounds.len(), 2);
        assert!(trace.product_events_ok);
        // w_2 equals the full value of the strategy on the repeated game.
        let v2 = crate::games::strategy_value(&mat, &best.witness).unwrap();
        assert_eq!(trace.rounds[1].w, v2.to_string());
        assert_eq!(v2, rat(5, 8));
        // w is non-increasing.
        assert!(trace.rounds[0].w_f >= trace.rounds[1].w_f);
        for r in &trace.rounds {
            assert!(r.cross_check_ok);
            if let Some(ok) = r.decay_ok {
                assert!(ok);
            }
        }
    }

    #[test]
    fn losing_strategy_terminates_early() {
        // In the GHZ game the all-zeros strategy wins only the 000 query.
        let g = ghz_game();
        let strategy = ProductStrategy {
            tables: vec![vec![0, 0, 0, 0]; 3],
        };
        let rg = RepeatedGame::new(g.clone(), 2);
        let mat = rg.materialize(1 << 20).unwrap();
        let v = crate::games::strategy_value(&mat, &strategy).unwrap();
        let trace = criterion_simulate(&g, 2, &strategy, &CriterionParams::default()).unwrap();
        assert_eq!(trace.rounds.last().unwrap().w, v.to_string());
        assert_eq!(v, rat(1, 16));
    }
}
