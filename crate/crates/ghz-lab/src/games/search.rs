//! Exact product-strategy optimization.
//!
//! The search enumerates the first k-1 players' answer tables and, for each
//! assignment, optimizes the last player's table exactly: the objective
//! splits into independent per-query terms for that player, so each entry
//! can be maximized by direct enumeration of its answer alphabet. This cuts
//! one exponential factor while staying an exact maximization.
//!
//! Enumeration order is lexicographic over the concatenated tables, and
//! improvements are kept only when strict, so the returned witness is the
//! lexicographically smallest maximizer regardless of thread count.

use super::GameError;

/// A maximization instance over product strategies restricted to support
/// queries. Weights are exact integers over a common denominator.
pub(crate) struct StrategyProblem<'a> {
    /// Per player, the number of distinct support queries.
    pub support_sizes: Vec<usize>,
    /// Per player, the number of answer choices per query.
    pub answer_sizes: Vec<usize>,
    /// Support points: per-player support-query index plus weight.
    pub points: Vec<(Vec<usize>, u128)>,
    /// Winning predicate: point index and one answer index per player.
    pub win: &'a (dyn Fn(usize, &[usize]) -> bool + Sync),
}

#[derive(Debug)]
pub(crate) struct SearchOutcome {
    pub best_weight: u128,
    /// Per player, answer index per support query.
    pub tables: Vec<Vec<usize>>,
}

/// Number of full product strategies on the support, saturating.
pub(crate) fn strategy_space_size(support_sizes: &[usize], answer_sizes: &[usize]) -> u128 {
    let mut total: u128 = 1;
    for (&s, &a) in support_sizes.iter().zip(answer_sizes) {
        for _ in 0..s {
            total = total.saturating_mul(a as u128);
        }
    }
    total
}

impl<'a> StrategyProblem<'a> {
    pub fn solve(&self, budget: u128, threads: usize) -> Result<SearchOutcome, GameError> {
        let required = strategy_space_size(&self.support_sizes, &self.answer_sizes);
        if required > budget {
            return Err(GameError::BudgetExceeded { required, budget });
        }
        let k = self.support_sizes.len();
        assert!(k >= 1);

        // Group points by the last player's support query.
        let last = k - 1;
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.support_sizes[last]];
        for (pi, (tuple, _)) in self.points.iter().enumerate() {
            groups[tuple[last]].push(pi);
        }

        // Outer space: tables of players 0..k-1.
        let outer_total: u128 = strategy_space_size(
            &self.support_sizes[..last],
            &self.answer_sizes[..last],
        );
        let outer_total_u64 = u64::try_from(outer_total).map_err(|_| GameError::BudgetExceeded {
            required,
            budget,
        })?;

        let threads = threads.max(1).min(outer_total_u64.max(1) as usize);
        let chunk = outer_total_u64.div_ceil(threads.max(1) as u64).max(1);
        let mut partials: Vec<Option<SearchOutcome>> = Vec::new();
        let groups = &groups;
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..threads {
                let lo = (t as u64) * chunk;
                let hi = (lo + chunk).min(outer_total_u64);
                if lo >= hi {
                    break;
                }
                handles.push(scope.spawn(move || self.solve_range(lo, hi, groups)));
            }
            for h in handles {
                partials.push(h.join().expect("search worker panicked"));
            }
        });

        // Merge in chunk order: strictly-greater wins, so the earliest
        // (lexicographically smallest) maximizer is kept.
        let mut best: Option<SearchOutcome> = None;
        for p in partials.into_iter().flatten() {
            match &best {
                Some(b) if p.best_weight <= b.best_weight => {}
                _ => best = Some(p),
            }
        }
        best.ok_or(GameError::EmptySearch)
    }

    /// Scans outer indices `lo..hi` in ascending order.
    fn solve_range(&self, lo: u64, hi: u64, groups: &[Vec<usize>]) -> Option<SearchOutcome> {
        let k = self.support_sizes.len();
        let last = k - 1;
        let mut tables: Vec<Vec<usize>> = (0..last)
            .map(|i| vec![0usize; self.support_sizes[i]])
            .collect();
        decode_outer(lo, &mut tables, &self.answer_sizes[..last]);

        let mut best: Option<(u128, Vec<Vec<usize>>, Vec<usize>)> = None;
        let mut answers = vec![0usize; k];
        let mut last_table = vec![0usize; self.support_sizes[last]];
        for _ in lo..hi {
            // Exact conditional optimization of the last player's table.
            let mut total: u128 = 0;
            for (q, members) in groups.iter().enumerate() {
                let mut best_q: u128 = 0;
                let mut best_a = 0usize;
                for a in 0..self.answer_sizes[last] {
                    let mut w: u128 = 0;
                    for &pi in members {
                        let (tuple, weight) = &self.points[pi];
                        for i in 0..last {
                            answers[i] = tables[i][tuple[i]];
                        }
                        answers[last] = a;
                        if (self.win)(pi, &answers) {
                            w += weight;
                        }
                    }
                    if w > best_q {
                        best_q = w;
                        best_a = a;
                    }
                }
                last_table[q] = best_a;
                total += best_q;
            }
            let improved = match &best {
                Some((w, _, _)) => total > *w,
                None => true,
            };
            if improved {
                best = Some((total, tables.clone(), last_table.clone()));
            }
            increment_outer(&mut tables, &self.answer_sizes[..last]);
        }
        best.map(|(w, mut outer, last_table)| {
            outer.push(last_table);
            SearchOutcome {
                best_weight: w,
                tables: outer,
            }
        })
    }
}

/// Writes the mixed-radix expansion of `index` into the tables: the first
/// player's first entry is the most significant digit.
fn decode_outer(index: u64, tables: &mut [Vec<usize>], answer_sizes: &[usize]) {
    let mut rem = index;
    for (i, table) in tables.iter_mut().enumerate().rev() {
        let radix = answer_sizes[i] as u64;
        for slot in table.iter_mut().rev() {
            *slot = (rem % radix) as usize;
            rem /= radix;
        }
    }
    debug_assert_eq!(rem, 0);
}

/// Advances the odometer by one in lexicographic order.
fn increment_outer(tables: &mut [Vec<usize>], answer_sizes: &[usize]) {
    for i in (0..tables.len()).rev() {
        let radix = answer_sizes[i];
        let table = &mut tables[i];
        for slot in table.iter_mut().rev() {
            *slot += 1;
            if *slot < radix {
                return;
            }
            *slot = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_visits_every_assignment_in_order() {
        let sizes = [2usize, 3];
        let mut tables = vec![vec![0usize; 2], vec![0usize; 1]];
        let mut seen = Vec::new();
        for _ in 0..12 {
            seen.push((tables[0].clone(), tables[1].clone()));
            increment_outer(&mut tables, &sizes);
        }
        assert_eq!(seen.len(), 12);
        assert_eq!(seen[0], (vec![0, 0], vec![0]));
        assert_eq!(seen[1], (vec![0, 0], vec![1]));
        assert_eq!(seen[3], (vec![0, 1], vec![0]));
        assert_eq!(seen[11], (vec![1, 1], vec![2]));
        // decode_outer agrees with sequential increments.
        let mut decoded = vec![vec![0usize; 2], vec![0usize; 1]];
        for (idx, expect) in seen.iter().enumerate() {
            decode_outer(idx as u64, &mut decoded, &sizes);
            assert_eq!((decoded[0].clone(), decoded[1].clone()), *expect);
        }
    }

    #[test]
    fn solve_single_player_picks_per_query_max() {
        // One player, two queries, weights 1 and 2; answer 1 wins on query 0,
        // answer 0 wins on query 1.
        let points = vec![(vec![0usize], 1u128), (vec![1usize], 2u128)];
        let win = |pi: usize, a: &[usize]| match pi {
            0 => a[0] == 1,
            _ => a[0] == 0,
        };
        let problem = StrategyProblem {
            support_sizes: vec![2],
            answer_sizes: vec![2],
            points,
            win: &win,
        };
        let out = problem.solve(1 << 20, 1).unwrap();
        assert_eq!(out.best_weight, 3);
        assert_eq!(out.tables, vec![vec![1, 0]]);
    }

    #[test]
    fn threaded_and_single_threaded_agree() {
        // Two players, pseudo-random win predicate; compare outcomes.
        let points: Vec<(Vec<usize>, u128)> = (0..9)
            .map(|i| (vec![i / 3, i % 3], 1 + (i as u128 * 7) % 5))
            .collect();
        let win = |pi: usize, a: &[usize]| (pi * 31 + a[0] * 7 + a[1] * 3) % 5 < 2;
        let problem = StrategyProblem {
            support_sizes: vec![3, 3],
            answer_sizes: vec![2, 2],
            points,
            win: &win,
        };
        let a = problem.solve(1 << 20, 1).unwrap();
        let b = problem.solve(1 << 20, 4).unwrap();
        assert_eq!(a.best_weight, b.best_weight);
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn budget_violation_reports_required_size() {
        let points = vec![(vec![0usize], 1u128)];
        let win = |_: usize, _: &[usize]| true;
        let problem = StrategyProblem {
            support_sizes: vec![30],
            answer_sizes: vec![4],
            points,
            win: &win,
        };
        match problem.solve(1 << 10, 1) {
            Err(GameError::BudgetExceeded { required, .. }) => {
                assert_eq!(required, (4u128).pow(30));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
