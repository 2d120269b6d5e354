//! Multi-player games: definition, exact and heuristic value computation,
//! parallel repetition, and coordinate values under modified query
//! distributions.
//!
//! Indexing convention throughout: superscripts in the underlying math are
//! repetitions `j in [n]`, subscripts are players `i in [k]`. Player `i`'s
//! repeated query vector is encoded as a mixed-radix integer with the first
//! repetition most significant, which is lexicographic order on symbol
//! strings.

mod search;

use std::collections::BTreeSet;

use num::{BigInt, BigRational, FromPrimitive, Integer, One, Signed, ToPrimitive, Zero};

use crate::prob::Rational;
use search::{strategy_space_size, StrategyProblem};

/// Default cap on the number of product strategies the exact search may
/// cover (the full space, before pruning).
pub const DEFAULT_SEARCH_BUDGET: u128 = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("strategy shape does not match the game")]
    ShapeMismatch,
    #[error("search needs {required} strategies, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("query distribution not supported by the game: {0}")]
    UnsupportedDistribution(String),
    #[error("distribution weights exceed the integer range")]
    WeightOverflow,
    #[error("search over an empty space")]
    EmptySearch,
    #[error("malformed game document: {0}")]
    Format(String),
}

/// A query distribution as explicit support tuples with exact masses.
pub type QueryDist = Vec<(Vec<usize>, Rational)>;

/// A k-player game with finite alphabets: per-player query and answer
/// alphabet sizes, an exact query distribution, and a total win table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Game {
    query_sizes: Vec<usize>,
    answer_sizes: Vec<usize>,
    query_dist: QueryDist,
    /// Win predicate bits, indexed by
    /// `encode(query tuple) * answer_count + encode(answer tuple)`.
    win_bits: Vec<u64>,
}

pub fn encode_tuple(sizes: &[usize], tuple: &[usize]) -> usize {
    debug_assert_eq!(sizes.len(), tuple.len());
    let mut idx = 0usize;
    for (s, t) in sizes.iter().zip(tuple) {
        debug_assert!(t < s);
        idx = idx * s + t;
    }
    idx
}

pub fn decode_tuple(sizes: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0usize; sizes.len()];
    for i in (0..sizes.len()).rev() {
        out[i] = idx % sizes[i];
        idx /= sizes[i];
    }
    debug_assert_eq!(idx, 0);
    out
}

impl Game {
    pub fn new(
        query_sizes: Vec<usize>,
        answer_sizes: Vec<usize>,
        query_dist: QueryDist,
        win: impl Fn(&[usize], &[usize]) -> bool,
    ) -> Result<Self, GameError> {
        let k = query_sizes.len();
        if answer_sizes.len() != k || k == 0 {
            return Err(GameError::ShapeMismatch);
        }
        let query_count: usize = query_sizes.iter().product();
        let answer_count: usize = answer_sizes.iter().product();
        let mut bits = vec![0u64; (query_count * answer_count).div_ceil(64)];
        for q in 0..query_count {
            let qt = decode_tuple(&query_sizes, q);
            for a in 0..answer_count {
                let at = decode_tuple(&answer_sizes, a);
                if win(&qt, &at) {
                    let bit = q * answer_count + a;
                    bits[bit / 64] |= 1 << (bit % 64);
                }
            }
        }
        let game = Self {
            query_sizes,
            answer_sizes,
            query_dist,
            win_bits: bits,
        };
        game.validate_dist(&game.query_dist)?;
        Ok(game)
    }

    fn validate_dist(&self, dist: &QueryDist) -> Result<(), GameError> {
        let mut seen = BTreeSet::new();
        let mut total = Rational::zero();
        for (tuple, mass) in dist {
            if tuple.len() != self.k()
                || tuple.iter().zip(&self.query_sizes).any(|(t, s)| t >= s)
            {
                return Err(GameError::UnsupportedDistribution(format!(
                    "query tuple {tuple:?} outside the alphabet"
                )));
            }
            if mass.is_negative() {
                return Err(GameError::UnsupportedDistribution(
                    "negative mass".to_string(),
                ));
            }
            if !seen.insert(tuple.clone()) {
                return Err(GameError::UnsupportedDistribution(format!(
                    "duplicate query tuple {tuple:?}"
                )));
            }
            total += mass;
        }
        if !total.is_one() {
            return Err(GameError::UnsupportedDistribution(
                "masses do not sum to one".to_string(),
            ));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.query_sizes.len()
    }

    pub fn query_sizes(&self) -> &[usize] {
        &self.query_sizes
    }

    pub fn answer_sizes(&self) -> &[usize] {
        &self.answer_sizes
    }

    pub fn query_dist(&self) -> &QueryDist {
        &self.query_dist
    }

    pub fn win(&self, query: &[usize], answer: &[usize]) -> bool {
        let answer_count: usize = self.answer_sizes.iter().product();
        let bit =
            encode_tuple(&self.query_sizes, query) * answer_count
                + encode_tuple(&self.answer_sizes, answer);
        self.win_bits[bit / 64] >> (bit % 64) & 1 == 1
    }
}

/// Per-player answer tables: entry `tables[i][q]` is player i's answer to
/// the query with encoded index `q`, covering the full query alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductStrategy {
    pub tables: Vec<Vec<usize>>,
}

impl ProductStrategy {
    pub fn constant(game: &Game, answers: &[usize]) -> Self {
        Self {
            tables: game
                .query_sizes
                .iter()
                .zip(answers)
                .map(|(&q, &a)| vec![a; q])
                .collect(),
        }
    }
}

/// Success probability of a product strategy, exactly.
pub fn strategy_value(game: &Game, strategy: &ProductStrategy) -> Result<Rational, GameError> {
    if strategy.tables.len() != game.k()
        || strategy
            .tables
            .iter()
            .zip(&game.query_sizes)
            .any(|(t, &q)| t.len() != q)
        || strategy
            .tables
            .iter()
            .zip(&game.answer_sizes)
            .any(|(t, &a)| t.iter().any(|&x| x >= a))
    {
        return Err(GameError::ShapeMismatch);
    }
    let mut total = Rational::zero();
    let mut answer = vec![0usize; game.k()];
    for (tuple, mass) in &game.query_dist {
        for i in 0..game.k() {
            answer[i] = strategy.tables[i][tuple[i]];
        }
        if game.win(tuple, &answer) {
            total += mass;
        }
    }
    Ok(total)
}

/// Converts exact masses to integer weights over a common denominator.
fn integer_weights(dist: &QueryDist) -> Result<(Vec<u128>, u128), GameError> {
    let mut denom = BigInt::one();
    for (_, mass) in dist {
        denom = denom.lcm(mass.denom());
    }
    let mut weights = Vec::with_capacity(dist.len());
    for (_, mass) in dist {
        let w = mass.numer() * (&denom / mass.denom());
        weights.push(w.to_u128().ok_or(GameError::WeightOverflow)?);
    }
    let denom = denom.to_u128().ok_or(GameError::WeightOverflow)?;
    Ok((weights, denom))
}

/// Result of an exact search: the optimum and a maximizing witness.
#[derive(Clone, Debug)]
pub struct ExactValue {
    pub value: Rational,
    pub witness: ProductStrategy,
}

/// Exact value: maximum success probability over all deterministic product
/// strategies, with the lexicographically smallest maximizing witness.
///
/// The search enumerates only support queries; off-support table entries of
/// the witness are filled with answer 0.
pub fn exact_value(game: &Game, budget: u128, threads: usize) -> Result<ExactValue, GameError> {
    let k = game.k();
    // Distinct support symbols per player, ascending.
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..k {
        let set: BTreeSet<usize> = game.query_dist.iter().map(|(t, _)| t[i]).collect();
        support[i] = set.into_iter().collect();
    }
    let index_of: Vec<std::collections::BTreeMap<usize, usize>> = support
        .iter()
        .map(|s| s.iter().enumerate().map(|(idx, &sym)| (sym, idx)).collect())
        .collect();

    let (weights, denom) = integer_weights(&game.query_dist)?;
    let points: Vec<(Vec<usize>, u128)> = game
        .query_dist
        .iter()
        .zip(&weights)
        .map(|((tuple, _), &w)| {
            let mapped = (0..k).map(|i| index_of[i][&tuple[i]]).collect();
            (mapped, w)
        })
        .collect();

    let query_tuples: Vec<Vec<usize>> =
        game.query_dist.iter().map(|(t, _)| t.clone()).collect();
    let win = |pi: usize, answers: &[usize]| game.win(&query_tuples[pi], answers);
    let problem = StrategyProblem {
        support_sizes: support.iter().map(Vec::len).collect(),
        answer_sizes: game.answer_sizes.clone(),
        points,
        win: &win,
    };
    let outcome = problem.solve(budget, threads)?;

    let mut tables: Vec<Vec<usize>> = game
        .query_sizes
        .iter()
        .map(|&q| vec![0usize; q])
        .collect();
    for i in 0..k {
        for (idx, &sym) in support[i].iter().enumerate() {
            tables[i][sym] = outcome.tables[i][idx];
        }
    }
    Ok(ExactValue {
        value: Rational::new(
            BigInt::from_u128(outcome.best_weight).unwrap(),
            BigInt::from_u128(denom).unwrap(),
        ),
        witness: ProductStrategy { tables },
    })
}

/// The GHZ game: three players, binary alphabets, queries uniform on
/// `{x in F2^3 : x1 + x2 + x3 = 0}`, won when the answer XOR equals the
/// query OR. Its exact value is 3/4.
pub fn ghz_game() -> Game {
    let quarter = Rational::new(BigInt::one(), BigInt::from(4));
    let dist: QueryDist = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]]
        .into_iter()
        .map(|q| (q.to_vec(), quarter.clone()))
        .collect();
    Game::new(vec![2, 2, 2], vec![2, 2, 2], dist, |x, y| {
        let xor = y[0] ^ y[1] ^ y[2];
        let or = x[0] | x[1] | x[2];
        xor == or
    })
    .expect("GHZ game is well-formed")
}

/// The n-fold parallel repetition of a base game: queries are sampled
/// independently per repetition, answered coordinate-wise, and the players
/// win only if they win every repetition.
#[derive(Clone, Debug)]
pub struct RepeatedGame {
    base: Game,
    n: usize,
}

impl RepeatedGame {
    pub fn new(base: Game, n: usize) -> Self {
        assert!(n >= 1);
        Self { base, n }
    }

    pub fn base(&self) -> &Game {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn repeated_query_sizes(&self) -> Vec<usize> {
        self.base
            .query_sizes
            .iter()
            .map(|&s| s.pow(self.n as u32))
            .collect()
    }

    pub fn repeated_answer_sizes(&self) -> Vec<usize> {
        self.base
            .answer_sizes
            .iter()
            .map(|&s| s.pow(self.n as u32))
            .collect()
    }

    /// Player i's base query symbol in repetition `j`, from the encoded
    /// repeated query.
    pub fn query_symbol(&self, player: usize, encoded: usize, j: usize) -> usize {
        let s = self.base.query_sizes[player];
        encoded / s.pow((self.n - 1 - j) as u32) % s
    }

    pub fn answer_symbol(&self, player: usize, encoded: usize, j: usize) -> usize {
        let s = self.base.answer_sizes[player];
        encoded / s.pow((self.n - 1 - j) as u32) % s
    }

    /// The product query distribution `Q^n` as explicit support tuples.
    pub fn product_query_dist(&self) -> QueryDist {
        let mut dist: Vec<(Vec<usize>, Rational)> =
            vec![(vec![0; self.base.k()], Rational::one())];
        for _ in 0..self.n {
            let mut next = Vec::with_capacity(dist.len() * self.base.query_dist.len());
            for (prefix, mass) in &dist {
                for (tuple, m) in &self.base.query_dist {
                    let mut enc = prefix.clone();
                    for i in 0..self.base.k() {
                        enc[i] = enc[i] * self.base.query_sizes[i] + tuple[i];
                    }
                    next.push((enc, mass * m));
                }
            }
            dist = next;
        }
        dist
    }

    /// Whether the players win every repetition.
    pub fn win_all(&self, query: &[usize], answer: &[usize]) -> bool {
        let k = self.base.k();
        let mut qj = vec![0usize; k];
        let mut aj = vec![0usize; k];
        for j in 0..self.n {
            for i in 0..k {
                qj[i] = self.query_symbol(i, query[i], j);
                aj[i] = self.answer_symbol(i, answer[i], j);
            }
            if !self.base.win(&qj, &aj) {
                return false;
            }
        }
        true
    }

    /// Materializes the repeated game as an explicit `Game` (with the full
    /// product win table), for use with the generic exact search.
    pub fn materialize(&self, budget: u128) -> Result<Game, GameError> {
        let q: u128 = self
            .repeated_query_sizes()
            .iter()
            .map(|&s| s as u128)
            .product();
        let a: u128 = self
            .repeated_answer_sizes()
            .iter()
            .map(|&s| s as u128)
            .product();
        let required = q.saturating_mul(a);
        if required > budget {
            return Err(GameError::BudgetExceeded { required, budget });
        }
        Game::new(
            self.repeated_query_sizes(),
            self.repeated_answer_sizes(),
            self.product_query_dist(),
            |x, y| self.win_all(x, y),
        )
    }
}

/// Witness for a coordinate-value computation: per player, the chosen base
/// answer for each support query vector (encoded), ascending by query.
#[derive(Clone, Debug)]
pub struct CoordinateWitness {
    pub answers: Vec<Vec<(usize, usize)>>,
}

impl CoordinateWitness {
    /// Base answer of `player` on the encoded repeated query, if in support.
    pub fn answer(&self, player: usize, query_enc: usize) -> Option<usize> {
        self.answers[player]
            .binary_search_by_key(&query_enc, |&(q, _)| q)
            .ok()
            .map(|idx| self.answers[player][idx].1)
    }
}

#[derive(Clone, Debug)]
pub struct CoordinateValue {
    pub value: Rational,
    pub witness: CoordinateWitness,
}

/// Exact value of the repeated game in coordinate `j` under an optional
/// modified query distribution: the players must win repetition `j` only.
///
/// Only the base answer in coordinate `j` matters, so the search optimizes
/// one base answer per support query vector per player; this is an exact
/// reduction of the full strategy space.
pub fn coordinate_value(
    rg: &RepeatedGame,
    j: usize,
    p_mod: Option<&QueryDist>,
    budget: u128,
    threads: usize,
) -> Result<CoordinateValue, GameError> {
    assert!(j < rg.n(), "coordinate out of range");
    let k = rg.base.k();
    let default_dist;
    let dist = match p_mod {
        Some(d) => d,
        None => {
            default_dist = rg.product_query_dist();
            &default_dist
        }
    };
    // Validate support against the repeated query alphabets.
    let sizes = rg.repeated_query_sizes();
    let mut total = Rational::zero();
    let mut seen = BTreeSet::new();
    for (tuple, mass) in dist {
        if tuple.len() != k || tuple.iter().zip(&sizes).any(|(t, s)| t >= s) {
            return Err(GameError::UnsupportedDistribution(format!(
                "query tuple {tuple:?} outside the repeated alphabet"
            )));
        }
        if mass.is_negative() || !seen.insert(tuple.clone()) {
            return Err(GameError::UnsupportedDistribution(
                "negative or duplicate mass".to_string(),
            ));
        }
        total += mass;
    }
    if !total.is_one() {
        return Err(GameError::UnsupportedDistribution(
            "masses do not sum to one".to_string(),
        ));
    }

    let mut support: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..k {
        let set: BTreeSet<usize> = dist.iter().map(|(t, _)| t[i]).collect();
        support[i] = set.into_iter().collect();
    }
    let index_of: Vec<std::collections::BTreeMap<usize, usize>> = support
        .iter()
        .map(|s| s.iter().enumerate().map(|(idx, &sym)| (sym, idx)).collect())
        .collect();
    let (weights, denom) = integer_weights(dist)?;
    let points: Vec<(Vec<usize>, u128)> = dist
        .iter()
        .zip(&weights)
        .map(|((tuple, _), &w)| ((0..k).map(|i| index_of[i][&tuple[i]]).collect(), w))
        .collect();
    // Base query symbols at coordinate j, precomputed per point.
    let coord_queries: Vec<Vec<usize>> = dist
        .iter()
        .map(|(tuple, _)| (0..k).map(|i| rg.query_symbol(i, tuple[i], j)).collect())
        .collect();
    let win = |pi: usize, answers: &[usize]| rg.base.win(&coord_queries[pi], answers);
    let problem = StrategyProblem {
        support_sizes: support.iter().map(Vec::len).collect(),
        answer_sizes: rg.base.answer_sizes.clone(),
        points,
        win: &win,
    };
    let outcome = problem.solve(budget, threads)?;
    let answers = (0..k)
        .map(|i| {
            support[i]
                .iter()
                .enumerate()
                .map(|(idx, &sym)| (sym, outcome.tables[i][idx]))
                .collect()
        })
        .collect();
    Ok(CoordinateValue {
        value: Rational::new(
            BigInt::from_u128(outcome.best_weight).unwrap(),
            BigInt::from_u128(denom).unwrap(),
        ),
        witness: CoordinateWitness { answers },
    })
}

/// Exhaustively verifies that shared randomness does not help: the best
/// average value over all `seed_count`-tuples of deterministic strategies
/// equals the deterministic optimum.
pub fn randomized_vs_deterministic_check(
    game: &Game,
    seed_count: usize,
    budget: u128,
) -> Result<bool, GameError> {
    let deterministic = exact_value(game, budget, 1)?.value;
    // Enumerate all product strategies over the full query alphabets.
    let full_sizes: Vec<usize> = game.query_sizes.clone();
    let space = strategy_space_size(&full_sizes, &game.answer_sizes);
    let tuples = space.saturating_pow(seed_count as u32);
    if tuples > budget {
        return Err(GameError::BudgetExceeded {
            required: tuples,
            budget,
        });
    }
    let space = space as usize;
    let mut values = Vec::with_capacity(space);
    let mut tables: Vec<Vec<usize>> = game.query_sizes.iter().map(|&q| vec![0usize; q]).collect();
    for _ in 0..space {
        values.push(strategy_value(game, &ProductStrategy { tables: tables.clone() })?);
        increment_tables(&mut tables, &game.answer_sizes);
    }
    // Max over seed-indexed tuples of the uniform-seed average.
    let mut best = Rational::zero();
    let mut pick = vec![0usize; seed_count];
    let count = Rational::from_usize(seed_count).unwrap();
    loop {
        let avg: Rational = pick.iter().map(|&s| values[s].clone()).sum::<Rational>() / &count;
        if avg > best {
            best = avg;
        }
        // odometer over seed picks
        let mut done = true;
        for slot in pick.iter_mut().rev() {
            *slot += 1;
            if *slot < space {
                done = false;
                break;
            }
            *slot = 0;
        }
        if done {
            break;
        }
    }
    Ok(best == deterministic)
}

fn increment_tables(tables: &mut [Vec<usize>], answer_sizes: &[usize]) {
    for i in (0..tables.len()).rev() {
        let radix = answer_sizes[i];
        for slot in tables[i].iter_mut().rev() {
            *slot += 1;
            if *slot < radix {
                return;
            }
            *slot = 0;
        }
    }
}

/// Steepest-ascent local search with seeded random restarts. The returned
/// value is `strategy_value` of the witness, hence a lower bound on the true
/// value by construction.
pub fn heuristic_value_lower_bound(
    game: &Game,
    restarts: usize,
    seed: u64,
) -> (Rational, ProductStrategy) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Rational, ProductStrategy)> = None;
    for _ in 0..restarts.max(1) {
        let mut tables: Vec<Vec<usize>> = game
            .query_sizes
            .iter()
            .zip(&game.answer_sizes)
            .map(|(&q, &a)| (0..q).map(|_| rng.gen_range(0..a)).collect())
            .collect();
        let mut current = strategy_value(game, &ProductStrategy { tables: tables.clone() })
            .expect("tables are well-shaped");
        loop {
            // Best single-entry flip across all players and queries.
            let mut improved: Option<(usize, usize, usize, Rational)> = None;
            for i in 0..game.k() {
                for q in 0..game.query_sizes[i] {
                    let original = tables[i][q];
                    for a in 0..game.answer_sizes[i] {
                        if a == original {
                            continue;
                        }
                        tables[i][q] = a;
                        let v = strategy_value(game, &ProductStrategy { tables: tables.clone() })
                            .expect("tables are well-shaped");
                        if v > current && improved.as_ref().is_none_or(|(_, _, _, b)| v > *b) {
                            improved = Some((i, q, a, v));
                        }
                    }
                    tables[i][q] = original;
                }
            }
            match improved {
                Some((i, q, a, v)) => {
                    tables[i][q] = a;
                    current = v;
                }
                None => break,
            }
        }
        if best.as_ref().is_none_or(|(b, _)| current > *b) {
            best = Some((current, ProductStrategy { tables }));
        }
    }
    best.expect("at least one restart")
}

// ---------------------------------------------------------------------------
// Serialization: a JSON document with alphabets, the query distribution as
// exact rational pairs, and the win table as a bit list. Round-trips
// bit-exactly.
// ---------------------------------------------------------------------------

impl Game {
    pub fn to_json(&self) -> serde_json::Value {
        let answer_count: usize = self.answer_sizes.iter().product();
        let query_count: usize = self.query_sizes.iter().product();
        let bits: Vec<u8> = (0..query_count * answer_count)
            .map(|b| (self.win_bits[b / 64] >> (b % 64) & 1) as u8)
            .collect();
        serde_json::json!({
            "k": self.k(),
            "query_sizes": self.query_sizes,
            "answer_sizes": self.answer_sizes,
            "query_dist": self.query_dist.iter().map(|(t, m)| {
                serde_json::json!({
                    "query": t,
                    "num": m.numer().to_string(),
                    "den": m.denom().to_string(),
                })
            }).collect::<Vec<_>>(),
            "win_bits": bits,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, GameError> {
        let err = |msg: &str| GameError::Format(msg.to_string());
        let get_usizes = |key: &str| -> Result<Vec<usize>, GameError> {
            value[key]
                .as_array()
                .ok_or_else(|| err(&format!("missing {key}")))?
                .iter()
                .map(|v| v.as_u64().map(|x| x as usize).ok_or_else(|| err("bad size")))
                .collect()
        };
        let query_sizes = get_usizes("query_sizes")?;
        let answer_sizes = get_usizes("answer_sizes")?;
        let k = value["k"].as_u64().ok_or_else(|| err("missing k"))? as usize;
        if query_sizes.len() != k || answer_sizes.len() != k {
            return Err(err("alphabet count does not match k"));
        }
        let mut query_dist = Vec::new();
        for entry in value["query_dist"]
            .as_array()
            .ok_or_else(|| err("missing query_dist"))?
        {
            let tuple: Vec<usize> = entry["query"]
                .as_array()
                .ok_or_else(|| err("missing query"))?
                .iter()
                .map(|v| v.as_u64().map(|x| x as usize).ok_or_else(|| err("bad query")))
                .collect::<Result<_, _>>()?;
            let num: BigInt = entry["num"]
                .as_str()
                .ok_or_else(|| err("missing num"))?
                .parse()
                .map_err(|_| err("bad numerator"))?;
            let den: BigInt = entry["den"]
                .as_str()
                .ok_or_else(|| err("missing den"))?
                .parse()
                .map_err(|_| err("bad denominator"))?;
            if den.is_zero() {
                return Err(err("zero denominator"));
            }
            query_dist.push((tuple, BigRational::new(num, den)));
        }
        let bits = value["win_bits"]
            .as_array()
            .ok_or_else(|| err("missing win_bits"))?;
        let query_count: usize = query_sizes.iter().product();
        let answer_count: usize = answer_sizes.iter().product();
        if bits.len() != query_count * answer_count {
            return Err(err("win table has the wrong length"));
        }
        let mut win_bits = vec![0u64; (query_count * answer_count).div_ceil(64)];
        for (b, v) in bits.iter().enumerate() {
            match v.as_u64() {
                Some(0) => {}
                Some(1) => win_bits[b / 64] |= 1 << (b % 64),
                _ => return Err(err("win bits must be 0 or 1")),
            }
        }
        let game = Self {
            query_sizes,
            answer_sizes,
            query_dist,
            win_bits,
        };
        game.validate_dist(&game.query_dist)
            .map_err(|e| GameError::Format(e.to_string()))?;
        Ok(game)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rat;

    #[test]
    fn ghz_win_predicate_spot_checks() {
        let g = ghz_game();
        assert!(g.win(&[0, 0, 0], &[0, 0, 0])); // XOR 0 = OR 0
        assert!(g.win(&[0, 1, 1], &[1, 0, 0])); // XOR 1 = OR 1
        assert!(!g.win(&[0, 0, 0], &[1, 0, 0]));
        assert!(!g.win(&[1, 1, 0], &[0, 0, 0]));
    }

    #[test]
    fn ghz_constant_strategies() {
        let g = ghz_game();
        // f = (1,0,0): loses only the 000 query, value 3/4.
        let s = ProductStrategy::constant(&g, &[1, 0, 0]);
        assert_eq!(strategy_value(&g, &s).unwrap(), rat(3, 4));
        // f = (0,0,0): wins only the 000 query, value 1/4.
        let s = ProductStrategy::constant(&g, &[0, 0, 0]);
        assert_eq!(strategy_value(&g, &s).unwrap(), rat(1, 4));
    }

    #[test]
    fn always_win_game_has_value_one() {
        let g = Game::new(
            vec![2, 2],
            vec![2, 2],
            vec![
                (vec![0, 0], rat(1, 2)),
                (vec![1, 1], rat(1, 2)),
            ],
            |_, _| true,
        )
        .unwrap();
        let v = exact_value(&g, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        assert_eq!(v.value, rat(1, 1));
    }

    #[test]
    fn ghz_value_is_three_quarters() {
        let g = ghz_game();
        let v = exact_value(&g, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        assert_eq!(v.value, rat(3, 4));
        assert_eq!(strategy_value(&g, &v.witness).unwrap(), rat(3, 4));
    }

    #[test]
    fn exact_value_dominates_sampled_strategies() {
        use rand::{Rng, SeedableRng};
        let g = ghz_game();
        let v = exact_value(&g, DEFAULT_SEARCH_BUDGET, 1).unwrap().value;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let tables: Vec<Vec<usize>> = (0..3).map(|_| (0..2).map(|_| rng.gen_range(0..2)).collect()).collect();
            let sv = strategy_value(&g, &ProductStrategy { tables }).unwrap();
            assert!(sv <= v);
        }
    }

    #[test]
    fn repeated_game_dist_and_win() {
        let g = ghz_game();
        let rg = RepeatedGame::new(g, 2);
        let dist = rg.product_query_dist();
        assert_eq!(dist.len(), 16);
        let total: Rational = dist.iter().map(|(_, m)| m.clone()).sum();
        assert!(total.is_one());
        // Query (00, 11, 11): wins with answers whose XOR per coordinate is
        // (or(0,1,1), or(0,1,1)) = (1, 1).
        let q = vec![0b00, 0b11, 0b11];
        assert!(rg.win_all(&q, &[0b01, 0b11, 0b01])); // per-coord xor = (1,1)
        assert!(!rg.win_all(&q, &[0b01, 0b11, 0b00]));
    }

    #[test]
    fn coordinate_value_n1_equals_exact_value() {
        let g = ghz_game();
        let rg = RepeatedGame::new(g.clone(), 1);
        let cv = coordinate_value(&rg, 0, None, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        assert_eq!(cv.value, rat(3, 4));
    }

    #[test]
    fn coordinate_value_of_square_is_base_value() {
        // Players can ignore the other coordinate.
        let rg = RepeatedGame::new(ghz_game(), 2);
        let cv = coordinate_value(&rg, 0, None, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        assert_eq!(cv.value, rat(3, 4));
        let cv = coordinate_value(&rg, 1, None, DEFAULT_SEARCH_BUDGET, 1).unwrap();
        assert_eq!(cv.value, rat(3, 4));
    }

    #[test]
    fn coordinate_value_point_mass_is_one() {
        let rg = RepeatedGame::new(ghz_game(), 2);
        let dist: QueryDist = vec![(vec![0b01, 0b10, 0b11], rat(1, 1))];
        let cv = coordinate_value(&rg, 1, Some(&dist), DEFAULT_SEARCH_BUDGET, 1).unwrap();
        assert_eq!(cv.value, rat(1, 1));
    }

    #[test]
    fn coordinate_value_rejects_bad_distributions() {
        let rg = RepeatedGame::new(ghz_game(), 1);
        let dist: QueryDist = vec![(vec![5, 0, 0], rat(1, 1))];
        assert!(matches!(
            coordinate_value(&rg, 0, Some(&dist), DEFAULT_SEARCH_BUDGET, 1),
            Err(GameError::UnsupportedDistribution(_))
        ));
    }

    #[test]
    fn shared_randomness_does_not_help_ghz() {
        assert!(randomized_vs_deterministic_check(&ghz_game(), 2, 1 << 22).unwrap());
    }

    #[test]
    fn shared_randomness_trivial_games() {
        let win_all = Game::new(
            vec![2],
            vec![2],
            vec![(vec![0], rat(1, 2)), (vec![1], rat(1, 2))],
            |_, _| true,
        )
        .unwrap();
        assert!(randomized_vs_deterministic_check(&win_all, 2, 1 << 20).unwrap());
        let lose_all = Game::new(
            vec![2],
            vec![2],
            vec![(vec![0], rat(1, 2)), (vec![1], rat(1, 2))],
            |_, _| false,
        )
        .unwrap();
        assert!(randomized_vs_deterministic_check(&lose_all, 3, 1 << 20).unwrap());
    }

    #[test]
    fn heuristic_reaches_ghz_optimum() {
        let g = ghz_game();
        let (v, w) = heuristic_value_lower_bound(&g, 8, 7);
        assert_eq!(v, rat(3, 4));
        assert_eq!(strategy_value(&g, &w).unwrap(), v);
    }

    #[test]
    fn heuristic_on_unwinnable_game() {
        let g = Game::new(
            vec![2],
            vec![2],
            vec![(vec![0], rat(1, 2)), (vec![1], rat(1, 2))],
            |_, _| false,
        )
        .unwrap();
        let (v, _) = heuristic_value_lower_bound(&g, 3, 1);
        assert_eq!(v, rat(0, 1));
    }

    #[test]
    fn ghz_player_marginals_are_uniform() {
        let g = ghz_game();
        for i in 0..3 {
            let mut mass = [Rational::zero(), Rational::zero()];
            for (t, m) in g.query_dist() {
                mass[t[i]] += m;
            }
            assert_eq!(mass[0], rat(1, 2));
            assert_eq!(mass[1], rat(1, 2));
        }
    }

    #[test]
    fn serialization_round_trip_is_exact() {
        let g = ghz_game();
        let doc = g.to_json();
        let back = Game::from_json(&doc).unwrap();
        assert_eq!(g, back);
        // And the JSON text itself is stable.
        assert_eq!(
            serde_json::to_string(&doc).unwrap(),
            serde_json::to_string(&back.to_json()).unwrap()
        );
    }

    #[test]
    fn from_json_rejects_garbage() {
        let doc = serde_json::json!({"k": 2});
        assert!(matches!(Game::from_json(&doc), Err(GameError::Format(_))));
    }
}
