//! Command-line front end. Every subcommand drives library code and emits
//! one JSON (or CSV) document; exit code 0 means all assertions passed,
//! 1 means an assertion failed, 2 means a budget or usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbedError;
use crate::f2::{AffinePowerCoset, F2Error, F2Vector, Subspace};
use crate::games::{
    self, exact_value, ghz_game, heuristic_value_lower_bound, Game, GameError, RepeatedGame,
};
use crate::harness::{
    constraint_diagnostic, criterion_simulate, main_theorem_demo, pseudo_hardness_check,
    CriterionParams, DemoParams, HarnessError, PseudoHardnessParams,
};
use crate::partition::{
    pseudorandom_partition, strategy_refinement, PartitionError, ProductEvent,
};
use crate::prob::Rational;
use crate::selftest;

#[derive(Parser, Debug)]
#[command(
    name = "ghz-lab",
    about = "Exact laboratory for the GHZ game and its parallel repetition",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for all randomized trials.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the exact searches (default: THREADS env or 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Strategy-search budget (number of product strategies).
    #[arg(long, global = true)]
    budget: Option<u128>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML config file with budgets and tolerances.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact (or heuristic) value of a game.
    Value {
        /// "ghz" or a path to a game JSON document.
        #[arg(long, default_value = "ghz")]
        game: String,
        #[arg(long)]
        heuristic: bool,
        /// Random restarts for the heuristic search.
        #[arg(long, default_value_t = 16)]
        restarts: usize,
    },
    /// Exact value of the n-fold repetition, or of one coordinate.
    Repvalue {
        #[arg(long, default_value = "ghz")]
        game: String,
        #[arg(long)]
        n: usize,
        /// Compute the value in this coordinate instead of the full win.
        #[arg(long)]
        coordinate: Option<usize>,
        /// Also run the unpruned brute-force oracle and compare.
        #[arg(long)]
        oracle: bool,
    },
    /// Product-event probability formula on random subspace instances.
    FourierCheck {
        /// Maximum carrier dimension.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Local embeddings on random affine power cosets.
    EmbedCheck {
        /// Maximum repetition count.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Pseudorandom partition of a seeded random product event.
    Partition {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Percentage of rows each player's event keeps.
        #[arg(long, default_value_t = 75)]
        density: u32,
    },
    /// Strategy-driven subspace refinement on seeded random instances.
    StrategyRefine {
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Space dimension (defaults to n).
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Hardness transfer on seeded random product events.
    PseudoHardness {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0.35)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        coordinate: usize,
    },
    /// Adaptive win-process simulation with the optimal strategy.
    CriterionSim {
        #[arg(long, default_value = "ghz")]
        game: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// History mass threshold, as an exact rational "num/den".
        #[arg(long, default_value = "1/100")]
        rho: String,
        #[arg(long, default_value = "1/4")]
        epsilon: String,
        #[arg(long, default_value_t = 0)]
        j1: usize,
    },
    /// Full pipeline on a seeded random product event, plus the
    /// constraint-satisfiability diagnostic at the published constants.
    Demo {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.125)]
        epsilon: f64,
        #[arg(long, default_value_t = 75)]
        density: u32,
        /// Evaluate constraint satisfiability for every count up to here.
        #[arg(long, default_value_t = 1_000_000)]
        diagnostic_cap: u64,
    },
    /// Run the full randomized property suite.
    Selftest {
        /// Reduced trial counts.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Default, serde::Deserialize)]
struct Config {
    threads: Option<usize>,
    #[serde(default)]
    budgets: Budgets,
}

#[derive(Debug, Default, serde::Deserialize)]
struct Budgets {
    search: Option<u64>,
    kernel: Option<u64>,
    r#enum: Option<u64>,
}

struct Env {
    seed: u64,
    threads: usize,
    search_budget: u128,
    kernel_budget: u128,
    enum_budget: u128,
    format: Format,
    out: Option<PathBuf>,
}

/// Assertion failure (exit 1) as opposed to usage/budget errors (exit 2).
#[derive(Debug)]
enum Failure {
    Assertion(String),
    Budget(String),
}

fn classify_harness(e: &HarnessError) -> Failure {
    match e {
        HarnessError::Game(GameError::BudgetExceeded { .. })
        | HarnessError::Partition(PartitionError::BudgetExceeded { .. })
        | HarnessError::Partition(PartitionError::ExactSearchInfeasible { .. })
        | HarnessError::Embed(EmbedError::BudgetExceeded { .. })
        | HarnessError::F2(F2Error::BudgetExceeded { .. }) => Failure::Budget(e.to_string()),
        HarnessError::Stage { source, .. } => classify_harness(source),
        _ => Failure::Assertion(e.to_string()),
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config: Config = match &cli.config {
        Some(path) => match std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| toml::from_str(&text).map_err(|e| e.to_string()))
        {
            Ok(c) => c,
            Err(e) => {
                eprintln!("ghz-lab: cannot read config {}: {e}", path.display());
                return 2;
            }
        },
        None => Config::default(),
    };
    let env_threads = std::env::var("THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok());
    let env = Env {
        seed: cli.seed,
        threads: cli
            .threads
            .or(env_threads)
            .or(config.threads)
            .unwrap_or(1)
            .max(1),
        search_budget: cli
            .budget
            .or(config.budgets.search.map(u128::from))
            .unwrap_or(games::DEFAULT_SEARCH_BUDGET),
        kernel_budget: config
            .budgets
            .kernel
            .map(u128::from)
            .unwrap_or(crate::partition::DEFAULT_KERNEL_BUDGET),
        enum_budget: config
            .budgets
            .r#enum
            .map(u128::from)
            .unwrap_or(crate::f2::DEFAULT_ENUM_BUDGET),
        format: cli.format,
        out: cli.out.clone(),
    };
    match dispatch(&cli.command, &env) {
        Ok((report, csv)) => match emit(&env, &report, csv.as_deref()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("ghz-lab: cannot write output: {e}");
                2
            }
        },
        Err(Failure::Assertion(msg)) => {
            eprintln!("ghz-lab: assertion failed: {msg}");
            1
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("ghz-lab: budget or usage error: {msg}");
            2
        }
    }
}

fn emit(env: &Env, report: &serde_json::Value, csv: Option<&str>) -> std::io::Result<()> {
    let text = match env.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(report)?),
        Format::Csv => match csv {
            Some(rows) => rows.to_string(),
            None => {
                // Flatten the top level deterministically.
                let mut rows = String::from("key,value\n");
                if let Some(map) = report.as_object() {
                    for (k, v) in map {
                        rows.push_str(&format!("{k},{v}\n"));
                    }
                }
                rows
            }
        },
    };
    match &env.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn load_game(spec: &str) -> Result<Game, Failure> {
    if spec == "ghz" {
        return Ok(ghz_game());
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Failure::Budget(format!("cannot read game file {spec}: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Budget(format!("bad game document: {e}")))?;
    Game::from_json(&value).map_err(|e| Failure::Budget(e.to_string()))
}

fn parse_rational(text: &str) -> Result<Rational, Failure> {
    let parts: Vec<&str> = text.split('/').collect();
    let bad = || Failure::Budget(format!("cannot parse rational '{text}' (want num/den)"));
    match parts.as_slice() {
        [num] => num
            .trim()
            .parse::<i64>()
            .map(|n| Rational::new(n.into(), 1.into()))
            .map_err(|_| bad()),
        [num, den] => {
            let n = num.trim().parse::<i64>().map_err(|_| bad())?;
            let d = den.trim().parse::<i64>().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n.into(), d.into()))
        }
        _ => Err(bad()),
    }
}

fn map_game_err(e: GameError) -> Failure {
    match e {
        GameError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
        _ => Failure::Assertion(e.to_string()),
    }
}

fn random_product_event(rng: &mut ChaCha8Rng, n: usize, density: u32) -> ProductEvent {
    let size = 1u64 << n;
    let sets: [std::collections::BTreeSet<u64>; 3] = std::array::from_fn(|_| {
        let mut s: std::collections::BTreeSet<u64> = (0..size)
            .filter(|_| rng.gen_range(0..100) < density)
            .collect();
        if s.is_empty() {
            s.insert(rng.gen_range(0..size));
        }
        s
    });
    ProductEvent::new(n, sets)
}

fn dispatch(cmd: &Command, env: &Env) -> Result<(serde_json::Value, Option<String>), Failure> {
    match cmd {
        Command::Value {
            game,
            heuristic,
            restarts,
        } => {
            let g = load_game(game)?;
            if *heuristic {
                let (value, _) = heuristic_value_lower_bound(&g, *restarts, env.seed);
                Ok((
                    serde_json::json!({
                        "game": game,
                        "mode": "heuristic",
                        "restarts": restarts,
                        "value": value.to_string(),
                    }),
                    None,
                ))
            } else {
                let v = exact_value(&g, env.search_budget, env.threads).map_err(map_game_err)?;
                Ok((
                    serde_json::json!({
                        "game": game,
                        "mode": "exact",
                        "value": v.value.to_string(),
                        "witness_tables": v.witness.tables,
                    }),
                    None,
                ))
            }
        }
        Command::Repvalue {
            game,
            n,
            coordinate,
            oracle,
        } => {
            let g = load_game(game)?;
            let rg = RepeatedGame::new(g, *n);
            match coordinate {
                Some(j) => {
                    if *j >= *n {
                        return Err(Failure::Budget(format!(
                            "coordinate {j} out of range for n = {n}"
                        )));
                    }
                    let cv =
                        games::coordinate_value(&rg, *j, None, env.search_budget, env.threads)
                            .map_err(map_game_err)?;
                    Ok((
                        serde_json::json!({
                            "game": game, "n": n, "coordinate": j,
                            "value": cv.value.to_string(),
                        }),
                        None,
                    ))
                }
                None => {
                    let mat = rg
                        .materialize(env.enum_budget.saturating_mul(64))
                        .map_err(map_game_err)?;
                    let v =
                        exact_value(&mat, env.search_budget, env.threads).map_err(map_game_err)?;
                    let mut doc = serde_json::json!({
                        "game": game, "n": n,
                        "value": v.value.to_string(),
                    });
                    if *oracle {
                        // The bit-packed brute force covers the flagship
                        // case; anything else goes through the generic
                        // unpruned enumeration.
                        let oracle_value = if game == "ghz" && *n == 2 {
                            selftest::ghz_square_unpruned_value()
                        } else {
                            selftest::unpruned_value(&mat, env.search_budget)
                                .map_err(map_game_err)?
                        };
                        doc["oracle_value"] = serde_json::json!(oracle_value.to_string());
                        if oracle_value != v.value {
                            return Err(Failure::Assertion(format!(
                                "pruned value {} differs from oracle {}",
                                v.value, oracle_value
                            )));
                        }
                        doc["oracle_agrees"] = serde_json::json!(true);
                    }
                    Ok((doc, None))
                }
            }
        }
        Command::FourierCheck { n, trials } => {
            let suite = selftest::fourier_formula_suite(env.seed, *trials, *n);
            let bound = selftest::prob_diff_suite(env.seed ^ 1, *trials, (*n).min(4));
            let doc = serde_json::json!({
                "trials": trials,
                "equalities_ok": suite.failures == 0,
                "bound_ok": bound.failures == 0,
                "failures": suite.failures + bound.failures,
            });
            if suite.failures + bound.failures > 0 {
                return Err(Failure::Assertion(format!(
                    "{} fourier trials failed",
                    suite.failures + bound.failures
                )));
            }
            Ok((doc, None))
        }
        Command::EmbedCheck { n, trials } => {
            let suite = selftest::embedding_suite(env.seed, *trials, *n);
            if suite.failures > 0 {
                return Err(Failure::Assertion(format!(
                    "{} embedding trials failed",
                    suite.failures
                )));
            }
            Ok((serde_json::to_value(&suite).unwrap(), None))
        }
        Command::Partition {
            n,
            delta,
            m,
            density,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
            let event = random_product_event(&mut rng, *n, *density);
            let out = pseudorandom_partition(
                *n,
                &event,
                *delta,
                *m,
                env.kernel_budget,
                env.enum_budget,
            )
            .map_err(|e| match e {
                PartitionError::BudgetExceeded { .. }
                | PartitionError::ExactSearchInfeasible { .. }
                | PartitionError::ZeroMassEvent => Failure::Budget(e.to_string()),
                _ => Failure::Assertion(e.to_string()),
            })?;
            let csv = {
                let mut rows =
                    String::from("round,phi,expected_dm,codim,part_count,witness_parts\n");
                for r in &out.trace {
                    rows.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        r.round, r.phi, r.expected_dm, r.codim, r.part_count, r.witness_parts
                    ));
                }
                rows
            };
            Ok((
                serde_json::json!({
                    "n": n, "delta": delta, "m": m,
                    "event_mass": out.event_mass.to_string(),
                    "delta_cap": out.delta_cap,
                    "rounds": out.trace.len() - 1,
                    "codim": out.partition.codim(),
                    "parts": out.partition.parts().len(),
                    "final_expected_dm": out.final_expected_dm,
                    "trace": out.trace,
                }),
                Some(csv),
            ))
        }
        Command::StrategyRefine {
            n,
            dim,
            delta,
            trials,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
            let dim = dim.unwrap_or(*n).min(*n);
            let mut reports = Vec::new();
            for _ in 0..*trials {
                let coset = selftest::gen::power_coset(&mut rng, *n, dim);
                let j = rng.gen_range(0..*n);
                let row = coset.row_coset(0);
                let table: std::collections::BTreeMap<Vec<u8>, bool> = row
                    .iter_points()
                    .map(|x| (x.to_bytes(), rng.gen_bool(0.5)))
                    .collect();
                let f1 = |x: &F2Vector| table[&x.to_bytes()];
                let r = strategy_refinement(&coset, &f1, j, *delta, env.kernel_budget)
                    .map_err(|e| match e {
                        PartitionError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
                        _ => Failure::Assertion(e.to_string()),
                    })?;
                if r.final_bound > *delta + 1e-12 {
                    return Err(Failure::Assertion(format!(
                        "final bound {} above delta {delta}",
                        r.final_bound
                    )));
                }
                reports.push(serde_json::json!({
                    "j": j,
                    "cuts": r.cuts.len(),
                    "codim": r.codim_in_space,
                    "final_bound": r.final_bound,
                }));
            }
            Ok((
                serde_json::json!({
                    "n": n, "dim": dim, "delta": delta, "trials": trials,
                    "runs": reports,
                }),
                None,
            ))
        }
        Command::PseudoHardness {
            n,
            trials,
            delta,
            epsilon,
            coordinate,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
            let coset = AffinePowerCoset::new(
                [
                    F2Vector::zeros(*n),
                    F2Vector::zeros(*n),
                    F2Vector::zeros(*n),
                ],
                Subspace::full(*n),
            );
            let params = PseudoHardnessParams {
                j: *coordinate,
                delta: *delta,
                epsilon: *epsilon,
                strategy_budget: env.search_budget,
                kernel_budget: env.kernel_budget,
                enum_budget: env.enum_budget,
                threads: env.threads,
                with_intermediates: true,
            };
            let mut reports = Vec::new();
            let mut violations = 0usize;
            for _ in 0..*trials {
                let keep = rng.gen_range(80..=100);
                let event = random_product_event(&mut rng, *n, keep);
                let rep = match pseudo_hardness_check(&coset, &event, &params) {
                    Ok(r) => r,
                    Err(HarnessError::ZeroMass) => continue,
                    Err(e) => return Err(classify_harness(&e)),
                };
                if (rep.hypothesis_met || rep.asserted) && !rep.conclusion_holds {
                    violations += 1;
                }
                reports.push(serde_json::to_value(&rep).unwrap());
            }
            if violations > 0 {
                return Err(Failure::Assertion(format!(
                    "{violations} hardness-transfer violations"
                )));
            }
            Ok((
                serde_json::json!({
                    "n": n, "trials": trials, "violations": violations,
                    "reports": reports,
                }),
                None,
            ))
        }
        Command::CriterionSim {
            game,
            n,
            rho,
            epsilon,
            j1,
        } => {
            let g = load_game(game)?;
            if *j1 >= *n {
                return Err(Failure::Budget(format!("j1 {j1} out of range for n = {n}")));
            }
            let rg = RepeatedGame::new(g.clone(), *n);
            let mat = rg
                .materialize(env.enum_budget.saturating_mul(64))
                .map_err(map_game_err)?;
            let best = exact_value(&mat, env.search_budget, env.threads).map_err(map_game_err)?;
            let params = CriterionParams {
                rho: parse_rational(rho)?,
                epsilon: parse_rational(epsilon)?,
                j1: *j1,
                strategy_budget: env.search_budget,
                threads: env.threads,
                hard_coordinate_check: true,
            };
            let trace = criterion_simulate(&g, *n, &best.witness, &params)
                .map_err(|e| classify_harness(&e))?;
            let ok = trace.product_events_ok
                && trace
                    .rounds
                    .iter()
                    .all(|r| r.cross_check_ok && r.decay_ok != Some(false));
            let csv = {
                let mut rows = String::from(
                    "round,w,mass_flag,qualifying_histories,decay_ok,cross_check_ok\n",
                );
                for r in &trace.rounds {
                    rows.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        r.round,
                        r.w,
                        r.mass_flag,
                        r.qualifying_histories,
                        r.decay_ok.map_or("-".to_string(), |b| b.to_string()),
                        r.cross_check_ok
                    ));
                }
                rows
            };
            let doc = serde_json::to_value(&trace).unwrap();
            if !ok {
                return Err(Failure::Assertion(
                    "win-process trace violated an asserted inequality".to_string(),
                ));
            }
            Ok((doc, Some(csv)))
        }
        Command::Demo {
            n,
            delta,
            m,
            epsilon,
            density,
            diagnostic_cap,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
            let event = random_product_event(&mut rng, *n, *density);
            let params = DemoParams {
                delta: *delta,
                m: *m,
                epsilon: *epsilon,
                value_cap_n: 2,
                strategy_budget: env.search_budget,
                kernel_budget: env.kernel_budget,
                enum_budget: env.enum_budget,
                threads: env.threads,
            };
            let report =
                main_theorem_demo(*n, &event, &params).map_err(|e| classify_harness(&e))?;
            let diagnostic = constraint_diagnostic(*diagnostic_cap);
            let ok = report.pseudorandom_mass_ok && report.decomposition_ok != Some(false);
            let doc = serde_json::json!({
                "demo": report,
                "constraint_diagnostic": diagnostic,
            });
            if !ok {
                return Err(Failure::Assertion(
                    "demo pipeline violated an asserted inequality".to_string(),
                ));
            }
            Ok((doc, None))
        }
        Command::Selftest { quick } => {
            let suites = selftest::run_all(env.seed, *quick);
            let failures: usize = suites.iter().map(|s| s.failures).sum();
            let csv = {
                let mut rows = String::from("suite,trials,failures,notes\n");
                for s in &suites {
                    rows.push_str(&format!(
                        "{},{},{},{}\n",
                        s.name, s.trials, s.failures, s.notes
                    ));
                }
                rows
            };
            let doc = serde_json::json!({
                "quick": quick,
                "failures": failures,
                "suites": suites,
            });
            if failures > 0 {
                return Err(Failure::Assertion(format!("{failures} suite failures")));
            }
            Ok((doc, Some(csv)))
        }
    }
}
