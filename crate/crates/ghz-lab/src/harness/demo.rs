//! The full pipeline on a concrete product event: build the pseudorandom
//! partition, classify parts, find embeddable coordinates per part, pick
//! the best common coordinate, and chain the measured inequalities. At
//! desk scale the headline constants cannot all be active; the report says
//! exactly which steps are vacuous and why, and a separate diagnostic
//! evaluates the constraint system at the published constants.

use num::ToPrimitive;

use super::{coset_dists, HarnessError};
use crate::embedding::embeddable_coordinates;
use crate::f2::encode_triple;
use crate::games::{coordinate_value, ghz_game, QueryDist, RepeatedGame};
use crate::partition::{
    d_m_closeness, pseudorandom_partition, ProductEvent, RoundRecord,
};
use crate::prob::{FiniteDist, Rational};

#[derive(Clone, Debug, serde::Serialize)]
pub struct DemoParams {
    pub delta: f64,
    pub m: usize,
    pub epsilon: f64,
    /// Exact value stages run only when `n` is at most this.
    pub value_cap_n: usize,
    pub strategy_budget: u128,
    pub kernel_budget: u128,
    pub enum_budget: u128,
    pub threads: usize,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            delta: 0.2,
            m: 1,
            epsilon: 0.125,
            value_cap_n: 2,
            strategy_budget: crate::games::DEFAULT_SEARCH_BUDGET,
            kernel_budget: crate::partition::DEFAULT_KERNEL_BUDGET,
            enum_budget: crate::f2::DEFAULT_ENUM_BUDGET,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DemoPartReport {
    pub part: usize,
    /// Conditioned mass of the part.
    pub mass: f64,
    pub d_m: f64,
    pub d_kl: f64,
    pub pseudorandom: bool,
    pub embeddable: Vec<usize>,
    /// Exact coordinate value at the chosen coordinate under the
    /// unconditioned per-part distribution (3/4 on embeddable coordinates).
    pub v_p: Option<String>,
    pub v_pt: Option<String>,
    /// `v_pt <= v_p + 2 epsilon`, measured.
    pub transfer_ok: Option<bool>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DemoReport {
    pub n: usize,
    pub delta: f64,
    pub m: usize,
    pub epsilon: f64,
    pub event_mass: String,
    pub delta_cap: f64,
    pub partition_rounds: usize,
    pub partition_codim: usize,
    pub partition_parts: usize,
    pub trace: Vec<RoundRecord>,
    /// Conditioned mass of the pseudorandom parts; at least 1/3 by Markov.
    pub pseudorandom_mass: f64,
    pub pseudorandom_mass_ok: bool,
    pub j_star: usize,
    /// Conditioned-mass fraction of pseudorandom parts where the chosen
    /// coordinate is not embeddable.
    pub nonembeddable_fraction: f64,
    /// `fraction + (1 - fraction) * 3/4`.
    pub averaging_bound: f64,
    pub parts: Vec<DemoPartReport>,
    pub values_computed: bool,
    /// Exact `v^{j*}` under the full conditioned distribution.
    pub v_pt_overall: Option<String>,
    /// Measured decomposition bound: non-pseudorandom mass plus the
    /// mass-weighted conditioned per-part values.
    pub decomposition_bound: Option<f64>,
    pub decomposition_ok: Option<bool>,
    /// `2/3 + 1/3 (7/8 + 2 epsilon)`.
    pub chain_bound: f64,
    /// Whether the threshold constraints for the transfer step hold at
    /// `(3 delta, 3 delta_cap, epsilon)` together with the averaging
    /// constraint; when false the constant-dependent steps are vacuous.
    pub constraints_satisfied: bool,
    pub vacuous_label: Option<String>,
}

/// Runs the proof pipeline on one event and reports every measured
/// inequality with its slack.
pub fn main_theorem_demo(
    n: usize,
    event: &ProductEvent,
    params: &DemoParams,
) -> Result<DemoReport, HarnessError> {
    let stage = |s: &'static str, e: HarnessError| HarnessError::Stage {
        stage: s,
        source: Box::new(e),
    };

    // Stage 1: pseudorandom partition.
    let out = pseudorandom_partition(
        n,
        event,
        params.delta,
        params.m,
        params.kernel_budget,
        params.enum_budget,
    )
    .map_err(|e| stage("partition", e.into()))?;
    let delta_cap = out.delta_cap;

    // Stage 2: classify parts under the conditioned weighting.
    let full = crate::f2::AffinePowerCoset::full(n);
    let dists = coset_dists(&full, event, params.enum_budget)?;
    let mut members: std::collections::BTreeMap<usize, (Vec<usize>, usize)> = Default::default();
    for (pi, x) in dists.support.iter().enumerate() {
        let part = out
            .partition
            .part_containing(x)
            .expect("partition covers the space");
        let e = members.entry(part).or_default();
        e.0.push(pi);
        if dists.in_event[pi] {
            e.1 += 1;
        }
    }
    let event_total: usize = dists.in_event.iter().filter(|&&b| b).count();

    let mut parts = Vec::new();
    let mut pseudorandom_mass = 0.0;
    for (&part_idx, (pts, evt)) in &members {
        if *evt == 0 {
            continue;
        }
        let part = &out.partition.parts()[part_idx];
        let mass = *evt as f64 / event_total as f64;
        let xt = FiniteDist::uniform(
            pts.iter()
                .filter(|&&pi| dists.in_event[pi])
                .map(|&pi| encode_triple(&dists.support[pi])),
        );
        let x = FiniteDist::uniform(pts.iter().map(|&pi| encode_triple(&dists.support[pi])));
        let d_m = d_m_closeness(part, &xt, &x, params.m, params.kernel_budget)
            .map_err(|e| stage("classification", e.into()))?
            .value;
        let d_kl = (pts.len() as f64 / *evt as f64).ln();
        let pseudorandom = d_m <= 3.0 * params.delta + 1e-12 && d_kl <= 3.0 * delta_cap + 1e-12;
        if pseudorandom {
            pseudorandom_mass += mass;
        }
        let embeddable: Vec<usize> = if pseudorandom {
            embeddable_coordinates(part)
                .map_err(|e| stage("embedding", e.into()))?
                .into_iter()
                .collect()
        } else {
            Vec::new()
        };
        parts.push(DemoPartReport {
            part: part_idx,
            mass,
            d_m,
            d_kl,
            pseudorandom,
            embeddable,
            v_p: None,
            v_pt: None,
            transfer_ok: None,
        });
    }
    let pseudorandom_mass_ok = pseudorandom_mass >= 1.0 / 3.0 - 1e-9;

    // Stage 3: coordinate minimizing the non-embeddable mass fraction.
    let mut j_star = 0;
    let mut best_frac = f64::INFINITY;
    for j in 0..n {
        let mut bad = 0.0;
        for p in parts.iter().filter(|p| p.pseudorandom) {
            if !p.embeddable.contains(&j) {
                bad += p.mass;
            }
        }
        let frac = if pseudorandom_mass > 0.0 {
            bad / pseudorandom_mass
        } else {
            1.0
        };
        if frac < best_frac {
            best_frac = frac;
            j_star = j;
        }
    }
    let averaging_bound = best_frac + (1.0 - best_frac) * 0.75;

    // Constraint system for the transfer and averaging steps.
    let e = std::f64::consts::E;
    let transfer_ok = 3.0 * params.delta
        <= (9.0 * delta_cap * delta_cap / 32.0 * (-12.0 * delta_cap / params.epsilon).exp())
            .min(9.0 * delta_cap * delta_cap / (32.0 * e * e))
            .min(2.0 * params.epsilon * params.epsilon);
    let averaging_constraint = params.delta >= 2.0 * params.m as f64 * delta_cap / n as f64;
    let constraints_satisfied = transfer_ok && averaging_constraint;

    // Stage 4: exact values where the budget allows.
    let values_computed = n <= params.value_cap_n;
    let mut v_pt_overall = None;
    let mut decomposition_bound = None;
    let mut decomposition_ok = None;
    if values_computed {
        let rg = RepeatedGame::new(ghz_game(), n);
        let mut weighted = 0.0;
        for report in &mut parts {
            let (pts, evt) = &members[&report.part];
            let to_dist = |keep_event: bool| -> QueryDist {
                let total = if keep_event { *evt } else { pts.len() };
                pts.iter()
                    .filter(|&&pi| !keep_event || dists.in_event[pi])
                    .map(|&pi| {
                        (
                            (0..3)
                                .map(|i| super::encode_row_query(&dists.support[pi][i]))
                                .collect(),
                            Rational::new(1.into(), (total as i64).into()),
                        )
                    })
                    .collect()
            };
            let v_p = coordinate_value(
                &rg,
                j_star,
                Some(&to_dist(false)),
                params.strategy_budget,
                params.threads,
            )
            .map_err(|e| stage("values", e.into()))?;
            let v_pt = coordinate_value(
                &rg,
                j_star,
                Some(&to_dist(true)),
                params.strategy_budget,
                params.threads,
            )
            .map_err(|e| stage("values", e.into()))?;
            let vp_f = v_p.value.to_f64().unwrap();
            let vpt_f = v_pt.value.to_f64().unwrap();
            report.transfer_ok = Some(vpt_f <= vp_f + 2.0 * params.epsilon + 1e-12);
            report.v_p = Some(v_p.value.to_string());
            report.v_pt = Some(v_pt.value.to_string());
            if report.pseudorandom {
                weighted += report.mass * vpt_f;
            }
        }
        let overall = coordinate_value(
            &rg,
            j_star,
            Some(&dists.pt),
            params.strategy_budget,
            params.threads,
        )
        .map_err(|e| stage("values", e.into()))?;
        let bound = (1.0 - pseudorandom_mass) + weighted;
        decomposition_ok = Some(overall.value.to_f64().unwrap() <= bound + 1e-12);
        decomposition_bound = Some(bound);
        v_pt_overall = Some(overall.value.to_string());
    }

    let chain_bound = 2.0 / 3.0 + (1.0 / 3.0) * (7.0 / 8.0 + 2.0 * params.epsilon);
    let vacuous_label = if constraints_satisfied {
        None
    } else {
        Some(format!(
            "threshold constraints unsatisfied at n = {n}: the transfer and \
             averaging steps are reported as measurements only"
        ))
    };

    Ok(DemoReport {
        n,
        delta: params.delta,
        m: params.m,
        epsilon: params.epsilon,
        event_mass: out.event_mass.to_string(),
        delta_cap,
        partition_rounds: out.trace.len(),
        partition_codim: out.partition.codim(),
        partition_parts: out.partition.parts().len(),
        trace: out.trace,
        pseudorandom_mass,
        pseudorandom_mass_ok,
        j_star,
        nonembeddable_fraction: best_frac,
        averaging_bound,
        parts,
        values_computed,
        v_pt_overall,
        decomposition_bound,
        decomposition_ok,
        chain_bound,
        constraints_satisfied,
        vacuous_label,
    })
}

/// Evaluation of the published constant schedule at one repetition count.
fn constants_satisfied(n: f64) -> bool {
    let epsilon = 1.0 / 32.0;
    let delta_cap = 0.0005 * n.ln();
    let delta = n.powf(-0.4);
    let m = n.powf(0.4).ceil();
    let e = std::f64::consts::E;
    let c1 = 3.0 * delta
        <= 9.0 * delta_cap * delta_cap / 32.0 * (-12.0 * delta_cap / epsilon).exp();
    let c2 = 3.0 * delta <= 9.0 * delta_cap * delta_cap / (32.0 * e * e);
    let c3 = 3.0 * delta <= 2.0 * epsilon * epsilon;
    let c4 = delta >= 2.0 * m * delta_cap / n;
    c1 && c2 && c3 && c4
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConstraintDiagnostic {
    pub checked_up_to: u64,
    /// Smallest integer repetition count at or below the cap where the
    /// published constants satisfy every constraint; expected `None` at
    /// desk scale.
    pub satisfied_below_cap: Option<u64>,
    /// Approximate smallest satisfying count found by doubling and
    /// bisection beyond the cap.
    pub first_satisfied_estimate: Option<f64>,
}

/// Directly evaluates the constraint system of the headline bound at the
/// published constants for every `n` up to the cap, then estimates where
/// it first becomes satisfiable.
pub fn constraint_diagnostic(n_cap: u64) -> ConstraintDiagnostic {
    let mut satisfied_below_cap = None;
    for n in 1..=n_cap {
        if constants_satisfied(n as f64) {
            satisfied_below_cap = Some(n);
            break;
        }
    }
    let mut first_satisfied_estimate = None;
    if satisfied_below_cap.is_none() {
        let mut hi = n_cap as f64;
        for _ in 0..400 {
            hi *= 2.0;
            if constants_satisfied(hi) {
                let mut lo = hi / 2.0;
                for _ in 0..200 {
                    let mid = (lo * hi).sqrt();
                    if constants_satisfied(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                first_satisfied_estimate = Some(hi);
                break;
            }
        }
    }
    ConstraintDiagnostic {
        checked_up_to: n_cap,
        satisfied_below_cap,
        first_satisfied_estimate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_event(n: usize) -> ProductEvent {
        let half: std::collections::BTreeSet<u64> =
            (0..1u64 << n).filter(|q| q & 1 == 0).collect();
        let all: std::collections::BTreeSet<u64> = (0..1u64 << n).collect();
        ProductEvent::new(n, [half, all.clone(), all])
    }

    #[test]
    fn demo_single_repetition_point_event() {
        let zero: std::collections::BTreeSet<u64> = [0u64].into();
        let ev = ProductEvent::new(1, [zero.clone(), zero.clone(), zero]);
        let report = main_theorem_demo(1, &ev, &DemoParams::default()).unwrap();
        assert_eq!(report.partition_codim, 1);
        assert!(report.values_computed);
        assert!(report.pseudorandom_mass_ok);
        assert!(report.decomposition_ok.unwrap());
        for p in report.parts.iter().filter(|p| p.pseudorandom) {
            assert!(p.transfer_ok.unwrap());
        }
    }

    #[test]
    fn demo_half_mass_event_n2() {
        let report = main_theorem_demo(2, &half_event(2), &DemoParams::default()).unwrap();
        assert!(report.values_computed);
        assert!(report.pseudorandom_mass_ok);
        assert!(report.decomposition_ok.unwrap());
        // With positive log-mass at this scale the constants cannot hold.
        assert!(!report.constraints_satisfied);
        assert!(report.vacuous_label.is_some());
    }

    #[test]
    fn demo_partition_only_n4() {
        let params = DemoParams {
            value_cap_n: 2,
            ..DemoParams::default()
        };
        let report = main_theorem_demo(4, &half_event(4), &params).unwrap();
        assert!(!report.values_computed);
        assert!(report.v_pt_overall.is_none());
        assert!(report.pseudorandom_mass_ok);
    }

    #[test]
    fn published_constants_inactive_at_small_scale() {
        let diag = constraint_diagnostic(100_000);
        assert_eq!(diag.satisfied_below_cap, None);
        let estimate = diag.first_satisfied_estimate.unwrap();
        assert!(estimate > 1e6);
        // The estimate is a genuine boundary: satisfied there, not just below.
        assert!(constants_satisfied(estimate * 1.01));
        assert!(!constants_satisfied(estimate * 0.5));
    }
}
