//! Exact finite probability: distributions with rational masses over opaque
//! byte-string outcomes, conditioning, pushforward, entropy, total variation
//! and KL divergence (plain and conditional), and the quantitative
//! inequalities the rest of the crate certifies against.
//!
//! Probabilities and TV distances stay exact rationals end to end; entropy
//! and KL take one float logarithm per term at the very end.

use std::collections::BTreeMap;

use num::{BigRational, FromPrimitive, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Opaque ordered outcome key. Distributions over F2 triples, partition
/// parts, and answer tuples all encode into this one key type.
pub type Outcome = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProbError {
    #[error("conditioning event has zero mass")]
    ZeroMassEvent,
    #[error("distributions live on different outcome universes")]
    UniverseMismatch,
    #[error("random variable undefined on a support outcome")]
    PartialFunction,
    #[error("masses must be nonnegative and sum to one")]
    InvalidDistribution,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// An exact probability distribution on a finite outcome universe.
///
/// The universe is the full key set, including outcomes that currently
/// carry zero mass; conditioning keeps the universe so that distributions
/// derived from a common source stay directly comparable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteDist {
    mass: BTreeMap<Outcome, Rational>,
}

/// A random variable as an explicit total function on outcome keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandVar {
    table: BTreeMap<Outcome, Outcome>,
}

impl RandVar {
    pub fn new(table: BTreeMap<Outcome, Outcome>) -> Self {
        Self { table }
    }

    pub fn from_fn<'a>(
        universe: impl IntoIterator<Item = &'a Outcome>,
        mut f: impl FnMut(&Outcome) -> Outcome,
    ) -> Self {
        Self {
            table: universe.into_iter().map(|o| (o.clone(), f(o))).collect(),
        }
    }

    pub fn identity<'a>(universe: impl IntoIterator<Item = &'a Outcome>) -> Self {
        Self::from_fn(universe, |o| o.clone())
    }

    pub fn constant<'a>(universe: impl IntoIterator<Item = &'a Outcome>, value: Outcome) -> Self {
        Self::from_fn(universe, |_| value.clone())
    }

    pub fn get(&self, o: &Outcome) -> Option<&Outcome> {
        self.table.get(o)
    }
}

impl FiniteDist {
    pub fn from_masses(
        masses: impl IntoIterator<Item = (Outcome, Rational)>,
    ) -> Result<Self, ProbError> {
        let mut map = BTreeMap::new();
        let mut total = Rational::zero();
        for (o, m) in masses {
            if m.is_negative() {
                return Err(ProbError::InvalidDistribution);
            }
            total += &m;
            if map.insert(o, m).is_some() {
                return Err(ProbError::InvalidDistribution);
            }
        }
        if !total.is_one() {
            return Err(ProbError::InvalidDistribution);
        }
        Ok(Self { mass: map })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(
        weights: impl IntoIterator<Item = (Outcome, Rational)>,
    ) -> Result<Self, ProbError> {
        let mut map = BTreeMap::new();
        let mut total = Rational::zero();
        for (o, w) in weights {
            if w.is_negative() {
                return Err(ProbError::InvalidDistribution);
            }
            total += &w;
            let slot = map.entry(o).or_insert_with(Rational::zero);
            *slot += w;
        }
        if total.is_zero() {
            return Err(ProbError::InvalidDistribution);
        }
        for m in map.values_mut() {
            *m /= total.clone();
        }
        Ok(Self { mass: map })
    }

    pub fn uniform(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        let keys: Vec<Outcome> = outcomes.into_iter().collect();
        let n = Rational::from_usize(keys.len()).unwrap();
        let each = Rational::one() / n;
        let map: BTreeMap<_, _> = keys.iter().map(|o| (o.clone(), each.clone())).collect();
        assert_eq!(map.len(), keys.len(), "duplicate outcomes");
        Self { mass: map }
    }

    pub fn point(outcome: Outcome) -> Self {
        Self {
            mass: [(outcome, Rational::one())].into_iter().collect(),
        }
    }

    pub fn mass(&self, o: &Outcome) -> Rational {
        self.mass.get(o).cloned().unwrap_or_else(Rational::zero)
    }

    /// Probability of an event given as a predicate on outcomes.
    pub fn prob(&self, event: impl Fn(&Outcome) -> bool) -> Rational {
        self.mass
            .iter()
            .filter(|(o, _)| event(o))
            .map(|(_, m)| m.clone())
            .sum()
    }

    pub fn universe(&self) -> impl Iterator<Item = &Outcome> {
        self.mass.keys()
    }

    pub fn universe_len(&self) -> usize {
        self.mass.len()
    }

    pub fn support(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.mass.iter().filter(|(_, m)| m.is_positive())
    }

    pub fn support_len(&self) -> usize {
        self.support().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, &Rational)> {
        self.mass.iter()
    }

    fn same_universe(&self, other: &Self) -> bool {
        self.mass.len() == other.mass.len()
            && self.mass.keys().zip(other.mass.keys()).all(|(a, b)| a == b)
    }

    /// Exact equality as measures: agree on every outcome of the union
    /// universe (zero-mass padding does not matter).
    pub fn eq_as_measures(&self, other: &Self) -> bool {
        for (o, m) in &self.mass {
            if *m != other.mass(o) {
                return false;
            }
        }
        for (o, m) in &other.mass {
            if *m != self.mass(o) {
                return false;
            }
        }
        true
    }

    /// Conditional distribution given the event; keeps the universe and
    /// assigns zero mass outside the event.
    pub fn condition(&self, event: impl Fn(&Outcome) -> bool) -> Result<Self, ProbError> {
        let pe = self.prob(&event);
        if pe.is_zero() {
            return Err(ProbError::ZeroMassEvent);
        }
        let mass = self
            .mass
            .iter()
            .map(|(o, m)| {
                let new = if event(o) {
                    m / pe.clone()
                } else {
                    Rational::zero()
                };
                (o.clone(), new)
            })
            .collect();
        Ok(Self { mass })
    }

    /// Law of the random variable under this distribution. The universe of
    /// the result is the image of the present universe.
    pub fn pushforward(&self, x: &RandVar) -> Result<Self, ProbError> {
        let mut out: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (o, m) in &self.mass {
            match x.get(o) {
                Some(v) => {
                    *out.entry(v.clone()).or_insert_with(Rational::zero) += m;
                }
                None if m.is_zero() => {}
                None => return Err(ProbError::PartialFunction),
            }
        }
        Ok(Self { mass: out })
    }

    /// Closure form of pushforward; total by construction.
    pub fn map(&self, mut f: impl FnMut(&Outcome) -> Outcome) -> Self {
        let mut out: BTreeMap<Outcome, Rational> = BTreeMap::new();
        for (o, m) in &self.mass {
            *out.entry(f(o)).or_insert_with(Rational::zero) += m;
        }
        Self { mass: out }
    }

    /// Entropy in nats.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (_, m) in self.support() {
            let p = m.to_f64().expect("mass fits in f64");
            h -= p * p.ln();
        }
        h
    }
}

/// Total variation distance, exact, over a common universe.
pub fn tv_distance(p: &FiniteDist, q: &FiniteDist) -> Result<Rational, ProbError> {
    if !p.same_universe(q) {
        return Err(ProbError::UniverseMismatch);
    }
    Ok(tv_union(p, q))
}

/// Total variation over the union universe (missing keys count as zero).
pub(crate) fn tv_union(p: &FiniteDist, q: &FiniteDist) -> Rational {
    let mut sum = Rational::zero();
    for (o, m) in &p.mass {
        sum += (m - q.mass(o)).abs();
    }
    for (o, m) in &q.mass {
        if !p.mass.contains_key(o) {
            sum += m.abs();
        }
    }
    sum / rat(2, 1)
}

/// KL divergence in nats; `+inf` exactly when `supp(p)` is not contained in
/// `supp(q)`. Terms `0 ln(0/q)` are zero by convention, so universe padding
/// is irrelevant and no error is possible.
pub fn kl_divergence(p: &FiniteDist, q: &FiniteDist) -> f64 {
    let mut acc = 0.0;
    for (o, m) in p.support() {
        let qm = q.mass(o);
        if qm.is_zero() {
            return f64::INFINITY;
        }
        let ratio = (m / qm).to_f64().expect("ratio fits in f64");
        let pf = m.to_f64().expect("mass fits in f64");
        acc += pf * ratio.ln();
    }
    acc
}

/// Conditional KL divergence `E_{x <- P_X}[ d_KL(P_{W|X=x} || Q_{Y|Z=x}) ]`.
pub fn conditional_kl(
    p: &FiniteDist,
    q: &FiniteDist,
    w: &RandVar,
    x: &RandVar,
    y: &RandVar,
    z: &RandVar,
) -> Result<f64, ProbError> {
    let px = p.pushforward(x)?;
    let qz = q.pushforward(z)?;
    let mut acc = 0.0;
    for (v, m) in px.support() {
        if qz.mass(v).is_zero() {
            return Ok(f64::INFINITY);
        }
        let p_cond = p.condition(|o| x.get(o) == Some(v))?.pushforward(w)?;
        let q_cond = q.condition(|o| z.get(o) == Some(v))?.pushforward(y)?;
        let term = kl_divergence(&p_cond, &q_cond);
        if term.is_infinite() {
            return Ok(f64::INFINITY);
        }
        acc += m.to_f64().expect("mass fits in f64") * term;
    }
    Ok(acc)
}

/// Conditional entropy `H(P_{X|Y}) = E_y[ H(P_{X|Y=y}) ]` in nats.
pub fn conditional_entropy(p: &FiniteDist, x: &RandVar, y: &RandVar) -> Result<f64, ProbError> {
    let py = p.pushforward(y)?;
    let mut acc = 0.0;
    for (v, m) in py.support() {
        let cond = p.condition(|o| y.get(o) == Some(v))?.pushforward(x)?;
        acc += m.to_f64().expect("mass fits in f64") * cond.entropy();
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `d_TV(P|E, Q|E) <= 2 d_TV(P, Q) / P(E)`; the comparison is exact.
pub fn conditioned_tv_bound_check(
    p: &FiniteDist,
    q: &FiniteDist,
    event: impl Fn(&Outcome) -> bool,
) -> Result<BoundCheck, ProbError> {
    if !p.same_universe(q) {
        return Err(ProbError::UniverseMismatch);
    }
    let pe = p.prob(&event);
    if pe.is_zero() {
        return Err(ProbError::ZeroMassEvent);
    }
    let p_cond = p.condition(&event)?;
    let q_cond = q.condition(&event)?;
    let lhs = tv_union(&p_cond, &q_cond);
    let rhs = rat(2, 1) * tv_union(p, q) / pe;
    Ok(BoundCheck {
        lhs: lhs.to_f64().unwrap(),
        rhs: rhs.to_f64().unwrap(),
        holds: lhs <= rhs,
    })
}

/// Checks Pinsker's inequality `d_TV(P, Q) <= sqrt(d_KL(P||Q) / 2)`.
pub fn pinsker_check(p: &FiniteDist, q: &FiniteDist) -> Result<BoundCheck, ProbError> {
    if !p.same_universe(q) {
        return Err(ProbError::UniverseMismatch);
    }
    let tv = tv_union(p, q).to_f64().unwrap();
    let rhs = (0.5 * kl_divergence(p, q)).sqrt();
    Ok(BoundCheck {
        lhs: tv,
        rhs,
        holds: tv <= rhs + 1e-12,
    })
}

/// Conditional-TV transfer bound for a conditioned distribution:
/// with `Pt = P|E` and the precondition
/// `Pr_{z <- P_Z}[ P(E|Z=z) >= delta ] >= 1 - tau`, checks
/// `E_z[ d_TV(Pt_{X|Z=z}, Pt_{Y|Z=z}) ] <= tau + 2 E_z[ d_TV(P_{X|Z=z}, P_{Y|Z=z}) ] / delta`.
///
/// Conditionals that are undefined because `Pt(Z=z) = 0` enter the left side
/// at the worst-case value 1.
pub fn expectation_quotient_bound_check(
    p: &FiniteDist,
    event: impl Fn(&Outcome) -> bool,
    x: &RandVar,
    y: &RandVar,
    z: &RandVar,
    delta: &Rational,
    tau: &Rational,
) -> Result<BoundCheck, ProbError> {
    let pe = p.prob(&event);
    if pe.is_zero() {
        return Err(ProbError::ZeroMassEvent);
    }
    let pt = p.condition(&event)?;
    let pz = p.pushforward(z)?;

    let mut good_mass = Rational::zero();
    let mut lhs = Rational::zero();
    let mut plain_expectation = Rational::zero();
    for (v, m) in pz.support() {
        let p_given_z = p.condition(|o| z.get(o) == Some(v))?;
        let cond_e = p_given_z.prob(&event);
        if cond_e >= *delta {
            good_mass += m;
        }
        plain_expectation += m
            * tv_union(
                &p_given_z.pushforward(x)?,
                &p_given_z.pushforward(y)?,
            );
        let pt_z_mass = pt.prob(|o| z.get(o) == Some(v));
        if pt_z_mass.is_zero() {
            lhs += m;
        } else {
            let pt_given_z = pt.condition(|o| z.get(o) == Some(v))?;
            lhs += m
                * tv_union(
                    &pt_given_z.pushforward(x)?,
                    &pt_given_z.pushforward(y)?,
                );
        }
    }
    if good_mass < Rational::one() - tau {
        return Err(ProbError::PreconditionFailed(format!(
            "Pr[P(E|Z) >= delta] = {good_mass} < 1 - tau"
        )));
    }
    let rhs = tau + rat(2, 1) * plain_expectation / delta;
    Ok(BoundCheck {
        lhs: lhs.to_f64().unwrap(),
        rhs: rhs.to_f64().unwrap(),
        holds: lhs <= rhs,
    })
}

/// Principal branch of the Lambert W function on `[e, inf)`, by Newton
/// iteration to 1e-12 relative tolerance.
pub fn lambert_w(y: f64) -> Result<f64, ProbError> {
    if y.is_nan() || y < std::f64::consts::E {
        return Err(ProbError::DomainError(format!(
            "lambert_w requires y >= e, got {y}"
        )));
    }
    let mut w = y.ln() - y.ln().ln().max(0.0);
    for _ in 0..200 {
        let ew = w.exp();
        let next = w - (w * ew - y) / (ew * (1.0 + w));
        if (next - w).abs() <= 1e-12 * next.abs() {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

#[derive(Clone, Debug)]
pub struct OptimumTau {
    pub tau_star: f64,
    pub value: f64,
    pub bound: f64,
}

/// Minimizes `A/ln(1/tau) + B/tau` over `tau` in (0,1) for `A >= e B > 0`.
///
/// The minimizer satisfies `z e^z = A/B` with `z = ln(1/tau)`, so
/// `tau* = exp(-W(A/B))` and the optimum is `2A / W(A/B)`, which is bounded
/// by `4A / ln(A/B)`.
pub fn optimum_tau(a: f64, b: f64) -> Result<OptimumTau, ProbError> {
    if a.is_nan() || b.is_nan() || b <= 0.0 || a < std::f64::consts::E * b {
        return Err(ProbError::DomainError(format!(
            "optimum_tau requires A >= e*B > 0, got A={a}, B={b}"
        )));
    }
    let w = lambert_w(a / b)?;
    let tau_star = (-w).exp();
    let value = a / (1.0 / tau_star).ln() + b / tau_star;
    let bound = 4.0 * a / (a / b).ln();
    Ok(OptimumTau {
        tau_star,
        value,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> Outcome {
        s.as_bytes().to_vec()
    }

    fn ghz_queries() -> FiniteDist {
        FiniteDist::uniform(["000", "011", "101", "110"].map(key))
    }

    #[test]
    fn condition_to_point_mass() {
        let p = FiniteDist::uniform(["a", "b", "c", "d"].map(key));
        let c = p.condition(|o| o == &key("b")).unwrap();
        assert_eq!(c.mass(&key("b")), Rational::one());
        assert_eq!(c.support_len(), 1);
        assert_eq!(c.universe_len(), 4);
    }

    #[test]
    fn condition_on_everything_is_identity() {
        let p = ghz_queries();
        assert_eq!(p.condition(|_| true).unwrap(), p);
    }

    #[test]
    fn condition_on_first_bit() {
        // Uniform on {000,011,101,110} given x1 = 0 is uniform on {000,011};
        // expected values read off the four-point support directly.
        let p = ghz_queries();
        let c = p.condition(|o| o[0] == b'0').unwrap();
        assert_eq!(c.mass(&key("000")), rat(1, 2));
        assert_eq!(c.mass(&key("011")), rat(1, 2));
        assert_eq!(c.mass(&key("101")), rat(0, 1));
    }

    #[test]
    fn condition_zero_mass_event_fails() {
        let p = ghz_queries();
        assert_eq!(
            p.condition(|o| o == &key("001")).err(),
            Some(ProbError::ZeroMassEvent)
        );
    }

    #[test]
    fn pushforward_identity_and_constant() {
        let p = ghz_queries();
        let id = RandVar::identity(p.universe());
        assert_eq!(p.pushforward(&id).unwrap(), p);
        let c = RandVar::constant(p.universe(), key("z"));
        let q = p.pushforward(&c).unwrap();
        assert_eq!(q.mass(&key("z")), Rational::one());
    }

    #[test]
    fn pushforward_ghz_or() {
        // OR of the three query bits: 0 on 000 only, so {0: 1/4, 1: 3/4}.
        let p = ghz_queries();
        let or = RandVar::from_fn(p.universe(), |o| {
            vec![u8::from(o.contains(&b'1'))]
        });
        let q = p.pushforward(&or).unwrap();
        assert_eq!(q.mass(&vec![0u8]), rat(1, 4));
        assert_eq!(q.mass(&vec![1u8]), rat(3, 4));
    }

    #[test]
    fn pushforward_requires_totality() {
        let p = ghz_queries();
        let partial = RandVar::new(
            [(key("000"), key("x"))].into_iter().collect(),
        );
        assert_eq!(
            p.pushforward(&partial).err(),
            Some(ProbError::PartialFunction)
        );
    }

    #[test]
    fn tv_basic_values() {
        let p = FiniteDist::uniform(["a", "b"].map(key));
        assert_eq!(tv_distance(&p, &p).unwrap(), Rational::zero());

        let q = FiniteDist::from_masses([
            (key("a"), Rational::one()),
            (key("b"), Rational::zero()),
        ])
        .unwrap();
        // uniform{a,b} vs point{a}: (|1/2-1| + |1/2-0|)/2 = 1/2.
        assert_eq!(tv_distance(&p, &q).unwrap(), rat(1, 2));

        let r = FiniteDist::from_masses([
            (key("a"), Rational::zero()),
            (key("b"), Rational::one()),
        ])
        .unwrap();
        let s = FiniteDist::from_masses([
            (key("a"), Rational::one()),
            (key("b"), Rational::zero()),
        ])
        .unwrap();
        assert_eq!(tv_distance(&r, &s).unwrap(), Rational::one());
    }

    #[test]
    fn tv_rejects_disjoint_universes() {
        let p = FiniteDist::uniform(["a"].map(key));
        let q = FiniteDist::uniform(["b"].map(key));
        assert_eq!(tv_distance(&p, &q).err(), Some(ProbError::UniverseMismatch));
    }

    /// Oracle: TV as the maximum of |P(E) - Q(E)| over all events, by
    /// enumerating every subset of the universe.
    fn tv_max_event_oracle(p: &FiniteDist, q: &FiniteDist) -> Rational {
        let keys: Vec<Outcome> = p.universe().cloned().collect();
        assert!(keys.len() <= 16);
        let mut best = Rational::zero();
        for mask in 0..(1u32 << keys.len()) {
            let event: Vec<&Outcome> = keys
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, k)| k)
                .collect();
            let pe: Rational = event.iter().map(|k| p.mass(k)).sum();
            let qe: Rational = event.iter().map(|k| q.mass(k)).sum();
            let d = (pe - qe).abs();
            if d > best {
                best = d;
            }
        }
        best
    }

    #[test]
    fn tv_sum_formula_equals_max_event_formula() {
        let p = FiniteDist::from_weights([
            (key("a"), rat(3, 1)),
            (key("b"), rat(1, 1)),
            (key("c"), rat(2, 1)),
            (key("d"), rat(2, 1)),
        ])
        .unwrap();
        let q = FiniteDist::from_weights([
            (key("a"), rat(1, 1)),
            (key("b"), rat(5, 1)),
            (key("c"), rat(1, 1)),
            (key("d"), rat(1, 1)),
        ])
        .unwrap();
        assert_eq!(tv_distance(&p, &q).unwrap(), tv_max_event_oracle(&p, &q));
    }

    #[test]
    fn kl_of_conditioning_is_log_inverse_mass() {
        let p = ghz_queries();
        let c = p.condition(|o| o == &key("000")).unwrap();
        // d_KL(P|E || P) = ln(1/P(E)) with P(E) = 1/4.
        let kl = kl_divergence(&c, &p);
        assert!((kl - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kl_point_vs_uniform() {
        let u = FiniteDist::uniform(["a", "b", "c", "d"].map(key));
        let mut masses: Vec<(Outcome, Rational)> =
            ["b", "c", "d"].map(key).map(|k| (k, Rational::zero())).into();
        masses.push((key("a"), Rational::one()));
        let p = FiniteDist::from_masses(masses).unwrap();
        assert!((kl_divergence(&p, &u) - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn kl_infinite_on_support_escape() {
        let p = FiniteDist::uniform(["a", "b"].map(key));
        let q = FiniteDist::from_masses([
            (key("a"), Rational::one()),
            (key("b"), Rational::zero()),
        ])
        .unwrap();
        assert!(kl_divergence(&p, &q).is_infinite());
        assert_eq!(kl_divergence(&q, &p), 2.0f64.ln());
    }

    #[test]
    fn conditional_kl_trivial_cases() {
        let p = ghz_queries();
        let id = RandVar::identity(p.universe());
        assert_eq!(conditional_kl(&p, &p, &id, &id, &id, &id).unwrap(), 0.0);

        // Constant conditioning variables reduce to plain KL.
        let c = RandVar::constant(p.universe(), key("*"));
        let q = p.condition(|o| o[0] == b'0').unwrap();
        let plain = kl_divergence(&q, &p);
        let cond = conditional_kl(&q, &p, &id, &c, &id, &c).unwrap();
        assert!((plain - cond).abs() < 1e-12);
    }

    #[test]
    fn kl_chain_rule_on_eight_points() {
        // d_KL(P_{W,X} || Q_{Y,Z}) = d_KL(P_X || Q_Z) + conditional term,
        // with both sides computed independently.
        let keys: Vec<Outcome> = (0u8..8).map(|b| vec![b]).collect();
        let p = FiniteDist::from_weights(
            keys.iter().cloned().zip((1..=8).map(|w| rat(w, 1))),
        )
        .unwrap();
        let q = FiniteDist::from_weights(
            keys.iter().cloned().zip([3, 1, 4, 1, 5, 9, 2, 6].map(|w| rat(w, 1))),
        )
        .unwrap();
        let low = RandVar::from_fn(keys.iter(), |o| vec![o[0] & 1]);
        let joint = RandVar::identity(keys.iter());

        let lhs = kl_divergence(&p, &q);
        let marginal = kl_divergence(&p.pushforward(&low).unwrap(), &q.pushforward(&low).unwrap());
        let cond = conditional_kl(&p, &q, &joint, &low, &joint, &low).unwrap();
        assert!((lhs - (marginal + cond)).abs() < 1e-12);
    }

    #[test]
    fn entropy_values() {
        let point = FiniteDist::point(key("a"));
        assert_eq!(point.entropy(), 0.0);
        let u4 = FiniteDist::uniform(["a", "b", "c", "d"].map(key));
        assert!((u4.entropy() - 4.0f64.ln()).abs() < 1e-12);
        let skew = FiniteDist::from_masses([(key("a"), rat(1, 4)), (key("b"), rat(3, 4))]).unwrap();
        let expect = 0.25 * 4.0f64.ln() + 0.75 * (4.0f64 / 3.0).ln();
        assert!((skew.entropy() - expect).abs() < 1e-12);
    }

    #[test]
    fn entropy_chain_rule() {
        let keys: Vec<Outcome> = (0u8..6).map(|b| vec![b]).collect();
        let p = FiniteDist::from_weights(
            keys.iter().cloned().zip([2, 7, 1, 8, 2, 8].map(|w| rat(w, 1))),
        )
        .unwrap();
        let x = RandVar::from_fn(keys.iter(), |o| vec![o[0] % 3]);
        let y = RandVar::from_fn(keys.iter(), |o| vec![o[0] & 1]);
        let xy = RandVar::from_fn(keys.iter(), |o| vec![o[0] % 3, o[0] & 1]);
        let h_cond = conditional_entropy(&p, &x, &y).unwrap();
        let h_joint = p.pushforward(&xy).unwrap().entropy();
        let h_y = p.pushforward(&y).unwrap().entropy();
        assert!((h_cond - (h_joint - h_y)).abs() < 1e-12);
    }

    #[test]
    fn conditioned_tv_trivial_cases() {
        let p = ghz_queries();
        let check = conditioned_tv_bound_check(&p, &p, |_| true).unwrap();
        assert!(check.holds);
        assert_eq!(check.lhs, 0.0);

        let q = p.condition(|o| o[0] == b'0').unwrap();
        let full = conditioned_tv_bound_check(&p, &q, |_| true).unwrap();
        assert!(full.holds); // lhs = d_TV <= 2 d_TV
    }

    #[test]
    fn pinsker_trivial_cases() {
        let p = ghz_queries();
        let c = pinsker_check(&p, &p).unwrap();
        assert!(c.holds && c.lhs == 0.0);
        let q = FiniteDist::from_masses([
            (key("000"), Rational::one()),
            (key("011"), Rational::zero()),
            (key("101"), Rational::zero()),
            (key("110"), Rational::zero()),
        ])
        .unwrap();
        let d = pinsker_check(&p, &q).unwrap();
        assert!(d.holds && d.rhs.is_infinite());
    }

    #[test]
    fn expectation_quotient_trivial_cases() {
        let p = ghz_queries();
        let id = RandVar::identity(p.universe());
        let z = RandVar::from_fn(p.universe(), |o| vec![o[0]]);
        // X = Y makes the left side zero.
        let check = expectation_quotient_bound_check(
            &p,
            |o| o != &key("000"),
            &id,
            &id,
            &z,
            &rat(1, 2),
            &rat(0, 1),
        )
        .unwrap();
        assert_eq!(check.lhs, 0.0);
        assert!(check.holds);

        // E = everything, tau = 0: reduces to the 2/delta-scaled plain bound.
        let x = RandVar::from_fn(p.universe(), |o| vec![o[1]]);
        let y = RandVar::from_fn(p.universe(), |o| vec![o[2]]);
        let check = expectation_quotient_bound_check(
            &p,
            |_| true,
            &x,
            &y,
            &z,
            &Rational::one(),
            &rat(0, 1),
        )
        .unwrap();
        assert!(check.holds);
    }

    #[test]
    fn lambert_w_solves_defining_equation() {
        for &y in &[std::f64::consts::E, 10.0, 123.456, 1e6, 7.389_056_098_930_65] {
            let w = lambert_w(y).unwrap();
            assert!(
                (w * w.exp() - y).abs() <= 1e-10 * y,
                "W({y}) = {w} fails the defining identity"
            );
        }
    }

    #[test]
    fn optimum_tau_boundary_case() {
        // A = eB: ln(A/B) = 1 and the bound degenerates to 4A.
        let b = 2.0;
        let a = std::f64::consts::E * b;
        let r = optimum_tau(a, b).unwrap();
        assert!((r.bound - 4.0 * a).abs() < 1e-12);
        assert!(r.value <= r.bound);
    }

    #[test]
    fn optimum_tau_matches_grid_search() {
        // Grid oracle over one million points in (0,1). The reported value
        // is the objective at the equalization point, which upper-bounds the
        // true minimum (within grid resolution) and sits below the bound.
        let grid_min = |a: f64, b: f64| {
            let mut best = f64::INFINITY;
            for i in 1..1_000_000u64 {
                let tau = i as f64 / 1_000_000.0;
                let v = a / (1.0 / tau).ln() + b / tau;
                if v < best {
                    best = v;
                }
            }
            best
        };
        let e2 = std::f64::consts::E.powi(2);
        let r = optimum_tau(e2, 1.0).unwrap();
        // value = 2 e^2 / W(e^2) ~ 9.49
        assert!((r.value - 2.0 * e2 / lambert_w(e2).unwrap()).abs() < 1e-9);
        assert!((r.value - 9.49).abs() < 0.01);
        let oracle = grid_min(e2, 1.0);
        assert!(oracle <= r.value + 1e-4);
        assert!(r.value <= r.bound + 1e-12);
        assert!((r.bound - 2.0 * e2).abs() < 1e-9);

        let r = optimum_tau(100.0, 1.0).unwrap();
        let oracle = grid_min(100.0, 1.0);
        assert!(oracle <= r.value + 1e-4);
        assert!(r.value <= 4.0 * 100.0 / 100.0f64.ln() + 1e-12);
        assert!((r.bound - 86.86).abs() < 0.01);
    }

    #[test]
    fn optimum_tau_domain_error() {
        assert!(matches!(
            optimum_tau(1.0, 1.0),
            Err(ProbError::DomainError(_))
        ));
    }

    #[test]
    fn masses_stay_exact_through_condition_and_pushforward() {
        let p = ghz_queries();
        let c = p.condition(|o| o[0] == b'0').unwrap();
        let total: Rational = c.iter().map(|(_, m)| m.clone()).sum();
        assert!(total.is_one());
        let q = c.map(|o| vec![o[1]]);
        let total: Rational = q.iter().map(|(_, m)| m.clone()).sum();
        assert!(total.is_one());
    }
}
