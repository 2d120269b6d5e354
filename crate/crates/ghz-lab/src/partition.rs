//! Affine partitions of F2^(3 x n), the compressed-closeness measure over
//! rowwise linear maps, the pseudorandom-partition construction by iterated
//! refinement, and the strategy-dependent subspace refinement.
//!
//! The closeness search exploits that the KL divergence between rowwise
//! compressions depends only on the kernel of the compressing map, so the
//! map search collapses to an enumeration of kernels of bounded codimension
//! (a Gaussian-binomial-sized family instead of all matrices).

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigUint, One, ToPrimitive, Zero};

use crate::f2::{
    coset_reps, decode_triple, encode_triple, AffinePowerCoset, F2Error, F2Vector, Subspace,
};
use crate::prob::{kl_divergence, FiniteDist, ProbError, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("exact closeness search needs {kernels} kernels, budget is {budget}")]
    ExactSearchInfeasible { kernels: u128, budget: u128 },
    #[error("refiner map is not full rank on its part")]
    RankDeficient,
    #[error("event does not factor as a product over players")]
    NonProductEvent,
    #[error("event has zero mass")]
    ZeroMassEvent,
    #[error("enumeration needs {required} elements, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("certified inequality violated: {what}")]
    TheoremViolated { what: String },
    #[error(transparent)]
    F2(#[from] F2Error),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Default cap on the number of kernels the exact closeness search visits.
pub const DEFAULT_KERNEL_BUDGET: u128 = 1 << 22;

/// Gaussian binomial: the number of `c`-dimensional subspaces of F2^d.
pub fn gaussian_binomial(d: usize, c: usize) -> BigUint {
    if c > d {
        return BigUint::zero();
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for l in 0..c {
        num *= (BigUint::one() << (d - l)) - BigUint::one();
        den *= (BigUint::one() << (c - l)) - BigUint::one();
    }
    num / den
}

/// All `c`-dimensional subspaces of F2^d, each as its canonical RREF basis.
fn dual_subspaces(d: usize, c: usize) -> Vec<Vec<F2Vector>> {
    let mut out = Vec::new();
    if c == 0 {
        out.push(Vec::new());
        return out;
    }
    if c > d {
        return out;
    }
    // Choose pivot columns, then fill free entries: row l has a 1 at its
    // pivot, zeros at other pivots and to its left, free bits elsewhere.
    let mut pivots = (0..c).collect::<Vec<usize>>();
    loop {
        let mut free_slots = Vec::new(); // (row, col)
        for (l, &p) in pivots.iter().enumerate() {
            for col in p + 1..d {
                if !pivots.contains(&col) {
                    free_slots.push((l, col));
                }
            }
        }
        let assignments = 1u64 << free_slots.len();
        for bits in 0..assignments {
            let mut rows: Vec<F2Vector> =
                pivots.iter().map(|&p| F2Vector::unit(d, p)).collect();
            for (slot, &(row, col)) in free_slots.iter().enumerate() {
                if bits >> slot & 1 == 1 {
                    rows[row].set(col, true);
                }
            }
            out.push(rows);
        }
        // next pivot combination in lexicographic order
        let mut i = c;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pivots[i] + (c - i) < d {
                pivots[i] += 1;
                for l in i + 1..c {
                    pivots[l] = pivots[l - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Lifts coordinate-space functionals of `space` to row vectors on the
/// ambient space: the functional `gamma` becomes the sum of ambient unit
/// vectors at the pivots selected by `gamma`.
fn lift_functionals(space: &Subspace, gammas: &[F2Vector]) -> Vec<F2Vector> {
    gammas
        .iter()
        .map(|g| {
            let mut row = F2Vector::zeros(space.ambient_dim());
            for (l, &p) in space.pivots().iter().enumerate() {
                if g.get(l) {
                    row.xor_assign(&F2Vector::unit(space.ambient_dim(), p));
                }
            }
            row
        })
        .collect()
}

/// A rowwise linear compression attached to one part: the kernel it induces
/// on the part's space and ambient row vectors realizing the map.
#[derive(Clone, Debug)]
pub struct LinearWitness {
    pub kernel: Subspace,
    pub map_rows: Vec<F2Vector>,
}

impl LinearWitness {
    /// The canonical full-rank compression of `space` at level `m`: cut the
    /// first `min(dim, m)` coordinates.
    pub fn canonical(space: &Subspace, m: usize) -> Self {
        let c = m.min(space.dim());
        let gammas: Vec<F2Vector> = (0..c).map(|l| F2Vector::unit(space.dim(), l)).collect();
        Self {
            kernel: space.kernel_of_functionals(&gammas),
            map_rows: lift_functionals(space, &gammas),
        }
    }
}

/// Closeness report for one compression level: the maximum KL divergence
/// between rowwise compressions, with the maximizing map.
#[derive(Clone, Debug)]
pub struct ClosenessReport {
    pub m: usize,
    pub value: f64,
    pub witness: LinearWitness,
}

fn compress_dist(dist: &FiniteDist, n: usize, kernel: &Subspace) -> FiniteDist {
    dist.map(|key| {
        let x = decode_triple(key, n);
        encode_triple(&[
            kernel.reduce(&x[0]),
            kernel.reduce(&x[1]),
            kernel.reduce(&x[2]),
        ])
    })
}

/// Exact maximum of `d_KL(phi^3(Xt) || phi^3(X))` over linear maps
/// `phi : F2^n -> F2^m`, for two distributions supported in the same coset
/// of `space^3`. Only the kernel of `phi` on the space matters, and by data
/// processing the maximum is attained at kernels of codimension exactly
/// `min(m, dim)`, which are enumerated exhaustively.
pub fn d_m_closeness(
    coset: &AffinePowerCoset,
    xt: &FiniteDist,
    x: &FiniteDist,
    m: usize,
    kernel_budget: u128,
) -> Result<ClosenessReport, PartitionError> {
    let d = coset.dim();
    let c = m.min(d);
    let kernels = gaussian_binomial(d, c)
        .to_u128()
        .unwrap_or(u128::MAX);
    if kernels > kernel_budget {
        return Err(PartitionError::ExactSearchInfeasible {
            kernels,
            budget: kernel_budget,
        });
    }
    let n = coset.reps();
    let space = coset.space();
    let mut best: Option<(f64, LinearWitness)> = None;
    for gammas in dual_subspaces(d, c) {
        let kernel = space.kernel_of_functionals(&gammas);
        debug_assert_eq!(kernel.dim(), d - c);
        let value = kl_divergence(
            &compress_dist(xt, n, &kernel),
            &compress_dist(x, n, &kernel),
        );
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((
                value,
                LinearWitness {
                    kernel,
                    map_rows: lift_functionals(space, &gammas),
                },
            ));
        }
    }
    let (value, witness) = best.expect("at least one kernel");
    Ok(ClosenessReport { m, value, witness })
}

/// Parts grouped by their space, keyed by canonical shift bytes.
type PartLookup = Vec<(Arc<Subspace>, BTreeMap<Vec<u8>, usize>)>;

/// A partition of F2^(3 x n) into affine power cosets of one common
/// dimension.
#[derive(Clone, Debug)]
pub struct AffinePartition {
    reps: usize,
    dim: usize,
    parts: Vec<AffinePowerCoset>,
    /// Lookup index: parts grouped by space, keyed by canonical shift.
    groups: PartLookup,
}

impl AffinePartition {
    pub fn new(parts: Vec<AffinePowerCoset>) -> Self {
        assert!(!parts.is_empty());
        let reps = parts[0].reps();
        let dim = parts[0].dim();
        assert!(
            parts.iter().all(|p| p.dim() == dim && p.reps() == reps),
            "parts must share one dimension"
        );
        let mut groups: PartLookup = Vec::new();
        for (idx, part) in parts.iter().enumerate() {
            let key = encode_triple(part.shift());
            match groups
                .iter_mut()
                .find(|(space, _)| **space == *part.space())
            {
                Some((_, map)) => {
                    map.insert(key, idx);
                }
                None => {
                    groups.push((part.space_arc(), [(key, idx)].into_iter().collect()));
                }
            }
        }
        Self {
            reps,
            dim,
            parts,
            groups,
        }
    }

    /// The trivial partition with the single part F2^(3 x n).
    pub fn trivial(n: usize) -> Self {
        Self::new(vec![AffinePowerCoset::full(n)])
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.reps - self.dim
    }

    pub fn parts(&self) -> &[AffinePowerCoset] {
        &self.parts
    }

    /// Index of the unique part containing `x`.
    pub fn part_containing(&self, x: &[F2Vector; 3]) -> Option<usize> {
        for (space, map) in &self.groups {
            let key = encode_triple(&[
                space.reduce(&x[0]),
                space.reduce(&x[1]),
                space.reduce(&x[2]),
            ]);
            if let Some(&idx) = map.get(&key) {
                return Some(idx);
            }
        }
        None
    }

    /// Checks the partition axioms. Exhaustive point-by-point cover check
    /// when the ambient space fits the budget; otherwise a cardinality and
    /// distinctness check.
    pub fn validate(&self, exhaustive_budget: u128) -> Result<(), PartitionError> {
        let total: u128 = 1u128 << (3 * self.reps);
        let sum: u128 = self.parts.iter().map(AffinePowerCoset::size).sum();
        if sum != total {
            return Err(PartitionError::TheoremViolated {
                what: format!("part sizes sum to {sum}, ambient has {total}"),
            });
        }
        if total <= exhaustive_budget {
            for idx in 0..total {
                let x = decode_index(self.reps, idx);
                let mut hits = 0;
                for part in &self.parts {
                    if part.contains(&x) {
                        hits += 1;
                    }
                }
                if hits != 1 {
                    return Err(PartitionError::TheoremViolated {
                        what: format!("point covered {hits} times"),
                    });
                }
            }
        } else {
            let mut keys = std::collections::BTreeSet::new();
            for part in &self.parts {
                let mut key = encode_triple(part.shift());
                for b in part.space().basis() {
                    key.extend(b.to_bytes());
                }
                if !keys.insert(key) {
                    return Err(PartitionError::TheoremViolated {
                        what: "duplicate part".to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn decode_index(n: usize, idx: u128) -> [F2Vector; 3] {
    let mask = (1u128 << n) - 1;
    [
        F2Vector::from_low_u64(n, (idx & mask) as u64),
        F2Vector::from_low_u64(n, (idx >> n & mask) as u64),
        F2Vector::from_low_u64(n, (idx >> (2 * n) & mask) as u64),
    ]
}

/// Per-part compressions used to refine a partition, aligned with the
/// partition's part order.
#[derive(Clone, Debug)]
pub struct LinearRefiner {
    pub level: usize,
    pub cuts: Vec<LinearWitness>,
}

/// Splits every part into the cosets of its cut's kernel (cubed). The new
/// common dimension drops by exactly `min(dim, level)`.
pub fn refine(
    partition: &AffinePartition,
    refiner: &LinearRefiner,
) -> Result<AffinePartition, PartitionError> {
    assert_eq!(partition.parts().len(), refiner.cuts.len());
    let c = refiner.level.min(partition.dim());
    let mut new_parts = Vec::new();
    for (part, cut) in partition.parts().iter().zip(&refiner.cuts) {
        if !cut.kernel.is_subspace_of(part.space()) || cut.kernel.dim() != partition.dim() - c {
            return Err(PartitionError::RankDeficient);
        }
        let kernel = Arc::new(cut.kernel.clone());
        let reps = coset_reps(part.space(), &cut.kernel)?;
        let shift = part.shift();
        for r1 in &reps {
            for r2 in &reps {
                for r3 in &reps {
                    new_parts.push(AffinePowerCoset::with_arc(
                        [shift[0].xor(r1), shift[1].xor(r2), shift[2].xor(r3)],
                        Arc::clone(&kernel),
                    ));
                }
            }
        }
    }
    Ok(AffinePartition::new(new_parts))
}

/// A product event over the three players' repeated query vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductEvent {
    n: usize,
    sets: [std::collections::BTreeSet<u64>; 3],
}

impl ProductEvent {
    pub fn new(n: usize, sets: [std::collections::BTreeSet<u64>; 3]) -> Self {
        assert!(n < 64);
        Self { n, sets }
    }

    /// Factors an explicit set of triples as a product over players, or
    /// reports that no such factorization exists.
    pub fn try_from_triples(
        n: usize,
        triples: &[[F2Vector; 3]],
    ) -> Result<Self, PartitionError> {
        let mut sets: [std::collections::BTreeSet<u64>; 3] = Default::default();
        for t in triples {
            for i in 0..3 {
                sets[i].insert(t[i].as_low_u64());
            }
        }
        let expected: usize = sets.iter().map(|s| s.len()).product();
        if expected != triples.len() {
            return Err(PartitionError::NonProductEvent);
        }
        let keys: std::collections::BTreeSet<Vec<u8>> =
            triples.iter().map(encode_triple).collect();
        for &a in &sets[0] {
            for &b in &sets[1] {
                for &c in &sets[2] {
                    let x = [
                        F2Vector::from_low_u64(n, a),
                        F2Vector::from_low_u64(n, b),
                        F2Vector::from_low_u64(n, c),
                    ];
                    if !keys.contains(&encode_triple(&x)) {
                        return Err(PartitionError::NonProductEvent);
                    }
                }
            }
        }
        Ok(Self::new(n, sets))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn player_sets(&self) -> &[std::collections::BTreeSet<u64>; 3] {
        &self.sets
    }

    pub fn contains(&self, x: &[F2Vector; 3]) -> bool {
        (0..3).all(|i| self.sets[i].contains(&x[i].as_low_u64()))
    }
}

/// One refinement round in the pseudorandom-partition trace.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Conditional KL potential of the partition before this round's cut.
    pub phi: f64,
    /// Expected compressed closeness over parts (the quantity driven below
    /// the threshold).
    pub expected_dm: f64,
    pub codim: usize,
    pub part_count: usize,
    /// Parts that received a measured (positive-mass) witness.
    pub witness_parts: usize,
}

#[derive(Clone, Debug)]
pub struct PseudorandomPartition {
    pub partition: AffinePartition,
    pub trace: Vec<RoundRecord>,
    /// Final expected compressed closeness (satisfies the threshold).
    pub final_expected_dm: f64,
    /// `-ln P(E)`.
    pub delta_cap: f64,
    pub event_mass: Rational,
}

/// Support of the repeated GHZ query distribution: all triples with rows
/// summing to zero, parameterized by the first two rows.
pub fn ghz_support_points(n: usize, budget: u128) -> Result<Vec<[F2Vector; 3]>, PartitionError> {
    let required = 1u128 << (2 * n);
    if required > budget {
        return Err(PartitionError::BudgetExceeded { required, budget });
    }
    let size = 1u64 << n;
    let mut out = Vec::with_capacity(required as usize);
    for a in 0..size {
        for b in 0..size {
            out.push([
                F2Vector::from_low_u64(n, a),
                F2Vector::from_low_u64(n, b),
                F2Vector::from_low_u64(n, a ^ b),
            ]);
        }
    }
    Ok(out)
}

/// Per-part conditional measurements of a conditioned/unconditioned pair:
/// the conditional KL potential, the expected compressed closeness over
/// parts weighted by the conditioned distribution, and the per-part
/// maximizing witnesses.
#[allow(clippy::type_complexity)]
fn measure_partition(
    partition: &AffinePartition,
    pt: &FiniteDist,
    p: &FiniteDist,
    m: usize,
    kernel_budget: u128,
) -> Result<(f64, f64, BTreeMap<usize, LinearWitness>), PartitionError> {
    let n = partition.reps();
    // Bucket the reference support by part; conditioned masses ride along.
    let mut buckets: BTreeMap<usize, (Vec<Vec<u8>>, Rational)> = BTreeMap::new();
    for (key, _) in p.support() {
        let x = decode_triple(key, n);
        let part = partition
            .part_containing(&x)
            .expect("partition covers the ambient space");
        let entry = buckets
            .entry(part)
            .or_insert_with(|| (Vec::new(), Rational::zero()));
        entry.0.push(key.clone());
        entry.1 += pt.mass(key);
    }
    let mut phi = 0.0;
    let mut expected_dm = 0.0;
    let mut witnesses = BTreeMap::new();
    for (&part_idx, (keys, pt_mass)) in &buckets {
        if pt_mass.is_zero() {
            continue;
        }
        let weight = pt_mass.to_f64().expect("mass fits in f64");
        let part = &partition.parts()[part_idx];
        let pt_cond =
            FiniteDist::from_weights(keys.iter().map(|k| (k.clone(), pt.mass(k))))?;
        let p_cond = FiniteDist::from_weights(keys.iter().map(|k| (k.clone(), p.mass(k))))?;
        phi += weight * crate::prob::kl_divergence(&pt_cond, &p_cond);
        let report = d_m_closeness(part, &pt_cond, &p_cond, m, kernel_budget)?;
        expected_dm += weight * report.value;
        witnesses.insert(part_idx, report.witness);
    }
    Ok((phi, expected_dm, witnesses))
}

/// Returns the per-part refiner when the partition fails the expected
/// closeness threshold, or `None` when the partition is already good.
/// Zero-mass parts receive the canonical full-rank compression.
pub fn find_distinguisher(
    partition: &AffinePartition,
    pt: &FiniteDist,
    p: &FiniteDist,
    m: usize,
    delta: f64,
    kernel_budget: u128,
) -> Result<Option<LinearRefiner>, PartitionError> {
    let (_phi, expected_dm, witnesses) = measure_partition(partition, pt, p, m, kernel_budget)?;
    if expected_dm <= delta {
        return Ok(None);
    }
    let cuts = assemble_cuts(partition, witnesses, m);
    Ok(Some(LinearRefiner { level: m, cuts }))
}

fn assemble_cuts(
    partition: &AffinePartition,
    mut witnesses: BTreeMap<usize, LinearWitness>,
    m: usize,
) -> Vec<LinearWitness> {
    partition
        .parts()
        .iter()
        .enumerate()
        .map(|(idx, part)| {
            witnesses
                .remove(&idx)
                .unwrap_or_else(|| LinearWitness::canonical(part.space(), m))
        })
        .collect()
}

/// Builds an affine partition under which the event-conditioned repeated
/// query distribution is compressed-close to the unconditioned one on
/// average: iterate cut-and-refine until the expected closeness at level
/// `m` drops to `delta`.
///
/// The returned trace certifies the potential argument: the conditional KL
/// potential starts at `-ln P(E)`, strictly decreases by more than `delta`
/// at every accepted round, and the final codimension is below
/// `m * delta_cap / delta`.
pub fn pseudorandom_partition(
    n: usize,
    event: &ProductEvent,
    delta: f64,
    m: usize,
    kernel_budget: u128,
    enum_budget: u128,
) -> Result<PseudorandomPartition, PartitionError> {
    assert!(delta > 0.0);
    let support = ghz_support_points(n, enum_budget)?;
    let in_event: Vec<bool> = support.iter().map(|x| event.contains(x)).collect();
    let event_count = in_event.iter().filter(|&&b| b).count();
    if event_count == 0 {
        return Err(PartitionError::ZeroMassEvent);
    }
    let event_mass = Rational::new(
        (event_count as i64).into(),
        (support.len() as i64).into(),
    );
    let delta_cap = (support.len() as f64 / event_count as f64).ln();
    let max_rounds = (delta_cap / delta).ceil() as usize;
    let p_dist = FiniteDist::uniform(support.iter().map(encode_triple));
    let pt_dist = FiniteDist::uniform(
        support
            .iter()
            .zip(&in_event)
            .filter(|(_, &inside)| inside)
            .map(|(x, _)| encode_triple(x)),
    );

    let mut partition = AffinePartition::trivial(n);
    let mut trace = Vec::new();
    // Potential and committed compressed divergence of the previous round.
    let mut previous: Option<(f64, f64)> = None;
    loop {
        let round = trace.len();
        let (phi, expected_dm, witnesses) =
            measure_partition(&partition, &pt_dist, &p_dist, m, kernel_budget)?;
        if round == 0 && (phi - delta_cap).abs() > 1e-9 {
            return Err(PartitionError::TheoremViolated {
                what: format!("initial potential {phi} differs from {delta_cap}"),
            });
        }
        if let Some((prev_phi, prev_dm)) = previous {
            // Chain rule: conditioning on the refined part equals
            // conditioning on the part plus the committed compressed
            // divergence, exactly.
            let predicted = prev_phi - prev_dm;
            if (phi - predicted).abs() > 1e-9 {
                return Err(PartitionError::TheoremViolated {
                    what: format!(
                        "chain-rule identity violated at round {round}: \
                         potential {phi} vs predicted {predicted}"
                    ),
                });
            }
            if phi >= prev_phi - delta + 1e-9 {
                return Err(PartitionError::TheoremViolated {
                    what: format!(
                        "potential decreased by only {} at round {round}",
                        prev_phi - phi
                    ),
                });
            }
        }
        trace.push(RoundRecord {
            round,
            phi,
            expected_dm,
            codim: partition.codim(),
            part_count: partition.parts().len(),
            witness_parts: witnesses.len(),
        });
        if expected_dm <= delta {
            let codim_bound = m as f64 * delta_cap / delta;
            if partition.codim() as f64 > codim_bound + 1e-9 {
                return Err(PartitionError::TheoremViolated {
                    what: format!(
                        "codimension {} exceeds {codim_bound}",
                        partition.codim()
                    ),
                });
            }
            return Ok(PseudorandomPartition {
                partition,
                trace,
                final_expected_dm: expected_dm,
                delta_cap,
                event_mass,
            });
        }
        if round >= max_rounds {
            return Err(PartitionError::TheoremViolated {
                what: format!("not done after {round} rounds (cap {max_rounds})"),
            });
        }
        let cuts = assemble_cuts(&partition, witnesses, m);
        partition = refine(&partition, &LinearRefiner { level: m, cuts })?;
        previous = Some((phi, expected_dm));
    }
}

/// One character cut in the strategy refinement.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CutRecord {
    pub round: usize,
    /// The cut functional as an ambient row vector (its kernel inside the
    /// current subspace is the next subspace).
    pub functional: String,
    /// Maximal conditional divergence from uniform at this round.
    pub b: f64,
    pub z_before: f64,
    pub z_after: f64,
}

#[derive(Clone, Debug)]
pub struct StrategyRefinement {
    pub subspace: Subspace,
    pub cuts: Vec<CutRecord>,
    /// Final maximal per-character divergence (at most the threshold).
    pub final_bound: f64,
    /// Codimension of the result inside the coset's space, including the
    /// initial coordinate-pinning cut.
    pub codim_in_space: usize,
}

/// Per-bucket tallies for one candidate character: the conditional law of
/// the character sign given (sub-coset, first answer).
fn character_divergence(
    points: &[(usize, bool)], // (coords index within space, answer bit) per row point
    coset_rep: &[usize],      // canonical sub-coset representative per point
    in_kernel_sign: impl Fn(usize) -> bool,
) -> (f64, f64) {
    // buckets keyed by (rep, answer): (count, plus-sign count)
    let mut buckets: BTreeMap<(usize, bool), (u64, u64)> = BTreeMap::new();
    for (pi, &(coords, answer)) in points.iter().enumerate() {
        let entry = buckets.entry((coset_rep[pi], answer)).or_default();
        entry.0 += 1;
        if in_kernel_sign(coords) {
            entry.1 += 1;
        }
    }
    let total: u64 = points.len() as u64;
    let ln2 = std::f64::consts::LN_2;
    let mut b = 0.0;
    let mut entropy_term = 0.0;
    for ((_, _), (count, plus)) in &buckets {
        let w = *count as f64 / total as f64;
        let p = *plus as f64 / *count as f64;
        let h = binary_entropy(p);
        b += w * (ln2 - h);
        entropy_term += w * (*count as f64).ln();
    }
    (b, entropy_term)
}

fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// Iteratively cuts characters correlated with player 1's answer until
/// every character of the remaining subspace is `delta`-close to uniform in
/// expected KL divergence, conditioned on the sub-coset and the answer.
///
/// Starts from `{u in V : u_j = 0}` so the target coordinate is determined
/// by the coset, cuts the maximizing character each round (ties broken by
/// the lexicographically smallest coefficient vector), and certifies the
/// potential decrease `Z(U_{i+1}) <= Z(U_i) - b_i` numerically at every
/// step.
pub fn strategy_refinement(
    coset: &AffinePowerCoset,
    f1: &dyn Fn(&F2Vector) -> bool,
    j: usize,
    delta: f64,
    char_budget: u128,
) -> Result<StrategyRefinement, PartitionError> {
    assert!(delta > 0.0);
    if !coset.meets_ghz_support() {
        return Err(PartitionError::ZeroMassEvent);
    }
    let space = coset.space();
    let n = coset.reps();
    assert!(j < n);

    // Row support of player 1: the coset row, with answer bits.
    let row = coset.row_coset(0);
    let points: Vec<(F2Vector, bool)> = row.iter_points().map(|x| (f1(&x), x)).map(|(a, x)| (x, a)).collect();

    // Initial cut: pin coordinate j. The functional on coordinates is
    // gamma_l = basis_l[j].
    let pin = F2Vector::from_fn(space.dim(), |l| space.basis()[l].get(j));
    let mut current: Subspace = if pin.is_zero() {
        space.clone()
    } else {
        space.kernel_of_functionals(&[pin])
    };

    let ln2 = std::f64::consts::LN_2;
    let mut cuts: Vec<CutRecord> = Vec::new();
    let mut z_prev: Option<(f64, f64)> = None; // (z, b) of previous round
    loop {
        let d = current.dim();
        let candidates = 1u128 << d;
        if candidates > char_budget {
            return Err(PartitionError::BudgetExceeded {
                required: candidates,
                budget: char_budget,
            });
        }
        // Per point: canonical rep modulo `current` and coordinates of the
        // in-coset offset.
        let reps_and_coords: Vec<(Vec<u8>, u64)> = points
            .iter()
            .map(|(x, _)| {
                let r = current.reduce(x);
                let offset = x.xor(&r);
                let coords = current
                    .coords(&offset)
                    .expect("offset lies in the subspace")
                    .as_low_u64();
                (r.to_bytes(), coords)
            })
            .collect();
        // Bucket ids per point.
        let mut rep_ids: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let coset_rep: Vec<usize> = reps_and_coords
            .iter()
            .map(|(r, _)| {
                let next = rep_ids.len();
                *rep_ids.entry(r.clone()).or_insert(next)
            })
            .collect();
        let indexed: Vec<(usize, bool)> = reps_and_coords
            .iter()
            .zip(&points)
            .map(|((_, coords), (_, answer))| (*coords as usize, *answer))
            .collect();

        // Z potential of the current subspace.
        let (_, entropy_term) =
            character_divergence(&indexed, &coset_rep, |_| true);
        let z = d as f64 * ln2 - entropy_term;
        if z < -1e-9 {
            return Err(PartitionError::TheoremViolated {
                what: format!("negative potential {z}"),
            });
        }
        if cuts.is_empty() && z > 1.0 + 1e-9 {
            return Err(PartitionError::TheoremViolated {
                what: format!("initial potential {z} exceeds 1"),
            });
        }
        if let Some((zp, bp)) = z_prev {
            if z > zp - bp + 1e-9 {
                return Err(PartitionError::TheoremViolated {
                    what: format!("potential fell only from {zp} to {z} with gain {bp}"),
                });
            }
            if let Some(last) = cuts.last_mut() {
                last.z_after = z;
            }
        }

        // Maximizing character, lexicographically smallest coefficient
        // vector among ties.
        let mut best: Option<(f64, F2Vector)> = None;
        for g in 1..(1u64 << d) {
            let gamma = F2Vector::from_low_u64(d, g);
            let (b, _) = character_divergence(&indexed, &coset_rep, |coords| {
                (gamma.as_low_u64() & coords as u64).count_ones().is_multiple_of(2)
            });
            let better = match &best {
                None => true,
                Some((bb, bg)) => b > *bb + 1e-12 || ((b - bb).abs() <= 1e-12 && gamma < *bg),
            };
            if better {
                best = Some((b, gamma));
            }
        }
        let (b_max, gamma) = match best {
            None => (0.0, F2Vector::zeros(0)), // dim 0: no nontrivial characters
            Some(x) => x,
        };
        if b_max <= delta || d == 0 {
            let codim_in_space = space.dim() - current.dim();
            return Ok(StrategyRefinement {
                subspace: current,
                cuts,
                final_bound: b_max,
                codim_in_space,
            });
        }
        let functional = lift_functionals(&current, std::slice::from_ref(&gamma))
            .pop()
            .expect("one functional");
        cuts.push(CutRecord {
            round: cuts.len(),
            functional: functional.to_string(),
            b: b_max,
            z_before: z,
            z_after: f64::NAN,
        });
        current = current.kernel_of_functionals(&[gamma]);
        z_prev = Some((z, b_max));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2::DEFAULT_ENUM_BUDGET;

    fn span(ambient: usize, rows: &[u64]) -> Subspace {
        Subspace::from_generators(
            ambient,
            &rows
                .iter()
                .map(|&r| F2Vector::from_low_u64(ambient, r))
                .collect::<Vec<_>>(),
        )
    }

    fn zero_coset(n: usize, space: Subspace) -> AffinePowerCoset {
        AffinePowerCoset::new(
            [
                F2Vector::zeros(n),
                F2Vector::zeros(n),
                F2Vector::zeros(n),
            ],
            space,
        )
    }

    fn full_event(n: usize) -> ProductEvent {
        let all: std::collections::BTreeSet<u64> = (0..1u64 << n).collect();
        ProductEvent::new(n, [all.clone(), all.clone(), all])
    }

    #[test]
    fn gaussian_binomials() {
        assert_eq!(gaussian_binomial(4, 1).to_u128().unwrap(), 15);
        assert_eq!(gaussian_binomial(4, 2).to_u128().unwrap(), 35);
        assert_eq!(gaussian_binomial(4, 4).to_u128().unwrap(), 1);
        assert_eq!(gaussian_binomial(3, 5), BigUint::zero());
        for (d, c) in [(5, 1), (5, 2), (6, 3)] {
            assert_eq!(
                dual_subspaces(d, c).len() as u128,
                gaussian_binomial(d, c).to_u128().unwrap()
            );
        }
    }

    #[test]
    fn dual_subspaces_are_distinct_spaces() {
        let spaces: Vec<Subspace> = dual_subspaces(4, 2)
            .into_iter()
            .map(|rows| Subspace::from_generators(4, &rows))
            .collect();
        for (i, a) in spaces.iter().enumerate() {
            assert_eq!(a.dim(), 2);
            for b in &spaces[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn d_m_zero_for_equal_distributions() {
        let coset = zero_coset(2, Subspace::full(2));
        let pts = ghz_support_points(2, DEFAULT_ENUM_BUDGET).unwrap();
        let d = FiniteDist::uniform(pts.iter().map(encode_triple));
        for m in 0..=3 {
            let r = d_m_closeness(&coset, &d, &d, m, DEFAULT_KERNEL_BUDGET).unwrap();
            assert_eq!(r.value, 0.0, "at level {m}");
        }
    }

    #[test]
    fn d_m_at_full_level_is_plain_kl() {
        let coset = zero_coset(1, Subspace::full(1));
        let pts = ghz_support_points(1, DEFAULT_ENUM_BUDGET).unwrap();
        let x = FiniteDist::uniform(pts.iter().map(encode_triple));
        let xt = FiniteDist::point(encode_triple(&pts[0]));
        // m >= dim: compression is injective, value = d_KL = ln 4.
        let r = d_m_closeness(&coset, &xt, &x, 1, DEFAULT_KERNEL_BUDGET).unwrap();
        assert!((r.value - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(r.witness.kernel.dim(), 0);
        // m = 0: only the trivial compression, divergence 0.
        let r0 = d_m_closeness(&coset, &xt, &x, 0, DEFAULT_KERNEL_BUDGET).unwrap();
        assert_eq!(r0.value, 0.0);
    }

    #[test]
    fn d_m_monotone_in_level() {
        let coset = zero_coset(2, Subspace::full(2));
        let pts = ghz_support_points(2, DEFAULT_ENUM_BUDGET).unwrap();
        let x = FiniteDist::uniform(pts.iter().map(encode_triple));
        // Conditioned on first player's row being zero.
        let xt = FiniteDist::uniform(
            pts.iter()
                .filter(|p| p[0].is_zero())
                .map(encode_triple),
        );
        let mut prev = -1.0;
        for m in 0..=2 {
            let r = d_m_closeness(&coset, &xt, &x, m, DEFAULT_KERNEL_BUDGET).unwrap();
            assert!(r.value >= prev - 1e-12, "level {m} decreased");
            prev = r.value;
        }
    }

    #[test]
    fn refine_with_identity_level_zero_is_noop() {
        let p = AffinePartition::trivial(2);
        let cuts = vec![LinearWitness::canonical(p.parts()[0].space(), 0)];
        let r = refine(&p, &LinearRefiner { level: 0, cuts }).unwrap();
        assert_eq!(r.parts().len(), 1);
        assert_eq!(r.dim(), 2);
    }

    #[test]
    fn refine_full_split_gives_singletons() {
        let p = AffinePartition::trivial(1);
        let cuts = vec![LinearWitness::canonical(p.parts()[0].space(), 1)];
        let r = refine(&p, &LinearRefiner { level: 1, cuts }).unwrap();
        assert_eq!(r.parts().len(), 8);
        assert_eq!(r.dim(), 0);
        r.validate(DEFAULT_ENUM_BUDGET).unwrap();
    }

    #[test]
    fn refine_by_kernel_keeps_cover() {
        // n = 2, kernel span{11}: the single part splits into 8 cosets.
        let p = AffinePartition::trivial(2);
        let kernel = span(2, &[0b11]);
        let rows = vec![F2Vector::from_low_u64(2, 0b01)];
        let cuts = vec![LinearWitness {
            kernel,
            map_rows: rows,
        }];
        let r = refine(&p, &LinearRefiner { level: 1, cuts }).unwrap();
        assert_eq!(r.parts().len(), 8);
        assert_eq!(r.dim(), 1);
        r.validate(DEFAULT_ENUM_BUDGET).unwrap();
    }

    #[test]
    fn refine_rejects_rank_deficient_cuts() {
        let p = AffinePartition::trivial(2);
        // Kernel of the wrong dimension for level 1.
        let cuts = vec![LinearWitness {
            kernel: Subspace::full(2),
            map_rows: vec![F2Vector::zeros(2)],
        }];
        assert!(matches!(
            refine(&p, &LinearRefiner { level: 1, cuts }),
            Err(PartitionError::RankDeficient)
        ));
    }

    #[test]
    fn product_event_factorization() {
        let pts = ghz_support_points(1, DEFAULT_ENUM_BUDGET).unwrap();
        // The full support is NOT a product event (x3 = x1 ^ x2).
        assert!(matches!(
            ProductEvent::try_from_triples(1, &pts),
            Err(PartitionError::NonProductEvent)
        ));
        // A rectangle is.
        let rect: Vec<[F2Vector; 3]> = pts
            .iter()
            .filter(|p| !p[0].get(0))
            .cloned()
            .collect();
        let ev = ProductEvent::try_from_triples(1, &rect);
        // {x1 = 0} x {0,1} x {0,1} restricted to support is all four points
        // with x1 = 0... but the triples include only support points, which
        // do not form a full rectangle, so factorization fails.
        assert!(ev.is_err());
        // An explicit product event built from player sets.
        let zero: std::collections::BTreeSet<u64> = [0u64].into();
        let all: std::collections::BTreeSet<u64> = [0u64, 1].into();
        let ev = ProductEvent::new(1, [zero, all.clone(), all]);
        assert!(ev.contains(&[
            F2Vector::zeros(1),
            F2Vector::from_low_u64(1, 1),
            F2Vector::from_low_u64(1, 1)
        ]));
    }

    #[test]
    fn find_distinguisher_spec_cases() {
        let n = 1usize;
        let partition = AffinePartition::trivial(n);
        let pts = ghz_support_points(n, DEFAULT_ENUM_BUDGET).unwrap();
        let p = FiniteDist::uniform(pts.iter().map(encode_triple));

        // Identical distributions: nothing to distinguish.
        let r = find_distinguisher(&partition, &p, &p, 1, 0.01, DEFAULT_KERNEL_BUDGET).unwrap();
        assert!(r.is_none());

        // Concentrated on one point with mass 1/4 under p: the level-1
        // divergence is ln 4, so any threshold below it yields a refiner.
        let pt = FiniteDist::point(encode_triple(&pts[0]));
        let r = find_distinguisher(&partition, &pt, &p, 1, 0.5, DEFAULT_KERNEL_BUDGET)
            .unwrap()
            .expect("divergence ln 4 exceeds 0.5");
        assert_eq!(r.cuts.len(), 1);
        let refined = refine(&partition, &r).unwrap();
        assert_eq!(refined.dim(), 0);

        // An infinite threshold never triggers.
        let r =
            find_distinguisher(&partition, &pt, &p, 1, f64::INFINITY, DEFAULT_KERNEL_BUDGET)
                .unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn trivial_event_needs_no_refinement() {
        let ev = full_event(2);
        let out = pseudorandom_partition(2, &ev, 0.1, 1, DEFAULT_KERNEL_BUDGET, DEFAULT_ENUM_BUDGET)
            .unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.partition.parts().len(), 1);
        assert_eq!(out.delta_cap, 0.0);
    }

    #[test]
    fn single_point_event_refines_to_points() {
        // n = 1, E = {0} x {0} x {0}: one refinement to dimension zero.
        let zero: std::collections::BTreeSet<u64> = [0u64].into();
        let ev = ProductEvent::new(1, [zero.clone(), zero.clone(), zero]);
        let out = pseudorandom_partition(1, &ev, 0.1, 1, DEFAULT_KERNEL_BUDGET, DEFAULT_ENUM_BUDGET)
            .unwrap();
        assert_eq!(out.event_mass, Rational::new(1.into(), 4.into()));
        assert!((out.delta_cap - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(out.partition.dim(), 0);
        assert_eq!(out.final_expected_dm, 0.0);
        assert_eq!(out.trace.len(), 2);
        assert!(out.trace[0].phi > out.trace[1].phi + 0.1);
        out.partition.validate(DEFAULT_ENUM_BUDGET).unwrap();
    }

    #[test]
    fn zero_mass_event_is_rejected() {
        let empty: std::collections::BTreeSet<u64> = Default::default();
        let all: std::collections::BTreeSet<u64> = [0u64, 1].into();
        let ev = ProductEvent::new(1, [empty, all.clone(), all]);
        assert!(matches!(
            pseudorandom_partition(1, &ev, 0.1, 1, DEFAULT_KERNEL_BUDGET, DEFAULT_ENUM_BUDGET),
            Err(PartitionError::ZeroMassEvent)
        ));
    }

    #[test]
    fn strategy_refinement_constant_answer_stops_immediately() {
        let coset = zero_coset(3, Subspace::full(3));
        let f = |_: &F2Vector| false;
        let r = strategy_refinement(&coset, &f, 0, 0.05, 1 << 20).unwrap();
        assert!(r.cuts.is_empty());
        // Only the pinning cut: codimension 1.
        assert_eq!(r.codim_in_space, 1);
        assert!(r.final_bound <= 0.05);
    }

    #[test]
    fn strategy_refinement_removes_character_answer() {
        // f1 = a character not involving coordinate j: one cut removes it.
        let coset = zero_coset(3, Subspace::full(3));
        let f = |x: &F2Vector| x.get(1) ^ x.get(2);
        let r = strategy_refinement(&coset, &f, 0, 0.05, 1 << 20).unwrap();
        assert_eq!(r.cuts.len(), 1);
        assert!((r.cuts[0].b - std::f64::consts::LN_2).abs() < 1e-9);
        assert_eq!(r.codim_in_space, 2);
        // The cut functional is exactly the answer character 011.
        assert_eq!(r.cuts[0].functional, "011");
        for u in r.subspace.iter_elements() {
            assert!(!(u.get(1) ^ u.get(2)));
            assert!(!u.get(0));
        }
    }

    #[test]
    fn strategy_refinement_large_delta_never_cuts() {
        let coset = zero_coset(4, Subspace::full(4));
        let f = |x: &F2Vector| x.get(0) & x.get(1);
        let r = strategy_refinement(&coset, &f, 2, 1.0, 1 << 20).unwrap();
        // b is at most ln 2 < 1, so no cut beyond pinning ever happens.
        assert!(r.cuts.is_empty());
        assert!(r.final_bound <= std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn strategy_refinement_codim_bound() {
        // Random-ish junta answers on dimension 6; delta = 0.2 allows at
        // most ceil(1/0.2) = 5 cuts plus the pinning cut.
        let coset = zero_coset(6, Subspace::full(6));
        let f = |x: &F2Vector| {
            (x.get(0) & x.get(2)) ^ x.get(3) ^ (x.get(4) & x.get(5) & x.get(1))
        };
        let delta = 0.2;
        let r = strategy_refinement(&coset, &f, 0, delta, 1 << 20).unwrap();
        assert!(r.codim_in_space <= (1.0f64 / delta).ceil() as usize + 1);
        assert!(r.final_bound <= delta + 1e-12);
        // Z decrease was checked internally; cut records are coherent.
        for c in &r.cuts {
            assert!(c.b > delta);
            assert!(c.z_after <= c.z_before - c.b + 1e-9);
        }
    }
}
