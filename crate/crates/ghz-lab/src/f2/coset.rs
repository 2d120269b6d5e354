use std::sync::Arc;

use super::subspace::Subspace;
use super::vector::F2Vector;
use super::F2Error;

/// Default cap on coset enumeration, in elements.
pub const DEFAULT_ENUM_BUDGET: u128 = 1 << 24;

/// An affine coset `shift + space` of a subspace of F2^n, with the shift
/// held in canonical form (reduced modulo the space).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineCoset {
    shift: F2Vector,
    space: Arc<Subspace>,
}

impl AffineCoset {
    pub fn new(shift: &F2Vector, space: Arc<Subspace>) -> Self {
        let shift = space.reduce(shift);
        Self { shift, space }
    }

    pub fn shift(&self) -> &F2Vector {
        &self.shift
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<Subspace> {
        Arc::clone(&self.space)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn size(&self) -> u128 {
        self.space.size()
    }

    pub fn contains(&self, v: &F2Vector) -> bool {
        self.space.reduce(v) == self.shift
    }

    /// Element at enumeration index `idx` (shift plus the space element).
    pub fn point_at(&self, idx: u64) -> F2Vector {
        self.shift.xor(&self.space.element(idx))
    }

    pub fn iter_points(&self) -> impl Iterator<Item = F2Vector> + '_ {
        (0..1u64 << self.dim()).map(|i| self.point_at(i))
    }
}

/// The set `w + V^3` inside F2^(3 x n): an affine shift of the third power
/// of a single subspace `V <= F2^n`, with rows indexed by player.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffinePowerCoset {
    shift: [F2Vector; 3],
    space: Arc<Subspace>,
}

impl AffinePowerCoset {
    pub fn new(shift: [F2Vector; 3], space: Subspace) -> Self {
        Self::with_arc(shift, Arc::new(space))
    }

    pub fn with_arc(shift: [F2Vector; 3], space: Arc<Subspace>) -> Self {
        let shift = shift.map(|row| space.reduce(&row));
        Self { shift, space }
    }

    /// The full ambient space F2^(3 x n) as a power coset.
    pub fn full(n: usize) -> Self {
        Self::new(
            [
                F2Vector::zeros(n),
                F2Vector::zeros(n),
                F2Vector::zeros(n),
            ],
            Subspace::full(n),
        )
    }

    /// The unique coset of `space^3` containing `point`.
    pub fn containing(point: &[F2Vector; 3], space: Arc<Subspace>) -> Self {
        Self::with_arc(point.clone(), space)
    }

    pub fn reps(&self) -> usize {
        self.shift[0].len()
    }

    pub fn shift(&self) -> &[F2Vector; 3] {
        &self.shift
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<Subspace> {
        Arc::clone(&self.space)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Codimension inside F2^(3 x n).
    pub fn codim(&self) -> usize {
        3 * (self.reps() - self.dim())
    }

    pub fn size(&self) -> u128 {
        1u128 << (3 * self.dim())
    }

    pub fn contains(&self, x: &[F2Vector; 3]) -> bool {
        (0..3).all(|i| self.space.reduce(&x[i]) == self.shift[i])
    }

    /// Row coset of a single player.
    pub fn row_coset(&self, player: usize) -> AffineCoset {
        AffineCoset::new(&self.shift[player], Arc::clone(&self.space))
    }

    /// Enumerates every element of `w + V^3` exactly once.
    pub fn enumerate(
        &self,
        budget: u128,
    ) -> Result<impl Iterator<Item = [F2Vector; 3]> + '_, F2Error> {
        let required = self.size();
        if required > budget {
            return Err(F2Error::BudgetExceeded { required, budget });
        }
        let d = self.dim() as u64;
        Ok((0..1u64 << (3 * d)).map(move |idx| {
            let mask = (1u64 << d) - 1;
            [
                self.shift[0].xor(&self.space.element(idx & mask)),
                self.shift[1].xor(&self.space.element(idx >> d & mask)),
                self.shift[2].xor(&self.space.element(idx >> (2 * d) & mask)),
            ]
        }))
    }

    /// Whether the coset meets `{x : x_1 + x_2 + x_3 = 0}`. This holds
    /// exactly when the XOR of the three shift rows lies in the space.
    pub fn meets_ghz_support(&self) -> bool {
        let mut s = self.shift[0].clone();
        s.xor_assign(&self.shift[1]);
        s.xor_assign(&self.shift[2]);
        self.space.contains(&s)
    }

    /// The intersection of the coset with `{x : x_1 + x_2 + x_3 = 0}`,
    /// parameterized by two free rows; it has exactly `|V|^2` points when
    /// nonempty. Returns `None` when the intersection is empty.
    pub fn ghz_support(&self, budget: u128) -> Result<Option<Vec<[F2Vector; 3]>>, F2Error> {
        if !self.meets_ghz_support() {
            return Ok(None);
        }
        let required = 1u128 << (2 * self.dim());
        if required > budget {
            return Err(F2Error::BudgetExceeded { required, budget });
        }
        let mut s = self.shift[0].clone();
        s.xor_assign(&self.shift[1]);
        s.xor_assign(&self.shift[2]);
        // x = (w1 + a, w2 + b, w3 + s + a + b) runs over the support as
        // (a, b) runs over V^2.
        let mut out = Vec::with_capacity(required as usize);
        for a in self.space.iter_elements() {
            let x1 = self.shift[0].xor(&a);
            for b in self.space.iter_elements() {
                let x2 = self.shift[1].xor(&b);
                let mut x3 = self.shift[2].xor(&s);
                x3.xor_assign(&a);
                x3.xor_assign(&b);
                out.push([x1.clone(), x2, x3]);
            }
        }
        Ok(Some(out))
    }
}

/// Packs a triple of rows into a canonical byte key (row 1, then 2, then 3).
pub fn encode_triple(x: &[F2Vector; 3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(3 * x[0].len().div_ceil(8));
    for row in x {
        out.extend_from_slice(&row.to_bytes());
    }
    out
}

/// Inverse of [`encode_triple`] for rows of length `n`.
pub fn decode_triple(bytes: &[u8], n: usize) -> [F2Vector; 3] {
    let stride = n.div_ceil(8);
    assert_eq!(bytes.len(), 3 * stride, "bad triple encoding");
    let decode_row = |chunk: &[u8]| {
        F2Vector::from_fn(n, |i| chunk[i / 8] >> (i % 8) & 1 == 1)
    };
    [
        decode_row(&bytes[..stride]),
        decode_row(&bytes[stride..2 * stride]),
        decode_row(&bytes[2 * stride..]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(ambient: usize, rows: &[u64]) -> Subspace {
        Subspace::from_generators(
            ambient,
            &rows
                .iter()
                .map(|&r| F2Vector::from_low_u64(ambient, r))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn point_coset_enumerates_itself() {
        let w = [
            F2Vector::from_low_u64(3, 0b101),
            F2Vector::from_low_u64(3, 0b010),
            F2Vector::from_low_u64(3, 0b111),
        ];
        let c = AffinePowerCoset::new(w.clone(), Subspace::zero(3));
        let pts: Vec<_> = c.enumerate(DEFAULT_ENUM_BUDGET).unwrap().collect();
        assert_eq!(pts, vec![w]);
    }

    #[test]
    fn full_space_n1_has_eight_triples() {
        let c = AffinePowerCoset::full(1);
        let pts: Vec<_> = c.enumerate(DEFAULT_ENUM_BUDGET).unwrap().collect();
        assert_eq!(pts.len(), 8);
    }

    #[test]
    fn diagonal_coset_rows_stay_in_line() {
        // n = 2, V = span{11}, w = 0: each row is 00 or 11, eight triples total.
        let c = AffinePowerCoset::new(
            [F2Vector::zeros(2), F2Vector::zeros(2), F2Vector::zeros(2)],
            span(2, &[0b11]),
        );
        let pts: Vec<_> = c.enumerate(DEFAULT_ENUM_BUDGET).unwrap().collect();
        assert_eq!(pts.len(), 8);
        for p in &pts {
            for row in p {
                assert!(row.is_zero() || row == &F2Vector::from_low_u64(2, 0b11));
            }
        }
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let c = AffinePowerCoset::full(3);
        let err = c.enumerate(100).err().unwrap();
        assert_eq!(
            err,
            F2Error::BudgetExceeded {
                required: 512,
                budget: 100
            }
        );
    }

    #[test]
    fn ghz_support_matches_filtered_enumeration() {
        let space = span(3, &[0b011, 0b101]);
        let w = [
            F2Vector::from_low_u64(3, 0b001),
            F2Vector::from_low_u64(3, 0b010),
            F2Vector::from_low_u64(3, 0b100),
        ];
        let c = AffinePowerCoset::new(w, space);
        let by_filter: Vec<_> = c
            .enumerate(DEFAULT_ENUM_BUDGET)
            .unwrap()
            .filter(|x| {
                let mut s = x[0].clone();
                s.xor_assign(&x[1]);
                s.xor_assign(&x[2]);
                s.is_zero()
            })
            .map(|x| encode_triple(&x))
            .collect();
        let support = c.ghz_support(DEFAULT_ENUM_BUDGET).unwrap();
        match support {
            None => assert!(by_filter.is_empty()),
            Some(pts) => {
                let mut keys: Vec<_> = pts.iter().map(encode_triple).collect();
                let mut expect = by_filter.clone();
                keys.sort();
                expect.sort();
                assert_eq!(keys, expect);
                assert_eq!(pts.len() as u128, 1u128 << (2 * c.dim()));
            }
        }
    }

    #[test]
    fn empty_ghz_intersection_detected() {
        // Shift rows XOR to a vector outside the space.
        let space = span(2, &[0b01]);
        let c = AffinePowerCoset::new(
            [
                F2Vector::from_low_u64(2, 0b10),
                F2Vector::zeros(2),
                F2Vector::zeros(2),
            ],
            space,
        );
        assert!(!c.meets_ghz_support());
        assert_eq!(c.ghz_support(DEFAULT_ENUM_BUDGET).unwrap(), None);
    }

    #[test]
    fn canonical_shift_makes_cosets_comparable() {
        let space = span(2, &[0b11]);
        let a = AffinePowerCoset::new(
            [
                F2Vector::from_low_u64(2, 0b01),
                F2Vector::zeros(2),
                F2Vector::zeros(2),
            ],
            space.clone(),
        );
        let b = AffinePowerCoset::new(
            [
                F2Vector::from_low_u64(2, 0b10),
                F2Vector::from_low_u64(2, 0b11),
                F2Vector::zeros(2),
            ],
            space,
        );
        assert_eq!(a, b);
    }

    #[test]
    fn triple_encoding_round_trips() {
        let x = [
            F2Vector::from_low_u64(10, 0b1100110011),
            F2Vector::from_low_u64(10, 0b0000000001),
            F2Vector::from_low_u64(10, 0b1111111111),
        ];
        assert_eq!(decode_triple(&encode_triple(&x), 10), x);
    }
}
