use std::cmp::Ordering;
use std::fmt;

const WORD_BITS: usize = 64;

/// A bit-packed vector over F2.
///
/// Addition is XOR, so every vector is its own negative. Storage bits
/// beyond `len` are kept at zero, which lets equality and hashing work
/// directly on the packed words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F2Vector {
    len: usize,
    words: Vec<u64>,
}

impl F2Vector {
    /// The zero vector with `len` coordinates.
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    /// Unit vector with a single one at `pos`.
    pub fn unit(len: usize, pos: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(pos, true);
        v
    }

    /// Builds a vector from explicit coordinate bits.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector of length `len` whose low coordinates come from the
    /// bits of `value` (bit `i` of `value` becomes coordinate `i`).
    pub fn from_low_u64(len: usize, value: u64) -> Self {
        assert!(len >= 64 || value >> len == 0, "value has bits beyond len");
        let mut v = Self::zeros(len);
        if !v.words.is_empty() {
            v.words[0] = value;
        }
        v
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, pos: usize) -> bool {
        assert!(pos < self.len, "coordinate {pos} out of range {}", self.len);
        self.words[pos / WORD_BITS] >> (pos % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, pos: usize, bit: bool) {
        assert!(pos < self.len, "coordinate {pos} out of range {}", self.len);
        let mask = 1u64 << (pos % WORD_BITS);
        if bit {
            self.words[pos / WORD_BITS] |= mask;
        } else {
            self.words[pos / WORD_BITS] &= !mask;
        }
    }

    /// In-place XOR addition.
    #[inline]
    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Returns `self + other` (XOR).
    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over F2: parity of the AND of the two bit sequences.
    #[inline]
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch");
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the first nonzero coordinate, if any.
    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * WORD_BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of the nonzero coordinates, in increasing order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// The low 64 coordinates as an integer (bit `i` = coordinate `i`).
    pub fn as_low_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    /// Canonical byte encoding: little-endian packed bits, minimal length.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for i in 0..nbytes {
            let w = self.words[i / 8];
            out.push((w >> ((i % 8) * 8)) as u8);
        }
        out
    }
}

/// Coordinate-lexicographic order: coordinate 0 is compared first, 0 < 1.
impl Ord for F2Vector {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.len, other.len, "comparing vectors of unequal length");
        for (a, b) in self.words.iter().zip(&other.words) {
            if a != b {
                return a.reverse_bits().cmp(&b.reverse_bits());
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for F2Vector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F2Vector({self})")
    }
}

impl fmt::Display for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_plus_self_is_zero() {
        let v = F2Vector::from_bits(&[true, false, true, true]);
        assert!(v.xor(&v).is_zero());
    }

    #[test]
    fn dot_is_parity_of_and() {
        let a = F2Vector::from_bits(&[true, true, false]);
        let b = F2Vector::from_bits(&[true, true, true]);
        assert!(!a.dot(&b)); // two overlapping ones
        let c = F2Vector::from_bits(&[true, false, false]);
        assert!(a.dot(&c));
    }

    #[test]
    fn lex_order_compares_coordinate_zero_first() {
        let a = F2Vector::from_bits(&[false, true]); // 01
        let b = F2Vector::from_bits(&[true, false]); // 10
        assert!(a < b);
        let c = F2Vector::from_bits(&[false, false]);
        assert!(c < a);
    }

    #[test]
    fn bytes_round_trip_unique() {
        let a = F2Vector::from_low_u64(12, 0b1010_1100_0011);
        let b = F2Vector::from_low_u64(12, 0b1010_1100_0010);
        assert_ne!(a.to_bytes(), b.to_bytes());
        assert_eq!(a.to_bytes().len(), 2);
    }

    #[test]
    fn trailing_bits_stay_zero() {
        let mut v = F2Vector::zeros(3);
        v.set(2, true);
        let w = F2Vector::from_low_u64(3, 0b100);
        assert_eq!(v, w);
        assert_eq!(v.as_low_u64(), 0b100);
    }

    #[test]
    fn multiword_vectors() {
        let mut v = F2Vector::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.support(), vec![0, 64, 129]);
        assert_eq!(v.count_ones(), 3);
        let w = v.xor(&F2Vector::unit(130, 64));
        assert_eq!(w.support(), vec![0, 129]);
    }
}
