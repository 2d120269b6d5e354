use super::subspace::Subspace;
use super::vector::F2Vector;
use super::F2Error;

/// A matrix over F2, stored as a list of equal-length rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct F2Matrix {
    rows: Vec<F2Vector>,
    ncols: usize,
}

/// Outcome of row reduction: the nonzero rows of the reduced row-echelon
/// form together with their pivot columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub matrix: F2Matrix,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl F2Matrix {
    pub fn new(ncols: usize, rows: Vec<F2Vector>) -> Self {
        assert!(
            rows.iter().all(|r| r.len() == ncols),
            "all rows must have {ncols} columns"
        );
        Self { rows, ncols }
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        Self {
            rows: vec![F2Vector::zeros(ncols); nrows],
            ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n).map(|i| F2Vector::unit(n, i)).collect(),
            ncols: n,
        }
    }

    /// Builds a matrix from rows given as low bits of integers.
    pub fn from_low_u64_rows(ncols: usize, rows: &[u64]) -> Self {
        Self::new(
            ncols,
            rows.iter()
                .map(|&r| F2Vector::from_low_u64(ncols, r))
                .collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[F2Vector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &F2Vector {
        &self.rows[i]
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut out = F2Matrix::zero(self.ncols, self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            for j in 0..self.ncols {
                if row.get(j) {
                    out.rows[j].set(i, true);
                }
            }
        }
        out
    }

    /// Row-vector times matrix: `x * self`, where `x` has `nrows()`
    /// coordinates and the result has `ncols()`.
    pub fn left_mul(&self, x: &F2Vector) -> F2Vector {
        assert_eq!(x.len(), self.nrows(), "length mismatch");
        let mut acc = F2Vector::zeros(self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            if x.get(i) {
                acc.xor_assign(row);
            }
        }
        acc
    }

    /// Reduced row-echelon form. Zero rows are dropped, so the returned
    /// matrix is a canonical basis of the row space.
    pub fn rref(&self) -> Rref {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut next = 0usize;
        for col in 0..self.ncols {
            let Some(pivot_row) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(next, pivot_row);
            let pivot = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != next && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivots.push(col);
            next += 1;
            if next == rows.len() {
                break;
            }
        }
        rows.truncate(next);
        Rref {
            matrix: F2Matrix::new(self.ncols, rows),
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank()
    }
}

/// Basis of the left kernel `{x : x * a = 0}` as a canonical subspace of
/// the row space F2^(1 x nrows).
#[allow(clippy::needless_range_loop)]
pub fn left_kernel_basis(a: &F2Matrix) -> Subspace {
    let n = a.nrows();
    // x * a = 0 iff a^T x^T = 0, so reduce a^T and read off free columns.
    let reduced = a.transpose().rref();
    let pivot_set: Vec<usize> = reduced.pivots.clone();
    let is_pivot = {
        let mut flags = vec![false; n];
        for &p in &pivot_set {
            flags[p] = true;
        }
        flags
    };
    let mut generators = Vec::new();
    for free in 0..n {
        if is_pivot[free] {
            continue;
        }
        let mut v = F2Vector::zeros(n);
        v.set(free, true);
        for (r, &p) in pivot_set.iter().enumerate() {
            if reduced.matrix.row(r).get(free) {
                v.set(p, true);
            }
        }
        generators.push(v);
    }
    Subspace::from_generators(n, &generators)
}

/// Finds a nonempty index set `s` within the first `limit` rows of `a`
/// whose rows XOR to zero.
///
/// When `limit` exceeds the column count such a set always exists by
/// pigeonhole. The choice is deterministic: the support of the
/// lexicographically smallest basis vector of the restricted left kernel.
pub fn subset_sum_zero(a: &F2Matrix, limit: usize) -> Result<Vec<usize>, F2Error> {
    assert!(limit <= a.nrows(), "limit {limit} exceeds row count");
    let restricted = F2Matrix::new(a.ncols(), a.rows()[..limit].to_vec());
    let kernel = left_kernel_basis(&restricted);
    let witness = kernel
        .basis()
        .iter()
        .min()
        .ok_or(F2Error::NoZeroSubset { limit })?;
    Ok(witness.support())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_drops_duplicate_rows() {
        let m = F2Matrix::from_low_u64_rows(2, &[0b11, 0b11]);
        let r = m.rref();
        assert_eq!(r.rank(), 1);
        assert_eq!(r.matrix.rows(), &[F2Vector::from_low_u64(2, 0b11)]);
    }

    #[test]
    fn rref_identity_is_fixed() {
        let m = F2Matrix::identity(3);
        let r = m.rref();
        assert_eq!(r.rank(), 3);
        assert_eq!(r.matrix, m);
    }

    #[test]
    fn rref_detects_dependent_row() {
        // Third row is the sum of the first two. Expected rank computed by
        // brute force over all row subsets: no single row is zero, rows are
        // pairwise distinct, and the full XOR vanishes, so rank is 2.
        let m = F2Matrix::from_low_u64_rows(3, &[0b101, 0b110, 0b011]);
        let r = m.rref();
        assert_eq!(r.rank(), 2);
        // Independent check: every original row reduces to zero against the basis.
        let space = Subspace::from_generators(3, m.rows());
        assert_eq!(space.dim(), 2);
        for row in m.rows() {
            assert!(space.contains(row));
        }
    }

    #[test]
    fn rref_is_idempotent() {
        let m = F2Matrix::from_low_u64_rows(4, &[0b1011, 0b0111, 0b1100, 0b0001]);
        let r = m.rref();
        let r2 = r.matrix.rref();
        assert_eq!(r.matrix, r2.matrix);
        assert_eq!(r.pivots, r2.pivots);
    }

    #[test]
    fn left_kernel_equal_rows() {
        // Two equal rows cancel: kernel contains (1,1).
        let a = F2Matrix::from_low_u64_rows(1, &[1, 1]);
        let k = left_kernel_basis(&a);
        assert!(k.contains(&F2Vector::from_bits(&[true, true])));
    }

    #[test]
    fn left_kernel_of_identity_is_trivial() {
        let a = F2Matrix::identity(4);
        assert_eq!(left_kernel_basis(&a).dim(), 0);
    }

    #[test]
    fn left_kernel_small_example() {
        // Checked by enumerating all 8 vectors: only (1,1,1) and 0 satisfy x*a = 0.
        let a = F2Matrix::from_low_u64_rows(2, &[0b01, 0b10, 0b11]);
        let k = left_kernel_basis(&a);
        assert_eq!(k.dim(), 1);
        assert!(k.contains(&F2Vector::from_bits(&[true, true, true])));
    }

    #[test]
    fn left_kernel_contains_only_kernel_vectors() {
        let a = F2Matrix::from_low_u64_rows(3, &[0b001, 0b011, 0b111, 0b100]);
        let k = left_kernel_basis(&a);
        for idx in 0..(1u64 << 4) {
            let x = F2Vector::from_low_u64(4, idx);
            let in_kernel = a.left_mul(&x).is_zero();
            assert_eq!(k.contains(&x), in_kernel, "x = {x}");
        }
    }

    #[test]
    fn subset_sum_zero_equal_rows() {
        let a = F2Matrix::from_low_u64_rows(1, &[1, 1]);
        assert_eq!(subset_sum_zero(&a, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn subset_sum_zero_prefers_zero_row() {
        let a = F2Matrix::from_low_u64_rows(2, &[0b00, 0b01, 0b10]);
        assert_eq!(subset_sum_zero(&a, 3).unwrap(), vec![0]);
    }

    #[test]
    fn subset_sum_zero_full_triple() {
        // All 7 nonempty subsets checked by hand: only {0,1,2} sums to zero.
        let a = F2Matrix::from_low_u64_rows(2, &[0b01, 0b10, 0b11]);
        assert_eq!(subset_sum_zero(&a, 3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn subset_sum_zero_reports_missing_witness() {
        let a = F2Matrix::identity(3);
        assert_eq!(
            subset_sum_zero(&a, 2),
            Err(F2Error::NoZeroSubset { limit: 2 })
        );
    }

    #[test]
    fn subset_sum_zero_result_sums_to_zero() {
        let a = F2Matrix::from_low_u64_rows(3, &[0b101, 0b110, 0b011, 0b111, 0b001]);
        let s = subset_sum_zero(&a, 5).unwrap();
        let mut acc = F2Vector::zeros(3);
        for &j in &s {
            acc.xor_assign(a.row(j));
        }
        assert!(acc.is_zero());
        assert!(!s.is_empty());
    }
}
