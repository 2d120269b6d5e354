use super::matrix::{left_kernel_basis, F2Matrix};
use super::vector::F2Vector;
use super::F2Error;

/// A linear subspace of F2^n, represented by its reduced row-echelon basis.
///
/// The representation is canonical: two subspaces are equal as sets exactly
/// when their `Subspace` values are equal, so subspaces can be hashed,
/// compared, and used as map keys.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<F2Vector>,
    pivots: Vec<usize>,
}

impl Subspace {
    /// Span of the given generators, reduced to canonical form.
    pub fn from_generators(ambient: usize, generators: &[F2Vector]) -> Self {
        let reduced = F2Matrix::new(ambient, generators.to_vec()).rref();
        Self {
            ambient,
            basis: reduced.matrix.rows().to_vec(),
            pivots: reduced.pivots,
        }
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: (0..ambient).map(|i| F2Vector::unit(ambient, i)).collect(),
            pivots: (0..ambient).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn codim(&self) -> usize {
        self.ambient - self.dim()
    }

    pub fn basis(&self) -> &[F2Vector] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Canonical representative of `v` modulo this subspace: eliminate
    /// every pivot coordinate against the basis. The map is linear and
    /// idempotent, and `reduce(v) == reduce(w)` iff `v + w` is in the space.
    pub fn reduce(&self, v: &F2Vector) -> F2Vector {
        assert_eq!(v.len(), self.ambient, "ambient dimension mismatch");
        let mut out = v.clone();
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            if out.get(p) {
                out.xor_assign(row);
            }
        }
        out
    }

    pub fn contains(&self, v: &F2Vector) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && self.basis.iter().all(|b| other.contains(b))
    }

    /// Coordinates of `v` with respect to the canonical basis. `None` when
    /// `v` lies outside the space. For an RREF basis the coordinate of
    /// basis row `i` is just the bit of `v` at pivot `i`.
    pub fn coords(&self, v: &F2Vector) -> Option<F2Vector> {
        if !self.contains(v) {
            return None;
        }
        Some(F2Vector::from_fn(self.dim(), |i| v.get(self.pivots[i])))
    }

    /// Linear combination of the basis selected by `coords`.
    pub fn from_coords(&self, coords: &F2Vector) -> F2Vector {
        assert_eq!(coords.len(), self.dim(), "coordinate length mismatch");
        let mut acc = F2Vector::zeros(self.ambient);
        for (i, row) in self.basis.iter().enumerate() {
            if coords.get(i) {
                acc.xor_assign(row);
            }
        }
        acc
    }

    /// The element whose coordinate bits are the low bits of `index`.
    /// Enumerating `index` over `0..2^dim` visits every element once.
    pub fn element(&self, index: u64) -> F2Vector {
        assert!(self.dim() >= 64 || index >> self.dim() == 0);
        let mut acc = F2Vector::zeros(self.ambient);
        for (i, row) in self.basis.iter().enumerate() {
            if index >> i & 1 == 1 {
                acc.xor_assign(row);
            }
        }
        acc
    }

    pub fn size(&self) -> u128 {
        1u128 << self.dim()
    }

    /// Iterates over all `2^dim` elements. Intended for small dimensions;
    /// callers enforce their own budgets.
    pub fn iter_elements(&self) -> impl Iterator<Item = F2Vector> + '_ {
        assert!(self.dim() < 64, "dimension too large to enumerate");
        (0..1u64 << self.dim()).map(|idx| self.element(idx))
    }

    /// Orthogonal complement `{u : u . v = 0 for all v in self}`.
    pub fn orthogonal_complement(&self) -> Subspace {
        // u is orthogonal to the row space iff u is in the left kernel of
        // the transposed basis matrix.
        let basis_matrix = F2Matrix::new(self.ambient, self.basis.clone()).transpose();
        left_kernel_basis(&basis_matrix)
    }

    /// The subspace `{v in self : gamma . coords(v) = 0 for all gamma}`,
    /// i.e. the common kernel of coordinate-space functionals.
    pub fn kernel_of_functionals(&self, functionals: &[F2Vector]) -> Subspace {
        let d = self.dim();
        if d == 0 {
            return self.clone();
        }
        // Coordinate vectors c with M c^T = 0, where M rows are the functionals.
        let m = F2Matrix::new(d, functionals.to_vec()).transpose();
        let coord_kernel = left_kernel_basis(&m);
        let generators: Vec<F2Vector> = coord_kernel
            .basis()
            .iter()
            .map(|c| self.from_coords(c))
            .collect();
        Subspace::from_generators(self.ambient, &generators)
    }

    /// A basis of `self` modulo `sub`: vectors of `self` that extend a basis
    /// of `sub`, each reduced to canonical form modulo `sub`.
    pub fn complement_basis_mod(&self, sub: &Subspace) -> Result<Vec<F2Vector>, F2Error> {
        if !sub.is_subspace_of(self) {
            return Err(F2Error::NotSubspaceOf);
        }
        let mut partial = sub.clone();
        let mut complement = Vec::new();
        for b in &self.basis {
            let r = partial.reduce(b);
            if !r.is_zero() {
                complement.push(sub.reduce(&r));
                let mut gens = partial.basis.clone();
                gens.push(r);
                partial = Subspace::from_generators(self.ambient, &gens);
            }
        }
        debug_assert_eq!(complement.len(), self.dim() - sub.dim());
        Ok(complement)
    }
}

/// Canonical representatives of the cosets of `sub` inside `space`:
/// exactly `2^(dim space - dim sub)` vectors, one per coset, each reduced
/// modulo `sub`.
pub fn coset_reps(space: &Subspace, sub: &Subspace) -> Result<Vec<F2Vector>, F2Error> {
    let complement = space.complement_basis_mod(sub)?;
    let k = complement.len();
    assert!(k < 64, "quotient too large to enumerate");
    let mut reps = Vec::with_capacity(1 << k);
    for idx in 0..1u64 << k {
        let mut acc = F2Vector::zeros(space.ambient_dim());
        for (i, c) in complement.iter().enumerate() {
            if idx >> i & 1 == 1 {
                acc.xor_assign(c);
            }
        }
        // Reduction mod an RREF basis is linear, so a sum of reduced
        // vectors is already reduced; keep the explicit call as the contract.
        reps.push(sub.reduce(&acc));
    }
    Ok(reps)
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
    fn canonical_basis_ignores_generator_order() {
        let a = span(4, &[0b0011, 0b0110, 0b1100]);
        let b = span(4, &[0b1100, 0b0011, 0b0110, 0b1010]);
        // 1010 = 0110 + 1100, so the spans agree.
        assert_eq!(a, b);
    }

    #[test]
    fn reduce_is_linear_and_idempotent() {
        let v = span(5, &[0b00111, 0b11010]);
        let x = F2Vector::from_low_u64(5, 0b10101);
        let y = F2Vector::from_low_u64(5, 0b01110);
        let rx = v.reduce(&x);
        assert_eq!(v.reduce(&rx), rx);
        assert_eq!(v.reduce(&x.xor(&y)), rx.xor(&v.reduce(&y)));
    }

    #[test]
    fn coords_round_trip() {
        let v = span(6, &[0b001011, 0b010110, 0b100001]);
        for idx in 0..v.size() as u64 {
            let e = v.element(idx);
            let c = v.coords(&e).unwrap();
            assert_eq!(v.from_coords(&c), e);
        }
        assert_eq!(v.coords(&F2Vector::unit(6, 5)), None);
    }

    #[test]
    fn quotient_of_space_by_itself() {
        let v = span(2, &[0b01, 0b10]);
        let reps = coset_reps(&v, &v).unwrap();
        assert_eq!(reps, vec![F2Vector::zeros(2)]);
    }

    #[test]
    fn quotient_by_zero_space() {
        let v = Subspace::full(2);
        let reps = coset_reps(&v, &Subspace::zero(2)).unwrap();
        assert_eq!(reps.len(), 4);
    }

    #[test]
    fn quotient_two_cosets() {
        // F2^2 / span{11}: two cosets, with representatives {00, 10} after
        // bucketing all four vectors by reduce().
        let v = Subspace::full(2);
        let u = span(2, &[0b11]);
        let reps = coset_reps(&v, &u).unwrap();
        assert_eq!(reps.len(), 2);
        let mut seen: Vec<F2Vector> = Vec::new();
        for x in v.iter_elements() {
            let r = u.reduce(&x);
            assert!(reps.contains(&r));
            if !seen.contains(&r) {
                seen.push(r);
            }
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn coset_reps_cover_without_overlap() {
        // Full cover, no overlap, checked by enumeration.
        let v = span(6, &[0b000111, 0b011010, 0b101100]);
        let u = span(6, &[0b000111]);
        assert!(u.is_subspace_of(&v));
        let reps = coset_reps(&v, &u).unwrap();
        assert_eq!(reps.len(), 4);
        let mut covered = std::collections::BTreeSet::new();
        for rep in &reps {
            for u_el in u.iter_elements() {
                let x = rep.xor(&u_el);
                assert!(v.contains(&x));
                assert!(covered.insert(x.to_bytes()), "overlap at {rep}");
            }
        }
        assert_eq!(covered.len() as u128, v.size());
    }

    #[test]
    fn rejects_non_subspace_quotient() {
        let v = span(3, &[0b011]);
        let u = span(3, &[0b100]);
        assert_eq!(coset_reps(&v, &u), Err(F2Error::NotSubspaceOf));
    }

    #[test]
    fn orthogonal_complement_dimensions() {
        let v = span(5, &[0b00111, 0b11010]);
        let c = v.orthogonal_complement();
        assert_eq!(c.dim(), 3);
        for b in v.basis() {
            for u in c.basis() {
                assert!(!b.dot(u));
            }
        }
        // Double complement returns the original canonical space.
        assert_eq!(c.orthogonal_complement(), v);
    }

    #[test]
    fn kernel_of_functionals_cuts_dimension() {
        let v = Subspace::full(4);
        // Functional gamma = 1000 on coordinates: kernel is {x : x_0 = 0}.
        let k = v.kernel_of_functionals(&[F2Vector::from_low_u64(4, 0b0001)]);
        assert_eq!(k.dim(), 3);
        for x in k.iter_elements() {
            assert!(!x.get(0));
        }
    }
}
