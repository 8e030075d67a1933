//! Exact sparse linear algebra over the prime field `F_p`.
//!
//! Residues are stored as `u64` values in `[0, p)`. Matrices are coordinate
//! lists of nonzero entries; subspaces are kept in reduced row-echelon form,
//! so equal subspaces have identical representations. Pivoting is
//! deterministic (lowest column index, then lowest row index) to keep every
//! downstream basis reproducible.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FpError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("matrix entry at ({0}, {1}) is out of bounds, zero, or duplicated")]
    BadEntry(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a subspace of the claimed superspace")]
    NotASubspace,
}

/// The field `F_p`. Primality is checked at construction by trial division.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FpError> {
        if p < 2 {
            return Err(FpError::NotPrime(p));
        }
        let mut d = 2u64;
        while d * d <= p {
            if p % d == 0 {
                return Err(FpError::NotPrime(p));
            }
            d += 1;
        }
        Ok(PrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Reduce an arbitrary signed integer into `[0, p)`.
    pub fn reduce(&self, n: i64) -> u64 {
        let p = self.p as i64;
        (((n % p) + p) % p) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero residue.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }

    /// `(-1)^parity` as a residue.
    pub fn sign(&self, parity: u32) -> u64 {
        if parity % 2 == 0 {
            1
        } else {
            self.p - 1
        }
    }
}

/// A sparse matrix over `F_p`: a sorted list of `(row, col, value)` triples
/// with values in `[1, p-1]` and no duplicate positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, u64)>,
}

impl SparseMatrix {
    pub fn new(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, u64)>,
    ) -> Result<Self, FpError> {
        entries.sort_unstable();
        for (i, &(r, c, v)) in entries.iter().enumerate() {
            if r >= rows || c >= cols || v == 0 || v >= field.p() {
                return Err(FpError::BadEntry(r, c));
            }
            if i > 0 && entries[i - 1].0 == r && entries[i - 1].1 == c {
                return Err(FpError::BadEntry(r, c));
            }
        }
        Ok(SparseMatrix {
            field,
            rows,
            cols,
            entries,
        })
    }

    /// Build from possibly-duplicated, unreduced contributions; duplicates
    /// are summed mod p and zeros dropped.
    pub fn from_accumulated(
        field: PrimeField,
        rows: usize,
        cols: usize,
        contributions: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Self {
        let mut acc: std::collections::BTreeMap<(usize, usize), u64> = Default::default();
        for (r, c, v) in contributions {
            assert!(r < rows && c < cols, "entry out of bounds");
            let slot = acc.entry((r, c)).or_insert(0);
            *slot = field.add(*slot, v % field.p());
        }
        let entries = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        SparseMatrix {
            field,
            rows,
            cols,
            entries,
        }
    }

    pub fn zero(field: PrimeField, rows: usize, cols: usize) -> Self {
        SparseMatrix {
            field,
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        SparseMatrix {
            field,
            rows: n,
            cols: n,
            entries: (0..n).map(|i| (i, i, 1)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, u64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<u64>> {
        let mut dense = vec![vec![0u64; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            dense[r][c] = v;
        }
        dense
    }

    /// Matrix-vector product `self * v`.
    pub fn apply(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        let mut out = vec![0u64; self.rows];
        for &(r, c, val) in &self.entries {
            out[r] = self.field.add(out[r], self.field.mul(val, v[c]));
        }
        out
    }

    /// Composition `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &SparseMatrix) -> Result<SparseMatrix, FpError> {
        if self.cols != rhs.rows {
            return Err(FpError::DimensionMismatch(format!(
                "compose: {}x{} with {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut by_col: Vec<Vec<(usize, u64)>> = vec![Vec::new(); self.cols];
        for &(r, c, v) in &self.entries {
            by_col[c].push((r, v));
        }
        let mut acc: std::collections::BTreeMap<(usize, usize), u64> = Default::default();
        for &(k, j, b) in &rhs.entries {
            for &(i, a) in &by_col[k] {
                let slot = acc.entry((i, j)).or_insert(0);
                *slot = self.field.add(*slot, self.field.mul(a, b));
            }
        }
        let entries = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(SparseMatrix {
            field: self.field,
            rows: self.rows,
            cols: rhs.cols,
            entries,
        })
    }

    /// Rank over `F_p`.
    pub fn rank(&self) -> usize {
        let mut dense = self.to_dense_rows();
        rref_in_place(self.field, &mut dense).len()
    }

    /// Canonical echelon basis of `{v : self * v = 0}`.
    pub fn kernel(&self) -> Subspace {
        let f = self.field;
        let mut dense = self.to_dense_rows();
        let pivots = rref_in_place(f, &mut dense);
        let pivot_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut v = vec![0u64; self.cols];
            v[free] = 1;
            for (row, &pcol) in pivots.iter().enumerate() {
                v[pcol] = f.neg(dense[row][free]);
            }
            basis.push(v);
        }
        Subspace::from_vectors(f, self.cols, basis)
    }
}

/// Reduced row echelon form in place. Returns pivot columns in increasing
/// order; zero rows are removed. Pivot choice: lowest column, then lowest
/// row index among the remaining rows.
pub fn rref_in_place(field: PrimeField, rows: &mut Vec<Vec<u64>>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut next_row = 0usize;
    for col in 0..ncols {
        let Some(pivot_row) = (next_row..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(next_row, pivot_row);
        let inv = field.inv(rows[next_row][col]);
        for x in rows[next_row].iter_mut() {
            *x = field.mul(*x, inv);
        }
        for r in 0..rows.len() {
            if r != next_row && rows[r][col] != 0 {
                let factor = rows[r][col];
                let (head, tail) = rows.split_at_mut(std::cmp::max(r, next_row));
                let (src, dst) = if r < next_row {
                    (&tail[0], &mut head[r])
                } else {
                    (&head[next_row], &mut tail[0])
                };
                for (x, &s) in dst.iter_mut().zip(src.iter()) {
                    *x = field.sub(*x, field.mul(factor, s));
                }
            }
        }
        pivots.push(col);
        next_row += 1;
        if next_row == rows.len() {
            break;
        }
    }
    rows.truncate(next_row);
    pivots
}

/// A subspace of `F_p^ambient`, stored as a reduced echelon basis (the
/// canonical representative of the subspace).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    field: PrimeField,
    ambient: usize,
    basis: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn from_vectors(field: PrimeField, ambient: usize, vectors: Vec<Vec<u64>>) -> Self {
        for v in &vectors {
            assert_eq!(v.len(), ambient, "vector length mismatch");
        }
        let mut rows = vectors;
        let pivots = rref_in_place(field, &mut rows);
        Subspace {
            field,
            ambient,
            basis: rows,
            pivots,
        }
    }

    pub fn zero(field: PrimeField, ambient: usize) -> Self {
        Subspace {
            field,
            ambient,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(field: PrimeField, ambient: usize) -> Self {
        let basis = (0..ambient)
            .map(|i| {
                let mut v = vec![0u64; ambient];
                v[i] = 1;
                v
            })
            .collect();
        Subspace {
            field,
            ambient,
            basis,
            pivots: (0..ambient).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Subtract the projection onto this subspace: afterwards `v` has zeros
    /// at all pivot columns.
    pub fn reduce_vector(&self, v: &mut [u64]) {
        let f = self.field;
        for (row, &pcol) in self.basis.iter().zip(self.pivots.iter()) {
            if v[pcol] != 0 {
                let factor = v[pcol];
                for (x, &s) in v.iter_mut().zip(row.iter()) {
                    *x = f.sub(*x, f.mul(factor, s));
                }
            }
        }
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        assert_eq!(v.len(), self.ambient);
        let mut w = v.to_vec();
        self.reduce_vector(&mut w);
        w.iter().all(|&x| x == 0)
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient, "ambient mismatch");
        let mut vectors = self.basis.clone();
        vectors.extend(other.basis.iter().cloned());
        Subspace::from_vectors(self.field, self.ambient, vectors)
    }
}

/// `dim(sup) - dim(sub)`, after verifying containment.
pub fn quotient_dim(sub: &Subspace, sup: &Subspace) -> Result<usize, FpError> {
    if sub.ambient() != sup.ambient() || !sub.is_subspace_of(sup) {
        return Err(FpError::NotASubspace);
    }
    Ok(sup.dim() - sub.dim())
}

/// A quotient `Z / D` of nested subspaces, with canonical coordinates and
/// canonical lifts.
///
/// Coordinates on `Z` are read off at its pivot columns; `D` is re-expressed
/// in those coordinates and echelonized. The quotient coordinates of a vector
/// are the entries of its `D`-reduced coordinate vector at the non-pivot
/// positions of `D`, and the canonical lift of the `i`-th quotient basis
/// vector is the echelon basis row of `Z` at the `i`-th free position.
#[derive(Debug, Clone)]
pub struct Quotient {
    field: PrimeField,
    z: Subspace,
    denom_alpha: Vec<Vec<u64>>,
    denom_pivots: Vec<usize>,
    free_positions: Vec<usize>,
}

impl Quotient {
    pub fn new(z: Subspace, d: &Subspace) -> Result<Self, FpError> {
        if !d.is_subspace_of(&z) {
            return Err(FpError::NotASubspace);
        }
        let field = z.field;
        let k = z.dim();
        let mut alpha_rows: Vec<Vec<u64>> = d
            .basis()
            .iter()
            .map(|v| z.pivots().iter().map(|&q| v[q]).collect())
            .collect();
        let denom_pivots = rref_in_place(field, &mut alpha_rows);
        let pivot_set: std::collections::BTreeSet<usize> = denom_pivots.iter().copied().collect();
        let free_positions = (0..k).filter(|i| !pivot_set.contains(i)).collect();
        Ok(Quotient {
            field,
            z,
            denom_alpha: alpha_rows,
            denom_pivots,
            free_positions,
        })
    }

    pub fn dim(&self) -> usize {
        self.free_positions.len()
    }

    pub fn ambient(&self) -> usize {
        self.z.ambient()
    }

    /// Canonical lift of the `i`-th quotient basis vector into the ambient
    /// space.
    pub fn lift(&self, i: usize) -> Vec<u64> {
        self.z.basis()[self.free_positions[i]].clone()
    }

    /// Quotient coordinates of `v`; `None` if `v` is not in the numerator.
    pub fn coords(&self, v: &[u64]) -> Option<Vec<u64>> {
        let f = self.field;
        let mut alpha: Vec<u64> = self.z.pivots().iter().map(|&q| v[q]).collect();
        // Membership: v must equal the combination of echelon rows read off
        // at the pivots.
        let mut check = v.to_vec();
        for (row, &a) in self.z.basis().iter().zip(alpha.iter()) {
            if a != 0 {
                for (x, &s) in check.iter_mut().zip(row.iter()) {
                    *x = f.sub(*x, f.mul(a, s));
                }
            }
        }
        if check.iter().any(|&x| x != 0) {
            return None;
        }
        for (row, &pcol) in self.denom_alpha.iter().zip(self.denom_pivots.iter()) {
            if alpha[pcol] != 0 {
                let factor = alpha[pcol];
                for (x, &s) in alpha.iter_mut().zip(row.iter()) {
                    *x = f.sub(*x, f.mul(factor, s));
                }
            }
        }
        Some(self.free_positions.iter().map(|&i| alpha[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn primality_check() {
        assert!(PrimeField::new(2).is_ok());
        assert!(PrimeField::new(7).is_ok());
        assert_eq!(PrimeField::new(1), Err(FpError::NotPrime(1)));
        assert_eq!(PrimeField::new(9), Err(FpError::NotPrime(9)));
        assert_eq!(PrimeField::new(0), Err(FpError::NotPrime(0)));
    }

    #[test]
    fn rank_empty_matrix_is_zero() {
        let m = SparseMatrix::zero(f(5), 0, 0);
        assert_eq!(m.rank(), 0);
    }

    #[test]
    fn rank_identity() {
        let m = SparseMatrix::identity(f(5), 3);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn rank_dependent_rows() {
        // [[1,2],[2,4]] over F_5: second row is twice the first.
        let m = SparseMatrix::new(f(5), 2, 2, vec![(0, 0, 1), (0, 1, 2), (1, 0, 2), (1, 1, 4)])
            .unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn kernel_identity_is_zero() {
        let m = SparseMatrix::identity(f(7), 4);
        assert_eq!(m.kernel().dim(), 0);
    }

    #[test]
    fn kernel_zero_matrix_is_full() {
        let m = SparseMatrix::zero(f(3), 2, 3);
        let k = m.kernel();
        assert_eq!(k.dim(), 3);
        assert_eq!(k, Subspace::full(f(3), 3));
    }

    #[test]
    fn kernel_single_equation() {
        // [[1,2]] over F_5: kernel is span{(3,1)} = span{(1,2)} in echelon form.
        let m = SparseMatrix::new(f(5), 1, 2, vec![(0, 0, 1), (0, 1, 2)]).unwrap();
        let k = m.kernel();
        assert_eq!(k.dim(), 1);
        assert_eq!(k.basis(), &[vec![1, 2]]);
        assert!(k.contains(&[3, 1]));
    }

    #[test]
    fn quotient_dim_examples() {
        let p3 = f(3);
        let sub = Subspace::from_vectors(p3, 3, vec![vec![1, 1, 0]]);
        let sup = Subspace::from_vectors(p3, 3, vec![vec![1, 0, 0], vec![0, 1, 0]]);
        assert_eq!(quotient_dim(&sub, &sup), Ok(1));
        assert_eq!(quotient_dim(&sup, &sup), Ok(0));
        let zero = Subspace::zero(p3, 3);
        assert_eq!(quotient_dim(&zero, &sup), Ok(2));
        assert_eq!(quotient_dim(&sup, &sub), Err(FpError::NotASubspace));
    }

    #[test]
    fn quotient_coords_and_lifts() {
        let p5 = f(5);
        let z = Subspace::full(p5, 2);
        let d = Subspace::from_vectors(p5, 2, vec![vec![1, 1]]);
        let q = Quotient::new(z, &d).unwrap();
        assert_eq!(q.dim(), 1);
        // e0 ≡ -e1 mod D, so both map to opposite coordinates.
        let c0 = q.coords(&[1, 0]).unwrap();
        let c1 = q.coords(&[0, 1]).unwrap();
        assert_eq!(c0, vec![p5.neg(c1[0])]);
        let lift = q.lift(0);
        assert_eq!(q.coords(&lift).unwrap(), vec![1]);
    }

    #[test]
    fn quotient_rejects_noncontained_denominator() {
        let p5 = f(5);
        let z = Subspace::from_vectors(p5, 2, vec![vec![1, 0]]);
        let d = Subspace::from_vectors(p5, 2, vec![vec![0, 1]]);
        assert!(matches!(Quotient::new(z, &d), Err(FpError::NotASubspace)));
    }

    fn arbitrary_matrix() -> impl Strategy<Value = (u64, usize, usize, Vec<(usize, usize, u64)>)> {
        (prop_oneof![Just(2u64), Just(3), Just(5), Just(7)], 1usize..=20, 1usize..=20).prop_flat_map(
            |(p, rows, cols)| {
                let entry = (0..rows, 0..cols, 1..p);
                (Just(p), Just(rows), Just(cols), prop::collection::vec(entry, 0..60))
            },
        )
    }

    proptest! {
        #[test]
        fn rank_nullity((p, rows, cols, raw) in arbitrary_matrix()) {
            let field = f(p);
            let m = SparseMatrix::from_accumulated(field, rows, cols, raw);
            prop_assert_eq!(m.rank() + m.kernel().dim(), cols);
            prop_assert!(m.rank() <= rows.min(cols));
        }

        #[test]
        fn kernel_is_canonical((p, rows, cols, raw) in arbitrary_matrix()) {
            let field = f(p);
            let m = SparseMatrix::from_accumulated(field, rows, cols, raw);
            let k = m.kernel();
            for v in k.basis() {
                prop_assert!(m.apply(v).iter().all(|&x| x == 0));
            }
            // Re-echelonizing the basis reproduces the same subspace data.
            let again = Subspace::from_vectors(field, cols, k.basis().to_vec());
            prop_assert_eq!(&again, &k);
        }

        #[test]
        fn rank_of_composition((p, rows, cols, raw) in arbitrary_matrix(), raw2 in prop::collection::vec((0usize..20, 0usize..20, 1u64..7), 0..60)) {
            let field = f(p);
            let m = SparseMatrix::from_accumulated(field, rows, cols, raw);
            let inner = 12usize;
            let n = SparseMatrix::from_accumulated(
                field,
                cols,
                inner,
                raw2.into_iter().map(|(r, c, v)| (r % cols, c % inner, 1 + v % (p - 1).max(1))),
            );
            let mn = m.compose(&n).unwrap();
            prop_assert!(mn.rank() <= m.rank().min(n.rank()));
        }
    }
}
