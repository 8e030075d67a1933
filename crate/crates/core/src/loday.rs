//! The (normalized) chain complex of the pretensor product `X ⊗̃ A` over
//! `F_p`, with an optional coefficient bimodule at the basepoint, and its
//! bigraded homology.
//!
//! A basis element at simplicial level `h` assigns one algebra basis element
//! to every `h`-simplex of `X` (the basepoint simplex draws from the
//! coefficient module instead, when present). Its internal degree and May
//! weight are the sums over the factors. The `i`-th face map sends an
//! assignment to the level `h-1` assignment obtained by multiplying, for
//! each target simplex, all factors lying over it under the `i`-th face of
//! `X`, in stored simplex order; the sign is the Koszul sign of the stable
//! sort that groups factors by target, and the total differential is
//! `Σ (-1)^i d_i`.

use crate::algebra::{Combo, FilteredAlgebra, FilteredBimodule};
use crate::fp::{PrimeField, Quotient, SparseMatrix, Subspace};
use crate::simplicial::SimplicialFiniteSet;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LodayError {
    #[error("cutoff too small: max_level = {0} < 2, no degree-1 homology is computable")]
    CutoffTooSmall(usize),
    #[error("coefficients require a pointed simplicial set")]
    NotPointed,
    #[error("invalid input: {0}")]
    Validation(String),
}

/// One basis tensor: a factor index per simplex of the level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TensorElem {
    pub factors: Vec<u16>,
    pub weight: u32,
}

/// The chain complex, stored in internal-degree blocks: the differential
/// preserves the internal degree `t` and lowers the homological level `h`
/// by one.
#[derive(Debug, Clone)]
pub struct LodayComplex {
    field: PrimeField,
    space: SimplicialFiniteSet,
    algebra: FilteredAlgebra,
    coefficients: Option<FilteredBimodule>,
    max_internal: u32,
    normalized: bool,
    blocks: BTreeMap<(usize, u32), Vec<TensorElem>>,
    diffs: BTreeMap<(usize, u32), SparseMatrix>,
}

/// Homology dimensions per `(h, t)`, with the bounds inside which the
/// truncated build is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomologyTable {
    pub dims: BTreeMap<(usize, u32), usize>,
    pub h_valid: usize,
    pub t_valid: u32,
    n_valid: usize,
}

impl HomologyTable {
    pub fn dim(&self, h: usize, t: u32) -> usize {
        self.dims.get(&(h, t)).copied().unwrap_or(0)
    }

    /// Valid range for total degrees `n = h + t`.
    pub fn n_valid(&self) -> usize {
        self.n_valid
    }

    /// Dimensions per total degree `n = h + t`.
    pub fn total_dims(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for (&(h, t), &d) in &self.dims {
            if d > 0 {
                *out.entry(h + t as usize).or_default() += d;
            }
        }
        out
    }
}

pub fn build(
    x: &SimplicialFiniteSet,
    a: &FilteredAlgebra,
    max_internal: u32,
) -> Result<LodayComplex, LodayError> {
    LodayComplex::construct(x, a, None, max_internal, true)
}

/// The full (unnormalized) Moore complex; the independent oracle for the
/// normalization theorem.
pub fn build_moore(
    x: &SimplicialFiniteSet,
    a: &FilteredAlgebra,
    max_internal: u32,
) -> Result<LodayComplex, LodayError> {
    LodayComplex::construct(x, a, None, max_internal, false)
}

pub fn build_with_coefficients(
    y: &SimplicialFiniteSet,
    a: &FilteredAlgebra,
    m: &FilteredBimodule,
    max_internal: u32,
) -> Result<LodayComplex, LodayError> {
    if !y.is_pointed() {
        return Err(LodayError::NotPointed);
    }
    LodayComplex::construct(y, a, Some(m.clone()), max_internal, true)
}

impl LodayComplex {
    fn construct(
        x: &SimplicialFiniteSet,
        a: &FilteredAlgebra,
        coefficients: Option<FilteredBimodule>,
        max_internal: u32,
        normalized: bool,
    ) -> Result<Self, LodayError> {
        if x.max_level() < 2 {
            return Err(LodayError::CutoffTooSmall(x.max_level()));
        }
        if let Some(m) = &coefficients {
            if m.base() != a {
                return Err(LodayError::Validation(
                    "coefficient module is not over the given algebra".into(),
                ));
            }
        }
        let mut c = LodayComplex {
            field: a.algebra().field(),
            space: x.clone(),
            algebra: a.clone(),
            coefficients,
            max_internal,
            normalized,
            blocks: BTreeMap::new(),
            diffs: BTreeMap::new(),
        };
        for h in 0..=x.max_level() {
            c.enumerate_level(h);
        }
        for h in 1..=x.max_level() {
            c.assemble_differentials(h);
        }
        Ok(c)
    }

    fn factor_degree(&self, h: usize, pos: usize, idx: u16) -> u32 {
        match (&self.coefficients, self.space.basepoint_at(h)) {
            (Some(m), Some(bp)) if pos == bp => m.degree(idx as usize),
            _ => self.algebra.algebra().degree(idx as usize),
        }
    }

    fn factor_weight(&self, h: usize, pos: usize, idx: u16) -> u32 {
        match (&self.coefficients, self.space.basepoint_at(h)) {
            (Some(m), Some(bp)) if pos == bp => m.weight(idx as usize),
            _ => self.algebra.weight(idx as usize),
        }
    }

    fn domain_size(&self, h: usize, pos: usize) -> usize {
        match (&self.coefficients, self.space.basepoint_at(h)) {
            (Some(m), Some(bp)) if pos == bp => m.len(),
            _ => self.algebra.algebra().len(),
        }
    }

    /// A tuple is degenerate when some degeneracy image contains its whole
    /// support: i.e. there is an `i` with unit factors at every position
    /// outside `im(s_i)`. The basepoint position is inside every degeneracy
    /// image, so the module factor never obstructs.
    fn is_degenerate(&self, h: usize, factors: &[u16]) -> bool {
        if h == 0 {
            return false;
        }
        let unit = self.algebra.algebra().unit() as u16;
        self.space
            .degeneracy_complements(h)
            .iter()
            .any(|outside| outside.iter().all(|&p| factors[p] == unit))
    }

    fn enumerate_level(&mut self, h: usize) {
        let npos = self.space.level_size(h);
        let mut factors: Vec<u16> = Vec::with_capacity(npos);
        let mut out: BTreeMap<u32, Vec<TensorElem>> = BTreeMap::new();
        self.enumerate_rec(h, npos, 0, &mut factors, &mut out);
        for (t, elems) in out {
            debug_assert!(elems.windows(2).all(|w| w[0] < w[1]));
            self.blocks.insert((h, t), elems);
        }
    }

    fn enumerate_rec(
        &self,
        h: usize,
        npos: usize,
        degree: u32,
        factors: &mut Vec<u16>,
        out: &mut BTreeMap<u32, Vec<TensorElem>>,
    ) {
        if factors.len() == npos {
            if self.normalized && self.is_degenerate(h, factors) {
                return;
            }
            let weight = factors
                .iter()
                .enumerate()
                .map(|(p, &f)| self.factor_weight(h, p, f))
                .sum();
            out.entry(degree).or_default().push(TensorElem {
                factors: factors.clone(),
                weight,
            });
            return;
        }
        let pos = factors.len();
        for idx in 0..self.domain_size(h, pos) as u16 {
            let d = degree + self.factor_degree(h, pos, idx);
            if d <= self.max_internal {
                factors.push(idx);
                self.enumerate_rec(h, npos, d, factors, out);
                factors.pop();
            }
        }
    }

    /// Expand the `i`-th face of one tensor into target tuples with signed
    /// coefficients (Koszul permutation sign included; the simplicial
    /// `(-1)^i` is applied by the caller).
    fn face_terms(&self, h: usize, i: usize, elem: &TensorElem) -> Vec<(u64, Vec<u16>)> {
        let f = self.field;
        let map = &self.space.face_maps(h)[i];
        let npos = map.len();
        let tgt_size = self.space.level_size(h - 1);
        let src_bp = self.coefficients.as_ref().and_then(|_| self.space.basepoint_at(h));
        let tgt_bp = self
            .coefficients
            .as_ref()
            .and_then(|_| self.space.basepoint_at(h - 1));
        let unit = self.algebra.algebra().unit();

        // Koszul sign of the stable sort that groups factors by target.
        let mut parity = 0u32;
        for q1 in 0..npos {
            for q2 in q1 + 1..npos {
                if map[q1] > map[q2] {
                    parity += self.factor_degree(h, q1, elem.factors[q1])
                        * self.factor_degree(h, q2, elem.factors[q2]);
                }
            }
        }

        // Per-target group products, each a linear combination. Only the
        // target basepoint group involves the module action.
        let mut group_combos: Vec<Combo> = Vec::with_capacity(tgt_size);
        for y in 0..tgt_size {
            let group = (0..npos).filter(|&q| map[q] == y);
            let combo = if Some(y) == tgt_bp {
                let m = self.coefficients.as_ref().expect("pointed complex");
                let mut alg: Combo = vec![(unit, 1)];
                let mut module: Option<Combo> = None;
                for q in group {
                    if Some(q) == src_bp {
                        debug_assert!(module.is_none());
                        module = Some(m.act_combo(&alg, &[(elem.factors[q] as usize, 1)]));
                    } else {
                        match &mut module {
                            None => {
                                alg = self
                                    .algebra
                                    .algebra()
                                    .mul_combo(&alg, &[(elem.factors[q] as usize, 1)])
                            }
                            Some(mc) => {
                                *mc = m.act_right_combo(mc, &[(elem.factors[q] as usize, 1)])
                            }
                        }
                    }
                }
                module.expect("the source basepoint maps to the target basepoint")
            } else {
                let mut alg: Combo = vec![(unit, 1)];
                for q in group {
                    debug_assert!(Some(q) != src_bp);
                    alg = self
                        .algebra
                        .algebra()
                        .mul_combo(&alg, &[(elem.factors[q] as usize, 1)]);
                }
                alg
            };
            if combo.is_empty() {
                return Vec::new();
            }
            group_combos.push(combo);
        }

        // Cartesian expansion across the target positions.
        let mut terms: Vec<(u64, Vec<u16>)> = vec![(f.sign(parity), Vec::with_capacity(tgt_size))];
        for combo in &group_combos {
            let mut next = Vec::with_capacity(terms.len() * combo.len());
            for (coeff, tuple) in &terms {
                for &(k, c) in combo {
                    let mut t2 = tuple.clone();
                    t2.push(k as u16);
                    next.push((f.mul(*coeff, c), t2));
                }
            }
            terms = next;
        }
        terms
    }

    /// The matrix of a single face map `d_i` on the `(h, t)` block, without
    /// the alternating sign.
    pub fn face_matrix(&self, h: usize, t: u32, i: usize) -> SparseMatrix {
        let cols = self.block_dim(h, t);
        let rows = self.block_dim(h - 1, t);
        let mut contributions = Vec::new();
        if let Some(elems) = self.blocks.get(&(h, t)) {
            for (ci, elem) in elems.iter().enumerate() {
                for (coeff, tuple) in self.face_terms(h, i, elem) {
                    match self.lookup(h - 1, t, &tuple) {
                        Some(ri) => contributions.push((ri, ci, coeff)),
                        None => debug_assert!(
                            self.normalized && self.is_degenerate(h - 1, &tuple),
                            "face image missing from the target block"
                        ),
                    }
                }
            }
        }
        SparseMatrix::from_accumulated(self.field, rows, cols, contributions)
    }

    fn assemble_differentials(&mut self, h: usize) {
        let keys: Vec<u32> = self
            .blocks
            .range((h, 0)..=(h, u32::MAX))
            .map(|(&(_, t), _)| t)
            .collect();
        for t in keys {
            let cols = self.block_dim(h, t);
            let rows = self.block_dim(h - 1, t);
            let mut contributions = Vec::new();
            let elems = self.blocks.get(&(h, t)).unwrap().clone();
            for (ci, elem) in elems.iter().enumerate() {
                for i in 0..=h {
                    let alt = self.field.sign(i as u32);
                    for (coeff, tuple) in self.face_terms(h, i, elem) {
                        match self.lookup(h - 1, t, &tuple) {
                            Some(ri) => contributions.push((ri, ci, self.field.mul(alt, coeff))),
                            None => debug_assert!(
                                self.normalized && self.is_degenerate(h - 1, &tuple),
                                "face image missing from the target block"
                            ),
                        }
                    }
                }
            }
            let m = SparseMatrix::from_accumulated(self.field, rows, cols, contributions);
            self.diffs.insert((h, t), m);
        }
    }

    pub fn lookup(&self, h: usize, t: u32, tuple: &[u16]) -> Option<usize> {
        let elems = self.blocks.get(&(h, t))?;
        elems.binary_search_by(|e| e.factors.as_slice().cmp(tuple)).ok()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn space(&self) -> &SimplicialFiniteSet {
        &self.space
    }

    pub fn algebra(&self) -> &FilteredAlgebra {
        &self.algebra
    }

    pub fn coefficients(&self) -> Option<&FilteredBimodule> {
        self.coefficients.as_ref()
    }

    pub fn max_level(&self) -> usize {
        self.space.max_level()
    }

    pub fn max_internal(&self) -> u32 {
        self.max_internal
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn blocks(&self) -> &BTreeMap<(usize, u32), Vec<TensorElem>> {
        &self.blocks
    }

    pub fn block(&self, h: usize, t: u32) -> Option<&Vec<TensorElem>> {
        self.blocks.get(&(h, t))
    }

    pub fn block_dim(&self, h: usize, t: u32) -> usize {
        self.blocks.get(&(h, t)).map_or(0, |b| b.len())
    }

    /// Largest block dimension anywhere in the complex.
    pub fn max_block_dim(&self) -> usize {
        self.blocks.values().map(|b| b.len()).max().unwrap_or(0)
    }

    /// The differential out of the `(h, t)` block; zero (with no rows) at
    /// `h = 0`.
    pub fn differential(&self, h: usize, t: u32) -> SparseMatrix {
        self.diffs.get(&(h, t)).cloned().unwrap_or_else(|| {
            let rows = if h == 0 { 0 } else { self.block_dim(h - 1, t) };
            SparseMatrix::zero(self.field, rows, self.block_dim(h, t))
        })
    }

    /// Internal degrees present at any level.
    pub fn internal_degrees(&self) -> Vec<u32> {
        let mut ts: Vec<u32> = self.blocks.keys().map(|&(_, t)| t).collect();
        ts.sort_unstable();
        ts.dedup();
        ts
    }

    /// Exhaustive check that `d ∘ d = 0` on every bidegree.
    pub fn check_d_squared(&self) -> Result<(), LodayError> {
        for (&(h, t), _) in &self.blocks {
            if h < 2 {
                continue;
            }
            let inner = self.differential(h, t);
            let outer = self.differential(h - 1, t);
            let square = outer.compose(&inner).expect("block shapes agree");
            if !square.is_zero() {
                return Err(LodayError::Validation(format!(
                    "d^2 != 0 at (h, t) = ({h}, {t})"
                )));
            }
        }
        Ok(())
    }

    /// Exhaustive check that the differential never decreases the May
    /// weight.
    pub fn check_weight_monotone(&self) -> Result<(), LodayError> {
        for (&(h, t), d) in &self.diffs {
            let src = &self.blocks[&(h, t)];
            let Some(tgt) = self.blocks.get(&(h - 1, t)) else {
                if !d.is_zero() {
                    return Err(LodayError::Validation(format!(
                        "differential out of ({h}, {t}) has no target block"
                    )));
                }
                continue;
            };
            for &(r, c, _) in d.entries() {
                if tgt[r].weight < src[c].weight {
                    return Err(LodayError::Validation(format!(
                        "differential decreases weight at (h, t) = ({h}, {t})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `dim H_{h,t} = dim ker(d_{h,t}) - rank(d_{h+1,t})`, reported with the
    /// bounds inside which the truncated complex is exact.
    pub fn homology(&self) -> HomologyTable {
        let mut ranks: BTreeMap<(usize, u32), usize> = BTreeMap::new();
        for (&(h, t), d) in &self.diffs {
            ranks.insert((h, t), d.rank());
        }
        let mut dims = BTreeMap::new();
        for (&(h, t), elems) in &self.blocks {
            if h > self.max_level().saturating_sub(1) {
                continue;
            }
            let out_rank = if h == 0 { 0 } else { ranks.get(&(h, t)).copied().unwrap_or(0) };
            let in_rank = ranks.get(&(h + 1, t)).copied().unwrap_or(0);
            let z = elems.len() - out_rank;
            dims.insert((h, t), z - in_rank);
        }
        HomologyTable {
            dims,
            h_valid: self.max_level().saturating_sub(2),
            t_valid: self.t_valid(),
            n_valid: self.n_valid(),
        }
    }

    pub fn t_valid(&self) -> u32 {
        match self.algebra.algebra().truncation() {
            Some(cut) => cut.min(self.max_internal),
            None => self.max_internal,
        }
    }

    /// Largest total degree through which summed homology dimensions are
    /// exact: every nonempty block contributing at or below it must sit
    /// inside the per-block validity window. Blocks that are empty under the
    /// degree budget contribute nothing at any cutoff, which is what makes
    /// totals beyond `max_level` trustworthy for positively graded algebras.
    pub fn n_valid(&self) -> usize {
        let h_valid = self.max_level().saturating_sub(2);
        let t_valid = self.t_valid();
        let mut bound = self.max_level() + self.max_internal as usize;
        for &(h, t) in self.blocks.keys() {
            if h > h_valid || t > t_valid {
                bound = bound.min((h + t as usize).saturating_sub(1));
            }
        }
        bound
    }

    /// Cycle/boundary quotients with canonical representatives, per block.
    pub fn homology_quotients(&self) -> BTreeMap<(usize, u32), Quotient> {
        let mut out = BTreeMap::new();
        for (&(h, t), elems) in &self.blocks {
            if h > self.max_level().saturating_sub(1) {
                continue;
            }
            let cycles = if h == 0 {
                Subspace::full(self.field, elems.len())
            } else {
                self.differential(h, t).kernel()
            };
            let boundaries = match self.blocks.get(&(h + 1, t)) {
                None => Subspace::zero(self.field, elems.len()),
                Some(src) => {
                    let d = self.differential(h + 1, t);
                    let cols: Vec<Vec<u64>> = (0..src.len())
                        .map(|j| {
                            let mut col = vec![0u64; elems.len()];
                            for &(r, c, v) in d.entries() {
                                if c == j {
                                    col[r] = v;
                                }
                            }
                            col
                        })
                        .collect();
                    Subspace::from_vectors(self.field, elems.len(), cols)
                }
            };
            out.insert(
                (h, t),
                Quotient::new(cycles, &boundaries).expect("boundaries are cycles"),
            );
        }
        out
    }

    /// Homology refined by May weight. Only meaningful when the differential
    /// preserves the weight exactly (e.g. the complex of an associated
    /// graded algebra); that property is checked.
    pub fn homology_by_weight(&self) -> Result<BTreeMap<(usize, u32, u32), usize>, LodayError> {
        for (&(h, t), d) in &self.diffs {
            let src = &self.blocks[&(h, t)];
            if d.is_zero() {
                continue;
            }
            let tgt = &self.blocks[&(h - 1, t)];
            for &(r, c, _) in d.entries() {
                if tgt[r].weight != src[c].weight {
                    return Err(LodayError::Validation(format!(
                        "differential does not preserve weight at (h, t) = ({h}, {t})"
                    )));
                }
            }
        }
        let submatrix = |h: usize, t: u32, w: u32| -> SparseMatrix {
            let src = self.blocks.get(&(h, t));
            let tgt = self.blocks.get(&(h - 1, t));
            let src_idx: Vec<usize> = src
                .map(|b| (0..b.len()).filter(|&i| b[i].weight == w).collect())
                .unwrap_or_default();
            let tgt_idx: Vec<usize> = tgt
                .map(|b| (0..b.len()).filter(|&i| b[i].weight == w).collect())
                .unwrap_or_default();
            let src_pos: BTreeMap<usize, usize> =
                src_idx.iter().enumerate().map(|(n, &o)| (o, n)).collect();
            let tgt_pos: BTreeMap<usize, usize> =
                tgt_idx.iter().enumerate().map(|(n, &o)| (o, n)).collect();
            let d = self.differential(h, t);
            let entries = d
                .entries()
                .iter()
                .filter_map(|&(r, c, v)| match (tgt_pos.get(&r), src_pos.get(&c)) {
                    (Some(&rr), Some(&cc)) => Some((rr, cc, v)),
                    _ => None,
                })
                .collect::<Vec<_>>();
            SparseMatrix::from_accumulated(self.field, tgt_idx.len(), src_idx.len(), entries)
        };
        let mut dims = BTreeMap::new();
        for (&(h, t), elems) in &self.blocks {
            if h > self.max_level().saturating_sub(1) {
                continue;
            }
            let mut weights: Vec<u32> = elems.iter().map(|e| e.weight).collect();
            weights.sort_unstable();
            weights.dedup();
            for w in weights {
                let block_dim = elems.iter().filter(|e| e.weight == w).count();
                let out_rank = if h == 0 { 0 } else { submatrix(h, t, w).rank() };
                let in_rank = submatrix(h + 1, t, w).rank();
                let d = block_dim - out_rank - in_rank;
                if d > 0 {
                    dims.insert((h, t, w), d);
                }
            }
        }
        Ok(dims)
    }
}

// ---------------------------------------------------------------------------
// Coefficients short exact sequence and its long exact homology sequence
// ---------------------------------------------------------------------------

/// One node of the long exact sequence check at a fixed bidegree.
#[derive(Debug, Clone)]
pub struct LesNode {
    pub h: usize,
    pub t: u32,
    /// dims of `H(sub)`, `H(full)`, `H(quo)` at `(h, t)`.
    pub dims: (usize, usize, usize),
    /// ranks of `i_*`, `p_*` at `(h, t)` and of the connecting map out of
    /// `H_{h,t}(quo)` into `H_{h-1,t}(sub)`.
    pub ranks: (usize, usize, usize),
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct LesReport {
    pub nodes: Vec<LesNode>,
    pub all_ok: bool,
    pub h_valid: usize,
}

impl LesReport {
    /// Does the bookkeeping confirm
    /// `dim H(full) <= dim H(sub) + dim H(quo)` at every checked bidegree?
    pub fn subadditive(&self) -> bool {
        self.nodes.iter().all(|n| n.dims.1 <= n.dims.0 + n.dims.2)
    }
}

/// Build the three complexes for a weight-adapted submodule (given by basis
/// indices of `m_full`), verify that they form a levelwise short exact
/// sequence, and check exactness of the induced long sequence on homology by
/// rank bookkeeping at every bidegree within the valid range.
pub fn coefficients_les(
    y: &SimplicialFiniteSet,
    a: &FilteredAlgebra,
    m_full: &FilteredBimodule,
    sub_indices: &[usize],
    max_internal: u32,
) -> Result<LesReport, LodayError> {
    let (m_sub, sub_map) = m_full
        .submodule(sub_indices)
        .map_err(|e| LodayError::Validation(e.to_string()))?;
    let (m_quo, quo_map) = m_full
        .quotient(sub_indices)
        .map_err(|e| LodayError::Validation(e.to_string()))?;
    let c_sub = build_with_coefficients(y, a, &m_sub, max_internal)?;
    let c_full = build_with_coefficients(y, a, m_full, max_internal)?;
    let c_quo = build_with_coefficients(y, a, &m_quo, max_internal)?;

    let field = c_full.field();
    let h_valid = c_full.max_level().saturating_sub(2);
    let bp = |h: usize| y.basepoint_at(h).expect("pointed");

    // Basis-level chain maps: the inclusion renames the basepoint factor via
    // sub_map; the projection keeps tuples whose basepoint factor survives.
    let chain_map = |src: &LodayComplex,
                     dst: &LodayComplex,
                     rename: &dyn Fn(u16) -> Option<u16>,
                     h: usize,
                     t: u32|
     -> SparseMatrix {
        let rows = dst.block_dim(h, t);
        let cols = src.block_dim(h, t);
        let mut contributions = Vec::new();
        if let Some(elems) = src.block(h, t) {
            for (ci, e) in elems.iter().enumerate() {
                let mut tuple = e.factors.clone();
                if let Some(new_bp) = rename(tuple[bp(h)]) {
                    tuple[bp(h)] = new_bp;
                    let ri = dst
                        .lookup(h, t, &tuple)
                        .expect("chain map image must be a basis tensor");
                    contributions.push((ri, ci, 1u64));
                }
            }
        }
        SparseMatrix::from_accumulated(field, rows, cols, contributions)
    };
    let sub_to_full = |f: u16| Some(sub_map[f as usize] as u16);
    let full_to_quo = |f: u16| {
        quo_map
            .iter()
            .position(|&old| old == f as usize)
            .map(|new| new as u16)
    };

    let hq_sub = c_sub.homology_quotients();
    let hq_full = c_full.homology_quotients();
    let hq_quo = c_quo.homology_quotients();

    // Induced map on homology classes via canonical lifts and coordinates.
    let induced = |hq_src: &BTreeMap<(usize, u32), Quotient>,
                   hq_dst: &BTreeMap<(usize, u32), Quotient>,
                   mat: &SparseMatrix,
                   key: (usize, u32)|
     -> SparseMatrix {
        let rows = hq_dst.get(&key).map_or(0, |q| q.dim());
        let cols = hq_src.get(&key).map_or(0, |q| q.dim());
        let (Some(qs), Some(qd)) = (hq_src.get(&key), hq_dst.get(&key)) else {
            return SparseMatrix::zero(field, rows, cols);
        };
        let mut contributions = Vec::new();
        for j in 0..qs.dim() {
            let img = mat.apply(&qs.lift(j));
            let coords = qd.coords(&img).expect("chain maps send cycles to cycles");
            for (i, &v) in coords.iter().enumerate() {
                if v != 0 {
                    contributions.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_accumulated(field, qd.dim(), qs.dim(), contributions)
    };

    // Connecting map out of H_{h2,t}(quo) into H_{h2-1,t}(sub): lift a cycle
    // through the basis section, apply d in the full complex, pull the
    // boundary back along the inclusion.
    let connecting = |h2: usize, t: u32| -> SparseMatrix {
        let rows = h2
            .checked_sub(1)
            .and_then(|hm| hq_sub.get(&(hm, t)))
            .map_or(0, |q| q.dim());
        let cols = hq_quo.get(&(h2, t)).map_or(0, |q| q.dim());
        if h2 == 0 || rows == 0 || cols == 0 {
            return SparseMatrix::zero(field, rows, cols);
        }
        let qs = hq_quo.get(&(h2, t)).unwrap();
        let qd = hq_sub.get(&(h2 - 1, t)).unwrap();
        let d_full = c_full.differential(h2, t);
        let mut contributions = Vec::new();
        for j in 0..qs.dim() {
            let z_quo = qs.lift(j);
            let mut z_full = vec![0u64; c_full.block_dim(h2, t)];
            if let Some(elems) = c_quo.block(h2, t) {
                for (idx, e) in elems.iter().enumerate() {
                    if z_quo[idx] == 0 {
                        continue;
                    }
                    let mut tuple = e.factors.clone();
                    tuple[bp(h2)] = quo_map[tuple[bp(h2)] as usize] as u16;
                    let fi = c_full.lookup(h2, t, &tuple).expect("section image exists");
                    z_full[fi] = z_quo[idx];
                }
            }
            let w_full = d_full.apply(&z_full);
            let mut w_sub = vec![0u64; c_sub.block_dim(h2 - 1, t)];
            if let Some(elems) = c_full.block(h2 - 1, t) {
                for (idx, e) in elems.iter().enumerate() {
                    if w_full[idx] == 0 {
                        continue;
                    }
                    let pos = sub_map
                        .iter()
                        .position(|&old| old == e.factors[bp(h2 - 1)] as usize)
                        .expect("boundary of a section lift lands in the subcomplex");
                    let mut tuple = e.factors.clone();
                    tuple[bp(h2 - 1)] = pos as u16;
                    let si = c_sub.lookup(h2 - 1, t, &tuple).expect("sub tensor exists");
                    w_sub[si] = w_full[idx];
                }
            }
            let coords = qd.coords(&w_sub).expect("connecting image is a cycle");
            for (i2, &v) in coords.iter().enumerate() {
                if v != 0 {
                    contributions.push((i2, j, v));
                }
            }
        }
        SparseMatrix::from_accumulated(field, qd.dim(), qs.dim(), contributions)
    };

    let mut keys: Vec<(usize, u32)> = hq_full
        .keys()
        .chain(hq_sub.keys())
        .chain(hq_quo.keys())
        .copied()
        .filter(|&(h, _)| h <= h_valid)
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let mut nodes = Vec::new();
    let mut all_ok = true;
    for &(h, t) in &keys {
        if c_sub.block_dim(h, t) + c_quo.block_dim(h, t) != c_full.block_dim(h, t) {
            all_ok = false;
            nodes.push(LesNode {
                h,
                t,
                dims: (0, 0, 0),
                ranks: (0, 0, 0),
                ok: false,
                detail: "levelwise split violated".into(),
            });
            continue;
        }
        let i_mat = chain_map(&c_sub, &c_full, &sub_to_full, h, t);
        let p_mat = chain_map(&c_full, &c_quo, &full_to_quo, h, t);
        let i_star = induced(&hq_sub, &hq_full, &i_mat, (h, t));
        let p_star = induced(&hq_full, &hq_quo, &p_mat, (h, t));
        let del_h = connecting(h, t);
        let del_h1 = connecting(h + 1, t);

        let dim_sub = hq_sub.get(&(h, t)).map_or(0, |q| q.dim());
        let dim_full = hq_full.get(&(h, t)).map_or(0, |q| q.dim());
        let dim_quo = hq_quo.get(&(h, t)).map_or(0, |q| q.dim());
        let (ri, rp, rdel) = (i_star.rank(), p_star.rank(), del_h.rank());

        let mut ok = true;
        let mut detail = String::new();
        if !p_star.compose(&i_star).map(|m| m.is_zero()).unwrap_or(false) {
            ok = false;
            detail = "p_* compose i_* != 0 on homology".into();
        }
        if ri + rp != dim_full {
            ok = false;
            detail = format!("exactness at H(full) fails: {ri} + {rp} != {dim_full}");
        }
        if rp + rdel != dim_quo {
            ok = false;
            detail = format!("exactness at H(quo) fails: {rp} + {rdel} != {dim_quo}");
        }
        if del_h1.rank() + ri != dim_sub {
            ok = false;
            detail = format!(
                "exactness at H(sub) fails: {} + {ri} != {dim_sub}",
                del_h1.rank()
            );
        }
        all_ok &= ok;
        nodes.push(LesNode {
            h,
            t,
            dims: (dim_sub, dim_full, dim_quo),
            ranks: (ri, rp, rdel),
            ok,
            detail,
        });
    }
    Ok(LesReport {
        nodes,
        all_ok,
        h_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{
        exterior_algebra, exterior_algebra_named, polynomial_truncated_model, tensor_product,
        truncated_polynomial, whitehead_filtration, FilteredAlgebra, FilteredBimodule,
        GradedAlgebra,
    };
    use crate::simplicial::{circle, point};

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn ground_field_algebra(p: u64) -> FilteredAlgebra {
        let alg = GradedAlgebra::new(
            f(p),
            vec!["1".into()],
            vec![0],
            0,
            vec![vec![vec![(0, 1)]]],
            None,
        )
        .unwrap();
        FilteredAlgebra::trivial(alg)
    }

    #[test]
    fn cutoff_too_small_is_rejected() {
        let a = ground_field_algebra(3);
        assert!(matches!(
            build(&circle(1), &a, 4),
            Err(LodayError::CutoffTooSmall(1))
        ));
    }

    #[test]
    fn point_complex_is_the_algebra_in_degree_zero() {
        let a = whitehead_filtration(&exterior_algebra(f(3), 3));
        let c = build(&point(4), &a, 10).unwrap();
        let h = c.homology();
        assert_eq!(h.dim(0, 0), 1);
        assert_eq!(h.dim(0, 3), 1);
        assert_eq!(h.dims.values().sum::<usize>(), 2);
        // Nothing above level 0 survives normalization over the point.
        assert!(c.blocks().keys().all(|&(h, _)| h == 0));
    }

    #[test]
    fn circle_of_ground_field_is_one_point() {
        let a = ground_field_algebra(5);
        let c = build(&circle(4), &a, 6).unwrap();
        let h = c.homology();
        assert_eq!(h.dim(0, 0), 1);
        assert_eq!(h.dims.values().sum::<usize>(), 1);
    }

    #[test]
    fn circle_exterior_odd_generator_gives_divided_powers() {
        // HH of E(x), |x| = 3, p = 3: one class in every total degree
        // 4k and 4k+3 (gamma_k and x*gamma_k).
        let a = whitehead_filtration(&exterior_algebra(f(3), 3));
        let c = build(&circle(6), &a, 16).unwrap();
        c.check_d_squared().unwrap();
        let h = c.homology();
        let mut expected = BTreeMap::new();
        for k in 0..=4usize {
            for eps in 0..=1usize {
                let n = 4 * k + 3 * eps;
                if n <= h.n_valid() {
                    *expected.entry(n).or_insert(0) += 1;
                }
            }
        }
        let got: BTreeMap<usize, usize> = h
            .total_dims()
            .into_iter()
            .filter(|&(n, _)| n <= h.n_valid())
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn circle_truncated_square_bigraded_pattern() {
        // HH of F_3[x]/x^2 with |x| = 2: classes at (0,0), (0,2),
        // (2i, 4i+2) for i >= 1 and (2j+1, 4j+2) for j >= 0.
        let a = whitehead_filtration(&truncated_polynomial(f(3), 2, 2).unwrap());
        let c = build(&circle(6), &a, 12).unwrap();
        let h = c.homology();
        for (&(hh, t), &d) in &h.dims {
            if hh > h.h_valid || t > h.t_valid {
                continue;
            }
            let expected = if hh == 0 {
                usize::from(t == 0 || t == 2)
            } else if hh % 2 == 0 {
                let i = hh / 2;
                usize::from(t == (4 * i + 2) as u32)
            } else {
                let j = (hh - 1) / 2;
                usize::from(t == (4 * j + 2) as u32)
            };
            assert_eq!(d, expected, "mismatch at ({hh}, {t})");
        }
    }

    #[test]
    fn polynomial_model_matches_its_series() {
        // HH dims of F_p[x] (deg 4): coefficients of (1+t^5)/(1-t^4).
        let a = FilteredAlgebra::trivial(polynomial_truncated_model(f(3), 4, 16).unwrap());
        let c = build(&circle(4), &a, 16).unwrap();
        let h = c.homology();
        let totals = h.total_dims();
        for n in 0..=14usize {
            let expected = usize::from(n % 4 == 0) + usize::from(n >= 5 && (n - 5) % 4 == 0);
            assert_eq!(totals.get(&n).copied().unwrap_or(0), expected, "degree {n}");
        }
    }

    #[test]
    fn koszul_signs_in_face_matrices() {
        // a = E(x) ⊗ E(y), |x| = 3, |y| = 5, p = 3. At t = 8 the level-1
        // block is {(1*1, x*y), (1*y, x*1), (x*1, 1*y)} and d_0 multiplies
        // the two factors; the middle product picks up the Koszul sign.
        let a = FilteredAlgebra::trivial(
            tensor_product(
                &exterior_algebra_named(f(3), 3, "x"),
                &exterior_algebra_named(f(3), 5, "y"),
            )
            .unwrap(),
        );
        let c = build(&circle(3), &a, 8).unwrap();
        let block = c.block(1, 8).unwrap().clone();
        assert_eq!(block.len(), 3);
        assert_eq!(c.block_dim(0, 8), 1);
        let d0 = c.face_matrix(1, 8, 0);
        let dense = d0.to_dense_rows();
        // Columns in lex order: (1*1 | x*y), (1*y | x*1), (x*1 | 1*y).
        assert_eq!(dense[0], vec![1, 2, 1]);
    }

    #[test]
    fn wrap_around_face_carries_koszul_sign() {
        // E(x), |x| = 3 odd: d_0 at level 2 merges positions 0 and 2, so the
        // tuple (1, x, x) picks up (-1)^{|x||x|}.
        let a = whitehead_filtration(&exterior_algebra(f(3), 3));
        let c = build(&circle(3), &a, 9).unwrap();
        let block = c.block(2, 6).unwrap().clone();
        let col = block.iter().position(|e| e.factors == vec![0, 1, 1]).unwrap();
        let d0 = c.face_matrix(2, 6, 0);
        let target = c.block(1, 6).unwrap();
        let row = target.iter().position(|e| e.factors == vec![1, 1]).unwrap();
        let dense = d0.to_dense_rows();
        assert_eq!(dense[row][col], f(3).neg(1));
    }

    #[test]
    fn normalized_matches_moore_homology() {
        let a = whitehead_filtration(&truncated_polynomial(f(3), 2, 3).unwrap());
        let cn = build(&circle(3), &a, 8).unwrap();
        let cm = build_moore(&circle(3), &a, 8).unwrap();
        cm.check_d_squared().unwrap();
        let hn = cn.homology();
        let hm = cm.homology();
        for (&(h, t), _) in hn.dims.iter().chain(hm.dims.iter()) {
            if h <= hn.h_valid && t <= hn.t_valid {
                assert_eq!(hn.dim(h, t), hm.dim(h, t), "mismatch at ({h}, {t})");
            }
        }
    }

    #[test]
    fn coefficients_in_the_algebra_itself_reproduce_the_plain_complex() {
        let fa = whitehead_filtration(&exterior_algebra(f(3), 3));
        let m = FilteredBimodule::regular(&fa);
        let plain = build(&circle(4), &fa, 12).unwrap();
        let with_m = build_with_coefficients(&circle(4), &fa, &m, 12).unwrap();
        for (key, block) in plain.blocks() {
            assert_eq!(with_m.block(key.0, key.1).map(|b| b.len()), Some(block.len()));
            assert_eq!(
                plain.differential(key.0, key.1),
                with_m.differential(key.0, key.1)
            );
        }
        assert_eq!(plain.blocks().len(), with_m.blocks().len());
    }

    #[test]
    fn coefficients_over_the_point_are_the_module() {
        let fa = whitehead_filtration(&exterior_algebra(f(3), 3));
        let m = FilteredBimodule::augmentation_module(&fa, 2, 0).unwrap();
        let c = build_with_coefficients(&point(3), &fa, &m, 8).unwrap();
        let h = c.homology();
        assert_eq!(h.dim(0, 2), 1);
        assert_eq!(h.dims.values().sum::<usize>(), 1);
    }

    /// Independent oracle: the reduced bar complex computing
    /// `Tor^{E(x)}(F_p, F_p)`. Every bar differential multiplies adjacent
    /// `x` factors (`x^2 = 0`) or augments a boundary factor away (the
    /// augmentation kills `x`), so `d = 0` and `Tor_h` is one-dimensional in
    /// internal degree `h |x|`: the divided power algebra on one class.
    fn reduced_bar_tor_dims(deg_x: u32, max_h: usize) -> BTreeMap<(usize, u32), usize> {
        (0..=max_h).map(|h| ((h, h as u32 * deg_x), 1)).collect()
    }

    #[test]
    fn augmentation_coefficients_give_divided_powers() {
        let fa = whitehead_filtration(&exterior_algebra(f(3), 3));
        let m = FilteredBimodule::augmentation_module(&fa, 0, 0).unwrap();
        let c = build_with_coefficients(&circle(5), &fa, &m, 12).unwrap();
        c.check_d_squared().unwrap();
        let h = c.homology();
        let oracle = reduced_bar_tor_dims(3, h.h_valid);
        for (&(hh, t), &d) in &oracle {
            if t <= h.t_valid {
                assert_eq!(h.dim(hh, t), d, "Tor mismatch at ({hh}, {t})");
            }
        }
        for (&(hh, t), &d) in &h.dims {
            if hh <= h.h_valid && t <= h.t_valid && d > 0 {
                assert_eq!(oracle.get(&(hh, t)), Some(&d), "extra class at ({hh}, {t})");
            }
        }
    }

    #[test]
    fn zero_module_gives_zero_complex() {
        let fa = whitehead_filtration(&exterior_algebra(f(3), 3));
        let m = FilteredBimodule::zero(&fa);
        let c = build_with_coefficients(&circle(3), &fa, &m, 8).unwrap();
        assert!(c.blocks().is_empty());
    }

    #[test]
    fn truncation_stabilization() {
        // Complexes built at internal cutoffs m <= m' agree in degrees <= m.
        let a16 = FilteredAlgebra::trivial(polynomial_truncated_model(f(3), 2, 16).unwrap());
        let a10 = FilteredAlgebra::trivial(polynomial_truncated_model(f(3), 2, 10).unwrap());
        let c16 = build(&circle(4), &a16, 16).unwrap();
        let c10 = build(&circle(4), &a10, 10).unwrap();
        let h16 = c16.homology();
        let h10 = c10.homology();
        for (&(h, t), _) in h10.dims.iter() {
            if t <= 10 && h <= h10.h_valid {
                assert_eq!(h10.dim(h, t), h16.dim(h, t), "stabilization at ({h}, {t})");
            }
        }
    }

    #[test]
    fn les_for_exterior_ideal() {
        // A = E(x), M1 = (x) inside M0 = A, quotient the augmentation.
        let fa = whitehead_filtration(&exterior_algebra(f(3), 3));
        let m = FilteredBimodule::regular(&fa);
        let report = coefficients_les(&circle(7), &fa, &m, &[1], 12).unwrap();
        assert!(
            report.all_ok,
            "{:?}",
            report.nodes.iter().find(|n| !n.ok).map(|n| &n.detail)
        );
        assert!(report.subadditive());
    }
}
