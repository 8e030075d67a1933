//! The spectral sequence of a filtered chain complex, computed exactly from
//! canonical cycle/boundary subquotients.
//!
//! Conventions: `n` is the total degree (homological level plus internal
//! degree), `w` is the May weight, and the page-`r` differential has
//! bidegree `d^r: (n, w) -> (n - 1, w + r)`. With weights bounded per total
//! degree the filtration is exhaustive and bounded, every entry stabilizes,
//! and the weight-column dimensions of the stable page sum to the homology
//! of the total complex.

use crate::algebra::{associated_graded, FilteredAlgebra};
use crate::fp::{PrimeField, Quotient, SparseMatrix, Subspace};
use crate::loday::{self, LodayComplex, LodayError};
use crate::mayfilt::FilteredChainComplex;
use crate::simplicial::SimplicialFiniteSet;
use std::collections::BTreeMap;
use thiserror::Error;

/// Weights above this bound abort the page computation.
pub const MAX_WEIGHT_BOUND: u32 = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecSeqError {
    #[error("unbounded filtration: maximum weight {max_weight} exceeds the configured bound {bound}")]
    UnboundedFiltration { max_weight: u32, bound: u32 },
    #[error(transparent)]
    Loday(#[from] LodayError),
}

/// The filtered complex regrouped by total degree `n = h + t`, with one
/// ordered basis (blocks concatenated by increasing `h`) and one total
/// differential matrix per degree.
struct TotalComplex {
    field: PrimeField,
    n_max: usize,
    weights: Vec<Vec<u32>>,
    d: Vec<SparseMatrix>,
}

impl TotalComplex {
    fn new(fc: &FilteredChainComplex) -> Self {
        let field = fc.field();
        let n_max = fc
            .weights()
            .keys()
            .map(|&(h, t)| h + t as usize)
            .max()
            .unwrap_or(0);
        let mut offsets: BTreeMap<(usize, u32), usize> = BTreeMap::new();
        let mut weights: Vec<Vec<u32>> = vec![Vec::new(); n_max + 1];
        for n in 0..=n_max {
            for h in 0..=n {
                let t = (n - h) as u32;
                let ws = fc.block_weights(h, t);
                if !ws.is_empty() {
                    offsets.insert((h, t), weights[n].len());
                    weights[n].extend_from_slice(ws);
                }
            }
        }
        let mut d: Vec<SparseMatrix> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let rows = if n == 0 { 0 } else { weights[n - 1].len() };
            let cols = weights[n].len();
            let mut contributions = Vec::new();
            if n > 0 {
                for h in 1..=n {
                    let t = (n - h) as u32;
                    let Some(&src_off) = offsets.get(&(h, t)) else { continue };
                    let block_d = fc.differential(h, t);
                    if block_d.is_zero() {
                        continue;
                    }
                    let tgt_off = offsets[&(h - 1, t)];
                    for &(r, c, v) in block_d.entries() {
                        contributions.push((tgt_off + r, src_off + c, v));
                    }
                }
            }
            d.push(SparseMatrix::from_accumulated(field, rows, cols, contributions));
        }
        TotalComplex {
            field,
            n_max,
            weights,
            d,
        }
    }

    fn dim(&self, n: usize) -> usize {
        if n > self.n_max {
            0
        } else {
            self.weights[n].len()
        }
    }

    /// `Z = F_w ∩ d^{-1}(F_{w'})` as a subspace of `C_n`, where `F_v` for
    /// `v <= 0` is everything and `w'` caps the allowed target weights from
    /// below.
    fn z_space(&self, n: usize, w: i64, w_target: i64) -> Subspace {
        let dim = self.dim(n);
        if dim == 0 {
            return Subspace::zero(self.field, dim.max(0));
        }
        let src: Vec<usize> = (0..dim)
            .filter(|&i| (self.weights[n][i] as i64) >= w)
            .collect();
        if src.is_empty() {
            return Subspace::zero(self.field, dim);
        }
        let constraint_rows: Vec<usize> = if n == 0 {
            Vec::new()
        } else {
            (0..self.weights[n - 1].len())
                .filter(|&i| (self.weights[n - 1][i] as i64) < w_target)
                .collect()
        };
        let scatter = |vecs: Vec<Vec<u64>>| -> Subspace {
            let embedded = vecs
                .into_iter()
                .map(|v| {
                    let mut full = vec![0u64; dim];
                    for (pos, &col) in src.iter().enumerate() {
                        full[col] = v[pos];
                    }
                    full
                })
                .collect();
            Subspace::from_vectors(self.field, dim, embedded)
        };
        if constraint_rows.is_empty() {
            let basis = (0..src.len())
                .map(|i| {
                    let mut v = vec![0u64; src.len()];
                    v[i] = 1;
                    v
                })
                .collect();
            return scatter(basis);
        }
        let row_pos: BTreeMap<usize, usize> = constraint_rows
            .iter()
            .enumerate()
            .map(|(a, &b)| (b, a))
            .collect();
        let col_pos: BTreeMap<usize, usize> = src.iter().enumerate().map(|(a, &b)| (b, a)).collect();
        let entries: Vec<(usize, usize, u64)> = self.d[n]
            .entries()
            .iter()
            .filter_map(|&(r, c, v)| match (row_pos.get(&r), col_pos.get(&c)) {
                (Some(&rr), Some(&cc)) => Some((rr, cc, v)),
                _ => None,
            })
            .collect();
        let sub = SparseMatrix::from_accumulated(
            self.field,
            constraint_rows.len(),
            src.len(),
            entries,
        );
        scatter(sub.kernel().basis().to_vec())
    }

    fn d_image(&self, n_from: usize, space: &Subspace) -> Subspace {
        let target_dim = if n_from == 0 { 0 } else { self.dim(n_from - 1) };
        if n_from == 0 || n_from > self.n_max || space.dim() == 0 {
            return Subspace::zero(self.field, target_dim);
        }
        let vecs = space
            .basis()
            .iter()
            .map(|v| self.d[n_from].apply(v))
            .collect();
        Subspace::from_vectors(self.field, target_dim, vecs)
    }
}

/// All computed page data: dimensions and differentials per page,
/// stabilization pages, the stable page, and the homology of the total
/// complex it abuts to.
#[derive(Debug)]
pub struct SpectralSequencePages {
    pub field: PrimeField,
    pub n_max: usize,
    pub max_weight: u32,
    /// Pages are computed for `1 <= r <= r_stored`; everything is stable
    /// from `r_stored` on.
    pub r_stored: usize,
    pub r_requested: usize,
    /// Nonzero dimensions per `(r, n, w)`.
    pub dims: BTreeMap<(usize, usize, u32), usize>,
    /// Nonzero differentials `E^r_{n,w} -> E^r_{n-1,w+r}` per `(r, n, w)`.
    pub differentials: BTreeMap<(usize, usize, u32), SparseMatrix>,
    pub e_infinity: BTreeMap<(usize, u32), usize>,
    pub abutment: BTreeMap<usize, usize>,
    pub r_stab: BTreeMap<(usize, u32), usize>,
    pub n_valid: usize,
}

impl SpectralSequencePages {
    pub fn dim(&self, r: usize, n: usize, w: u32) -> usize {
        self.dims.get(&(r, n, w)).copied().unwrap_or(0)
    }

    pub fn d_rank(&self, r: usize, n: usize, w: u32) -> usize {
        self.differentials
            .get(&(r, n, w))
            .map_or(0, |m| m.rank())
    }

    pub fn e_inf(&self, n: usize, w: u32) -> usize {
        self.e_infinity.get(&(n, w)).copied().unwrap_or(0)
    }

    pub fn total_dim(&self, r: usize, n: usize) -> usize {
        (0..=self.max_weight).map(|w| self.dim(r, n, w)).sum()
    }

    pub fn total_e_inf(&self, n: usize) -> usize {
        (0..=self.max_weight).map(|w| self.e_inf(n, w)).sum()
    }

    pub fn abutment_dim(&self, n: usize) -> usize {
        self.abutment.get(&n).copied().unwrap_or(0)
    }

    /// `dim E^{r+1}_{n,w} = dim ker d^r_{n,w} - rank d^r_{n+1,w-r}`.
    pub fn check_page_turn(&self) -> bool {
        for r in 1..self.r_stored {
            for n in 0..=self.n_max {
                for w in 0..=self.max_weight {
                    let here = self.dim(r, n, w);
                    let out_rank = self.d_rank(r, n, w);
                    let in_rank = match w.checked_sub(r as u32) {
                        Some(wm) => self.d_rank(r, n + 1, wm),
                        None => 0,
                    };
                    let expect = here - out_rank - in_rank;
                    if self.dim(r + 1, n, w) != expect {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `d^r ∘ d^r = 0` as matrices on every page.
    pub fn check_dr_squared(&self) -> bool {
        for (&(r, n, w), inner) in &self.differentials {
            // inner: (n, w) -> (n-1, w+r); outer: (n-1, w+r) -> (n-2, w+2r).
            if let Some(outer) = self.differentials.get(&(r, n - 1, w + r as u32)) {
                let sq = outer.compose(inner).expect("page shapes agree");
                if !sq.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Strong convergence: weight columns of the stable page sum to the
    /// homology of the total complex, in every valid total degree.
    pub fn check_strong_convergence(&self) -> bool {
        (0..=self.n_valid.min(self.n_max)).all(|n| self.total_e_inf(n) == self.abutment_dim(n))
    }

    /// Degrees where the stable page is strictly smaller than the first
    /// page0 — exactly the degrees touched by some nonzero differential.
    pub fn strict_degrees(&self) -> Vec<usize> {
        (0..=self.n_valid.min(self.n_max))
            .filter(|&n| self.total_e_inf(n) < self.total_dim(1, n))
            .collect()
    }

    pub fn has_nonzero_differential(&self) -> bool {
        !self.differentials.is_empty()
    }
}

/// Run the spectral sequence. Pages, stable page and abutment are all
/// computed exactly; `r_max` only bounds what callers typically display,
/// the computation always runs to stabilization.
pub fn pages(fc: &FilteredChainComplex, r_max: usize) -> Result<SpectralSequencePages, SpecSeqError> {
    let max_weight = fc.max_weight();
    if max_weight > MAX_WEIGHT_BOUND {
        return Err(SpecSeqError::UnboundedFiltration {
            max_weight,
            bound: MAX_WEIGHT_BOUND,
        });
    }
    let total = TotalComplex::new(fc);
    let n_max = total.n_max;
    let r_end = max_weight as usize + 2;
    let n_valid = fc.n_valid();

    // Canonical subquotients E^r_{n,w} = Z^r / (Z^{r-1}[w+1] + d Z^{r-1}[w-r+1]).
    let quotient = |n: usize, w: u32, r: usize| -> Quotient {
        let wi = w as i64;
        let ri = r as i64;
        let num = total.z_space(n, wi, wi + ri);
        let den_a = total.z_space(n, wi + 1, wi + ri);
        let den_b = total.d_image(n + 1, &total.z_space(n + 1, wi - ri + 1, wi));
        let den = den_a.sum(&den_b);
        Quotient::new(num, &den).expect("page denominator sits inside the numerator")
    };

    let mut dims = BTreeMap::new();
    let mut differentials = BTreeMap::new();
    let mut quotients: BTreeMap<(usize, usize, u32), Quotient> = BTreeMap::new();
    for r in 1..=r_end {
        for n in 0..=n_max {
            for w in 0..=max_weight {
                let q = quotient(n, w, r);
                if q.dim() > 0 {
                    dims.insert((r, n, w), q.dim());
                    quotients.insert((r, n, w), q);
                }
            }
        }
    }
    for r in 1..=r_end {
        for n in 1..=n_max {
            for w in 0..=max_weight {
                let (Some(src), Some(tgt)) = (
                    quotients.get(&(r, n, w)),
                    quotients.get(&(r, n - 1, w + r as u32)),
                ) else {
                    continue;
                };
                let mut contributions = Vec::new();
                for j in 0..src.dim() {
                    let img = total.d[n].apply(&src.lift(j));
                    let coords = tgt
                        .coords(&img)
                        .expect("boundaries of r-cycles are r-cycles one degree down");
                    for (i, &v) in coords.iter().enumerate() {
                        if v != 0 {
                            contributions.push((i, j, v));
                        }
                    }
                }
                let m = SparseMatrix::from_accumulated(
                    total.field,
                    tgt.dim(),
                    src.dim(),
                    contributions,
                );
                if !m.is_zero() {
                    differentials.insert((r, n, w), m);
                }
            }
        }
    }

    // The stable page: one past r_end everything has stabilized.
    let mut e_infinity = BTreeMap::new();
    for n in 0..=n_max {
        for w in 0..=max_weight {
            let q = quotient(n, w, r_end + 1);
            if q.dim() > 0 {
                e_infinity.insert((n, w), q.dim());
            }
        }
    }

    // Abutment: homology of the total complex.
    let mut abutment = BTreeMap::new();
    for n in 0..=n_max {
        let out_rank = total.d[n].rank();
        let in_rank = if n + 1 <= n_max { total.d[n + 1].rank() } else { 0 };
        let h = total.dim(n) - out_rank - in_rank;
        if h > 0 {
            abutment.insert(n, h);
        }
    }

    // Stabilization page per entry: one past the last differential that
    // touches it.
    let mut r_stab = BTreeMap::new();
    let keys: Vec<(usize, u32)> = dims
        .keys()
        .map(|&(_, n, w)| (n, w))
        .chain(e_infinity.keys().copied())
        .collect();
    for &(n, w) in &keys {
        let mut last_touch = 0usize;
        for r in 1..=r_end {
            let outgoing = differentials.contains_key(&(r, n, w));
            let incoming = (w as i64 - r as i64) >= 0
                && differentials.contains_key(&(r, n + 1, w - r as u32));
            if outgoing || incoming {
                last_touch = r;
            }
        }
        r_stab.insert((n, w), last_touch + 1);
    }

    Ok(SpectralSequencePages {
        field: total.field,
        n_max,
        max_weight,
        r_stored: r_end,
        r_requested: r_max,
        dims,
        differentials,
        e_infinity,
        abutment,
        r_stab,
        n_valid,
    })
}

/// Cross-check: the first page equals the weight-refined homology of the
/// complex built from the associated graded algebra.
pub fn e1_matches_gr_homology(
    pages: &SpectralSequencePages,
    gr_complex: &LodayComplex,
) -> Result<bool, SpecSeqError> {
    let by_weight = gr_complex.homology_by_weight()?;
    let mut expected: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for (&(h, t, w), &d) in &by_weight {
        *expected.entry((h + t as usize, w)).or_default() += d;
    }
    for n in 0..=pages.n_max.min(gr_complex.n_valid()) {
        for w in 0..=pages.max_weight {
            if pages.dim(1, n, w) != expected.get(&(n, w)).copied().unwrap_or(0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Per-degree comparison of `dim H_n(X ⊗ A)` against
/// `dim H_n(X ⊗ gr A)` — the chain-level upper bound.
#[derive(Debug, Clone)]
pub struct UpperBoundReport {
    /// `(n, dim for A, dim for gr A)`.
    pub rows: Vec<(usize, usize, usize)>,
    pub all_ok: bool,
    pub strict_degrees: Vec<usize>,
    pub n_valid: usize,
}

pub fn upper_bound_check(
    x: &SimplicialFiniteSet,
    a: &FilteredAlgebra,
    max_internal: u32,
) -> Result<UpperBoundReport, SpecSeqError> {
    let c = loday::build(x, a, max_internal)?;
    let c_gr = loday::build(x, &associated_graded(a), max_internal)?;
    let h = c.homology();
    let h_gr = c_gr.homology();
    let n_valid = h.n_valid().min(h_gr.n_valid());
    let totals = h.total_dims();
    let totals_gr = h_gr.total_dims();
    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut strict = Vec::new();
    for n in 0..=n_valid {
        let da = totals.get(&n).copied().unwrap_or(0);
        let dg = totals_gr.get(&n).copied().unwrap_or(0);
        rows.push((n, da, dg));
        if da > dg {
            all_ok = false;
        }
        if da < dg {
            strict.push(n);
        }
    }
    Ok(UpperBoundReport {
        rows,
        all_ok,
        strict_degrees: strict,
        n_valid,
    })
}

/// Collapse test on a first-page dimension table: true iff no differential
/// `(n, w) -> (n - 1, w + r)`, `r >= 1`, can connect two nonzero entries.
pub fn collapse_by_bidegree(e1: &BTreeMap<(usize, u32), usize>) -> bool {
    for (&(n, w), &d) in e1 {
        if d == 0 || n == 0 {
            continue;
        }
        for (&(n2, w2), &d2) in e1 {
            if d2 > 0 && n2 + 1 == n && w2 > w {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{algebra_from_json, exterior_algebra, whitehead_filtration};
    use crate::loday::build;
    use crate::mayfilt::filter;
    use crate::simplicial::circle;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn two_term_complex(source_weight: u32, target_weight: u32) -> FilteredChainComplex {
        // F_p --id--> F_p concentrated in h = 1, 0 at t = 0.
        let field = f(3);
        let mut weights = BTreeMap::new();
        weights.insert((1usize, 0u32), vec![source_weight]);
        weights.insert((0usize, 0u32), vec![target_weight]);
        let mut diffs = BTreeMap::new();
        diffs.insert(
            (1usize, 0u32),
            SparseMatrix::new(field, 1, 1, vec![(0, 0, 1)]).unwrap(),
        );
        FilteredChainComplex::from_blocks(field, weights, diffs).unwrap()
    }

    #[test]
    fn trivial_filtration_is_one_column() {
        let a = crate::algebra::FilteredAlgebra::trivial(exterior_algebra(f(3), 3));
        let c = build(&circle(4), &a, 9).unwrap();
        let fc = filter(&c).unwrap();
        let ss = pages(&fc, 10).unwrap();
        assert!(ss.differentials.is_empty());
        for (&(n, w), &d) in &ss.e_infinity {
            assert_eq!(w, 0);
            assert_eq!(ss.dim(1, n, 0), d);
        }
        assert!(ss.check_strong_convergence());
    }

    #[test]
    fn two_term_complex_dies_on_page_one() {
        let fc = two_term_complex(0, 1);
        let ss = pages(&fc, 5).unwrap();
        // E^1 has the two classes; d^1 is an isomorphism; E^2 = 0; H = 0.
        assert_eq!(ss.dim(1, 1, 0), 1);
        assert_eq!(ss.dim(1, 0, 1), 1);
        assert_eq!(ss.d_rank(1, 1, 0), 1);
        assert_eq!(ss.dim(2, 1, 0), 0);
        assert_eq!(ss.dim(2, 0, 1), 0);
        assert!(ss.e_infinity.is_empty());
        assert!(ss.abutment.is_empty());
        assert!(ss.check_page_turn());
        assert!(ss.check_strong_convergence());
        assert_eq!(ss.r_stab.get(&(1, 0)), Some(&2));
    }

    #[test]
    fn weighted_example_has_nonzero_differential_and_reconciles() {
        let a = algebra_from_json(
            r#"{
            "p": 3,
            "basis": [
                {"name": "1", "degree": 0, "weight": 0},
                {"name": "x", "degree": 2, "weight": 1},
                {"name": "x2", "degree": 4, "weight": 3},
                {"name": "x3", "degree": 6, "weight": 4}
            ],
            "unit": "1",
            "products": [
                {"left": "x", "right": "x", "result": [{"basis": "x2", "coeff": 1}]},
                {"left": "x", "right": "x2", "result": [{"basis": "x3", "coeff": 1}]},
                {"left": "x", "right": "x3", "result": []},
                {"left": "x2", "right": "x2", "result": []},
                {"left": "x2", "right": "x3", "result": []},
                {"left": "x3", "right": "x3", "result": []}
            ]
        }"#,
        )
        .unwrap();
        let c = build(&circle(5), &a, 10).unwrap();
        let fc = filter(&c).unwrap();
        let ss = pages(&fc, 10).unwrap();
        assert!(ss.has_nonzero_differential());
        assert!(ss.check_page_turn());
        assert!(ss.check_dr_squared());
        assert!(ss.check_strong_convergence());
        // E^1 agrees with the homology of the gr complex, weight by weight.
        let gr = build(c.space(), &crate::algebra::associated_graded(&a), 10).unwrap();
        assert!(e1_matches_gr_homology(&ss, &gr).unwrap());
        // The upper bound with at least one strict degree.
        let ub = upper_bound_check(c.space(), &a, 10).unwrap();
        assert!(ub.all_ok);
        assert!(!ub.strict_degrees.is_empty());
    }

    #[test]
    fn unbounded_filtration_is_rejected() {
        let fc = two_term_complex(0, MAX_WEIGHT_BOUND + 1);
        assert!(matches!(
            pages(&fc, 3),
            Err(SpecSeqError::UnboundedFiltration { .. })
        ));
    }

    #[test]
    fn collapse_by_bidegree_cases() {
        // Single weight column: collapses.
        let mut one_col = BTreeMap::new();
        one_col.insert((0usize, 0u32), 1usize);
        one_col.insert((3, 0), 2);
        one_col.insert((4, 0), 1);
        assert!(collapse_by_bidegree(&one_col));
        // Classes at (5, 0) and (4, 2): a d^2 could connect them.
        let mut bad = BTreeMap::new();
        bad.insert((5usize, 0u32), 1usize);
        bad.insert((4, 2), 1);
        assert!(!collapse_by_bidegree(&bad));
    }

    #[test]
    fn split_filtration_upper_bound_is_equality() {
        let a = whitehead_filtration(&exterior_algebra(f(3), 3));
        let ub = upper_bound_check(&circle(4), &a, 9).unwrap();
        assert!(ub.all_ok);
        assert!(ub.strict_degrees.is_empty());
    }
}
