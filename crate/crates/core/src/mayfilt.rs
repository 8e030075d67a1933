//! The May filtration: filter a Loday complex of a filtered algebra by
//! total weight, and verify the fundamental theorem of that filtration
//! exactly — weight-graded quotient complexes coincide, basis element by
//! basis element and matrix entry by matrix entry, with the complex built
//! from the associated graded algebra.

use crate::algebra::{associated_graded, associated_graded_bimodule};
use crate::fp::{PrimeField, SparseMatrix};
use crate::loday::{self, LodayComplex, LodayError};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MayError {
    #[error("filtration invariant violated: {0}")]
    Validation(String),
    #[error(transparent)]
    Loday(#[from] LodayError),
}

/// A chain complex with a May weight per basis element; `F_n` at each
/// bidegree is the span of the basis elements of weight `>= n`.
#[derive(Debug, Clone)]
pub struct FilteredChainComplex {
    field: PrimeField,
    /// Weights of the basis elements per `(h, t)` block.
    weights: BTreeMap<(usize, u32), Vec<u32>>,
    /// Differential out of each `(h, t)` block into `(h-1, t)`.
    diffs: BTreeMap<(usize, u32), SparseMatrix>,
    h_valid: usize,
    n_valid: usize,
    source: Option<LodayComplex>,
}

impl FilteredChainComplex {
    /// Hand-built complex (for tests and small examples); `h_valid` covers
    /// every level since nothing is truncated away.
    pub fn from_blocks(
        field: PrimeField,
        weights: BTreeMap<(usize, u32), Vec<u32>>,
        diffs: BTreeMap<(usize, u32), SparseMatrix>,
    ) -> Result<Self, MayError> {
        let h_valid = weights.keys().map(|&(h, _)| h).max().unwrap_or(0);
        let n_valid = weights.keys().map(|&(h, t)| h + t as usize).max().unwrap_or(0);
        let fc = FilteredChainComplex {
            field,
            weights,
            diffs,
            h_valid,
            n_valid,
            source: None,
        };
        fc.validate()?;
        Ok(fc)
    }

    fn validate(&self) -> Result<(), MayError> {
        for (&(h, t), d) in &self.diffs {
            let src = self.weights.get(&(h, t)).map_or(0, |w| w.len());
            let tgt = if h == 0 {
                0
            } else {
                self.weights.get(&(h - 1, t)).map_or(0, |w| w.len())
            };
            if d.cols() != src || d.rows() != tgt {
                return Err(MayError::Validation(format!(
                    "differential shape mismatch at ({h}, {t})"
                )));
            }
            // d(F_n) ⊆ F_n: no entry may decrease the weight.
            for &(r, c, _) in d.entries() {
                let ws = self.weights[&(h, t)][c];
                let wt = self.weights[&(h - 1, t)][r];
                if wt < ws {
                    return Err(MayError::Validation(format!(
                        "differential decreases weight at ({h}, {t})"
                    )));
                }
            }
        }
        // d ∘ d = 0.
        for (&(h, t), d) in &self.diffs {
            if h < 2 {
                continue;
            }
            if let Some(outer) = self.diffs.get(&(h - 1, t)) {
                let sq = outer.compose(d).expect("shapes validated");
                if !sq.is_zero() {
                    return Err(MayError::Validation(format!("d^2 != 0 at ({h}, {t})")));
                }
            }
        }
        Ok(())
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn weights(&self) -> &BTreeMap<(usize, u32), Vec<u32>> {
        &self.weights
    }

    pub fn block_weights(&self, h: usize, t: u32) -> &[u32] {
        self.weights.get(&(h, t)).map_or(&[], |w| w.as_slice())
    }

    pub fn block_dim(&self, h: usize, t: u32) -> usize {
        self.weights.get(&(h, t)).map_or(0, |w| w.len())
    }

    pub fn differential(&self, h: usize, t: u32) -> SparseMatrix {
        self.diffs.get(&(h, t)).cloned().unwrap_or_else(|| {
            let rows = if h == 0 { 0 } else { self.block_dim(h - 1, t) };
            SparseMatrix::zero(self.field, rows, self.block_dim(h, t))
        })
    }

    pub fn h_valid(&self) -> usize {
        self.h_valid
    }

    /// Valid range for total-degree statements; see
    /// [`LodayComplex::n_valid`].
    pub fn n_valid(&self) -> usize {
        self.n_valid
    }

    pub fn max_weight(&self) -> u32 {
        self.weights
            .values()
            .flat_map(|w| w.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn source(&self) -> Option<&LodayComplex> {
        self.source.as_ref()
    }
}

/// Equip a Loday complex of a filtered algebra with the filtration by total
/// weight. Both invariants (weight monotonicity of `d`, exhaustiveness) are
/// checked here.
pub fn filter(c: &LodayComplex) -> Result<FilteredChainComplex, MayError> {
    c.check_weight_monotone()?;
    let weights = c
        .blocks()
        .iter()
        .map(|(&key, elems)| (key, elems.iter().map(|e| e.weight).collect()))
        .collect();
    let diffs = c
        .blocks()
        .keys()
        .filter(|&&(h, _)| h >= 1)
        .map(|&(h, t)| ((h, t), c.differential(h, t)))
        .collect();
    let fc = FilteredChainComplex {
        field: c.field(),
        weights,
        diffs,
        h_valid: c.max_level().saturating_sub(2),
        n_valid: c.n_valid(),
        source: Some(c.clone()),
    };
    fc.validate()?;
    Ok(fc)
}

/// Outcome of the fundamental-theorem verification at one `(h, t, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundamentalEntry {
    pub h: usize,
    pub t: u32,
    pub weight: u32,
    pub dims_equal: bool,
    pub matrices_equal: bool,
}

#[derive(Debug, Clone)]
pub struct FundamentalReport {
    pub entries: Vec<FundamentalEntry>,
    pub pass: bool,
    pub first_failure: Option<String>,
}

/// Verify, exactly, that for every weight `n` the quotient complex
/// `F_n/F_{n+1}` equals the weight-`n` part of the complex built from the
/// associated graded algebra (and associated graded coefficients when
/// present): same basis tensors, same differential matrices under the
/// identification by tensor names.
pub fn check_fundamental(fc: &FilteredChainComplex) -> Result<FundamentalReport, MayError> {
    let c = fc.source().ok_or_else(|| {
        MayError::Validation("fundamental theorem check needs a Loday-built complex".into())
    })?;
    let gr_algebra = associated_graded(c.algebra());
    let gr = match c.coefficients() {
        None => loday::build(c.space(), &gr_algebra, c.max_internal())?,
        Some(m) => {
            let gr_m = associated_graded_bimodule(m);
            loday::build_with_coefficients(c.space(), &gr_algebra, &gr_m, c.max_internal())?
        }
    };

    let mut entries = Vec::new();
    let mut pass = true;
    let mut first_failure = None;
    for (&(h, t), elems) in c.blocks() {
        // The two complexes enumerate identical tensor bases: gr preserves
        // names, degrees and weights.
        let gr_elems = gr.block(h, t);
        if gr_elems.map(|b| b.as_slice()) != Some(elems.as_slice()) {
            pass = false;
            first_failure
                .get_or_insert_with(|| format!("basis mismatch at (h, t) = ({h}, {t})"));
            continue;
        }
        let mut weights: Vec<u32> = elems.iter().map(|e| e.weight).collect();
        weights.sort_unstable();
        weights.dedup();
        let d_c = c.differential(h, t);
        let d_gr = gr.differential(h, t);
        for n in weights {
            let src_idx: Vec<usize> = (0..elems.len()).filter(|&i| elems[i].weight == n).collect();
            let (quot, grn, dims_equal) = if h == 0 {
                (Vec::new(), Vec::new(), true)
            } else {
                let tgt = c.block(h - 1, t).map(|b| b.as_slice()).unwrap_or(&[]);
                let tgt_idx: Vec<usize> =
                    (0..tgt.len()).filter(|&i| tgt[i].weight == n).collect();
                let restrict = |d: &SparseMatrix| -> Vec<(usize, usize, u64)> {
                    let row_pos: BTreeMap<usize, usize> =
                        tgt_idx.iter().enumerate().map(|(a, &b)| (b, a)).collect();
                    let col_pos: BTreeMap<usize, usize> =
                        src_idx.iter().enumerate().map(|(a, &b)| (b, a)).collect();
                    d.entries()
                        .iter()
                        .filter_map(|&(r, cc, v)| match (row_pos.get(&r), col_pos.get(&cc)) {
                            (Some(&rr), Some(&ccc)) => Some((rr, ccc, v)),
                            _ => None,
                        })
                        .collect()
                };
                // F_n/F_{n+1}: entries of d between weight-n elements
                // (higher-weight targets die in the quotient).
                let quot = restrict(&d_c);
                let grn = restrict(&d_gr);
                (quot.clone(), grn.clone(), quot == grn)
            };
            let matrices_equal = quot == grn;
            if !(dims_equal && matrices_equal) {
                pass = false;
                first_failure.get_or_insert_with(|| {
                    format!("differential mismatch at (h, t, n) = ({h}, {t}, {n})")
                });
            }
            entries.push(FundamentalEntry {
                h,
                t,
                weight: n,
                dims_equal,
                matrices_equal,
            });
        }
    }
    // gr must not have blocks the filtered complex lacks.
    for &(h, t) in gr.blocks().keys() {
        if c.block(h, t).is_none() {
            pass = false;
            first_failure
                .get_or_insert_with(|| format!("extra gr block at (h, t) = ({h}, {t})"));
        }
    }
    Ok(FundamentalReport {
        entries,
        pass,
        first_failure,
    })
}

/// Sum over weights of the graded-piece dimensions recovers every block
/// dimension (gr commutes with the construction at the level of dims).
pub fn check_weight_partition(fc: &FilteredChainComplex) -> bool {
    fc.weights.iter().all(|(_, ws)| {
        let total = ws.len();
        let mut per: BTreeMap<u32, usize> = BTreeMap::new();
        for &w in ws {
            *per.entry(w).or_default() += 1;
        }
        per.values().sum::<usize>() == total
    })
}

/// `|{x ∈ N^s : |x| = n}|` — by exhaustive enumeration when small, by the
/// closed form `C(n + s - 1, s - 1)` otherwise.
pub fn weight_component_count(s_size: usize, n: usize) -> u64 {
    if s_size == 0 {
        return u64::from(n == 0);
    }
    let closed = binomial((n + s_size - 1) as u64, (s_size - 1) as u64);
    if s_size * n <= 1_000_000 && closed <= 10_000_000 {
        let mut count = 0u64;
        enumerate_compositions(s_size, n, &mut count);
        debug_assert_eq!(count, closed);
        count
    } else {
        closed
    }
}

fn enumerate_compositions(slots: usize, remaining: usize, count: &mut u64) {
    if slots == 1 {
        *count += 1;
        return;
    }
    for first in 0..=remaining {
        enumerate_compositions(slots - 1, remaining - first, count);
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("weight component count exceeds u64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{
        algebra_from_json, exterior_algebra, whitehead_filtration, FilteredBimodule,
    };
    use crate::loday::build;
    use crate::simplicial::circle;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn weighted_x4_degree_zero() -> crate::algebra::FilteredAlgebra {
        algebra_from_json(
            r#"{
            "p": 3,
            "basis": [
                {"name": "1", "degree": 0, "weight": 0},
                {"name": "x", "degree": 0, "weight": 1},
                {"name": "x2", "degree": 0, "weight": 3},
                {"name": "x3", "degree": 0, "weight": 4}
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
        .unwrap()
    }

    #[test]
    fn trivial_weights_have_one_step_filtration() {
        let a = crate::algebra::FilteredAlgebra::trivial(exterior_algebra(f(3), 3));
        let c = build(&circle(3), &a, 9).unwrap();
        let fc = filter(&c).unwrap();
        assert_eq!(fc.max_weight(), 0);
    }

    #[test]
    fn whitehead_weights_sum_over_tensor_factors() {
        let a = whitehead_filtration(&exterior_algebra(f(3), 3));
        let c = build(&circle(3), &a, 9).unwrap();
        let fc = filter(&c).unwrap();
        // Level-1 tensor (x | x) has weight 2 * deg x = 6.
        let ws = fc.block_weights(1, 6);
        assert!(ws.contains(&6));
    }

    #[test]
    fn strict_weight_jump_is_monotone_not_preserving() {
        // Weights (0,1,3,4) on F_3[x]/x^4: d maps (x|x) (weight 2) into the
        // span of x2 (weight 3) — a strict jump the filtration tolerates.
        let a = weighted_x4_degree_zero();
        let c = build(&circle(4), &a, 0).unwrap();
        let fc = filter(&c).unwrap();
        assert!(fc.max_weight() > 0);
        // Weight-preservation must fail for this algebra (the jump exists),
        // which is exactly why homology_by_weight refuses it.
        assert!(c.homology_by_weight().is_err());
    }

    #[test]
    fn fundamental_theorem_for_split_filtration() {
        let a = whitehead_filtration(&exterior_algebra(f(3), 3));
        let c = build(&circle(4), &a, 12).unwrap();
        let fc = filter(&c).unwrap();
        let report = check_fundamental(&fc).unwrap();
        assert!(report.pass, "{:?}", report.first_failure);
    }

    #[test]
    fn fundamental_theorem_for_weight_jumping_filtration() {
        let a = weighted_x4_degree_zero();
        let c = build(&circle(4), &a, 0).unwrap();
        let fc = filter(&c).unwrap();
        let report = check_fundamental(&fc).unwrap();
        assert!(report.pass, "{:?}", report.first_failure);
        // Hand check on the level 1 -> 0 block at weight 2: in F_2/F_3 the
        // class (x|x) maps to zero (x*x = x2 has weight 3), matching the gr
        // complex where the product x*x is zero outright.
        let c_gr = build(c.space(), &crate::algebra::associated_graded(&a), 0).unwrap();
        let b1 = c_gr.block(1, 0).unwrap();
        let xx = b1.iter().position(|e| e.factors == vec![1, 1]).unwrap();
        let d = c_gr.differential(1, 0);
        assert!(d.entries().iter().all(|&(_, col, _)| col != xx));
    }

    #[test]
    fn fundamental_theorem_with_coefficients() {
        let a = weighted_x4_degree_zero();
        let m = FilteredBimodule::regular(&a);
        let c = crate::loday::build_with_coefficients(&circle(4), &a, &m, 0).unwrap();
        let fc = filter(&c).unwrap();
        let report = check_fundamental(&fc).unwrap();
        assert!(report.pass, "{:?}", report.first_failure);
    }

    #[test]
    fn weight_component_counts() {
        assert_eq!(weight_component_count(1, 5), 1);
        assert_eq!(weight_component_count(2, 2), 3);
        assert_eq!(weight_component_count(3, 2), 6);
        // Enumeration agrees with C(n+s-1, s-1), not with C(n+s, n).
        for s in 1..=6usize {
            for n in 0..=8usize {
                assert_eq!(
                    weight_component_count(s, n),
                    binomial((n + s - 1) as u64, (s - 1) as u64)
                );
            }
        }
        assert_ne!(weight_component_count(1, 2), binomial(3, 2));
    }

    #[test]
    fn weight_partition_covers_blocks() {
        let a = weighted_x4_degree_zero();
        let c = build(&circle(3), &a, 0).unwrap();
        let fc = filter(&c).unwrap();
        assert!(check_weight_partition(&fc));
    }
}
