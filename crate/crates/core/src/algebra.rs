//! Finite graded-commutative `F_p`-algebras, decreasing multiplicative
//! filtrations, symmetric bimodules, and the associated graded functor.
//!
//! An algebra is a named basis with internal degrees and structure constants.
//! Construction validates degree additivity, unitality, associativity and
//! graded commutativity exhaustively over the finite basis. A filtration is a
//! weight per basis element with `w(unit) = 0` and
//! `c_{ij}^k != 0 => w(k) >= w(i) + w(j)`; the associated graded algebra
//! keeps exactly the weight-additive components.

use crate::fp::{FpError, PrimeField};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("invalid algebra: {0}")]
    Validation(String),
    #[error("odd generator degree {degree} with p = {p} forces x^2 = 0, so truncation order > 2 is inconsistent")]
    OddDegreeTruncation { p: u64, degree: u32 },
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("field mismatch: p = {left} vs p = {right}")]
    FieldMismatch { left: u64, right: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("algebra file: {0}")]
    Json(String),
    #[error(transparent)]
    Fp(#[from] FpError),
}

/// A linear combination of basis elements: sorted, deduplicated, nonzero
/// coefficients.
pub type Combo = Vec<(usize, u64)>;

fn normalize_combo(field: PrimeField, terms: impl IntoIterator<Item = (usize, u64)>) -> Combo {
    let mut acc: BTreeMap<usize, u64> = BTreeMap::new();
    for (k, c) in terms {
        let slot = acc.entry(k).or_insert(0);
        *slot = field.add(*slot, c % field.p());
    }
    acc.into_iter().filter(|&(_, c)| c != 0).collect()
}

/// Scale a combo by a scalar.
pub fn scale_combo(field: PrimeField, combo: &[(usize, u64)], s: u64) -> Combo {
    if s == 0 {
        return Vec::new();
    }
    combo.iter().map(|&(k, c)| (k, field.mul(c, s))).collect()
}

/// A finite-type graded-commutative algebra over `F_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedAlgebra {
    field: PrimeField,
    names: Vec<String>,
    degrees: Vec<u32>,
    unit: usize,
    /// `products[i][j]` = the combo for `e_i * e_j`.
    products: Vec<Vec<Combo>>,
    /// Internal degree above which products were forced to zero, if any.
    truncation: Option<u32>,
}

impl GradedAlgebra {
    pub fn new(
        field: PrimeField,
        names: Vec<String>,
        degrees: Vec<u32>,
        unit: usize,
        products: Vec<Vec<Combo>>,
        truncation: Option<u32>,
    ) -> Result<Self, AlgebraError> {
        let n = names.len();
        if degrees.len() != n || products.len() != n || products.iter().any(|row| row.len() != n) {
            return Err(AlgebraError::Validation(
                "basis, degree and product tables have mismatched sizes".into(),
            ));
        }
        if unit >= n {
            return Err(AlgebraError::Validation("unit index out of range".into()));
        }
        {
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != n {
                return Err(AlgebraError::Validation("duplicate basis names".into()));
            }
        }
        let products: Vec<Vec<Combo>> = products
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|combo| normalize_combo(field, combo))
                    .collect()
            })
            .collect();
        let alg = GradedAlgebra {
            field,
            names,
            degrees,
            unit,
            products,
            truncation,
        };
        alg.validate()?;
        Ok(alg)
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        let n = self.names.len();
        if self.degrees[self.unit] != 0 {
            return Err(AlgebraError::Validation(format!(
                "unit {} must have degree 0",
                self.names[self.unit]
            )));
        }
        // Degree additivity.
        for i in 0..n {
            for j in 0..n {
                for &(k, _) in &self.products[i][j] {
                    if k >= n {
                        return Err(AlgebraError::Validation("product index out of range".into()));
                    }
                    if self.degrees[k] != self.degrees[i] + self.degrees[j] {
                        return Err(AlgebraError::Validation(format!(
                            "degree additivity violated: {}*{} hits {}",
                            self.names[i], self.names[j], self.names[k]
                        )));
                    }
                }
            }
        }
        // Unitality.
        for i in 0..n {
            let expect = vec![(i, 1u64)];
            if self.products[self.unit][i] != expect || self.products[i][self.unit] != expect {
                return Err(AlgebraError::Validation(format!(
                    "unitality violated at {}",
                    self.names[i]
                )));
            }
        }
        // Graded commutativity: e_j e_i = (-1)^{deg_i deg_j} e_i e_j.
        for i in 0..n {
            for j in 0..n {
                let sign = self.field.sign(self.degrees[i] * self.degrees[j]);
                let flipped = scale_combo(self.field, &self.products[i][j], sign);
                if self.products[j][i] != flipped {
                    return Err(AlgebraError::Validation(format!(
                        "graded commutativity violated at {} * {}",
                        self.names[i], self.names[j]
                    )));
                }
            }
        }
        // Associativity, exhaustively over basis triples.
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let left = self.mul_combo(&self.products[i][j], &[(k, 1)]);
                    let right = self.mul_combo(&[(i, 1)], &self.products[j][k]);
                    if left != right {
                        return Err(AlgebraError::Validation(format!(
                            "associativity violated at ({}, {}, {})",
                            self.names[i], self.names[j], self.names[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn truncation(&self) -> Option<u32> {
        self.truncation
    }

    pub fn mul_basis(&self, i: usize, j: usize) -> &Combo {
        &self.products[i][j]
    }

    pub fn mul_combo(&self, a: &[(usize, u64)], b: &[(usize, u64)]) -> Combo {
        let mut terms = Vec::new();
        for &(i, ca) in a {
            for &(j, cb) in b {
                let c = self.field.mul(ca, cb);
                for &(k, ck) in &self.products[i][j] {
                    terms.push((k, self.field.mul(c, ck)));
                }
            }
        }
        normalize_combo(self.field, terms)
    }
}

/// A graded algebra together with a decreasing multiplicative filtration,
/// encoded as a weight per basis element (`F_n` = span of weight `>= n`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredAlgebra {
    algebra: GradedAlgebra,
    weights: Vec<u32>,
}

impl FilteredAlgebra {
    pub fn new(algebra: GradedAlgebra, weights: Vec<u32>) -> Result<Self, AlgebraError> {
        if weights.len() != algebra.len() {
            return Err(AlgebraError::Validation("weight table size mismatch".into()));
        }
        if weights[algebra.unit()] != 0 {
            return Err(AlgebraError::Validation("unit must have weight 0".into()));
        }
        for i in 0..algebra.len() {
            for j in 0..algebra.len() {
                for &(k, _) in algebra.mul_basis(i, j) {
                    if weights[k] < weights[i] + weights[j] {
                        return Err(AlgebraError::Validation(format!(
                            "filtration multiplicativity violated: w({}) < w({}) + w({})",
                            algebra.names()[k],
                            algebra.names()[i],
                            algebra.names()[j]
                        )));
                    }
                }
            }
        }
        Ok(FilteredAlgebra { algebra, weights })
    }

    /// The trivial filtration (all weights zero).
    pub fn trivial(algebra: GradedAlgebra) -> Self {
        let weights = vec![0; algebra.len()];
        FilteredAlgebra { algebra, weights }
    }

    pub fn algebra(&self) -> &GradedAlgebra {
        &self.algebra
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> u32 {
        self.weights[i]
    }

    pub fn max_weight(&self) -> u32 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    /// Bounded weights make the filtration Hausdorff: the intersection of the
    /// `F_n` is zero.
    pub fn is_hausdorff(&self) -> bool {
        true
    }

    /// The filtration stabilizes after [`Self::max_weight`] steps.
    pub fn is_finite(&self) -> bool {
        true
    }

    /// Tensor product of filtered algebras; weights add.
    pub fn tensor(&self, other: &FilteredAlgebra) -> Result<FilteredAlgebra, AlgebraError> {
        let alg = tensor_product(&self.algebra, &other.algebra)?;
        let mut weights = Vec::with_capacity(alg.len());
        for &wa in &self.weights {
            for &wb in &other.weights {
                weights.push(wa + wb);
            }
        }
        FilteredAlgebra::new(alg, weights)
    }
}

/// Keep only the weight-additive components of every product.
pub fn associated_graded(fa: &FilteredAlgebra) -> FilteredAlgebra {
    let a = fa.algebra();
    let n = a.len();
    let mut products = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..n {
            products[i][j] = a
                .mul_basis(i, j)
                .iter()
                .copied()
                .filter(|&(k, _)| fa.weight(k) == fa.weight(i) + fa.weight(j))
                .collect();
        }
    }
    let algebra = GradedAlgebra::new(
        a.field(),
        a.names().to_vec(),
        a.degrees().to_vec(),
        a.unit(),
        products,
        a.truncation(),
    )
    .expect("associated graded of a valid filtered algebra is valid");
    FilteredAlgebra::new(algebra, fa.weights().to_vec())
        .expect("associated graded keeps the filtration valid")
}

/// A symmetric bimodule over a filtered algebra, with its own decreasing
/// filtration. Only the left action is stored; the right action is the left
/// action twisted by the Koszul sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredBimodule {
    base: FilteredAlgebra,
    names: Vec<String>,
    degrees: Vec<u32>,
    weights: Vec<u32>,
    /// `left[i][j]` = combo (over the module basis) for `e_i . m_j`.
    left: Vec<Vec<Combo>>,
}

impl FilteredBimodule {
    pub fn new(
        base: FilteredAlgebra,
        names: Vec<String>,
        degrees: Vec<u32>,
        weights: Vec<u32>,
        left: Vec<Vec<Combo>>,
    ) -> Result<Self, AlgebraError> {
        let a = base.algebra();
        let field = a.field();
        let na = a.len();
        let nm = names.len();
        if degrees.len() != nm
            || weights.len() != nm
            || left.len() != na
            || left.iter().any(|row| row.len() != nm)
        {
            return Err(AlgebraError::Validation("bimodule table size mismatch".into()));
        }
        let left: Vec<Vec<Combo>> = left
            .into_iter()
            .map(|row| row.into_iter().map(|c| normalize_combo(field, c)).collect())
            .collect();
        let m = FilteredBimodule {
            base,
            names,
            degrees,
            weights,
            left,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        let a = self.base.algebra();
        let na = a.len();
        let nm = self.names.len();
        // Degree additivity and weight compatibility of the action.
        for i in 0..na {
            for j in 0..nm {
                for &(k, _) in &self.left[i][j] {
                    if k >= nm {
                        return Err(AlgebraError::Validation("action index out of range".into()));
                    }
                    if self.degrees[k] != a.degree(i) + self.degrees[j] {
                        return Err(AlgebraError::DegreeMismatch(format!(
                            "action {} . {} hits {}",
                            a.names()[i],
                            self.names[j],
                            self.names[k]
                        )));
                    }
                    if self.weights[k] < self.base.weight(i) + self.weights[j] {
                        return Err(AlgebraError::Validation(format!(
                            "action weight compatibility violated at {} . {}",
                            a.names()[i],
                            self.names[j]
                        )));
                    }
                }
            }
        }
        // Unitality.
        for j in 0..nm {
            if self.left[a.unit()][j] != vec![(j, 1u64)] {
                return Err(AlgebraError::Validation(format!(
                    "action unitality violated at {}",
                    self.names[j]
                )));
            }
        }
        // Associativity: (e_i e_j) . m = e_i . (e_j . m).
        for i in 0..na {
            for j in 0..na {
                for m in 0..nm {
                    let via_product = self.act_combo(a.mul_basis(i, j), &[(m, 1)]);
                    let nested = self.act_combo(&[(i, 1)], &self.left[j][m]);
                    if via_product != nested {
                        return Err(AlgebraError::Validation(format!(
                            "action associativity violated at ({}, {}, {})",
                            a.names()[i],
                            a.names()[j],
                            self.names[m]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn base(&self) -> &FilteredAlgebra {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degree(&self, j: usize) -> u32 {
        self.degrees[j]
    }

    pub fn weight(&self, j: usize) -> u32 {
        self.weights[j]
    }

    pub fn max_weight(&self) -> u32 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    pub fn left_basis(&self, i: usize, j: usize) -> &Combo {
        &self.left[i][j]
    }

    /// Left action on combos: `(sum a) . (sum m)`.
    pub fn act_combo(&self, a: &[(usize, u64)], m: &[(usize, u64)]) -> Combo {
        let field = self.base.algebra().field();
        let mut terms = Vec::new();
        for &(i, ca) in a {
            for &(j, cm) in m {
                let c = field.mul(ca, cm);
                for &(k, ck) in &self.left[i][j] {
                    terms.push((k, field.mul(c, ck)));
                }
            }
        }
        normalize_combo(field, terms)
    }

    /// Right action `m . a`, the left action twisted by the factor-swap sign.
    pub fn act_right_combo(&self, m: &[(usize, u64)], a: &[(usize, u64)]) -> Combo {
        let field = self.base.algebra().field();
        let alg = self.base.algebra();
        let mut terms = Vec::new();
        for &(j, cm) in m {
            for &(i, ca) in a {
                let sign = field.sign(alg.degree(i) * self.degrees[j]);
                let c = field.mul(field.mul(cm, ca), sign);
                for &(k, ck) in &self.left[i][j] {
                    terms.push((k, field.mul(c, ck)));
                }
            }
        }
        normalize_combo(field, terms)
    }

    /// The algebra as a bimodule over itself.
    pub fn regular(fa: &FilteredAlgebra) -> Self {
        let a = fa.algebra();
        let left = (0..a.len())
            .map(|i| (0..a.len()).map(|j| a.mul_basis(i, j).clone()).collect())
            .collect();
        FilteredBimodule {
            base: fa.clone(),
            names: a.names().to_vec(),
            degrees: a.degrees().to_vec(),
            weights: fa.weights().to_vec(),
            left,
        }
    }

    /// The regular bimodule with internal degrees shifted by `degree_shift`
    /// and weights shifted by `weight_shift`.
    pub fn shifted_regular(fa: &FilteredAlgebra, degree_shift: u32, weight_shift: u32) -> Self {
        let mut m = Self::regular(fa);
        for d in &mut m.degrees {
            *d += degree_shift;
        }
        for w in &mut m.weights {
            *w += weight_shift;
        }
        m
    }

    /// Rank-one module `Sigma^shift F_p` with the algebra acting through the
    /// degree-zero augmentation (the unit acts by 1, every other basis
    /// element acts by 0). Fails when that augmentation is not an algebra
    /// map for `fa`.
    pub fn augmentation_module(
        fa: &FilteredAlgebra,
        degree_shift: u32,
        weight: u32,
    ) -> Result<Self, AlgebraError> {
        let a = fa.algebra();
        let left = (0..a.len())
            .map(|i| {
                vec![if i == a.unit() { vec![(0usize, 1u64)] } else { Vec::new() }]
            })
            .collect();
        FilteredBimodule::new(
            fa.clone(),
            vec!["m".to_string()],
            vec![degree_shift],
            vec![weight],
            left,
        )
    }

    /// The zero module.
    pub fn zero(fa: &FilteredAlgebra) -> Self {
        let left = vec![Vec::new(); fa.algebra().len()];
        FilteredBimodule {
            base: fa.clone(),
            names: Vec::new(),
            degrees: Vec::new(),
            weights: Vec::new(),
            left,
        }
    }

    /// The submodule spanned by the given basis indices; the index set must
    /// be closed under the action.
    pub fn submodule(&self, indices: &[usize]) -> Result<(FilteredBimodule, Vec<usize>), AlgebraError> {
        let mut keep = indices.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let a = self.base.algebra();
        let mut left = vec![vec![Vec::new(); keep.len()]; a.len()];
        for i in 0..a.len() {
            for (new_j, &old_j) in keep.iter().enumerate() {
                let mut combo = Vec::new();
                for &(k, c) in &self.left[i][old_j] {
                    match pos.get(&k) {
                        Some(&new_k) => combo.push((new_k, c)),
                        None => {
                            return Err(AlgebraError::Validation(format!(
                                "indices are not closed under the action: {} . {} leaves the span",
                                a.names()[i],
                                self.names[old_j]
                            )))
                        }
                    }
                }
                left[i][new_j] = combo;
            }
        }
        let m = FilteredBimodule::new(
            self.base.clone(),
            keep.iter().map(|&j| self.names[j].clone()).collect(),
            keep.iter().map(|&j| self.degrees[j]).collect(),
            keep.iter().map(|&j| self.weights[j]).collect(),
            left,
        )?;
        Ok((m, keep))
    }

    /// The quotient by the submodule spanned by `kill` (which must be closed
    /// under the action). Returns the quotient and the surviving old indices.
    pub fn quotient(&self, kill: &[usize]) -> Result<(FilteredBimodule, Vec<usize>), AlgebraError> {
        self.submodule(kill)?; // validates closure
        let killed: std::collections::BTreeSet<usize> = kill.iter().copied().collect();
        let keep: Vec<usize> = (0..self.len()).filter(|j| !killed.contains(j)).collect();
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let a = self.base.algebra();
        let mut left = vec![vec![Vec::new(); keep.len()]; a.len()];
        for i in 0..a.len() {
            for (new_j, &old_j) in keep.iter().enumerate() {
                left[i][new_j] = self.left[i][old_j]
                    .iter()
                    .filter_map(|&(k, c)| pos.get(&k).map(|&nk| (nk, c)))
                    .collect();
            }
        }
        let m = FilteredBimodule::new(
            self.base.clone(),
            keep.iter().map(|&j| self.names[j].clone()).collect(),
            keep.iter().map(|&j| self.degrees[j]).collect(),
            keep.iter().map(|&j| self.weights[j]).collect(),
            left,
        )?;
        Ok((m, keep))
    }
}

/// Weight-additive part of the bimodule action.
pub fn associated_graded_bimodule(m: &FilteredBimodule) -> FilteredBimodule {
    let gr_base = associated_graded(m.base());
    let a = m.base().algebra();
    let left = (0..a.len())
        .map(|i| {
            (0..m.len())
                .map(|j| {
                    m.left_basis(i, j)
                        .iter()
                        .copied()
                        .filter(|&(k, _)| m.weight(k) == m.base().weight(i) + m.weight(j))
                        .collect()
                })
                .collect()
        })
        .collect();
    FilteredBimodule::new(
        gr_base,
        m.names().to_vec(),
        (0..m.len()).map(|j| m.degree(j)).collect(),
        (0..m.len()).map(|j| m.weight(j)).collect(),
        left,
    )
    .expect("associated graded of a valid bimodule is valid")
}

/// Exterior algebra `E(x)` on one generator: basis `{1, x}` with `x^2 = 0`.
pub fn exterior_algebra(field: PrimeField, deg_x: u32) -> GradedAlgebra {
    exterior_algebra_named(field, deg_x, "x")
}

pub fn exterior_algebra_named(field: PrimeField, deg_x: u32, name: &str) -> GradedAlgebra {
    let names = vec!["1".to_string(), name.to_string()];
    let one = vec![(0usize, 1u64)];
    let x = vec![(1usize, 1u64)];
    let products = vec![vec![one, x.clone()], vec![x, Vec::new()]];
    GradedAlgebra::new(field, names, vec![0, deg_x], 0, products, None)
        .expect("exterior algebra is valid")
}

/// Truncated polynomial algebra `F_p[x]/x^n` on an even-degree generator.
pub fn truncated_polynomial(
    field: PrimeField,
    deg_x: u32,
    n: u32,
) -> Result<GradedAlgebra, AlgebraError> {
    if n < 2 {
        return Err(AlgebraError::InvalidParameter("truncation order must be >= 2".into()));
    }
    if deg_x == 0 {
        return Err(AlgebraError::InvalidParameter("generator degree must be positive".into()));
    }
    if deg_x % 2 == 1 && field.p() != 2 && n > 2 {
        return Err(AlgebraError::OddDegreeTruncation {
            p: field.p(),
            degree: deg_x,
        });
    }
    let names = (0..n).map(power_name).collect();
    let degrees = (0..n).map(|k| k * deg_x).collect();
    let products = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i + j < n {
                        vec![((i + j) as usize, 1u64)]
                    } else {
                        Vec::new()
                    }
                })
                .collect()
        })
        .collect();
    GradedAlgebra::new(field, names, degrees, 0, products, None)
}

fn power_name(k: u32) -> String {
    match k {
        0 => "1".to_string(),
        1 => "x".to_string(),
        k => format!("x{k}"),
    }
}

/// `F_p[x]` cut off above `max_internal`: basis `{x^k : k deg <= max_internal}`,
/// products landing above the cutoff set to zero and flagged.
pub fn polynomial_truncated_model(
    field: PrimeField,
    deg_x: u32,
    max_internal: u32,
) -> Result<GradedAlgebra, AlgebraError> {
    if deg_x == 0 || deg_x % 2 == 1 {
        return Err(AlgebraError::InvalidParameter(
            "polynomial model needs a positive even generator degree".into(),
        ));
    }
    let top = max_internal / deg_x;
    let names = (0..=top).map(power_name).collect();
    let degrees = (0..=top).map(|k| k * deg_x).collect();
    let products = (0..=top)
        .map(|i| {
            (0..=top)
                .map(|j| {
                    if i + j <= top {
                        vec![((i + j) as usize, 1u64)]
                    } else {
                        Vec::new()
                    }
                })
                .collect()
        })
        .collect();
    GradedAlgebra::new(field, names, degrees, 0, products, Some(max_internal))
}

/// Trivial square-zero extension `A ⋉ M`: basis `A ⊔ M`, `A`-products from
/// the algebra, mixed products from the actions, `M * M = 0`.
pub fn square_zero_extension(m: &FilteredBimodule) -> Result<GradedAlgebra, AlgebraError> {
    let fa = m.base();
    let a = fa.algebra();
    let na = a.len();
    let nm = m.len();
    let n = na + nm;
    let mut names: Vec<String> = a.names().to_vec();
    for mn in m.names() {
        let candidate = if names.contains(mn) {
            format!("m_{mn}")
        } else {
            mn.clone()
        };
        names.push(candidate);
    }
    let mut degrees: Vec<u32> = a.degrees().to_vec();
    degrees.extend((0..nm).map(|j| m.degree(j)));
    let mut products = vec![vec![Vec::new(); n]; n];
    for i in 0..na {
        for j in 0..na {
            products[i][j] = a.mul_basis(i, j).clone();
        }
        for j in 0..nm {
            products[i][na + j] = m
                .left_basis(i, j)
                .iter()
                .map(|&(k, c)| (na + k, c))
                .collect();
            products[na + j][i] = m
                .act_right_combo(&[(j, 1)], &[(i, 1)])
                .iter()
                .map(|&(k, c)| (na + k, c))
                .collect();
        }
    }
    GradedAlgebra::new(a.field(), names, degrees, a.unit(), products, a.truncation())
}

/// The square-zero extension with its two-step filtration: the algebra part
/// keeps its weights and the module part keeps its own (typically shifted)
/// weights.
pub fn square_zero_filtered(m: &FilteredBimodule) -> Result<FilteredAlgebra, AlgebraError> {
    let alg = square_zero_extension(m)?;
    let mut weights: Vec<u32> = m.base().weights().to_vec();
    weights.extend((0..m.len()).map(|j| m.weight(j)));
    FilteredAlgebra::new(alg, weights)
}

/// Tensor product `A ⊗ B` with the Koszul-signed product.
pub fn tensor_product(a: &GradedAlgebra, b: &GradedAlgebra) -> Result<GradedAlgebra, AlgebraError> {
    if a.field() != b.field() {
        return Err(AlgebraError::FieldMismatch {
            left: a.field().p(),
            right: b.field().p(),
        });
    }
    let field = a.field();
    let (na, nb) = (a.len(), b.len());
    let idx = |i: usize, j: usize| i * nb + j;
    let mut names = Vec::with_capacity(na * nb);
    let mut degrees = Vec::with_capacity(na * nb);
    for i in 0..na {
        for j in 0..nb {
            names.push(format!("{}*{}", a.names()[i], b.names()[j]));
            degrees.push(a.degree(i) + b.degree(j));
        }
    }
    let mut products = vec![vec![Vec::new(); na * nb]; na * nb];
    for i1 in 0..na {
        for j1 in 0..nb {
            for i2 in 0..na {
                for j2 in 0..nb {
                    // (a1 ⊗ b1)(a2 ⊗ b2) = (-1)^{|b1||a2|} a1 a2 ⊗ b1 b2
                    let sign = field.sign(b.degree(j1) * a.degree(i2));
                    let mut combo = Vec::new();
                    for &(ka, ca) in a.mul_basis(i1, i2) {
                        for &(kb, cb) in b.mul_basis(j1, j2) {
                            combo.push((idx(ka, kb), field.mul(sign, field.mul(ca, cb))));
                        }
                    }
                    products[idx(i1, j1)][idx(i2, j2)] = combo;
                }
            }
        }
    }
    let truncation = match (a.truncation(), b.truncation()) {
        (None, None) => None,
        (t, None) => t,
        (None, t) => t,
        (Some(s), Some(t)) => Some(s.min(t)),
    };
    GradedAlgebra::new(field, names, degrees, idx(a.unit(), b.unit()), products, truncation)
}

/// Weight := internal degree. Multiplicativity holds by degree additivity,
/// and the associated graded keeps every product.
pub fn whitehead_filtration(a: &GradedAlgebra) -> FilteredAlgebra {
    let weights = a.degrees().to_vec();
    FilteredAlgebra::new(a.clone(), weights).expect("degree weights are always multiplicative")
}

// ---------------------------------------------------------------------------
// Algebra file format (JSON)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct AlgebraFile {
    p: u64,
    basis: Vec<BasisEntry>,
    unit: String,
    #[serde(default)]
    products: Vec<ProductEntry>,
}

#[derive(Serialize, Deserialize)]
struct BasisEntry {
    name: String,
    degree: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct ProductEntry {
    left: String,
    right: String,
    result: Vec<TermEntry>,
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    basis: String,
    coeff: i64,
}

/// Parse the algebra file format. Products omitted are zero, except that
/// products with the unit are implied by unitality; only pairs with
/// `left index <= right index` may be listed, the rest is filled in by
/// graded commutativity.
pub fn algebra_from_json(text: &str) -> Result<FilteredAlgebra, AlgebraError> {
    let file: AlgebraFile =
        serde_json::from_str(text).map_err(|e| AlgebraError::Json(e.to_string()))?;
    let field = PrimeField::new(file.p)?;
    let n = file.basis.len();
    let index: BTreeMap<&str, usize> = file
        .basis
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name.as_str(), i))
        .collect();
    if index.len() != n {
        return Err(AlgebraError::Json("duplicate basis names".into()));
    }
    let lookup = |name: &str| -> Result<usize, AlgebraError> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| AlgebraError::Json(format!("unknown basis element '{name}'")))
    };
    let unit = lookup(&file.unit)?;
    let degrees: Vec<u32> = file.basis.iter().map(|b| b.degree).collect();
    let weights: Vec<u32> = file.basis.iter().map(|b| b.weight.unwrap_or(0)).collect();

    let mut products: Vec<Vec<Option<Combo>>> = vec![vec![None; n]; n];
    for entry in &file.products {
        let li = lookup(&entry.left)?;
        let ri = lookup(&entry.right)?;
        if li > ri {
            return Err(AlgebraError::Json(format!(
                "product ({}, {}) listed with left index > right index",
                entry.left, entry.right
            )));
        }
        if products[li][ri].is_some() {
            return Err(AlgebraError::Json(format!(
                "product ({}, {}) listed twice",
                entry.left, entry.right
            )));
        }
        let mut combo = Vec::new();
        for term in &entry.result {
            combo.push((lookup(&term.basis)?, field.reduce(term.coeff)));
        }
        let combo = normalize_combo(field, combo);
        let sign = field.sign(degrees[li] * degrees[ri]);
        let mirrored = scale_combo(field, &combo, sign);
        products[li][ri] = Some(combo);
        if ri != li {
            products[ri][li] = Some(mirrored);
        }
    }
    let table: Vec<Vec<Combo>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match &products[i][j] {
                    Some(c) => c.clone(),
                    // Unlisted products are zero, except unit rows which are
                    // forced by unitality.
                    None if i == unit => vec![(j, 1)],
                    None if j == unit => vec![(i, 1)],
                    None => Vec::new(),
                })
                .collect()
        })
        .collect();
    let algebra = GradedAlgebra::new(field, file.basis.iter().map(|b| b.name.clone()).collect(), degrees, unit, table, None)?;
    FilteredAlgebra::new(algebra, weights)
}

/// Serialize in the same format `algebra_from_json` reads. Unit products are
/// implied and omitted; only `left index <= right index` pairs are emitted.
pub fn algebra_to_json(fa: &FilteredAlgebra) -> String {
    let a = fa.algebra();
    let basis = (0..a.len())
        .map(|i| BasisEntry {
            name: a.names()[i].clone(),
            degree: a.degree(i),
            weight: Some(fa.weight(i)),
        })
        .collect();
    let mut products = Vec::new();
    for i in 0..a.len() {
        for j in i..a.len() {
            if i == a.unit() || j == a.unit() {
                continue;
            }
            let combo = a.mul_basis(i, j);
            if combo.is_empty() {
                continue;
            }
            products.push(ProductEntry {
                left: a.names()[i].clone(),
                right: a.names()[j].clone(),
                result: combo
                    .iter()
                    .map(|&(k, c)| TermEntry {
                        basis: a.names()[k].clone(),
                        coeff: c as i64,
                    })
                    .collect(),
            });
        }
    }
    let file = AlgebraFile {
        p: a.field().p(),
        basis,
        unit: a.names()[a.unit()].clone(),
        products,
    };
    serde_json::to_string_pretty(&file).expect("algebra serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    /// F_3[x]/x^4 with all internal degrees 0 (so the interesting structure
    /// is purely in the weights).
    pub(crate) fn degree_zero_x4(field: PrimeField, weights: [u32; 4]) -> FilteredAlgebra {
        let names = vec!["1".into(), "x".into(), "x2".into(), "x3".into()];
        let products = (0..4usize)
            .map(|i| {
                (0..4usize)
                    .map(|j| if i + j < 4 { vec![(i + j, 1u64)] } else { Vec::new() })
                    .collect()
            })
            .collect();
        let alg = GradedAlgebra::new(field, names, vec![0; 4], 0, products, None).unwrap();
        FilteredAlgebra::new(alg, weights.to_vec()).unwrap()
    }

    #[test]
    fn exterior_is_two_dimensional_and_square_zero() {
        for (p, d) in [(3u64, 3u32), (2, 1), (5, 2)] {
            let a = exterior_algebra(f(p), d);
            assert_eq!(a.len(), 2);
            assert_eq!(a.mul_basis(1, 1), &Vec::new());
            assert_eq!(a.degree(1), d);
        }
    }

    #[test]
    fn truncated_polynomial_cases() {
        let a = truncated_polynomial(f(3), 2, 4).unwrap();
        assert_eq!(a.len(), 4);
        let b = truncated_polynomial(f(3), 2, 2).unwrap();
        assert_eq!(b, exterior_algebra(f(3), 2));
        assert!(matches!(
            truncated_polynomial(f(3), 3, 3),
            Err(AlgebraError::OddDegreeTruncation { .. })
        ));
    }

    #[test]
    fn polynomial_model_basis_counts() {
        assert_eq!(polynomial_truncated_model(f(3), 4, 10).unwrap().len(), 3);
        assert_eq!(polynomial_truncated_model(f(2), 2, 0).unwrap().len(), 1);
        assert_eq!(polynomial_truncated_model(f(5), 2, 7).unwrap().len(), 4);
    }

    #[test]
    fn associated_graded_weight_selection() {
        // Weights (0,1,3,4): x*x lands in weight 3 but needs 2, so it dies;
        // x*x2 adds exactly (1+3=4) and survives; x2*x2 dies.
        let fa = degree_zero_x4(f(3), [0, 1, 3, 4]);
        let gr = associated_graded(&fa);
        assert_eq!(gr.algebra().mul_basis(1, 1), &Vec::new());
        assert_eq!(gr.algebra().mul_basis(1, 2), &vec![(3usize, 1u64)]);
        assert_eq!(gr.algebra().mul_basis(2, 2), &Vec::new());
    }

    #[test]
    fn associated_graded_identity_cases() {
        let fa = degree_zero_x4(f(3), [0, 0, 0, 0]);
        assert_eq!(associated_graded(&fa), fa);
        let e = whitehead_filtration(&exterior_algebra(f(5), 3));
        assert_eq!(associated_graded(&e), e);
    }

    #[test]
    fn associated_graded_is_idempotent() {
        let fa = degree_zero_x4(f(3), [0, 1, 3, 4]);
        let gr = associated_graded(&fa);
        assert_eq!(associated_graded(&gr), gr);
    }

    #[test]
    fn whitehead_weights_equal_degrees() {
        let a = truncated_polynomial(f(3), 2, 4).unwrap();
        let fa = whitehead_filtration(&a);
        assert_eq!(fa.weights(), &[0, 2, 4, 6]);
        assert_eq!(associated_graded(&fa).algebra(), fa.algebra());
    }

    #[test]
    fn square_zero_of_shifted_unit_is_exterior() {
        let base = FilteredAlgebra::trivial(truncated_polynomial(f(3), 2, 2).unwrap());
        // A = F_p: take the one-dimensional algebra instead.
        let fp_alg = GradedAlgebra::new(
            f(3),
            vec!["1".into()],
            vec![0],
            0,
            vec![vec![vec![(0, 1)]]],
            None,
        )
        .unwrap();
        let fp = FilteredAlgebra::trivial(fp_alg);
        let m = FilteredBimodule::augmentation_module(&fp, 5, 0).unwrap();
        let ext = square_zero_extension(&m).unwrap();
        let expected = exterior_algebra_named(f(3), 5, "m");
        assert_eq!(ext.degrees(), expected.degrees());
        assert_eq!(ext.mul_basis(1, 1), &Vec::new());
        let _ = base;
    }

    #[test]
    fn square_zero_of_zero_module_is_the_algebra() {
        let fa = whitehead_filtration(&exterior_algebra(f(3), 3));
        let m = FilteredBimodule::zero(&fa);
        let ext = square_zero_extension(&m).unwrap();
        assert_eq!(&ext, fa.algebra());
    }

    #[test]
    fn square_zero_of_shifted_regular_koszul_products() {
        // A = E(y), |y| = 3, M = A shifted by 2: basis {1, y, m_1, m_y}.
        let fa = whitehead_filtration(&exterior_algebra_named(f(3), 3, "y"));
        let m = FilteredBimodule::shifted_regular(&fa, 2, 0);
        let ext = square_zero_extension(&m).unwrap();
        assert_eq!(ext.len(), 4);
        // y . m_1 = m_y, and m_1 . y = (-1)^{3*2} y . m_1 = m_y.
        assert_eq!(ext.mul_basis(1, 2), &vec![(3usize, 1u64)]);
        assert_eq!(ext.mul_basis(2, 1), &vec![(3usize, 1u64)]);
        // m_y . y = (-1)^{3*5} y m_y = -(y.y) m_... = 0 since y^2 = 0.
        assert_eq!(ext.mul_basis(3, 1), &Vec::new());
        // module * module = 0.
        assert_eq!(ext.mul_basis(2, 3), &Vec::new());
    }

    #[test]
    fn tensor_with_ground_field_is_identity_on_dims() {
        let a = exterior_algebra(f(5), 3);
        let k = GradedAlgebra::new(f(5), vec!["1".into()], vec![0], 0, vec![vec![vec![(0, 1)]]], None)
            .unwrap();
        let t = tensor_product(&a, &k).unwrap();
        assert_eq!(t.len(), a.len());
        assert_eq!(t.degrees(), a.degrees());
    }

    #[test]
    fn tensor_of_odd_exteriors_anticommutes() {
        let a = exterior_algebra_named(f(3), 3, "x");
        let b = exterior_algebra_named(f(3), 5, "y");
        let t = tensor_product(&a, &b).unwrap();
        assert_eq!(t.len(), 4);
        // x⊗1 and 1⊗y: (x⊗1)(1⊗y) = x⊗y; (1⊗y)(x⊗1) = -x⊗y.
        let x = 1 * 2; // index (1,0)
        let y = 1; // index (0,1)
        let xy = t.mul_basis(x, y).clone();
        let yx = t.mul_basis(y, x).clone();
        assert_eq!(xy.len(), 1);
        assert_eq!(yx.len(), 1);
        assert_eq!(xy[0].0, yx[0].0);
        assert_eq!(yx[0].1, f(3).neg(xy[0].1));
    }

    #[test]
    fn tensor_degree_dims_are_convolved() {
        let a = exterior_algebra(f(3), 3);
        let t = tensor_product(&a, &a).unwrap();
        let mut dims: BTreeMap<u32, usize> = BTreeMap::new();
        for i in 0..t.len() {
            *dims.entry(t.degree(i)).or_default() += 1;
        }
        assert_eq!(dims, BTreeMap::from([(0, 1), (3, 2), (6, 1)]));
    }

    #[test]
    fn constructor_rejects_invalid_tables() {
        // Degree additivity violation: x*x = 1 with deg x = 1.
        let bad = GradedAlgebra::new(
            f(3),
            vec!["1".into(), "x".into()],
            vec![0, 1],
            0,
            vec![
                vec![vec![(0, 1)], vec![(1, 1)]],
                vec![vec![(1, 1)], vec![(0, 1)]],
            ],
            None,
        );
        assert!(matches!(bad, Err(AlgebraError::Validation(_))));
        // Graded commutativity violation at odd p: x*x = x2 with x odd.
        let bad2 = GradedAlgebra::new(
            f(3),
            vec!["1".into(), "x".into(), "x2".into()],
            vec![0, 1, 2],
            0,
            vec![
                vec![vec![(0, 1)], vec![(1, 1)], vec![(2, 1)]],
                vec![vec![(1, 1)], vec![(2, 1)], vec![]],
                vec![vec![(2, 1)], vec![], vec![]],
            ],
            None,
        );
        assert!(matches!(bad2, Err(AlgebraError::Validation(_))));
    }

    #[test]
    fn filtration_rejects_submultiplicative_weights() {
        let alg = truncated_polynomial(f(3), 2, 4).unwrap();
        // w(x2) = 1 < w(x) + w(x) = 2.
        assert!(FilteredAlgebra::new(alg, vec![0, 1, 1, 3]).is_err());
    }

    #[test]
    fn bimodule_gr_drops_weight_jumping_actions() {
        let fa = degree_zero_x4(f(3), [0, 1, 3, 4]);
        let m = FilteredBimodule::regular(&fa);
        let gr = associated_graded_bimodule(&m);
        // x . x = x2 jumps weight (1+1 < 3): dropped in gr.
        assert_eq!(gr.left_basis(1, 1), &Vec::new());
        // x . x2 = x3 is weight-exact (1+3 = 4): kept.
        assert_eq!(gr.left_basis(1, 2), &vec![(3usize, 1u64)]);
    }

    #[test]
    fn bimodule_gr_fixes_trivial_weights() {
        let fa = FilteredAlgebra::trivial(exterior_algebra(f(3), 3));
        let m = FilteredBimodule::regular(&fa);
        assert_eq!(associated_graded_bimodule(&m).left, m.left);
        let z = FilteredBimodule::zero(&fa);
        assert_eq!(associated_graded_bimodule(&z).len(), 0);
    }

    #[test]
    fn json_round_trip() {
        let fa = degree_zero_x4(f(3), [0, 1, 3, 4]);
        let text = algebra_to_json(&fa);
        let back = algebra_from_json(&text).unwrap();
        assert_eq!(&back, &fa);
    }

    #[test]
    fn json_rejects_left_greater_than_right() {
        let text = r#"{
            "p": 3,
            "basis": [{"name": "1", "degree": 0}, {"name": "x", "degree": 3}, {"name": "y", "degree": 3}],
            "unit": "1",
            "products": [{"left": "y", "right": "x", "result": []}]
        }"#;
        assert!(matches!(algebra_from_json(text), Err(AlgebraError::Json(_))));
    }

    #[test]
    fn json_fills_commutativity_with_koszul_sign() {
        let text = r#"{
            "p": 5,
            "basis": [
                {"name": "1", "degree": 0},
                {"name": "x", "degree": 1},
                {"name": "y", "degree": 1},
                {"name": "xy", "degree": 2}
            ],
            "unit": "1",
            "products": [{"left": "x", "right": "y", "result": [{"basis": "xy", "coeff": 1}]}]
        }"#;
        let fa = algebra_from_json(text).unwrap();
        assert_eq!(fa.algebra().mul_basis(1, 2), &vec![(3usize, 1u64)]);
        assert_eq!(fa.algebra().mul_basis(2, 1), &vec![(3usize, 4u64)]);
    }
}
