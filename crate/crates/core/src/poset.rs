//! Independent verification of the poset combinatorics behind the May
//! filtration: the truncated diagrams `D`, the bounded diagrams `E`, the
//! L1-norm functoriality, and the Galois connection `J ⊣ K` that certifies
//! cofinality.

use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PosetError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// A finite poset of integer vectors under the componentwise order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    elements: Vec<Vec<u32>>,
}

impl FinitePoset {
    fn from_elements(mut elements: Vec<Vec<u32>>) -> Self {
        elements.sort();
        elements.dedup();
        FinitePoset { elements }
    }

    pub fn elements(&self) -> &[Vec<u32>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn leq(a: &[u32], b: &[u32]) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| x <= y)
    }

    /// Exhaustive order-axiom check (reflexivity, antisymmetry,
    /// transitivity) on posets of at most 10^4 elements.
    pub fn verify_order_axioms(&self) -> bool {
        if self.elements.len() > 10_000 {
            return true;
        }
        let els = &self.elements;
        for a in els {
            if !Self::leq(a, a) {
                return false;
            }
        }
        for a in els {
            for b in els {
                if Self::leq(a, b) && Self::leq(b, a) && a != b {
                    return false;
                }
                for c in els {
                    if Self::leq(a, b) && Self::leq(b, c) && !Self::leq(a, c) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

pub fn l1_norm(x: &[u32]) -> u32 {
    x.iter().sum()
}

/// `E^S_{n,k} = {x ∈ {0..n}^S : Σ x(s) >= k}` with `k >= n` required.
pub fn e_poset(s_size: usize, n: u32, k: u32) -> Result<FinitePoset, PosetError> {
    if k < n {
        return Err(PosetError::InvalidParams(format!("k = {k} < n = {n}")));
    }
    let mut elements = Vec::new();
    let mut current = vec![0u32; s_size];
    enumerate_box(&mut current, 0, n, &mut |v| {
        if l1_norm(v) >= k {
            elements.push(v.to_vec());
        }
    });
    Ok(FinitePoset::from_elements(elements))
}

/// `D^S_{n;x}` truncated at `cap` componentwise:
/// `{y : y >= x, |y| >= n + |x|, y(s) <= cap}`.
pub fn d_poset_truncated(s_size: usize, n: u32, x: &[u32], cap: u32) -> FinitePoset {
    assert_eq!(x.len(), s_size, "base vector length mismatch");
    let mut elements = Vec::new();
    let mut current = vec![0u32; s_size];
    enumerate_box(&mut current, 0, cap, &mut |v| {
        if FinitePoset::leq(x, v) && l1_norm(v) >= n + l1_norm(x) {
            elements.push(v.to_vec());
        }
    });
    FinitePoset::from_elements(elements)
}

fn enumerate_box(current: &mut Vec<u32>, pos: usize, bound: u32, visit: &mut impl FnMut(&[u32])) {
    if pos == current.len() {
        visit(current);
        return;
    }
    for v in 0..=bound {
        current[pos] = v;
        enumerate_box(current, pos + 1, bound, visit);
    }
    current[pos] = 0;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjunctionReport {
    pub pass: bool,
    pub pairs_checked: usize,
    pub counterexample: Option<String>,
}

/// Verify the Galois connection `z <= K(y) <=> J(z) <= y` for all
/// `z ∈ E^S_n` and `y` in the truncated `D^S_{n;x}`, where
/// `J(z) = x + z` and `K(y)(s) = min(n, y(s) - x(s))`. Also checks that `J`
/// and `K` are well defined into their codomains.
pub fn check_adjunction(s_size: usize, n: u32, x: &[u32], cap: u32) -> AdjunctionReport {
    let e = match e_poset(s_size, n, n) {
        Ok(e) => e,
        Err(_) => unreachable!("k = n is always allowed"),
    };
    let d = d_poset_truncated(s_size, n, x, cap);
    let d_set: BTreeSet<&Vec<u32>> = d.elements().iter().collect();
    let mut pairs = 0usize;
    for z in e.elements() {
        let j: Vec<u32> = z.iter().zip(x.iter()).map(|(a, b)| a + b).collect();
        // J lands in D (up to the truncation cap).
        if j.iter().all(|&v| v <= cap) && !d_set.contains(&j) {
            return AdjunctionReport {
                pass: false,
                pairs_checked: pairs,
                counterexample: Some(format!("J({z:?}) = {j:?} not in D")),
            };
        }
        for y in d.elements() {
            pairs += 1;
            let k: Vec<u32> = y
                .iter()
                .zip(x.iter())
                .map(|(a, b)| n.min(a - b))
                .collect();
            if l1_norm(&k) < n {
                return AdjunctionReport {
                    pass: false,
                    pairs_checked: pairs,
                    counterexample: Some(format!("K({y:?}) = {k:?} not in E")),
                };
            }
            let lhs = FinitePoset::leq(z, &k);
            let rhs = FinitePoset::leq(&j, y);
            if lhs != rhs {
                return AdjunctionReport {
                    pass: false,
                    pairs_checked: pairs,
                    counterexample: Some(format!(
                        "z = {z:?}, y = {y:?}: z <= K(y) is {lhs} but J(z) <= y is {rhs}"
                    )),
                };
            }
        }
    }
    AdjunctionReport {
        pass: true,
        pairs_checked: pairs,
        counterexample: None,
    }
}

/// Pushforward along a map of finite sets `f: T -> S`:
/// `(N^f x)(s) = Σ_{f(t) = s} x(t)`; the L1 norm is preserved.
pub fn pushforward(f: &[usize], s_size: usize, x: &[u32]) -> Vec<u32> {
    assert_eq!(f.len(), x.len(), "map domain mismatch");
    let mut out = vec![0u32; s_size];
    for (t, &s) in f.iter().enumerate() {
        assert!(s < s_size, "map target out of range");
        out[s] += x[t];
    }
    out
}

pub fn l1_functoriality(f: &[usize], s_size: usize, x: &[u32]) -> bool {
    l1_norm(&pushforward(f, s_size, x)) == l1_norm(x)
}

/// The exhaustive adjunction sweep: all `s <= max_s`, `n <= max_n`, base
/// vectors with `|x| <= max_x_norm`, cap = `n + |x| + 3`.
pub fn adjunction_sweep(max_s: usize, max_n: u32, max_x_norm: u32) -> AdjunctionReport {
    let mut pairs = 0usize;
    for s in 1..=max_s {
        for n in 0..=max_n {
            let mut xs = Vec::new();
            let mut current = vec![0u32; s];
            enumerate_box(&mut current, 0, max_x_norm, &mut |v| {
                if l1_norm(v) <= max_x_norm {
                    xs.push(v.to_vec());
                }
            });
            for x in xs {
                let cap = n + l1_norm(&x) + 3;
                let rep = check_adjunction(s, n, &x, cap);
                pairs += rep.pairs_checked;
                if !rep.pass {
                    return AdjunctionReport {
                        pairs_checked: pairs,
                        ..rep
                    };
                }
            }
        }
    }
    AdjunctionReport {
        pass: true,
        pairs_checked: pairs,
        counterexample: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_poset_small_cases() {
        let e = e_poset(2, 1, 1).unwrap();
        assert_eq!(
            e.elements(),
            &[vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let e2 = e_poset(1, 3, 3).unwrap();
        assert_eq!(e2.elements(), &[vec![3]]);
        let e3 = e_poset(2, 2, 4).unwrap();
        assert_eq!(e3.elements(), &[vec![2, 2]]);
        assert!(e.verify_order_axioms());
    }

    #[test]
    fn e_poset_rejects_k_below_n() {
        assert!(matches!(
            e_poset(2, 3, 2),
            Err(PosetError::InvalidParams(_))
        ));
    }

    #[test]
    fn d_poset_cases() {
        // x = 0, n = 0: the whole truncated cube.
        let d = d_poset_truncated(2, 0, &[0, 0], 2);
        assert_eq!(d.len(), 9);
        let d2 = d_poset_truncated(1, 2, &[1], 5);
        assert_eq!(d2.elements(), &[vec![3], vec![4], vec![5]]);
        // Empty when the cap cannot reach the norm bound.
        let d3 = d_poset_truncated(2, 5, &[0, 0], 1);
        assert!(d3.is_empty());
        assert!(d.verify_order_axioms());
    }

    #[test]
    fn adjunction_examples() {
        assert!(check_adjunction(2, 1, &[0, 0], 4).pass);
        assert!(check_adjunction(1, 2, &[1], 6).pass);
        // n = 0 is degenerate and passes vacuously-ish (E = {0}).
        assert!(check_adjunction(2, 0, &[1, 0], 3).pass);
    }

    #[test]
    fn adjunction_sweep_small() {
        let rep = adjunction_sweep(2, 2, 1);
        assert!(rep.pass, "{:?}", rep.counterexample);
        assert!(rep.pairs_checked > 0);
    }

    #[test]
    fn e_is_contained_in_d_after_inclusion() {
        // E^S_n sits inside D^S_n = D^S_{n;0} (truncated at n).
        for s in 1..=3usize {
            for n in 0..=3u32 {
                let e = e_poset(s, n, n).unwrap();
                let d = d_poset_truncated(s, n, &vec![0; s], n);
                for z in e.elements() {
                    assert!(d.elements().contains(z));
                }
            }
        }
    }

    #[test]
    fn l1_functoriality_cases() {
        // Identity map.
        assert!(l1_functoriality(&[0, 1, 2], 3, &[4, 0, 7]));
        // Constant map to a point preserves the total.
        assert!(l1_functoriality(&[0, 0, 0], 1, &[1, 2, 3]));
        // A fold map.
        let f = [0usize, 1, 0, 1, 0];
        let x = [3u32, 1, 4, 1, 5];
        assert_eq!(pushforward(&f, 2, &x), vec![12, 2]);
        assert!(l1_functoriality(&f, 2, &x));
    }
}
