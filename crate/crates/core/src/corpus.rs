//! Randomized validation corpus: seeded generation of small valid filtered
//! algebras and spaces, plus the invariant gauntlet run over each instance
//! (chain, filtration, fundamental theorem, page and convergence checks).

use crate::algebra::{
    self, exterior_algebra_named, square_zero_filtered, truncated_polynomial, whitehead_filtration,
    FilteredAlgebra, FilteredBimodule, GradedAlgebra,
};
use crate::fp::PrimeField;
use crate::loday;
use crate::mayfilt;
use crate::simplicial::{circle, torus, SimplicialFiniteSet};
use crate::specseq;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub algebra: FilteredAlgebra,
    pub space: SimplicialFiniteSet,
    pub max_internal: u32,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub label: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

/// Degree-zero truncated polynomial algebra `F_p[x]/x^m` (built directly;
/// the named constructor requires positive even degrees).
fn degree_zero_truncated(field: PrimeField, m: usize) -> GradedAlgebra {
    let names = (0..m as u32)
        .map(|k| match k {
            0 => "1".to_string(),
            1 => "x".to_string(),
            k => format!("x{k}"),
        })
        .collect();
    let products = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i + j < m { vec![(i + j, 1u64)] } else { Vec::new() })
                .collect()
        })
        .collect();
    GradedAlgebra::new(field, names, vec![0; m], 0, products, None).expect("valid truncation")
}

/// Superadditive weight sequence for a truncated power basis `1, x, ...`:
/// nondecreasing increments guarantee `w(i+j) >= w(i) + w(j)`.
fn convex_weights(rng: &mut ChaCha8Rng, len: usize) -> Vec<u32> {
    let mut weights = vec![0u32];
    let mut increment = rng.gen_range(0..=2u32);
    for _ in 1..len {
        increment += rng.gen_range(0..=2u32);
        weights.push(weights.last().unwrap() + increment);
    }
    weights
}

/// One random valid instance. Degree-zero algebras are paired with the
/// circle only (their tensor bases admit no internal-degree pruning).
pub fn random_instance(rng: &mut ChaCha8Rng, index: usize) -> Instance {
    let p = [2u64, 3, 5][rng.gen_range(0..3)];
    let field = PrimeField::new(p).unwrap();
    let family = rng.gen_range(0..5u32);
    let (algebra, degree_zero) = match family {
        0 => {
            let d = rng.gen_range(1..=4u32);
            let a = exterior_algebra_named(field, d, "x");
            let w = rng.gen_range(0..=d);
            (
                FilteredAlgebra::new(a.clone(), vec![0, w]).unwrap(),
                false,
            )
        }
        1 => {
            let d = 2 * rng.gen_range(1..=2u32);
            let m = rng.gen_range(2..=4u32);
            let a = truncated_polynomial(field, d, m).unwrap();
            let fa = if rng.gen_bool(0.5) {
                whitehead_filtration(&a)
            } else {
                let w = convex_weights(rng, m as usize);
                FilteredAlgebra::new(a, w).unwrap()
            };
            (fa, false)
        }
        2 => {
            let dx = rng.gen_range(1..=3u32);
            let dy = rng.gen_range(1..=3u32);
            let ax = FilteredAlgebra::new(
                exterior_algebra_named(field, dx, "x"),
                vec![0, rng.gen_range(0..=2u32)],
            )
            .unwrap();
            let ay = FilteredAlgebra::new(
                exterior_algebra_named(field, dy, "y"),
                vec![0, rng.gen_range(0..=2u32)],
            )
            .unwrap();
            (ax.tensor(&ay).unwrap(), false)
        }
        3 => {
            // Square-zero extension of E(y) by a shifted copy of itself.
            let dy = rng.gen_range(1..=2u32);
            let base = whitehead_filtration(&exterior_algebra_named(field, dy, "y"));
            let m = FilteredBimodule::shifted_regular(&base, rng.gen_range(1..=2u32), 1);
            (square_zero_filtered(&m).unwrap(), false)
        }
        _ => {
            let m = rng.gen_range(2..=3usize);
            let a = degree_zero_truncated(field, m);
            let w = convex_weights(rng, m);
            (FilteredAlgebra::new(a, w).unwrap(), true)
        }
    };
    let use_torus = !degree_zero && algebra.algebra().len() <= 4 && rng.gen_bool(0.3);
    let (space, max_internal) = if use_torus {
        (torus(2, 3).unwrap(), rng.gen_range(3..=5u32))
    } else {
        let max_level = rng.gen_range(3..=4usize);
        let cap = if degree_zero { 0 } else { rng.gen_range(5..=8u32) };
        (circle(max_level), cap)
    };
    Instance {
        label: format!(
            "#{index} p={p} family={family} |A|={} space={} cut={max_internal}",
            algebra.algebra().len(),
            if use_torus { "torus2" } else { "circle" },
        ),
        algebra,
        space,
        max_internal,
    }
}

/// Run the full invariant gauntlet on one instance.
pub fn run_suite(instance: &Instance) -> SuiteReport {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, ok: bool, detail: String| {
        checks.push(CheckResult { name, ok, detail });
    };

    let c = match loday::build(&instance.space, &instance.algebra, instance.max_internal) {
        Ok(c) => c,
        Err(e) => {
            push("build", false, e.to_string());
            return SuiteReport {
                label: instance.label.clone(),
                checks,
            };
        }
    };
    push("build", true, format!("max block {}", c.max_block_dim()));
    push(
        "d_squared",
        c.check_d_squared().is_ok(),
        String::new(),
    );
    push(
        "weight_monotone",
        c.check_weight_monotone().is_ok(),
        String::new(),
    );

    let fc = match mayfilt::filter(&c) {
        Ok(fc) => fc,
        Err(e) => {
            push("filter", false, e.to_string());
            return SuiteReport {
                label: instance.label.clone(),
                checks,
            };
        }
    };
    push("filter", true, String::new());

    match mayfilt::check_fundamental(&fc) {
        Ok(rep) => push(
            "fundamental_theorem",
            rep.pass,
            rep.first_failure.unwrap_or_default(),
        ),
        Err(e) => push("fundamental_theorem", false, e.to_string()),
    }

    match specseq::pages(&fc, 64) {
        Ok(ss) => {
            push("page_turn", ss.check_page_turn(), String::new());
            push("dr_squared", ss.check_dr_squared(), String::new());
            push(
                "strong_convergence",
                ss.check_strong_convergence(),
                String::new(),
            );
            let gr = loday::build(
                &instance.space,
                &algebra::associated_graded(&instance.algebra),
                instance.max_internal,
            );
            match gr.and_then(|g| {
                specseq::e1_matches_gr_homology(&ss, &g).map_err(|e| match e {
                    specseq::SpecSeqError::Loday(l) => l,
                    other => loday::LodayError::Validation(other.to_string()),
                })
            }) {
                Ok(ok) => push("e1_equals_gr_homology", ok, String::new()),
                Err(e) => push("e1_equals_gr_homology", false, e.to_string()),
            }
        }
        Err(e) => push("pages", false, e.to_string()),
    }

    match specseq::upper_bound_check(&instance.space, &instance.algebra, instance.max_internal) {
        Ok(ub) => push("upper_bound", ub.all_ok, String::new()),
        Err(e) => push("upper_bound", false, e.to_string()),
    }

    // Normalization oracle on small instances only.
    if c.max_block_dim() <= 500 {
        match loday::build_moore(&instance.space, &instance.algebra, instance.max_internal) {
            Ok(moore) if moore.max_block_dim() <= 500 => {
                let hn = c.homology();
                let hm = moore.homology();
                let ok = hn
                    .dims
                    .iter()
                    .chain(hm.dims.iter())
                    .filter(|(&(h, t), _)| h <= hn.h_valid && t <= hn.t_valid)
                    .all(|(&(h, t), _)| hn.dim(h, t) == hm.dim(h, t));
                push("normalized_vs_moore", ok, String::new());
            }
            Ok(_) => push("normalized_vs_moore", true, "skipped (size)".into()),
            Err(e) => push("normalized_vs_moore", false, e.to_string()),
        }
    } else {
        push("normalized_vs_moore", true, "skipped (size)".into());
    }

    SuiteReport {
        label: instance.label.clone(),
        checks,
    }
}

/// Run `count` random instances from the given seed. Returns the failing
/// reports (empty means everything passed).
pub fn run_corpus(seed: u64, count: usize) -> Vec<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for index in 0..count {
        let instance = random_instance(&mut rng, index);
        let report = run_suite(&instance);
        if !report.ok() {
            failures.push(report);
        }
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_corpus_passes() {
        let failures = run_corpus(17, 12);
        assert!(
            failures.is_empty(),
            "failing instances: {:?}",
            failures
                .iter()
                .map(|r| (&r.label, r.checks.iter().find(|c| !c.ok)))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for i in 0..10 {
            let x = random_instance(&mut a, i);
            let y = random_instance(&mut b, i);
            assert_eq!(x.label, y.label);
            assert_eq!(x.algebra, y.algebra);
        }
    }
}
