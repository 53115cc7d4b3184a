use clvkit::cocycle::{make_conjugated_diagonal, ConjugatedDiagonalSpec};
use clvkit::diagnostics::covariance_residual;
use clvkit::ginelli::{run_sampled, GinelliConfig};
use clvkit::grassmann::{directed_gap, grassmann_distance};
use clvkit::oracle::{svd_reference_clvs, OracleSplitting};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rates() -> impl Strategy<Value = Vec<f64>> {
    // distinct groups at least ln 2 apart, multiplicities 1 or 2
    prop::collection::vec((1usize..=2, 0.0f64..0.8), 1..=4).prop_map(|groups| {
        let mut rates = Vec::new();
        let mut r = 1.5;
        for (m, extra) in groups {
            rates.extend(std::iter::repeat_n(r, m));
            r -= std::f64::consts::LN_2 + extra;
        }
        rates
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_spaces_are_equivariant(rates in rates(), c in 1.0f64..10.0, seed in any::<u64>(), n in -50i64..50) {
        let spec = ConjugatedDiagonalSpec::new(rates, c, seed).unwrap();
        let (orbit, oracle) = make_conjugated_diagonal(&spec, n..n + 1).unwrap();
        for (now, next) in oracle.spaces_at(n).iter().zip(oracle.spaces_at(n + 1)) {
            prop_assert!(covariance_residual(&orbit, n, now, &next).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn filtration_contains_later_spaces(rates in rates(), c in 1.0f64..10.0, seed in any::<u64>()) {
        let spec = ConjugatedDiagonalSpec::new(rates, c, seed).unwrap();
        let oracle = OracleSplitting::new(spec).unwrap();
        let (spaces, filtration) = (oracle.spaces_at(3), oracle.filtration_at(3));
        for (j, f) in filtration.iter().enumerate() {
            prop_assert_eq!(f.dim(), oracle.multiplicities()[j..].iter().sum::<usize>() + oracle.tail_at(3).map_or(0, |t| t.dim()));
            for later in &spaces[j..] {
                prop_assert!(directed_gap(later, f).unwrap() <= 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ginelli_matches_both_references(rates in rates(), c in 1.0f64..10.0, seed in any::<u64>()) {
        let spec = ConjugatedDiagonalSpec::new(rates, c, seed).unwrap();
        let (orbit, oracle) = make_conjugated_diagonal(&spec, -60..60).unwrap();
        let mults = oracle.multiplicities();
        let cfg = GinelliConfig { multiplicities: Some(mults.clone()), seed, ..GinelliConfig::new(oracle.finite_dim(), 60, 60) };
        let (clv, _) = run_sampled(&orbit, &cfg).unwrap();
        let svd = svd_reference_clvs(&orbit, &mults, 60, 60, 0).unwrap();
        for ((a, b), exact) in clv.block_spans.iter().zip(&svd.block_spans).zip(oracle.spaces_at(0)) {
            prop_assert!(grassmann_distance(a, &exact).unwrap() <= 1e-6);
            prop_assert!(grassmann_distance(a, b).unwrap() <= 1e-6);
        }
    }
}

#[test]
fn growth_rates_stay_within_the_conditioning_bound() {
    let spec = ConjugatedDiagonalSpec::new(vec![2f64.ln(), 0.0, -(2f64.ln())], 6.0, 17).unwrap();
    // short enough that rounding noise amplified along the leading direction stays below the decaying block
    let n = 15usize;
    let (orbit, oracle) = make_conjugated_diagonal(&spec, -(n as i64)..0).unwrap();
    let exponents = oracle.exponents();
    for (j, y) in oracle.spaces_at(-(n as i64)).iter().enumerate() {
        let pushed = orbit.push_forward(-(n as i64), n, y.basis()).unwrap();
        let rate = pushed.norm().ln() / n as f64;
        assert!((rate - exponents[j]).abs() <= 2.0 * 6f64.ln() / n as f64, "block {j}: {rate}");
    }
}

#[test]
fn distinct_blocks_are_far_apart_without_conjugation() {
    let spec = ConjugatedDiagonalSpec::new(vec![1.0, 0.0, -1.0], 1.0, 0).unwrap();
    let (orbit, oracle) = make_conjugated_diagonal(&spec, 0..2).unwrap();
    let (now, next) = (oracle.spaces_at(0), oracle.spaces_at(1));
    for j in 0..2 {
        assert!(covariance_residual(&orbit, 0, &now[j], &next[j + 1]).unwrap() >= 0.9);
    }
}

#[test]
fn push_forward_composes_exactly() {
    let spec = ConjugatedDiagonalSpec::new(vec![0.5, 0.1, -0.3, -0.7], 3.0, 2).unwrap();
    let (orbit, _) = make_conjugated_diagonal(&spec, -10..10).unwrap();
    let v = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 - 1.5);
    let whole = orbit.push_forward(-10, 13, &v).unwrap();
    let split = orbit.push_forward(-3, 6, &orbit.push_forward(-10, 7, &v).unwrap()).unwrap();
    assert_eq!(whole, split);
}
