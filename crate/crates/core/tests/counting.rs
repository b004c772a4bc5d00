use std::path::PathBuf;

use minvec::counting::{
    abelian_check, amplifier_exponent, bareiss, column_lattice_key, enumerate_s,
    enumerate_s_in_order, partition_count, tau_bound, LatticeQuery, TorusSpec,
};
use minvec::files::QueryFile;
use num_rational::Ratio;
use proptest::prelude::*;

const BUDGET: u128 = 1 << 26;

fn shipped(name: &str) -> LatticeQuery {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(format!("{name}.toml"));
    QueryFile::read(&path).unwrap().query().unwrap()
}

/// Ordered `n`-tuples of nonnegative integers summing to `a`.
fn tuples(a: u64, n: u64) -> u128 {
    if n == 1 {
        return 1;
    }
    (0..=a).map(|first| tuples(a - first, n - 1)).sum()
}

#[test]
fn partition_count_matches_tuple_enumeration() {
    for a in 0..=8 {
        for n in 1..=6 {
            assert_eq!(partition_count(a, n), tuples(a, n), "a = {a}, n = {n}");
        }
    }
}

#[test]
fn congruent_to_identity_mod_nine() {
    let q = shipped("m4p3");
    let r = enumerate_s(&q, BUDGET).unwrap();
    // oracle: direct scan of the 17^4 box
    let mut expect = Vec::new();
    for a in -8i64..=8 {
        for b in -8i64..=8 {
            for c in -8i64..=8 {
                for d in -8i64..=8 {
                    let congruent =
                        (a - 1) % 9 == 0 && b % 9 == 0 && c % 9 == 0 && (d - 1) % 9 == 0;
                    if a * d - b * c == 4 && congruent {
                        expect.push(vec![a, b, c, d]);
                    }
                }
            }
        }
    }
    expect.sort();
    assert_eq!(r.matrices, expect);
    assert_eq!(r.partition_bound, 3);
    let v = abelian_check(&r);
    assert!(!v.regime);
}

#[test]
fn in_regime_queries_commute_and_respect_the_bound() {
    let mut counts = Vec::new();
    for name in [
        "m2-diagonal",
        "m4-diagonal",
        "m2-gaussian",
        "m4-gaussian",
        "m5-gaussian",
    ] {
        let q = shipped(name);
        let r = enumerate_s(&q, BUDGET).unwrap();
        let v = abelian_check(&r);
        assert!(v.regime, "{name}");
        assert!(v.abelian, "{name}: {:?}", v.witness);
        assert!(r.within_partition_bound(), "{name}");
        counts.push((r.count(), r.lattice_classes, r.max_fiber));
    }
    // a^2 + b^2 = m with |a|, |b| <= 2: units {±1, ±i} times the ideals of norm m
    assert_eq!(
        counts,
        vec![(4, 2, 2), (2, 1, 2), (4, 1, 4), (4, 1, 4), (8, 2, 4)]
    );
}

#[test]
fn out_of_regime_query_has_a_witness() {
    let r = enumerate_s(&shipped("m1-free"), BUDGET).unwrap();
    let v = abelian_check(&r);
    assert!(!v.regime && !v.abelian);
    let (a, b) = v.witness.unwrap();
    let ab = [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ];
    let ba = [
        b[0] * a[0] + b[1] * a[2],
        b[0] * a[1] + b[1] * a[3],
        b[2] * a[0] + b[3] * a[2],
        b[2] * a[1] + b[3] * a[3],
    ];
    assert_ne!(ab, ba);
}

#[test]
fn three_by_three_free_count() {
    let q = LatticeQuery {
        n: 3,
        det: 2,
        bound: 2,
        p: 3,
        congruence: 0,
        torus: TorusSpec::Generated(vec![]),
    };
    let r = enumerate_s(&q, BUDGET).unwrap();
    assert!(r
        .matrices
        .iter()
        .all(|g| bareiss(g.iter().map(|&v| v as i128).collect(), 3) == 2));
    assert!(r.matrices.iter().all(|g| g.iter().all(|v| v.abs() <= 2)));
    assert_eq!(
        enumerate_s_in_order(&q, &[2, 1, 0], BUDGET)
            .unwrap()
            .matrices,
        r.matrices
    );
    assert_eq!(tau_bound(&[(2, 1)], 3), 3);
}

#[test]
fn exponent_chain() {
    assert_eq!(
        amplifier_exponent(2).unwrap().closed_form,
        Ratio::new(15, 64)
    );
    assert_eq!(
        amplifier_exponent(3).unwrap().closed_form,
        Ratio::new(107, 216)
    );
    for n in 2..10 {
        let r = amplifier_exponent(n).unwrap();
        assert!(r.consistent());
        assert_eq!(r.flipped - r.closed_form, Ratio::new(1, 4 * n * n * n));
    }
}

fn small_matrix() -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-3i64..=3, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_key_ignores_unimodular_column_moves(g in small_matrix(), k in -3i64..=3, swap in any::<bool>()) {
        prop_assume!(g[0] * g[3] - g[1] * g[2] != 0);
        // g * [[1, k], [0, 1]], then optionally swap columns
        let mut h = vec![g[0], g[0] * k + g[1], g[2], g[2] * k + g[3]];
        if swap {
            h = vec![h[1], h[0], h[3], h[2]];
        }
        prop_assert_eq!(column_lattice_key(&g, 2), column_lattice_key(&h, 2));
    }

    #[test]
    fn row_order_is_irrelevant(det in 1i64..6, bound in 0i64..3, c in 0u32..2, order in Just([1usize, 0])) {
        prop_assume!(det % 3 != 0);
        let q = LatticeQuery { n: 2, det, bound, p: 3, congruence: c, torus: TorusSpec::Diagonal };
        prop_assert_eq!(
            enumerate_s(&q, BUDGET).unwrap().matrices,
            enumerate_s_in_order(&q, &order, BUDGET).unwrap().matrices
        );
    }

    #[test]
    fn matches_are_exactly_the_box_solutions(det in 1i64..5, bound in 0i64..3) {
        let q = LatticeQuery { n: 2, det, bound, p: 5, congruence: 0, torus: TorusSpec::Generated(vec![]) };
        prop_assume!(det % 5 != 0);
        let r = enumerate_s(&q, BUDGET).unwrap();
        let w = 2 * bound + 1;
        let total = (0..w.pow(4)).filter(|&idx| {
            let e: Vec<i64> = (0..4).map(|t| (idx / w.pow(t)) % w - bound).collect();
            e[0] * e[3] - e[1] * e[2] == det
        }).count();
        prop_assert_eq!(r.count(), total);
    }
}
