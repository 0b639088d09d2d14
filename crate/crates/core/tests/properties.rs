//! Module invariants: exhaustive over small ranges, sampled with proptest beyond.

use collatz_koopman::averaging::{build_registry, kappa_limit, l1_norm, unit_vector};
use collatz_koopman::collatz::{collatz_t, iterate_t, preimages, trajectory, TrajectoryStatus, DEFAULT_CAP};
use collatz_koopman::correlation::{
    build_ck, build_mko, ceil_log2_fn, dft_matrix, f0, lowpass, phi_functional, row_isometry_residual, transformed_ideal,
    WordTerm,
};
use collatz_koopman::isometry::{
    build_mk, permutation_cycles, row_columns, row_isometry_check, structure_check, three_power_avoids_five,
};
use collatz_koopman::koopman::{backward_apply, forward_apply, operator_norm_numeric, preimage_count};
use collatz_koopman::linalg;
use collatz_koopman::parity::{binomial_cdf_half, density_fraction, floor_dk, parity_bit, tk_via_parity};
use collatz_koopman::spectrum::{classify_periodicity, root_relations, Periodicity, RootTable, SignPolynomial};
use collatz_koopman::Natural;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn nat(v: u64) -> Natural {
    Natural::from(v)
}

fn rational(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

#[test]
fn halving_and_odd_step() {
    for n in 1..=100_000u64 {
        assert_eq!(collatz_t(&nat(2 * n)).unwrap(), nat(n));
        assert_eq!(collatz_t(&nat(2 * n + 1)).unwrap(), nat(3 * n + 2));
    }
}

#[test]
fn preimages_invert_the_map() {
    for m in 1..=100_000u64 {
        for i in preimages(&nat(m)).unwrap() {
            assert_eq!(collatz_t(&i).unwrap(), nat(m));
        }
    }
    for i in 1..=200_000u64 {
        let image = collatz_t(&nat(i)).unwrap();
        assert!(preimages(&image).unwrap().contains(&nat(i)));
    }
}

#[test]
fn small_trajectories_reach_the_trivial_cycle() {
    for n in 1..=10_000u64 {
        let status = trajectory(&nat(n), 10_000).unwrap().status;
        assert!(matches!(status, TrajectoryStatus::ReachedTrivialCycle { .. }), "n={n}");
    }
}

#[test]
fn parity_columns_are_periodic() {
    for i in 1..=12u32 {
        for n in 1..=1u64 << 14 {
            assert_eq!(parity_bit(&nat(n + (1 << i)), i).unwrap(), parity_bit(&nat(n), i).unwrap());
        }
    }
}

#[test]
fn density_is_a_binomial_cdf() {
    for k in 1..=18u32 {
        for d in [0.55, 0.6, 0.7, 0.9] {
            assert_eq!(density_fraction(k, d).unwrap(), binomial_cdf_half(k, floor_dk(k, d)), "k={k}, d={d}");
        }
    }
}

#[test]
fn adjoint_on_unit_coordinates() {
    let n = 1024;
    let half = n / 2;
    // ⟨L e_i, e_m⟩ is entry m of L e_i; ⟨e_i, B e_m⟩ is entry i of B e_m.
    let forward: Vec<Vec<i64>> = (1..=half)
        .map(|i| {
            let mut e = vec![0i64; n];
            e[i - 1] = 1;
            forward_apply(&e).unwrap()
        })
        .collect();
    for m in 1..=half {
        let mut e = vec![0i64; n];
        e[m - 1] = 1;
        let back = backward_apply(&e).unwrap();
        for i in 1..=half {
            assert_eq!(forward[i - 1][m - 1], back[i - 1], "i={i}, m={m}");
        }
    }
}

#[test]
fn forward_norm_is_sqrt_two_at_every_truncation() {
    for n in [4usize, 8, 33, 100] {
        assert!((operator_norm_numeric(1, n).unwrap() - 2f64.sqrt()).abs() < 1e-8, "N={n}");
    }
}

#[test]
fn kappa_limit_has_rank_two_form() {
    let registry = build_registry(300, DEFAULT_CAP).unwrap();
    let truncation = 300;
    let x: Vec<BigRational> = (1..=truncation as i64).map(|v| rational((v * 37) % 11 - 5)).collect();
    let limit = kappa_limit(&registry, &x).unwrap();
    let total = x.iter().fold(BigRational::zero(), |a, b| a + b);
    let half = total / rational(2);
    assert_eq!(limit[0], half);
    assert_eq!(limit[1], half);
    assert!(limit[2..].iter().all(Zero::is_zero));
}

#[test]
fn periodicity_matches_trajectories() {
    for n in 1..=10_000u64 {
        let reaches = matches!(
            trajectory(&nat(n), DEFAULT_CAP).unwrap().status,
            TrajectoryStatus::ReachedTrivialCycle { .. }
        );
        let period2 = matches!(classify_periodicity(&nat(n), DEFAULT_CAP).unwrap(), Periodicity::EventuallyPeriod2 { .. });
        assert_eq!(reaches, period2, "n={n}");
    }
}

#[test]
fn parseval_for_sign_polynomials() {
    for k in 1..=12u32 {
        let poly = SignPolynomial::new(k).unwrap();
        let table = RootTable::new(k);
        let total: f64 = (1..=1u64 << k).map(|j| poly.eval_root(&table, j).norm_sqr()).sum();
        let expected = 4f64.powi(k as i32);
        assert!(((total - expected) / expected).abs() < 1e-9, "k={k}");
    }
}

#[test]
fn root_algebra() {
    for k in 0..=10 {
        assert!(root_relations(k) < 1e-10, "k={k}");
    }
}

#[test]
fn isometry_rows_and_pattern() {
    for k in 0..=10u32 {
        assert!(row_isometry_check(k).unwrap() < 1e-12);
        let m = build_mk(k).unwrap();
        if k >= 1 {
            for (j, row) in m.matrix.rows.iter().enumerate() {
                let mut cols: Vec<u64> = row.iter().map(|&(c, _)| c as u64 + 1).collect();
                let mut expected = row_columns(j as u64 + 1, k).to_vec();
                cols.sort_unstable();
                expected.sort_unstable();
                assert_eq!(cols, expected, "k={k}, row {}", j + 1);
            }
        }
    }
    for k in 1..=8 {
        assert!(structure_check(k).unwrap().passed());
    }
}

#[test]
fn permutation_cycles_partition() {
    for k in 2..=16u32 {
        let cycles = permutation_cycles(k).unwrap();
        let mut all: Vec<u64> = cycles.concat();
        all.sort_unstable();
        assert_eq!(all, (1..=1u64 << k).collect::<Vec<_>>());
        assert!(cycles.iter().all(|c| c.len() == 1 << (k - 1)));
    }
    assert!(three_power_avoids_five(10_000));
}

#[test]
fn correlation_matrices_are_row_isometries() {
    for k in 0..=9u32 {
        if k <= 8 {
            assert!(dft_matrix(k).unwrap().unitarity_residual() < 1e-10, "W_{k}");
        }
        assert!(row_isometry_residual(&build_ck(k).unwrap()) < 1e-10, "C_{k}");
        let mo = build_mko(k).unwrap();
        assert!(row_isometry_residual(&mo) < 1e-10, "M^o_{k}");
        if k >= 1 {
            let lifted = mo.left_apply(&transformed_ideal(k));
            assert!(linalg::max_abs_diff(&lifted, &transformed_ideal(k + 1)) < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iteration_composes(n in 1u64..1_000_000_000, j in 0u64..60, k in 0u64..60) {
        let n = nat(n);
        prop_assert_eq!(iterate_t(&n, j + k).unwrap(), iterate_t(&iterate_t(&n, j).unwrap(), k).unwrap());
    }

    #[test]
    fn parity_formula_on_large_inputs(n in any::<u64>().prop_filter("positive", |v| *v > 0), k in 0u32..64) {
        prop_assert_eq!(tk_via_parity(&nat(n), k).unwrap(), iterate_t(&nat(n), u64::from(k)).unwrap());
    }

    #[test]
    fn preimage_count_matches_tree(n in 0u32..12, m in 1u64..5000) {
        let mut level = vec![nat(m)];
        for _ in 0..n {
            level = level.iter().flat_map(|v| preimages(v).unwrap()).collect();
        }
        prop_assert_eq!(preimage_count(n, &nat(m)).unwrap(), level.len() as u64);
    }

    #[test]
    fn kappa_limit_is_linear(
        xs in proptest::collection::vec(-20i64..20, 60),
        ys in proptest::collection::vec(-20i64..20, 60),
        a in -5i64..5,
        b in -5i64..5,
    ) {
        let registry = build_registry(60, DEFAULT_CAP).unwrap();
        let x: Vec<BigRational> = xs.iter().map(|&v| rational(v)).collect();
        let y: Vec<BigRational> = ys.iter().map(|&v| rational(v)).collect();
        let combo: Vec<BigRational> = x.iter().zip(&y).map(|(u, v)| u * rational(a) + v * rational(b)).collect();
        let lx = kappa_limit(&registry, &x).unwrap();
        let ly = kappa_limit(&registry, &y).unwrap();
        let lc = kappa_limit(&registry, &combo).unwrap();
        for i in 0..60 {
            prop_assert_eq!(&lc[i], &(&lx[i] * rational(a) + &ly[i] * rational(b)));
        }
        prop_assert!(l1_norm(&lx) <= l1_norm(&x));
    }

    #[test]
    fn kappa_limit_of_unit_vectors(n in 1u64..200) {
        let registry = build_registry(200, DEFAULT_CAP).unwrap();
        let limit = kappa_limit(&registry, &unit_vector(200, n)).unwrap();
        let half = BigRational::one() / rational(2);
        prop_assert_eq!(&limit[0], &half);
        prop_assert_eq!(&limit[1], &half);
    }

    #[test]
    fn lowpass_parseval(k in 2u32..=10, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let upper = 1u64 << k;
        let r = 2 + ((upper - 3) as f64 * frac) as u64;
        let signs: Vec<i8> = (0..upper).map(|i| if (seed >> (i % 64)) & 1 == 0 { 1 } else { -1 }).collect();
        let lo = lowpass(k, r, &signs).unwrap();
        prop_assert!((linalg::norm(&lo).powi(2) - r as f64 / upper as f64).abs() < 1e-10);
    }

    #[test]
    fn identity_word_is_exactly_zero(re in -0.6f64..0.6, im in -0.6f64..0.6, k_max in 1u32..7, use_f0: bool) {
        let f = if use_f0 { f0(1 << 10).unwrap() } else { ceil_log2_fn(1 << 10).unwrap() };
        let word = [WordTerm { i: 0, j: 0, a: Complex64::new(1.0, 0.0) }];
        let phi = phi_functional(&f, &word, Complex64::new(re, im), k_max).unwrap();
        prop_assert_eq!(phi.value, Complex64::new(0.0, 0.0));
    }
}
