//! Verification reports for each module, and the full acceptance run.
//!
//! Check names start with the criterion they belong to (`c01`..`c14`), so
//! the sorted report reads in criterion order.

use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::averaging::{build_registry, cesaro_average, l1_distance, unit_vector};
use crate::collatz::{iterate_t, iterate_t_u64, DEFAULT_CAP};
use crate::correlation::{self, conjugate_inc, correlation_theorem_check, phi_functional, WordTerm};
use crate::error::Result;
use crate::isometry::{self, build_mk, build_s, compose_chain, permutation_cycles, wold_complement};
use crate::koopman::{self, Exponent};
use crate::linalg;
use crate::parity::{build_bk, genfn_numerator, tk_via_parity, MAX_GENFN_LEVEL};
use crate::report::{Check, Report};
use crate::spectrum::{fourier_coeffs, lift_identity_check};
use crate::Natural;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Replaces the default tolerance of every floating-point check.
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tol: None, seed: DEFAULT_SEED }
    }
}

impl VerifyOptions {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

pub const MODULES: [&str; 7] = ["core_map", "parity", "koopman", "averaging", "spectrum", "isometry", "correlation"];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `T^k(n)` through the parity formula against plain iteration, `n <= n_max`, `k <= k_max`.
pub fn core_map(n_max: u64, k_max: u32) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify core_map").param("n_max", n_max).param("k_max", k_max);
    let result: Result<u64> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let natural = Natural::from(n);
            let mut bad = 0u64;
            for k in 0..=k_max {
                if tk_via_parity(&natural, k)? != iterate_t(&natural, u64::from(k))? {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .sum();
    r.push_result("c01_exact_formula_mismatches", result.map(|bad| Check::exact("c01_exact_formula_mismatches", bad == 0, bad as f64)));
    r.finish(start)
}

/// Permutation property of `B_j` for `j <= k` and the generating-function numerators.
pub fn parity(k: u32) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify parity").param("k", k);
    let failing: Result<Vec<u32>> = (1..=k)
        .into_par_iter()
        .map(|j| Ok((j, build_bk(j)?.rows_are_permutation())))
        .filter_map(|res: Result<(u32, bool)>| match res {
            Ok((_, true)) => None,
            Ok((j, false)) => Some(Ok(j)),
            Err(e) => Some(Err(e)),
        })
        .collect();
    r.push_result("c02_bk_rows_permute_z2k", failing.map(|f| Check::exact("c02_bk_rows_permute_z2k", f.is_empty(), f.len() as f64)));

    let examples: Result<bool> = (|| {
        Ok(genfn_numerator(1)?.coeffs == [2, 1, 1] && genfn_numerator(2)?.coeffs == [1, 2, 8, 1, 2, 1, 1])
    })();
    r.push_result("c03_numerator_examples", examples.map(|ok| Check::exact("c03_numerator_examples", ok, 0.0)));
    let top = k.min(12).min(MAX_GENFN_LEVEL);
    let positive: Result<usize> =
        (1..=top).map(|j| genfn_numerator(j).map(|g| usize::from(!g.all_positive()))).sum();
    r.push_result("c03_numerators_positive", positive.map(|bad| Check::exact("c03_numerators_positive", bad == 0, bad as f64)));
    r.finish(start)
}

fn random_ints(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-1000..=1000)).collect()
}

/// Operator norms, preimage counts and the spectral-radius sandwich.
pub fn koopman(opts: &VerifyOptions, n_max: u32, search_bound: u64) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify koopman").param("n_max", n_max).param("search_bound", search_bound);
    r.push_result(
        "c04_forward_norm_sqrt2",
        koopman::operator_norm_numeric(1, 64)
            .map(|v| Check::within("c04_forward_norm_sqrt2", (v - 2f64.sqrt()).abs(), opts.tol(1e-8))),
    );
    r.push_result(
        "c04_backward_l1_norm",
        koopman::backward_l1_norm(64).map(|v| Check::exact("c04_backward_l1_norm", v == 2, (v - 2) as f64)),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (x, y) = (random_ints(&mut rng, 1024), random_ints(&mut rng, 1024));
    let adjoint: Result<i64> = (|| {
        let lhs = koopman::dot(&koopman::forward_apply(&x)?, &y);
        let rhs = koopman::dot(&x, &koopman::backward_apply(&y)?);
        Ok(lhs - rhs)
    })();
    r.push_result("c04_adjoint_identity", adjoint.map(|d| Check::exact("c04_adjoint_identity", d == 0, d as f64)));

    let brute: Result<u64> = (0..=12u32.min(n_max))
        .into_par_iter()
        .map(|n| {
            let memo = koopman::PreimageCount::new();
            let mut bad = 0;
            for m in 1..=200u128 {
                if memo.count(n, m)? != koopman::enumerate_preimages(n, m)?.len() as u64 {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .sum();
    r.push_result("c05_memo_matches_enumeration", brute.map(|bad| Check::exact("c05_memo_matches_enumeration", bad == 0, bad as f64)));

    match koopman::cn_profile(n_max, search_bound) {
        Ok(profile) => {
            let violations = profile
                .iter()
                .filter(|e| u128::from(e.value) > koopman::fibonacci(e.n) || e.value < u64::from(e.n))
                .count();
            r.push(Check::exact("c05_sandwich_n_le_cn_le_fib", violations == 0, violations as f64));
            r.push(Check::info(format!("c05_cn_lower_bound_n{n_max}"), profile.last().map_or(0.0, |e| e.value as f64)));

            let flat = koopman::spectral_rows(Exponent::Finite(1.0), &profile);
            let worst = flat
                .iter()
                .map(|row| (row.lower - 1.0).abs().max((row.sandwich - 1.0).abs()).max((row.upper - 1.0).abs()))
                .fold(0.0, f64::max);
            r.push(Check::within("c06_p1_bounds_equal_one", worst, opts.tol(1e-12)));
            for (label, p) in [("p2", Exponent::Finite(2.0)), ("pinf", Exponent::Infinity)] {
                let rows = koopman::spectral_rows(p, &profile);
                let limit = ((1.0 + 5f64.sqrt()) / 2.0).powf(p.dual_weight());
                let ordered = rows.iter().all(|row| row.ordered());
                let decreasing = rows.windows(2).all(|w| w[1].upper < w[0].upper);
                let sandwich_monotone = rows.windows(2).all(|w| w[1].sandwich <= w[0].sandwich);
                let above = rows.iter().all(|row| row.upper >= limit);
                r.push(Check::exact(format!("c06_{label}_rows_ordered"), ordered, 0.0));
                r.push(Check::exact(format!("c06_{label}_upper_decreases_to_golden"), decreasing && above, 0.0));
                r.push(Check::exact(format!("c06_{label}_sandwich_nonincreasing"), sandwich_monotone, 0.0));
                if let Some(last) = rows.last() {
                    r.push(Check::info(format!("c06_{label}_upper_minus_limit"), last.upper - limit));
                    r.push(Check::info(format!("c06_{label}_sandwich_last"), last.sandwich));
                }
            }
        }
        Err(e) => r.push(Check::error(format!("c05_profile: {e}"))),
    }
    r.finish(start)
}

/// `‖cesaro(e_n, K) - ½(e_1 + e_2)‖₁ <= (2 s(n) + 4)/K` for `n <= n_max`.
pub fn averaging(n_max: u64, k: u64) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify averaging").param("n_max", n_max).param("K", k);
    let outcome: Result<(u64, f64)> = (|| {
        let registry = build_registry(n_max, DEFAULT_CAP)?;
        let height = (1..=n_max)
            .map(|n| {
                let s = registry.steps_to_cycle(n)?;
                Ok((0..=s).map(|j| iterate_t_u64(n, j).unwrap_or(u64::MAX)).max().unwrap_or(n))
            })
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .max()
            .unwrap_or(2) as usize;
        let truncation = height.max(2);
        let half = BigRational::new(1.into(), 2.into());
        let mut target = unit_vector(truncation, 1);
        target[0] = half.clone();
        target[1] = half;
        let rows: Vec<Result<(bool, f64)>> = (1..=n_max)
            .into_par_iter()
            .map(|n| {
                let avg = cesaro_average(&unit_vector(truncation, n), k)?;
                let dist = l1_distance(&avg, &target);
                let bound = BigRational::new((2 * registry.steps_to_cycle(n)? + 4).into(), k.into());
                Ok((dist <= bound, (dist / bound).to_f64().unwrap_or(f64::INFINITY)))
            })
            .collect();
        let mut bad = 0;
        let mut worst = 0.0f64;
        for row in rows {
            let (ok, ratio) = row?;
            bad += u64::from(!ok);
            worst = worst.max(ratio);
        }
        Ok((bad, worst))
    })();
    match outcome {
        Ok((bad, worst)) => {
            r.push(Check::exact("c07_cesaro_rate", bad == 0, bad as f64));
            r.push(Check::info("c07_worst_distance_over_bound", worst));
        }
        Err(e) => r.push(Check::error(format!("c07_cesaro_rate: {e}"))),
    }
    r.finish(start)
}

/// Fourier coefficient identities and reconstruction for levels `<= k`, lift identity for levels `<= 8`.
pub fn spectrum(opts: &VerifyOptions, k: u32) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify spectrum").param("k", k);
    let rows: Vec<Result<(f64, f64)>> = (1..=k)
        .into_par_iter()
        .map(|level| {
            let coeffs = fourier_coeffs(level)?;
            let identity = (coeffs.sum() - 1.0).norm().max((coeffs.l2_norm() - 1.0).abs());
            let n_max = 1u64 << (level + 1);
            let values = coeffs.reconstruct_all(n_max);
            let mut recon = 0.0f64;
            for (idx, v) in values.iter().enumerate() {
                let tk = iterate_t_u64(idx as u64 + 1, u64::from(level)).expect("small values");
                let sign = if tk % 2 == 0 { 1.0 } else { -1.0 };
                recon = recon.max((v - sign).norm());
            }
            Ok((identity, recon))
        })
        .collect();
    let mut identity = 0.0f64;
    let mut recon = 0.0f64;
    let mut failed = None;
    for row in rows {
        match row {
            Ok((a, b)) => {
                identity = identity.max(a);
                recon = recon.max(b);
            }
            Err(e) => failed = Some(e),
        }
    }
    if let Some(e) = failed {
        r.push(Check::error(format!("c08_fourier: {e}")));
    } else {
        r.push(Check::within("c08_sum_and_norm_are_one", identity, opts.tol(1e-10)));
        r.push(Check::within("c08_reconstruction", recon, opts.tol(1e-8)));
    }
    r.push_result(
        "c08_level_one_coefficients",
        fourier_coeffs(1).map(|b| {
            let d = linalg::max_abs_diff(&b.b, &[c(0.5, 0.5), c(0.5, -0.5)]);
            Check::within("c08_level_one_coefficients", d, opts.tol(1e-15))
        }),
    );
    let lift: Result<f64> = (1..=8u32)
        .into_par_iter()
        .map(|level| {
            let mut worst = 0.0f64;
            for j in 1..=1u64 << level {
                for n in 1..=512 {
                    worst = worst.max(lift_identity_check(j, level, n)?);
                }
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    r.push_result("c09_lift_identity", lift.map(|v| Check::within("c09_lift_identity", v, opts.tol(1e-10))));
    r.finish(start)
}

fn omega(j: i64, k: u32) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::PI * (2 * j - 1) as f64 / (1u64 << k) as f64)
}

/// The example matrices `M_0`, `M_1`, `M_2`, without the common factor ½.
fn printed_matrices() -> Vec<Vec<Vec<Complex64>>> {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    let w = omega;
    vec![
        vec![vec![c(1.0, -1.0), c(1.0, 1.0)]],
        vec![vec![o, w(1, 2), o, -w(1, 2)], vec![w(2, 2), o, -w(2, 2), o]],
        vec![
            vec![o, w(1, 3), z, z, o, -w(1, 3), z, z],
            vec![-w(2, 3), o, z, z, w(2, 3), o, z, z],
            vec![z, z, o, -w(3, 3), z, z, o, w(3, 3)],
            vec![z, z, w(4, 3), o, z, z, -w(4, 3), o],
        ],
    ]
}

/// Row isometries, example matrices, the index permutation, the chain
/// identity, the block shift and its Wold complement.
pub fn isometry(opts: &VerifyOptions, k_max: u32) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify isometry").param("k_max", k_max);
    let residual: Result<f64> =
        (0..=k_max).into_par_iter().map(isometry::row_isometry_check).try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    r.push_result("c10_row_isometry", residual.map(|v| Check::within("c10_row_isometry", v, opts.tol(1e-12))));

    let printed: Result<f64> = printed_matrices()
        .iter()
        .enumerate()
        .map(|(k, rows)| {
            let m = build_mk(k as u32)?.to_dense();
            let mut worst = 0.0f64;
            for (i, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    worst = worst.max((m.get(i, j) - v * 0.5).norm());
                }
            }
            Ok(worst)
        })
        .try_fold(0.0, |a: f64, b: Result<f64>| b.map(|b| a.max(b)));
    r.push_result("c10_printed_matrices", printed.map(|v| Check::within("c10_printed_matrices", v, opts.tol(1e-15))));

    let cycles: Result<usize> = (2..=16u32)
        .into_par_iter()
        .map(|k| {
            let cy = permutation_cycles(k)?;
            Ok(usize::from(!(cy.len() == 2 && cy.iter().all(|c| c.len() == 1 << (k - 1)))))
        })
        .sum();
    r.push_result("c10_two_cycles", cycles.map(|bad| Check::exact("c10_two_cycles", bad == 0, bad as f64)));
    let orders = (2..=20u32).filter(|&k| isometry::order_of_three(k) != 1 << (k - 1)).count();
    r.push(Check::exact("c10_order_of_three", orders == 0, orders as f64));

    let chain: Result<f64> = (1..=k_max.min(10))
        .into_par_iter()
        .map(|k| Ok(linalg::max_abs_diff(&compose_chain(k)?, &fourier_coeffs(k)?.conjugated())))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    r.push_result("c11_chain_equals_conjugated_coefficients", chain.map(|v| Check::within("c11_chain_equals_conjugated_coefficients", v, opts.tol(1e-9))));

    r.push_result(
        "c12_s_star_s_identity",
        build_s(k_max).map(|s| Check::within("c12_s_star_s_identity", s.left_unitary_residual(), opts.tol(1e-12))),
    );
    let wold: Result<(usize, f64)> = (1..=k_max.min(8))
        .into_par_iter()
        .map(|k| {
            let wb = wold_complement(k)?;
            let bad = usize::from(wb.complement_basis.len() != 1 << (k - 1));
            Ok((bad, wb.orthonormality_residual().max(wb.orthogonality_residual()?)))
        })
        .try_reduce(|| (0, 0.0), |a, b| Ok((a.0 + b.0, a.1.max(b.1))));
    match wold {
        Ok((bad, res)) => {
            r.push(Check::exact("c12_wold_dimensions", bad == 0, bad as f64));
            r.push(Check::within("c12_wold_orthonormality", res, opts.tol(1e-10)));
        }
        Err(e) => r.push(Check::error(format!("c12_wold: {e}"))),
    }
    r.finish(start)
}

/// Correlation theorem with `f_0` on `n <= 2^levels`, its negative control,
/// and `φ` at `λ`, `k_max`.
pub fn correlation(opts: &VerifyOptions, levels: u32, lambda: Complex64, k_max: u32) -> Report {
    let start = Instant::now();
    let mut r = Report::new("verify correlation").param("levels", levels).param("lambda", lambda).param("k_max", k_max);
    let theorem: Result<(usize, usize)> = (|| {
        let f = correlation::f0(1u64 << levels)?;
        let fstar = conjugate_inc(&f)?;
        let mut pairs = Vec::new();
        for n1 in 1..=levels {
            if fstar.eval(u64::from(n1))? < 1u64 << n1 {
                pairs.extend((n1..=levels).map(|n2| (n1, n2)));
            }
        }
        let bad = pairs
            .par_iter()
            .map(|&(n1, n2)| correlation_theorem_check(&f, n1, n2).map(|(lhs, rhs)| usize::from(lhs != rhs)))
            .sum::<Result<usize>>()?;
        Ok((pairs.len(), bad))
    })();
    match theorem {
        Ok((pairs, bad)) => {
            r.push(Check::exact("c13_f0_pairs_equal", bad == 0 && pairs > 0, bad as f64));
            r.push(Check::info("c13_f0_valid_pairs", pairs as f64));
        }
        Err(e) => r.push(Check::error(format!("c13_f0: {e}"))),
    }
    let control: Result<usize> = (|| {
        let g = correlation::ceil_log2_fn(1u64 << levels)?;
        let top = (levels - 1).min(12);
        let mut violations = 0;
        for n1 in 1..=top {
            for n2 in n1..=top {
                let (lhs, rhs) = correlation_theorem_check(&g, n1, n2)?;
                violations += usize::from(lhs != rhs);
            }
        }
        Ok(violations)
    })();
    r.push_result("c13_negative_control_violates", control.map(|v| Check::exact("c13_negative_control_violates", v > 0, v as f64)));

    let one = c(1.0, 0.0);
    let phi: Result<()> = (|| {
        let f = correlation::f0(1u64 << levels)?;
        let id = phi_functional(&f, &[WordTerm { i: 0, j: 0, a: one }], lambda, k_max)?;
        r.push(Check::exact("c14_phi_identity_zero", id.value == c(0.0, 0.0), id.value.norm()));
        let shift = phi_functional(&f, &[WordTerm { i: 0, j: 1, a: one }], lambda, k_max)?;
        r.push(Check::within("c14_phi_f0_shift", shift.value.norm(), shift.truncation_bound + opts.tol(1e-6)));
        let g = correlation::ceil_log2_fn(1u64 << levels)?;
        let mut exceeded = 0;
        for (i, j) in [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)] {
            let res = phi_functional(&g, &[WordTerm { i, j, a: one }], lambda, k_max)?;
            exceeded += usize::from(res.value.norm() > res.truncation_bound);
        }
        r.push(Check::exact("c14_negative_control_exceeds_bound", exceeded > 0, exceeded as f64));
        Ok(())
    })();
    if let Err(e) = phi {
        r.push(Check::error(format!("c14_phi: {e}")));
    }
    r.finish(start)
}

/// Runs one module's verification with its acceptance-scale defaults.
pub fn module(name: &str, opts: &VerifyOptions) -> Option<Report> {
    Some(match name {
        "core_map" => core_map(4096, 24),
        "parity" => parity(14),
        "koopman" => koopman(opts, 25, 100_000),
        "averaging" => averaging(200, 10_000),
        "spectrum" => spectrum(opts, 12),
        "isometry" => isometry(opts, 10),
        "correlation" => correlation(opts, 14, c(0.5, 0.0), 9),
        _ => return None,
    })
}

/// Every module at acceptance scale, merged into one report.
pub fn all(opts: &VerifyOptions) -> Report {
    let start = Instant::now();
    let reports: Vec<(&str, Report)> =
        MODULES.par_iter().map(|&m| (m, module(m, opts).expect("known module"))).collect();
    let mut out = Report::new("verify all").param("seed", opts.seed);
    if let Some(t) = opts.tol {
        out = out.param("tol", t);
    }
    for (name, rep) in reports {
        out.absorb(name, rep);
    }
    out.finish(start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scale_reports_pass() {
        let opts = VerifyOptions::default();
        for rep in [
            core_map(64, 8),
            parity(6),
            koopman(&opts, 10, 1000),
            averaging(20, 500),
            spectrum(&opts, 5),
            isometry(&opts, 5),
            correlation(&opts, 8, c(0.5, 0.0), 5),
        ] {
            assert!(rep.passed(), "{}", rep.to_text());
        }
    }

    #[test]
    fn tolerance_override_can_fail_a_check() {
        let opts = VerifyOptions { tol: Some(-1.0), seed: 1 };
        let rep = koopman(&opts, 4, 100);
        assert!(!rep.passed());
        assert!(rep.failures().any(|c| c.name == "c04_forward_norm_sqrt2"));
    }

    #[test]
    fn unknown_module() {
        assert!(module("nope", &VerifyOptions::default()).is_none());
    }
}
