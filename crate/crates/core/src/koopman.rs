//! Truncated Collatz-Koopman operators on sequence space.
//!
//! The forward operator `L` sends `e_i` to `e_{T(i)}`; the backward operator
//! `B` is its transpose, `(Bx)_i = x_{T(i)}`. Truncation at `N` keeps the
//! `N × N` top-left corner of the infinite adjacency matrix, so sources or
//! targets above `N` are dropped.
//!
//! Vectors are 0-based slices where `x[i - 1]` holds the coordinate `x_i`.

use dashmap::DashMap;
use num_bigint::BigUint;
use num_traits::{Num, One, Pow};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collatz::{iterate_t_u64, t_step_u64, Natural};
use crate::error::{Error, Result};

/// Iteration cap for [`operator_norm_numeric`].
pub const POWER_ITERATION_CAP: usize = 10_000;
/// Relative tolerance for [`operator_norm_numeric`].
pub const POWER_ITERATION_TOL: f64 = 1e-10;

/// A 0/1 matrix stored as `(row, column, weight)` triples, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMap {
    pub dim_in: usize,
    pub dim_out: usize,
    pub entries: Vec<(usize, usize, i64)>,
}

impl SparseMap {
    /// `L^n` truncated to `N × N`: entry `(T^n(i), i)` for `i, T^n(i) <= N`.
    pub fn forward_power(n_power: u32, truncation: usize) -> Self {
        let entries = (1..=truncation)
            .filter_map(|i| {
                let m = iterate_t_u64(i as u64, u64::from(n_power))?;
                (m as usize <= truncation).then_some((m as usize, i, 1))
            })
            .collect();
        SparseMap { dim_in: truncation, dim_out: truncation, entries }
    }

    pub fn forward(truncation: usize) -> Self {
        Self::forward_power(1, truncation)
    }

    pub fn transpose(&self) -> Self {
        SparseMap {
            dim_in: self.dim_out,
            dim_out: self.dim_in,
            entries: self.entries.iter().map(|&(r, c, w)| (c, r, w)).collect(),
        }
    }

    pub fn apply<T: Num + Clone>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim_in);
        let mut out = vec![T::zero(); self.dim_out];
        for &(r, c, w) in &self.entries {
            let mut term = x[c - 1].clone();
            for _ in 1..w {
                term = term + x[c - 1].clone();
            }
            out[r - 1] = out[r - 1].clone() + term;
        }
        out
    }

    /// Number of entries in each row.
    pub fn row_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.dim_out];
        for &(r, _, _) in &self.entries {
            counts[r - 1] += 1;
        }
        counts
    }

    /// Induced `ℓ₁` norm: the largest absolute column sum.
    pub fn l1_norm(&self) -> i64 {
        let mut sums = vec![0i64; self.dim_in];
        for &(_, c, w) in &self.entries {
            sums[c - 1] += w.abs();
        }
        sums.into_iter().max().unwrap_or(0)
    }

    /// Largest singular value by power iteration on `A A^t`, seeded with
    /// the all-ones vector.
    pub fn spectral_norm(&self, tol: f64, cap: usize) -> Result<f64> {
        let at = self.transpose();
        let mut v = vec![1.0f64; self.dim_out];
        let mut lambda = 0.0f64;
        for _ in 0..cap {
            let w = self.apply(&at.apply(&v));
            let norm_v: f64 = v.iter().map(|a| a * a).sum();
            let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm_v;
            let norm_w = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm_w == 0.0 {
                return Ok(0.0);
            }
            v = w.into_iter().map(|a| a / norm_w).collect();
            if (next - lambda).abs() <= tol * next.abs().max(1.0) {
                return Ok(next.sqrt());
            }
            lambda = next;
        }
        Err(Error::NoConvergence { iterations: cap })
    }
}

fn check_truncation(len: usize) -> Result<()> {
    if len < 4 {
        return Err(Error::InvalidArgument(format!("truncation {len} is below 4")));
    }
    Ok(())
}

/// `a_m = Σ_{i <= N, T(i) = m} x_i`, with `N = x.len()`.
pub fn forward_apply<T: Num + Clone>(x: &[T]) -> Result<Vec<T>> {
    check_truncation(x.len())?;
    let n = x.len() as u64;
    let mut out = vec![T::zero(); x.len()];
    for i in 1..=n {
        let m = t_step_u64(i).expect("truncation fits in u64");
        if m <= n {
            let slot = &mut out[m as usize - 1];
            *slot = slot.clone() + x[i as usize - 1].clone();
        }
    }
    Ok(out)
}

/// `a_i = x_{T(i)}` for `i <= N`, zero when `T(i) > N`.
pub fn backward_apply<T: Num + Clone>(x: &[T]) -> Result<Vec<T>> {
    check_truncation(x.len())?;
    let n = x.len() as u64;
    Ok((1..=n)
        .map(|i| {
            let m = t_step_u64(i).expect("truncation fits in u64");
            if m <= n {
                x[m as usize - 1].clone()
            } else {
                T::zero()
            }
        })
        .collect())
}

/// `Σ x_i y_i`.
pub fn dot<T: Num + Clone>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

/// Spectral norm of the truncated `L^n` (the `p = 2` operator norm).
pub fn operator_norm_numeric(n_power: u32, truncation: usize) -> Result<f64> {
    if n_power == 0 {
        return Ok(1.0);
    }
    check_truncation(truncation)?;
    SparseMap::forward_power(n_power, truncation).spectral_norm(POWER_ITERATION_TOL, POWER_ITERATION_CAP)
}

/// `‖B‖` on truncated `ℓ₁`, computed as an exact column sum.
pub fn backward_l1_norm(truncation: usize) -> Result<i64> {
    check_truncation(truncation)?;
    Ok(SparseMap::forward(truncation).transpose().l1_norm())
}

/// `F_n` with `F_0 = 1`, `F_1 = 2`.
pub fn fibonacci(n: u32) -> u128 {
    let (mut a, mut b) = (1u128, 2u128);
    for _ in 0..n {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

/// Memoized `|A^n_m|` through
/// `|A^n_m| = |A^{n-1}_{2m}| (+ |A^{n-1}_{(2m-1)/3}| if m ≡ 2 mod 3)`.
#[derive(Debug, Default)]
pub struct PreimageCount {
    memo: DashMap<(u32, u128), u64>,
}

impl PreimageCount {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn count(&self, n: u32, m: u128) -> Result<u64> {
        if m == 0 {
            return Err(Error::ZeroInput);
        }
        if n == 0 {
            return Ok(1);
        }
        if let Some(v) = self.memo.get(&(n, m)) {
            return Ok(*v);
        }
        let double = m.checked_mul(2).ok_or(Error::Overflow("preimage 2m"))?;
        let mut total = self.count(n - 1, double)?;
        if m % 3 == 2 {
            total += self.count(n - 1, (double - 1) / 3)?;
        }
        // Values are a function of the key, so a racing insert stores the same number.
        self.memo.insert((n, m), total);
        Ok(total)
    }
}

/// `|A^n_m|` through a fresh memo table.
pub fn preimage_count(n: u32, m: &Natural) -> Result<u64> {
    let m = m.as_biguint().try_into().map_err(|_| Error::Overflow("m beyond u128"))?;
    PreimageCount::new().count(n, m)
}

/// `|A^l_m|` for every `l <= n_max`, from one walk of the backward tree.
///
/// Distinct nodes of one level are distinct integers, so level sizes are the
/// preimage counts. A node divisible by 3 has only the preimage `2v`, again
/// divisible by 3, and contributes one node to every deeper level.
pub fn level_profile(m: u128, n_max: u32) -> Result<Vec<u64>> {
    if m == 0 {
        return Err(Error::ZeroInput);
    }
    let mut counts = vec![0u64; n_max as usize + 1];
    let mut stack = vec![(m, 0u32)];
    while let Some((v, depth)) = stack.pop() {
        if v % 3 == 0 {
            for c in &mut counts[depth as usize..] {
                *c += 1;
            }
            continue;
        }
        counts[depth as usize] += 1;
        if depth == n_max {
            continue;
        }
        let double = v.checked_mul(2).ok_or(Error::Overflow("backward tree node"))?;
        stack.push((double, depth + 1));
        if v % 3 == 2 {
            stack.push(((double - 1) / 3, depth + 1));
        }
    }
    Ok(counts)
}

/// The `n`-step preimages of `m`, listed explicitly.
pub fn enumerate_preimages(n: u32, m: u128) -> Result<Vec<u128>> {
    let mut level = vec![m];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &v in &level {
            let double = v.checked_mul(2).ok_or(Error::Overflow("backward tree node"))?;
            next.push(double);
            if v % 3 == 2 {
                next.push((double - 1) / 3);
            }
        }
        level = next;
    }
    Ok(level)
}

/// A certified lower bound for `c_n` with the `m` that attains it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnEstimate {
    pub n: u32,
    pub value: u64,
    pub witness_m: Natural,
    pub search_bound: u64,
}

/// `3^n - 1 = T^n(2^n - 1)`.
pub fn lemma_witness(n: u32) -> Result<u128> {
    3u128.checked_pow(n).map(|v| v - 1).ok_or(Error::Overflow("3^n - 1"))
}

// Larger count wins; ties go to the smaller m so results do not depend on scheduling.
fn better(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Lower bounds for `c_0, ..., c_{n_max}` from all `m <= M` plus the witnesses `3^n - 1`.
pub fn cn_profile(n_max: u32, search_bound: u64) -> Result<Vec<CnEstimate>> {
    if search_bound < 2 {
        return Err(Error::InvalidArgument("search bound must be at least 2".into()));
    }
    let width = n_max as usize + 1;
    let best = (1..=search_bound)
        .into_par_iter()
        .map(|m| level_profile(u128::from(m), n_max).map(|p| (m, p)))
        .try_fold(
            || vec![(0u64, 0u64); width],
            |mut acc, item| {
                let (m, profile) = item?;
                for (slot, &c) in acc.iter_mut().zip(&profile) {
                    *slot = better(*slot, (c, m));
                }
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(|| vec![(0u64, 0u64); width], |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| better(x, y)).collect()))?;
    let mut out = Vec::with_capacity(width);
    for (n, &(value, m)) in best.iter().enumerate() {
        let n = n as u32;
        let mut estimate = CnEstimate { n, value, witness_m: Natural::from(m), search_bound };
        let star = lemma_witness(n)?;
        if star >= 1 {
            let c = level_profile(star, n)?[n as usize];
            if c > value {
                estimate.value = c;
                estimate.witness_m = Natural::from_biguint(BigUint::from(star));
            }
        }
        out.push(estimate);
    }
    Ok(out)
}

/// `max_{m <= M} |A^n_m|`, also trying the witness `T^n(2^n - 1)`.
pub fn cn_estimate(n: u32, search_bound: u64) -> Result<CnEstimate> {
    Ok(cn_profile(n, search_bound)?.pop().expect("profile has n + 1 rows"))
}

/// `3^k 2^{n-k} (λ + 1) - 1`, the closed form of `T^k(2^n λ + 2^n - 1)` for `k <= n`.
pub fn lemma51_closed_form(n: u32, lambda: u64, k: u32) -> Natural {
    assert!(k <= n);
    let v = Pow::pow(&BigUint::from(3u32), k) * (BigUint::one() << (n - k)) * BigUint::from(lambda + 1) - 1u32;
    Natural::from_biguint(v)
}

/// For every `λ <= lambda_max` and `p = 2^n λ + 2^n - 1`: `T^k(p)` is odd for
/// `k < n` and `≡ 2 (mod 3)` for `1 <= k <= n`.
pub fn lemma51_check(n: u32, lambda_max: u64) -> Result<bool> {
    if n == 0 {
        return Err(Error::InvalidArgument("lemma check needs n >= 1".into()));
    }
    for lambda in 0..=lambda_max {
        let p = (BigUint::from(lambda) << n) + (BigUint::one() << n) - 1u32;
        let mut v = Natural::from_biguint(p);
        for k in 0..=n {
            if k < n && !v.is_odd() {
                return Ok(false);
            }
            if k >= 1 && v.rem_u64(3) != 2 {
                return Ok(false);
            }
            if k < n {
                v = crate::collatz::collatz_t(&v)?;
            }
        }
    }
    Ok(true)
}

/// Exponent `p ∈ [1, ∞]` of `ℓ_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// `1 - 1/p`.
    pub fn dual_weight(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 - 1.0 / p,
            Exponent::Infinity => 1.0,
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other.parse().map_err(|_| Error::InvalidArgument(format!("bad exponent '{s}'")))?;
                if p >= 1.0 {
                    Ok(Exponent::Finite(p))
                } else {
                    Err(Error::InvalidArgument(format!("exponent {p} is below 1")))
                }
            }
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub n: u32,
    pub c_n: u64,
    pub fib: u128,
    pub lower: f64,
    pub sandwich: f64,
    pub upper: f64,
}

impl SpectralRow {
    pub fn ordered(&self) -> bool {
        self.lower <= self.sandwich + 1e-15 && self.sandwich <= self.upper + 1e-15
    }
}

/// Rows `(n^{1/n})^{1-1/p} <= (c_n)^{(1-1/p)/n} <= (F_n^{1/n})^{1-1/p}` for `1 <= n <= n_max`.
pub fn spectral_radius_report(p: Exponent, n_max: u32, search_bound: u64) -> Result<Vec<SpectralRow>> {
    if n_max > 30 {
        return Err(Error::LevelTooLarge { level: n_max, max: 30 });
    }
    Ok(spectral_rows(p, &cn_profile(n_max, search_bound)?))
}

/// The report rows for an already computed profile; row `n = 0` is skipped.
pub fn spectral_rows(p: Exponent, profile: &[CnEstimate]) -> Vec<SpectralRow> {
    let w = p.dual_weight();
    profile
        .iter()
        .filter(|est| est.n >= 1)
        .map(|est| {
            let n = est.n;
            let nf = f64::from(n);
            let fib = fibonacci(n);
            SpectralRow {
                n,
                c_n: est.value,
                fib,
                lower: nf.powf(w / nf),
                sandwich: (est.value as f64).powf(w / nf),
                upper: (fib as f64).powf(w / nf),
            }
        })
        .collect()
}

/// `(n, c_n lower bound, (n+1)(n+2)/4, holds)` for `n <= n_max`.
pub fn quadratic_lower_check(n_max: u32, search_bound: u64) -> Result<Vec<(u32, u64, f64, bool)>> {
    Ok(cn_profile(n_max, search_bound)?
        .into_iter()
        .map(|est| {
            let n = f64::from(est.n);
            let bound = (n + 1.0) * (n + 2.0) / 4.0;
            (est.n, est.value, bound, est.value as f64 >= bound)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize) -> Vec<i64> {
        let mut v = vec![0; n];
        v[i - 1] = 1;
        v
    }

    #[test]
    fn forward_examples() {
        let mut x = unit(16, 1);
        x[3] = 1;
        let mut expected = vec![0; 16];
        expected[1] = 2;
        assert_eq!(forward_apply(&x).unwrap(), expected);
        assert_eq!(forward_apply(&unit(16, 6)).unwrap(), unit(16, 3));
        assert_eq!(forward_apply(&unit(16, 5)).unwrap(), unit(16, 8));
        assert!(forward_apply(&[1, 2, 3]).is_err());
    }

    #[test]
    fn backward_examples() {
        let mut expected = unit(16, 1);
        expected[3] = 1;
        assert_eq!(backward_apply(&unit(16, 2)).unwrap(), expected);
        assert_eq!(backward_apply(&unit(16, 3)).unwrap(), unit(16, 6));
    }

    #[test]
    fn sparse_map_agrees_with_direct_application() {
        let x: Vec<i64> = (1..=40).map(|v| v * v % 7 - 3).collect();
        let l = SparseMap::forward(40);
        assert_eq!(l.apply(&x), forward_apply(&x).unwrap());
        assert_eq!(l.transpose().apply(&x), backward_apply(&x).unwrap());
        assert!(l.row_counts().iter().all(|&c| c <= 2));
    }

    #[test]
    fn norms() {
        assert!((operator_norm_numeric(1, 64).unwrap() - 2f64.sqrt()).abs() < 1e-8);
        assert!((operator_norm_numeric(2, 256).unwrap() - 3f64.sqrt()).abs() < 1e-8);
        assert_eq!(operator_norm_numeric(0, 64).unwrap(), 1.0);
        assert_eq!(backward_l1_norm(64).unwrap(), 2);
    }

    #[test]
    fn fibonacci_convention() {
        assert_eq!(fibonacci(0), 1);
        assert_eq!(fibonacci(1), 2);
        assert_eq!(fibonacci(2), 3);
        assert_eq!(fibonacci(25), 196_418);
    }

    #[test]
    fn preimage_counts_by_memo_tree_and_profile() {
        let memo = PreimageCount::new();
        assert_eq!(memo.count(0, 17).unwrap(), 1);
        for n in 0..=10 {
            for m in [3u128, 6, 9] {
                assert_eq!(memo.count(n, m).unwrap(), 1);
            }
        }
        for m in 1..=60u128 {
            let profile = level_profile(m, 10).unwrap();
            for n in 0..=10u32 {
                let explicit = enumerate_preimages(n, m).unwrap().len() as u64;
                assert_eq!(memo.count(n, m).unwrap(), explicit);
                assert_eq!(profile[n as usize], explicit);
            }
        }
    }

    #[test]
    fn small_cn_values() {
        assert_eq!(cn_estimate(0, 10).unwrap().value, 1);
        let c1 = cn_estimate(1, 10).unwrap();
        assert_eq!(c1.value, 2);
        assert_eq!(c1.witness_m, Natural::from(2u64));
        assert_eq!(cn_estimate(2, 100).unwrap().value, 3);
    }

    #[test]
    fn lemma_on_small_cases() {
        assert!(lemma51_check(1, 0).unwrap());
        assert!(lemma51_check(3, 10).unwrap());
        for n in 1..=10u32 {
            for lambda in 0..=5u64 {
                let p = (lambda << n) + (1 << n) - 1;
                for k in 0..=n {
                    let direct = iterate_t_u64(p, u64::from(k)).unwrap();
                    assert_eq!(lemma51_closed_form(n, lambda, k), Natural::from(direct));
                }
            }
        }
    }

    #[test]
    fn report_for_p_one_is_flat() {
        let rows = spectral_radius_report(Exponent::Finite(1.0), 8, 1000).unwrap();
        assert!(rows.iter().all(|r| r.lower == 1.0 && r.sandwich == 1.0 && r.upper == 1.0));
        let rows = spectral_radius_report(Exponent::Infinity, 8, 1000).unwrap();
        assert!(rows.iter().all(SpectralRow::ordered));
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Finite(2.0));
        assert!("0.5".parse::<Exponent>().is_err());
    }
}
