//! Parity sequences `x_{ni} = T^{i-1}(n) mod 2` and what they determine:
//! the exact closed form of `T^k`, the base-`2^k` decomposition, the tables
//! `B_k`, the generating-function numerators and the density of
//! odd-heavy parity vectors.
//!
//! Bits are indexed from `i = 1`, so `x_{n1} = n mod 2`. Sums of the form
//! `S_k(n)` count the `k` leading bits `x_{n1}, ..., x_{nk}`.

use num_bigint::BigUint;
use num_integer::binomial;
use num_rational::Ratio;
use num_traits::{One, Pow, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collatz::{iterate_t, iterate_t_u64, t_step_u64, Natural};
use crate::error::{Error, Result};

/// Largest level for which [`build_bk`] materializes a table.
pub const MAX_TABLE_LEVEL: u32 = 20;
/// Largest level accepted by [`genfn_numerator`].
pub const MAX_GENFN_LEVEL: u32 = 14;

/// `T^{i-1}(n) mod 2` for `i >= 1`.
pub fn parity_bit(n: &Natural, i: u32) -> Result<u8> {
    if i == 0 {
        return Err(Error::InvalidArgument("parity index starts at 1".into()));
    }
    let v = iterate_t(n, u64::from(i - 1))?;
    Ok(u8::from(v.is_odd()))
}

/// The representative of `n mod 2^k` in `1..=2^k`.
fn representative(n: &Natural, k: u32) -> BigUint {
    let modulus = BigUint::one() << k;
    let r = n.as_biguint() % &modulus;
    if r.is_zero() {
        modulus
    } else {
        r
    }
}

/// The `k` leading parity bits of `n`, obtained from the residue of `n`
/// modulo `2^k` alone (column `i` has period `2^i`).
pub fn parity_vector(n: &Natural, k: u32) -> Result<Vec<u8>> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut cur = Natural::from_biguint(representative(n, k));
    let mut bits = Vec::with_capacity(k as usize);
    for _ in 0..k {
        bits.push(u8::from(cur.is_odd()));
        cur = crate::collatz::collatz_t(&cur)?;
    }
    Ok(bits)
}

/// `S_k(n)`: the number of odd values among `T^0(n), ..., T^{k-1}(n)`.
pub fn ones_count(n: &Natural, k: u32) -> Result<u32> {
    if k == 0 {
        return Err(Error::InvalidArgument("ones_count needs k >= 1".into()));
    }
    Ok(parity_vector(n, k)?.iter().map(|&b| u32::from(b)).sum())
}

/// `(d, φ)` for a parity vector: `d = Σ x_i`, `φ = Σ x_i 2^{i-1} 3^{Σ_{λ>i} x_λ}`.
fn parity_coefficients(bits: &[u8]) -> (u32, BigUint) {
    let mut phi = BigUint::zero();
    let mut suffix = 0u32;
    let three = BigUint::from(3u32);
    for (idx, &b) in bits.iter().enumerate().rev() {
        if b == 1 {
            phi += (BigUint::one() << idx) * Pow::pow(&three, suffix);
            suffix += 1;
        }
    }
    (suffix, phi)
}

fn divide_exact(numerator: BigUint, n: &Natural, k: u32) -> Result<Natural> {
    let mask = (BigUint::one() << k) - 1u32;
    if !(&numerator & &mask).is_zero() {
        return Err(Error::InexactDivision { n: n.to_string(), k });
    }
    Ok(Natural::from_biguint(numerator >> k))
}

/// `T^k(n)` evaluated from its parity vector:
/// `(3^{Σx} n + Σ x_i 2^{i-1} 3^{Σ_{λ>i} x_λ}) / 2^k`.
pub fn tk_via_parity(n: &Natural, k: u32) -> Result<Natural> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    if k == 0 {
        return Ok(n.clone());
    }
    let bits = parity_vector(n, k)?;
    let (d, phi) = parity_coefficients(&bits);
    let numerator = Pow::pow(&BigUint::from(3u32), d) * n.as_biguint() + phi;
    divide_exact(numerator, n, k)
}

/// `n = 2^k p + υ` together with `d_{υk}`, `φ_{υk}` and `T^k(n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TkDecomposition {
    pub k: u32,
    pub p: Natural,
    pub upsilon: Natural,
    pub d: u32,
    pub phi: Natural,
    pub value: Natural,
}

impl TkDecomposition {
    /// `3^d p + T^k(υ)` for `υ > 0`, `p` for `υ = 0`.
    pub fn value_from_remainder(&self) -> Result<Natural> {
        if self.upsilon.is_zero() {
            return Ok(self.p.clone());
        }
        let tail = iterate_t(&self.upsilon, u64::from(self.k))?;
        let head = Pow::pow(&BigUint::from(3u32), self.d) * self.p.as_biguint();
        Ok(Natural::from_biguint(head + tail.into_biguint()))
    }
}

pub fn tk_decompose(n: &Natural, k: u32) -> Result<TkDecomposition> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("tk_decompose needs k >= 1".into()));
    }
    let modulus = BigUint::one() << k;
    let p = n.as_biguint() / &modulus;
    let upsilon = n.as_biguint() % &modulus;
    let bits = parity_vector(n, k)?;
    let (d, phi) = parity_coefficients(&bits);
    let numerator = Pow::pow(&BigUint::from(3u32), d) * n.as_biguint() + &phi;
    let value = divide_exact(numerator, n, k)?;
    Ok(TkDecomposition {
        k,
        p: Natural::from_biguint(p),
        upsilon: Natural::from_biguint(upsilon),
        d,
        phi: Natural::from_biguint(phi),
        value,
    })
}

/// The `2^k × k` matrix `B_k = [x_{ni}]`, `1 <= n <= 2^k`, `1 <= i <= k`.
///
/// Rows are packed into a `u32` with bit `i-1` holding `x_{ni}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityTable {
    pub k: u32,
    rows: Vec<u32>,
}

impl ParityTable {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// `x_{ni}` for `1 <= n <= 2^k`, `1 <= i <= k`.
    pub fn bit(&self, n: u64, i: u32) -> u8 {
        assert!(n >= 1 && n as usize <= self.rows.len() && i >= 1 && i <= self.k);
        ((self.rows[n as usize - 1] >> (i - 1)) & 1) as u8
    }

    pub fn row_bits(&self, n: u64) -> Vec<u8> {
        (1..=self.k).map(|i| self.bit(n, i)).collect()
    }

    /// Packed row of `n`.
    pub fn packed_row(&self, n: u64) -> u32 {
        self.rows[n as usize - 1]
    }

    /// Row read as a binary number with column 1 as the most significant bit.
    pub fn row_value(&self, n: u64) -> u32 {
        let r = self.rows[n as usize - 1];
        if self.k == 0 {
            0
        } else {
            r.reverse_bits() >> (32 - self.k)
        }
    }

    pub fn column(&self, i: u32) -> Vec<u8> {
        (1..=self.rows.len() as u64).map(|n| self.bit(n, i)).collect()
    }

    /// `y_k`: the first `2^{k-1}` entries of column `k`.
    pub fn y(&self) -> Vec<u8> {
        let half = self.rows.len() / 2;
        (1..=half as u64).map(|n| self.bit(n, self.k)).collect()
    }

    /// Whether the rows are exactly the elements of `Z_2^k`, each once.
    pub fn rows_are_permutation(&self) -> bool {
        let mut values: Vec<u32> = (1..=self.rows.len() as u64).map(|n| self.row_value(n)).collect();
        values.par_sort_unstable();
        values.iter().enumerate().all(|(idx, &v)| v as usize == idx)
    }

    /// `S_k(n)` read off the table.
    pub fn ones(&self, n: u64) -> u32 {
        self.rows[n as usize - 1].count_ones()
    }
}

fn packed_parity_row(n: u64, k: u32) -> u32 {
    let mut v = n;
    let mut row = 0u32;
    for i in 0..k {
        row |= ((v & 1) as u32) << i;
        // n <= 2^20 and k <= 20 stay far below u64 overflow
        v = t_step_u64(v).expect("parity table values fit in u64");
    }
    row
}

pub fn build_bk(k: u32) -> Result<ParityTable> {
    if k == 0 {
        return Err(Error::InvalidArgument("B_k needs k >= 1".into()));
    }
    if k > MAX_TABLE_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_TABLE_LEVEL });
    }
    let rows = (1..=1u64 << k).into_par_iter().map(|n| packed_parity_row(n, k)).collect();
    Ok(ParityTable { k, rows })
}

/// Numerator of `Σ_n T^k(n) x^n = N_k(x) / (1 - x^{2^k})^2`.
///
/// `coeffs[c - 1]` is the coefficient of `x^c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenFnNumerator {
    pub k: u32,
    pub coeffs: Vec<i64>,
}

impl GenFnNumerator {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64) * x
    }

    pub fn all_positive(&self) -> bool {
        self.coeffs.iter().all(|&c| c > 0)
    }
}

pub fn genfn_numerator(k: u32) -> Result<GenFnNumerator> {
    if k == 0 {
        return Err(Error::InvalidArgument("generating function needs k >= 1".into()));
    }
    if k > MAX_GENFN_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_GENFN_LEVEL });
    }
    let period = 1u64 << k;
    let mut coeffs = vec![0i64; (2 * period - 1) as usize];
    for upsilon in 1..period {
        let mut v = upsilon;
        let mut d = 0u32;
        for _ in 0..k {
            d += (v & 1) as u32;
            v = t_step_u64(v).expect("bounded by 3^k 2^k");
        }
        coeffs[(upsilon - 1) as usize] = v as i64;
        coeffs[(period + upsilon - 1) as usize] = 3i64.pow(d) - v as i64;
    }
    coeffs[(period - 1) as usize] = 1;
    Ok(GenFnNumerator { k, coeffs })
}

/// `|Σ_{n<=N} T^k(n) x^n - N_k(x)/(1 - x^{2^k})^2|`.
pub fn genfn_check(k: u32, x: f64, n_terms: u64) -> Result<f64> {
    if x.abs() > 0.9 {
        return Err(Error::InvalidArgument(format!("|x| = {} exceeds 0.9", x.abs())));
    }
    let numerator = genfn_numerator(k)?;
    let mut partial = 0.0;
    let mut power = 1.0;
    for n in 1..=n_terms {
        power *= x;
        let tk = iterate_t_u64(n, u64::from(k)).ok_or(Error::Overflow("T^k(n) in genfn_check"))?;
        partial += tk as f64 * power;
    }
    let denom = 1.0 - x.powi(1 << k);
    let closed = numerator.eval(x) / (denom * denom);
    Ok((partial - closed).abs())
}

/// `floor(d k)`, tolerant of `d k` landing a rounding error below an integer.
pub fn floor_dk(k: u32, d: f64) -> i64 {
    (d * f64::from(k) + 1e-9).floor() as i64
}

/// `#{1 <= n <= 2^k : S_k(n) <= floor(d k)} / 2^k`, counted over one period.
pub fn density_fraction(k: u32, d: f64) -> Result<Ratio<u64>> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("density threshold {d} must be positive")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("density needs k >= 1".into()));
    }
    let total = 1u64 << k;
    if d >= 1.0 {
        return Ok(Ratio::one());
    }
    let table = build_bk(k)?;
    let limit = floor_dk(k, d);
    let count = (1..=total).into_par_iter().filter(|&n| i64::from(table.ones(n)) <= limit).count() as u64;
    Ok(Ratio::new(count, total))
}

/// `2^{-k} Σ_{j<=m} C(k, j)`, the binomial CDF at one half.
pub fn binomial_cdf_half(k: u32, m: i64) -> Ratio<u64> {
    let k64 = u64::from(k);
    let upper = m.min(k as i64);
    let sum: u64 = if upper < 0 { 0 } else { (0..=upper as u64).map(|j| binomial(k64, j)).sum() };
    Ratio::new(sum, 1u64 << k)
}

/// `D(a ‖ p) = a log(a/p) + (1-a) log((1-a)/(1-p))`, with `0 log 0 = 0`.
pub fn relative_entropy(a: f64, p: f64) -> f64 {
    let term = |u: f64, v: f64| if u == 0.0 { 0.0 } else { u * (u / v).ln() };
    term(a, p) + term(1.0 - a, 1.0 - p)
}

/// `exp(-k D(a ‖ 1/2))` with `a = (floor(dk)+1)/k`: a Chernoff bound on
/// `1 - density_fraction(k, d)`.
pub fn entropy_bound(k: u32, d: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("entropy bound needs k >= 1".into()));
    }
    let a = (floor_dk(k, d) + 1) as f64 / f64::from(k);
    if !(a > 0.5 && a < 1.0) {
        return Err(Error::DOutOfRange(a));
    }
    Ok((-f64::from(k) * relative_entropy(a, 0.5)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(v: u64) -> Natural {
        Natural::from(v)
    }

    #[test]
    fn parity_bits_of_small_values() {
        assert_eq!(parity_bit(&nat(1), 1).unwrap(), 1);
        assert_eq!(parity_bit(&nat(4), 1).unwrap(), 0);
        assert_eq!(parity_bit(&nat(4), 2).unwrap(), 0);
        assert_eq!(parity_bit(&nat(4), 3).unwrap(), 1);
        assert!(parity_bit(&nat(4), 0).is_err());
    }

    #[test]
    fn shifting_by_half_period_flips_the_bit() {
        for i in 1..=12u32 {
            for n in 1..=12u64 {
                let a = parity_bit(&nat(n), i).unwrap();
                let b = parity_bit(&nat(n + (1 << (i - 1))), i).unwrap();
                assert_eq!(a ^ 1, b, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn ones_counts() {
        assert_eq!(ones_count(&nat(32), 5).unwrap(), 0);
        assert_eq!(ones_count(&nat(1), 2).unwrap(), 1);
        // 7, 11, 17, 26
        assert_eq!(ones_count(&nat(7), 4).unwrap(), 3);
    }

    #[test]
    fn formula_matches_iteration() {
        assert_eq!(tk_via_parity(&nat(9), 0).unwrap(), nat(9));
        assert_eq!(tk_via_parity(&nat(7), 11).unwrap(), nat(1));
        assert_eq!(tk_via_parity(&nat(27), 20).unwrap(), iterate_t(&nat(27), 20).unwrap());
        let big: Natural = "98765432109876543210987".parse().unwrap();
        assert_eq!(tk_via_parity(&big, 40).unwrap(), iterate_t(&big, 40).unwrap());
    }

    #[test]
    fn decomposition_cases() {
        let dec = tk_decompose(&nat(3 << 4), 4).unwrap();
        assert_eq!(dec.value, nat(3));
        assert!(dec.upsilon.is_zero());

        let dec = tk_decompose(&nat(16 * 2 + 5), 4).unwrap();
        assert_eq!(dec.p, nat(2));
        assert_eq!(dec.upsilon, nat(5));
        let expected = 3u64.pow(dec.d) * 2 + iterate_t_u64(5, 4).unwrap();
        assert_eq!(dec.value, nat(expected));
        assert_eq!(dec.value_from_remainder().unwrap(), dec.value);

        let dec = tk_decompose(&nat(11), 4).unwrap();
        assert!(dec.p.is_zero());
        assert_eq!(dec.value, iterate_t(&nat(11), 4).unwrap());
    }

    #[test]
    fn small_tables() {
        let b1 = build_bk(1).unwrap();
        assert_eq!(b1.row_bits(1), vec![1]);
        assert_eq!(b1.row_bits(2), vec![0]);
        let b2 = build_bk(2).unwrap();
        assert!(b2.rows_are_permutation());
        assert_eq!(b2.y().len(), 2);
        assert_eq!(build_bk(21), Err(Error::LevelTooLarge { level: 21, max: 20 }));
    }

    #[test]
    fn numerators_from_the_worked_example() {
        assert_eq!(genfn_numerator(1).unwrap().coeffs, vec![2, 1, 1]);
        assert_eq!(genfn_numerator(2).unwrap().coeffs, vec![1, 2, 8, 1, 2, 1, 1]);
        assert!(genfn_numerator(15).is_err());
    }

    #[test]
    fn generating_function_residuals() {
        assert!(genfn_check(1, 0.5, 200).unwrap() < 1e-9);
        assert!(genfn_check(2, -0.3, 200).unwrap() < 1e-9);
        assert_eq!(genfn_check(1, 0.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn density_examples() {
        assert_eq!(density_fraction(4, 0.99).unwrap(), Ratio::new(15, 16));
        assert_eq!(density_fraction(6, 0.5).unwrap(), Ratio::new(42, 64));
        assert_eq!(density_fraction(7, 1.0).unwrap(), Ratio::one());
    }

    #[test]
    fn entropy_bound_dominates_the_tail() {
        assert_eq!(relative_entropy(0.5, 0.5), 0.0);
        let tail = 1.0 - {
            let r = density_fraction(10, 0.8).unwrap();
            *r.numer() as f64 / *r.denom() as f64
        };
        assert!(entropy_bound(10, 0.8).unwrap() >= tail);
        assert!(matches!(entropy_bound(8, 0.9), Err(Error::DOutOfRange(_))));
        assert!(matches!(entropy_bound(8, 0.3), Err(Error::DOutOfRange(_))));
    }
}
