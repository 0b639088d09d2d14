//! Sign sequences `(-1)^{T^k(n)}` and their expansion over the `2^k`-th
//! roots of `-1`, `ω_{j,k} = exp((2j-1)πi / 2^k)`.
//!
//! Powers of roots are formed by reducing the exponent modulo `2^{k+1}` and
//! evaluating one exponential, never by repeated multiplication.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collatz::{iterate_t_u64, trajectory, Natural, TrajectoryStatus};
use crate::error::{Error, Result};

/// Largest level for Fourier coefficient tables.
pub const MAX_SPECTRUM_LEVEL: u32 = 14;
/// Smallest admissible `|1 + x^{2^k}|` in [`gk_eval`].
pub const POLE_DISTANCE: f64 = 1e-6;

/// `exp(iπ t / 2^k)`.
fn half_turn(t: u64, k: u32) -> Complex64 {
    let angle = PI * t as f64 / (1u64 << k) as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// `ω_{j,k}` with `j` taken modulo `2^k` (`0 ↦ 2^k`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootIndex {
    pub j: u64,
    pub k: u32,
}

impl RootIndex {
    pub fn new(j: i64, k: u32) -> Self {
        let period = 1i64 << k;
        let r = j.rem_euclid(period);
        RootIndex { j: if r == 0 { period as u64 } else { r as u64 }, k }
    }

    /// `(2j - 1) mod 2^{k+1}`.
    fn odd_exponent(self) -> u64 {
        (2 * self.j - 1) % (1u64 << (self.k + 1))
    }

    pub fn value(self) -> Complex64 {
        half_turn(self.odd_exponent(), self.k)
    }

    /// `ω_{j,k}^n`.
    pub fn pow(self, n: u64) -> Complex64 {
        let modulus = 1u128 << (self.k + 1);
        let t = (u128::from(self.odd_exponent()) * (u128::from(n) % modulus)) % modulus;
        half_turn(t as u64, self.k)
    }

    /// `ω_{j,k}^n` for arbitrary-size `n`.
    pub fn pow_natural(self, n: &Natural) -> Complex64 {
        self.pow(n.rem_u64(1u64 << (self.k + 1)))
    }
}

/// `exp(iπ t / 2^k)` for every `t < 2^{k+1}`.
#[derive(Clone, Debug)]
pub struct RootTable {
    pub k: u32,
    values: Vec<Complex64>,
}

impl RootTable {
    pub fn new(k: u32) -> Self {
        RootTable { k, values: (0..1u64 << (k + 1)).map(|t| half_turn(t, k)).collect() }
    }

    /// `ω_{j,k}^n` by table lookup.
    pub fn pow(&self, j: u64, n: u64) -> Complex64 {
        let mask = (1u64 << (self.k + 1)) - 1;
        let t = ((2 * j - 1) & mask).wrapping_mul(n & mask) & mask;
        self.values[t as usize]
    }
}

fn sign_of(v: u64) -> i8 {
    if v % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `((-1)^{T^k(n)})_{k = 0..=k_max}`.
pub fn sign_sequence(n: &Natural, k_max: u32) -> Result<Vec<i8>> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut v = n.clone();
    let mut out = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        out.push(if v.is_even() { 1 } else { -1 });
        if k < k_max {
            v = crate::collatz::collatz_t(&v)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Periodicity {
    EventuallyPeriod2 { offset: usize },
    EventuallyPeriodic { period: usize, offset: usize },
    Unresolved,
}

/// Smallest `p` dividing `signs.len()` with `signs` invariant under rotation by `p`.
fn minimal_period(signs: &[i8]) -> usize {
    let l = signs.len();
    (1..=l).find(|&p| l % p == 0 && (0..l).all(|i| signs[i] == signs[(i + p) % l])).unwrap_or(l)
}

pub fn classify_periodicity(n: &Natural, cap: usize) -> Result<Periodicity> {
    let traj = trajectory(n, cap)?;
    Ok(match traj.status {
        TrajectoryStatus::ReachedTrivialCycle { at_step } => Periodicity::EventuallyPeriod2 { offset: at_step },
        TrajectoryStatus::NontrivialCycle { members } => {
            let signs: Vec<i8> = members.iter().map(|m| if m.is_even() { 1 } else { -1 }).collect();
            let offset = traj.steps.len() - 1 - members.len();
            Periodicity::EventuallyPeriodic { period: minimal_period(&signs), offset }
        }
        TrajectoryStatus::Exhausted { .. } => Periodicity::Unresolved,
    })
}

/// One period of signs, `eps[υ - 1] = (-1)^{T^k(υ)}` for `1 <= υ <= 2^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPolynomial {
    pub k: u32,
    pub eps: Vec<i8>,
}

impl SignPolynomial {
    pub fn new(k: u32) -> Result<Self> {
        if k > MAX_SPECTRUM_LEVEL + 1 {
            return Err(Error::LevelTooLarge { level: k, max: MAX_SPECTRUM_LEVEL + 1 });
        }
        let eps = (1..=1u64 << k)
            .map(|u| iterate_t_u64(u, u64::from(k)).map(sign_of).ok_or(Error::Overflow("T^k(υ)")))
            .collect::<Result<_>>()?;
        Ok(SignPolynomial { k, eps })
    }

    /// `P_k(x) = Σ_υ eps_υ x^υ`.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.eps.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &e| (acc + f64::from(e)) * x)
    }

    /// `P_k(ω_{j,k})` via a root table.
    pub fn eval_root(&self, table: &RootTable, j: u64) -> Complex64 {
        self.eps
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (idx, &e)| acc + table.pow(j, idx as u64 + 1) * f64::from(e))
    }

    /// The sign at any `n >= 1`, from anti-periodicity with period `2^k`.
    pub fn sign_at(&self, n: u64) -> i8 {
        let period = 1u64 << self.k;
        let q = (n - 1) / period;
        let e = self.eps[((n - 1) % period) as usize];
        if q % 2 == 0 {
            e
        } else {
            -e
        }
    }
}

/// Partial sum `Σ_{n<=N} (-1)^{T^k(n)} x^n` and closed form `P_k(x) / (1 + x^{2^k})`.
pub fn gk_eval(k: u32, x: Complex64, n_terms: u64) -> Result<(Complex64, Complex64)> {
    if x.norm() > 0.9 {
        return Err(Error::InvalidArgument(format!("|x| = {} exceeds 0.9", x.norm())));
    }
    let denom = Complex64::new(1.0, 0.0) + x.powu(1 << k);
    if denom.norm() < POLE_DISTANCE {
        return Err(Error::PoleProximity { k, distance: denom.norm() });
    }
    let poly = SignPolynomial::new(k)?;
    let mut partial = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for n in 1..=n_terms {
        power *= x;
        let tk = iterate_t_u64(n, u64::from(k)).ok_or(Error::Overflow("T^k(n)"))?;
        partial += power * f64::from(sign_of(tk));
    }
    Ok((partial, poly.eval(x) / denom))
}

/// `b_j = P_k(ω_{j,k}) / 2^k` for `j = 1..=2^k` (stored at index `j - 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub k: u32,
    pub b: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn sum(&self) -> Complex64 {
        self.b.iter().sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conjugated(&self) -> Vec<Complex64> {
        self.b.iter().map(|z| z.conj()).collect()
    }

    /// `Σ_j conj(b_j) ω_{j,k}^n`.
    pub fn reconstruct(&self, n: u64) -> Complex64 {
        self.b
            .iter()
            .enumerate()
            .map(|(idx, b)| b.conj() * RootIndex { j: idx as u64 + 1, k: self.k }.pow(n))
            .sum()
    }

    /// [`Self::reconstruct`] for `n = 1..=n_max`, sharing one root table.
    pub fn reconstruct_all(&self, n_max: u64) -> Vec<Complex64> {
        let table = RootTable::new(self.k);
        (1..=n_max)
            .into_par_iter()
            .map(|n| {
                self.b.iter().enumerate().map(|(idx, b)| b.conj() * table.pow(idx as u64 + 1, n)).sum()
            })
            .collect()
    }
}

pub fn fourier_coeffs(k: u32) -> Result<FourierCoeffs> {
    if k == 0 || k > MAX_SPECTRUM_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_SPECTRUM_LEVEL });
    }
    let poly = SignPolynomial::new(k)?;
    let table = RootTable::new(k);
    let scale = (1u64 << k) as f64;
    let b = (1..=1u64 << k).into_par_iter().map(|j| poly.eval_root(&table, j) / scale).collect();
    Ok(FourierCoeffs { k, b })
}

/// `Σ_j conj(b_j) ω_{j,k}^n`, which should equal `(-1)^{T^k(n)}`.
pub fn reconstruct_sign(n: &Natural, k: u32) -> Result<Complex64> {
    let coeffs = fourier_coeffs(k)?;
    Ok(coeffs.reconstruct(n.rem_u64(1u64 << (k + 1))))
}

/// `|ω_{j,k}^{T(n)} - RHS|` with
/// `RHS = ½z_j^n + (z_j/2) z_{3j-1}^n + ½z_{2^k+j}^n - (z_j/2) z_{2^k+3j-1}^n`, `z_i = ω_{i,k+1}`.
pub fn lift_identity_check(j: u64, k: u32, n: u64) -> Result<f64> {
    if j == 0 || j > 1u64 << k {
        return Err(Error::InvalidArgument(format!("root index {j} outside 1..=2^{k}")));
    }
    if n == 0 {
        return Err(Error::ZeroInput);
    }
    let tn = crate::collatz::collatz_t(&Natural::from(n))?;
    let lhs = RootIndex { j, k }.pow_natural(&tn);
    let z = |i: i64| RootIndex::new(i, k + 1);
    let (j, half) = (j as i64, 1i64 << k);
    let zj = z(j).value();
    let rhs = z(j).pow(n) * 0.5 + zj * 0.5 * z(3 * j - 1).pow(n) + z(half + j).pow(n) * 0.5
        - zj * 0.5 * z(half + 3 * j - 1).pow(n);
    Ok((lhs - rhs).norm())
}

/// Largest residual of `-z_j = z_{2^k+j}` and `z_1^{2j-1} = z_j` at level `k + 1`.
pub fn root_relations(k: u32) -> f64 {
    let level = k + 1;
    let z1 = RootIndex { j: 1, k: level };
    (1..=1u64 << k)
        .map(|j| {
            let zj = RootIndex { j, k: level }.value();
            let opposite = RootIndex { j: (1u64 << k) + j, k: level }.value();
            let direct = z1.value().powu(2 * j as u32 - 1);
            (zj + opposite).norm().max((direct - zj).norm())
        })
        .fold(0.0, f64::max)
}
