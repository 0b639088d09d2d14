//! Correlations between sign sequences of different levels, in the
//! frequency domain.
//!
//! `W_k = (ω_{j,k}^i)` is the DFT over the roots of `-1`; the transformed
//! sign vector is `p̃_k = p_k W_k / 2^k`. The correlation maps `C_k` and the
//! ideal-shift transitions `M^o_k` act on rows by right multiplication.
//! Step functions `f` with conjugates `f*` select prefixes of the sign
//! vectors, and `φ_f` compares Collatz correlations with ideal ones on a
//! truncation `⊕_{k <= k_max} C^{2^k}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::collatz::{iterate_t_u64, stopping_index_u64, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::isometry::{block_zero, build_s, BlockVector};
use crate::linalg::{self, CMatrix, CVector};
use crate::spectrum::{RootTable, SignPolynomial};

pub const MAX_DFT_LEVEL: u32 = 12;
pub const MAX_CORRELATION_LEVEL: u32 = 10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DftMatrix {
    pub k: u32,
    pub w: CMatrix,
}

impl DftMatrix {
    /// `max(|W W^*/2^k - I|, |W^* W/2^k - I|)`.
    pub fn unitarity_residual(&self) -> f64 {
        let scale = c(1.0 / (1u64 << self.k) as f64, 0.0);
        let adj = self.w.adjoint();
        let a = self.w.mul(&adj).scale(scale).scaled_identity_residual(1.0);
        let b = adj.mul(&self.w).scale(scale).scaled_identity_residual(1.0);
        a.max(b)
    }
}

pub fn dft_matrix(k: u32) -> Result<DftMatrix> {
    if k > MAX_DFT_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_DFT_LEVEL });
    }
    let table = RootTable::new(k);
    let n = 1usize << k;
    Ok(DftMatrix { k, w: CMatrix::from_fn(n, n, |i, j| table.pow(j as u64 + 1, i as u64 + 1)) })
}

/// `x W_k / 2^k` for a real row `x` of length `2^k`.
pub fn transform(x: &[f64], k: u32) -> CVector {
    let table = RootTable::new(k);
    let scale = (1u64 << k) as f64;
    (1..=1u64 << k)
        .map(|j| {
            x.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(idx, v)| table.pow(j, idx as u64 + 1) * *v)
                .sum::<Complex64>()
                / scale
        })
        .collect()
}

/// `p_k = ((-1)^{T^k(υ)})_{υ=1..2^k}`.
pub fn collatz_signs(k: u32) -> Result<Vec<i8>> {
    Ok(SignPolynomial::new(k)?.eps)
}

/// `p^o_k(υ) = (-1)^{k+υ}`.
pub fn ideal_signs(k: u32) -> Vec<i8> {
    (1..=1u64 << k).map(|u| if (u64::from(k) + u) % 2 == 0 { 1 } else { -1 }).collect()
}

/// Whether `-(p^o_k, p^o_k) = p^o_{k+1}` holds exactly.
pub fn ideal_transition_exact(k: u32) -> bool {
    let p = ideal_signs(k);
    let next = ideal_signs(k + 1);
    p.iter().chain(&p).zip(&next).all(|(a, b)| -a == *b)
}

fn as_f64(signs: &[i8]) -> Vec<f64> {
    signs.iter().map(|&s| f64::from(s)).collect()
}

/// `p̃_k`.
pub fn transformed_collatz(k: u32) -> Result<CVector> {
    Ok(transform(&as_f64(&collatz_signs(k)?), k))
}

/// `p̃^o_k`.
pub fn transformed_ideal(k: u32) -> CVector {
    transform(&as_f64(&ideal_signs(k)), k)
}

/// `id_{<=r}(p) W_k / 2^k` with `r` clamped to `[0, 2^k]`.
fn prefix_transform(p: &[i8], k: u32, r: u64) -> CVector {
    let r = r.min(1u64 << k) as usize;
    let x: Vec<f64> = p.iter().enumerate().map(|(i, &s)| if i < r { f64::from(s) } else { 0.0 }).collect();
    transform(&x, k)
}

/// `Δ_L^r p̃_k = id_{<=r}(p_k) W_k / 2^k` for `1 < r < 2^k`.
pub fn lowpass(k: u32, r: u64, p: &[i8]) -> Result<CVector> {
    let upper = 1u64 << k;
    if r <= 1 || r >= upper {
        return Err(Error::CutoffOutOfRange { r, upper });
    }
    Ok(prefix_transform(p, k, r))
}

/// `Δ_H^r p̃_k = id_{>r}(p_k) W_k / 2^k`.
pub fn highpass(k: u32, r: u64, p: &[i8]) -> Result<CVector> {
    let upper = 1u64 << k;
    if r <= 1 || r >= upper {
        return Err(Error::CutoffOutOfRange { r, upper });
    }
    let x: Vec<f64> = p.iter().enumerate().map(|(i, &s)| if i as u64 >= r { f64::from(s) } else { 0.0 }).collect();
    Ok(transform(&x, k))
}

/// `q / (2^k (1 - q))` with `q = exp(iπ[(2l-1) - 2(2j-1)] / 2^{k+1})`.
fn ck_entry(j: u64, l: u64, k: u32) -> Complex64 {
    let modulus = 1i64 << (k + 2);
    let t = ((2 * l as i64 - 1) - 2 * (2 * j as i64 - 1)).rem_euclid(modulus);
    let q = Complex64::from_polar(1.0, std::f64::consts::PI * t as f64 / (1u64 << (k + 1)) as f64);
    q / ((1.0 - q) * (1u64 << k) as f64)
}

/// `C_k = [W_k^*, -W_k^*] W_{k+1} / 2^{k+1}`, entrywise in closed form.
pub fn build_ck(k: u32) -> Result<CMatrix> {
    if k > MAX_CORRELATION_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_CORRELATION_LEVEL });
    }
    Ok(CMatrix::from_fn(1 << k, 1 << (k + 1), |j, l| ck_entry(j as u64 + 1, l as u64 + 1, k)))
}

/// `M^o_k = [-W_k^*, -W_k^*] W_{k+1} / 2^{k+1}`; entry `-i^{2l-1}` times the `C_k` entry.
pub fn build_mko(k: u32) -> Result<CMatrix> {
    if k > MAX_CORRELATION_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_CORRELATION_LEVEL });
    }
    Ok(CMatrix::from_fn(1 << k, 1 << (k + 1), |j, l| {
        let a = Complex64::i().powu(2 * l as u32 + 1);
        -a * ck_entry(j as u64 + 1, l as u64 + 1, k)
    }))
}

/// The products `[±W_k^*, s W_k^*] W_{k+1} / 2^{k+1}` formed densely.
pub fn dense_block_product(k: u32, left: f64, right: f64) -> Result<CMatrix> {
    let wk = dft_matrix(k)?.w.adjoint();
    let wk1 = dft_matrix(k + 1)?.w;
    let n = 1usize << k;
    let stacked = CMatrix::from_fn(n, 2 * n, |i, j| if j < n { wk.get(i, j) * left } else { wk.get(i, j - n) * right });
    Ok(stacked.mul(&wk1).scale(c(1.0 / (2 * n) as f64, 0.0)))
}

pub fn row_isometry_residual(m: &CMatrix) -> f64 {
    m.mul(&m.adjoint()).scaled_identity_residual(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum XiSource {
    Collatz,
    Ideal,
}

/// `(1, λ p̃_1, λ² p̃_2, ...)` truncated at `k_max`, optionally low-passed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiVector {
    pub source: XiSource,
    pub lambda: Complex64,
    pub k_max: u32,
    pub blocks: BlockVector,
}

impl XiVector {
    pub fn norm_sqr(&self) -> f64 {
        inner_blocks(&self.blocks, &self.blocks).re
    }
}

pub fn inner_blocks(x: &BlockVector, y: &BlockVector) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| linalg::inner(a, b)).sum()
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if lambda.norm() > 0.9 {
        return Err(Error::InvalidArgument(format!("|λ| = {} exceeds 0.9", lambda.norm())));
    }
    Ok(())
}

/// `cutoffs[k - 1]` is the prefix length at level `k`; values at or above
/// `2^k` keep the whole level.
pub fn xi_vector(source: XiSource, lambda: Complex64, k_max: u32, cutoffs: Option<&[u64]>) -> Result<XiVector> {
    check_lambda(lambda)?;
    if k_max > MAX_CORRELATION_LEVEL {
        return Err(Error::LevelTooLarge { level: k_max, max: MAX_CORRELATION_LEVEL });
    }
    if let Some(r) = cutoffs {
        if r.len() < k_max as usize {
            return Err(Error::InvalidArgument(format!("{} cutoffs for {k_max} levels", r.len())));
        }
    }
    let mut blocks = vec![vec![c(1.0, 0.0)]];
    let mut power = c(1.0, 0.0);
    for k in 1..=k_max {
        power *= lambda;
        let signs = match source {
            XiSource::Collatz => collatz_signs(k)?,
            XiSource::Ideal => ideal_signs(k),
        };
        let r = cutoffs.map_or(u64::MAX, |r| r[k as usize - 1]);
        blocks.push(prefix_transform(&signs, k, r).into_iter().map(|z| z * power).collect());
    }
    Ok(XiVector { source, lambda, k_max, blocks })
}

/// `e_1 (I + λM + λ²M² + ...)` truncated at `k_max`, by iterating the block shift.
pub fn xi_neumann(lambda: Complex64, k_max: u32) -> Result<BlockVector> {
    check_lambda(lambda)?;
    let s = build_s(k_max)?;
    let mut term = block_zero(k_max);
    term[0][0] = c(1.0, 0.0);
    let mut acc = term.clone();
    for _ in 0..k_max {
        term = s.apply(&term).into_iter().map(|b| b.into_iter().map(|z| z * lambda).collect()).collect();
        for (a, t) in acc.iter_mut().zip(&term) {
            for (x, y) in a.iter_mut().zip(t) {
                *x += y;
            }
        }
    }
    Ok(acc)
}

/// Increasing step function: `f(n) = y_i` for `x_i <= n < x_{i+1}`, with
/// the last piece valid up to `range_end`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncFn {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    pub range_end: u64,
}

impl IncFn {
    pub fn new(x: Vec<u64>, y: Vec<u64>, range_end: u64) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("step function: {msg}")));
        if x.is_empty() || x.len() != y.len() {
            return bad("jumps and values must be non-empty and of equal length");
        }
        if !x.windows(2).all(|w| w[0] < w[1]) || !y.windows(2).all(|w| w[0] < w[1]) {
            return bad("jumps and values must be strictly increasing");
        }
        if range_end < *x.last().expect("non-empty") {
            return bad("range ends before the last jump");
        }
        Ok(IncFn { x, y, range_end })
    }

    /// Tabulates `g` on `start..=range_end`, merging equal consecutive values.
    pub fn from_values(start: u64, range_end: u64, g: impl Fn(u64) -> u64) -> Result<Self> {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for n in start..=range_end {
            let v = g(n);
            match y.last() {
                Some(&last) if v == last => {}
                Some(&last) if v < last => {
                    return Err(Error::InvalidArgument(format!("values decrease at n = {n}")));
                }
                _ => {
                    x.push(n);
                    y.push(v);
                }
            }
        }
        IncFn::new(x, y, range_end)
    }

    pub fn domain_start(&self) -> u64 {
        self.x[0]
    }

    pub fn eval(&self, n: u64) -> Result<u64> {
        if n < self.x[0] || n > self.range_end {
            return Err(Error::InsufficientRange(format!(
                "{n} outside [{}, {}]",
                self.x[0], self.range_end
            )));
        }
        let idx = self.x.partition_point(|&a| a <= n) - 1;
        Ok(self.y[idx])
    }

    /// `f ≥ log₂ n` on the represented range.
    pub fn dominates_log2(&self) -> bool {
        (self.x[0].max(1)..=self.range_end).all(|n| self.eval(n).is_ok_and(|v| v as f64 >= (n as f64).log2()))
    }
}

/// `x(f*) = y(f)`, `y(f*)_i = x(f)_{i+1} - 1`. The last piece of `f` has no
/// next jump, so `f*` is represented up to `y_L - 1`.
pub fn conjugate_inc(f: &IncFn) -> Result<IncFn> {
    if f.x.len() < 2 {
        return Err(Error::InsufficientRange("conjugation needs at least two jumps".into()));
    }
    let l = f.x.len();
    let x = f.y[..l - 1].to_vec();
    let y = f.x[1..].iter().map(|a| a - 1).collect();
    IncFn::new(x, y, f.y[l - 1] - 1)
}

/// `f_0(n) = max{s(i) : i <= n}` on `1..=n_max`.
pub fn f0(n_max: u64) -> Result<IncFn> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("f0 needs n_max >= 2".into()));
    }
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut best: Option<u64> = None;
    for i in 1..=n_max {
        let s = stopping_index_u64(i, DEFAULT_CAP as u64).ok_or(Error::Unresolved(i))?;
        if best.map_or(true, |b| s > b) {
            best = Some(s);
            x.push(i);
            y.push(s);
        }
    }
    IncFn::new(x, y, n_max)
}

/// `f(n) = ⌈log₂ n⌉`: increasing and `>= log₂ n`, but too small for the
/// trajectories to settle.
pub fn ceil_log2_fn(n_max: u64) -> Result<IncFn> {
    IncFn::from_values(1, n_max, |n| u64::from(64 - (n - 1).leading_zeros()))
}

fn sign_sum(n1: u32, n2: u32, prefix: u64) -> Result<i64> {
    let mut total = 0i64;
    for k in 1..=prefix {
        let a = iterate_t_u64(k, u64::from(n1)).ok_or(Error::Overflow("T^n(k)"))?;
        let b = iterate_t_u64(k, u64::from(n2)).ok_or(Error::Overflow("T^n(k)"))?;
        total += if (a + b) % 2 == 0 { 1 } else { -1 };
    }
    Ok(total)
}

/// `(Σ_{k <= f*(n1)} (-1)^{T^{n1}(k) + T^{n2}(k)}, (-1)^{n2-n1} f*(n1))`.
///
/// The prefix must fit in one period: `f*(n1) <= 2^{n1}`.
pub fn correlation_theorem_check(f: &IncFn, n1: u32, n2: u32) -> Result<(i64, i64)> {
    if n1 > n2 {
        return Err(Error::InvalidArgument(format!("levels out of order: {n1} > {n2}")));
    }
    let fstar = conjugate_inc(f)?;
    let prefix = fstar.eval(u64::from(n1))?;
    if n1 < 63 && prefix > 1u64 << n1 {
        return Err(Error::PrefixTooLarge { prefix, level: n1 });
    }
    let lhs = sign_sum(n1, n2, prefix)?;
    let magnitude = prefix as i64;
    let rhs = if (n2 - n1) % 2 == 0 { magnitude } else { -magnitude };
    Ok((lhs, rhs))
}

/// `⟨Δ_L^{f*(n1)} p̃_{n1} C_{n1} ⋯ C_{n2-1}, Δ_L^{f*(n2)} p̃_{n2}⟩`.
pub fn chained_correlation(f: &IncFn, n1: u32, n2: u32) -> Result<Complex64> {
    if n1 > n2 || n2 > MAX_CORRELATION_LEVEL {
        return Err(Error::InvalidArgument(format!("levels {n1}, {n2} out of range")));
    }
    let fstar = conjugate_inc(f)?;
    let mut v = prefix_transform(&collatz_signs(n1)?, n1, fstar.eval(u64::from(n1))?);
    for k in n1..n2 {
        v = build_ck(k)?.left_apply(&v);
    }
    let target = prefix_transform(&collatz_signs(n2)?, n2, fstar.eval(u64::from(n2))?);
    Ok(linalg::inner(&v, &target))
}

/// One term `a (C^*)^i C^j` of a word.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordTerm {
    pub i: u32,
    pub j: u32,
    pub a: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiResult {
    pub value: Complex64,
    pub collatz_term: Complex64,
    pub ideal_term: Complex64,
    /// `Σ |a| |λ|^{2(k_max+1-j)} / (1 - |λ|^2)` over the word.
    pub truncation_bound: f64,
}

/// The correlation shift `C` on `⊕_{k <= k_max} C^{2^k}`.
struct CorrelationShift {
    blocks: Vec<CMatrix>,
}

impl CorrelationShift {
    fn new(k_max: u32) -> Result<Self> {
        Ok(CorrelationShift { blocks: (0..k_max).map(build_ck).collect::<Result<_>>()? })
    }

    fn k_max(&self) -> u32 {
        self.blocks.len() as u32
    }

    fn apply(&self, x: &BlockVector) -> BlockVector {
        let mut out = block_zero(self.k_max());
        for (k, m) in self.blocks.iter().enumerate() {
            out[k + 1] = m.left_apply(&x[k]);
        }
        out
    }

    fn apply_adjoint(&self, y: &BlockVector) -> BlockVector {
        let mut out = block_zero(self.k_max());
        for (k, m) in self.blocks.iter().enumerate() {
            out[k] = (0..m.rows).map(|r| linalg::inner(&y[k + 1], m.row(r))).collect();
        }
        out
    }

    /// `Σ a ξ (C^*)^i C^j`.
    fn word(&self, xi: &BlockVector, word: &[WordTerm]) -> BlockVector {
        let mut total = block_zero(self.k_max());
        for term in word {
            let mut v = xi.clone();
            for _ in 0..term.i {
                v = self.apply_adjoint(&v);
            }
            for _ in 0..term.j {
                v = self.apply(&v);
            }
            for (t, b) in total.iter_mut().zip(&v) {
                for (x, y) in t.iter_mut().zip(b) {
                    *x += term.a * y;
                }
            }
        }
        total
    }
}

/// `φ_f(a) = ⟨ξ_f^T, ξ_f^T a(C,C^*)⟩/‖ξ_f^T‖² - ⟨ξ_f^o, ξ_f^o a(C,C^*)⟩/‖ξ_f^o‖²`
/// on the truncation `k <= k_max`, with level-`k` cutoffs `f*(k)`.
pub fn phi_functional(f: &IncFn, word: &[WordTerm], lambda: Complex64, k_max: u32) -> Result<PhiResult> {
    check_lambda(lambda)?;
    for t in word {
        if t.i > k_max || t.j > k_max {
            return Err(Error::WordOutOfRange { i: t.i, j: t.j, k_max });
        }
    }
    let fstar = conjugate_inc(f)?;
    let cutoffs: Vec<u64> = (1..=k_max).map(|k| fstar.eval(u64::from(k))).collect::<Result<_>>()?;
    let shift = CorrelationShift::new(k_max)?;
    let term = |source| -> Result<Complex64> {
        let xi = xi_vector(source, lambda, k_max, Some(&cutoffs))?;
        let image = shift.word(&xi.blocks, word);
        Ok(inner_blocks(&xi.blocks, &image) / xi.norm_sqr())
    };
    let collatz_term = term(XiSource::Collatz)?;
    let ideal_term = term(XiSource::Ideal)?;
    let l2 = lambda.norm_sqr();
    let truncation_bound =
        word.iter().map(|t| t.a.norm() * l2.powi((k_max + 1 - t.j) as i32) / (1.0 - l2)).sum();
    Ok(PhiResult { value: collatz_term - ideal_term, collatz_term, ideal_term, truncation_bound })
}
