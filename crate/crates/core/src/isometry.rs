//! The matrices `M_k` of the lifts `A_k : V_k → V_{k+1}` between spaces of
//! root functions, the truncated block shift `S`, and its Wold decomposition.
//!
//! `M_k` is `2^k × 2^{k+1}`. Row `j` holds `½` at columns `j` and `2^k + j`,
//! `+ω_{j,k+1}/2` at column `3j - 1` and `-ω_{j,k+1}/2` at column
//! `2^k + 3j - 1`, columns reduced into `1..=2^{k+1}`. The level-0 matrix is
//! `M_0 = ½[1 - i, 1 + i]`.
//!
//! Coefficients are row vectors: a level-`k` coefficient row `c` lifts to
//! `c · M_k`. Matrices are stored by rows since every row has at most four
//! entries; [`LevelMatrix::to_dense`] is there for small levels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, SparseRows};
use crate::spectrum::RootIndex;

pub const MAX_MATRIX_LEVEL: u32 = 11;
pub const RANK_TOL: f64 = 1e-10;

/// `v mod 2^level` mapped into `1..=2^level`.
pub fn reduce(v: u64, level: u32) -> u64 {
    let m = 1u64 << level;
    match v % m {
        0 => m,
        r => r,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMatrix {
    pub k: u32,
    pub matrix: SparseRows,
}

/// The 1-based columns of row `j`: `j`, `2^k + j`, `3j - 1`, `2^k + 3j - 1`.
pub fn row_columns(j: u64, k: u32) -> [u64; 4] {
    let half = 1u64 << k;
    [reduce(j, k + 1), reduce(half + j, k + 1), reduce(3 * j - 1, k + 1), reduce(half + 3 * j - 1, k + 1)]
}

pub fn build_mk(k: u32) -> Result<LevelMatrix> {
    if k > MAX_MATRIX_LEVEL {
        return Err(Error::LevelTooLarge { level: k, max: MAX_MATRIX_LEVEL });
    }
    let half = Complex64::new(0.5, 0.0);
    let rows = (1..=1u64 << k)
        .map(|j| {
            let w = RootIndex { j, k: k + 1 }.value() * 0.5;
            let cols = row_columns(j, k);
            let mut row: Vec<(usize, Complex64)> = Vec::with_capacity(4);
            for (col, v) in cols.iter().zip([half, half, w, -w]) {
                let idx = *col as usize - 1;
                match row.iter_mut().find(|(c, _)| *c == idx) {
                    Some(slot) => slot.1 += v,
                    None => row.push((idx, v)),
                }
            }
            row.sort_by_key(|(c, _)| *c);
            row
        })
        .collect();
    Ok(LevelMatrix { k, matrix: SparseRows { cols: 1 << (k + 1), rows } })
}

impl LevelMatrix {
    pub fn to_dense(&self) -> CMatrix {
        self.matrix.to_dense()
    }

    /// `max |(M M^*)_{jλ} - δ_{jλ}|`.
    pub fn row_isometry_residual(&self) -> f64 {
        self.matrix.row_gram_residual()
    }

    pub fn apply(&self, c: &[Complex64]) -> CVector {
        self.matrix.left_apply(c)
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> CVector {
        self.matrix.left_apply_adjoint(y)
    }

    /// Left and right `2^k × 2^k` halves.
    pub fn halves(&self) -> (CMatrix, CMatrix) {
        let d = self.to_dense();
        let n = 1usize << self.k;
        (CMatrix::from_fn(n, n, |i, j| d.get(i, j)), CMatrix::from_fn(n, n, |i, j| d.get(i, n + j)))
    }
}

pub fn row_isometry_check(k: u32) -> Result<f64> {
    Ok(build_mk(k)?.row_isometry_residual())
}

/// `max over basis rows c of |‖cM‖ - 1|` and `max |(cM)M^* - c|`: the lift
/// is an isometric embedding with `A^* A = id`.
pub fn embedding_residual(k: u32) -> Result<f64> {
    let m = build_mk(k)?;
    let n = 1usize << k;
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut c = vec![linalg::zero(); n];
        c[j] = Complex64::new(1.0, 0.0);
        let image = m.apply(&c);
        worst = worst.max((linalg::norm(&image) - 1.0).abs());
        worst = worst.max(linalg::max_abs_diff(&m.apply_adjoint(&image), &c));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub k: u32,
    pub half_diagonals: bool,
    pub right_is_minus_left: bool,
    pub one_entry_per_line: bool,
    pub positions: bool,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.half_diagonals && self.right_is_minus_left && self.one_entry_per_line && self.positions
    }
}

/// With `L_k = M^L - ½I` and `R_k = M^R - ½I`: both diagonals of the halves
/// are `½`, `R_k = -L_k`, and `L_k` is a weighted permutation matrix with
/// row `j` supported at column `(3j - 1) mod 2^k`.
pub fn structure_check(k: u32) -> Result<StructureReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("structure check needs k >= 1".into()));
    }
    let (left, right) = build_mk(k)?.halves();
    let n = 1usize << k;
    let tol = 1e-14;
    let half_diagonals = (0..n).all(|i| (left.get(i, i) - 0.5).norm() < tol && (right.get(i, i) - 0.5).norm() < tol);
    let l = CMatrix::from_fn(n, n, |i, j| left.get(i, j) - if i == j { 0.5 } else { 0.0 });
    let r = CMatrix::from_fn(n, n, |i, j| right.get(i, j) - if i == j { 0.5 } else { 0.0 });
    let right_is_minus_left = (0..n).all(|i| (0..n).all(|j| (l.get(i, j) + r.get(i, j)).norm() < tol));
    let nonzero = |i: usize, j: usize| l.get(i, j).norm() > tol;
    let one_entry_per_line = (0..n).all(|i| (0..n).filter(|&j| nonzero(i, j)).count() == 1)
        && (0..n).all(|j| (0..n).filter(|&i| nonzero(i, j)).count() == 1);
    let positions = (0..n).all(|i| {
        let target = reduce(3 * (i as u64 + 1) - 1, k) as usize - 1;
        nonzero(i, target)
    });
    Ok(StructureReport { k, half_diagonals, right_is_minus_left, one_entry_per_line, positions })
}

/// `j ↦ (3j - 1) mod 2^k` on `1..=2^k`.
pub fn permutation(k: u32) -> Vec<u64> {
    (1..=1u64 << k).map(|j| reduce(3 * j - 1, k)).collect()
}

/// Cycles of [`permutation`], each started at its minimum, sorted by minimum.
pub fn permutation_cycles(k: u32) -> Result<Vec<Vec<u64>>> {
    if k < 1 {
        return Err(Error::InvalidArgument("permutation cycles need k >= 1".into()));
    }
    let perm = permutation(k);
    let n = perm.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 1..=n as u64 {
        if seen[start as usize - 1] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut j = start;
        while !seen[j as usize - 1] {
            seen[j as usize - 1] = true;
            cycle.push(j);
            j = perm[j as usize - 1];
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// `a_j = (3^{j-1} + 1)/2 mod 2^k` for `j = 1..=2^{k-1}`.
pub fn a_sequence(k: u32) -> Vec<u64> {
    let modulus = 1u64 << (k + 1);
    let mut power = 1u64;
    let mut out = Vec::with_capacity(1 << (k - 1));
    for _ in 0..1u64 << (k - 1) {
        out.push(reduce(power.div_ceil(2), k));
        power = power * 3 % modulus;
    }
    out
}

/// Least `j >= 1` with `3^j ≡ 1 (mod 2^{k+1})`.
pub fn order_of_three(k: u32) -> u64 {
    let modulus = 1u64 << (k + 1);
    let mut power = 3 % modulus;
    let mut j = 1;
    while power != 1 {
        power = power * 3 % modulus;
        j += 1;
    }
    j
}

/// `3^j - 5 ≢ 0 (mod 8)` for all `1 <= j <= j_max`.
pub fn three_power_avoids_five(j_max: u64) -> bool {
    let mut power = 1u64;
    (1..=j_max).all(|_| {
        power = power * 3 % 8;
        power != 5
    })
}

/// Whether `L_k^{2^{k-1}}` is diagonal, read off the permutation pattern.
pub fn lk_power_diagonal(k: u32) -> Result<bool> {
    if k < 2 {
        return Err(Error::InvalidArgument("diagonal power check needs k >= 2".into()));
    }
    let perm = permutation(k);
    let steps = 1u64 << (k - 1);
    Ok((1..=perm.len() as u64).all(|start| {
        let mut j = start;
        for _ in 0..steps {
            j = perm[j as usize - 1];
        }
        j == start
    }))
}

/// Order of the permutation: the lcm of its cycle lengths.
pub fn permutation_order(k: u32) -> Result<u64> {
    let lcm = |a: u64, b: u64| num_integer::Integer::lcm(&a, &b);
    Ok(permutation_cycles(k)?.iter().map(|c| c.len() as u64).fold(1, lcm))
}

/// `(1) · M_0 · M_1 ⋯ M_{k-1}`: the level-`k` coefficients of `(-1)^{T^k(n)}`.
pub fn compose_chain(k: u32) -> Result<CVector> {
    let mut v = vec![Complex64::new(1.0, 0.0)];
    for level in 0..k {
        v = build_mk(level)?.apply(&v);
    }
    Ok(v)
}

/// Evaluates `Σ_j c_j ω_{j,k}^n`.
pub fn evaluate_combination(c: &[Complex64], k: u32, n: u64) -> Complex64 {
    c.iter().enumerate().map(|(idx, a)| a * RootIndex { j: idx as u64 + 1, k }.pow(n)).sum()
}

/// Vectors of `⊕_{k <= k_max} C^{2^k}`, one entry per level.
pub type BlockVector = Vec<CVector>;

pub fn block_zero(k_max: u32) -> BlockVector {
    (0..=k_max).map(|k| vec![linalg::zero(); 1 << k]).collect()
}

pub fn block_norm(x: &BlockVector) -> f64 {
    x.iter().map(|b| linalg::norm(b).powi(2)).sum::<f64>().sqrt()
}

/// The shift `S` on levels `0..=k_max`, level `k` to `k + 1` through `M_k`.
/// Content at level `k_max` is annihilated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockOperator {
    pub k_max: u32,
    pub blocks: Vec<LevelMatrix>,
}

pub fn build_s(k_max: u32) -> Result<BlockOperator> {
    if k_max == 0 || k_max > MAX_MATRIX_LEVEL {
        return Err(Error::LevelTooLarge { level: k_max, max: MAX_MATRIX_LEVEL });
    }
    Ok(BlockOperator { k_max, blocks: (0..k_max).map(build_mk).collect::<Result<_>>()? })
}

impl BlockOperator {
    pub fn apply(&self, x: &BlockVector) -> BlockVector {
        let mut out = block_zero(self.k_max);
        for (k, m) in self.blocks.iter().enumerate() {
            out[k + 1] = m.apply(&x[k]);
        }
        out
    }

    pub fn apply_adjoint(&self, y: &BlockVector) -> BlockVector {
        let mut out = block_zero(self.k_max);
        for (k, m) in self.blocks.iter().enumerate() {
            out[k] = m.apply_adjoint(&y[k + 1]);
        }
        out
    }

    pub fn total_dim(&self) -> usize {
        (1usize << (self.k_max + 1)) - 1
    }

    fn basis_vector(&self, level: usize, idx: usize) -> BlockVector {
        let mut x = block_zero(self.k_max);
        x[level][idx] = Complex64::new(1.0, 0.0);
        x
    }

    /// `max |S^*S e - e|` over basis vectors `e` of the levels below the cap.
    pub fn left_unitary_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for level in 0..self.k_max as usize {
            for idx in 0..1usize << level {
                let e = self.basis_vector(level, idx);
                let back = self.apply_adjoint(&self.apply(&e));
                for (a, b) in back.iter().zip(&e) {
                    worst = worst.max(linalg::max_abs_diff(a, b));
                }
            }
        }
        worst
    }

    /// `‖S S^* e_0 - e_0‖` for the level-0 basis vector.
    pub fn projector_defect(&self) -> f64 {
        let e = self.basis_vector(0, 0);
        let image = self.apply(&self.apply_adjoint(&e));
        let diff: BlockVector = image.iter().zip(&e).map(|(a, b)| a.iter().zip(b).map(|(u, v)| u - v).collect()).collect();
        block_norm(&diff)
    }
}

/// Orthonormal bases of `A_{k-1}(V_{k-1})` and its complement in `C^{2^k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoldBasis {
    pub k: u32,
    pub image_basis: Vec<CVector>,
    pub complement_basis: Vec<CVector>,
}

impl WoldBasis {
    /// `max |⟨v, row⟩|` over complement vectors and rows of `M_{k-1}`.
    pub fn orthogonality_residual(&self) -> Result<f64> {
        let m = build_mk(self.k - 1)?.to_dense();
        let mut worst = 0.0f64;
        for v in &self.complement_basis {
            for r in 0..m.rows {
                worst = worst.max(linalg::inner(v, m.row(r)).norm());
            }
        }
        Ok(worst)
    }

    pub fn orthonormality_residual(&self) -> f64 {
        linalg::orthonormality_residual(&self.complement_basis)
    }

    /// Orthonormality of image and complement together.
    pub fn completeness_residual(&self) -> f64 {
        let all: Vec<CVector> = self.image_basis.iter().chain(&self.complement_basis).cloned().collect();
        let size_gap = (all.len() as f64 - (1u64 << self.k) as f64).abs();
        linalg::orthonormality_residual(&all).max(size_gap)
    }
}

pub fn wold_complement(k: u32) -> Result<WoldBasis> {
    if k == 0 || k > 10 {
        return Err(Error::LevelTooLarge { level: k, max: 10 });
    }
    let dim = 1usize << k;
    let expected = dim / 2;
    let m = build_mk(k - 1)?.to_dense();
    let mut basis = Vec::with_capacity(dim);
    let found = linalg::extend_orthonormal(&mut basis, (0..m.rows).map(|r| m.row(r).to_vec()), RANK_TOL, usize::MAX);
    if found != expected {
        return Err(Error::RankDeficiency { expected, found });
    }
    let standard = (0..dim).map(|i| {
        let mut e = vec![linalg::zero(); dim];
        e[i] = Complex64::new(1.0, 0.0);
        e
    });
    let added = linalg::extend_orthonormal(&mut basis, standard, RANK_TOL, expected);
    if added != expected {
        return Err(Error::RankDeficiency { expected, found: added });
    }
    let complement_basis = basis.split_off(expected);
    Ok(WoldBasis { k, image_basis: basis, complement_basis })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: u32,
    pub dim: usize,
    pub fraction: f64,
    /// Levels below `n` of `S^n x` vanish for a generic `x`.
    pub low_levels_zero: bool,
}

/// Dimensions of `S^n(V)` inside `⊕_{k <= k_max} C^{2^k}` for `n = 1..=k_max`.
pub fn unitary_part_decay(k_max: u32) -> Result<Vec<DecayRow>> {
    if k_max > 10 {
        return Err(Error::LevelTooLarge { level: k_max, max: 10 });
    }
    let s = build_s(k_max)?;
    let total = s.total_dim();
    let generic: BlockVector = (0..=k_max)
        .map(|k| (0..1usize << k).map(|i| Complex64::new(1.0 + i as f64, 0.5 * k as f64 - 1.0)).collect())
        .collect();
    let mut pushed = generic;
    let mut rows = Vec::with_capacity(k_max as usize);
    for n in 1..=k_max {
        pushed = s.apply(&pushed);
        let low_levels_zero = pushed[..n as usize].iter().all(|b| b.iter().all(|z| *z == linalg::zero()));
        let mut dim = 0;
        for top in n..=k_max {
            let source = top - n;
            let images = (0..1usize << source).map(|idx| {
                let mut v = vec![linalg::zero(); 1 << source];
                v[idx] = Complex64::new(1.0, 0.0);
                for level in source..top {
                    v = s.blocks[level as usize].apply(&v);
                }
                v
            });
            dim += linalg::rank(images, RANK_TOL);
        }
        rows.push(DecayRow { n, dim, fraction: dim as f64 / total as f64, low_levels_zero });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::fourier_coeffs;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn w(j: u64, k: u32) -> Complex64 {
        RootIndex { j, k }.value()
    }

    #[test]
    fn printed_level_zero_and_one() {
        let m0 = build_mk(0).unwrap().to_dense();
        assert!((m0.get(0, 0) - c(0.5, -0.5)).norm() < 1e-15);
        assert!((m0.get(0, 1) - c(0.5, 0.5)).norm() < 1e-15);

        let one = c(1.0, 0.0);
        let expected = [[one, w(1, 2), one, -w(1, 2)], [w(2, 2), one, -w(2, 2), one]];
        let m1 = build_mk(1).unwrap().to_dense();
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((m1.get(i, j) - v * 0.5).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn isometry_residuals() {
        for k in 0..=8 {
            assert!(row_isometry_check(k).unwrap() < 1e-12, "k={k}");
            assert!(embedding_residual(k).unwrap() < 1e-12);
        }
        assert!(build_mk(12).is_err());
    }

    #[test]
    fn structure_and_cycles() {
        for k in 1..=6 {
            assert!(structure_check(k).unwrap().passed(), "k={k}");
        }
        assert_eq!(permutation_cycles(2).unwrap(), vec![vec![1, 2], vec![3, 4]]);
        for k in 2..=10u32 {
            let cycles = permutation_cycles(k).unwrap();
            assert_eq!(cycles.len(), 2);
            assert!(cycles.iter().all(|cy| cy.len() == 1 << (k - 1)));
            assert_eq!(cycles[1][0], 3);
            assert_eq!(a_sequence(k), cycles[0]);
            assert!(lk_power_diagonal(k).unwrap());
            assert_eq!(permutation_order(k).unwrap(), 1 << (k - 1));
            assert_eq!(order_of_three(k), 1 << (k - 1));
        }
        assert!(three_power_avoids_five(1000));
    }

    #[test]
    fn chain_matches_conjugated_coefficients() {
        let c1 = compose_chain(1).unwrap();
        assert!((c1[0] - c(0.5, -0.5)).norm() < 1e-15 && (c1[1] - c(0.5, 0.5)).norm() < 1e-15);
        for k in 1..=7 {
            let chain = compose_chain(k).unwrap();
            let b = fourier_coeffs(k).unwrap().conjugated();
            assert!(linalg::max_abs_diff(&chain, &b) < 1e-9, "k={k}");
            assert!((evaluate_combination(&chain, k, 1 << k) - c(-1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn block_shift() {
        let s = build_s(5).unwrap();
        let mut e = block_zero(5);
        e[0][0] = c(1.0, 0.0);
        let image = s.apply(&e);
        assert!(linalg::max_abs_diff(&image[1], &build_mk(0).unwrap().apply(&[c(1.0, 0.0)])) < 1e-15);
        assert!(image[0].iter().all(|z| z.norm() == 0.0));
        assert!(s.left_unitary_residual() < 1e-12);
        assert!(s.projector_defect() >= 1.0 - 1e-12);
    }

    #[test]
    fn wold_bases() {
        for k in 1..=6 {
            let wb = wold_complement(k).unwrap();
            assert_eq!(wb.complement_basis.len(), 1 << (k - 1));
            assert!(wb.orthogonality_residual().unwrap() < 1e-10);
            assert!(wb.orthonormality_residual() < 1e-10);
            assert!(wb.completeness_residual() < 1e-10);
        }
    }

    #[test]
    fn decay_of_iterated_images() {
        let rows = unitary_part_decay(5).unwrap();
        for r in &rows {
            assert_eq!(r.dim, (1usize << (5 - r.n + 1)) - 1);
            assert!(r.low_levels_zero);
        }
        assert!(rows.windows(2).all(|p| p[1].dim < p[0].dim));
        assert_eq!(rows.last().unwrap().dim, 1);
    }
}
