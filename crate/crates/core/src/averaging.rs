//! Cesàro and alternating averages of the forward operator on truncated `ℓ₁`.
//!
//! Limits are exact rationals. Every cycle is enumerated from its minimum
//! element and `s(n)` counts the steps from `n` to that element, so the
//! trivial cycle reads `(1, 2)` with `s(1) = 0`, `s(2) = 1`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collatz::{t_step_u64, trajectory, CycleRecord, Natural, TrajectoryStatus};
use crate::error::{Error, Result};
use crate::koopman::forward_apply;

/// Where a starting value ends up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub cycle: usize,
    /// Steps to the cycle's minimum element.
    pub s: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRegistry {
    pub n_max: u64,
    pub cycles: Vec<CycleRecord>,
    /// `assignment[n - 1]`, `None` for unresolved `n`.
    pub assignment: Vec<Option<Resolution>>,
    pub unresolved: Vec<u64>,
}

enum Outcome {
    Cycle { members: Vec<Natural>, s: u64 },
    Unresolved,
}

fn resolve(n: u64, cap: usize) -> Result<Outcome> {
    let traj = trajectory(&Natural::from(n), cap)?;
    match traj.status {
        TrajectoryStatus::ReachedTrivialCycle { at_step } => {
            let s = if traj.steps[at_step] == Natural::one() { at_step } else { at_step + 1 };
            Ok(Outcome::Cycle { members: CycleRecord::trivial().members, s: s as u64 })
        }
        TrajectoryStatus::NontrivialCycle { members } => {
            let record = CycleRecord::through(&members[0], members.len())?;
            let s = traj.steps.iter().position(|v| *v == record.members[0]).expect("cycle minimum is on the trajectory");
            Ok(Outcome::Cycle { members: record.members, s: s as u64 })
        }
        TrajectoryStatus::Exhausted { .. } => Ok(Outcome::Unresolved),
    }
}

/// Resolves every `n <= n_max` to a cycle or lists it as unresolved.
pub fn build_registry(n_max: u64, cap: usize) -> Result<CycleRegistry> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("registry needs n_max >= 2".into()));
    }
    let outcomes: Vec<Outcome> = (1..=n_max).into_par_iter().map(|n| resolve(n, cap)).collect::<Result<_>>()?;

    let mut by_min: BTreeMap<Natural, Vec<Natural>> = BTreeMap::new();
    for outcome in &outcomes {
        if let Outcome::Cycle { members, .. } = outcome {
            by_min.entry(members[0].clone()).or_insert_with(|| members.clone());
        }
    }
    let cycles: Vec<CycleRecord> = by_min.values().map(|m| CycleRecord { members: m.clone() }).collect();
    let index: HashMap<&Natural, usize> = by_min.keys().enumerate().map(|(i, k)| (k, i)).collect();

    let mut assignment = Vec::with_capacity(outcomes.len());
    let mut unresolved = Vec::new();
    for (idx, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Outcome::Cycle { members, s } => assignment.push(Some(Resolution { cycle: index[&members[0]], s: *s })),
            Outcome::Unresolved => {
                assignment.push(None);
                unresolved.push(idx as u64 + 1);
            }
        }
    }
    Ok(CycleRegistry { n_max, cycles, assignment, unresolved })
}

impl CycleRegistry {
    pub fn resolution(&self, n: u64) -> Result<&Resolution> {
        if n == 0 {
            return Err(Error::ZeroInput);
        }
        self.assignment.get(n as usize - 1).and_then(Option::as_ref).ok_or(Error::Unresolved(n))
    }

    pub fn cycle_of(&self, n: u64) -> Result<&CycleRecord> {
        Ok(&self.cycles[self.resolution(n)?.cycle])
    }

    /// `s(n)`.
    pub fn steps_to_cycle(&self, n: u64) -> Result<u64> {
        Ok(self.resolution(n)?.s)
    }
}

fn ratio(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn support(x: &[BigRational]) -> impl Iterator<Item = (u64, &BigRational)> {
    x.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (i as u64 + 1, v))
}

fn member_index(member: &Natural, truncation: usize) -> Result<usize> {
    match member.to_u64() {
        Some(v) if v as usize <= truncation => Ok(v as usize - 1),
        _ => Err(Error::TruncationEscape { value: member.to_string(), truncation: truncation as u64 }),
    }
}

/// Signed visit counts `Σ_{j<K} sign^j e_{T^j(n)}`.
fn visits(n: u64, k: u64, truncation: usize, alternate: bool) -> Result<HashMap<u64, i64>> {
    let mut counts = HashMap::new();
    let mut v = n;
    for j in 0..k {
        if v as usize > truncation {
            return Err(Error::TruncationEscape { value: v.to_string(), truncation: truncation as u64 });
        }
        let w = if alternate && j % 2 == 1 { -1 } else { 1 };
        *counts.entry(v).or_insert(0) += w;
        v = t_step_u64(v).ok_or(Error::Overflow("trajectory value"))?;
    }
    Ok(counts)
}

fn average(x: &[BigRational], k: u64, alternate: bool) -> Result<Vec<BigRational>> {
    if k == 0 {
        return Err(Error::InvalidArgument("average needs K >= 1".into()));
    }
    let mut out = vec![BigRational::zero(); x.len()];
    for (n, weight) in support(x) {
        for (v, c) in visits(n, k, x.len(), alternate)? {
            out[v as usize - 1] += weight * ratio(c);
        }
    }
    let scale = ratio(k as i64);
    Ok(out.into_iter().map(|v| v / &scale).collect())
}

/// `(1/K) Σ_{j<K} L^j x`, exact. Fails if any trajectory from the support
/// leaves `[1, N]`.
pub fn cesaro_average(x: &[BigRational], k: u64) -> Result<Vec<BigRational>> {
    average(x, k, false)
}

/// `(1/K) Σ_{j<K} (-1)^j L^j x`, exact.
pub fn alternating_average(x: &[BigRational], k: u64) -> Result<Vec<BigRational>> {
    average(x, k, true)
}

/// `Σ_i (Σ_{n∈N_i} x_n / l_i) Σ_{j∈C_i} e_j`.
pub fn kappa_limit(registry: &CycleRegistry, x: &[BigRational]) -> Result<Vec<BigRational>> {
    let mut weights = vec![BigRational::zero(); registry.cycles.len()];
    for (n, v) in support(x) {
        weights[registry.resolution(n)?.cycle] += v;
    }
    let mut out = vec![BigRational::zero(); x.len()];
    for (cycle, w) in registry.cycles.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        let share = w / ratio(cycle.len() as i64);
        for member in &cycle.members {
            out[member_index(member, x.len())?] += &share;
        }
    }
    Ok(out)
}

/// `Σ_{even cycles} (Σ_{n∈N_i} (-1)^{s(n)} x_n / l_i) Σ_j (-1)^{j-1} e_{n_{ji}}`.
pub fn alternating_limit(registry: &CycleRegistry, x: &[BigRational]) -> Result<Vec<BigRational>> {
    let mut weights = vec![BigRational::zero(); registry.cycles.len()];
    for (n, v) in support(x) {
        let r = registry.resolution(n)?;
        if r.s % 2 == 0 {
            weights[r.cycle] += v;
        } else {
            weights[r.cycle] -= v;
        }
    }
    let mut out = vec![BigRational::zero(); x.len()];
    for (cycle, w) in registry.cycles.iter().zip(weights) {
        if w.is_zero() || cycle.len() % 2 == 1 {
            continue;
        }
        let share = w / ratio(cycle.len() as i64);
        for (j, member) in cycle.members.iter().enumerate() {
            let slot = &mut out[member_index(member, x.len())?];
            if j % 2 == 0 {
                *slot += &share;
            } else {
                *slot -= &share;
            }
        }
    }
    Ok(out)
}

pub fn l1_norm(x: &[BigRational]) -> BigRational {
    x.iter().fold(BigRational::zero(), |acc, v| acc + v.abs())
}

pub fn l1_distance(x: &[BigRational], y: &[BigRational]) -> BigRational {
    x.iter().zip(y).fold(BigRational::zero(), |acc, (a, b)| acc + (a - b).abs())
}

pub fn to_f64(x: &[BigRational]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}

/// `e_n` of length `N` with rational entries.
pub fn unit_vector(truncation: usize, n: u64) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); truncation];
    v[n as usize - 1] = BigRational::one();
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenKind {
    Plus,
    Minus,
}

/// `‖L u - u‖₁` for `u = Σ e_n` (plus), or `‖L v + v‖₁` for
/// `v = Σ_j (-1)^{j-1} e_{n_j}` (minus, even length only).
pub fn eigen_check(kind: EigenKind, cycle: &CycleRecord, truncation: usize) -> Result<f64> {
    if kind == EigenKind::Minus && cycle.len() % 2 == 1 {
        return Err(Error::OddLengthCycle { length: cycle.len() });
    }
    let mut u = vec![0i64; truncation];
    for (j, member) in cycle.members.iter().enumerate() {
        let sign = if kind == EigenKind::Minus && j % 2 == 1 { -1 } else { 1 };
        u[member_index(member, truncation)?] += sign;
    }
    let lu = forward_apply(&u)?;
    let residual: i64 = match kind {
        EigenKind::Plus => lu.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum(),
        EigenKind::Minus => lu.iter().zip(&u).map(|(a, b)| (a + b).abs()).sum(),
    };
    Ok(residual as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_trivial(n: usize) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); n];
        v[0] = BigRational::new(1.into(), 2.into());
        v[1] = BigRational::new(1.into(), 2.into());
        v
    }

    #[test]
    fn registry_on_small_range() {
        let reg = build_registry(100, 10_000).unwrap();
        assert_eq!(reg.cycles, vec![CycleRecord::trivial()]);
        assert!(reg.unresolved.is_empty());
        assert_eq!(reg.steps_to_cycle(1).unwrap(), 0);
        assert_eq!(reg.steps_to_cycle(2).unwrap(), 1);
        assert_eq!(reg.steps_to_cycle(7).unwrap(), 11);
        assert_eq!(reg.cycle_of(27).unwrap(), &CycleRecord::trivial());
        assert!(matches!(reg.resolution(101), Err(Error::Unresolved(101))));
    }

    #[test]
    fn tiny_cap_leaves_values_unresolved() {
        let reg = build_registry(30, 3).unwrap();
        assert!(reg.unresolved.contains(&27));
        assert!(reg.resolution(27).is_err());
    }

    #[test]
    fn cesaro_average_of_e1() {
        let avg = cesaro_average(&unit_vector(8, 1), 1000).unwrap();
        assert_eq!(avg, half_trivial(8));
        let avg = cesaro_average(&unit_vector(8, 1), 1001).unwrap();
        let dist = l1_distance(&avg, &half_trivial(8));
        assert!(dist <= BigRational::new(2.into(), 1001.into()));
        let zero = vec![BigRational::zero(); 8];
        assert_eq!(cesaro_average(&zero, 10).unwrap(), zero);
    }

    #[test]
    fn escaping_trajectory_is_an_error() {
        assert!(matches!(cesaro_average(&unit_vector(20, 7), 50), Err(Error::TruncationEscape { .. })));
    }

    #[test]
    fn limits() {
        let reg = build_registry(100, 10_000).unwrap();
        assert_eq!(kappa_limit(&reg, &unit_vector(100, 7)).unwrap(), half_trivial(100));
        let mut u = unit_vector(100, 1);
        u[1] = BigRational::one();
        assert_eq!(kappa_limit(&reg, &u).unwrap(), u);
        assert!(alternating_limit(&reg, &u).unwrap().iter().all(Zero::is_zero));

        let a1 = alternating_limit(&reg, &unit_vector(100, 1)).unwrap();
        let a2 = alternating_limit(&reg, &unit_vector(100, 2)).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!((a1[0].clone(), a1[1].clone()), (half.clone(), -half.clone()));
        assert_eq!((a2[0].clone(), a2[1].clone()), (-half.clone(), half));
    }

    #[test]
    fn finite_alternating_average_approaches_the_limit() {
        let reg = build_registry(100, 10_000).unwrap();
        let x = unit_vector(100, 7);
        let limit = alternating_limit(&reg, &x).unwrap();
        let avg = alternating_average(&x, 4000).unwrap();
        assert!(l1_distance(&avg, &limit) <= BigRational::new(30.into(), 4000.into()));
    }

    #[test]
    fn eigenvectors() {
        let trivial = CycleRecord::trivial();
        assert_eq!(eigen_check(EigenKind::Plus, &trivial, 16).unwrap(), 0.0);
        assert_eq!(eigen_check(EigenKind::Minus, &trivial, 16).unwrap(), 0.0);
        let fake = CycleRecord { members: vec![Natural::from(3u64), Natural::from(5u64)] };
        assert!(eigen_check(EigenKind::Plus, &fake, 16).unwrap() > 0.0);
        let odd = CycleRecord { members: vec![Natural::from(3u64)] };
        assert_eq!(eigen_check(EigenKind::Minus, &odd, 16), Err(Error::OddLengthCycle { length: 1 }));
    }
}
