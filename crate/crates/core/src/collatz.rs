//! Exact Collatz dynamics: the maps `C` and `T`, trajectories with cycle
//! detection, stopping indices and single-step preimages.
//!
//! Every value is a [`Natural`] backed by an arbitrary-precision integer.
//! Hot loops run on `u64` and promote to big integers on overflow, so no
//! input the library accepts can wrap.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default iteration cap for trajectories and stopping indices.
pub const DEFAULT_CAP: usize = 100_000;

/// A non-negative integer of unbounded size.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Natural(BigUint);

impl Natural {
    pub fn zero() -> Self {
        Natural(BigUint::zero())
    }

    pub fn one() -> Self {
        Natural(BigUint::one())
    }

    pub fn from_biguint(value: BigUint) -> Self {
        Natural(value)
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_odd(&self) -> bool {
        self.0.is_odd()
    }

    pub fn is_even(&self) -> bool {
        self.0.is_even()
    }

    /// Residue modulo a small modulus.
    pub fn rem_u64(&self, modulus: u64) -> u64 {
        (&self.0 % modulus).to_u64().expect("residue fits in u64")
    }

    /// Whether this value is 1 or 2, the members of the trivial cycle.
    pub fn in_trivial_cycle(&self) -> bool {
        matches!(self.to_u64(), Some(1) | Some(2))
    }
}

impl From<u64> for Natural {
    fn from(v: u64) -> Self {
        Natural(BigUint::from(v))
    }
}

impl From<u32> for Natural {
    fn from(v: u32) -> Self {
        Natural(BigUint::from(v))
    }
}

impl From<BigUint> for Natural {
    fn from(v: BigUint) -> Self {
        Natural(v)
    }
}

impl FromStr for Natural {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BigUint::from_str(s.trim())
            .map(Natural)
            .map_err(|e| Error::InvalidArgument(format!("not a natural number '{s}': {e}")))
    }
}

impl fmt::Display for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Natural({})", self.0)
    }
}

// Decimal strings keep values of any size readable in JSON reports.
impl Serialize for Natural {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_str_radix(10))
    }
}

impl<'de> Deserialize<'de> for Natural {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Natural::from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// One step of the accelerated map on `u64`; `None` on overflow.
#[inline]
pub fn t_step_u64(n: u64) -> Option<u64> {
    if n & 1 == 0 {
        Some(n >> 1)
    } else {
        // (3n + 1) / 2 = n + (n + 1) / 2, which avoids the intermediate 3n.
        n.checked_add((n >> 1) + 1)
    }
}

/// `T^k(n)` on `u64`; `None` if any intermediate value overflows.
pub fn iterate_t_u64(mut n: u64, k: u64) -> Option<u64> {
    for _ in 0..k {
        n = t_step_u64(n)?;
    }
    Some(n)
}

fn t_step_big(n: &BigUint) -> BigUint {
    if n.is_even() {
        n >> 1
    } else {
        (n * 3u32 + 1u32) >> 1
    }
}

/// The accelerated Collatz map: `n/2` for even `n`, `(3n+1)/2` for odd `n`.
pub fn collatz_t(n: &Natural) -> Result<Natural> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    if let Some(small) = n.to_u64() {
        if let Some(next) = t_step_u64(small) {
            return Ok(Natural::from(next));
        }
    }
    Ok(Natural(t_step_big(&n.0)))
}

/// The classical Collatz map: `n/2` for even `n`, `3n+1` for odd `n`.
pub fn collatz_c(n: &Natural) -> Result<Natural> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    if n.is_even() {
        Ok(Natural(&n.0 >> 1))
    } else {
        Ok(Natural(&n.0 * 3u32 + 1u32))
    }
}

/// Value cursor with a `u64` fast path that promotes on overflow.
#[derive(Clone, Debug)]
enum Cursor {
    Small(u64),
    Big(BigUint),
}

impl Cursor {
    fn new(n: &Natural) -> Self {
        match n.to_u64() {
            Some(v) => Cursor::Small(v),
            None => Cursor::Big(n.0.clone()),
        }
    }

    fn step(&mut self) {
        match self {
            Cursor::Small(v) => match t_step_u64(*v) {
                Some(next) => *v = next,
                None => *self = Cursor::Big(t_step_big(&BigUint::from(*v))),
            },
            Cursor::Big(b) => {
                let next = t_step_big(b);
                *self = match next.to_u64() {
                    Some(v) => Cursor::Small(v),
                    None => Cursor::Big(next),
                };
            }
        }
    }

    fn to_natural(&self) -> Natural {
        match self {
            Cursor::Small(v) => Natural::from(*v),
            Cursor::Big(b) => Natural(b.clone()),
        }
    }

    fn is_one(&self) -> bool {
        matches!(self, Cursor::Small(1))
    }

    fn in_trivial_cycle(&self) -> bool {
        matches!(self, Cursor::Small(1) | Cursor::Small(2))
    }
}

/// `T^k(n)`, with `T^0` the identity.
pub fn iterate_t(n: &Natural, k: u64) -> Result<Natural> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut cursor = Cursor::new(n);
    for _ in 0..k {
        cursor.step();
    }
    Ok(cursor.to_natural())
}

/// How a bounded trajectory ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    /// `steps[at_step]` is the first entry in `{1, 2}`.
    ReachedTrivialCycle { at_step: usize },
    /// A value repeated outside the trivial cycle; members start at the
    /// first repeated value in trajectory order.
    NontrivialCycle { members: Vec<Natural> },
    /// `cap` steps elapsed without resolution.
    Exhausted { cap: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub steps: Vec<Natural>,
    pub status: TrajectoryStatus,
}

/// A finite `T`-orbit `n_1 -> n_2 -> ... -> n_l -> n_1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleRecord {
    pub members: Vec<Natural>,
}

impl CycleRecord {
    /// Builds the cycle through `start`, enumerated from its minimum element.
    pub fn through(start: &Natural, cap: usize) -> Result<Self> {
        let mut members = vec![start.clone()];
        let mut cur = collatz_t(start)?;
        while &cur != start {
            if members.len() > cap {
                return Err(Error::InvalidArgument(format!("{start} is not on a cycle of length <= {cap}")));
            }
            members.push(cur.clone());
            cur = collatz_t(&cur)?;
        }
        let pivot = members
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        members.rotate_left(pivot);
        Ok(CycleRecord { members })
    }

    pub fn trivial() -> Self {
        CycleRecord { members: vec![Natural::from(1u64), Natural::from(2u64)] }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.len() == 2 && self.members[0] == Natural::from(1u64)
    }

    /// Whether applying `T` around the members returns to the first one.
    pub fn is_closed(&self) -> bool {
        if self.members.is_empty() {
            return false;
        }
        let l = self.members.len();
        (0..l).all(|j| match collatz_t(&self.members[j]) {
            Ok(next) => next == self.members[(j + 1) % l],
            Err(_) => false,
        })
    }
}

/// Iterates `T` from `n` until the trivial cycle is hit, a value repeats,
/// or `cap` steps elapse.
pub fn trajectory(n: &Natural, cap: usize) -> Result<TrajectoryResult> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    if cap == 0 {
        return Err(Error::InvalidArgument("cap must be at least 1".into()));
    }
    let mut cursor = Cursor::new(n);
    let mut steps = vec![n.clone()];
    let mut seen: HashSet<Natural> = HashSet::new();
    seen.insert(n.clone());
    if cursor.in_trivial_cycle() {
        return Ok(TrajectoryResult { steps, status: TrajectoryStatus::ReachedTrivialCycle { at_step: 0 } });
    }
    for step in 1..=cap {
        cursor.step();
        let value = cursor.to_natural();
        steps.push(value.clone());
        if cursor.in_trivial_cycle() {
            return Ok(TrajectoryResult { steps, status: TrajectoryStatus::ReachedTrivialCycle { at_step: step } });
        }
        if !seen.insert(value.clone()) {
            let first = steps.iter().position(|v| *v == value).expect("repeated value was recorded");
            let members = steps[first..steps.len() - 1].to_vec();
            return Ok(TrajectoryResult { steps, status: TrajectoryStatus::NontrivialCycle { members } });
        }
    }
    Ok(TrajectoryResult { steps, status: TrajectoryStatus::Exhausted { cap } })
}

/// Result of a bounded stopping-index search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StoppingIndex {
    Reached(u64),
    Exhausted,
}

impl StoppingIndex {
    pub fn value(self) -> Option<u64> {
        match self {
            StoppingIndex::Reached(k) => Some(k),
            StoppingIndex::Exhausted => None,
        }
    }
}

/// Least `k >= 0` with `T^k(n) = 1`.
pub fn stopping_index(n: &Natural, cap: usize) -> Result<StoppingIndex> {
    if n.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut cursor = Cursor::new(n);
    for k in 0..=cap as u64 {
        if cursor.is_one() {
            return Ok(StoppingIndex::Reached(k));
        }
        cursor.step();
    }
    Ok(StoppingIndex::Exhausted)
}

/// `u64` stopping index for hot loops; `None` when the cap is hit.
pub fn stopping_index_u64(n: u64, cap: u64) -> Option<u64> {
    if n == 0 {
        return None;
    }
    let mut cursor = Cursor::Small(n);
    for k in 0..=cap {
        if cursor.is_one() {
            return Some(k);
        }
        cursor.step();
    }
    None
}

/// All `i` with `T(i) = m`, sorted descending (`2m` first).
pub fn preimages(m: &Natural) -> Result<Vec<Natural>> {
    if m.is_zero() {
        return Err(Error::ZeroInput);
    }
    let double = Natural(&m.0 << 1);
    if m.rem_u64(3) == 2 {
        let odd = Natural((&m.0 * 2u32 - 1u32) / 3u32);
        Ok(vec![double, odd])
    } else {
        Ok(vec![double])
    }
}

/// `u64` form of [`preimages`]: the double and, when `m ≡ 2 (mod 3)`, the odd preimage.
#[inline]
pub fn preimages_u64(m: u64) -> (u64, Option<u64>) {
    let odd = if m % 3 == 2 { Some((2 * m - 1) / 3) } else { None };
    (2 * m, odd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(v: u64) -> Natural {
        Natural::from(v)
    }

    #[test]
    fn t_and_c_on_small_values() {
        assert_eq!(collatz_t(&nat(2)).unwrap(), nat(1));
        assert_eq!(collatz_t(&nat(1)).unwrap(), nat(2));
        assert_eq!(collatz_c(&nat(1)).unwrap(), nat(4));
        assert_eq!(collatz_c(&nat(4)).unwrap(), nat(2));
        assert_eq!(collatz_c(&nat(3)).unwrap(), nat(10));
        assert_eq!(collatz_t(&Natural::zero()), Err(Error::ZeroInput));
        assert_eq!(collatz_c(&Natural::zero()), Err(Error::ZeroInput));
    }

    #[test]
    fn orbit_of_seven() {
        let expected = [7u64, 11, 17, 26, 13, 20, 10, 5, 8, 4, 2, 1];
        let mut cur = nat(7);
        for w in expected.windows(2) {
            assert_eq!(cur, nat(w[0]));
            cur = collatz_t(&cur).unwrap();
            assert_eq!(cur, nat(w[1]));
        }
        assert_eq!(iterate_t(&nat(7), 11).unwrap(), nat(1));
        assert_eq!(iterate_t(&nat(1), 0).unwrap(), nat(1));
        assert_eq!(iterate_t(&nat(320), 6).unwrap(), nat(5));
    }

    #[test]
    fn u64_fast_path_promotes_on_overflow() {
        let n = u64::MAX; // odd, so (3n+1)/2 overflows
        assert_eq!(t_step_u64(n), None);
        let next = collatz_t(&nat(n)).unwrap();
        let expected = (BigUint::from(n) * 3u32 + 1u32) >> 1;
        assert_eq!(next.as_biguint(), &expected);
        // and iterating through the overflow stays exact
        let two_steps = iterate_t(&nat(n), 2).unwrap();
        assert_eq!(two_steps, collatz_t(&next).unwrap());
    }

    #[test]
    fn trajectory_statuses() {
        let t = trajectory(&nat(2), 10).unwrap();
        assert_eq!(t.status, TrajectoryStatus::ReachedTrivialCycle { at_step: 0 });
        // 7 first touches {1,2} at the value 2, ten steps in
        let t = trajectory(&nat(7), 100).unwrap();
        assert_eq!(t.status, TrajectoryStatus::ReachedTrivialCycle { at_step: 10 });
        assert_eq!(t.steps[10], nat(2));
        let t = trajectory(&nat(27), 5).unwrap();
        assert_eq!(t.status, TrajectoryStatus::Exhausted { cap: 5 });
        assert_eq!(t.steps.len(), 6);
    }

    #[test]
    fn trajectory_of_27_matches_direct_iteration() {
        let t = trajectory(&nat(27), 200).unwrap();
        let mut v = 27u64;
        let mut first = None;
        for s in 0..200 {
            if v == 1 || v == 2 {
                first = Some(s);
                break;
            }
            v = if v % 2 == 0 { v / 2 } else { (3 * v + 1) / 2 };
        }
        let s = first.expect("27 resolves within 200 steps");
        assert_eq!(t.status, TrajectoryStatus::ReachedTrivialCycle { at_step: s });
        for w in t.steps.windows(2) {
            assert_eq!(collatz_t(&w[0]).unwrap(), w[1]);
        }
    }

    #[test]
    fn stopping_indices() {
        assert_eq!(stopping_index(&nat(1), 10).unwrap(), StoppingIndex::Reached(0));
        assert_eq!(stopping_index(&nat(2), 10).unwrap(), StoppingIndex::Reached(1));
        assert_eq!(stopping_index(&nat(7), 100).unwrap(), StoppingIndex::Reached(11));
        assert_eq!(stopping_index(&nat(27), 3).unwrap(), StoppingIndex::Exhausted);
        assert_eq!(stopping_index_u64(7, 100), Some(11));
    }

    #[test]
    fn preimage_cases() {
        assert_eq!(preimages(&nat(3)).unwrap(), vec![nat(6)]);
        assert_eq!(preimages(&nat(2)).unwrap(), vec![nat(4), nat(1)]);
        assert_eq!(preimages(&nat(4)).unwrap(), vec![nat(8)]);
        assert_eq!(preimages_u64(5), (10, Some(3)));
    }

    #[test]
    fn cycle_records() {
        let c = CycleRecord::through(&nat(2), 10).unwrap();
        assert_eq!(c, CycleRecord::trivial());
        assert!(c.is_closed());
        assert!(c.is_trivial());
        assert!(CycleRecord::through(&nat(3), 50).is_err());
        let bogus = CycleRecord { members: vec![nat(3), nat(5)] };
        assert!(!bogus.is_closed());
    }

    #[test]
    fn natural_serde_uses_decimal_strings() {
        let big = Natural::from_str("123456789012345678901234567890").unwrap();
        let json = serde_json::to_string(&big).unwrap();
        assert_eq!(json, "\"123456789012345678901234567890\"");
        let back: Natural = serde_json::from_str(&json).unwrap();
        assert_eq!(back, big);
    }
}
