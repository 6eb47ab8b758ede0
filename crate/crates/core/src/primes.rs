//! Rational-prime infrastructure: a segmented sieve with on-demand
//! extension, the counting functions `pi` and `pi_m`, and n-th prime lookup.
//!
//! Extension replaces the shared immutable table behind a lock; readers hold
//! cheap `Arc` snapshots, so concurrent reads never block each other.

use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default largest prime the sieve will extend to before reporting a
/// capacity error.
pub const DEFAULT_CAPACITY: u64 = 1 << 32;

const SEGMENT: usize = 1 << 20;

/// Immutable snapshot of all primes up to `limit`.
#[derive(Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn sieve(limit: u64) -> PrimeTable {
        let limit = limit.max(3);
        let root = (limit as f64).sqrt() as u64 + 2;
        let mut small = vec![true; root as usize + 1];
        small[0] = false;
        small[1] = false;
        let mut base = Vec::new();
        for p in 2..=root {
            if small[p as usize] {
                base.push(p);
                let mut q = p * p;
                while q <= root {
                    small[q as usize] = false;
                    q += p;
                }
            }
        }
        let mut primes: Vec<u64> = base.iter().copied().filter(|&p| p <= limit).collect();
        let mut seg = vec![true; SEGMENT];
        let mut lo = root + 1;
        while lo <= limit {
            let hi = (lo + SEGMENT as u64 - 1).min(limit);
            let len = (hi - lo + 1) as usize;
            seg[..len].fill(true);
            for &p in &base {
                if p * p > hi {
                    break;
                }
                let mut start = lo.div_ceil(p) * p;
                if start < p * p {
                    start = p * p;
                }
                let mut q = start;
                while q <= hi {
                    seg[(q - lo) as usize] = false;
                    q += p;
                }
            }
            for (i, &alive) in seg[..len].iter().enumerate() {
                if alive {
                    primes.push(lo + i as u64);
                }
            }
            lo = hi + 1;
        }
        PrimeTable { limit, primes }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }

    /// Exact count of primes `<= x` (requires `x <= limit`).
    pub fn pi(&self, x: u64) -> u64 {
        debug_assert!(x <= self.limit);
        self.primes.partition_point(|&p| p <= x) as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        debug_assert!(n <= self.limit);
        self.primes.binary_search(&n).is_ok()
    }

    /// Primes in `(a, b]`.
    pub fn range(&self, a: u64, b: u64) -> &[u64] {
        debug_assert!(b <= self.limit);
        let start = self.primes.partition_point(|&p| p <= a);
        let end = self.primes.partition_point(|&p| p <= b);
        &self.primes[start..end]
    }
}

/// Shared handle over an extendable prime table.
#[derive(Clone)]
pub struct Primes {
    table: Arc<RwLock<Arc<PrimeTable>>>,
    capacity: u64,
}

impl Default for Primes {
    fn default() -> Self {
        Primes::with_capacity(DEFAULT_CAPACITY)
    }
}

impl Primes {
    pub fn with_capacity(capacity: u64) -> Primes {
        Primes {
            table: Arc::new(RwLock::new(Arc::new(PrimeTable::sieve(1 << 16)))),
            capacity,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    /// Snapshot covering at least `limit`; extends the shared table first if
    /// needed (growth is geometric so repeated small extensions stay cheap).
    pub fn snapshot(&self, limit: u64) -> Result<Arc<PrimeTable>> {
        if limit > self.capacity {
            return Err(Error::PrimeCapacity {
                needed: limit,
                capacity: self.capacity,
            });
        }
        {
            let guard = self.table.read().expect("prime table lock");
            if guard.limit() >= limit {
                return Ok(Arc::clone(&guard));
            }
        }
        let mut guard = self.table.write().expect("prime table lock");
        if guard.limit() < limit {
            let mut target = guard.limit();
            while target < limit {
                target = (target * 2).min(self.capacity);
            }
            *guard = Arc::new(PrimeTable::sieve(target));
        }
        Ok(Arc::clone(&guard))
    }

    /// Number of primes `<= x`.
    pub fn pi(&self, x: u64) -> Result<u64> {
        if x < 2 {
            return Ok(0);
        }
        Ok(self.snapshot(x)?.pi(x))
    }

    /// `pi` at a nonnegative rational argument.
    pub fn pi_rational(&self, x: &BigRational) -> Result<u64> {
        if x.is_negative() || x.is_zero() {
            return Ok(0);
        }
        let fl = x.floor().to_integer();
        let fl = fl
            .to_u64()
            .ok_or_else(|| Error::InvalidInput("pi argument too large".into()))?;
        self.pi(fl)
    }

    /// Number of primes `p <= x` with `p` not dividing `m`.
    pub fn pi_m(&self, x: u64, m: &BigUint) -> Result<u64> {
        if x < 2 {
            return Ok(0);
        }
        if m.is_zero() {
            return Err(Error::InvalidInput("pi_m with zero modulus".into()));
        }
        let table = self.snapshot(x)?;
        let total = table.pi(x);
        let dividing = prime_divisors_up_to(m, x, &table).len() as u64;
        Ok(total - dividing)
    }

    pub fn pi_m_rational(&self, x: &BigRational, m: &BigUint) -> Result<u64> {
        if x.is_negative() || x.is_zero() {
            return Ok(0);
        }
        let fl = x
            .floor()
            .to_integer()
            .to_u64()
            .ok_or_else(|| Error::InvalidInput("pi_m argument too large".into()))?;
        self.pi_m(fl, m)
    }

    /// The j-th prime, 1-indexed (`nth(1) = 2`).
    pub fn nth(&self, j: u64) -> Result<u64> {
        if j == 0 {
            return Err(Error::InvalidInput("nth_prime is 1-indexed".into()));
        }
        // p_j <= j (ln j + ln ln j) for j >= 6; grow until covered.
        let mut bound = 64u64.max((j as f64 * ((j as f64).ln().max(1.0) + 2.0)) as u64);
        loop {
            let table = self.snapshot(bound.min(self.capacity))?;
            if let Some(&p) = table.as_slice().get(j as usize - 1) {
                return Ok(p);
            }
            if bound >= self.capacity {
                return Err(Error::PrimeCapacity {
                    needed: bound,
                    capacity: self.capacity,
                });
            }
            bound = (bound * 2).min(self.capacity);
        }
    }

    /// Product of the first `j` primes.
    pub fn primorial(&self, j: u64) -> Result<BigUint> {
        let mut acc = BigUint::from(1u32);
        for i in 1..=j {
            acc *= BigUint::from(self.nth(i)?);
        }
        Ok(acc)
    }
}

/// Distinct prime divisors of `m` that are `<= x`.
pub fn prime_divisors_up_to(m: &BigUint, x: u64, table: &PrimeTable) -> Vec<u64> {
    let mut rest = m.clone();
    let mut out = Vec::new();
    let one = BigUint::from(1u32);
    for &p in table.as_slice() {
        if p > x {
            break;
        }
        let bp = BigUint::from(p);
        if rest.is_multiple_of(&bp) {
            out.push(p);
            while rest.is_multiple_of(&bp) {
                rest /= &bp;
            }
        }
        if rest <= one {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn pi_small_values() {
        let primes = Primes::default();
        assert_eq!(primes.pi(1).unwrap(), 0);
        assert_eq!(primes.pi(10).unwrap(), 4);
        assert_eq!(primes.pi(100).unwrap(), 25);
    }

    #[test]
    fn pi_at_one_million_matches_independent_recount() {
        let primes = Primes::default();
        // Independent recount with a plain bitset sieve.
        let n = 1_000_000usize;
        let mut alive = vec![true; n + 1];
        alive[0] = false;
        alive[1] = false;
        let mut i = 2usize;
        while i * i <= n {
            if alive[i] {
                let mut j = i * i;
                while j <= n {
                    alive[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        let expected = alive.iter().filter(|&&b| b).count() as u64;
        assert_eq!(expected, 78_498);
        assert_eq!(primes.pi(1_000_000).unwrap(), expected);
    }

    #[test]
    fn pi_m_values() {
        let primes = Primes::default();
        let one = BigUint::from(1u32);
        assert_eq!(primes.pi_m(10, &one).unwrap(), 4);
        assert_eq!(primes.pi_m(10, &BigUint::from(6u32)).unwrap(), 2);
        assert_eq!(primes.pi_m(4, &BigUint::from(2u32)).unwrap(), 1);
        // pi_m(x, 1) == pi(x) across a spread of x
        for x in [2u64, 17, 1000, 65537] {
            assert_eq!(primes.pi_m(x, &one).unwrap(), primes.pi(x).unwrap());
        }
    }

    #[test]
    fn nth_prime_values() {
        let primes = Primes::default();
        assert_eq!(primes.nth(1).unwrap(), 2);
        assert_eq!(primes.nth(4).unwrap(), 7);
        assert_eq!(primes.nth(1000).unwrap(), 7919);
    }

    #[test]
    fn bertrand_gap_check() {
        let primes = Primes::default();
        let table = primes.snapshot(1_000_000).unwrap();
        let slice = table.as_slice();
        for w in slice.windows(2) {
            assert!(w[1] < 2 * w[0], "bertrand violated at {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn extension_keeps_earlier_primes() {
        let primes = Primes::default();
        let before = primes.snapshot(70_000).unwrap();
        let after = primes.snapshot(300_000).unwrap();
        assert_eq!(
            before.as_slice(),
            &after.as_slice()[..before.as_slice().len()]
        );
    }

    #[test]
    fn capacity_error() {
        let primes = Primes::with_capacity(1 << 20);
        match primes.pi(1 << 22) {
            Err(Error::PrimeCapacity { .. }) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn pi_rational_floor_semantics() {
        let primes = Primes::default();
        let x = BigRational::new(BigInt::from(9), BigInt::from(2)); // 4.5
        assert_eq!(primes.pi_rational(&x).unwrap(), 2); // primes 2, 3
    }
}
