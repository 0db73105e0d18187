//! Segmented sieve of Eratosthenes over odd numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResidueClass {
    Two,
    OneMod4,
    ThreeMod4,
}

impl ResidueClass {
    pub fn of(p: u64) -> Self {
        match p % 4 {
            1 => ResidueClass::OneMod4,
            3 => ResidueClass::ThreeMod4,
            _ => ResidueClass::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RationalPrime {
    pub p: u64,
    pub class: ResidueClass,
}

impl RationalPrime {
    pub fn new(p: u64) -> Self {
        Self {
            p,
            class: ResidueClass::of(p),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SieveConfig {
    /// Odd numbers covered by one segment.
    pub segment_len: usize,
    /// Upper bound on transient sieve memory in bytes.
    pub memory_budget: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self {
            segment_len: 1 << 20,
            memory_budget: 1 << 30,
        }
    }
}

/// Sieve state for primes up to `limit`; segments are independent and can
/// be processed in any order or in parallel.
#[derive(Debug, Clone)]
pub struct PrimeSieve {
    limit: u64,
    segment_len: usize,
    base: Vec<u32>,
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn simple_odd_primes(limit: u64) -> Vec<u32> {
    if limit < 3 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    let mut i = 3;
    while i <= n {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    out
}

impl PrimeSieve {
    pub fn new(limit: u64, config: SieveConfig) -> Result<Self> {
        if config.segment_len == 0 {
            return Err(Error::Domain("segment length must be positive".into()));
        }
        let root = isqrt(limit);
        let base_bytes = 4 * (root as usize / 2 + 1) + root as usize + 1;
        let needed = config.segment_len + base_bytes;
        if needed > config.memory_budget {
            return Err(Error::Resource {
                needed_bytes: needed,
                segment_len: config.segment_len,
                budget_bytes: config.memory_budget,
            });
        }
        Ok(Self {
            limit,
            segment_len: config.segment_len,
            base: simple_odd_primes(root),
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Number of segments covering the odd numbers up to the limit.
    pub fn segment_count(&self) -> usize {
        let odds = self.limit.div_ceil(2) as usize;
        odds.div_ceil(self.segment_len)
    }

    /// Primes in segment `s`, ascending. Segment 0 also yields 2.
    pub fn segment(&self, s: usize) -> Vec<u64> {
        let mut buf = vec![0u8; self.segment_len];
        self.segment_into(s, &mut buf)
    }

    fn segment_into(&self, s: usize, buf: &mut [u8]) -> Vec<u64> {
        // Index i in the segment represents the odd number 2*(start + i) + 1.
        let start = (s * self.segment_len) as u64;
        let odds_total = self.limit.div_ceil(2);
        let len = (self.segment_len as u64).min(odds_total.saturating_sub(start)) as usize;
        let buf = &mut buf[..len];
        buf.fill(1);
        let lo = 2 * start + 1;
        let hi = 2 * (start + len as u64) - 1;
        for &q in &self.base {
            let q = q as u64;
            if q * q > hi {
                break;
            }
            let mut m = (q * q).max(lo.div_ceil(q) * q);
            if m % 2 == 0 {
                m += q;
            }
            let mut idx = ((m - 1) / 2 - start) as usize;
            while idx < len {
                buf[idx] = 0;
                idx += q as usize;
            }
        }
        let mut out = Vec::with_capacity(len / 8);
        if s == 0 && self.limit >= 2 {
            out.push(2);
            if len > 0 {
                buf[0] = 0; // 1 is not prime
            }
        }
        for (i, &flag) in buf.iter().enumerate() {
            if flag != 0 {
                let n = 2 * (start + i as u64) + 1;
                if n <= self.limit {
                    out.push(n);
                }
            }
        }
        out
    }

    /// Lazy ascending iterator over all primes up to the limit.
    pub fn iter(&self) -> PrimeIter<'_> {
        PrimeIter {
            sieve: self,
            next_segment: 0,
            current: Vec::new().into_iter(),
            buf: vec![0u8; if self.limit >= 2 { self.segment_len } else { 0 }],
        }
    }

    /// Apply `f` to each segment's primes in parallel and return the
    /// results in segment order.
    pub fn par_map_segments<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[u64]) -> T + Sync,
    {
        if self.limit < 2 {
            return Vec::new();
        }
        (0..self.segment_count())
            .into_par_iter()
            .map(|s| f(&self.segment(s)))
            .collect()
    }
}

pub struct PrimeIter<'a> {
    sieve: &'a PrimeSieve,
    next_segment: usize,
    current: std::vec::IntoIter<u64>,
    buf: Vec<u8>,
}

impl Iterator for PrimeIter<'_> {
    type Item = RationalPrime;

    fn next(&mut self) -> Option<RationalPrime> {
        loop {
            if let Some(p) = self.current.next() {
                return Some(RationalPrime::new(p));
            }
            if self.sieve.limit < 2 || self.next_segment >= self.sieve.segment_count() {
                return None;
            }
            let primes = self.sieve.segment_into(self.next_segment, &mut self.buf);
            self.next_segment += 1;
            self.current = primes.into_iter();
        }
    }
}

/// Ascending stream of the primes up to `limit`, default configuration.
pub fn sieve_primes(limit: u64) -> Result<Vec<RationalPrime>> {
    sieve_primes_with(limit, SieveConfig::default())
}

pub fn sieve_primes_with(limit: u64, config: SieveConfig) -> Result<Vec<RationalPrime>> {
    let sieve = PrimeSieve::new(limit, config)?;
    Ok(sieve
        .par_map_segments(|ps| ps.to_vec())
        .into_iter()
        .flatten()
        .map(RationalPrime::new)
        .collect())
}

/// Plain list of primes up to `limit`.
pub fn primes_up_to(limit: u64) -> Result<Vec<u64>> {
    let sieve = PrimeSieve::new(limit, SieveConfig::default())?;
    Ok(sieve.par_map_segments(|ps| ps.to_vec()).into_iter().flatten().collect())
}
