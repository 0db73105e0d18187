//! Prime ideals and prime-power ideals of Z[i] with their angles.

mod cache;
mod sieve;
mod two_squares;

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{cache_load, cache_store, FORMAT_REVISION, MAGIC};
pub use sieve::{primes_up_to, sieve_primes, sieve_primes_with, PrimeIter, PrimeSieve, RationalPrime, ResidueClass, SieveConfig};
pub use two_squares::two_square_decompose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdealClass {
    Split,
    Inert,
    Ramified,
}

impl IdealClass {
    pub fn name(self) -> &'static str {
        match self {
            IdealClass::Split => "split",
            IdealClass::Inert => "inert",
            IdealClass::Ramified => "ramified",
        }
    }
}

/// A prime ideal of Z[i] with its first-quadrant generator a + bi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimeIdealRecord {
    pub norm: u64,
    pub angle: f64,
    pub class: IdealClass,
    pub a: u64,
    pub b: u64,
}

/// A prime-power ideal 𝔭^r with von Mangoldt weight log N(𝔭).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub norm: u64,
    pub weight: f64,
    pub angle: f64,
    pub exponent: u32,
}

/// One rational prime with its decomposition data: (2, 1, 1) for the
/// ramified prime, (p, a, b) with a > b > 0 for split p, (p, 0, 0) for inert p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub p: u64,
    pub a: u32,
    pub b: u32,
}

impl Triple {
    pub fn is_consistent(&self) -> bool {
        match self.p % 4 {
            1 => {
                let (a, b) = (self.a as u64, self.b as u64);
                a > b && b > 0 && a * a + b * b == self.p
            }
            3 => self.a == 0 && self.b == 0,
            _ => self.p == 2 && self.a == 1 && self.b == 1,
        }
    }
}

/// All rational primes needed to enumerate ideals of norm up to `bound`:
/// every p ≤ bound except inert p with p² > bound. Ascending in p.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeTable {
    pub bound: u64,
    pub triples: Vec<Triple>,
}

/// Angle of x + iy after rotation by a unit into the first quadrant, in [0, π/2).
pub fn reduced_angle(mut x: i128, mut y: i128) -> f64 {
    debug_assert!(x != 0 || y != 0);
    while !(x > 0 && y >= 0) {
        // multiply by −i
        let t = x;
        x = y;
        y = -t;
    }
    (y as f64).atan2(x as f64)
}

fn gaussian_mul(a: (i128, i128), b: (i128, i128)) -> (i128, i128) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

impl PrimeTable {
    pub fn build(bound: u64) -> Result<Self> {
        Self::build_with(bound, SieveConfig::default())
    }

    pub fn build_with(bound: u64, config: SieveConfig) -> Result<Self> {
        let sieve = PrimeSieve::new(bound, config)?;
        let chunks: Vec<Result<Vec<Triple>>> = sieve.par_map_segments(|ps| {
            let mut out = Vec::with_capacity(ps.len() / 2 + 1);
            for &p in ps {
                match p % 4 {
                    1 => {
                        let (a, b) = two_square_decompose(p)?;
                        out.push(Triple {
                            p,
                            a: a as u32,
                            b: b as u32,
                        });
                    }
                    3 => {
                        if p.checked_mul(p).is_some_and(|q| q <= bound) {
                            out.push(Triple { p, a: 0, b: 0 });
                        }
                    }
                    _ => out.push(Triple { p, a: 1, b: 1 }),
                }
            }
            Ok(out)
        });
        let mut triples = Vec::new();
        for c in chunks {
            triples.extend(c?);
        }
        Ok(Self { bound, triples })
    }

    /// Prime ideals of norm ≤ X, ordered by (norm, angle).
    pub fn prime_ideals(&self, x: u64) -> Result<Vec<PrimeIdealRecord>> {
        self.check_bound(x)?;
        let mut out = Vec::new();
        for t in &self.triples {
            match t.p % 4 {
                1 if t.p <= x => {
                    let (a, b) = (t.a as u64, t.b as u64);
                    out.push(PrimeIdealRecord {
                        norm: t.p,
                        angle: (b as f64).atan2(a as f64),
                        class: IdealClass::Split,
                        a,
                        b,
                    });
                    out.push(PrimeIdealRecord {
                        norm: t.p,
                        angle: (a as f64).atan2(b as f64),
                        class: IdealClass::Split,
                        a: b,
                        b: a,
                    });
                }
                3 if t.p * t.p <= x => out.push(PrimeIdealRecord {
                    norm: t.p * t.p,
                    angle: 0.0,
                    class: IdealClass::Inert,
                    a: t.p,
                    b: 0,
                }),
                2 if x >= 2 => out.push(PrimeIdealRecord {
                    norm: 2,
                    angle: FRAC_PI_4,
                    class: IdealClass::Ramified,
                    a: 1,
                    b: 1,
                }),
                _ => {}
            }
        }
        out.sort_by(|u, v| u.norm.cmp(&v.norm).then(u.angle.total_cmp(&v.angle)));
        Ok(out)
    }

    fn check_bound(&self, cap: u64) -> Result<()> {
        if cap > self.bound {
            return Err(Error::Domain(format!(
                "table built for norms up to {}, requested {}",
                self.bound, cap
            )));
        }
        Ok(())
    }

    /// Visit every prime-power ideal of norm ≤ cap in table order
    /// (by rational prime, then exponent).
    pub fn for_each_weighted_term<F: FnMut(WeightedTerm)>(&self, cap: u64, mut f: F) -> Result<()> {
        self.check_bound(cap)?;
        for t in &self.triples {
            visit_prime(t, cap, &mut f);
        }
        Ok(())
    }

    /// Parallel map over fixed blocks of the table; results in table order.
    pub fn par_map_terms<T, F>(&self, cap: u64, block: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut dyn Iterator<Item = WeightedTerm>) -> T + Sync,
    {
        self.check_bound(cap)?;
        Ok(self
            .triples
            .par_chunks(block.max(1))
            .map(|chunk| {
                let mut buf = Vec::new();
                for t in chunk {
                    visit_prime(t, cap, &mut |w| buf.push(w));
                }
                f(&mut buf.into_iter())
            })
            .collect())
    }

    /// Prime-power ideals of norm ≤ cap, ordered by (norm, angle).
    pub fn weighted_terms(&self, cap: u64) -> Result<Vec<WeightedTerm>> {
        let mut out = Vec::new();
        self.for_each_weighted_term(cap, |w| out.push(w))?;
        out.sort_by(|u, v| u.norm.cmp(&v.norm).then(u.angle.total_cmp(&v.angle)));
        Ok(out)
    }
}

fn visit_prime<F: FnMut(WeightedTerm)>(t: &Triple, cap: u64, f: &mut F) {
    let p = t.p;
    match p % 4 {
        1 => {
            if p > cap {
                return;
            }
            let weight = (p as f64).ln();
            let g1 = (t.a as i128, t.b as i128);
            let g2 = (t.b as i128, t.a as i128);
            let (mut z1, mut z2) = (g1, g2);
            let mut norm = p;
            let mut r = 1;
            loop {
                let (th1, th2) = if r == 1 {
                    ((t.b as f64).atan2(t.a as f64), (t.a as f64).atan2(t.b as f64))
                } else {
                    (reduced_angle(z1.0, z1.1), reduced_angle(z2.0, z2.1))
                };
                for angle in [th1, th2] {
                    f(WeightedTerm {
                        norm,
                        weight,
                        angle,
                        exponent: r,
                    });
                }
                match norm.checked_mul(p) {
                    Some(n) if n <= cap => norm = n,
                    _ => break,
                }
                z1 = gaussian_mul(z1, g1);
                z2 = gaussian_mul(z2, g2);
                r += 1;
            }
        }
        3 => {
            let q = match p.checked_mul(p) {
                Some(q) if q <= cap => q,
                _ => return,
            };
            let weight = (q as f64).ln();
            let mut norm = q;
            let mut r = 1;
            loop {
                f(WeightedTerm {
                    norm,
                    weight,
                    angle: 0.0,
                    exponent: r,
                });
                match norm.checked_mul(q) {
                    Some(n) if n <= cap => norm = n,
                    _ => break,
                }
                r += 1;
            }
        }
        _ => {
            let weight = std::f64::consts::LN_2;
            let mut norm = 2u64;
            let mut r = 1;
            while norm <= cap {
                f(WeightedTerm {
                    norm,
                    weight,
                    angle: if r % 2 == 1 { FRAC_PI_4 } else { 0.0 },
                    exponent: r,
                });
                match norm.checked_mul(2) {
                    Some(n) => norm = n,
                    None => break,
                }
                r += 1;
            }
        }
    }
}

/// Every prime ideal with norm ≤ X, ordered by (norm, angle).
pub fn enumerate_prime_ideals(x: u64) -> Result<Vec<PrimeIdealRecord>> {
    if x < 2 {
        return Err(Error::Domain("X must be at least 2".into()));
    }
    PrimeTable::build(x)?.prime_ideals(x)
}

/// Norm cap ⌊u·X⌋ beyond which Φ(N/X) vanishes.
pub fn norm_cap(x: u64, support_cap: f64) -> u64 {
    (support_cap * x as f64).floor() as u64
}

/// Every prime-power ideal with norm ≤ u·X, ordered by (norm, angle).
pub fn enumerate_weighted_terms(x: u64, support_cap: f64) -> Result<Vec<WeightedTerm>> {
    if !(support_cap > 0.0) {
        return Err(Error::Domain("support cap must be positive".into()));
    }
    let cap = norm_cap(x, support_cap);
    PrimeTable::build(cap)?.weighted_terms(cap)
}

/// Debug export with header `norm,angle,class,a,b`.
pub fn write_ideals_csv<W: Write>(mut w: W, records: &[PrimeIdealRecord]) -> std::io::Result<()> {
    writeln!(w, "norm,angle,class,a,b")?;
    for r in records {
        writeln!(w, "{},{:e},{},{},{}", r.norm, r.angle, r.class.name(), r.a, r.b)?;
    }
    Ok(())
}
