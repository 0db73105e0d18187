//! Writing a prime p ≡ 1 (mod 4) as a sum of two squares.

use crate::error::{Error, Result};

use super::sieve::isqrt;

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if m < (1 << 32) {
        a * b % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Jacobi symbol (a/n) for odd n.
fn jacobi(mut a: u64, mut n: u64) -> i32 {
    let mut t = 1;
    a %= n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Square root of −1 modulo a prime p ≡ 1 (mod 4).
fn sqrt_minus_one(p: u64) -> Result<u64> {
    let c = if p % 8 == 5 {
        2
    } else {
        let mut c = 3;
        loop {
            match jacobi(c, p) {
                -1 => break c,
                0 => return Err(Error::Invariant(format!("{p} has factor in common with {c}"))),
                _ => {}
            }
            c += 2;
            if c > 10_000 {
                return Err(Error::Invariant(format!("no non-residue found below 10000 for {p}")));
            }
        }
    };
    let x = pow_mod(c, (p - 1) / 4, p);
    if mul_mod(x, x, p) != p - 1 {
        return Err(Error::Invariant(format!("no square root of -1 modulo {p}; not prime")));
    }
    Ok(x)
}

/// Returns (a, b) with a² + b² = p and a > b > 0.
pub fn two_square_decompose(p: u64) -> Result<(u64, u64)> {
    if p % 4 != 1 {
        return Err(Error::Domain(format!("{p} is not 1 mod 4")));
    }
    if p == 1 {
        return Err(Error::Domain("1 is not prime".into()));
    }
    let x = sqrt_minus_one(p)?;
    // Euclidean descent: the first remainder below sqrt(p) is one component.
    let root = isqrt(p);
    let (mut r0, mut r1) = (p, if x > p / 2 { p - x } else { x });
    while r1 > root {
        let r2 = r0 % r1;
        r0 = r1;
        r1 = r2;
    }
    let a = r1;
    let rest = p - a * a;
    let b = isqrt(rest);
    if b * b != rest || b == 0 {
        return Err(Error::Invariant(format!("descent failed for {p}")));
    }
    Ok(if a > b { (a, b) } else { (b, a) })
}
