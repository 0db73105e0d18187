use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use gauss_sectors::ideal_stream::*;
use gauss_sectors::{CacheError, Error};
use proptest::prelude::*;

fn is_prime_td(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn smallest_factor(n: u64) -> u64 {
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Every ideal has exactly one generator a + bi with a > 0, b ≥ 0. Keep the
/// prime powers and return (norm, angle, Λ).
fn brute_force_terms(x: u64) -> Vec<(u64, f64, f64)> {
    let mut out = Vec::new();
    let mut a = 1u64;
    while a * a <= x {
        let mut b = 0u64;
        while a * a + b * b <= x {
            let n = a * a + b * b;
            if n > 1 {
                let p = smallest_factor(n);
                let mut m = n;
                while m % p == 0 {
                    m /= p;
                }
                if m == 1 {
                    let keep = match p % 4 {
                        1 => gcd(a, b) == 1,
                        3 => b == 0,
                        _ => true,
                    };
                    if keep {
                        // Λ = log N(𝔭): N(𝔭) = p² for inert p
                        let np = if p % 4 == 3 { p * p } else { p };
                        out.push((n, (b as f64).atan2(a as f64), (np as f64).ln()));
                    }
                }
            }
            b += 1;
        }
        a += 1;
    }
    out
}

#[test]
fn sieve_small_cases() {
    let p: Vec<u64> = sieve_primes(10).unwrap().iter().map(|r| r.p).collect();
    assert_eq!(p, vec![2, 3, 5, 7]);
    assert!(sieve_primes(1).unwrap().is_empty());
    let classes: Vec<ResidueClass> = sieve_primes(10).unwrap().iter().map(|r| r.class).collect();
    assert_eq!(
        classes,
        vec![ResidueClass::Two, ResidueClass::ThreeMod4, ResidueClass::OneMod4, ResidueClass::ThreeMod4]
    );
}

#[test]
fn sieve_matches_trial_division_small_segments() {
    // small segments force many segment boundaries
    let cfg = SieveConfig {
        segment_len: 1000,
        ..SieveConfig::default()
    };
    let got: Vec<u64> = sieve_primes_with(200_000, cfg).unwrap().iter().map(|r| r.p).collect();
    let want: Vec<u64> = (0..=200_000).filter(|&n| is_prime_td(n)).collect();
    assert_eq!(got, want);
}

#[test]
fn resource_budget_reported() {
    let cfg = SieveConfig {
        segment_len: 1 << 20,
        memory_budget: 1024,
    };
    match sieve_primes_with(1_000_000, cfg) {
        Err(Error::Resource { segment_len, .. }) => assert_eq!(segment_len, 1 << 20),
        other => panic!("expected resource error, got {other:?}"),
    }
}

#[test]
fn two_squares_examples() {
    assert_eq!(two_square_decompose(5).unwrap(), (2, 1));
    assert_eq!(two_square_decompose(13).unwrap(), (3, 2));
    assert!(matches!(two_square_decompose(1_000_003), Err(Error::Domain(_))));
    let (a, b) = two_square_decompose(999_999_937).unwrap();
    assert_eq!(a as u128 * a as u128 + b as u128 * b as u128, 999_999_937);
    assert!(a > b && b > 0);
}

#[test]
fn composite_is_an_invariant_violation() {
    // 65 = 5·13 ≡ 1 (mod 4) is composite
    assert!(matches!(two_square_decompose(65), Err(Error::Invariant(_)) | Err(Error::Domain(_))));
}

#[test]
fn prime_ideals_at_five_and_nine() {
    let r = enumerate_prime_ideals(5).unwrap();
    assert_eq!(r.len(), 3);
    assert_eq!((r[0].norm, r[0].class), (2, IdealClass::Ramified));
    assert!((r[0].angle - FRAC_PI_4).abs() < 1e-15);
    assert!((r[1].angle - 0.5f64.atan()).abs() < 1e-15);
    assert!((r[2].angle - 2f64.atan()).abs() < 1e-15);
    let r9 = enumerate_prime_ideals(9).unwrap();
    assert_eq!(r9.len(), 4);
    let last = r9.last().unwrap();
    assert_eq!((last.norm, last.angle, last.class, last.a, last.b), (9, 0.0, IdealClass::Inert, 3, 0));
}

#[test]
fn prime_ideal_invariants_at_1e4() {
    let r = enumerate_prime_ideals(10_000).unwrap();
    let primes = primes_up_to(10_000).unwrap();
    let split = r.iter().filter(|x| x.class == IdealClass::Split).count();
    assert_eq!(split, 2 * primes.iter().filter(|&&p| p % 4 == 1).count());
    let inert = r.iter().filter(|x| x.class == IdealClass::Inert).count();
    assert_eq!(inert, primes.iter().filter(|&&p| p % 4 == 3 && p <= 100).count());
    let mut split_angles: Vec<f64> = r.iter().filter(|x| x.class == IdealClass::Split).map(|x| x.angle).collect();
    let mut reflected: Vec<f64> = split_angles.iter().map(|a| std::f64::consts::FRAC_PI_2 - a).collect();
    split_angles.sort_by(f64::total_cmp);
    reflected.sort_by(f64::total_cmp);
    for (a, b) in split_angles.iter().zip(&reflected) {
        assert!((a - b).abs() < 1e-14);
    }
    for x in &r {
        if x.class == IdealClass::Split {
            assert_eq!(x.a * x.a + x.b * x.b, x.norm);
        }
    }
    // ordered by (norm, angle)
    assert!(r.windows(2).all(|w| (w[0].norm, w[0].angle) <= (w[1].norm, w[1].angle)));
}

#[test]
fn weighted_term_examples() {
    let t30 = enumerate_weighted_terms(30, 1.0).unwrap();
    let t25: Vec<_> = t30.iter().filter(|t| t.norm == 25).collect();
    assert_eq!(t25.len(), 2);
    let want = (2.0 * 0.5f64.atan()).rem_euclid(std::f64::consts::FRAC_PI_2);
    assert!(t25.iter().any(|t| (t.angle - want).abs() < 1e-14 && t.exponent == 2));
    assert!(t25.iter().all(|t| (t.weight - 5f64.ln()).abs() < 1e-15));

    let t4 = enumerate_weighted_terms(4, 1.0).unwrap();
    assert!(t4.iter().any(|t| t.norm == 2 && (t.angle - FRAC_PI_4).abs() < 1e-15 && t.exponent == 1));
    assert!(t4.iter().any(|t| t.norm == 4 && t.angle == 0.0 && t.exponent == 2));
}

#[test]
fn exponent_one_terms_are_the_prime_ideals() {
    let x = 20_000;
    let mut a: Vec<(u64, u64)> = enumerate_weighted_terms(x, 1.0)
        .unwrap()
        .iter()
        .filter(|t| t.exponent == 1)
        .map(|t| (t.norm, t.angle.to_bits()))
        .collect();
    let mut b: Vec<(u64, u64)> = enumerate_prime_ideals(x).unwrap().iter().map(|r| (r.norm, r.angle.to_bits())).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn weighted_terms_match_generator_brute_force() {
    let x = 100_000;
    let mut got: Vec<(u64, f64, f64)> = enumerate_weighted_terms(x, 1.0)
        .unwrap()
        .iter()
        .map(|t| (t.norm, t.angle, t.weight))
        .collect();
    let mut want = brute_force_terms(x);
    let key = |v: &(u64, f64, f64)| (v.0, v.1.to_bits());
    got.sort_by_key(key);
    want.sort_by_key(key);
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.0, w.0);
        assert!((g.1 - w.1).abs() < 1e-13, "{g:?} vs {w:?}");
        assert!((g.2 - w.2).abs() < 1e-14);
    }
    let total: f64 = got.iter().map(|t| t.2).sum();
    let oracle: f64 = want.iter().map(|t| t.2).sum();
    assert!((total - oracle).abs() < 1e-8 * oracle);
    // Chebyshev heuristic: Σ Λ over ideals of norm ≤ X ≈ X
    assert!((total / x as f64 - 1.0).abs() < 0.01, "total {total} oracle {oracle}");
}

#[test]
fn ideals_csv_header() {
    let mut buf = Vec::new();
    write_ideals_csv(&mut buf, &enumerate_prime_ideals(5).unwrap()).unwrap();
    let s = String::from_utf8(buf).unwrap();
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("norm,angle,class,a,b"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    let table = PrimeTable::build(50_000).unwrap();
    cache_store(&path, &table).unwrap();
    assert_eq!(cache_load(&path, 50_000).unwrap(), table);
}

fn stored(bound: u64) -> (tempfile::TempDir, std::path::PathBuf, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.bin");
    cache_store(&path, &PrimeTable::build(bound).unwrap()).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    (dir, path, bytes)
}

fn rewrite(path: &std::path::Path, bytes: &[u8]) {
    let mut f = std::fs::File::create(path).unwrap();
    f.write_all(bytes).unwrap();
}

#[test]
fn cache_errors_are_distinct() {
    let (_d, path, bytes) = stored(1000);

    let mut b = bytes.clone();
    b[0] ^= 0xff;
    rewrite(&path, &b);
    assert_eq!(cache_load(&path, 1000), Err(CacheError::CorruptHeader.into()));

    let mut b = bytes.clone();
    b[8] = 9;
    rewrite(&path, &b);
    assert_eq!(cache_load(&path, 1000), Err(CacheError::Version(9).into()));

    let b = &bytes[..bytes.len() - 5];
    rewrite(&path, b);
    assert!(matches!(cache_load(&path, 1000), Err(Error::Cache(CacheError::Truncated { .. }))));

    rewrite(&path, &bytes[..10]);
    assert_eq!(cache_load(&path, 1000), Err(CacheError::CorruptHeader.into()));

    rewrite(&path, &bytes);
    assert_eq!(
        cache_load(&path, 2000),
        Err(CacheError::BoundMismatch {
            found: 1000,
            requested: 2000
        }
        .into())
    );

    // break a² + b² = p in the third record (p = 5)
    let mut b = bytes.clone();
    let off = 32 + 2 * 16 + 8;
    b[off] = b[off].wrapping_add(1);
    rewrite(&path, &b);
    assert_eq!(cache_load(&path, 1000), Err(CacheError::CorruptRecord(2).into()));
}

#[test]
fn sieve_counts_at_1e6() {
    assert_eq!(sieve_primes(1_000_000).unwrap().len(), 78_498);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_terms_are_well_formed(x in 2u64..5000) {
        for t in enumerate_weighted_terms(x, 1.0).unwrap() {
            prop_assert!(t.norm <= x);
            prop_assert!((0.0..std::f64::consts::FRAC_PI_2).contains(&t.angle));
            prop_assert!((t.weight - (t.norm as f64).ln() / t.exponent as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_is_exact(i in 0usize..9000) {
        let ps: Vec<u64> = primes_up_to(200_000).unwrap().into_iter().filter(|p| p % 4 == 1).collect();
        let p = ps[i % ps.len()];
        let (a, b) = two_square_decompose(p).unwrap();
        prop_assert_eq!(a * a + b * b, p);
        prop_assert!(a > b && b > 0);
    }

    #[test]
    fn reduced_angle_is_rotation_invariant(x in -1000i128..1000, y in -1000i128..1000) {
        prop_assume!(x != 0 || y != 0);
        let a = reduced_angle(x, y);
        prop_assert!((0.0..std::f64::consts::FRAC_PI_2).contains(&a));
        // multiplying by i does not change the ideal
        prop_assert_eq!(a.to_bits(), reduced_angle(-y, x).to_bits());
    }
}
