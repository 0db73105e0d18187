use std::f64::consts::PI;

use gauss_sectors::ideal_stream::primes_up_to;
use gauss_sectors::special_functions::*;
use gauss_sectors::Error;
use num_complex::Complex64 as C;
use proptest::prelude::*;

/// ζ(s) = η(s)/(1 − 2^{1−s}) with η from Borwein's algorithm; the
/// normalised weights (d_k − d_n)/d_n stay in [−1, 0].
fn zeta_eta(s: C, n: usize) -> C {
    let nf = n as f64;
    let mut term = 1.0 / nf; // (n+i−1)! 4^i / ((n−i)! (2i)!) at i = 0, times n below
    let mut d = vec![0.0; n + 1];
    let mut acc = 0.0;
    for i in 0..=n {
        if i > 0 {
            let fi = i as f64;
            term *= (nf + fi - 1.0) * 4.0 * (nf - fi + 1.0) / ((2.0 * fi - 1.0) * (2.0 * fi));
        }
        acc += term;
        d[i] = nf * acc;
    }
    let dn = d[n];
    let mut eta = C::new(0.0, 0.0);
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = (d[k] - dn) / dn;
        eta += sign * w * (-s * ((k + 1) as f64).ln()).exp();
    }
    let eta = -eta;
    eta / (C::new(1.0, 0.0) - (C::new(1.0, 0.0) - s).scale(2f64.ln()).exp())
}

/// Alternating Σ (−1)^n a_n by averaging neighbouring partial sums repeatedly.
fn alternating(a: impl Fn(usize) -> f64, terms: usize, rounds: usize) -> f64 {
    let mut partial = Vec::with_capacity(terms);
    let mut s = 0.0;
    for n in 0..terms {
        s += if n % 2 == 0 { a(n) } else { -a(n) };
        partial.push(s);
    }
    let mut v = partial[terms - rounds - 1..].to_vec();
    for _ in 0..rounds {
        v = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    v[0]
}

fn gamma0_oracle() -> f64 {
    let n = 1000usize;
    let h: f64 = (1..=n).map(|k| 1.0 / k as f64).rev().sum();
    let nf = n as f64;
    h - nf.ln() - 1.0 / (2.0 * nf) + 1.0 / (12.0 * nf.powi(2)) - 1.0 / (120.0 * nf.powi(4)) + 1.0 / (252.0 * nf.powi(6))
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

#[test]
fn borwein_oracle_sanity() {
    assert!((zeta_eta(c(2.0, 0.0), 60) - PI * PI / 6.0).norm() < 1e-14);
}

#[test]
fn zeta_matches_eta_grid() {
    let mut worst: f64 = 0.0;
    for sigma in [0.6, 0.75, 0.9, 1.3, 2.0, 3.0] {
        for i in -10..=10 {
            let t = 5.0 * i as f64 + 0.37;
            let s = c(sigma, t);
            let ours = zeta(s).unwrap();
            let oracle = zeta_eta(s, 140);
            let err = (ours.value - oracle).norm();
            worst = worst.max(err / oracle.norm().max(1.0));
            assert!(err <= 1e-11 * oracle.norm().max(1.0), "s = {s}: {} vs {oracle}", ours.value);
            assert!(ours.abs_error_bound.is_finite());
        }
    }
    assert!(worst < 1e-11);
}

#[test]
fn zeta_two_and_pole() {
    let z = zeta(c(2.0, 0.0)).unwrap();
    assert!((z.value.re - PI * PI / 6.0).abs() < 1e-12 && z.value.im.abs() < 1e-15);
    assert_eq!(zeta(c(1.0, 0.0)).unwrap_err(), Error::Pole(1.0));
    assert!(matches!(zeta(c(-0.5, 1.0)), Err(Error::Domain(_))));
}

#[test]
fn residue_at_one() {
    for k in 2..=8 {
        // s − 1 exactly as represented
        let s = 1.0 + 10f64.powi(-k);
        let h = s - 1.0;
        let v = zeta(c(s, 0.0)).unwrap().value.re * h;
        // (s−1)ζ(s) = 1 + γ₀(s−1) + O((s−1)²)
        assert!((v - 1.0).abs() < 2.0 * h, "k={k}: {v}");
        // next Laurent term is O(h); rounding in v is O(ε/h) after dividing by h
        assert!(((v - 1.0) / h - gamma0_oracle()).abs() < 0.1 * h + 1e-13 / h);
    }
}

#[test]
fn zeta_prime_finite_difference() {
    for s in [c(2.0, 0.0), c(1.5, 3.0), c(0.7, 20.0)] {
        let h = 1e-6;
        let fd = (zeta(s + h).unwrap().value - zeta(s - h).unwrap().value) / (2.0 * h);
        let d = zeta_prime(s).unwrap().value;
        assert!((fd - d).norm() < 1e-8 * d.norm().max(1.0), "s={s}: {fd} vs {d}");
    }
}

#[test]
fn log_derivative_consistency() {
    let s = c(1.2, 7.0);
    let q = zeta_prime(s).unwrap().value / zeta(s).unwrap().value;
    assert!((zeta_log_derivative(s).unwrap().value - q).norm() < 1e-12);
}

#[test]
fn hurwitz_at_one_is_zeta() {
    for s in [c(2.0, 0.0), c(0.8, 12.0), c(3.0, -4.0)] {
        let a = hurwitz_zeta(s, 1.0).unwrap().value;
        let b = zeta(s).unwrap().value;
        assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
    }
}

#[test]
fn l_at_one_and_two() {
    let l1_oracle = alternating(|n| 1.0 / (2 * n + 1) as f64, 4000, 40);
    let cat_oracle = alternating(|n| 1.0 / ((2 * n + 1) as f64).powi(2), 4000, 40);
    assert!((l1_oracle - PI / 4.0).abs() < 1e-13);
    assert!((cat_oracle - CATALAN).abs() < 1e-13);
    let l1 = dirichlet_l(c(1.0, 0.0)).unwrap().value;
    let l2 = dirichlet_l(c(2.0, 0.0)).unwrap().value;
    assert!((l1.re - l1_oracle).abs() < 1e-12 && l1.im.abs() < 1e-15);
    assert!((l2.re - cat_oracle).abs() < 1e-12);
}

#[test]
fn l_prime_finite_difference() {
    let s = c(1.0, 5.0);
    let h = 1e-6;
    let fd = (dirichlet_l(s + h).unwrap().value - dirichlet_l(s - h).unwrap().value) / (2.0 * h);
    assert!((fd - dirichlet_l_prime(s).unwrap().value).norm() < 1e-8);
}

#[test]
fn gamma0_value() {
    let g = stieltjes_gamma0();
    assert!((g - gamma0_oracle()).abs() < 1e-12);
    assert!(g < 0.58);
}

#[test]
fn zeta_kernel_tends_to_two_gamma0() {
    let g = gamma0_oracle();
    for k in 1..=8 {
        let b = c(0.0, 10f64.powi(-k));
        let v = zeta_kernel(b).unwrap().value;
        assert!((v - 2.0 * g).norm() < 10f64.powi(-k) * 10.0, "k={k}: {v}");
    }
    assert!((zeta_kernel(c(0.0, 0.0)).unwrap().value.re - 2.0 * g).abs() < 1e-12);
    // against the raw log-derivatives away from zero
    let b = c(0.0, 0.3);
    let raw = zeta_log_derivative(c(1.0, 0.0) - 2.0 * b).unwrap().value + zeta_log_derivative(c(1.0, 0.0) + 2.0 * b).unwrap().value;
    assert!((zeta_kernel(b).unwrap().value - raw).norm() < 1e-11);
}

#[test]
fn l_kernel_at_zero() {
    let direct = 2.0 * dirichlet_l_log_derivative(c(1.0, 0.0)).unwrap().value;
    assert!((l_kernel(c(0.0, 0.0)).unwrap().value - direct).norm() < 1e-13);
}

#[test]
fn gamma_ratio_examples() {
    assert_eq!(gamma_ratio(0.0, 7).unwrap(), 1.0);
    let k = 10_000u64;
    let approx = (0.5 + 2.0 * k as f64).powf(-0.2);
    assert!((gamma_ratio(0.1, k).unwrap() / approx - 1.0).abs() < 1e-4);
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let v = gamma_ratio(0.1, k).unwrap();
        assert!(v < prev);
        prev = v;
    }
    assert!(gamma_ratio(0.3, 10_000_000).unwrap().is_finite());
}

#[test]
fn a_prime_single_term_and_symmetry() {
    let t = a_prime_term(3f64.ln(), c(0.0, 0.0));
    assert!((t.re + 3f64.ln() / 4.0).abs() < 1e-15 && t.im == 0.0);
    let b = c(0.03, 0.7);
    let s = a_prime_sum(b, 20_000).unwrap().value;
    let sc = a_prime_sum(b.conj(), 20_000).unwrap().value;
    assert!((s.conj() - sc).norm() < 1e-14);
    assert!(matches!(a_prime_sum(c(0.125, 0.0), 1000), Err(Error::Domain(_))));
    assert!(matches!(a_prime_sum(c(0.0, 0.0), 10), Err(Error::Domain(_))));
}

#[test]
fn a_prime_at_zero_is_the_inert_sum() {
    let want: f64 = primes_up_to(100_000)
        .unwrap()
        .into_iter()
        .filter(|p| p % 4 == 3)
        .map(|p| -2.0 * (p as f64).ln() / ((p * p) as f64 - 1.0))
        .sum();
    let got = a_prime_sum(c(0.0, 0.0), 100_000).unwrap().value;
    assert!((got.re - want).abs() < 1e-12);
}

#[test]
fn a_prime_truncations_nest_within_tail_bounds() {
    for b in [c(0.0, 0.0), c(0.05, 2.0), c(-0.1, 0.3)] {
        let mut prev = a_prime_sum(b, 1000).unwrap();
        for p in [4000u64, 16_000, 64_000, 256_000] {
            let next = a_prime_sum(b, p).unwrap();
            assert!((next.value - prev.value).norm() <= prev.tail_bound, "β={b}, P={p}");
            assert!(next.tail_bound < prev.tail_bound);
            prev = next;
        }
    }
}

#[test]
fn g_at_diagonal_is_one() {
    let s = Shifts::new(c(0.03, 0.0), c(0.0, -0.02), c(0.03, 0.0), c(0.0, -0.02));
    for p in [2u64, 3, 5, 13] {
        assert!((local_factor_g(p, s).unwrap() - 1.0).norm() < 1e-12, "p={p}");
    }
}

#[test]
fn y_at_zero() {
    let z = Shifts::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    for p in [2u64, 3, 5] {
        assert!((local_factor_y(p, z).unwrap() - 1.0).norm() < 1e-15);
    }
    // p = 3 linear form: 1 − 1/3 − 1/3 + 1/3 + 1/3
    assert!((local_factor_y_linear(3, z).unwrap() - 1.0).norm() < 1e-15);
}

#[test]
fn y_agrees_with_linear_form_to_second_order() {
    let s = Shifts::new(c(0.02, 0.1), c(-0.01, 0.0), c(0.0, 0.3), c(0.03, -0.2));
    let primes = primes_up_to(20_000).unwrap();
    for class in [1u64, 3] {
        let p = *primes.iter().find(|&&p| p > 10_000 && p % 4 == class).unwrap();
        let diff = (local_factor_y(p, s).unwrap() - local_factor_y_linear(p, s).unwrap()).norm();
        assert!(diff < 50.0 / (p as f64).powi(2) * (p as f64).powf(0.25), "p={p}: {diff}");
    }
}

#[test]
fn g_domain_error() {
    let s = Shifts::new(c(0.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    assert!(matches!(local_factor_g(5, s), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zeta_conjugate_symmetry(sigma in 0.55f64..4.0, t in -60.0f64..60.0) {
        let s = c(sigma, t);
        prop_assume!((s - 1.0).norm() > 1e-3);
        let a = zeta(s).unwrap().value;
        let b = zeta(s.conj()).unwrap().value;
        prop_assert!((a.conj() - b).norm() <= 1e-13 * a.norm().max(1.0));
    }

    #[test]
    fn l_conjugate_symmetry(sigma in 0.55f64..4.0, t in -60.0f64..60.0) {
        let a = dirichlet_l(c(sigma, t)).unwrap().value;
        let b = dirichlet_l(c(sigma, -t)).unwrap().value;
        prop_assert!((a.conj() - b).norm() <= 1e-13 * a.norm().max(1.0));
    }

    #[test]
    fn gamma_ratio_reciprocal(a in -0.45f64..0.45, k in 1u64..10_000_000) {
        let p = gamma_ratio(a, k).unwrap() * gamma_ratio(-a, k).unwrap();
        prop_assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn g_closed_form_matches_series_inert(
        ar in -0.1f64..0.1, ai in -1.0f64..1.0,
        br in -0.1f64..0.1, bi in -1.0f64..1.0,
        gr in -0.1f64..0.1, gi in -1.0f64..1.0,
        dr in -0.1f64..0.1, di in -1.0f64..1.0,
    ) {
        let s = Shifts::new(c(ar, ai), c(br, bi), c(gr, gi), c(dr, di));
        let (series, tail) = local_factor_g_series(3, s, 60).unwrap();
        let closed = local_factor_g(3, s).unwrap();
        prop_assert!((series - closed).norm() <= 1e-10 + tail);
    }

    #[test]
    fn g_diagonal_random(ar in -0.1f64..0.1, ai in -2.0f64..2.0, br in -0.1f64..0.1, bi in -2.0f64..2.0, pi in 0usize..6) {
        let p = [2u64, 3, 5, 7, 13, 17][pi];
        let s = Shifts::new(c(ar, ai), c(br, bi), c(ar, ai), c(br, bi));
        prop_assert!((local_factor_g(p, s).unwrap() - 1.0).norm() < 1e-10);
    }
}
