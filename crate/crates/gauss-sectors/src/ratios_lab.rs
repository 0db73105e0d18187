//! Brute-force checks of the ratios-recipe ingredients: Hecke coefficients,
//! their averages over the family, Γ-factor averages and the Euler-product
//! lemmas.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal_stream::{primes_up_to, reduced_angle, two_square_decompose};
use crate::special_functions::{
    a_prime_sum, coefficient_delta, gamma_ratio, local_factor_g, local_factor_y, PrimeClass, Shifts,
};
use crate::summation::ComplexNeumaier;

type C = Complex64;

/// A_k(p^l) from the closed case formula.
pub fn a_k(class: PrimeClass, theta: f64, k: i64, l: u32) -> C {
    match class {
        PrimeClass::OneMod4 => {
            // Σ_{j=0}^{l} e^{(l−2j)·4ikθ}
            let mut acc = C::new(0.0, 0.0);
            for j in 0..=l as i64 {
                let e = (l as i64 - 2 * j) as f64 * 4.0 * k as f64 * theta;
                acc += C::from_polar(1.0, e);
            }
            acc
        }
        PrimeClass::ThreeMod4 => C::new(if l % 2 == 0 { 1.0 } else { 0.0 }, 0.0),
        PrimeClass::Two => C::new(if (l as i64 * k).rem_euclid(2) == 0 { 1.0 } else { -1.0 }, 0.0),
    }
}

/// μ_k(p^h), the coefficients of 1/L_k; h ≤ 2.
pub fn mu_k(class: PrimeClass, theta: f64, k: i64, h: u32) -> Result<C> {
    Ok(match (h, class) {
        (0, _) => C::new(1.0, 0.0),
        (1, _) => -a_k(class, theta, k, 1),
        (2, PrimeClass::ThreeMod4) => C::new(-1.0, 0.0),
        (2, PrimeClass::OneMod4) => C::new(1.0, 0.0),
        (2, PrimeClass::Two) => C::new(0.0, 0.0),
        _ => return Err(Error::Domain(format!("μ_k(p^h) tabulated only for h ≤ 2, got h = {h}"))),
    })
}

/// A_k(p^l) by summing Ξ_k over the ideals of norm p^l.
pub fn a_k_from_ideals(p: u64, k: i64, l: u32) -> Result<C> {
    let class = PrimeClass::of(p)?;
    let xi = |x: i128, y: i128| C::from_polar(1.0, 4.0 * k as f64 * reduced_angle(x, y));
    let mul = |a: (i128, i128), b: (i128, i128)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let pow = |g: (i128, i128), e: u32| (0..e).fold((1i128, 0i128), |acc, _| mul(acc, g));
    Ok(match class {
        PrimeClass::Two => {
            let g = pow((1, 1), l);
            xi(g.0, g.1)
        }
        PrimeClass::ThreeMod4 => {
            if l % 2 == 1 {
                C::new(0.0, 0.0)
            } else {
                let g = pow((p as i128, 0), l / 2);
                xi(g.0, g.1)
            }
        }
        PrimeClass::OneMod4 => {
            let (a, b) = two_square_decompose(p)?;
            let (pi, pib) = ((a as i128, b as i128), (a as i128, -(b as i128)));
            let mut acc = C::new(0.0, 0.0);
            for e in 0..=l {
                let g = mul(pow(pi, e), pow(pib, l - e));
                acc += xi(g.0, g.1);
            }
            acc
        }
    })
}

/// θ_p for a rational prime: the split angle, or 0 otherwise.
pub fn prime_angle(p: u64) -> Result<f64> {
    match PrimeClass::of(p)? {
        PrimeClass::OneMod4 => {
            let (a, b) = two_square_decompose(p)?;
            Ok(reduced_angle(a as i128, b as i128))
        }
        _ => Ok(0.0),
    }
}

/// ⟨μ_k(p^h) μ_k(p^l) A_k(p^n) A_k(p^m)⟩ over 0 < |k| ≤ K.
pub fn delta_bruteforce(class: PrimeClass, theta: f64, m: u32, n: u32, h: u32, l: u32, k_avg: u64) -> Result<f64> {
    if k_avg == 0 {
        return Err(Error::Domain("K_avg must be positive".into()));
    }
    mu_k(class, theta, 1, h)?;
    mu_k(class, theta, 1, l)?;
    let ks: Vec<i64> = (1..=k_avg as i64).flat_map(|k| [k, -k]).collect();
    let parts: Vec<C> = ks
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = ComplexNeumaier::new();
            for &k in chunk {
                let v = mu_k(class, theta, k, h).unwrap()
                    * mu_k(class, theta, k, l).unwrap()
                    * a_k(class, theta, k, n)
                    * a_k(class, theta, k, m);
                acc.add(v);
            }
            acc.value()
        })
        .collect();
    let mut acc = ComplexNeumaier::new();
    for p in parts {
        acc.add(p);
    }
    Ok(acc.value().re / ks.len() as f64)
}

/// One row of the δ table with the prime used to exercise it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCase {
    pub p: u64,
    pub m: u32,
    pub n: u32,
    pub h: u32,
    pub l: u32,
    pub expected: f64,
}

/// Twelve representatives covering every branch of the δ table.
pub fn coefficient_cases() -> Vec<CoefficientCase> {
    let rows: [(u64, [u32; 4]); 12] = [
        (5, [1, 1, 0, 0]),
        (5, [2, 0, 2, 0]),
        (5, [1, 0, 0, 1]),
        (5, [1, 1, 1, 1]),
        (5, [2, 0, 1, 1]),
        (5, [1, 0, 0, 0]),
        (3, [2, 2, 0, 0]),
        (3, [2, 2, 0, 2]),
        (3, [1, 1, 0, 0]),
        (2, [2, 0, 1, 1]),
        (2, [1, 0, 0, 1]),
        (2, [1, 0, 0, 0]),
    ];
    rows.iter()
        .map(|&(p, [m, n, h, l])| CoefficientCase {
            p,
            m,
            n,
            h,
            l,
            expected: coefficient_delta(PrimeClass::of(p).unwrap(), m, n, h, l) as f64,
        })
        .collect()
}

/// ⟨Γ(1/2−α+|2k|)/Γ(1/2+α+|2k|)⟩ over 0 < |k| ≤ K and (2K)^{−2α}/(1−2α).
pub fn gamma_average_check(alpha: f64, k: u64) -> Result<(f64, f64)> {
    if !(alpha > -0.5 && alpha < 0.5) || k == 0 {
        return Err(Error::Domain(format!("need |α| < 1/2 and K ≥ 1, got α = {alpha}, K = {k}")));
    }
    let vals = (1..=k).map(|j| gamma_ratio(alpha, j)).collect::<Result<Vec<f64>>>()?;
    let emp = crate::summation::sum(&vals) / k as f64;
    let pred = (2.0 * k as f64).powf(-2.0 * alpha) / (1.0 - 2.0 * alpha);
    Ok((emp, pred))
}

/// max_p |G_p(α, β, α, β) − 1|.
pub fn lemma_a_is_1_check(alpha: C, beta: C, primes: &[u64]) -> Result<f64> {
    let s = Shifts::new(alpha, beta, alpha, beta);
    let mut worst = 0.0f64;
    for &p in primes {
        worst = worst.max((local_factor_g(p, s)? - 1.0).norm());
    }
    Ok(worst)
}

/// log A_β(α) = Σ_p log(G_p/Y_p)(−α, −β, α, β) over p ≤ P_max.
fn log_a_beta(alpha: C, beta: C, primes: &[u64]) -> Result<C> {
    let s = Shifts::new(-alpha, -beta, alpha, beta);
    let terms = primes
        .par_iter()
        .map(|&p| Ok((local_factor_g(p, s)? / local_factor_y(p, s)?).ln()))
        .collect::<Result<Vec<C>>>()?;
    let mut acc = ComplexNeumaier::new();
    for t in terms {
        acc.add(t);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub finite_difference: C,
    pub formula: C,
    pub relative_gap: f64,
    /// Step outside the range where the central difference is well conditioned.
    pub conditioning_warning: bool,
}

/// Central difference of A_β at α = −β against −2·(inert prime sum).
pub fn lemma_a_derivative_check(beta: C, step: f64, p_max: u64) -> Result<DerivativeCheck> {
    let primes = primes_up_to(p_max)?;
    let a0 = -beta;
    let up = log_a_beta(a0 + step, beta, &primes)?.exp();
    let dn = log_a_beta(a0 - step, beta, &primes)?.exp();
    let fd = (up - dn) / (2.0 * step);
    let formula = -2.0 * a_prime_sum(beta, p_max)?.value;
    let gap = (fd - formula).norm() / formula.norm().max(f64::MIN_POSITIVE);
    Ok(DerivativeCheck {
        finite_difference: fd,
        formula,
        relative_gap: gap,
        conditioning_warning: !(1e-6..=1e-2).contains(&step),
    })
}

/// Factorization of n into (p, e).
fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// A_k(n) and μ_k(n) for 1 ≤ n ≤ N by multiplicativity.
pub fn coefficient_vectors(k: i64, n_max: usize) -> Result<(Vec<C>, Vec<C>)> {
    let mut a = vec![C::new(0.0, 0.0); n_max + 1];
    let mut mu = vec![C::new(0.0, 0.0); n_max + 1];
    for n in 1..=n_max {
        let (mut av, mut mv) = (C::new(1.0, 0.0), C::new(1.0, 0.0));
        for (p, e) in factor(n as u64) {
            let class = PrimeClass::of(p)?;
            let th = prime_angle(p)?;
            av *= a_k(class, th, k, e);
            mv *= if e <= 2 { mu_k(class, th, k, e)? } else { C::new(0.0, 0.0) };
        }
        a[n] = av;
        mu[n] = mv;
    }
    Ok((a, mu))
}

/// max over 2 ≤ n ≤ N of |Σ_{d|n} μ_k(d) A_k(n/d)|, which must vanish, and
/// |(Σ μ n^{−s})(Σ A n^{−s}) − 1| for the truncated series at real s.
pub fn coefficient_inverse_check(k: i64, n_max: usize, s: f64) -> Result<(f64, f64)> {
    let (a, mu) = coefficient_vectors(k, n_max)?;
    let mut worst = 0.0f64;
    for n in 2..=n_max {
        let mut acc = ComplexNeumaier::new();
        let mut d = 1;
        while d * d <= n {
            if n % d == 0 {
                acc.add(mu[d] * a[n / d]);
                if d * d != n {
                    acc.add(mu[n / d] * a[d]);
                }
            }
            d += 1;
        }
        worst = worst.max(acc.value().norm());
    }
    let series = |v: &[C]| {
        let mut acc = ComplexNeumaier::new();
        for (n, c) in v.iter().enumerate().skip(1) {
            acc.add(c * (n as f64).powf(-s));
        }
        acc.value()
    };
    let prod = series(&mu) * series(&a);
    Ok((worst, (prod - 1.0).norm()))
}

/// max |A_k(p^l) − Σ_{N(𝔞)=p^l} Ξ_k(𝔞)| over the given ranges.
pub fn multiplicativity_check(primes: &[u64], l_max: u32, k_max: i64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &p in primes {
        let class = PrimeClass::of(p)?;
        let th = prime_angle(p)?;
        for l in 0..=l_max {
            for k in -k_max..=k_max {
                let d = (a_k(class, th, k, l) - a_k_from_ideals(p, k, l)?).norm();
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub parameters: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, parameters: String, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            parameters,
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationOptions {
    pub k_avg: u64,
    pub delta_tol: f64,
    pub gamma_alpha: f64,
    pub gamma_k: u64,
    /// Allowed spread of the error-halving factor around 2.
    pub gamma_halving_tol: f64,
    pub lemma_tol: f64,
    pub derivative_beta: f64,
    pub derivative_step: f64,
    pub derivative_p_max: u64,
    pub derivative_tol: f64,
}

impl Default for VerificationOptions {
    fn default() -> Self {
        Self {
            k_avg: 100_000,
            delta_tol: 5e-2,
            gamma_alpha: 0.1,
            gamma_k: 10_000,
            gamma_halving_tol: 0.25,
            lemma_tol: 1e-10,
            derivative_beta: 0.02,
            derivative_step: 1e-4,
            derivative_p_max: 100_000,
            derivative_tol: 1e-4,
        }
    }
}

pub fn run_verification_suite(opts: &VerificationOptions) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    for c in coefficient_cases() {
        let class = PrimeClass::of(c.p)?;
        let th = prime_angle(c.p)?;
        let got = delta_bruteforce(class, th, c.m, c.n, c.h, c.l, opts.k_avg)?;
        checks.push(CheckResult::new(
            "delta_bruteforce",
            format!("p={} m={} n={} h={} l={} K={} expected={}", c.p, c.m, c.n, c.h, c.l, opts.k_avg, c.expected),
            (got - c.expected).abs(),
            opts.delta_tol,
        ));
    }

    let (e1, p1) = gamma_average_check(opts.gamma_alpha, opts.gamma_k)?;
    let (e2, p2) = gamma_average_check(opts.gamma_alpha, 2 * opts.gamma_k)?;
    let halving = (e1 - p1).abs() / (e2 - p2).abs();
    checks.push(CheckResult::new(
        "gamma_average_halving",
        format!("alpha={} K={} factor={halving:.6}", opts.gamma_alpha, opts.gamma_k),
        (halving / 2.0 - 1.0).abs(),
        opts.gamma_halving_tol,
    ));

    let small = [2u64, 3, 5, 13, 17];
    for (a, b) in [(C::new(0.05, 0.0), C::new(0.01, -0.03)), (C::new(0.0, 0.0), C::new(0.0, 0.0)), (C::new(-0.07, 0.2), C::new(0.03, 1.5))] {
        checks.push(CheckResult::new(
            "lemma_A_is_1",
            format!("alpha={a} beta={b} primes={small:?}"),
            lemma_a_is_1_check(a, b, &small)?,
            opts.lemma_tol,
        ));
    }

    let d = lemma_a_derivative_check(C::new(opts.derivative_beta, 0.0), opts.derivative_step, opts.derivative_p_max)?;
    checks.push(CheckResult::new(
        "lemma_A_derivative",
        format!(
            "beta={} step={} P_max={} fd={} formula={}",
            opts.derivative_beta, opts.derivative_step, opts.derivative_p_max, d.finite_difference, d.formula
        ),
        d.relative_gap,
        opts.derivative_tol,
    ));

    checks.push(CheckResult::new(
        "A_k_multiplicativity",
        "p in {2,5,13}, l<=4, |k|<=20".into(),
        multiplicativity_check(&[2, 5, 13], 4, 20)?,
        1e-9,
    ));
    let mut worst = 0.0f64;
    for k in 0..=5 {
        let (conv, _) = coefficient_inverse_check(k, 2000, 2.0)?;
        worst = worst.max(conv);
    }
    checks.push(CheckResult::new(
        "coefficient_inverse",
        "k<=5, n<=2000, Dirichlet convolution".into(),
        worst,
        1e-9,
    ));
    Ok(VerificationReport { checks })
}
