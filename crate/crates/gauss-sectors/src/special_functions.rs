//! ζ, the mod-4 L-function, Γ-ratios and the prime sums feeding the
//! lower-order constants.
//!
//! ζ and L are evaluated by Euler–Maclaurin on Hurwitz sums with Bernoulli
//! terms through B₁₆. Derivatives ride along as dual numbers, so the same
//! code path yields ζ′ and L′ with no finite differencing.

use std::f64::consts::{LN_2, PI};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal_stream::primes_up_to;
use crate::summation::{ComplexNeumaier, Neumaier};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// B_{2j}/(2j)! for j = 1..=9.
const BERNOULLI_OVER_FACT: [f64; 9] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
];
/// Bernoulli terms kept; the last entry above only feeds the error bound.
const EM_ORDER: usize = 8;
const EM_MIN_TERMS: usize = 50;

/// A value on (or near) a vertical line with its error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSample {
    pub s: C,
    pub value: C,
    pub abs_error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dual {
    v: C,
    d: C,
}

impl Dual {
    fn var(s: C) -> Self {
        Self { v: s, d: ONE }
    }
    fn konst(v: C) -> Self {
        Self { v, d: ZERO }
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Self { v: e, d: e * self.d }
    }
    fn scale(self, c: C) -> Self {
        Self { v: self.v * c, d: self.d * c }
    }
    /// x^{−self} for real x > 0.
    fn neg_pow_of(self, x: f64) -> Self {
        (-self).scale(C::new(x.ln(), 0.0)).exp()
    }
    /// (e^z − 1)/z, regular at 0.
    fn expm1_over(self) -> Self {
        let (e, de) = expm1_over(self.v);
        Self { v: e, d: de * self.d }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
        }
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}
impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}
impl Add<C> for Dual {
    type Output = Dual;
    fn add(self, c: C) -> Dual {
        Dual { v: self.v + c, d: self.d }
    }
}

/// E(z) = (e^z − 1)/z and E′(z).
fn expm1_over(z: C) -> (C, C) {
    if z.norm() < 0.5 {
        let mut e = ZERO;
        let mut de = ZERO;
        // z^n/(n+1)!
        let mut t = ONE;
        let mut zp = ONE;
        let mut fact = 1.0;
        for n in 0..24 {
            fact *= (n + 1) as f64;
            e += zp / fact;
            if n >= 1 {
                de += t * n as f64 / fact;
                t *= z;
            }
            zp *= z;
        }
        (e, de)
    } else {
        let ez = z.exp();
        let e = (ez - ONE) / z;
        let de = (z * ez - ez + ONE) / (z * z);
        (e, de)
    }
}

fn em_terms(s: C) -> usize {
    EM_MIN_TERMS.max((1.2 * s.im.abs()).ceil() as usize)
}

/// Σ_{j<N} (j+a)^{−s} + x^{−s}/2 + Bernoulli corrections, x = N + a,
/// without the x^{1−s}/(s−1) term. Returns the error bound of the
/// truncated Bernoulli series.
fn em_core(s: Dual, a: f64, n: usize) -> (Dual, f64) {
    let mut re = ComplexNeumaier::new();
    let mut de = ComplexNeumaier::new();
    for j in 0..n {
        let t = s.neg_pow_of(j as f64 + a);
        re.add(t.v);
        de.add(t.d);
    }
    let x = n as f64 + a;
    let xs = s.neg_pow_of(x);
    let mut acc = Dual {
        v: re.value(),
        d: de.value(),
    } + ZERO;
    acc = acc + xs.scale(C::new(0.5, 0.0));
    // poch · x^{−s−2j+1}
    let mut t = (s * xs).scale(C::new(1.0 / x, 0.0));
    for (j, &b) in BERNOULLI_OVER_FACT.iter().enumerate().take(EM_ORDER) {
        acc = acc + t.scale(C::new(b, 0.0));
        let m = 2.0 * (j + 1) as f64;
        let f = (s + C::new(m - 1.0, 0.0)) * (s + C::new(m, 0.0));
        t = (t * f).scale(C::new(1.0 / (x * x), 0.0));
    }
    let next = (t.v * BERNOULLI_OVER_FACT[EM_ORDER]).norm();
    let sigma = s.v.re + 2.0 * EM_ORDER as f64 + 1.0;
    let ratio = if sigma > 0.0 {
        (s.v + C::new(2.0 * EM_ORDER as f64 + 1.0, 0.0)).norm() / sigma
    } else {
        f64::INFINITY
    };
    // rounding in the direct sum
    let round = 8.0 * f64::EPSILON * n as f64 * a.powf(-s.v.re).max(1.0);
    (acc, next * ratio + round)
}

fn check_half_plane(s: C) -> Result<()> {
    if !(s.re > 0.0) || !s.im.is_finite() {
        return Err(Error::Domain(format!("need Re s > 0, got {s}")));
    }
    Ok(())
}

fn zeta_dual(s: C) -> Result<(Dual, f64)> {
    check_half_plane(s)?;
    if s == ONE {
        return Err(Error::Pole(1.0));
    }
    let n = em_terms(s);
    let sd = Dual::var(s);
    let (core, err) = em_core(sd, 1.0, n);
    let x = n as f64 + 1.0;
    // x^{1−s}/(s−1)
    let one_minus = Dual::konst(ONE) - sd;
    let pole = one_minus.scale(C::new(x.ln(), 0.0)).exp() / (sd + (-ONE));
    Ok((core + pole, err))
}

/// ζ(s) for Re s > 0, s ≠ 1.
pub fn zeta(s: C) -> Result<LineSample> {
    let (z, err) = zeta_dual(s)?;
    Ok(LineSample {
        s,
        value: z.v,
        abs_error_bound: err,
    })
}

/// ζ′(s) for Re s > 0, s ≠ 1.
pub fn zeta_prime(s: C) -> Result<LineSample> {
    let (z, err) = zeta_dual(s)?;
    let n = em_terms(s) as f64;
    Ok(LineSample {
        s,
        value: z.d,
        abs_error_bound: err * (n + 1.0).ln().max(1.0) * 2.0,
    })
}

/// ζ′/ζ(s).
pub fn zeta_log_derivative(s: C) -> Result<LineSample> {
    let (z, err) = zeta_dual(s)?;
    let value = z.d / z.v;
    let n = em_terms(s) as f64;
    let bound = err * (2.0 * (n + 1.0).ln().max(1.0) + value.norm()) / z.v.norm();
    Ok(LineSample {
        s,
        value,
        abs_error_bound: bound,
    })
}

/// R(u) = ζ(1+u) − 1/u as a dual number in u.
fn zeta_regular_part(u: C) -> Result<(Dual, f64)> {
    let s = ONE + u;
    check_half_plane(s)?;
    let n = em_terms(s);
    let ud = Dual::var(u);
    let (core, err) = em_core(ud + ONE, 1.0, n);
    let lx = (n as f64 + 1.0).ln();
    // (x^{−u} − 1)/u = −ln x · E(−u ln x)
    let pole = ud.scale(C::new(-lx, 0.0)).expm1_over().scale(C::new(-lx, 0.0));
    Ok((core + pole, err))
}

/// P(u) = ζ′/ζ(1+u) + 1/u, regular at u = 0 where it equals γ₀.
pub fn zeta_log_derivative_regular(u: C) -> Result<LineSample> {
    let (r, err) = zeta_regular_part(u)?;
    let den = ONE + u * r.v;
    let value = (u * r.d + r.v) / den;
    let n = em_terms(ONE + u) as f64;
    let bound = err * (1.0 + u.norm()) * (2.0 * (n + 1.0).ln().max(1.0) + value.norm()) / den.norm();
    Ok(LineSample {
        s: ONE + u,
        value,
        abs_error_bound: bound,
    })
}

/// ζ′/ζ(1+2β) + ζ′/ζ(1−2β), with the poles at β = 0 cancelled.
/// On Re β = 0 this is 2 Re ζ′/ζ(1+2it).
pub fn zeta_kernel(beta: C) -> Result<LineSample> {
    let a = zeta_log_derivative_regular(2.0 * beta)?;
    let b = zeta_log_derivative_regular(-2.0 * beta)?;
    Ok(LineSample {
        s: beta,
        value: a.value + b.value,
        abs_error_bound: a.abs_error_bound + b.abs_error_bound,
    })
}

/// ζ(s, a) for Re s > 0, s ≠ 1, 0 < a ≤ 1.
pub fn hurwitz_zeta(s: C, a: f64) -> Result<LineSample> {
    check_half_plane(s)?;
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("Hurwitz parameter {a} outside (0, 1]")));
    }
    if s == ONE {
        return Err(Error::Pole(1.0));
    }
    let n = em_terms(s);
    let (core, err) = em_core(Dual::var(s), a, n);
    let x = n as f64 + a;
    let pole = (ONE - s).scale_ln(x) / (s - ONE);
    Ok(LineSample {
        s,
        value: core.v + pole,
        abs_error_bound: err,
    })
}

trait ScaleLn {
    fn scale_ln(self, x: f64) -> C;
}
impl ScaleLn for C {
    /// x^self
    fn scale_ln(self, x: f64) -> C {
        (self * x.ln()).exp()
    }
}

fn dirichlet_l_dual(s: C) -> Result<(Dual, f64)> {
    check_half_plane(s)?;
    let n = em_terms(s);
    let sd = Dual::var(s);
    let (c1, e1) = em_core(sd, 0.25, n);
    let (c3, e3) = em_core(sd, 0.75, n);
    let a = n as f64 + 0.25;
    let b = n as f64 + 0.75;
    // (A^w − B^w)/(s−1) with w = 1−s, pole-free form A^w · ln(B/A) · E(w ln(B/A))
    let w = Dual::konst(ONE) - sd;
    let lr = (b / a).ln();
    let diff = w.scale(C::new(a.ln(), 0.0)).exp() * w.scale(C::new(lr, 0.0)).expm1_over().scale(C::new(lr, 0.0));
    let four = sd.neg_pow_of(4.0);
    Ok((four * (c1 - c3 + diff), (e1 + e3) * 4f64.powf(-s.re)))
}

/// L(s, χ) for the non-principal character mod 4.
pub fn dirichlet_l(s: C) -> Result<LineSample> {
    let (l, err) = dirichlet_l_dual(s)?;
    Ok(LineSample {
        s,
        value: l.v,
        abs_error_bound: err,
    })
}

pub fn dirichlet_l_prime(s: C) -> Result<LineSample> {
    let (l, err) = dirichlet_l_dual(s)?;
    let n = em_terms(s) as f64;
    Ok(LineSample {
        s,
        value: l.d,
        abs_error_bound: err * (2.0 * (n + 1.0).ln() + 2.0 * LN_2),
    })
}

pub fn dirichlet_l_log_derivative(s: C) -> Result<LineSample> {
    let (l, err) = dirichlet_l_dual(s)?;
    let value = l.d / l.v;
    let n = em_terms(s) as f64;
    let bound = err * (2.0 * (n + 1.0).ln() + 2.0 * LN_2 + value.norm()) / l.v.norm();
    Ok(LineSample {
        s,
        value,
        abs_error_bound: bound,
    })
}

/// L′/L(1+2β) + L′/L(1−2β); 2 Re L′/L(1+2it) on the imaginary axis.
pub fn l_kernel(beta: C) -> Result<LineSample> {
    let a = dirichlet_l_log_derivative(ONE + 2.0 * beta)?;
    let b = dirichlet_l_log_derivative(ONE - 2.0 * beta)?;
    Ok(LineSample {
        s: beta,
        value: a.value + b.value,
        abs_error_bound: a.abs_error_bound + b.abs_error_bound,
    })
}

/// γ₀ from the harmonic sum with Euler–Maclaurin correction.
pub fn stieltjes_gamma0() -> f64 {
    let n = 100usize;
    let mut h = Neumaier::new();
    for j in 1..=n {
        h.add(1.0 / j as f64);
    }
    let nf = n as f64;
    h.add(-nf.ln());
    h.add(-0.5 / nf);
    // Σ B_{2j}/(2j) N^{−2j}
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    for (j, bj) in b.iter().enumerate() {
        let m = 2 * (j + 1);
        h.add(bj / m as f64 / nf.powi(m as i32));
    }
    h.value()
}

const STIRLING_SHIFT: f64 = 20.0;

/// log Γ(x−a) − log Γ(x+a) for x ≥ 20 and |a| < x/2.
fn log_gamma_diff_large(x: f64, a: f64) -> f64 {
    let r = a / x;
    let mut d = -2.0 * (x - 0.5) * r.atanh() - 2.0 * a * x.ln() - a * (-r * r).ln_1p() + 2.0 * a;
    let (mut pm, mut pp) = ((x - a).recip(), (x + a).recip());
    let (im, ip) = (pm * pm, pp * pp);
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    for (j, bj) in b.iter().enumerate() {
        let m = 2.0 * (j + 1) as f64;
        d += bj / (m * (m - 1.0)) * (pm - pp);
        pm *= im;
        pp *= ip;
    }
    d
}

fn log_gamma_ratio(a: f64, k: u64) -> Result<f64> {
    let x = 0.5 + 2.0 * k as f64;
    if !(a.abs() < x) {
        return Err(Error::Domain(format!("|a| = {} must be below 1/2 + 2k", a.abs())));
    }
    let mut shift = Neumaier::new();
    let mut y = x;
    while y < STIRLING_SHIFT.max(2.0 * a.abs() + 1.0) {
        shift.add((y + a).ln() - (y - a).ln());
        y += 1.0;
    }
    Ok(log_gamma_diff_large(y, a) + shift.value())
}

/// Γ(1/2 − a + 2k)/Γ(1/2 + a + 2k) for real a.
pub fn gamma_ratio(a: f64, k: u64) -> Result<f64> {
    Ok(log_gamma_ratio(a, k)?.exp())
}

/// Complex-shift variant of [`gamma_ratio`].
pub fn gamma_ratio_complex(a: C, k: u64) -> Result<C> {
    let x = 0.5 + 2.0 * k as f64;
    if !(a.norm() < x) {
        return Err(Error::Domain(format!("|a| = {} must be below 1/2 + 2k", a.norm())));
    }
    let mut shift = ComplexNeumaier::new();
    let mut y = x;
    while y < STIRLING_SHIFT.max(2.0 * a.norm() + 1.0) {
        shift.add((a + y).ln() - (-a + y).ln());
        y += 1.0;
    }
    let (zm, zp) = (-a + y, a + y);
    let mut d = (zm - 0.5) * zm.ln() - (zp - 0.5) * zp.ln() + 2.0 * a;
    let (mut pm, mut pp) = (zm.inv(), zp.inv());
    let (im, ip) = (pm * pm, pp * pp);
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    for (j, bj) in b.iter().enumerate() {
        let m = 2.0 * (j + 1) as f64;
        d += (pm - pp) * (bj / (m * (m - 1.0)));
        pm *= im;
        pp *= ip;
    }
    Ok((d + shift.value()).exp())
}

/// Truncated prime sum with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimeSum {
    pub value: C,
    pub tail_bound: f64,
    pub p_max: u64,
}

/// Precomputed log p for the primes p ≡ 3 (mod 4) up to a bound.
#[derive(Debug, Clone)]
pub struct InertPrimeLogs {
    pub p_max: u64,
    logs: Vec<f64>,
}

impl InertPrimeLogs {
    pub fn new(p_max: u64) -> Result<Self> {
        if p_max < 100 {
            return Err(Error::Domain(format!("P_max = {p_max} below 100")));
        }
        let logs = primes_up_to(p_max)?
            .into_iter()
            .filter(|p| p % 4 == 3)
            .map(|p| (p as f64).ln())
            .collect();
        Ok(Self { p_max, logs })
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// Σ_{p ≡ 3 (4)} (p^{2+8β} + p² − 2p^{4β}) log p / (p^{2+8β} + p² − p^{4β} − p^{4+4β}).
    pub fn a_prime_sum(&self, beta: C) -> Result<PrimeSum> {
        let sigma = beta.re.abs();
        if !(sigma < 0.125) {
            return Err(Error::Domain(format!("|Re β| = {sigma} not below 1/8")));
        }
        let mut acc = ComplexNeumaier::new();
        for &lp in &self.logs {
            acc.add(a_prime_term(lp, beta));
        }
        Ok(PrimeSum {
            value: acc.value(),
            tail_bound: a_prime_tail(self.p_max as f64, sigma),
            p_max: self.p_max,
        })
    }
}

/// One summand, rewritten with u = p^{4β} and q = p^{−2} after dividing by
/// p^{4+4β}: (q(u + 1/u) − 2q²) log p / (q(u + 1/u) − q² − 1).
pub fn a_prime_term(log_p: f64, beta: C) -> C {
    let u = (4.0 * beta * log_p).exp();
    let q = (-2.0 * log_p).exp();
    let c = (u + u.inv()) * q;
    (c - 2.0 * q * q) * log_p / (c - q * q - 1.0)
}

/// For p > P ≥ 100 each summand is at most 8 p^{−2+4|σ|} log p in size;
/// the sum over integers is bounded by the integral from P.
fn a_prime_tail(p: f64, sigma: f64) -> f64 {
    let e = 1.0 - 4.0 * sigma;
    8.0 * p.powf(-e) * (p.ln() / e + 1.0 / (e * e))
}

pub fn a_prime_sum(beta: C, p_max: u64) -> Result<PrimeSum> {
    InertPrimeLogs::new(p_max)?.a_prime_sum(beta)
}

/// Residue class label used by the coefficient averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimeClass {
    Two,
    OneMod4,
    ThreeMod4,
}

impl PrimeClass {
    pub fn of(p: u64) -> Result<Self> {
        match p {
            2 => Ok(PrimeClass::Two),
            p if p % 4 == 1 => Ok(PrimeClass::OneMod4),
            p if p % 4 == 3 => Ok(PrimeClass::ThreeMod4),
            _ => Err(Error::Domain(format!("{p} is not an odd prime or 2"))),
        }
    }
}

/// Limiting average δ_p(m, n, h, l) of μ_k(p^h) μ_k(p^l) A_k(p^n) A_k(p^m).
pub fn coefficient_delta(class: PrimeClass, m: u32, n: u32, h: u32, l: u32) -> i64 {
    let mn = m.min(n) as i64;
    let even = (m + n) % 2 == 0;
    match class {
        PrimeClass::OneMod4 => {
            let hl_even = matches!(h, 0 | 2) && matches!(l, 0 | 2);
            if even && hl_even {
                mn + 1
            } else if !even && matches!((h, l), (0, 1) | (1, 0) | (1, 2) | (2, 1)) {
                -2 * (mn + 1)
            } else if (h, l) == (1, 1) && m == n {
                4 * n as i64 + 2
            } else if (h, l) == (1, 1) && even {
                4 * (mn + 1)
            } else {
                0
            }
        }
        PrimeClass::ThreeMod4 => {
            if m % 2 == 1 || n % 2 == 1 {
                0
            } else if matches!((h, l), (0, 0) | (2, 2)) {
                1
            } else if matches!((h, l), (0, 2) | (2, 0)) {
                -1
            } else {
                0
            }
        }
        PrimeClass::Two => {
            if even && matches!((h, l), (0, 0) | (1, 1)) {
                1
            } else if !even && matches!((h, l), (0, 1) | (1, 0)) {
                -1
            } else {
                0
            }
        }
    }
}

/// The four shifts (α, β, γ, δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shifts {
    pub alpha: C,
    pub beta: C,
    pub gamma: C,
    pub delta: C,
}

impl Shifts {
    pub fn new(alpha: C, beta: C, gamma: C, delta: C) -> Self {
        Self { alpha, beta, gamma, delta }
    }

    fn check(&self) -> Result<()> {
        for z in [self.alpha, self.beta, self.gamma, self.delta] {
            if !(z.re.abs() < 0.125) || !z.im.is_finite() {
                return Err(Error::Domain(format!("shift {z} outside |Re| < 1/8")));
            }
        }
        Ok(())
    }
}

/// p^{−z}
fn ppow(p: f64, z: C) -> C {
    (-z * p.ln()).exp()
}

/// G_p in closed form.
pub fn local_factor_g(p: u64, s: Shifts) -> Result<C> {
    s.check()?;
    let class = PrimeClass::of(p)?;
    let pf = p as f64;
    let h = C::new(0.5, 0.0);
    let x = ppow(pf, h + s.alpha);
    let y = ppow(pf, h + s.beta);
    let u = ppow(pf, h + s.gamma);
    let v = ppow(pf, h + s.delta);
    Ok(match class {
        PrimeClass::ThreeMod4 => {
            let (x2, y2, u2, v2) = (x * x, y * y, u * u, v * v);
            (ONE + u2 * v2 - u2 - v2) / ((ONE - x2) * (ONE - y2))
        }
        PrimeClass::Two => {
            let all = ONE / ((ONE - x) * (ONE - y));
            let alt = ONE / ((ONE + x) * (ONE + y));
            let even = (all + alt) * 0.5;
            let odd = (all - alt) * 0.5;
            (ONE + u * v) * even - (u + v) * odd
        }
        PrimeClass::OneMod4 => {
            let (xx, yy, z) = (x * x, y * y, x * y);
            let d = (ONE - xx) * (ONE - yy) * (ONE - z);
            let even = (ONE + z) / d;
            let odd = -2.0 * (x + y) / d;
            let diag = 2.0 * (ONE + z) / ((ONE - z) * (ONE - z));
            let off = 4.0 * even - 4.0 / ((ONE - z) * (ONE - z));
            even * (ONE + u * u) * (ONE + v * v) + odd * (u + v) * (ONE + u * v) + (diag + off) * u * v
        }
    })
}

/// G_p by direct summation of δ_p over h, l ≤ 2 and m + n < cut, with a
/// geometric bound on the omitted terms.
pub fn local_factor_g_series(p: u64, s: Shifts, cut: u32) -> Result<(C, f64)> {
    s.check()?;
    let class = PrimeClass::of(p)?;
    let pf = p as f64;
    let h = C::new(0.5, 0.0);
    let bases = [ppow(pf, h + s.alpha), ppow(pf, h + s.beta), ppow(pf, h + s.gamma), ppow(pf, h + s.delta)];
    let pw = |b: C, e: u32| b.powu(e);
    let mut acc = ComplexNeumaier::new();
    for hh in 0..=2 {
        for ll in 0..=2 {
            let hl = pw(bases[2], hh) * pw(bases[3], ll);
            for m in 0..cut {
                for n in 0..cut - m {
                    let d = coefficient_delta(class, m, n, hh, ll);
                    if d != 0 {
                        acc.add(hl * pw(bases[0], n) * pw(bases[1], m) * d as f64);
                    }
                }
            }
        }
    }
    // |δ| ≤ 4(m+n)+4; omitted terms have m + n ≥ cut
    let r = bases[0].norm().max(bases[1].norm());
    let hl_max: f64 = (0..=2)
        .map(|e| bases[2].norm().powi(e))
        .sum::<f64>()
        * (0..=2).map(|e| bases[3].norm().powi(e)).sum::<f64>();
    let mut tail = 0.0;
    let mut j = cut as f64;
    let mut rj = r.powi(cut as i32);
    while rj * (j + 1.0) * (4.0 * j + 4.0) > 1e-300 && j < cut as f64 + 4000.0 {
        tail += (j + 1.0) * (4.0 * j + 4.0) * rj;
        rj *= r;
        j += 1.0;
    }
    Ok((acc.value(), tail * hl_max))
}

/// Local factor at p of the ζ/L ratio 𝒴·(L-part) defining Y.
pub fn local_factor_y(p: u64, s: Shifts) -> Result<C> {
    s.check()?;
    let class = PrimeClass::of(p)?;
    let pf = p as f64;
    let z = |w: C| ONE / (ONE - ppow(pf, ONE + w));
    let l = |w: C| match class {
        PrimeClass::Two => ONE,
        PrimeClass::OneMod4 => ONE / (ONE - ppow(pf, ONE + w)),
        PrimeClass::ThreeMod4 => ONE / (ONE + ppow(pf, ONE + w)),
    };
    let Shifts { alpha: a, beta: b, gamma: g, delta: d } = s;
    let zeta_part = z(2.0 * a) * z(2.0 * b) * z(g + d) * z(a + b) / (z(a + g) * z(b + g) * z(b + d) * z(a + d));
    let l_part = l(2.0 * g) * l(2.0 * d) * l(g + d) * l(a + b) / (l(a + g) * l(b + g) * l(b + d) * l(a + d));
    Ok(zeta_part * l_part)
}

/// The first-order polynomial in p^{−1−·} that G_p is factored against.
pub fn local_factor_y_linear(p: u64, s: Shifts) -> Result<C> {
    s.check()?;
    let class = PrimeClass::of(p)?;
    let pf = p as f64;
    let q = |w: C| ppow(pf, ONE + w);
    let Shifts { alpha: a, beta: b, gamma: g, delta: d } = s;
    Ok(match class {
        PrimeClass::Two => ONE + q(g + d) + q(a + b) + q(2.0 * a) + q(2.0 * b) - q(a + g) - q(a + d) - q(b + g) - q(b + d),
        PrimeClass::ThreeMod4 => ONE - q(2.0 * d) - q(2.0 * g) + q(2.0 * a) + q(2.0 * b),
        PrimeClass::OneMod4 => {
            ONE + q(2.0 * a) + q(2.0 * b) + q(2.0 * g) + q(2.0 * d) + 2.0 * q(a + b)
                - 2.0 * (q(a + g) + q(a + d) + q(b + g) + q(b + d))
                + 2.0 * q(g + d)
        }
    })
}

/// Catalan's constant, used in tests and as a sanity anchor.
pub const CATALAN: f64 = 0.915_965_594_177_219;

/// π/4 = L(1).
pub const L_AT_ONE: f64 = PI / 4.0;
