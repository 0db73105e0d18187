//! Closed-form variance predictions and the constants they depend on.
//!
//! Three models are evaluated: the random-matrix prediction, the λ > 1
//! asymptotic, and the refined formula carrying the lower-order constants
//! C_{Φ,ζ}, C_{Φ,L}, A′_Φ. The latter are line integrals of |Φ̃(1/2+it)|²
//! against pole-free kernels; an independent Dirichlet-series route is kept
//! alongside for cross-checks.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, integrate_with_points, QuadOptions};
use crate::special_functions::{
    dirichlet_l_log_derivative, l_kernel, zeta_kernel, zeta_log_derivative, InertPrimeLogs, PrimeSum,
};
use crate::summation::Neumaier;
use crate::windows::{PhiKind, WindowPair, WindowPhi};

type C = Complex64;

const PI2: f64 = PI * PI;
/// Width of the no-go zone around λ = 1/2 and λ = 1.
pub const BIFURCATION_MARGIN: f64 = 0.02;
/// Identity re-checks after assembly.
const IDENTITY_TOL: f64 = 1e-9;
/// Imaginary parts below this (relative) are rounding and are dropped.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub error_bound: f64,
    pub provenance: String,
}

impl Constant {
    fn new(value: f64, error_bound: f64, provenance: impl Into<String>) -> Self {
        Self {
            value,
            error_bound,
            provenance: provenance.into(),
        }
    }
}

/// Route used for C_{Φ,ζ}, C_{Φ,L}, A′_Φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantsMethod {
    LineIntegral,
    DirichletSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsOptions {
    pub method: ConstantsMethod,
    /// Taper start T; the integrand is rolled off smoothly on [T, 2T].
    /// `None` picks T from the decay of Φ̃.
    pub t_cut: Option<f64>,
    pub p_max: u64,
    pub abs_tol: f64,
}

impl Default for ConstantsOptions {
    fn default() -> Self {
        Self {
            method: ConstantsMethod::LineIntegral,
            t_cut: None,
            p_max: 100_000,
            abs_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub pair: String,
    pub int_f: f64,
    pub int_f_sq: f64,
    pub int_phi: f64,
    pub int_phi_sq: f64,
    pub c_f: Constant,
    pub big_c_f: Constant,
    pub c_phi: Constant,
    pub c_phi_prime: Constant,
    pub phi_half: Constant,
    pub delta_phi: Constant,
    pub c_phi_zeta: Constant,
    pub c_phi_l: Constant,
    pub a_phi_prime: Constant,
    pub kappa: Constant,
    pub k_phi: Constant,
    pub notes: Vec<String>,
}

/// Moments and constants available without line integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectConstants {
    pub int_f: f64,
    pub int_f_sq: f64,
    pub int_phi: f64,
    pub int_phi_sq: f64,
    pub c_f: Constant,
    pub big_c_f: Constant,
    pub c_phi: Constant,
    pub c_phi_prime: Constant,
    pub phi_half: Constant,
}

pub fn constants_direct(pair: &WindowPair) -> Result<DirectConstants> {
    let (f, phi) = (&pair.f, &pair.phi);
    let prov = if phi.is_indicator() { "closed form" } else { "quadrature" };
    let q_err = if phi.is_indicator() { 0.0 } else { 1e-12 };
    let f_prov = if f.is_indicator() { "closed form" } else { "quadrature" };
    let f_err = if f.is_indicator() { 0.0 } else { 1e-12 };
    let four_pi2 = 4.0 * PI2;
    Ok(DirectConstants {
        int_f: f.integral(),
        int_f_sq: f.integral_sq(),
        int_phi: phi.integral(),
        int_phi_sq: phi.integral_sq(),
        c_f: Constant::new(f.integral() / four_pi2, f_err, f_prov),
        big_c_f: Constant::new(f.integral_sq() / four_pi2, f_err, f_prov),
        c_phi: Constant::new(four_pi2 * phi.integral_sq(), four_pi2 * q_err, prov),
        c_phi_prime: Constant::new(four_pi2 * phi.log_moment_sq(), four_pi2 * q_err, prov),
        phi_half: Constant::new(phi.mellin(C::new(0.5, 0.0))?.re, q_err, prov),
    })
}

/// Both sides of the Mellin–Parseval identities for C_Φ and C′_Φ:
/// returns ((C_Φ, 2π∫|Φ̃|²), (C′_Φ, 2π∫Re Φ̃(1/2+it)Φ̃′(1/2−it))).
pub fn c_phi_contour_check(pair: &WindowPair) -> Result<((f64, f64), (f64, f64))> {
    let d = constants_direct(pair)?;
    let phi = &pair.phi;
    let err = RefCell::new(None);
    let guard = |r: Result<f64>| -> f64 {
        r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            0.0
        })
    };
    let g = |t: f64| guard(phi.mellin(C::new(0.5, t)).map(|m| m.norm_sqr()));
    let h = |t: f64| {
        guard(phi.mellin(C::new(0.5, t)).and_then(|m| Ok((m * phi.mellin_derivative(C::new(0.5, -t))?).re)))
    };
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-13,
        max_intervals: 20_000,
    };
    let (a, b) = if phi.is_indicator() {
        let a = integrate_to_infinity(g, 0.0, opts)?.value;
        let b = integrate_to_infinity(h, 0.0, opts)?.value;
        (a, b)
    } else {
        let t_max = smooth_t_cut(phi)?;
        let pts: Vec<f64> = (0..=(t_max as usize)).map(|i| i as f64).collect();
        let a = integrate_with_points(g, &pts, opts)?.value;
        let b = integrate_with_points(h, &pts, opts)?.value;
        (a, b)
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(((d.c_phi.value, 4.0 * PI * a), (d.c_phi_prime.value, 4.0 * PI * b)))
}

/// Smallest integer t with |Φ̃(1/2+it)|² below 1e−22 relative to t = 0,
/// probed on a unit grid.
fn smooth_t_cut(phi: &WindowPhi) -> Result<f64> {
    let g0 = phi.mellin(C::new(0.5, 0.0))?.norm_sqr();
    let mut run = 0;
    for t in 1..2000 {
        let g = phi.mellin(C::new(0.5, t as f64))?.norm_sqr();
        if g < 1e-22 * g0 {
            run += 1;
            if run == 3 {
                return Ok(t as f64);
            }
        } else {
            run = 0;
        }
    }
    Err(Error::Tolerance {
        what: "decay of the Mellin transform on Re s = 1/2".into(),
        achieved: phi.mellin(C::new(0.5, 2000.0))?.norm_sqr() / g0,
        requested: 1e-22,
    })
}

/// C^∞ step: 1 on [0, T], 0 beyond 2T.
pub fn taper(t: f64, t_cut: f64) -> f64 {
    let x = (t.abs() - t_cut) / t_cut;
    if x <= 0.0 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let h = |y: f64| (-1.0 / y).exp();
    h(1.0 - x) / (h(1.0 - x) + h(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineIntegral {
    pub value: C,
    pub quad_error: f64,
    pub kernel_error: f64,
    pub t_cut: f64,
    pub evaluations: usize,
}

/// 2∫₀^{2T} |Φ̃(1/2+it)|² w_T(t) k(t) dt for a kernel with k(−t) = conj k(t)
/// evaluated in symmetric form, so the result should be real.
fn line_integral<K>(phi: &WindowPhi, t_cut: f64, abs_tol: f64, kernel: K) -> Result<LineIntegral>
where
    K: Fn(f64) -> Result<(C, f64)>,
{
    let err = RefCell::new(None);
    let kerr = RefCell::new(0.0f64);
    let integrand = |t: f64| -> C {
        let r = phi.mellin(C::new(0.5, t)).and_then(|m| {
            let (k, e) = kernel(t)?;
            let g = m.norm_sqr() * taper(t, t_cut);
            let mut ke = kerr.borrow_mut();
            *ke = ke.max(e);
            Ok(g * k)
        });
        r.unwrap_or_else(|e| {
            err.borrow_mut().get_or_insert(e);
            C::new(0.0, 0.0)
        })
    };
    let top = 2.0 * t_cut;
    let n = (top.ceil() as usize).max(4);
    let pts: Vec<f64> = (0..=n).map(|i| top * i as f64 / n as f64).collect();
    let opts = QuadOptions {
        abs_tol: 0.5 * abs_tol,
        rel_tol: 0.0,
        max_intervals: 200_000,
    };
    let r = integrate_with_points(integrand, &pts, opts);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let r = r?;
    // ∫|Φ̃|² over the line is C_Φ/(2π); the kernel error enters through it
    let mass = integrate_with_points(
        |t: f64| phi.mellin(C::new(0.5, t)).map(|m| m.norm_sqr()).unwrap_or(0.0),
        &pts,
        QuadOptions::abs(1e-8),
    )?
    .value;
    let kernel_error = 2.0 * mass * kerr.into_inner();
    Ok(LineIntegral {
        value: 2.0 * r.value,
        quad_error: 2.0 * r.abs_error,
        kernel_error,
        t_cut,
        evaluations: r.evaluations,
    })
}

fn default_t_cut(phi: &WindowPhi) -> Result<f64> {
    match phi.kind() {
        PhiKind::Indicator => Ok(50.0),
        PhiKind::LogBump { .. } => Ok(0.5 * smooth_t_cut(phi)?),
    }
}

fn real_part(z: C, what: &str, notes: &mut Vec<String>) -> Result<f64> {
    let scale = z.re.abs().max(1.0);
    if z.im.abs() > IMAG_RESIDUE_TOL * scale {
        return Err(Error::Invariant(format!("{what} has imaginary part {:e}", z.im)));
    }
    if z.im != 0.0 {
        notes.push(format!("{what}: imaginary residue {:e} dropped", z.im));
    }
    Ok(z.re)
}

/// Line-integral value of a lower-order constant with its T-doubling spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineConstant {
    pub value: C,
    pub error_bound: f64,
    /// |I(2T) − I(T)|.
    pub doubling_change: f64,
    pub t_cut: f64,
}

fn line_constant<K>(phi: &WindowPhi, t_cut: f64, abs_tol: f64, scale: f64, kernel: K) -> Result<LineConstant>
where
    K: Fn(f64) -> Result<(C, f64)> + Copy,
{
    let tol = abs_tol / scale.abs();
    let a = line_integral(phi, t_cut, tol, kernel)?;
    let b = line_integral(phi, 2.0 * t_cut, tol, kernel)?;
    let change = scale * (b.value - a.value).norm();
    Ok(LineConstant {
        value: scale * a.value,
        error_bound: scale.abs() * (a.quad_error + a.kernel_error) + change,
        doubling_change: change,
        t_cut,
    })
}

/// C_{Φ,ζ} = −2π ∫ |Φ̃(1/2+it)|² [ζ′/ζ(1+2it) + ζ′/ζ(1−2it)] dt.
pub fn c_phi_zeta_line(phi: &WindowPhi, t_cut: f64, abs_tol: f64) -> Result<LineConstant> {
    line_constant(phi, t_cut, abs_tol, -2.0 * PI, |t| {
        let k = zeta_kernel(C::new(0.0, t))?;
        Ok((k.value, k.abs_error_bound))
    })
}

/// C_{Φ,L} = −2π ∫ |Φ̃(1/2+it)|² [L′/L(1+2it) + L′/L(1−2it)] dt.
pub fn c_phi_l_line(phi: &WindowPhi, t_cut: f64, abs_tol: f64) -> Result<LineConstant> {
    line_constant(phi, t_cut, abs_tol, -2.0 * PI, |t| {
        let k = l_kernel(C::new(0.0, t))?;
        Ok((k.value, k.abs_error_bound))
    })
}

/// A′_Φ = 4π ∫ |Φ̃(1/2+it)|² S(it) dt with S the inert-prime sum, taken in
/// the symmetric form (S(it) + S(−it))/2.
pub fn a_phi_prime_line(phi: &WindowPhi, t_cut: f64, abs_tol: f64, primes: &InertPrimeLogs) -> Result<LineConstant> {
    line_constant(phi, t_cut, abs_tol, 4.0 * PI, |t| {
        let a: PrimeSum = primes.a_prime_sum(C::new(0.0, t))?;
        let b: PrimeSum = primes.a_prime_sum(C::new(0.0, -t))?;
        Ok(((a.value + b.value) * 0.5, a.tail_bound))
    })
}

/// R(n) = ∫ Φ(n²x) Φ(x) dx.
fn overlap(phi: &WindowPhi, n: u64) -> Result<f64> {
    let n2 = (n * n) as f64;
    match phi.kind() {
        PhiKind::Indicator => Ok(1.0 / n2),
        PhiKind::LogBump { log_width, .. } => {
            let lo = (-log_width).exp();
            let hi = 1.0 / n2;
            if hi <= lo {
                return Ok(0.0);
            }
            Ok(integrate(|x| phi.eval(n2 * x) * phi.eval(x), lo, hi, QuadOptions::abs(1e-15))?.value)
        }
    }
}

fn von_mangoldt(n: u64) -> f64 {
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            return if m == 1 { (p as f64).ln() } else { 0.0 };
        }
        p += 1;
    }
    if m > 1 {
        (m as f64).ln()
    } else {
        0.0
    }
}

/// The three lower-order constants from their Dirichlet-series forms:
/// C_{Φ,ζ} = 8π² Σ Λ(n)R(n) − 2π²Φ̃(1/2)², C_{Φ,L} = 8π² Σ Λ(n)χ(n)R(n),
/// A′_Φ = −16π² Σ_{p≡3(4)} Σ_j log p · R(p^{2j}).
pub fn constants_series(phi: &WindowPhi, p_max: u64) -> Result<(Constant, Constant, Constant)> {
    let phi_half = phi.mellin(C::new(0.5, 0.0))?.re;
    match phi.kind() {
        PhiKind::Indicator => {
            let z = zeta_log_derivative(C::new(2.0, 0.0))?;
            let l = dirichlet_l_log_derivative(C::new(2.0, 0.0))?;
            let cz = Constant::new(
                -8.0 * PI2 * z.value.re - 2.0 * PI2 * phi_half * phi_half,
                8.0 * PI2 * z.abs_error_bound,
                "Dirichlet series (closed form via ζ′/ζ(2))",
            );
            let cl = Constant::new(-8.0 * PI2 * l.value.re, 8.0 * PI2 * l.abs_error_bound, "Dirichlet series (closed form via L′/L(2))");
            let primes = crate::ideal_stream::primes_up_to(p_max)?;
            let mut acc = Neumaier::new();
            for p in primes.into_iter().filter(|p| p % 4 == 3) {
                let pf = p as f64;
                acc.add(pf.ln() / (pf.powi(4) - 1.0));
            }
            let pf = p_max as f64;
            // Σ_{n>P} log n/(n⁴−1) ≤ 2∫_P^∞ log t/t⁴ dt
            let tail = 2.0 * (pf.ln() / 3.0 + 1.0 / 9.0) / pf.powi(3);
            let ap = Constant::new(-16.0 * PI2 * acc.value(), 16.0 * PI2 * tail, "prime sum");
            Ok((cz, cl, ap))
        }
        PhiKind::LogBump { log_width, .. } => {
            // R(n) vanishes once n² exceeds the support ratio e^{L}
            let n_max = (0.5 * log_width).exp().floor() as u64;
            let (mut sz, mut sl) = (Neumaier::new(), Neumaier::new());
            for n in 2..=n_max {
                let lam = von_mangoldt(n);
                if lam == 0.0 {
                    continue;
                }
                let r = overlap(phi, n)?;
                sz.add(lam * r);
                let chi = match n % 4 {
                    1 => 1.0,
                    3 => -1.0,
                    _ => 0.0,
                };
                sl.add(chi * lam * r);
            }
            let mut sa = Neumaier::new();
            let mut p = 3u64;
            while p * p <= n_max {
                if p % 4 == 3 && von_mangoldt(p) > 0.0 {
                    let mut q = p * p;
                    while q <= n_max {
                        sa.add((p as f64).ln() * overlap(phi, q)?);
                        q *= p * p;
                    }
                }
                p += 2;
            }
            let err = 8.0 * PI2 * 1e-13;
            Ok((
                Constant::new(8.0 * PI2 * sz.value() - 2.0 * PI2 * phi_half * phi_half, err, "Dirichlet series (finite)"),
                Constant::new(8.0 * PI2 * sl.value(), err, "Dirichlet series (finite)"),
                Constant::new(-16.0 * PI2 * sa.value(), err, "prime sum (finite)"),
            ))
        }
    }
}

/// Compute every constant and re-assert the defining identities.
pub fn compute_constants(pair: &WindowPair, opts: &ConstantsOptions) -> Result<ConstantsBundle> {
    let d = constants_direct(pair)?;
    let mut notes = Vec::new();
    let (cz, cl, ap) = match opts.method {
        ConstantsMethod::DirichletSeries => constants_series(&pair.phi, opts.p_max)?,
        ConstantsMethod::LineIntegral => {
            let t = match opts.t_cut {
                Some(t) => t,
                None => default_t_cut(&pair.phi)?,
            };
            let primes = InertPrimeLogs::new(opts.p_max)?;
            let z = c_phi_zeta_line(&pair.phi, t, opts.abs_tol)?;
            let l = c_phi_l_line(&pair.phi, t, opts.abs_tol)?;
            let a = a_phi_prime_line(&pair.phi, t, opts.abs_tol, &primes)?;
            let prov = |what: &str, lc: &LineConstant| format!("{what}, taper T = {}, T-doubling change {:e}", lc.t_cut, lc.doubling_change);
            (
                Constant::new(real_part(z.value, "C_Φ,ζ", &mut notes)?, z.error_bound, prov("line integral", &z)),
                Constant::new(real_part(l.value, "C_Φ,L", &mut notes)?, l.error_bound, prov("line integral", &l)),
                Constant::new(
                    real_part(a.value, "A′_Φ", &mut notes)?,
                    a.error_bound,
                    format!("{}, P_max = {}", prov("line integral of prime sum", &a), opts.p_max),
                ),
            )
        }
    };
    assemble(pair.name.clone(), d, cz, cl, ap, notes)
}

/// κ and K_Φ from the components, with the identities re-checked.
pub fn assemble(
    pair: String,
    d: DirectConstants,
    cz: Constant,
    cl: Constant,
    ap: Constant,
    notes: Vec<String>,
) -> Result<ConstantsBundle> {
    let ph2 = d.phi_half.value * d.phi_half.value;
    let ph2_err = 2.0 * d.phi_half.value.abs() * d.phi_half.error_bound;
    let log_term = (PI2 / 4.0).ln() + 2.0;
    let delta = d.c_phi_prime.value - PI2 * ph2;
    let delta_err = d.c_phi_prime.error_bound + PI2 * ph2_err;
    let common = d.c_phi.value * log_term + cz.value - cl.value - ap.value;
    let common_err = d.c_phi.error_bound * log_term + cz.error_bound + cl.error_bound + ap.error_bound;
    let kappa = common + d.c_phi_prime.value - PI2 * ph2;
    let k_phi = cz.value - cl.value - ap.value + 2.0 * PI2 * ph2 + d.c_phi.value * log_term;

    let b = ConstantsBundle {
        pair,
        int_f: d.int_f,
        int_f_sq: d.int_f_sq,
        int_phi: d.int_phi,
        int_phi_sq: d.int_phi_sq,
        c_f: d.c_f,
        big_c_f: d.big_c_f,
        c_phi: d.c_phi,
        c_phi_prime: d.c_phi_prime,
        phi_half: d.phi_half,
        delta_phi: Constant::new(delta, delta_err, "C′_Φ − π²Φ̃(1/2)²"),
        c_phi_zeta: cz,
        c_phi_l: cl,
        a_phi_prime: ap,
        kappa: Constant::new(kappa, common_err + delta_err, "assembled"),
        k_phi: Constant::new(k_phi, common_err + 2.0 * PI2 * ph2_err, "assembled"),
        notes,
    };
    b.check_identities()?;
    Ok(b)
}

impl ConstantsBundle {
    /// K_Φ recovered from κ: K_Φ = κ − C′_Φ + 3π²Φ̃(1/2)².
    pub fn k_phi_from_kappa(&self) -> f64 {
        self.kappa.value - self.c_phi_prime.value + 3.0 * PI2 * self.phi_half.value.powi(2)
    }

    /// K_Φ straight from its defining expression.
    pub fn k_phi_direct(&self) -> f64 {
        self.c_phi_zeta.value - self.c_phi_l.value - self.a_phi_prime.value
            + 2.0 * PI2 * self.phi_half.value.powi(2)
            + self.c_phi.value * ((PI2 / 4.0).ln() + 2.0)
    }

    pub fn check_identities(&self) -> Result<()> {
        let ph2 = self.phi_half.value.powi(2);
        let close = |a: f64, b: f64| (a - b).abs() <= IDENTITY_TOL * a.abs().max(b.abs()).max(1.0);
        if !close(self.delta_phi.value, self.c_phi_prime.value - PI2 * ph2) {
            return Err(Error::Invariant("Δ_Φ identity".into()));
        }
        if !close(self.k_phi.value, self.k_phi_direct()) {
            return Err(Error::Invariant("K_Φ expression".into()));
        }
        if !close(self.k_phi.value, self.k_phi_from_kappa()) {
            return Err(Error::Invariant("K_Φ–κ relation".into()));
        }
        let kappa = self.c_phi.value * ((PI2 / 4.0).ln() + 2.0) + self.c_phi_zeta.value - self.c_phi_l.value
            + self.c_phi_prime.value
            - PI2 * ph2
            - self.a_phi_prime.value;
        if !close(self.kappa.value, kappa) {
            return Err(Error::Invariant("κ expression".into()));
        }
        Ok(())
    }

    pub fn named(&self) -> Vec<(&'static str, &Constant)> {
        vec![
            ("c_f", &self.c_f),
            ("C_f", &self.big_c_f),
            ("C_Phi", &self.c_phi),
            ("C'_Phi", &self.c_phi_prime),
            ("phi_half", &self.phi_half),
            ("Delta_Phi", &self.delta_phi),
            ("C_Phi_zeta", &self.c_phi_zeta),
            ("C_Phi_L", &self.c_phi_l),
            ("A'_Phi", &self.a_phi_prime),
            ("kappa", &self.kappa),
            ("K_Phi", &self.k_phi),
        ]
    }

    /// Export with header `name,value,error_bound,provenance`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "name,value,error_bound,provenance")?;
        for (name, c) in self.named() {
            writeln!(w, "{},{:.17e},{:e},\"{}\"", name, c.value, c.error_bound, c.provenance.replace('"', "'"))?;
        }
        Ok(())
    }
}

/// ∫f² · ∫Φ² · min(log X, 2 log K).
pub fn predict_rmt(b: &ConstantsBundle, x: f64, k: f64) -> f64 {
    b.int_f_sq * b.int_phi_sq * x.ln().min(2.0 * k.ln())
}

/// C_f X^{1−λ} (C_Φ log X + C′_Φ + π²Φ̃(1/2)²), λ > 1.
pub fn predict_theorem(b: &ConstantsBundle, x: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::Domain(format!("theorem regime needs λ > 1, got {lambda}")));
    }
    Ok(theorem_value(b, x, lambda))
}

fn theorem_value(b: &ConstantsBundle, x: f64, lambda: f64) -> f64 {
    b.big_c_f.value
        * x.powf(1.0 - lambda)
        * (b.c_phi.value * x.ln() + b.c_phi_prime.value + PI2 * b.phi_half.value.powi(2))
}

/// Refuses λ ∈ {1/2, 1} always and within [`BIFURCATION_MARGIN`] unless forced.
pub fn check_bifurcation(lambda: f64, force: bool) -> Result<()> {
    for c in [0.5, 1.0] {
        if lambda == c || (!force && (lambda - c).abs() < BIFURCATION_MARGIN) {
            return Err(Error::Bifurcation(lambda));
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    Ok(())
}

/// Three-branch refined prediction.
pub fn predict_refined(b: &ConstantsBundle, x: f64, lambda: f64, force: bool) -> Result<f64> {
    check_bifurcation(lambda, force)?;
    let scale = b.big_c_f.value * x.powf(1.0 - lambda);
    let lx = x.ln();
    Ok(if lambda > 1.0 {
        theorem_value(b, x, lambda)
    } else if lambda > 0.5 {
        scale * (b.c_phi.value * lx + b.delta_phi.value)
    } else {
        scale * (2.0 * lambda * b.c_phi.value * lx - b.k_phi.value)
    })
}

/// Denominator of the plotted ratio Var/(⟨ψ⟩ log X).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// ⟨ψ⟩ = (X/K) ∫f ∫Φ.
    Asymptotic,
    /// ⟨ψ⟩ = f̂(0) S_0 / K with the measured S_0.
    Empirical { s0: f64 },
}

impl Normalization {
    pub fn denominator(&self, b: &ConstantsBundle, x: f64, k: f64) -> f64 {
        let mean = match *self {
            Normalization::Asymptotic => x / k * b.int_f * b.int_phi,
            Normalization::Empirical { s0 } => b.int_f * s0 / k,
        };
        mean * x.ln()
    }

    pub fn label(&self) -> &'static str {
        match self {
            Normalization::Asymptotic => "asymptotic",
            Normalization::Empirical { .. } => "empirical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Rmt,
    Refined,
    Theorem,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Rmt => "rmt",
            Model::Refined => "refined",
            Model::Theorem => "theorem",
        }
    }
}

/// RMT variance with the X/K scale of the sector mean restored.
pub fn rmt_variance(b: &ConstantsBundle, x: f64, k: f64) -> f64 {
    x / k * predict_rmt(b, x, k)
}

pub fn rmt_ratio(b: &ConstantsBundle, x: f64, k: f64, norm: Normalization) -> f64 {
    rmt_variance(b, x, k) / norm.denominator(b, x, k)
}

pub fn refined_ratio(b: &ConstantsBundle, x: f64, k: f64, norm: Normalization, force: bool) -> Result<f64> {
    let lambda = k.ln() / x.ln();
    Ok(predict_refined(b, x, lambda, force)? / norm.denominator(b, x, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCurve {
    pub x: f64,
    pub model: Model,
    pub normalization: String,
    /// (λ, ratio), λ ascending.
    pub points: Vec<(f64, f64)>,
}

impl PredictionCurve {
    /// Export with header `lambda,ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,ratio")?;
        for (l, r) in &self.points {
            writeln!(w, "{l:.6},{r:.12e}")?;
        }
        Ok(())
    }
}

/// RMT and refined curves over a λ grid with K = X^λ. Grid points exactly at
/// a bifurcation are skipped; nearby points are evaluated.
pub fn ratio_curve(b: &ConstantsBundle, x: f64, grid: &[f64], norm: Normalization) -> Result<Vec<PredictionCurve>> {
    let mut lambdas: Vec<f64> = grid.to_vec();
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Domain("λ grid must be positive and finite".into()));
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut rmt = Vec::with_capacity(lambdas.len());
    let mut refined = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let k = x.powf(l);
        rmt.push((l, rmt_ratio(b, x, k, norm)));
        match refined_ratio(b, x, k, norm, true) {
            Ok(r) => refined.push((l, r)),
            Err(Error::Bifurcation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let label = norm.label().to_string();
    Ok(vec![
        PredictionCurve {
            x,
            model: Model::Rmt,
            normalization: label.clone(),
            points: rmt,
        },
        PredictionCurve {
            x,
            model: Model::Refined,
            normalization: label,
            points: refined,
        },
    ])
}
