//! Test functions f (angular window) and Φ (norm cutoff) with transforms.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_panels, integrate_with_points, QuadOptions};
use crate::summation::Neumaier;

/// Shape parameters for the smooth built-in pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothShape {
    /// f(x) = exp(−s u²/(1 − u²)), u = x / radius.
    pub f_steepness: f64,
    pub f_radius: f64,
    /// Φ(x) = exp(−σ v²/(1 − v²)), v = 1 + 2 log(x)/L, supported on [e^{−L}, 1].
    pub phi_steepness: f64,
    pub phi_log_width: f64,
    /// Absolute tolerance for transforms and moments.
    pub tolerance: f64,
}

impl Default for SmoothShape {
    fn default() -> Self {
        Self {
            f_steepness: 12.0,
            f_radius: 0.5,
            phi_steepness: 4.0,
            phi_log_width: 4.0,
            tolerance: 1e-12,
        }
    }
}

impl SmoothShape {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.f_steepness) && ok(self.f_radius) && ok(self.phi_steepness) && ok(self.phi_log_width) && ok(self.tolerance)) {
            return Err(Error::Domain(format!("invalid smooth shape {self:?}")));
        }
        Ok(())
    }
}

#[inline]
fn bump(u: f64, steepness: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let u2 = u * u;
        (-steepness * u2 / (1.0 - u2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FKind {
    Indicator,
    Bump { steepness: f64, radius: f64 },
}

/// Even, real, compactly supported angular window.
#[derive(Debug, Clone)]
pub struct WindowF {
    kind: FKind,
    tol: f64,
    integral: f64,
    integral_sq: f64,
    autocorr: Arc<OnceLock<AutocorrTable>>,
}

/// Uniform table of a(u) = ∫ f(x) f(x+u) dx on [0, 2r] with local
/// Lagrange interpolation.
#[derive(Debug, Clone)]
struct AutocorrTable {
    h: f64,
    values: Vec<f64>,
}

const AUTOCORR_INTERVALS: usize = 2048;
const AUTOCORR_STENCIL: usize = 10;

impl AutocorrTable {
    fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        let n = self.values.len() - 1;
        let t = u / self.h;
        if t >= n as f64 {
            return 0.0;
        }
        let half = AUTOCORR_STENCIL / 2;
        let centre = t.floor() as isize;
        let lo = (centre - half as isize + 1).clamp(0, (n + 1 - AUTOCORR_STENCIL) as isize) as usize;
        let mut acc = 0.0;
        for i in lo..lo + AUTOCORR_STENCIL {
            let mut l = 1.0;
            for j in lo..lo + AUTOCORR_STENCIL {
                if i != j {
                    l *= (t - j as f64) / (i as f64 - j as f64);
                }
            }
            acc += l * self.values[i];
        }
        acc
    }
}

impl WindowF {
    pub fn indicator() -> Self {
        Self {
            kind: FKind::Indicator,
            tol: 0.0,
            integral: 1.0,
            integral_sq: 1.0,
            autocorr: Arc::new(OnceLock::new()),
        }
    }

    pub fn bump(steepness: f64, radius: f64, tol: f64) -> Result<Self> {
        let kind = FKind::Bump { steepness, radius };
        let opts = QuadOptions::abs(tol * 0.1);
        let f = |x: f64| bump(x / radius, steepness);
        let integral = 2.0 * integrate(f, 0.0, radius, opts)?.value;
        let integral_sq = 2.0 * integrate(|x| f(x).powi(2), 0.0, radius, opts)?.value;
        Ok(Self {
            kind,
            tol,
            integral,
            integral_sq,
            autocorr: Arc::new(OnceLock::new()),
        })
    }

    pub fn kind(&self) -> FKind {
        self.kind
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self.kind, FKind::Indicator)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            FKind::Indicator => {
                if x.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            FKind::Bump { steepness, radius } => bump(x / radius, steepness),
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self.kind {
            FKind::Indicator => 0.5,
            FKind::Bump { radius, .. } => radius,
        }
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn integral_sq(&self) -> f64 {
        self.integral_sq
    }

    /// f̂(y) = ∫ f(x) e^{−2πixy} dx.
    pub fn fourier(&self, y: f64) -> Result<f64> {
        match self.kind {
            FKind::Indicator => Ok(sinc(PI * y)),
            FKind::Bump { steepness, radius } => {
                if y == 0.0 {
                    return Ok(self.integral);
                }
                let w = 2.0 * PI * y;
                let panels = ((2.0 * y.abs() * radius).ceil() as usize).max(4);
                let r = integrate_panels(
                    |x: f64| bump(x / radius, steepness) * (w * x).cos(),
                    0.0,
                    radius,
                    panels,
                    QuadOptions::abs(0.5 * self.tol),
                )?;
                Ok(2.0 * r.value)
            }
        }
    }

    /// a(u) = ∫ f(x) f(x + u) dx.
    pub fn autocorrelation(&self, u: f64) -> Result<f64> {
        match self.kind {
            FKind::Indicator => Ok((1.0 - u.abs()).max(0.0)),
            FKind::Bump { .. } => {
                if let Some(t) = self.autocorr.get() {
                    return Ok(t.eval(u));
                }
                let t = self.build_autocorr()?;
                Ok(self.autocorr.get_or_init(|| t).eval(u))
            }
        }
    }

    fn autocorr_direct(&self, u: f64) -> Result<f64> {
        let r = self.support_radius();
        let u = u.abs();
        if u >= 2.0 * r {
            return Ok(0.0);
        }
        let opts = QuadOptions::abs(1e-15);
        Ok(integrate(|x| self.eval(x) * self.eval(x + u), -r, r - u, opts)?.value)
    }

    fn build_autocorr(&self) -> Result<AutocorrTable> {
        let span = 2.0 * self.support_radius();
        let h = span / AUTOCORR_INTERVALS as f64;
        let values = (0..=AUTOCORR_INTERVALS)
            .map(|i| self.autocorr_direct(i as f64 * h))
            .collect::<Result<Vec<_>>>()?;
        Ok(AutocorrTable { h, values })
    }

    /// F_K(θ) = Σ_j f((K/(π/2))(θ − (π/2)j)).
    pub fn periodized(&self, k: f64, theta: f64) -> f64 {
        let scale = k / FRAC_PI_2;
        let t = theta / FRAC_PI_2;
        let reach = self.support_radius() / k;
        let j0 = (t - reach).floor() as i64;
        let j1 = (t + reach).ceil() as i64;
        (j0..=j1).map(|j| self.eval(scale * (theta - FRAC_PI_2 * j as f64))).sum()
    }
}

#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiKind {
    Indicator,
    LogBump { steepness: f64, log_width: f64 },
}

/// Cutoff in the norm variable, supported in (0, 1].
#[derive(Debug, Clone)]
pub struct WindowPhi {
    kind: PhiKind,
    tol: f64,
    integral: f64,
    integral_sq: f64,
    log_moment_sq: f64,
}

impl WindowPhi {
    pub fn indicator() -> Self {
        Self {
            kind: PhiKind::Indicator,
            tol: 0.0,
            integral: 1.0,
            integral_sq: 1.0,
            log_moment_sq: -1.0,
        }
    }

    pub fn log_bump(steepness: f64, log_width: f64, tol: f64) -> Result<Self> {
        let mut phi = Self {
            kind: PhiKind::LogBump { steepness, log_width },
            tol,
            integral: 0.0,
            integral_sq: 0.0,
            log_moment_sq: 0.0,
        };
        let opts = QuadOptions::abs(0.1 * tol);
        let g = |y: f64| phi.profile(y);
        let pts = [-log_width, -0.5 * log_width, 0.0];
        let integral = integrate_with_points(|y| g(y) * y.exp(), &pts, opts)?.value;
        let integral_sq = integrate_with_points(|y| g(y).powi(2) * y.exp(), &pts, opts)?.value;
        let log_moment_sq = integrate_with_points(|y| y * g(y).powi(2) * y.exp(), &pts, opts)?.value;
        phi.integral = integral;
        phi.integral_sq = integral_sq;
        phi.log_moment_sq = log_moment_sq;
        Ok(phi)
    }

    /// Φ(e^y).
    fn profile(&self, y: f64) -> f64 {
        match self.kind {
            PhiKind::Indicator => {
                if y <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PhiKind::LogBump { steepness, log_width } => bump(1.0 + 2.0 * y / log_width, steepness),
        }
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self.kind, PhiKind::Indicator)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.kind {
            PhiKind::Indicator => {
                if x <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PhiKind::LogBump { .. } => self.profile(x.ln()),
        }
    }

    /// Supremum u of the support, in units of N/X.
    pub fn support_cap(&self) -> f64 {
        1.0
    }

    /// ∫ Φ(x) dx.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// ∫ Φ(x)² dx.
    pub fn integral_sq(&self) -> f64 {
        self.integral_sq
    }

    /// ∫ log x · Φ(x)² dx.
    pub fn log_moment_sq(&self) -> f64 {
        self.log_moment_sq
    }

    fn line_panels(&self, s: Complex64) -> (f64, usize) {
        let l = match self.kind {
            PhiKind::LogBump { log_width, .. } => log_width,
            PhiKind::Indicator => 1.0,
        };
        let periods = s.im.abs() * l / (2.0 * PI);
        (l, ((2.0 * periods).ceil() as usize).max(8))
    }

    /// Φ̃(s) = ∫₀^∞ Φ(x) x^{s−1} dx.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        match self.kind {
            PhiKind::Indicator => {
                if s.re <= 0.0 {
                    return Err(Error::Domain(format!("Mellin of the indicator needs Re s > 0, got {s}")));
                }
                Ok(1.0 / s)
            }
            PhiKind::LogBump { .. } => {
                let (l, n) = self.line_panels(s);
                let r = integrate_panels(|y: f64| (s * y).exp() * self.profile(y), -l, 0.0, n, QuadOptions::abs(0.5 * self.tol))?;
                Ok(r.value)
            }
        }
    }

    /// Φ̃′(s) = ∫₀^∞ Φ(x) log x · x^{s−1} dx.
    pub fn mellin_derivative(&self, s: Complex64) -> Result<Complex64> {
        match self.kind {
            PhiKind::Indicator => {
                if s.re <= 0.0 {
                    return Err(Error::Domain(format!("Mellin of the indicator needs Re s > 0, got {s}")));
                }
                Ok(-1.0 / (s * s))
            }
            PhiKind::LogBump { .. } => {
                let (l, n) = self.line_panels(s);
                let r = integrate_panels(|y: f64| (s * y).exp() * (y * self.profile(y)), -l, 0.0, n, QuadOptions::abs(0.5 * self.tol))?;
                Ok(r.value)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformKind {
    Analytic,
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct WindowPair {
    pub name: String,
    pub f: WindowF,
    pub phi: WindowPhi,
    pub transforms: TransformKind,
}

pub fn builtin_indicator_pair() -> WindowPair {
    WindowPair {
        name: "indicator".into(),
        f: WindowF::indicator(),
        phi: WindowPhi::indicator(),
        transforms: TransformKind::Analytic,
    }
}

pub fn builtin_smooth_pair(shape: SmoothShape) -> Result<WindowPair> {
    shape.validate()?;
    Ok(WindowPair {
        name: "bump".into(),
        f: WindowF::bump(shape.f_steepness, shape.f_radius, shape.tolerance)?,
        phi: WindowPhi::log_bump(shape.phi_steepness, shape.phi_log_width, shape.tolerance)?,
        transforms: TransformKind::Quadrature,
    })
}

/// Registry lookup: "indicator" or "bump".
pub fn pair_by_name(name: &str) -> Result<WindowPair> {
    match name {
        "indicator" => Ok(builtin_indicator_pair()),
        "bump" | "smooth" => builtin_smooth_pair(SmoothShape::default()),
        other => Err(Error::Domain(format!("unknown window pair '{other}'"))),
    }
}

/// F_K(θ) for the window f.
#[allow(non_snake_case)]
pub fn F_K_eval(f: &WindowF, k: f64, theta: f64) -> f64 {
    f.periodized(k, theta)
}

/// Both sides of (2/π)∫₀^{π/2} F_K² = (1/K²) Σ_k f̂(k/K)².
pub fn parseval_check(f: &WindowF, k: f64) -> Result<(f64, f64)> {
    let r = f.support_radius();
    if k <= 2.0 * r {
        return Err(Error::Domain(format!(
            "K = {k} too small: periodized copies overlap for support diameter {}",
            2.0 * r
        )));
    }
    let edge = r * FRAC_PI_2 / k;
    let pts = [0.0, edge, FRAC_PI_2 - edge, FRAC_PI_2];
    let lhs = integrate_with_points(|t| f.periodized(k, t).powi(2), &pts, QuadOptions::abs(1e-14))?.value / FRAC_PI_2;

    let mut acc = Neumaier::new();
    acc.add(f.fourier(0.0)?.powi(2));
    let rhs = match f.kind() {
        FKind::Indicator => {
            let m = 4_000_000usize;
            for j in 1..=m {
                acc.add(2.0 * sinc(PI * j as f64 / k).powi(2));
            }
            // tail: sin² averages to 1/2 over the remaining terms
            acc.add(k * k / (PI * PI * (m as f64 + 0.5)));
            acc.value() / (k * k)
        }
        FKind::Bump { .. } => {
            let mut j = 1usize;
            loop {
                let v = f.fourier(j as f64 / k)?;
                acc.add(2.0 * v * v);
                if j as f64 > 64.0 * k {
                    break;
                }
                j += 1;
            }
            acc.value() / (k * k)
        }
    };
    Ok((lhs, rhs))
}
