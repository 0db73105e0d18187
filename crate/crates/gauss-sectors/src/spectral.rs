//! ψ_{K,X}, its mean, the Hecke sums S_k and the sector variance.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideal_stream::{PrimeTable, WeightedTerm};
use crate::summation::{ComplexNeumaier, Neumaier, CHUNK};
use crate::windows::{FKind, WindowF, WindowPhi};

/// Angles with their weights w = Λ(𝔞)Φ(N(𝔞)/X); zero weights dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedAngles {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedAngles {
    pub fn from_terms(terms: &[WeightedTerm], phi: &WindowPhi, x: f64) -> Self {
        let mut out = Self::default();
        for t in terms {
            let w = t.weight * phi.eval(t.norm as f64 / x);
            if w != 0.0 {
                out.angles.push(t.angle);
                out.weights.push(w);
            }
        }
        out
    }

    /// Build straight from a prime table without materialising terms.
    pub fn from_table(table: &PrimeTable, phi: &WindowPhi, x: f64) -> Result<Self> {
        let cap = ((phi.support_cap() * x).floor() as u64).min(table.bound);
        let parts = table.par_map_terms(cap, 1 << 16, |it| {
            let mut part = WeightedAngles::default();
            for t in it {
                let w = t.weight * phi.eval(t.norm as f64 / x);
                if w != 0.0 {
                    part.angles.push(t.angle);
                    part.weights.push(w);
                }
            }
            part
        })?;
        let n = parts.iter().map(|p| p.len()).sum();
        let mut out = Self {
            angles: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        };
        for p in parts {
            out.angles.extend(p.angles);
            out.weights.extend(p.weights);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::summation::sum(&self.weights)
    }

    /// Sort by angle and merge exactly coincident angles.
    pub fn merged(&self) -> Self {
        self.clone().into_merged()
    }

    /// Consuming variant of [`merged`](Self::merged); keeps peak memory near 2N pairs.
    pub fn into_merged(self) -> Self {
        let mut pairs: Vec<(f64, f64)> = self.angles.into_iter().zip(self.weights).collect();
        pairs.par_sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Self::default();
        let mut acc = Neumaier::new();
        let mut current: Option<f64> = None;
        for (a, w) in pairs {
            if current != Some(a) {
                if let Some(c) = current {
                    out.angles.push(c);
                    out.weights.push(acc.value());
                }
                current = Some(a);
                acc = Neumaier::new();
            }
            acc.add(w);
        }
        if let Some(c) = current {
            out.angles.push(c);
            out.weights.push(acc.value());
        }
        out
    }

    /// θ ↦ π/2 − θ (mod π/2).
    pub fn reflected(&self) -> Self {
        Self {
            angles: self.angles.iter().map(|&a| reduce_angle(FRAC_PI_2 - a)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// θ ↦ θ + c (mod π/2).
    pub fn rotated(&self, c: f64) -> Self {
        Self {
            angles: self.angles.iter().map(|&a| reduce_angle(a + c)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Reduce into [0, π/2).
pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(FRAC_PI_2);
    if r >= FRAC_PI_2 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeckeSumVector {
    pub x: f64,
    pub k_max: usize,
    /// S_k for k = 0..=k_max.
    pub values: Vec<Complex64>,
    pub term_count: usize,
    /// Bound on |computed − exact| for every k (nonzero for the binned path).
    pub abs_error_bound: f64,
}

impl HeckeSumVector {
    pub fn s0(&self) -> f64 {
        self.values[0].re
    }

    /// Export with header `k,re,im,abs`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,re,im,abs")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:e},{:e},{:e}", k, v.re, v.im, v.norm())?;
        }
        Ok(())
    }
}

const K_BLOCK: usize = 1024;

/// S_k = Σ_𝔞 Λ(𝔞)Φ(N(𝔞)/X) e^{4ikθ_𝔞} for 0 ≤ k ≤ k_max.
pub fn hecke_sums(terms: &[WeightedTerm], phi: &WindowPhi, x: f64, k_max: usize) -> Result<HeckeSumVector> {
    let wa = WeightedAngles::from_terms(terms, phi, x);
    hecke_sums_weighted(&wa, x, k_max)
}

/// Direct O(N·k_max) kernel: blocks of k in parallel, terms in fixed chunks
/// whose partial sums are merged with compensation.
pub fn hecke_sums_weighted(wa: &WeightedAngles, x: f64, k_max: usize) -> Result<HeckeSumVector> {
    if k_max < 1 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    if wa.is_empty() {
        return Err(Error::Degenerate("empty term stream".into()));
    }
    let steps: Vec<Complex64> = wa
        .angles
        .iter()
        .map(|&a| Complex64::from_polar(1.0, 4.0 * a))
        .collect();
    let blocks: Vec<(usize, usize)> = (0..=k_max)
        .step_by(K_BLOCK)
        .map(|k0| (k0, (k0 + K_BLOCK).min(k_max + 1)))
        .collect();
    let parts: Vec<Vec<Complex64>> = blocks
        .par_iter()
        .map(|&(k0, k1)| {
            let n = k1 - k0;
            let mut total = vec![ComplexNeumaier::new(); n];
            let mut part = vec![Complex64::new(0.0, 0.0); n];
            for c in (0..wa.len()).step_by(CHUNK) {
                let end = (c + CHUNK).min(wa.len());
                part.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for i in c..end {
                    let w = wa.weights[i];
                    let z = steps[i];
                    let mut cur = Complex64::from_polar(w, 4.0 * k0 as f64 * wa.angles[i]);
                    for slot in part.iter_mut() {
                        *slot += cur;
                        cur *= z;
                    }
                }
                for (t, p) in total.iter_mut().zip(&part) {
                    t.add(*p);
                }
            }
            total.iter().map(|t| t.value()).collect()
        })
        .collect();
    let mut values: Vec<Complex64> = parts.into_iter().flatten().collect();
    values[0] = Complex64::new(wa.total_weight(), 0.0);
    Ok(HeckeSumVector {
        x,
        k_max,
        values,
        term_count: wa.len(),
        abs_error_bound: 0.0,
    })
}

/// Binned fast path: angles are binned into `bins` cells of width (π/2)/bins
/// and the offset from each cell centre is expanded to `order` Taylor terms,
/// each transformed with one FFT. The returned bound covers the truncated
/// Taylor remainder: Σ|w| · (πk/M)^P/P! · e^{πk/M}.
pub fn hecke_sums_binned(wa: &WeightedAngles, x: f64, k_max: usize, bins: usize, order: usize) -> Result<HeckeSumVector> {
    if k_max < 1 || order < 1 {
        return Err(Error::Domain("k_max and order must be at least 1".into()));
    }
    if bins < 2 * k_max || !bins.is_power_of_two() {
        return Err(Error::Domain(format!("bins must be a power of two ≥ 2·k_max, got {bins}")));
    }
    if wa.is_empty() {
        return Err(Error::Degenerate("empty term stream".into()));
    }
    let h = FRAC_PI_2 / bins as f64;
    let cells: Vec<(usize, f64)> = wa
        .angles
        .iter()
        .map(|&a| {
            let j = ((a / h) as usize).min(bins - 1);
            (j, a - (j as f64 + 0.5) * h)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_inverse(bins);
    let mut acc = vec![Complex64::new(0.0, 0.0); k_max + 1];
    let mut pw: Vec<f64> = wa.weights.clone();
    let mut plane = vec![Complex64::new(0.0, 0.0); bins];
    // one plane at a time: memory is one FFT buffer regardless of order
    for m in 0..order {
        plane.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for ((j, d), p) in cells.iter().zip(pw.iter_mut()) {
            plane[*j].re += *p;
            *p *= d;
        }
        fft.process(&mut plane);
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        acc.par_iter_mut().enumerate().for_each(|(k, a)| {
            let c = Complex64::new(0.0, 4.0 * k as f64).powu(m as u32) / fact;
            *a += c * plane[k];
        });
    }
    let mut values: Vec<Complex64> = acc
        .into_iter()
        .enumerate()
        .map(|(k, a)| Complex64::from_polar(1.0, PI * k as f64 / bins as f64) * a)
        .collect();
    values[0] = Complex64::new(wa.total_weight(), 0.0);
    let total_abs: f64 = wa.weights.iter().map(|w| w.abs()).sum();
    let q = PI * k_max as f64 / bins as f64;
    let fact: f64 = (1..=order).map(|i| i as f64).product();
    let bound = total_abs * q.powi(order as i32) / fact * q.exp();
    Ok(HeckeSumVector {
        x,
        k_max,
        values,
        term_count: wa.len(),
        abs_error_bound: bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    /// f̂(0)·S_0/K.
    pub exact: f64,
    /// (X/K)·∫f·∫Φ.
    pub asymptotic: f64,
}

pub fn mean_value(s: &HeckeSumVector, f: &WindowF, phi: &WindowPhi, k: f64) -> Result<MeanValue> {
    Ok(MeanValue {
        exact: f.fourier(0.0)? * s.s0() / k,
        asymptotic: s.x / k * f.integral() * phi.integral(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceMethod {
    Spectral,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub method: VarianceMethod,
    pub k_max: Option<usize>,
    pub tail_bound: f64,
    pub x: f64,
    pub k: f64,
    pub lambda: f64,
    /// Tail bound above the requested relative tolerance.
    pub warning: bool,
}

/// Default truncation: max(10⁵, 1000K) for the indicator, 8K for smooth f.
pub fn default_k_max(f: &WindowF, k: f64) -> usize {
    if f.is_indicator() {
        (100_000f64).max(1000.0 * k).ceil() as usize
    } else {
        (8.0 * k).ceil() as usize
    }
}

/// Σ_{j>m} f̂(j/K)² for the tail of the Fourier-mode sum.
fn fourier_sq_tail(f: &WindowF, k: f64, m: usize) -> Result<f64> {
    match f.kind() {
        FKind::Indicator => {
            // Parseval on the non-overlapping copies: Σ_{j∈Z} f̂(j/K)² = K∫f².
            let mut head = Neumaier::new();
            head.add(1.0);
            for j in 1..=m {
                head.add(2.0 * f.fourier(j as f64 / k)?.powi(2));
            }
            let exact = 0.5 * (k * f.integral_sq() - head.value());
            // rounding floor of the subtraction
            let floor = 4.0 * f64::EPSILON * k * (m as f64).sqrt();
            Ok(exact.max(0.0) + floor)
        }
        FKind::Bump { .. } => {
            let mut acc = Neumaier::new();
            let mut j = m + 1;
            let limit = (m + 1).max((256.0 * k) as usize);
            while j <= limit {
                acc.add(f.fourier(j as f64 / k)?.powi(2));
                j += 1;
            }
            // quadrature floor on each neglected transform value
            let floor = (limit - m) as f64 * 1e-24;
            Ok(acc.value() + floor)
        }
    }
}

/// Var = (2/K²) Σ_{k=1}^{k_max} f̂(k/K)² |S_k|², with the tail bounded by
/// (2 S_0²/K²) Σ_{k>k_max} f̂(k/K)².
pub fn variance_spectral(s: &HeckeSumVector, f: &WindowF, k: f64, k_max: usize, rel_tol: f64) -> Result<VarianceEstimate> {
    if k_max > s.k_max {
        return Err(Error::Domain(format!("requested k_max {k_max} exceeds computed {}", s.k_max)));
    }
    if k <= 2.0 * f.support_radius() {
        return Err(Error::Domain(format!("K = {k} too small for non-overlapping windows")));
    }
    let mut acc = Neumaier::new();
    for j in 1..=k_max {
        let fh = f.fourier(j as f64 / k)?;
        acc.add(fh * fh * s.values[j].norm_sqr());
    }
    let value = 2.0 * acc.value() / (k * k);
    let s0 = s.s0();
    let tail_sum = fourier_sq_tail(f, k, k_max)?;
    let mut tail_bound = 2.0 * s0 * s0 / (k * k) * tail_sum;
    if s.abs_error_bound > 0.0 {
        // |S|² perturbation from the binned path
        let e = s.abs_error_bound;
        let mut head = Neumaier::new();
        for j in 1..=k_max {
            head.add(f.fourier(j as f64 / k)?.powi(2) * (2.0 * s.values[j].norm() * e + e * e));
        }
        tail_bound += 2.0 * head.value() / (k * k);
    }
    Ok(VarianceEstimate {
        value,
        method: VarianceMethod::Spectral,
        k_max: Some(k_max),
        tail_bound,
        x: s.x,
        k,
        lambda: k.ln() / s.x.ln(),
        warning: tail_bound > rel_tol * value.abs(),
    })
}

/// Exact variance from pairwise window overlaps. The indicator uses an
/// O(N log N) sweep with prefix sums; other windows use the tabulated
/// autocorrelation over pairs closer than the window support.
pub fn variance_direct(wa: &WeightedAngles, f: &WindowF, k: f64, x: f64) -> Result<VarianceEstimate> {
    let r = f.support_radius();
    let width = FRAC_PI_2 / k;
    if 2.0 * r * width > FRAC_PI_2 / 2.0 {
        return Err(Error::Domain(format!("K = {k} too small: window wider than π/4")));
    }
    if wa.is_empty() {
        return Err(Error::Degenerate("empty term stream".into()));
    }
    let m = wa.merged();
    let pair_sum = if f.is_indicator() {
        indicator_pair_sum(&m, width)
    } else {
        // warm the table before the parallel section
        f.autocorrelation(0.0)?;
        smooth_pair_sum(&m, f, width, 2.0 * r * width) / k
    };
    let s0 = m.total_weight();
    let mean = f.fourier(0.0)? * s0 / k;
    let value = pair_sum - mean * mean;
    Ok(VarianceEstimate {
        value,
        method: VarianceMethod::Direct,
        k_max: None,
        tail_bound: 0.0,
        x,
        k,
        lambda: k.ln() / x.ln(),
        warning: false,
    })
}

/// Sorted angles seen as a periodic sequence: virtual index j maps to
/// θ_{j mod n} + (π/2)·⌊j/n⌋.
struct Circle<'a> {
    angles: &'a [f64],
    weights: &'a [f64],
}

impl Circle<'_> {
    fn n(&self) -> isize {
        self.angles.len() as isize
    }

    #[inline]
    fn at(&self, j: isize) -> (f64, f64) {
        let n = self.n();
        let q = j.div_euclid(n);
        let r = j.rem_euclid(n) as usize;
        (self.angles[r] + FRAC_PI_2 * q as f64, self.weights[r])
    }

    /// First virtual index whose angle is not below `t` (or above, if `strict`).
    fn lower_bound(&self, t: f64, strict: bool) -> isize {
        let n = self.n();
        let q = (t / FRAC_PI_2).floor() as isize;
        let base = t - FRAC_PI_2 * q as f64;
        let r = if strict {
            self.angles.partition_point(|&a| a <= base)
        } else {
            self.angles.partition_point(|&a| a < base)
        };
        q * n + r as isize
    }
}

/// Σ_a Σ_b w_a w_b max(0, width − |θ_a − θ_b|)·(2/π) for the indicator.
/// Two-pointer sweep per chunk; running sums are compensated and taken
/// relative to the chunk's first angle.
fn indicator_pair_sum(m: &WeightedAngles, width: f64) -> f64 {
    let n = m.len();
    let c = Circle {
        angles: &m.angles,
        weights: &m.weights,
    };
    let window = (2.0 * n as f64 / (FRAC_PI_2 / width)).ceil() as usize;
    let chunk = (4 * window).max(4096).min(n.max(1));
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();
    let parts: Vec<Neumaier> = starts
        .par_iter()
        .map(|&s| {
            let e = (s + chunk).min(n);
            let reference = m.angles[s];
            let mut out = Neumaier::new();
            // L: virtual (lo, i], R: (i, hi)
            let mut lo = c.lower_bound(reference - width, true);
            let mut hi = s as isize + 1;
            let (mut l0, mut l1, mut r0, mut r1) = (Neumaier::new(), Neumaier::new(), Neumaier::new(), Neumaier::new());
            for j in lo..=s as isize {
                let (t, w) = c.at(j);
                l0.add(w);
                l1.add(w * (t - reference));
            }
            for i in s..e {
                let (a, wa) = c.at(i as isize);
                let a_rel = a - reference;
                if i > s {
                    // move i from R into L
                    let d = a_rel;
                    l0.add(wa);
                    l1.add(wa * d);
                    if hi > i as isize {
                        r0.add(-wa);
                        r1.add(-wa * d);
                    } else {
                        hi = i as isize + 1;
                    }
                }
                while c.at(lo).0 <= a - width {
                    let (t, w) = c.at(lo);
                    l0.add(-w);
                    l1.add(-w * (t - reference));
                    lo += 1;
                }
                loop {
                    let (t, w) = c.at(hi);
                    if t >= a + width {
                        break;
                    }
                    r0.add(w);
                    r1.add(w * (t - reference));
                    hi += 1;
                }
                let (l0v, l1v, r0v, r1v) = (l0.value(), l1.value(), r0.value(), r1.value());
                let left = width * l0v - (a_rel * l0v - l1v);
                let right = width * r0v - (r1v - a_rel * r0v);
                out.add(wa * (left + right));
            }
            out
        })
        .collect();
    let mut total = Neumaier::new();
    for p in &parts {
        total.merge(p);
    }
    total.value() * (2.0 / PI)
}

fn smooth_pair_sum(m: &WeightedAngles, f: &WindowF, width: f64, reach: f64) -> f64 {
    let n = m.len();
    let c = Circle {
        angles: &m.angles,
        weights: &m.weights,
    };
    let parts: Vec<Neumaier> = (0..n)
        .into_par_iter()
        .chunks(CHUNK)
        .map(|idx| {
            let mut out = Neumaier::new();
            for i in idx {
                let (a, wa) = c.at(i as isize);
                let lo = c.lower_bound(a - reach, true);
                let hi = c.lower_bound(a + reach, false);
                let mut acc = Neumaier::new();
                for j in lo..hi {
                    let (t, w) = c.at(j);
                    acc.add(w * f.autocorrelation((t - a) / width).unwrap_or(0.0));
                }
                out.add(wa * acc.value());
            }
            out
        })
        .collect();
    let mut total = Neumaier::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

/// Evaluate ψ on a grid, using a sorted copy of the angles so each point
/// touches only nearby terms.
#[derive(Debug, Clone)]
pub struct PsiEvaluator {
    sorted: WeightedAngles,
}

impl PsiEvaluator {
    pub fn new(wa: &WeightedAngles) -> Self {
        Self { sorted: wa.merged() }
    }

    pub fn eval(&self, f: &WindowF, k: f64, theta: f64) -> f64 {
        let width = FRAC_PI_2 / k;
        let reach = f.support_radius() * width;
        let theta = reduce_angle(theta);
        let a = &self.sorted.angles;
        let mut acc = Neumaier::new();
        for shift in [-FRAC_PI_2, 0.0, FRAC_PI_2] {
            let lo = a.partition_point(|&t| t + shift < theta - reach);
            let hi = a.partition_point(|&t| t + shift <= theta + reach);
            for j in lo..hi {
                let d = a[j] + shift - theta;
                acc.add(self.sorted.weights[j] * f.eval(d / width));
            }
        }
        acc.value()
    }
}

pub fn psi_eval(wa: &WeightedAngles, f: &WindowF, k: f64, grid: &[f64]) -> Vec<f64> {
    let ev = PsiEvaluator::new(wa);
    grid.par_iter().map(|&t| ev.eval(f, k, t)).collect()
}

/// Export with header `theta,psi`.
pub fn write_psi_csv<W: Write>(mut w: W, grid: &[f64], psi: &[f64]) -> std::io::Result<()> {
    writeln!(w, "theta,psi")?;
    for (t, v) in grid.iter().zip(psi) {
        writeln!(w, "{t:e},{v:e}")?;
    }
    Ok(())
}
