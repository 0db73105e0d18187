//! Adaptive Gauss–Kronrod (7/15) quadrature for real and complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::summation::{ComplexNeumaier, Neumaier};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values the integrator can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
    fn total(parts: &[Self]) -> Self;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn total(parts: &[Self]) -> Self {
        parts.iter().copied().collect::<Neumaier>().value()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn total(parts: &[Self]) -> Self {
        let mut acc = ComplexNeumaier::new();
        for z in parts {
            acc.add(*z);
        }
        acc.value()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Piece<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Piece<T> {}
impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then(other.a.total_cmp(&self.a))
    }
}

fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

/// Integrate `f` over consecutive intervals given by sorted `points`
/// (at least two), refining the worst interval until the summed error
/// estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_with_points<T, F>(mut f: F, points: &[f64], opts: QuadOptions) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if points.len() < 2 {
        return Err(Error::Domain("quadrature needs at least one interval".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Piece<T>> = Vec::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        heap.push(Piece { a: w[0], b: w[1], value: v, err: e });
    }
    let total = |heap: &BinaryHeap<Piece<T>>, done: &[Piece<T>]| -> (T, f64) {
        let vals: Vec<T> = heap.iter().chain(done.iter()).map(|p| p.value).collect();
        let err: f64 = heap.iter().chain(done.iter()).map(|p| p.err).sum();
        (T::total(&vals), err)
    };
    let (mut value, mut err) = total(&heap, &done);
    let mut count = heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value.magnitude());
        if err <= tol {
            break;
        }
        if count >= opts.max_intervals {
            return Err(Error::Quadrature {
                achieved: err,
                requested: tol,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b || (worst.b - worst.a) < 1e-15 * worst.a.abs().max(1.0) {
            // cannot split further; keep its estimate
            done.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evaluations += 30;
        value = value - worst.value + v1 + v2;
        err = err - worst.err + e1 + e2;
        heap.push(Piece { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, err: e2 });
        count += 1;
        if count % 64 == 0 {
            (value, err) = total(&heap, &done);
        }
    }
    let mut pieces: Vec<Piece<T>> = heap.into_vec();
    pieces.extend(done);
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let vals: Vec<T> = pieces.iter().map(|p| p.value).collect();
    let abs_error = pieces.iter().map(|p| p.err).sum();
    let result = Integral {
        value: T::total(&vals),
        abs_error,
        evaluations,
    };
    let tol = opts.abs_tol.max(opts.rel_tol * result.value.magnitude());
    if result.abs_error > tol {
        return Err(Error::Quadrature {
            achieved: result.abs_error,
            requested: tol,
        });
    }
    Ok(result)
}

/// Integrate over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_with_points(f, &[a, b], opts)
}

/// Integrate over `[a, b]` split into `n` equal panels first.
pub fn integrate_panels<T, F>(f: F, a: f64, b: f64, n: usize, opts: QuadOptions) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let n = n.max(1);
    let pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    integrate_with_points(f, &pts, opts)
}

/// Integrate over `[a, ∞)` using the map t = a + (1 − x)/x.
pub fn integrate_to_infinity<T, F>(mut f: F, a: f64, opts: QuadOptions) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let g = |x: f64| {
        if x <= 0.0 {
            return T::default();
        }
        let t = a + (1.0 - x) / x;
        f(t) * (1.0 / (x * x))
    };
    integrate_with_points(g, &[0.0, 0.25, 0.5, 1.0], opts)
}
