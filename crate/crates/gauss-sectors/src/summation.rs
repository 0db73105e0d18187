//! Compensated accumulators and deterministic chunked reductions.

use num_complex::Complex64;
use rayon::prelude::*;

/// Chunk length used by every fixed-order reduction in the crate.
pub const CHUNK: usize = 4096;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Complex counterpart of [`Neumaier`], compensating each component.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexNeumaier {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexNeumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexNeumaier) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<Neumaier>().value()
}

/// Sum of `f(x)` over a slice, computed in fixed chunks of [`CHUNK`] whose
/// partial sums are combined in index order. The result does not depend on
/// how rayon schedules the chunks.
pub fn chunked_sum_by<T, F>(xs: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let partials: Vec<Neumaier> = xs
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).collect::<Neumaier>())
        .collect();
    let mut acc = Neumaier::new();
    for p in &partials {
        acc.merge(p);
    }
    acc.value()
}

/// Error-free product: returns (p, e) with a*b = p + e exactly.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Double-double prefix sums, so differences of far-apart prefixes keep
/// full relative accuracy.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PrefixSums {
    pub fn new<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut hi = vec![0.0];
        let mut lo = vec![0.0];
        let (mut h, mut l) = (0.0f64, 0.0f64);
        for x in values {
            // two-sum of h + x, then fold the low parts
            let s = h + x;
            let bp = s - h;
            let e = (h - (s - bp)) + (x - bp);
            let t = l + e;
            let nh = s + t;
            l = t - (nh - s);
            h = nh;
            hi.push(h);
            lo.push(l);
        }
        Self { hi, lo }
    }

    /// Sum of entries in `[i, j)`.
    #[inline]
    pub fn range(&self, i: usize, j: usize) -> f64 {
        (self.hi[j] - self.hi[i]) + (self.lo[j] - self.lo[i])
    }

    pub fn len(&self) -> usize {
        self.hi.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
