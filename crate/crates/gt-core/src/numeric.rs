//! Small shared numerical utilities: complex polynomial roots via companion
//! matrices and a deterministic splittable RNG for sampling-based routines.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;

use crate::{GtError, Result};

/// Roots of a complex polynomial `c[0] + c[1] x + ... + c[d] x^d`, computed
/// as eigenvalues of the companion matrix.  Leading coefficients smaller than
/// `trim_rel * max|c|` are dropped before forming the companion matrix.
pub fn poly_roots(coeffs: &[C64], trim_rel: f64) -> Result<Vec<C64>> {
    let maxc = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if maxc == 0.0 {
        return Err(GtError::InvalidArgument("zero polynomial".into()));
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= trim_rel * maxc {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut comp = Array2::<C64>::zeros((deg, deg));
    for i in 1..deg {
        comp[[i, i - 1]] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[[i, deg - 1]] = -coeffs[i] / lead;
    }
    let (ev, _) = comp.eig()?;
    Ok(ev.to_vec())
}

/// Evaluate a polynomial with complex coefficients by Horner's rule.
pub fn poly_eval(coeffs: &[C64], x: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Solve a small dense Vandermonde system `V a = y` with nodes `xs` by
/// Lagrange interpolation; returns the coefficient vector `a` such that
/// `sum_j a[j] x^j` interpolates `(xs[i], y[i])`.
pub fn vandermonde_fit(xs: &[C64], ys: &[C64]) -> Vec<C64> {
    let n = xs.len();
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        // Lagrange basis polynomial for node i, accumulated in coefficient form.
        let mut basis = vec![C64::new(0.0, 0.0); n];
        basis[0] = C64::new(1.0, 0.0);
        let mut deg = 0usize;
        let mut denom = C64::new(1.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            // multiply basis by (x - xs[j])
            deg += 1;
            for k in (1..=deg).rev() {
                let prev = basis[k - 1];
                basis[k] = basis[k] * (-xs[j]) + prev;
            }
            basis[0] *= -xs[j];
            denom *= xs[i] - xs[j];
        }
        let w = ys[i] / denom;
        for k in 0..n {
            coeffs[k] += w * basis[k];
        }
    }
    coeffs
}

/// Winding of a closed polygon (ordered vertices) around a point, in turns.
/// Positive for counter-clockwise traversal.
pub fn polygon_winding(poly: &[C64], z: C64) -> f64 {
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = poly[i] - z;
        let b = poly[(i + 1) % n] - z;
        total += (b / a).arg();
    }
    total / (2.0 * std::f64::consts::PI)
}

/// Deterministic 64-bit splitmix generator for reproducible sampling.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Sorted copy of a complex eigenvalue list matched against another list as
/// multisets: returns the maximum over `a` of the distance to its greedily
/// matched nearest partner in `b`.
pub fn multiset_distance(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &x in a.iter() {
        let mut best = f64::INFINITY;
        let mut bi = usize::MAX;
        for (j, &y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if d < best {
                best = d;
                bi = j;
            }
        }
        if bi != usize::MAX {
            used[bi] = true;
        }
        worst = worst.max(best);
    }
    worst
}

/// Double-double accumulator: an FMA-based two-product feeding a
/// Neumaier-compensated sum, for dot products whose terms cancel far below
/// their magnitudes (biorthogonal overlaps of skin-localized vectors).
#[derive(Clone, Copy, Default)]
struct DdAcc {
    hi: f64,
    lo: f64,
}

impl DdAcc {
    #[inline]
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let z = s - self.hi;
        self.lo += (self.hi - (s - z)) + (x - z);
        self.hi = s;
    }

    #[inline]
    fn add_prod(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = f64::mul_add(a, b, -p);
        self.add(p);
        self.lo += e;
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Compensated complex dot product Σ conj(a_i)·b_i.
pub fn cdot<'a, I>(pairs: I) -> C64
where
    I: Iterator<Item = (&'a C64, &'a C64)>,
{
    let (mut s1, mut s2, mut s3, mut s4) =
        (DdAcc::default(), DdAcc::default(), DdAcc::default(), DdAcc::default());
    for (a, b) in pairs {
        s1.add_prod(a.re, b.re);
        s2.add_prod(a.im, b.im);
        s3.add_prod(a.re, b.im);
        s4.add_prod(a.im, b.re);
    }
    C64::new(s1.value() + s2.value(), s3.value() - s4.value())
}
