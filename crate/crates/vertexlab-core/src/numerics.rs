//! Complex scalars and dense tensors, residual norms and seeded sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Double precision complex scalar.
pub type C64 = Complex<f64>;

/// Shorthand constructor for [`C64`].
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Absolute, relative and singularity tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    /// Absolute tolerance.
    pub abs_tol: f64,
    /// Relative tolerance applied to residuals.
    pub rel_tol: f64,
    /// Minimum modulus accepted for `sinh(aη)` denominators.
    pub singularity_guard: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-9, singularity_guard: 1e-6 }
    }
}

impl ToleranceConfig {
    /// Rejects non-positive or non-finite entries.
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.abs_tol) && ok(self.rel_tol) && ok(self.singularity_guard) {
            Ok(())
        } else {
            Err(Error::ArgError(format!("tolerances must be positive: {self:?}")))
        }
    }
}

/// Dense row-major complex array with an arbitrary number of legs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl ComplexTensor {
    /// Builds a tensor, checking that `data` fills `shape`.
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeError(format!(
                "shape {shape:?} needs {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// All-zero tensor.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![C64::new(0.0, 0.0); n] }
    }

    /// `n x n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    /// Matrix from a row-major slice.
    pub fn matrix(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        Self::new(vec![rows, cols], entries.to_vec())
    }

    /// Column vector of length `v.len()` stored as a one-leg tensor.
    pub fn vector(v: &[C64]) -> Self {
        Self { shape: vec![v.len()], data: v.to_vec() }
    }

    /// Leg dimensions.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Row-major entries.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Mutable row-major entries.
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    /// Entry at a multi-index.
    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    /// Overwrites the entry at a multi-index.
    pub fn set(&mut self, idx: &[usize], value: C64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// Entry `(i, j)` of a matrix.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.shape[1] + j]
    }

    fn matrix_dims(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            s => Err(Error::ShapeError(format!("expected a matrix, got shape {s:?}"))),
        }
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        let (r, k) = self.matrix_dims()?;
        let (k2, c) = rhs.matrix_dims()?;
        if k != k2 {
            return Err(Error::ShapeError(format!("matmul {r}x{k} by {k2}x{c}")));
        }
        let mut out = Self::zeros(vec![r, c]);
        for i in 0..r {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..c {
                    out.data[i * c + j] += a * rhs.data[l * c + j];
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product of two matrices; the left factor is the slow index.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        let (r1, c1) = self.matrix_dims()?;
        let (r2, c2) = rhs.matrix_dims()?;
        let (r, c) = (r1 * r2, c1 * c2);
        let mut out = Self::zeros(vec![r, c]);
        for i1 in 0..r1 {
            for j1 in 0..c1 {
                let a = self.data[i1 * c1 + j1];
                for i2 in 0..r2 {
                    for j2 in 0..c2 {
                        out.data[(i1 * r2 + i2) * c + j1 * c2 + j2] = a * rhs.data[i2 * c2 + j2];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix transpose.
    pub fn transpose(&self) -> Result<Self> {
        let (r, c) = self.matrix_dims()?;
        let mut out = Self::zeros(vec![c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(out)
    }

    /// Entrywise `self + rhs`.
    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    /// Entrywise `self - rhs`.
    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    /// Multiplies every entry by `s`.
    pub fn scale(&self, s: C64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&x| x * s).collect() }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape != rhs.shape {
            return Err(Error::ShapeError(format!("{:?} vs {:?}", self.shape, rhs.shape)));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Sums over paired legs `(leg of t1, leg of t2)`.
///
/// The result carries the free legs of `t1` in order, followed by the free
/// legs of `t2` in order.
pub fn contract(t1: &ComplexTensor, t2: &ComplexTensor, legs: &[(usize, usize)]) -> Result<ComplexTensor> {
    let (s1, s2) = (t1.shape(), t2.shape());
    for &(a, b) in legs {
        if a >= s1.len() || b >= s2.len() {
            return Err(Error::ShapeError(format!("leg pair ({a},{b}) out of range")));
        }
        if s1[a] != s2[b] {
            return Err(Error::ShapeError(format!(
                "leg {a} (dim {}) paired with leg {b} (dim {})",
                s1[a], s2[b]
            )));
        }
    }
    for (i, &(a, b)) in legs.iter().enumerate() {
        if legs[i + 1..].iter().any(|&(c, d)| c == a || d == b) {
            return Err(Error::ShapeError(format!("leg pair ({a},{b}) repeated")));
        }
    }
    let free1: Vec<usize> = (0..s1.len()).filter(|l| !legs.iter().any(|p| p.0 == *l)).collect();
    let free2: Vec<usize> = (0..s2.len()).filter(|l| !legs.iter().any(|p| p.1 == *l)).collect();
    let sum_dims: Vec<usize> = legs.iter().map(|&(a, _)| s1[a]).collect();
    let out_shape: Vec<usize> = free1.iter().map(|&l| s1[l]).chain(free2.iter().map(|&l| s2[l])).collect();
    let mut out = ComplexTensor::zeros(out_shape.clone());

    let n_out = out.data.len();
    let n_sum: usize = sum_dims.iter().product();
    let mut out_idx = vec![0usize; out_shape.len()];
    let mut sum_idx = vec![0usize; sum_dims.len()];
    let mut i1 = vec![0usize; s1.len()];
    let mut i2 = vec![0usize; s2.len()];
    for o in 0..n_out {
        unravel(o, &out_shape, &mut out_idx);
        for (k, &l) in free1.iter().enumerate() {
            i1[l] = out_idx[k];
        }
        for (k, &l) in free2.iter().enumerate() {
            i2[l] = out_idx[free1.len() + k];
        }
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..n_sum {
            unravel(s, &sum_dims, &mut sum_idx);
            for (k, &(a, b)) in legs.iter().enumerate() {
                i1[a] = sum_idx[k];
                i2[b] = sum_idx[k];
            }
            acc += t1.get(&i1) * t2.get(&i2);
        }
        out.data[o] = acc;
    }
    Ok(out)
}

fn unravel(mut flat: usize, dims: &[usize], idx: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
}

/// `max|t1 - t2| / (1 + max|t1|)`.
pub fn residual(t1: &ComplexTensor, t2: &ComplexTensor) -> Result<f64> {
    if t1.shape() != t2.shape() {
        return Err(Error::ShapeError(format!("{:?} vs {:?}", t1.shape(), t2.shape())));
    }
    let diff = t1.data().iter().zip(t2.data()).fold(0.0, |m, (a, b)| m.max((a - b).norm()));
    Ok(diff / (1.0 + t1.max_abs()))
}

/// Scalar version of [`residual`].
#[inline]
pub fn scalar_residual(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / (1.0 + lhs.norm())
}

/// Residual of two equally long lists of scalars.
pub fn slice_residual(lhs: &[C64], rhs: &[C64]) -> f64 {
    debug_assert_eq!(lhs.len(), rhs.len());
    let diff = lhs.iter().zip(rhs).fold(0.0, |m, (a, b)| m.max((a - b).norm()));
    let scale = lhs.iter().fold(0.0, |m: f64, a| m.max(a.norm()));
    diff / (1.0 + scale)
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexBox {
    /// Real part range `[lo, hi)`.
    pub re: (f64, f64),
    /// Imaginary part range `[lo, hi)`.
    pub im: (f64, f64),
}

impl Default for ComplexBox {
    fn default() -> Self {
        Self { re: (-1.0, 1.0), im: (-1.0, 1.0) }
    }
}

impl ComplexBox {
    /// Uniform draw inside the box.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> C64 {
        C64::new(draw_range(rng, self.re), draw_range(rng, self.im))
    }
}

fn draw_range<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// One sampled parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDraw {
    /// Spectral parameters.
    pub lambdas: Vec<C64>,
    /// Anisotropy.
    pub eta: C64,
}

/// Seeded generator of spectral parameters and anisotropies.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSampler {
    /// Seed of the ChaCha8 stream.
    pub seed: u64,
    /// Box for spectral parameter draws.
    pub lambda_box: ComplexBox,
    /// Anisotropies the draws cycle through.
    pub etas: Vec<C64>,
    /// Height reference point.
    pub x0: C64,
    /// Heights `x0 + k` checked by the guard, `k` in this inclusive range.
    pub height_range: (i32, i32),
    /// Minimum accepted `|sinh((x0 + k)η)|`.
    pub singularity_guard: f64,
    /// Number of λ values per draw.
    pub arity: usize,
}

/// Default anisotropy of the identity suites.
pub const DEFAULT_ETA: C64 = c64(0.45, -0.2);
/// Default height reference point.
pub const DEFAULT_X0: C64 = c64(0.37, 0.11);

impl ParamSampler {
    /// Sampler with the default box `[-1, 1]²`, `η = 0.45 - 0.2i` and guard.
    pub fn new(seed: u64, arity: usize) -> Self {
        Self {
            seed,
            lambda_box: ComplexBox { re: (-1.0, 1.0), im: (-1.0, 1.0) },
            etas: vec![DEFAULT_ETA],
            x0: DEFAULT_X0,
            height_range: (-6, 6),
            singularity_guard: ToleranceConfig::default().singularity_guard,
            arity,
        }
    }

    /// Fresh generator positioned at the start of this sampler's stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn guard_ok(&self, eta: C64) -> bool {
        (self.height_range.0..=self.height_range.1)
            .all(|k| ((self.x0 + k as f64) * eta).sinh().norm() > self.singularity_guard)
    }

    /// Draws `n` parameter sets.
    pub fn sample(&self, n: usize) -> Result<Vec<ParamDraw>> {
        if n == 0 {
            return Err(Error::SamplingError("n must be at least 1".into()));
        }
        if self.etas.is_empty() {
            return Err(Error::SamplingError("empty eta list".into()));
        }
        const RETRIES: usize = 64;
        let mut rng = self.rng();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut accepted = None;
            for _ in 0..RETRIES {
                let eta = self.etas[rng.gen_range(0..self.etas.len())];
                let lambdas: Vec<C64> = (0..self.arity).map(|_| self.lambda_box.draw(&mut rng)).collect();
                if self.guard_ok(eta) {
                    accepted = Some(ParamDraw { lambdas, eta });
                    break;
                }
            }
            match accepted {
                Some(d) => out.push(d),
                None => {
                    return Err(Error::SamplingError(format!(
                        "no eta in {:?} clears the guard {} after {RETRIES} retries",
                        self.etas, self.singularity_guard
                    )))
                }
            }
        }
        Ok(out)
    }
}
