//! Fast kernels shared by every structured operator: the orthogonal DST-I,
//! multi-level sine transforms over a lexicographic grid, and symmetric
//! Toeplitz products through circulant embedding.
//!
//! All plans are immutable after construction. Each in-place entry point
//! takes an explicit [`FftScratch`], so one plan can serve concurrent callers
//! as long as they bring their own scratch.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Error, Result};

/// Caller-owned buffers for FFT-backed kernels.
#[derive(Debug, Default, Clone)]
pub struct FftScratch {
    buf: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl FftScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, len: usize, work_len: usize) {
        self.buf.clear();
        self.buf.resize(len, Complex64::new(0.0, 0.0));
        if self.work.len() < work_len {
            self.work.resize(work_len, Complex64::new(0.0, 0.0));
        }
    }
}

/// The orthogonal DST-I of length `n`:
/// `S[j][k] = sqrt(2/(n+1)) sin(pi j k / (n+1))`, `1 <= j, k <= n`.
///
/// `S` is symmetric and involutory. It is evaluated through a complex FFT of
/// length `2(n+1)` applied to the odd extension of the input.
#[derive(Clone)]
pub struct SineTransformPlan {
    n: usize,
    scale: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineTransformPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransformPlan").field("n", &self.n).finish()
    }
}

impl SineTransformPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("sine transform length must be positive".into()));
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Ok(Self {
            n,
            scale: (2.0 / (n as f64 + 1.0)).sqrt(),
            fft,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn load_odd(&self, buf: &mut [Complex64], re: &[f64], im: Option<&[f64]>) {
        let n = self.n;
        let l = 2 * (n + 1);
        for j in 0..n {
            let v = Complex64::new(re[j], im.map_or(0.0, |b| b[j]));
            buf[j + 1] = v;
            buf[l - 1 - j] = -v;
        }
    }

    /// Transforms `x` in place.
    pub fn apply_in_place(&self, x: &mut [f64], scratch: &mut FftScratch) {
        debug_assert_eq!(x.len(), self.n);
        let l = 2 * (self.n + 1);
        scratch.prepare(l, self.fft.get_inplace_scratch_len());
        self.load_odd(&mut scratch.buf, x, None);
        self.fft.process_with_scratch(&mut scratch.buf, &mut scratch.work);
        // Y_k = -2i sum_j x_j sin(pi j k/(n+1))
        for (k, out) in x.iter_mut().enumerate() {
            *out = -0.5 * self.scale * scratch.buf[k + 1].im;
        }
    }

    /// Transforms two vectors with a single complex FFT (one in the real
    /// lane, one in the imaginary lane).
    pub fn apply_pair_in_place(&self, a: &mut [f64], b: &mut [f64], scratch: &mut FftScratch) {
        debug_assert_eq!(a.len(), self.n);
        debug_assert_eq!(b.len(), self.n);
        let l = 2 * (self.n + 1);
        scratch.prepare(l, self.fft.get_inplace_scratch_len());
        self.load_odd(&mut scratch.buf, a, Some(b));
        self.fft.process_with_scratch(&mut scratch.buf, &mut scratch.work);
        let half = 0.5 * self.scale;
        for k in 0..self.n {
            let y = scratch.buf[k + 1];
            a[k] = -half * y.im;
            b[k] = half * y.re;
        }
    }
}

/// `S * x` for the orthogonal DST-I represented by `plan`.
pub fn dst1(plan: &SineTransformPlan, x: &[f64]) -> Result<Vec<f64>> {
    check_len(plan.len(), x.len())?;
    let mut out = x.to_vec();
    plan.apply_in_place(&mut out, &mut FftScratch::new());
    Ok(out)
}

/// Shape of a `d`-level grid with `n` points per axis, stored with axis 0
/// varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub n: usize,
    pub d: usize,
}

impl GridShape {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    /// Multi-index (axis 0 first) of a flat position.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for slot in idx.iter_mut().take(self.d) {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }
}

/// Runs `f` on every fiber of `data` along `axis`, two fibers at a time when
/// possible. `f` receives the gathered fiber(s) and the result is scattered
/// back.
pub fn map_fibers<F>(data: &mut [f64], shape: GridShape, axis: usize, mut f: F)
where
    F: FnMut(&mut [f64], Option<&mut [f64]>),
{
    let n = shape.n;
    debug_assert_eq!(data.len(), shape.len());
    debug_assert!(axis < shape.d);
    let stride = shape.stride(axis);
    let outer = data.len() / (stride * n);
    let starts = (0..outer).flat_map(|o| (0..stride).map(move |i| o * stride * n + i));

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut pending: Option<usize> = None;
    for start in starts {
        match pending.take() {
            None => pending = Some(start),
            Some(first) => {
                for k in 0..n {
                    a[k] = data[first + k * stride];
                    b[k] = data[start + k * stride];
                }
                f(&mut a, Some(&mut b));
                for k in 0..n {
                    data[first + k * stride] = a[k];
                    data[start + k * stride] = b[k];
                }
            }
        }
    }
    if let Some(first) = pending {
        for k in 0..n {
            a[k] = data[first + k * stride];
        }
        f(&mut a, None);
        for k in 0..n {
            data[first + k * stride] = a[k];
        }
    }
}

/// The `d`-level sine transform `S ⊗ ... ⊗ S` on a grid of shape `n^d`.
#[derive(Debug, Clone)]
pub struct MultiSineTransform {
    plan: SineTransformPlan,
    shape: GridShape,
}

impl MultiSineTransform {
    pub fn new(shape: GridShape) -> Result<Self> {
        if !(1..=3).contains(&shape.d) {
            return Err(Error::Argument(format!("unsupported dimension {}", shape.d)));
        }
        Ok(Self {
            plan: SineTransformPlan::new(shape.n)?,
            shape,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn plan(&self) -> &SineTransformPlan {
        &self.plan
    }

    pub fn apply_in_place(&self, data: &mut [f64], scratch: &mut FftScratch) {
        for axis in 0..self.shape.d {
            self.apply_axis_in_place(data, axis, scratch);
        }
    }

    pub fn apply_axis_in_place(&self, data: &mut [f64], axis: usize, scratch: &mut FftScratch) {
        map_fibers(data, self.shape, axis, |a, b| match b {
            Some(b) => self.plan.apply_pair_in_place(a, b, scratch),
            None => self.plan.apply_in_place(a, scratch),
        });
    }
}

/// Symmetric Toeplitz matrix embedded in a circulant of order `2n`.
///
/// The circulant's first column is `[t_0, ..., t_{n-1}, 0, t_{n-1}, ..., t_1]`
/// and `symbol` holds its DFT. For a symmetric first column the symbol is
/// real, which lets [`CirculantEmbedding::apply_pair_in_place`] push two real
/// vectors through one complex convolution.
#[derive(Clone)]
pub struct CirculantEmbedding {
    n: usize,
    symbol: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantEmbedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantEmbedding").field("n", &self.n).finish()
    }
}

impl CirculantEmbedding {
    pub fn new(first_col: &[f64]) -> Result<Self> {
        let n = first_col.len();
        if n == 0 {
            return Err(Error::Argument("Toeplitz order must be positive".into()));
        }
        let order = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(order);
        let inverse = planner.plan_fft_inverse(order);
        let mut symbol = vec![Complex64::new(0.0, 0.0); order];
        symbol[0] = Complex64::new(first_col[0], 0.0);
        for k in 1..n {
            symbol[k] = Complex64::new(first_col[k], 0.0);
            symbol[order - k] = Complex64::new(first_col[k], 0.0);
        }
        forward.process(&mut symbol);
        // Fold the 1/(2n) normalisation of the inverse FFT into the symbol.
        let inv = 1.0 / order as f64;
        for s in symbol.iter_mut() {
            *s *= inv;
        }
        Ok(Self {
            n,
            symbol,
            forward,
            inverse,
        })
    }

    /// Order `n` of the embedded Toeplitz matrix.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Order `2n` of the circulant.
    pub fn order(&self) -> usize {
        2 * self.n
    }

    /// DFT of the circulant's first column (unnormalised).
    pub fn symbol(&self) -> Vec<Complex64> {
        let order = self.order() as f64;
        self.symbol.iter().map(|s| s * order).collect()
    }

    fn convolve(&self, scratch: &mut FftScratch) {
        let work = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        if scratch.work.len() < work {
            scratch.work.resize(work, Complex64::new(0.0, 0.0));
        }
        self.forward.process_with_scratch(&mut scratch.buf, &mut scratch.work);
        for (v, s) in scratch.buf.iter_mut().zip(&self.symbol) {
            *v *= s;
        }
        self.inverse.process_with_scratch(&mut scratch.buf, &mut scratch.work);
    }

    pub fn apply_in_place(&self, x: &mut [f64], scratch: &mut FftScratch) {
        debug_assert_eq!(x.len(), self.n);
        scratch.prepare(self.order(), 0);
        for (slot, &v) in scratch.buf.iter_mut().zip(x.iter()) {
            slot.re = v;
        }
        self.convolve(scratch);
        for (out, v) in x.iter_mut().zip(&scratch.buf) {
            *out = v.re;
        }
    }

    pub fn apply_pair_in_place(&self, a: &mut [f64], b: &mut [f64], scratch: &mut FftScratch) {
        debug_assert_eq!(a.len(), self.n);
        debug_assert_eq!(b.len(), self.n);
        scratch.prepare(self.order(), 0);
        for k in 0..self.n {
            scratch.buf[k] = Complex64::new(a[k], b[k]);
        }
        self.convolve(scratch);
        for k in 0..self.n {
            a[k] = scratch.buf[k].re;
            b[k] = scratch.buf[k].im;
        }
    }
}

/// `T * x` for the symmetric Toeplitz matrix held by `embedding`.
pub fn toeplitz_matvec(embedding: &CirculantEmbedding, x: &[f64]) -> Result<Vec<f64>> {
    check_len(embedding.len(), x.len())?;
    let mut out = x.to_vec();
    embedding.apply_in_place(&mut out, &mut FftScratch::new());
    Ok(out)
}
