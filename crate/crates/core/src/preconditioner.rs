//! The sine-transform preconditioner `P_α = ē I + H_α^{-1/2} τ(S_α) H_α^{-1/2}`.
//!
//! Every factor is diagonal in the multi-level DST basis, so `P_α` is stored
//! as its eigenvalues `ē + Σ_i η_i q_i(k_i) / λ^H_i(k_i)` and any real power
//! of it costs two multi-level transforms plus a diagonal scaling.

use crate::discretization::{Discretization, ProblemSpec, SystemState};
use crate::error::{check_len, Error, Result};
use crate::transforms::{FftScratch, MultiSineTransform};

/// Extremes of `e(x_G, t_{m+1/2})` over the grid and all half-time levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds {
    /// `ē = (ê + ě) / 2`.
    pub e_bar: f64,
    /// `ê`, the maximum.
    pub e_hat: f64,
    /// `ě`, the minimum.
    pub e_check: f64,
}

/// Exhaustive scan of `e` over every interior node and every `t_{m+1/2}`.
pub fn compute_e_bar(spec: &ProblemSpec) -> Result<CoefficientBounds> {
    compute_e_bar_strided(spec, 1)
}

/// Like [`compute_e_bar`] but visits every `stride`-th time level (the first
/// and last are always included). Exact when `e` is monotone in `t`.
pub fn compute_e_bar_strided(spec: &ProblemSpec, stride: usize) -> Result<CoefficientBounds> {
    if stride == 0 {
        return Err(Error::Argument("stride must be positive".into()));
    }
    let points: Vec<[f64; 3]> = (0..spec.shape().len()).map(|f| spec.interior_point(f)).collect();
    let mut levels: Vec<usize> = (0..spec.m).step_by(stride).collect();
    if levels.last() != Some(&(spec.m - 1)) {
        levels.push(spec.m - 1);
    }
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for m in levels {
        let t = spec.half_time(m);
        for x in &points {
            let v = (spec.e_fn)(&x[..spec.d], t);
            hi = hi.max(v);
            lo = lo.min(v);
        }
    }
    if !(lo > 0.0) {
        return Err(Error::InvalidCoefficient { min: lo });
    }
    Ok(CoefficientBounds {
        e_bar: 0.5 * (hi + lo),
        e_hat: hi,
        e_check: lo,
    })
}

/// Eigenvalues of `P_α` in multi-level DST order, axis 1 fastest.
#[derive(Debug, Clone)]
pub struct PrecondSpectrum {
    pub e_bar: f64,
    diag: Vec<f64>,
    transform: MultiSineTransform,
}

impl PrecondSpectrum {
    /// Wraps a prescribed spectrum; `diag` must have `n^d` entries.
    pub fn from_diag(e_bar: f64, diag: Vec<f64>, transform: MultiSineTransform) -> Result<Self> {
        check_len(transform.shape().len(), diag.len())?;
        if let Some(bad) = diag.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Domain(format!("preconditioner eigenvalue {bad} is not positive")));
        }
        Ok(Self {
            e_bar,
            diag,
            transform,
        })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `S diag(p^power) S x` in place.
    pub fn apply_power_in_place(&self, x: &mut [f64], power: f64, scratch: &mut FftScratch) {
        self.transform.apply_in_place(x, scratch);
        if power == -1.0 {
            x.iter_mut().zip(&self.diag).for_each(|(v, p)| *v /= p);
        } else if power == -0.5 {
            x.iter_mut().zip(&self.diag).for_each(|(v, p)| *v /= p.sqrt());
        } else {
            x.iter_mut().zip(&self.diag).for_each(|(v, p)| *v *= p.powf(power));
        }
        self.transform.apply_in_place(x, scratch);
    }

    fn apply_power(&self, x: &[f64], power: f64) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut y = x.to_vec();
        self.apply_power_in_place(&mut y, power, &mut FftScratch::new());
        Ok(y)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_power(x, 1.0)
    }

    pub fn apply_sqrt(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_power(x, 0.5)
    }
}

/// Closed-form spectrum of `P_α` for the operators in `ops`.
pub fn build_precond_for(ops: &Discretization, e_bar: f64) -> Result<PrecondSpectrum> {
    let shape = ops.shape();
    let ratios: Vec<Vec<f64>> = ops
        .axes
        .iter()
        .map(|ax| {
            ax.tau_s
                .eigenvalues()
                .iter()
                .zip(&ax.h_eigs)
                .map(|(q, l)| ax.eta * q / l)
                .collect()
        })
        .collect();
    let diag = (0..shape.len())
        .map(|flat| {
            let idx = shape.unravel(flat);
            e_bar + (0..shape.d).map(|i| ratios[i][idx[i]]).sum::<f64>()
        })
        .collect();
    PrecondSpectrum::from_diag(e_bar, diag, MultiSineTransform::new(shape)?)
}

pub fn build_precond(state: &SystemState, e_bar: f64) -> Result<PrecondSpectrum> {
    build_precond_for(&state.ops, e_bar)
}

/// `P_α^{-1} x`.
pub fn apply_p_inv(spec: &PrecondSpectrum, x: &[f64]) -> Result<Vec<f64>> {
    spec.apply_power(x, -1.0)
}

/// `P_α^{-1/2} x`.
pub fn apply_p_inv_sqrt(spec: &PrecondSpectrum, x: &[f64]) -> Result<Vec<f64>> {
    spec.apply_power(x, -0.5)
}
