use std::sync::Arc;

use crate::error::{check_len, Result};
use crate::structured::{fcd_coefficients, h_eigenvalues, tau_from_toeplitz, FcdStencil, TauOperator, TridiagH};
use crate::transforms::{map_fibers, CirculantEmbedding, FftScratch, GridShape, SineTransformPlan};

use super::problem::ProblemSpec;

/// Everything one spatial axis contributes to the multi-level operators.
#[derive(Debug, Clone)]
pub struct AxisOperators {
    pub stencil: FcdStencil,
    /// τ(S_{α_i}).
    pub tau_s: TauOperator,
    pub h_op: TridiagH,
    /// Eigenvalues of `h_op` in DST order.
    pub h_eigs: Vec<f64>,
    /// `η_i = κ_i Δt / (2 h_i^{α_i})`.
    pub eta: f64,
    /// Dense Toeplitz `S_{α_i}` through circulant embedding.
    pub toeplitz: CirculantEmbedding,
    pub plan: Arc<SineTransformPlan>,
}

impl AxisOperators {
    pub fn new(alpha: f64, kappa: f64, h: f64, dt: f64, n: usize) -> Result<Self> {
        let stencil = fcd_coefficients(alpha, n)?;
        let tau_s = tau_from_toeplitz(stencil.coeffs())?;
        let plan = tau_s.plan().clone();
        let h_op = TridiagH::new(alpha, n)?;
        let h_eigs = h_eigenvalues(&h_op);
        let toeplitz = CirculantEmbedding::new(stencil.coeffs())?;
        Ok(Self {
            eta: kappa * dt / (2.0 * h.powf(alpha)),
            stencil,
            tau_s,
            h_op,
            h_eigs,
            toeplitz,
            plan,
        })
    }

    fn toeplitz_fiber(&self, a: &mut [f64], b: Option<&mut [f64]>, ws: &mut FftScratch) {
        match b {
            Some(b) => self.toeplitz.apply_pair_in_place(a, b, ws),
            None => self.toeplitz.apply_in_place(a, ws),
        }
    }

    /// `S diag(g(λ^H)) S` on one or two fibers.
    fn h_spectral_fiber(&self, a: &mut [f64], b: Option<&mut [f64]>, g: &impl Fn(f64) -> f64, ws: &mut FftScratch) {
        match b {
            Some(b) => {
                self.plan.apply_pair_in_place(a, b, ws);
                for ((x, y), &l) in a.iter_mut().zip(b.iter_mut()).zip(&self.h_eigs) {
                    let s = g(l);
                    *x *= s;
                    *y *= s;
                }
                self.plan.apply_pair_in_place(a, b, ws);
            }
            None => {
                self.plan.apply_in_place(a, ws);
                for (x, &l) in a.iter_mut().zip(&self.h_eigs) {
                    *x *= g(l);
                }
                self.plan.apply_in_place(a, ws);
            }
        }
    }
}

/// Matrix-free operators of the Crank–Nicolson / quasi-compact FCD system
/// `(H_α E + S_α) u^{m+1} = (H_α E - S_α) u^m + Δt F`.
///
/// Grid vectors are stored lexicographically with axis 1 fastest, so axis 1
/// corresponds to the last Kronecker factor.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub spec: ProblemSpec,
    pub axes: Vec<AxisOperators>,
}

impl Discretization {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let axes = (0..spec.d)
            .map(|i| AxisOperators::new(spec.alphas[i], spec.kappas[i], spec.h(i), spec.dt(), spec.n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: spec.clone(),
            axes,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.spec.shape()
    }

    pub fn len(&self) -> usize {
        self.shape().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Diagonal of `E^{(m+1/2)}`: `e(x_G, t_{m+1/2})`.
    pub fn e_diag(&self, m: usize) -> Vec<f64> {
        let t = self.spec.half_time(m);
        let e = &self.spec.e_fn;
        self.spec.sample_interior(|x| e(x, t))
    }

    fn apply_axis_toeplitz(&self, data: &mut [f64], axis: usize, ws: &mut FftScratch) {
        let ax = &self.axes[axis];
        map_fibers(data, self.shape(), axis, |a, b| ax.toeplitz_fiber(a, b, ws));
    }

    fn apply_axis_h(&self, data: &mut [f64], axis: usize) {
        let h = self.axes[axis].h_op;
        map_fibers(data, self.shape(), axis, |a, b| {
            h.apply_in_place(a);
            if let Some(b) = b {
                h.apply_in_place(b);
            }
        });
    }

    /// Applies `S diag(g(λ^H_axis)) S` along `axis`.
    pub fn apply_axis_h_fn(&self, data: &mut [f64], axis: usize, g: impl Fn(f64) -> f64, ws: &mut FftScratch) {
        let ax = &self.axes[axis];
        map_fibers(data, self.shape(), axis, |a, b| ax.h_spectral_fiber(a, b, &g, ws));
    }

    /// `S_α x = Σ_i η_i (H ⊗ ... ⊗ S_{α_i} ⊗ ... ⊗ H) x`.
    pub fn apply_s_alpha(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut ws = FftScratch::new();
        let mut out = vec![0.0; x.len()];
        let mut term = vec![0.0; x.len()];
        for i in 0..self.spec.d {
            term.copy_from_slice(x);
            self.apply_axis_toeplitz(&mut term, i, &mut ws);
            for l in (0..self.spec.d).filter(|&l| l != i) {
                self.apply_axis_h(&mut term, l);
            }
            let eta = self.axes[i].eta;
            out.iter_mut().zip(&term).for_each(|(o, t)| *o += eta * t);
        }
        Ok(out)
    }

    /// `H_α x` with `H_α = H_{α_d} ⊗ ... ⊗ H_{α_1}`.
    pub fn apply_h(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut y = x.to_vec();
        for axis in 0..self.spec.d {
            self.apply_axis_h(&mut y, axis);
        }
        Ok(y)
    }

    /// `H_α^{-1} x`, each factor inverted through its sine diagonalisation.
    pub fn apply_h_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let mut y = x.to_vec();
        let mut ws = FftScratch::new();
        for axis in 0..self.spec.d {
            self.apply_axis_h_fn(&mut y, axis, |l| 1.0 / l, &mut ws);
        }
        Ok(y)
    }

    /// `H_α^{-1} S_α x = Σ_i η_i (I ⊗ ... ⊗ H_{α_i}^{-1} S_{α_i} ⊗ ... ⊗ I) x`;
    /// the cross-axis `H` factors cancel.
    pub fn apply_h_inv_s(&self, x: &[f64], out: &mut [f64], ws: &mut FftScratch) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut term = vec![0.0; x.len()];
        for i in 0..self.spec.d {
            term.copy_from_slice(x);
            let ax = &self.axes[i];
            map_fibers(&mut term, self.shape(), i, |a, mut b| {
                ax.toeplitz_fiber(a, b.as_deref_mut(), ws);
                ax.h_spectral_fiber(a, b, &|l| 1.0 / l, ws);
            });
            let eta = ax.eta;
            out.iter_mut().zip(&term).for_each(|(o, t)| *o += eta * t);
        }
    }

    /// `Ã^{(m)} x = E^{(m+1/2)} x + H_α^{-1} S_α x` given the diagonal of `E`.
    pub fn apply_a_tilde_with(&self, e_diag: &[f64], x: &[f64], out: &mut [f64], ws: &mut FftScratch) {
        self.apply_h_inv_s(x, out, ws);
        for ((o, e), v) in out.iter_mut().zip(e_diag).zip(x) {
            *o += e * v;
        }
    }

    pub fn apply_a_tilde(&self, m: usize, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), x.len())?;
        let e = self.e_diag(m);
        let mut out = vec![0.0; x.len()];
        self.apply_a_tilde_with(&e, x, &mut out, &mut FftScratch::new());
        Ok(out)
    }

    /// `Ã^{(m)}` evaluated literally as `E x + H_α^{-1}(S_α x)`, without the
    /// factor cancellation. Kept to cross-check the fast path.
    pub fn apply_a_tilde_unsimplified(&self, m: usize, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.apply_s_alpha(x)?;
        let mut out = self.apply_h_inverse(&s)?;
        for ((o, e), v) in out.iter_mut().zip(self.e_diag(m)).zip(x) {
            *o += e * v;
        }
        Ok(out)
    }
}

/// Operator bundle plus the current time level.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub ops: Arc<Discretization>,
    /// `u^{(m)}`.
    pub u: Vec<f64>,
    /// Current time index `m`.
    pub step: usize,
}

impl SystemState {
    /// State at `t = 0` with `u^{(0)} = ψ(x_G)`.
    pub fn initial(ops: Arc<Discretization>) -> Self {
        let psi = ops.spec.psi.clone();
        let u = ops.spec.sample_interior(|x| psi(x));
        Self { ops, u, step: 0 }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.ops.spec
    }
}

pub fn apply_s_alpha(state: &SystemState, x: &[f64]) -> Result<Vec<f64>> {
    state.ops.apply_s_alpha(x)
}

pub fn apply_h_inverse(state: &SystemState, x: &[f64]) -> Result<Vec<f64>> {
    state.ops.apply_h_inverse(x)
}

pub fn apply_a_tilde(state: &SystemState, m: usize, x: &[f64]) -> Result<Vec<f64>> {
    state.ops.apply_a_tilde(m, x)
}
