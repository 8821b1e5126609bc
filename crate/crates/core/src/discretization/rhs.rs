use crate::error::Result;
use crate::transforms::FftScratch;

use super::operators::{Discretization, SystemState};

/// Samples `f(·, t_{m+1/2})` on the extended grid of `(N+2)^d` nodes,
/// boundary included, axis 1 fastest.
fn sample_extended(ops: &Discretization, m: usize) -> Result<Vec<f64>> {
    let spec = &ops.spec;
    let ext = spec.n + 2;
    let total = ext.pow(spec.d as u32);
    let t = spec.half_time(m);
    let mut out = Vec::with_capacity(total);
    let mut x = [0.0; 3];
    for flat in 0..total {
        let mut rem = flat;
        for (axis, xi) in x.iter_mut().enumerate().take(spec.d) {
            *xi = spec.node(axis, rem % ext);
            rem /= ext;
        }
        out.push(spec.source_value(&x[..spec.d], t)?);
    }
    Ok(out)
}

/// Applies the 1D compact operator `1 + (α/24) δ²` along `axis`, mapping that
/// axis from `N+2` extended nodes to the `N` interior ones.
fn compact_reduce(data: &[f64], dims: &mut [usize], axis: usize, alpha: f64) -> Vec<f64> {
    let inner: usize = dims[..axis].iter().product();
    let len_in = dims[axis];
    let len_out = len_in - 2;
    let outer: usize = dims[axis + 1..].iter().product();
    let c = alpha / 24.0;
    let mut out = vec![0.0; inner * len_out * outer];
    for o in 0..outer {
        for j in 0..len_out {
            for i in 0..inner {
                let at = |jj: usize| data[i + inner * (jj + len_in * o)];
                let (l, mid, r) = (at(j), at(j + 1), at(j + 2));
                out[i + inner * (j + len_out * o)] = mid + c * (l - 2.0 * mid + r);
            }
        }
    }
    dims[axis] = len_out;
    out
}

/// `F^{(m+1/2)}`: the tensor compact operator `Π_i (1 + (α_i/24) h_i² δ_i²)`
/// applied to `f(·, t_{m+1/2})` and restricted to interior nodes. Boundary
/// values of `f` enter through the end rows of each one-dimensional factor,
/// which reproduces the boundary vectors `f_0`, `f_1`, `g_1`, ... of the
/// explicit per-dimension formulas.
pub fn source_vector(ops: &Discretization, m: usize) -> Result<Vec<f64>> {
    let mut data = sample_extended(ops, m)?;
    let mut dims = vec![ops.spec.n + 2; ops.spec.d];
    for axis in 0..ops.spec.d {
        data = compact_reduce(&data, &mut dims, axis, ops.spec.alphas[axis]);
    }
    Ok(data)
}

/// `b̃^{(m)} = H_α^{-1} b^{(m)} = E u^{(m)} - H_α^{-1} S_α u^{(m)} + Δt H_α^{-1} F^{(m+1/2)}`.
pub fn build_rhs(state: &SystemState, m: usize) -> Result<Vec<f64>> {
    let ops = &state.ops;
    let f = source_vector(ops, m)?;
    let dt = ops.spec.dt();
    let mut forcing = ops.apply_h_inverse(&f)?;
    let mut diffusion = vec![0.0; f.len()];
    ops.apply_h_inv_s(&state.u, &mut diffusion, &mut FftScratch::new());
    let e = ops.e_diag(m);
    for i in 0..forcing.len() {
        forcing[i] = e[i] * state.u[i] - diffusion[i] + dt * forcing[i];
    }
    Ok(forcing)
}
