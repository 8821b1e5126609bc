//! Browser bindings: the FCD stencil and its τ symbol, eigenvalue clouds of
//! the plain and preconditioned matrices, and a 1D solve against the exact
//! solution. Every export is a thin wrapper over a plain Rust function so the
//! logic can be tested natively.

use rsfde::presets::Preset;
use rsfde::solver::spectrum_dump;
use rsfde::structured::{fcd_coefficients, tau_eigenvalues};
use rsfde::{time_march, Error, PrecondMode, SolveConfig};
use wasm_bindgen::prelude::*;

/// Largest N accepted by the eigenvalue view; dense eigensolves beyond this
/// stall the page.
pub const MAX_CLOUD_N: usize = 127;
/// Largest N accepted by the solve view.
pub const MAX_SOLVE_N: usize = 4095;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

pub fn stencil(alpha: f64, len: usize) -> rsfde::Result<Vec<f64>> {
    Ok(fcd_coefficients(alpha, len)?.coeffs().to_vec())
}

/// Eigenvalues of τ(T) for the order-`n` FCD Toeplitz matrix, ascending.
pub fn tau_symbol(alpha: f64, n: usize) -> rsfde::Result<Vec<f64>> {
    let mut q = tau_eigenvalues(fcd_coefficients(alpha, n)?.coeffs())?;
    q.sort_by(f64::total_cmp);
    Ok(q)
}

/// Interleaved `[re, im, ...]` eigenvalues of `Ã` followed by those of
/// `P⁻¹Ã`, for the 1D benchmark at time level 0.
pub fn clouds(alpha: f64, n: usize, m: usize) -> rsfde::Result<Vec<f64>> {
    if n > MAX_CLOUD_N {
        return Err(Error::SizeCap { order: n, cap: MAX_CLOUD_N });
    }
    let spec = Preset::Ex1.spec(&[alpha], n, m)?;
    let dump = spectrum_dump(&spec, 0)?;
    Ok(dump.a_tilde.iter().chain(&dump.preconditioned).flat_map(|&(re, im)| [re, im]).collect())
}

/// Result of one 1D march, laid out for plotting.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SolveView {
    x: Vec<f64>,
    numeric: Vec<f64>,
    exact: Vec<f64>,
    iterations: Vec<f64>,
    error: f64,
    mean_iterations: f64,
}

#[wasm_bindgen]
impl SolveView {
    /// Grid nodes including both boundary points.
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn numeric(&self) -> Vec<f64> {
        self.numeric.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }

    /// GMRES iterations per time step.
    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> Vec<f64> {
        self.iterations.clone()
    }

    /// Euclidean error at t = 1.
    #[wasm_bindgen(getter)]
    pub fn error(&self) -> f64 {
        self.error
    }

    #[wasm_bindgen(getter, js_name = meanIterations)]
    pub fn mean_iterations(&self) -> f64 {
        self.mean_iterations
    }
}

pub fn solve(alpha: f64, n: usize, m: usize, mode: &str) -> rsfde::Result<SolveView> {
    if n > MAX_SOLVE_N {
        return Err(Error::SizeCap { order: n, cap: MAX_SOLVE_N });
    }
    let mode: PrecondMode = mode.parse()?;
    let spec = Preset::Ex1.spec(&[alpha], n, m)?;
    let report = time_march(&spec, &SolveConfig::for_spec(&spec).with_mode(mode))?;
    report.ensure_converged()?;
    let exact_fn = spec.exact.as_ref().expect("preset has an exact solution");
    let x: Vec<f64> = (0..n + 2).map(|j| spec.node(0, j)).collect();
    let pad = |inner: &[f64]| std::iter::once(0.0).chain(inner.iter().copied()).chain(std::iter::once(0.0)).collect::<Vec<_>>();
    let exact: Vec<f64> = x.iter().map(|&xi| exact_fn(&[xi], spec.t_final)).collect();
    Ok(SolveView {
        numeric: pad(&report.solution),
        exact,
        x,
        iterations: report.per_step.iter().map(|s| s.iterations as f64).collect(),
        error: report.error_l2.unwrap_or(f64::NAN),
        mean_iterations: report.mean_iterations,
    })
}

#[wasm_bindgen(js_name = fcdStencil)]
pub fn fcd_stencil_js(alpha: f64, len: usize) -> Result<Vec<f64>, JsError> {
    stencil(alpha, len).map_err(js)
}

#[wasm_bindgen(js_name = tauSymbol)]
pub fn tau_symbol_js(alpha: f64, n: usize) -> Result<Vec<f64>, JsError> {
    tau_symbol(alpha, n).map_err(js)
}

#[wasm_bindgen(js_name = eigenClouds)]
pub fn eigen_clouds_js(alpha: f64, n: usize, m: usize) -> Result<Vec<f64>, JsError> {
    clouds(alpha, n, m).map_err(js)
}

#[wasm_bindgen(js_name = solveEx1)]
pub fn solve_js(alpha: f64, n: usize, m: usize, mode: &str) -> Result<SolveView, JsError> {
    solve(alpha, n, m, mode).map_err(js)
}
