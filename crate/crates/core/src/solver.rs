//! Time marching: one preconditioned GMRES solve of
//! `(E^{(m+1/2)} + H_α^{-1} S_α) u^{(m+1)} = b̃^{(m)}` per step.

use std::cell::RefCell;
use std::sync::Arc;
use std::time::Duration;

use nalgebra::DMatrix;

use crate::discretization::{build_rhs, Discretization, ProblemSpec, SystemState};
use crate::error::{Error, Result};
use crate::krylov::{gmres, FnOperator, GmresConfig, KrylovResult, PrecondMode};
use crate::preconditioner::{build_precond_for, compute_e_bar_strided, CoefficientBounds, PrecondSpectrum};
use crate::transforms::FftScratch;

/// Largest matrix order accepted by the dense spectrum routines.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub gmres: GmresConfig,
    /// Stop at the first step whose GMRES run did not converge.
    pub abort_on_failure: bool,
    /// Time-level stride for the `ē` scan; 1 is exhaustive.
    pub e_bar_stride: usize,
    /// Keep every step's residual history in the report.
    pub keep_histories: bool,
}

impl SolveConfig {
    pub fn for_spec(spec: &ProblemSpec) -> Self {
        Self {
            gmres: GmresConfig::for_dimension(spec.d),
            abort_on_failure: true,
            e_bar_stride: 1,
            keep_histories: false,
        }
    }

    pub fn with_mode(mut self, mode: PrecondMode) -> Self {
        self.gmres.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub summary: String,
    pub mode: PrecondMode,
    pub bounds: CoefficientBounds,
    pub per_step: Vec<StepRecord>,
    pub mean_iterations: f64,
    /// Euclidean `‖u* - u‖₂` over interior nodes at `t = T`.
    pub error_l2: Option<f64>,
    /// Grid-weighted `(Π h_i Σ e_j²)^{1/2}` at `t = T`.
    pub error_l2_grid: Option<f64>,
    /// Max-norm error at `t = T`.
    pub error_max: Option<f64>,
    /// Time loop only; operator and preconditioner setup excluded.
    pub wall: Duration,
    pub wall_inclusive: Duration,
    pub solution: Vec<f64>,
    /// First step that failed to converge, if any.
    pub failed_step: Option<usize>,
}

impl SolveReport {
    pub fn wall_seconds(&self) -> f64 {
        self.wall.as_secs_f64()
    }

    /// Turns a flagged non-converged step into an error.
    pub fn ensure_converged(&self) -> Result<()> {
        match self.failed_step {
            None => Ok(()),
            Some(step) => {
                let rec = &self.per_step[step];
                Err(Error::NotConverged {
                    step,
                    iterations: rec.iterations,
                    residual: rec.relative_residual,
                })
            }
        }
    }
}

/// Matrix-free `Ã^{(m)}` for a fixed time level.
pub fn a_tilde_operator<'a>(ops: &'a Discretization, e_diag: &'a [f64]) -> FnOperator<impl Fn(&[f64], &mut [f64]) + 'a> {
    let scratch = RefCell::new(FftScratch::new());
    FnOperator::new(ops.len(), move |x: &[f64], y: &mut [f64]| {
        ops.apply_a_tilde_with(e_diag, x, y, &mut scratch.borrow_mut())
    })
}

/// Everything a run needs before the first step.
pub struct Setup {
    pub ops: Arc<Discretization>,
    pub bounds: CoefficientBounds,
    pub precond: PrecondSpectrum,
}

pub fn setup(spec: &ProblemSpec, e_bar_stride: usize) -> Result<Setup> {
    let ops = Arc::new(Discretization::new(spec)?);
    let bounds = compute_e_bar_strided(spec, e_bar_stride)?;
    let precond = build_precond_for(&ops, bounds.e_bar)?;
    Ok(Setup { ops, bounds, precond })
}

/// Solves step `m` from `state.u`, warm-started at `u^{(m)}`.
pub fn solve_step(setup: &Setup, state: &SystemState, m: usize, cfg: &GmresConfig) -> Result<KrylovResult> {
    let b = build_rhs(state, m)?;
    let e = setup.ops.e_diag(m);
    let op = a_tilde_operator(&setup.ops, &e);
    gmres(&op, &b, &state.u, cfg, Some(&setup.precond))
}

/// Elapsed-time reader; reads zero on browser wasm, which has no clock.
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn stopwatch() -> impl Fn() -> Duration {
    let start = std::time::Instant::now();
    move || start.elapsed()
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn stopwatch() -> impl Fn() -> Duration {
    || Duration::ZERO
}

pub fn time_march(spec: &ProblemSpec, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.gmres.validate()?;
    let start = stopwatch();
    let setup = setup(spec, cfg.e_bar_stride)?;
    let mut state = SystemState::initial(setup.ops.clone());

    let loop_start = stopwatch();
    let mut per_step = Vec::with_capacity(spec.m);
    let mut failed_step = None;
    for m in 0..spec.m {
        let res = solve_step(&setup, &state, m, &cfg.gmres)?;
        per_step.push(StepRecord {
            step: m,
            iterations: res.iterations,
            relative_residual: res.final_relative_residual,
            converged: res.converged,
            residual_history: if cfg.keep_histories { res.residual_history } else { Vec::new() },
        });
        state.u = res.solution;
        state.step = m + 1;
        if !res.converged && failed_step.is_none() {
            failed_step = Some(m);
            if cfg.abort_on_failure {
                break;
            }
        }
    }
    let wall = loop_start();

    let errs = match (&spec.exact, failed_step.filter(|_| cfg.abort_on_failure)) {
        (Some(exact), None) => {
            let t = spec.t_final;
            let reference = spec.sample_interior(|x| exact(x, t));
            Some(errors(spec, &state.u, &reference))
        }
        _ => None,
    };
    let mean_iterations = if per_step.is_empty() {
        0.0
    } else {
        per_step.iter().map(|s| s.iterations as f64).sum::<f64>() / per_step.len() as f64
    };
    Ok(SolveReport {
        summary: spec.summary(),
        mode: cfg.gmres.mode,
        bounds: setup.bounds,
        per_step,
        mean_iterations,
        error_l2: errs.map(|e| e.l2),
        error_l2_grid: errs.map(|e| e.l2_grid),
        error_max: errs.map(|e| e.max),
        wall,
        wall_inclusive: start(),
        solution: state.u,
        failed_step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub l2_grid: f64,
    pub max: f64,
}

/// Norms of `u - reference` on the interior grid.
pub fn errors(spec: &ProblemSpec, u: &[f64], reference: &[f64]) -> ErrorNorms {
    let cell: f64 = (0..spec.d).map(|a| spec.h(a)).product();
    let (mut sq, mut max) = (0.0, 0.0f64);
    for (a, b) in u.iter().zip(reference) {
        let e = a - b;
        sq += e * e;
        max = max.max(e.abs());
    }
    ErrorNorms {
        l2: sq.sqrt(),
        l2_grid: (cell * sq).sqrt(),
        max,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumDump {
    /// Eigenvalues of `Ã^{(m)}`, sorted by real then imaginary part.
    pub a_tilde: Vec<(f64, f64)>,
    /// Eigenvalues of `P_α^{-1} Ã^{(m)}`, same order convention.
    pub preconditioned: Vec<(f64, f64)>,
}

fn check_cap(len: usize) -> Result<()> {
    if len > DENSE_CAP {
        return Err(Error::SizeCap { order: len, cap: DENSE_CAP });
    }
    Ok(())
}

/// Dense `Ã^{(m)}` assembled column by column from the matrix-free apply.
pub fn assemble_a_tilde(ops: &Discretization, m: usize) -> Result<DMatrix<f64>> {
    check_cap(ops.len())?;
    let e = ops.e_diag(m);
    let n = ops.len();
    let mut out = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut ws = FftScratch::new();
    for j in 0..n {
        unit[j] = 1.0;
        ops.apply_a_tilde_with(&e, &unit, &mut col, &mut ws);
        out.column_mut(j).copy_from_slice(&col);
        unit[j] = 0.0;
    }
    Ok(out)
}

/// Dense `P^{power}` from its spectrum.
pub fn assemble_precond_power(p: &PrecondSpectrum, power: f64) -> DMatrix<f64> {
    let n = p.len();
    let mut out = DMatrix::zeros(n, n);
    let mut ws = FftScratch::new();
    for j in 0..n {
        let mut col = vec![0.0; n];
        col[j] = 1.0;
        p.apply_power_in_place(&mut col, power, &mut ws);
        out.column_mut(j).copy_from_slice(&col);
    }
    out
}

/// Eigenvalues of a general real matrix through a real Schur form, sorted by
/// real then imaginary part.
pub fn sorted_eigenvalues(a: DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let n = a.nrows();
    // near-multiple eigenvalues can stall the shifted QR at machine precision
    let schur = [f64::EPSILON, 1e-14, 1e-12]
        .into_iter()
        .find_map(|eps| nalgebra::linalg::Schur::try_new(a.clone(), eps, 1000 * n.max(1)))
        .ok_or_else(|| Error::Domain("Schur iteration did not converge".into()))?;
    let mut ev: Vec<(f64, f64)> = schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(ev)
}

/// Spectra of `Ã^{(m)}` and `P_α^{-1} Ã^{(m)}`. Refuses `N^d > 4096`.
pub fn spectrum_dump(spec: &ProblemSpec, m: usize) -> Result<SpectrumDump> {
    spec.validate()?;
    check_cap(spec.shape().len())?;
    if m >= spec.m {
        return Err(Error::Argument(format!("time index {m} out of range 0..{}", spec.m)));
    }
    let setup = setup(spec, 1)?;
    let a = assemble_a_tilde(&setup.ops, m)?;
    let pa = assemble_precond_power(&setup.precond, -1.0) * &a;
    Ok(SpectrumDump {
        a_tilde: sorted_eigenvalues(a)?,
        preconditioned: sorted_eigenvalues(pa)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Source;
    use crate::presets::Preset;

    fn zero_problem() -> ProblemSpec {
        let mut spec = Preset::Ex1.spec(&[1.5], 7, 4).unwrap();
        spec.source = Some(Source::Explicit(Arc::new(|_, _| 0.0)));
        spec.psi = Arc::new(|_| 0.0);
        spec.exact = Some(Arc::new(|_, _| 0.0));
        spec
    }

    #[test]
    fn zero_data_stays_zero() {
        let spec = zero_problem();
        let r = time_march(&spec, &SolveConfig::for_spec(&spec)).unwrap();
        assert!(r.solution.iter().all(|v| *v == 0.0));
        assert!(r.per_step.iter().all(|s| s.iterations == 0 && s.converged));
        assert_eq!(r.error_l2, Some(0.0));
    }

    #[test]
    fn modes_agree() {
        let spec = Preset::Ex2.spec(&[1.5, 1.7], 7, 8).unwrap();
        let base = SolveConfig::for_spec(&spec);
        let sols: Vec<Vec<f64>> = [PrecondMode::Unpreconditioned, PrecondMode::OneSided, PrecondMode::TwoSided]
            .into_iter()
            .map(|mode| time_march(&spec, &base.clone().with_mode(mode)).unwrap().solution)
            .collect();
        let scale = sols[1].iter().map(|v| v * v).sum::<f64>().sqrt();
        for s in &sols {
            let diff = s.iter().zip(&sols[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(diff / scale < 1e-7, "{}", diff / scale);
        }
    }

    #[test]
    fn deterministic_reports() {
        let spec = Preset::Ex1.spec(&[1.3], 15, 16).unwrap();
        let cfg = SolveConfig::for_spec(&spec);
        let a = time_march(&spec, &cfg).unwrap();
        let b = time_march(&spec, &cfg).unwrap();
        assert_eq!(a.per_step, b.per_step);
        assert_eq!(a.error_l2, b.error_l2);
        assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let spec = Preset::Ex1.spec(&[1.5], 31, 4).unwrap();
        let mut cfg = SolveConfig::for_spec(&spec).with_mode(PrecondMode::Unpreconditioned);
        cfg.gmres.max_iter = 1;
        let r = time_march(&spec, &cfg).unwrap();
        assert_eq!(r.failed_step, Some(0));
        assert_eq!(r.per_step.len(), 1);
        assert!(r.error_l2.is_none());
        assert!(matches!(r.ensure_converged(), Err(Error::NotConverged { step: 0, .. })));

        cfg.abort_on_failure = false;
        let r = time_march(&spec, &cfg).unwrap();
        assert_eq!(r.per_step.len(), 4);
        assert_eq!(r.failed_step, Some(0));
    }

    #[test]
    fn spectrum_dump_shape_and_cap() {
        let spec = Preset::Ex1.spec(&[1.5], 15, 64).unwrap();
        let d = spectrum_dump(&spec, 0).unwrap();
        assert_eq!(d.a_tilde.len(), 15);
        assert_eq!(d.preconditioned.len(), 15);
        assert!(d.preconditioned.windows(2).all(|w| w[0].0 <= w[1].0));
        let big = Preset::Ex2.spec(&[1.5, 1.7], 65, 4).unwrap();
        assert!(matches!(spectrum_dump(&big, 0), Err(Error::SizeCap { order: 4225, cap: 4096 })));
    }

    #[test]
    fn tau_only_constant_coefficient_spectrum_is_one() {
        // with e ≡ ē and the Hankel part removed, P coincides with Ã
        let spec = Preset::Ex1.spec(&[1.6], 12, 4).unwrap();
        let ops = Discretization::new(&spec).unwrap();
        let p = build_precond_for(&ops, 0.7).unwrap();
        let h_inv_sqrt = |x: &mut Vec<f64>| {
            ops.apply_axis_h_fn(x, 0, |l| 1.0 / l.sqrt(), &mut FftScratch::new());
        };
        let n = ops.len();
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut col = vec![0.0; n];
            col[j] = 1.0;
            h_inv_sqrt(&mut col);
            col = ops.axes[0].tau_s.apply(&col).unwrap();
            h_inv_sqrt(&mut col);
            for (i, v) in col.iter().enumerate() {
                a[(i, j)] = ops.axes[0].eta * v + if i == j { 0.7 } else { 0.0 };
            }
        }
        let pa = assemble_precond_power(&p, -1.0) * a;
        assert!((&pa - DMatrix::identity(n, n)).norm() < 1e-12);
        for (re, im) in sorted_eigenvalues(pa).unwrap() {
            assert!((re - 1.0).abs() < 1e-10 && im.abs() < 1e-10);
        }
    }
}
