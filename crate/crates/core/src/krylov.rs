//! GMRES with Arnoldi (modified Gram–Schmidt, selective reorthogonalisation)
//! and Givens-rotation least squares, plus the one- and two-sided
//! preconditioned formulations.

use crate::error::{check_len, Error, Result};
use crate::preconditioner::PrecondSpectrum;
use crate::transforms::FftScratch;

/// A square real linear map.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Adapts a closure `(x, y) -> y = A x` into a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondMode {
    Unpreconditioned,
    /// `P^{-1} A u = P^{-1} b`.
    #[default]
    OneSided,
    /// `P^{-1/2} A P^{-1/2} ũ = P^{-1/2} b`, `u = P^{-1/2} ũ`.
    TwoSided,
}

impl std::str::FromStr for PrecondMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "unpreconditioned" => Ok(Self::Unpreconditioned),
            "one" | "one_sided" | "one-sided" => Ok(Self::OneSided),
            "two" | "two_sided" | "two-sided" => Ok(Self::TwoSided),
            other => Err(Error::Config(format!("unknown preconditioning mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for PrecondMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unpreconditioned => "none",
            Self::OneSided => "one",
            Self::TwoSided => "two",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresConfig {
    /// Stop once `‖r_k‖ <= tol ‖r_0‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Cycle length; `None` runs a single cycle of up to `max_iter` steps.
    pub restart: Option<usize>,
    pub mode: PrecondMode,
}

impl GmresConfig {
    /// Tolerance `1e-9` with iteration caps 10 / 100 / 200 for d = 1 / 2 / 3.
    pub fn for_dimension(d: usize) -> Self {
        Self {
            tol: 1e-9,
            max_iter: match d {
                1 => 10,
                2 => 100,
                _ => 200,
            },
            restart: None,
            mode: PrecondMode::OneSided,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance {} must be positive", self.tol)));
        }
        if self.max_iter == 0 || self.restart == Some(0) {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self::for_dimension(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖r_k‖₂` of the system GMRES iterated on, `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Explicitly recomputed `‖b - A x‖ / ‖r_0‖` for that system.
    pub final_relative_residual: f64,
}

impl KrylovResult {
    pub fn relative_history(&self) -> Vec<f64> {
        let r0 = self.residual_history[0];
        self.residual_history
            .iter()
            .map(|r| if r0 > 0.0 { r / r0 } else { 0.0 })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], out: &mut [f64]) {
    op.apply(x, out);
    out.iter_mut().zip(b).for_each(|(r, bi)| *r = bi - *r);
}

const REORTH_THRESHOLD: f64 = 1e-8;

/// Plain GMRES on `op x = b` from `x0`.
pub fn gmres_plain(op: &dyn LinearOperator, b: &[f64], x0: &[f64], cfg: &GmresConfig) -> Result<KrylovResult> {
    cfg.validate()?;
    let n = op.dim();
    check_len(n, b.len())?;
    check_len(n, x0.len())?;

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    residual(op, b, &x, &mut r);
    let r0 = norm(&r);
    let mut history = vec![r0];
    if r0 == 0.0 {
        return Ok(KrylovResult {
            solution: x,
            iterations: 0,
            residual_history: history,
            converged: true,
            final_relative_residual: 0.0,
        });
    }
    let target = cfg.tol * r0;
    let cycle = cfg.restart.unwrap_or(cfg.max_iter).min(cfg.max_iter);
    let mut total = 0usize;
    let mut converged = false;
    let mut beta = r0;
    let mut w = vec![0.0; n];

    while total < cfg.max_iter && !converged {
        let steps = cycle.min(cfg.max_iter - total);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // column-major upper Hessenberg, already rotated
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut rotations: Vec<(f64, f64)> = Vec::with_capacity(steps);
        let mut g = vec![0.0; steps + 1];
        g[0] = beta;
        let mut k_done = 0;

        for k in 0..steps {
            op.apply(&basis[k], &mut w);
            let mut h = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                h[i] = c;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
            let mut wn = norm(&w);
            if wn > 0.0 {
                let loss = basis.iter().map(|v| dot(&w, v).abs()).fold(0.0, f64::max) / wn;
                if loss > REORTH_THRESHOLD {
                    for (i, v) in basis.iter().enumerate() {
                        let c = dot(&w, v);
                        h[i] += c;
                        w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                    }
                    wn = norm(&w);
                }
            }
            h[k + 1] = wn;

            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (a, bb) = (h[i], h[i + 1]);
                h[i] = c * a + s * bb;
                h[i + 1] = -s * a + c * bb;
            }
            let (a, bb) = (h[k], h[k + 1]);
            let rho = a.hypot(bb);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, bb / rho) };
            h[k] = rho;
            h[k + 1] = 0.0;
            rotations.push((c, s));
            g[k + 1] = -s * g[k];
            g[k] *= c;
            hess.push(h);

            total += 1;
            k_done = k + 1;
            let res = g[k + 1].abs();
            history.push(res);
            // lucky breakdown: the Krylov space is invariant and the iterate exact
            let breakdown = wn <= 1e-14 * beta.max(f64::MIN_POSITIVE);
            if res <= target || breakdown {
                converged = res <= target || breakdown;
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // back substitution for the cycle's correction
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut acc = g[i];
            for j in i + 1..k_done {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(xi, vj)| *xi += yj * vj);
        }
        residual(op, b, &x, &mut r);
        beta = norm(&r);
        if !converged && beta <= target {
            converged = true;
        }
        if converged || beta == 0.0 {
            break;
        }
    }

    residual(op, b, &x, &mut r);
    let final_rel = norm(&r) / r0;
    Ok(KrylovResult {
        solution: x,
        iterations: total,
        residual_history: history,
        converged,
        final_relative_residual: final_rel,
    })
}

/// GMRES on `A u = b` in the configured preconditioning mode.
///
/// The returned solution is always in the original variables; the residual
/// history belongs to the system actually iterated on (`P^{-1}` residuals in
/// one-sided mode, `P^{-1/2}` residuals of the symmetrised system in
/// two-sided mode). In two-sided mode the initial guess is mapped to
/// `ũ_0 = P^{1/2} x0`.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    cfg: &GmresConfig,
    precond: Option<&PrecondSpectrum>,
) -> Result<KrylovResult> {
    let n = op.dim();
    check_len(n, b.len())?;
    check_len(n, x0.len())?;
    let p = match (cfg.mode, precond) {
        (PrecondMode::Unpreconditioned, _) => return gmres_plain(op, b, x0, cfg),
        (_, Some(p)) => p,
        (mode, None) => return Err(Error::Config(format!("mode '{mode}' needs a preconditioner"))),
    };
    check_len(n, p.len())?;
    let with_power = |v: &[f64], power: f64| {
        let mut y = v.to_vec();
        p.apply_power_in_place(&mut y, power, &mut FftScratch::new());
        y
    };

    match cfg.mode {
        PrecondMode::OneSided => {
            let left = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
                op.apply(x, y);
                p.apply_power_in_place(y, -1.0, &mut FftScratch::new());
            });
            gmres_plain(&left, &with_power(b, -1.0), x0, cfg)
        }
        PrecondMode::TwoSided => {
            let sym = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
                let mut t = x.to_vec();
                let mut ws = FftScratch::new();
                p.apply_power_in_place(&mut t, -0.5, &mut ws);
                op.apply(&t, y);
                p.apply_power_in_place(y, -0.5, &mut ws);
            });
            let mut res = gmres_plain(&sym, &with_power(b, -0.5), &with_power(x0, 0.5), cfg)?;
            res.solution = with_power(&res.solution, -0.5);
            Ok(res)
        }
        PrecondMode::Unpreconditioned => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_op(a: &DMatrix<f64>) -> FnOperator<impl Fn(&[f64], &mut [f64]) + '_> {
        FnOperator::new(a.nrows(), move |x: &[f64], y: &mut [f64]| {
            let r = a * DVector::from_column_slice(x);
            y.copy_from_slice(r.as_slice());
        })
    }

    fn cfg(max_iter: usize) -> GmresConfig {
        GmresConfig {
            tol: 1e-12,
            max_iter,
            restart: None,
            mode: PrecondMode::Unpreconditioned,
        }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = DMatrix::<f64>::identity(5, 5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let res = gmres_plain(&dense_op(&a), &b, &[0.0; 5], &cfg(10)).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        for (x, y) in res.solution.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_exact_within_order() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 5.0]));
        let b = vec![1.0; 4];
        let res = gmres_plain(&dense_op(&a), &b, &[0.0; 4], &cfg(10)).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 4);
        assert!((res.solution[3] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_with_zero_guess_is_immediate() {
        let a = DMatrix::<f64>::identity(3, 3) * 2.0;
        let res = gmres_plain(&dense_op(&a), &[0.0; 3], &[0.0; 3], &cfg(10)).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
    }

    #[test]
    fn exhaustion_reports_not_converged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::from_fn(30, 30, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 } + rng.random_range(-0.1..0.1));
        let b = vec![1.0; 30];
        let res = gmres_plain(&dense_op(&a), &b, &[0.0; 30], &cfg(3)).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        assert_eq!(res.residual_history.len(), 4);
    }

    #[test]
    fn restarted_history_is_monotone_at_cycle_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 40;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 4.0 } else { rng.random_range(-0.2..0.2) });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let c = GmresConfig {
            tol: 1e-10,
            max_iter: 60,
            restart: Some(5),
            mode: PrecondMode::Unpreconditioned,
        };
        let res = gmres_plain(&dense_op(&a), &b, &vec![0.0; n], &c).unwrap();
        assert!(res.converged);
        for w in res.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let x = DVector::from_vec(res.solution.clone());
        let r = (DVector::from_vec(b) - &a * x).norm() / res.residual_history[0];
        assert!(r < 1e-9);
    }

    #[test]
    fn minimal_residual_over_krylov_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 3.0 } else { 0.0 } + rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let r0 = &b - &a * &x0;
        for j in 1..=6 {
            let res = gmres_plain(&dense_op(&a), b.as_slice(), x0.as_slice(), &GmresConfig { tol: 1e-300, ..cfg(j) }).unwrap();
            // explicit Krylov basis, least squares via SVD
            let mut k = DMatrix::zeros(n, j);
            let mut v = r0.clone();
            for c in 0..j {
                k.set_column(c, &v);
                v = &a * v;
            }
            let ak = &a * &k;
            let y = ak.clone().svd(true, true).solve(&r0, 1e-14).unwrap();
            let best = (&r0 - &ak * y).norm();
            let got = (&b - &a * DVector::from_vec(res.solution)).norm();
            assert!(got <= best * (1.0 + 1e-8) + 1e-12, "j={j}: {got} vs {best}");
        }
    }

    #[test]
    fn preconditioned_modes_need_a_preconditioner() {
        let a = DMatrix::<f64>::identity(2, 2);
        let c = GmresConfig {
            mode: PrecondMode::TwoSided,
            ..cfg(4)
        };
        assert!(matches!(gmres(&dense_op(&a), &[1.0, 1.0], &[0.0, 0.0], &c, None), Err(Error::Config(_))));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("one".parse::<PrecondMode>().unwrap(), PrecondMode::OneSided);
        assert_eq!("two".parse::<PrecondMode>().unwrap(), PrecondMode::TwoSided);
        assert_eq!("none".parse::<PrecondMode>().unwrap(), PrecondMode::Unpreconditioned);
        assert!("three".parse::<PrecondMode>().is_err());
    }
}
